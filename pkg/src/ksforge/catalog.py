"""Concrete scenarios: Peres-Mermin, Peres 33/57, a two-qubit KS set
without fully entangled bases, the three-qubit shift basis, and KS sets
built only from product rays in C^d1 (x) ... (x) C^dn with some d >= 3.

Every entry recomputes its counts and colourability when built.  The
numbers an entry is checked against live in ``claims``; ``expected`` holds
what the build actually produced.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ksforge.colouring import SHIFT_PATTERN, ProductBasis, all_north_colouring
from ksforge.rays import (
    ORTHO_TOL, ProductRay, Ray, as_product, basis_ray, dedup, is_product_ray, ket,
)
from ksforge.scenario import (
    RayAssignment, Scenario, check_assignment, find_ks_colouring, is_colouring,
    scenario_from_rays, vector_of,
)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Check:
    name: str
    expected: Any
    observed: Any
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "expected": self.expected, "observed": self.observed,
                "pass": self.passed}


def _check(name: str, expected, observed) -> Check:
    return Check(name, expected, observed, bool(expected == observed))


@dataclass
class CatalogEntry:
    name: str
    scenario: Scenario
    assignment: RayAssignment
    expected: dict
    claims: dict
    notes: str = ""
    extra: list[Check] = field(default_factory=list)

    def checks(self) -> list[Check]:
        out = [_check(k, v, self.expected.get(k)) for k, v in self.claims.items()]
        return out + list(self.extra)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks())

    @property
    def qubit_product(self) -> bool:
        """True when every ray is a product of qubit rays."""
        dims = self.expected.get("dims")
        if not dims or any(d != 2 for d in dims):
            return False
        return all(as_product(self.assignment[v], dims) is not None for v in self.scenario.vertices)

    def to_json(self) -> dict:
        """Scenario JSON with rays; readable by :func:`scenario_from_json`."""
        return scenario_to_json(self.scenario, self.assignment, name=self.name)


def _derive(s: Scenario, a: RayAssignment, dims=None) -> dict:
    check_assignment(s, a)
    c = find_ks_colouring(s)
    if c is not None and not is_colouring(s, c):
        raise AssertionError("solver returned an invalid colouring")
    out = {
        "vertex_count": len(s.vertices),
        "hyperedge_count": len(s.hyperedges),
        "colourable": c is not None,
    }
    if dims is not None:
        out["dims"] = list(dims)
    return out


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

def _ray_json(r) -> dict:
    return r.to_json()


def _ray_from_json(obj: dict):
    return ProductRay.from_json(obj) if "factors" in obj else Ray.from_json(obj)


def scenario_to_json(s: Scenario, a: RayAssignment | None = None, name: str | None = None) -> dict:
    out: dict = {}
    if name is not None:
        out["name"] = name
    out["vertices"] = list(s.vertices)
    out["hyperedges"] = [list(e) for e in s.hyperedges]
    if a is not None:
        out["rays"] = {v: _ray_json(a[v]) for v in s.vertices}
    return out


def scenario_from_json(obj: dict) -> tuple[Scenario, dict | None]:
    if not isinstance(obj, dict) or "vertices" not in obj or "hyperedges" not in obj:
        raise ValueError("scenario JSON needs 'vertices' and 'hyperedges'")
    s = Scenario(tuple(obj["vertices"]), tuple(tuple(e) for e in obj["hyperedges"]))
    rays = obj.get("rays")
    if rays is None:
        return s, None
    a = {v: _ray_from_json(rays[v]) for v in s.vertices}
    check_assignment(s, a)
    return s, a


# --------------------------------------------------------------------------
# Peres-Mermin square
# --------------------------------------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# rows of the square; columns are read off by transposition
SQUARE = (("XI", "IX", "XX"), ("IY", "YI", "YY"), ("XY", "YX", "ZZ"))


def pauli(label: str) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for c in label:
        out = np.kron(out, PAULI[c])
    return out


def square_contexts() -> list[tuple[str, ...]]:
    rows = [tuple(r) for r in SQUARE]
    cols = [tuple(SQUARE[i][j] for i in range(3)) for j in range(3)]
    return rows + cols


def simultaneous_eigenbasis(ops: Sequence[np.ndarray]) -> list[Ray]:
    """Common eigenbasis of commuting Hermitian operators.

    The first operator is diagonalised; each of its eigenspaces is then
    split by the second operator (and so on) restricted to that space.
    """
    dim = ops[0].shape[0]
    spaces = [np.eye(dim, dtype=complex)]
    for op in ops:
        nxt = []
        for V in spaces:
            if V.shape[1] == 1:
                nxt.append(V)
                continue
            w, Q = np.linalg.eigh(V.conj().T @ op @ V)
            for lam in np.unique(np.round(w, 8)):
                cols = np.abs(w - lam) < 1e-8
                nxt.append(V @ Q[:, cols])
        spaces = nxt
    if any(V.shape[1] != 1 for V in spaces):
        raise ValueError("operators do not resolve a unique eigenbasis")
    return [Ray(V[:, 0]) for V in spaces]


def peres_mermin_scenario() -> CatalogEntry:
    rays: list[Ray] = []
    bases = []
    for ctx in square_contexts():
        b = simultaneous_eigenbasis([pauli(p) for p in ctx])
        bases.append(b)
        rays.extend(b)
    rays = dedup(rays)
    ids = [f"pm{i}" for i in range(len(rays))]
    s, a = scenario_from_rays(rays, ids=ids)
    dashed = []
    for b in bases:
        M = np.array([r.vector for r in rays])
        dashed.append(frozenset(ids[int(np.argmax(np.abs(M.conj() @ r.vector)))] for r in b))
    bell = [Ray([1, 0, 0, 1]), Ray([1, 0, 0, -1]), Ray([0, 1, 1, 0]), Ray([0, 1, -1, 0])]
    col3 = bases[5]
    bell_ok = all(any(abs(np.vdot(x.vector, y.vector)) > 1 - ORTHO_TOL for y in col3) for x in bell)
    extra = [
        _check("context_bases_are_hyperedges", True, all(d in s.edge_sets() for d in dashed)),
        _check("column3_is_bell_basis", True, bell_ok),
    ]
    return CatalogEntry(
        "peres_mermin", s, a, _derive(s, a, (2, 2)),
        claims={"vertex_count": 24, "colourable": False},
        notes="eigenbases of the six contexts; all complete sets among the 24 rays",
        extra=extra,
    )


# --------------------------------------------------------------------------
# Peres 33 / 57
# --------------------------------------------------------------------------

def _signed_variants(template: Sequence[float]) -> list[tuple[float, ...]]:
    """All sign and position variants of a real 3-vector, up to overall sign."""
    seen, out = set(), []
    for perm in itertools.permutations(template):
        for signs in itertools.product((1, -1), repeat=3):
            v = tuple(s * x for s, x in zip(signs, perm))
            lead = next(x for x in v if x != 0)
            if lead < 0:
                v = tuple(-x for x in v)
            key = tuple(round(x, 12) for x in v)
            if key not in seen:
                seen.add(key)
                out.append(v)
    return out


# Squared components of the 33 rays are permutations of these (up to signs).
PERES_TEMPLATES = ((1, 0, 0), (0, 1, 1), (0, 1, SQRT2), (SQRT2, 1, 1))


def peres33_rays() -> list[Ray]:
    raw = [v for t in PERES_TEMPLATES for v in _signed_variants(t)]
    allowed = {0.0, 1.0, SQRT2}
    for v in raw:
        if any(min(abs(abs(x) - y) for y in allowed) > 1e-12 for x in v):
            raise AssertionError(f"component outside {{0, 1, sqrt2}} in {v}")
    rays = [Ray(v) for v in raw]
    if len(dedup(rays)) != 33:
        raise AssertionError(f"Peres table has {len(dedup(rays))} distinct rays, not 33")
    return rays


def completing_ray(a: Ray, b: Ray) -> Ray:
    """The ray orthogonal to two orthogonal rays of C^3."""
    return Ray(np.cross(a.vector.conj(), b.vector.conj()))


def complete_pairs(rays: Sequence[Ray]) -> tuple[Scenario, dict]:
    rays = dedup(rays)
    if any(r.dim != 3 for r in rays):
        raise ValueError("complete_pairs works in C^3")
    M = np.array([r.vector for r in rays])
    G = np.abs(M.conj() @ M.T) <= ORTHO_TOL
    closed = list(rays)
    for i, j in zip(*np.nonzero(np.triu(G, 1))):
        closed.append(completing_ray(rays[i], rays[j]))
    closed = dedup(closed)
    return scenario_from_rays(closed, ids=[f"p{i}" for i in range(len(closed))])


def peres57() -> CatalogEntry:
    s, a = complete_pairs(peres33_rays())
    return CatalogEntry(
        "peres57", s, a, _derive(s, a, (3,)),
        claims={"vertex_count": 57, "hyperedge_count": 40, "colourable": False},
        notes="33 rays with their orthogonal pairs completed",
    )


def orthogonality_connected(rays: Sequence[Ray]) -> bool:
    M = np.array([r.vector for r in rays])
    G = np.abs(M.conj() @ M.T) <= ORTHO_TOL
    seen, todo = {0}, [0]
    while todo:
        i = todo.pop()
        for j in np.flatnonzero(G[i]):
            if int(j) not in seen:
                seen.add(int(j))
                todo.append(int(j))
    return len(seen) == len(rays)


# --------------------------------------------------------------------------
# two copies of Peres in C^2 (x) C^2
# --------------------------------------------------------------------------

def embedding_unitary() -> np.ndarray:
    tp = (2 - SQRT2 + math.sqrt(6)) / 2
    tm = (2 - SQRT2 - math.sqrt(6)) / 2
    d = 1 + SQRT2
    U = np.array([[d, tm, tp], [tp, d, tm], [tm, tp, d]], dtype=complex) / 3
    if np.max(np.abs(U.conj().T @ U - np.eye(3))) > 1e-12:
        raise AssertionError("embedding matrix is not unitary")
    return U


def embed(v: np.ndarray, skip: int) -> Ray:
    """Place a C^3 vector on the three computational two-qubit states other than ``skip``."""
    out = np.zeros(4, dtype=complex)
    out[[k for k in range(4) if k != skip]] = v
    return Ray(out)


def two_qubit_construction():
    """Rays and listed bases of the two-copy construction, before closure.

    Returns ``(rays, listed_bases, type1, type2)`` where type1/type2 hold the
    embedded rays of each copy (including their entangled members).
    """
    s57, a57 = complete_pairs(peres33_rays())
    U = embedding_unitary()
    k00, k01 = basis_ray(4, 0), basis_ray(4, 1)
    t1 = {v: embed(a57[v].vector, 0) for v in s57.vertices}
    t2 = {v: embed(U @ a57[v].vector, 1) for v in s57.vertices}
    listed = [[k00] + [t1[v] for v in e] for e in s57.hyperedges]
    listed += [[k01] + [t2[v] for v in e] for e in s57.hyperedges]
    rays = dedup([k00, k01] + list(t1.values()) + list(t2.values()))
    return rays, listed, t1, t2


def two_qubit_ks_set() -> CatalogEntry:
    rays, listed, t1, t2 = two_qubit_construction()
    ids = [f"t{i}" for i in range(len(rays))]
    s, a = scenario_from_rays(rays, ids=ids)
    derived = _derive(s, a, (2, 2))

    ent1 = [r for r in t1.values() if is_product_ray(r, (2, 2)) is None]
    ent2 = [r for r in t2.values() if is_product_ray(r, (2, 2)) is None]
    A = np.array([r.vector for r in ent1])
    B = np.array([r.vector for r in ent2])
    min_overlap = float(np.abs(A.conj() @ B.T).min())
    derived["min_cross_overlap"] = min_overlap
    derived["entangled_rays"] = len(ent1) + len(ent2)

    entangled = {v: is_product_ray(a[v], (2, 2)) is None for v in s.vertices}
    fully_entangled = [e for e in s.hyperedges if all(entangled[v] for v in e)]
    edges = s.edge_sets()
    M = np.array([r.vector for r in rays])

    def lookup(r):
        return ids[int(np.argmax(np.abs(M.conj() @ r.vector)))]

    listed_present = all(frozenset(lookup(r) for r in b) in edges for b in listed)
    comp = frozenset(lookup(basis_ray(4, k)) for k in range(4))
    extra = [
        _check("cross_overlaps_nonzero", True, min_overlap > 1e-9),
        _check("fully_entangled_hyperedges", 0, len(fully_entangled)),
        _check("listed_bases_present", True, listed_present),
        _check("computational_basis_present", True, comp in edges),
    ]
    return CatalogEntry(
        "two_qubit_ks", s, a, derived,
        claims={"colourable": False},
        notes="Peres rays embedded orthogonal to |00> and (after U) orthogonal to |01>; all-bases closure",
        extra=extra,
    )


# --------------------------------------------------------------------------
# product-ray scenarios
# --------------------------------------------------------------------------

def nonlocal_basis_eq1() -> ProductBasis:
    return ProductBasis([ket(lbl) for lbl in SHIFT_PATTERN])


def eq1_entry() -> CatalogEntry:
    b = nonlocal_basis_eq1()
    ids = list(SHIFT_PATTERN)
    s, a = scenario_from_rays(list(b), bases=[list(range(8))], ids=ids)
    north = all_north_colouring(s, a)
    extra = [
        _check("all_north_members", ["000"], [v for v in s.vertices if north[v] == 1]),
        _check("all_north_colouring_valid", True, is_colouring(s, north)),
    ]
    return CatalogEntry("eq1_basis", s, a, _derive(s, a, (2, 2, 2)),
                        claims={"vertex_count": 8, "hyperedge_count": 1, "colourable": True},
                        notes="three-qubit product basis not implementable by LOCC", extra=extra)


def product_family(labels: str, n: int) -> list[ProductRay]:
    return [ket("".join(t)) for t in itertools.product(labels, repeat=n)]


def product_family_entry(name: str, rays: Sequence[ProductRay], dims) -> CatalogEntry:
    ids = [f"q{i}" for i in range(len(rays))]
    s, a = scenario_from_rays(list(rays), ids=ids)
    derived = _derive(s, a, dims)
    north = all_north_colouring(s, a)
    extra = [_check("all_north_colouring_valid", True, is_colouring(s, north))]
    return CatalogEntry(name, s, a, derived, claims={"colourable": True},
                        notes="every complete set among a family of product rays", extra=extra)


def random_product_family(n: int, bases_per_qubit: int, seed: int) -> list[ProductRay]:
    """Products of rays drawn from a few random orthonormal bases per qubit."""
    from ksforge.colouring import haar_qubit, perp_amplitudes
    rng = np.random.default_rng(seed)
    locals_ = []
    for _ in range(n):
        qs = []
        for _ in range(bases_per_qubit):
            q = haar_qubit(rng)
            qs += [Ray(q), Ray(perp_amplitudes(q))]
        locals_.append(qs)
    return [ProductRay(t) for t in itertools.product(*locals_)]


# --------------------------------------------------------------------------
# KS sets of product rays when some factor has d >= 3
# --------------------------------------------------------------------------

def _windows(d: int) -> list[int]:
    starts = list(range(0, d - 2, 3))
    if starts[-1] + 3 < d:
        starts.append(d - 3)
    return starts


def ks_bases_in(d: int) -> tuple[list[Ray], list[list[int]]]:
    """A KS set of C^d (d >= 3) as rays plus bases (index lists).

    For d > 3 the 40 Peres bases are placed on several three-dimensional
    coordinate windows covering every index, each padded by the remaining
    computational vectors.  Whichever computational vector takes the value
    1 lies in some window, and that window's copy is then uncolourable.
    """
    if d < 3:
        raise ValueError("no KS set below dimension 3")
    s57, a57 = complete_pairs(peres33_rays())
    rays: list[Ray] = [basis_ray(d, k) for k in range(d)]
    bases: list[list[int]] = []

    def index(r: Ray) -> int:
        for i, q in enumerate(rays):
            if r == q:
                return i
        rays.append(r)
        return len(rays) - 1

    for start in _windows(d):
        window = [start, start + 1, start + 2]
        pad = [k for k in range(d) if k not in window]
        for e in s57.hyperedges:
            basis = []
            for v in e:
                vec = np.zeros(d, dtype=complex)
                vec[window] = a57[v].vector
                basis.append(index(Ray(vec)))
            full = basis + pad
            if sorted(full) not in (sorted(b) for b in bases):
                bases.append(full)
    return rays, bases


def unentangled_ks_set(dims: Sequence[int]) -> CatalogEntry:
    dims = [int(d) for d in dims]
    if len(dims) < 1 or any(d < 2 for d in dims):
        raise ValueError(f"invalid dims {dims}")
    big = next((k for k, d in enumerate(dims) if d >= 3), None)
    if big is None:
        raise ValueError(
            f"dims {dims}: every factor has dimension < 3; no KS set of product rays exists"
        )
    local_rays, local_bases = ks_bases_in(dims[big])
    others = [k for k in range(len(dims)) if k != big]
    comp = [[basis_ray(dims[k], i) for i in range(dims[k])] for k in others]

    def product(factor_choice, v: Ray) -> ProductRay:
        factors = list(factor_choice)
        factors.insert(big, v)
        return ProductRay(tuple(factors))

    combos = list(itertools.product(*comp))
    rays: list[ProductRay] = []
    key: dict[tuple[int, int], int] = {}
    for ci, choice in enumerate(combos):
        for li, v in enumerate(local_rays):
            key[(ci, li)] = len(rays)
            rays.append(product(choice, v))
    bases = [[key[(ci, li)] for ci in range(len(combos)) for li in b] for b in local_bases]
    used = sorted({i for b in bases for i in b})
    remap = {old: new for new, old in enumerate(used)}
    rays = [rays[i] for i in used]
    bases = [[remap[i] for i in b] for b in bases]
    name = "unentangled_" + "x".join(map(str, dims))
    ids = [f"u{i}" for i in range(len(rays))]
    s, a = scenario_from_rays(rays, bases=bases, ids=ids)
    derived = _derive(s, a, dims)
    sizes = sorted({len(e) for e in s.hyperedges})
    derived["hyperedge_sizes"] = sizes
    claims = {"colourable": False, "hyperedge_sizes": [math.prod(dims)]}
    if dims[big] == 3:
        m = math.prod(dims) // 3
        claims.update(vertex_count=57 * m, hyperedge_count=40)
    extra = [_check("all_rays_product", True,
                    all(is_product_ray(vector_ray(a[v]), dims) is not None for v in s.vertices))]
    return CatalogEntry(name, s, a, derived, claims,
                        notes="KS bases on one factor tensored with computational bases of the rest",
                        extra=extra)


def vector_ray(r) -> Ray:
    return r.ray if isinstance(r, ProductRay) else r


# --------------------------------------------------------------------------
# registry
# --------------------------------------------------------------------------

BUILDERS: dict[str, Callable[[], CatalogEntry]] = {
    "peres_mermin": peres_mermin_scenario,
    "peres57": peres57,
    "two_qubit_ks": two_qubit_ks_set,
    "eq1_basis": eq1_entry,
    "unentangled_2x3": lambda: unentangled_ks_set([2, 3]),
    "unentangled_3x2": lambda: unentangled_ks_set([3, 2]),
    "product_2q_pauli": lambda: product_family_entry("product_2q_pauli", product_family("01+-ij", 2), (2, 2)),
    "product_3q_xz": lambda: product_family_entry("product_3q_xz", product_family("01+-", 3), (2, 2, 2)),
    "product_2q_random": lambda: product_family_entry(
        "product_2q_random", random_product_family(2, 3, seed=7), (2, 2)),
}


def names() -> list[str]:
    return list(BUILDERS)


def build(name: str) -> CatalogEntry:
    if name not in BUILDERS:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(BUILDERS)}")
    return BUILDERS[name]()
