"""Contextuality scenarios (hypergraphs) and models on them.

A scenario is a list of vertex ids plus a list of hyperedges.  Rays may be
attached to vertices through a plain mapping ``id -> Ray | ProductRay``;
when they are, each hyperedge should be a complete orthogonal set.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from ksforge import lp
from ksforge.rays import ORTHO_TOL, Basis, ProductRay, Ray

MODEL_TOL = 1e-9
DEFAULT_CAP = 10**6

RayLike = Ray | ProductRay
RayAssignment = Mapping[str, RayLike]


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    vertices: tuple[str, ...]
    hyperedges: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        verts = tuple(str(v) for v in self.vertices)
        if len(set(verts)) != len(verts):
            raise ScenarioError("vertex ids must be unique")
        pos = {v: i for i, v in enumerate(verts)}
        edges, seen = [], set()
        for e in self.hyperedges:
            e = tuple(e)
            if not e:
                raise ScenarioError("empty hyperedge")
            missing = [v for v in e if v not in pos]
            if missing:
                raise ScenarioError(f"hyperedge uses unknown vertices {missing}")
            key = frozenset(e)
            if len(key) != len(e):
                raise ScenarioError(f"hyperedge {e} repeats a vertex")
            if key in seen:
                raise ScenarioError(f"duplicate hyperedge {sorted(key)}")
            seen.add(key)
            edges.append(tuple(sorted(e, key=pos.__getitem__)))
        edges.sort(key=lambda e: [pos[v] for v in e])
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "hyperedges", tuple(edges))

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_indices(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.index[v] for v in e) for e in self.hyperedges)

    def edge_sets(self) -> set[frozenset[str]]:
        return {frozenset(e) for e in self.hyperedges}

    def __len__(self) -> int:
        return len(self.vertices)


def vector_of(r: RayLike) -> np.ndarray:
    return r.ray.vector if isinstance(r, ProductRay) else r.vector


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def maximal_cliques(adj: Sequence[int], min_size: int = 1) -> list[int]:
    """Bron-Kerbosch with Tomita pivoting over bitset adjacency.

    Returns the maximal cliques (as bitmasks) with at least ``min_size``
    vertices.
    """
    out: list[int] = []

    def expand(R: int, size: int, P: int, X: int):
        if not P:
            if not X and size >= min_size:
                out.append(R)
            return
        if size + _popcount(P) < min_size:
            return
        u = max(_bits(P | X), key=lambda w: _popcount(P & adj[w]))
        for v in _bits(P & ~adj[u]):
            bit = 1 << v
            expand(R | bit, size + 1, P & adj[v], X & adj[v])
            P &= ~bit
            X |= bit

    expand(0, 0, (1 << len(adj)) - 1, 0)
    return out


def orthogonality_adjacency(vectors: np.ndarray, tol: float = ORTHO_TOL) -> list[int]:
    G = np.abs(vectors.conj() @ vectors.T) <= tol
    np.fill_diagonal(G, False)
    return [sum(1 << int(j) for j in np.flatnonzero(row)) for row in G]


def complete_sets(vectors: np.ndarray, tol: float = ORTHO_TOL) -> list[tuple[int, ...]]:
    """All orthonormal bases among the rows of ``vectors`` (index tuples)."""
    dim = vectors.shape[1]
    adj = orthogonality_adjacency(vectors, tol)
    cliques = maximal_cliques(adj, min_size=dim)
    return sorted(tuple(_bits(c)) for c in cliques if _popcount(c) == dim)


def scenario_from_rays(
    rays: Sequence[RayLike],
    bases: Sequence[Sequence[int | str | RayLike]] | None = None,
    ids: Sequence[str] | None = None,
) -> tuple[Scenario, dict[str, RayLike]]:
    """Orthogonality scenario over ``rays``.

    With ``bases=None`` every complete orthogonal subset becomes a hyperedge
    (clique enumeration).  Otherwise each entry of ``bases`` lists the members
    of one hyperedge, as positions in ``rays``, vertex ids, or rays.
    """
    rays = list(rays)
    if not rays:
        raise ScenarioError("no rays given")
    if ids is None:
        ids = [f"v{i}" for i in range(len(rays))]
    ids = [str(i) for i in ids]
    if len(ids) != len(rays):
        raise ScenarioError("ids and rays differ in length")
    if len({vector_of(r).size for r in rays}) != 1:
        raise ScenarioError("rays have mixed dimensions")
    M = np.array([vector_of(r) for r in rays])
    overlap = np.abs(M.conj() @ M.T)
    np.fill_diagonal(overlap, 0.0)
    if np.any(overlap >= 1.0 - ORTHO_TOL):
        i, j = np.argwhere(overlap >= 1.0 - ORTHO_TOL)[0]
        raise ScenarioError(f"duplicate rays at positions {i} and {j}")

    if bases is None:
        edges = [tuple(ids[k] for k in c) for c in complete_sets(M)]
    else:
        pos = {v: i for i, v in enumerate(ids)}
        edges = []
        for basis in bases:
            members = []
            for item in basis:
                if isinstance(item, (int, np.integer)):
                    members.append(int(item))
                elif isinstance(item, str):
                    members.append(pos[item])
                else:
                    hit = np.flatnonzero(np.abs(M.conj() @ vector_of(item)) >= 1 - ORTHO_TOL)
                    if hit.size != 1:
                        raise ScenarioError("basis ray not among the scenario rays")
                    members.append(int(hit[0]))
            try:
                Basis([Ray(M[k]) for k in members])
            except ValueError as exc:
                raise ScenarioError(f"given basis {members} is not complete: {exc}") from None
            edges.append(tuple(ids[k] for k in members))
    scen = Scenario(tuple(ids), tuple(edges))
    return scen, dict(zip(ids, rays))


def check_assignment(s: Scenario, a: RayAssignment, tol: float = ORTHO_TOL) -> None:
    dims = {vector_of(a[v]).size for v in s.vertices}
    if len(dims) != 1:
        raise ScenarioError("assigned rays have mixed dimensions")
    dim = dims.pop()
    for e in s.hyperedges:
        if len(e) != dim:
            raise ScenarioError(f"hyperedge {e} has {len(e)} rays in dimension {dim}")
        M = np.array([vector_of(a[v]) for v in e])
        if np.max(np.abs(M.conj() @ M.T - np.eye(dim))) > tol:
            raise ScenarioError(f"hyperedge {e} is not an orthonormal basis")


# --------------------------------------------------------------------------
# KS-colourings
# --------------------------------------------------------------------------

class Colouring(dict):
    """Vertex id -> 0/1 with exactly one 1 per hyperedge."""


class ProbModel(dict):
    """Vertex id -> probability, normalised on every hyperedge."""


def is_colouring(s: Scenario, c: Mapping[str, int]) -> bool:
    if set(c) != set(s.vertices) or any(c[v] not in (0, 1) for v in s.vertices):
        return False
    return all(sum(c[v] for v in e) == 1 for e in s.hyperedges)


class _Search:
    """Backtracking over vertex values with exactly-one propagation."""

    def __init__(self, s: Scenario):
        self.n = len(s.vertices)
        self.edges = [list(e) for e in s.edge_indices]
        self.incident = [[] for _ in range(self.n)]
        for k, e in enumerate(self.edges):
            for v in e:
                self.incident[v].append(k)

    def initial(self):
        return [-1] * self.n, [0] * len(self.edges), [len(e) for e in self.edges]

    def assign(self, state, v: int, value: int) -> bool:
        val, ones, free = state
        stack = [(v, value)]
        while stack:
            v, value = stack.pop()
            if val[v] != -1:
                if val[v] != value:
                    return False
                continue
            val[v] = value
            for k in self.incident[v]:
                free[k] -= 1
                if value == 1:
                    ones[k] += 1
                    if ones[k] > 1:
                        return False
                    for u in self.edges[k]:
                        if val[u] == -1:
                            stack.append((u, 0))
                        elif u != v and val[u] == 1:
                            return False
                elif ones[k] == 0:
                    if free[k] == 0:
                        return False
                    if free[k] == 1:
                        for u in self.edges[k]:
                            if val[u] == -1:
                                stack.append((u, 1))
                                break
        return True

    def _pick(self, state):
        """Unsatisfied hyperedge with fewest free vertices, or None."""
        _, ones, free = state
        best, best_free = None, None
        for k in range(len(self.edges)):
            if ones[k] == 0 and (best is None or free[k] < best_free):
                best, best_free = k, free[k]
                if best_free <= 2:
                    break
        return best

    def solutions(self, limit: int | None):
        """Yield complete value lists in a fixed, deterministic order.

        Branching follows exact-cover search: take the open hyperedge with
        the fewest free vertices and try each free member as its 1, in
        vertex order.  Vertices outside every hyperedge are branched last,
        1 before 0.
        """
        count = 0
        # explicit stack keeps deep scenarios clear of recursion limits
        todo = [self.initial()]
        while todo:
            state = todo.pop()
            val = state[0]
            k = self._pick(state)
            if k is not None:
                choices = [(u, 1) for u in self.edges[k] if val[u] == -1]
            else:
                try:
                    v = val.index(-1)
                except ValueError:
                    yield list(val)
                    count += 1
                    if limit is not None and count >= limit:
                        return
                    continue
                choices = [(v, 1), (v, 0)]
            branches = []
            for u, value in choices:
                child = (list(state[0]), list(state[1]), list(state[2]))
                if self.assign(child, u, value):
                    branches.append(child)
            todo.extend(reversed(branches))


def find_ks_colouring(s: Scenario) -> Colouring | None:
    """First KS-colouring in canonical search order, or None if uncolourable."""
    for val in _Search(s).solutions(limit=1):
        return Colouring(zip(s.vertices, val))
    return None


class ColouringList(list):
    """List of colourings plus a flag telling whether the cap was reached."""

    truncated: bool = False


def enumerate_ks_colourings(s: Scenario, cap: int = DEFAULT_CAP) -> ColouringList:
    if cap < 1:
        raise ValueError("cap must be positive")
    out = ColouringList()
    search = _Search(s)
    for val in search.solutions(limit=cap + 1):
        if len(out) == cap:
            out.truncated = True
            break
        out.append(Colouring(zip(s.vertices, val)))
    return out


# --------------------------------------------------------------------------
# probabilistic, quantum and classical models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density operator must be a square matrix")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise ValueError(f"density operator has trace {np.trace(m).real}")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density operator has a negative eigenvalue")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, r: RayLike) -> "DensityOperator":
        v = vector_of(r)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    @classmethod
    def mixture(cls, weights: Sequence[float], rays: Sequence[RayLike]) -> "DensityOperator":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        return cls(sum(wi * np.outer(vector_of(r), vector_of(r).conj()) for wi, r in zip(w, rays)))

    def expectation(self, r: RayLike) -> float:
        v = vector_of(r)
        if v.size != self.dim:
            raise ValueError(f"ray dimension {v.size} vs state dimension {self.dim}")
        return float(np.real(np.vdot(v, self.matrix @ v)))

    def to_json(self) -> dict:
        return {"dim": self.dim, "matrix": [[[z.real, z.imag] for z in row] for row in self.matrix.tolist()]}

    @classmethod
    def from_json(cls, obj: dict) -> "DensityOperator":
        m = np.array([[complex(re, im) for re, im in row] for row in obj["matrix"]])
        return cls(m)


def check_model(s: Scenario, p: Mapping[str, float], tol: float = MODEL_TOL) -> None:
    missing = set(s.vertices) - set(p)
    if missing:
        raise ScenarioError(f"model lacks values for {sorted(missing)[:5]}")
    for v in s.vertices:
        if not (-tol <= p[v] <= 1 + tol):
            raise ScenarioError(f"p({v}) = {p[v]} is not a probability")
    for e in s.hyperedges:
        total = sum(p[v] for v in e)
        if abs(total - 1.0) > tol:
            raise ScenarioError(f"hyperedge {e} sums to {total}, not 1")


def quantum_model(s: Scenario, a: RayAssignment, rho: DensityOperator) -> ProbModel:
    p = ProbModel()
    for v in s.vertices:
        p[v] = min(max(rho.expectation(a[v]), 0.0), 1.0)
    check_model(s, p)
    return p


class Verdict(str, enum.Enum):
    CLASSICAL = "classical"
    NON_CLASSICAL = "non_classical"
    INCONCLUSIVE = "inconclusive"


@dataclass
class ClassicalityResult:
    verdict: Verdict
    n_colourings: int
    truncated: bool
    hull: lp.HullResult | None = field(default=None, repr=False)

    def inequality(self, s: Scenario) -> dict[str, float]:
        """Separating inequality sum_v w_v p(v) <= bound, as {vertex: w_v}."""
        if self.hull is None:
            return {}
        return {v: float(w) for v, w in zip(s.vertices, self.hull.normal) if abs(w) > 1e-12}


def is_classical_model(
    s: Scenario,
    p: Mapping[str, float],
    cap: int = DEFAULT_CAP,
    colourings: Iterable[Mapping[str, int]] | None = None,
) -> ClassicalityResult:
    """Convex-hull membership of ``p`` among the KS-colourings of ``s``."""
    check_model(s, p)
    if colourings is None:
        colourings = enumerate_ks_colourings(s, cap)
    truncated = getattr(colourings, "truncated", False)
    cols = list(colourings)
    target = np.array([p[v] for v in s.vertices], dtype=float)
    if not cols:
        verdict = Verdict.INCONCLUSIVE if truncated else Verdict.NON_CLASSICAL
        return ClassicalityResult(verdict, 0, truncated, None)
    V = np.array([[c[v] for v in s.vertices] for c in cols], dtype=float)
    hull = lp.convex_hull_membership(V, target)
    if hull.member:
        verdict = Verdict.CLASSICAL
    elif truncated:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.NON_CLASSICAL
    return ClassicalityResult(verdict, len(cols), truncated, hull)
