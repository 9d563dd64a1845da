"""The all-north KS-colouring of multiqubit product rays.

Also home to random product-basis generators (the test surface for the
exactly-one-all-north property) and valuations on observables whose
eigenspaces are spanned by product rays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ksforge import _kernels
from ksforge.rays import ORTHO_TOL, ProductRay, Ray, as_product, is_all_north
from ksforge.scenario import Colouring, RayAssignment, Scenario, ScenarioError, is_colouring

# Member pattern of the three-qubit shift basis, per qubit:
# 0 -> a, 1 -> a_perp, + -> b, - -> b_perp.
SHIFT_PATTERN = ("000", "+10", "0+1", "10+", "111", "-10", "0-1", "10-")


class ProductBasis(tuple):
    """Orthonormal basis of (C^2)^n made of product rays."""

    def __new__(cls, members: Sequence[ProductRay], tol: float = ORTHO_TOL):
        members = tuple(members)
        if not members:
            raise ValueError("empty product basis")
        n = members[0].n
        if any(m.dims != (2,) * n for m in members):
            raise ValueError("product basis members must all be n-qubit product rays")
        if len(members) != 2**n:
            raise ValueError(f"{n}-qubit product basis needs {2**n} members, got {len(members)}")
        M = np.array([m.ray.vector for m in members])
        if np.max(np.abs(M.conj() @ M.T - np.eye(len(members)))) > tol:
            raise ValueError("product basis members are not mutually orthogonal")
        return super().__new__(cls, members)

    @property
    def n(self) -> int:
        return self[0].n

    def array(self) -> np.ndarray:
        return np.array([m.amplitude_array() for m in self])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ProductBasis":
        return cls([ProductRay(tuple(Ray(f) for f in member)) for member in arr])

    def to_json(self) -> dict:
        return {"n": self.n, "rays": [m.to_json() for m in self]}

    @classmethod
    def from_json(cls, obj: dict) -> "ProductBasis":
        return cls([ProductRay.from_json(r) for r in obj["rays"]])


def all_north_colouring(s: Scenario, a: RayAssignment) -> Colouring:
    """Colour 1 exactly the all-north product rays.

    Vertices outside every hyperedge may carry entangled rays; they get 0.
    """
    covered = {v for e in s.hyperedges for v in e}
    c = Colouring()
    for v in s.vertices:
        pr = as_product(a[v])
        if pr is None:
            if v in covered:
                raise ScenarioError(f"vertex {v} carries an entangled ray")
            c[v] = 0
            continue
        c[v] = int(is_all_north(pr))
    if not is_colouring(s, c):
        # unreachable for product qubit rays
        raise AssertionError("all-north assignment is not a KS-colouring")
    return c


def verify_exactly_one_north(b: ProductBasis) -> bool:
    return sum(is_all_north(m) for m in b) == 1


def count_all_north(bases: np.ndarray, backend: str | None = None) -> np.ndarray:
    """All-north members per basis for a (B, 2^n, n, 2) batch of amplitudes."""
    return _kernels.get_backend(backend).all_north_counts(bases)


# --------------------------------------------------------------------------
# product-basis construction
# --------------------------------------------------------------------------

def haar_qubit(rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the Bloch sphere, as amplitudes (a, b)."""
    u, v = rng.random(2)
    theta = np.arccos(1.0 - 2.0 * u)
    phi = 2.0 * np.pi * v
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def perp_amplitudes(q: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(q[1]), np.conj(q[0])])


def split_basis(position: int, psi, sub0: np.ndarray, sub1: np.ndarray) -> np.ndarray:
    """Product basis {psi_i (x) b : b in sub0} u {psi_perp_i (x) b : b in sub1}.

    ``sub0`` and ``sub1`` are (2^(n-1), n-1, 2) arrays for the other qubits
    (shape (1, 0, 2) when n = 1); ``psi`` is inserted at ``position``.
    """
    psi = np.asarray(psi, dtype=complex)
    halves = []
    for q, sub in ((psi, sub0), (perp_amplitudes(psi), sub1)):
        m, k = sub.shape[0], sub.shape[1]
        out = np.empty((m, k + 1, 2), dtype=complex)
        out[:, :position] = sub[:, :position]
        out[:, position] = q
        out[:, position + 1:] = sub[:, position:]
        halves.append(out)
    return np.concatenate(halves)


def shift_basis(a_rays, b_rays, positions=(0, 1, 2), n: int = 3, subs=None) -> np.ndarray:
    """Three-qubit shift basis on ``positions``, extended by sub-bases.

    ``a_rays[j]`` and ``b_rays[j]`` are the two local bases of qubit j (b must
    not be orthogonal or equal to a).  ``subs`` gives, for each of the 8
    members, a product basis of the remaining n - 3 qubits.
    """
    local = []
    for a, b in zip(a_rays, b_rays):
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        local.append({"0": a, "1": perp_amplitudes(a), "+": b, "-": perp_amplitudes(b)})
    rest = [k for k in range(n) if k not in positions]
    if subs is None:
        if rest:
            raise ValueError("sub-bases are required when n > 3")
        subs = [np.empty((1, 0, 2), dtype=complex)] * 8
    blocks = []
    for label, sub in zip(SHIFT_PATTERN, subs):
        out = np.empty((sub.shape[0], n, 2), dtype=complex)
        for j, pos in enumerate(positions):
            out[:, pos] = local[j][label[j]]
        for j, pos in enumerate(rest):
            out[:, pos] = sub[:, j]
        blocks.append(out)
    return np.concatenate(blocks)


def _random_basis(n: int, rng: np.random.Generator, shift_prob: float) -> np.ndarray:
    if n == 0:
        return np.empty((1, 0, 2), dtype=complex)
    if n >= 3 and shift_prob > 0 and rng.random() < shift_prob:
        positions = tuple(int(p) for p in rng.permutation(n)[:3])
        a_rays = [haar_qubit(rng) for _ in range(3)]
        b_rays = [haar_qubit(rng) for _ in range(3)]
        subs = [_random_basis(n - 3, rng, shift_prob) for _ in range(8)]
        return shift_basis(a_rays, b_rays, positions, n, subs)
    position = int(rng.integers(n))
    psi = haar_qubit(rng)
    sub0 = _random_basis(n - 1, rng, shift_prob)
    sub1 = _random_basis(n - 1, rng, shift_prob)
    return split_basis(position, psi, sub0, sub1)


def random_product_basis_array(n: int, rng: np.random.Generator, family: str = "split") -> np.ndarray:
    """Random n-qubit product basis as a (2^n, n, 2) amplitude array.

    family="split" uses single-qubit splitting only; "mixed" additionally
    picks, with probability 1/2 at each node with at least three qubits left,
    a shift-basis block on three random qubits.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    shift_prob = {"split": 0.0, "mixed": 0.5}[family]
    return _random_basis(n, rng, shift_prob)


def random_product_basis(n: int, rng: np.random.Generator, family: str = "split") -> ProductBasis:
    return ProductBasis.from_array(random_product_basis_array(n, rng, family))


def random_product_bases(n: int, count: int, rng: np.random.Generator, family: str = "split") -> np.ndarray:
    return np.stack([random_product_basis_array(n, rng, family) for _ in range(count)])


def northcheck(n: int, trials: int, seed: int, family: str = "mixed", backend: str | None = None) -> dict:
    """Count bases violating the exactly-one-all-north property."""
    rng = np.random.default_rng(seed)
    bases = random_product_bases(n, trials, rng, family)
    counts = count_all_north(bases, backend)
    return {
        "n": n,
        "trials": trials,
        "seed": seed,
        "family": family,
        "failures": int(np.count_nonzero(counts != 1)),
        "histogram": {str(k): int(v) for k, v in zip(*np.unique(counts, return_counts=True))},
    }


# --------------------------------------------------------------------------
# valuations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservableWithProductEigenbasis:
    """Hermitian operator with eigenspaces spanned by product rays."""

    eigenvalues: tuple[float, ...]
    eigenspaces: tuple[tuple[ProductRay, ...], ...]
    matrix: np.ndarray

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.eigenspaces):
            raise ValueError("one eigenspace per eigenvalue")
        vals = np.asarray(self.eigenvalues, dtype=float)
        if len(vals) > 1 and np.min(np.abs(vals[:, None] - vals[None, :]) + np.eye(len(vals))) <= 1e-9:
            raise ValueError("eigenvalues must be distinct")
        projs = [sum(np.outer(r.ray.vector, r.ray.vector.conj()) for r in space)
                 for space in self.eigenspaces]
        dim = projs[0].shape[0]
        if np.max(np.abs(sum(projs) - np.eye(dim))) > 1e-9:
            raise ValueError("eigenprojectors do not sum to the identity")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.max(np.abs(projs[i] @ projs[j])) > 1e-9:
                    raise ValueError("eigenprojectors are not mutually orthogonal")
        A = sum(l * P for l, P in zip(vals, projs))
        if np.max(np.abs(np.asarray(self.matrix) - A)) > 1e-9:
            raise ValueError("matrix does not match its spectral decomposition")

    @classmethod
    def from_spectrum(cls, eigenvalues: Sequence[float], eigenspaces: Sequence[Sequence[ProductRay]]):
        vecs = [[r.ray.vector for r in space] for space in eigenspaces]
        A = sum(l * sum(np.outer(v, v.conj()) for v in space) for l, space in zip(eigenvalues, vecs))
        return cls(tuple(float(l) for l in eigenvalues), tuple(tuple(s) for s in eigenspaces), A)

    def apply(self, g: Callable[[float], float]) -> "ObservableWithProductEigenbasis":
        """g(A), merging eigenspaces whose images under g coincide."""
        merged: list[tuple[float, list[ProductRay]]] = []
        for lam, space in zip(self.eigenvalues, self.eigenspaces):
            gl = float(g(lam))
            for entry in merged:
                if abs(entry[0] - gl) <= 1e-9:
                    entry[1].extend(space)
                    break
            else:
                merged.append((gl, list(space)))
        return self.from_spectrum([m[0] for m in merged], [m[1] for m in merged])


def north_rule(r: ProductRay | Ray) -> int:
    pr = as_product(r)
    if pr is None:
        raise ValueError("north rule needs a product ray")
    return int(is_all_north(pr))


def colouring_lookup(c: Mapping[str, int], a: RayAssignment) -> Callable[[ProductRay], int]:
    """Turn a Colouring on an assigned scenario into a function of rays."""
    ids = list(a)
    M = np.array([(a[v].ray.vector if isinstance(a[v], ProductRay) else a[v].vector) for v in ids])

    def colour(r: ProductRay | Ray) -> int:
        vec = r.ray.vector if isinstance(r, ProductRay) else r.vector
        hit = np.flatnonzero(np.abs(M.conj() @ vec) >= 1 - ORTHO_TOL)
        if hit.size == 0:
            raise KeyError("ray not covered by the colouring")
        return int(c[ids[hit[0]]])

    return colour


def valuation_from_colouring(A: ObservableWithProductEigenbasis,
                             colour: Callable[[ProductRay], int] = north_rule) -> float:
    """v(A) = sum_j lambda_j c(P_j), with c extended additively to eigenprojectors."""
    weights = []
    for space in A.eigenspaces:
        cp = sum(int(colour(r)) for r in space)
        if cp not in (0, 1):
            raise ValueError(f"colouring gives {cp} on a single eigenprojector")
        weights.append(cp)
    if sum(weights) != 1:
        raise ValueError(f"colouring marks {sum(weights)} eigenprojectors, expected exactly one")
    return float(sum(l * w for l, w in zip(A.eigenvalues, weights)))


def random_observable(n: int, rng: np.random.Generator, family: str = "mixed") -> ObservableWithProductEigenbasis:
    """Random observable on n qubits diagonal in a random product basis.

    Eigenvalues are small integers so that degeneracies and collisions under
    polynomials occur often.
    """
    basis = random_product_basis(n, rng, family)
    n_spaces = int(rng.integers(1, len(basis) + 1))
    labels = rng.integers(0, n_spaces, size=len(basis))
    used = sorted(set(labels.tolist()))
    values = rng.choice(np.arange(-3, 4), size=len(used), replace=False) if len(used) <= 7 \
        else rng.permutation(np.arange(-len(used), len(used)))[:len(used)]
    spaces = [[basis[i] for i in np.flatnonzero(labels == k)] for k in used]
    return ObservableWithProductEigenbasis.from_spectrum([float(v) for v in values], spaces)
