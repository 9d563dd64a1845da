"""Rays in finite-dimensional complex Hilbert spaces.

A :class:`Ray` is stored as a unit vector in canonical phase: the first
amplitude with modulus above ``PHASE_TOL`` is real and positive.  Two rays
compare equal when their overlap has modulus within ``ORTHO_TOL`` of one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from ksforge._kernels import NORTH_EPS, north_mask_numpy

NORM_TOL = 1e-12
ORTHO_TOL = 1e-9
PHASE_TOL = 1e-9


def canonicalize(vec) -> np.ndarray:
    """Normalise ``vec`` and rotate its global phase into canonical form."""
    v = np.asarray(vec, dtype=np.complex128).ravel()
    if v.size == 0:
        raise ValueError("a ray needs at least one amplitude")
    if not np.all(np.isfinite(v)):
        raise ValueError("ray amplitudes must be finite")
    norm = np.linalg.norm(v)
    if norm < 1e-15:
        raise ValueError("cannot build a ray from the zero vector")
    v = v / norm
    lead = np.flatnonzero(np.abs(v) > PHASE_TOL)[0]
    v = v * (abs(v[lead]) / v[lead])
    v[lead] = abs(v[lead])
    return v


class Ray:
    """Unit vector up to global phase.

    >>> Ray([1, 1]) == Ray([1j, 1j])
    True
    """

    __slots__ = ("_vec",)

    def __init__(self, amplitudes):
        vec = canonicalize(amplitudes)
        vec.flags.writeable = False
        self._vec = vec

    @property
    def vector(self) -> np.ndarray:
        return self._vec

    @property
    def dim(self) -> int:
        return self._vec.size

    def __repr__(self) -> str:
        amps = ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in self._vec)
        return f"Ray([{amps}])"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ray):
            return NotImplemented
        if other.dim != self.dim:
            return False
        return abs(np.vdot(self._vec, other._vec)) >= 1.0 - ORTHO_TOL

    def __hash__(self) -> int:
        # Coarse grid so that rays equal under __eq__ almost always collide.
        return hash(tuple(np.round(self._vec, 6).tolist()))

    def perp(self) -> "Ray":
        """Orthogonal complement of a qubit ray."""
        if self.dim != 2:
            raise ValueError("perp is only defined for qubit rays")
        a, b = self._vec
        return Ray([-np.conj(b), np.conj(a)])

    def to_json(self) -> dict:
        return {"dim": self.dim, "amplitudes": [[z.real, z.imag] for z in self._vec.tolist()]}

    @classmethod
    def from_json(cls, obj: dict) -> "Ray":
        amps = [complex(re, im) for re, im in obj["amplitudes"]]
        if "dim" in obj and obj["dim"] != len(amps):
            raise ValueError(f"dim {obj['dim']} does not match {len(amps)} amplitudes")
        return cls(amps)


@dataclass(frozen=True)
class ProductRay:
    """Tensor product of subsystem rays, kept in factored form."""

    factors: tuple[Ray, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a product ray needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def ray(self) -> Ray:
        return tensor(self.factors)

    @property
    def n(self) -> int:
        return len(self.factors)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProductRay):
            return NotImplemented
        return self.dims == other.dims and all(
            a == b for a, b in zip(self.factors, other.factors)
        )

    def __hash__(self) -> int:
        return hash(self.factors)

    def amplitude_array(self) -> np.ndarray:
        """Factor amplitudes as an (n, 2) array; qubit factors only."""
        if any(d != 2 for d in self.dims):
            raise ValueError("amplitude_array needs qubit factors")
        return np.array([f.vector for f in self.factors])

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}

    @classmethod
    def from_json(cls, obj: dict) -> "ProductRay":
        return cls(tuple(Ray.from_json(f) for f in obj["factors"]))


class Basis(tuple):
    """An orthonormal basis: ``dim`` mutually orthogonal rays."""

    def __new__(cls, rays: Iterable[Ray], tol: float = ORTHO_TOL):
        rays = tuple(rays)
        if not rays:
            raise ValueError("empty basis")
        dim = rays[0].dim
        if any(r.dim != dim for r in rays):
            raise ValueError("basis rays have mixed dimensions")
        if len(rays) != dim:
            raise ValueError(f"a basis of C^{dim} needs {dim} rays, got {len(rays)}")
        M = np.array([r.vector for r in rays])
        gram = np.abs(M.conj() @ M.T) - np.eye(dim)
        if np.max(np.abs(gram)) > tol:
            raise ValueError("basis rays are not mutually orthogonal")
        return super().__new__(cls, rays)

    @property
    def dim(self) -> int:
        return self[0].dim


@dataclass(frozen=True)
class BlochPoint:
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        object.__setattr__(self, "phi", self.phi % (2 * math.pi))

    def vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


def qubit(theta: float, phi: float) -> Ray:
    """The qubit ray cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    return Ray([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def basis_ray(dim: int, index: int) -> Ray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return Ray(v)


KET0 = basis_ray(2, 0)
KET1 = basis_ray(2, 1)
PLUS = Ray([1, 1])
MINUS = Ray([1, -1])
PLUS_I = Ray([1, 1j])
MINUS_I = Ray([1, -1j])

_NAMED = {"0": KET0, "1": KET1, "+": PLUS, "-": MINUS, "i": PLUS_I, "j": MINUS_I}


def ket(label: str) -> ProductRay:
    """Product ray from a label such as ``"0+1"`` (``i``/``j`` for +/-i)."""
    return ProductRay(tuple(_NAMED[c] for c in label))


def _check_dims(a: Ray, b: Ray):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner_product(a: Ray, b: Ray) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_dims(a, b)
    return complex(np.vdot(a.vector, b.vector))


def is_orthogonal(a: Ray, b: Ray, tol: float = ORTHO_TOL) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_dims(a, b)
    return abs(np.vdot(a.vector, b.vector)) <= tol


def tensor(factors: Sequence[Ray | ProductRay]) -> Ray:
    """Kronecker product in row-major (first factor most significant) order."""
    if len(factors) == 0:
        raise ValueError("tensor of an empty factor list")
    vecs = [f.ray.vector if isinstance(f, ProductRay) else f.vector for f in factors]
    return Ray(reduce(np.kron, vecs))


def bloch_of(q: Ray) -> BlochPoint:
    if q.dim != 2:
        raise ValueError("bloch_of needs a qubit ray")
    a, b = q.vector
    theta = 2.0 * math.atan2(abs(b), abs(a))
    if abs(a) < NORM_TOL or abs(b) < NORM_TOL:
        return BlochPoint(min(max(theta, 0.0), math.pi), 0.0)
    phi = (np.angle(b) - np.angle(a)) % (2 * math.pi)
    return BlochPoint(theta, float(phi))


def bloch_vector(q: Ray) -> np.ndarray:
    """Cartesian Bloch vector of a qubit ray."""
    a, b = q.vector
    s = np.conj(a) * b
    return np.array([2 * s.real, 2 * s.imag, abs(a) ** 2 - abs(b) ** 2])


def is_north(q: Ray) -> bool:
    """Membership in the closed-boundary northern hemisphere.

    Polar angle below pi/2 is north; on the equator (within ``NORTH_EPS``)
    the half with phi in (pi, 2pi), together with phi = 0 (the ray |+>),
    is north.  Exactly one of q and q.perp() is north.
    """
    if q.dim != 2:
        raise ValueError("is_north needs a qubit ray")
    a, b = q.vector
    return bool(north_mask_numpy(np.array(a), np.array(b)))


def is_all_north(p: ProductRay) -> bool:
    if any(d != 2 for d in p.dims):
        raise ValueError("is_all_north needs qubit factors")
    return all(is_north(f) for f in p.factors)


def reduced_state(vec: np.ndarray, dims: Sequence[int], k: int) -> np.ndarray:
    """Reduced density matrix of subsystem ``k`` of a pure state."""
    psi = np.asarray(vec).reshape(dims)
    psi = np.moveaxis(psi, k, 0).reshape(dims[k], -1)
    return psi @ psi.conj().T


def is_product_ray(r: Ray, dims: Sequence[int], tol: float = ORTHO_TOL) -> ProductRay | None:
    """Factor ``r`` over subsystems of the given dims, or None if entangled."""
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or math.prod(dims) != r.dim:
        raise ValueError(f"dims {dims} inconsistent with ray dimension {r.dim}")
    factors = []
    for k in range(len(dims)):
        rho = reduced_state(r.vector, dims, k)
        purity = float(np.real(np.trace(rho @ rho)))
        if purity < 1.0 - tol:
            return None
        _, vecs = np.linalg.eigh(rho)
        factors.append(Ray(vecs[:, -1]))
    return ProductRay(tuple(factors))


def qubit_count(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def as_product(r: Ray | ProductRay, dims: Sequence[int] | None = None) -> ProductRay | None:
    """Product form of ``r``; qubit subsystems are assumed when dims is None."""
    if isinstance(r, ProductRay):
        return r
    if dims is None:
        dims = [2] * qubit_count(r.dim)
    return is_product_ray(r, dims)


def dedup(rays: Iterable[Ray], tol: float = ORTHO_TOL) -> list[Ray]:
    """Drop rays equal (up to phase) to an earlier one; order is kept."""
    kept: list[Ray] = []
    mat = None
    for r in rays:
        if mat is not None:
            if r.dim != mat.shape[1]:
                raise ValueError("dedup needs rays of a single dimension")
            if np.max(np.abs(mat.conj() @ r.vector)) >= 1.0 - tol:
                continue
        kept.append(r)
        row = r.vector[None, :]
        mat = row if mat is None else np.vstack([mat, row])
    return kept
