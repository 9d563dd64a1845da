"""KS-noncontextual hidden-variable model for product states of n qubits.

Ontic states are n points on the Bloch sphere.  A product ray responds with
certainty to an ontic state when every factor, rotated by the SU(2) element
taking that qubit's ontic point to |0>, lands in the north set.  Preparing a
product state chi draws each qubit independently from the density
(1/pi) cos(angle to chi) on the hemisphere around chi.

Random numbers come from numpy's Philox4x64 counter-based generator.  The
stream for worker ``w`` uses key ``(w << 64) | seed``; a run with one worker
uses worker 0 and is the reference run for a given seed.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from ksforge import _kernels
from ksforge.rays import BlochPoint, ProductRay, Ray, as_product, bloch_vector, qubit
from ksforge.scenario import DensityOperator, vector_of

CHUNK = 1 << 16


@dataclass(frozen=True)
class OnticState:
    points: tuple[BlochPoint, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("an ontic state needs at least one qubit")
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def n(self) -> int:
        return len(self.points)

    def amplitudes(self) -> np.ndarray:
        return np.array([qubit(p.theta, p.phi).vector for p in self.points])


@dataclass(frozen=True)
class EpistemicState:
    """A product state, or a finite mixture of product states."""

    components: tuple[tuple[float, ProductRay], ...]

    def __post_init__(self):
        comps = tuple((float(w), r) for w, r in self.components)
        if not comps:
            raise ValueError("empty epistemic state")
        w = np.array([c[0] for c in comps])
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        if len({r.n for _, r in comps}) != 1 or any(d != 2 for _, r in comps for d in r.dims):
            raise ValueError("components must be product rays on the same number of qubits")
        object.__setattr__(self, "components", comps)

    @classmethod
    def pure(cls, chi: ProductRay) -> "EpistemicState":
        return cls(((1.0, chi),))

    @classmethod
    def mixture(cls, weights: Sequence[float], rays: Sequence[ProductRay]) -> "EpistemicState":
        return cls(tuple(zip(weights, rays)))

    @property
    def kind(self) -> str:
        return "pure_product" if len(self.components) == 1 else "mixture"

    @property
    def n(self) -> int:
        return self.components[0][1].n

    def density(self) -> DensityOperator:
        return DensityOperator.mixture([w for w, _ in self.components], [r for _, r in self.components])


@dataclass(frozen=True)
class SimConfig:
    samples: int
    seed: int
    jobs: int | None = None
    backend: str | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be at least 1")

    def worker_count(self) -> int:
        if self.jobs is not None:
            return max(1, int(self.jobs))
        return max(1, int(os.environ.get("KSFORGE_JOBS", "1")))


class Estimate(NamedTuple):
    estimate: float
    std_error: float


def stream(seed: int, worker: int = 0) -> np.random.Generator:
    key = (int(worker) << 64) | (int(seed) & (2**64 - 1))
    return np.random.Generator(np.random.Philox(key=key))


# --------------------------------------------------------------------------
# response function
# --------------------------------------------------------------------------

def _qubit_product(psi: ProductRay | Ray, n: int | None = None) -> ProductRay:
    pr = as_product(psi)
    if pr is None:
        raise ValueError("response is defined for product rays only")
    if any(d != 2 for d in pr.dims):
        raise ValueError("response needs qubit factors")
    if n is not None and pr.n != n:
        raise ValueError(f"qubit-count mismatch: ray has {pr.n}, state has {n}")
    return pr


def response(psi: ProductRay, lam: OnticState) -> int:
    """Deterministic outcome (0 or 1) of the projector onto psi at ontic state lam."""
    pr = _qubit_product(psi, lam.n)
    counts, _, _ = _kernels.NUMPY.response_counts(pr.amplitude_array()[None], lam.amplitudes()[None])
    return int(counts[0])


# --------------------------------------------------------------------------
# epistemic sampling
# --------------------------------------------------------------------------

def pole_rotation(target: np.ndarray) -> np.ndarray:
    """Rotation taking the north pole to ``target`` about the axis pole x target."""
    t = np.asarray(target, dtype=float)
    t = t / np.linalg.norm(t)
    axis = np.cross([0.0, 0.0, 1.0], t)
    s = np.linalg.norm(axis)
    c = t[2]
    if s < 1e-12:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    k = axis / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * (K @ K)


def _vectors_to_amplitudes(vecs: np.ndarray) -> np.ndarray:
    """Qubit amplitudes (cos(theta/2), e^{i phi} sin(theta/2)) of unit Bloch vectors."""
    return _kernels.xyz_to_amplitudes_numpy(vecs[..., 0], vecs[..., 1], vecs[..., 2])


class _Sampler:
    def __init__(self, state: EpistemicState):
        self.state = state
        self.n = state.n
        self.weights = np.array([w for w, _ in state.components])
        self.cum = np.cumsum(self.weights)
        # (components, n, 3, 3)
        self.rot = np.array([
            [pole_rotation(bloch_vector(f)) for f in r.factors] for _, r in state.components
        ])

    def draw(self, rng: np.random.Generator, count: int):
        """Uniforms for ``count`` samples: (component index, (2, count, n) angles)."""
        if len(self.weights) > 1:
            comp = np.searchsorted(self.cum, rng.random(count), side="right")
            comp = np.minimum(comp, len(self.weights) - 1)
        else:
            comp = np.zeros(count, dtype=np.int64)
        return comp, rng.random((2, count, self.n))

    def amplitudes(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """(count, n, 2) qubit amplitudes of ontic samples."""
        comp, u = self.draw(rng, count)
        return _kernels.ontic_amplitudes_numpy(u, comp, self.rot)

    def vectors(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """(count, n, 3) Bloch vectors of ontic samples; same draws as :meth:`amplitudes`."""
        amp = self.amplitudes(rng, count)
        a, b = amp[..., 0], amp[..., 1]
        s = np.conj(a) * b
        return np.stack([2 * s.real, 2 * s.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1)


def sample_ontic(chi: ProductRay | EpistemicState, rng: np.random.Generator) -> OnticState:
    state = chi if isinstance(chi, EpistemicState) else EpistemicState.pure(_qubit_product(chi))
    vec = _Sampler(state).vectors(rng, 1)[0]
    pts = []
    for x, y, z in vec:
        theta = math.acos(min(max(z, -1.0), 1.0))
        pts.append(BlochPoint(theta, math.atan2(y, x) % (2 * math.pi)))
    return OnticState(tuple(pts))


def ontic_vectors(state: EpistemicState, cfg: SimConfig) -> np.ndarray:
    """All ontic samples of a single-worker run, as (samples, n, 3) Bloch vectors."""
    return _Sampler(state).vectors(stream(cfg.seed, 0), cfg.samples)


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------

def _partition(total: int, workers: int) -> list[int]:
    base, extra = divmod(total, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _count(members: np.ndarray, state: EpistemicState, cfg: SimConfig):
    kern = _kernels.get_backend(cfg.backend)
    sampler = _Sampler(state)
    workers = cfg.worker_count()
    sizes = _partition(cfg.samples, workers)

    def run(w: int):
        rng = stream(cfg.seed, w)
        counts = np.zeros(members.shape[0], dtype=np.int64)
        none = multi = 0
        left = sizes[w]
        while left > 0:
            k = min(CHUNK, left)
            comp, u = sampler.draw(rng, k)
            c, a, b = kern.sample_counts(members, u, comp, sampler.rot)
            counts += c
            none += a
            multi += b
            left -= k
        return counts, none, multi

    if workers == 1:
        results = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(workers)))
    counts = sum(r[0] for r in results)
    return counts, sum(r[1] for r in results), sum(r[2] for r in results)


def _as_state(chi) -> EpistemicState:
    if isinstance(chi, EpistemicState):
        return chi
    return EpistemicState.pure(_qubit_product(chi))


def simulate_probability(psi: ProductRay | Ray, state, cfg: SimConfig) -> Estimate:
    """Monte Carlo estimate of the probability of outcome psi."""
    state = _as_state(state)
    pr = _qubit_product(psi, state.n)
    counts, _, _ = _count(pr.amplitude_array()[None], state, cfg)
    p = counts[0] / cfg.samples
    return Estimate(float(p), float(math.sqrt(p * (1 - p) / cfg.samples)))


@dataclass
class BasisFrequencies:
    counts: np.ndarray
    samples: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.samples

    @property
    def std_errors(self) -> np.ndarray:
        f = self.frequencies
        return np.sqrt(f * (1 - f) / self.samples)


class OutcomeError(AssertionError):
    pass


def simulate_basis_measurement(b: Sequence[ProductRay], state, cfg: SimConfig) -> BasisFrequencies:
    """Sample a full product-basis measurement; exactly one member must fire each time."""
    state = _as_state(state)
    members = np.array([_qubit_product(m, state.n).amplitude_array() for m in b])
    counts, none, multi = _count(members, state, cfg)
    if none or multi:
        raise OutcomeError(f"no/multiple outcomes: {none} samples without, {multi} with several")
    return BasisFrequencies(counts, cfg.samples)


def born(psi: Ray | ProductRay, rho: DensityOperator) -> float:
    v = vector_of(psi)
    if v.size != rho.dim:
        raise ValueError(f"dimension mismatch: ray {v.size}, state {rho.dim}")
    p = float(np.real(np.vdot(v, rho.matrix @ v)))
    if p < -1e-12 or p > 1 + 1e-12:
        raise ValueError(f"Born value {p} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


# --------------------------------------------------------------------------
# single-qubit hemisphere integral
# --------------------------------------------------------------------------

def _heaviside(x: float, at_zero: float) -> float:
    if x > 0:
        return 1.0
    if x < 0:
        return 0.0
    return at_zero


def hemisphere_integral(psi_j: Ray, chi_j: Ray, convention: str = "H0", epsabs: float = 1e-10) -> float:
    """Quadrature of (1/pi) H^y(psi.lam) H^0(chi.lam) (chi.lam) over the sphere.

    Spherical coordinates are taken with chi along the first axis and psi in
    the first two axes' plane, so both Heaviside jumps sit at fixed azimuths
    which are passed to the integrator as breakpoints.
    """
    at_zero = {"H0": 0.0, "H1": 1.0}[convention]
    c = bloch_vector(chi_j)
    p = bloch_vector(psi_j)
    e1 = c / np.linalg.norm(c)
    rest = p - (p @ e1) * e1
    if np.linalg.norm(rest) < 1e-12:
        trial = np.array([1.0, 0.0, 0.0]) if abs(e1[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        rest = trial - (trial @ e1) * e1
    e2 = rest / np.linalg.norm(rest)
    e3 = np.cross(e1, e2)
    alpha = math.atan2(p @ e2, p @ e1)

    def wrap(x):
        return (x + math.pi) % (2 * math.pi) - math.pi

    breaks = sorted({wrap(b) for b in (-math.pi / 2, math.pi / 2, alpha - math.pi / 2, alpha + math.pi / 2)}
                    - {-math.pi, math.pi})

    def integrand(phi, theta):
        st = math.sin(theta)
        lam = st * math.cos(phi) * e1 + st * math.sin(phi) * e2 + math.cos(theta) * e3
        cl = float(c @ lam)
        pl = float(p @ lam)
        return _heaviside(pl, at_zero) * _heaviside(cl, 0.0) * cl * st / math.pi

    def inner(theta):
        val, _ = integrate.quad(integrand, -math.pi, math.pi, args=(theta,), points=breaks,
                                epsabs=epsabs, epsrel=0.0, limit=200)
        return val

    val, _ = integrate.quad(inner, 0.0, math.pi, epsabs=epsabs, epsrel=0.0, limit=200)
    return float(val)
