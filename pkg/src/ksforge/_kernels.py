"""Hot loops: the qubit north predicate and Monte Carlo response counting.

Every kernel exists twice, once as a plain numpy implementation and once
compiled with numba.  Both paths perform the same floating point operations
in the same order.  Arithmetic therefore rounds identically; only cos/sin
may differ in the last ulp between numpy and LLVM, so Monte Carlo counts
agree exactly unless a sample lands within an ulp of a hemisphere boundary.

The numba path is used when numba imports cleanly and the environment
variable ``KSFORGE_DISABLE_NUMBA`` is unset (or ``0``/``false``).
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

# Width of the boundary band, in radians, around the equator (on the polar
# angle) and around phi in {0, pi} (on the azimuth).
NORTH_EPS = 1e-9
_SIN_EPS = float(np.sin(NORTH_EPS))


def _disabled_by_env() -> bool:
    flag = os.environ.get("KSFORGE_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def north_mask_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise north test for qubit amplitudes ``a|0> + b|1>``.

    Inputs must be normalised; the test is invariant under a global phase.
    """
    z = (a.real * a.real + a.imag * a.imag) - (b.real * b.real + b.imag * b.imag)
    # s = conj(a) * b, written out so numba and numpy round identically
    s_re = a.real * b.real + a.imag * b.imag
    s_im = a.real * b.imag - a.imag * b.real
    s_abs = np.sqrt(s_re * s_re + s_im * s_im)
    band = _SIN_EPS * s_abs
    equator = np.where(
        s_im < -band, True, np.where(s_im > band, False, s_re > 0.0)
    )
    return np.where(z > _SIN_EPS, True, np.where(z < -_SIN_EPS, False, equator))


def _rotate_numpy(psi_a, psi_b, la, lb):
    # U_lambda = [[conj(la), conj(lb)], [-lb, la]] maps |lambda> to |0>.
    ra = (la.real * psi_a.real + la.imag * psi_a.imag
          + lb.real * psi_b.real + lb.imag * psi_b.imag) \
        + 1j * (la.real * psi_a.imag - la.imag * psi_a.real
                + lb.real * psi_b.imag - lb.imag * psi_b.real)
    rb = (-(lb.real * psi_a.real - lb.imag * psi_a.imag)
          + (la.real * psi_b.real - la.imag * psi_b.imag)) \
        + 1j * (-(lb.real * psi_a.imag + lb.imag * psi_a.real)
                + (la.real * psi_b.imag + la.imag * psi_b.real))
    return ra, rb


def response_counts_numpy(members: np.ndarray, lam: np.ndarray):
    """Count deterministic responses of product rays over ontic samples.

    Parameters
    ----------
    members : complex array (m, n, 2)
        Qubit factors of ``m`` product rays on ``n`` qubits.
    lam : complex array (N, n, 2)
        Ontic states, one qubit ray per subsystem.

    Returns
    -------
    counts : int64 array (m,)
        Number of samples for which each member responds 1.
    n_none, n_multi : int
        Samples where no member, resp. more than one member, responded.
    """
    la = lam[:, None, :, 0]
    lb = lam[:, None, :, 1]
    ra, rb = _rotate_numpy(members[None, :, :, 0], members[None, :, :, 1], la, lb)
    hit = north_mask_numpy(ra, rb).all(axis=2)
    counts = hit.sum(axis=0).astype(np.int64)
    per_sample = hit.sum(axis=1)
    return counts, int((per_sample == 0).sum()), int((per_sample > 1).sum())


def ontic_amplitudes_numpy(u: np.ndarray, comp: np.ndarray, rot: np.ndarray) -> np.ndarray:
    """Map uniforms to ontic qubit amplitudes.

    ``u`` is (2, N, n): the first slice fixes the polar angle t through
    sin^2 t = u, the second the azimuth.  Each local point is rotated by
    ``rot[comp[k], j]`` (rot is (C, n, 3, 3)) and converted to amplitudes
    (cos(theta/2), e^{i phi} sin(theta/2)).  Returns (N, n, 2) complex.
    """
    st = np.sqrt(u[0])
    ct = np.sqrt(1.0 - u[0])
    pp = u[1] * (2.0 * np.pi)
    lx = np.cos(pp) * st
    ly = np.sin(pp) * st
    R = rot[0][None] if rot.shape[0] == 1 else rot[comp]
    x = R[..., 0, 0] * lx + R[..., 0, 1] * ly + R[..., 0, 2] * ct
    y = R[..., 1, 0] * lx + R[..., 1, 1] * ly + R[..., 1, 2] * ct
    z = R[..., 2, 0] * lx + R[..., 2, 1] * ly + R[..., 2, 2] * ct
    return xyz_to_amplitudes_numpy(x, y, z)


def xyz_to_amplitudes_numpy(x, y, z) -> np.ndarray:
    out = np.empty(np.shape(z) + (2,), dtype=complex)
    flat = out.view(float)  # (..., 4): re a, im a, re b, im b
    a = np.sqrt(np.maximum((z + 1.0) * 0.5, 0.0))
    small = a <= 1e-8
    d = np.where(small, 1.0, 2.0 * a)
    flat[..., 0] = a
    flat[..., 1] = 0.0
    # at the south pole b = 1 (phi = 0 gauge)
    flat[..., 2] = np.where(small, 1.0, x / d)
    flat[..., 3] = np.where(small, 0.0, y / d)
    return out


def sample_counts_numpy(members, u, comp, rot):
    """Fused sampling and counting; see :func:`ontic_amplitudes_numpy`."""
    return response_counts_numpy(members, ontic_amplitudes_numpy(u, comp, rot))


def all_north_counts_numpy(bases: np.ndarray) -> np.ndarray:
    """Number of all-north members in each basis of a (B, m, n, 2) batch."""
    mask = north_mask_numpy(bases[..., 0], bases[..., 1]).all(axis=-1)
    return mask.sum(axis=-1).astype(np.int64)


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    sin_eps = _SIN_EPS

    @njit(cache=True, nogil=True)
    def _north(ar, ai, br, bi):
        z = (ar * ar + ai * ai) - (br * br + bi * bi)
        if z > sin_eps:
            return True
        if z < -sin_eps:
            return False
        s_re = ar * br + ai * bi
        s_im = ar * bi - ai * br
        band = sin_eps * np.sqrt(s_re * s_re + s_im * s_im)
        if s_im < -band:
            return True
        if s_im > band:
            return False
        return s_re > 0.0

    @njit(cache=True, nogil=True)
    def response_counts(members, lam):
        m, n = members.shape[0], members.shape[1]
        counts = np.zeros(m, dtype=np.int64)
        n_none = 0
        n_multi = 0
        for k in range(lam.shape[0]):
            hits = 0
            for i in range(m):
                ok = True
                for j in range(n):
                    la = lam[k, j, 0]
                    lb = lam[k, j, 1]
                    pa = members[i, j, 0]
                    pb = members[i, j, 1]
                    ra_re = (la.real * pa.real + la.imag * pa.imag
                             + lb.real * pb.real + lb.imag * pb.imag)
                    ra_im = (la.real * pa.imag - la.imag * pa.real
                             + lb.real * pb.imag - lb.imag * pb.real)
                    rb_re = (-(lb.real * pa.real - lb.imag * pa.imag)
                             + (la.real * pb.real - la.imag * pb.imag))
                    rb_im = (-(lb.real * pa.imag + lb.imag * pa.real)
                             + (la.real * pb.imag + la.imag * pb.real))
                    if not _north(ra_re, ra_im, rb_re, rb_im):
                        ok = False
                        break
                if ok:
                    counts[i] += 1
                    hits += 1
            if hits == 0:
                n_none += 1
            elif hits > 1:
                n_multi += 1
        return counts, n_none, n_multi

    @njit(cache=True, nogil=True)
    def sample_counts(members, u, comp, rot):
        m, n = members.shape[0], members.shape[1]
        N = u.shape[1]
        single = rot.shape[0] == 1
        two_pi = 2.0 * np.pi
        counts = np.zeros(m, dtype=np.int64)
        lam = np.empty((n, 2), dtype=np.complex128)
        n_none = 0
        n_multi = 0
        for k in range(N):
            c = 0 if single else comp[k]
            for j in range(n):
                st = np.sqrt(u[0, k, j])
                ct = np.sqrt(1.0 - u[0, k, j])
                pp = u[1, k, j] * two_pi
                lx = np.cos(pp) * st
                ly = np.sin(pp) * st
                R = rot[c, j]
                x = R[0, 0] * lx + R[0, 1] * ly + R[0, 2] * ct
                y = R[1, 0] * lx + R[1, 1] * ly + R[1, 2] * ct
                z = R[2, 0] * lx + R[2, 1] * ly + R[2, 2] * ct
                a = np.sqrt(max((z + 1.0) * 0.5, 0.0))
                if a <= 1e-8:
                    lam[j, 0] = a
                    lam[j, 1] = 1.0
                else:
                    d = 2.0 * a
                    lam[j, 0] = a
                    lam[j, 1] = complex(x / d, y / d)
            hits = 0
            for i in range(m):
                ok = True
                for j in range(n):
                    la = lam[j, 0]
                    lb = lam[j, 1]
                    pa = members[i, j, 0]
                    pb = members[i, j, 1]
                    ra_re = (la.real * pa.real + la.imag * pa.imag
                             + lb.real * pb.real + lb.imag * pb.imag)
                    ra_im = (la.real * pa.imag - la.imag * pa.real
                             + lb.real * pb.imag - lb.imag * pb.real)
                    rb_re = (-(lb.real * pa.real - lb.imag * pa.imag)
                             + (la.real * pb.real - la.imag * pb.imag))
                    rb_im = (-(lb.real * pa.imag + lb.imag * pa.real)
                             + (la.real * pb.imag + la.imag * pb.real))
                    if not _north(ra_re, ra_im, rb_re, rb_im):
                        ok = False
                        break
                if ok:
                    counts[i] += 1
                    hits += 1
            if hits == 0:
                n_none += 1
            elif hits > 1:
                n_multi += 1
        return counts, n_none, n_multi

    @njit(cache=True, nogil=True)
    def all_north_counts(bases):
        out = np.zeros(bases.shape[0], dtype=np.int64)
        for b in range(bases.shape[0]):
            c = 0
            for i in range(bases.shape[1]):
                ok = True
                for j in range(bases.shape[2]):
                    a = bases[b, i, j, 0]
                    v = bases[b, i, j, 1]
                    if not _north(a.real, a.imag, v.real, v.imag):
                        ok = False
                        break
                if ok:
                    c += 1
            out[b] = c
        return out

    def response_counts_wrapped(members, lam):
        counts, n_none, n_multi = response_counts(
            np.ascontiguousarray(members, dtype=np.complex128),
            np.ascontiguousarray(lam, dtype=np.complex128),
        )
        return counts, int(n_none), int(n_multi)

    def sample_counts_wrapped(members, u, comp, rot):
        counts, n_none, n_multi = sample_counts(
            np.ascontiguousarray(members, dtype=np.complex128),
            np.ascontiguousarray(u, dtype=np.float64),
            np.ascontiguousarray(comp, dtype=np.int64),
            np.ascontiguousarray(rot, dtype=np.float64),
        )
        return counts, int(n_none), int(n_multi)

    def all_north_counts_wrapped(bases):
        return all_north_counts(np.ascontiguousarray(bases, dtype=np.complex128))

    return SimpleNamespace(
        name="numba",
        response_counts=response_counts_wrapped,
        sample_counts=sample_counts_wrapped,
        all_north_counts=all_north_counts_wrapped,
    )


NUMPY = SimpleNamespace(
    name="numpy",
    response_counts=response_counts_numpy,
    sample_counts=sample_counts_numpy,
    all_north_counts=all_north_counts_numpy,
)

try:
    NUMBA = _build_numba()
except ImportError:  # pragma: no cover - numba is optional
    NUMBA = None


def get_backend(name: str | None = None) -> SimpleNamespace:
    """Return the kernel namespace ``name`` ('numba' or 'numpy').

    With no argument the environment decides: numba unless disabled or absent.
    """
    if name is None:
        name = "numpy" if (_disabled_by_env() or NUMBA is None) else "numba"
    if name == "numba":
        if NUMBA is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return NUMBA
    if name == "numpy":
        return NUMPY
    raise ValueError(f"unknown kernel backend {name!r}")
