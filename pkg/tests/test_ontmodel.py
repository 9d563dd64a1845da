import math

import numpy as np
import pytest

from ksforge.ontmodel import (
    EpistemicState, OnticState, OutcomeError, SimConfig, born, hemisphere_integral,
    ontic_vectors, pole_rotation, response, sample_ontic, simulate_basis_measurement,
    simulate_probability, stream,
)
from ksforge.rays import BlochPoint, ProductRay, Ray, bloch_vector, ket, qubit
from ksforge.scenario import DensityOperator


def test_pole_rotation():
    for t in ([0, 0, 1], [0, 0, -1], [1, 0, 0], [0.3, -0.4, 0.5]):
        R = pole_rotation(t)
        assert np.allclose(R @ R.T, np.eye(3))
        assert np.isclose(np.linalg.det(R), 1)
        assert np.allclose(R @ [0, 0, 1], np.array(t) / np.linalg.norm(t))


def test_response_at_specific_ontic_states():
    lam = OnticState((BlochPoint(0.1, 0.0),))
    assert response(ket("0"), lam) == 1
    assert response(ket("1"), lam) == 0
    # ontic state equal to psi always responds
    lam2 = OnticState((BlochPoint(1.2, 0.7), BlochPoint(2.0, 4.0)))
    psi = ProductRay((qubit(1.2, 0.7), qubit(2.0, 4.0)))
    assert response(psi, lam2) == 1
    with pytest.raises(ValueError):
        response(ket("0"), lam2)


def test_samples_lie_in_hemisphere_with_cosine_density():
    chi = ket("i")
    v = ontic_vectors(EpistemicState.pure(chi), SimConfig(200_000, 5))[:, 0]
    c = v @ bloch_vector(chi.factors[0])
    assert np.all(c >= -1e-12)
    # E[cos] = 2/3, E[cos^2] = 1/2 for density cos/pi on the hemisphere
    assert abs(c.mean() - 2 / 3) < 5e-3
    assert abs((c**2).mean() - 1 / 2) < 5e-3
    assert np.allclose(np.linalg.norm(v, axis=1), 1)


def test_sample_ontic_single():
    lam = sample_ontic(ket("0+"), stream(1))
    assert lam.n == 2
    assert lam.points[0].theta <= math.pi / 2 + 1e-12


def test_seeded_runs_repeat_and_differ():
    cfg = SimConfig(50_000, 11)
    a = simulate_probability(ket("+0"), ket("0i"), cfg)
    b = simulate_probability(ket("+0"), ket("0i"), cfg)
    c = simulate_probability(ket("+0"), ket("0i"), SimConfig(50_000, 12))
    assert a == b and a != c


def test_worker_partition_is_deterministic():
    cfg = SimConfig(30_001, 4, jobs=3)
    a = simulate_probability(ket("+"), ket("0"), cfg)
    b = simulate_probability(ket("+"), ket("0"), cfg)
    assert a == b


def test_jobs_from_environment(monkeypatch):
    monkeypatch.setenv("KSFORGE_JOBS", "2")
    assert SimConfig(10, 1).worker_count() == 2
    assert SimConfig(10, 1, jobs=3).worker_count() == 3


def test_psi_equal_chi_gives_one():
    est = simulate_probability(ket("j+"), ket("j+"), SimConfig(20_000, 3))
    assert est.estimate == 1.0
    est = simulate_probability(ket("j-"), ket("j+"), SimConfig(20_000, 3))
    assert est.estimate == 0.0


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_basis_measurement_one_outcome(backend):
    b = [ket(x) for x in ("000", "+10", "0+1", "10+", "111", "-10", "0-1", "10-")]
    freq = simulate_basis_measurement(b, ket("+++"), SimConfig(40_000, 8, backend=backend))
    assert freq.counts.sum() == 40_000
    rho = DensityOperator.pure(ket("+++"))
    for f, m in zip(freq.frequencies, b):
        assert abs(f - born(m, rho)) < 5 * math.sqrt(0.25 / 40_000)


def test_incomplete_set_raises_outcome_error():
    with pytest.raises(OutcomeError):
        simulate_basis_measurement([ket("0")], ket("+"), SimConfig(1000, 1))


def test_mixture_matches_born():
    state = EpistemicState.mixture([0.3, 0.7], [ket("0+"), ket("1i")])
    est = simulate_probability(ket("++"), state, SimConfig(200_000, 2))
    p = born(ket("++"), state.density())
    assert abs(est.estimate - p) < 4 * est.std_error


def test_state_validation():
    with pytest.raises(ValueError):
        EpistemicState.mixture([0.5, 0.6], [ket("0"), ket("1")])
    with pytest.raises(ValueError):
        EpistemicState.mixture([0.5, 0.5], [ket("0"), ket("11")])
    with pytest.raises(ValueError):
        SimConfig(0, 1)
    with pytest.raises(ValueError):
        simulate_probability(Ray([1, 0, 0, 1]), ket("00"), SimConfig(10, 1))


@pytest.mark.parametrize("phi", [0.0, 1.0, 2.5])
def test_hemisphere_integral_closed_form(phi):
    psi = qubit(phi, 0.3)
    chi = qubit(0.0, 0.0)
    for conv in ("H0", "H1"):
        assert abs(hemisphere_integral(psi, chi, conv) - (1 + math.cos(phi)) / 2) < 1e-6
