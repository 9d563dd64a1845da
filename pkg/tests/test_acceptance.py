"""Acceptance suite: twelve criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines, or
``python3 tests/test_acceptance.py`` for a plain summary.
"""
import json
import math
import time

import numpy as np
import pytest

from ksforge import bell, catalog
from ksforge.catalog import complete_pairs, peres33_rays, unentangled_ks_set
from ksforge.colouring import all_north_colouring, northcheck, random_observable, valuation_from_colouring
from ksforge.colouring import haar_qubit
from ksforge.ontmodel import SimConfig, hemisphere_integral, simulate_probability
from ksforge.rays import ProductRay, Ray, qubit
from ksforge.scenario import (
    Verdict, enumerate_ks_colourings, find_ks_colouring, is_classical_model, is_colouring,
)

RESULTS: dict[int, dict] = {}


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def announce(n, ok, detail):
    print(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


# --------------------------------------------------------------------------
# criteria as report builders
# --------------------------------------------------------------------------

def c1():
    (s, _), dt = timed(lambda: complete_pairs(peres33_rays()))
    rep = {"vertices": len(s.vertices), "hyperedges": len(s.hyperedges)}
    ok = rep == {"vertices": 57, "hyperedges": 40} and dt < 1.0
    return rep, ok, f"{rep['vertices']} rays / {rep['hyperedges']} bases in {dt:.3f}s"


def c2():
    rep, times = {}, {}
    for name in ("peres57", "peres_mermin"):
        e = catalog.build(name)
        col, times[name] = timed(lambda: find_ks_colouring(e.scenario))
        rep[name] = "UNCOLOURABLE" if col is None else "COLOURABLE"
    ok = all(v == "UNCOLOURABLE" for v in rep.values()) and max(times.values()) < 10
    return rep, ok, ", ".join(f"{k} {v} ({times[k]:.2f}s)" for k, v in rep.items())


def c3():
    e, dt = timed(lambda: catalog.build("two_qubit_ks"))
    col = find_ks_colouring(e.scenario)
    extra = {c.name.split(".")[-1]: c.observed for c in e.checks()}
    rep = {
        "colourable": col is not None,
        "min_cross_overlap": round(e.expected["min_cross_overlap"], 12),
        "fully_entangled_hyperedges": extra["fully_entangled_hyperedges"],
        "vertices": len(e.scenario.vertices),
        "hyperedges": len(e.scenario.hyperedges),
    }
    ok = (not rep["colourable"] and rep["min_cross_overlap"] > 1e-9
          and rep["fully_entangled_hyperedges"] == 0 and e.passed and dt < 60)
    return rep, ok, (f"UNCOLOURABLE={not rep['colourable']}, min overlap {rep['min_cross_overlap']:.4g}, "
                     f"fully entangled bases {rep['fully_entangled_hyperedges']} ({dt:.1f}s)")


def c4():
    def run():
        return {n: northcheck(n, 10_000, seed=1000 + n, family="mixed") for n in (2, 3, 4, 5)}
    res, dt = timed(run)
    rep = {str(n): {"failures": r["failures"], "histogram": r["histogram"]} for n, r in res.items()}
    fails = sum(r["failures"] for r in res.values())
    return rep, fails == 0 and dt < 60, f"4 x 10^4 bases, {fails} failures ({dt:.1f}s)"


def c5():
    rep = {}
    for name in catalog.names():
        e = catalog.build(name)
        if not e.qubit_product:
            continue
        c = all_north_colouring(e.scenario, e.assignment)
        sums = {sum(c[v] for v in h) for h in e.scenario.hyperedges}
        rep[name] = sorted(sums)
    ok = "eq1_basis" in rep and all(v == [1] for v in rep.values())
    return rep, ok, f"{len(rep)} product scenarios, hyperedge sums {sorted({s for v in rep.values() for s in v})}"


def haar_pair(n, rng):
    psi = ProductRay(tuple(Ray(haar_qubit(rng)) for _ in range(n)))
    chi = ProductRay(tuple(Ray(haar_qubit(rng)) for _ in range(n)))
    return psi, chi


def c6():
    N = 10**6
    rng = np.random.default_rng(20240601)
    misses, digest, total = 0, [], 0

    def run():
        nonlocal misses, total
        for n in (1, 2, 3):
            for k in range(100):
                psi, chi = haar_pair(n, rng)
                p = math.prod(abs(np.vdot(a.vector, b.vector)) ** 2 for a, b in zip(psi.factors, chi.factors))
                est = simulate_probability(psi, chi, SimConfig(N, seed=7919 * n + k)).estimate
                sigma = math.sqrt(est * (1 - est) / N)
                misses += abs(est - p) > 3 * sigma
                total += 1
                digest.append(est)
    _, dt = timed(run)
    rate = misses / total
    rep = {"pairs": total, "misses": misses, "estimates": digest}
    return rep, rate <= 0.01 and dt < 300, f"{misses}/{total} outside 3 sigma (rate {rate:.2%}, {dt:.0f}s)"


def c7():
    rep, worst, spread = {}, 0.0, 0.0
    chi = qubit(0.0, 0.0)
    for phi in (0, math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi):
        psi = qubit(phi, 0.0)
        h0 = hemisphere_integral(psi, chi, "H0")
        h1 = hemisphere_integral(psi, chi, "H1")
        target = (1 + math.cos(phi)) / 2
        worst = max(worst, abs(h0 - target), abs(h1 - target))
        spread = max(spread, abs(h0 - h1))
        rep[f"{phi:.6f}"] = [h0, h1]
    ok = worst <= 1e-6 and spread <= 2e-6
    return rep, ok, f"max |I - (1+cos)/2| = {worst:.2e}, max |H0 - H1| = {spread:.2e}"


def c8():
    try:
        unentangled_ks_set([2, 2])
        refused = False
    except ValueError:
        refused = True
    rep = {"refused_2x2": refused}
    for name in ("product_2q_pauli", "product_2q_random", "product_3q_xz"):
        e = catalog.build(name)
        north = all_north_colouring(e.scenario, e.assignment)
        found = find_ks_colouring(e.scenario)
        entry = {"solver_colourable": found is not None, "north_valid": is_colouring(e.scenario, north)}
        if len(e.scenario.vertices) <= 40:
            cols = enumerate_ks_colourings(e.scenario)
            entry["north_among_solutions"] = dict(north) in [dict(c) for c in cols]
        rep[name] = entry
    ok = refused and all(all(v.values()) for k, v in rep.items() if k != "refused_2x2")
    return rep, ok, f"[2,2] refused={refused}; " + ", ".join(
        f"{k} colourable" for k, v in rep.items() if k != "refused_2x2" and all(v.values()))


def c9():
    (e, col), dt = timed(lambda: (lambda e: (e, find_ks_colouring(e.scenario)))(unentangled_ks_set([2, 3])))
    rep = {"vertices": len(e.scenario.vertices), "hyperedges": len(e.scenario.hyperedges),
           "colourable": col is not None}
    ok = rep == {"vertices": 114, "hyperedges": 40, "colourable": False} and dt < 30
    return rep, ok, f"{rep['vertices']} / {rep['hyperedges']}, UNCOLOURABLE={not rep['colourable']} ({dt:.2f}s)"


def c10():
    b = bell.BellScenario((2, 2))
    Hp = bell.bell_hypergraph(b)
    det = {tuple(d.p[v] for v in Hp.vertices) for d in bell.enumerate_local_deterministic(b)}
    cols = {tuple(float(c[v]) for v in Hp.vertices) for c in enumerate_ks_colourings(Hp)}
    bijection = det == cols and len(det) == 16

    beh = bell.quantum_behaviour(bell.singlet(), bell.chsh_measurements())
    chsh = bell.chsh_value(beh)
    loc = bell.is_local(beh).verdict
    cls = is_classical_model(Hp, bell.behaviours_as_models(beh, Hp)).verdict

    sat = {}
    for demo in ("chsh", "mermin"):
        r = bell.theorem4_pipeline(*bell.DEMOS[demo]())
        sat[demo] = {"extra": r["extra_hyperedges"], "saturated": r["checks"]["extra_saturated_by_deterministic"],
                     "ok": r["ok"]}
    rep = {"bijection": bijection, "chsh": chsh, "locality": loc, "classicality": cls.value, "demos": sat}
    ok = (bijection and abs(chsh - 2 * math.sqrt(2)) < 1e-9 and loc == bell.NONLOCAL
          and cls == Verdict.NON_CLASSICAL and all(d["saturated"] and d["ok"] for d in sat.values()))
    return rep, ok, (f"(a) 16<->16 {bijection}; (b) CHSH-2sqrt2 = {chsh - 2 * math.sqrt(2):.1e}, {loc}, "
                     f"{cls.value}; (c) extra edges saturated: chsh {sat['chsh']['extra']}, "
                     f"mermin {sat['mermin']['extra']}")


def c11():
    rng = np.random.default_rng(11)
    worst_spec, worst_func, vals = 0.0, 0.0, []
    for k in range(100):
        A = random_observable(1 + k % 4, rng)
        v = valuation_from_colouring(A)
        worst_spec = max(worst_spec, min(abs(v - l) for l in A.eigenvalues))
        coeffs = rng.normal(size=rng.integers(1, 5))
        g = np.polynomial.Polynomial(coeffs)
        worst_func = max(worst_func, abs(valuation_from_colouring(A.apply(g)) - g(v)))
        vals.append(v)
    rep = {"values": vals}
    ok = worst_spec <= 1e-9 and worst_func <= 1e-9
    return rep, ok, f"100 observables, SPEC err {worst_spec:.1e}, FUNC err {worst_func:.1e}"


CRITERIA = {1: c1, 2: c2, 3: c3, 4: c4, 5: c5, 6: c6, 7: c7, 8: c8, 9: c9, 10: c10, 11: c11}


def run_criterion(n):
    rep, ok, detail = CRITERIA[n]()
    RESULTS[n] = rep
    announce(n, ok, detail)
    return ok


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    assert run_criterion(n)


def canonical(reports):
    return json.dumps(reports, sort_keys=True, default=str)


def test_criterion_12_determinism():
    missing = [n for n in CRITERIA if n not in RESULTS]
    for n in missing:
        RESULTS[n] = CRITERIA[n]()[0]
    first = canonical(RESULTS)
    second = canonical({n: CRITERIA[n]()[0] for n in CRITERIA})
    ok = first == second
    announce(12, ok, f"second run of criteria 1-11 byte-identical={ok} ({len(first)} bytes)")
    assert ok


if __name__ == "__main__":
    results = [run_criterion(n) for n in sorted(CRITERIA)]
    try:
        test_criterion_12_determinism()
        results.append(True)
    except AssertionError:
        results.append(False)
    print(f"{sum(results)}/{len(results)} criteria passed")
