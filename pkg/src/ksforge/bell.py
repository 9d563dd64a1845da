"""Bell scenarios with binary outcomes and their contextuality hypergraphs.

Events are written ``"a|x"`` with one character per party, e.g. ``"01|10"``
means party 0 used setting 1 and saw 0, party 1 used setting 0 and saw 1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ksforge import lp
from ksforge.rays import ProductRay, Ray, as_product, is_orthogonal, ket, qubit
from ksforge.scenario import (
    DensityOperator, ProbModel, Scenario, ScenarioError, Verdict, check_model,
    enumerate_ks_colourings, is_classical_model, is_colouring, quantum_model,
    scenario_from_rays,
)

BEHAVIOUR_TOL = 1e-9
MAX_DETERMINISTIC = 10**6
MAX_HYPERGRAPH_PARTIES = 3
MAX_HYPERGRAPH_SETTINGS = 3


class GuardError(ValueError):
    """An instance exceeds the size limits of an exponential enumeration."""


@dataclass(frozen=True)
class BellScenario:
    settings: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(k) for k in self.settings)
        if len(s) < 2:
            raise ValueError("a Bell scenario needs at least two parties")
        if any(k < 1 or k > 10 for k in s):
            raise ValueError("each party needs between 1 and 10 settings")
        object.__setattr__(self, "settings", s)

    @property
    def parties(self) -> int:
        return len(self.settings)

    def setting_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(k) for k in self.settings)))

    def outcome_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product((0, 1), repeat=self.parties))

    def events(self) -> list[str]:
        return [event(a, x) for x in self.setting_tuples() for a in self.outcome_tuples()]


def event(a: Sequence[int], x: Sequence[int]) -> str:
    return "".join(map(str, a)) + "|" + "".join(map(str, x))


def parse_event(e: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    a, x = e.split("|")
    return tuple(int(c) for c in a), tuple(int(c) for c in x)


@dataclass
class Behaviour:
    scenario: BellScenario
    p: dict[str, float]

    def __post_init__(self):
        self.p = {k: float(v) for k, v in self.p.items()}
        validate_behaviour(self)

    def vector(self) -> np.ndarray:
        return np.array([self.p[e] for e in self.scenario.events()])

    def to_json(self) -> dict:
        return {"parties": self.scenario.parties, "settings": list(self.scenario.settings),
                "p": {e: self.p[e] for e in self.scenario.events()}}

    @classmethod
    def from_json(cls, obj: dict) -> "Behaviour":
        b = BellScenario(tuple(obj["settings"]))
        if obj.get("parties", b.parties) != b.parties:
            raise ValueError("'parties' disagrees with the length of 'settings'")
        return cls(b, dict(obj["p"]))


def validate_behaviour(beh: Behaviour, tol: float = BEHAVIOUR_TOL) -> None:
    b, p = beh.scenario, beh.p
    events = b.events()
    if set(p) != set(events):
        missing = sorted(set(events) - set(p))[:4]
        extra = sorted(set(p) - set(events))[:4]
        raise ValueError(f"behaviour events mismatch (missing {missing}, unexpected {extra})")
    for e in events:
        if p[e] < -tol or p[e] > 1 + tol:
            raise ValueError(f"p({e}) = {p[e]} is not a probability")
    outs = b.outcome_tuples()
    for x in b.setting_tuples():
        total = sum(p[event(a, x)] for a in outs)
        if abs(total - 1.0) > tol:
            raise ValueError(f"p(.|{''.join(map(str, x))}) sums to {total}")
    # marginal of the other parties must not depend on party r's setting
    for r in range(b.parties):
        for x in b.setting_tuples():
            if x[r] == 0:
                continue
            x0 = x[:r] + (0,) + x[r + 1:]
            for a in outs:
                if a[r]:
                    continue
                a1 = a[:r] + (1,) + a[r + 1:]
                m = p[event(a, x)] + p[event(a1, x)]
                m0 = p[event(a, x0)] + p[event(a1, x0)]
                if abs(m - m0) > tol:
                    raise ValueError(f"behaviour signals from party {r} (setting {x} vs {x0})")


@dataclass(frozen=True)
class LocalMeasurementSet:
    """bases[r][k] = (|0^r_k>, |1^r_k>) for party r, setting k."""

    bases: tuple[tuple[tuple[Ray, Ray], ...], ...]

    def __post_init__(self):
        bases = tuple(tuple((Ray(b0.vector), Ray(b1.vector)) for b0, b1 in party) for party in self.bases)
        for r, party in enumerate(bases):
            if not party:
                raise ValueError(f"party {r} has no settings")
            for k, (b0, b1) in enumerate(party):
                if b0.dim != 2 or b1.dim != 2:
                    raise ValueError("local measurements act on qubits")
                if not is_orthogonal(b0, b1):
                    raise ValueError(f"party {r} setting {k}: outcome rays are not orthogonal")
        object.__setattr__(self, "bases", bases)

    @property
    def scenario(self) -> BellScenario:
        return BellScenario(tuple(len(p) for p in self.bases))

    def ray(self, a: Sequence[int], x: Sequence[int]) -> ProductRay:
        return ProductRay(tuple(self.bases[r][x[r]][a[r]] for r in range(len(self.bases))))

    @classmethod
    def from_rays(cls, per_party: Sequence[Sequence[Ray]]) -> "LocalMeasurementSet":
        """Settings given by their outcome-0 rays; outcome 1 is the orthogonal ray."""
        return cls(tuple(tuple((q, q.perp()) for q in party) for party in per_party))


# --------------------------------------------------------------------------
# behaviours
# --------------------------------------------------------------------------

def quantum_behaviour(rho: DensityOperator, m: LocalMeasurementSet) -> Behaviour:
    b = m.scenario
    if rho.dim != 2**b.parties:
        raise ValueError(f"state dimension {rho.dim} does not match {b.parties} qubits")
    p = {}
    for x in b.setting_tuples():
        for a in b.outcome_tuples():
            p[event(a, x)] = min(max(rho.expectation(m.ray(a, x)), 0.0), 1.0)
    return Behaviour(b, p)


def deterministic_count(b: BellScenario) -> int:
    return math.prod(2**k for k in b.settings)


def enumerate_local_deterministic(b: BellScenario) -> list[Behaviour]:
    """One behaviour per outcome function (party, setting) -> {0,1}.

    Order: parties vary slowest-first, each party's response table read as
    a binary string over its settings.
    """
    if deterministic_count(b) > MAX_DETERMINISTIC:
        raise GuardError(f"{deterministic_count(b)} deterministic behaviours exceed {MAX_DETERMINISTIC}")
    tables = [list(itertools.product((0, 1), repeat=k)) for k in b.settings]
    out = []
    for choice in itertools.product(*tables):
        p = {}
        for x in b.setting_tuples():
            fired = tuple(choice[r][x[r]] for r in range(b.parties))
            for a in b.outcome_tuples():
                p[event(a, x)] = 1.0 if a == fired else 0.0
        out.append(Behaviour(b, p))
    return out


LOCAL = "local"
NONLOCAL = "nonlocal"


@dataclass
class LocalityResult:
    verdict: str
    hull: lp.HullResult = field(repr=False)
    events: list[str] = field(repr=False)

    def inequality(self) -> dict:
        """Dual certificate as ``sum_e w_e p(e) <= bound`` (meaningful if nonlocal)."""
        w = {e: float(c) for e, c in zip(self.events, self.hull.normal) if abs(c) > 1e-12}
        return {"coefficients": w, "bound": float(self.hull.bound),
                "violation": float(self.hull.violation)}


def is_local(p: Behaviour) -> LocalityResult:
    validate_behaviour(p)
    b = p.scenario
    V = np.array([d.vector() for d in enumerate_local_deterministic(b)])
    hull = lp.convex_hull_membership(V, p.vector())
    return LocalityResult(LOCAL if hull.member else NONLOCAL, hull, b.events())


def correlator(p: Behaviour, x: Sequence[int]) -> float:
    return sum((-1) ** sum(a) * p.p[event(a, x)] for a in p.scenario.outcome_tuples())


def chsh_value(p: Behaviour) -> float:
    """max over sign placements of |E00 + E01 + E10 + E11| with one term negated."""
    if p.scenario.settings != (2, 2):
        raise ValueError("CHSH needs two parties with two settings each")
    E = [correlator(p, x) for x in ((0, 0), (0, 1), (1, 0), (1, 1))]
    return max(abs(sum(E) - 2 * E[k]) for k in range(4))


def mermin_value(p: Behaviour) -> float:
    """|E000 - E011 - E101 - E110|, maximised over relabelling which setting counts as 0."""
    if p.scenario.settings != (2, 2, 2):
        raise ValueError("the Mermin expression needs three parties with two settings each")
    best = 0.0
    for flip in itertools.product((0, 1), repeat=3):
        def E(*x):
            return correlator(p, tuple(xi ^ f for xi, f in zip(x, flip)))
        best = max(best, abs(E(0, 0, 0) - E(0, 1, 1) - E(1, 0, 1) - E(1, 1, 0)))
    return best


# --------------------------------------------------------------------------
# hypergraph of adaptive measurements
# --------------------------------------------------------------------------

def _leaf_sets(settings: tuple[int, ...]):
    n = len(settings)

    @lru_cache(maxsize=None)
    def strategies(remaining: frozenset) -> frozenset:
        # each strategy is a frozenset of partial events: tuples of (x, a) or None per party
        if not remaining:
            return frozenset({frozenset({(None,) * n})})
        out = set()
        for r in sorted(remaining):
            rest = strategies(remaining - {r})
            for x in range(settings[r]):
                for e0, e1 in itertools.product(rest, repeat=2):
                    leaves = set()
                    for a, sub in ((0, e0), (1, e1)):
                        for leaf in sub:
                            leaves.add(leaf[:r] + ((x, a),) + leaf[r + 1:])
                    out.add(frozenset(leaves))
        return frozenset(out)

    return strategies(frozenset(range(n)))


def bell_hypergraph(b: BellScenario) -> Scenario:
    """Events as vertices; one hyperedge per distinct adaptive strategy."""
    if b.parties > MAX_HYPERGRAPH_PARTIES or max(b.settings) > MAX_HYPERGRAPH_SETTINGS:
        raise GuardError(
            f"adaptive enumeration limited to {MAX_HYPERGRAPH_PARTIES} parties "
            f"and {MAX_HYPERGRAPH_SETTINGS} settings per party"
        )
    edges = []
    for leaves in _leaf_sets(b.settings):
        edges.append(tuple(event([a for _, a in leaf], [x for x, _ in leaf]) for leaf in leaves))
    return Scenario(tuple(b.events()), tuple(edges))


def behaviours_as_models(p: Behaviour, h: Scenario) -> ProbModel:
    if set(h.vertices) != set(p.scenario.events()):
        raise ValueError("hypergraph and behaviour have different events")
    model = ProbModel({v: p.p[v] for v in h.vertices})
    try:
        check_model(h, model, tol=BEHAVIOUR_TOL)
    except ScenarioError as exc:
        raise ScenarioError(f"behaviour is signalling: {exc}") from None
    return model


def locally_orthogonal(e1: str, e2: str) -> bool:
    (a1, x1), (a2, x2) = parse_event(e1), parse_event(e2)
    return any(x1[r] == x2[r] and a1[r] != a2[r] for r in range(len(a1)))


# --------------------------------------------------------------------------
# rays -> Bell scenario
# --------------------------------------------------------------------------

@dataclass
class Extension:
    measurements: LocalMeasurementSet
    scenario: BellScenario
    rays: dict[str, ProductRay]  # S' keyed by event
    events_of: list[str]  # event of each input ray, in input order


def extend_rays_to_bell(S: Sequence[ProductRay | Ray]) -> Extension:
    prods = []
    for r in S:
        pr = as_product(r)
        if pr is None:
            raise ValueError("extend_rays_to_bell needs product rays")
        if any(d != 2 for d in pr.dims):
            raise ValueError("extend_rays_to_bell needs qubit factors")
        prods.append(pr)
    if not prods:
        raise ValueError("no rays given")
    n = prods[0].n
    if any(p.n != n for p in prods):
        raise ValueError("rays act on different numbers of qubits")
    if n < 2:
        raise ValueError("a Bell scenario needs at least two qubits")

    kept: list[list[Ray]] = [[] for _ in range(n)]
    for pr in prods:
        for r, q in enumerate(pr.factors):
            if not any(q == k or is_orthogonal(q, k) for k in kept[r]):
                kept[r].append(q)
    m = LocalMeasurementSet.from_rays(kept)
    b = m.scenario

    def locate(r: int, q: Ray) -> tuple[int, int]:
        for x, (b0, b1) in enumerate(m.bases[r]):
            if q == b0:
                return x, 0
            if q == b1:
                return x, 1
        raise AssertionError("local ray lost during extension")

    events_of = []
    for pr in prods:
        xa = [locate(r, q) for r, q in enumerate(pr.factors)]
        events_of.append(event([a for _, a in xa], [x for x, _ in xa]))
    rays = {event(a, x): m.ray(a, x) for x in b.setting_tuples() for a in b.outcome_tuples()}
    return Extension(m, b, rays, events_of)


# --------------------------------------------------------------------------
# from KS-contextuality to Bell nonlocality
# --------------------------------------------------------------------------

def theorem4_pipeline(S: Sequence[ProductRay], rho: DensityOperator) -> dict:
    """Check the route from a non-classical product-ray model to a Bell violation.

    Returns a JSON-ready report.  ``checks`` lists named boolean checks;
    ``ok`` is their conjunction.
    """
    S = list(S)
    ext = extend_rays_to_bell(S)
    b = ext.scenario
    if b.parties > MAX_HYPERGRAPH_PARTIES:
        raise GuardError("pipeline limited to three parties")

    # H and its quantum model
    H, aH = scenario_from_rays(S, ids=ext.events_of)
    pH = quantum_model(H, aH, rho)
    clsH = is_classical_model(H, pH)

    # G over the extended set, H' from adaptive strategies
    events = list(ext.rays)
    G, _ = scenario_from_rays([ext.rays[e] for e in events], ids=events)
    Hp = bell_hypergraph(b)
    gE, hE = G.edge_sets(), Hp.edge_sets()
    extra = sorted((sorted(e) for e in gE - hE))
    det = enumerate_local_deterministic(b)

    lo_ok = all(locally_orthogonal(u, v) for e in extra for u, v in itertools.combinations(e, 2))
    sums = [[sum(d.p[v] for v in e) for d in det] for e in extra]
    saturated = all(abs(s - 1.0) < 1e-12 for row in sums for s in row)
    bound_ok = all(s <= 1.0 + 1e-12 for row in sums for s in row)
    cols_Hp = enumerate_ks_colourings(Hp)
    det_models = {tuple(d.p[v] for v in Hp.vertices) for d in det}
    col_models = {tuple(float(c[v]) for v in Hp.vertices) for c in cols_Hp}
    bijection = det_models == col_models
    same_classical = all(is_colouring(G, {v: int(d.p[v]) for v in G.vertices}) for d in det)

    beh = quantum_behaviour(rho, ext.measurements)
    consistent = all(abs(pH[v] - beh.p[v]) <= 1e-9 for v in H.vertices)
    loc = is_local(beh)
    implication = clsH.verdict != Verdict.NON_CLASSICAL or loc.verdict == NONLOCAL

    report = {
        "rays": len(S),
        "parties": b.parties,
        "settings": list(b.settings),
        "H": {"vertices": len(H.vertices), "hyperedges": len(H.hyperedges),
              "classicality": clsH.verdict.value},
        "G": {"vertices": len(G.vertices), "hyperedges": len(G.hyperedges)},
        "H_prime": {"hyperedges": len(Hp.hyperedges)},
        "extra_hyperedges": len(extra),
        "shared_hyperedges": len(gE & hE),
        "deterministic_behaviours": len(det),
        "locality": loc.verdict,
        "checks": {
            "extra_locally_orthogonal": lo_ok,
            "extra_inequality_holds": bound_ok,
            "extra_saturated_by_deterministic": saturated,
            "deterministic_equals_colourings": bijection,
            "deterministic_colour_G": same_classical,
            "model_matches_behaviour": consistent,
            "nonclassical_implies_nonlocal": implication,
        },
    }
    if loc.verdict == NONLOCAL:
        report["violated_inequality"] = loc.inequality()
    if b.settings == (2, 2):
        report["chsh"] = chsh_value(beh)
    if b.settings == (2, 2, 2):
        report["mermin"] = mermin_value(beh)
    report["ok"] = all(report["checks"].values())
    return report


# --------------------------------------------------------------------------
# demos
# --------------------------------------------------------------------------

def singlet() -> DensityOperator:
    return DensityOperator.pure(Ray([0, 1, -1, 0]))


def ghz(n: int = 3) -> DensityOperator:
    v = np.zeros(2**n)
    v[0] = v[-1] = 1
    return DensityOperator.pure(Ray(v))


def chsh_measurements() -> LocalMeasurementSet:
    """Z-X plane: party A at 0 and pi/2, party B at pi/4 and 3pi/4."""
    A = [qubit(0.0, 0.0), qubit(math.pi / 2, 0.0)]
    B = [qubit(math.pi / 4, 0.0), qubit(3 * math.pi / 4, 0.0)]
    return LocalMeasurementSet.from_rays([A, B])


def mermin_measurements() -> LocalMeasurementSet:
    """X and Y on each of three qubits."""
    return LocalMeasurementSet.from_rays([[ket("+").factors[0], ket("i").factors[0]]] * 3)


def all_rays(m: LocalMeasurementSet) -> list[ProductRay]:
    b = m.scenario
    return [m.ray(a, x) for x in b.setting_tuples() for a in b.outcome_tuples()]


DEMOS = {
    "chsh": lambda: (all_rays(chsh_measurements()), singlet()),
    "mermin": lambda: (all_rays(mermin_measurements()), ghz(3)),
}


def named_state(name: str, n: int = 2) -> DensityOperator:
    if name == "singlet":
        return singlet()
    if name == "ghz":
        return ghz(n)
    if name in ("maximally-mixed", "mixed"):
        return DensityOperator.maximally_mixed(2**n)
    raise KeyError(f"unknown state {name!r}")
