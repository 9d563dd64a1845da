"""``ksforge`` command line.

Reports go to stdout as JSON; diagnostics go to stderr.  Exit status is 0
on success, 1 when a verification or statistical check fails and 2 for
usage or input errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from ksforge import bell, catalog, colouring, ontmodel
from ksforge.rays import ProductRay, Ray, as_product, ket
from ksforge.scenario import DensityOperator, ScenarioError, find_ks_colouring, is_colouring

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
Z_LIMIT = 4.0


class UsageError(Exception):
    pass


def _die(msg: str) -> UsageError:
    return UsageError(msg)


# --------------------------------------------------------------------------
# input helpers
# --------------------------------------------------------------------------

def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise _die(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise _die(f"{path}: malformed JSON ({exc})") from None


def _parse_ray(obj) -> ProductRay | Ray:
    if isinstance(obj, str):
        try:
            return ket(obj)
        except KeyError:
            raise _die(f"bad ray label {obj!r}; use characters from 01+-ij") from None
    if isinstance(obj, dict) and "factors" in obj:
        return ProductRay.from_json(obj)
    if isinstance(obj, dict) and "amplitudes" in obj:
        return Ray.from_json(obj)
    raise _die(f"cannot read a ray from {obj!r}")


def _ray_arg(text: str):
    """A ray label such as ``0+1`` or a path to a JSON ray."""
    if os.path.exists(text):
        return _parse_ray(_load_json(text))
    return _parse_ray(text)


def _state_arg(text: str) -> ontmodel.EpistemicState:
    """Product-state label, ray JSON, or {"mixture": [[w, ray], ...]}."""
    if os.path.exists(text):
        obj = _load_json(text)
        if isinstance(obj, dict) and "mixture" in obj:
            ws = [float(w) for w, _ in obj["mixture"]]
            rays = [_product(_parse_ray(r)) for _, r in obj["mixture"]]
            return ontmodel.EpistemicState.mixture(ws, rays)
        return ontmodel.EpistemicState.pure(_product(_parse_ray(obj)))
    return ontmodel.EpistemicState.pure(_product(_parse_ray(text)))


def _product(r) -> ProductRay:
    pr = as_product(r)
    if pr is None:
        raise _die("expected a product ray")
    return pr


def _density_arg(text: str, n: int = 2) -> DensityOperator:
    if os.path.exists(text):
        obj = _load_json(text)
        if isinstance(obj, dict) and "matrix" in obj:
            return DensityOperator.from_json(obj)
        return DensityOperator.pure(_parse_ray(obj))
    try:
        return bell.named_state(text, n)
    except KeyError:
        pass
    return DensityOperator.pure(_parse_ray(text))


def _digest(args: argparse.Namespace) -> str:
    h = hashlib.sha256()
    items = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "jobs")}
    h.update(json.dumps(items, sort_keys=True, default=str).encode())
    for v in items.values():
        if isinstance(v, str) and os.path.isfile(v):
            h.update(Path(v).read_bytes())
    return h.hexdigest()


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _check(name, expected, observed, passed=None) -> dict:
    if passed is None:
        passed = expected == observed
    return {"name": name, "expected": expected, "observed": observed, "pass": bool(passed)}


# --------------------------------------------------------------------------
# commands; each returns (results, checks)
# --------------------------------------------------------------------------

def cmd_catalog(args):
    if args.action == "list":
        return {"entries": catalog.names()}, []
    if args.name == "all" and args.action == "verify":
        wanted = catalog.names()
    elif args.name in catalog.names():
        wanted = [args.name]
    else:
        raise _die(f"unknown catalog entry {args.name!r}; known: {', '.join(catalog.names())}")
    results, checks = {}, []
    for name in wanted:
        print(f"building {name}", file=sys.stderr)
        entry = catalog.build(name)
        results[name] = {k: v for k, v in entry.expected.items()}
        checks += [dict(c.to_json(), name=f"{name}.{c.name}") for c in entry.checks()]
        if args.action == "build":
            out = args.out or f"{name}.json"
            Path(out).write_text(json.dumps(entry.to_json(), indent=1) + "\n")
            results[name]["written"] = out
    return results, checks


def cmd_colour(args):
    try:
        s, a = catalog.scenario_from_json(_load_json(args.scenario))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise _die(f"{args.scenario}: invalid scenario ({exc})") from None
    checks = []
    if args.north:
        if a is None:
            raise _die("--north needs rays in the scenario file")
        try:
            c = colouring.all_north_colouring(s, a)
        except ScenarioError as exc:
            raise _die(str(exc)) from None
        checks.append(_check("all_north_is_colouring", True, is_colouring(s, c)))
        found = find_ks_colouring(s)
        checks.append(_check("solver_agrees_colourable", True, found is not None))
    else:
        c = find_ks_colouring(s)
    if c is None:
        return {"colouring": "UNCOLOURABLE", "colourable": False}, checks
    return {"colourable": True, "colouring": dict(c),
            "ones": [v for v in s.vertices if c[v] == 1]}, checks


def cmd_northcheck(args):
    if args.n < 1 or args.trials < 1:
        raise _die("--n and --trials must be positive")
    res = colouring.northcheck(args.n, args.trials, args.seed, family=args.family)
    return res, [_check("bases_without_exactly_one_all_north", 0, res["failures"])]


def _z(p_hat: float, p: float, n: int) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0 if p_hat == p else math.inf
    return (p_hat - p) / math.sqrt(p * (1 - p) / n)


def cmd_simulate(args):
    state = _state_arg(args.chi)
    cfg = ontmodel.SimConfig(args.samples, args.seed, jobs=args.jobs)
    rho = state.density()
    if args.basis:
        if args.basis == "eq1":
            members = list(catalog.nonlocal_basis_eq1())
        else:
            obj = _load_json(args.basis)
            rays = obj["rays"] if isinstance(obj, dict) else obj
            members = [_product(_parse_ray(r)) for r in rays]
        if any(m.n != state.n for m in members):
            raise _die(f"qubit-count mismatch: basis vs state on {state.n} qubits")
        freq = ontmodel.simulate_basis_measurement(members, state, cfg)
        born = [ontmodel.born(m, rho) for m in members]
        zs = [_z(float(f), b, args.samples) for f, b in zip(freq.frequencies, born)]
        results = {"frequencies": freq.frequencies.tolist(), "born": born, "z": zs,
                   "samples": args.samples}
        checks = [_check("max_abs_z_within_limit", f"<= {Z_LIMIT}", max(abs(z) for z in zs),
                         max(abs(z) for z in zs) <= Z_LIMIT)]
    else:
        psi = _product(_ray_arg(args.psi))
        if psi.n != state.n:
            raise _die(f"qubit-count mismatch: psi has {psi.n} qubits, chi has {state.n}")
        est = ontmodel.simulate_probability(psi, state, cfg)
        born = ontmodel.born(psi, rho)
        z = _z(est.estimate, born, args.samples)
        results = {"estimate": est.estimate, "std_error": est.std_error, "born": born, "z": z,
                   "samples": args.samples}
        checks = [_check("abs_z_within_limit", f"<= {Z_LIMIT}", abs(z), abs(z) <= Z_LIMIT)]
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return results, checks


def cmd_bell(args):
    if args.action == "chsh":
        rho = _density_arg(args.state, 2)
        beh = bell.quantum_behaviour(rho, bell.chsh_measurements())
        loc = bell.is_local(beh)
        value = bell.chsh_value(beh)
        results = {"chsh": value, "locality": loc.verdict, "behaviour": beh.to_json()["p"]}
        if loc.verdict == bell.NONLOCAL:
            results["violated_inequality"] = loc.inequality()
        consistent = (value > 2 + 1e-9) <= (loc.verdict == bell.NONLOCAL)
        return results, [_check("chsh_violation_implies_nonlocal", True, consistent)]
    if args.action == "hypergraph":
        b = bell.BellScenario(tuple(args.settings))
        h = bell.bell_hypergraph(b)
        return {"vertices": list(h.vertices), "hyperedges": [list(e) for e in h.hyperedges],
                "counts": {"vertices": len(h.vertices), "hyperedges": len(h.hyperedges)}}, []
    # pipeline
    if args.demo:
        S, rho = bell.DEMOS[args.demo]()
    else:
        if not (args.rays and args.state):
            raise _die("pipeline needs --demo, or both --rays and --state")
        obj = _load_json(args.rays)
        S = [_product(_parse_ray(r)) for r in (obj["rays"] if isinstance(obj, dict) else obj)]
        rho = _density_arg(args.state, S[0].n if S else 2)
    report = bell.theorem4_pipeline(S, rho)
    checks = [_check(k, True, v) for k, v in report["checks"].items()]
    return report, checks


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ksforge", description=__doc__.splitlines()[0])
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads for simulation (default: $KSFORGE_JOBS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("catalog", help="build and verify the named scenarios")
    csub = c.add_subparsers(dest="action", required=True)
    csub.add_parser("list")
    cb = csub.add_parser("build")
    cb.add_argument("name")
    cb.add_argument("--out")
    cv = csub.add_parser("verify")
    cv.add_argument("name", help="entry name or 'all'")
    c.set_defaults(func=cmd_catalog)

    col = sub.add_parser("colour", help="find a KS-colouring of a scenario file")
    col.add_argument("scenario")
    col.add_argument("--north", action="store_true", help="use the all-north colouring")
    col.set_defaults(func=cmd_colour)

    nc = sub.add_parser("northcheck", help="exactly one all-north ray in random product bases")
    nc.add_argument("--n", type=int, required=True)
    nc.add_argument("--trials", type=int, required=True)
    nc.add_argument("--seed", type=int, required=True)
    nc.add_argument("--family", choices=("split", "mixed"), default="mixed")
    nc.set_defaults(func=cmd_northcheck)

    sm = sub.add_parser("simulate", help="Monte Carlo of the hidden-variable model")
    sm.add_argument("--psi", help="measured product ray (label or JSON file)")
    sm.add_argument("--chi", required=True, help="prepared product state or mixture")
    sm.add_argument("--basis", help="product basis JSON, or 'eq1'")
    sm.add_argument("--samples", type=int, default=10**6)
    sm.add_argument("--seed", type=int, required=True)
    sm.add_argument("--out")
    sm.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bell", help="Bell scenarios and the product-ray pipeline")
    bsub = b.add_subparsers(dest="action", required=True)
    bc = bsub.add_parser("chsh")
    bc.add_argument("--state", default="singlet")
    bp = bsub.add_parser("pipeline")
    bp.add_argument("--demo", choices=sorted(bell.DEMOS))
    bp.add_argument("--rays")
    bp.add_argument("--state")
    bh = bsub.add_parser("hypergraph")
    bh.add_argument("--settings", type=int, nargs="+", default=[2, 2])
    b.set_defaults(func=cmd_bell)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and not args.basis and not args.psi:
        parser.error("simulate needs --psi or --basis")
    if getattr(args, "samples", 1) is not None and getattr(args, "samples", 1) < 1:
        parser.error("--samples must be at least 1")
    t0 = time.perf_counter()
    try:
        results, checks = args.func(args)
    except (UsageError, bell.GuardError, ScenarioError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"ksforge: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except ontmodel.OutcomeError as exc:
        print(f"ksforge: {exc}", file=sys.stderr)
        results, checks = {}, [_check("exactly_one_outcome", True, False)]
    passed = all(c["pass"] for c in checks)
    report = {
        "command": " ".join([args.command] + ([args.action] if getattr(args, "action", None) else [])),
        "inputs_digest": _digest(args),
        "seed": getattr(args, "seed", None),
        "results": results,
        "checks": checks,
        "pass": passed,
        "wall_clock": round(time.perf_counter() - t0, 6),
    }
    _emit(report)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
