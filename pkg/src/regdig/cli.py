"""Command-line entry point: ``regdig <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

import numpy as np

from .errors import IoError, RegdigError

log = logging.getLogger("regdig")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def read_config(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{num}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(" ", "").split(",") if x]


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).replace(" ", "").split(",") if x]


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common options")
    g.add_argument("--n", default="40", help="vertex count (comma list for scaling)")
    g.add_argument("--d", type=int, default=3)
    g.add_argument("--p", type=int, default=None, help="prime modulus")
    g.add_argument("--eps", type=float, default=0.01)
    g.add_argument("--b", type=float, default=10.0)
    g.add_argument("--trials", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mode", choices=["rational", "modp"], default="rational")
    g.add_argument("--model", choices=["multigraph", "simple"], default="multigraph")
    g.add_argument("--out", default=None, help="output path (JSONL)")
    g.add_argument("--csv", action="store_true", help="also write CSV next to --out")
    g.add_argument("--svg", action="store_true", help="also write an SVG plot next to --out")
    g.add_argument("--config", default=None, help="config file of key = value lines")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regdig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, helptext):
        sp = sub.add_parser(name, help=helptext)
        _common(sp)
        return sp

    add("singularity", "Monte Carlo estimate of the singularity probability")
    add("scaling", "singularity estimates across several n, with a log-log slope")
    sp = add("claim1", "compare brute-force kernel counts with the walk formula")
    sp.add_argument("--vector", default=None, help="one vector v (comma list); default all")
    sp = add("walk-prob", "exact probability that the walk hits a target")
    sp.add_argument("--target", required=False, default=None)
    sp.add_argument("--method", choices=["auto", "dp", "charsum"], default="auto")
    sp.add_argument("--residues", default=None, help="congruence version: target residues")
    sp = add("charfn", "characteristic function, ball distance and structure at a phase vector")
    sp.add_argument("--s", required=False, default=None, help="phase vector (comma list)")
    sp = add("inverse-search", "search for near-extremal phase vectors")
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--restarts", type=int, default=1000)
    sp.add_argument("--a-max", type=float, default=None)
    sp.add_argument("--kappa-floor", type=float, default=0.0)
    sp = add("stirling", "exact and approximate multinomial weights of a profile")
    sp.add_argument("--profile", default=None)
    sp = add("rate-fn", "large-deviation rate function and closed-form tilt")
    sp.add_argument("--frak", default=None, help="simplex point (comma list)")
    sp = add("integrals", "cubic-phase integral and sphere expectation")
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--s", type=float, default=0.01)
    sp.add_argument("--sphere-p", type=int, default=None)
    sp = add("verify", "run a named verification suite")
    sp.add_argument("which", nargs="?", default="all")
    sp.add_argument("--budget", type=float, default=None, help="wall-time budget in seconds")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse once to find --config, then re-parse with file values as defaults."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        act = known.get(key)
        if act is None:
            continue
        if act.type is not None:
            value = act.type(value)
        elif isinstance(act, argparse._StoreTrueAction):
            value = value.lower() in ("1", "true", "yes", "on")
        defaults[key] = value
    sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    args.extra_config = cfg
    return args


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=str))


def cmd_singularity(args) -> int:
    from .experiments import estimate_singularity, write_jsonl

    n = _ints(args.n)[0]
    if args.mode == "modp" and args.p is None:
        raise ValueError("--mode modp needs --p")
    if args.mode == "modp" and args.d % args.p == 0:
        log.warning("p divides d: the all-ones vector is always in the kernel mod p")
    rec = estimate_singularity(n, args.d, args.trials, args.seed, mode=args.mode,
                               model=args.model, p=args.p, eps=args.eps, b=args.b)
    if args.out:
        write_jsonl([rec], args.out)
    print(rec.to_json())
    if rec.undetermined_count:
        log.warning("%d undetermined outcomes", rec.undetermined_count)
    return EXIT_OK


def cmd_scaling(args) -> int:
    from .experiments import run_scaling_experiment

    if not args.out:
        raise ValueError("scaling needs --out")
    res = run_scaling_experiment(args.d, _ints(args.n), args.trials, args.seed, args.out,
                                 csv_out=args.csv, svg=args.svg, mode=args.mode,
                                 model=args.model, p=args.p)
    for r in res.records:
        print(f"n={r.params['n']:>5}  estimate={r.estimate:.5f}  "
              f"ci=[{r.ci_lo:.5f}, {r.ci_hi:.5f}]  undetermined={r.undetermined_count}")
    print("slope:", "absent" if res.slope is None else f"{res.slope:.4f}")
    for kind, path in res.files.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_kernel_counts(args) -> int:
    import itertools

    from .core import make_params
    from .walk import kernel_count_lhs_bruteforce, kernel_count_rhs, profile_of

    n = _ints(args.n)[0]
    p = 3 if args.p is None else args.p
    prm = make_params(n, args.d, p, args.eps, args.b)
    vectors = [tuple(_ints(args.vector))] if args.vector else itertools.product(range(p), repeat=n)
    bad = 0
    for v in vectors:
        lhs = kernel_count_lhs_bruteforce(prm, v)
        rhs = kernel_count_rhs(prm, profile_of(v, p))
        bad += lhs != rhs
        print(f"v={v}  brute={lhs}  formula={rhs}  {'ok' if lhs == rhs else 'MISMATCH'}")
    return EXIT_OK if bad == 0 else EXIT_FAIL


def cmd_walk_prob(args) -> int:
    from .walk import build_step_distribution, walk_probability_exact, walk_probability_modp

    n = _ints(args.n)[0]
    p = 3 if args.p is None else args.p
    dist = build_step_distribution(args.d, p)
    if args.residues is not None:
        prob = walk_probability_modp(dist, n, _ints(args.residues))
    else:
        if args.target is None:
            raise ValueError("walk-prob needs --target or --residues")
        prob = walk_probability_exact(dist, n, _ints(args.target), method=args.method)
    _emit({"exact": str(Fraction(prob)), "float": float(prob)})
    return EXIT_OK


def cmd_charfn(args) -> int:
    from .charfn import macro_recover, min_ball_distance, phi_x
    from .walk import build_step_distribution

    p = 3 if args.p is None else args.p
    dist = build_step_distribution(args.d, p)
    s = np.array(_floats(args.s)) if args.s else np.zeros(p)
    phi = phi_x(dist, s)
    kappa, j = min_ball_distance(s, p)
    rep = macro_recover(s - s[0], p, dist)
    _emit({"phi": [phi.real, phi.imag], "modulus": abs(phi), "kappa_min": kappa, "j": j,
           "structure": rep.__dict__})
    return EXIT_OK


def cmd_inverse(args) -> int:
    from .charfn import forward_decay_profile, inverse_search
    from .walk import build_step_distribution

    p = 5 if args.p is None else args.p
    dist = build_step_distribution(args.d, p)
    a_max = args.a_max
    if a_max is None:
        a_max = 10 * forward_decay_profile(dist, 2000, [1e-4, 1e-3, 1e-2], args.seed)["max"]
    res = inverse_search(dist, args.alpha, args.restarts, args.seed, a_max=a_max,
                         kappa_floor=args.kappa_floor)
    _emit({"restarts": res.restarts, "near_extremal": len(res.records),
           "empirical_A": res.empirical_A, "a_max": a_max,
           "counterexamples": [r.__dict__ for r in res.counterexamples]})
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_stirling(args) -> int:
    from .asymptotics import (classify_profile, multinomial_weight_approx,
                              multinomial_weight_exact)
    from .core import make_params
    from .errors import OutOfRegimeError

    n = _ints(args.n)[0]
    p = 5 if args.p is None else args.p
    prm = make_params(n, args.d, p, args.eps, args.b)
    prof = _ints(args.profile) if args.profile else [n // p + (j < n % p) for j in range(p)]
    out = {"profile": prof, "log_weight_exact": multinomial_weight_exact(prm, prof)}
    out["label"] = classify_profile(prm, prof).value
    try:
        out["log_weight_approx"] = multinomial_weight_approx(prm, prof)
    except OutOfRegimeError as exc:
        out["log_weight_approx"] = None
        out["note"] = str(exc)
    _emit(out)
    return EXIT_OK


def cmd_rate_fn(args) -> int:
    from .asymptotics import DeviationInstance, rate_function, tilt_check

    frak = [float(Fraction(x)) for x in str(args.frak or "0.75,0.25").split(",")]
    inst = DeviationInstance.on_simplex(frak)
    _emit({"frak": frak, "rate": rate_function(inst, args.d), "tilt": tilt_check(inst, args.d)})
    return EXIT_OK


def cmd_integrals(args) -> int:
    from .integrals import (CubicPhaseParams, cubic_bound_check, cubic_phase_integral,
                            sphere_cubic_expectation, sphere_regime)

    prm = CubicPhaseParams(args.t, args.s)
    val = cubic_phase_integral(prm)
    out = {"t": args.t, "s": args.s, "integral": [val.real, val.imag],
           "bound_holds": cubic_bound_check(prm)}
    if args.sphere_p:
        sp = sphere_regime(args.sphere_p, args.d, trials=args.trials)
        est, ci = sphere_cubic_expectation(sp, args.seed)
        out["sphere"] = {"p": sp.p, "theta": sp.theta, "estimate": est, "ci95": ci}
    _emit(out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import verify_suite

    cfg = dict(getattr(args, "extra_config", {}) or {})
    cfg["seed"] = args.seed
    if args.budget is not None:
        cfg["budget"] = args.budget
    status, _ = verify_suite(args.which, cfg)
    return status


COMMANDS = {
    "singularity": cmd_singularity,
    "scaling": cmd_scaling,
    "claim1": cmd_kernel_counts,
    "walk-prob": cmd_walk_prob,
    "charfn": cmd_charfn,
    "inverse-search": cmd_inverse,
    "stirling": cmd_stirling,
    "rate-fn": cmd_rate_fn,
    "integrals": cmd_integrals,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    except IoError as exc:
        print(f"regdig: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"regdig: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (IoError, OSError) as exc:
        print(f"regdig: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RegdigError, ValueError) as exc:
        print(f"regdig: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
