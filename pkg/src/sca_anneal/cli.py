"""Command line interface: ``sca-anneal {generate,run,sweep,verify,exact}``.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
Options may also come from ``--config FILE`` (``key=value`` lines, keys are
long option names); explicit flags win. ``SCA_ANNEAL_OUT_DIR`` sets the
default output directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from .bench import emit_outputs, epsilon_sweep, format_rate, run_benchmark
from .dynamics import EngineSpec, auto_pinning
from .errors import ConfigurationError, InvalidInputError, NumericalError
from .problems import GENERATORS, decode_tour, format_instance, read_instance
from .schedules import DEFAULT_ALPHA, DEFAULT_BETA0, constant, exponential, logarithmic, make_theorem3_schedule
from .theory import brute_force_ground_states, verify_mixing

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
OUT_DIR_ENV = "SCA_ANNEAL_OUT_DIR"
DEFAULT_EPSILONS = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"


def _add_instance_args(p):
    g = p.add_argument_group("instance")
    g.add_argument("--instance", help="instance file; otherwise one is generated from --family")
    g.add_argument("--family", choices=sorted(GENERATORS))
    g.add_argument("--n", type=int, help="vertices (cities for tsp)")
    g.add_argument("--p", type=float, help="coupling / edge probability")
    g.add_argument("--instance-seed", type=int, help="generator seed (defaults to --seed)")


def _add_engine_args(p, engines=True):
    if engines:
        p.add_argument("--engine", action="append", choices=["glauber", "sca", "esca"],
                       help="repeatable; default: all three")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--pinning", default="auto", help="'auto' (lambda/2) or a number")


def _add_run_args(p):
    p.add_argument("--schedule", choices=["exp", "log", "const"], default="exp")
    p.add_argument("--beta0", type=float, default=DEFAULT_BETA0)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--gamma", type=float, help="Gamma for --schedule log (default: from pinning)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--sweeps-per-step", type=int, default=1)
    p.add_argument("--reference", default="auto", help="auto|oracle|empirical|none|<energy>")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--workers", type=int, help="processes (default: all cores)")
    p.add_argument("--out-dir", default=os.environ.get(OUT_DIR_ENV, "results"))
    p.add_argument("--format", choices=["csv", "json", "both"], default="both")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="sca-anneal", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file supplying option defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["generate"] = sub.add_parser("generate", help="write a benchmark instance file")
    _add_instance_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout)")

    for name, help_ in (("run", "anneal with several engines"), ("sweep", "epsilon-SCA success rate vs epsilon")):
        p = subs[name] = sub.add_parser(name, help=help_)
        _add_instance_args(p)
        _add_engine_args(p, engines=name == "run")
        _add_run_args(p)
        p.add_argument("--seed", type=int, default=0)
        if name == "sweep":
            p.add_argument("--epsilons", default=DEFAULT_EPSILONS, help="comma-separated list")

    p = subs["verify"] = sub.add_parser("verify", help="check the mixing-time bounds exactly (N <= 10)")
    _add_instance_args(p)
    p.add_argument("--engine", choices=["sca", "esca"], default="esca")
    _add_engine_args(p, engines=False)
    p.add_argument("--beta", type=float, required=False, default=0.1)
    p.add_argument("--delta", type=float, action="append", help="repeatable; default 0.1 and 0.01")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)

    p = subs["exact"] = sub.add_parser("exact", help="brute-force ground states")
    _add_instance_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-show", type=int, default=10)
    p.add_argument("--out-dir", default=None)
    return parser, subs


def read_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _coerce_config(sub: argparse.ArgumentParser, config: dict) -> dict:
    actions = {a.dest: a for a in sub._actions}
    out = {}
    for key, value in config.items():
        if key not in actions:
            raise ConfigurationError(f"unknown config key {key!r}")
        a = actions[key]
        conv = a.type or str
        if isinstance(a, argparse._AppendAction):
            out[key] = [conv(v.strip()) for v in value.split(",")]
        else:
            out[key] = conv(value)
    return out


def load_instance(args):
    if args.instance:
        return read_instance(args.instance)
    if not args.family:
        raise ConfigurationError("give --instance or --family")
    params = {"N": args.n, "n": args.n, "p": args.p}
    if args.n is None:
        raise ConfigurationError("--n is required with --family")
    if args.family in ("bernoulli", "maxcut") and args.p is None:
        raise ConfigurationError(f"--p is required for family {args.family}")
    seed = args.seed if args.instance_seed is None else args.instance_seed
    return GENERATORS[args.family](params, seed)


def _pinning(model, value):
    if value == "auto":
        return auto_pinning(model)
    try:
        return np.full(model.num_vertices, float(value))
    except ValueError:
        raise ConfigurationError(f"--pinning must be 'auto' or a number, got {value!r}") from None


def _engines(args, model):
    kinds = args.engine or ["esca", "sca", "glauber"]
    out = []
    for kind in dict.fromkeys(kinds):
        if kind == "glauber":
            out.append(EngineSpec.glauber())
        elif kind == "sca":
            out.append(EngineSpec.sca(_pinning(model, args.pinning)))
        else:
            out.append(EngineSpec.epsilon_sca(args.epsilon))
    return out


def _schedule(args, model):
    if args.schedule == "exp":
        return exponential(args.beta0, args.alpha)
    if args.schedule == "const":
        return constant(args.beta0)
    if args.gamma is not None:
        return logarithmic(args.gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        return make_theorem3_schedule(model, _pinning(model, args.pinning))


def _formats(args):
    return ("csv", "json") if args.format == "both" else (args.format,)


def _reference(args):
    return None if args.reference == "none" else args.reference


def _print_rates(result):
    ref = "n/a" if result.reference is None else f"{result.reference!r} ({result.reference_source})"
    print(f"reference minimum: {ref}")
    for label, recs in result.records.items():
        E = [r.min_energy for r in recs]
        rate = result.success(label)
        print(f"  {label:<22} min={min(E)!r:<14} mean={np.mean(E):.6g}  success={format_rate(rate)}")


def cmd_generate(args):
    artifact = load_instance(args)
    text = format_instance(artifact)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    artifact = load_instance(args)
    result = run_benchmark(
        artifact, _engines(args, artifact.model), _schedule(args, artifact.model), args.trials, args.steps, args.seed,
        reference=_reference(args), tolerance=args.tolerance, bins=args.bins, workers=args.workers,
        sweeps_per_step=args.sweeps_per_step,
    )
    _print_rates(result)
    for path in emit_outputs(result, args.out_dir, _formats(args)):
        print(f"wrote {path}")


def cmd_sweep(args):
    artifact = load_instance(args)
    try:
        eps = [float(e) for e in args.epsilons.split(",") if e.strip()]
    except ValueError:
        raise ConfigurationError(f"bad --epsilons {args.epsilons!r}") from None
    sweep = epsilon_sweep(
        artifact, eps, _schedule(args, artifact.model), args.trials, args.steps, args.seed,
        reference=_reference(args), tolerance=args.tolerance, bins=args.bins, workers=args.workers,
        sweeps_per_step=args.sweeps_per_step,
    )
    _print_rates(sweep.result)
    print(f"best epsilon: {sweep.best_epsilon}")
    for path in emit_outputs(sweep.result, args.out_dir, _formats(args), sweep=sweep):
        print(f"wrote {path}")


def cmd_verify(args):
    artifact = load_instance(args)
    model = artifact.model
    if args.engine == "sca":
        spec = EngineSpec.sca(_pinning(model, args.pinning))
    else:
        spec = EngineSpec.epsilon_sca(args.epsilon)
    reports = [verify_mixing(model, spec, args.beta, d) for d in (args.delta or [0.1, 0.01])]
    failed = False
    for rep in reports:
        d = rep.as_dict()
        tv = "-" if rep.tv is None else f"{rep.tv:.3e}"
        print(f"{d['engine']} beta={rep.beta} delta={rep.delta}: r={rep.r:.6g} "
              f"t_bound={rep.t_bound} tv={tv} -> {d['status']}")
        failed |= rep.passed is False
    payload = {"instance": artifact.metadata, "reports": [r.as_dict() for r in reports]}
    print(json.dumps(payload, sort_keys=True))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "verify.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if failed:
        raise NumericalError("mixing bound violated")


def cmd_exact(args):
    artifact = load_instance(args)
    gs = brute_force_ground_states(artifact.model)
    print(f"min energy: {gs.min_energy!r}")
    print(f"ground states: {len(gs.configs)}")
    payload = {"instance": artifact.metadata, "min_energy": gs.min_energy, "num_ground_states": len(gs.configs),
               "ground_states": [[int(v) for v in c] for c in gs.configs[: args.max_show]]}
    for c in gs.configs[: args.max_show]:
        line = " ".join("+" if v > 0 else "-" for v in c)
        if artifact.tsp is not None:
            dec = decode_tour(artifact.tsp, c)
            line += f"   tour={dec.tour} length={dec.length}" if dec.valid else "   (invalid tour)"
        print(f"  {line}")
    if artifact.tsp is not None:
        dec = decode_tour(artifact.tsp, gs.configs[0])
        payload["tour"] = list(dec.tour) if dec.valid else None
        payload["tour_length"] = dec.length
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "exact.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "exact": cmd_exact}


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            sub = subs[args.command]
            sub.set_defaults(**_coerce_config(sub, read_config(args.config)))
            args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except (ConfigurationError, InvalidInputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
