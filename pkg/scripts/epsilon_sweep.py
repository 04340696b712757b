"""Success rate of epsilon-SCA as a function of epsilon on one instance.

    python scripts/epsilon_sweep.py --family bernoulli --p 0.2 --n 30 --trials 300
"""
import argparse
from pathlib import Path

from sca_anneal.bench import emit_outputs, epsilon_sweep, format_rate
from sca_anneal.problems import GENERATORS
from sca_anneal.schedules import exponential


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=sorted(GENERATORS), default="bernoulli")
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--p", type=float, default=0.2)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--instance-seed", type=int, default=1)
    ap.add_argument("--reference", default="auto")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out-dir", default="results/sweep")
    args = ap.parse_args(argv)

    art = GENERATORS[args.family]({"N": args.n, "n": args.n, "p": args.p}, args.instance_seed)
    eps = [round(0.1 * i, 1) for i in range(1, 11)]
    sw = epsilon_sweep(art, eps, exponential(), args.trials, args.steps, args.seed,
                       reference=args.reference, workers=args.workers)
    print(f"reference {sw.result.reference} ({sw.result.reference_source})")
    for e, rate in sw.rates:
        bar = "#" * int(round(40 * (rate or 0)))
        print(f"eps={e:.1f} {format_rate(rate):>6} {bar}")
    print(f"best epsilon {sw.best_epsilon}")
    emit_outputs(sw.result, Path(args.out_dir), sweep=sw)


if __name__ == "__main__":
    main()
