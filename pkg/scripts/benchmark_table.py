"""Success rates of epsilon-SCA, SCA and Glauber on the benchmark families.

Defaults follow the full protocol (N=100, 1000 trials, 10^4 steps, exponential
schedule with beta0 = alpha = 1e-3). The reference minimum is the best energy
seen by any engine. Use --n / --trials / --steps for a quicker reduced run.

    python scripts/benchmark_table.py --n 30 --trials 200 --out-dir results/table
"""
import argparse
import json
from pathlib import Path

from sca_anneal.bench import emit_outputs, format_rate, run_benchmark, summary
from sca_anneal.dynamics import EngineSpec, auto_pinning
from sca_anneal.problems import gen_bernoulli_spin_glass, gen_gaussian_spin_glass, gen_max_cut, gen_tsp
from sca_anneal.schedules import exponential

ROWS = {
    "gaussian": lambda n, s: gen_gaussian_spin_glass(n, s),
    "bernoulli_p0.2": lambda n, s: gen_bernoulli_spin_glass(n, 0.2, s),
    "bernoulli_p0.5": lambda n, s: gen_bernoulli_spin_glass(n, 0.5, s),
    "bernoulli_p0.8": lambda n, s: gen_bernoulli_spin_glass(n, 0.8, s),
    "maxcut_p0.1": lambda n, s: gen_max_cut(n, 0.1, s),
    "maxcut_p0.9": lambda n, s: gen_max_cut(n, 0.9, s),
    "tsp": lambda n, s: gen_tsp(max(3, round(n**0.5)), s),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100, help="spins (TSP uses sqrt(n) cities)")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--epsilon", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--instance-seed", type=int, default=1)
    ap.add_argument("--rows", nargs="*", default=list(ROWS), choices=list(ROWS))
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out-dir", default="results/table")
    args = ap.parse_args(argv)

    table = {}
    for name in args.rows:
        art = ROWS[name](args.n, args.instance_seed)
        engines = [EngineSpec.epsilon_sca(args.epsilon), EngineSpec.sca(auto_pinning(art.model)), EngineSpec.glauber()]
        res = run_benchmark(art, engines, exponential(), args.trials, args.steps, args.seed,
                            reference="empirical", workers=args.workers)
        emit_outputs(res, Path(args.out_dir) / name)
        rates = [format_rate(res.success(e.label)) for e in engines]
        print(f"{name:<16} min(H)={res.reference:<12g} esca={rates[0]:>6} sca={rates[1]:>6} glauber={rates[2]:>6}")
        table[name] = summary(res)
    with open(Path(args.out_dir) / "table.json", "w", encoding="utf-8") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
