"""Command-line entry point: ``avimdp {generate,solve,bounds,bench,oracle}``.

Exit status is 0 on success, 2 when a solver does not converge and 1 on bad
input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import BenchConfig, run_benchmark, summary_tables
from .discounted import discounted_bounds
from .errors import InputError, NonConvergenceError
from .fileformat import load_mdp, save_mdp
from .model import GeneratorSpec, generate_random_mdp
from .oracle import brute_force_lambda_star, hitting_time_bound
from .solvers import Algorithm, SolverConfig, solve
from .ssp import Sweep
from .accel import Accel

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="avimdp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--states", type=int, required=True)
    g.add_argument("--actions", type=int, required=True, help="maximum actions per state")
    g.add_argument("--density", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--cost-min", type=float, default=0.0)
    g.add_argument("--cost-max", type=float, default=10.0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="gavi1")
    s.add_argument("--sweep", choices=[x.value for x in Sweep], default="jacobi")
    s.add_argument("--accel", choices=[x.value for x in Accel], default="none")
    s.add_argument("--eps", type=float, default=1e-8, help="outer tolerance")
    s.add_argument("--eps-inner", type=float, default=None,
                   help="inner residual tolerance (default eps/10)")
    step = s.add_mutually_exclusive_group()
    step.add_argument("--gamma", type=float, default=None)
    step.add_argument("--gamma-oracle", action="store_true",
                      help="step 1/max_pi N_pi(n) by policy enumeration (small models only)")
    s.add_argument("--lambda0", default="rmax", help="rmax | disc:ALPHA | number")
    s.add_argument("--max-outer", type=int, default=100_000)
    s.add_argument("--max-inner", type=int, default=100_000)
    s.add_argument("--report", default=None, help="write the JSON report here")

    b = sub.add_parser("bounds", help="discounted bracket of the optimal average cost")
    b.add_argument("--in", dest="infile", required=True)
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--eps", type=float, default=1e-9)

    bench = sub.add_parser("bench", help="run a benchmark config")
    bench.add_argument("--config", required=True)
    bench.add_argument("--out-dir", required=True)
    bench.add_argument("--workers", type=int, default=None, help="override config workers")

    o = sub.add_parser("oracle", help="brute-force optimum by policy enumeration")
    o.add_argument("--in", dest="infile", required=True)
    return p


def _generate(args) -> int:
    spec = GeneratorSpec(args.states, args.actions, args.density,
                         (args.cost_min, args.cost_max), args.seed)
    save_mdp(generate_random_mdp(spec), args.out)
    return EXIT_OK


def _solve(args) -> int:
    m = load_mdp(args.infile)
    cfg = SolverConfig(
        algorithm=args.algorithm, sweep=args.sweep, accel=args.accel,
        eps_outer=args.eps,
        eps_inner=args.eps / 10 if args.eps_inner is None else args.eps_inner,
        gamma=args.gamma, gamma_oracle=args.gamma_oracle, lambda0=args.lambda0,
        max_outer=args.max_outer, max_inner=args.max_inner,
    )
    sol = solve(m, cfg)
    if args.report:
        Path(args.report).write_text(sol.to_json(indent=1) + "\n")
    print(f"{cfg.label}: status={sol.status} lambda={sol.lam!r} "
          f"outer={sol.outer_iterations} operator_applications={sol.operator_applications}")
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def _bounds(args) -> int:
    b = discounted_bounds(load_mdp(args.infile), args.alpha, eps=args.eps)
    print(json.dumps({"alpha": b.alpha, "lower": b.lower, "upper": b.upper,
                      "iterations": b.iterations}))
    return EXIT_OK


def _bench(args) -> int:
    cfg = BenchConfig.load(args.config)
    if args.workers is not None:
        cfg = BenchConfig.from_dict({**cfg.__dict__, "workers": args.workers})
    result = run_benchmark(cfg, args.out_dir)
    sys.stdout.write(summary_tables(result))
    bad = [r for r in result.rows if not r.converged]
    return EXIT_NONCONVERGED if bad else EXIT_OK


def _oracle(args) -> int:
    m = load_mdp(args.infile)
    lam, pol = brute_force_lambda_star(m)
    print(json.dumps({"lambda_star": lam, "policy": list(pol),
                      "max_return_time": hitting_time_bound(m)}))
    return EXIT_OK


_COMMANDS = {"generate": _generate, "solve": _solve, "bounds": _bounds,
             "bench": _bench, "oracle": _oracle}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
