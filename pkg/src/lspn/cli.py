"""Command line entry point (``lspn`` or ``python3 -m lspn``).

Exit codes: 0 success, 1 usage error, 2 solver error, 3 budget cap or
starved run.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench
from .oracle import Oracle, load_batch, load_instance, new_instance, save_batch, save_instance
from .probkit import compute_gap, label_agreement

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CAP = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _solver_args(p, extra):
    p.add_argument("--instance", required=True, help="instance JSON written by `gen`")
    p.add_argument("--seed", type=int, default=0, help="solver randomness")
    p.add_argument("--stream", type=int, default=0, help="oracle stream id")
    for name, kw in extra:
        p.add_argument(name, **kw)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lspn", description="Sparse parity with noise: instances, solvers, benchmarks.")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="plant a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--eta", type=float, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--public", action="store_true", help="omit the secret")

    d = sub.add_parser("draw", help="write a sample file")
    d.add_argument("--instance", required=True)
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--stream", type=int, default=0)

    opt_int = {"type": int, "default": None}
    _solver_args(sub.add_parser("solve-low", help="subset-sampling Gaussian elimination"), [
        ("--s", opt_int), ("--m2", opt_int), ("--outer-cap", {"type": int, "default": 10**9}),
        ("--inner-cap", {"type": int, "default": 10**9}),
        ("--allow-high-eta", {"action": "store_true"}),
    ])
    _solver_args(sub.add_parser("solve-bkw", help="BKW on random coordinate subsets"), [
        ("--s", opt_int), ("--a", opt_int), ("--b", opt_int), ("--samples", opt_int),
        ("--m2", opt_int), ("--outer-cap", {"type": int, "default": 10**9}),
    ])
    _solver_args(sub.add_parser("solve-high", help="biased sampling and correlation tester"), [
        ("--q", {"type": int, "default": 1}), ("--m", opt_int), ("--mprime", opt_int),
        ("--mode", {"choices": ["argmax", "threshold"], "default": "argmax"}),
        ("--c-policy", {"default": "grid", "help": "grid, true, or an integer count"}),
        ("--cap-cols", {"type": int, "default": 5000}), ("--m2", opt_int),
    ])
    _solver_args(sub.add_parser("solve-brute", help="exhaustive search over sets of size <= k"), [
        ("--m", opt_int), ("--samples", {"default": None, "help": "sample file instead of drawing"}),
        ("--max-candidates", {"type": int, "default": 10**8}),
    ])
    _solver_args(sub.add_parser("solve-gauss", help="repeated whole-space Gaussian elimination"), [
        ("--budget", {"type": int, "default": 10**4}), ("--m2", opt_int),
    ])

    gp = sub.add_parser("gap", help="label-XOR gap for m labels, c correct, q-subsets")
    gp.add_argument("--m", type=int, required=True)
    gp.add_argument("--c", type=int, required=True)
    gp.add_argument("--q", type=int, required=True)

    b = sub.add_parser("bench", help="run an experiment spec and write CSV")
    b.add_argument("--spec", required=True)
    b.add_argument("--out", default=None, help="CSV path (default: the spec's out, else stdout)")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--summary", action="store_true", help="print per-point summary JSON to stderr")
    return ap


def _overrides(verb, a) -> dict:
    if verb == "solve-low":
        return {"s": a.s, "m2": a.m2, "outer_cap": a.outer_cap, "inner_cap": a.inner_cap,
                "allow_high_eta": a.allow_high_eta}
    if verb == "solve-bkw":
        return {"s": a.s, "a": a.a, "b": a.b, "samples": a.samples, "m2": a.m2, "outer_cap": a.outer_cap}
    if verb == "solve-high":
        c = a.c_policy if a.c_policy in ("grid", "true") else int(a.c_policy)
        return {"q": a.q, "m": a.m, "m_prime": a.mprime, "mode": a.mode, "c_policy": c,
                "col_cap": a.cap_cols, "m2": a.m2}
    if verb == "solve-brute":
        return {"m": a.m, "max_candidates": a.max_candidates}
    return {"max_repetitions": a.budget, "m2": a.m2}


def _solve(verb, a) -> int:
    inst = load_instance(a.instance)
    oracle = Oracle(inst, a.stream)
    rng = np.random.default_rng(a.seed)
    name = verb.removeprefix("solve-")
    if name == "brute" and a.samples:
        from .baseline import BaselineBudget, brute_force
        res = brute_force(load_batch(a.samples), inst.k, BaselineBudget(max_candidates=a.max_candidates))
    else:
        res = bench.run_solver(name, oracle, inst.k, inst.eta, _overrides(verb, a), rng)
    secret = list(res.secret) if res.found else None
    print(json.dumps({
        "solver": name, "found": res.found, "secret": secret, "status": res.status,
        "correct": res.found and tuple(res.secret) == inst.secret,
        "iterations": res.iterations, "samples": oracle.samples_drawn or res.samples,
    }, sort_keys=True))
    return EXIT_CAP if res.status in ("capped", "starved") else EXIT_OK


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        if a.verb == "gen":
            save_instance(new_instance(a.n, a.k, a.eta, a.seed), a.out, public=a.public)
            return EXIT_OK
        if a.verb == "draw":
            save_batch(Oracle(load_instance(a.instance), a.stream).draw(a.m), a.out)
            return EXIT_OK
        if a.verb == "gap":
            print(json.dumps({"m": a.m, "c": a.c, "q": a.q, "p": label_agreement(a.m, a.c, a.q),
                              "gap": compute_gap(a.m, a.c, a.q)}))
            return EXIT_OK
        if a.verb == "bench":
            spec = bench.load_spec(a.spec)
            if a.workers is not None:
                spec.workers = a.workers
            reports = bench.run_experiment(spec)
            out = a.out or spec.out
            if out:
                bench.write_csv(reports, out)
            else:
                sys.stdout.write(bench.format_csv(reports))
            if a.summary:
                print(json.dumps(bench.summarize(reports), indent=2), file=sys.stderr)
            return EXIT_OK
        return _solve(a.verb, a)
    except (FileNotFoundError, json.JSONDecodeError, KeyError, TypeError) as e:
        print(f"lspn: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, ArithmeticError) as e:
        print(f"lspn: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
