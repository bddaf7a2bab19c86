"""Reproducible experiment runner.

Every subcommand writes three kinds of artifacts into its output directory:
a result table (csv by default), a manifest.json echoing the configuration,
and, unless --no-plot is given, a rendered figure next to the table.  The
table bytes are a pure function of the configuration and seed.  The exit
status doubles as the verification verdict: nonzero when a checked bound is
violated, so CI can consume theorem checks directly.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import fuzz
from .bellman import BellmanPoint, bellman_cap, bellman_lower, bliss_inequality_check
from .bellman import bliss_functional
from .constants import cpq, sharpness_regime
from .reporting import resolve_outdir, write_manifest, write_rows
from .sharpness import (
    jensen_route_gap,
    ratio_vs_refinement,
    technical_gap_grid,
    verify_extremal_testing,
)
from .stepfun import rearrange_decreasing
from .tree import build_random_tree, build_sharpness_tree
from .weights import main_inequality_check, testing_ratios
from .fuzz import random_weight_pair, random_function, random_step_function

COMMANDS = ("constants", "testing", "carleson", "bellman", "bliss", "sharpness", "fuzz")


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _pmap(fn, seeds: list[int], jobs: int) -> list:
    if jobs <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, seeds))


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--tol", type=float, default=1e-9, help="comparison tolerance")
    sub.add_argument("--quad-tol", type=float, default=1e-9, help="quadrature tolerance")
    sub.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treemax",
        description="two-weight maximal operator laboratory on trees",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("constants", help="sharp constant tables over (p, q) grids")
    sp.add_argument("--p", type=_floats, required=True)
    sp.add_argument("--q", type=_floats, required=True)
    sp.add_argument("--alpha", type=float, default=None)
    _add_common(sp)

    sp = subs.add_parser("testing", help="per-node testing ratios for a random pair")
    sp.add_argument("--depth", type=int, default=5)
    sp.add_argument("--branch", type=int, default=3)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--funcs", type=int, default=5, help="random functions to test")
    _add_common(sp)

    sp = subs.add_parser("carleson", help="embedding bound on random sequences")
    sp.add_argument("--instances", type=int, default=50)
    sp.add_argument("--depth", type=int, default=5)
    sp.add_argument("--branch", type=int, default=3)
    sp.add_argument("--jobs", type=int, default=1)
    _add_common(sp)

    sp = subs.add_parser("bellman", help="value lower bounds on a state grid")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--x", type=_floats, default=[1.0])
    sp.add_argument("--y", type=_floats, default=[2.0])
    sp.add_argument("--s", type=_floats, default=[1.0])
    sp.add_argument("--t", type=_floats, default=[1.0])
    sp.add_argument("--pieces", type=_ints, default=[32])
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--starts", type=int, default=16)
    _add_common(sp)

    sp = subs.add_parser("bliss", help="sharp one-dimensional bound on random steps")
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--pieces", type=int, default=16, help="max piece count")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--q", type=float, default=2.0)
    _add_common(sp)

    sp = subs.add_parser("sharpness", help="extremal construction reports")
    sp.add_argument("--N", type=int, default=16)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--curve", type=_ints, default=None, help="refinement schedule")
    sp.add_argument("--budget", type=int, default=400)
    sp.add_argument("--lemma-audit", action="store_true")
    _add_common(sp)

    sp = subs.add_parser("fuzz", help="two-weight bound on random instances")
    sp.add_argument("--instances", type=int, default=50)
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--branch", type=int, default=3)
    sp.add_argument("--funcs", type=int, default=20)
    sp.add_argument("--budget", type=int, default=256, help="ascent evaluations")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--dump", action="store_true", help="dump every case for replay")
    _add_common(sp)

    return parser


# ----------------------------------------------------------------------
# command bodies: each returns (rows, verdict_bool, figure_writer, extra)
# ----------------------------------------------------------------------


def _cmd_constants(args) -> tuple[list[dict], bool, list, dict]:
    rows = []
    for p in args.p:
        for q in args.q:
            if q < p:
                continue
            row = {"p": p, "q": q, "c_pq": cpq(p, q)}
            if args.alpha is not None:
                row["alpha"] = args.alpha
                row["sharp_regime"] = sharpness_regime(p, q, args.alpha)
            rows.append(row)
    if not rows:
        raise SystemExit("empty grid: need q >= p somewhere")

    def figures(outdir: Path) -> list[Path]:
        from .plots import save_line_plot

        series = {}
        for p in args.p:
            pts = [(r["q"], r["c_pq"]) for r in rows if r["p"] == p]
            if pts:
                series[f"p={p:g}"] = [c for _, c in pts]
        qs = sorted({r["q"] for r in rows})
        if all(len(v) == len(qs) for v in series.values()):
            return [
                save_line_plot(
                    outdir / "constants.png", qs, series, "q", "sharp constant",
                    "sharp constant over the exponent grid",
                )
            ]
        return []

    return rows, True, figures, {}


def _cmd_testing(args) -> tuple[list[dict], bool, list, dict]:
    tree = build_random_tree(args.seed, args.depth, args.branch)
    rng = np.random.default_rng(args.seed)
    pair = random_weight_pair(rng, tree, args.p)
    ratios = testing_ratios(pair, args.alpha, args.q)
    L = float(ratios.max())
    witness = int(np.argmax(ratios))
    rows = [
        {
            "node": n,
            "depth": int(tree.depth[n]),
            "mass": float(tree.mass[n]),
            "ratio": float(ratios[n]),
        }
        for n in range(tree.n_nodes)
    ]
    worst = 0.0
    for _ in range(args.funcs):
        f = random_function(rng, tree)
        _, _, ratio = main_inequality_check(pair, f, args.alpha, args.q)
        worst = max(worst, ratio)
    ok = worst <= 1.0 + args.tol

    def figures(outdir: Path) -> list[Path]:
        from .plots import save_node_ratios

        return [
            save_node_ratios(
                outdir / "testing.png",
                [r["node"] for r in rows],
                [r["ratio"] / L if L > 0 else 0.0 for r in rows],
                "node id",
                "per-node testing ratio / L",
            )
        ]

    return rows, ok, figures, {"L": L, "witness_node": witness, "worst_f_ratio": worst}


def _cmd_carleson(args) -> tuple[list[dict], bool, list, dict]:
    seeds = list(range(args.seed, args.seed + args.instances))
    fn = partial(fuzz.run_carleson_case, max_depth=args.depth, max_branch=args.branch)
    rows = sorted(_pmap(fn, seeds, args.jobs), key=lambda r: r["seed"])
    ok = all(r["ratio"] <= 1.0 + args.tol for r in rows)

    def figures(outdir: Path) -> list[Path]:
        from .plots import save_histogram

        return [
            save_histogram(
                outdir / "carleson.png",
                [r["ratio"] for r in rows],
                "embedding ratio",
                "embedding lhs/rhs over random Carleson sequences",
            )
        ]

    return rows, ok, figures, {}


def _cmd_bellman(args) -> tuple[list[dict], bool, list, dict]:
    rows = []
    witnesses = {}
    ok = True
    idx = 0
    for m in args.pieces:
        for s in args.s:
            for t in args.t:
                for x in args.x:
                    for y in args.y:
                        pt = BellmanPoint(x, y, s, t)
                        try:
                            pt.validate(args.p, args.q)
                        except ValueError:
                            continue
                        value, witness = bellman_lower(
                            pt, args.p, args.q, m=m,
                            budget=args.budget, seed=args.seed,
                            starts=args.starts, tol=args.quad_tol,
                        )
                        cap = bellman_cap(x, y, s, args.p, args.q)
                        rows.append(
                            {
                                "x": x, "y": y, "s": s, "t": t, "m": m,
                                "value": value, "cap": cap, "margin": cap - value,
                            }
                        )
                        witnesses[str(idx)] = {
                            "x": x, "y": y, "s": s, "t": t, "m": m,
                            "lengths": [float(v) for v in witness.lengths],
                            "values": [float(v) for v in witness.values],
                        }
                        ok = ok and (-args.tol <= value <= cap + 1e-8)
                        idx += 1
    if not rows:
        raise SystemExit("no feasible grid point (need y >= x**p, t <= s**(q/p))")

    def figures(outdir: Path) -> list[Path]:
        from .plots import save_line_plot

        xs = list(range(len(rows)))
        return [
            save_line_plot(
                outdir / "bellman.png", xs,
                {
                    "value": [r["value"] for r in rows],
                    "bound (cap)": [r["cap"] for r in rows],
                },
                "grid point", "value", "lower bound vs cap",
            )
        ]

    return rows, ok, figures, {"witnesses": witnesses}


def _cmd_bliss(args) -> tuple[list[dict], bool, list, dict]:
    rng = np.random.default_rng(args.seed)
    rows = []
    ok = True
    for k in range(args.samples):
        phi = random_step_function(rng, max_pieces=args.pieces)
        lhs, rhs, ratio = bliss_inequality_check(phi, args.p, args.q, args.quad_tol)
        tilde = rearrange_decreasing(phi)
        t_full = phi.total_length ** (args.q / args.p)
        gain = bliss_functional(tilde, t_full, args.p, args.q, args.quad_tol) - (
            lhs**args.q
        )
        rows.append(
            {
                "sample": k,
                "pieces": len(phi.lengths),
                "lhs": lhs,
                "rhs": rhs,
                "ratio": ratio,
                "rearrange_gain": gain,
            }
        )
        scale = max(1.0, abs(lhs) ** args.q)
        ok = ok and ratio <= 1.0 + 1e-8 and gain >= -1e-8 * scale
    def figures(outdir: Path) -> list[Path]:
        from .plots import save_histogram

        return [
            save_histogram(
                outdir / "bliss.png",
                [r["ratio"] for r in rows],
                "lhs/rhs",
                "sharp one-dimensional bound on random step functions",
            )
        ]

    return rows, ok, figures, {}


def _cmd_sharpness(args) -> tuple[list[dict], bool, list, dict]:
    if args.lemma_audit:
        min_d, min_e = technical_gap_grid()
        xs = 1.0 + np.logspace(-6, 3, 1000)
        min_j = float(np.min(jensen_route_gap(xs, args.p, args.q)))
        rows = [
            {"check": "reciprocal_convexity_gap", "min_margin": min_d},
            {"check": "reciprocal_convexity_inner", "min_margin": min_e},
            {"check": f"jensen_route_p{args.p:g}_q{args.q:g}", "min_margin": min_j},
        ]
        ok = min_d >= -1e-12 and min_e >= -1e-12 and min_j >= -1e-9
        return rows, ok, lambda outdir: [], {}

    if args.curve:
        rows = ratio_vs_refinement(args.curve, args.alpha, args.p, args.q, args.budget)
        ok = all(r["within_bound"] for r in rows)

        def figures(outdir: Path) -> list[Path]:
            from .plots import save_line_plot

            return [
                save_line_plot(
                    outdir / "sharpness_curve.png",
                    [r["N"] for r in rows],
                    {
                        "best ratio": [r["best_ratio"] for r in rows],
                        "bound C*L": [r["bound"] for r in rows],
                    },
                    "N", "norm ratio", "trial-family ratio vs refinement",
                    logx=True,
                )
            ]

        return rows, ok, figures, {"target": cpq(args.p, args.q)}

    tree = build_sharpness_tree(args.N)
    L, node_rows = verify_extremal_testing(tree, args.alpha, args.p, args.q)
    rows = [
        {
            "node": r.node,
            "lo": r.lo,
            "hi": r.hi,
            "prefix": r.prefix,
            "lhs": r.lhs,
            "rhs": r.rhs,
            "ratio": r.ratio,
        }
        for r in node_rows
    ]
    ok = L <= 1.0 + args.tol

    def figures(outdir: Path) -> list[Path]:
        from .plots import save_node_ratios

        mids = [(r["lo"] + r["hi"]) / 2 for r in rows]
        return [
            save_node_ratios(
                outdir / "sharpness_testing.png",
                mids,
                [r["ratio"] for r in rows],
                "interval midpoint",
                f"extremal testing ratios, N={args.N}",
            )
        ]

    return rows, ok, figures, {"L": L}


def _cmd_fuzz(args) -> tuple[list[dict], bool, list, dict]:
    seeds = list(range(args.seed, args.seed + args.instances))
    fn = partial(
        fuzz.run_main_inequality_case,
        n_funcs=args.funcs,
        ascent_budget=args.budget,
        max_depth=args.depth,
        max_branch=args.branch,
    )
    rows = sorted(_pmap(fn, seeds, args.jobs), key=lambda r: r["seed"])
    ok = all(r["ratio"] <= 1.0 + args.tol for r in rows)

    def figures(outdir: Path) -> list[Path]:
        from .plots import save_histogram

        paths = [
            save_histogram(
                outdir / "fuzz.png",
                [r["ratio"] for r in rows],
                "worst lhs/rhs per instance",
                "two-weight bound over random instances",
            )
        ]
        return paths

    extra: dict = {}
    if args.dump or not ok:
        extra["dump_seeds"] = [
            r["seed"] for r in rows if args.dump or r["ratio"] > 1.0 + args.tol
        ]
    return rows, ok, figures, extra


_BODIES = {
    "constants": _cmd_constants,
    "testing": _cmd_testing,
    "carleson": _cmd_carleson,
    "bellman": _cmd_bellman,
    "bliss": _cmd_bliss,
    "sharpness": _cmd_sharpness,
    "fuzz": _cmd_fuzz,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    rows, ok, figures, extra = _BODIES[args.command](args)
    outdir = resolve_outdir(args.command, args.out)
    outputs = [str(write_rows(outdir / "results", rows, args.format))]

    witnesses = extra.pop("witnesses", None)
    if witnesses is not None:
        import json

        wpath = outdir / "witnesses.json"
        wpath.write_text(json.dumps(witnesses, indent=1) + "\n")
        outputs.append(str(wpath))

    dump_seeds = extra.pop("dump_seeds", None)
    if dump_seeds:
        for seed in dump_seeds:
            tree, pair, exps = fuzz.random_instance(seed, args.depth, args.branch)
            _, witness = fuzz.operator_norm_lower(
                pair, exps.alpha, exps.q, budget=args.budget, seed=seed
            )
            path = outdir / f"case_{seed}.json"
            fuzz.dump_case(path, tree, pair, witness, seed, exps)
            outputs.append(str(path))

    if not args.no_plot:
        outputs.extend(str(p) for p in figures(outdir))
    verdict = "pass" if ok else "fail"
    write_manifest(
        outdir, args.command, vars(args), started, outputs, verdict, extra
    )
    print(f"{args.command}: {len(rows)} rows -> {outputs[0]} ({verdict})")
    if not ok:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
