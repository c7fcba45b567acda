"""Command-line front end.

Subcommands::

    hyperdescent gen-graph --depth 5 --mode closure --out tree.tsv
    hyperdescent barycenter --outdir out/ [--rates 0.01,0.2] [--iters N] [--seed S]
    hyperdescent embed --graph tree.tsv --out run/ [--rule geodesic] [--lr 0.05] ...
    hyperdescent eval --graph tree.tsv --embedding run/embedding.tsv
    hyperdescent expmap-selftest [--samples N] [--seed S]

Exit codes: 0 success (flagged experiment failures included), 1 usage error,
2 input/output or parse error, 3 self-test failure or every experiment cell
failing.
"""

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import barycenter as bc
from . import embedding as emb
from . import graphs
from .optimizers import RULES, format_float
from .selftest import run_selftest

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3

BIAS_EPS = 1e-8
BIAS_ETAS = (0.01, 0.05, 0.1, 0.2)
BIAS_BALANCE_TOL = 1e-12
BIAS_CLOSED_TOL = 1e-10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {val}")
    return val


def _nonneg_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {val}")
    return val


def _positive_float(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return val


def _rate_list(text):
    parts = [t for t in text.split(",") if t.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated list of rates")
    return tuple(_positive_float(t.strip()) for t in parts)


def _depth(text):
    val = _positive_int(text)
    if val > graphs.MAX_TREE_DEPTH:
        raise argparse.ArgumentTypeError(f"depth must be at most {graphs.MAX_TREE_DEPTH}")
    return val


def build_parser():
    p = _Parser(prog="hyperdescent", description="Optimization on the Poincare ball.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-graph", help="write a complete binary tree edge list")
    g.add_argument("--depth", type=_depth, required=True)
    g.add_argument("--mode", choices=("undirected", "closure"), default="undirected")
    g.add_argument("--out", required=True)

    b = sub.add_parser("barycenter", help="two-anchor barycenter experiment")
    b.add_argument("--rates", type=_rate_list, default=bc.DEFAULT_RATES)
    b.add_argument("--iters", type=_positive_int, default=10000)
    b.add_argument("--seed", type=_nonneg_int, default=0)
    b.add_argument("--outdir", required=True)

    e = sub.add_parser("embed", help="train a Poincare embedding of a graph")
    e.add_argument("--graph", required=True)
    e.add_argument("--dim", type=_positive_int, default=2)
    e.add_argument("--lr", type=_positive_float, default=0.01)
    e.add_argument("--rule", choices=RULES, default="geodesic")
    e.add_argument("--negatives", type=_nonneg_int, default=0)
    e.add_argument("--steps", type=_nonneg_int, default=100000)
    e.add_argument("--seed", type=_nonneg_int, default=0)
    e.add_argument("--out", required=True, help="output directory")

    v = sub.add_parser("eval", help="full loss and Kendall tau of an embedding")
    v.add_argument("--graph", required=True)
    v.add_argument("--embedding", required=True)
    v.add_argument("--out", help="optional JSON output path")

    s = sub.add_parser("expmap-selftest", help="randomized exponential map checks")
    s.add_argument("--samples", type=_positive_int, default=100000)
    s.add_argument("--seed", type=_nonneg_int, default=0)
    s.add_argument("--out", help="optional JSON output path")
    return p


def _clean(val):
    # JSON has no NaN or infinity; store those as null
    if isinstance(val, (bool, np.bool_)):
        return bool(val)
    if isinstance(val, (int, np.integer)):
        return int(val)
    if isinstance(val, (float, np.floating)):
        return float(val) if math.isfinite(val) else None
    return val


def write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({k: _clean(v) for k, v in data.items()}, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _rate_tag(rate):
    return format(rate, "g")


def cmd_gen_graph(args):
    mode = "directed_closure" if args.mode == "closure" else "undirected"
    g = graphs.complete_binary_tree(args.depth, mode)
    graphs.save_edge_list(g, args.out)
    print(f"wrote {len(g.edges)} edges on {g.num_nodes} nodes to {args.out}")
    return EXIT_OK


def bias_summary():
    """Flat dict of the bias-probe checks at the default step sizes."""
    out = {}
    for eta in BIAS_ETAS:
        pr = bc.bias_probe(BIAS_EPS, eta)
        key = f"bias_eta{_rate_tag(eta)}"
        out[key + "_geo_left"] = pr.geo_left
        out[key + "_geo_right"] = pr.geo_right
        out[key + "_geo_balanced"] = abs(pr.geo_left - pr.geo_right) <= BIAS_BALANCE_TOL
        out[key + "_nat_left"] = pr.nat_left
        out[key + "_nat_right"] = pr.nat_right
        out[key + "_nat_outward"] = pr.nat_left < pr.nat_right
        err = max(abs(pr.nat_left_coord - pr.closed_left), abs(pr.nat_right_coord - pr.closed_right))
        out[key + "_closed_form_error"] = err
        out[key + "_closed_form_match"] = err <= BIAS_CLOSED_TOL
    return out


def cmd_barycenter(args):
    os.makedirs(args.outdir, exist_ok=True)
    cells = bc.experiment_4_1(args.rates, args.iters, args.seed)
    summary = {"iterations": args.iters, "seed": args.seed,
               "rates": ",".join(_rate_tag(r) for r in args.rates)}
    for c in cells:
        tag = f"{c.rule}_lr{_rate_tag(c.rate)}"
        with open(os.path.join(args.outdir, f"loss_{tag}.csv"), "w", newline="\n") as fh:
            fh.write("iteration,loss,excessLoss\n")
            for t, f in enumerate(c.losses):
                fh.write(f"{t},{format_float(f)},{format_float(f - c.optimum_loss)}\n")
        counts, edges = c.histogram()
        with open(os.path.join(args.outdir, f"offsets_{tag}.csv"), "w", newline="\n") as fh:
            fh.write("binLeft,binRight,count\n")
            for lo, hi, k in zip(edges[:-1], edges[1:], counts):
                fh.write(f"{format_float(lo)},{format_float(hi)},{int(k)}\n")
        summary[tag + "_failed"] = c.failed
        summary[tag + "_reason"] = c.reason
        summary[tag + "_final_loss"] = c.losses[-1]
        summary[tag + "_mean_offset"] = c.mean_offset
        summary[tag + "_mean_abs_offset"] = c.mean_abs_offset
        summary[tag + "_min_distance_to_opt"] = float(np.min(c.distances_to_opt))
        summary[tag + "_clip_events"] = c.clip_events
    summary["optimum_loss"] = cells[0].optimum_loss
    summary.update(bias_summary())
    write_json(os.path.join(args.outdir, "summary.json"), summary)
    n_failed = sum(c.failed for c in cells)
    print(f"wrote {len(cells)} cells to {args.outdir} ({n_failed} flagged as failed)")
    return EXIT_CHECK if n_failed == len(cells) else EXIT_OK


def cmd_embed(args):
    g = graphs.load_edge_list(args.graph)
    cfg = emb.TrainConfig(dim=args.dim, lr=args.lr, negatives=args.negatives,
                          steps=args.steps, seed=args.seed, rule=args.rule)
    state, trace = emb.train(g, cfg)
    os.makedirs(args.out, exist_ok=True)
    emb.export_embedding(state, g, os.path.join(args.out, "embedding.tsv"))
    trace.to_csv(os.path.join(args.out, "trace.csv"))
    result = {"graph": args.graph, "rule": args.rule, "lr": args.lr, "dim": args.dim,
              "negatives": args.negatives, "steps": args.steps, "seed": args.seed,
              "failed": trace.failed, "reason": trace.reason, "clip_lock": trace.clip_lock,
              "clip_events": trace.clip_events, "mean_last_loss": trace.mean_last,
              "steps_completed": len(trace.surrogate_loss)}
    if np.all(np.isfinite(state.positions)):
        rec = emb.evaluate(state, g)
        result["full_loss"], result["tau"] = rec.full_loss, rec.tau
    else:
        result["full_loss"] = result["tau"] = None
    write_json(os.path.join(args.out, "eval.json"), result)
    print(f"tau={result['tau']} full_loss={result['full_loss']} failed={trace.failed}")
    return EXIT_OK


def cmd_eval(args):
    g = graphs.load_edge_list(args.graph)
    state = emb.load_embedding(args.embedding, g)
    rec = emb.evaluate(state, g)
    result = {"full_loss": rec.full_loss, "tau": rec.tau}
    if args.out:
        write_json(args.out, result)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_selftest(args):
    report = run_selftest(args.samples, args.seed)
    shown = {k: v for k, v in report.items() if not k.endswith("_seconds")}
    for k in sorted(shown):
        print(f"{k}: {shown[k]}")
    if args.out:
        write_json(args.out, shown)
    return EXIT_OK if report["passed"] else EXIT_CHECK


COMMANDS = {
    "gen-graph": cmd_gen_graph,
    "barycenter": cmd_barycenter,
    "embed": cmd_embed,
    "eval": cmd_eval,
    "expmap-selftest": cmd_selftest,
}


def main(argv=None):
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (OSError, graphs.GraphFormatError, graphs.DisconnectedGraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
