"""Command line entry point: ``d2dsim {fit,cluster,simulate,tail}``."""
from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import engine, social, tail
from .config import SweepSpec, load_config
from .errors import ConfigError, D2DSimError, DomainError, TraceFormatError, TraceParseError
from .trace import aggregate_contacts, read_trace

log = logging.getLogger("d2dsim")


@contextlib.contextmanager
def atomic_output(path):
    """Write to a temporary sibling and move it into place only on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".d2dsim-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def cmd_fit(args):
    stats = aggregate_contacts(read_trace(args.trace))
    graph = social.build_closeness_graph(stats, args.x_min, args.n_min)
    with atomic_output(args.out) as fh:
        social.write_graph_csv(graph, fh)
    log.info("wrote %d edges to %s", len(graph.edges), args.out)


def cmd_cluster(args):
    if not 0 <= args.w_t <= 1:
        raise ConfigError("must lie in [0, 1]", "--w-t")
    with open(args.graph, newline="") as fh:
        graph = social.read_graph_csv(fh)
    partition = social.build_offsn(graph, args.w_t)
    with atomic_output(args.out) as fh:
        social.write_partition_json(partition, fh)


def cmd_simulate(args):
    config, spec = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    spec = SweepSpec(
        args.sweep if args.sweep is not None else spec.parameter,
        tuple(float(v) for v in args.values.split(",")) if args.values else spec.values,
        args.reps if args.reps is not None else spec.reps,
        spec.relative,
    )
    if spec.parameter is None:
        values, reps = [None], 1 if args.reps is None else args.reps
    else:
        if not spec.values:
            raise ConfigError("a sweep needs values", "--values")
        values, reps = list(spec.values), spec.reps
    if args.emit_decisions and (len(values) > 1 or reps > 1):
        raise ConfigError("decision log needs a single run", "--emit-decisions")

    if spec.parameter == "c_c" and spec.relative:
        gain = engine.rate_gain(config)
        log.info("rate gain reference %.6g", gain)
        run_values = [v * gain for v in values]
    else:
        run_values = values

    rows = engine.sweep(config, spec.parameter, run_values if spec.parameter else [0.0], reps, args.workers)
    if spec.parameter is not None:
        back = {float(rv): v for rv, v in zip(run_values, values)}
        rows = [[back[float(r[0])]] + r[1:] for r in rows]
    else:
        rows = [[None] + r[1:] for r in rows]

    with atomic_output(args.out) as fh:
        engine.write_results_csv(rows, fh)
    if args.emit_decisions:
        m = engine.run_simulation(config, keep_decisions=True)
        with atomic_output(args.emit_decisions) as fh:
            engine.write_decisions_csv(m.decisions, fh)


def cmd_tail(args):
    if not args.alpha > 0:
        raise ConfigError("must be positive", "--alpha")
    if args.n < 2:
        raise ConfigError("must be at least 2", "--n")
    if args.samples < 1:
        raise ConfigError("must be at least 1", "--samples")
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    table = tail.build_table(args.alpha, args.n, args.samples, rng)
    log.info("saddlepoint mass deficit over k >= 0: %.3g", table.saddlepoint_deficit)
    with atomic_output(args.out) as fh:
        tail.write_table_csv(table, fh)


def build_parser():
    p = argparse.ArgumentParser(prog="d2dsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="encounter trace -> closeness graph CSV")
    f.add_argument("--trace", required=True)
    f.add_argument("--x-min", type=float, default=60.0)
    f.add_argument("--n-min", type=int, default=2)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("cluster", help="closeness graph -> OffSN partition JSON")
    c.add_argument("--graph", required=True)
    c.add_argument("--w-t", type=float, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("simulate", help="run the offloading simulation or a sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--sweep", choices=engine.SWEEPABLE)
    s.add_argument("--values", help="comma separated sweep values")
    s.add_argument("--reps", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--emit-decisions", metavar="PATH")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("tail", help="bounds, saddlepoint and empirical CDF table")
    t.add_argument("--alpha", type=float, default=20.0)
    t.add_argument("--n", type=int, default=4)
    t.add_argument("--samples", type=int, default=10000)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_tail)
    return p


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("D2DSIM_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"d2dsim: config error: {exc}", file=sys.stderr)
        return 2
    except (TraceParseError, TraceFormatError) as exc:
        print(f"d2dsim: trace error: {exc}", file=sys.stderr)
        return 1
    except (OSError, D2DSimError) as exc:
        print(f"d2dsim: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
