"""Command line entry point: ``tdrl {generate,solve,train,eval,entropy}``.

Exit codes: 0 success, 1 usage error, 2 unreadable input (graph, checkpoint or
config), 3 branch and bound ran out of time before proving optimality.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .decomposition import format_td, td_from_order
from .evaluation import METHODS, approximation_ratio, entropy_trace, solve
from .graph import ErConfig, GrParseError, generate_er, make_rng, parse_gr, write_gr
from .policy import load_net, save_net
from .training import TrainConfig, format_log, restore_optimizer, train, training_state

log = logging.getLogger("tdrl")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code

    def __reduce__(self):
        return (CliError, (str(self), self.code))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_graph(path: str | Path):
    try:
        return parse_gr(Path(path).read_bytes())
    except OSError as e:
        raise CliError(f"cannot read {path}: {e}", EXIT_INPUT) from e
    except GrParseError as e:
        raise CliError(f"{path}: {e}", EXIT_INPUT) from e


def _load_net(path: str | Path):
    try:
        return load_net(path)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise CliError(f"bad checkpoint {path}: {e}", EXIT_INPUT) from e


def _write(out: str | None, text: str) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------


def sweep_sizes(count: int = 100, lo: int = 10, hi: int = 1000) -> list[int]:
    """``count`` node counts spread evenly over ``[lo, hi]``."""
    if count == 1:
        return [lo]
    return [round(lo + i * (hi - lo) / (count - 1)) for i in range(count)]


def cmd_generate(args) -> int:
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create {out}: {e}") from e
    if args.sweep:
        sizes = sweep_sizes(args.count)
    elif args.n is not None:
        sizes = [args.n] * args.count
    else:
        raise CliError("either --n or --sweep is required")
    for i, n in enumerate(sizes):
        seed = args.seed + i
        g = generate_er(ErConfig(n, args.p, seed))
        path = out / f"er_n{n}_s{seed}.gr"
        try:
            path.write_bytes(write_gr(g))
        except OSError as e:
            raise CliError(f"cannot write {path}: {e}") from e
        print(path)
    return EXIT_OK


def _solve_one(task):
    path, method, k, checkpoint, seed, budget = task
    g = _read_graph(path)
    net = _load_net(checkpoint)[0] if method == "agent" else None
    sol = solve(g, method, seed=seed, k=k, net=net, time_budget=budget)
    return path, g, sol


def _run_tasks(tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_one, tasks))
    return [_solve_one(t) for t in tasks]


def _need_seed(args, methods):
    if args.seed is None and any(m in ("random", "agent") for m in methods):
        raise CliError("--seed is required for stochastic methods (random, agent)")


def cmd_solve(args) -> int:
    if args.method == "agent" and not args.checkpoint:
        raise CliError("--checkpoint is required for --method agent")
    _need_seed(args, [args.method])
    seed = args.seed or 0
    tasks = [(p, args.method, args.k, args.checkpoint, seed, args.time_budget) for p in args.input]
    results = _run_tasks(tasks, args.jobs)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["graph", "method", "width", "seconds", "proven_optimal", "order"])
    code = EXIT_OK
    for path, g, sol in results:
        w.writerow([path, sol.method, sol.width, f"{sol.seconds:.6f}",
                    "" if sol.proven_optimal is None else int(sol.proven_optimal),
                    " ".join(map(str, sol.order))])
        if sol.proven_optimal is False:
            code = EXIT_BUDGET
        if args.td_out:
            td = td_from_order(g, sol.order)
            td_dir = Path(args.td_out)
            if len(results) == 1 and td_dir.suffix == ".td":
                target = td_dir
            else:
                td_dir.mkdir(parents=True, exist_ok=True)
                target = td_dir / (Path(path).stem + ".td")
            target.write_text(format_td(td, g.num_nodes()))
    _write(args.out, buf.getvalue())
    return code


def _train_config(args) -> TrainConfig:
    try:
        config = TrainConfig.load(args.config) if args.config else TrainConfig()
    except (OSError, ValueError) as e:
        raise CliError(f"bad config {args.config}: {e}", EXIT_INPUT) from e
    return config.replace(
        seed=args.seed,
        epochs=args.epochs,
        updates_per_epoch=args.updates_per_epoch,
        episodes_per_update=args.episodes_per_update,
        lr=args.lr,
        beta_entropy=args.beta_entropy,
    )


class _ErSource:
    """Fresh ER graph per update with a size drawn from ``[lo, hi]``; picklable."""

    def __init__(self, lo: int, hi: int, seed: int):
        self.lo, self.hi, self.seed = lo, hi, seed

    def __call__(self, update: int):
        rng = make_rng([self.seed, update, 7])
        n = int(rng.integers(self.lo, self.hi + 1))
        return generate_er(ErConfig(n, None, int(rng.integers(2**63))))


def cmd_train(args) -> int:
    config = _train_config(args)
    if args.graph:
        source = _read_graph(args.graph)
    elif args.er_n:
        source = generate_er(ErConfig(args.er_n, args.p, args.graph_seed))
    elif args.sample_er:
        lo, _, hi = args.sample_er.partition(":")
        source = _ErSource(int(lo), int(hi or lo), config.seed)
    else:
        raise CliError("one of --graph, --er-n or --sample-er is required")

    net = optimizer = None
    start = 0
    if args.resume:
        net, extra = _load_net(args.resume)
        optimizer, start = restore_optimizer(net, extra, config)

    def progress(row):
        log.info("update %d: mean width %.3f, return %.3f", row["update_idx"], row["mean_width"], row["mean_return"])

    result = train(source, config, net=net, optimizer=optimizer, start_update=start,
                   record_time=not args.no_timing, on_update=progress)
    save_net(result.net, args.out, extra=training_state(result))
    log_path = args.log or str(args.out) + ".csv"
    text = format_log(result.log)
    if args.resume and Path(log_path).exists():
        # append rows, keep the single header
        text = Path(log_path).read_text() + text.split("\n", 1)[1]
    Path(log_path).write_text(text)
    print(f"wrote {args.out} and {log_path} ({len(result.log)} updates)")
    return EXIT_OK


def cmd_eval(args) -> int:
    gdir = Path(args.graph_dir)
    files = sorted(gdir.glob("*.gr")) if gdir.is_dir() else []
    if not files:
        raise CliError(f"no .gr files in {gdir}")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods + [args.reference]:
        if m not in METHODS:
            raise CliError(f"unknown method {m!r}")
    if args.reference not in methods:
        methods.append(args.reference)
    if "agent" in methods and not args.checkpoint:
        raise CliError("--checkpoint is required for the agent method")
    _need_seed(args, methods)
    seed = args.seed or 0
    widths: dict[str, list[int]] = {m: [] for m in methods}
    seconds: dict[str, list[float]] = {m: [] for m in methods}
    for m in methods:
        tasks = [(str(f), m, args.k, args.checkpoint, seed, args.time_budget) for f in files]
        for _, _, sol in _run_tasks(tasks, args.jobs):
            widths[m].append(sol.width)
            seconds[m].append(sol.seconds)
    report = approximation_ratio(widths, args.reference, seconds, [f.name for f in files])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    Path(str(out) + ".json").write_text(report.to_json() + "\n")
    Path(str(out) + ".csv").write_text(report.summary_csv())
    Path(str(out) + ".graphs.csv").write_text(report.per_graph_csv())
    sys.stdout.write(report.summary_csv())
    if report.excluded:
        log.warning("excluded %d graphs with reference width 0: %s", len(report.excluded), report.excluded)
    return EXIT_OK


def cmd_entropy(args) -> int:
    net, _ = _load_net(args.checkpoint)
    g = _read_graph(args.graph)
    trace = entropy_trace(net, g, args.seed)
    _write(args.out, trace.to_csv())
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tdrl", description="Treewidth by elimination ordering: heuristics, exact search, learned policy.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write Erdos-Renyi graphs as .gr files")
    g.add_argument("--n", type=int, help="node count of every graph")
    g.add_argument("--sweep", action="store_true", help="spread node counts evenly over 10..1000")
    g.add_argument("--p", type=float, default=None, help="edge probability (default 5/n)")
    g.add_argument("--count", type=int, default=1, help="number of graphs (default 1; use 100 with --sweep)")
    g.add_argument("--seed", type=int, required=True, help="seed of the first graph; graph i uses seed+i")
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="compute an elimination order for .gr files")
    s.add_argument("input", nargs="+", help=".gr file(s)")
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--k", type=int, default=10, help="agent samples per graph (best of k)")
    s.add_argument("--checkpoint", help="trained network (agent method)")
    s.add_argument("--seed", type=int, help="required for random and agent")
    s.add_argument("--time-budget", type=float, default=None, help="seconds per graph for bnb")
    s.add_argument("--td-out", help="write PACE .td decompositions to this directory (or file for one graph)")
    s.add_argument("--out", default="-", help="CSV result file (default stdout)")
    s.add_argument("--jobs", type=int, default=1, help="graphs solved in parallel")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("train", help="train the GCN policy with actor-critic")
    src = t.add_mutually_exclusive_group()
    src.add_argument("--graph", help="train on this .gr graph")
    src.add_argument("--er-n", type=int, help="train on one ER graph with this many nodes")
    src.add_argument("--sample-er", metavar="MIN:MAX", help="draw a new ER graph of MIN..MAX nodes every update")
    t.add_argument("--p", type=float, default=None, help="edge probability for --er-n (default 5/n)")
    t.add_argument("--graph-seed", type=int, default=0, help="seed for the --er-n graph")
    t.add_argument("--config", help="JSON or TOML file with TrainConfig fields")
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--epochs", type=int)
    t.add_argument("--updates-per-epoch", type=int)
    t.add_argument("--episodes-per-update", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--beta-entropy", type=float)
    t.add_argument("--resume", help="continue from this checkpoint (parameters and optimizer state)")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--log", help="CSV training log (default <out>.csv)")
    t.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 so logs are byte-reproducible")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="approximation ratios of several methods over a graph directory")
    e.add_argument("graph_dir")
    e.add_argument("--methods", default="min-degree,min-fill,random", help="comma-separated methods")
    e.add_argument("--reference", default="exact", choices=METHODS)
    e.add_argument("--checkpoint")
    e.add_argument("--k", type=int, default=10)
    e.add_argument("--seed", type=int)
    e.add_argument("--time-budget", type=float, default=None)
    e.add_argument("--out", required=True, help="output prefix; writes .json, .csv and .graphs.csv")
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    h = sub.add_parser("entropy", help="normalized policy entropy along one sampled rollout")
    h.add_argument("--checkpoint", required=True)
    h.add_argument("--graph", required=True)
    h.add_argument("--seed", type=int, required=True)
    h.add_argument("--out", default="-")
    h.set_defaults(func=cmd_entropy)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CliError as e:
        print(f"tdrl: error: {e}", file=sys.stderr)
        return e.code
    except ValueError as e:
        print(f"tdrl: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
