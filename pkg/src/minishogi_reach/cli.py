"""Command-line entry point: ``minishogi-reach <command> ...``.

Exit codes: 0 success, 1 usage or input error, 2 verification failure,
3 search budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from . import codec, estimator, legality, oracle, retro, rules

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_EXHAUSTED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _sfen_arg(parts: list[str]) -> str:
    text = " ".join(parts) if parts else sys.stdin.read()
    return text.strip()


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, sort_keys=True) if args.json else text)


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", type=float, default=10.0, help="weight of board piece count")
    p.add_argument("--b", type=float, default=10.0, help="weight of promoted piece count")
    p.add_argument("--c", type=float, default=1.0, help="weight of promoted pieces' distance")
    p.add_argument("--d", type=float, default=1.0, help="weight of the close-kings penalty")
    p.add_argument("--budget", type=_positive, default=retro.DEFAULT_BUDGET.max_nodes,
                   help="max expanded nodes per search")
    p.add_argument("--max-open", type=_positive, default=None, help="max open-set size per search")


def _params(args) -> retro.HeuristicParams:
    return retro.HeuristicParams(args.a, args.b, args.c, args.d)


def _budget(args) -> retro.SearchBudget:
    return retro.SearchBudget(args.budget, args.max_open)


def cmd_count(args) -> int:
    total = codec.total_space()
    _emit(args, {"total": total, "kpos_count": codec.kpos_count(), "patterns": codec.N_PATTERNS}, str(total))
    return EXIT_OK


def cmd_rank(args) -> int:
    pos = rules.from_text(_sfen_arg(args.sfen))
    r = codec.rank(pos)
    _emit(args, {"rank": r, "sfen": rules.to_text(pos)}, str(r))
    return EXIT_OK


def cmd_unrank(args) -> int:
    pos = codec.unrank(args.rank)
    text = rules.to_text(pos)
    _emit(args, {"rank": args.rank, "sfen": text}, text)
    return EXIT_OK


def cmd_check(args) -> int:
    pos = rules.from_text(_sfen_arg(args.sfen))
    if not codec.in_candidate_space(pos):
        raise ValueError("position is not in the candidate space (first player to move, first king on files a-c, "
                         "second king on files a-c when the first is on c)")
    verdict = legality.classify(pos, _params(args), _budget(args))
    payload = {
        "sfen": rules.to_text(pos),
        "stage": verdict.stage.name,
        "failure": verdict.failure,
        "ply": verdict.ply,
        "exhausted": verdict.exhausted,
        "verdict": verdict.describe(),
    }
    _emit(args, payload, verdict.describe())
    return EXIT_EXHAUSTED if verdict.exhausted else EXIT_OK


def cmd_estimate(args) -> int:
    config = estimator.SampleConfig(
        n_samples=args.samples,
        seed=args.seed,
        worker_count=args.workers,
        budget=_budget(args),
        checkpoint_path=args.checkpoint,
        batch_size=args.batch_size,
        params=_params(args),
    )
    t0 = time.time()

    def show_progress(done: int, total: int) -> None:
        print(f"[{time.time() - t0:8.1f}s] batch {done}/{total}", file=sys.stderr, flush=True)

    report = estimator.run(config, progress=show_progress if args.progress else None, ci_method=args.ci)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    print(report.to_json() if args.json else report.format_table())
    return EXIT_EXHAUSTED if report.funnel.exhausted else EXIT_OK


def cmd_oracle_verify(args) -> int:
    t0 = time.time()
    fs = oracle.forward_enumerate(args.depth)
    states = sorted(p.state for p in fs.positions)
    budget = _budget(args)
    params = _params(args)
    if args.workers > 1 and len(states) > args.workers:
        from concurrent.futures import ProcessPoolExecutor

        chunk = max(1, len(states) // (args.workers * 8))
        parts = [states[i:i + chunk] for i in range(0, len(states), chunk)]
        with ProcessPoolExecutor(args.workers) as pool:
            results = pool.map(oracle.verify_members, parts, [params] * len(parts), [budget] * len(parts))
            violations = [v for part in results for v in part]
    else:
        violations = oracle.verify_members(states, params, budget)
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            fh.write("\n".join(fs.dump()) + "\n")
    payload = {
        "depth": args.depth,
        "positions": len(states),
        "new_per_depth": fs.new_per_depth,
        "violations": len(violations),
        "offending": [{"sfen": s, "problem": why} for s, why in violations],
        "seconds": round(time.time() - t0, 1),
    }
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for d, n in enumerate(fs.new_per_depth):
            print(f"depth {d}: {n} new positions")
        print(f"total {len(states)} positions, {len(violations)} violations")
        for s, why in violations:
            print(f"  {s}  {why}")
    if any("Exhausted" in why for _, why in violations):
        return EXIT_EXHAUSTED
    return EXIT_VERIFY if violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="minishogi-reach", description="Estimate the number of reachable Minishogi positions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="print the size of the candidate space")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("rank", help="rank of a candidate position")
    p.add_argument("sfen", nargs="*", help="position text (read from stdin when omitted)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("unrank", help="candidate position of a rank")
    p.add_argument("rank", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_unrank)

    p = sub.add_parser("check", help="run the elimination funnel on one position")
    p.add_argument("sfen", nargs="*")
    p.add_argument("--json", action="store_true")
    _search_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("estimate", help="sample the candidate space and estimate the reachable count")
    p.add_argument("--samples", type=_positive, required=True)
    p.add_argument("--seed", type=_non_negative, default=0)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--batch-size", type=_positive, default=10_000)
    p.add_argument("--checkpoint", default=None, help="JSON-lines checkpoint file (resumed if present)")
    p.add_argument("--output", default=None, help="write the JSON report here")
    p.add_argument("--ci", choices=("wald", "wilson"), default="wald")
    p.add_argument("--progress", action="store_true")
    p.add_argument("--json", action="store_true")
    _search_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("oracle-verify", help="check forward-reachable positions against the funnel and codec")
    p.add_argument("--depth", type=_non_negative, required=True)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--dump", default=None, help="write sorted representative positions here")
    p.add_argument("--json", action="store_true")
    _search_flags(p)
    p.set_defaults(func=cmd_oracle_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, estimator.CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
