"""Monte Carlo estimate of the number of reachable positions.

Unique ranks are drawn uniformly from the candidate space, each rank is
classified through the funnel, and the reachable fraction is scaled by the
size of the space. Work is split into batches that are classified
independently (optionally in worker processes) and appended to a JSON-lines
checkpoint, so an interrupted run resumes where it stopped. The report
depends only on (n_samples, seed, budget); worker count and scheduling do not
change it.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .codec import total_space, unrank_raw
from .legality import classify_raw
from .retro import DEFAULT_PARAMS, HeuristicParams, SearchBudget

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
Z_95 = 1.959963984540054


class CheckpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleConfig:
    n_samples: int
    seed: int = 0
    worker_count: int = 1
    budget: SearchBudget = field(default_factory=SearchBudget)
    checkpoint_path: str | os.PathLike | None = None
    batch_size: int = 10_000
    params: HeuristicParams = DEFAULT_PARAMS

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned value")


@dataclass
class FunnelCounts:
    generated: int = 0
    passed_flip: int = 0
    passed_pawn: int = 0
    passed_check: int = 0
    reachable: int = 0
    backtrack_ply_histogram: dict[int, int] = field(default_factory=dict)
    exhausted: int = 0

    def add(self, other: "FunnelCounts") -> None:
        self.generated += other.generated
        self.passed_flip += other.passed_flip
        self.passed_pawn += other.passed_pawn
        self.passed_check += other.passed_check
        self.reachable += other.reachable
        self.exhausted += other.exhausted
        for ply, n in other.backtrack_ply_histogram.items():
            self.backtrack_ply_histogram[ply] = self.backtrack_ply_histogram.get(ply, 0) + n
        self.backtrack_ply_histogram = dict(sorted(self.backtrack_ply_histogram.items()))

    def stage_counts(self) -> list[int]:
        return [self.generated, self.passed_flip, self.passed_pawn, self.passed_check, self.reachable]

    def check_invariants(self) -> None:
        counts = self.stage_counts()
        if any(a < b for a, b in zip(counts, counts[1:])):
            raise AssertionError(f"funnel not monotone: {counts}")
        if sum(self.backtrack_ply_histogram.values()) != self.passed_check - self.reachable - self.exhausted:
            raise AssertionError("ply histogram does not cover the unreachable samples")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["backtrack_ply_histogram"] = {str(k): v for k, v in sorted(self.backtrack_ply_histogram.items())}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FunnelCounts":
        d = dict(d)
        d["backtrack_ply_histogram"] = {int(k): v for k, v in d.get("backtrack_ply_histogram", {}).items()}
        return cls(**d)


@dataclass(frozen=True)
class EstimateReport:
    funnel: FunnelCounts
    p_hat: float
    ci_low: float
    ci_high: float
    count_low: float
    count_high: float
    count_point: float
    n_samples: int
    seed: int
    total_space: int

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "funnel"}
        d["funnel"] = self.funnel.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def format_table(self) -> str:
        f = self.funnel
        rows = [
            ("Initial Generation", f.generated),
            ("Horizontal Flip", f.passed_flip),
            ("Pawn Placement", f.passed_pawn),
            ("Opponent King Check", f.passed_check),
            ("Reachability", f.reachable),
        ]
        lines = [f"{'Check Content':<22}{'Number Passed':>16}", "-" * 38]
        lines += [f"{name:<22}{n:>16,}" for name, n in rows]
        lines += ["", f"{'Ply':<22}{'Number of Positions':>20}", "-" * 42]
        lines += [f"{ply:<22}{n:>20,}" for ply, n in sorted(f.backtrack_ply_histogram.items())]
        lines += [
            "",
            f"p_hat      = {self.p_hat:.6f}",
            f"95% CI     = [{self.ci_low:.6f}, {self.ci_high:.6f}]",
            f"|S_all|    = {self.total_space:,}",
            f"reachable  ~ {self.count_point:.4e}  [{self.count_low:.4e}, {self.count_high:.4e}]",
        ]
        if f.exhausted:
            lines.append(f"WARNING: {f.exhausted} searches exhausted their budget")
        return "\n".join(lines)


def confidence_interval(k: int, n: int, method: str = "wald") -> tuple[float, float]:
    """95% binomial interval for k successes in n trials, clamped to [0, 1]."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError("need n >= 1 and 0 <= k <= n")
    p = k / n
    if method == "wald":
        half = Z_95 * math.sqrt(p * (1 - p) / n)
        lo, hi = p - half, p + half
    elif method == "wilson":
        z2 = Z_95 * Z_95
        centre = (p + z2 / (2 * n)) / (1 + z2 / n)
        half = Z_95 * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
        lo, hi = centre - half, centre + half
    else:
        raise ValueError(f"unknown interval method {method!r}")
    return max(0.0, lo), min(1.0, hi)


def sample_ranks(n: int, seed: int) -> list[int]:
    """``n`` distinct ranks, uniform over the candidate space.

    Raw 64-bit draws from a Philox stream are rejected when >= |S_all| and
    deduplicated keeping first occurrences, so a smaller ``n`` yields a
    prefix of a larger one.
    """
    total = total_space()
    if n > total // 2:
        raise ValueError("sample larger than half the space")
    bg = np.random.Philox(seed)
    limit = np.uint64(total)
    out = np.empty(0, dtype=np.uint64)
    while len(out) < n:
        need = n - len(out)
        draw = bg.random_raw(int(need / 0.85) + 64)
        merged = np.concatenate([out, draw[draw < limit]])
        _, first = np.unique(merged, return_index=True)
        first.sort()
        out = merged[first]
    return [int(x) for x in out[:n]]


def classify_ranks(ranks: Iterable[int], params: HeuristicParams, budget: SearchBudget) -> FunnelCounts:
    fc = FunnelCounts()
    reached = [0] * 5
    for r in ranks:
        v = classify_raw(unrank_raw(r), params, budget)
        reached[v.stage] += 1
        if v.exhausted:
            fc.exhausted += 1
            logger.warning("search budget exhausted at rank %d", r)
        elif v.failure == "Reachability":
            fc.backtrack_ply_histogram[v.ply] = fc.backtrack_ply_histogram.get(v.ply, 0) + 1
    running = 0
    for i in range(4, -1, -1):
        running += reached[i]
        reached[i] = running
    fc.generated, fc.passed_flip, fc.passed_pawn, fc.passed_check, fc.reachable = reached
    fc.backtrack_ply_histogram = dict(sorted(fc.backtrack_ply_histogram.items()))
    return fc


def _batch_job(index: int, ranks: list[int], params: HeuristicParams, budget: SearchBudget):
    return index, classify_ranks(ranks, params, budget)


def _digest(ranks: list[int]) -> str:
    h = hashlib.sha256()
    for r in ranks:
        h.update(r.to_bytes(8, "little"))
    return h.hexdigest()[:16]


def _header(config: SampleConfig) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "seed": config.seed,
        "n_samples": config.n_samples,
        "batch_size": config.batch_size,
        "budget": asdict(config.budget),
        "params": asdict(config.params),
    }


def read_checkpoint(path: str | os.PathLike, config: SampleConfig, batches: list[list[int]]) -> dict[int, FunnelCounts]:
    """Completed batches from a checkpoint file.

    A malformed final line (an interrupted write) is dropped and the file is
    truncated back to the last complete record. Anything else that does not
    match ``config`` raises CheckpointError.
    """
    path = Path(path)
    if not path.exists():
        return {}
    raw = path.read_bytes()
    complete, _, partial = raw.rpartition(b"\n")
    if partial:
        logger.warning("dropping partial checkpoint record in %s", path)
        with open(path, "r+b") as fh:
            fh.truncate(len(complete) + 1 if complete else 0)
    header = _header(config)
    done: dict[int, FunnelCounts] = {}
    for lineno, line in enumerate(complete.split(b"\n") if complete else [], 1):
        try:
            rec = json.loads(line)
            idx = rec["batch_index"]
            n_in_batch = rec["n_in_batch"]
            digest = rec["digest"]
            counts = FunnelCounts.from_dict(rec["counts"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CheckpointError(f"corrupt checkpoint line {lineno} in {path}") from exc
        for key, value in header.items():
            if rec.get(key) != value:
                raise CheckpointError(f"checkpoint {key} mismatch: {rec.get(key)!r} != {value!r}")
        if not 0 <= idx < len(batches) or n_in_batch != len(batches[idx]):
            raise CheckpointError(f"checkpoint batch {idx} does not fit this run")
        if digest != _digest(batches[idx]):
            raise CheckpointError(f"checkpoint batch {idx} covers different ranks")
        done[idx] = counts
    return done


def _write_record(fh, config: SampleConfig, index: int, ranks: list[int], fc: FunnelCounts) -> None:
    rec = _header(config)
    rec.update(batch_index=index, n_in_batch=len(ranks), digest=_digest(ranks), counts=fc.to_dict())
    fh.write(json.dumps(rec, sort_keys=True) + "\n")
    fh.flush()
    os.fsync(fh.fileno())


def make_report(funnel: FunnelCounts, seed: int, ci_method: str = "wald") -> EstimateReport:
    total = total_space()
    n = funnel.generated
    p = funnel.reachable / n
    lo, hi = confidence_interval(funnel.reachable, n, ci_method)
    return EstimateReport(
        funnel=funnel,
        p_hat=p,
        ci_low=lo,
        ci_high=hi,
        count_low=lo * total,
        count_high=hi * total,
        count_point=p * total,
        n_samples=n,
        seed=seed,
        total_space=total,
    )


def run(
    config: SampleConfig,
    progress: Callable[[int, int], None] | None = None,
    ci_method: str = "wald",
) -> EstimateReport:
    ranks = sample_ranks(config.n_samples, config.seed)
    bs = config.batch_size
    batches = [ranks[i:i + bs] for i in range(0, len(ranks), bs)]
    done: dict[int, FunnelCounts] = {}
    if config.checkpoint_path is not None:
        done = read_checkpoint(config.checkpoint_path, config, batches)
        if done:
            logger.info("resuming: %d of %d batches already done", len(done), len(batches))
    todo = [i for i in range(len(batches)) if i not in done]

    fh = open(config.checkpoint_path, "a", encoding="utf-8") if config.checkpoint_path is not None else None
    try:
        def finish(idx: int, fc: FunnelCounts) -> None:
            done[idx] = fc
            if fh is not None:
                _write_record(fh, config, idx, batches[idx], fc)
            if progress is not None:
                progress(len(done), len(batches))

        if config.worker_count == 1 or len(todo) <= 1:
            for idx in todo:
                finish(*_batch_job(idx, batches[idx], config.params, config.budget))
        else:
            with ProcessPoolExecutor(config.worker_count) as pool:
                futures = [pool.submit(_batch_job, idx, batches[idx], config.params, config.budget) for idx in todo]
                for fut in as_completed(futures):
                    finish(*fut.result())
    finally:
        if fh is not None:
            fh.close()

    funnel = FunnelCounts()
    for idx in range(len(batches)):
        funnel.add(done[idx])
    funnel.check_invariants()
    if funnel.exhausted:
        logger.error("%d searches exhausted their budget; the estimate is not trustworthy", funnel.exhausted)
    return make_report(funnel, config.seed, ci_method)
