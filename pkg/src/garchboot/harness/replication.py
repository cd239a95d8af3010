"""Seeded, order-independent execution of Monte-Carlo replications."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import traceback
from typing import Any, Callable

from garchboot.seeding import derive_seed

__all__ = ["ReplicationOutcome", "run_replications"]

log = logging.getLogger(__name__)


@dataclass
class ReplicationOutcome:
    """Successful results ordered by replication index, plus failed indices."""

    label: str
    R: int
    indices: list[int] = field(default_factory=list)
    records: list[Any] = field(default_factory=list)
    failures: list[int] = field(default_factory=list)

    @property
    def n_failures(self) -> int:
        return len(self.failures)


def _run_one(task: Callable[[int, int], Any], r: int, seed: int):
    try:
        return r, True, task(r, seed)
    except Exception:  # a failed replication must not stop the experiment
        return r, False, traceback.format_exc()


def run_replications(
    task: Callable[[int, int], Any],
    R: int,
    master_seed: int,
    label: str,
    threads: int = 1,
) -> ReplicationOutcome:
    """Call ``task(r, seed_r)`` for ``r = 0..R-1`` with ``seed_r = derive_seed(master_seed, label, r)``.

    With ``threads > 1`` replications run in a process pool; ``task`` must
    then be picklable (a module-level function or a ``functools.partial``
    of one).  Results are collected by index, so the outcome does not
    depend on scheduling.
    """
    if R < 1:
        raise ValueError("R must be positive")
    seeds = [derive_seed(master_seed, label, r) for r in range(R)]
    if threads <= 1 or R == 1:
        results = [_run_one(task, r, seeds[r]) for r in range(R)]
    else:
        chunk = max(1, R // (4 * threads))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, [task] * R, range(R), seeds, chunksize=chunk))
    results.sort(key=lambda item: item[0])
    out = ReplicationOutcome(label, R)
    for r, ok, value in results:
        if ok:
            out.indices.append(r)
            out.records.append(value)
        else:
            log.warning("replication %d of %s failed:\n%s", r, label, value)
            out.failures.append(r)
    return out
