"""Seed derivation and optional worker-pool execution.

Every stage draws randomness from a substream keyed by (base seed, stage
key), so one global seed reproduces an entire run and stages stay
independent. ``LIMI_WORKERS`` selects the process count for the decode /
predict fan-out; results merge in task order, so worker count never changes
outputs.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

# substream keys, one per seeded stage
AUX_LATENTS = 11
AUX_BALANCE = 12
EVAL_LATENTS = 13
PROBE_LATENTS = 14
RETRAIN_PICK = 15
ATN_SUBSAMPLE = 16
IFR_SAMPLE = 17

WORKERS_ENV = "LIMI_WORKERS"


def stage_seed(base_seed: int, key: int) -> list[int]:
    """Seed material for one stage; feed to ``numpy.random.default_rng``."""
    return [int(base_seed), int(key)]


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, tasks: list) -> list:
    """Run ``fn`` over tasks, in-process or on a worker pool, preserving order."""
    workers = worker_count()
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
