"""Latent candidate probing and discrimination checking.

Random latents are moved onto the surrogate hyperplane in one closed-form
step, and two candidates are placed a fixed walk length on either side of
the projected point. Each decoded tuple (on-plane, plus-side, minus-side)
is checked for individual discrimination by substituting every alternative
protected-attribute combination and comparing predictions; the first finding
in a tuple stops testing of the rest of that tuple.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import runtime
from .errors import LimiError, NoConvergence
from .models import Prediction
from .schema import Row, Schema, protected_combos
from .boundary import SurrogateBoundary


@dataclass(frozen=True)
class ProbeConfig:
    """Probing settings; desk-scale defaults (full scale: budget 1M, 1h limit).

    ``budget`` caps the number of decoded-and-tested cases, counting each
    tuple member actually evaluated. ``reuse_aux_seed`` replays the latent
    stream used to build the auxiliary dataset instead of drawing fresh
    latents.
    """

    lam: float = 0.3
    budget: int = 30_000
    time_limit_secs: float | None = None
    dedup: bool = True
    seed: int = 0
    reuse_aux_seed: int | None = None

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


@dataclass(frozen=True)
class DiscriminatoryPair:
    """Two rows differing only in protected attributes with different predictions."""

    x: Row
    x_variant: Row
    predictions: tuple[Prediction, Prediction]
    source: str = "row"


@dataclass(frozen=True)
class ProbeStats:
    tested: int
    found: int
    found_raw: int
    elapsed_secs: float
    egs: float


@dataclass(frozen=True)
class IterativeProbeConfig:
    direction: int
    step: float
    max_iters: int

    def __post_init__(self) -> None:
        if self.direction not in (-1, 1):
            raise ValueError("direction must be +1 or -1")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class ProtectedHyperplane:
    """Unit-normal hyperplane separating a binary semantic attribute in latent space."""

    w: np.ndarray
    b: float

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64)
        norm = float(np.linalg.norm(w))
        if norm <= 0.0:
            raise ValueError("hyperplane normal must be non-zero")
        object.__setattr__(self, "w", w / norm)
        object.__setattr__(self, "b", float(self.b) / norm)


def project(boundary: SurrogateBoundary, z: np.ndarray) -> np.ndarray:
    """Move z onto the surrogate plane in one step (batch-friendly)."""
    w_u, b_u = boundary.unit()
    z = np.asarray(z, dtype=np.float64)
    d = z @ w_u + b_u
    return z - np.multiply.outer(d, w_u) if z.ndim > 1 else z - d * w_u


def candidates(boundary: SurrogateBoundary, z0: np.ndarray,
               lam: float) -> tuple[np.ndarray, np.ndarray]:
    """The two probes straddling the plane at signed distances +lam and -lam."""
    w_u, _ = boundary.unit()
    z0 = np.asarray(z0, dtype=np.float64)
    return z0 + lam * w_u, z0 - lam * w_u


def iterative_probe(boundary: SurrogateBoundary, z: np.ndarray,
                    cfg: IterativeProbeConfig) -> np.ndarray:
    """Step along the unit normal until the distance sign flips (baseline search).

    Zero distance counts as the non-negative side. Raises NoConvergence when
    ``max_iters`` steps never cross the plane.
    """
    w_u, _ = boundary.unit()
    z = np.asarray(z, dtype=np.float64).copy()
    sign0 = 1 if boundary.distance(z) >= 0 else -1
    for _ in range(cfg.max_iters):
        z = z + cfg.direction * cfg.step * w_u
        sign = 1 if boundary.distance(z) >= 0 else -1
        if sign != sign0:
            return z
    raise NoConvergence(
        f"no sign flip within {cfg.max_iters} steps of size {cfg.step}"
    )


def latent_flip(h: ProtectedHyperplane, z: np.ndarray) -> np.ndarray:
    """Reflect z across the hyperplane, negating its signed distance exactly."""
    z = np.asarray(z, dtype=np.float64)
    d = z @ h.w + h.b
    return z - 2.0 * np.multiply.outer(d, h.w) if z.ndim > 1 else z - 2.0 * d * h.w


def _make_pair(schema: Schema, row: Row, variant: Row, pred: Prediction,
               vpred: Prediction, source: str) -> DiscriminatoryPair:
    if pred.label == vpred.label:
        raise LimiError("pair predictions do not differ")
    protected = set(schema.protected_indices())
    for i, (a, b) in enumerate(zip(row, variant)):
        if i not in protected and a != b:
            raise LimiError(f"pair differs on non-protected column index {i}")
    return DiscriminatoryPair(row, variant, (pred, vpred), source)


def discriminatory_scan(model, schema: Schema,
                        rows: list[Row], source: str = "row") -> list:
    """Batched discrimination check; entry k is a pair or None for rows[k].

    Variant combinations are tried in schema enumeration order, and each row
    keeps its first prediction-flipping variant, matching the one-row path.
    """
    n = len(rows)
    if n == 0:
        return []
    labels, scores = model.predict_batch(rows)
    pidx = schema.protected_indices()
    originals = [tuple(r[i] for i in pidx) for r in rows]

    result: list = [None] * n
    pending = list(range(n))
    for combo in protected_combos(schema):
        if not pending:
            break
        applicable = [k for k in pending if originals[k] != combo]
        if not applicable:
            continue
        variant_rows = []
        for k in applicable:
            variant = list(rows[k])
            for i, v in zip(pidx, combo):
                variant[i] = v
            variant_rows.append(tuple(variant))
        vlabels, vscores = model.predict_batch(variant_rows)
        hit = set()
        for pos, k in enumerate(applicable):
            if vlabels[pos] != labels[k]:
                result[k] = _make_pair(
                    schema, rows[k], variant_rows[pos],
                    Prediction(int(labels[k]), float(scores[k])),
                    Prediction(int(vlabels[pos]), float(vscores[pos])),
                    source,
                )
                hit.add(k)
        if hit:
            pending = [k for k in pending if k not in hit]
    return result


def is_discriminatory(model, schema: Schema, row: Row,
                      source: str = "row"):
    """Return the first discriminating variant pair for this row, or None."""
    return discriminatory_scan(model, schema, [row], source)[0]


_PROBE_CHUNK = 8_192


def _probe_chunk(task):
    gen, model, schema, w_u, b_u, lam, Z = task
    d = Z @ w_u + b_u
    Z0 = Z - d[:, None] * w_u
    Zp = Z0 + lam * w_u
    Zm = Z0 - lam * w_u
    out = []
    for source, Zs in (("z0", Z0), ("z+", Zp), ("z-", Zm)):
        rows = gen.decode_batch(Zs)
        out.append((rows, discriminatory_scan(model, schema, rows, source)))
    return out


def run(gen, model, boundary: SurrogateBoundary, schema: Schema,
        cfg: ProbeConfig = ProbeConfig()) -> tuple[list[DiscriminatoryPair], ProbeStats]:
    """Probe fresh latents along the surrogate boundary and collect findings.

    For each streamed latent the tuple (projection, +lam side, -lam side) is
    decoded and tested in that order, stopping at the first discriminatory
    member. The budget counts every case actually tested; the optional time
    limit is checked between tuples. With dedup on, the returned list holds
    unique rows by full raw-value equality.
    """
    w_u, b_u = boundary.unit()
    dim = gen.latent_dim
    if len(w_u) != dim:
        raise ValueError("boundary dimension does not match the generator")

    if cfg.reuse_aux_seed is not None:
        latent_seed = runtime.stage_seed(cfg.reuse_aux_seed, runtime.AUX_LATENTS)
    else:
        latent_seed = runtime.stage_seed(cfg.seed, runtime.PROBE_LATENTS)
    rng = np.random.default_rng(latent_seed)

    start = time.monotonic()
    pairs: list[DiscriminatoryPair] = []
    seen: set[Row] = set()
    tested = 0
    found_raw = 0
    stop = False
    workers = runtime.worker_count()

    while not stop:
        n_chunks = max(1, workers)
        tasks = [
            (gen, model, schema, w_u, b_u, cfg.lam,
             rng.standard_normal((_PROBE_CHUNK, dim)))
            for _ in range(n_chunks)
        ]
        chunk_results = runtime.parallel_map(_probe_chunk, tasks)

        for chunk in chunk_results:
            if stop:
                break
            (rows0, scan0), (rowsp, scanp), (rowsm, scanm) = chunk
            for k in range(len(rows0)):
                if cfg.time_limit_secs is not None and \
                        time.monotonic() - start > cfg.time_limit_secs:
                    stop = True
                    break
                for rows, scan in ((rows0, scan0), (rowsp, scanp), (rowsm, scanm)):
                    if tested >= cfg.budget:
                        stop = True
                        break
                    tested += 1
                    pair = scan[k]
                    if pair is not None:
                        found_raw += 1
                        if cfg.dedup:
                            if pair.x not in seen:
                                seen.add(pair.x)
                                pairs.append(pair)
                        else:
                            pairs.append(pair)
                        break
                if stop:
                    break

    elapsed = time.monotonic() - start
    found = len(pairs)
    stats = ProbeStats(
        tested=tested,
        found=found,
        found_raw=found_raw,
        elapsed_secs=elapsed,
        egs=found / elapsed if elapsed > 0 else 0.0,
    )
    return pairs, stats


def random_baseline(model, schema: Schema, cfg: ProbeConfig = ProbeConfig()
                    ) -> tuple[list[DiscriminatoryPair], ProbeStats]:
    """Uniform-random comparison search under the same budget accounting."""
    start = time.monotonic()
    pairs: list[DiscriminatoryPair] = []
    seen: set[Row] = set()
    tested = 0
    found_raw = 0

    from .schema import sample_uniform

    rng_seed = runtime.stage_seed(cfg.seed, runtime.PROBE_LATENTS)
    remaining = cfg.budget
    batch_index = 0
    while remaining > 0:
        if cfg.time_limit_secs is not None and \
                time.monotonic() - start > cfg.time_limit_secs:
            break
        size = min(_PROBE_CHUNK, remaining)
        rows = sample_uniform(schema, size, rng_seed + [batch_index])
        batch_index += 1
        scan = discriminatory_scan(model, schema, rows, source="random")
        for k in range(size):
            if cfg.time_limit_secs is not None and \
                    time.monotonic() - start > cfg.time_limit_secs:
                break
            tested += 1
            pair = scan[k]
            if pair is not None:
                found_raw += 1
                if cfg.dedup:
                    if pair.x not in seen:
                        seen.add(pair.x)
                        pairs.append(pair)
                else:
                    pairs.append(pair)
        remaining = cfg.budget - tested
        if cfg.time_limit_secs is not None and \
                time.monotonic() - start > cfg.time_limit_secs:
            break

    elapsed = time.monotonic() - start
    stats = ProbeStats(
        tested=tested,
        found=len(pairs),
        found_raw=found_raw,
        elapsed_secs=elapsed,
        egs=len(pairs) / elapsed if elapsed > 0 else 0.0,
    )
    return pairs, stats
