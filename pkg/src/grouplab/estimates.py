"""Monte-Carlo estimates with standard errors, and chunked accumulation."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sampling import RngStream

# Samples are drawn in fixed-size chunks, each from its own forked stream, so a
# result depends only on (seed, n_samples) and never on how work is scheduled.
CHUNK = 20_000
Z_BAND = 3.0


@dataclass(frozen=True)
class EstimateWithCI:
    value: float
    std_error: float
    n_samples: int
    seed: dict = field(default_factory=dict)

    def interval(self, z: float = Z_BAND) -> tuple[float, float]:
        return self.value - z * self.std_error, self.value + z * self.std_error

    def contains(self, x: float, z: float = Z_BAND) -> bool:
        lo, hi = self.interval(z)
        return lo <= x <= hi

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "std_error": float(self.std_error),
            "n_samples": int(self.n_samples),
            "seed": dict(self.seed),
        }

    def record(self, op: str, params: dict, wall_time: float | None = None) -> dict:
        out = {"op": op, "params": params, **self.to_dict()}
        out["wall_time"] = wall_time
        return out


class RunningStats:
    """Mean and variance of a stream of (possibly vector-valued) samples."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def push(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        k = x.shape[0]
        if k == 0:
            return
        mean_b = x.mean(axis=0)
        m2_b = ((x - mean_b) ** 2).sum(axis=0)
        if self.n == 0:
            self.n, self.mean, self.m2 = k, mean_b, m2_b
            return
        # Chan et al. pairwise merge
        n = self.n + k
        delta = mean_b - self.mean
        self.mean = self.mean + delta * (k / n)
        self.m2 = self.m2 + m2_b + delta**2 * (self.n * k / n)
        self.n = n

    def variance(self):
        return self.m2 / max(self.n - 1, 1)

    def estimate(self, seed: dict | None = None) -> EstimateWithCI:
        if self.mean is None:
            raise ValueError("no samples")
        se = math.sqrt(float(self.variance()) / self.n)
        return EstimateWithCI(float(self.mean), se, self.n, seed or {})

    def estimates(self, seed: dict | None = None) -> list[EstimateWithCI]:
        se = np.sqrt(self.variance() / self.n)
        return [EstimateWithCI(float(m), float(s), self.n, seed or {}) for m, s in zip(self.mean, se)]


def chunk_sizes(n_samples: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(int(n_samples), chunk)
    return [chunk] * full + ([rest] if rest else [])


def monte_carlo(draw: Callable[[RngStream, int], np.ndarray], n_samples: int, rng: RngStream,
                chunk: int = CHUNK) -> RunningStats:
    """Accumulate ``draw(sub_rng, size)`` over fixed chunks of forked streams."""
    stats = RunningStats()
    for i, size in enumerate(chunk_sizes(n_samples, chunk)):
        stats.push(draw(rng.fork(i), size))
    return stats


def mean_estimate(draw, n_samples: int, rng: RngStream, chunk: int = CHUNK) -> EstimateWithCI:
    return monte_carlo(draw, n_samples, rng, chunk).estimate(rng.provenance)


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
