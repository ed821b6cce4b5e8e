"""Shared helpers: counter-based RNG streams, intervals, hashing."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent, reproducible generator for a (seed, *path) address.

    The key is derived by hashing the address, so streams for distinct
    (trial, receiver, instant, ...) tuples never overlap and the mapping
    is stable across processes.
    """
    tag = ",".join(str(int(p)) for p in (seed, *path))
    digest = hashlib.sha256(tag.encode()).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def complex_normal(rng: np.random.Generator, size, var: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with total variance ``var`` each."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return (max(0.0, center - half), min(1.0, center + half))


def stable_hash(obj) -> str:
    """Short stable hash of a JSON-serializable description."""
    payload = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:12]
