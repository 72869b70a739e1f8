"""Backend selection and stream layout for Monte-Carlo sampling.

Samples are partitioned into chunks; chunk k draws from a counter-based
Philox stream keyed by (seed, k), so results do not depend on evaluation
order and a run is reproducible given its seed. The compiled kernel is
preferred when present; set SIB_NO_EXT=1 to force the NumPy fallback.
Both backends consume identical variates, so estimates agree to
accumulation rounding (not bitwise).
"""

from __future__ import annotations

import os

import numpy as np

from . import _mc_numpy

BACKEND = "numpy"
_accumulate = _mc_numpy.accumulate_second_moments
if not os.environ.get("SIB_NO_EXT"):
    try:
        from . import _mc_ext

        BACKEND = "ext"
        _accumulate = _mc_ext.accumulate_second_moments
    except ImportError:  # extension not built; fallback stays active
        pass

DEFAULT_CHUNK = 1 << 16


def philox_stream(seed: int, chunk_index: int) -> np.random.Philox:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, chunk_index], dtype=np.uint64)
    return np.random.Philox(key=key)


def chunk_sizes(n_samples: int, chunk: int = DEFAULT_CHUNK, min_chunks: int = 16):
    """Chunk lengths covering n_samples; at least min_chunks pieces so the
    jackknife has enough blocks."""
    if n_samples < min_chunks:
        return [n_samples]
    chunk = min(chunk, n_samples // min_chunks)
    chunk = max(chunk, 1)
    sizes = [chunk] * (n_samples // chunk)
    rem = n_samples - chunk * len(sizes)
    if rem:
        sizes.append(rem)
    return sizes


def accumulate_chunk(seed: int, chunk_index: int, chol: np.ndarray, n: int,
                     backend: str | None = None) -> np.ndarray:
    """Uncentered second-moment sum for one chunk of the stream."""
    bitgen = philox_stream(seed, chunk_index)
    if backend is None:
        return _accumulate(bitgen, chol, n)
    if backend == "numpy":
        return _mc_numpy.accumulate_second_moments(bitgen, chol, n)
    if backend == "ext":
        from . import _mc_ext

        return _mc_ext.accumulate_second_moments(bitgen, chol, n)
    raise ValueError(f"unknown backend {backend!r}")


def available_backends() -> list[str]:
    out = ["numpy"]
    try:
        from . import _mc_ext  # noqa: F401

        out.append("ext")
    except ImportError:
        pass
    return out
