"""Chunked sampling accumulation: stream layout, backend agreement."""

import os
import subprocess
import sys

import numpy as np
import pytest

from scalable_ib import mc


def small_chol(d=3, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    return np.linalg.cholesky(a @ a.T + d * np.eye(d))


class TestChunkLayout:
    def test_sizes_cover_the_sample_count(self):
        for n in (16, 100, 10**4, 10**5, 10**6 + 17):
            assert sum(mc.chunk_sizes(n)) == n

    def test_minimum_chunk_count_for_jackknife(self):
        assert len(mc.chunk_sizes(10**5)) >= 16
        assert len(mc.chunk_sizes(10**6)) >= 16

    def test_large_requests_use_the_configured_chunk(self):
        sizes = mc.chunk_sizes(10**7)
        assert sizes[0] == mc.DEFAULT_CHUNK

    def test_tiny_requests_collapse_to_one_chunk(self):
        assert mc.chunk_sizes(7) == [7]

    def test_custom_chunk_respected(self):
        sizes = mc.chunk_sizes(10**5, chunk=1000)
        assert sizes[0] == 1000
        assert sum(sizes) == 10**5


class TestStreams:
    def test_same_key_same_stream(self):
        a = np.random.Generator(mc.philox_stream(5, 2)).standard_normal(8)
        b = np.random.Generator(mc.philox_stream(5, 2)).standard_normal(8)
        assert np.array_equal(a, b)

    def test_distinct_chunks_distinct_streams(self):
        a = np.random.Generator(mc.philox_stream(5, 0)).standard_normal(8)
        b = np.random.Generator(mc.philox_stream(5, 1)).standard_normal(8)
        c = np.random.Generator(mc.philox_stream(6, 0)).standard_normal(8)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_accumulation_is_order_independent(self):
        chol = small_chol()
        parts = [mc.accumulate_chunk(3, k, chol, 500) for k in range(6)]
        forward = sum(parts[k] for k in range(6))
        shuffled = sum(parts[k] for k in (4, 0, 5, 2, 1, 3))
        assert np.allclose(forward, shuffled, rtol=1e-15, atol=0.0)


class TestBackends:
    def test_numpy_backend_moments_are_sane(self):
        chol = small_chol()
        n = 200_000
        second = mc.accumulate_chunk(0, 0, chol, n, backend="numpy") / n
        cov = chol @ chol.T
        assert np.allclose(second, cov, atol=0.15)

    @pytest.mark.skipif("ext" not in mc.available_backends(), reason="no compiled kernel")
    def test_backends_agree_to_accumulation_rounding(self):
        chol = small_chol()
        a = mc.accumulate_chunk(7, 3, chol, 4096, backend="numpy")
        b = mc.accumulate_chunk(7, 3, chol, 4096, backend="ext")
        assert np.allclose(a, b, rtol=1e-12, atol=0.0)

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            mc.accumulate_chunk(0, 0, small_chol(), 10, backend="bogus")

    def test_env_override_forces_numpy(self):
        code = (
            "from scalable_ib import mc; print(mc.BACKEND)"
        )
        env = dict(os.environ, SIB_NO_EXT="1")
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        assert out.returncode == 0
        assert out.stdout.strip() == "numpy"
