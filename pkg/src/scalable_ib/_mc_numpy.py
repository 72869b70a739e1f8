"""NumPy fallback for the Monte-Carlo accumulation kernel.

Draws standard normals from the supplied bit generator, applies the
Cholesky factor, and returns the uncentered second-moment matrix
sum_i x_i x_i^T. Row-major sampling consumes the normal stream in the
same order as the compiled kernel's per-sample loop, so both backends
see identical variates and differ only by floating-point accumulation
order.
"""

from __future__ import annotations

import numpy as np


def accumulate_second_moments(bitgen, chol: np.ndarray, n: int) -> np.ndarray:
    d = chol.shape[0]
    rng = np.random.Generator(bitgen)
    z = rng.standard_normal((n, d))
    x = z @ chol.T
    return x.T @ x
