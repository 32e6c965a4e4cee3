"""Pure-numpy fallback for the compiled integrand kernels."""

from __future__ import annotations

import numpy as np


def log_integrand_logs(x: np.ndarray, beta: np.ndarray, rho: np.ndarray,
                       delta: float, m: float) -> np.ndarray:
    s = np.exp(x)
    return x @ beta - m * np.log(delta + s @ rho)


def log_integrand_u(u: np.ndarray, invbeta: np.ndarray, rho: np.ndarray,
                    delta: float, m: float) -> np.ndarray:
    coup = delta + (u ** invbeta[None, :]) @ rho
    return -m * np.log(coup)
