"""Kernel backend selection: compiled extension when available, numpy otherwise."""

from __future__ import annotations

try:
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _kernels_py as _impl

    BACKEND = "python"

from . import _kernels_py as python_impl

log_integrand_logs = _impl.log_integrand_logs
log_integrand_u = _impl.log_integrand_u
