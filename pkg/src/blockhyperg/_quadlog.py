"""Log-space composite Gauss-Legendre quadrature helpers.

All integrands handled here are strictly positive and are supplied as
vectorized callables returning log f(x). Integrals are accumulated with
log-sum-exp so that values far outside double range are representable.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .errors import NoConvergence

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    rule = _GL_CACHE.get(n)
    if rule is None:
        rule = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = rule
    return rule


def panel_nodes(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and log-weights for composite GL on the given panel edges.

    Returns arrays of shape (npanels, n).
    """
    x, w = gl_rule(n)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo) + half * x[None, :]
    logw = np.log(w)[None, :] + np.log(half)
    return nodes, logw


def _panel_log_integrals(logf, edges: np.ndarray, n: int) -> np.ndarray:
    nodes, logw = panel_nodes(edges, n)
    vals = logf(nodes.ravel()).reshape(nodes.shape)
    return logsumexp(vals + logw, axis=1)


def adaptive_log_integral(
    logf,
    lo: float,
    hi: float,
    *,
    rtol: float = 1e-12,
    seed_points: tuple[float, ...] = (),
    n_nodes: int = 12,
    max_panels: int = 2048,
) -> tuple[float, float]:
    """log of integral of exp(logf) over [lo, hi], with an error estimate.

    Panels are split where low- and high-order GL rules disagree. seed_points
    are inserted as initial panel edges (peak/kink locations known a priori).
    """
    if not hi > lo:
        raise ValueError("empty interval")
    pts = [lo, hi]
    for s in seed_points:
        if lo < s < hi:
            pts.append(s)
    pts = np.unique(np.asarray(pts, dtype=float))
    edges = []
    for i in range(len(pts) - 1):
        edges.append(np.linspace(pts[i], pts[i + 1], 9)[:-1])
    edges = np.concatenate(edges + [pts[-1:]])

    for _ in range(60):
        lo_est = _panel_log_integrals(logf, edges, n_nodes)
        hi_est = _panel_log_integrals(logf, edges, 2 * n_nodes)
        total = logsumexp(hi_est)
        # per-panel discrepancy relative to the total
        err_p = np.abs(np.exp(lo_est - total) - np.exp(hi_est - total))
        err = float(err_p.sum())
        if err <= rtol:
            return float(total), err
        if len(edges) - 1 >= max_panels:
            break
        bad = err_p > max(rtol / max(len(err_p), 1), 1e-17)
        order = np.argsort(err_p)[::-1]
        split = [i for i in order if bad[i]][: max(1, len(err_p) // 3)]
        mids = 0.5 * (edges[:-1] + edges[1:])
        edges = np.sort(np.concatenate([edges, mids[split]]))
    raise NoConvergence(
        f"1-D quadrature did not reach rtol={rtol:g} (err={err:g}, "
        f"panels={len(edges) - 1})"
    )
