"""Design construction: centering, block partitions, least squares, R^2 split.

The intercept is handled by centering and is never a column of X, so p always
counts slopes. All least-squares work goes through orthogonal factorizations
(pivoted QR); normal equations are never formed, so the extreme column
scalings produced by the drifting-sequence experiments stay tractable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (DataError, DimensionMismatch, RankDeficient)

RANK_RTOL = 1e-10
ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class BlockPartition:
    """Ordered partition of the predictor indices {0..p-1} into k blocks."""

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks) -> None:
        object.__setattr__(
            self, "blocks", tuple(tuple(int(i) for i in b) for b in blocks))
        self._validate()

    def _validate(self) -> None:
        if len(self.blocks) < 1:
            raise DimensionMismatch("partition needs at least one block")
        seen: set[int] = set()
        for b in self.blocks:
            if len(b) == 0:
                raise DimensionMismatch("empty block in partition")
            if seen & set(b):
                raise DimensionMismatch("partition blocks overlap")
            seen |= set(b)
        if seen != set(range(len(seen))):
            raise DimensionMismatch(
                "partition must cover 0..p-1 with no gaps")

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def p(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @staticmethod
    def single(p: int) -> "BlockPartition":
        return BlockPartition([tuple(range(p))])

    @staticmethod
    def contiguous(sizes) -> "BlockPartition":
        out, start = [], 0
        for s in sizes:
            out.append(tuple(range(start, start + int(s))))
            start += int(s)
        return BlockPartition(out)


@dataclass(frozen=True)
class CenteredDesign:
    """Centered response and column-centered full-rank predictor matrix."""

    y: np.ndarray
    X: np.ndarray
    partition: BlockPartition
    y_mean: float = 0.0
    x_means: np.ndarray | None = None

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DimensionMismatch(
                f"X {X.shape} incompatible with y {y.shape}")
        n, p = X.shape
        if n <= p:
            raise DimensionMismatch(f"need n > p, got n={n}, p={p}")
        if self.partition.p != p:
            raise DimensionMismatch(
                f"partition covers {self.partition.p} columns, X has {p}")
        scale = max(np.max(np.abs(X)), 1.0)
        tol = 1e-10 * n * scale
        if np.max(np.abs(X.sum(axis=0))) > tol:
            raise DimensionMismatch("X columns are not centered")
        yscale = max(np.max(np.abs(y)), 1.0)
        if abs(float(y.sum())) > 1e-10 * n * yscale:
            raise DimensionMismatch("y is not centered")
        if self.x_means is None:
            object.__setattr__(self, "x_means", np.zeros(p))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def block(self, i: int) -> np.ndarray:
        return self.X[:, list(self.partition.blocks[i])]


@dataclass(frozen=True)
class FitSummary:
    """Every statistic the Bayes-factor and shrinkage formulas consume.

    one_minus_r2 carries rss / yty directly so 1 - R^2 stays accurate when
    R^2 rounds to 1 in doubles.
    """

    n: int
    p: int
    p_i: tuple[int, ...]
    alpha_hat: float
    beta_hat_ls: np.ndarray
    sigma2_hat: float
    r2: float
    r2_blocks: np.ndarray
    yty: float
    one_minus_r2: float
    block_orthogonal: bool


def _rank_check(X: np.ndarray, what: str) -> None:
    if min(X.shape) == 0:
        return
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] < RANK_RTOL * sv[0]:
        raise RankDeficient(
            f"{what} numerically rank-deficient "
            f"(singular value ratio {sv[-1] / max(sv[0], 1e-300):.2e})")


def center_design(X_raw: np.ndarray, y_raw: np.ndarray,
                  partition: BlockPartition) -> CenteredDesign:
    """Remove column means from X_raw and the mean from y_raw."""
    X_raw = np.asarray(X_raw, dtype=float)
    y_raw = np.asarray(y_raw, dtype=float)
    if X_raw.ndim != 2 or y_raw.ndim != 1 or X_raw.shape[0] != len(y_raw):
        raise DimensionMismatch(
            f"X {X_raw.shape} incompatible with y {y_raw.shape}")
    n, p = X_raw.shape
    if n <= p:
        raise DimensionMismatch(f"need n > p, got n={n}, p={p}")
    x_means = X_raw.mean(axis=0)
    y_mean = float(y_raw.mean())
    X = X_raw - x_means
    y = y_raw - y_mean
    _rank_check(X, "centered design")
    return CenteredDesign(y=y, X=X, partition=partition, y_mean=y_mean,
                          x_means=x_means)


def _ls_solve(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least squares through pivoted QR; never forms X^T X."""
    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    if d.size and (d.min() == 0.0 or d.min() < RANK_RTOL * d.max()):
        raise RankDeficient("least-squares system rank-deficient")
    coef_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    coef = np.empty_like(coef_piv)
    coef[piv] = coef_piv
    return coef


def fit_least_squares(d: CenteredDesign) -> FitSummary:
    """Joint LS fit with the projection-based per-block R^2 decomposition."""
    beta = _ls_solve(d.X, d.y)
    fitted = d.X @ beta
    resid = d.y - fitted
    rss = float(resid @ resid)
    fit2 = float(fitted @ fitted)
    n, p = d.n, d.p
    dof = n - p - 1
    sigma2_hat = rss / dof if dof > 0 else 0.0
    r2 = fit2 / (fit2 + rss) if fit2 + rss > 0 else 0.0
    yty = float(d.y @ d.y)
    one_minus_r2 = rss / (fit2 + rss) if fit2 + rss > 0 else 1.0
    r2_blocks = np.empty(d.partition.k)
    for i in range(d.partition.k):
        Xi = d.block(i)
        bi = _ls_solve(Xi, d.y)
        proj = Xi @ bi
        r2_blocks[i] = float(proj @ proj) / yty if yty > 0 else 0.0
    return FitSummary(
        n=n, p=p, p_i=d.partition.sizes, alpha_hat=d.y_mean,
        beta_hat_ls=beta, sigma2_hat=sigma2_hat, r2=r2,
        r2_blocks=r2_blocks, yty=yty, one_minus_r2=one_minus_r2,
        block_orthogonal=check_block_orthogonality(d, ORTHO_TOL))


def check_block_orthogonality(d: CenteredDesign,
                              tol: float = ORTHO_TOL) -> bool:
    """True iff max_(i != j) |X_i^T X_j| <= tol * max column norm squared."""
    k = d.partition.k
    if k == 1:
        return True
    scale = float(np.max(np.sum(d.X * d.X, axis=0)))
    if scale == 0.0:
        return True
    for i in range(k):
        Xi = d.block(i)
        for j in range(i + 1, k):
            if np.max(np.abs(Xi.T @ d.block(j))) > tol * scale:
                return False
    return True


def block_orthogonalize(d: CenteredDesign,
                        ) -> tuple[CenteredDesign, np.ndarray]:
    """Successive residualization: Q_1 = X_1, Q_j = (I - P_(Q_<j)) X_j.

    Returns the new design plus the block upper-triangular T with X = Q T,
    so fitted values are preserved and coefficients map as kappa = T beta.
    """
    p = d.p
    part = d.partition
    # work in block-contiguous order, then scatter back
    order = [i for b in part.blocks for i in b]
    T = np.eye(p)
    Q = np.empty_like(d.X)
    cols_done: list[int] = []
    pos = 0
    for bi in range(part.k):
        idx = list(range(pos, pos + part.sizes[bi]))
        Xb = d.X[:, [order[i] for i in idx]]
        if cols_done:
            Qprev = Q[:, cols_done]
            C = _ls_solve(Qprev, Xb) if Xb.ndim == 2 else None
            # _ls_solve handles one rhs; loop columns for clarity
            C = np.column_stack([_ls_solve(Qprev, Xb[:, j])
                                 for j in range(Xb.shape[1])])
            Qb = Xb - Qprev @ C
            for r_pos, r_idx in enumerate(cols_done):
                for c_pos, c_idx in enumerate(idx):
                    T[r_idx, c_idx] = C[r_pos, c_pos]
        else:
            Qb = Xb
        _rank_check(Qb, f"residualized block {bi + 1}")
        Q[:, idx] = Qb
        cols_done.extend(idx)
        pos += part.sizes[bi]
    # map back to original column order
    inv = np.argsort(order)
    Q_out = Q[:, inv]
    T_out = T[np.ix_(inv, inv)]
    new_part = part
    new_d = CenteredDesign(y=d.y, X=Q_out, partition=new_part,
                           y_mean=d.y_mean, x_means=d.x_means)
    return new_d, T_out


def load_csv_design(path: str, response: str,
                    block_columns: list[list[str]],
                    ) -> tuple[np.ndarray, np.ndarray, BlockPartition,
                               list[str]]:
    """Read a headed CSV into raw response/predictor arrays plus partition.

    block_columns lists predictor column names per block; every predictor
    used must appear in exactly one block.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file, header row required")
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    if response not in header:
        raise DataError(f"response column {response!r} not in header")
    flat: list[str] = [c for b in block_columns for c in b]
    if len(set(flat)) != len(flat):
        raise DataError("a predictor column appears in two blocks")
    for c in flat:
        if c not in header:
            raise DataError(f"predictor column {c!r} not in header")
        if c == response:
            raise DataError(f"column {c!r} is both response and predictor")
    if not flat:
        raise DataError("no predictor columns configured")
    col_of = {name: i for i, name in enumerate(header)}
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric cell ({exc})")
    if data.ndim != 2 or data.shape[1] != len(header):
        raise DataError(f"{path}: ragged rows")
    y_raw = data[:, col_of[response]]
    X_raw = data[:, [col_of[c] for c in flat]]
    partition = BlockPartition.contiguous([len(b) for b in block_columns])
    return X_raw, y_raw, partition, flat
