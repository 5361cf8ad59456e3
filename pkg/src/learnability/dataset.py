"""Labeled datasets, the strictly-upper Gram matrix, and chained quadratic forms.

The central object is the strictly upper triangular matrix ``G`` holding the
pairwise inner products ``<x_i, x_j>`` for ``i < j``.  Every estimator in the
package reduces to quadratic forms ``y^T G^k y``, which expand into sums of
label-weighted inner-product chains over strictly increasing index tuples.
Dividing ``y^T G^{k-1} y`` by ``C(n, k)`` gives an unbiased estimate of the
k-th covariance moment ``beta^T Sigma^k beta`` of the underlying linear model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InsufficientSamplesError

__all__ = [
    "LabelKind",
    "LabeledDataset",
    "GramChain",
    "MomentEstimate",
    "gram_upper",
    "chain_form",
    "moment_estimate",
    "log_binomial",
]


class LabelKind(enum.Enum):
    REAL = "real"
    PLUS_MINUS_ONE = "pm1"


def _frozen_array(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabeledDataset:
    """n samples of d-dimensional features with real or +/-1 labels.

    Immutable after construction; arrays are copied and marked read-only so a
    dataset can be shared freely across threads.
    """

    features: np.ndarray
    labels: np.ndarray
    label_kind: LabelKind = LabelKind.REAL

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.float64)
        if feats.ndim != 2:
            raise DataError(f"features must be 2-D (n, d), got shape {feats.shape}")
        n, d = feats.shape
        if n < 1 or d < 1:
            raise DataError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if labs.shape != (n,):
            raise DataError(
                f"labels must have length n={n}, got shape {labs.shape}"
            )
        if not np.isfinite(feats).all():
            raise DataError("features contain NaN or Inf")
        if not np.isfinite(labs).all():
            raise DataError("labels contain NaN or Inf")
        if self.label_kind is LabelKind.PLUS_MINUS_ONE and not np.isin(labs, (-1.0, 1.0)).all():
            raise DataError("label_kind PLUS_MINUS_ONE requires every label in {-1, +1}")
        object.__setattr__(self, "features", _frozen_array(feats))
        object.__setattr__(self, "labels", _frozen_array(labs))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        """Same labels and kind over a replacement feature matrix."""
        return LabeledDataset(features, self.labels, self.label_kind)


@dataclass(frozen=True)
class GramChain:
    """Strictly upper triangular pairwise inner-product matrix.

    ``g[i, j] = <x_i, x_j>`` for ``i < j`` and 0 elsewhere.  G is nilpotent:
    ``G^k = 0`` exactly for ``k >= n``.
    """

    g: np.ndarray
    n: int = field(default=-1)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DataError(f"g must be square, got shape {g.shape}")
        if np.count_nonzero(np.tril(g)) != 0:
            raise DataError("g must be strictly upper triangular")
        object.__setattr__(self, "g", _frozen_array(g))
        object.__setattr__(self, "n", g.shape[0])


@dataclass(frozen=True)
class MomentEstimate:
    """Unbiased estimate of ``beta^T Sigma^order beta``."""

    order: int
    value: float
    divisor_log: float  # log C(n, order)


def gram_upper(data: LabeledDataset) -> GramChain:
    """Strictly upper triangular part of X X^T.

    O(n^2 d) via one BLAS product; the diagonal and lower triangle are zeroed.
    """
    x = data.features
    return GramChain(np.triu(x @ x.T, k=1))


def chain_form(chain: GramChain, y: np.ndarray, k: int) -> float:
    """Quadratic form ``y^T G^k y`` by k repeated matrix-vector products.

    Never materializes G^k (O(n^2 k) instead of O(n^3)).  Returns exactly 0.0
    for ``k >= n`` since a strictly upper triangular G is nilpotent.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (chain.n,):
        raise DataError(f"y must have length n={chain.n}, got shape {y.shape}")
    if k >= chain.n:
        return 0.0
    v = y
    for _ in range(k):
        v = chain.g @ v
    return float(y @ v)


def log_binomial(n: int, k: int) -> float:
    """log C(n, k) via log-gamma; exact enough for n up to 10^6 and beyond."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def scaled_by_binomial(value: float, n: int, k: int) -> float:
    """``value / C(n, k)`` computed in log space with the sign carried separately."""
    if value == 0.0:
        return 0.0
    return math.copysign(
        math.exp(math.log(abs(value)) - log_binomial(n, k)), value
    )


def moment_estimate(
    data: LabeledDataset, k: int, *, chain: GramChain | None = None
) -> MomentEstimate:
    """Unbiased estimator ``y^T G^{k-1} y / C(n, k)`` of ``beta^T Sigma^k beta``.

    Requires ``n >= k`` (no increasing k-tuples exist otherwise).  A
    pre-computed ``chain`` may be supplied to amortize the Gram product across
    several orders.
    """
    if k < 2:
        raise ValueError(f"moment order must be >= 2, got {k}")
    if data.n < k:
        raise InsufficientSamplesError(
            f"moment of order {k} needs at least {k} samples, got n={data.n}"
        )
    if chain is None:
        chain = gram_upper(data)
    numerator = chain_form(chain, data.labels, k - 1)
    return MomentEstimate(
        order=k,
        value=scaled_by_binomial(numerator, data.n, k),
        divisor_log=log_binomial(data.n, k),
    )
