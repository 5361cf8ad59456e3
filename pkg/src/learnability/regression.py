"""Unexplained-variance estimators for linear models.

The moment route estimates E[y^2] - beta^T Sigma beta without ever fitting a
model: E[y^2] from the labels alone, beta^T Sigma beta from chained Gram
moments.  With isotropic (or known, whitened-away) covariance a single moment
suffices; with general covariance a polynomial plan combines several.
The classical residual-based estimator is included as the baseline it is
compared against; it needs n > d, where the moment estimators do not.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dataset import (
    GramChain,
    LabeledDataset,
    chain_form,
    gram_upper,
    scaled_by_binomial,
)
from .errors import (
    InsufficientSamplesError,
    NotPositiveDefiniteError,
    UnderdeterminedError,
    ZeroVarianceError,
)
from .polyfit import PolynomialPlan

__all__ = [
    "EstimatorMethod",
    "MomentTerm",
    "EstimateReport",
    "TheoreticalBound",
    "normalize_labels",
    "estimate_isotropic",
    "estimate_general",
    "baseline_unbiased",
    "whiten",
    "theoretical_scaling",
]


class EstimatorMethod(enum.Enum):
    ISOTROPIC = "isotropic"
    GENERAL_COV = "general-cov"
    BASELINE_UNBIASED = "baseline-unbiased"


@dataclass(frozen=True)
class MomentTerm:
    order: int  # power of Sigma this term estimates
    coefficient: float  # plan coefficient applied to it
    value: float  # y^T G^(order-1) y / C(n, order)


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate plus everything needed to audit it.

    ``raw_estimate`` is always label_second_moment minus the weighted moment
    sum; ``estimate`` equals it clamped to [0, 1] when the labels were
    normalized to unit variance (small-sample estimates can leave the
    physical range), and is the raw value otherwise.
    """

    estimate: float
    raw_estimate: float
    clamped: bool
    label_second_moment: float
    moment_terms: tuple[MomentTerm, ...]
    method: EstimatorMethod

    def to_json_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "raw_estimate": self.raw_estimate,
            "clamped": self.clamped,
            "label_second_moment": self.label_second_moment,
            "moment_terms": [
                {"order": t.order, "coefficient": t.coefficient, "value": t.value}
                for t in self.moment_terms
            ],
            "method": self.method.value,
        }


@dataclass(frozen=True)
class TheoreticalBound:
    """Constant-free error scaling sqrt(d + n) / n for the isotropic estimator.

    The failure-probability parameter tau and fourth-moment bound c_fourth
    enter only through unspecified absolute constants, so this is a relative
    scaling indicator between regimes, not a certified bound.
    """

    d: int
    n: int
    c_fourth: float
    tau: float
    scaling_value: float


def normalize_labels(data: LabeledDataset) -> tuple[LabeledDataset, float]:
    """Divide labels by their empirical standard deviation (divisor n).

    Returns the rescaled dataset and the scale divided out.  The population
    convention matches the y^T y / n term of the estimators.
    """
    y = data.labels
    variance = float(np.mean((y - y.mean()) ** 2))
    if variance == 0.0:
        raise ZeroVarianceError("labels are constant; cannot normalize")
    scale = math.sqrt(variance)
    return LabeledDataset(data.features, y / scale, data.label_kind), scale


def _moment_report(
    data: LabeledDataset,
    coefficients,
    method: EstimatorMethod,
    normalized: bool,
    chain: GramChain | None = None,
) -> EstimateReport:
    if chain is None:
        chain = gram_upper(data)
    y = data.labels
    n = data.n
    second_moment = float(y @ y) / n
    terms = []
    raw = second_moment
    for i, a in enumerate(coefficients):
        value = scaled_by_binomial(chain_form(chain, y, i + 1), n, i + 2)
        terms.append(MomentTerm(order=i + 2, coefficient=float(a), value=value))
        raw -= a * value
    estimate = min(1.0, max(0.0, raw)) if normalized else raw
    return EstimateReport(
        estimate=estimate,
        raw_estimate=raw,
        clamped=estimate != raw,
        label_second_moment=second_moment,
        moment_terms=tuple(terms),
        method=method,
    )


def estimate_isotropic(
    data: LabeledDataset, *, normalized: bool = False
) -> EstimateReport:
    """y^T y / n - y^T G y / C(n, 2): unexplained variance, known covariance.

    Unbiased for E[y^2] - ||E[y x]||^2 with isotropic features, which is the
    residual of the best linear predictor; no linearity assumption on the
    labels is needed.  Set ``normalized=True`` when the labels were scaled to
    unit variance so the reported estimate is clamped to [0, 1].
    """
    if data.n < 2:
        raise InsufficientSamplesError(f"need n >= 2, got n={data.n}")
    return _moment_report(data, (1.0,), EstimatorMethod.ISOTROPIC, normalized)


def estimate_general(
    data: LabeledDataset,
    plan: PolynomialPlan,
    sigma_max: float = 1.0,
    *,
    normalized: bool = False,
) -> EstimateReport:
    """y^T y / n - sum_i a_i y^T G^(i+1) y / C(n, i+2), unknown covariance.

    Features are divided by sqrt(sigma_max) first, which divides the
    covariance by sigma_max and places its spectrum inside the plan's fitted
    interval; the plan coefficients then reconstruct the first moment from
    the higher ones.  With the one-coefficient plan (1.0,) this reduces
    exactly to the isotropic estimator.
    """
    if sigma_max <= 0:
        raise ValueError(f"sigma_max must be positive, got {sigma_max}")
    if data.n < plan.degree_k + 1:
        raise InsufficientSamplesError(
            f"degree-{plan.degree_k} plan needs n >= {plan.degree_k + 1}, got {data.n}"
        )
    working = data
    if sigma_max != 1.0:
        working = data.with_features(data.features / math.sqrt(sigma_max))
    return _moment_report(
        working, plan.coefficients, EstimatorMethod.GENERAL_COV, normalized
    )


def baseline_unbiased(data: LabeledDataset) -> EstimateReport:
    """Classical residual estimator (y - X b)^T (y - X b) / (n - d).

    b is the least-squares solution via column-pivoted QR, falling back to
    the minimum-norm SVD solution when X is rank-deficient.  Undefined for
    n <= d, where the residual is identically zero.
    """
    n, d = data.n, data.d
    if n <= d:
        raise UnderdeterminedError(
            f"residual estimator needs n > d, got n={n}, d={d}"
        )
    x, y = data.features, data.labels
    q, r, _ = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank_deficient = diag.min() <= diag.max() * np.finfo(float).eps * max(n, d)
    if rank_deficient:
        beta_hat, *_ = np.linalg.lstsq(x, y, rcond=None)
        residual = y - x @ beta_hat
    else:
        residual = y - q @ (q.T @ y)
    rss = float(residual @ residual)
    value = rss / (n - d)
    return EstimateReport(
        estimate=value,
        raw_estimate=value,
        clamped=False,
        label_second_moment=float(y @ y) / n,
        moment_terms=(),
        method=EstimatorMethod.BASELINE_UNBIASED,
    )


def whiten(data: LabeledDataset, sigma_hat: np.ndarray) -> LabeledDataset:
    """Replace features x by sigma_hat^(-1/2) x (symmetric inverse square root).

    sigma_hat must be symmetric positive definite; eigenvalues at or below
    1e-12 times the largest are rejected rather than inverted.
    """
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    if sigma_hat.shape != (data.d, data.d):
        raise ValueError(
            f"sigma_hat must be {data.d}x{data.d}, got shape {sigma_hat.shape}"
        )
    if not np.allclose(sigma_hat, sigma_hat.T, atol=1e-10, rtol=1e-10):
        raise NotPositiveDefiniteError("sigma_hat is not symmetric")
    eigenvalues, vectors = np.linalg.eigh((sigma_hat + sigma_hat.T) / 2.0)
    if eigenvalues.min() <= 1e-12 * eigenvalues.max():
        raise NotPositiveDefiniteError(
            f"sigma_hat has eigenvalue {eigenvalues.min():.3e} "
            f"(max {eigenvalues.max():.3e}); not positive definite"
        )
    inv_root = (vectors / np.sqrt(eigenvalues)) @ vectors.T
    return data.with_features(data.features @ inv_root)


def theoretical_scaling(
    d: int, n: int, c_fourth: float = 3.0, tau: float = 0.1
) -> TheoreticalBound:
    """Scaling indicator c_fourth * sqrt(d + n) / (tau * n).

    c_fourth defaults to 3, the fourth-moment constant of Gaussian features.
    """
    if d < 1 or n < 1:
        raise ValueError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    if c_fourth <= 0:
        raise ValueError(f"c_fourth must be positive, got {c_fourth}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    return TheoreticalBound(
        d=d,
        n=n,
        c_fourth=c_fourth,
        tau=tau,
        scaling_value=c_fourth * math.sqrt(d + n) / (tau * n),
    )
