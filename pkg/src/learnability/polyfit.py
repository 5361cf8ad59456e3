"""Minimax polynomial plans: approximate f(x) = x by a_0 x^2 + ... + a_{k-2} x^k.

Replacing the first covariance moment by this combination of higher moments is
what lets the general-covariance estimators avoid ever estimating the
covariance itself.  Coefficients come from two small linear programs over a
discretized interval [s_l, s_r]:

  stage 1  minimizes the worst-case (sup-norm) error on the grid;
  stage 2  minimizes the degree-weighted coefficient mass sum 2^(i+2) |a_i|
           subject to a sup-norm budget of ``stage2_slack`` times the stage-1
           optimum (default 3/2).

Stage 2 trades a modest amount of bias for much smaller downstream estimator
variance, which grows with the coefficient magnitudes.  The sup error of the
returned plan is re-measured on a 10x denser verification grid to guard
against excursions between fitting points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError
from .simplex import minimize_over_polytope

__all__ = [
    "PolynomialPlan",
    "fit_plan",
    "minimax_fit",
    "evaluate_plan",
    "approximation_error_ceiling",
]

DEFAULT_GRID_POINTS = 1000
DEFAULT_STAGE2_SLACK = 1.5
VERIFY_FACTOR = 10


@dataclass(frozen=True)
class PolynomialPlan:
    """Coefficients a_0..a_{k-2} over the basis x^2..x^k on [s_l, s_r]."""

    degree_k: int
    s_l: float
    s_r: float
    coefficients: tuple[float, ...]
    achieved_error: float  # sup |p(x) - x| on the verification grid
    weighted_cost: float  # sum 2^(i+2) |a_i|

    def to_json_dict(self) -> dict:
        return {
            "k": self.degree_k,
            "s_l": self.s_l,
            "s_r": self.s_r,
            "coefficients": list(self.coefficients),
            "achieved_error": self.achieved_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, payload: dict) -> "PolynomialPlan":
        coeffs = tuple(float(a) for a in payload["coefficients"])
        return cls(
            degree_k=int(payload["k"]),
            s_l=float(payload["s_l"]),
            s_r=float(payload["s_r"]),
            coefficients=coeffs,
            achieved_error=float(payload["achieved_error"]),
            weighted_cost=float(
                sum(2 ** (i + 2) * abs(a) for i, a in enumerate(coeffs))
            ),
        )


def _grid(s_l: float, s_r: float, points: int) -> np.ndarray:
    if s_l == s_r:
        return np.array([s_l], dtype=np.float64)
    return np.linspace(s_l, s_r, points)


def _check_interval(s_l: float, s_r: float, k: int, grid_points: int) -> None:
    if not (0.0 <= s_l <= s_r) or s_r <= 0.0:
        raise ValueError(f"need 0 <= s_l <= s_r with s_r > 0, got [{s_l}, {s_r}]")
    if k < 2:
        raise ValueError(f"degree k must be >= 2, got {k}")
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")


def _power_matrix(xs: np.ndarray, k: int) -> np.ndarray:
    powers = np.arange(2, k + 1)
    return xs[:, None] ** powers[None, :]


def minimax_fit(
    s_l: float,
    s_r: float,
    k: int,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> tuple[np.ndarray, float]:
    """Stage-1 LP: coefficients minimizing max_grid |sum a_i x^(i+2) - x|.

    Encoded with one slack variable t and the constraint pair
    +-(p(x_j) - x_j) <= t for every grid point.
    """
    _check_interval(s_l, s_r, k, grid_points)
    xs = _grid(s_l, s_r, grid_points)
    phi = _power_matrix(xs, k)
    m = xs.size
    ones = np.ones((m, 1))
    a_ub = np.block([[phi, -ones], [-phi, -ones]])
    b_ub = np.concatenate([xs, -xs])
    cost = np.zeros(k)
    cost[-1] = 1.0
    v, value = minimize_over_polytope(cost, a_ub, b_ub, nonneg=False)
    return v[:-1], max(value, 0.0)


def _stage2(
    xs: np.ndarray, k: int, error_budget: float
) -> tuple[np.ndarray, float]:
    """Stage-2 LP: minimize sum 2^(i+2)|a_i| subject to sup error <= budget.

    |a_i| is split into positive and negative parts so the objective is
    linear; the weight 2^(i+2) is indexed by the monomial degree.
    """
    phi = _power_matrix(xs, k)
    m, nv = phi.shape
    weights = 2.0 ** np.arange(2, k + 1)
    cost = np.concatenate([weights, weights])
    a_ub = np.block([[phi, -phi], [-phi, phi]])
    b_ub = np.concatenate([error_budget + xs, error_budget - xs])
    w, value = minimize_over_polytope(cost, a_ub, b_ub, nonneg=True)
    return w[:nv] - w[nv:], value


def fit_plan(
    s_l: float,
    s_r: float,
    k: int,
    grid_points: int = DEFAULT_GRID_POINTS,
    *,
    stage2_slack: float = DEFAULT_STAGE2_SLACK,
) -> PolynomialPlan:
    """Two-LP minimax plan with the sup error certified on a denser grid.

    ``stage2_slack`` is the stage-2 error budget as a multiple of the stage-1
    optimum; values anywhere in [1.1, 2] behave similarly.
    """
    if stage2_slack < 1.0:
        raise ValueError(f"stage2_slack must be >= 1, got {stage2_slack}")
    _check_interval(s_l, s_r, k, grid_points)
    xs = _grid(s_l, s_r, grid_points)
    _, stage1_error = minimax_fit(s_l, s_r, k, grid_points)
    coeffs, weighted_cost = _stage2(xs, k, stage2_slack * stage1_error)

    verify = _grid(s_l, s_r, VERIFY_FACTOR * grid_points)
    residual = _power_matrix(verify, k) @ coeffs - verify
    achieved = float(np.abs(residual).max())
    if not math.isfinite(achieved):
        raise NumericalFailureError("non-finite residual in plan verification")
    return PolynomialPlan(
        degree_k=k,
        s_l=float(s_l),
        s_r=float(s_r),
        coefficients=tuple(float(a) for a in coeffs),
        achieved_error=achieved,
        weighted_cost=float(weighted_cost),
    )


def evaluate_plan(plan: PolynomialPlan, x):
    """Evaluate sum a_i x^(i+2) by Horner's scheme; accepts scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    acc = np.zeros_like(x)
    for a in reversed(plan.coefficients):
        acc = acc * x + a
    result = acc * x * x
    return float(result) if result.ndim == 0 else result


def approximation_error_ceiling(k: int, ratio: float) -> float:
    """Guaranteed sup-error ceiling min(2/k^2, 2 e^{-(k-1) sqrt(ratio)}).

    ``ratio`` is the interval after rescaling to [s_l / s_r, 1]; the best
    degree-k fit with no constant or linear term is provably at least this
    good, so any sound plan construction must land at or below it.
    """
    if k < 2:
        raise ValueError(f"degree k must be >= 2, got {k}")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    return min(2.0 / k**2, 2.0 * math.exp(-(k - 1) * math.sqrt(ratio)))
