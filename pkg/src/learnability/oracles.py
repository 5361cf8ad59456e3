"""Independent brute-force and reference computations used only by tests.

Everything here deliberately avoids the production code paths: chained
quadratic forms are expanded as explicit sums over increasing index tuples
instead of matrix-vector chains, the stage-1 LP is checked by scalar golden
section search, and the link-map quadrature is re-derived at fixed node
counts.  Combinatorial guards fail loudly instead of truncating.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .dataset import LabeledDataset
from .errors import OracleGuardError
from .synth import derive_seed

__all__ = [
    "OracleMethod",
    "OracleResult",
    "chain_sum_bruteforce",
    "best_poly_gridsearch",
    "quadrature_reference",
    "monte_carlo_truth",
]

MAX_BRUTEFORCE_N = 14
MAX_BRUTEFORCE_K = 5


class OracleMethod(enum.Enum):
    TUPLE_ENUMERATION = "tuple-enumeration"
    DENSE_GRID = "dense-grid"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: OracleMethod
    cost: int  # tuples enumerated / function evaluations / trials
    stderr: float | None = None  # Monte Carlo only
    argument: float | None = None  # optimizer location, when one exists


def chain_sum_bruteforce(data: LabeledDataset, k: int) -> OracleResult:
    """y^T G^k y as the explicit sum over increasing (k+1)-tuples.

    sum_{i_1 < ... < i_{k+1}} y_{i_1} <x_{i_1}, x_{i_2}> ... <x_{i_k}, x_{i_{k+1}}> y_{i_{k+1}}
    with every inner product taken straight from the feature rows.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if data.n > MAX_BRUTEFORCE_N or k > MAX_BRUTEFORCE_K:
        raise OracleGuardError(
            f"brute force limited to n <= {MAX_BRUTEFORCE_N}, k <= {MAX_BRUTEFORCE_K}; "
            f"got n={data.n}, k={k}"
        )
    x = data.features
    y = data.labels
    total = 0.0
    count = 0
    for tup in combinations(range(data.n), k + 1):
        term = y[tup[0]] * y[tup[-1]]
        for a, b in zip(tup, tup[1:]):
            term *= float(np.dot(x[a], x[b]))
        total += term
        count += 1
    return OracleResult(
        value=total, method=OracleMethod.TUPLE_ENUMERATION, cost=count
    )


def best_poly_gridsearch(
    s_l: float, s_r: float, k: int = 2, grid_points: int = 1000
) -> OracleResult:
    """Best sup-error of a x^2 approximating x on the grid, by golden section.

    Only k = 2 has a scalar coefficient, making this an independent check of
    the stage-1 LP for that case.  The error max_j |a x_j^2 - x_j| is a
    maximum of convex functions of a, hence unimodal.
    """
    if k != 2:
        raise OracleGuardError("scalar search only covers k = 2")
    if not (0.0 <= s_l <= s_r) or s_r <= 0.0:
        raise ValueError(f"need 0 <= s_l <= s_r with s_r > 0, got [{s_l}, {s_r}]")
    xs = (
        np.array([s_l])
        if s_l == s_r
        else np.linspace(s_l, s_r, grid_points)
    )
    squares = xs * xs

    def error(a: float) -> float:
        return float(np.abs(a * squares - xs).max())

    lo, hi = 0.0, 4.0 / s_r  # bracket: optimum fits a x^2 ~ x on [s_l, s_r]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = error(c), error(d)
    evals = 2
    while hi - lo > 1e-12:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = error(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = error(d)
        evals += 1
    a_best = (lo + hi) / 2.0
    return OracleResult(
        value=error(a_best),
        method=OracleMethod.DENSE_GRID,
        cost=evals,
        argument=a_best,
    )


def quadrature_reference(b: float, nodes: int) -> tuple[float, float]:
    """(q(b), p(b)) at a fixed trapezoid node count.

    Same exact half-line reduction as the production link map (evenness plus
    s = x^2/2, then s = e^t) but re-derived here with a fixed number of nodes,
    no adaptivity, and no shared code.  Certifies the production builder's
    convergence claims.
    """
    if nodes not in (64, 128, 256):
        raise OracleGuardError(f"reference node count must be 64, 128 or 256, got {nodes}")
    if b < 0:
        raise ValueError(f"b must be nonnegative, got {b}")
    if b == 0.0:
        return 0.0, 0.5
    t_lo, t_hi = -40.0, 5.0
    h = (t_hi - t_lo) / (nodes - 1)
    q_total = 0.0
    abs_total = 0.0
    for j in range(nodes):
        s = math.exp(t_lo + j * h)
        root = math.sqrt(2.0 * s)
        tanh = math.tanh(b * root / 2.0)
        weight = math.exp(-s) * s
        q_total += 0.5 * tanh * weight
        abs_total += tanh / (2.0 * root) * weight
    scale = h * math.sqrt(2.0 / math.pi)
    return scale * q_total, 0.5 - scale * abs_total


def monte_carlo_truth(
    make_dataset: Callable[[int], tuple],
    statistic: Callable[..., float],
    trials: int,
    master_seed: int = 0,
) -> OracleResult:
    """Empirical mean and standard error of a statistic over fresh datasets.

    ``make_dataset(seed)`` must return a (dataset, ground_truth) pair;
    ``statistic(dataset, ground_truth)`` a float.  Trial seeds are derived
    substreams of ``master_seed``, so results are reproducible and trials
    independent.
    """
    if trials < 100:
        raise OracleGuardError(f"need at least 100 trials, got {trials}")
    values = np.empty(trials)
    for trial in range(trials):
        data, truth = make_dataset(derive_seed(master_seed, trial))
        values[trial] = statistic(data, truth)
    stderr = float(values.std(ddof=1) / math.sqrt(trials))
    return OracleResult(
        value=float(values.mean()),
        method=OracleMethod.MONTE_CARLO,
        cost=trials,
        stderr=stderr,
    )
