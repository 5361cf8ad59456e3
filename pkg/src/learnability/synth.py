"""Seeded synthetic data generators with hidden ground truth.

Three families: isotropic Gaussian regression, linearly-ramped-spectrum
Gaussian regression (eigenvalues 1/d, 2/d, ..., 1 under a Haar-random
rotation), and logistic-model binary classification over either covariance.

Reproducibility contract: the RNG is the Philox 4x64 counter-based generator,
normals are produced by vectorized Box-Muller over its uniforms (so streams
are identical across platforms and numpy versions), and trial substreams are
derived by keying a SeedSequence with (master_seed, *indices).  Identical
arguments always produce bitwise-identical datasets.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset, LabelKind

__all__ = [
    "RNG_NAME",
    "SpectrumKind",
    "SynthGroundTruth",
    "substream",
    "derive_seed",
    "normals",
    "haar_rotation",
    "gen_isotropic_regression",
    "gen_spectrum_regression",
    "gen_logistic_classification",
]

RNG_NAME = "philox4x64 + box-muller"


class SpectrumKind(enum.Enum):
    IDENTITY = "identity"
    LINEAR_RAMP = "linear-ramp"  # eigenvalues i/d, Haar-random eigenbasis


@dataclass(frozen=True)
class SynthGroundTruth:
    """Hidden model behind a generated dataset.

    ``delta2`` is the true unexplained variance (regression only, NaN for
    classification); ``nu = sqrt(beta^T Sigma beta)`` is the signal strength
    driving the optimal classification error; ``spectrum`` holds the
    eigenvalues of the feature covariance.
    """

    beta: np.ndarray
    delta2: float
    nu: float
    spectrum: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("beta", "spectrum"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent reproducible stream for (master_seed, *key)."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(master_seed: int, *key: int) -> int:
    """Collapse (master_seed, *key) into a single integer seed."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    return int(seq.generate_state(1, np.uint64)[0])


def normals(gen: np.random.Generator, size: int) -> np.ndarray:
    """size standard normals by vectorized Box-Muller on Philox uniforms."""
    pairs = (size + 1) // 2
    u1 = gen.random(pairs)
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1-u1 in (0, 1] avoids log(0)
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:size]


def _unit_direction(gen: np.random.Generator, d: int) -> np.ndarray:
    v = normals(gen, d)
    norm = np.linalg.norm(v)
    while norm == 0.0:  # probability zero in practice
        v = normals(gen, d)
        norm = np.linalg.norm(v)
    return v / norm


def haar_rotation(gen: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix.

    QR of a Gaussian matrix with the R-diagonal sign correction; without the
    correction plain QR is not Haar-distributed.
    """
    a = normals(gen, d * d).reshape(d, d)
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def gen_isotropic_regression(
    d: int, n: int, delta2: float, seed: int
) -> tuple[LabeledDataset, SynthGroundTruth]:
    """x ~ N(0, I_d); y = beta^T x + noise with Var[noise] = delta2.

    beta points in a uniformly random direction with ||beta||^2 = 1 - delta2,
    so Var[y] = 1 before any label normalization.
    """
    _check_regression_args(d, n, delta2)
    gen = substream(seed)
    beta = _unit_direction(gen, d) * math.sqrt(1.0 - delta2)
    x = normals(gen, n * d).reshape(n, d)
    noise = normals(gen, n) * math.sqrt(delta2)
    y = x @ beta + noise
    truth = SynthGroundTruth(
        beta=beta,
        delta2=delta2,
        nu=math.sqrt(1.0 - delta2),
        spectrum=np.ones(d),
        seed=seed,
    )
    return LabeledDataset(x, y), truth


def gen_spectrum_regression(
    d: int, n: int, delta2: float, seed: int
) -> tuple[LabeledDataset, SynthGroundTruth]:
    """Covariance with eigenvalues 1/d, ..., 1 in a Haar-random eigenbasis.

    x = R diag(sqrt(i/d)) z with z ~ N(0, I); beta is a uniformly random
    direction rescaled so beta^T Sigma beta = 1 - delta2 exactly.
    """
    _check_regression_args(d, n, delta2)
    gen = substream(seed)
    lam = np.arange(1, d + 1) / d
    rot = haar_rotation(gen, d)
    direction = _unit_direction(gen, d)
    quad = float(((rot.T @ direction) ** 2) @ lam)  # u^T Sigma u
    beta = (
        direction * math.sqrt((1.0 - delta2) / quad)
        if delta2 < 1.0
        else np.zeros(d)
    )
    z = normals(gen, n * d).reshape(n, d)
    x = (z * np.sqrt(lam)) @ rot.T
    noise = normals(gen, n) * math.sqrt(delta2)
    y = x @ beta + noise
    truth = SynthGroundTruth(
        beta=beta,
        delta2=delta2,
        nu=math.sqrt(1.0 - delta2),
        spectrum=lam,
        seed=seed,
    )
    return LabeledDataset(x, y), truth


def gen_logistic_classification(
    d: int,
    n: int,
    beta_norm: float,
    spectrum_kind: SpectrumKind,
    seed: int,
) -> tuple[LabeledDataset, SynthGroundTruth]:
    """Labels +1 with probability g(beta^T x) under the sigmoid g, else -1.

    ``beta_norm`` fixes ||beta|| (direction uniform); the recorded nu is
    sqrt(beta^T Sigma beta), which for the ramp spectrum differs from
    ||beta|| and is what the optimal error depends on.
    """
    if d < 1 or n < 1:
        raise ValueError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    if beta_norm < 0:
        raise ValueError(f"beta_norm must be nonnegative, got {beta_norm}")
    gen = substream(seed)
    if spectrum_kind is SpectrumKind.IDENTITY:
        lam = np.ones(d)
        beta = _unit_direction(gen, d) * beta_norm
        z = normals(gen, n * d).reshape(n, d)
        x = z
        nu = beta_norm
    elif spectrum_kind is SpectrumKind.LINEAR_RAMP:
        lam = np.arange(1, d + 1) / d
        rot = haar_rotation(gen, d)
        beta = _unit_direction(gen, d) * beta_norm
        nu = math.sqrt(float(((rot.T @ beta) ** 2) @ lam))
        z = normals(gen, n * d).reshape(n, d)
        x = (z * np.sqrt(lam)) @ rot.T
    else:
        raise ValueError(f"unknown spectrum kind {spectrum_kind!r}")
    margins = x @ beta
    prob_positive = 1.0 / (1.0 + np.exp(-margins))
    y = np.where(gen.random(n) < prob_positive, 1.0, -1.0)
    truth = SynthGroundTruth(
        beta=beta, delta2=math.nan, nu=nu, spectrum=lam, seed=seed
    )
    return LabeledDataset(x, y, LabelKind.PLUS_MINUS_ONE), truth


def _check_regression_args(d: int, n: int, delta2: float) -> None:
    if d < 1 or n < 1:
        raise ValueError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    if not 0.0 <= delta2 <= 1.0:
        raise ValueError(f"delta2 must lie in [0, 1], got {delta2}")
