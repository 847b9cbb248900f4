"""Order-statistics estimators for the critical moment order.

theta_hat estimates theta(n) = ln n / y_dagger(n) through Omega_k, a
variance-optimal unbiased linear combination of the k largest order
statistics (under their joint extreme-value limit law).  rho_hat_E recovers
the tail exponent rho by an ordinary least-squares fit of the order-statistic
rank ladder ln(ln n - ln i) against ln Y_{i,n}.  Their product estimates
q_c(n) ~ rho_l(y_dagger) * theta(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateRegressionError,
    InsufficientPositiveValues,
    NonPositiveOmegaError,
)
from .tail_models import Sample

__all__ = [
    "OrderedSample",
    "WeightScheme",
    "QcEstimate",
    "order_stats",
    "omega_weights",
    "omega",
    "theta_hat",
    "rho_hat",
    "default_k_theta",
    "default_k_rho",
    "k_theta_linear_rule",
    "qc_hat",
]

_EULER_GAMMA = np.euler_gamma


@dataclass(frozen=True)
class OrderedSample:
    """Top-k order statistics of a sample, descending, plus the full size n."""

    top: np.ndarray
    n: int
    k_available: int

    def __post_init__(self) -> None:
        if self.k_available != len(self.top) or not 1 <= self.k_available <= self.n:
            raise ArgumentError("k_available must equal len(top) and be in [1, n]")
        if np.any(np.diff(self.top) > 0.0):
            raise ArgumentError("top must be nonincreasing")


@dataclass(frozen=True)
class WeightScheme:
    """Omega_k coefficients; alpha sums to 1 with equal leading entries."""

    k: int
    alpha: np.ndarray


@dataclass(frozen=True)
class QcEstimate:
    theta_hat: float
    rho_hat: float
    qc_hat: float
    k_theta: int
    k_rho: int


def order_stats(sample: Sample, k: int) -> OrderedSample:
    """Top-k values of the sample, descending; O(n + k log k) expected."""
    n = sample.n
    if not 1 <= k <= n:
        raise ArgumentError(f"k must be in [1, n]={n}, got {k}")
    values = np.asarray(sample.values, dtype=float)
    if k == n:
        top = np.sort(values)[::-1]
    else:
        part = np.partition(values, n - k)[n - k:]
        top = np.sort(part)[::-1]
    return OrderedSample(top=top, n=n, k_available=k)


def omega_weights(k: int) -> WeightScheme:
    """Variance-optimal unbiased weights for Omega_k.

    For k >= 2 the first k-1 entries are (H_{k-1} - gamma)/(k-1) with
    H_{k-1} the harmonic sum and gamma Euler's constant; the last entry
    closes the sum to exactly 1.  k = 1 degenerates to the sample maximum.
    """
    if k < 1:
        raise ArgumentError(f"k must be >= 1, got {k}")
    if k == 1:
        return WeightScheme(k=1, alpha=np.array([1.0]))
    harmonic = float(np.sum(1.0 / np.arange(1, k)))
    lead = (harmonic - _EULER_GAMMA) / (k - 1)
    alpha = np.full(k, lead)
    alpha[-1] = 1.0 - (k - 1) * lead
    return WeightScheme(k=k, alpha=alpha)


def omega(ordered: OrderedSample, k: int) -> float:
    """Omega_k = sum alpha_i Y_{i,n} over the k largest order statistics."""
    if k > ordered.k_available:
        raise ArgumentError(f"k={k} exceeds available order stats {ordered.k_available}")
    scheme = omega_weights(k)
    return float(np.dot(scheme.alpha, ordered.top[:k]))


def theta_hat(ordered: OrderedSample, k_theta: int, *,
              log_n: float | None = None) -> float:
    """ln n / Omega_k; ``log_n`` overrides the numerator (effective size)."""
    om = omega(ordered, k_theta)
    if om <= 0.0:
        raise NonPositiveOmegaError(
            f"Omega_{k_theta} = {om:.6g} <= 0; estimator undefined"
        )
    num = math.log(ordered.n) if log_n is None else float(log_n)
    return num / om


def rho_hat(ordered: OrderedSample, k_rho: int, *,
            log_n: float | None = None) -> float:
    """OLS slope of ln(ln n - ln i) against ln Y_{i,n}, i = 1..k_rho.

    Points with Y_{i,n} <= 0 are excluded (their log does not exist) while
    the surviving points keep their original ranks i.  ``log_n`` substitutes
    an effective log sample size in the rank ladder.
    """
    if k_rho < 2:
        raise ArgumentError(f"k_rho must be >= 2, got {k_rho}")
    if k_rho > ordered.k_available:
        raise ArgumentError(
            f"k_rho={k_rho} exceeds available order stats {ordered.k_available}"
        )
    num = math.log(ordered.n) if log_n is None else float(log_n)
    ranks = np.arange(1, k_rho + 1, dtype=float)
    if num - math.log(k_rho) <= 0.0:
        raise ArgumentError(f"k_rho={k_rho} too large for effective size e^{num:.3g}")
    y = ordered.top[:k_rho]
    keep = y > 0.0
    if int(keep.sum()) < 2:
        raise InsufficientPositiveValues(
            f"only {int(keep.sum())} positive order stats among top {k_rho}"
        )
    x = np.log(y[keep])
    t = np.log(num - np.log(ranks[keep]))
    cxx = float(np.mean(x * x) - np.mean(x) ** 2)
    # exact ties leave only rounding residue in cxx; a relative floor keeps
    # the slope from being formed out of that noise
    if cxx <= 1e-15 * max(1.0, float(np.mean(x * x))):
        raise DegenerateRegressionError("all used order statistics are equal")
    cxt = float(np.mean(x * t) - np.mean(x) * np.mean(t))
    return cxt / cxx


def default_k_theta(n: int) -> int:
    """Rule-of-thumb k for theta_hat: round(exp(sqrt(1.6 ln n))), clamped."""
    if n < 8:
        raise ArgumentError(f"default k rules need n >= 8, got {n}")
    k = round(math.exp(math.sqrt(1.6 * math.log(n))))
    return _clamp_k(k, n)


def default_k_rho(n: int, exponent: float = 1.0 / 3.0) -> int:
    """Rule-of-thumb k for rho_hat: round(8 n**exponent), clamped."""
    if n < 8:
        raise ArgumentError(f"default k rules need n >= 8, got {n}")
    k = round(8.0 * n ** exponent)
    return _clamp_k(k, n)


def k_theta_linear_rule(n: int) -> int:
    """Alternative k rule round(10 ln n - 40), floored at 2 (negative for
    small n); opt-in only."""
    if n < 8:
        raise ArgumentError(f"default k rules need n >= 8, got {n}")
    k = round(10.0 * math.log(n) - 40.0)
    return _clamp_k(max(k, 2), n)


def _clamp_k(k: int, n: int) -> int:
    hi = max(2, n // 10)  # k(n)/n -> 0: never use more than a tenth of the data
    return int(min(max(k, 2), hi))


def qc_hat(sample: Sample, k_theta: int | None = None,
           k_rho: int | None = None) -> QcEstimate:
    """q_c estimate theta_hat * rho_hat on one shared order-statistics pass."""
    n = sample.n
    kt = default_k_theta(n) if k_theta is None else int(k_theta)
    kr = default_k_rho(n) if k_rho is None else int(k_rho)
    ordered = order_stats(sample, max(kt, kr))
    th = theta_hat(ordered, kt)
    rh = rho_hat(ordered, kr)
    return QcEstimate(theta_hat=th, rho_hat=rh, qc_hat=th * rh,
                      k_theta=kt, k_rho=kr)
