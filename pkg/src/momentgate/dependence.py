"""Correlated stationary series: synthesis, effective size, sieve correction.

A stationary series with correlation length tau behaves, for extreme-value
purposes, like roughly n* = n / (1 + kappa tau) independent draws.  The
critical order of a correlated series is therefore predicted by the i.i.d.
theory evaluated at n*.  Estimation from a correlated series combines two
corrections: ln n replaced by ln n* inside the estimators, and the top order
statistics pre-filtered by a sieve that discards points too close to an
already-selected extreme in the d_beta metric

    d_beta(i, j) = max(|j - i|, beta * #{k : y between y_i and y_j}),

so that each local excursion of the series contributes one extreme.

Synthesis goes through a Gaussian copula: a stationary standard Gaussian
series with prescribed covariance (exact circulant embedding), mapped through
Phi then the marginal quantile.  The covariance is prescribed at the Gaussian
layer by default; Hermite matching (opt-in) adjusts the Gaussian covariance
per lag so the transformed series carries the prescribed covariance instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special as sp

from . import tail_models as tm
from .errors import (
    ArgumentError,
    DivergentError,
    EmbeddingError,
    InsufficientSievedPoints,
)
from .estimators import (
    OrderedSample,
    QcEstimate,
    default_k_rho,
    default_k_theta,
    rho_hat,
    theta_hat,
)
from .theory import critical_curve

__all__ = [
    "ExponentialCov",
    "TabulatedCov",
    "SeriesSpec",
    "SievedSample",
    "MatchMode",
    "parse_cov",
    "format_cov",
    "cov_at_lags",
    "correlation_length",
    "n_star",
    "qc_theory_corr",
    "synth_series",
    "sieve",
    "theta_hat_corr",
    "rho_hat_corr",
    "qc_hat_corr",
]

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class ExponentialCov:
    """C(t) = exp(-|t|/tau); tau = 0 degenerates to the delta (i.i.d.) case."""

    tau: float

    def __post_init__(self) -> None:
        if not self.tau >= 0.0:
            raise ArgumentError(f"tau must be >= 0, got {self.tau}")


@dataclass(frozen=True)
class TabulatedCov:
    """C at integer lags 0, 1, ...; zero beyond the table.

    Values are normalized to a tuple so instances compare and hash by
    content."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.size < 1 or vals[0] != 1.0:
            raise ArgumentError("tabulated covariance must start with C(0) = 1")
        if np.any(np.abs(vals) > 1.0):
            raise ArgumentError("covariance values must satisfy |C| <= 1")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))


CovarianceSpec = ExponentialCov | TabulatedCov


@dataclass(frozen=True)
class SeriesSpec:
    model: tm.TailModel
    cov: CovarianceSpec
    n: int


class MatchMode(str, Enum):
    GAUSSIAN_LEVEL = "gaussian"
    HERMITE = "hermite"


@dataclass(frozen=True)
class SievedSample:
    """Sieve output: indices/values in selection (descending-value) order."""

    selected_indices: np.ndarray
    selected_values: np.ndarray
    n_original: int
    s: float
    beta: float


def parse_cov(spec: str) -> CovarianceSpec:
    """Parse ``exp:tau=100`` or ``tab:1,0.5,0.25``."""
    name, _, rest = spec.strip().partition(":")
    name = name.strip().lower()
    if name == "exp":
        key, eq, val = rest.partition("=")
        if key.strip() != "tau" or not eq:
            raise ArgumentError(f"exponential covariance needs tau=..., got {spec!r}")
        try:
            return ExponentialCov(float(val))
        except ValueError:
            raise ArgumentError(f"non-numeric tau in {spec!r}") from None
    if name == "tab":
        try:
            vals = [float(v) for v in rest.split(",") if v.strip()]
        except ValueError:
            raise ArgumentError(f"non-numeric tabulated covariance in {spec!r}") from None
        if not vals:
            raise ArgumentError(f"empty tabulated covariance in {spec!r}")
        return TabulatedCov(np.asarray(vals))
    raise ArgumentError(f"unknown covariance kind {name!r}")


def format_cov(cov: CovarianceSpec) -> str:
    if isinstance(cov, ExponentialCov):
        return f"exp:tau={cov.tau:g}"
    return "tab:" + ",".join(f"{v:g}" for v in cov.values)


def cov_at_lags(cov: CovarianceSpec, lags: np.ndarray) -> np.ndarray:
    """C(t) evaluated at (nonnegative integer) lags."""
    lags = np.asarray(lags)
    if isinstance(cov, ExponentialCov):
        if cov.tau == 0.0:
            return (lags == 0).astype(float)
        return np.exp(-np.abs(lags) / cov.tau)
    table = np.asarray(cov.values, dtype=float)
    out = np.zeros(lags.shape, dtype=float)
    inside = lags < table.size
    out[inside] = table[lags[inside]]
    return out


def correlation_length(cov: CovarianceSpec) -> float:
    """tau = int t C(t) dt / int C(t) dt (trapezoidal for tabulated covs)."""
    if isinstance(cov, ExponentialCov):
        return cov.tau
    vals = np.asarray(cov.values, dtype=float)
    if vals.size == 1:
        return 0.0
    t = np.arange(len(vals), dtype=float)
    den = float(_trapezoid(vals, t))
    if den <= 0.0:
        raise DivergentError("covariance integral is not positive")
    return float(_trapezoid(t * vals, t)) / den


def n_star(n: float, tau: float, kappa: float) -> float:
    """Effective independent sample count n / (1 + kappa tau)."""
    if not n >= 1.0:
        raise ArgumentError(f"n must be >= 1, got {n}")
    if not tau >= 0.0 or not kappa >= 0.0:
        raise ArgumentError("tau and kappa must be >= 0")
    return n / (1.0 + kappa * tau)


def qc_theory_corr(model: tm.TailModel, n: float, tau: float,
                   kappa: float = 0.08) -> float:
    """Predicted critical order of a correlated series: q_c at the effective
    size n*."""
    ns = n_star(n, tau, kappa)
    if ns < 2.0:
        raise ArgumentError(f"effective size n* = {ns:.3g} < 2")
    return critical_curve(model, round(ns)).qc_approx


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

def _embed_gaussian(r: np.ndarray, m: int, seed: int) -> np.ndarray:
    """Stationary standard Gaussian series of length m (circulant, exact)."""
    lam = np.fft.fft(r).real
    lam_max = float(lam.max())
    bad = lam < -1e-10 * max(lam_max, 1.0)
    clipped_mass = float(-lam[bad].sum()) if bad.any() else 0.0
    total_mass = float(np.abs(lam).sum())
    if clipped_mass > 0.01 * total_mass:
        raise EmbeddingError(
            f"circulant embedding clipped {clipped_mass / total_mass:.2%} "
            "of spectral mass"
        )
    lam = np.maximum(lam, 0.0)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = rng.standard_normal(m)
    v = rng.standard_normal(m)
    return np.fft.fft(np.sqrt(lam / m) * (u + 1j * v)).real


def _gauss_to_marginal(model: tm.TailModel, z: np.ndarray) -> np.ndarray:
    """quantile(model, Phi(z)) through survival forms (accurate deep tails)."""
    if model.family is tm.Family.LOG_NORMAL:
        return z.copy()
    if model.family is tm.Family.LOG_WEIBULL:
        # h(y) = -ln(1 - Phi(z)) and h = y^rho
        return (-sp.log_ndtr(-z)) ** (1.0 / model.rho)
    a = 1.0 / model.rho
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = sp.gammainccinv(a, 2.0 * sp.ndtr(-z[pos])) ** (1.0 / model.rho)
    out[~pos] = -(sp.gammainccinv(a, 2.0 * sp.ndtr(z[~pos])) ** (1.0 / model.rho))
    return out


def _hermite_gaussian_cov(model: tm.TailModel, targets: np.ndarray) -> np.ndarray:
    """Per-lag Gaussian-layer correlations r so that corr(g(Z_0), g(Z_t)) hits
    the prescribed values, g = quantile . Phi; bisection on the Hermite series
    sum_m (a_m^2/m!) r^m with coefficients from 64-node Gauss-Hermite."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(64)
    w = weights / math.sqrt(2.0 * math.pi)
    g = _gauss_to_marginal(model, nodes)
    m_max = 40
    he_prev = np.ones_like(nodes)
    he = nodes.copy()
    b = np.empty(m_max)
    b[0] = float(np.dot(w, g * he)) ** 2  # m = 1 term, a_1^2/1!
    log_fact = 0.0
    for m in range(2, m_max + 1):
        he_prev, he = he, nodes * he - (m - 1) * he_prev
        log_fact += math.log(m)
        a_m = float(np.dot(w, g * he))
        b[m - 1] = a_m * a_m * math.exp(-log_fact)
    var = float(b.sum())

    def corr_of_r(r: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(r)
        for coeff in b[::-1]:
            acc = acc * r + coeff
        return acc * r / var

    lo = np.full(targets.shape, -1.0)
    hi = np.ones(targets.shape)
    tgt = np.clip(targets, corr_of_r(lo), 1.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = corr_of_r(mid) < tgt
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def synth_series(spec: SeriesSpec, seed: int,
                 match_mode: MatchMode = MatchMode.GAUSSIAN_LEVEL) -> tm.Sample:
    """Stationary series with the spec's marginal and covariance.

    GaussianLevel prescribes the covariance to the Gaussian copula layer;
    Hermite pre-distorts the Gaussian covariance so the transformed series
    matches it instead.  Deterministic given seed.
    """
    n = int(spec.n)
    if n < 2:
        raise ArgumentError(f"series length must be >= 2, got {n}")
    match_mode = MatchMode(match_mode)
    m = 1 << max(1, (2 * (n - 1) - 1).bit_length())
    dist = np.minimum(np.arange(m), m - np.arange(m))
    c = cov_at_lags(spec.cov, dist)
    if match_mode is MatchMode.HERMITE:
        half = m // 2 + 1
        r_half = _hermite_gaussian_cov(spec.model, c[:half])
        c = np.concatenate([r_half, r_half[1:-1][::-1]]) if m > 2 else r_half[:m]
        c[0] = 1.0
    z = _embed_gaussian(c, m, seed)[:n]
    y = _gauss_to_marginal(spec.model, z)
    return tm.Sample(values=y, n=n, seed=int(seed))


# ---------------------------------------------------------------------------
# sieve
# ---------------------------------------------------------------------------

def sieve(series, s: float, beta: float = 1.0,
          max_points: int | None = None) -> SievedSample:
    """Extract effectively independent extremes by repeated max-selection.

    Iteratively selects the largest remaining value, then removes every
    remaining point within d_beta-distance <= s of it, where d_beta(i, j) =
    max(|j - i|, beta * c_ij) and c_ij counts series values strictly between
    y_i and y_j.  With s = 0 nothing is removed and the result is the whole
    series in descending order.  ``max_points`` stops the scan early once
    that many selections have been made (the selected prefix is identical to
    the full run's).
    """
    if not s >= 0.0:
        raise ArgumentError(f"s must be >= 0, got {s}")
    if not beta >= 0.0:
        raise ArgumentError(f"beta must be >= 0, got {beta}")
    y = np.asarray(series.values if isinstance(series, tm.Sample) else series,
                   dtype=float)
    n = len(y)
    if n == 0:
        raise ArgumentError("empty series")
    limit = n if max_points is None else min(int(max_points), n)

    order = np.argsort(-y, kind="stable")
    window = int(math.floor(s))
    if window == 0:
        # d_beta >= |j - i| >= 1 between distinct indices: nothing is removable
        idx = order[:limit]
        return SievedSample(selected_indices=idx, selected_values=y[idx],
                            n_original=n, s=float(s), beta=float(beta))

    sorted_vals = np.sort(y)
    # per-index counts for "strictly between" queries over the whole series
    n_lt = np.searchsorted(sorted_vals, y, side="left")
    n_le = np.searchsorted(sorted_vals, y, side="right")

    removed = np.zeros(n, dtype=bool)
    sel_idx: list[int] = []
    for i in order:
        if removed[i]:
            continue
        sel_idx.append(int(i))
        if len(sel_idx) >= limit:
            break
        js = np.arange(max(0, i - window), min(n, i + window + 1))
        js = js[(js != i) & ~removed[js]]
        if len(js) == 0:
            continue
        if beta == 0.0:
            removed[js] = True  # |j - i| <= s already holds inside the window
            continue
        higher = y[js] >= y[i]
        between = np.where(higher, n_lt[js] - n_le[i], n_lt[i] - n_le[js])
        removed[js[beta * np.maximum(between, 0) <= s]] = True
    idx = np.asarray(sel_idx, dtype=int)
    return SievedSample(selected_indices=idx, selected_values=y[idx],
                        n_original=n, s=float(s), beta=float(beta))


# ---------------------------------------------------------------------------
# corrected estimators
# ---------------------------------------------------------------------------

def _corr_components(series: tm.Sample, k_theta: int | None, k_rho: int | None,
                     tau: float, kappa: float, s: float | None, alpha: float,
                     beta: float):
    n = series.n
    ns = n_star(n, tau, kappa)
    if ns < 2.0:
        raise ArgumentError(f"effective size n* = {ns:.3g} < 2")
    n_eff = round(ns)
    kt = default_k_theta(n_eff) if k_theta is None else int(k_theta)
    kr = default_k_rho(n_eff) if k_rho is None else int(k_rho)
    radius = alpha * tau if s is None else s
    k_need = max(kt, kr)
    sieved = sieve(series, radius, beta, max_points=k_need + 1)
    if len(sieved.selected_values) < k_need + 1:
        raise InsufficientSievedPoints(
            f"sieve kept {len(sieved.selected_values)} points, need {k_need + 1}"
        )
    ordered = OrderedSample(top=sieved.selected_values[:k_need], n=n,
                            k_available=k_need)
    return ordered, kt, kr, math.log(ns)


def theta_hat_corr(series: tm.Sample, k_theta: int | None = None, *,
                   tau: float, kappa: float = 0.08, s: float | None = None,
                   alpha: float = 0.01, beta: float = 1.0) -> float:
    """theta_hat on the sieved extremes with ln n* in the numerator."""
    ordered, kt, _, log_ns = _corr_components(series, k_theta, 2, tau, kappa,
                                              s, alpha, beta)
    return theta_hat(ordered, kt, log_n=log_ns)


def rho_hat_corr(series: tm.Sample, k_rho: int | None = None, *,
                 tau: float, kappa: float = 0.08, s: float | None = None,
                 alpha: float = 0.01, beta: float = 1.0) -> float:
    """rho_hat on the sieved extremes with n* as the effective size."""
    ordered, _, kr, log_ns = _corr_components(series, 1, k_rho, tau, kappa,
                                              s, alpha, beta)
    return rho_hat(ordered, kr, log_n=log_ns)


def qc_hat_corr(series: tm.Sample, k_theta: int | None = None,
                k_rho: int | None = None, *, tau: float, kappa: float = 0.08,
                s: float | None = None, alpha: float = 0.01,
                beta: float = 1.0) -> QcEstimate:
    """Sieve-corrected critical-order estimate for a correlated series.

    Defaults: k's from the rules of thumb at round(n*), sieve radius
    s = alpha * tau.
    """
    ordered, kt, kr, log_ns = _corr_components(series, k_theta, k_rho, tau,
                                               kappa, s, alpha, beta)
    th = theta_hat(ordered, kt, log_n=log_ns)
    rh = rho_hat(ordered, kr, log_n=log_ns)
    return QcEstimate(theta_hat=th, rho_hat=rh, qc_hat=th * rh,
                      k_theta=kt, k_rho=kr)
