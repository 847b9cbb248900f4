"""Critical moment orders and moment asymptotics.

For X = e^Y with tail hazard h, the finite-sample frontier is y_dagger(n),
the solution of h(y) = ln n (the largest Y typically present among n draws).
The moment integral E X^q = int h'(y) exp(q y - h(y)) dy is dominated by a
neighbourhood of y_star(q); while y_star(q) < y_dagger(n) the empirical
moment of order q tracks E X^q, and beyond that the sample maximum takes
over and ln S(n, q) grows linearly in q.  The crossover order q_c(n) is
where the two frontiers meet.

Everything here is pure and deterministic; all moments are returned on the
log scale since the raw values overflow rapidly in q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize

from . import tail_models as tm
from .errors import (
    ArgumentError,
    ConvergenceError,
    DegenerateSaddleError,
    DomainError,
    NoRootError,
)

__all__ = [
    "CriticalCurve",
    "MomentMethod",
    "MomentValue",
    "y_dagger",
    "y_star",
    "critical_curve",
    "moment_quadrature",
    "moment_saddlepoint",
    "truncated_moment",
    "predicted_lnS",
    "q_validity_ceiling",
]

# lower integration edge substituted for an unbounded support: exp(q y) makes
# the left tail's contribution below -40 smaller than 1e-17 of any moment
_UNBOUNDED_LO = -40.0

_QUAD_EPSREL = 1e-10
_QUAD_EPSABS = 1e-12
_MOMENT_RELTOL = 1e-8


@dataclass(frozen=True)
class CriticalCurve:
    """Frontier quantities at sample size n (n may be any real >= 2)."""

    n: float
    y_dagger: float
    theta: float            # ln n / y_dagger
    rho_l_at_dagger: float  # local exponent at the frontier
    qc_exact: float         # stationarity form h' - h''/h' at y_dagger
    qc_approx: float        # product form rho_l * theta == h'(y_dagger)


class MomentMethod(str, Enum):
    QUADRATURE = "quadrature"
    SADDLEPOINT = "saddlepoint"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class MomentValue:
    q: float
    log_value: float
    method: MomentMethod


def y_dagger(model: tm.TailModel, n: float) -> float:
    """Solve h(y) = ln n; the accessible frontier at sample size n."""
    if not n >= 2.0:
        raise ArgumentError(f"n must be >= 2, got {n}")
    target = math.log(n)

    def g(y: float) -> float:
        return tm.h(model, y) - target

    p_lo = max(1e-12, 1.0 - 2.0 / n)
    p_hi = 1.0 - 1.0 / (2.0 * n)
    if p_hi >= 1.0:
        p_hi = np.nextafter(1.0, 0.0)
    lo = 0.5 * tm.quantile(model, p_lo)
    hi = 2.0 * tm.quantile(model, p_hi)
    if model.family is tm.Family.LOG_WEIBULL:
        lo = max(lo, 1e-300)
    if hi <= lo:
        hi = lo + 1.0
    # the bracket above works for the stock families; expand defensively so a
    # malformed model surfaces as ConvergenceError instead of a brentq crash
    for _ in range(80):
        if g(lo) < 0.0:
            break
        lo = lo - max(1.0, hi - lo) if model.support_lo == -math.inf else lo / 4.0
    else:
        raise ConvergenceError("could not bracket y_dagger from below")
    for _ in range(80):
        if g(hi) > 0.0:
            break
        hi = hi + max(1.0, hi - lo)
    else:
        raise ConvergenceError("could not bracket y_dagger from above")

    root = optimize.brentq(g, lo, hi, xtol=1e-13, maxiter=200)
    if abs(g(root)) > 1e-10 * target:
        raise ConvergenceError(
            f"y_dagger residual {g(root):.3e} exceeds tolerance at n={n}"
        )
    return float(root)


def y_star(model: tm.TailModel, q: float, simplified: bool = False) -> float:
    """Location dominating the moment integral at order q.

    Solves q = h'(y) - h''(y)/h'(y), i.e. the maximizer of q y + ln p(y);
    with ``simplified`` solves the leading-order form h'(y) = q instead.
    """
    if not q > 0.0:
        raise DomainError(f"y_star requires q > 0, got {q}")

    if simplified:
        def g(y: float) -> float:
            return q - tm.h_prime(model, y)
    else:
        def g(y: float) -> float:
            hp = tm.h_prime(model, y)
            return q - hp + tm.h_second(model, y) / hp

    # g is decreasing: positive well left of the root, negative right of it
    if model.support_lo == 0.0:
        lo, hi = 1e-8, 1.0
        for _ in range(200):
            if g(lo) > 0.0:
                break
            lo /= 8.0
            if lo < 1e-300:
                raise NoRootError(f"no y_star below support scale at q={q}")
        else:
            raise NoRootError(f"could not bracket y_star from below at q={q}")
    else:
        lo, hi = -1.0, 1.0
        for _ in range(200):
            if g(lo) > 0.0:
                break
            lo *= 2.0
        else:
            raise NoRootError(f"could not bracket y_star from below at q={q}")
    for _ in range(200):
        if g(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NoRootError(f"could not bracket y_star from above at q={q}")

    root = optimize.brentq(g, lo, hi, xtol=1e-13, maxiter=200)
    # residual scale: g is a difference of h'-sized terms, so a pure 1e-9 q
    # bound is unattainable once q drops below machine noise of those terms
    scale = max(q, abs(float(tm.h_prime(model, root))))
    if abs(g(root)) > 1e-9 * scale:
        raise ConvergenceError(f"y_star residual {g(root):.3e} at q={q}")
    return float(root)


def critical_curve(model: tm.TailModel, n: float) -> CriticalCurve:
    """All frontier quantities at size n, including both q_c forms."""
    yd = y_dagger(model, n)
    log_n = math.log(n)
    hp = tm.h_prime(model, yd)
    hs = tm.h_second(model, yd)
    rho_l = tm.rho_local(model, yd)
    # theta * rho_l == h'(y_dagger) algebraically (h(y_dagger) = ln n); the
    # product form degenerates only at y_dagger == 0 (symmetric family, n = 2)
    theta = log_n / yd if yd != 0.0 else math.inf
    qc_approx = rho_l * theta if yd != 0.0 else hp
    qc_exact = hp - hs / hp
    return CriticalCurve(
        n=float(n),
        y_dagger=yd,
        theta=theta,
        rho_l_at_dagger=rho_l,
        qc_exact=qc_exact,
        qc_approx=qc_approx,
    )


def _log_integral(model: tm.TailModel, q: float, lo: float, hi: float,
                  peak: float) -> float:
    """log of int_lo^hi e^{q y} p(y) dy, integrand rescaled by its peak."""
    k_shift = q * peak + tm.log_pdf(model, peak)

    def f(y: float) -> float:
        if y <= model.support_lo:
            return 0.0
        return math.exp(q * y + tm.log_pdf(model, y) - k_shift)

    total = 0.0
    err = 0.0
    for a, b in ((lo, peak), (peak, hi)):
        if a == b:
            continue
        res = integrate.quad(f, a, b, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL,
                             limit=200, full_output=1)
        total += res[0]
        err += res[1]
    if not math.isfinite(total) or total <= 0.0:
        raise ConvergenceError(f"moment quadrature collapsed at q={q}")
    if err > _MOMENT_RELTOL * total:
        raise ConvergenceError(
            f"moment quadrature error {err:.3e} too large at q={q}"
        )
    return k_shift + math.log(total)


def moment_quadrature(model: tm.TailModel, q: float) -> MomentValue:
    """ln E X^q by adaptive quadrature split at the integrand mode."""
    if not q > 0.0:
        raise DomainError(f"moment order must be > 0, got {q}")
    peak = y_star(model, q)
    lo = model.support_lo
    log_value = _log_integral(model, q, lo, math.inf, peak)
    return MomentValue(q=float(q), log_value=log_value,
                       method=MomentMethod.QUADRATURE)


def moment_saddlepoint(model: tm.TailModel, q: float) -> MomentValue:
    """Large-q saddle approximation q y* - psi(y*) + (1/2) ln(2 pi / psi''(y*))
    with psi = h + ln h'."""
    if not q > 0.0:
        raise DomainError(f"moment order must be > 0, got {q}")
    ys = y_star(model, q)
    hp = tm.h_prime(model, ys)
    psi = tm.h(model, ys) + math.log(hp)
    # psi'' needs (ln h')''; central differences keep the model surface at h''
    step = 1e-5 * max(1.0, abs(ys))
    if model.support_lo == 0.0 and ys - step <= 0.0:
        step = 0.5 * ys
    lh = math.log(tm.h_prime(model, ys))
    lh_m = math.log(tm.h_prime(model, ys - step))
    lh_p = math.log(tm.h_prime(model, ys + step))
    d2_ln_hp = (lh_p - 2.0 * lh + lh_m) / (step * step)
    psi2 = tm.h_second(model, ys) + d2_ln_hp
    if psi2 <= 0.0:
        raise DegenerateSaddleError(f"psi''(y*) = {psi2:.3e} <= 0 at q={q}")
    log_value = q * ys - psi + 0.5 * math.log(2.0 * math.pi / psi2)
    return MomentValue(q=float(q), log_value=log_value,
                       method=MomentMethod.SADDLEPOINT)


def truncated_moment(model: tm.TailModel, n: float, q: float) -> MomentValue:
    """Moment integral cut at the accessible frontier y_dagger(n)."""
    if not q > 0.0:
        raise DomainError(f"moment order must be > 0, got {q}")
    yd = y_dagger(model, n)
    lo = model.support_lo if model.support_lo > -math.inf else _UNBOUNDED_LO
    peak = min(y_star(model, q), yd)
    log_value = _log_integral(model, q, lo, yd, peak)
    return MomentValue(q=float(q), log_value=log_value,
                       method=MomentMethod.TRUNCATED)


def predicted_lnS(model: tm.TailModel, n: float, q: float) -> float:
    """Predicted ensemble behaviour of ln S(n, q) = ln (1/n) sum X_k^q.

    Below qc_exact(n) the sample moment tracks ln E X^q; above it the sum is
    dominated by the maximum and the prediction is the boundary value
    q y_dagger - ln n + ln h'(y_dagger), linear in q.
    """
    if not q > 0.0:
        raise DomainError(f"moment order must be > 0, got {q}")
    curve = critical_curve(model, n)
    if q <= curve.qc_exact:
        return moment_quadrature(model, q).log_value
    yd = curve.y_dagger
    return q * yd - math.log(n) + math.log(tm.h_prime(model, yd))


def q_validity_ceiling(model: tm.TailModel, n: float, eps: float = 0.1) -> float:
    """Order (ln n)^(2 - 1/rho - eps) beyond which the finite-n moment
    asymptotics are no longer guaranteed; reported as a warning threshold."""
    if not n >= 2.0:
        raise ArgumentError(f"n must be >= 2, got {n}")
    return math.log(n) ** (2.0 - 1.0 / model.rho - eps)
