"""Log-exponential-power-law distribution families.

A positive random variable X = exp(Y) belongs to the class handled here when
the tail of Y satisfies 1 - F_Y(y) = exp(-h(y)) with h eventually of the form
L(y) * y**rho for a slowly varying L and rho > 1.  Everything downstream
(critical orders, moment asymptotics, estimators) is expressed through h and
its first two derivatives, so each family exposes:

    h(y)        = -ln(1 - F_Y(y))          (cumulative hazard of Y)
    h'(y)       = p_Y(y) / (1 - F_Y(y))    (hazard rate, > 0)
    h''(y)      = h'(y) * (h'(y) + (ln p_Y)'(y))
    rho_local   = y h'(y) / h(y)           (-> rho as y -> +inf)

Three concrete families are provided:

* ``logweibull``: F(y) = 1 - exp(-y**rho) on y >= 0, so h(y) = y**rho exactly.
* ``slep`` (strict log-exponential-power): density exp(-|y|**rho) / (2*Gamma(1+1/rho))
  on the whole line; tail functions go through the regularized upper incomplete
  gamma Q(1/rho, |y|**rho).
* ``lognormal``: Y standard normal (rho is fixed at 2).

All functions are vectorized over ``y``/``p`` and pure; models are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special as sp

from .errors import ArgumentError, DataFormatError, DomainError

__all__ = [
    "Family",
    "TailModel",
    "Sample",
    "log_weibull",
    "strict_log_exp_power",
    "log_normal",
    "parse_model",
    "format_model",
    "h",
    "h_prime",
    "h_second",
    "rho_local",
    "cdf",
    "sf",
    "quantile",
    "log_pdf",
    "sample_iid",
    "write_sample",
    "read_sample",
]

# x = |y|**rho beyond which Q(1/rho, x) is evaluated through its asymptotic
# log-series instead of gammaincc (which underflows near x ~ 700).
_LNQ_SWITCH = 600.0

# uniform draws are clamped away from 0 so quantile() stays in its open domain;
# P(u < 2^-55) is ~0 and the clamp never moves a representable nonzero draw.
_U_FLOOR = 2.0 ** -55


class Family(str, Enum):
    LOG_WEIBULL = "logweibull"
    STRICT_LOG_EXP_POWER = "slep"
    LOG_NORMAL = "lognormal"


@dataclass(frozen=True)
class TailModel:
    """An immutable distribution family tag plus its tail exponent."""

    family: Family
    rho: float
    support_lo: float

    def __post_init__(self) -> None:
        if not self.rho > 1.0:
            raise ArgumentError(f"rho must be > 1, got {self.rho}")
        if self.family is Family.LOG_NORMAL and self.rho != 2.0:
            raise ArgumentError("lognormal has rho fixed at 2")
        expected_lo = 0.0 if self.family is Family.LOG_WEIBULL else -math.inf
        if self.support_lo != expected_lo:
            raise ArgumentError(
                f"support_lo for {self.family.value} must be {expected_lo}"
            )


@dataclass(frozen=True)
class Sample:
    """Realizations of Y with their provenance seed."""

    values: np.ndarray
    n: int
    seed: int

    def __post_init__(self) -> None:
        if self.n < 1 or len(self.values) != self.n:
            raise ArgumentError("values length must equal n >= 1")


def log_weibull(rho: float) -> TailModel:
    """F(y) = 1 - exp(-y**rho) on y >= 0."""
    return TailModel(Family.LOG_WEIBULL, float(rho), 0.0)


def strict_log_exp_power(rho: float) -> TailModel:
    """Symmetric density exp(-|y|**rho) / (2 Gamma(1 + 1/rho)) on the line."""
    return TailModel(Family.STRICT_LOG_EXP_POWER, float(rho), -math.inf)


def log_normal() -> TailModel:
    """Y standard normal (X = e^Y log-normal); rho = 2."""
    return TailModel(Family.LOG_NORMAL, 2.0, -math.inf)


def parse_model(spec: str) -> TailModel:
    """Build a model from a spec string: ``logweibull:rho=2.0``, ``slep:rho=1.5``,
    ``lognormal``."""
    name, _, rest = spec.strip().partition(":")
    name = name.strip().lower()
    params: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ArgumentError(f"malformed model parameter {item!r} in {spec!r}")
            try:
                params[key.strip()] = float(val)
            except ValueError:
                raise ArgumentError(f"non-numeric value in model spec {spec!r}") from None
    unknown = set(params) - {"rho"}
    if unknown:
        raise ArgumentError(f"unknown model parameters {sorted(unknown)} in {spec!r}")
    if name == "logweibull":
        return log_weibull(params.get("rho", 2.0))
    if name == "slep":
        return strict_log_exp_power(params.get("rho", 2.0))
    if name == "lognormal":
        if "rho" in params and params["rho"] != 2.0:
            raise ArgumentError("lognormal does not accept rho")
        return log_normal()
    raise ArgumentError(f"unknown model family {name!r}")


def format_model(model: TailModel) -> str:
    if model.family is Family.LOG_NORMAL:
        return "lognormal"
    return f"{model.family.value}:rho={model.rho:g}"


# ---------------------------------------------------------------------------
# internal: asymptotic log of the regularized upper incomplete gamma
# ---------------------------------------------------------------------------

def _tail_series_frac(a: float, x: np.ndarray) -> np.ndarray:
    # sum_{k=1..8} prod_{j<=k}(a-j) / x^k; the asymptotic bracket is 1 + this
    u = np.zeros_like(x)
    term = np.ones_like(x)
    for j in range(1, 9):
        term = term * (a - j) / x
        u = u + term
    return u


def _ln_q_asymptotic(a: float, x: np.ndarray) -> np.ndarray:
    # Q(a, x) ~ x^{a-1} e^{-x} / Gamma(a) * (1 + sum_k prod_{j<=k}(a-j)/x^k)
    return (-x + (a - 1.0) * np.log(x) - math.lgamma(a)
            + np.log1p(_tail_series_frac(a, x)))


def _ln_q(a: float, x: np.ndarray) -> np.ndarray:
    """log Q(a, x) for x >= 0, stable far beyond the underflow point of Q."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < _LNQ_SWITCH
    if small.any():
        out[small] = np.log(sp.gammaincc(a, x[small]))
    if (~small).any():
        out[~small] = _ln_q_asymptotic(a, x[~small])
    return out


def _dispatch(model: TailModel):
    return _IMPLS[model.family]


def _wrap(y, out):
    # scalar in -> scalar out
    if np.ndim(y) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# per-family kernels (take float arrays, return float arrays)
# ---------------------------------------------------------------------------

class _LogWeibull:
    @staticmethod
    def h(m, y):
        if np.any(y < 0.0):
            raise DomainError("logweibull h requires y >= 0")
        return y ** m.rho

    @staticmethod
    def h_prime(m, y):
        if np.any(y <= 0.0):
            raise DomainError("logweibull derivatives require y > 0")
        return m.rho * y ** (m.rho - 1.0)

    @staticmethod
    def h_second(m, y):
        if np.any(y <= 0.0):
            raise DomainError("logweibull derivatives require y > 0")
        return m.rho * (m.rho - 1.0) * y ** (m.rho - 2.0)

    @staticmethod
    def cdf(m, y):
        return np.where(y > 0.0, -np.expm1(-np.maximum(y, 0.0) ** m.rho), 0.0)

    @staticmethod
    def sf(m, y):
        return np.where(y > 0.0, np.exp(-np.maximum(y, 0.0) ** m.rho), 1.0)

    @staticmethod
    def quantile(m, p):
        return (-np.log1p(-p)) ** (1.0 / m.rho)

    @staticmethod
    def log_pdf(m, y):
        if np.any(y <= 0.0):
            raise DomainError("logweibull density is supported on y > 0")
        return math.log(m.rho) + (m.rho - 1.0) * np.log(y) - y ** m.rho


class _Slep:
    # F(y >= 0) = 1 - Q(1/rho, y^rho)/2 ; F(y < 0) = Q(1/rho, |y|^rho)/2

    @staticmethod
    def h(m, y):
        a = 1.0 / m.rho
        x = np.abs(y) ** m.rho
        out = np.empty_like(y)
        pos = y >= 0.0
        if pos.any():
            out[pos] = math.log(2.0) - _ln_q(a, x[pos])
        if (~pos).any():
            out[~pos] = -np.log1p(-0.5 * sp.gammaincc(a, x[~pos]))
        return out

    @staticmethod
    def h_prime(m, y):
        # h' = p/(1-F) = exp(ln p + h), evaluated in log space so the huge h
        # and the huge -|y|^rho cancel before exponentiation; past the series
        # switch the direct form rho y^{rho-1}/(1+U) sidesteps the O(x eps)
        # rounding that the log-space subtraction leaves behind
        ln_norm = math.log(2.0) + math.lgamma(1.0 + 1.0 / m.rho)
        x = np.abs(y) ** m.rho
        out = np.exp(_Slep.h(m, y) - x - ln_norm)
        far = (y > 0.0) & (x >= _LNQ_SWITCH)
        if np.any(far):
            u = _tail_series_frac(1.0 / m.rho, np.maximum(x, _LNQ_SWITCH))
            direct = m.rho * np.maximum(y, 1.0) ** (m.rho - 1.0) / (1.0 + u)
            out = np.where(far, direct, out)
        return out

    @staticmethod
    def h_second(m, y):
        hp = _Slep.h_prime(m, y)
        dlnp = -m.rho * np.sign(y) * np.abs(y) ** (m.rho - 1.0)
        out = hp * (hp + dlnp)
        x = np.abs(y) ** m.rho
        far = (y > 0.0) & (x >= _LNQ_SWITCH)
        if np.any(far):
            # the difference h' + (ln p)' = -U/(1+U) * rho y^{rho-1} exactly
            # on the series branch; forming it directly keeps full precision
            u = _tail_series_frac(1.0 / m.rho, np.maximum(x, _LNQ_SWITCH))
            out = np.where(far, hp * (-dlnp) * (-u / (1.0 + u)), out)
        return out

    @staticmethod
    def cdf(m, y):
        a = 1.0 / m.rho
        q = sp.gammaincc(a, np.abs(y) ** m.rho)
        return np.where(y >= 0.0, 1.0 - 0.5 * q, 0.5 * q)

    @staticmethod
    def sf(m, y):
        a = 1.0 / m.rho
        q = sp.gammaincc(a, np.abs(y) ** m.rho)
        return np.where(y >= 0.0, 0.5 * q, 1.0 - 0.5 * q)

    @staticmethod
    def quantile(m, p):
        a = 1.0 / m.rho
        upper = p >= 0.5
        tail = np.where(upper, 2.0 * (1.0 - p), 2.0 * p)
        mag = sp.gammainccinv(a, tail) ** (1.0 / m.rho)
        return np.where(upper, mag, -mag)

    @staticmethod
    def log_pdf(m, y):
        return -np.abs(y) ** m.rho - math.log(2.0) - math.lgamma(1.0 + 1.0 / m.rho)


_SQRT2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_ERFCX_SWITCH = 8.0


class _LogNormal:
    @staticmethod
    def h(m, y):
        out = np.empty_like(y)
        big = y >= _ERFCX_SWITCH
        if big.any():
            yb = y[big]
            out[big] = math.log(2.0) + 0.5 * yb * yb - np.log(sp.erfcx(yb / _SQRT2))
        if (~big).any():
            out[~big] = math.log(2.0) - np.log(sp.erfc(y[~big] / _SQRT2))
        return out

    @staticmethod
    def h_prime(m, y):
        out = np.empty_like(y)
        pos = y >= 0.0
        if pos.any():
            out[pos] = _SQRT_2_OVER_PI / sp.erfcx(y[pos] / _SQRT2)
        if (~pos).any():
            yn = y[~pos]
            pdf = np.exp(-0.5 * yn * yn) / math.sqrt(2.0 * math.pi)
            out[~pos] = pdf / (0.5 * sp.erfc(yn / _SQRT2))
        return out

    @staticmethod
    def h_second(m, y):
        hp = _LogNormal.h_prime(m, y)
        return hp * (hp - y)

    @staticmethod
    def cdf(m, y):
        return sp.ndtr(y)

    @staticmethod
    def sf(m, y):
        return sp.ndtr(-y)

    @staticmethod
    def quantile(m, p):
        return sp.ndtri(p)

    @staticmethod
    def log_pdf(m, y):
        return -0.5 * y * y - 0.5 * math.log(2.0 * math.pi)


_IMPLS = {
    Family.LOG_WEIBULL: _LogWeibull,
    Family.STRICT_LOG_EXP_POWER: _Slep,
    Family.LOG_NORMAL: _LogNormal,
}


# ---------------------------------------------------------------------------
# public tail functionals
# ---------------------------------------------------------------------------

def h(model: TailModel, y):
    """Cumulative hazard -ln(1 - F_Y(y)); strictly increasing on the support."""
    yv = np.asarray(y, dtype=float)
    return _wrap(y, _dispatch(model).h(model, yv))


def h_prime(model: TailModel, y):
    """Hazard rate h'(y) > 0."""
    yv = np.asarray(y, dtype=float)
    return _wrap(y, _dispatch(model).h_prime(model, yv))


def h_second(model: TailModel, y):
    yv = np.asarray(y, dtype=float)
    return _wrap(y, _dispatch(model).h_second(model, yv))


def rho_local(model: TailModel, y):
    """Local power exponent y h'(y) / h(y); constant == rho for logweibull."""
    yv = np.asarray(y, dtype=float)
    hv = _dispatch(model).h(model, yv)
    if np.any(hv <= 0.0):
        raise DomainError("rho_local requires h(y) > 0")
    if model.family is Family.LOG_WEIBULL:
        out = np.full_like(yv, model.rho)  # y h'/h == rho identically
    else:
        out = yv * _dispatch(model).h_prime(model, yv) / hv
    return _wrap(y, out)


def cdf(model: TailModel, y):
    yv = np.asarray(y, dtype=float)
    return _wrap(y, _dispatch(model).cdf(model, yv))


def sf(model: TailModel, y):
    """Survival function 1 - F_Y(y) = exp(-h(y))."""
    yv = np.asarray(y, dtype=float)
    return _wrap(y, _dispatch(model).sf(model, yv))


def quantile(model: TailModel, p):
    """Inverse CDF on 0 < p < 1."""
    pv = np.asarray(p, dtype=float)
    if np.any(pv <= 0.0) or np.any(pv >= 1.0):
        raise DomainError("quantile requires 0 < p < 1")
    return _wrap(p, _dispatch(model).quantile(model, pv))


def log_pdf(model: TailModel, y):
    """ln p_Y(y); p_Y = h' e^{-h}."""
    yv = np.asarray(y, dtype=float)
    return _wrap(y, _dispatch(model).log_pdf(model, yv))


def sample_iid(model: TailModel, n: int, seed: int) -> Sample:
    """Inverse-CDF sampling on a counter-based (Philox) uniform stream.

    Deterministic given ``seed``; value i is quantile(u_i) for the i-th
    uniform of the stream, so runs are reproducible across platforms and
    independent streams can be keyed per replication.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = np.maximum(rng.random(n), _U_FLOOR)
    values = quantile(model, u)
    return Sample(values=np.asarray(values, dtype=float), n=int(n), seed=int(seed))


# ---------------------------------------------------------------------------
# sample file format: '# seed=..., model=...' header + one value per line
# ---------------------------------------------------------------------------

def write_sample(stream, sample: Sample, model: TailModel | None = None,
                 extra_header: dict | None = None) -> None:
    fields = [f"seed={sample.seed}"]
    fields.append(f"model={format_model(model) if model is not None else 'unknown'}")
    for key, val in (extra_header or {}).items():
        fields.append(f"{key}={val}")
    stream.write("# " + ", ".join(fields) + "\n")
    for v in sample.values:
        stream.write(f"{v:.17g}\n")


def read_sample(stream) -> tuple[np.ndarray, dict]:
    """Parse a sample file; returns (values, header metadata).

    Raw files without a header are accepted (empty metadata).  Raises
    DataFormatError on any non-numeric data line.
    """
    meta: dict[str, str] = {}
    values: list[float] = []
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            for item in text.lstrip("#").split(","):
                key, eq, val = item.partition("=")
                if eq:
                    meta[key.strip()] = val.strip()
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise DataFormatError(f"line {lineno}: not a number: {text!r}") from None
    if not values:
        raise DataFormatError("no data values in sample file")
    return np.asarray(values, dtype=float), meta
