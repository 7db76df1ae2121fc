"""Parametric laws for inter-arrival times, service times and job lengths.

Four families are supported: exponential, Weibull, uniform and
deterministic (a point mass).  Every law is described by an immutable
:class:`DistributionSpec`; the module-level functions evaluate it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy import integrate, special

from .exceptions import DensityUndefinedError

#: Absolute tolerance used for support-boundary comparisons.
SUPPORT_TOL = 1e-9

KINDS = ("exponential", "weibull", "uniform", "deterministic")


@dataclass(frozen=True)
class DistributionSpec:
    """A law from the catalog.

    Only the fields relevant to ``kind`` are set: ``rate`` for exponential,
    ``shape``/``scale`` for weibull, ``low``/``high`` for uniform and
    ``value`` for deterministic.  Use the constructors :func:`exponential`,
    :func:`weibull`, :func:`uniform` and :func:`deterministic`.
    """

    kind: str
    rate: float | None = None
    shape: float | None = None
    scale: float | None = None
    low: float | None = None
    high: float | None = None
    value: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "exponential":
            _require_positive(self.rate, "rate")
        elif self.kind == "weibull":
            _require_positive(self.shape, "shape")
            _require_positive(self.scale, "scale")
        elif self.kind == "uniform":
            if self.low is None or self.high is None:
                raise ValueError("uniform requires low and high")
            if not (0.0 <= self.low < self.high < math.inf):
                raise ValueError(f"uniform requires 0 <= low < high < inf, got ({self.low}, {self.high})")
        else:
            _require_positive(self.value, "value")

    @property
    def support(self) -> tuple[float, float]:
        return support(self)

    @property
    def has_density(self) -> bool:
        return self.kind != "deterministic"

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "exponential":
            return {"kind": "exponential", "rate": self.rate}
        if self.kind == "weibull":
            return {"kind": "weibull", "shape": self.shape, "scale": self.scale}
        if self.kind == "uniform":
            return {"kind": "uniform", "low": self.low, "high": self.high}
        return {"kind": "deterministic", "value": self.value}

    def __str__(self):
        params = ", ".join(f"{k}={v:g}" for k, v in self.to_dict().items() if k != "kind")
        return f"{self.kind}({params})"


def _require_positive(x, name):
    if x is None or not (0.0 < float(x) < math.inf):
        raise ValueError(f"{name} must be a finite positive number, got {x!r}")


def exponential(rate: float | None = None, *, mean: float | None = None) -> DistributionSpec:
    if (rate is None) == (mean is None):
        raise ValueError("give exactly one of rate or mean")
    if mean is not None:
        _require_positive(mean, "mean")
        rate = 1.0 / mean
    return DistributionSpec("exponential", rate=float(rate))


def weibull(shape: float, scale: float) -> DistributionSpec:
    return DistributionSpec("weibull", shape=float(shape), scale=float(scale))


def weibull_with_rate(shape: float, rate: float) -> DistributionSpec:
    """Weibull law of the given shape whose mean is ``1 / rate``."""
    _require_positive(rate, "rate")
    return weibull(shape, 1.0 / (rate * math.gamma(1.0 + 1.0 / shape)))


def uniform(low: float, high: float) -> DistributionSpec:
    return DistributionSpec("uniform", low=float(low), high=float(high))


def deterministic(value: float) -> DistributionSpec:
    return DistributionSpec("deterministic", value=float(value))


def from_dict(literal: Mapping[str, Any]) -> DistributionSpec:
    """Build a spec from a config literal such as ``{"kind": "weibull", "shape": 1.5, "scale": 1.0}``.

    Exponential literals may give ``rate`` or ``mean``; weibull literals may
    give ``rate`` instead of ``scale``.
    """
    if not isinstance(literal, Mapping):
        raise ValueError(f"distribution literal must be a mapping, got {type(literal).__name__}")
    data = dict(literal)
    kind = data.pop("kind", None)
    allowed = {
        "exponential": {"rate", "mean"},
        "weibull": {"shape", "scale", "rate"},
        "uniform": {"low", "high"},
        "deterministic": {"value"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown distribution kind {kind!r}; expected one of {KINDS}")
    unknown = set(data) - allowed[kind]
    if unknown:
        raise ValueError(f"unexpected keys for {kind}: {sorted(unknown)}")
    try:
        if kind == "exponential":
            return exponential(data.get("rate"), mean=data.get("mean"))
        if kind == "weibull":
            if "rate" in data:
                if "scale" in data:
                    raise ValueError("weibull takes scale or rate, not both")
                return weibull_with_rate(data["shape"], data["rate"])
            return weibull(data["shape"], data["scale"])
        if kind == "uniform":
            return uniform(data["low"], data["high"])
        return deterministic(data["value"])
    except KeyError as exc:
        raise ValueError(f"{kind} literal is missing {exc.args[0]!r}") from None


def support(spec: DistributionSpec) -> tuple[float, float]:
    """Support bounds ``(alpha, beta)`` of the law."""
    if spec.kind in ("exponential", "weibull"):
        return (0.0, math.inf)
    if spec.kind == "uniform":
        return (spec.low, spec.high)
    return (spec.value, spec.value)


def in_support(spec: DistributionSpec, x, tol: float = SUPPORT_TOL):
    lo, hi = support(spec)
    x = np.asarray(x, dtype=float)
    out = (x >= lo - tol) & (x <= hi + tol)
    return bool(out) if out.ndim == 0 else out


def mean(spec: DistributionSpec) -> float:
    if spec.kind == "exponential":
        return 1.0 / spec.rate
    if spec.kind == "weibull":
        return spec.scale * math.gamma(1.0 + 1.0 / spec.shape)
    if spec.kind == "uniform":
        return 0.5 * (spec.low + spec.high)
    return spec.value


def variance(spec: DistributionSpec) -> float:
    if spec.kind == "exponential":
        return 1.0 / spec.rate**2
    if spec.kind == "weibull":
        g1 = math.gamma(1.0 + 1.0 / spec.shape)
        g2 = math.gamma(1.0 + 2.0 / spec.shape)
        return spec.scale**2 * (g2 - g1**2)
    if spec.kind == "uniform":
        return (spec.high - spec.low) ** 2 / 12.0
    return 0.0


def rate(spec: DistributionSpec) -> float:
    """Reciprocal mean."""
    return 1.0 / mean(spec)


def scaled(spec: DistributionSpec, factor: float) -> DistributionSpec:
    """Law of ``factor * Z`` for ``Z ~ spec``."""
    _require_positive(factor, "factor")
    if spec.kind == "exponential":
        return exponential(spec.rate / factor)
    if spec.kind == "weibull":
        return weibull(spec.shape, spec.scale * factor)
    if spec.kind == "uniform":
        return uniform(spec.low * factor, spec.high * factor)
    return deterministic(spec.value * factor)


def _scalar_or_array(out, x):
    return float(out) if np.ndim(x) == 0 else out


def pdf(spec: DistributionSpec, x):
    """Density at ``x``; zero outside the support.

    Raises :class:`DensityUndefinedError` for the deterministic kind.
    """
    if spec.kind == "deterministic":
        raise DensityUndefinedError("a point mass has no density; test support membership instead")
    xa = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if spec.kind == "exponential":
            out = np.where(xa >= 0, spec.rate * np.exp(-spec.rate * np.maximum(xa, 0.0)), 0.0)
        elif spec.kind == "weibull":
            w, c = spec.shape, spec.scale
            z = np.maximum(xa, 0.0) / c
            dens = (w / c) * z ** (w - 1.0) * np.exp(-(z**w))
            if w == 1.0:
                dens = np.where(xa >= 0, dens, 0.0)
            else:
                dens = np.where(xa > 0, dens, 0.0)
                if w < 1.0:
                    dens = np.where(xa == 0, np.inf, dens)
            out = dens
        else:
            inside = (xa >= spec.low) & (xa <= spec.high)
            out = np.where(inside, 1.0 / (spec.high - spec.low), 0.0)
    return _scalar_or_array(out, x)


def logpdf(spec: DistributionSpec, x):
    """Log density; ``-inf`` outside the support."""
    if spec.kind == "deterministic":
        raise DensityUndefinedError("a point mass has no density; test support membership instead")
    xa = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.kind == "exponential":
            out = np.where(xa >= 0, math.log(spec.rate) - spec.rate * xa, -np.inf)
        elif spec.kind == "weibull":
            w, c = spec.shape, spec.scale
            z = np.where(xa > 0, xa, 1.0) / c
            val = math.log(w / c) + (w - 1.0) * np.log(z) - z**w
            out = np.where(xa > 0, val, -np.inf)
            if w == 1.0:
                out = np.where(xa == 0, math.log(1.0 / c), out)
            elif w < 1.0:
                out = np.where(xa == 0, np.inf, out)
        else:
            inside = (xa >= spec.low) & (xa <= spec.high)
            out = np.where(inside, -math.log(spec.high - spec.low), -np.inf)
    return _scalar_or_array(out, x)


def ccdf(spec: DistributionSpec, x):
    """Complementary cdf ``P(Z > x)``."""
    xa = np.asarray(x, dtype=float)
    if spec.kind == "exponential":
        out = np.where(xa < 0, 1.0, np.exp(-spec.rate * np.maximum(xa, 0.0)))
    elif spec.kind == "weibull":
        out = np.where(xa < 0, 1.0, np.exp(-((np.maximum(xa, 0.0) / spec.scale) ** spec.shape)))
    elif spec.kind == "uniform":
        out = np.clip((spec.high - xa) / (spec.high - spec.low), 0.0, 1.0)
    else:
        out = np.where(xa < spec.value, 1.0, 0.0)
    return _scalar_or_array(out, x)


def ppf(spec: DistributionSpec, u):
    """Quantile function (inverse cdf) for ``u`` in [0, 1]."""
    ua = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        if spec.kind == "exponential":
            out = -np.log1p(-ua) / spec.rate
        elif spec.kind == "weibull":
            out = spec.scale * (-np.log1p(-ua)) ** (1.0 / spec.shape)
        elif spec.kind == "uniform":
            out = spec.low + ua * (spec.high - spec.low)
        else:
            out = np.full_like(ua, spec.value)
    return _scalar_or_array(out, u)


def sample(spec: DistributionSpec, rng: np.random.Generator, size=None):
    """Draw from the law; ``size=None`` gives a single float."""
    if spec.kind == "exponential":
        return rng.exponential(1.0 / spec.rate, size)
    if spec.kind == "weibull":
        # inversion keeps the stream one-uniform-per-draw
        u = rng.random(size)
        return spec.scale * (-np.log1p(-u)) ** (1.0 / spec.shape)
    if spec.kind == "uniform":
        return rng.uniform(spec.low, spec.high, size)
    if size is None:
        return spec.value
    return np.full(size, spec.value)


def stop_loss(spec: DistributionSpec, t: float) -> float:
    """Stop-loss transform ``E[(Z - t)^+]``."""
    t = float(t)
    lo, hi = support(spec)
    if t <= lo:
        return mean(spec) - t
    if t >= hi:
        return 0.0
    if spec.kind == "exponential":
        return math.exp(-spec.rate * t) / spec.rate
    if spec.kind == "uniform":
        return (hi - t) ** 2 / (2.0 * (hi - lo))
    if spec.kind == "weibull":
        # E[(Z-t)^+] = c * Gamma(1+1/w, (t/c)^w) - t * exp(-(t/c)^w)
        w, c = spec.shape, spec.scale
        s = (t / c) ** w
        upper = special.gammaincc(1.0 + 1.0 / w, s) * math.gamma(1.0 + 1.0 / w)
        return c * upper - t * math.exp(-s)
    return 0.0  # deterministic with lo < t < hi is impossible


def expect(spec: DistributionSpec, func) -> float:
    """``E[func(Z)]`` by quadrature over the quantile scale."""
    if spec.kind == "deterministic":
        return float(func(spec.value))
    val, _ = integrate.quad(lambda u: func(ppf(spec, u)), 0.0, 1.0, limit=400, epsabs=1e-12, epsrel=1e-10)
    return float(val)


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``, stable across execution orders."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))
