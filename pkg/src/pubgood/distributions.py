"""Value distributions and single-item auction quantities.

Every pricing rule in the package consumes a :class:`ValueDistribution`:
its CDF and density, the minimal-preimage quantile, the virtual value
``phi(x) = x - (1 - F(x)) / f(x)``, the Myerson reserve, the revenue curve
``R(q) = q * F^{-1}(1 - q)`` and the n-bidder Myerson revenue.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "DistributionError",
    "QuantilePoint",
    "ValueDistribution",
    "uniform",
    "exponential",
    "tabulated",
    "load_table",
    "parse_distribution",
    "evaluate",
    "quantile",
    "virtual_value",
    "myerson_reserve",
    "revenue_curve",
    "check_regularity",
    "myerson_revenue_n",
    "prophet_price",
]

# Upper quantile used as the effective end of an unbounded support.
TAIL_QUANTILE = 1.0 - 1e-12

_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 400


class DistributionError(ValueError):
    """Raised for invalid distributions or out-of-domain queries."""


@dataclass(frozen=True)
class ValueDistribution:
    """An atomless value distribution with CDF ``F`` and density ``f``.

    Instances are immutable; build them with :func:`uniform`,
    :func:`exponential` or :func:`tabulated`.
    """

    kind: str
    params: tuple[float, ...]
    support_lo: float
    support_hi: float
    name: str = ""
    # Tabulated grid, stored as read-only arrays.
    grid_x: np.ndarray | None = field(default=None, repr=False, compare=False)
    grid_f: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.support_hi)

    @property
    def effective_hi(self) -> float:
        """Finite right end used for quadrature and grids."""
        if self.bounded:
            return self.support_hi
        return self.ppf(TAIL_QUANTILE)

    def cdf(self, x):
        """Vectorized CDF, clamped to [0, 1] outside the support."""
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            lo, hi = self.params
            out = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        elif self.kind == "exponential":
            (rate,) = self.params
            out = np.where(x > 0, -np.expm1(-rate * np.maximum(x, 0.0)), 0.0)
        else:
            out = np.interp(x, self.grid_x, self.grid_f, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    def pdf(self, x):
        """Vectorized density; zero outside the support.

        For tabulated distributions the density is the slope of the
        segment containing ``x`` (right-continuous at knots).
        """
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            lo, hi = self.params
            out = np.where((x >= lo) & (x <= hi), 1.0 / (hi - lo), 0.0)
        elif self.kind == "exponential":
            (rate,) = self.params
            out = np.where(x >= 0, rate * np.exp(-rate * np.maximum(x, 0.0)), 0.0)
        else:
            gx, gf = self.grid_x, self.grid_f
            slopes = np.diff(gf) / np.diff(gx)
            idx = np.searchsorted(gx, x, side="right") - 1
            inside = (idx >= 0) & (idx < len(slopes))
            # The right end point belongs to the last segment.
            at_end = x == gx[-1]
            idx = np.where(at_end, len(slopes) - 1, idx)
            inside = inside | at_end
            out = np.where(inside, slopes[np.clip(idx, 0, len(slopes) - 1)], 0.0)
        return out if out.ndim else float(out)

    def ppf(self, q):
        """Vectorized minimal-preimage quantile ``min{x : F(x) = q}``.

        This is the closed-form inverse used for sampling; the scalar
        :func:`quantile` of a tabulated distribution uses bisection instead.
        """
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)) or np.any(np.isnan(q)):
            raise DistributionError(f"quantile level outside [0, 1]: {q}")
        if self.kind == "uniform":
            lo, hi = self.params
            out = lo + q * (hi - lo)
        elif self.kind == "exponential":
            (rate,) = self.params
            with np.errstate(divide="ignore"):
                out = -np.log1p(-q) / rate
        else:
            gx, gf = self.grid_x, self.grid_f
            # First knot with F >= q, then interpolate back inside its segment.
            k = np.clip(np.searchsorted(gf, q, side="left"), 1, len(gf) - 1)
            f0, f1 = gf[k - 1], gf[k]
            x0, x1 = gx[k - 1], gx[k]
            with np.errstate(invalid="ignore", divide="ignore"):
                t = np.where(f1 > f0, (q - f0) / (f1 - f0), 0.0)
            out = np.where(q <= gf[0], gx[0], x0 + t * (x1 - x0))
        return out if out.ndim else float(out)

    def __str__(self) -> str:
        return self.name or self.kind


class QuantilePoint(NamedTuple):
    """A point on the revenue curve: sale probability, price and revenue."""

    q: float
    value: float
    revenue: float


def uniform(lo: float = 0.0, hi: float = 1.0) -> ValueDistribution:
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise DistributionError(f"uniform needs finite lo < hi, got ({lo}, {hi})")
    return ValueDistribution("uniform", (float(lo), float(hi)), float(lo), float(hi),
                             name=f"uniform({lo:g},{hi:g})")


def exponential(rate: float = 1.0) -> ValueDistribution:
    if not (math.isfinite(rate) and rate > 0):
        raise DistributionError(f"exponential needs a positive rate, got {rate}")
    return ValueDistribution("exponential", (float(rate),), 0.0, math.inf,
                             name=f"exponential({rate:g})")


def tabulated(values: Sequence[float], cdf: Sequence[float],
              name: str = "tabulated") -> ValueDistribution:
    """Piecewise-linear CDF through the points ``(values[k], cdf[k])``.

    The grid must start at CDF 0, end at CDF 1, have strictly increasing
    values and a nondecreasing CDF.
    """
    x = np.array(values, dtype=float)
    f = np.array(cdf, dtype=float)
    if x.ndim != 1 or x.shape != f.shape or len(x) < 2:
        raise DistributionError("tabulated grid needs at least two (value, cdf) pairs")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(f)):
        raise DistributionError("tabulated grid contains non-finite entries")
    if np.any(np.diff(x) <= 0):
        raise DistributionError("tabulated values must be strictly increasing")
    if np.any(np.diff(f) < 0):
        raise DistributionError("tabulated CDF must be nondecreasing")
    if abs(f[0]) > 1e-12 or abs(f[-1] - 1.0) > 1e-12:
        raise DistributionError("tabulated CDF must run from 0 to 1")
    f[0], f[-1] = 0.0, 1.0
    x.setflags(write=False)
    f.setflags(write=False)
    return ValueDistribution("tabulated", (), float(x[0]), float(x[-1]), name=name,
                             grid_x=x, grid_f=f)


def load_table(path: str | Path) -> ValueDistribution:
    """Read a ``value,cdf`` CSV (header line optional)."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if lineno == 1 and not rows:
                    continue  # header
                raise DistributionError(f"{path}:{lineno}: expected 'value,cdf', got {row!r}")
    if not rows:
        raise DistributionError(f"{path}: no data rows")
    xs, fs = zip(*rows)
    return tabulated(xs, fs, name=f"table:{path.name}")


def parse_distribution(text: str) -> ValueDistribution:
    """Parse ``uniform:lo,hi``, ``exp:rate`` or ``table:path``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "uniform":
            lo, hi = (float(v) for v in arg.split(",")) if arg else (0.0, 1.0)
            return uniform(lo, hi)
        if kind in ("exp", "exponential"):
            return exponential(float(arg) if arg else 1.0)
    except ValueError as exc:
        raise DistributionError(f"bad distribution spec {text!r}: {exc}") from None
    if kind == "table":
        return load_table(arg)
    raise DistributionError(f"unknown distribution {text!r}; "
                            "use uniform:lo,hi | exp:rate | table:path")


def evaluate(dist: ValueDistribution, x: float) -> dict[str, float]:
    if not math.isfinite(x):
        raise DistributionError(f"evaluate needs a finite point, got {x}")
    return {"cdf": float(dist.cdf(x)), "pdf": float(dist.pdf(x))}


def _bisect(fn, lo: float, hi: float, tol: float = _BISECT_TOL) -> float:
    """Smallest point in [lo, hi] where the monotone predicate ``fn`` holds."""
    for _ in range(_BISECT_MAX_ITER):
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if fn(mid):
            hi = mid
        else:
            lo = mid
    return hi


def quantile(dist: ValueDistribution, q: float) -> float:
    """Minimal preimage ``min{p : F(p) = q}``."""
    if not 0.0 <= q <= 1.0:
        raise DistributionError(f"quantile level outside [0, 1]: {q}")
    if dist.kind != "tabulated":
        return float(dist.ppf(q))
    if q <= 0.0:
        return dist.support_lo
    return _bisect(lambda x: dist.cdf(x) >= q, dist.support_lo, dist.support_hi)


def virtual_value(dist: ValueDistribution, x: float) -> float:
    f = dist.pdf(x)
    if not f > 0:
        raise DistributionError(f"virtual value undefined at x={x}: density is zero")
    return float(x - (1.0 - dist.cdf(x)) / f)


def myerson_reserve(dist: ValueDistribution) -> float:
    """Root of the virtual value, ``r = phi^{-1}(0)``."""
    if dist.kind == "uniform":
        return dist.params[1] / 2.0 if dist.params[0] <= dist.params[1] / 2.0 else dist.params[0]
    if dist.kind == "exponential":
        return 1.0 / dist.params[0]
    lo, hi = dist.support_lo, dist.support_hi

    def phi_nonneg(x):
        f = dist.pdf(x)
        return f <= 0 or x - (1.0 - dist.cdf(x)) / f >= 0

    if not phi_nonneg(np.nextafter(hi, lo)):
        raise DistributionError("no reserve in support: virtual value never reaches 0")
    if phi_nonneg(lo):
        return lo
    return _bisect(phi_nonneg, lo, hi)


def revenue_curve(dist: ValueDistribution, q: float) -> QuantilePoint:
    if not 0.0 <= q <= 1.0:
        raise DistributionError(f"sale probability outside [0, 1]: {q}")
    if q == 0.0:
        return QuantilePoint(0.0, dist.support_hi, 0.0)
    value = quantile(dist, 1.0 - q)
    return QuantilePoint(q, value, q * value)


def check_regularity(dist: ValueDistribution, grid_size: int = 2001) -> dict:
    """Test whether ``phi`` is nondecreasing on an equally spaced quantile grid.

    Also reports whether the revenue curve is concave on the same grid.
    Grid points where the density vanishes are skipped.
    """
    if grid_size < 2:
        raise DistributionError("grid_size must be at least 2")
    u = np.arange(1, grid_size + 1) / (grid_size + 1)
    x = dist.ppf(u)
    f = dist.pdf(x)
    keep = f > 0
    phi = x[keep] - (1.0 - dist.cdf(x[keep])) / f[keep]
    drops = -np.diff(phi)
    worst = float(max(drops.max(initial=0.0), 0.0))
    q = 1.0 - u[::-1]
    revenue = q * dist.ppf(1.0 - q)
    second = np.diff(revenue, 2)
    concave_worst = float(max(second.max(initial=0.0), 0.0))
    return {
        "regular": worst <= 1e-9,
        "worst_violation": worst,
        "revenue_concave": concave_worst <= 1e-6,
        "concavity_violation": concave_worst,
    }


def _require_regular(dist: ValueDistribution) -> None:
    if dist.kind in ("uniform", "exponential"):
        return
    if not check_regularity(dist)["regular"]:
        raise DistributionError(f"{dist} is not regular")


def myerson_revenue_n(dist: ValueDistribution, n: int) -> dict[str, float]:
    """Optimal single-item revenue from ``n`` i.i.d. bidders.

    Returns ``revenue = E[phi(max v)^+]`` and the union bound
    ``bound = n * r * (1 - F(r))``.
    """
    if n < 1:
        raise DistributionError("need at least one bidder")
    _require_regular(dist)
    r = myerson_reserve(dist)
    hi = dist.effective_hi
    single = r * (1.0 - float(dist.cdf(r)))

    def integrand(v):
        f = dist.pdf(v)
        big_f = dist.cdf(v)
        # phi(v) * f(v) = v f(v) - (1 - F(v)), which stays finite where f -> 0.
        return (v * f - (1.0 - big_f)) * n * big_f ** (n - 1)

    points = []
    if dist.kind == "tabulated":
        points = [x for x in dist.grid_x if r < x < hi]
    elif n > 1:
        # Mass of the max order statistic sits near F^{-1}(1 - 1/n).
        points = [x for x in dist.ppf([1 - 1 / n, 1 - 0.1 / n, 1 - 1e-3 / n])
                  if r < x < hi]
    value, _ = integrate.quad(integrand, r, hi, points=points or None, limit=500,
                              epsabs=1e-13, epsrel=1e-10)
    return {"revenue": float(value), "bound": n * single}


def _sequential_revenue(dist: ValueDistribution, t: float, n: int) -> float:
    # sum_{i=1}^n t (1 - F) F^{i-1} telescopes to t (1 - F^n).
    return t * (1.0 - float(dist.cdf(t)) ** n)


def prophet_price(dist: ValueDistribution, n: int) -> dict[str, float]:
    """Uniform sequential posted price maximizing ``T (1 - F(T)^n)``.

    Raises if the optimized sequential revenue falls short of half the
    n-bidder Myerson revenue, which would indicate a numerical bug.
    """
    if n < 1:
        raise DistributionError("need at least one bidder")
    u = np.linspace(0.0, 1.0, 2049)[:-1]
    u = np.append(u, TAIL_QUANTILE)
    grid = dist.ppf(u)
    values = grid * (1.0 - dist.cdf(grid) ** n)
    k = int(np.argmax(values))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda t: -_sequential_revenue(dist, t, n),
                                   bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-12, "maxiter": 500})
    price, revenue = float(res.x), -float(res.fun)
    if revenue < values[k]:
        price, revenue = float(grid[k]), float(values[k])
    myerson = myerson_revenue_n(dist, n)["revenue"]
    if revenue < 0.5 * myerson - 1e-9:
        raise ArithmeticError(
            f"prophet price revenue {revenue} below half of Myerson revenue {myerson}")
    return {"price": price, "seq_revenue": revenue, "myerson_revenue": myerson}
