"""Synthetic meta-order panels and impact-model calibration.

The generator mimics an execution tape: TWAP parent orders, log-uniform
sizes across three decades of participation, durations under a day, child
fills carrying the true impact increment plus market noise at the ambient
volatility.  Orders are independent; each starts from a relaxed state
J = 0.

Two estimators work on such panels:

  grid_fit     for each candidate (c_hat, tau_hat), rebuild the impact
               state along every order, regress fill price changes on the
               unit-prefactor impact increments through the origin, and
               store the fitted prefactor g and the pooled R^2.
  fit_loglog   the classic square-root-law picture: bin orders by size,
               regress log mean signed return on log size; the slope
               estimates the concavity exponent directly.

R^2 is sharply peaked along the concavity axis and nearly flat along the
decay axis, which is why statistical fit quality alone is a poor guide to
the P&L cost of misspecification.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import AfsParams

__all__ = [
    "MetaOrder",
    "CalibGrid",
    "LogLogFit",
    "BootstrapC",
    "synth_metaorders",
    "grid_fit",
    "fit_loglog",
    "bootstrap_c",
    "orders_to_csv",
    "orders_from_csv",
]


@dataclass(frozen=True)
class MetaOrder:
    """One parent order and its child fills.

    fills is an (m, 4) array with columns (t, dt, dQ, dP): fill-interval
    start (absolute, days), interval length, signed shares, and the price
    change over the interval in price units.
    """

    order_id: int
    start: float
    duration: float
    signed_frac: float
    fills: np.ndarray

    def __post_init__(self) -> None:
        if self.duration <= 0.0 or not np.isfinite(self.duration):
            raise ValueError(f"order {self.order_id}: bad duration {self.duration}")
        f = np.asarray(self.fills, dtype=float)
        if f.ndim != 2 or f.shape[1] != 4 or f.shape[0] < 1:
            raise ValueError(f"order {self.order_id}: fills must be (m, 4), got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError(f"order {self.order_id}: non-finite fill entries")
        if np.any(f[:, 1] <= 0.0):
            raise ValueError(f"order {self.order_id}: non-positive fill interval")


@dataclass(frozen=True)
class CalibGrid:
    """Fit surface over the (c, tau) lattice: r2[i, j] at c_values[i], tau_values[j].

    Cells with a degenerate regressor hold NaN in both r2 and g.
    """

    c_values: np.ndarray
    tau_values: np.ndarray
    r2: np.ndarray
    g: np.ndarray

    def argmax_cell(self) -> tuple[float, float]:
        """(c, tau) of the R^2-maximizing lattice cell."""
        flat = np.where(np.isnan(self.r2), -np.inf, self.r2)
        i, j = np.unravel_index(np.argmax(flat), flat.shape)
        return float(self.c_values[i]), float(self.tau_values[j])

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("c,tau,r2,g\n")
            for i, c in enumerate(self.c_values):
                for j, tau in enumerate(self.tau_values):
                    fh.write(f"{c:.12g},{tau:.12g},{self.r2[i, j]:.12g},{self.g[i, j]:.12g}\n")

    @classmethod
    def from_csv(cls, path: str) -> "CalibGrid":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [(float(r["c"]), float(r["tau"]), float(r["r2"]), float(r["g"])) for r in reader]
        cs = np.unique([r[0] for r in rows])
        taus = np.unique([r[1] for r in rows])
        r2 = np.full((len(cs), len(taus)), np.nan)
        g = np.full((len(cs), len(taus)), np.nan)
        for c, tau, r2v, gv in rows:
            i = int(np.argmin(np.abs(cs - c)))
            j = int(np.argmin(np.abs(taus - tau)))
            r2[i, j], g[i, j] = r2v, gv
        return cls(c_values=cs, tau_values=taus, r2=r2, g=g)


def synth_metaorders(
    params: AfsParams,
    n_orders: int,
    seed: int,
    *,
    size_bounds: tuple[float, float] = (1e-4, 1e-1),
    duration_bounds: tuple[float, float] = (0.05, 0.75),
    fills_bounds: tuple[int, int] = (3, 50),
    noise_vol: float = 1.0,
    alpha_leak: float = 0.0,
) -> list[MetaOrder]:
    """Generate a synthetic TWAP meta-order panel under the true model.

    Sizes |Q|/adv are log-uniform on size_bounds (so small orders carry the
    brunt of the sample), signs are fair coin flips, durations are uniform
    and under a day, and each order is split into an equal partition of
    3 to 50 child fills.  Fill price changes are the exact model impact
    increments plus N(0, noise_vol^2 sigma^2 dt) noise.  alpha_leak adds a
    sign-aligned drift alpha_leak * sigma * dt, off by default, to study
    estimator contamination by the trigger signal.
    """
    if n_orders < 1:
        raise ValueError(f"need at least one order, got {n_orders}")
    lo, hi = size_bounds
    if not 0.0 < lo < hi:
        raise ValueError(f"bad size bounds {size_bounds}")
    dlo, dhi = duration_bounds
    if not 0.0 < dlo <= dhi or dhi > 1.0:
        raise ValueError(f"durations must sit in (0, 1] day, got {duration_bounds}")
    flo, fhi = fills_bounds
    if not 1 <= flo <= fhi:
        raise ValueError(f"bad fill-count bounds {fills_bounds}")

    rng = np.random.default_rng(seed)
    sizes = np.exp(rng.uniform(math.log(lo), math.log(hi), n_orders))
    signs = np.where(rng.random(n_orders) < 0.5, -1.0, 1.0)
    durations = rng.uniform(dlo, dhi, n_orders)
    counts = rng.integers(flo, fhi + 1, n_orders)
    eps = rng.standard_normal(int(np.sum(counts)))

    lam, c, tau, sigma = params.lam, params.c, params.tau, params.sigma
    orders: list[MetaOrder] = []
    pos = 0
    for k in range(n_orders):
        m = int(counts[k])
        frac = signs[k] * sizes[k]
        shares = frac * params.adv
        rate = shares / durations[k]
        edges = np.linspace(0.0, durations[k], m + 1)
        # constant rate from J=0, so the state is closed-form at the edges
        j_edges = rate * tau * (1.0 - np.exp(-edges / tau))
        i_edges = lam * np.sign(j_edges) * np.abs(j_edges) ** c
        dt = np.diff(edges)
        dp = np.diff(i_edges)
        dp += noise_vol * sigma * np.sqrt(dt) * eps[pos : pos + m]
        if alpha_leak != 0.0:
            dp += alpha_leak * sigma * signs[k] * dt
        pos += m
        start = float(k)
        fills = np.column_stack((start + edges[:-1], dt, np.full(m, shares / m), dp))
        orders.append(
            MetaOrder(
                order_id=k,
                start=start,
                duration=float(durations[k]),
                signed_frac=float(frac),
                fills=fills,
            )
        )
    return orders


def _padded_fill_arrays(orders: list[MetaOrder]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack ragged fills into (n_orders, mmax) arrays of dt, rate, dP.

    Padding uses dt = 0 and rate = 0, which leaves the state recursion and
    the regression sums untouched.
    """
    mmax = max(o.fills.shape[0] for o in orders)
    n = len(orders)
    dt = np.zeros((n, mmax))
    rate = np.zeros((n, mmax))
    dp = np.zeros((n, mmax))
    for k, o in enumerate(orders):
        m = o.fills.shape[0]
        dt[k, :m] = o.fills[:, 1]
        rate[k, :m] = o.fills[:, 2] / o.fills[:, 1]
        dp[k, :m] = o.fills[:, 3]
    return dt, rate, dp


def _state_at_edges(dt: np.ndarray, rate: np.ndarray, tau: float) -> np.ndarray:
    """Impact state at fill boundaries under decay tau, exact per interval."""
    n, mmax = dt.shape
    j = np.zeros((n, mmax + 1))
    for i in range(mmax):
        e = np.exp(-dt[:, i] / tau)
        j[:, i + 1] = e * j[:, i] + rate[:, i] * tau * (1.0 - e)
    return j


def grid_fit(
    orders: list[MetaOrder],
    c_values: np.ndarray,
    tau_values: np.ndarray,
    *,
    sigma: float,
    adv: float,
) -> CalibGrid:
    """Regress fill price changes on candidate impact increments.

    For each lattice cell the regressor is the g = 1 impact increment
    (sigma/adv^c_hat) * d(sign(J)|J|^c_hat) with J rebuilt under tau_hat;
    the through-origin slope is the fitted prefactor and R^2 is pooled over
    all fills.  sigma and adv must match the units of the fills (they are
    not recoverable from the orders themselves).
    """
    if not orders:
        raise ValueError("no orders to fit")
    c_values = np.asarray(c_values, dtype=float)
    tau_values = np.asarray(tau_values, dtype=float)
    if np.any(c_values <= 0.0) or np.any(c_values > 1.0):
        raise ValueError("c lattice must lie in (0, 1]")
    if np.any(tau_values <= 0.0):
        raise ValueError("tau lattice must be positive")

    dt, rate, dp = _padded_fill_arrays(orders)
    syy = float(np.sum(dp * dp))
    if syy == 0.0:
        raise ValueError("fills carry no price changes")

    r2 = np.full((len(c_values), len(tau_values)), np.nan)
    g = np.full((len(c_values), len(tau_values)), np.nan)
    for jt, tau in enumerate(tau_values):
        edges = _state_at_edges(dt, rate, tau)
        sgn = np.sign(edges)
        absj = np.abs(edges)
        with np.errstate(divide="ignore"):
            logj = np.log(absj)  # -inf at J = 0 maps to exp -> 0 below
        for ic, ch in enumerate(c_values):
            phi = sgn * np.exp(ch * logj)
            x = (sigma / adv**ch) * np.diff(phi, axis=1)
            sxx = float(np.sum(x * x))
            if sxx == 0.0:
                continue
            sxy = float(np.sum(x * dp))
            g[ic, jt] = sxy / sxx
            r2[ic, jt] = sxy * sxy / (sxx * syy)
    return CalibGrid(c_values=c_values, tau_values=tau_values, r2=r2, g=g)


@dataclass(frozen=True)
class LogLogFit:
    """Binned size-vs-return regression: slope estimates the concavity."""

    slope: float
    intercept: float
    bin_sizes: np.ndarray
    bin_means: np.ndarray
    bin_counts: np.ndarray


def _order_aggregates(orders: list[MetaOrder]) -> tuple[np.ndarray, np.ndarray]:
    sizes = np.array([abs(o.signed_frac) for o in orders])
    rets = np.array([math.copysign(1.0, o.signed_frac) * float(np.sum(o.fills[:, 3])) for o in orders])
    return sizes, rets


def _loglog_slope(
    sizes: np.ndarray,
    rets: np.ndarray,
    n_bins: int,
    size_floor: float | None,
    min_count: int,
) -> LogLogFit:
    smax = float(np.max(sizes))
    floor = smax / 10.0 if size_floor is None else float(size_floor)
    if floor <= 0.0 or smax / floor < 10.0 * (1.0 - 1e-12):
        raise ValueError(f"size span above the floor covers less than a decade (floor={floor:g}, max={smax:g})")
    keep = sizes >= floor
    ls = np.log(sizes[keep])
    y = rets[keep]
    bins = np.linspace(math.log(floor), math.log(smax), n_bins + 1)
    idx = np.clip(np.digitize(ls, bins) - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sum_y = np.bincount(idx, weights=y, minlength=n_bins)
    sum_ls = np.bincount(idx, weights=ls, minlength=n_bins)
    ok = counts >= max(min_count, 1)
    with np.errstate(invalid="ignore"):
        means = np.where(ok, sum_y / np.maximum(counts, 1), np.nan)
    ok &= np.nan_to_num(means, nan=-1.0) > 0.0
    if int(np.sum(ok)) < 2:
        raise ValueError("fewer than two populated bins with positive mean return")
    lx = sum_ls[ok] / counts[ok]  # log of the geometric-mean size per bin
    ly = np.log(means[ok])
    slope, intercept = np.polyfit(lx, ly, 1)
    return LogLogFit(
        slope=float(slope),
        intercept=float(intercept),
        bin_sizes=np.exp(lx),
        bin_means=means[ok],
        bin_counts=counts[ok],
    )


def fit_loglog(
    orders: list[MetaOrder],
    n_bins: int = 8,
    *,
    size_floor: float | None = None,
    min_count: int = 5,
) -> LogLogFit:
    """Slope of log mean signed return against log order size.

    Orders are binned by log |Q|/adv above size_floor (default: the top
    decade of the sample, where impact dominates the noise); each bin
    contributes its mean signed return at its geometric-mean size.
    """
    if n_bins < 2:
        raise ValueError(f"need at least two bins, got {n_bins}")
    sizes, rets = _order_aggregates(orders)
    return _loglog_slope(sizes, rets, n_bins, size_floor, min_count)


@dataclass(frozen=True)
class BootstrapC:
    """Bootstrap distribution of the concavity estimate."""

    c_hat: float
    std: float
    q_lo: float
    q_hi: float
    samples: np.ndarray


def _profile_peak(r2: np.ndarray, c_values: np.ndarray) -> float:
    """Lattice argmax with parabolic refinement when interior."""
    k = int(np.argmax(np.where(np.isnan(r2), -np.inf, r2)))
    if 0 < k < len(c_values) - 1:
        cs = c_values[k - 1 : k + 2]
        ys = r2[k - 1 : k + 2]
        a, b, _ = np.polyfit(cs, ys, 2)
        if a < 0.0:
            return float(np.clip(-b / (2.0 * a), cs[0], cs[2]))
    return float(c_values[k])


def bootstrap_c(
    orders: list[MetaOrder],
    n_resamples: int,
    seed: int,
    *,
    method: str = "loglog",
    n_bins: int = 8,
    size_floor: float | None = None,
    min_count: int = 5,
    c_values: np.ndarray | None = None,
    tau_hat: float | None = None,
    sigma: float | None = None,
    adv: float | None = None,
) -> BootstrapC:
    """Resample whole orders with replacement and refit the concavity.

    Order count is preserved per resample.  method="loglog" refits the
    binned slope; method="grid" refits the 1-D R^2 profile over c_values at
    a fixed tau_hat (needs sigma and adv) and takes its refined peak.
    Returns the point estimate on the original panel, the bootstrap
    standard deviation and a 95% band.
    """
    if n_resamples < 100:
        raise ValueError(f"need n_resamples >= 100 for stable bands, got {n_resamples}")
    rng = np.random.default_rng(seed)
    n = len(orders)
    samples = np.empty(n_resamples)

    if method == "loglog":
        sizes, rets = _order_aggregates(orders)
        point = _loglog_slope(sizes, rets, n_bins, size_floor, min_count).slope
        for b in range(n_resamples):
            take = rng.integers(0, n, n)
            samples[b] = _loglog_slope(sizes[take], rets[take], n_bins, size_floor, min_count).slope
    elif method == "grid":
        if c_values is None or tau_hat is None or sigma is None or adv is None:
            raise ValueError("method='grid' needs c_values, tau_hat, sigma and adv")
        c_values = np.asarray(c_values, dtype=float)
        dt, rate, dp = _padded_fill_arrays(orders)
        edges = _state_at_edges(dt, rate, tau_hat)
        sgn = np.sign(edges)
        with np.errstate(divide="ignore"):
            logj = np.log(np.abs(edges))
        sxy = np.empty((n, len(c_values)))
        sxx = np.empty((n, len(c_values)))
        for k, ch in enumerate(c_values):
            phi = sgn * np.exp(ch * logj)
            x = (sigma / adv**ch) * np.diff(phi, axis=1)
            sxy[:, k] = np.sum(x * dp, axis=1)
            sxx[:, k] = np.sum(x * x, axis=1)
        syy = np.sum(dp * dp, axis=1)

        def peak(rows: np.ndarray) -> float:
            num = np.sum(sxy[rows], axis=0) ** 2
            den = np.sum(sxx[rows], axis=0) * np.sum(syy[rows])
            with np.errstate(invalid="ignore", divide="ignore"):
                return _profile_peak(num / den, c_values)

        point = peak(np.arange(n))
        for b in range(n_resamples):
            samples[b] = peak(rng.integers(0, n, n))
    else:
        raise ValueError(f"unknown bootstrap method {method!r}")

    return BootstrapC(
        c_hat=point,
        std=float(np.std(samples, ddof=1)),
        q_lo=float(np.quantile(samples, 0.025)),
        q_hi=float(np.quantile(samples, 0.975)),
        samples=samples,
    )


def orders_to_csv(orders: list[MetaOrder], path: str) -> None:
    """Long-form fill rows: order_id, t, dt, dQ, dP."""
    with open(path, "w", newline="") as fh:
        fh.write("order_id,t,dt,dQ,dP\n")
        for o in orders:
            for t, dt, dq, dp in o.fills:
                fh.write(f"{o.order_id},{t:.12g},{dt:.12g},{dq:.12g},{dp:.12g}\n")


def orders_from_csv(path: str, adv: float) -> list[MetaOrder]:
    """Rebuild orders from long-form fill rows; adv converts shares to fractions."""
    groups: dict[int, list[tuple[float, float, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"order_id", "t", "dt", "dQ", "dP"}
        if reader.fieldnames is None or not need.issubset(set(reader.fieldnames)):
            raise ValueError(f"expected header order_id,t,dt,dQ,dP in {path}")
        for r in reader:
            groups.setdefault(int(r["order_id"]), []).append(
                (float(r["t"]), float(r["dt"]), float(r["dQ"]), float(r["dP"]))
            )
    if not groups:
        raise ValueError(f"no fills in {path}")
    orders = []
    for oid in sorted(groups):
        fills = np.array(sorted(groups[oid]))
        orders.append(
            MetaOrder(
                order_id=oid,
                start=float(fills[0, 0]),
                duration=float(np.sum(fills[:, 1])),
                signed_frac=float(np.sum(fills[:, 2])) / adv,
                fills=fills,
            )
        )
    return orders
