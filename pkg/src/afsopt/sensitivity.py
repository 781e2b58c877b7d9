"""Misspecification scans: what a wrong exponent or decay estimate costs.

Each scan sweeps a believed parameter against the closed-form P&L under the
actual model and reports the misspecified/optimal profit ratio plus, per
conditioning value, the critical believed parameter where profits cross
zero on the dangerous side (aggressive exponents below c, slow decay above
tau).  By default the believed prefactor follows the calibrated g curve,
i.e. what a trader who fitted the wrong shape to real fills would actually
use; a constant g isolates the pure shape effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .calibration import CalibGrid
from .pnl import (
    misspec_value_constant_alpha,
    misspec_value_decay_ou,
    optimal_value_constant_alpha,
    optimal_value_decay_ou,
)

__all__ = [
    "ScanResult",
    "StatPnlCurves",
    "scan_concavity",
    "scan_decay",
    "statistical_vs_pnl",
    "g_curve_concavity",
    "g_curve_decay",
    "scan_to_csv",
    "criticals_to_csv",
    "curves_to_csv",
]

GCurve = Callable[[float], float]


@dataclass(frozen=True)
class ScanResult:
    """Misspecification sweep.

    axis1 is the swept believed parameter, axis2 the conditioning value
    (sharpe for concavity scans, theta for decay scans).  ratio and
    u_misspec have shape (len(axis2), len(axis1)); u_opt has one entry per
    axis2 value.  critical holds the zero-profit crossing on the danger
    side per axis2 row, NaN when no crossing falls inside the scanned
    range.  monotone_danger flags rows where the P&L decreases
    monotonically along the danger side until that crossing.
    """

    axis1: np.ndarray
    axis2: np.ndarray
    ratio: np.ndarray
    u_misspec: np.ndarray
    u_opt: np.ndarray
    critical: np.ndarray
    monotone_danger: np.ndarray


@dataclass(frozen=True)
class StatPnlCurves:
    """Fit quality and economic value paired on one believed-exponent lattice."""

    c_hat: np.ndarray
    r2_ratio: np.ndarray
    u_ratio: np.ndarray
    band_lo: float
    band_hi: float


def _as_curve(g_curve: GCurve | float) -> GCurve:
    if callable(g_curve):
        return g_curve
    g = float(g_curve)
    if g <= 0.0:
        raise ValueError(f"constant g must be positive, got {g}")
    return lambda _v: g


def _check_increasing(values: np.ndarray, name: str) -> None:
    if values.size == 0:
        raise ValueError(f"{name} lattice is empty")
    if values.size > 1 and np.any(np.diff(values) <= 0.0):
        raise ValueError(f"{name} lattice must be strictly increasing")


def _bisect_zero(f, lo: float, hi: float, f_tol: float = 1e-9, x_tol: float = 1e-13) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError("zero crossing not bracketed")
    while True:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < f_tol and hi - lo < x_tol * max(1.0, abs(mid)):
            return mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            return mid
        if flo * fm <= 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm


def _locate_crossing(val, grid: np.ndarray, u: np.ndarray, truth: float, side: str) -> float:
    """Zero of `val` on the danger side, nearest the true value; NaN if absent.

    Profits at the truth are positive, so when even the adjacent lattice
    point is loss-making the bracket runs from the truth itself.
    """
    if side == "below":
        idx = np.nonzero(grid < truth)[0][::-1]
    else:
        idx = np.nonzero(grid > truth)[0]
    if idx.size == 0:
        return math.nan
    if u[idx[0]] <= 0.0:
        lo, hi = (grid[idx[0]], truth) if side == "below" else (truth, grid[idx[0]])
        return _bisect_zero(val, lo, hi)
    for k in range(len(idx) - 1):
        near, far = idx[k], idx[k + 1]
        if u[near] > 0.0 and u[far] <= 0.0:
            lo, hi = sorted((grid[near], grid[far]))
            return _bisect_zero(val, lo, hi)
    return math.nan


def _monotone_until_loss(u: np.ndarray, order: np.ndarray) -> bool:
    """True when u decreases along `order` at least until it first goes negative."""
    if order.size == 0:
        return True
    prev = u[order[0]]
    for k in order[1:]:
        cur = u[k]
        if cur > prev + 1e-12 * max(1.0, abs(prev)):
            return False
        if cur < 0.0:
            return True
        prev = cur
    return True


def scan_concavity(
    actual_c: float,
    g_curve: GCurve | float,
    sharpe_values: np.ndarray,
    c_hat_values: np.ndarray,
    horizon: float,
    tau: float,
) -> ScanResult:
    """Sweep the believed exponent at a correctly estimated decay.

    The critical value per sharpe is the zero-profit believed exponent
    below actual_c, bisected with g interpolated along the curve.
    """
    gfun = _as_curve(g_curve)
    c_hat_values = np.asarray(c_hat_values, dtype=float)
    sharpe_values = np.asarray(sharpe_values, dtype=float)
    _check_increasing(c_hat_values, "c_hat")
    _check_increasing(sharpe_values, "sharpe")
    if c_hat_values[0] <= 0.0 or c_hat_values[-1] > 1.0:
        raise ValueError("believed exponents must lie in (0, 1]")
    g_act = gfun(actual_c)

    n_s, n_c = len(sharpe_values), len(c_hat_values)
    u_mis = np.empty((n_s, n_c))
    u_opt = np.empty(n_s)
    critical = np.full(n_s, np.nan)
    monotone = np.zeros(n_s, dtype=bool)

    for a, x in enumerate(sharpe_values):
        u_opt[a] = optimal_value_constant_alpha(actual_c, g_act, x, horizon, tau)
        for b, ch in enumerate(c_hat_values):
            u_mis[a, b] = misspec_value_constant_alpha(actual_c, ch, g_act, gfun(ch), x, horizon, tau)

        def val(ch: float, _x=x) -> float:
            return misspec_value_constant_alpha(actual_c, ch, g_act, gfun(ch), _x, horizon, tau)

        critical[a] = _locate_crossing(val, c_hat_values, u_mis[a], actual_c, "below")
        below = np.nonzero(c_hat_values < actual_c)[0][::-1]
        monotone[a] = _monotone_until_loss(u_mis[a], below)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = u_mis / u_opt[:, None]
    return ScanResult(
        axis1=c_hat_values,
        axis2=sharpe_values,
        ratio=ratio,
        u_misspec=u_mis,
        u_opt=u_opt,
        critical=critical,
        monotone_danger=monotone,
    )


def scan_decay(
    actual_tau: float,
    theta_values: np.ndarray,
    tau_hat_values: np.ndarray,
    c: float,
    g_curve: GCurve | float,
    moment: float | None = None,
) -> ScanResult:
    """Sweep the believed decay timescale at a correct exponent, OU alpha.

    Values are steady-state rates per unit sigma*V.  moment is
    E|alpha/sigma|^{1+1/c} under the stationary law, by default the
    unit-sharpe value; it scales both sides, so ratios and criticals do
    not depend on it.  With a flat g curve the critical tau_hat per theta
    sits at the analytic root theta*((1+c)(1+tau/theta) - 1).
    """
    gfun = _as_curve(g_curve)
    theta_values = np.asarray(theta_values, dtype=float)
    tau_hat_values = np.asarray(tau_hat_values, dtype=float)
    _check_increasing(theta_values, "theta")
    _check_increasing(tau_hat_values, "tau_hat")
    if tau_hat_values[0] <= 0.0 or theta_values[0] <= 0.0:
        raise ValueError("timescales must be positive")
    if moment is None:
        p = 1.0 + 1.0 / c
        moment = 2.0 ** (p / 2.0) * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)
    g_act = gfun(actual_tau)

    n_t, n_h = len(theta_values), len(tau_hat_values)
    u_mis = np.empty((n_t, n_h))
    u_opt = np.empty(n_t)
    critical = np.full(n_t, np.nan)
    monotone = np.zeros(n_t, dtype=bool)

    for a, theta in enumerate(theta_values):
        u_opt[a] = optimal_value_decay_ou(actual_tau, theta, c, g_act, moment)
        for b, th in enumerate(tau_hat_values):
            u_mis[a, b] = misspec_value_decay_ou(actual_tau, th, theta, c, g_act, gfun(th), moment)

        def val(th: float, _theta=theta) -> float:
            return misspec_value_decay_ou(actual_tau, th, _theta, c, g_act, gfun(th), moment)

        critical[a] = _locate_crossing(val, tau_hat_values, u_mis[a], actual_tau, "above")
        above = np.nonzero(tau_hat_values > actual_tau)[0]
        monotone[a] = _monotone_until_loss(u_mis[a], above)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = u_mis / u_opt[:, None]
    return ScanResult(
        axis1=tau_hat_values,
        axis2=theta_values,
        ratio=ratio,
        u_misspec=u_mis,
        u_opt=u_opt,
        critical=critical,
        monotone_danger=monotone,
    )


def g_curve_concavity(calib: CalibGrid, tau: float) -> GCurve:
    """Interpolated fitted prefactor along the exponent axis at fixed tau."""
    j = int(np.argmin(np.abs(calib.tau_values - tau)))
    cs = calib.c_values
    gs = calib.g[:, j]
    if np.any(np.isnan(gs)):
        raise ValueError("g column holds NaN cells; cannot build a curve")

    def curve(ch: float) -> float:
        if ch < cs[0] - 1e-12 or ch > cs[-1] + 1e-12:
            raise ValueError(f"c_hat={ch} outside the calibrated lattice [{cs[0]}, {cs[-1]}]")
        return float(np.interp(ch, cs, gs))

    return curve


def g_curve_decay(calib: CalibGrid, c: float) -> GCurve:
    """Interpolated fitted prefactor along the decay axis at fixed c.

    Interpolates in log tau_hat; decay lattices are typically geometric.
    """
    i = int(np.argmin(np.abs(calib.c_values - c)))
    taus = calib.tau_values
    gs = calib.g[i, :]
    if np.any(np.isnan(gs)):
        raise ValueError("g row holds NaN cells; cannot build a curve")
    ltaus = np.log(taus)

    def curve(th: float) -> float:
        if th < taus[0] * (1.0 - 1e-12) or th > taus[-1] * (1.0 + 1e-12):
            raise ValueError(f"tau_hat={th} outside the calibrated lattice [{taus[0]}, {taus[-1]}]")
        return float(np.interp(math.log(th), ltaus, gs))

    return curve


def statistical_vs_pnl(
    calib: CalibGrid,
    actual_c: float,
    sharpe: float,
    *,
    tau: float | None = None,
    horizon: float = 1.0,
    c_std: float | None = None,
) -> StatPnlCurves:
    """Pair the R^2 ratio with the profit ratio on the calibrated c lattice.

    Both curves are normalized to one at the lattice point nearest
    actual_c.  The profit side prices a constant alpha of the given sharpe
    over `horizon` with the fitted g curve, at the tau column nearest the
    decay estimate (the grid argmax when tau is not given).  Band edges
    are actual_c +/- c_std when a bootstrap std is supplied.
    """
    cs = calib.c_values
    if actual_c < cs[0] or actual_c > cs[-1]:
        raise ValueError(f"actual_c={actual_c} outside the calibrated lattice [{cs[0]}, {cs[-1]}]")
    if tau is None:
        _, tau = calib.argmax_cell()
    jt = int(np.argmin(np.abs(calib.tau_values - tau)))
    tau_col = float(calib.tau_values[jt])
    ic = int(np.argmin(np.abs(cs - actual_c)))
    r2_col = calib.r2[:, jt]
    if np.isnan(r2_col[ic]) or r2_col[ic] <= 0.0:
        raise ValueError("reference cell has no usable R^2")
    r2_ratio = r2_col / r2_col[ic]

    gfun = g_curve_concavity(calib, tau_col)
    g_act = gfun(actual_c)
    u_opt = optimal_value_constant_alpha(actual_c, g_act, sharpe, horizon, tau_col)
    u = np.array(
        [
            misspec_value_constant_alpha(actual_c, ch, g_act, gfun(ch), sharpe, horizon, tau_col)
            for ch in cs
        ]
    )
    band_lo = actual_c - c_std if c_std is not None else math.nan
    band_hi = actual_c + c_std if c_std is not None else math.nan
    return StatPnlCurves(
        c_hat=cs.copy(),
        r2_ratio=r2_ratio,
        u_ratio=u / u_opt,
        band_lo=band_lo,
        band_hi=band_hi,
    )


def scan_to_csv(result: ScanResult, path: str) -> None:
    """Long-form rows: axis1, axis2, ratio, u_misspec, u_opt."""
    with open(path, "w", newline="") as fh:
        fh.write("axis1,axis2,ratio,u_misspec,u_opt\n")
        for a, v2 in enumerate(result.axis2):
            for b, v1 in enumerate(result.axis1):
                fh.write(
                    f"{v1:.12g},{v2:.12g},{result.ratio[a, b]:.12g},"
                    f"{result.u_misspec[a, b]:.12g},{result.u_opt[a]:.12g}\n"
                )


def criticals_to_csv(result: ScanResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("axis2,critical_value\n")
        for a, v2 in enumerate(result.axis2):
            fh.write(f"{v2:.12g},{result.critical[a]:.12g}\n")


def curves_to_csv(curves: StatPnlCurves, path: str) -> None:
    """Paired-curve rows: c_hat, r2_ratio, u_ratio, band_lo, band_hi."""
    with open(path, "w", newline="") as fh:
        fh.write("c_hat,r2_ratio,u_ratio,band_lo,band_hi\n")
        for ch, r2, ur in zip(curves.c_hat, curves.r2_ratio, curves.u_ratio):
            fh.write(f"{ch:.12g},{r2:.12g},{ur:.12g},{curves.band_lo:.12g},{curves.band_hi:.12g}\n")
