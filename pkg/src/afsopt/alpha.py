"""Alpha signals: expected-return processes the policy trades against.

Three kinds:

  constant  alpha_t = alpha0, zero drift.
  ou        dalpha = -(1/theta) alpha dt + vol dW, mean-reverting around 0.
  sampled   externally supplied (t, alpha, drift) samples, e.g. from CSV.

The OU recursion is exact per step,

    alpha_{k+1} = e^{-dt/theta} alpha_k + eps_k,
    eps_k ~ N(0, vol^2 * (theta/2) * (1 - e^{-2 dt/theta})),

so the discretization never biases the stationary law.  Alphas are in price
units per share over the remaining horizon; dividing by sigma gives the
sharpe-style units used at the CLI boundary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .core import TimeGrid

__all__ = [
    "AlphaModel",
    "AlphaPath",
    "sample_alpha",
    "ou_step_params",
    "stationary_abs_moment",
    "stationary_alpha_vol",
    "load_alpha_csv",
]

_KINDS = ("constant", "ou", "sampled")


def stationary_alpha_vol(theta: float, sigma: float) -> float:
    """OU vol such that the stationary std of alpha/sigma is one."""
    return sigma * math.sqrt(2.0 / theta)


@dataclass(frozen=True)
class AlphaModel:
    """Specification of an alpha process.

    horizon is metadata only (the prediction horizon the signal was built
    for); nothing downstream integrates over it.
    """

    kind: str
    alpha0: float = 0.0
    theta: float | None = None
    vol: float | None = None
    samples: tuple[TimeGrid, np.ndarray, np.ndarray] | None = None
    horizon: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown alpha kind {self.kind!r}, expected one of {_KINDS}")
        if not np.isfinite(self.alpha0):
            raise ValueError("alpha0 must be finite")
        if self.kind == "ou":
            if self.theta is None or not np.isfinite(self.theta) or self.theta <= 0.0:
                raise ValueError(f"ou alpha needs theta > 0, got {self.theta}")
            if self.vol is None or not np.isfinite(self.vol) or self.vol < 0.0:
                raise ValueError(f"ou alpha needs vol >= 0, got {self.vol}")
        if self.kind == "sampled":
            if self.samples is None:
                raise ValueError("sampled alpha needs samples")
            grid, a, mu = self.samples
            if a.shape != (grid.n + 1,) or mu.shape != (grid.n + 1,):
                raise ValueError("sampled alpha arrays must match the grid nodes")

    @classmethod
    def constant(cls, alpha0: float, horizon: float | None = None) -> "AlphaModel":
        return cls(kind="constant", alpha0=alpha0, horizon=horizon)

    @classmethod
    def ou(
        cls,
        alpha0: float,
        theta: float,
        vol: float | None = None,
        *,
        sigma: float | None = None,
        horizon: float | None = None,
    ) -> "AlphaModel":
        """OU model; omit vol to get unit stationary sharpe for price vol sigma."""
        if vol is None:
            if sigma is None:
                raise ValueError("give vol, or sigma to derive the unit-sharpe vol")
            vol = stationary_alpha_vol(theta, sigma)
        return cls(kind="ou", alpha0=alpha0, theta=theta, vol=vol, horizon=horizon)

    @classmethod
    def sampled(cls, grid: TimeGrid, alpha: np.ndarray, drift: np.ndarray) -> "AlphaModel":
        a = np.asarray(alpha, dtype=float)
        mu = np.asarray(drift, dtype=float)
        return cls(kind="sampled", alpha0=float(a[0]), samples=(grid, a, mu))


@dataclass(frozen=True)
class AlphaPath:
    """Realized alpha and its drift on a grid.  seed is 0 for deterministic kinds."""

    grid: TimeGrid
    alpha: np.ndarray
    drift: np.ndarray
    seed: int = 0


def ou_step_params(model: AlphaModel, dt: float) -> tuple[float, float]:
    """Exact one-step OU constants (phi, eps_std) for step size dt."""
    if model.kind != "ou":
        raise ValueError("step constants defined for the ou kind only")
    phi = math.exp(-dt / model.theta)
    eps_std = model.vol * math.sqrt(model.theta / 2.0 * (1.0 - phi * phi))
    return phi, eps_std


def sample_alpha(
    model: AlphaModel,
    grid: TimeGrid,
    seed: int = 0,
    *,
    stationary_start: bool = False,
) -> AlphaPath:
    """Realize the alpha process on the grid.

    stationary_start draws alpha_0 from the OU stationary law (centered on
    alpha0) instead of starting at alpha0 exactly; useful for steady-state
    averages where the warm-up transient would bias short horizons.
    """
    times = grid.times()
    if model.kind == "constant":
        a = np.full(grid.n + 1, model.alpha0)
        return AlphaPath(grid=grid, alpha=a, drift=np.zeros(grid.n + 1), seed=0)

    if model.kind == "sampled":
        sgrid, a, mu = model.samples
        if (sgrid.t0, sgrid.t1, sgrid.n) != (grid.t0, grid.t1, grid.n):
            raise ValueError("sampled alpha grid does not match the requested grid")
        return AlphaPath(grid=grid, alpha=a.copy(), drift=mu.copy(), seed=0)

    rng = np.random.default_rng(seed)
    phi, eps_std = ou_step_params(model, grid.dt)
    a0 = model.alpha0
    if stationary_start:
        a0 += model.vol * math.sqrt(model.theta / 2.0) * rng.standard_normal()
    drive = np.empty(grid.n + 1)
    drive[0] = a0
    drive[1:] = eps_std * rng.standard_normal(grid.n)
    a = lfilter([1.0], [1.0, -phi], drive)
    return AlphaPath(grid=grid, alpha=a, drift=-a / model.theta, seed=seed)


def stationary_abs_moment(model: AlphaModel, p: float, sigma: float) -> float:
    """E|alpha/sigma|^p under the OU stationary law.

    The stationary level is N(0, s^2 sigma^2) with s = (vol/sigma) sqrt(theta/2),
    so the moment is s^p * 2^(p/2) * Gamma((p+1)/2) / sqrt(pi).
    """
    if model.kind != "ou":
        raise ValueError("stationary moment defined for the ou kind only")
    if p <= 0.0:
        raise ValueError(f"need p > 0, got {p}")
    s = (model.vol / sigma) * math.sqrt(model.theta / 2.0)
    return s**p * 2.0 ** (p / 2.0) * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)


def load_alpha_csv(path: str) -> AlphaModel:
    """Read a sampled alpha from CSV with columns t, alpha, drift."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:3]] != ["t", "alpha", "drift"]:
            raise ValueError(f"expected header t,alpha,drift in {path}")
        rows = [(float(r["t"]), float(r["alpha"]), float(r["drift"])) for r in reader]
    if len(rows) < 2:
        raise ValueError(f"need at least two samples in {path}")
    t = np.array([r[0] for r in rows])
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise ValueError(f"non-uniform time column in {path}")
    grid = TimeGrid(t[0], t[-1], len(t) - 1)
    return AlphaModel.sampled(grid, np.array([r[1] for r in rows]), np.array([r[2] for r in rows]))
