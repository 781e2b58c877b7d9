"""Optimal trading under nonlinear transient impact.

Working in impact space (the state J rather than the position Q), the
expected-P&L functional is pointwise concave in J and the maximizer is
closed-form: on the open interval the optimal impact is a fixed fraction of
the drift-adjusted alpha,

    I*_t = (alpha_t - tau * mu_t) / (1 + c),        0 < t < T,
    I*_T = alpha_T,

with mu the alpha drift.  The terminal condition is a liquidity-taking
block: at T there is no future decay to pay for, so the full remaining
alpha is monetized.  Positions follow from the state by

    Q*_t = J*_t + (1/tau) int_0^t J*_s ds.

For constant alpha and c = 1/2 the interior fraction is 2/3; for c = 1 it
is 1/2; a mean-reverting alpha with timescale theta scales the fraction by
(1 + tau/theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alpha import AlphaPath
from .core import AfsParams, TimeGrid, impact_of_state, state_of_impact

__all__ = [
    "PolicySpec",
    "OptimalPlan",
    "optimal_impact",
    "order_size_from_alpha",
    "implied_alpha",
    "turnover_factor",
    "plan_to_csv",
]


@dataclass(frozen=True)
class PolicySpec:
    """Believed model parameters plus the trading horizon (days)."""

    believed: AfsParams
    horizon: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.horizon) or self.horizon <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")


@dataclass(frozen=True)
class OptimalPlan:
    """Target trajectory produced by optimal_impact.

    i_star/j_star hold the interior targets at nodes 0..n-1 and the
    post-block terminal state at node n.  initial_jump is the block from
    J=0 to the first interior target; terminal_jump realizes I_T = alpha_T.
    q_star books both jumps and recovers positions with the trapezoid rule.
    """

    grid: TimeGrid
    i_star: np.ndarray
    j_star: np.ndarray
    q_star: np.ndarray
    terminal_jump: float
    initial_jump: float
    spec: PolicySpec

    def interior_states(self) -> np.ndarray:
        """Pre-jump state path on all nodes (node n = left limit at T)."""
        out = self.j_star.copy()
        out[-1] -= self.terminal_jump
        return out


def optimal_impact(spec: PolicySpec, alpha: AlphaPath) -> OptimalPlan:
    """Closed-form optimal plan for the believed parameters.

    The interior formula applies from the first grid node; the jump from
    J=0 at t=0 is booked as initial_jump.  The prefactor only rescales the
    state and position targets, never the impact targets.
    """
    p = spec.believed
    grid = alpha.grid
    if not math.isclose(grid.t1 - grid.t0, spec.horizon, rel_tol=1e-9):
        raise ValueError(
            f"alpha grid spans {grid.t1 - grid.t0} days but the spec horizon is {spec.horizon}"
        )

    adjusted = alpha.alpha - p.tau * alpha.drift
    i_interior = adjusted / (1.0 + p.c)
    j_interior = state_of_impact(p, i_interior)

    i_star = i_interior.copy()
    j_star = j_interior.copy()
    i_star[-1] = alpha.alpha[-1]
    j_star[-1] = state_of_impact(p, alpha.alpha[-1])
    terminal_jump = j_star[-1] - j_interior[-1]

    # Q* = J* + (1/tau) int J* dt, trapezoid on the interior path.
    dt = grid.dt
    running = np.concatenate(([0.0], np.cumsum(0.5 * (j_interior[1:] + j_interior[:-1]) * dt)))
    q_star = j_star + running / p.tau

    return OptimalPlan(
        grid=grid,
        i_star=i_star,
        j_star=j_star,
        q_star=q_star,
        terminal_jump=float(terminal_jump),
        initial_jump=float(j_interior[0]),
        spec=spec,
    )


def _size_factor(spec: PolicySpec) -> float:
    """Lambda ratio g / sqrt(1 + (4/9) T/tau) linking sharpe to order size (c=1/2)."""
    p = spec.believed
    if p.c != 0.5:
        raise ValueError(f"order-size formulas require c = 0.5 exactly, got c={p.c}")
    return p.g / math.sqrt(1.0 + (4.0 / 9.0) * (spec.horizon / p.tau))


def order_size_from_alpha(spec: PolicySpec, sharpe: float) -> float:
    """Optimal total order size as a fraction of daily volume, for c = 1/2.

    sharpe is alpha/sigma; the result is signed:
    Q_T / V = sign(sharpe) * (sharpe / Lambda)^2.
    """
    lam_ratio = _size_factor(spec)
    return math.copysign((sharpe / lam_ratio) ** 2, sharpe)


def implied_alpha(spec: PolicySpec, order_frac: float) -> float:
    """Alpha (in sigma units) implied by an order of |Q|/V = |order_frac|, c = 1/2."""
    lam_ratio = _size_factor(spec)
    return math.copysign(lam_ratio * math.sqrt(abs(order_frac)), order_frac)


def turnover_factor(c: float, tau: float, theta: float) -> float:
    """Interior turnover multiplier (1 + tau/theta)^(1/c) of a mean-reverting
    alpha relative to a constant one of equal strength."""
    if not 0.0 < c <= 1.0:
        raise ValueError(f"concavity c must lie in (0, 1], got {c}")
    if tau <= 0.0 or theta <= 0.0:
        raise ValueError("tau and theta must be positive")
    return (1.0 + tau / theta) ** (1.0 / c)


def plan_to_csv(plan: OptimalPlan, alpha: AlphaPath, path: str) -> None:
    """Write t, alpha, drift, i_star, j_star, q_star rows."""
    times = plan.grid.times()
    with open(path, "w", newline="") as fh:
        fh.write("t,alpha,drift,i_star,j_star,q_star\n")
        for k in range(len(times)):
            fh.write(
                f"{times[k]:.12g},{alpha.alpha[k]:.12g},{alpha.drift[k]:.12g},"
                f"{plan.i_star[k]:.12g},{plan.j_star[k]:.12g},{plan.q_star[k]:.12g}\n"
            )
