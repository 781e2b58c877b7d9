"""Nonlinear transient price impact: state dynamics and execution costs.

Impact is a power law of an exponentially weighted moving average of signed
order flow,

    I_t = lam * sign(J_t) * |J_t|^c,     dJ_t = -(1/tau) J_t dt + dQ_t,

with J_0 = 0 and the prefactor normalized as

    lam = sigma * g / adv^c

so that alphas quote in volatility units and order sizes in fractions of
daily volume.  c = 1 recovers the linear transient-impact model of
Obizhaeva and Wang (2013); c = 0.5 is the square-root law.  The parametric
family goes back to Alfonsi, Fruth and Schied (2010).  There is no
permanent component: J relaxes to zero once trading stops.

Between trades J decays exponentially, so the discretization below is
exact for block trades and for piecewise-constant trade rates; step size
only affects the quadrature of running costs, never the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "AfsParams",
    "TimeGrid",
    "ImpactPath",
    "impact_of_state",
    "state_of_impact",
    "impact_potential",
    "evolve_impact",
    "rates_matching_states",
    "execution_cost",
]

# Relative tolerance when snapping block-trade times onto grid nodes.
_NODE_SNAP_RTOL = 1e-9


@dataclass(frozen=True)
class AfsParams:
    """Model parameters.

    c:     impact concavity exponent, in (0, 1].
    tau:   decay timescale of the impact state, days.
    sigma: daily price volatility, price units per sqrt(day).
    adv:   average daily volume, shares per day.
    g:     dimensionless impact prefactor.
    """

    c: float
    tau: float
    sigma: float
    adv: float
    g: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.c <= 1.0:
            raise ValueError(f"concavity c must lie in (0, 1], got {self.c}")
        for name in ("tau", "sigma", "adv", "g"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0.0:
                raise ValueError(f"{name} must be positive and finite, got {val}")

    @property
    def lam(self) -> float:
        """Impact prefactor in price units per share^c.  Always recomputed."""
        return self.sigma * self.g / self.adv**self.c


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of n steps on [t0, t1], n + 1 nodes."""

    t0: float
    t1: float
    n: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ValueError(f"need finite t1 > t0, got [{self.t0}, {self.t1}]")
        if self.n < 1:
            raise ValueError(f"need at least one step, got n={self.n}")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t0, self.t1, self.n * factor)


@dataclass(frozen=True)
class ImpactPath:
    """Realized trajectory of trades and impact on a grid.

    q, j, i hold node values; at a node carrying a block trade they are the
    post-block values.  jumps lists the block trades as (time, dQ).
    """

    grid: TimeGrid
    q: np.ndarray
    j: np.ndarray
    i: np.ndarray
    jumps: list[tuple[float, float]] = field(default_factory=list)


def impact_of_state(params: AfsParams, j: np.ndarray | float) -> np.ndarray | float:
    """I(J) = lam * sign(J) * |J|^c, elementwise."""
    j = np.asarray(j, dtype=float)
    out = params.lam * np.sign(j) * np.abs(j) ** params.c
    return out if out.ndim else float(out)


def state_of_impact(params: AfsParams, i: np.ndarray | float) -> np.ndarray | float:
    """Inverse map J(I) = sign(I) * (|I|/lam)^(1/c)."""
    i = np.asarray(i, dtype=float)
    out = np.sign(i) * (np.abs(i) / params.lam) ** (1.0 / params.c)
    return out if out.ndim else float(out)


def impact_potential(params: AfsParams, j: np.ndarray | float) -> np.ndarray | float:
    """Antiderivative H of I, H(J) = lam * |J|^(1+c) / (1+c).

    H is even: pushing |J| up costs, letting it relax refunds at most the
    same, so any excursion from J = 0 back to J = 0 has nonnegative total
    cost.  Block trades cost H(J_pre + dQ) - H(J_pre) exactly.
    """
    j = np.asarray(j, dtype=float)
    out = params.lam * np.abs(j) ** (1.0 + params.c) / (1.0 + params.c)
    return out if out.ndim else float(out)


def _blocks_to_nodes(grid: TimeGrid, blocks) -> np.ndarray:
    """Accumulate block trades onto grid nodes; reject off-node times."""
    node_dq = np.zeros(grid.n + 1)
    dt = grid.dt
    for t, dq in blocks:
        if not (np.isfinite(t) and np.isfinite(dq)):
            raise ValueError(f"non-finite block trade ({t}, {dq})")
        k = round((t - grid.t0) / dt)
        if k < 0 or k > grid.n or abs(t - (grid.t0 + k * dt)) > _NODE_SNAP_RTOL * max(dt, abs(t), 1.0):
            raise ValueError(f"block trade at t={t} does not sit on a grid node")
        node_dq[k] += dq
    return node_dq


def evolve_impact(
    params: AfsParams,
    grid: TimeGrid,
    rates: np.ndarray,
    blocks=(),
) -> ImpactPath:
    """Advance (Q, J, I) through piecewise-constant trade rates and blocks.

    rates[k] is the trade rate (shares/day) on step k.  A block at node k is
    applied at the start of the step, so the recorded state at that node is
    post-block.  Each step uses the exact solution of the decay ODE:

        J_{k+1} = e^{-dt/tau} * J_k + qdot_k * tau * (1 - e^{-dt/tau}).
    """
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (grid.n,):
        raise ValueError(f"need {grid.n} rate samples, got shape {rates.shape}")
    if not np.all(np.isfinite(rates)):
        raise ValueError("non-finite trade rate")
    node_dq = _blocks_to_nodes(grid, blocks)

    dt = grid.dt
    decay = np.exp(-dt / params.tau)
    # J recursion as an AR(1) filter: exact for blocks and constant rates.
    drive = np.empty(grid.n + 1)
    drive[0] = node_dq[0]
    drive[1:] = rates * params.tau * (1.0 - decay) + node_dq[1:]
    # lfilter realizes j[k] = decay * j[k-1] + drive[k] in one pass; a block
    # enters its own node undecayed (post-block convention) and decays from
    # the next step onward.
    j = lfilter([1.0], [1.0, -decay], drive)

    q = np.concatenate(([0.0], np.cumsum(rates) * dt)) + np.cumsum(node_dq)
    i = impact_of_state(params, j)
    jumps = [(grid.t0 + k * dt, node_dq[k]) for k in np.nonzero(node_dq)[0]]
    return ImpactPath(grid=grid, q=q, j=j, i=np.asarray(i), jumps=jumps)


def rates_matching_states(params: AfsParams, grid: TimeGrid, j_nodes: np.ndarray) -> np.ndarray:
    """Trade rates that realize the node states j under params.tau.

    Inverse of the exact exponential step: feeding the result back to
    evolve_impact (with a block j_nodes[0] at t0) reproduces j_nodes to
    machine precision.
    """
    j_nodes = np.asarray(j_nodes, dtype=float)
    if j_nodes.shape != (grid.n + 1,):
        raise ValueError(f"need {grid.n + 1} node states, got shape {j_nodes.shape}")
    decay = np.exp(-grid.dt / params.tau)
    return (j_nodes[1:] - decay * j_nodes[:-1]) / (params.tau * (1.0 - decay))


def execution_cost(params: AfsParams, path: ImpactPath) -> float:
    """Total cost int I dQ along the path.

    Smooth segments use the midpoint rule on node impacts; block trades are
    exact via the antiderivative, H(J_pre + dQ) - H(J_pre).
    """
    node_dq = _blocks_to_nodes(path.grid, path.jumps)
    j_pre = path.j - node_dq
    block_cost = float(np.sum(impact_potential(params, path.j) - impact_potential(params, j_pre)))

    # Per-step smooth trade = total dQ minus the block landing at the right node.
    dq_smooth = np.diff(path.q) - node_dq[1:]
    i_start = path.i[:-1]
    i_end = impact_of_state(params, j_pre[1:])
    smooth_cost = float(np.sum(0.5 * (i_start + i_end) * dq_smooth))
    return smooth_cost + block_cost
