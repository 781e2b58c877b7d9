"""Expected P&L of (possibly misspecified) policies, closed forms and Monte Carlo.

Everything prices the same functional.  In trade space the expected P&L of
a strategy is E int (alpha_t - I_t) dQ_t: each trade captures its expected
alpha and pays impact.  Integrating by parts moves it to impact space,

    E[Y] = E[ (1/tau) int ((alpha - tau*mu) J - lam |J|^{1+c}) dt
              + alpha_T J_T - lam |J_T|^{1+c} / (1 + c) ],

which is pointwise concave in J and is what the closed forms and the
quadrature evaluate.  A policy is a state path J; when the trader's decay
estimate is wrong, the trades that realize that path are recovered under
the actual timescale, and the path is priced under the actual (c, tau, g).

Discrete accounting books each step's alpha at fill completion.  That is
the exact counterpart of position-times-price-move bookkeeping: a
diffusive signal co-moves with the trades tracking it, and the co-moving
part of the capture is half the profit under an OU signal, so evaluating
alpha any earlier inside the step would misprice exactly that term.

Normalization: PnlReport.raw is E[Y] in price*shares; normalized divides
by the actual impact prefactor lam.  The closed-form helpers below return
values per sigma*adv (constant alpha: total over the horizon; OU decay:
steady-state rate per day), so raw = sigma * adv * value.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np
from scipy.signal import lfilter

from .alpha import AlphaModel, AlphaPath, ou_step_params, sample_alpha
from .core import AfsParams, TimeGrid, rates_matching_states
from .policy import OptimalPlan

__all__ = [
    "PnlReport",
    "value_impact_space",
    "value_plan",
    "misspec_value_constant_alpha",
    "optimal_value_constant_alpha",
    "misspec_value_decay_ou",
    "optimal_value_decay_ou",
    "decay_profit_ratio",
    "simulate_pnl",
    "refine_until_stable",
]


@dataclass(frozen=True)
class PnlReport:
    """Expected P&L split into its components.

    raw           E[Y] in price * shares.
    normalized    raw / lam (actual prefactor).
    alpha_capture E int alpha dQ component.
    impact_paid   E int I dQ component, so raw = alpha_capture - impact_paid
                  up to the zero-mean noise term in Monte Carlo runs.
    n_paths       0 for closed-form/quadrature results.
    stderr        Monte Carlo standard error of raw (0 when deterministic).
    """

    raw: float
    normalized: float
    alpha_capture: float
    impact_paid: float
    n_paths: int
    stderr: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def write_json(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")


def value_impact_space(
    actual: AfsParams,
    grid: TimeGrid,
    j_interior: np.ndarray,
    j_terminal: float,
    alpha: AlphaPath,
) -> PnlReport:
    """Quadrature of the impact-space functional for a given state path.

    j_interior holds the pre-jump path at every node (node n is the left
    limit at T); j_terminal is the post-block terminal state.  Trapezoid
    rule on the grid; the alpha grid must coincide.
    """
    if (alpha.grid.t0, alpha.grid.t1, alpha.grid.n) != (grid.t0, grid.t1, grid.n):
        raise ValueError("alpha path grid does not match the state-path grid")
    j_interior = np.asarray(j_interior, dtype=float)
    if j_interior.shape != (grid.n + 1,):
        raise ValueError(f"need {grid.n + 1} interior states, got {j_interior.shape}")

    lam, c, tau = actual.lam, actual.c, actual.tau
    adjusted = alpha.alpha - tau * alpha.drift
    integrand = adjusted * j_interior - lam * np.abs(j_interior) ** (1.0 + c)
    integral = float(np.trapz(integrand, dx=grid.dt)) / tau
    terminal = alpha.alpha[-1] * j_terminal - lam * abs(j_terminal) ** (1.0 + c) / (1.0 + c)
    raw = integral + terminal

    # alpha capture of the trades realizing the path under the actual decay,
    # booked at fill completion as in simulate_pnl
    rates = rates_matching_states(actual, grid, j_interior)
    capture = float(np.sum(rates * alpha.alpha[1:]) * grid.dt)
    capture += alpha.alpha[0] * j_interior[0]
    capture += alpha.alpha[-1] * (j_terminal - j_interior[-1])

    return PnlReport(
        raw=raw,
        normalized=raw / lam,
        alpha_capture=capture,
        impact_paid=capture - raw,
        n_paths=0,
        stderr=0.0,
    )


def value_plan(actual: AfsParams, plan: OptimalPlan, alpha: AlphaPath) -> PnlReport:
    """Convenience wrapper: price an OptimalPlan's state path under actual params."""
    return value_impact_space(actual, plan.grid, plan.interior_states(), float(plan.j_star[-1]), alpha)


# ---------------------------------------------------------------------------
# Closed forms, constant alpha.  Values are per sigma*adv over the horizon.

def _check_exponent(name: str, c: float) -> None:
    if not 0.0 < c <= 1.0:
        raise ValueError(f"{name} must lie in (0, 1], got {c}")


def misspec_value_constant_alpha(
    actual_c: float,
    believed_c: float,
    g_actual: float,
    g_believed: float,
    sharpe: float,
    horizon: float,
    tau: float,
) -> float:
    """Expected P&L of trading a constant alpha with exponent believed_c
    (and the prefactor fitted to it) when impact actually has actual_c.

    Decay is assumed correctly estimated; only the power law is wrong.
    """
    _check_exponent("actual_c", actual_c)
    _check_exponent("believed_c", believed_c)
    if g_actual <= 0.0 or g_believed <= 0.0:
        raise ValueError("prefactors must be positive")
    c, ch = actual_c, believed_c
    x = abs(sharpe)
    span = horizon / tau
    gain = x ** (1.0 + 1.0 / ch) * (span / (1.0 + ch) ** (1.0 / ch) + 1.0)
    cost = (
        g_actual
        * g_believed ** (-c / ch)
        * x ** ((1.0 + c) / ch)
        * (span / (1.0 + ch) ** ((1.0 + c) / ch) + 1.0 / (1.0 + c))
    )
    return g_believed ** (-1.0 / ch) * (gain - cost)


def optimal_value_constant_alpha(c: float, g: float, sharpe: float, horizon: float, tau: float) -> float:
    """Expected P&L of the correctly specified policy on a constant alpha."""
    _check_exponent("c", c)
    x = abs(sharpe)
    return (
        g ** (-1.0 / c)
        * x ** (1.0 + 1.0 / c)
        * (c / (1.0 + c))
        * (horizon / (tau * (1.0 + c) ** (1.0 / c)) + 1.0)
    )


# ---------------------------------------------------------------------------
# Closed forms, stationary OU alpha with a misspecified decay timescale.
# Values are steady-state rates per sigma*adv per day; `moment` is
# E|alpha/sigma|^{1+1/c} under the stationary law (see alpha.stationary_abs_moment).

def misspec_value_decay_ou(
    actual_tau: float,
    believed_tau: float,
    theta: float,
    c: float,
    g_actual: float,
    g_believed: float,
    moment: float,
) -> float:
    """Steady-state P&L rate when the decay timescale is believed_tau but
    impact actually relaxes on actual_tau.  The exponent is correct."""
    _check_exponent("c", c)
    if min(actual_tau, believed_tau, theta) <= 0.0:
        raise ValueError("timescales must be positive")
    boost = (1.0 + believed_tau / theta) / (g_believed * (1.0 + c))
    bracket = (1.0 + actual_tau / theta) - g_actual * boost
    return boost ** (1.0 / c) * bracket * moment / actual_tau


def optimal_value_decay_ou(tau: float, theta: float, c: float, g: float, moment: float) -> float:
    """Steady-state P&L rate of the correctly specified policy."""
    _check_exponent("c", c)
    return (
        c
        * (1.0 + tau / theta) ** (1.0 + 1.0 / c)
        / (g ** (1.0 / c) * (1.0 + c) ** (1.0 + 1.0 / c))
        * moment
        / tau
    )


def decay_profit_ratio(rho: float, c: float) -> float:
    """Misspecified/optimal profit ratio at equal prefactors, as a function
    of rho = (1 + believed_tau/theta) / (1 + actual_tau/theta).

    Crosses zero at rho = 1 + c: over-estimating decay turns profits into
    losses once (1 + believed_tau/theta) exceeds (1+c)(1 + actual_tau/theta).
    """
    _check_exponent("c", c)
    return rho ** (1.0 / c) * (1.0 + c - rho) / c


# ---------------------------------------------------------------------------
# Monte Carlo

def _chunk_values(
    actual: AfsParams,
    grid: TimeGrid,
    a_paths: np.ndarray,
    j_int: np.ndarray,
    j_term: np.ndarray,
    xi: np.ndarray | None,
    accounting: str,
    theta: float | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value a chunk of paths.  Rows are paths; returns (y, capture, cost)."""
    dt = grid.dt
    lam, c, tau = actual.lam, actual.c, actual.tau
    decay = math.exp(-dt / tau)

    # trades that realize the planned state path under the actual decay
    rates = (j_int[:, 1:] - decay * j_int[:, :-1]) / (tau * (1.0 - decay))
    init_block = j_int[:, 0]
    term_block = j_term - j_int[:, -1]

    # alpha is booked at fill completion, the exact discrete counterpart of
    # position-times-price-move accounting.  A diffusive signal co-moves
    # with the trades that track it; end-of-step booking is what carries
    # that covariation, and any earlier evaluation drops it.
    capture = np.sum(rates * a_paths[:, 1:], axis=1) * dt
    capture += a_paths[:, 0] * init_block + a_paths[:, -1] * term_block

    impact = lam * np.sign(j_int) * np.abs(j_int) ** c
    cost = np.sum(0.5 * (impact[:, 1:] + impact[:, :-1]) * rates, axis=1) * dt
    pot = lam / (1.0 + c)
    cost += pot * np.abs(j_int[:, 0]) ** (1.0 + c)  # from J = 0
    cost += pot * (np.abs(j_term) ** (1.0 + c) - np.abs(j_int[:, -1]) ** (1.0 + c))

    # position path excluding the terminal block (held for zero time)
    q = np.empty_like(j_int)
    q[:, 0] = init_block
    np.cumsum(rates, axis=1, out=q[:, 1:])
    q[:, 1:] *= dt
    q[:, 1:] += init_block[:, None]

    noise = 0.0
    if xi is not None:
        noise = actual.sigma * math.sqrt(dt) * np.sum(q[:, :-1] * xi, axis=1)

    if accounting == "capture":
        y = capture - cost + noise
    else:
        # price drift consistent with the alpha: alpha/theta for OU, zero
        # for a constant alpha realized after the horizon
        if theta is None:
            drift = np.zeros(len(a_paths))
        else:
            qmu = q * a_paths / theta
            drift = np.trapz(qmu, dx=dt, axis=1)
        y = drift + noise + a_paths[:, -1] * (q[:, -1] + term_block) - cost
    return y, capture, cost


def simulate_pnl(
    actual: AfsParams,
    plan: OptimalPlan,
    alpha_model: AlphaModel,
    n_paths: int,
    seed: int,
    *,
    price_noise: bool = True,
    accounting: str = "capture",
    stationary_start: bool = False,
    threads: int = 1,
    chunk_size: int = 1024,
) -> PnlReport:
    """Monte Carlo of the plan's P&L under the actual parameters.

    For stochastic alphas the believed-optimal plan is rebuilt path by
    path from the realized signal; for constant or sampled alphas the given
    plan is priced as is and paths differ only through price noise.  Per
    path the stream is derived from (seed, path_index) and consumed in the
    fixed order [stationary start draw | OU increments | price noise], so
    results do not depend on chunking or thread count; aggregation is a
    single pairwise sum over the path array.

    accounting="capture" books int alpha dQ directly (alpha realized after
    T); "diffusion" is the stress variant carrying the alpha as price drift
    plus a terminal mark.  Both have the same expectation.
    """
    if accounting not in ("capture", "diffusion"):
        raise ValueError(f"unknown accounting {accounting!r}")
    if not isinstance(n_paths, (int, np.integer)) or n_paths < 1:
        raise ValueError(f"n_paths must be a positive integer, got {n_paths}")
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {seed!r}")

    grid = plan.grid
    n = grid.n
    believed = plan.spec.believed
    stochastic = alpha_model.kind == "ou"
    theta = alpha_model.theta if stochastic else None

    fixed_alpha = None
    fixed_j_int = None
    fixed_j_term = None
    if not stochastic:
        fixed_alpha = sample_alpha(alpha_model, grid).alpha[None, :]
        fixed_j_int = plan.interior_states()[None, :]
        fixed_j_term = np.array([float(plan.j_star[-1])])
        if stationary_start:
            raise ValueError("stationary_start only applies to the ou kind")

    if stochastic:
        phi, eps_std = ou_step_params(alpha_model, grid.dt)
        lam_b, inv_c = believed.lam, 1.0 / believed.c
        adj = (1.0 + believed.tau / alpha_model.theta) / (1.0 + believed.c)
        stationary_std = alpha_model.vol * math.sqrt(alpha_model.theta / 2.0)

    y = np.empty(n_paths)
    cap = np.empty(n_paths)
    cost = np.empty(n_paths)

    def run_chunk(lo: int, hi: int) -> None:
        m = hi - lo
        xi = np.empty((m, n)) if price_noise else None
        if stochastic:
            drive = np.empty((m, n + 1))
            for row in range(m):
                rng = np.random.default_rng((seed, lo + row))
                a0 = alpha_model.alpha0
                if stationary_start:
                    a0 += stationary_std * rng.standard_normal()
                drive[row, 0] = a0
                drive[row, 1:] = eps_std * rng.standard_normal(n)
                if price_noise:
                    xi[row] = rng.standard_normal(n)
            a_paths = lfilter([1.0], [1.0, -phi], drive, axis=1)
            # believed-optimal targets, pointwise in the realized alpha
            i_int = adj * a_paths
            j_int = np.sign(i_int) * (np.abs(i_int) / lam_b) ** inv_c
            a_T = a_paths[:, -1]
            j_term = np.sign(a_T) * (np.abs(a_T) / lam_b) ** inv_c
        else:
            for row in range(m):
                rng = np.random.default_rng((seed, lo + row))
                if price_noise:
                    xi[row] = rng.standard_normal(n)
            a_paths = np.broadcast_to(fixed_alpha, (m, n + 1))
            j_int = np.broadcast_to(fixed_j_int, (m, n + 1))
            j_term = np.broadcast_to(fixed_j_term, (m,))
        y[lo:hi], cap[lo:hi], cost[lo:hi] = _chunk_values(
            actual, grid, a_paths, j_int, j_term, xi, accounting, theta
        )

    spans = [(lo, min(lo + chunk_size, n_paths)) for lo in range(0, n_paths, chunk_size)]
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda s: run_chunk(*s), spans))
    else:
        for span in spans:
            run_chunk(*span)

    raw = float(np.sum(y)) / n_paths
    stderr = float(np.std(y, ddof=1)) / math.sqrt(n_paths) if n_paths > 1 else 0.0
    return PnlReport(
        raw=raw,
        normalized=raw / actual.lam,
        alpha_capture=float(np.sum(cap)) / n_paths,
        impact_paid=float(np.sum(cost)) / n_paths,
        n_paths=int(n_paths),
        stderr=stderr,
    )


def refine_until_stable(value_at, start_n: int = 256, rtol: float = 1e-6, max_n: int = 2**20) -> float:
    """Double the grid until successive values agree within rtol.

    value_at(n) evaluates the quantity on an n-step grid.  Returns the
    finest value; raises if max_n is hit without convergence.
    """
    n = start_n
    prev = value_at(n)
    while n < max_n:
        n *= 2
        cur = value_at(n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise RuntimeError(f"quadrature did not stabilize below n={max_n}")
