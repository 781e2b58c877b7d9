"""Command-line front end.

Units at the boundary are trader-facing: alphas in units of daily vol
(--alpha0 2 means a 2-sigma signal), order sizes as fractions of daily
volume, times in days.  Internals run in raw units; raw P&L is in
price-times-shares units and equals sigma*adv times the normalized
figures when both defaults are left at 1.

Every command with an --out file also writes <out>.config.json echoing
the fully resolved flag set, so an artifact can always be regenerated.
All randomness flows from --seed; identical invocations give
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .alpha import AlphaModel, load_alpha_csv, sample_alpha, stationary_alpha_vol
from .calibration import (
    CalibGrid,
    bootstrap_c,
    fit_loglog,
    grid_fit,
    orders_from_csv,
    orders_to_csv,
    synth_metaorders,
)
from .core import AfsParams, TimeGrid
from .pnl import simulate_pnl
from .policy import (
    PolicySpec,
    implied_alpha,
    optimal_impact,
    order_size_from_alpha,
    plan_to_csv,
    turnover_factor,
)
from .sensitivity import (
    criticals_to_csv,
    curves_to_csv,
    g_curve_concavity,
    g_curve_decay,
    scan_concavity,
    scan_decay,
    scan_to_csv,
    statistical_vs_pnl,
)

__all__ = ["main"]


def parse_range(text: str) -> np.ndarray:
    """Lattice from 'min:max:step' (endpoint-inclusive) or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    if len(parts) != 3:
        raise ValueError(f"range must be a value or min:max:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0.0:
        raise ValueError(f"range step must be positive, got {step}")
    if hi < lo:
        raise ValueError(f"range max must be >= min, got {text!r}")
    n = int(round((hi - lo) / step))
    values = lo + step * np.arange(n + 1)
    tol = 1e-9 * max(1.0, abs(hi))
    values = values[values <= hi + tol]
    if abs(values[-1] - hi) <= tol:
        values[-1] = hi
    return values


def _echo_config(out: str, args: argparse.Namespace) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    with open(out + ".config.json", "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _actual_params(args: argparse.Namespace) -> AfsParams:
    return AfsParams(c=args.c, tau=args.tau, sigma=args.sigma, adv=args.adv, g=args.g)


def _believed_params(args: argparse.Namespace) -> AfsParams:
    return AfsParams(
        c=args.chat if args.chat is not None else args.c,
        tau=args.tauhat if args.tauhat is not None else args.tau,
        sigma=args.sigma,
        adv=args.adv,
        g=args.ghat if args.ghat is not None else args.g,
    )


def _alpha_model(args: argparse.Namespace, sigma: float) -> AlphaModel:
    if args.alpha_kind == "constant":
        return AlphaModel.constant(args.alpha0 * sigma)
    if args.alpha_kind == "ou":
        vol = args.sigma_alpha * stationary_alpha_vol(args.theta, sigma)
        return AlphaModel.ou(args.alpha0 * sigma, args.theta, vol)
    if args.alpha_csv is None:
        raise ValueError("--alpha-kind csv needs --alpha-csv")
    return load_alpha_csv(args.alpha_csv)


def _grid_for(args: argparse.Namespace, model: AlphaModel) -> TimeGrid:
    if model.kind == "sampled":
        return model.samples[0]
    return TimeGrid(0.0, args.T, args.steps)


def _g_curve(args: argparse.Namespace, axis: str):
    """Constant --g, or the calibrated curve when --calib is given."""
    if args.calib is None:
        return args.g
    grid = CalibGrid.from_csv(args.calib)
    if axis == "c":
        return g_curve_concavity(grid, args.tau)
    return g_curve_decay(grid, args.c)


def _criticals_path(out: str) -> str:
    stem, ext = os.path.splitext(out)
    return f"{stem}_critical{ext or '.csv'}"


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=float, default=0.5, help="impact concavity exponent in (0,1]")
    p.add_argument("--tau", type=float, default=0.2, help="impact decay timescale, days")
    p.add_argument("--sigma", type=float, default=1.0, help="daily price vol, price units")
    p.add_argument("--adv", type=float, default=1.0, help="daily volume, shares")
    p.add_argument("--g", type=float, default=1.0, help="impact prefactor at ADV participation")


def _add_believed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chat", type=float, default=None, help="believed exponent (default: --c)")
    p.add_argument("--tauhat", type=float, default=None, help="believed decay (default: --tau)")
    p.add_argument("--ghat", type=float, default=None, help="believed prefactor (default: --g)")


def _add_alpha_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--alpha-kind", choices=("constant", "ou", "csv"), default="constant", help="signal model"
    )
    p.add_argument("--alpha0", type=float, default=1.0, help="initial alpha in sigma units")
    p.add_argument("--theta", type=float, default=1.0, help="alpha mean-reversion time, days")
    p.add_argument(
        "--sigma-alpha",
        type=float,
        default=1.0,
        help="stationary alpha std in sigma units (ou kind); 1 is a unit-sharpe signal",
    )
    p.add_argument("--alpha-csv", default=None, help="sampled signal CSV with columns t,alpha,drift")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=float, default=1.0, help="trading horizon, days")
    p.add_argument("--steps", type=int, default=1000, help="time steps over the horizon")


def _cmd_optimize(args: argparse.Namespace) -> int:
    believed = _actual_params(args)
    model = _alpha_model(args, believed.sigma)
    grid = _grid_for(args, model)
    spec = PolicySpec(believed=believed, horizon=grid.t1 - grid.t0)
    path = sample_alpha(model, grid, args.seed, stationary_start=args.stationary_start)
    plan = optimal_impact(spec, path)
    plan_to_csv(plan, path, args.out)
    _echo_config(args.out, args)
    print(
        f"optimize: wrote {args.out} ({grid.n} steps, "
        f"Q_T/V={plan.q_star[-1] / believed.adv:.6g}, "
        f"peak |I*|/sigma={np.max(np.abs(plan.i_star)) / believed.sigma:.6g})"
    )
    return 0


def _cmd_backtest(args: argparse.Namespace) -> int:
    actual = _actual_params(args)
    believed = _believed_params(args)
    model = _alpha_model(args, actual.sigma)
    grid = _grid_for(args, model)
    spec = PolicySpec(believed=believed, horizon=grid.t1 - grid.t0)
    # the plan skeleton: for the ou kind targets are rebuilt per path, so
    # only its grid and believed params matter
    skeleton = AlphaModel.constant(model.alpha0) if model.kind == "ou" else model
    plan = optimal_impact(spec, sample_alpha(skeleton, grid))
    report = simulate_pnl(
        actual,
        plan,
        model,
        args.paths,
        args.seed,
        price_noise=not args.no_noise,
        accounting=args.accounting,
        stationary_start=args.stationary_start,
        threads=args.threads,
    )
    if args.out:
        if args.format == "json":
            report.write_json(args.out)
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write("raw,normalized,alpha_capture,impact_paid,n_paths,stderr\n")
                fh.write(
                    f"{report.raw:.12g},{report.normalized:.12g},{report.alpha_capture:.12g},"
                    f"{report.impact_paid:.12g},{report.n_paths},{report.stderr:.12g}\n"
                )
        _echo_config(args.out, args)
    print(
        f"backtest: raw={report.raw:.6g} normalized={report.normalized:.6g} "
        f"stderr={report.stderr:.3g} paths={report.n_paths}"
    )
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    params = _actual_params(args)
    orders = synth_metaorders(
        params,
        args.n,
        args.seed,
        size_bounds=(args.size_min, args.size_max),
        duration_bounds=(args.dur_min, args.dur_max),
        fills_bounds=(args.fills_min, args.fills_max),
        noise_vol=args.noise_vol,
        alpha_leak=args.alpha_leak,
    )
    orders_to_csv(orders, args.out)
    _echo_config(args.out, args)
    n_fills = sum(len(o.fills) for o in orders)
    gross = sum(abs(o.signed_frac) for o in orders)
    print(f"synth: wrote {args.out} ({len(orders)} orders, {n_fills} fills, gross |Q|/V={gross:.4g})")
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    orders = orders_from_csv(args.orders, args.adv)
    c_values = parse_range(args.chat)
    tau_values = parse_range(args.tauhat)
    calib = grid_fit(orders, c_values, tau_values, sigma=args.sigma, adv=args.adv)
    calib.to_csv(args.out)
    _echo_config(args.out, args)
    c_star, tau_star = calib.argmax_cell()
    i = int(np.argmin(np.abs(calib.c_values - c_star)))
    j = int(np.argmin(np.abs(calib.tau_values - tau_star)))
    summary = (
        f"calibrate: argmax (c={c_star:.4g}, tau={tau_star:.4g}) "
        f"R2={calib.r2[i, j]:.6g} g={calib.g[i, j]:.6g}"
    )
    if args.loglog_out:
        fit = fit_loglog(orders, n_bins=args.loglog_bins)
        with open(args.loglog_out, "w", newline="") as fh:
            fh.write("size_frac,mean_signed_return,n_orders,fit_value\n")
            for s, m, k in zip(fit.bin_sizes, fit.bin_means, fit.bin_counts):
                fitted = math.exp(fit.intercept + fit.slope * math.log(s))
                fh.write(f"{s:.12g},{m:.12g},{int(k)},{fitted:.12g}\n")
        summary += f" loglog_slope={fit.slope:.4g}"
    if args.bootstrap:
        boot = bootstrap_c(
            orders,
            args.bootstrap,
            args.seed,
            method=args.bootstrap_method,
            n_bins=args.loglog_bins,
            c_values=c_values,
            tau_hat=tau_star,
            sigma=args.sigma,
            adv=args.adv,
        )
        summary += f" c_hat={boot.c_hat:.4g}+/-{boot.std:.4g} [{boot.q_lo:.4g}, {boot.q_hi:.4g}]"
    print(summary)
    return 0


def _cmd_scan_concavity(args: argparse.Namespace) -> int:
    result = scan_concavity(
        args.c,
        _g_curve(args, "c"),
        parse_range(args.sharpe),
        parse_range(args.chat),
        args.T,
        args.tau,
    )
    scan_to_csv(result, args.out)
    crit_path = args.criticals_out or _criticals_path(args.out)
    criticals_to_csv(result, crit_path)
    _echo_config(args.out, args)
    lo, hi = result.critical[0], result.critical[-1]
    print(
        f"scan-concavity: wrote {args.out}; c_min(sharpe={result.axis2[0]:.3g})={lo:.6g}"
        + (f" .. c_min(sharpe={result.axis2[-1]:.3g})={hi:.6g}" if len(result.axis2) > 1 else "")
    )
    return 0


def _cmd_scan_decay(args: argparse.Namespace) -> int:
    result = scan_decay(
        args.tau,
        parse_range(args.theta),
        parse_range(args.tauhat),
        args.c,
        _g_curve(args, "tau"),
    )
    scan_to_csv(result, args.out)
    crit_path = args.criticals_out or _criticals_path(args.out)
    criticals_to_csv(result, crit_path)
    _echo_config(args.out, args)
    lo, hi = result.critical[0], result.critical[-1]
    print(
        f"scan-decay: wrote {args.out}; tau_max(theta={result.axis2[0]:.3g})={lo:.6g}"
        + (f" .. tau_max(theta={result.axis2[-1]:.3g})={hi:.6g}" if len(result.axis2) > 1 else "")
    )
    return 0


def _cmd_compare_fig1(args: argparse.Namespace) -> int:
    calib = CalibGrid.from_csv(args.calib)
    curves = statistical_vs_pnl(
        calib,
        args.c,
        args.sharpe,
        tau=args.tau,
        horizon=args.T,
        c_std=args.c_std,
    )
    curves_to_csv(curves, args.out)
    _echo_config(args.out, args)
    peak = curves.c_hat[int(np.argmax(curves.r2_ratio))]
    losses = curves.c_hat[curves.u_ratio < 0.0]
    loss_note = f"U<0 for c_hat<={losses.max():.4g}" if losses.size else "no losses on lattice"
    print(f"compare-fig1: wrote {args.out}; R2 peak at c_hat={peak:.4g}, {loss_note}")
    return 0


def _cmd_tca(args: argparse.Namespace) -> int:
    believed = _actual_params(args)
    spec = PolicySpec(believed=believed, horizon=args.T)
    if args.order_frac is not None:
        sharpe = implied_alpha(spec, args.order_frac)
        order_frac = args.order_frac
    else:
        sharpe = args.sharpe
        order_frac = order_size_from_alpha(spec, sharpe)
    summary = f"tca: implied alpha/sigma = {sharpe:.4f} for Q/V = {order_frac:.4f} over T = {args.T:g}"
    if args.theta is not None:
        summary += f"; turnover factor vs constant alpha = {turnover_factor(args.c, args.tau, args.theta):.4f}"
    print(summary)
    if args.out:
        payload = {
            "alpha_over_sigma": sharpe,
            "order_frac": order_frac,
            "horizon": args.T,
            "c": args.c,
            "tau": args.tau,
            "g": args.g,
        }
        if args.theta is not None:
            payload["turnover_factor"] = turnover_factor(args.c, args.tau, args.theta)
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _echo_config(args.out, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afsopt",
        description="Optimal trading, calibration and misspecification analysis "
        "under concave transient price impact.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="compute the optimal impact/position plan for a signal")
    _add_model_flags(p)
    _add_alpha_flags(p)
    _add_grid_flags(p)
    p.add_argument("--seed", type=int, default=42, help="seed for sampled signals")
    p.add_argument("--stationary-start", action="store_true", help="draw alpha_0 from the stationary law")
    p.add_argument("--out", required=True, help="plan CSV (t,alpha,drift,i_star,j_star,q_star)")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("backtest", help="Monte Carlo P&L of a possibly misspecified plan")
    _add_model_flags(p)
    _add_believed_flags(p)
    _add_alpha_flags(p)
    _add_grid_flags(p)
    p.add_argument("--paths", type=int, default=10000, help="Monte Carlo paths")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1, help="worker threads for path chunks")
    p.add_argument(
        "--accounting",
        choices=("capture", "diffusion"),
        default="capture",
        help="book alpha against trades, or carry it as price drift plus a terminal mark",
    )
    p.add_argument("--no-noise", action="store_true", help="drop the zero-mean price-noise term")
    p.add_argument("--stationary-start", action="store_true", help="draw alpha_0 from the stationary law")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format for --out")
    p.add_argument("--out", default=None, help="P&L report file")
    p.set_defaults(func=_cmd_backtest)

    p = sub.add_parser("synth", help="generate a synthetic TWAP meta-order panel")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True, help="number of meta-orders")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--noise-vol", type=float, default=1.0, help="fill-noise vol in sigma units")
    p.add_argument("--alpha-leak", type=float, default=0.0, help="drift in sigma units along the order sign")
    p.add_argument("--size-min", type=float, default=1e-4, help="smallest |Q|/V")
    p.add_argument("--size-max", type=float, default=1e-1, help="largest |Q|/V")
    p.add_argument("--dur-min", type=float, default=0.05, help="shortest duration, days")
    p.add_argument("--dur-max", type=float, default=0.75, help="longest duration, days")
    p.add_argument("--fills-min", type=int, default=3)
    p.add_argument("--fills-max", type=int, default=50)
    p.add_argument("--out", required=True, help="orders CSV (order_id,t,dt,dQ,dP)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("calibrate", help="fit (c, tau, g) to a meta-order panel")
    p.add_argument("--orders", required=True, help="orders CSV from synth or equivalent")
    p.add_argument("--sigma", type=float, default=1.0, help="daily price vol of the panel")
    p.add_argument("--adv", type=float, default=1.0, help="daily volume of the panel")
    p.add_argument("--chat", default="0.1:1.0:0.02", help="candidate exponents, min:max:step")
    p.add_argument("--tauhat", default="0.05:1.0:0.05", help="candidate decay times, min:max:step")
    p.add_argument("--loglog-out", default=None, help="binned size-return CSV for the concavity fit")
    p.add_argument("--loglog-bins", type=int, default=8)
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap resamples for the c estimate")
    p.add_argument("--bootstrap-method", choices=("loglog", "grid"), default="loglog")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="fit-surface CSV (c,tau,r2,g)")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("scan-concavity", help="P&L cost of a misspecified exponent, constant alpha")
    _add_model_flags(p)
    p.add_argument("--sharpe", default="1", help="alpha/sigma values, value or min:max:step")
    p.add_argument("--chat", default="0.3:1.0:0.01", help="believed exponents, min:max:step")
    p.add_argument("--T", type=float, default=1.0, help="trading horizon, days")
    p.add_argument("--calib", default=None, help="fit-surface CSV; believed g follows the fitted curve")
    p.add_argument("--criticals-out", default=None, help="zero-profit crossings CSV (default: derived)")
    p.add_argument("--out", required=True, help="scan CSV (axis1,axis2,ratio,u_misspec,u_opt)")
    p.set_defaults(func=_cmd_scan_concavity)

    p = sub.add_parser("scan-decay", help="P&L cost of a misspecified decay time, OU alpha")
    _add_model_flags(p)
    p.add_argument("--theta", default="1", help="alpha decay times, value or min:max:step")
    p.add_argument("--tauhat", default="0.05:2.0:0.05", help="believed impact decay, min:max:step")
    p.add_argument("--calib", default=None, help="fit-surface CSV; believed g follows the fitted curve")
    p.add_argument("--criticals-out", default=None, help="zero-profit crossings CSV (default: derived)")
    p.add_argument("--out", required=True, help="scan CSV (axis1,axis2,ratio,u_misspec,u_opt)")
    p.set_defaults(func=_cmd_scan_decay)

    p = sub.add_parser("compare-fig1", help="R^2 ratio vs profit ratio on the calibrated lattice")
    p.add_argument("--calib", required=True, help="fit-surface CSV from calibrate")
    p.add_argument("--c", type=float, required=True, help="actual exponent the panel was generated with")
    p.add_argument("--sharpe", type=float, default=1.0, help="alpha/sigma for the profit side")
    p.add_argument("--T", type=float, default=1.0, help="trading horizon, days")
    p.add_argument("--tau", type=float, default=None, help="decay column (default: grid argmax)")
    p.add_argument("--c-std", type=float, default=None, help="bootstrap std for the band edges")
    p.add_argument("--out", required=True, help="curves CSV (c_hat,r2_ratio,u_ratio,band_lo,band_hi)")
    p.set_defaults(func=_cmd_compare_fig1)

    p = sub.add_parser("tca", help="order sizing and implied alpha for square-root impact")
    _add_model_flags(p)
    p.add_argument("--T", type=float, default=1.0, help="trading horizon, days")
    p.add_argument("--theta", type=float, default=None, help="alpha decay time for the turnover factor")
    pick = p.add_mutually_exclusive_group(required=True)
    pick.add_argument("--order-frac", type=float, default=None, help="total order size as |Q|/V")
    pick.add_argument("--sharpe", type=float, default=None, help="alpha/sigma to size an order for")
    p.add_argument("--out", default=None, help="optional JSON summary")
    p.set_defaults(func=_cmd_tca)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
