"""Subcommand CLI: estimate, project, aggregate, validate, dfif, repair.

Every flag can also be set in a TOML config file (top-level keys apply to
all subcommands, section keys to one); explicit command-line flags win.
All randomness flows from --seed, and repeated runs with equal inputs and
seed produce byte-identical outputs. Exit codes: 0 success, 1 usage error,
2 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import analytics, estimation, fileio, simulate
from .domain import DEFAULT_CORRELATION_PARAMS
from .errors import DataValidationError, ForecastError
from .phase_model import mean_standardized_errors
from .psd import repair_matrix

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_levels(text: str) -> tuple[float, ...]:
    try:
        levels = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise DataValidationError(f"invalid --levels value {text!r}") from None
    if not levels or any(not (0.0 < lvl < 1.0) for lvl in levels):
        raise DataValidationError(f"interval levels must lie in (0, 1), got {text!r}")
    return levels


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError:
        raise DataValidationError(f"{path}: config file not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise DataValidationError(f"{path}: invalid TOML: {exc}") from None


class _Settings:
    """Flag resolution: CLI value, else config [section]/top level, else default."""

    def __init__(self, args: argparse.Namespace, config: dict, section: str) -> None:
        self._args = vars(args)
        self._section = config.get(section, {})
        self._top = config

    def get(self, key: str, default=None, required: bool = False):
        value = self._args.get(key)
        if value is None:
            value = self._section.get(key)
        if value is None:
            top = self._top.get(key)
            value = top if not isinstance(top, dict) else None
        if value is None:
            value = default
        if value is None and required:
            raise DataValidationError(f"missing required setting '{key}' (flag --{key.replace('_', '-')})")
        return value


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file; flags override its values")
    parser.add_argument("--strict", action="store_true", default=None, help="escalate warnings to errors")
    parser.add_argument("--threads", type=int, help="cap parallelism (default 1)")
    parser.add_argument("--log-level", dest="log_level", help="logging level (default WARNING)")
    parser.add_argument("--stride", type=int, help="period length in years (default 5)")


def build_parser() -> _Parser:
    parser = _Parser(prog="tfrcast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[], help="fit correlation-model parameters from a TFR panel")
    p.add_argument("--tfr", help="tfr.csv (country, period_start, tfr)")
    p.add_argument("--phases", help="phases.csv (country, period_start, phase)")
    p.add_argument("--theta", help="theta.csv posterior draws")
    p.add_argument("--covariates", help="covariates.csv pairwise covariates")
    p.add_argument("--out-params", dest="out_params", help="output params.csv (default params.csv)")
    p.add_argument("--out-profile", dest="out_profile", help="output kappa_profile.csv")
    p.add_argument("--kappa-min", dest="kappa_min", type=float)
    p.add_argument("--kappa-max", dest="kappa_max", type=float)
    p.add_argument("--kappa-step", dest="kappa_step", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    _add_common(p)

    p = sub.add_parser("project", help="simulate joint TFR trajectories and per-country intervals")
    p.add_argument("--tfr")
    p.add_argument("--phases")
    p.add_argument("--theta")
    p.add_argument("--covariates")
    p.add_argument("--params", help="params.csv (default: shipped estimates)")
    p.add_argument("--mode", choices=simulate.MODES)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--levels", help="comma-separated interval levels, e.g. 0.8,0.9,0.95")
    p.add_argument("--floor", type=float, help="minimum simulated TFR")
    p.add_argument("--out-ensemble", dest="out_ensemble")
    p.add_argument("--out-intervals", dest="out_intervals")
    _add_common(p)

    p = sub.add_parser("aggregate", help="regional weighted-average intervals from an ensemble")
    p.add_argument("--ensemble", help="ensemble.csv from 'project'")
    p.add_argument("--weights", help="weights.csv (region, country, weight)")
    p.add_argument("--levels")
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("validate", help="coverage of observed values against intervals")
    p.add_argument("--intervals", help="intervals.csv from 'aggregate'")
    p.add_argument("--observed", help="observed.csv (region, period_start, tfr)")
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("dfif", help="dependence/independence variance factors per region")
    p.add_argument("--weights")
    p.add_argument("--covariates")
    p.add_argument("--params")
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("repair", help="repair a correlation matrix to PSD with unit diagonal")
    p.add_argument("--matrix", help="matrix.csv (country, <code>...)")
    p.add_argument("--out")
    _add_common(p)

    return parser


def _cmd_estimate(cfg: _Settings) -> int:
    strict = bool(cfg.get("strict", False))
    stride = int(cfg.get("stride", 5))
    inputs = fileio.load_inputs(
        fileio.InputPaths(
            tfr=cfg.get("tfr", required=True),
            phases=cfg.get("phases", required=True),
            covariates=cfg.get("covariates", required=True),
            theta=cfg.get("theta", required=True),
        ),
        strict=strict,
        stride=stride,
    )
    errors = mean_standardized_errors(inputs.panel, inputs.thetas)
    kappa_min = float(cfg.get("kappa_min", 0.5))
    kappa_max = float(cfg.get("kappa_max", 9.0))
    kappa_step = float(cfg.get("kappa_step", 0.1))
    if kappa_step <= 0 or kappa_max < kappa_min:
        raise DataValidationError("kappa grid requires kappa_step > 0 and kappa_max >= kappa_min")
    n_steps = int(round((kappa_max - kappa_min) / kappa_step))
    grid = tuple(round(kappa_min + kappa_step * i, 10) for i in range(n_steps + 1))
    fit = estimation.kappa_grid_search(
        errors,
        inputs.panel,
        inputs.covariates,
        grid=grid,
        max_iter=int(cfg.get("max_iter", estimation.DEFAULT_MAX_ITER)),
        threads=int(cfg.get("threads", 1)),
    )
    out_params = cfg.get("out_params", "params.csv")
    out_profile = cfg.get("out_profile", "kappa_profile.csv")
    fileio.save_params(fit.params, out_params)
    fileio.save_kappa_profile(fit.kappa_profile, out_profile)
    n_converged = sum(1 for low, high in fit.diagnostics.values() if low.converged and high.converged)
    print(f"best kappa: {fit.params.kappa}")
    print(f"log pseudo-likelihood: {fit.loglik}")
    print(f"converged grid points: {n_converged}/{len(fit.kappa_profile)}")
    print(f"wrote {out_params} and {out_profile}")
    return 0


def _cmd_project(cfg: _Settings) -> int:
    strict = bool(cfg.get("strict", False))
    stride = int(cfg.get("stride", 5))
    inputs = fileio.load_inputs(
        fileio.InputPaths(
            tfr=cfg.get("tfr", required=True),
            phases=cfg.get("phases", required=True),
            covariates=cfg.get("covariates", required=True),
            theta=cfg.get("theta", required=True),
        ),
        strict=strict,
        stride=stride,
    )
    params_path = cfg.get("params")
    params = fileio.load_params(params_path) if params_path else DEFAULT_CORRELATION_PARAMS
    if not params_path:
        logger.warning("no --params given; using the shipped default estimates")
    levels = _parse_levels(str(cfg.get("levels", "0.8,0.9,0.95")))
    ensemble = simulate.project(
        inputs.panel,
        inputs.thetas,
        params,
        inputs.covariates,
        horizon=int(cfg.get("horizon", 4)),
        n_trajectories=int(cfg.get("trajectories", 1000)),
        seed=int(cfg.get("seed", 0)),
        mode=str(cfg.get("mode", "correlated")),
        tfr_floor=float(cfg.get("floor", simulate.DEFAULT_TFR_FLOOR)),
        strict=strict,
    )
    out_ensemble = cfg.get("out_ensemble", "ensemble.csv")
    out_intervals = cfg.get("out_intervals", "country_intervals.csv")
    fileio.save_ensemble(ensemble, out_ensemble)
    rows = []
    for country in ensemble.countries:
        for period in ensemble.periods:
            for level, lo, median, hi in simulate.interval_summary(ensemble.samples(country, period), levels):
                rows.append((country, period, level, lo, median, hi))
    fileio.save_interval_rows(rows, out_intervals, key_column="country")
    print(f"projected {ensemble.n_trajectories} trajectories x {len(ensemble.countries)} countries "
          f"x {ensemble.horizon} periods ({ensemble.mode} mode, seed {ensemble.seed})")
    print(f"wrote {out_ensemble} and {out_intervals}")
    return 0


def _cmd_aggregate(cfg: _Settings) -> int:
    ensemble = fileio.load_ensemble(cfg.get("ensemble", required=True))
    regions = fileio.load_weights(cfg.get("weights", required=True))
    levels = _parse_levels(str(cfg.get("levels", "0.8,0.9,0.95")))
    rows = []
    for weights in regions:
        samples = simulate.regional_aggregate(ensemble, weights)
        for pi, period in enumerate(ensemble.periods):
            for level, lo, median, hi in simulate.interval_summary(samples[:, pi], levels):
                rows.append((weights.region, period, level, lo, median, hi))
    out = cfg.get("out", "regional_intervals.csv")
    fileio.save_interval_rows(rows, out, key_column="region")
    print(f"aggregated {len(regions)} region(s) over {len(ensemble.periods)} period(s)")
    print(f"wrote {out}")
    return 0


def _cmd_validate(cfg: _Settings) -> int:
    intervals = fileio.load_intervals(cfg.get("intervals", required=True))
    observed = fileio.load_observed(cfg.get("observed", required=True))
    result = analytics.coverage(observed, intervals)
    out = cfg.get("out", "coverage.csv")
    fileio.save_coverage(result, out)
    for level in result.levels:
        print(f"coverage at {level:.0%} level: {result.overall[level]:.3f} (n = {result.n_observations})")
    print(f"wrote {out}")
    return 0


def _cmd_dfif(cfg: _Settings) -> int:
    strict = bool(cfg.get("strict", False))
    regions = fileio.load_weights(cfg.get("weights", required=True))
    covariates = fileio.load_covariates(cfg.get("covariates", required=True), strict=strict)
    params_path = cfg.get("params")
    params = fileio.load_params(params_path) if params_path else DEFAULT_CORRELATION_PARAMS
    rows = analytics.variance_report(regions, covariates, params)
    out = cfg.get("out", "variance_report.csv")
    fileio.save_variance_report(rows, out)
    for row in rows:
        flag = " (repaired)" if row.repaired else ""
        print(f"{row.region}: DF/IF = {row.df_if:.2f}, max proportion = {row.max_proportion:.2f}, "
              f"N = {row.n_countries}{flag}")
    print(f"wrote {out}")
    return 0


def _cmd_repair(cfg: _Settings) -> int:
    countries, values = fileio.load_matrix(cfg.get("matrix", required=True))
    fixed, info = repair_matrix(values)
    out = cfg.get("out", "repaired_matrix.csv")
    fileio.save_matrix(countries, fixed, out)
    print(f"repaired: {'yes' if info.repaired else 'no (already PSD)'}")
    print(f"min eigenvalue before: {info.min_eigenvalue:.6g}")
    print(f"max entrywise change: {info.max_abs_change:.6g}")
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "project": _cmd_project,
    "aggregate": _cmd_aggregate,
    "validate": _cmd_validate,
    "dfif": _cmd_dfif,
    "repair": _cmd_repair,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        config = _load_config(args.config)
        cfg = _Settings(args, config, args.command)
        logging.basicConfig(level=str(cfg.get("log_level", "WARNING")).upper())
        return _COMMANDS[args.command](cfg)
    except ForecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
