"""CSV ingestion and emission for every pipeline artifact.

All files are headered, UTF-8, comma-separated, keyed by country code and
period start year. Writers emit rows in a canonical sorted order with
shortest round-tripping float representations, so identical inputs produce
byte-identical outputs and written files reload losslessly.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .analytics import CoverageResult, RegionVarianceRow
from .domain import (
    ConstantSigma,
    CorrelationParams,
    CountryId,
    CovariateStore,
    PairCovariates,
    Phase,
    PiecewiseSigma,
    PopulationWeights,
    PosteriorDraws,
    TFRPanel,
    TransitionParams,
    validate_panel,
)
from .errors import DataValidationError
from .simulate import TrajectoryEnsemble
from .validation import as_square_matrix

logger = logging.getLogger(__name__)


def _fmt(value: float) -> str:
    return repr(float(value))


def _open_rows(path: Path, required: Sequence[str]) -> list[tuple[int, dict[str, str]]]:
    """Read all rows with 1-based line numbers; verify the header."""
    try:
        handle = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataValidationError(f"{path}: file not found") from None
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise DataValidationError(f"{path}:1: missing required column(s): {', '.join(missing)}")
        rows = []
        for line, row in enumerate(reader, start=2):
            rows.append((line, row))
        return rows


def _cell(path: Path, line: int, row: Mapping[str, str], column: str) -> str:
    value = row.get(column)
    if value is None or value.strip() == "":
        raise DataValidationError(f"{path}:{line}: column '{column}': missing value")
    return value.strip()


def _parse_float(path: Path, line: int, row: Mapping[str, str], column: str) -> float:
    text = _cell(path, line, row, column)
    try:
        return float(text)
    except ValueError:
        raise DataValidationError(f"{path}:{line}: column '{column}': invalid number {text!r}") from None


def _parse_int(path: Path, line: int, row: Mapping[str, str], column: str) -> int:
    text = _cell(path, line, row, column)
    try:
        return int(text)
    except ValueError:
        raise DataValidationError(f"{path}:{line}: column '{column}': invalid integer {text!r}") from None


def _parse_indicator(path: Path, line: int, row: Mapping[str, str], column: str) -> int:
    value = _parse_int(path, line, row, column)
    if value not in (0, 1):
        raise DataValidationError(f"{path}:{line}: column '{column}': expected 0 or 1, got {value}")
    return value


# ---------------------------------------------------------------------------
# TFR panel: tfr.csv (country, period_start, tfr) + phases.csv (country,
# period_start, phase)
# ---------------------------------------------------------------------------

def load_panel(tfr_path: str | Path, phases_path: str | Path, stride: int = 5) -> TFRPanel:
    tfr_path, phases_path = Path(tfr_path), Path(phases_path)
    values: dict[tuple[CountryId, int], float] = {}
    for line, row in _open_rows(tfr_path, ("country", "period_start", "tfr")):
        key = (_cell(tfr_path, line, row, "country"), _parse_int(tfr_path, line, row, "period_start"))
        if key in values:
            raise DataValidationError(f"{tfr_path}:{line}: duplicate entry for {key}")
        values[key] = _parse_float(tfr_path, line, row, "tfr")
    phases: dict[tuple[CountryId, int], Phase] = {}
    for line, row in _open_rows(phases_path, ("country", "period_start", "phase")):
        key = (_cell(phases_path, line, row, "country"), _parse_int(phases_path, line, row, "period_start"))
        if key in phases:
            raise DataValidationError(f"{phases_path}:{line}: duplicate entry for {key}")
        try:
            phases[key] = Phase.parse(_cell(phases_path, line, row, "phase"))
        except DataValidationError as exc:
            raise DataValidationError(f"{phases_path}:{line}: column 'phase': {exc}") from None
    return TFRPanel(values, phases, stride=stride)


def save_panel(panel: TFRPanel, tfr_path: str | Path, phases_path: str | Path) -> None:
    with Path(tfr_path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["country", "period_start", "tfr"])
        for (country, period), value in sorted(panel.values.items()):
            writer.writerow([country, period, _fmt(value)])
    with Path(phases_path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["country", "period_start", "phase"])
        for (country, period), phase in sorted(panel.phases.items()):
            writer.writerow([country, period, phase.value])


# ---------------------------------------------------------------------------
# Pairwise covariates: covariates.csv (country_a, country_b, contig, comcol,
# same_region)
# ---------------------------------------------------------------------------

def load_covariates(path: str | Path, strict: bool = False) -> CovariateStore:
    path = Path(path)
    store = CovariateStore(strict=strict)
    for line, row in _open_rows(path, ("country_a", "country_b", "contig", "comcol", "same_region")):
        a = _cell(path, line, row, "country_a")
        b = _cell(path, line, row, "country_b")
        cov = PairCovariates(
            contig=_parse_indicator(path, line, row, "contig"),
            comcol=_parse_indicator(path, line, row, "comcol"),
            same_region=_parse_indicator(path, line, row, "same_region"),
        )
        try:
            store.add(a, b, cov)
        except DataValidationError as exc:
            raise DataValidationError(f"{path}:{line}: {exc}") from None
    return store


def save_covariates(store: CovariateStore, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["country_a", "country_b", "contig", "comcol", "same_region"])
        for (a, b), cov in store.items():
            writer.writerow([a, b, cov.contig, cov.comcol, cov.same_region])


# ---------------------------------------------------------------------------
# Posterior draws: theta.csv (country, sample_id, d_c, delta1..delta4,
# sigma_type, sigma1..sigma4)
# ---------------------------------------------------------------------------

_THETA_COLUMNS = ("country", "sample_id", "d_c", "delta1", "delta2", "delta3", "delta4", "sigma_type", "sigma1")


def load_thetas(path: str | Path) -> PosteriorDraws:
    path = Path(path)
    per_country: dict[CountryId, dict[int, TransitionParams]] = {}
    for line, row in _open_rows(path, _THETA_COLUMNS):
        country = _cell(path, line, row, "country")
        sample_id = _parse_int(path, line, row, "sample_id")
        sigma_type = _cell(path, line, row, "sigma_type").lower()
        if sigma_type == "constant":
            sigma = ConstantSigma(_parse_float(path, line, row, "sigma1"))
        elif sigma_type == "piecewise":
            sigma = PiecewiseSigma(
                tuple(_parse_float(path, line, row, f"sigma{i}") for i in (1, 2, 3, 4))
            )
        else:
            raise DataValidationError(
                f"{path}:{line}: column 'sigma_type': expected 'constant' or 'piecewise', got {sigma_type!r}"
            )
        try:
            theta = TransitionParams(
                d=_parse_float(path, line, row, "d_c"),
                deltas=tuple(_parse_float(path, line, row, f"delta{i}") for i in (1, 2, 3, 4)),
                sigma=sigma,
            )
        except ValueError as exc:
            raise DataValidationError(f"{path}:{line}: {exc}") from None
        samples = per_country.setdefault(country, {})
        if sample_id in samples:
            raise DataValidationError(f"{path}:{line}: duplicate sample_id {sample_id} for {country}")
        samples[sample_id] = theta
    draws = {c: tuple(theta for _, theta in sorted(samples.items())) for c, samples in per_country.items()}
    return PosteriorDraws(draws)


def save_thetas(draws: PosteriorDraws, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(_THETA_COLUMNS) + ["sigma2", "sigma3", "sigma4"])
        for country in draws.countries:
            for sample_id, theta in enumerate(draws.for_country(country)):
                if isinstance(theta.sigma, ConstantSigma):
                    sigma_type, sigmas = "constant", [_fmt(theta.sigma.value), "", "", ""]
                else:
                    sigma_type = "piecewise"
                    sigmas = [_fmt(v) for v in theta.sigma.knot_values()]
                writer.writerow(
                    [country, sample_id, _fmt(theta.d)]
                    + [_fmt(v) for v in theta.deltas]
                    + [sigma_type]
                    + sigmas
                )


# ---------------------------------------------------------------------------
# Population weights: weights.csv (region, country, weight)
# ---------------------------------------------------------------------------

def load_weights(path: str | Path) -> list[PopulationWeights]:
    path = Path(path)
    per_region: dict[str, dict[CountryId, float]] = {}
    for line, row in _open_rows(path, ("region", "country", "weight")):
        region = _cell(path, line, row, "region")
        country = _cell(path, line, row, "country")
        table = per_region.setdefault(region, {})
        if country in table:
            raise DataValidationError(f"{path}:{line}: duplicate weight for {country} in region {region!r}")
        table[country] = _parse_float(path, line, row, "weight")
    return [PopulationWeights(region, table) for region, table in sorted(per_region.items())]


def save_weights(regions: Sequence[PopulationWeights], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["region", "country", "weight"])
        for weights in sorted(regions, key=lambda w: w.region):
            for country in weights.countries:
                writer.writerow([weights.region, country, _fmt(weights.share(country))])


# ---------------------------------------------------------------------------
# Correlation-model parameters: params.csv (kappa, regime, beta0..beta3)
# ---------------------------------------------------------------------------

def load_params(path: str | Path) -> CorrelationParams:
    path = Path(path)
    betas: dict[str, tuple[float, float, float, float]] = {}
    kappas: set[float] = set()
    for line, row in _open_rows(path, ("kappa", "regime", "beta0", "beta1", "beta2", "beta3")):
        regime = _cell(path, line, row, "regime").lower()
        if regime not in ("low", "high"):
            raise DataValidationError(f"{path}:{line}: column 'regime': expected 'low' or 'high', got {regime!r}")
        if regime in betas:
            raise DataValidationError(f"{path}:{line}: duplicate row for regime {regime!r}")
        kappas.add(_parse_float(path, line, row, "kappa"))
        betas[regime] = tuple(_parse_float(path, line, row, f"beta{i}") for i in range(4))
    if set(betas) != {"low", "high"}:
        raise DataValidationError(f"{path}: need exactly one 'low' and one 'high' row")
    if len(kappas) != 1:
        raise DataValidationError(f"{path}: kappa differs between rows: {sorted(kappas)}")
    try:
        return CorrelationParams(kappas.pop(), betas["low"], betas["high"])
    except ValueError as exc:
        raise DataValidationError(f"{path}: {exc}") from None


def save_params(params: CorrelationParams, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kappa", "regime", "beta0", "beta1", "beta2", "beta3"])
        for regime, beta in (("low", params.beta_low), ("high", params.beta_high)):
            writer.writerow([_fmt(params.kappa), regime] + [_fmt(b) for b in beta])


def save_kappa_profile(profile: Iterable[tuple[float, float]], path: str | Path) -> None:
    """Two-column (kappa, loglik) table for external plotting."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kappa", "loglik"])
        for kappa, loglik in profile:
            writer.writerow([_fmt(kappa), _fmt(loglik)])


# ---------------------------------------------------------------------------
# Correlation matrices: matrix.csv (country, <code>, <code>, ...)
# ---------------------------------------------------------------------------

def load_matrix(path: str | Path) -> tuple[tuple[CountryId, ...], np.ndarray]:
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataValidationError(f"{path}: file not found") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}:1: empty matrix file") from None
        if not header or header[0] != "country":
            raise DataValidationError(f"{path}:1: first column must be 'country'")
        countries = tuple(header[1:])
        if not countries:
            raise DataValidationError(f"{path}:1: no country columns")
        rows = []
        labels = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(countries) + 1:
                raise DataValidationError(f"{path}:{line}: expected {len(countries) + 1} cells, got {len(row)}")
            labels.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise DataValidationError(f"{path}:{line}: invalid number in matrix row") from None
    if tuple(labels) != countries:
        raise DataValidationError(f"{path}: row labels {labels} do not match column order {list(countries)}")
    return countries, as_square_matrix(rows, f"{path}")


def save_matrix(countries: Sequence[CountryId], values: np.ndarray, path: str | Path) -> None:
    arr = as_square_matrix(values, "matrix")
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["country"] + list(countries))
        for country, row in zip(countries, arr):
            writer.writerow([country] + [_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Trajectory ensembles: ensemble.csv (trajectory, country, period_start, tfr)
# ---------------------------------------------------------------------------

def load_ensemble(path: str | Path) -> TrajectoryEnsemble:
    path = Path(path)
    cells: dict[tuple[int, CountryId, int], float] = {}
    for line, row in _open_rows(path, ("trajectory", "country", "period_start", "tfr")):
        key = (
            _parse_int(path, line, row, "trajectory"),
            _cell(path, line, row, "country"),
            _parse_int(path, line, row, "period_start"),
        )
        if key in cells:
            raise DataValidationError(f"{path}:{line}: duplicate ensemble cell {key}")
        cells[key] = _parse_float(path, line, row, "tfr")
    if not cells:
        raise DataValidationError(f"{path}: ensemble file has no rows")
    trajectories = sorted({t for t, _, _ in cells})
    countries = tuple(sorted({c for _, c, _ in cells}))
    periods = tuple(sorted({p for _, _, p in cells}))
    values = np.empty((len(trajectories), len(countries), len(periods)))
    t_index = {t: i for i, t in enumerate(trajectories)}
    c_index = {c: i for i, c in enumerate(countries)}
    p_index = {p: i for i, p in enumerate(periods)}
    seen = 0
    for (t, c, p), value in cells.items():
        values[t_index[t], c_index[c], p_index[p]] = value
        seen += 1
    if seen != values.size:
        raise DataValidationError(f"{path}: ensemble grid is incomplete ({seen} of {values.size} cells)")
    return TrajectoryEnsemble(values, countries, periods)


def save_ensemble(ensemble: TrajectoryEnsemble, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["trajectory", "country", "period_start", "tfr"])
        for t in range(ensemble.n_trajectories):
            for ci, country in enumerate(ensemble.countries):
                for pi, period in enumerate(ensemble.periods):
                    writer.writerow([t, country, period, _fmt(ensemble.values[t, ci, pi])])


# ---------------------------------------------------------------------------
# Interval summaries and observed values
# ---------------------------------------------------------------------------

def save_interval_rows(
    rows: Iterable[tuple[str, int, float, float, float, float]],
    path: str | Path,
    key_column: str = "region",
) -> None:
    """Rows are (name, period_start, level, lo, median, hi)."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([key_column, "period_start", "level", "lo", "median", "hi"])
        for name, period, level, lo, median, hi in rows:
            writer.writerow([name, period, _fmt(level), _fmt(lo), _fmt(median), _fmt(hi)])


def load_intervals(path: str | Path, key_column: str = "region") -> dict[tuple[str, int, float], tuple[float, float]]:
    path = Path(path)
    out: dict[tuple[str, int, float], tuple[float, float]] = {}
    for line, row in _open_rows(path, (key_column, "period_start", "level", "lo", "hi")):
        key = (
            _cell(path, line, row, key_column),
            _parse_int(path, line, row, "period_start"),
            _parse_float(path, line, row, "level"),
        )
        if key in out:
            raise DataValidationError(f"{path}:{line}: duplicate interval for {key}")
        out[key] = (_parse_float(path, line, row, "lo"), _parse_float(path, line, row, "hi"))
    return out


def load_observed(path: str | Path) -> dict[tuple[str, int], float]:
    path = Path(path)
    out: dict[tuple[str, int], float] = {}
    for line, row in _open_rows(path, ("region", "period_start", "tfr")):
        key = (_cell(path, line, row, "region"), _parse_int(path, line, row, "period_start"))
        if key in out:
            raise DataValidationError(f"{path}:{line}: duplicate observed value for {key}")
        out[key] = _parse_float(path, line, row, "tfr")
    return out


def save_coverage(result: CoverageResult, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["period_start", "level", "n", "proportion"])
        for level in result.levels:
            writer.writerow(["all", _fmt(level), result.n_observations, _fmt(result.overall[level])])
        for period in sorted(result.by_period):
            props = result.by_period[period]
            for level in result.levels:
                writer.writerow([period, _fmt(level), result.period_counts[period], _fmt(props[level])])


def save_variance_report(rows: Sequence[RegionVarianceRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["region", "df_if", "max_proportion", "n_countries", "repaired"])
        for row in rows:
            writer.writerow(
                [row.region, _fmt(row.df_if), _fmt(row.max_proportion), row.n_countries, int(row.repaired)]
            )


# ---------------------------------------------------------------------------
# Bundled input loading
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InputPaths:
    tfr: str | Path
    phases: str | Path
    covariates: str | Path | None = None
    theta: str | Path | None = None
    weights: str | Path | None = None


@dataclass(frozen=True)
class LoadedInputs:
    panel: TFRPanel
    covariates: CovariateStore | None
    thetas: PosteriorDraws | None
    weights: list[PopulationWeights] | None


def load_inputs(paths: InputPaths, strict: bool = False, stride: int = 5) -> LoadedInputs:
    """Load and cross-validate all pipeline inputs.

    Panel invariant violations are surfaced as a DataValidationError that
    lists every diagnostic. Posterior-draw files must not reference country
    codes outside the panel.
    """
    panel = load_panel(paths.tfr, paths.phases, stride=stride)
    diagnostics = validate_panel(panel)
    if diagnostics:
        listing = "\n".join(f"  - {d}" for d in diagnostics)
        raise DataValidationError(f"panel failed validation with {len(diagnostics)} problem(s):\n{listing}")
    covariates = load_covariates(paths.covariates, strict=strict) if paths.covariates else None
    thetas = load_thetas(paths.theta) if paths.theta else None
    if thetas is not None:
        unknown = sorted(set(thetas.countries) - set(panel.countries))
        if unknown:
            raise DataValidationError(
                f"{paths.theta}: unknown country code(s) not present in the TFR panel: {', '.join(unknown)}"
            )
    weights = load_weights(paths.weights) if paths.weights else None
    return LoadedInputs(panel, covariates, thetas, weights)
