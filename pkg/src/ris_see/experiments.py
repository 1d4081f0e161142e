"""Seeded Monte-Carlo campaigns: config parsing, sweep execution and CSV
emission.

Config files are TOML with explicit units in key names (dBm for powers).
Every campaign row is produced from a per-trial seed derived from the base
seed, so identical configs give byte-identical CSVs.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import logging
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .channels import (GeometryConfig, dbm_to_watts, draw_channels,
                       noise_power_watts, place_nodes)
from .model import RisMode, SystemParams
from .orchestrator import (RunMode, alternating_maximize,
                           baseline_random_uniform)

log = logging.getLogger("ris_see")

Z95 = 1.959963984540054

SWEEP_VARIABLES = ("p_t_max_dbm", "p_cn_active_dbm", "n_ris")

CSV_FIELDS = ("trial", "seed", "sweep_var", "sweep_value_dbm", "mode",
              "ris_mode", "N", "K", "see_bit_per_joule", "ssr_bit_per_s",
              "ptot_w", "p_rf_ris_w", "rounds", "converged")

SUMMARY_FIELDS = ("sweep_var", "sweep_value_dbm", "mode", "ris_mode", "N", "K",
                  "n", "see_mean", "see_ci95", "ssr_mean", "ssr_ci95",
                  "ptot_w_mean", "ptot_w_ci95", "converged_frac")


class ConfigError(ValueError):
    """Configuration file problem: parse failure or invalid field."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float

    def values(self):
        count = int(round((self.stop - self.start) / self.step))
        return [self.start + i * self.step for i in range(count + 1)]


@dataclass(frozen=True)
class ExperimentConfig:
    k_users: int
    n_ris: int
    n_bob: int
    n_eve: int
    bandwidth_hz: float
    noise_psd_dbm_hz: float
    noise_figure_db: float
    ris_noise_figure_db: float
    mu: tuple
    p0_w: float
    p0_ris_active_w: float
    p0_ris_passive_w: float
    p_cn_active_w: float
    p_cn_passive_w: float
    p_r_max_w: float
    p_t_max_w: float
    geometry: GeometryConfig
    sweep: SweepSpec
    trials: int
    base_seed: int
    modes: tuple
    ris_modes: tuple
    output_path: str
    eps: float
    max_rounds: int


def _get(section: dict, section_name: str, key: str):
    if key not in section:
        raise ConfigError(f"missing required field: {section_name}.{key}")
    return section[key]


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed config dict and convert dBm fields to watts."""
    for name in ("system", "geometry", "sweep", "run"):
        if name not in raw:
            raise ConfigError(f"missing required section: [{name}]")
    sys_t, geo_t, sw_t, run_t = raw["system"], raw["geometry"], raw["sweep"], raw["run"]

    k_users = int(_get(sys_t, "system", "k_users"))
    mu_raw = _get(sys_t, "system", "mu")
    mu = tuple(float(m) for m in (mu_raw if isinstance(mu_raw, list)
                                  else [mu_raw] * k_users))
    if len(mu) != k_users:
        raise ConfigError(f"system.mu must be a scalar or a list of {k_users}")
    if any(m < 1.0 for m in mu):
        raise ConfigError("system.mu entries must be >= 1")

    sweep = SweepSpec(
        variable=str(_get(sw_t, "sweep", "variable")),
        start=float(_get(sw_t, "sweep", "start")),
        stop=float(_get(sw_t, "sweep", "stop")),
        step=float(_get(sw_t, "sweep", "step")),
    )
    if sweep.variable not in SWEEP_VARIABLES:
        raise ConfigError(
            f"sweep.variable must be one of {SWEEP_VARIABLES}, got {sweep.variable!r}")
    if sweep.step <= 0:
        raise ConfigError("sweep.step must be positive")
    if sweep.stop < sweep.start:
        raise ConfigError("sweep.stop must be >= sweep.start")

    trials = int(_get(run_t, "run", "trials"))
    if trials < 1:
        raise ConfigError("run.trials must be >= 1")

    try:
        modes = tuple(RunMode(m) for m in _get(run_t, "run", "modes"))
    except ValueError as exc:
        raise ConfigError(f"run.modes: {exc}") from None
    try:
        ris_modes = tuple(RisMode(m) for m in _get(run_t, "run", "ris_modes"))
    except ValueError as exc:
        raise ConfigError(f"run.ris_modes: {exc}") from None

    geo_kwargs = {f: geo_t[f] for f in geo_t}
    try:
        geometry = GeometryConfig(**geo_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"geometry: {exc}") from None

    return ExperimentConfig(
        k_users=k_users,
        n_ris=int(_get(sys_t, "system", "n_ris")),
        n_bob=int(_get(sys_t, "system", "n_bob")),
        n_eve=int(_get(sys_t, "system", "n_eve")),
        bandwidth_hz=float(_get(sys_t, "system", "bandwidth_hz")),
        noise_psd_dbm_hz=float(_get(sys_t, "system", "noise_psd_dbm_hz")),
        noise_figure_db=float(_get(sys_t, "system", "noise_figure_db")),
        ris_noise_figure_db=float(_get(sys_t, "system", "ris_noise_figure_db")),
        mu=mu,
        p0_w=dbm_to_watts(float(_get(sys_t, "system", "p0_dbm"))),
        p0_ris_active_w=dbm_to_watts(float(_get(sys_t, "system", "p0_ris_active_dbm"))),
        p0_ris_passive_w=dbm_to_watts(float(_get(sys_t, "system", "p0_ris_passive_dbm"))),
        p_cn_active_w=dbm_to_watts(float(_get(sys_t, "system", "p_cn_active_dbm"))),
        p_cn_passive_w=dbm_to_watts(float(_get(sys_t, "system", "p_cn_passive_dbm"))),
        p_r_max_w=dbm_to_watts(float(_get(sys_t, "system", "p_r_max_dbm"))),
        p_t_max_w=dbm_to_watts(float(_get(sys_t, "system", "p_t_max_dbm"))),
        geometry=geometry,
        sweep=sweep,
        trials=trials,
        base_seed=int(_get(run_t, "run", "base_seed")),
        modes=modes,
        ris_modes=ris_modes,
        output_path=str(_get(run_t, "run", "output_path")),
        eps=float(run_t.get("eps", 1e-4)),
        max_rounds=int(run_t.get("max_rounds", 50)),
    )


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a TOML campaign config."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def build_system_params(config: ExperimentConfig, ris_mode: RisMode,
                        sweep_value: float) -> SystemParams:
    """Materialize SystemParams for one (ris_mode, sweep point)."""
    n_ris = config.n_ris
    p_t_max = config.p_t_max_w
    p_cn_active = config.p_cn_active_w
    if config.sweep.variable == "n_ris":
        n_ris = int(round(sweep_value))
    elif config.sweep.variable == "p_t_max_dbm":
        p_t_max = dbm_to_watts(sweep_value)
    elif config.sweep.variable == "p_cn_active_dbm":
        p_cn_active = dbm_to_watts(sweep_value)

    active = ris_mode is RisMode.ACTIVE
    sigma2 = noise_power_watts(config.bandwidth_hz, config.noise_figure_db,
                               config.noise_psd_dbm_hz)
    return SystemParams(
        K=config.k_users, N=n_ris, N_B=config.n_bob, N_E=config.n_eve,
        bandwidth_hz=config.bandwidth_hz,
        sigma2_B=sigma2, sigma2_E=sigma2,
        sigma2_RIS=noise_power_watts(config.bandwidth_hz,
                                     config.ris_noise_figure_db,
                                     config.noise_psd_dbm_hz) if active else 0.0,
        mu=np.array(config.mu),
        P_cn=p_cn_active if active else config.p_cn_passive_w,
        P0_ris=config.p0_ris_active_w if active else config.p0_ris_passive_w,
        P0=config.p0_w,
        P_R_max=config.p_r_max_w if active else 0.0,
        P_max=np.full(config.k_users, p_t_max),
        ris_mode=ris_mode,
    )


def _trial_seeds(base_seed: int, trial: int):
    """Derive independent (geometry, channel, baseline) seeds for a trial."""
    state = np.random.SeedSequence(base_seed + trial).generate_state(3, np.uint64)
    return int(state[0]), int(state[1]), int(state[2])


def _run_one(args):
    config, sweep_value, trial, mode, ris_mode = args
    params = build_system_params(config, ris_mode, sweep_value)
    geom_seed, chan_seed, phase_seed = _trial_seeds(config.base_seed, trial)
    row = {
        "trial": trial,
        "seed": config.base_seed + trial,
        "sweep_var": config.sweep.variable,
        "sweep_value_dbm": sweep_value,
        "mode": mode.value,
        "ris_mode": ris_mode.value,
        "N": params.N,
        "K": params.K,
    }
    try:
        geometry = place_nodes(params, geom_seed, config.geometry)
        channels = draw_channels(geometry, params, chan_seed)
        if mode is RunMode.BASELINE_RANDOM:
            _, report = baseline_random_uniform(channels, params, phase_seed)
            rounds, converged = 0, True
        else:
            _, report, trace = alternating_maximize(
                channels, params, mode=mode, eps=config.eps,
                max_rounds=config.max_rounds)
            rounds, converged = trace.n_rounds, trace.converged
        row.update(see_bit_per_joule=report.see, ssr_bit_per_s=report.ssr,
                   ptot_w=report.p_tot, p_rf_ris_w=report.p_rf_ris,
                   rounds=rounds, converged=converged)
    except Exception:
        log.exception("run failed: trial=%s mode=%s ris_mode=%s sweep=%s",
                      trial, mode.value, ris_mode.value, sweep_value)
        row.update(see_bit_per_joule=math.nan, ssr_bit_per_s=math.nan,
                   ptot_w=math.nan, p_rf_ris_w=math.nan,
                   rounds=0, converged=False)
    return row


def run_campaign(config: ExperimentConfig, workers: int = 1) -> list:
    """Run the full sweep x trials x modes x ris_modes grid.

    Rows come back ordered by (sweep point, trial, mode, ris_mode)
    regardless of worker scheduling.
    """
    tasks = [(config, sv, trial, mode, ris_mode)
             for sv in config.sweep.values()
             for trial in range(config.trials)
             for mode in config.modes
             for ris_mode in config.ris_modes]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, tasks))
    else:
        rows = [_run_one(t) for t in tasks]
    return rows


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows, fields=CSV_FIELDS) -> str:
    """Render rows with a stable header, float repr and LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_format_cell(row[f]) for f in fields])
    return buf.getvalue()


def write_csv(rows, path: str, fields=CSV_FIELDS) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows, fields))


def read_csv_rows(path: str) -> list:
    """Load campaign rows back, restoring numeric and boolean types."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            row = dict(rec)
            for key in ("trial", "seed", "N", "K", "rounds"):
                if key in row:
                    row[key] = int(row[key])
            for key in ("sweep_value_dbm", "see_bit_per_joule", "ssr_bit_per_s",
                        "ptot_w", "p_rf_ris_w"):
                if key in row:
                    row[key] = float(row[key])
            if "converged" in row:
                row["converged"] = row["converged"] == "true"
            rows.append(row)
    return rows


def _mean_ci(values):
    vals = np.asarray([v for v in values if math.isfinite(v)], dtype=float)
    if vals.size == 0:
        return math.nan, math.nan, 0
    mean = float(np.mean(vals))
    if vals.size == 1:
        return mean, 0.0, 1
    half = Z95 * float(np.std(vals, ddof=1)) / math.sqrt(vals.size)
    return mean, half, int(vals.size)


def summarize(rows) -> list:
    """Per-(sweep point, mode, ris_mode) means with normal-approximation CIs."""
    if not rows:
        raise ValueError("summarize needs at least one row")
    groups = {}
    for row in rows:
        key = (row["sweep_var"], row["sweep_value_dbm"], row["mode"],
               row["ris_mode"], row["N"], row["K"])
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        rows_g = groups[key]
        see_mean, see_ci, n = _mean_ci([r["see_bit_per_joule"] for r in rows_g])
        ssr_mean, ssr_ci, _ = _mean_ci([r["ssr_bit_per_s"] for r in rows_g])
        ptot_mean, ptot_ci, _ = _mean_ci([r["ptot_w"] for r in rows_g])
        out.append({
            "sweep_var": key[0], "sweep_value_dbm": key[1], "mode": key[2],
            "ris_mode": key[3], "N": key[4], "K": key[5], "n": n,
            "see_mean": see_mean, "see_ci95": see_ci,
            "ssr_mean": ssr_mean, "ssr_ci95": ssr_ci,
            "ptot_w_mean": ptot_mean, "ptot_w_ci95": ptot_ci,
            "converged_frac": float(np.mean([1.0 if r["converged"] else 0.0
                                             for r in rows_g])),
        })
    return out
