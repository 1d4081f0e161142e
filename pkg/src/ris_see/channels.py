"""Random network geometry and Rayleigh channel realizations.

The layout follows the experimental setup: users fall uniformly in an
annulus around the RIS, Bob sits at a fixed distance from the RIS, Eve
falls uniformly in a disc around Bob. Path gains follow a log-distance
model; fading is circularly-symmetric complex Gaussian with per-entry
variance equal to the link gain. Everything is seed-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ChannelSet, SystemParams


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive for dBm conversion")
    return 10.0 * np.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def noise_power_watts(bandwidth_hz: float, noise_figure_db: float,
                      psd_dbm_per_hz: float = -174.0) -> float:
    """Thermal noise power over a bandwidth: psd + 10 log10(B) + NF, in watts."""
    dbm = psd_dbm_per_hz + 10.0 * np.log10(bandwidth_hz) + noise_figure_db
    return dbm_to_watts(dbm)


@dataclass(frozen=True)
class GeometryConfig:
    """Node-placement and path-loss knobs, defaults matching the scenario."""

    user_radius_min_m: float = 20.0
    user_radius_max_m: float = 30.0
    user_height_max_m: float = 2.5
    ris_height_m: float = 10.0
    bob_height_m: float = 10.0
    bob_distance_m: float = 20.0
    bob_azimuth_deg: float = 0.0
    eve_radius_m: float = 30.0
    eve_height_max_m: float = 2.5
    min_separation_m: float = 1.0
    pathloss_exp_users: float = 4.0
    pathloss_exp_bob: float = 2.0
    pathloss_exp_eve: float = 4.0
    ref_gain_db: float = -30.0
    fading: str = "rayleigh"

    def __post_init__(self):
        if not 0 < self.user_radius_min_m <= self.user_radius_max_m:
            raise ValueError("user annulus radii must satisfy 0 < min <= max")
        for name in ("pathloss_exp_users", "pathloss_exp_bob", "pathloss_exp_eve"):
            if getattr(self, name) < 2.0:
                raise ValueError(f"{name} must be >= 2")
        if self.fading != "rayleigh":
            raise ValueError(f"unsupported fading model {self.fading!r}")


@dataclass(frozen=True)
class ScenarioGeometry:
    """Concrete node positions plus the path-loss model parameters."""

    user_positions: np.ndarray   # (K, 3) metres
    bob_position: np.ndarray
    eve_position: np.ndarray
    ris_position: np.ndarray
    pathloss_exponents: tuple    # (n_h, n_gB, n_gE)
    ref_gain_db: float


def place_nodes(params: SystemParams, rng_seed: int,
                geometry: GeometryConfig | None = None) -> ScenarioGeometry:
    """Draw a deterministic node layout for one trial.

    Users are area-uniform in the annulus around the RIS with uniform
    heights; Bob is deterministic; Eve is area-uniform in a disc around
    Bob, resampled to keep a minimum horizontal separation from both the
    RIS and Bob.
    """
    geo = geometry or GeometryConfig()
    rng = np.random.default_rng(rng_seed)
    ris = np.array([0.0, 0.0, geo.ris_height_m])

    r2 = rng.uniform(geo.user_radius_min_m ** 2, geo.user_radius_max_m ** 2, params.K)
    theta = rng.uniform(0.0, 2.0 * np.pi, params.K)
    hgt = rng.uniform(0.0, geo.user_height_max_m, params.K)
    users = np.column_stack([np.sqrt(r2) * np.cos(theta),
                             np.sqrt(r2) * np.sin(theta), hgt])

    az = np.deg2rad(geo.bob_azimuth_deg)
    bob = np.array([geo.bob_distance_m * np.cos(az),
                    geo.bob_distance_m * np.sin(az), geo.bob_height_m])

    for _ in range(10_000):
        rho = np.sqrt(rng.uniform(0.0, geo.eve_radius_m ** 2))
        phi = rng.uniform(0.0, 2.0 * np.pi)
        eve = np.array([bob[0] + rho * np.cos(phi), bob[1] + rho * np.sin(phi),
                        rng.uniform(0.0, geo.eve_height_max_m)])
        d_ris = np.hypot(eve[0] - ris[0], eve[1] - ris[1])
        d_bob = np.hypot(eve[0] - bob[0], eve[1] - bob[1])
        if d_ris >= geo.min_separation_m and d_bob >= geo.min_separation_m:
            break
    else:
        raise RuntimeError("could not place Eve with the requested separation")

    return ScenarioGeometry(
        user_positions=users,
        bob_position=bob,
        eve_position=eve,
        ris_position=ris,
        pathloss_exponents=(geo.pathloss_exp_users, geo.pathloss_exp_bob,
                            geo.pathloss_exp_eve),
        ref_gain_db=geo.ref_gain_db,
    )


def pathloss_gain(distance_m: float, exponent: float, ref_gain_db: float) -> float:
    """Linear log-distance path gain: ref_gain * d^(-exponent), ref at 1 m."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return db_to_linear(ref_gain_db) * distance_m ** (-exponent)


def _cscg(rng: np.random.Generator, shape, variance) -> np.ndarray:
    """CSCG entries with E[|x|^2] = variance (variance may broadcast)."""
    scale = np.sqrt(np.asarray(variance) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(geometry: ScenarioGeometry, params: SystemParams,
                  rng_seed: int) -> ChannelSet:
    """Draw one Rayleigh channel realization with path-gain calibration."""
    if geometry.user_positions.shape[0] != params.K:
        raise ValueError("geometry user count does not match params.K")
    rng = np.random.default_rng(rng_seed)
    n_h, n_gb, n_ge = geometry.pathloss_exponents
    ref = geometry.ref_gain_db

    d_users = np.linalg.norm(geometry.user_positions - geometry.ris_position, axis=1)
    gain_h = np.array([pathloss_gain(d, n_h, ref) for d in d_users])
    gain_gb = pathloss_gain(
        float(np.linalg.norm(geometry.bob_position - geometry.ris_position)), n_gb, ref)
    gain_ge = pathloss_gain(
        float(np.linalg.norm(geometry.eve_position - geometry.ris_position)), n_ge, ref)

    h = _cscg(rng, (params.K, params.N), gain_h[:, None])
    G_B = _cscg(rng, (params.N_B, params.N), gain_gb)
    G_E = _cscg(rng, (params.N_E, params.N), gain_ge)
    return ChannelSet(h=h, G_B=G_B, G_E=G_E)
