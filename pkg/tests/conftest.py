"""Shared instance builders for the test suite.

Instances come in two flavors: physically calibrated ones drawn through
the channel generator (path-loss scales, the distribution the simulator
actually runs on) and tiny hand-sized ones for closed-form checks.
"""

import numpy as np
import pytest

from ris_see.channels import (GeometryConfig, draw_channels,
                              noise_power_watts, place_nodes)
from ris_see.filters import lmmse_filters
from ris_see.model import (Allocation, ChannelSet, RisMode, SystemParams,
                           reflection_gram_diag)

BANDWIDTH_HZ = 2.0e7
NOISE_W = noise_power_watts(BANDWIDTH_HZ, 5.0)


def make_params(K=2, N=16, N_B=2, N_E=1, ris_mode=RisMode.ACTIVE,
                p_max_w=1.0, p_r_max_w=0.1, sigma2_ris=None,
                p_cn_w=0.01, p0_ris_w=0.1, p0_w=1.0):
    if sigma2_ris is None:
        sigma2_ris = NOISE_W if ris_mode is RisMode.ACTIVE else 0.0
    return SystemParams(
        K=K, N=N, N_B=N_B, N_E=N_E, bandwidth_hz=BANDWIDTH_HZ,
        sigma2_B=NOISE_W, sigma2_E=NOISE_W, sigma2_RIS=sigma2_ris,
        mu=np.ones(K), P_cn=p_cn_w, P0_ris=p0_ris_w, P0=p0_w,
        P_R_max=p_r_max_w if ris_mode is RisMode.ACTIVE else 0.0,
        P_max=np.full(K, p_max_w), ris_mode=ris_mode)


def make_instance(seed, K=2, N=16, N_B=2, N_E=1, ris_mode=RisMode.ACTIVE,
                  **kwargs):
    """Physically calibrated (params, geometry, channels) for one seed."""
    params = make_params(K=K, N=N, N_B=N_B, N_E=N_E, ris_mode=ris_mode,
                         **kwargs)
    geometry = place_nodes(params, seed, GeometryConfig())
    channels = draw_channels(geometry, params, seed + 10_000)
    return params, channels


def random_feasible_gamma(rng, r, lower, upper, size=None):
    """Draw gamma uniformly in direction with gamma^H R gamma ~ U[lower, upper]."""
    n = r.shape[0]
    if size is None:
        g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        quad = float(r @ (np.abs(g) ** 2))
        return g * np.sqrt(rng.uniform(lower, upper) / quad)
    g = (rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n)))
    quad = (np.abs(g) ** 2) @ r
    target = rng.uniform(lower, upper, size)
    return g * np.sqrt(target / quad)[:, None]


def random_allocation(rng, params, channels, full_power=False):
    """Feasible allocation with random powers, feasible gamma, LMMSE filters."""
    p = params.P_max.copy() if full_power else rng.uniform(0.2, 1.0, params.K) * params.P_max
    r = reflection_gram_diag(channels, p, params)
    tr_r = float(np.sum(r))
    if params.ris_mode is RisMode.ACTIVE:
        gamma = random_feasible_gamma(rng, r, tr_r, tr_r + params.P_R_max)
    else:
        gamma = random_feasible_gamma(rng, r, 0.25 * tr_r, tr_r)
    alloc = Allocation(gamma=gamma, p=p,
                       C_B=np.zeros((params.N_B, params.K)),
                       C_E=np.zeros((params.N_E, params.K)))
    C_B, C_E = lmmse_filters(alloc, channels, params)
    return alloc.with_filters(C_B, C_E)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
