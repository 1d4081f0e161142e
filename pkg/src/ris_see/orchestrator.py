"""Alternating maximization over filters, RIS vector and powers, plus the
comparison modes used in the numerical study (secrecy-sum-rate
maximization, the no-eavesdropper ideal, and a random-phase/full-power
baseline).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from .filters import lmmse_filters
from .model import (Allocation, ChannelSet, PerfReport, Receiver, RisMode,
                    SystemParams)
from .power_opt import optimize_powers
from .ris_opt import optimize_gamma


class RunMode(enum.Enum):
    SEE_MAX = "see_max"
    SSR_MAX = "ssr_max"
    EE_NO_EVE = "ee_no_eve"
    BASELINE_RANDOM = "baseline_random"


@dataclass
class RoundRecord:
    """Reported-metric checkpoints within one alternation round."""

    round_index: int
    obj_in: float
    obj_after_gamma: float
    obj_after_power: float
    obj_out: float           # after the trailing filter update


@dataclass
class ConvergenceTrace:
    mode: RunMode
    rounds: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def filter_step_decreases(self, rtol: float = 1e-9) -> int:
        """How many trailing filter updates lowered the reported metric.

        The Eve-side LMMSE update strengthens the eavesdropper, so this
        step is logged rather than asserted monotone.
        """
        return sum(1 for r in self.rounds
                   if r.obj_out < r.obj_after_power
                   - rtol * max(1.0, abs(r.obj_after_power)))


def _reported_metric(alloc, channels, params, ssr_mode):
    """Clamped, bandwidth-scaled run objective (SEE or SSR)."""
    sr = params.bandwidth_hz * model.secrecy_rate(alloc, channels, params)
    if ssr_mode:
        return sr
    return sr / model.total_power(alloc, channels, params)


def _internal_metric(alloc, channels, params, ssr_mode):
    """Unclamped counterpart used for the stopping rule."""
    sr = params.bandwidth_hz * model.secrecy_rate_unclamped(alloc, channels, params)
    if ssr_mode:
        return sr
    return sr / model.total_power(alloc, channels, params)


def initial_allocation(channels: ChannelSet, params: SystemParams) -> Allocation:
    """Cold start: all-ones RIS vector (always feasible) and full power."""
    alloc = Allocation(gamma=np.ones(params.N, dtype=complex),
                       p=params.P_max.copy(),
                       C_B=np.zeros((params.N_B, params.K)),
                       C_E=np.zeros((params.N_E, params.K)))
    C_B, C_E = lmmse_filters(alloc, channels, params)
    return alloc.with_filters(C_B, C_E)


def alternating_maximize(channels: ChannelSet, params: SystemParams,
                         mode: RunMode = RunMode.SEE_MAX,
                         eps: float = 1e-4, max_rounds: int = 50,
                         initial: Allocation | None = None,
                         subproblem_eps: float = 1e-5,
                         subproblem_max_outer: int = 30):
    """Alternate filter, RIS and power updates until the objective settles.

    Per round: RIS step, power step, then both LMMSE filter banks; the run
    stops when the objective changes by less than ``eps`` relative between
    the start and end of a round. Returns (allocation, report, trace).
    """
    if mode is RunMode.BASELINE_RANDOM:
        raise ValueError("use baseline_random_uniform for the baseline mode")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mode is RunMode.EE_NO_EVE:
        channels = replace(channels, G_E=np.zeros_like(channels.G_E))
    ssr_mode = mode is RunMode.SSR_MAX

    alloc = initial if initial is not None else initial_allocation(channels, params)
    trace = ConvergenceTrace(mode=mode)
    obj_internal = _internal_metric(alloc, channels, params, ssr_mode)

    for rnd in range(1, max_rounds + 1):
        obj_in = _reported_metric(alloc, channels, params, ssr_mode)
        gamma, _ = optimize_gamma(alloc, channels, params, eps=subproblem_eps,
                                  max_outer=subproblem_max_outer,
                                  ssr_mode=ssr_mode)
        alloc = alloc.with_gamma(gamma)
        obj_g = _reported_metric(alloc, channels, params, ssr_mode)

        p, _ = optimize_powers(alloc, channels, params, eps=subproblem_eps,
                               max_outer=subproblem_max_outer,
                               ssr_mode=ssr_mode)
        alloc = alloc.with_p(p)
        obj_p = _reported_metric(alloc, channels, params, ssr_mode)

        C_B, C_E = lmmse_filters(alloc, channels, params)
        alloc = alloc.with_filters(C_B, C_E)
        obj_out = _reported_metric(alloc, channels, params, ssr_mode)

        trace.rounds.append(RoundRecord(rnd, obj_in, obj_g, obj_p, obj_out))
        new_internal = _internal_metric(alloc, channels, params, ssr_mode)
        if abs(new_internal - obj_internal) <= eps * max(abs(obj_internal), 1e-30):
            obj_internal = new_internal
            trace.converged = True
            break
        obj_internal = new_internal

    report = model.perf_report(alloc, channels, params)
    return alloc, report, trace


def ssr_maximize(channels: ChannelSet, params: SystemParams,
                 eps: float = 1e-4, max_rounds: int = 50, **kwargs):
    """Maximize the secrecy sum rate (unit denominator in both subproblems)."""
    return alternating_maximize(channels, params, mode=RunMode.SSR_MAX,
                                eps=eps, max_rounds=max_rounds, **kwargs)


def ee_no_eve(channels: ChannelSet, params: SystemParams,
              eps: float = 1e-4, max_rounds: int = 50, **kwargs):
    """Energy efficiency of the ideal eavesdropper-free system."""
    return alternating_maximize(channels, params, mode=RunMode.EE_NO_EVE,
                                eps=eps, max_rounds=max_rounds, **kwargs)


def baseline_random_uniform(channels: ChannelSet, params: SystemParams,
                            seed: int):
    """Random unit-modulus phases, full transmit power, LMMSE filters."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, params.N)
    alloc = Allocation(gamma=np.exp(1j * theta), p=params.P_max.copy(),
                       C_B=np.zeros((params.N_B, params.K)),
                       C_E=np.zeros((params.N_E, params.K)))
    C_B, C_E = lmmse_filters(alloc, channels, params)
    alloc = alloc.with_filters(C_B, C_E)
    return alloc, model.perf_report(alloc, channels, params)
