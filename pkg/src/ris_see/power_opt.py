"""Sequential fractional programming over the transmit powers.

The RIS vector and the filters stay fixed, so the whole problem reduces to
the frozen coefficients of :class:`PowerSurrogateState`; each outer
iteration maximizes the pseudo-concave power surrogate over the box via
Dinkelbach and accepts the candidate only if the exact ratio does not
decrease.
"""

from __future__ import annotations

import numpy as np

from .fractional import (DomainKind, FractionalProblem, ScaTrace,
                         box_feasible_set, dinkelbach_maximize)
from .filters import normalized_columns
from .model import Allocation, ChannelSet, SystemParams
from .surrogates import (PowerSurrogateState, build_power_state,
                         power_numerator_exact, power_surrogate_numerator,
                         _grad_f_full, _grad_f_int)

ACCEPT_SLACK = 1e-12


def _surrogate_numerator_grad(p, state: PowerSurrogateState):
    pb = state.expansion_point_p
    g2b = _grad_f_int(pb, state.a_bob, state.d_bob)
    g1e = _grad_f_full(pb, state.a_eve, state.d_eve)
    val = power_surrogate_numerator(p, state)
    grad = (_grad_f_full(p, state.a_bob, state.d_bob)
            + _grad_f_int(p, state.a_eve, state.d_eve) - g2b - g1e)
    return val, grad


def optimize_powers(alloc: Allocation, channels: ChannelSet,
                    params: SystemParams, eps: float = 1e-6,
                    max_outer: int = 30, ssr_mode: bool = False,
                    dinkelbach_tol: float = 1e-7):
    """Optimize transmit powers with the RIS vector and filters fixed.

    Returns ``(p, trace)`` with the box constraints holding exactly
    (projection is componentwise clipping) and the exact objective
    nondecreasing along accepted iterates.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    work = alloc.with_filters(normalized_columns(alloc.C_B),
                              normalized_columns(alloc.C_E))
    state0 = build_power_state(work, channels, params)
    if state0.p_c_eq + float(np.minimum(state0.mu_eq, 0.0) @ params.P_max) <= 0:
        raise ValueError("power denominator can be nonpositive on the box")

    def exact_obj(p, state):
        num = power_numerator_exact(p, state)
        if ssr_mode:
            return num
        return num / (float(state.mu_eq @ p) + state.p_c_eq)

    p = np.clip(alloc.p.copy(), 0.0, params.P_max)
    feas = box_feasible_set(np.zeros(params.K), params.P_max)
    trace = ScaTrace()
    obj_curr = exact_obj(p, state0)
    trace.objective_values.append(obj_curr)

    for outer in range(1, max_outer + 1):
        trace.iterations = outer
        state = PowerSurrogateState(
            expansion_point_p=p.copy(), a_bob=state0.a_bob, a_eve=state0.a_eve,
            d_bob=state0.d_bob, d_eve=state0.d_eve, mu_eq=state0.mu_eq,
            p_c_eq=state0.p_c_eq)

        def numerator(x, _state=state):
            return _surrogate_numerator_grad(x, _state)

        if ssr_mode:
            def denominator(x):
                return 1.0, np.zeros_like(x)
        else:
            def denominator(x, _state=state):
                return float(_state.mu_eq @ x) + _state.p_c_eq, _state.mu_eq.copy()

        problem = FractionalProblem(numerator=numerator, denominator=denominator,
                                    feasible_set=feas, dimension=params.K,
                                    domain_kind=DomainKind.REAL_BOX)
        scale = 1.0 + float(np.linalg.norm(p))
        cand, _ = dinkelbach_maximize(problem, p, tol=dinkelbach_tol,
                                      inner_tol=1e-8 * scale)
        cand = np.clip(cand, 0.0, params.P_max)
        obj_cand = exact_obj(cand, state0)
        if obj_cand < obj_curr - ACCEPT_SLACK * max(1.0, abs(obj_curr)):
            trace.rejected_step = True
            break
        delta = float(np.linalg.norm(cand - p))
        p = cand
        obj_curr = obj_cand
        trace.objective_values.append(obj_curr)
        # step threshold scales with the box so low-power sweeps still iterate
        if delta <= eps * max(float(np.linalg.norm(params.P_max)), 1e-30):
            trace.converged = True
            break
    return p, trace
