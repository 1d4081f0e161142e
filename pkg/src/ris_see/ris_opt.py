"""Sequential fractional programming over the RIS reflection vector.

Each outer iteration rebuilds the concave secrecy surrogate at the current
iterate and maximizes surrogate / reflected-power-affine-denominator over
the convexified reflection constraints. The reflected-power quadratic form
is diagonal in this model, so the constraints whiten (z = sqrt(r) * gamma)
into a ball plus a halfspace.

The Dinkelbach parametric problems are solved exactly by exploiting the
surrogate's canonical structure: after majorizing the few absolute-value
terms by tight quadratics, each problem is an (indefinite) quadratic over
ball-and-halfspace, solved through one Hermitian eigendecomposition and a
trust-region-style secular equation. First-order methods are hopeless here
because the noise-power and consumed-power scales put the subproblem
condition number around 1e9.

Candidate iterates are accepted only if the exact objective does not
decrease, which makes the returned trace monotone by construction.
"""

from __future__ import annotations

import numpy as np

from . import model
from .fractional import (DomainKind, FractionalProblem, ScaTrace,
                         ball_halfspace_set, dinkelbach_maximize)
from .filters import normalized_columns
from .model import Allocation, ChannelSet, RisMode, SystemParams
from .surrogates import (DegenerateExpansionError, rate_surrogate_coeffs)

ACCEPT_SLACK = 1e-12
MM_ROUNDS = 8
SECULAR_BISECTIONS = 200


def _pack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def _unpack(x: np.ndarray) -> np.ndarray:
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def _radial_fix(gamma, r, lower, upper):
    """Clamp gamma^H R gamma into [lower, upper] by radial rescaling."""
    quad = float(r @ (np.abs(gamma) ** 2))
    if quad <= 0:
        return gamma
    if lower is not None and quad < lower:
        return gamma * np.sqrt(lower / quad)
    if quad > upper:
        return gamma * np.sqrt(upper / quad)
    return gamma


def _secular_max(lam_diag: np.ndarray, beta: np.ndarray, radius2: float,
                 omega: np.ndarray | None = None,
                 offset: float = 0.0) -> np.ndarray:
    """Maximize Re{beta^H y} - y^H diag(lam_diag) y on a ball intersected
    with an optional halfspace 2 Re{omega^H y} >= offset.

    Everything reduces to scalar secular equations in the ball multiplier;
    the halfspace multiplier has a closed form at each candidate. Handles
    indefinite diagonals (the trust-region hard case is filled along the
    most negative eigendirection).
    """
    lam_min = float(lam_diag.min())

    def eta_for(nu):
        if omega is None:
            return 0.0
        d = lam_diag + nu
        a = 2.0 * float(np.real(np.sum(np.conj(omega) * beta / (2.0 * d))))
        b = 2.0 * float(np.sum(np.abs(omega) ** 2 / d))
        if b <= 0.0:
            return 0.0
        return max(0.0, (offset - a) / b)

    def y_for(nu):
        eta = eta_for(nu)
        rhs = beta / 2.0 if omega is None else beta / 2.0 + eta * omega
        return rhs / (lam_diag + nu)

    def ball_gap(nu):
        y = y_for(nu)
        return float(np.real(np.vdot(y, y))) - radius2, y

    if lam_min > 0.0:
        g0, y0 = ball_gap(0.0)
        if g0 <= 0.0:
            return y0

    scale = max(float(np.abs(lam_diag).max()),
                float(np.linalg.norm(beta)) / (2.0 * np.sqrt(radius2)) + 1e-300)
    nu_base = max(0.0, -lam_min)
    lo = nu_base + 1e-13 * scale
    g_lo, y_lo = ball_gap(lo)
    if g_lo < 0.0:
        # hard case: the regular branch cannot reach the boundary; fill the
        # deficit along the most negative eigendirection
        n0 = int(np.argmin(lam_diag))
        deficit = -g_lo
        mag = abs(y_lo[n0])
        tau = -mag + np.sqrt(mag * mag + deficit)
        phase = y_lo[n0] / mag if mag > 0 else 1.0
        y_hard = y_lo.copy()
        y_hard[n0] += tau * phase
        if omega is None or 2.0 * np.real(np.vdot(omega, y_hard)) >= offset:
            return y_hard
        return y_lo
    hi = lo + scale
    g_hi, y_hi = ball_gap(hi)
    grow = 0
    while g_hi > 0.0 and grow < 200:
        hi *= 4.0
        g_hi, y_hi = ball_gap(hi)
        grow += 1
    for _ in range(SECULAR_BISECTIONS):
        mid = 0.5 * (lo + hi)
        g_mid, y_mid = ball_gap(mid)
        if abs(g_mid) <= 1e-13 * radius2:
            return y_mid
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return ball_gap(hi)[1]


def _make_parametric_solver(can, sqrt_r, r_diag, use_den, upper,
                            z_bar, tr_r):
    """Exact maximizer of SR~(gamma) - lam * denominator over the
    whitened constraints, as a (lam, packed x) -> packed x callable."""
    quad = can.quad_vecs
    base = np.diag(can.d0.astype(complex))
    if quad.shape[0]:
        base = base + (quad.T * can.quad_w) @ quad.conj()
    scale_mat = np.outer(sqrt_r, sqrt_r)
    b_z = can.b0 / sqrt_r
    offset = 0.0 if z_bar is None else tr_r + float(np.real(np.vdot(z_bar, z_bar)))

    def parametric_value(gamma, lam):
        val, _ = can.value_grad(gamma)
        if use_den:
            val -= lam * float(r_diag @ (np.abs(gamma) ** 2))
        return val

    def solver(lam, x):
        gam_cur = _unpack(x) / sqrt_r
        Q = base.copy()
        if use_den:
            Q[np.diag_indices_from(Q)] += lam * r_diag
        best_gamma = gam_cur
        best_val = parametric_value(gam_cur, lam)
        for _ in range(MM_ROUNDS):
            if can.kink_vecs.shape[0]:
                q2 = np.abs(can.kink_vecs.conj() @ gam_cur) ** 2
                eps = (1e-10 * np.linalg.norm(can.kink_vecs, axis=1)
                       * (float(np.linalg.norm(gam_cur)) + 1e-30)) ** 2
                theta = can.kink_w / (2.0 * np.sqrt(q2 + eps))
                M = Q + (can.kink_vecs.T * theta) @ can.kink_vecs.conj()
            else:
                M = Q
            Mz = M / scale_mat
            Mz = (Mz + Mz.conj().T) / 2.0
            lam_d, V = np.linalg.eigh(Mz)
            beta = V.conj().T @ b_z
            omega = None if z_bar is None else V.conj().T @ z_bar
            y = _secular_max(lam_d, beta, upper, omega, offset)
            gam_new = (V @ y) / sqrt_r
            val = parametric_value(gam_new, lam)
            if val > best_val:
                best_val, best_gamma = val, gam_new
            move = float(np.linalg.norm(gam_new - gam_cur))
            gam_cur = gam_new
            if not can.kink_vecs.shape[0]:
                break
            if move <= 1e-10 * (1.0 + float(np.linalg.norm(gam_new))):
                break
        return _pack(best_gamma * sqrt_r)

    return solver


def optimize_gamma(alloc: Allocation, channels: ChannelSet,
                   params: SystemParams, eps: float = 1e-5,
                   max_outer: int = 30, ssr_mode: bool = False,
                   dinkelbach_tol: float = 1e-7):
    """Optimize the RIS vector with powers and filters fixed.

    Returns ``(gamma, trace)``; the exact objective (SEE, or secrecy rate
    in ``ssr_mode``) evaluated along accepted iterates is nondecreasing.
    The loop stops when the iterate moves less than ``eps`` relative to
    its norm, when a candidate fails the monotonicity safeguard, or after
    ``max_outer`` iterations.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = model.reflection_gram_diag(channels, alloc.p, params)
    tr_r = float(np.sum(r))
    work = alloc.with_filters(normalized_columns(alloc.C_B),
                              normalized_columns(alloc.C_E))

    def exact_obj(gamma):
        cand = work.with_gamma(gamma)
        sr = model.secrecy_rate_unclamped(cand, channels, params)
        if ssr_mode:
            return sr
        return sr / model.total_power(cand, channels, params)

    trace = ScaTrace()
    if tr_r <= 0.0:
        # no reflected power at all (all-zero transmit powers): nothing to do
        trace.objective_values.append(exact_obj(alloc.gamma))
        trace.converged = True
        return alloc.gamma.copy(), trace

    active = params.ris_mode is RisMode.ACTIVE
    upper = tr_r + params.P_R_max if active else tr_r
    lower = tr_r if active else None
    r_safe = np.maximum(r, np.max(r) * 1e-14)
    sqrt_r = np.sqrt(r_safe)

    gamma = _radial_fix(alloc.gamma.copy(), r, lower, upper)
    obj_curr = exact_obj(gamma)
    trace.objective_values.append(obj_curr)

    use_power_den = (not ssr_mode) and active
    p_c_eq = float(params.mu @ work.p) + params.P_c - tr_r
    const_den = None
    if not use_power_den:
        const_den = 1.0 if ssr_mode else model.total_power(
            work.with_gamma(gamma), channels, params)

    rng = np.random.default_rng(0)
    for outer in range(1, max_outer + 1):
        trace.iterations = outer
        try:
            coeffs = rate_surrogate_coeffs(work, channels, params, gamma)
        except DegenerateExpansionError:
            gamma = gamma * np.exp(1j * 1e-8 * rng.standard_normal(gamma.size))
            coeffs = rate_surrogate_coeffs(work, channels, params, gamma)
        can = coeffs.canonical

        z_bar = sqrt_r * gamma if active else None
        x_bar = _pack(sqrt_r * gamma)

        def numerator(x, _can=can):
            g = _unpack(x) / sqrt_r
            val, cg = _can.value_grad(g)
            return val, _pack(2.0 * (cg / sqrt_r))

        if use_power_den:
            def denominator(x, _pce=p_c_eq):
                return float(x @ x) + _pce, 2.0 * x
        else:
            def denominator(x, _d=const_den):
                return _d, np.zeros_like(x)

        normal = 2.0 * x_bar if active else None
        offset = tr_r + float(x_bar @ x_bar) if active else 0.0
        feas = ball_halfspace_set(upper, normal=normal, offset=offset)
        problem = FractionalProblem(numerator=numerator, denominator=denominator,
                                    feasible_set=feas, dimension=x_bar.size,
                                    domain_kind=DomainKind.COMPLEX_QUADRATIC)
        solver = _make_parametric_solver(can, sqrt_r, r, use_power_den,
                                         upper, z_bar, tr_r)
        x_out, _ = dinkelbach_maximize(problem, x_bar, tol=dinkelbach_tol,
                                       parametric_solver=solver)
        cand = _radial_fix(_unpack(x_out) / sqrt_r, r, lower, upper)
        obj_cand = exact_obj(cand)
        slack = ACCEPT_SLACK * max(1.0, abs(obj_curr))
        if obj_cand < obj_curr - slack:
            # the surrogate is not a global minorant on the Eve side, so a
            # full step can overshoot; backtrack along the segment toward
            # the expansion point (feasible by convexity, and an ascent
            # direction by tightness + gradient consistency)
            t = 0.5
            accepted = False
            for _ in range(24):
                mid = _radial_fix(gamma + t * (cand - gamma), r, lower, upper)
                obj_mid = exact_obj(mid)
                if obj_mid > obj_curr + slack:
                    cand, obj_cand, accepted = mid, obj_mid, True
                    break
                t *= 0.5
            if not accepted:
                trace.rejected_step = True
                break
        delta = float(np.linalg.norm(cand - gamma))
        gamma = cand
        obj_curr = obj_cand
        trace.objective_values.append(obj_curr)
        if delta <= eps * max(1.0, float(np.linalg.norm(gamma))):
            trace.converged = True
            break
    return gamma, trace
