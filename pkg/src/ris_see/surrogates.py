"""Concave minorants used by the sequential fractional programming steps.

Two families live here:

* the secrecy-rate surrogate in the RIS vector: the logarithmic bound is
  applied to every per-user rate at an expansion point, then the remaining
  convex pieces (Bob's signal magnitude, Eve's quadratic terms and the
  reflected-power trace) are linearized so the result is concave;
* the transmit-power surrogate: the secrecy numerator splits into four
  log-sum terms, the two anti-concave ones are replaced by first-order
  expansions, leaving a concave numerator over an affine positive
  denominator.

Rates are in bit/s/Hz; the logarithmic bound itself holds for the natural
logarithm, so its linear part carries a 1/ln(2) factor when assembled into
base-2 rates (this keeps both tightness and gradient consistency at the
expansion point).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (LN2, Allocation, ChannelSet, Receiver, RisMode,
                    SystemParams, reflection_gram_diag, sigma2)

# |c^H A_k gamma_bar| below this fraction of its Cauchy-Schwarz scale
# ||v_k|| * ||gamma_bar|| marks a degenerate expansion point. The products
# B_bar * D_bar stay bounded as the null is approached, so only an (almost)
# exact null is actually harmful.
DEGENERATE_TOL = 1e-12


class DegenerateExpansionError(ValueError):
    """Raised when an expansion point nulls a user's effective channel.

    Callers should perturb the expansion vector (small random phase noise)
    and rebuild the coefficients once before giving up.
    """


def log_ratio_lower_bound(x: float, y: float, x_bar: float, y_bar: float) -> float:
    """Lower bound on ln(1 + x/y) built at (x_bar, y_bar).

    Equals ln(1 + x_bar/y_bar) when x = x_bar and y = y_bar. All arguments
    must be positive.
    """
    if min(x, y, x_bar, y_bar) <= 0:
        raise ValueError("log_ratio_lower_bound needs positive arguments")
    s = x_bar / y_bar
    return np.log(1.0 + s) + s * (2.0 * np.sqrt(x / x_bar)
                                  - (x + y) / (x_bar + y_bar) - 1.0)


@dataclass(frozen=True)
class ReceiverRateCoeffs:
    """Frozen per-user expansion constants for one receiver.

    ``fold[k, m]`` is the N-vector v with v^H gamma = c_k^H A_m gamma, so
    every channel-filter product reduces to an inner product with gamma.
    ``s_bar[k, m] = c_k^H A_m gamma_bar``. ``active[k]`` is False when the
    user's signal term is identically zero (p_k = 0 or a null effective
    channel), in which case the rate term contributes exactly zero.
    """

    a_bar: np.ndarray       # (K,)  rate at the expansion point, bit/s/Hz
    b_bar: np.ndarray       # (K,)  SINR at the expansion point
    d_bar: np.ndarray       # (K,)  2 / |c^H A_k gamma_bar|
    e_bar: np.ndarray       # (K,)  1 / (full denominator at gamma_bar)
    f_bar: np.ndarray       # (K,)  e_bar * sigma^2 ||c_k||^2 + 1
    u_tilde: np.ndarray     # (K, N) |G^H c_k|^2 entries
    fold: np.ndarray        # (K, K, N)
    s_bar: np.ndarray       # (K, K)
    cnorm2: np.ndarray      # (K,)
    active: np.ndarray      # (K,) bool
    v_bar: np.ndarray       # (K,)  quadratic noise+interference at gamma_bar
    taylor_lin: np.ndarray  # (K, N) half-gradient of that quadratic at gamma_bar


@dataclass(frozen=True)
class CanonicalSurrogate:
    """The secrecy surrogate compiled to canonical concave form.

    value(gamma) = c0 + Re{b0^H gamma} - sum_n d0_n |gamma_n|^2
                   - sum_j w_j |quad_vecs[j]^H gamma|^2
                   - sum_k kink_w[k] |kink_vecs[k]^H gamma|

    This single form backs both the fast evaluator and the structured
    subproblem solver.
    """

    c0: float
    b0: np.ndarray         # (N,)
    d0: np.ndarray         # (N,) nonnegative
    quad_vecs: np.ndarray  # (J, N)
    quad_w: np.ndarray     # (J,) nonnegative
    kink_vecs: np.ndarray  # (Ke, N)
    kink_w: np.ndarray     # (Ke,) nonnegative

    def value_grad(self, gamma: np.ndarray):
        sq = self.quad_vecs.conj() @ gamma
        sk = self.kink_vecs.conj() @ gamma
        absk = np.abs(sk)
        value = (self.c0 + float(np.real(np.vdot(self.b0, gamma)))
                 - float(self.d0 @ np.abs(gamma) ** 2)
                 - float(self.quad_w @ np.abs(sq) ** 2)
                 - float(self.kink_w @ absk))
        safe = np.where(absk > 0, absk, 1.0)
        grad = (self.b0 / 2.0 - self.d0 * gamma
                - self.quad_vecs.T @ (self.quad_w * sq)
                - self.kink_vecs.T @ (self.kink_w * 0.5 * sk / safe))
        return value, grad


@dataclass(frozen=True)
class SurrogateCoeffs:
    """Expansion-point constants defining the concave secrecy minorant."""

    expansion_point_gamma: np.ndarray
    bob: ReceiverRateCoeffs
    eve: ReceiverRateCoeffs
    canonical: CanonicalSurrogate


def _receiver_coeffs(alloc: Allocation, channels: ChannelSet,
                     params: SystemParams, gamma_bar: np.ndarray,
                     receiver: Receiver) -> ReceiverRateCoeffs:
    C = alloc.C(receiver)
    p = alloc.p
    K = params.K
    U = channels.G(receiver).conj().T @ C            # (N, K)
    u_tilde = (np.abs(U) ** 2).T                     # (K, N)
    cnorm2 = np.sum(np.abs(C) ** 2, axis=0)
    # fold[k, m, n] = conj(h[m, n]) * U[n, k]  ->  fold[k, m]^H gamma = c_k^H A_m gamma
    fold = channels.h.conj()[None, :, :] * U.T[:, None, :]
    s_bar = fold.conj() @ gamma_bar                  # (K, K)

    sig2 = sigma2(params, receiver)
    quad = u_tilde @ (np.abs(gamma_bar) ** 2)
    gains = np.abs(s_bar) ** 2
    inter = gains @ p - p * np.diag(gains)
    den_int = sig2 * cnorm2 + params.sigma2_RIS * quad + inter
    den_full = den_int + p * np.diag(gains)

    sig_mag = np.abs(np.diag(s_bar))
    vnorm = np.linalg.norm(fold[np.arange(K), np.arange(K)], axis=1)
    active = (p > 0) & (vnorm > 0)
    scale = vnorm * float(np.linalg.norm(gamma_bar))
    bad = active & (sig_mag < DEGENERATE_TOL * scale)
    if np.any(bad):
        raise DegenerateExpansionError(
            f"expansion point nulls user(s) {np.flatnonzero(bad).tolist()} "
            f"at {receiver.value}")
    if np.any(den_int <= 0):
        raise ValueError("nonpositive rate denominator (needs sigma_i^2 > 0)")

    snr = np.where(active, p * sig_mag ** 2 / den_int, 0.0)
    a_bar = np.log2(1.0 + snr)
    b_bar = snr
    d_bar = np.where(active, 2.0 / np.where(active, sig_mag, 1.0), 0.0)
    e_bar = 1.0 / den_full
    f_bar = e_bar * sig2 * cnorm2 + 1.0
    v_bar = params.sigma2_RIS * quad + gains @ p
    taylor_lin = params.sigma2_RIS * u_tilde * gamma_bar[None, :] \
        + np.einsum("km,kmn->kn", s_bar * p[None, :], fold)
    return ReceiverRateCoeffs(a_bar=a_bar, b_bar=b_bar, d_bar=d_bar,
                              e_bar=e_bar, f_bar=f_bar, u_tilde=u_tilde,
                              fold=fold, s_bar=s_bar, cnorm2=cnorm2,
                              active=active, v_bar=v_bar, taylor_lin=taylor_lin)


def _compile_canonical(bob: ReceiverRateCoeffs, eve: ReceiverRateCoeffs,
                       p: np.ndarray, sigma2_ris: float,
                       n: int) -> CanonicalSurrogate:
    K = p.shape[0]
    c0 = 0.0
    b0 = np.zeros(n, dtype=complex)
    d0 = np.zeros(n)
    quad_vecs, quad_w = [], []
    kink_vecs, kink_w = [], []
    for k in range(K):
        if bob.active[k]:
            w = bob.b_bar[k] / LN2
            sb = bob.s_bar[k, k]
            c0 += bob.a_bar[k] - w * bob.f_bar[k]
            b0 += (w * bob.d_bar[k]) * (sb / abs(sb)) * bob.fold[k, k]
            d0 += (w * bob.e_bar[k] * sigma2_ris) * bob.u_tilde[k]
            for m in range(K):
                if p[m] > 0:
                    quad_vecs.append(bob.fold[k, m])
                    quad_w.append(w * bob.e_bar[k] * p[m])
        if eve.active[k]:
            w = eve.b_bar[k] / LN2
            c0 += -eve.a_bar[k] + w * eve.f_bar[k] - w * eve.e_bar[k] * eve.v_bar[k]
            b0 += (2.0 * w * eve.e_bar[k]) * eve.taylor_lin[k]
            kink_vecs.append(eve.fold[k, k])
            kink_w.append(w * eve.d_bar[k])
    return CanonicalSurrogate(
        c0=float(c0), b0=b0, d0=d0,
        quad_vecs=(np.asarray(quad_vecs) if quad_vecs
                   else np.zeros((0, n), dtype=complex)),
        quad_w=np.asarray(quad_w, dtype=float),
        kink_vecs=(np.asarray(kink_vecs) if kink_vecs
                   else np.zeros((0, n), dtype=complex)),
        kink_w=np.asarray(kink_w, dtype=float),
    )


def rate_surrogate_coeffs(alloc: Allocation, channels: ChannelSet,
                          params: SystemParams,
                          gamma_bar: np.ndarray) -> SurrogateCoeffs:
    """Build the expansion constants for both receivers at gamma_bar.

    Raises :class:`DegenerateExpansionError` when a user with positive
    power and a nonzero effective channel is nulled by gamma_bar.
    """
    gamma_bar = np.asarray(gamma_bar, dtype=complex).reshape(-1)
    bob = _receiver_coeffs(alloc, channels, params, gamma_bar, Receiver.BOB)
    eve = _receiver_coeffs(alloc, channels, params, gamma_bar, Receiver.EVE)
    canonical = _compile_canonical(bob, eve, alloc.p, params.sigma2_RIS,
                                   channels.N)
    return SurrogateCoeffs(expansion_point_gamma=gamma_bar, bob=bob, eve=eve,
                           canonical=canonical)


def concave_secrecy_surrogate(gamma: np.ndarray, coeffs: SurrogateCoeffs,
                              alloc: Allocation, channels: ChannelSet,
                              params: SystemParams):
    """Concave secrecy-rate minorant and its conjugate gradient at gamma.

    At gamma = expansion point the value equals the unclamped secrecy rate
    there. The gradient follows the Wirtinger convention: the returned
    vector g satisfies d f = 2 Re{g^H d gamma}.
    """
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    if gamma.shape != coeffs.expansion_point_gamma.shape:
        raise ValueError("gamma dimension mismatch with the expansion point")
    return coeffs.canonical.value_grad(gamma)


def trace_linearization(gamma: np.ndarray, gamma_bar: np.ndarray,
                        R: np.ndarray) -> float:
    """Affine lower bound on gamma^H R gamma expanded at gamma_bar."""
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    gamma_bar = np.asarray(gamma_bar, dtype=complex).reshape(-1)
    R = np.asarray(R)
    base = np.real(gamma_bar.conj() @ R @ gamma_bar)
    return float(base + 2.0 * np.real(gamma_bar.conj() @ R @ (gamma - gamma_bar)))


@dataclass(frozen=True)
class PowerSurrogateState:
    """Frozen coefficients of the power subproblem at fixed (gamma, C).

    ``a_bob[k, m] = |c_kB^H A_m gamma|^2`` and likewise for Eve;
    ``d_*[k] = c_k^H W c_k``. The denominator identity
    ``sum_k mu_eq[k] p_k + p_c_eq = P_tot(p)`` holds for every p.
    """

    expansion_point_p: np.ndarray
    a_bob: np.ndarray
    a_eve: np.ndarray
    d_bob: np.ndarray
    d_eve: np.ndarray
    mu_eq: np.ndarray
    p_c_eq: float


def build_power_state(alloc: Allocation, channels: ChannelSet,
                      params: SystemParams) -> PowerSurrogateState:
    """Extract the power-subproblem coefficients from the current allocation."""
    coeff = {}
    for receiver in (Receiver.BOB, Receiver.EVE):
        C = alloc.C(receiver)
        U = channels.G(receiver).conj().T @ C
        S = U.conj().T @ (channels.h * alloc.gamma[None, :]).T
        quad = (np.abs(U) ** 2).T @ (np.abs(alloc.gamma) ** 2)
        cnorm2 = np.sum(np.abs(C) ** 2, axis=0)
        coeff[receiver] = (np.abs(S) ** 2,
                           sigma2(params, receiver) * cnorm2
                           + params.sigma2_RIS * quad)
    if params.ris_mode is RisMode.ACTIVE:
        gain = (np.abs(channels.h) ** 2) @ (np.abs(alloc.gamma) ** 2)
        mu_eq = params.mu - np.sum(np.abs(channels.h) ** 2, axis=1) + gain
        p_c_eq = params.sigma2_RIS * (float(np.sum(np.abs(alloc.gamma) ** 2))
                                      - params.N) + params.P_c
    else:
        mu_eq = params.mu.copy()
        p_c_eq = params.P_c
    return PowerSurrogateState(
        expansion_point_p=alloc.p.copy(),
        a_bob=coeff[Receiver.BOB][0], a_eve=coeff[Receiver.EVE][0],
        d_bob=coeff[Receiver.BOB][1], d_eve=coeff[Receiver.EVE][1],
        mu_eq=mu_eq, p_c_eq=float(p_c_eq),
    )


def _mask_diag(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    np.fill_diagonal(out, 0.0)
    return out


def _f_full(p: np.ndarray, a: np.ndarray, d: np.ndarray) -> float:
    """f_1: sum_k log2(d_k + sum_m p_m a_{k,m})."""
    return float(np.sum(np.log2(d + a @ p)))


def _f_int(p: np.ndarray, a: np.ndarray, d: np.ndarray) -> float:
    """f_2: same with the self term excluded before summing (subtracting
    it afterwards would cancel catastrophically when it dominates)."""
    return float(np.sum(np.log2(d + _mask_diag(a) @ p)))


def _grad_f_full(p: np.ndarray, a: np.ndarray, d: np.ndarray) -> np.ndarray:
    den = d + a @ p
    return (a / den[:, None]).sum(axis=0) / LN2


def _grad_f_int(p: np.ndarray, a: np.ndarray, d: np.ndarray) -> np.ndarray:
    am = _mask_diag(a)
    den = d + am @ p
    return (am / den[:, None]).sum(axis=0) / LN2


def power_objective_exact(p: np.ndarray, state: PowerSurrogateState) -> float:
    """Exact (unclamped) secrecy rate over total power, bit/s/Hz per watt."""
    p = np.asarray(p, dtype=float).reshape(-1)
    num = (_f_full(p, state.a_bob, state.d_bob) - _f_int(p, state.a_bob, state.d_bob)
           - _f_full(p, state.a_eve, state.d_eve) + _f_int(p, state.a_eve, state.d_eve))
    den = float(state.mu_eq @ p) + state.p_c_eq
    return num / den


def power_surrogate(p: np.ndarray, state: PowerSurrogateState):
    """Pseudo-concave power surrogate value and its numerator gradient.

    The numerator keeps the concave logs of (full Bob, interference-only
    Eve) exact and replaces the other two by first-order expansions at the
    state's expansion point; the denominator is the affine total power.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    pb = state.expansion_point_p
    den = float(state.mu_eq @ p) + state.p_c_eq
    if den <= 0:
        raise ValueError("nonpositive power denominator: invalid mu_eq/p_c_eq")
    g2b = _grad_f_int(pb, state.a_bob, state.d_bob)
    g1e = _grad_f_full(pb, state.a_eve, state.d_eve)
    num = (_f_full(p, state.a_bob, state.d_bob)
           + _f_int(p, state.a_eve, state.d_eve)
           - _f_int(pb, state.a_bob, state.d_bob) - float(g2b @ (p - pb))
           - _f_full(pb, state.a_eve, state.d_eve) - float(g1e @ (p - pb)))
    grad_num = (_grad_f_full(p, state.a_bob, state.d_bob)
                + _grad_f_int(p, state.a_eve, state.d_eve) - g2b - g1e)
    return num / den, grad_num


def power_surrogate_numerator(p: np.ndarray, state: PowerSurrogateState) -> float:
    """Concave numerator of the power surrogate (used for minorant checks)."""
    p = np.asarray(p, dtype=float).reshape(-1)
    pb = state.expansion_point_p
    g2b = _grad_f_int(pb, state.a_bob, state.d_bob)
    g1e = _grad_f_full(pb, state.a_eve, state.d_eve)
    return (_f_full(p, state.a_bob, state.d_bob)
            + _f_int(p, state.a_eve, state.d_eve)
            - _f_int(pb, state.a_bob, state.d_bob) - float(g2b @ (p - pb))
            - _f_full(pb, state.a_eve, state.d_eve) - float(g1e @ (p - pb)))


def power_numerator_exact(p: np.ndarray, state: PowerSurrogateState) -> float:
    """Exact unclamped secrecy-rate numerator at p."""
    p = np.asarray(p, dtype=float).reshape(-1)
    return (_f_full(p, state.a_bob, state.d_bob) - _f_int(p, state.a_bob, state.d_bob)
            - _f_full(p, state.a_eve, state.d_eve) + _f_int(p, state.a_eve, state.d_eve))


def grad_f2_bob(p: np.ndarray, state: PowerSurrogateState) -> np.ndarray:
    """Gradient of the Bob interference-only log-sum (Taylored term)."""
    return _grad_f_int(np.asarray(p, float).reshape(-1), state.a_bob, state.d_bob)


def grad_f1_eve(p: np.ndarray, state: PowerSurrogateState) -> np.ndarray:
    """Gradient of the Eve full log-sum (Taylored term)."""
    return _grad_f_full(np.asarray(p, float).reshape(-1), state.a_eve, state.d_eve)


def f2_bob(p: np.ndarray, state: PowerSurrogateState) -> float:
    return _f_int(np.asarray(p, float).reshape(-1), state.a_bob, state.d_bob)


def f1_eve(p: np.ndarray, state: PowerSurrogateState) -> float:
    return _f_full(np.asarray(p, float).reshape(-1), state.a_eve, state.d_eve)
