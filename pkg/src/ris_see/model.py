"""Domain types and exact performance metrics for the RIS-aided uplink.

Conventions used throughout the package:

* ``h`` is the stack of user-to-RIS channels, shape ``(K, N)``; user k's
  channel matrix is ``diag(h[k])``.
* ``G_B`` / ``G_E`` are the RIS-to-receiver channels, shapes ``(N_B, N)``
  and ``(N_E, N)``.
* The effective user->receiver channel is ``A_{k,i} = G_i @ diag(h[k])``.
* All powers are in watts, rates in bit/s/Hz unless a bandwidth factor is
  applied explicitly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

LN2 = float(np.log(2.0))

# Relative tolerance for the quadratic reflection-power constraints.
FEAS_RTOL = 1e-9


class RisMode(enum.Enum):
    ACTIVE = "active"
    NEARLY_PASSIVE = "nearly_passive"


class Receiver(enum.Enum):
    BOB = "bob"
    EVE = "eve"


def _as_float_vec(x, n, name):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    return arr


@dataclass(frozen=True)
class SystemParams:
    """Scalar system configuration: sizes, noise levels and the power model.

    ``mu`` holds the inverse transmit-amplifier efficiencies (one per user,
    each >= 1) and ``P_max`` the per-user transmit power caps in watts.
    ``P_cn`` is the static power of a single RIS element, ``P0_ris`` the
    remaining RIS static power and ``P0`` all other static consumption of
    the legitimate system.
    """

    K: int
    N: int
    N_B: int
    N_E: int
    bandwidth_hz: float
    sigma2_B: float
    sigma2_E: float
    sigma2_RIS: float
    mu: np.ndarray
    P_cn: float
    P0_ris: float
    P0: float
    P_R_max: float
    P_max: np.ndarray
    ris_mode: RisMode = RisMode.ACTIVE

    def __post_init__(self):
        for name in ("K", "N", "N_B", "N_E"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        object.__setattr__(self, "mu", _as_float_vec(self.mu, self.K, "mu"))
        object.__setattr__(self, "P_max", _as_float_vec(self.P_max, self.K, "P_max"))
        for name in ("bandwidth_hz", "sigma2_B", "sigma2_E", "sigma2_RIS",
                     "P_cn", "P0_ris", "P0", "P_R_max"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if np.any(self.P_max < 0):
            raise ValueError("P_max entries must be nonnegative")
        if np.any(self.mu < 1.0):
            raise ValueError("mu entries must be >= 1")
        if self.ris_mode is RisMode.NEARLY_PASSIVE:
            if self.sigma2_RIS != 0.0 or self.P_R_max != 0.0:
                raise ValueError(
                    "nearly-passive mode requires sigma2_RIS = 0 and P_R_max = 0")

    @property
    def P_c(self) -> float:
        """Total static power N*P_cn + P0_ris + P0 in watts."""
        return self.N * self.P_cn + self.P0_ris + self.P0


@dataclass(frozen=True)
class ChannelSet:
    """One random channel realization.

    ``h``: user->RIS channels, shape (K, N). ``G_B``: RIS->Bob, shape
    (N_B, N). ``G_E``: RIS->Eve, shape (N_E, N).
    """

    h: np.ndarray
    G_B: np.ndarray
    G_E: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        G_B = np.asarray(self.G_B, dtype=complex)
        G_E = np.asarray(self.G_E, dtype=complex)
        if h.ndim != 2 or G_B.ndim != 2 or G_E.ndim != 2:
            raise ValueError("h, G_B, G_E must be 2-D arrays")
        if G_B.shape[1] != h.shape[1] or G_E.shape[1] != h.shape[1]:
            raise ValueError("G_B/G_E column count must equal the RIS size N")
        for name, a in (("h", h), ("G_B", G_B), ("G_E", G_E)):
            if not np.all(np.isfinite(a.view(float))):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "G_B", G_B)
        object.__setattr__(self, "G_E", G_E)

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def N(self) -> int:
        return self.h.shape[1]

    def G(self, receiver: Receiver) -> np.ndarray:
        return self.G_B if receiver is Receiver.BOB else self.G_E


@dataclass(frozen=True)
class Allocation:
    """Decision variables: RIS vector, transmit powers and filter banks.

    ``C_B``/``C_E`` hold one receive filter per column (column k filters
    user k); columns must have nonzero norm wherever they are used.
    """

    gamma: np.ndarray
    p: np.ndarray
    C_B: np.ndarray
    C_E: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=complex).reshape(-1))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(-1))
        object.__setattr__(self, "C_B", np.asarray(self.C_B, dtype=complex))
        object.__setattr__(self, "C_E", np.asarray(self.C_E, dtype=complex))

    def C(self, receiver: Receiver) -> np.ndarray:
        return self.C_B if receiver is Receiver.BOB else self.C_E

    def with_gamma(self, gamma) -> "Allocation":
        return replace(self, gamma=gamma)

    def with_p(self, p) -> "Allocation":
        return replace(self, p=p)

    def with_filters(self, C_B, C_E) -> "Allocation":
        return replace(self, C_B=C_B, C_E=C_E)


@dataclass(frozen=True)
class PerfReport:
    """Evaluated metrics for one allocation on one channel realization."""

    rate_bob: np.ndarray      # (K,) bit/s
    rate_eve: np.ndarray      # (K,) bit/s
    ssr: float                # bit/s, clamped at zero
    p_rf_ris: float           # watts, P_out - P_in (negative allowed)
    p_tot: float              # watts
    see: float                # bit/Joule
    feasible: bool
    notes: str = ""


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple = ()

    def __bool__(self) -> bool:
        return self.feasible


def sigma2(params: SystemParams, receiver: Receiver) -> float:
    return params.sigma2_B if receiver is Receiver.BOB else params.sigma2_E


def effective_channel(channels: ChannelSet, k: int, receiver: Receiver) -> np.ndarray:
    """Effective channel A_{k,i} = G_i @ diag(h_k), shape (N_i, N)."""
    if not 0 <= k < channels.K:
        raise IndexError(f"user index {k} out of range for K={channels.K}")
    return channels.G(receiver) * channels.h[k][None, :]


def noise_covariance(channels: ChannelSet, gamma: np.ndarray,
                     receiver: Receiver, params: SystemParams) -> np.ndarray:
    """Receiver noise covariance sigma_i^2 I + sigma_RIS^2 G diag(|gamma|^2) G^H."""
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    if gamma.shape[0] != channels.N:
        raise ValueError("gamma length must equal the RIS size N")
    G = channels.G(receiver)
    n_i = G.shape[0]
    W = sigma2(params, receiver) * np.eye(n_i, dtype=complex)
    if params.sigma2_RIS > 0:
        Gs = G * (np.abs(gamma) ** 2)[None, :]
        W = W + params.sigma2_RIS * Gs @ G.conj().T
    return W


def _cross_gains(alloc: Allocation, channels: ChannelSet, receiver: Receiver):
    """Return (S, noise) with S[k, m] = c_k^H A_m gamma and noise[k] = c_k^H W c_k."""
    C = alloc.C(receiver)
    G = channels.G(receiver)
    U = G.conj().T @ C                                  # (N, K), column k = G^H c_k
    S = U.conj().T @ (channels.h * alloc.gamma[None, :]).T
    return S, U


def _noise_terms(alloc: Allocation, U: np.ndarray, receiver: Receiver,
                 params: SystemParams) -> np.ndarray:
    """c_k^H W c_k for all k, via sigma^2 ||c_k||^2 + sigma_RIS^2 gamma^H Utilde gamma."""
    C = alloc.C(receiver)
    cnorm2 = np.sum(np.abs(C) ** 2, axis=0)
    quad = (np.abs(U) ** 2).T @ (np.abs(alloc.gamma) ** 2)
    return sigma2(params, receiver) * cnorm2 + params.sigma2_RIS * quad


def sinr_all(alloc: Allocation, channels: ChannelSet, params: SystemParams,
             receiver: Receiver) -> np.ndarray:
    """Per-user SINRs after linear filtering at the given receiver, shape (K,)."""
    C = alloc.C(receiver)
    norms = np.sqrt(np.sum(np.abs(C) ** 2, axis=0))
    if np.any(norms == 0):
        raise ValueError("zero filter column")
    S, U = _cross_gains(alloc, channels, receiver)
    noise = _noise_terms(alloc, U, receiver, params)
    gains = np.abs(S) ** 2                              # gains[k, m]
    inter = gains @ alloc.p - alloc.p * np.diag(gains)
    den = noise + inter
    if np.any(den <= 0):
        raise ValueError("nonpositive SINR denominator (needs sigma_i^2 > 0)")
    return alloc.p * np.diag(gains) / den


def sinr(alloc: Allocation, channels: ChannelSet, params: SystemParams,
         k: int, receiver: Receiver) -> float:
    """SINR of user k at the given receiver."""
    if not 0 <= k < channels.K:
        raise IndexError(f"user index {k} out of range for K={channels.K}")
    return float(sinr_all(alloc, channels, params, receiver)[k])


def secrecy_rate_unclamped(alloc: Allocation, channels: ChannelSet,
                           params: SystemParams) -> float:
    """Sum over users of (rate at Bob - rate at Eve), bit/s/Hz, no clamp."""
    sb = sinr_all(alloc, channels, params, Receiver.BOB)
    se = sinr_all(alloc, channels, params, Receiver.EVE)
    return float(np.sum(np.log2(1 + sb) - np.log2(1 + se)))


def secrecy_rate(alloc: Allocation, channels: ChannelSet,
                 params: SystemParams) -> float:
    """System secrecy rate max{sum_k (R_kB - R_kE), 0} in bit/s/Hz."""
    return max(secrecy_rate_unclamped(alloc, channels, params), 0.0)


def reflection_gram_diag(channels: ChannelSet, p: np.ndarray,
                         params: SystemParams) -> np.ndarray:
    """Diagonal of R = sum_k p_k diag(|h_k|^2) + sigma_RIS^2 I, shape (N,).

    R is diagonal because the per-user channel matrices are diagonal.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    return (np.abs(channels.h) ** 2).T @ p + params.sigma2_RIS


def ris_rf_power(alloc: Allocation, channels: ChannelSet,
                 params: SystemParams) -> float:
    """Net RF power injected by the RIS, gamma^H R gamma - tr(R), in watts."""
    r = reflection_gram_diag(channels, alloc.p, params)
    quad = float(r @ (np.abs(alloc.gamma) ** 2))
    return quad - float(np.sum(r))


def total_power(alloc: Allocation, channels: ChannelSet,
                params: SystemParams) -> float:
    """Total consumed power: RF term (active mode only) + amplifiers + static."""
    p_tot = float(params.mu @ alloc.p) + params.P_c
    if params.ris_mode is RisMode.ACTIVE:
        p_tot += ris_rf_power(alloc, channels, params)
    if p_tot <= 0:
        raise ValueError(f"nonpositive total power {p_tot}: invalid configuration")
    return p_tot


def see(alloc: Allocation, channels: ChannelSet, params: SystemParams) -> float:
    """Secrecy energy efficiency B * R_S / P_tot in bit/Joule."""
    return params.bandwidth_hz * secrecy_rate(alloc, channels, params) \
        / total_power(alloc, channels, params)


def check_feasibility(alloc: Allocation, channels: ChannelSet,
                      params: SystemParams) -> FeasibilityReport:
    """Check the reflection-power and transmit-power constraints.

    Active mode enforces tr(R) <= gamma^H R gamma <= P_R_max + tr(R);
    nearly-passive mode only gamma^H R gamma <= tr(R). The quadratic
    constraints use a relative tolerance of ``FEAS_RTOL``.
    """
    violations = []
    r = reflection_gram_diag(channels, alloc.p, params)
    tr_r = float(np.sum(r))
    quad = float(r @ (np.abs(alloc.gamma) ** 2))
    tol_q = FEAS_RTOL * (tr_r + params.P_R_max + 1e-300)
    if params.ris_mode is RisMode.ACTIVE:
        if quad < tr_r - tol_q:
            violations.append(
                f"RF lower bound: gamma^H R gamma = {quad:.6e} < tr(R) = {tr_r:.6e}")
        if quad > tr_r + params.P_R_max + tol_q:
            violations.append(
                f"RF upper bound: gamma^H R gamma = {quad:.6e} > "
                f"tr(R) + P_R_max = {tr_r + params.P_R_max:.6e}")
    else:
        if quad > tr_r + tol_q:
            violations.append(
                f"reflected power: gamma^H R gamma = {quad:.6e} > tr(R) = {tr_r:.6e}")
    for k in range(params.K):
        cap = params.P_max[k]
        tol_p = FEAS_RTOL * max(cap, 1e-30)
        if alloc.p[k] < -tol_p or alloc.p[k] > cap + tol_p:
            violations.append(
                f"power box: p[{k}] = {alloc.p[k]:.6e} outside [0, {cap:.6e}]")
    return FeasibilityReport(feasible=not violations, violations=tuple(violations))


def perf_report(alloc: Allocation, channels: ChannelSet,
                params: SystemParams) -> PerfReport:
    """Evaluate all reported metrics for an allocation."""
    B = params.bandwidth_hz
    rate_b = B * np.log2(1 + sinr_all(alloc, channels, params, Receiver.BOB))
    rate_e = B * np.log2(1 + sinr_all(alloc, channels, params, Receiver.EVE))
    ssr = max(float(np.sum(rate_b - rate_e)), 0.0)
    p_tot = total_power(alloc, channels, params)
    feas = check_feasibility(alloc, channels, params)
    return PerfReport(
        rate_bob=rate_b,
        rate_eve=rate_e,
        ssr=ssr,
        p_rf_ris=ris_rf_power(alloc, channels, params),
        p_tot=p_tot,
        see=ssr / p_tot,
        feasible=feas.feasible,
        notes="; ".join(feas.violations),
    )
