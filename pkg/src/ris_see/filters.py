"""Closed-form LMMSE receive filters for both receivers.

The LMMSE filter maximizes each user's SINR, so applying it at Bob can
only help the legitimate link; applying it at Eve as well evaluates
secrecy against the strongest linear eavesdropper.
"""

from __future__ import annotations

import numpy as np

from .model import Allocation, ChannelSet, Receiver, SystemParams, noise_covariance


def _lmmse_bank(alloc: Allocation, channels: ChannelSet, params: SystemParams,
                receiver: Receiver) -> np.ndarray:
    G = channels.G(receiver)
    n_i = G.shape[0]
    K = params.K
    W = noise_covariance(channels, alloc.gamma, receiver, params)
    a = (channels.h * alloc.gamma[None, :]) @ G.T    # (K, N_i), row k = A_k gamma
    C = np.zeros((n_i, K), dtype=complex)
    for k in range(K):
        M = W.copy()
        for m in range(K):
            if m != k and alloc.p[m] > 0:
                M += alloc.p[m] * np.outer(a[m], a[m].conj())
        c = np.sqrt(alloc.p[k]) * np.linalg.solve(M, a[k])
        if np.linalg.norm(c) == 0.0:
            # zero-power or nulled user: fall back to a unit vector so the
            # filter column stays usable downstream
            c = np.zeros(n_i, dtype=complex)
            c[k % n_i] = 1.0
        C[:, k] = c
    return C


def lmmse_filters(alloc: Allocation, channels: ChannelSet,
                  params: SystemParams):
    """LMMSE filter banks (C_B, C_E): c_k = sqrt(p_k) M_k^{-1} A_k gamma.

    M_k is the interference-plus-noise covariance of user k; it is positive
    definite whenever the receiver noise power is positive.
    """
    if params.sigma2_B <= 0 or params.sigma2_E <= 0:
        raise ValueError("LMMSE filters need positive receiver noise power")
    return (_lmmse_bank(alloc, channels, params, Receiver.BOB),
            _lmmse_bank(alloc, channels, params, Receiver.EVE))


def normalized_columns(C: np.ndarray) -> np.ndarray:
    """Rescale every filter column to unit norm (SINRs are scale invariant)."""
    norms = np.linalg.norm(C, axis=0)
    return C / np.where(norms > 0, norms, 1.0)
