"""Sparse doubly-selective MIMO channel generation and OFDM link simulation."""
import math

import numpy as np

from .bem import BemCoefficients, ChannelRealization, bem_reconstruct, cebem_basis
from .exceptions import ParameterError


def ofdm_modulate(freq):
    """Frequency-domain symbol to time domain, ``s = W^H S``."""
    return np.fft.ifft(np.asarray(freq, dtype=complex), norm="ortho")


def ofdm_demodulate(time):
    """Time-domain samples to frequency domain, ``S = W s``."""
    return np.fft.fft(np.asarray(time, dtype=complex), norm="ortho")


def qpsk_symbols(n, rng):
    """``n`` unit-energy QPSK symbols."""
    bits = rng.integers(0, 2, size=(2, n))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)


def generate_support(L, K, rng):
    """Draw ``K`` distinct tap indices from ``[0, L)``, sorted."""
    if K > L or K < 0:
        raise ParameterError(f"cannot draw K={K} strong taps out of L={L}")
    return np.sort(rng.choice(L, size=K, replace=False))


def jakes_process(n_samples, doppler, shape, rng, oscillators=32):
    """Unit-power Rayleigh fading processes by sum of sinusoids.

    Arrival angles are equally spaced with a random common rotation per
    process, so the autocorrelation is ``J0(2*pi*doppler*lag)`` in
    expectation. ``doppler`` is in cycles per sample.

    Returns an array of shape ``shape + (n_samples,)``.
    """
    shape = tuple(shape)
    m = np.arange(oscillators)
    rotation = rng.uniform(-np.pi, np.pi, size=shape + (1,))
    angles = (2 * np.pi * m - np.pi + rotation) / oscillators
    phases = rng.uniform(-np.pi, np.pi, size=shape + (oscillators,))
    omega = 2 * np.pi * doppler * np.cos(angles)
    # exp(j*w*n) with n = hi*B + lo, so the oscillator sum becomes a batched matmul
    B = max(1, int(np.ceil(np.sqrt(n_samples))))
    n_hi = -(-n_samples // B)
    hi = np.exp(1j * (omega[..., None] * (B * np.arange(n_hi)) + phases[..., None]))
    lo = np.exp(1j * omega[..., None] * np.arange(B))
    out = np.swapaxes(hi, -1, -2) @ lo
    out = out.reshape(shape + (n_hi * B,))[..., :n_samples]
    return out / np.sqrt(oscillators)


def generate_ds_channel(cfg, support, rng, tap_powers=None):
    """Jakes-faded channel on a common tap support.

    Every (antenna, supported tap) pair gets an independent fading process.
    Tap powers default to ``1/K`` each so the expected total power is one.
    """
    support = np.asarray(support, dtype=int)
    _check_support(support, cfg.L)
    K = support.size
    if tap_powers is None:
        tap_powers = np.full(K, 1.0 / K)
    tap_powers = np.asarray(tap_powers, dtype=float)
    if tap_powers.shape != (K,):
        raise ParameterError(f"need {K} tap powers, got {tap_powers.shape}")

    fading = jakes_process(
        cfg.N, cfg.doppler_norm / cfg.N, (cfg.n_antennas, K), rng, cfg.oscillators
    )
    h = np.zeros((cfg.n_antennas, cfg.N, cfg.L), dtype=complex)
    h[:, :, support] = np.transpose(fading, (0, 2, 1)) * np.sqrt(tap_powers)
    return ChannelRealization(h, support=support)


def generate_bem_channel(cfg, support, rng):
    """Channel lying exactly in the CE-BEM span, with i.i.d. CN(0, 1/(K*D)) coefficients."""
    support = np.asarray(support, dtype=int)
    _check_support(support, cfg.L)
    theta = np.zeros((cfg.n_antennas, cfg.D, cfg.L), dtype=complex)
    shape = (cfg.n_antennas, cfg.D, support.size)
    scale = 1.0 / math.sqrt(2 * max(support.size, 1) * cfg.D)
    theta[:, :, support] = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    coef = BemCoefficients(theta, support=support)
    ch = bem_reconstruct(coef, cebem_basis(cfg.N, cfg.D))
    ch.modeling_error = np.zeros_like(ch.h)
    return ch, coef


def _check_support(support, L):
    if support.ndim != 1 or np.any(support < 0) or np.any(support >= L):
        raise ParameterError(f"support {support} outside [0, {L})")
    if np.unique(support).size != support.size:
        raise ParameterError("support indices must be distinct")


def apply_channel_time(ch, symbols):
    """Noiseless received samples ``y[n] = sum_a sum_l h[a,n,l] s_a[(n-l) mod N]``.

    Parameters
    ----------
    ch : ChannelRealization
    symbols : array of shape (n_antennas, N)
        Time-domain OFDM symbol of every transmit antenna.
    """
    s = np.atleast_2d(np.asarray(symbols, dtype=complex))
    if s.shape[0] != ch.n_antennas:
        raise ParameterError(f"{s.shape[0]} symbols for {ch.n_antennas} antennas")
    N, L = ch.n_instants, ch.n_taps
    if s.shape[1] != N:
        raise ParameterError(f"symbol length {s.shape[1]} does not match N={N}")
    idx = (np.arange(N)[:, None] - np.arange(L)[None, :]) % N
    return np.einsum("anl,anl->n", ch.h, s[:, idx])


def time_channel_matrix(h_antenna):
    """Dense ``N x N`` time-domain channel matrix ``H[p, q] = h[p, (p-q) mod N]``."""
    N, L = h_antenna.shape
    H = np.zeros((N, N), dtype=complex)
    p = np.arange(N)
    for l in range(L):
        H[p, (p - l) % N] = h_antenna[:, l]
    return H


def add_noise(y, snr_db, rng, signal_power=None):
    """Add circular Gaussian noise at ``snr_db`` relative to the mean sample power of ``y``.

    ``signal_power`` replaces the measured power as the SNR reference.
    Returns ``(noisy, sigma2)``; an infinite SNR leaves ``y`` untouched.
    """
    y = np.asarray(y, dtype=complex)
    if math.isinf(snr_db) and snr_db > 0:
        return y.copy(), 0.0
    power = np.mean(np.abs(y) ** 2) if signal_power is None else signal_power
    if power == 0:
        raise ParameterError("cannot set an SNR on an all-zero signal")
    sigma2 = power / 10 ** (snr_db / 10)
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y + noise, sigma2
