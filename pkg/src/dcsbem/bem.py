"""Complex-exponential basis expansion model (CE-BEM).

A doubly-selective channel tap ``h[:, l]`` observed over the ``N`` samples of
one OFDM symbol is approximated by ``V @ theta[:, l]`` where the columns of
``V`` are complex exponentials at integer multiples of the subcarrier spacing,
symmetric around DC.

Channel tensors are indexed ``[antenna, instant, tap]`` and coefficient
tensors ``[antenna, order, tap]`` throughout the package.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ParameterError


def dft_matrix(N: int) -> np.ndarray:
    """Unitary DFT matrix, ``W[m, n] = exp(-2j*pi*m*n/N) / sqrt(N)``."""
    n = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(n, n) / N) / np.sqrt(N)


def basis_offsets(D: int) -> np.ndarray:
    """Frequency offsets ``d - (D-1)/2`` of the ``D`` basis columns."""
    return np.arange(D) - (D - 1) // 2


def cebem_basis(N: int, D: int) -> np.ndarray:
    """Build the ``N x D`` CE-BEM basis matrix.

    Column ``d`` is ``exp(2j*pi*n*(d - (D-1)/2)/N)`` for ``n = 0..N-1``;
    the middle column is all ones.
    """
    if N < 1 or D < 1:
        raise ParameterError(f"N and D must be positive, got N={N}, D={D}")
    if D % 2 == 0:
        raise ParameterError(f"BEM order D must be odd, got {D}")
    if D >= N:
        raise ParameterError(f"BEM order D={D} must be smaller than N={N}")
    # integer phase index reduced mod N keeps the entries exact on the unit circle
    k = np.outer(np.arange(N), basis_offsets(D)) % N
    return np.exp(2j * np.pi * k / N)


def shift_matrix(N: int, alpha: int) -> np.ndarray:
    """Identity matrix circularly shifted down by ``alpha`` rows."""
    return np.roll(np.eye(N), alpha, axis=0)


@dataclass
class BemCoefficients:
    """BEM coefficients ``theta[antenna, order, tap]`` and their tap support."""

    theta: np.ndarray
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=complex)
        if self.theta.ndim != 3:
            raise ParameterError("theta must be indexed [antenna, order, tap]")
        if self.support is None:
            self.support = np.flatnonzero(np.any(self.theta != 0, axis=(0, 1)))
        self.support = np.asarray(sorted(set(int(s) for s in self.support)), dtype=int)

    @property
    def n_antennas(self):
        return self.theta.shape[0]

    @property
    def order(self):
        return self.theta.shape[1]

    @property
    def n_taps(self):
        return self.theta.shape[2]


@dataclass
class ChannelRealization:
    """Time-varying channel ``h[antenna, instant, tap]`` with its tap support.

    ``modeling_error`` holds the part of ``h`` the BEM does not capture, when
    known.
    """

    h: np.ndarray
    support: np.ndarray = field(default=None)
    modeling_error: Optional[np.ndarray] = None

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.ndim != 3:
            raise ParameterError("h must be indexed [antenna, instant, tap]")
        if self.support is None:
            self.support = np.flatnonzero(np.any(self.h != 0, axis=(0, 1)))
        self.support = np.asarray(sorted(set(int(s) for s in self.support)), dtype=int)
        if self.modeling_error is not None and self.modeling_error.shape != self.h.shape:
            raise ParameterError("modeling_error must have the same shape as h")

    @property
    def n_antennas(self):
        return self.h.shape[0]

    @property
    def n_instants(self):
        return self.h.shape[1]

    @property
    def n_taps(self):
        return self.h.shape[2]


def _check_basis(V, N=None):
    V = np.asarray(V)
    if V.ndim != 2:
        raise ParameterError("basis must be a 2-D matrix")
    if N is not None and V.shape[0] != N:
        raise ParameterError(f"basis has {V.shape[0]} rows, expected {N}")
    return V


def bem_fit(h_l, V):
    """Least-squares BEM fit of a single tap trajectory.

    Parameters
    ----------
    h_l : array of shape (N,)
        Tap trajectory over one symbol.
    V : array of shape (N, D)
        Basis matrix.

    Returns
    -------
    theta_l : ndarray of shape (D,)
    eps_l : ndarray of shape (N,)
        Residual ``h_l - V @ theta_l``, orthogonal to the columns of ``V``.
    """
    h_l = np.asarray(h_l, dtype=complex)
    V = _check_basis(V)
    if h_l.ndim != 1 or h_l.shape[0] != V.shape[0]:
        raise ParameterError(f"tap of length {h_l.shape} does not match basis with {V.shape[0]} rows")
    theta_l = np.linalg.lstsq(V, h_l, rcond=None)[0]
    return theta_l, h_l - V @ theta_l


def bem_fit_channel(ch, V):
    """Fit every (antenna, tap) trajectory of ``ch``; returns coefficients and residual tensor."""
    V = _check_basis(V, ch.n_instants)
    # all taps at once: columns of h[a] are the N-sample trajectories
    theta = np.stack([np.linalg.lstsq(V, ch.h[a], rcond=None)[0] for a in range(ch.n_antennas)])
    eps = ch.h - np.matmul(V, theta)
    return BemCoefficients(theta, support=ch.support), eps


def bem_reconstruct(coef, V):
    """Rebuild ``h[a, n, l] = sum_d V[n, d] * theta[a, d, l]``."""
    V = _check_basis(V)
    if V.shape[1] != coef.order:
        raise ParameterError(f"basis has {V.shape[1]} columns but coefficients have order {coef.order}")
    h = np.matmul(V, coef.theta)
    return ChannelRealization(h, support=coef.support.copy())


def bem_reconstruct_kron(coef, V):
    """Same as :func:`bem_reconstruct` through the stacked ``(V kron I_L)`` product.

    The stacked coefficient vector is ordered order-major, the stacked
    channel vector instant-major.
    """
    V = _check_basis(V)
    L = coef.n_taps
    op = np.kron(V, np.eye(L))
    h = np.empty((coef.n_antennas, V.shape[0], L), dtype=complex)
    for a in range(coef.n_antennas):
        h[a] = (op @ coef.theta[a].reshape(-1)).reshape(V.shape[0], L)
    return ChannelRealization(h, support=coef.support.copy())


def freq_channel_matrix(theta, V):
    """Frequency-domain channel matrix of one antenna, model part only.

    Computes ``sum_d V_d @ Theta_d`` with ``V_d = W diag(v_d) W^H`` and
    ``Theta_d = diag(sqrt(N) W [theta_d; 0])``.

    Parameters
    ----------
    theta : array of shape (D, L)
        Coefficients of a single antenna.
    V : array of shape (N, D)
    """
    theta = np.asarray(theta, dtype=complex)
    V = _check_basis(V)
    N, D = V.shape
    if theta.ndim != 2 or theta.shape[0] != D:
        raise ParameterError(f"theta of shape {theta.shape} does not match basis order {D}")
    L = theta.shape[1]
    if L > N:
        raise ParameterError(f"channel length {L} exceeds N={N}")
    W = dft_matrix(N)
    H = np.zeros((N, N), dtype=complex)
    for d in range(D):
        Vd = (W * V[:, d]) @ W.conj().T
        padded = np.zeros(N, dtype=complex)
        padded[:L] = theta[d]
        H += Vd * (np.sqrt(N) * (W @ padded))[None, :]
    return H
