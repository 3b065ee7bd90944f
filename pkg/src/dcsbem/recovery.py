"""Joint-sparse recovery of BEM coefficients from guard-pilot observations.

With the guard-pilot frame and a channel in the CE-BEM span, the received
subcarriers at offset ``d - (D-1)/2`` from the nonzero pilots depend only on
the ``d``-th BEM coefficients. Stacking the ``D`` selections gives

    Y_R = Phi @ X + noise

where every column of ``X`` shares the tap support of the channel, which
makes it a multiple-measurement-vector problem solved here with SOMP.
"""
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .bem import BemCoefficients, bem_reconstruct, cebem_basis
from .exceptions import ParameterError, RecoveryError
from .pilots import index_sets


def build_measurement_matrix(plan, L):
    """Measurement matrix ``Phi`` of shape ``(G, n_antennas * L)``.

    Block ``a`` is ``sqrt(N) * diag(P_a) @ W[S_cen, :L]`` with ``W`` the
    unitary DFT, i.e. pilot signs times unit-modulus DFT entries
    ``exp(-2j*pi*s*l/N)``. Every column has norm ``sqrt(G)``.
    """
    if L > plan.N or L < 1:
        raise ParameterError(f"channel length L={L} must be in [1, N={plan.N}]")
    WL = np.exp(-2j * np.pi * np.outer(plan.centers, np.arange(L)) / plan.N)
    blocks = [plan.values[:, a, None] * WL for a in range(plan.n_antennas)]
    return np.hstack(blocks)


def mutual_coherence(A):
    """Largest normalized inner product magnitude between distinct columns of ``A``."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise ParameterError("expected a 2-D matrix")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ParameterError("mutual coherence is undefined for a zero column")
    if A.shape[1] < 2:
        return 0.0
    An = A / norms
    gram = np.abs(An.conj().T @ An)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def extract_observations(Y, sets):
    """Stack ``Y`` restricted to each selected set into a ``(G, D)`` matrix."""
    Y = np.asarray(Y)
    sets = np.asarray(sets, dtype=int)
    if np.any(sets < 0) or np.any(sets >= Y.shape[0]):
        raise ParameterError("selected subcarrier index out of range")
    return Y[sets].T


@dataclass
class SompResult:
    x: np.ndarray
    support_rows: np.ndarray
    residual_norms: list = field(default_factory=list)
    selections: list = field(default_factory=list)


def _as_2d(Y):
    Y = np.asarray(Y, dtype=complex)
    return Y[:, None] if Y.ndim == 1 else Y


def somp(phi, Y, n_nonzero, tol=None, block_size=None):
    """Simultaneous orthogonal matching pursuit.

    Parameters
    ----------
    phi : array of shape (M, n)
    Y : array of shape (M, J)
        Observation columns sharing one sparse support.
    n_nonzero : int
        Number of selections. With ``block_size`` set this counts blocks.
    tol : float, optional
        Stop early once the residual Frobenius norm drops below ``tol``.
    block_size : int, optional
        Select column groups ``{t, t + b, t + 2b, ...}`` with stride
        ``b = block_size`` at once (one tap across all antenna blocks).

    Returns
    -------
    SompResult
        ``x`` has shape ``(n, J)`` with nonzero rows only in ``support_rows``.
        ``residual_norms[0]`` is the norm of ``Y`` before any selection.
    """
    phi = np.asarray(phi, dtype=complex)
    Y = _as_2d(Y)
    M, n = phi.shape
    if Y.shape[0] != M:
        raise ParameterError(f"observations have {Y.shape[0]} rows, phi has {M}")
    norms = np.linalg.norm(phi, axis=0)
    if np.any(norms == 0):
        raise ParameterError("measurement matrix has a zero column")

    if block_size is None:
        groups = np.arange(n)[:, None]
    else:
        if n % block_size:
            raise ParameterError(f"{n} columns are not a whole number of blocks of {block_size}")
        groups = np.arange(block_size)[:, None] + block_size * np.arange(n // block_size)[None, :]

    selected = []
    available = np.ones(groups.shape[0], dtype=bool)
    residual = Y.copy()
    coef = np.zeros((0, Y.shape[1]), dtype=complex)
    result = SompResult(np.zeros((n, Y.shape[1]), dtype=complex), np.array([], dtype=int))
    result.residual_norms.append(float(np.linalg.norm(residual)))

    for it in range(n_nonzero):
        if tol is not None and result.residual_norms[-1] < tol:
            break
        if not available.any():
            break
        corr = np.abs(phi.conj().T @ residual).sum(axis=1) / norms
        score = corr[groups].sum(axis=1)
        score[~available] = -np.inf
        best = int(np.argmax(score))
        available[best] = False
        selected.extend(groups[best].tolist())
        result.selections.append(best)

        sub = phi[:, selected]
        coef, _, rank, _ = np.linalg.lstsq(sub, Y, rcond=None)
        if rank < len(selected):
            raise RecoveryError(
                f"selected columns are linearly dependent at iteration {it} "
                f"({len(selected)} columns, {M} rows)",
                iteration=it,
            )
        residual = Y - sub @ coef
        result.residual_norms.append(float(np.linalg.norm(residual)))

    rows = np.asarray(selected, dtype=int)
    result.x[rows] = coef
    result.support_rows = np.sort(rows)
    return result


def omp(phi, y, n_nonzero, tol=None):
    """Orthogonal matching pursuit on a single observation vector; returns ``(x, result)``."""
    y = np.asarray(y, dtype=complex)
    if y.ndim != 1:
        raise ParameterError("omp expects a single observation vector")
    res = somp(phi, y[:, None], n_nonzero, tol=tol)
    return res.x[:, 0], res


def ls_estimate(phi, Y):
    """Minimum-norm least-squares solution of ``phi @ x_d = Y_d`` for every column."""
    return np.linalg.pinv(np.asarray(phi, dtype=complex)) @ _as_2d(Y)


def pack_coefficients(coef):
    """Inverse of :func:`unpack_coefficients`."""
    A, D, L = coef.theta.shape
    return coef.theta.transpose(0, 2, 1).reshape(A * L, D)


def unpack_coefficients(x, n_antennas, L, D):
    """Rearrange ``X`` (antenna-major row blocks of ``L`` taps) into ``theta[antenna, order, tap]``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (n_antennas * L, D):
        raise ParameterError(f"x has shape {x.shape}, expected {(n_antennas * L, D)}")
    theta = x.reshape(n_antennas, L, D).transpose(0, 2, 1)
    return BemCoefficients(theta.copy())


class SimultaneousOMP(RegressorMixin, BaseEstimator):
    """SOMP as a multi-output regressor: ``fit(phi, Y)`` recovers ``coef_`` with ``phi @ coef_ ~ Y``.

    Parameters
    ----------
    n_nonzero : int
        Number of greedy selections (columns, or blocks when ``block_size`` is set).
    tol : float, optional
        Residual Frobenius norm at which to stop early.
    block_size : int, optional
        Stride of jointly selected column groups.
    """

    def __init__(self, n_nonzero=1, tol=None, block_size=None):
        self.n_nonzero = n_nonzero
        self.tol = tol
        self.block_size = block_size

    def fit(self, X, y):
        res = somp(X, y, self.n_nonzero, tol=self.tol, block_size=self.block_size)
        self.coef_ = res.x
        self.support_ = res.support_rows
        self.residual_norms_ = res.residual_norms
        self.n_iter_ = len(res.selections)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return np.asarray(X, dtype=complex) @ self.coef_


class DcsChannelEstimator(BaseEstimator):
    """Guard-pilot compressive estimator of a doubly-selective MIMO channel.

    ``fit(Y, plan)`` takes the received frequency-domain symbol and the pilot
    plan; the estimated channel is then available as ``channel_`` and via
    :meth:`predict`.

    Parameters
    ----------
    n_taps : int
        Channel length ``L``.
    sparsity : int
        Number of strong taps ``K`` shared by all antennas.
    order : int
        BEM order ``D`` (odd).
    solver : {"somp", "ls"}
        ``"ls"`` is the minimum-norm least-squares baseline on the same
        observations, ignoring sparsity.
    block : bool
        Select a tap for all antennas at once instead of per row.
    tol : float, optional
        Residual stopping threshold for unknown sparsity.
    """

    def __init__(self, n_taps=16, sparsity=2, order=3, solver="somp", block=False, tol=None):
        self.n_taps = n_taps
        self.sparsity = sparsity
        self.order = order
        self.solver = solver
        self.block = block
        self.tol = tol

    def fit(self, Y, plan):
        Y = np.asarray(Y, dtype=complex)
        if Y.shape != (plan.N,):
            raise ParameterError(f"received symbol has shape {Y.shape}, expected ({plan.N},)")
        if plan.D != self.order:
            raise ParameterError(f"plan built for D={plan.D}, estimator order is {self.order}")
        A, L, D = plan.n_antennas, self.n_taps, self.order
        phi = build_measurement_matrix(plan, L)
        yR = extract_observations(Y, index_sets(plan))
        if self.solver == "somp":
            if self.block:
                res = somp(phi, yR, self.sparsity, tol=self.tol, block_size=L)
            else:
                res = somp(phi, yR, self.sparsity * A, tol=self.tol)
            x = res.x
            self.support_rows_ = res.support_rows
            self.residual_norms_ = res.residual_norms
        elif self.solver == "ls":
            x = ls_estimate(phi, yR)
            self.support_rows_ = None
            self.residual_norms_ = [float(np.linalg.norm(yR - phi @ x))]
        else:
            raise ParameterError(f"unknown solver {self.solver!r}")
        self.phi_ = phi
        self.observations_ = yR
        self.coef_ = unpack_coefficients(x, A, L, D)
        self.channel_ = bem_reconstruct(self.coef_, cebem_basis(plan.N, D))
        return self

    def predict(self, Y=None, plan=None):
        if Y is not None:
            self.fit(Y, plan)
        check_is_fitted(self, "channel_")
        return self.channel_


def estimate_channel(Y, plan, cfg, solver="somp", block=False):
    """Estimate the channel from one received symbol; see :class:`DcsChannelEstimator`."""
    est = DcsChannelEstimator(n_taps=cfg.L, sparsity=cfg.K, order=cfg.D, solver=solver, block=block)
    return est.fit(Y, plan).channel_
