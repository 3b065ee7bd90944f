"""Linear smoothing of estimated tap trajectories.

Below a normalized Doppler of about 0.2 each tap varies almost linearly over
one OFDM symbol. Each strong tap is replaced by the straight line through
its first-half and second-half means; all other taps are zeroed.
"""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bem import ChannelRealization
from .exceptions import ParameterError

DOPPLER_LIMIT = 0.2


@dataclass
class SmoothingReport:
    taps: np.ndarray
    slopes: np.ndarray
    first_half_mean: np.ndarray
    second_half_mean: np.ndarray


def detect_strong_taps(ch, K):
    """Indices of the ``K`` taps with most energy summed over antennas and instants.

    Ties go to the lower tap index.
    """
    if K > ch.n_taps or K < 0:
        raise ParameterError(f"cannot pick K={K} taps out of L={ch.n_taps}")
    energy = np.sum(np.abs(ch.h) ** 2, axis=(0, 1))
    order = np.lexsort((np.arange(energy.size), -energy))
    return np.sort(order[:K])


def linear_smooth(ch, taps):
    """Fit a line per (antenna, strong tap) from the two half-symbol means.

    Returns the smoothed :class:`ChannelRealization` and a
    :class:`SmoothingReport`. The line passes through each half mean at
    that half's centre instant, so a linear input is reproduced exactly.
    """
    N = ch.n_instants
    if N % 4:
        raise ParameterError(f"linear smoothing needs N divisible by 4, got N={N}")
    taps = np.asarray(taps, dtype=int)
    half = N // 2
    traj = ch.h[:, :, taps]
    first = traj[:, :half].mean(axis=1)
    second = traj[:, half:].mean(axis=1)
    slope = (second - first) / half
    n = np.arange(N)
    # first-half mean sits at instant (N/2 - 1)/2
    line = first[:, None, :] + (n - (half - 1) / 2)[None, :, None] * slope[:, None, :]
    h = np.zeros_like(ch.h)
    h[:, :, taps] = line
    report = SmoothingReport(taps=taps, slopes=slope, first_half_mean=first, second_half_mean=second)
    return ChannelRealization(h, support=taps), report


class LinearSmoother(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`linear_smooth`.

    ``fit`` picks the strong taps from the channel it is given (or uses
    ``taps`` when supplied); ``transform`` smooths any channel on those taps.

    Parameters
    ----------
    n_strong : int
        Number of strong taps ``K`` to keep.
    taps : array-like, optional
        Fixed tap indices, bypassing detection.
    doppler_norm : float, optional
        Normalized Doppler of the link; values at or above 0.2 are rejected.
    """

    def __init__(self, n_strong=2, taps=None, doppler_norm=None):
        self.n_strong = n_strong
        self.taps = taps
        self.doppler_norm = doppler_norm

    def fit(self, ch, y=None):
        if self.doppler_norm is not None and self.doppler_norm >= DOPPLER_LIMIT:
            raise ParameterError(
                f"linear smoothing assumes normalized Doppler < {DOPPLER_LIMIT}, got {self.doppler_norm}"
            )
        if self.taps is not None:
            self.taps_ = np.sort(np.asarray(self.taps, dtype=int))
        else:
            self.taps_ = detect_strong_taps(ch, self.n_strong)
        return self

    def transform(self, ch):
        check_is_fitted(self, "taps_")
        out, self.report_ = linear_smooth(ch, self.taps_)
        return out
