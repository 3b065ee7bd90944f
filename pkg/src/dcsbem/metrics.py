import numpy as np

from .exceptions import ParameterError

NMSE_FLOOR_DB = -120.0


def nmse_db(estimate, truth):
    """Normalized squared error of a channel estimate in dB, clamped at -120 dB.

    Accepts :class:`~dcsbem.bem.ChannelRealization` objects or plain arrays.
    """
    est = np.asarray(getattr(estimate, "h", estimate))
    ref = np.asarray(getattr(truth, "h", truth))
    if est.shape != ref.shape:
        raise ParameterError(f"shape mismatch: estimate {est.shape}, truth {ref.shape}")
    ref_energy = np.sum(np.abs(ref) ** 2)
    if ref_energy == 0:
        raise ParameterError("NMSE is undefined for an all-zero reference channel")
    ratio = np.sum(np.abs(est - ref) ** 2) / ref_energy
    if ratio <= 10 ** (NMSE_FLOOR_DB / 10):
        return NMSE_FLOOR_DB
    return float(10 * np.log10(ratio))
