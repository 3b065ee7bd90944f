"""Grouped guard-pilot frame design.

Each of the ``G`` pilot groups is a nonzero pilot flanked by ``D-1`` zero
guard pilots on each side, so a group occupies ``2D-1`` consecutive
subcarriers (wrapping at the band edge). All antennas share the pilot
positions; pilot values are independent random signs per antenna.
"""
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError


@dataclass
class PilotPlan:
    centers: np.ndarray
    values: np.ndarray
    D: int
    N: int

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=int)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=int))
        if self.values.shape[0] != self.centers.size:
            raise ParameterError(
                f"values has {self.values.shape[0]} rows for {self.centers.size} centers"
            )
        if np.any(np.diff(self.centers) <= 0):
            raise ParameterError("centers must be strictly increasing")
        if np.any(np.abs(self.values) != 1):
            raise ParameterError("pilot values must be +1 or -1")

    @property
    def G(self):
        return self.centers.size

    @property
    def n_antennas(self):
        return self.values.shape[1]

    @property
    def half_width(self):
        return self.D - 1

    def zone_indices(self):
        """``(G, 2D-1)`` array of subcarriers occupied by each group, circularly wrapped."""
        offsets = np.arange(-self.half_width, self.half_width + 1)
        return (self.centers[:, None] + offsets[None, :]) % self.N

    def guard_indices(self):
        zones = self.zone_indices()
        return np.sort(np.delete(zones, self.half_width, axis=1).ravel())

    def data_indices(self):
        mask = np.ones(self.N, dtype=bool)
        mask[self.zone_indices().ravel()] = False
        return np.flatnonzero(mask)

    def is_valid(self):
        zones = self.zone_indices().ravel()
        if np.any(self.centers < 0) or np.any(self.centers >= self.N):
            return False
        if np.unique(zones).size != zones.size:
            return False
        return bool(np.all(np.diff(self.centers) >= 2 * self.D - 1))

    def to_dict(self):
        return {
            "N": int(self.N),
            "D": int(self.D),
            "centers": self.centers.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(centers=d["centers"], values=d["values"], D=d["D"], N=d["N"])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def generate_pilot_positions(N, G, D, rng):
    """Random nonzero-pilot centers whose guard zones tile the band without overlap.

    Samples uniformly over all valid circular placements: the zone of the
    first group starts the sequence, the other ``G-1`` zones and the free
    subcarriers are shuffled behind it, and the whole pattern is rotated by
    a uniform offset.
    """
    width = 2 * D - 1
    if G < 1 or D < 1 or D % 2 == 0:
        raise ParameterError(f"need G >= 1 and odd D >= 1, got G={G}, D={D}")
    free = N - G * width
    if free < 0:
        raise ParameterError(f"{G} groups of width {width} do not fit in N={N}")
    items = np.zeros(G - 1 + free, dtype=bool)
    items[: G - 1] = True
    rng.shuffle(items)
    starts = [0]
    cursor = width
    for is_zone in items:
        if is_zone:
            starts.append(cursor)
            cursor += width
        else:
            cursor += 1
    offset = rng.integers(N)
    return np.sort((np.asarray(starts) + D - 1 + offset) % N)


def generate_pilot_values(G, n_antennas, rng):
    """``G x n_antennas`` matrix of i.i.d. random signs."""
    if G < 1 or n_antennas < 1:
        raise ParameterError("G and n_antennas must be positive")
    return 1 - 2 * rng.integers(0, 2, size=(G, n_antennas))


def make_pilot_plan(N, G, D, n_antennas, rng):
    centers = generate_pilot_positions(N, G, D, rng)
    values = generate_pilot_values(G, n_antennas, rng)
    return PilotPlan(centers, values, D, N)


def index_sets(plan):
    """Selected subcarrier sets ``S_d = S_cen + d - (D-1)/2 (mod N)``, one row per ``d``.

    Row ``g`` of every set belongs to pilot group ``g``, so the sets keep
    the order of the centers rather than being re-sorted after wrapping.
    """
    offsets = np.arange(plan.D) - (plan.D - 1) // 2
    return (plan.centers[None, :] + offsets[:, None]) % plan.N


def assemble_frame(plan, data, antenna):
    """Frequency-domain symbol of one antenna: pilot, guard zeros and data."""
    data = np.asarray(data, dtype=complex)
    data_idx = plan.data_indices()
    if data.shape != data_idx.shape:
        raise ParameterError(f"expected {data_idx.size} data symbols, got {data.size}")
    S = np.zeros(plan.N, dtype=complex)
    S[data_idx] = data
    S[plan.centers] = plan.values[:, antenna]
    return S
