"""Experiment configuration."""
import json
import math
from dataclasses import asdict, dataclass, fields, replace

from .exceptions import ParameterError


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of one simulated link.

    ``doppler_norm`` is the maximum Doppler shift times the OFDM symbol
    duration. ``snr_db`` may be ``math.inf`` for a noiseless link.

    ``snr_reference`` selects the signal power the SNR is measured against:
    ``"nominal"`` uses ``n_antennas`` (unit channel power per antenna, unit
    symbol energy on every subcarrier), ``"measured"`` uses the mean power of
    the actual received samples, which drops as pilot overhead grows.
    """

    N: int = 256
    G: int = 24
    L: int = 16
    K: int = 2
    D: int = 3
    n_antennas: int = 4
    doppler_norm: float = 0.057
    snr_db: float = 20.0
    seed: int = 0
    oscillators: int = 32
    bem_exact: bool = False
    smoothing: bool = True
    snr_reference: str = "nominal"

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("N", "G", "L", "K", "D", "n_antennas", "oscillators"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value!r}")
        if self.D % 2 == 0:
            raise ParameterError(f"D must be odd, got {self.D}")
        if not self.K <= self.L <= self.N:
            raise ParameterError(f"need K <= L <= N, got K={self.K}, L={self.L}, N={self.N}")
        if self.G * (2 * self.D - 1) > self.N:
            raise ParameterError(
                f"{self.G} pilot groups of width {2 * self.D - 1} do not fit in N={self.N}"
            )
        if self.doppler_norm < 0:
            raise ParameterError("doppler_norm must be non-negative")
        if self.snr_reference not in ("nominal", "measured"):
            raise ParameterError(f"snr_reference must be 'nominal' or 'measured', got {self.snr_reference!r}")
        if math.isnan(self.snr_db):
            raise ParameterError("snr_db must not be NaN")

    @property
    def pilot_count(self):
        return self.G * (2 * self.D - 1)

    @property
    def smoothing_applicable(self):
        return self.smoothing and self.doppler_norm < 0.2 and self.N % 4 == 0

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = asdict(self)
        if math.isinf(d["snr_db"]):
            d["snr_db"] = "inf"
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        if "snr_db" in d:
            d["snr_db"] = float(d["snr_db"])
        return cls(**d)

    @classmethod
    def paper_scale(cls, **changes):
        """The figure setting: N=1024, G=96, 16 transmit antennas."""
        params = dict(N=1024, G=96, n_antennas=16)
        params.update(changes)
        return cls(**params)


def load_config(path):
    """Read a JSON config file.

    The file holds either bare :class:`SystemConfig` fields or an object with
    a ``"base"`` key plus sweep fields; both are returned as plain dicts.
    """
    with open(path) as fh:
        return json.load(fh)
