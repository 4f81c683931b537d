"""Reference single-photon acquisitions over a long horizontal free-space link.

Each row: flux class, mean counts per window, std, acquisition time (s),
counting window (ms), scintillation index and 95% spectral bound (Hz).  The
first row is the background-only acquisition.  Values are kept as printed so
that their precision (number of decimals) is known.
"""

from decimal import Decimal
from typing import NamedTuple

__all__ = [
    "Acquisition",
    "ACQUISITIONS",
    "BACKGROUND",
    "SHOWCASE",
    "SHOWCASE_BOUND_HZ",
    "PHOTODIODE_SI",
    "PHOTODIODE_RATE_HZ",
    "PHOTODIODE_DURATION_S",
    "EVENT_THRESHOLDS_DB",
    "half_unit",
    "si_from_moments",
    "si_rounding_interval",
]

_TABLE = """\
background 0.4732 0.7256 10  1   2.3515 475
high       5291   9135   650 10  2.9805 22
high       678.7  820.8  65  1   1.4626 43
high       510.4  751.9  65  1   2.1704 45
high       781.5  951.9  65  1   1.4834 42
high       180.2  312.0  65  1   2.997  39
high       234.1  349.2  65  1   2.2251 51
high       43.18  48.76  6.5 0.1 1.2748 81
high       21.17  26.34  6.5 0.1 1.5485 88
high       75.37  132.10 6.5 0.1 3.072  35
high       59.97  105.01 6.5 0.1 3.0659 37
low        37.86  48.42  200 10  1.6355 35
low        20.83  24.18  200 10  1.3479 35
low        2.862  3.795  65  1   1.7578 384
low        5.267  7.519  65  1   2.0383 258
"""


class Acquisition(NamedTuple):
    label: str
    mean: Decimal
    std: Decimal
    time_s: Decimal
    window_ms: Decimal
    si: Decimal
    bound_hz: Decimal

    @property
    def n_windows(self):
        return int(self.time_s * 1000 / self.window_ms)


ACQUISITIONS = tuple(
    Acquisition(parts[0], *(Decimal(p) for p in parts[1:]))
    for parts in (line.split() for line in _TABLE.splitlines())
)

BACKGROUND = ACQUISITIONS[0]

# The acquisition analysed in detail: 1 ms windows, 65 s
SHOWCASE = ACQUISITIONS[6]
SHOWCASE_BOUND_HZ = 51.1724

# Photodiode run: 20 s at 50 kHz
PHOTODIODE_SI = 1.19
PHOTODIODE_RATE_HZ = 50_000.0
PHOTODIODE_DURATION_S = 20.0

EVENT_THRESHOLDS_DB = (1.0, 2.0, 4.0, 6.0)


def half_unit(value: Decimal) -> float:
    """Half a unit in the last printed digit, e.g. ``2.997`` -> 0.0005."""
    return 0.5 * 10.0 ** value.as_tuple().exponent


def si_from_moments(mean, std):
    return (float(std) / float(mean)) ** 2


def si_rounding_interval(acq: Acquisition):
    """Range of ``std^2/mean^2`` over the rounding intervals of the printed mean and std."""
    m, dm = float(acq.mean), half_unit(acq.mean)
    s, ds = float(acq.std), half_unit(acq.std)
    return ((s - ds) / (m + dm)) ** 2, ((s + ds) / (m - dm)) ** 2
