"""Photon-counting statistics and SNR gating for turbulent free-space links."""

from .channel import BackgroundSpec, FadingSpec, generate_fading, sample_counts
from .estimators import (
    CountTrace,
    IntensityTrace,
    empirical_stats,
    fit_lognormal,
    over_threshold_events,
    power_spectrum,
    similarity,
)
from .stats import (
    LognormalChannel,
    fidelity_from_snr,
    lognormal_pdf,
    mandel_pmf,
    si_to_sigma2,
    sigma2_to_si,
    snr_db,
)
from .threshold import (
    ProbeConfig,
    accept_probability,
    conditional_gain,
    run_protocol,
    tradeoff_curve,
)

__version__ = "0.1.0"
