"""
Photon counting through a fading channel
========================================

A steady beam gives Poisson photon counts.  When the transmission fades
with a lognormal law the counts follow the Poisson-lognormal (Mandel) law
instead, which is much wider.  This script simulates 65 s of 1 ms counting
windows and compares the count histogram with both laws.

Run with ``python notebooks/01_counting_statistics.py``; figures go to
``notebooks/figures/``.
"""

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from scintlink import (
    BackgroundSpec,
    FadingSpec,
    LognormalChannel,
    generate_fading,
    mandel_pmf,
    sample_counts,
    similarity,
)
from scintlink.estimators import count_histogram, mandel_histogram, poisson_histogram

FIGURES = Path(__file__).with_name("figures")
FIGURES.mkdir(exist_ok=True)

# %% [markdown]
# A channel is fixed by its mean flux (photons per window) and its
# scintillation index SI = var/mean^2.  The log-amplitude variance is
# sigma2 = ln(1 + SI).

# %%
channel = LognormalChannel.from_si(234.1, 2.2251)
print(f"sigma2 = {channel.sigma2:.4f}, median flux = {channel.median:.1f}")

# %% [markdown]
# Generate the fading flux, then draw Poisson counts on top of it.

# %%
spec = FadingSpec(mean_flux=234.1, si=2.2251, cutoff_hz=50.0, window_s=1e-3,
                  duration_s=65.0, seed=0)
flux = generate_fading(spec)
counts = sample_counts(flux, BackgroundSpec(0.0), seed=1)
print(f"{counts.counts.size} windows, mean {counts.counts.mean():.1f}, "
      f"max {counts.counts.max()}")

# %% [markdown]
# Histogram with unit-width integer bins, against the two candidate laws.

# %%
hist = count_histogram(counts)
total = hist.weights.sum()
mandel = mandel_histogram(channel, hist.edges, total)
poisson = poisson_histogram(counts.counts.mean(), hist.edges, total)
print(f"similarity to Mandel  : {similarity(hist, mandel):.4f}")
print(f"similarity to Poisson : {similarity(hist, poisson):.4f}")

# %%
centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(centers, hist.weights, ".", ms=2, color="k", label="simulated counts")
ax.plot(centers, mandel.weights, color="tab:red", label="Mandel (lognormal)")
ax.plot(centers, poisson.weights, color="tab:green", label="Poisson, same mean")
ax.set_xscale("log")
ax.set_xlim(1, 5000)
ax.set_xlabel("counts per window")
ax.set_ylabel("occurrences")
ax.legend()
fig.savefig(FIGURES / "counting_statistics.png", dpi=120, bbox_inches="tight")

# %% [markdown]
# The pmf itself is computed by quadrature in log-flux and truncated where
# the remaining mass drops below 1e-6.

# %%
pmf = mandel_pmf(channel)
print(f"truncated at n = {pmf.n_max}, mass = {pmf.mass:.8f}, mean = {pmf.mean():.2f}")
