"""
Consistency of a table of acquisitions
======================================

Each recorded acquisition lists its mean count, standard deviation and
scintillation index.  SI is (std/mean)^2, so the printed columns can be
checked against each other, taking the rounding of the printed inputs into
account.
"""

# %%
from scintlink.reference import ACQUISITIONS, half_unit, si_from_moments, si_rounding_interval

print(f"{'mean':>8} {'std':>8} {'SI':>7} {'recomputed':>11} {'rel diff':>9}  within rounding")
for acq in ACQUISITIONS:
    si = si_from_moments(acq.mean, acq.std)
    lo, hi = si_rounding_interval(acq)
    h = half_unit(acq.si)
    inside = lo - h <= float(acq.si) <= hi + h
    rel = abs(si - float(acq.si)) / float(acq.si)
    print(f"{acq.mean!s:>8} {acq.std!s:>8} {acq.si!s:>7} {si:11.5f} {rel:9.1e}  {inside}")

# %% [markdown]
# Windows per acquisition follow from its duration and window length.

# %%
for acq in ACQUISITIONS[:3]:
    print(f"{acq.time_s} s / {acq.window_ms} ms -> {acq.n_windows} windows")
