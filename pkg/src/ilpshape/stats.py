"""Goodness-of-fit statistics and the rate-peak adversary."""

import math

import numpy as np
from scipy import stats as _sps

KS_C_001 = 1.628


def ks_statistic(samples, cdf, support=None):
    """One-sample Kolmogorov-Smirnov distance between ``samples`` and ``cdf``.

    Passing an integer ``support=(low, high)`` treats the null as a lattice
    distribution; the supremum is then taken over every integer spanning the
    support and the samples, which is where both step functions change.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    if support is not None:
        lo = math.floor(min(x[0], support[0]))
        hi = math.ceil(max(x[-1], support[1]))
        grid = np.arange(lo - 1, hi + 1, dtype=float)
        ecdf = np.searchsorted(x, grid, side="right") / n
        return float(np.max(np.abs(ecdf - cdf(grid))))
    f = cdf(x)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_critical(n, c=KS_C_001):
    """Asymptotic one-sample critical value ``c / sqrt(n)``."""
    return c / math.sqrt(n)


def ks_critical_2samp(n, m, c=KS_C_001):
    return c * math.sqrt((n + m) / (n * m))


def ks_2samp_statistic(a, b):
    return float(_sps.ks_2samp(a, b, method="asymp").statistic)


def rate_bins(times, sizes, duration, bin_s=1.0):
    """Bytes per ``bin_s`` window over ``[0, duration]``; the closing edge joins the last bin."""
    nbins = max(1, math.ceil(duration / bin_s))
    idx = np.minimum((np.asarray(times, dtype=float) / bin_s).astype(np.int64), nbins - 1)
    return np.bincount(idx, weights=np.asarray(sizes, dtype=float), minlength=nbins)


def peak_bins(times, sizes, duration, bin_s=1.0, factor=3.0):
    """Indices of bins whose byte rate exceeds ``factor`` times the median bin."""
    rates = rate_bins(times, sizes, duration, bin_s)
    threshold = factor * float(np.median(rates))
    return np.nonzero(rates > threshold)[0]


def flagged_windows(bins, windows, bin_s=1.0):
    """For each ``(start, stop)`` window, whether any flagged bin overlaps it."""
    out = []
    for start, stop in windows:
        lo = int(start // bin_s)
        hi = int(math.ceil(stop / bin_s))
        out.append(bool(np.any((bins >= lo) & (bins < hi))))
    return out


def ks_fit(spec, samples, tol=1e-9):
    """KS distance of ``samples`` from the distribution ``spec`` describes."""
    from .distributions import Kind, cdf, lattice_support

    samples = np.asarray(samples, dtype=float)
    if spec.kind == Kind.CONSTANT and spec.is_delay:
        v = spec.params[0]
        below = np.mean(samples < v - tol)
        above = np.mean(samples > v + tol)
        return float(max(below, above))
    return ks_statistic(samples, lambda x: cdf(spec, x), lattice_support(spec))
