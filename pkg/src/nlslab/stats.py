"""Time-series statistics shared by the samplers: batch means errors,
effective sample sizes, autocorrelations, and exponential rate fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def batch_means_se(x: np.ndarray, n_batches: int = 16):
    """Standard error of the mean by non-overlapping batch means.

    Returns (mean, se, ess).  The effective sample size is the n_eff
    solving se = std(x)/sqrt(n_eff), clipped to the sample count.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2 * n_batches:
        n_batches = max(2, n // 2)
    m = n // n_batches
    trimmed = x[: m * n_batches].reshape(n_batches, m)
    bm = trimmed.mean(axis=1)
    mean = float(x.mean())
    se = float(np.std(bm, ddof=1) / np.sqrt(n_batches))
    var = float(np.var(x, ddof=1))
    if se == 0.0:
        ess = float(n)
    else:
        ess = min(float(n), var / se**2)
    return mean, se, ess


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Empirical autocovariance C(tau)/C(0) via FFT; complex series allowed.

    C(tau) = mean_t (x(t+tau) - xbar) conj(x(t) - xbar).
    """
    x = np.asarray(x)
    n = x.size
    xc = x - x.mean()
    nfft = int(2 ** np.ceil(np.log2(2 * n)))
    f = np.fft.fft(xc, nfft)
    acov = np.fft.ifft(f * np.conj(f))[: max_lag + 1]
    acov /= n - np.arange(max_lag + 1)
    c0 = np.real(acov[0])
    if c0 <= 0:
        return np.zeros(max_lag + 1, dtype=complex)
    return acov / c0


@dataclass
class ExpFitResult:
    rate: float
    intercept: float
    n_points: int
    window: tuple
    usable: bool


def fit_log_decay(t: np.ndarray, y: np.ndarray, floor_ratio: float = 0.02,
                  min_points: int = 5) -> ExpFitResult:
    """Least-squares fit of log y ~ b - rate * t on the leading window.

    The window runs from the start to the first sample below
    floor_ratio * y[0] (a signal-to-noise rule: below that level the
    statistical floor dominates).  Marked unusable when fewer than
    min_points survive or the fitted rate is not positive.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    good = y > 0
    if not good[0] if y.size else True:
        return ExpFitResult(np.nan, np.nan, 0, (0, 0), False)
    cutoff = floor_ratio * y[0]
    end = y.size
    for i in range(1, y.size):
        if not good[i] or y[i] < cutoff:
            end = i
            break
    if end < min_points:
        return ExpFitResult(np.nan, np.nan, int(end), (0, int(end)), False)
    coef = np.polyfit(t[:end], np.log(y[:end]), 1)
    rate = -float(coef[0])
    return ExpFitResult(rate, float(coef[1]), int(end), (0, int(end)),
                        bool(rate > 0))


def fit_rate_with_ci(t: np.ndarray, series: np.ndarray, n_segments: int = 6,
                     floor_ratio: float = 0.05):
    """Autocorrelation decay rate with a batch-means confidence interval.

    `series` is one stationary scalar (possibly complex) time series at
    uniform spacing t[1]-t[0].  The series is cut into segments, the
    modulus of each segment autocorrelation is fitted on a log scale, and
    the CI is the t-interval across segment rates.  The point estimate is
    the segment mean, so the CI always contains it.

    Returns (rate, ci_lo, ci_hi, usable).
    """
    from scipy.stats import t as tdist

    series = np.asarray(series)
    dt = float(t[1] - t[0])
    seg_len = series.size // n_segments
    if seg_len < 32:
        return np.nan, np.nan, np.nan, False
    max_lag = seg_len // 3
    rates = []
    for s in range(n_segments):
        seg = series[s * seg_len:(s + 1) * seg_len]
        ac = np.abs(autocorrelation(seg, max_lag))
        lag_t = dt * np.arange(max_lag + 1)
        fit = fit_log_decay(lag_t, ac, floor_ratio=floor_ratio)
        if fit.usable:
            rates.append(fit.rate)
    if len(rates) < 3:
        return np.nan, np.nan, np.nan, False
    rates = np.asarray(rates)
    point = float(rates.mean())
    half = float(tdist.ppf(0.975, len(rates) - 1) * rates.std(ddof=1)
                 / np.sqrt(len(rates)))
    usable = point > 0 and half < point
    return point, point - half, point + half, usable


def fit_order(h: np.ndarray, err: np.ndarray) -> float:
    """Slope of log err against log h (observed convergence order)."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    good = err > 0
    if good.sum() < 2:
        return np.inf
    coef = np.polyfit(np.log(h[good]), np.log(err[good]), 1)
    return float(coef[0])
