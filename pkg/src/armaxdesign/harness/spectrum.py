"""Averaged periodograms of perturbation signals."""

from __future__ import annotations

from typing import Iterable

import numpy as np
from scipy import signal as sp_signal

DEFAULT_SEGMENT = 512


def spectrum(
    segments: Iterable[np.ndarray],
    sampling_period: float = 0.01,
    nperseg: int = DEFAULT_SEGMENT,
) -> tuple[np.ndarray, np.ndarray]:
    """Welch estimate (Hann, 50% overlap) averaged over all segments.

    Returns frequencies in Hz and one-sided power spectral density.
    """
    segments = [np.asarray(s, dtype=float) for s in segments]
    if not segments:
        raise ValueError("need at least one signal segment")
    shortest = min(s.size for s in segments)
    if shortest < nperseg:
        if shortest < 256:
            raise ValueError(f"segment of {shortest} samples is shorter than 256")
        raise ValueError(f"segment of {shortest} samples is shorter than window {nperseg}")
    fs = 1.0 / sampling_period
    psds = []
    for s in segments:
        freqs, p = sp_signal.welch(
            s, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2,
            detrend=False, scaling="density",
        )
        psds.append(p)
    return freqs, np.mean(psds, axis=0)


def band_power(freqs: np.ndarray, power: np.ndarray, lo: float, hi: float) -> float:
    sel = (freqs >= lo) & (freqs <= hi)
    return float(np.mean(power[sel]))


def total_power(freqs: np.ndarray, power: np.ndarray) -> float:
    return float(np.trapz(power, freqs))


def frequency_response(num: np.ndarray, den: np.ndarray, freqs: np.ndarray,
                       sampling_period: float = 0.01) -> np.ndarray:
    """``|num(e^{-jw}) / den(e^{-jw})|^2`` on a grid in Hz."""
    w = 2 * np.pi * np.asarray(freqs) * sampling_period
    _, h = sp_signal.freqz(num, den, worN=w)
    return np.abs(h) ** 2
