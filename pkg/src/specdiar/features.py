"""Log-Mel filterbank feature extraction.

Convention: Hann-windowed power-spectrum STFT, triangular Mel filters
(mel = 2595 * log10(1 + f/700)), natural log with a small floor, no
pre-emphasis. Features are mean normalized per segment before the embedder.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from specdiar.audio_io import Waveform


@dataclass
class FeatureConfig:
    sample_rate_hz: int = 16000
    n_mels: int = 80
    win_len_s: float = 0.025
    hop_s: float = 0.010
    n_fft: Optional[int] = None  # default: next power of two >= window samples
    f_min_hz: float = 0.0
    f_max_hz: Optional[float] = None  # default: Nyquist
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        nyquist = self.sample_rate_hz / 2
        if self.f_max_hz is None:
            self.f_max_hz = nyquist
        if not 0 <= self.f_min_hz < self.f_max_hz <= nyquist:
            raise ValueError("need 0 <= f_min < f_max <= Nyquist")
        win = self.win_samples
        if self.n_fft is None:
            self.n_fft = 1 << max(1, (win - 1).bit_length())
        if self.n_fft < win or self.n_fft & (self.n_fft - 1):
            raise ValueError("n_fft must be a power of two >= window length")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def win_samples(self) -> int:
        return int(round(self.win_len_s * self.sample_rate_hz))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_s * self.sample_rate_hz))


@dataclass
class FeatureMatrix:
    """T x n_mels log-Mel frames for one segment."""

    frames: np.ndarray
    frame_hop_s: float

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ValueError("frames must be a T x n_mels matrix with T >= 1")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("non-finite feature values")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: FeatureConfig) -> np.ndarray:
    """Triangular Mel filter matrix of shape (n_mels, n_fft/2 + 1).

    Filters have unit peak, overlap their neighbours, and every row carries
    at least one nonzero weight; too many filters for the FFT resolution is
    an error rather than a silent all-zero row.
    """
    n_bins = cfg.n_fft // 2 + 1
    bin_freqs = np.arange(n_bins) * cfg.sample_rate_hz / cfg.n_fft
    mel_pts = np.linspace(hz_to_mel(cfg.f_min_hz), hz_to_mel(cfg.f_max_hz), cfg.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)

    fb = np.zeros((cfg.n_mels, n_bins))
    for i in range(cfg.n_mels):
        lo, center, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        rising = (bin_freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - center, 1e-12)
        fb[i] = np.maximum(0.0, np.minimum(rising, falling))
    empty = np.where(fb.sum(axis=1) == 0)[0]
    if empty.size:
        raise ValueError(
            f"{empty.size} Mel filters are empty (first: {empty[0]}); "
            f"reduce n_mels or increase n_fft"
        )
    return fb


def filter_centers_hz(cfg: FeatureConfig) -> np.ndarray:
    """Center frequency of each Mel filter."""
    mel_pts = np.linspace(hz_to_mel(cfg.f_min_hz), hz_to_mel(cfg.f_max_hz), cfg.n_mels + 2)
    return mel_to_hz(mel_pts)[1:-1]


def _frame_signal(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    n_frames = 1 + (len(x) - win) // hop
    strided = np.lib.stride_tricks.sliding_window_view(x, win)[:: hop]
    return strided[:n_frames]


def log_mel(w: Waveform, cfg: FeatureConfig, filterbank: Optional[np.ndarray] = None) -> FeatureMatrix:
    """Log-Mel energies for one segment: T = 1 + floor((len - win) / hop) frames.

    Arguments
    ---------
    w : Waveform
        Input segment; must span at least one analysis window and match the
        config's sample rate.
    cfg : FeatureConfig
    filterbank : ndarray, optional
        Precomputed mel_filterbank(cfg), to amortize over many segments.
    """
    if w.sample_rate_hz != cfg.sample_rate_hz:
        raise ValueError(
            f"waveform rate {w.sample_rate_hz} != feature config rate {cfg.sample_rate_hz}"
        )
    win, hop = cfg.win_samples, cfg.hop_samples
    if len(w) < win:
        raise ValueError(f"signal ({len(w)} samples) shorter than one window ({win})")
    if filterbank is None:
        filterbank = mel_filterbank(cfg)

    frames = _frame_signal(w.samples, win, hop)
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(win) / win)
    spectrum = np.fft.rfft(frames * hann, n=cfg.n_fft, axis=1)
    power = np.abs(spectrum) ** 2
    energies = power @ filterbank.T
    return FeatureMatrix(np.log(np.maximum(energies, cfg.log_floor)), cfg.hop_s)


def mean_normalize(f: FeatureMatrix) -> FeatureMatrix:
    """Remove the per-dimension mean over the segment's frames."""
    return FeatureMatrix(f.frames - f.frames.mean(axis=0, keepdims=True), f.frame_hop_s)


def toy_feature_config(sample_rate_hz: int = 16000, n_mels: int = 80) -> FeatureConfig:
    return FeatureConfig(sample_rate_hz=sample_rate_hz, n_mels=n_mels)
