"""Waveform contamination strategies and multi-view training batches.

Six strategies operate directly on waveforms: chunk dropout, random
band-stop filtering, speed perturbation (bounded to +/-5%), reverberation
by RIR convolution, additive noise at a target SNR, and noise+reverb
combined. A training batch concatenates one full view of the clean
utterances per configured strategy, so a batch of B utterances with V
views yields B*V inputs with labels replicated per view block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve

from specdiar.audio_io import Waveform, read_wav, resample

VIEW_CLEAN = "clean"
VIEW_WAV_DROP = "waveform_dropout"
VIEW_FREQ_DROP = "frequency_dropout"
VIEW_SPEED = "speed_perturb"
VIEW_REVERB = "reverb"
VIEW_NOISE = "noise"
VIEW_NOISE_REVERB = "noise_reverb"

DEFAULT_VIEWS = (
    VIEW_CLEAN,
    VIEW_WAV_DROP,
    VIEW_FREQ_DROP,
    VIEW_SPEED,
    VIEW_REVERB,
    VIEW_NOISE,
)

_FREQ_DROP_TAPS = 1025
_SPEED_MIN, _SPEED_MAX = 0.95, 1.05


class WaveformCorpus:
    """Pool of waveforms (noises or room impulse responses) sampled at random."""

    def __init__(self, items: Sequence[Waveform], name: str = "corpus"):
        self.items = list(items)
        self.name = name

    @classmethod
    def from_path(cls, path, name: str = "corpus") -> "WaveformCorpus":
        """Load from a directory (scanned recursively for WAVs) or a manifest
        file listing one WAV path per line."""
        path = Path(path)
        if path.is_dir():
            files = sorted(path.rglob("*.wav")) + sorted(path.rglob("*.WAV"))
        else:
            base = path.parent
            files = []
            for line in path.read_text().splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                p = Path(line)
                files.append(p if p.is_absolute() else base / p)
        return cls([read_wav(f) for f in files], name=name)

    def __len__(self) -> int:
        return len(self.items)

    def sample(self, rng: np.random.Generator) -> Waveform:
        if not self.items:
            raise ValueError(f"empty {self.name}: no waveforms to draw from")
        return self.items[int(rng.integers(len(self.items)))]


@dataclass
class AugmentConfig:
    wav_drop_chunks: int = 3
    wav_drop_len_s: Tuple[float, float] = (0.05, 0.2)
    freq_drop_bands: int = 2
    freq_drop_width_hz: Tuple[float, float] = (100.0, 500.0)
    speed_factors: Tuple[float, ...] = (0.95, 1.0, 1.05)
    speed_continuous: bool = False
    snr_db_range: Tuple[float, float] = (0.0, 10.0)
    rir_corpus: Optional[WaveformCorpus] = None
    noise_corpus: Optional[WaveformCorpus] = None
    view_list: Tuple[str, ...] = DEFAULT_VIEWS

    def __post_init__(self):
        for f in self.speed_factors:
            if not _SPEED_MIN <= f <= _SPEED_MAX:
                raise ValueError(f"speed factor {f} outside [{_SPEED_MIN}, {_SPEED_MAX}]")
        if self.snr_db_range[0] > self.snr_db_range[1]:
            raise ValueError("snr_db_range min > max")
        if self.wav_drop_chunks < 0 or self.freq_drop_bands < 0:
            raise ValueError("chunk/band counts must be >= 0")
        unknown = set(self.view_list) - set(ALL_VIEWS)
        if unknown:
            raise ValueError(f"unknown augmentation views: {sorted(unknown)}")


@dataclass
class AugmentedBatch:
    """View-major multi-view batch: |inputs| = batch_size * |views|."""

    inputs: List[Waveform]
    labels: List[int]
    view_of: List[str]

    def __post_init__(self):
        if not len(self.inputs) == len(self.labels) == len(self.view_of):
            raise ValueError("inputs, labels and view_of must be aligned")


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------

def waveform_dropout(w: Waveform, cfg: AugmentConfig, rng: np.random.Generator) -> Waveform:
    """Zero out cfg.wav_drop_chunks random chunks of the signal."""
    out = w.samples.copy()
    lo, hi = cfg.wav_drop_len_s
    for _ in range(cfg.wav_drop_chunks):
        length = int(round(rng.uniform(lo, hi) * w.sample_rate_hz))
        if length >= len(out):
            raise ValueError(
                f"dropout chunk ({length} samples) not shorter than signal ({len(out)})"
            )
        start = int(rng.integers(0, len(out) - length + 1))
        out[start : start + length] = 0.0
    return Waveform(out, w.sample_rate_hz)


def _band_stop_fir(bands: Sequence[Tuple[float, float]], rate: int, numtaps: int = _FREQ_DROP_TAPS) -> np.ndarray:
    """Linear-phase FIR with unit gain except zeros inside the given bands.

    Spectral-gain design: amplitude sampled on an rfft grid, inverted to a
    zero-phase kernel, centered, and Hann-windowed.
    """
    n_bins = numtaps // 2 + 1
    freqs = np.arange(n_bins) * rate / numtaps
    amplitude = np.ones(n_bins)
    for lo, hi in bands:
        amplitude[(freqs >= lo) & (freqs <= hi)] = 0.0
    kernel = np.fft.irfft(amplitude, n=numtaps)
    kernel = np.roll(kernel, numtaps // 2)
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(numtaps) / (numtaps - 1))
    return kernel * hann


def frequency_dropout(w: Waveform, cfg: AugmentConfig, rng: np.random.Generator) -> Waveform:
    """Apply cfg.freq_drop_bands random band-stop filters."""
    if cfg.freq_drop_bands == 0:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    nyquist = w.sample_rate_hz / 2
    lo_w, hi_w = cfg.freq_drop_width_hz
    bands = []
    for _ in range(cfg.freq_drop_bands):
        width = rng.uniform(lo_w, hi_w)
        if width / 2 >= nyquist:
            raise ValueError(f"stop band width {width:.0f} Hz exceeds Nyquist range")
        center = rng.uniform(width / 2, nyquist - width / 2)
        bands.append((center - width / 2, center + width / 2))
    kernel = _band_stop_fir(bands, w.sample_rate_hz)
    out = fftconvolve(w.samples, kernel, mode="same")
    return Waveform(out, w.sample_rate_hz)


def speed_perturb(w: Waveform, factor: float) -> Waveform:
    """Change tempo and pitch by resampling then relabeling the rate.

    factor > 1 shortens the signal (faster speech) and scales a tone at
    f Hz to f * factor.
    """
    if not _SPEED_MIN <= factor <= _SPEED_MAX:
        raise ValueError(f"speed factor {factor} outside [{_SPEED_MIN}, {_SPEED_MAX}]")
    if factor == 1.0:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    inner_rate = int(round(w.sample_rate_hz / factor))
    slowed = resample(w, inner_rate)
    return Waveform(slowed.samples, w.sample_rate_hz)


def add_reverb(w: Waveform, rir: Waveform) -> Waveform:
    """Convolve with a room impulse response; renormalize to the input peak."""
    if len(rir) == 0:
        raise ValueError("empty room impulse response")
    if rir.sample_rate_hz != w.sample_rate_hz:
        rir = resample(rir, w.sample_rate_hz)
    wet = fftconvolve(w.samples, rir.samples)[: len(w)]
    in_peak = np.max(np.abs(w.samples))
    out_peak = np.max(np.abs(wet))
    if out_peak > 0 and in_peak > 0:
        wet = wet * (in_peak / out_peak)
    return Waveform(wet, w.sample_rate_hz)


def _fit_noise(noise: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Loop short noise with a random phase offset, or randomly crop long noise."""
    if len(noise) >= n:
        start = int(rng.integers(0, len(noise) - n + 1))
        return noise[start : start + n]
    offset = int(rng.integers(0, len(noise)))
    rolled = np.roll(noise, -offset)
    reps = int(np.ceil(n / len(noise)))
    return np.tile(rolled, reps)[:n]


def add_noise(w: Waveform, noise: Waveform, snr_db: float, rng: np.random.Generator) -> Waveform:
    """Mix in noise at an exact SNR.

    The gain g solves 10*log10(P_speech / P_scaled_noise) = snr_db, i.e.
    g = sqrt(P_w / (P_n * 10^(snr/10))) with powers measured as mean squares.
    """
    if noise.sample_rate_hz != w.sample_rate_hz:
        noise = resample(noise, w.sample_rate_hz)
    p_w = float(np.mean(w.samples**2))
    if p_w == 0:
        raise ValueError("zero-power speech signal")
    fitted = _fit_noise(noise.samples, len(w), rng)
    p_n = float(np.mean(fitted**2))
    if p_n == 0:
        raise ValueError("zero-power noise signal")
    gain = np.sqrt(p_w / (p_n * 10.0 ** (snr_db / 10.0)))
    return Waveform(w.samples + gain * fitted, w.sample_rate_hz)


def add_noise_reverb(
    w: Waveform, rir: Waveform, noise: Waveform, snr_db: float, rng: np.random.Generator
) -> Waveform:
    """Reverberate first, then add noise at the target SNR relative to the
    reverberant signal."""
    return add_noise(add_reverb(w, rir), noise, snr_db, rng)


# ---------------------------------------------------------------------------
# Batch construction
# ---------------------------------------------------------------------------

def apply_view(w: Waveform, view: str, cfg: AugmentConfig, rng: np.random.Generator) -> Waveform:
    """Apply one named contamination strategy, drawing its randomness from rng."""
    if view == VIEW_CLEAN:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    if view == VIEW_WAV_DROP:
        return waveform_dropout(w, cfg, rng)
    if view == VIEW_FREQ_DROP:
        return frequency_dropout(w, cfg, rng)
    if view == VIEW_SPEED:
        if cfg.speed_continuous:
            factor = float(rng.uniform(_SPEED_MIN, _SPEED_MAX))
        else:
            factor = float(cfg.speed_factors[int(rng.integers(len(cfg.speed_factors)))])
        return speed_perturb(w, factor)
    if view == VIEW_REVERB:
        if cfg.rir_corpus is None:
            raise ValueError("reverb view requires an RIR corpus")
        return add_reverb(w, cfg.rir_corpus.sample(rng))
    if view == VIEW_NOISE:
        if cfg.noise_corpus is None:
            raise ValueError("noise view requires a noise corpus")
        snr = float(rng.uniform(*cfg.snr_db_range))
        return add_noise(w, cfg.noise_corpus.sample(rng), snr, rng)
    if view == VIEW_NOISE_REVERB:
        if cfg.rir_corpus is None or cfg.noise_corpus is None:
            raise ValueError("noise_reverb view requires RIR and noise corpora")
        snr = float(rng.uniform(*cfg.snr_db_range))
        return add_noise_reverb(
            w, cfg.rir_corpus.sample(rng), cfg.noise_corpus.sample(rng), snr, rng
        )
    raise ValueError(f"unknown view {view!r}")


ALL_VIEWS = (
    VIEW_CLEAN,
    VIEW_WAV_DROP,
    VIEW_FREQ_DROP,
    VIEW_SPEED,
    VIEW_REVERB,
    VIEW_NOISE,
    VIEW_NOISE_REVERB,
)


def _view_rng(seed: int, view_idx: int, utt_idx: int) -> np.random.Generator:
    # sub-seed derived from (master seed, view, utterance) so batches are
    # reproducible regardless of evaluation order
    return np.random.default_rng(np.random.SeedSequence((seed, view_idx, utt_idx)))


def _master_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(np.iinfo(np.int64).max))
    return int(rng)


def build_augmented_batch(
    clean: Sequence[Tuple[Waveform, int]], cfg: AugmentConfig, rng
) -> AugmentedBatch:
    """Concatenate one contaminated view block per strategy in cfg.view_list.

    Arguments
    ---------
    clean : sequence of (Waveform, label)
        The underlying batch; with the default six views a batch of 32
        utterances yields 192 inputs.
    cfg : AugmentConfig
    rng : numpy Generator or int seed
        Per-utterance randomness is drawn from sub-generators derived from
        (master seed, view index, utterance index).

    Returns
    -------
    AugmentedBatch with view-major layout: block v holds view_list[v]
    applied to every clean utterance in order, labels replicated per block.
    """
    if not clean:
        raise ValueError("empty clean batch")
    seed = _master_seed(rng)
    inputs: List[Waveform] = []
    labels: List[int] = []
    view_of: List[str] = []
    for view_idx, view in enumerate(cfg.view_list):
        for utt_idx, (w, label) in enumerate(clean):
            sub = _view_rng(seed, view_idx, utt_idx)
            inputs.append(apply_view(w, view, cfg, sub))
            labels.append(label)
            view_of.append(view)
    return AugmentedBatch(inputs, labels, view_of)


def build_standard_batch(
    clean: Sequence[Tuple[Waveform, int]], cfg: AugmentConfig, rng
) -> AugmentedBatch:
    """Conventional augmentation: each utterance gets one strategy drawn
    uniformly from cfg.view_list; batch size is unchanged."""
    if not clean:
        raise ValueError("empty clean batch")
    seed = _master_seed(rng)
    chooser = np.random.default_rng(np.random.SeedSequence((seed, 0xC0FFEE)))
    inputs, labels, view_of = [], [], []
    for utt_idx, (w, label) in enumerate(clean):
        view_idx = int(chooser.integers(len(cfg.view_list)))
        view = cfg.view_list[view_idx]
        sub = _view_rng(seed, view_idx, utt_idx)
        inputs.append(apply_view(w, view, cfg, sub))
        labels.append(label)
        view_of.append(view)
    return AugmentedBatch(inputs, labels, view_of)
