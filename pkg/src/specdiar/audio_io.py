"""Audio and annotation I/O: WAV files, sample-rate conversion, RTTM timelines.

Only uncompressed RIFF/WAVE containers are handled (16-bit PCM and 32-bit
IEEE float). Multichannel files are never downmixed; a channel index selects
one stream.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path
from typing import Iterable, List, NamedTuple, Tuple

import numpy as np


class WavFormatError(Exception):
    """Raised for unreadable or unsupported WAV containers."""


class RttmParseError(Exception):
    """Raised for malformed RTTM input; the message carries the line number."""


@dataclass
class Waveform:
    """Mono audio signal: float samples in [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("Waveform samples must be one-dimensional")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample rate must be a positive integer")
        self.sample_rate_hz = int(self.sample_rate_hz)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


class Segment(NamedTuple):
    speaker: str
    onset_s: float
    offset_s: float


@dataclass
class Timeline:
    """Labeled speech segments for one recording, sorted by onset.

    Entries may overlap (meetings do). The same type carries ground-truth
    references, oracle VAD, and diarization hypotheses.
    """

    file_id: str
    entries: List[Segment] = field(default_factory=list)

    def __post_init__(self):
        entries = [Segment(str(s), float(b), float(e)) for s, b, e in self.entries]
        for seg in entries:
            if seg.onset_s < 0:
                raise ValueError(f"segment {seg} has negative onset")
            if not seg.offset_s > seg.onset_s:
                raise ValueError(f"segment {seg} has offset <= onset")
        self.entries = sorted(entries, key=lambda s: (s.onset_s, s.offset_s, s.speaker))

    def __len__(self) -> int:
        return len(self.entries)

    def speakers(self) -> List[str]:
        return sorted({seg.speaker for seg in self.entries})

    def speech_regions(self) -> List[Tuple[float, float]]:
        """Union of all segments as disjoint (onset, offset) intervals."""
        regions: List[Tuple[float, float]] = []
        for seg in self.entries:
            if regions and seg.onset_s <= regions[-1][1]:
                regions[-1] = (regions[-1][0], max(regions[-1][1], seg.offset_s))
            else:
                regions.append((seg.onset_s, seg.offset_s))
        return regions


# ---------------------------------------------------------------------------
# WAV container
# ---------------------------------------------------------------------------

_PCM16_SCALE = 32768.0


def _iter_riff_chunks(raw: bytes) -> Iterable[Tuple[bytes, bytes]]:
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavFormatError("unsupported or corrupt container (not RIFF/WAVE)")
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos : pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(
                f"unsupported or corrupt container (truncated {cid!r} chunk)"
            )
        yield cid, body
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def read_wav(path, channel: int = 0) -> Waveform:
    """Read one channel of a WAV file as a normalized Waveform.

    Arguments
    ---------
    path : str or Path
        RIFF/WAVE file, 16-bit PCM or 32-bit IEEE float, any channel count.
    channel : int
        Index of the channel to extract (no implicit downmix).

    Returns
    -------
    Waveform with samples in [-1, 1] and the file's sample rate.
    """
    raw = Path(path).read_bytes()
    fmt = None
    data = None
    for cid, body in _iter_riff_chunks(raw):
        if cid == b"fmt " and fmt is None:
            if len(body) < 16:
                raise WavFormatError("unsupported or corrupt container (short fmt chunk)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data" and data is None:
            data = body
    if fmt is None or data is None:
        raise WavFormatError("unsupported or corrupt container (missing fmt/data chunk)")

    audio_format, n_channels, rate, _byte_rate, block_align, bits = fmt
    if n_channels < 1:
        raise WavFormatError("unsupported codec: zero channels")
    if not 0 <= channel < n_channels:
        raise ValueError(f"channel {channel} out of range for {n_channels}-channel file")

    if audio_format == 1 and bits == 16:
        dtype, denom = np.dtype("<i2"), _PCM16_SCALE
    elif audio_format == 3 and bits == 32:
        dtype, denom = np.dtype("<f4"), 1.0
    else:
        raise WavFormatError(f"unsupported codec: format={audio_format} bits={bits}")

    n_frames = len(data) // block_align
    if n_frames == 0:
        raise WavFormatError("zero-length data chunk")
    flat = np.frombuffer(data[: n_frames * block_align], dtype=dtype)
    samples = flat.reshape(n_frames, n_channels)[:, channel].astype(np.float64) / denom
    return Waveform(samples, int(rate))


def write_wav(w: Waveform, path, sample_format: str = "pcm16") -> None:
    """Write a Waveform as 16-bit PCM or 32-bit float WAV.

    Samples with magnitude above 1.0 are rejected rather than clipped.
    """
    peak = float(np.max(np.abs(w.samples))) if len(w) else 0.0
    if peak > 1.0:
        raise ValueError(f"clipping required: max |sample| = {peak:.6f} exceeds 1.0")

    if sample_format == "pcm16":
        q = np.round(w.samples * _PCM16_SCALE)
        payload = np.clip(q, -32768, 32767).astype("<i2").tobytes()
        audio_format, bits = 1, 16
    elif sample_format == "float32":
        payload = w.samples.astype("<f4").tobytes()
        audio_format, bits = 3, 32
    else:
        raise ValueError(f"unknown sample format {sample_format!r}")

    block_align = bits // 8
    byte_rate = w.sample_rate_hz * block_align
    chunks = [
        (b"fmt ", struct.pack("<HHIIHH", audio_format, 1, w.sample_rate_hz,
                              byte_rate, block_align, bits)),
    ]
    if audio_format != 1:
        chunks.append((b"fact", struct.pack("<I", len(w))))
    chunks.append((b"data", payload))

    body = b"".join(
        cid + struct.pack("<I", len(c)) + c + (b"\x00" if len(c) & 1 else b"")
        for cid, c in chunks
    )
    with open(path, "wb") as f:
        f.write(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)


# ---------------------------------------------------------------------------
# Sample-rate conversion
# ---------------------------------------------------------------------------

_RESAMPLE_TAPS_PER_PHASE = 64
_RESAMPLE_KAISER_BETA = 8.555  # ~90 dB stop band
_RESAMPLE_BLOCK = 1 << 16


def _windowed_sinc(t: np.ndarray, cutoff_scale: float, half_support: float) -> np.ndarray:
    """Kaiser-windowed sinc kernel evaluated at (fractional) tap offsets t."""
    u = t / half_support
    window = np.zeros_like(t)
    inside = np.abs(u) < 1.0
    window[inside] = np.i0(_RESAMPLE_KAISER_BETA * np.sqrt(1.0 - u[inside] ** 2))
    window /= np.i0(_RESAMPLE_KAISER_BETA)
    return cutoff_scale * np.sinc(cutoff_scale * t) * window


def resample(w: Waveform, target_rate_hz: int) -> Waveform:
    """Band-limited resampling via a polyphase Kaiser windowed-sinc kernel.

    Output length is round(len(w) * target / source); a target equal to the
    source rate returns an untouched copy.
    """
    target_rate_hz = int(target_rate_hz)
    if target_rate_hz <= 0:
        raise ValueError("target sample rate must be positive")
    src = w.sample_rate_hz
    if target_rate_hz == src:
        return Waveform(w.samples.copy(), src)

    n = len(w)
    g = gcd(src, target_rate_hz)
    up, down = target_rate_hz // g, src // g
    out_len = int(math.floor(n * up / down + 0.5))

    # When downsampling the kernel is stretched so its cutoff sits at the
    # target Nyquist; support stays at 64 taps per output phase.
    scale = min(1.0, target_rate_hz / src)
    half_support = (_RESAMPLE_TAPS_PER_PHASE / 2) / scale
    reach = int(math.ceil(half_support))
    offsets = np.arange(-reach + 1, reach + 1)

    xpad = np.concatenate([np.zeros(reach), w.samples, np.zeros(reach + 1)])
    out = np.empty(out_len, dtype=np.float64)
    for block_start in range(0, out_len, _RESAMPLE_BLOCK):
        m = np.arange(block_start, min(block_start + _RESAMPLE_BLOCK, out_len))
        pos = m * (down / up)
        base = np.floor(pos).astype(np.int64)
        frac = pos - base
        taps = _windowed_sinc(offsets[None, :] - frac[:, None], scale, half_support)
        idx = base[:, None] + offsets[None, :] + reach
        out[m] = np.einsum("ij,ij->i", xpad[idx], taps)
    return Waveform(out, target_rate_hz)


# ---------------------------------------------------------------------------
# RTTM
# ---------------------------------------------------------------------------

def parse_rttm(text: str) -> List[Timeline]:
    """Parse NIST RTTM SPEAKER records into one Timeline per file id.

    '#'-prefixed comments and blank lines are ignored; record types other
    than SPEAKER (e.g. SPKR-INFO) are skipped. Timelines are returned in
    order of first appearance.
    """
    per_file: dict[str, List[Segment]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if fields[0] != "SPEAKER":
            continue
        if len(fields) < 9:
            raise RttmParseError(
                f"line {lineno}: expected >= 9 fields on SPEAKER record, got {len(fields)}"
            )
        try:
            onset = float(fields[3])
            duration = float(fields[4])
        except ValueError as exc:
            raise RttmParseError(f"line {lineno}: non-numeric onset/duration") from exc
        if duration <= 0:
            raise RttmParseError(f"line {lineno}: non-positive duration {fields[4]}")
        if onset < 0:
            raise RttmParseError(f"line {lineno}: negative onset {fields[3]}")
        per_file.setdefault(fields[1], []).append(
            Segment(fields[7], onset, onset + duration)
        )
    return [Timeline(file_id, entries) for file_id, entries in per_file.items()]


def emit_rttm(timeline: Timeline, precision: int = 3) -> str:
    """Render a Timeline as RTTM SPEAKER lines (millisecond precision)."""
    lines = []
    for seg in timeline.entries:
        onset = f"{seg.onset_s:.{precision}f}"
        duration = f"{seg.offset_s - seg.onset_s:.{precision}f}"
        lines.append(
            f"SPEAKER {timeline.file_id} 1 {onset} {duration} "
            f"<NA> <NA> {seg.speaker} <NA> <NA>"
        )
    return "\n".join(lines) + ("\n" if lines else "")
