"""Speaker diarization engine.

Pipeline: multi-view waveform augmentation -> log-Mel features -> ECAPA-TDNN
speaker embeddings -> unnormalized spectral clustering with eigengap speaker
counting -> DER scoring against RTTM references.
"""

from specdiar.audio_io import Segment, Timeline, Waveform

__all__ = ["Segment", "Timeline", "Waveform"]
__version__ = "0.1.0"
