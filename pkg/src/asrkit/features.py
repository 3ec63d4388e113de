"""MFCC front end: raw 16 kHz audio to stacked cepstral feature frames.

Pipeline: preemphasis, Hamming-windowed framing, power spectrum (FFT zero-
padded to the next power of two), triangular mel filterbank spanning 0 Hz to
Nyquist, log with a 1e-10 floor, orthonormal DCT-II, then symmetric context
stacking with zero padding at the clip edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

REQUIRED_SAMPLE_RATE = 16000
LOG_FLOOR = 1e-10


class ClipTooShort(ValueError):
    """Audio clip is shorter than one analysis window."""


class WrongSampleRate(ValueError):
    """Audio clip is not at the required 16 kHz rate."""


@dataclass(frozen=True)
class AudioClip:
    """Mono audio, samples in [-1, 1], 16 kHz."""

    samples: np.ndarray
    sample_rate: int = REQUIRED_SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate != REQUIRED_SAMPLE_RATE:
            raise WrongSampleRate(f"expected {REQUIRED_SAMPLE_RATE} Hz, got {self.sample_rate}")
        if len(self.samples) == 0:
            raise ClipTooShort("empty clip")


@dataclass(frozen=True)
class FeatureConfig:
    window_ms: int = 32
    hop_ms: int = 20
    n_mel_filters: int = 26
    n_cepstra: int = 26
    preemphasis: float = 0.97
    context_radius: int = 9

    def __post_init__(self):
        if not (self.window_ms >= self.hop_ms > 0):
            raise ValueError("need window_ms >= hop_ms > 0")
        if self.n_cepstra > self.n_mel_filters:
            raise ValueError("n_cepstra must not exceed n_mel_filters")
        if self.context_radius < 0:
            raise ValueError("context_radius must be >= 0")
        if not (0.0 <= self.preemphasis < 1.0):
            raise ValueError("preemphasis must be in [0, 1)")

    @property
    def window_samples(self) -> int:
        return self.window_ms * REQUIRED_SAMPLE_RATE // 1000

    @property
    def hop_samples(self) -> int:
        return self.hop_ms * REQUIRED_SAMPLE_RATE // 1000

    @property
    def feature_width(self) -> int:
        """Width of one stacked frame."""
        return self.n_cepstra * (2 * self.context_radius + 1)


def preemphasize(clip: AudioClip, k: float) -> AudioClip:
    """y[0] = x[0]; y[t] = x[t] - k*x[t-1]."""
    if not (0.0 <= k < 1.0):
        raise ValueError(f"preemphasis coefficient must be in [0, 1), got {k}")
    x = np.asarray(clip.samples, dtype=np.float64)
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - k * x[:-1]
    return AudioClip(y, clip.sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters, equally spaced in mel between 0 Hz and Nyquist.

    Filter j rises over mel edge j..j+1 and falls over j+1..j+2; weights are
    evaluated at each FFT bin's frequency in mel space. Shape: n_filters x
    (n_fft//2 + 1).
    """
    edges = np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_filters + 2)
    bin_hz = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    bin_mel = hz_to_mel(bin_hz)
    fb = np.zeros((n_filters, len(bin_mel)))
    for j in range(n_filters):
        lo, mid, hi = edges[j], edges[j + 1], edges[j + 2]
        rising = (bin_mel - lo) / (mid - lo)
        falling = (hi - bin_mel) / (hi - mid)
        fb[j] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def frame_count(n_samples: int, cfg: FeatureConfig) -> int:
    return (n_samples - cfg.window_samples) // cfg.hop_samples + 1


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def log_mel_energies(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    """Pre-DCT log mel filterbank energies, shape T x n_mel_filters."""
    if clip.sample_rate != REQUIRED_SAMPLE_RATE:
        raise WrongSampleRate(f"expected {REQUIRED_SAMPLE_RATE} Hz, got {clip.sample_rate}")
    win = cfg.window_samples
    hop = cfg.hop_samples
    x = preemphasize(clip, cfg.preemphasis).samples
    if len(x) < win:
        raise ClipTooShort(f"clip has {len(x)} samples, window needs {win}")
    n_frames = frame_count(len(x), cfg)
    n_fft = _next_pow2(win)
    window = np.hamming(win)
    offsets = np.arange(n_frames) * hop
    frames = np.stack([x[o:o + win] for o in offsets]) * window
    spectrum = np.fft.rfft(frames, n=n_fft, axis=1)
    power = np.abs(spectrum) ** 2
    fb = mel_filterbank(cfg.n_mel_filters, n_fft, clip.sample_rate)
    energies = power @ fb.T
    return np.log(np.maximum(energies, LOG_FLOOR))


def mfcc(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    """Cepstral features (before context stacking), shape T x n_cepstra."""
    logmel = log_mel_energies(clip, cfg)
    return dct(logmel, type=2, norm="ortho", axis=1)[:, :cfg.n_cepstra]


def stack_context(feats: np.ndarray, radius: int) -> np.ndarray:
    """Widen each frame with its +-radius neighbours, zero-padded at edges."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return np.array(feats, dtype=np.float64)
    t, w = feats.shape
    padded = np.zeros((t + 2 * radius, w))
    padded[radius:radius + t] = feats
    return np.hstack([padded[k:k + t] for k in range(2 * radius + 1)])


def featurize(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    """Full front end: mfcc then context stacking. Shape T x feature_width."""
    return stack_context(mfcc(clip, cfg), cfg.context_radius)
