"""Dataset ingestion: manifest CSVs, 16-bit PCM WAV files, and duration-
bucketed batching with zero padding.

A manifest is RFC-4180 CSV with the header "path,transcript"; audio paths
are resolved relative to the manifest's directory. Audio must be mono
16-bit PCM at 16 kHz.
"""

from __future__ import annotations

import csv
import os
import wave
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import AudioClip, FeatureConfig, featurize
from .numerics import Rng
from .transfer import Alphabet


class MalformedCsv(ValueError):
    pass


class MissingAudioFile(FileNotFoundError):
    pass


class InvalidTranscriptChar(ValueError):
    def __init__(self, char: str, row: int):
        super().__init__(f"manifest row {row}: character {char!r} not in the alphabet")
        self.char = char
        self.row = row


class MalformedRiff(ValueError):
    pass


class UnsupportedFormat(ValueError):
    def __init__(self, what: str, detail: str):
        super().__init__(f"unsupported {what}: {detail}")
        self.what = what


@dataclass(frozen=True)
class ManifestEntry:
    audio_path: Path
    transcript: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    source: Path

    def __len__(self) -> int:
        return len(self.entries)


def parse_manifest(path, alphabet: Alphabet) -> Manifest:
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: empty file") from None
        if header != ["path", "transcript"]:
            raise MalformedCsv(f"{path}: header must be path,transcript, got {header}")
        for row_no, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise MalformedCsv(f"{path}:{row_no}: expected 2 fields, got {len(row)}")
            audio, transcript = row
            for ch in transcript:
                if ch not in alphabet:
                    raise InvalidTranscriptChar(ch, row_no)
            resolved = base / audio
            if not resolved.is_file():
                raise MissingAudioFile(str(resolved))
            entries.append(ManifestEntry(resolved, transcript))
    return Manifest(tuple(entries), path)


def load_wav(path) -> AudioClip:
    """Read a mono 16 kHz 16-bit PCM WAV, scaled to [-1, 1] by 1/32768."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as e:
        raise MalformedRiff(f"{path}: {e}") from None
    if rate != 16000:
        raise UnsupportedFormat("rate", f"{path} is {rate} Hz, need 16000")
    if channels != 1:
        raise UnsupportedFormat("channels", f"{path} has {channels} channels, need mono")
    if width != 2:
        raise UnsupportedFormat("bit-depth", f"{path} has {8 * width}-bit samples, need 16")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioClip(samples)


def save_wav(path, samples: np.ndarray) -> None:
    """Write float samples in [-1, 1] as mono 16 kHz 16-bit PCM."""
    pcm = np.clip(np.asarray(samples) * 32767.0, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(16000)
        w.writeframes(pcm.tobytes())


@dataclass
class Batch:
    features: np.ndarray            # B x T_max x F, zero padded
    lengths: tuple[int, ...]        # true frame counts
    targets: tuple[tuple[int, ...], ...]
    paths: tuple[Path, ...]

    def __len__(self) -> int:
        return len(self.lengths)

    def utterance_features(self, i: int) -> np.ndarray:
        """Features of utterance i with the padding sliced off."""
        return self.features[i, :self.lengths[i]]


def worker_count() -> int:
    cap = os.environ.get("ASR_NUM_THREADS")
    n = min(4, os.cpu_count() or 1)
    if cap is not None:
        n = max(1, min(n, int(cap)))
    return n


def featurize_manifest(manifest: Manifest, cfg: FeatureConfig,
                       cache: dict | None = None) -> list[np.ndarray]:
    """Feature matrices for every entry, in manifest order.

    Runs a small thread pool (capped by ASR_NUM_THREADS); results are
    order-preserving so the pipeline stays deterministic. An optional cache
    carries feature matrices across epochs, keyed by (path, config).
    """
    if cache is None:
        cache = {}
    todo = [e.audio_path for e in manifest.entries
            if (e.audio_path, cfg) not in cache]
    if todo:
        def job(p):
            return featurize(load_wav(p), cfg)
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            for p, feats in zip(todo, pool.map(job, todo)):
                cache[(p, cfg)] = feats
    return [cache[(e.audio_path, cfg)] for e in manifest.entries]


def make_batches(manifest: Manifest, cfg: FeatureConfig, batch_size: int,
                 alphabet: Alphabet, rng: Rng, epoch_index: int,
                 cache: dict | None = None) -> list[Batch]:
    """Duration-sorted contiguous buckets, bucket order shuffled per epoch.

    The shuffle seed mixes one rng draw with epoch_index, so the same
    (seed, epoch) pair always yields the same batch sequence. Every
    utterance appears exactly once.
    """
    if len(manifest) == 0:
        raise ValueError("empty manifest")
    feats = featurize_manifest(manifest, cfg, cache)
    order = sorted(range(len(manifest)), key=lambda i: len(feats[i]))  # stable
    buckets = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    shuffle_rng = Rng(rng.next_u64() ^ (epoch_index * 0x9E3779B97F4A7C15))
    shuffle_rng.shuffle(buckets)

    width = cfg.feature_width
    batches = []
    for bucket in buckets:
        t_max = max(len(feats[i]) for i in bucket)
        stacked = np.zeros((len(bucket), t_max, width))
        lengths, targets, paths = [], [], []
        for row, i in enumerate(bucket):
            f = feats[i]
            stacked[row, :len(f)] = f
            lengths.append(len(f))
            targets.append(tuple(alphabet.encode(manifest.entries[i].transcript)))
            paths.append(manifest.entries[i].audio_path)
        batches.append(Batch(stacked, tuple(lengths), tuple(targets), tuple(paths)))
    return batches
