"""Deterministic synthetic speech for desk-scale transfer experiments.

Each alphabet character owns a fixed two-tone signature; an utterance is the
concatenation of 100 ms character segments plus a little seeded noise. The
generator emits a "source" language over a plain ASCII alphabet and a
"target" language whose alphabet carries three extra characters, mirroring
a cross-lingual transfer setup where the output alphabet grows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import save_wav
from .numerics import Rng
from .transfer import Alphabet

SOURCE_CHARS = "abcdefgh "
TARGET_CHARS = SOURCE_CHARS + "äöü"
SAMPLE_RATE = 16000
CHAR_SAMPLES = 1600  # 100 ms per character
NOISE_AMPLITUDE = 0.02


def char_tones(index: int) -> tuple[float, float]:
    """Fundamental and overtone frequency (Hz) for an alphabet index."""
    f1 = 320.0 + 85.0 * index
    return f1, 2.0 * f1 + 130.0


def synthesize_clip(text: str, alphabet: Alphabet, rng: Rng) -> np.ndarray:
    """Waveform for a transcript: per-character tone segments plus noise."""
    if not text:
        raise ValueError("cannot synthesize an empty transcript")
    t = np.arange(CHAR_SAMPLES) / SAMPLE_RATE
    segments = []
    for ch in text:
        f1, f2 = char_tones(alphabet.index(ch))
        seg = 0.35 * np.sin(2 * np.pi * f1 * t) + 0.15 * np.sin(2 * np.pi * f2 * t)
        segments.append(seg)
    wave = np.concatenate(segments)
    wave += rng.uniform(-NOISE_AMPLITUDE, NOISE_AMPLITUDE, wave.shape)
    return np.clip(wave, -1.0, 1.0)


def _make_words(alphabet: Alphabet, rng: Rng, n_words: int) -> tuple[list[str], int]:
    letters = [c for c in alphabet.chars if c != " "]
    # first chop a shuffled copy of the letters into words so every
    # character occurs somewhere and is therefore trainable
    shuffled = letters.copy()
    rng.shuffle(shuffled)
    words: list[str] = []
    i = 0
    while i < len(shuffled):
        take = min(len(shuffled) - i, 2 + rng.below(3))
        words.append("".join(shuffled[i:i + take]))
        i += take
    n_cover = len(words)
    while len(words) < n_words:
        length = 2 + rng.below(3)
        word = "".join(letters[rng.below(len(letters))] for _ in range(length))
        if word not in words:
            words.append(word)
    return words, n_cover


def _make_transcripts(alphabet: Alphabet, rng: Rng, count: int) -> list[str]:
    words, n_cover = _make_words(alphabet, rng, n_words=12)
    # lead with the letter-covering words so even a small training split
    # exercises the whole alphabet
    out = words[:min(n_cover, count)]
    while len(out) < count:
        out.append(" ".join(words[rng.below(len(words))]
                            for _ in range(1 + rng.below(3))))
    return out


@dataclass(frozen=True)
class LanguageDirs:
    root: Path
    alphabet_file: Path
    corpus_file: Path
    train_manifest: Path
    dev_manifest: Path
    test_manifest: Path


def write_manifest(path: Path, rows: list[tuple[str, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["path", "transcript"])
        writer.writerows(rows)


def generate_language(root, alphabet: Alphabet, seed: int,
                      n_train: int, n_dev: int, n_test: int) -> LanguageDirs:
    """Write wavs, split manifests, the alphabet file and an LM corpus."""
    root = Path(root)
    wav_dir = root / "wavs"
    wav_dir.mkdir(parents=True, exist_ok=True)
    rng = Rng(seed)
    total = n_train + n_dev + n_test
    transcripts = _make_transcripts(alphabet, rng, total)
    rows = []
    for i, text in enumerate(transcripts):
        clip = synthesize_clip(text, alphabet, Rng(rng.next_u64()))
        name = f"wavs/u{i:04d}.wav"
        save_wav(root / name, clip)
        rows.append((name, text))

    dirs = LanguageDirs(
        root=root,
        alphabet_file=root / "alphabet.txt",
        corpus_file=root / "corpus.txt",
        train_manifest=root / "train.csv",
        dev_manifest=root / "dev.csv",
        test_manifest=root / "test.csv",
    )
    alphabet.to_file(dirs.alphabet_file)
    splits = (rows[:n_train], rows[n_train:n_train + n_dev], rows[n_train + n_dev:])
    for path, split in zip((dirs.train_manifest, dirs.dev_manifest, dirs.test_manifest), splits):
        write_manifest(path, split)
    dirs.corpus_file.write_text(
        "".join(text + "\n" for _, text in splits[0]), encoding="utf-8")
    return dirs


def generate_scenario(out_dir, seed: int, n_train: int = 48,
                      n_dev: int = 6, n_test: int = 6) -> dict[str, LanguageDirs]:
    """Source and target languages for the six-regime transfer suite.

    The default split is 80/10/10. The target transcripts are drawn over
    the extended alphabet, so its extra characters actually occur.
    """
    out_dir = Path(out_dir)
    source = generate_language(out_dir / "source", Alphabet.from_string(SOURCE_CHARS),
                               seed, n_train, n_dev, n_test)
    target = generate_language(out_dir / "target", Alphabet.from_string(TARGET_CHARS),
                               seed + 1, n_train, n_dev, n_test)
    return {"source": source, "target": target}
