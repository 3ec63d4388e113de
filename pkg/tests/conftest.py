from __future__ import annotations

from pathlib import Path

import pytest

from asrkit.data import save_wav
from asrkit.numerics import Rng
from asrkit.synth import synthesize_clip, write_manifest
from asrkit.transfer import Alphabet


def build_dataset(root: Path, alphabet: Alphabet, texts, seed: int = 100) -> Path:
    """Write wavs plus a manifest for the given transcripts; returns the
    manifest path. The alphabet file lands next to it as alphabet.txt."""
    root.mkdir(parents=True, exist_ok=True)
    (root / "wavs").mkdir(exist_ok=True)
    alphabet.to_file(root / "alphabet.txt")
    rows = []
    for i, text in enumerate(texts):
        clip = synthesize_clip(text, alphabet, Rng(seed + i))
        save_wav(root / f"wavs/u{i:03d}.wav", clip)
        rows.append((f"wavs/u{i:03d}.wav", text))
    manifest = root / "train.csv"
    write_manifest(manifest, rows)
    return manifest


@pytest.fixture
def tiny_dataset(tmp_path):
    alphabet = Alphabet.from_string("ab")
    manifest = build_dataset(tmp_path / "tiny", alphabet, ["ab", "ba", "aab", "bb"])
    return alphabet, manifest
