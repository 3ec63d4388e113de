from __future__ import annotations

import numpy as np

from asrkit.data import load_wav
from asrkit.numerics import Rng
from asrkit.synth import (
    SOURCE_CHARS,
    TARGET_CHARS,
    char_tones,
    generate_scenario,
    synthesize_clip,
)
from asrkit.transfer import Alphabet


def test_clip_is_deterministic():
    alphabet = Alphabet.from_string("ab")
    a = synthesize_clip("ab", alphabet, Rng(3))
    b = synthesize_clip("ab", alphabet, Rng(3))
    assert np.array_equal(a, b)


def test_clip_length_scales_with_text():
    alphabet = Alphabet.from_string("ab")
    assert len(synthesize_clip("a", alphabet, Rng(0))) == 1600
    assert len(synthesize_clip("abab", alphabet, Rng(0))) == 6400


def test_distinct_chars_have_distinct_tones():
    tones = [char_tones(i) for i in range(len(TARGET_CHARS))]
    assert len(set(tones)) == len(tones)
    assert max(f for pair in tones for f in pair) < 8000  # below Nyquist


def test_target_alphabet_extends_source():
    assert TARGET_CHARS.startswith(SOURCE_CHARS)
    assert set(TARGET_CHARS) - set(SOURCE_CHARS) == {"ä", "ö", "ü"}


def test_scenario_layout(tmp_path):
    dirs = generate_scenario(tmp_path, seed=4, n_train=8, n_dev=1, n_test=1)
    for name in ("source", "target"):
        lang = dirs[name]
        assert lang.alphabet_file.is_file()
        assert lang.corpus_file.is_file()
        train_lines = lang.train_manifest.read_text(encoding="utf-8").strip().split("\n")
        assert train_lines[0] == "path,transcript"
        assert len(train_lines) == 9
        assert len(lang.dev_manifest.read_text(encoding="utf-8").strip().split("\n")) == 2

    source_ab = Alphabet.from_file(dirs["source"].alphabet_file)
    target_ab = Alphabet.from_file(dirs["target"].alphabet_file)
    assert source_ab.chars == tuple(SOURCE_CHARS)
    assert target_ab.chars == tuple(TARGET_CHARS)

    # every target letter occurs somewhere in the target corpus
    corpus = dirs["target"].corpus_file.read_text(encoding="utf-8")
    for ch in "äöü":
        assert ch in corpus

    # the wavs are readable and follow the clip-length rule
    first = dirs["source"].train_manifest.read_text(encoding="utf-8").split("\n")[1]
    wav_name, transcript = first.split(",", 1)
    clip = load_wav(dirs["source"].root / wav_name)
    assert len(clip.samples) == 1600 * len(transcript)


def test_scenario_deterministic(tmp_path):
    a = generate_scenario(tmp_path / "a", seed=9, n_train=4, n_dev=1, n_test=1)
    b = generate_scenario(tmp_path / "b", seed=9, n_train=4, n_dev=1, n_test=1)
    for name in ("source", "target"):
        ta = a[name].train_manifest.read_text(encoding="utf-8")
        tb = b[name].train_manifest.read_text(encoding="utf-8")
        assert ta == tb
        wav = "wavs/u0000.wav"
        assert (a[name].root / wav).read_bytes() == (b[name].root / wav).read_bytes()
