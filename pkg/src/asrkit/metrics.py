"""Word and character error rates via Levenshtein distance.

Rates are corpus-pooled: summed edit distances divided by summed reference
lengths, so they are invariant to utterance order and can exceed 1 when
hypotheses run long.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class LengthMismatch(ValueError):
    pass


class EmptyReference(ValueError):
    pass


def edit_distance(a, b) -> int:
    """Minimum insertions + deletions + substitutions (unit costs), full DP."""
    a = list(a)
    b = list(b)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def normalize(text: str, lowercase: bool = False) -> str:
    """Trim and collapse runs of whitespace; optionally lowercase."""
    text = re.sub(r"\s+", " ", text.strip())
    return text.lower() if lowercase else text


@dataclass(frozen=True)
class EvalReport:
    wer: float
    cer: float
    n_utterances: int
    word_distances: tuple[int, ...]
    char_distances: tuple[int, ...]


def score_pairs(refs, hyps, lowercase: bool = False) -> EvalReport:
    """Pooled WER/CER over aligned reference/hypothesis lists."""
    refs = list(refs)
    hyps = list(hyps)
    if len(refs) != len(hyps):
        raise LengthMismatch(f"{len(refs)} references vs {len(hyps)} hypotheses")
    word_d, char_d = [], []
    ref_words = ref_chars = 0
    for i, (ref, hyp) in enumerate(zip(refs, hyps)):
        ref = normalize(ref, lowercase)
        hyp = normalize(hyp, lowercase)
        if ref == "":
            raise EmptyReference(f"reference {i} is empty after normalization")
        word_d.append(edit_distance(ref.split(" "), hyp.split(" ") if hyp else []))
        char_d.append(edit_distance(ref, hyp))
        ref_words += len(ref.split(" "))
        ref_chars += len(ref)
    return EvalReport(
        wer=sum(word_d) / ref_words,
        cer=sum(char_d) / ref_chars,
        n_utterances=len(refs),
        word_distances=tuple(word_d),
        char_distances=tuple(char_d),
    )


def wer(refs, hyps, lowercase: bool = False) -> float:
    return score_pairs(refs, hyps, lowercase).wer


def cer(refs, hyps, lowercase: bool = False) -> float:
    return score_pairs(refs, hyps, lowercase).cer
