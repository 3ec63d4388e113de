"""Decoding per-frame character log-probabilities into text.

greedy_decode is the best-path baseline. beam_decode is CTC prefix beam
search: each hypothesis keeps separate probabilities for paths ending in
blank and non-blank, and the ranking score adds a weighted language-model
term plus a per-character insertion bonus whenever the prefix grows.
oracle_decode scores every label sequence exhaustively and is the ground
truth the beam is checked against.

Tie-breaking is deterministic everywhere: lowest label index at a frame,
lexicographically smallest label sequence between equal scores.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ctc import ENUMERATION_LIMIT, TargetInfeasible, TooLargeToEnumerate, collapse, ctc_forward_backward
from .lm import BOS, NGramLM
from .transfer import Alphabet

_LN10 = math.log(10.0)


class VocabularyMismatch(ValueError):
    """The language model does not cover the decoding alphabet."""


@dataclass(frozen=True)
class DecodeParams:
    beam_width: int = 64
    alpha: float = 0.75  # LM weight
    beta: float = 1.5    # per-character insertion bonus

    def __post_init__(self):
        if self.beam_width < 1 or self.alpha < 0 or self.beta < 0:
            raise ValueError(f"bad decode params {self}")


def greedy_decode(logprobs: np.ndarray, alphabet: Alphabet) -> str:
    """Per-frame argmax (lowest index wins ties), collapsed to text."""
    ids = np.argmax(logprobs, axis=1)
    return alphabet.decode(collapse(ids, alphabet.blank_index))


def _check_lm(lm: NGramLM | None, alphabet: Alphabet) -> None:
    if lm is not None and not set(alphabet.chars) <= set(lm.chars):
        missing = sorted(set(alphabet.chars) - set(lm.chars))
        raise VocabularyMismatch(f"LM lacks characters {missing!r}")


def _lm_char_term(lm: NGramLM | None, p: DecodeParams,
                  prefix_text: str, char: str) -> float:
    """Score increment for appending one character: alpha * ln p_lm + beta.

    The LM context is the prefix conditioned on the sentence start marker.
    """
    if lm is None or p.alpha == 0.0:
        return p.beta
    return p.alpha * _LN10 * lm.score((BOS,) + tuple(prefix_text), char) + p.beta


@dataclass
class BeamHyp:
    prefix: tuple[int, ...]
    log_p_blank: float      # paths ending in blank
    log_p_nonblank: float   # paths ending in the last prefix char
    lm_term: float          # accumulated alpha*ln p_lm + beta contributions

    @property
    def log_p_total(self) -> float:
        return float(np.logaddexp(self.log_p_blank, self.log_p_nonblank))

    @property
    def score(self) -> float:
        return self.log_p_total + self.lm_term


def beam_decode(logprobs: np.ndarray, lm: NGramLM | None,
                p: DecodeParams, alphabet: Alphabet) -> str:
    """CTC prefix beam search with character-level LM fusion."""
    return beam_decode_scored(logprobs, lm, p, alphabet)[0]


def beam_decode_scored(logprobs: np.ndarray, lm: NGramLM | None,
                       p: DecodeParams, alphabet: Alphabet) -> tuple[str, float]:
    """Like beam_decode but also returns the winning hypothesis's combined
    score. Pruning can only lose probability mass, so the score is a lower
    bound of the hypothesis's true combined score and reaches it once the
    beam holds every reachable prefix."""
    _check_lm(lm, alphabet)
    logprobs = np.asarray(logprobs, dtype=np.float64)
    blank = alphabet.blank_index
    neg = -np.inf

    beam: dict[tuple[int, ...], BeamHyp] = {
        (): BeamHyp((), 0.0, neg, 0.0)
    }
    for row in logprobs:
        nxt: dict[tuple[int, ...], BeamHyp] = {}

        def bump(prefix, d_blank, d_nonblank, lm_term):
            hyp = nxt.get(prefix)
            if hyp is None:
                hyp = BeamHyp(prefix, neg, neg, lm_term)
                nxt[prefix] = hyp
            hyp.log_p_blank = np.logaddexp(hyp.log_p_blank, d_blank)
            hyp.log_p_nonblank = np.logaddexp(hyp.log_p_nonblank, d_nonblank)

        for hyp in beam.values():
            text = alphabet.decode(hyp.prefix)
            # stay on the same prefix via blank, or by repeating its last char
            bump(hyp.prefix, hyp.log_p_total + row[blank], neg, hyp.lm_term)
            if hyp.prefix:
                bump(hyp.prefix, neg, hyp.log_p_nonblank + row[hyp.prefix[-1]],
                     hyp.lm_term)
            for label in range(blank):
                extended = hyp.prefix + (label,)
                # a repeated char only extends out of a blank-ending path
                base = hyp.log_p_blank if hyp.prefix and label == hyp.prefix[-1] \
                    else hyp.log_p_total
                if base == neg:
                    continue
                term = hyp.lm_term + _lm_char_term(lm, p, text, alphabet.chars[label])
                bump(extended, neg, base + row[label], term)

        survivors = sorted(nxt.values(), key=lambda h: (-h.score, h.prefix))
        beam = {h.prefix: h for h in survivors[:p.beam_width]}

    best = min(beam.values(), key=lambda h: (-h.score, h.prefix))
    return alphabet.decode(best.prefix), best.score


def oracle_decode(logprobs: np.ndarray, lm: NGramLM | None,
                  p: DecodeParams, alphabet: Alphabet) -> str:
    """Argmax over every label sequence of length <= T of
    ln P_ctc + alpha * ln P_lm + beta * length. Ties go to the
    lexicographically smaller sequence."""
    _check_lm(lm, alphabet)
    logprobs = np.asarray(logprobs, dtype=np.float64)
    t_len = logprobs.shape[0]
    n_classes = alphabet.n_labels
    if n_classes ** t_len > ENUMERATION_LIMIT:
        raise TooLargeToEnumerate(f"{n_classes}^{t_len} exceeds the guard")

    best_seq: tuple[int, ...] | None = None
    best_score = -np.inf
    for length in range(t_len + 1):
        for seq in itertools.product(range(alphabet.size), repeat=length):
            try:
                log_p_ctc = -ctc_forward_backward(logprobs, list(seq)).loss
            except TargetInfeasible:
                continue
            score = log_p_ctc
            text = alphabet.decode(seq)
            for i, ch in enumerate(text):
                score += _lm_char_term(lm, p, text[:i], ch)
            if score > best_score or (score == best_score and seq < best_seq):
                best_seq, best_score = seq, score
    return alphabet.decode(best_seq)
