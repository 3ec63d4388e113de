"""CTC loss: log-space forward/backward recursion, exact gradient, and a
brute-force path-enumeration oracle for verification.

Conventions: the blank symbol is the LAST class index (C-1); log
probabilities are natural logs; a path collapses by merging adjacent repeats
first and deleting blanks second.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

ENUMERATION_LIMIT = 10 ** 6


class TargetInfeasible(ValueError):
    """The label sequence cannot be emitted in the given number of frames."""


class AlphabetMismatch(ValueError):
    """A target label index collides with or exceeds the blank index."""


class TooLargeToEnumerate(ValueError):
    """Path enumeration was asked for more than the guard allows."""


@dataclass(frozen=True)
class CtcResult:
    loss: float
    dlogprobs: np.ndarray


def collapse(path, blank: int) -> list[int]:
    """Merge adjacent repeats, then delete blanks."""
    out = []
    prev = None
    for p in path:
        if p != prev:
            out.append(p)
        prev = p
    return [p for p in out if p != blank]


def min_frames(target) -> int:
    """Shortest path length able to emit the target: length plus one
    separating blank per adjacent equal pair."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def _check_target(target, blank: int):
    for label in target:
        if not (0 <= label < blank):
            raise AlphabetMismatch(f"label {label} not below blank index {blank}")


def _interleave(target, blank: int) -> np.ndarray:
    ext = np.full(2 * len(target) + 1, blank, dtype=np.int64)
    ext[1::2] = target
    return ext


def ctc_forward_backward(logprobs: np.ndarray, target) -> CtcResult:
    """Negative log likelihood of the target plus its exact gradient.

    logprobs: T x C natural-log class probabilities (blank last). The
    gradient treats every entry of logprobs as a free variable.
    """
    logprobs = np.asarray(logprobs, dtype=np.float64)
    t_len, n_classes = logprobs.shape
    blank = n_classes - 1
    target = list(target)
    _check_target(target, blank)
    if t_len < min_frames(target):
        raise TargetInfeasible(
            f"target needs at least {min_frames(target)} frames, got {t_len}")

    ext = _interleave(target, blank)
    s_len = len(ext)

    # skip[s]: transition s-2 -> s is allowed (distinct non-blank labels)
    skip = np.zeros(s_len, dtype=bool)
    skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])

    neg = -np.inf
    alpha = np.full((t_len, s_len), neg)
    alpha[0, 0] = logprobs[0, ext[0]]
    if s_len > 1:
        alpha[0, 1] = logprobs[0, ext[1]]
    for t in range(1, t_len):
        stay = alpha[t - 1]
        prev = np.full(s_len, neg)
        prev[1:] = alpha[t - 1, :-1]
        jump = np.full(s_len, neg)
        jump[2:] = np.where(skip[2:], alpha[t - 1, :-2], neg)
        alpha[t] = _lse3(stay, prev, jump) + logprobs[t, ext]

    tails = alpha[-1, -1] if s_len == 1 else np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    log_p = float(tails)

    # beta excludes the emission at its own frame, so alpha[t]+beta[t] is the
    # full log probability mass of paths passing through (t, s).
    beta = np.full((t_len, s_len), neg)
    beta[-1, -1] = 0.0
    if s_len > 1:
        beta[-1, -2] = 0.0
    for t in range(t_len - 2, -1, -1):
        nxt = beta[t + 1] + logprobs[t + 1, ext]
        stay = nxt
        fwd = np.full(s_len, neg)
        fwd[:-1] = nxt[1:]
        jump = np.full(s_len, neg)
        jump[:-2] = np.where(skip[2:], nxt[2:], neg)
        beta[t] = _lse3(stay, fwd, jump)

    occupancy = alpha + beta  # log mass through each lattice node
    dlogprobs = np.zeros_like(logprobs)
    for t in range(t_len):
        for s in range(s_len):
            if occupancy[t, s] != neg:
                dlogprobs[t, ext[s]] += np.exp(occupancy[t, s] - log_p)
    return CtcResult(loss=-log_p, dlogprobs=-dlogprobs)


def _lse3(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.logaddexp(np.logaddexp(a, b), c)


def ctc_oracle(probs: np.ndarray, target) -> float:
    """Loss by explicit enumeration of all C^T frame-level paths.

    probs is in probability space. Guarded to C^T <= 1e6.
    """
    probs = np.asarray(probs, dtype=np.float64)
    t_len, n_classes = probs.shape
    blank = n_classes - 1
    target = list(target)
    _check_target(target, blank)
    if n_classes ** t_len > ENUMERATION_LIMIT:
        raise TooLargeToEnumerate(f"{n_classes}^{t_len} paths exceed the guard")
    total = 0.0
    for path in itertools.product(range(n_classes), repeat=t_len):
        if collapse(path, blank) == target:
            p = 1.0
            for t, k in enumerate(path):
                p *= probs[t, k]
            total += p
    if total == 0.0:
        raise TargetInfeasible("no path collapses to the target")
    return -float(np.log(total))
