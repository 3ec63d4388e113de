"""Character n-gram language model with interpolated Kneser-Ney smoothing.

Every corpus line becomes <s> ... </s>. The model predicts over the
alphabet characters plus the end marker; the start marker only ever appears
as context. Estimation uses a single fixed absolute discount D:

    p_k(c | ctx) = max(A_k(ctx.c) - D, 0) / A_k(ctx.)
                   + lambda_k(ctx) * p_{k-1}(c | ctx[1:])
    lambda_k(ctx) = D * N1+(ctx.) / A_k(ctx.)

where A_k is the raw count at the highest order and the continuation count
(number of distinct preceding characters) below it, except that n-grams
starting with <s> keep raw counts since nothing can precede them. The
recursion bottoms out at the uniform distribution over the prediction
vocabulary, so every character scores above zero and each context
distribution sums to one exactly. Stored probabilities are the interpolated
values and the backoff weight of a context is its lambda, which makes the
model exactly representable in the standard ARPA backoff layout.

Scores are log10 throughout (the ARPA convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

BOS = "<s>"
EOS = "</s>"
_SPACE_TOKEN = "<sp>"  # ARPA files separate tokens with whitespace
_DUMMY_LOG10 = -99.0   # conventional stand-in for the unscorable <s>


class EmptyCorpus(ValueError):
    pass


class CharOutsideAlphabet(ValueError):
    def __init__(self, char: str, line_no: int):
        super().__init__(f"line {line_no}: character {char!r} not in the alphabet")
        self.char = char
        self.line_no = line_no


class UnknownChar(ValueError):
    pass


class MalformedArpa(ValueError):
    pass


@dataclass
class NGramLM:
    order: int
    chars: tuple[str, ...]                                  # prediction alphabet
    prob: dict[int, dict[tuple, float]] = field(repr=False) # log10, keyed by gram length
    bow: dict[tuple, float] = field(repr=False)             # log10 backoff per context

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self.chars + (BOS, EOS)

    @property
    def predicted(self) -> tuple[str, ...]:
        return self.chars + (EOS,)

    def score(self, context, c: str) -> float:
        """log10 p(c | context), using the longest stored context suffix and
        chaining backoff weights below it."""
        if c not in self.predicted:
            raise UnknownChar(f"cannot score {c!r}")
        ctx = tuple(context)
        if self.order > 1:
            ctx = ctx[-(self.order - 1):]
        else:
            ctx = ()
        acc = 0.0
        while True:
            hit = self.prob[len(ctx) + 1].get(ctx + (c,))
            if hit is not None:
                return acc + hit
            acc += self.bow.get(ctx, 0.0)
            ctx = ctx[1:]


def _sentences(lines, chars: frozenset, order: int) -> list[tuple[str, ...]]:
    out = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if line == "":
            continue
        for ch in line:
            if ch not in chars:
                raise CharOutsideAlphabet(ch, line_no)
        out.append((BOS,) + tuple(line) + (EOS,))
    if not out:
        raise EmptyCorpus("no usable corpus lines")
    return out


def train_ngram(corpus_lines, order: int, alphabet_chars, discount: float = 0.75) -> NGramLM:
    """Estimate an interpolated Kneser-Ney model of the given order.

    corpus_lines: iterable of text lines. alphabet_chars: the prediction
    characters (order defines context length n-1). discount: the single
    absolute discount D in (0, 1).
    """
    if not (1 <= order <= 6):
        raise ValueError(f"order must be in 1..6, got {order}")
    if not (0.0 < discount < 1.0):
        raise ValueError(f"discount must be in (0, 1), got {discount}")
    chars = tuple(alphabet_chars)
    sentences = _sentences(corpus_lines, frozenset(chars), order)
    predicted = chars + (EOS,)
    v = len(predicted)

    raw: dict[int, dict[tuple, int]] = {k: {} for k in range(1, order + 1)}
    for sent in sentences:
        for k in range(1, order + 1):
            table = raw[k]
            for i in range(len(sent) - k + 1):
                gram = sent[i:i + k]
                table[gram] = table.get(gram, 0) + 1

    # Adjusted counts: raw at the top order, continuation (distinct
    # predecessor types) below it; <s>-initial grams keep raw counts.
    adjusted: dict[int, dict[tuple, int]] = {order: raw[order]}
    for k in range(order - 1, 0, -1):
        table: dict[tuple, int] = {}
        for gram in raw[k + 1]:
            suffix = gram[1:]
            if suffix[0] != BOS:
                table[suffix] = table.get(suffix, 0) + 1
        for gram, count in raw[k].items():
            if gram[0] == BOS:
                table[gram] = count
        adjusted[k] = table

    lm = NGramLM(order=order, chars=chars,
                 prob={k: {} for k in range(1, order + 1)}, bow={})

    # unigrams: every prediction token is stored, zero-count ones carry the
    # pure interpolation mass so the distribution always covers the alphabet
    uni = adjusted[1]
    tot = sum(count for gram, count in uni.items() if gram[0] in predicted)
    seen = sum(1 for gram, count in uni.items() if gram[0] in predicted and count > 0)
    lam = discount * seen / tot
    for c in predicted:
        count = uni.get((c,), 0)
        p = max(count - discount, 0.0) / tot + lam * (1.0 / v)
        lm.prob[1][(c,)] = math.log10(p)

    for k in range(2, order + 1):
        contexts: dict[tuple, dict[str, int]] = {}
        for gram, count in adjusted[k].items():
            if gram[-1] == BOS:
                continue  # <s> is never predicted
            contexts.setdefault(gram[:-1], {})[gram[-1]] = count
        for ctx, followers in sorted(contexts.items()):
            tot = sum(followers.values())
            lam = discount * len(followers) / tot
            lm.bow[ctx] = math.log10(lam)
            for c, count in followers.items():
                lower = lm.score(ctx[1:], c)
                p = max(count - discount, 0.0) / tot + lam * (10.0 ** lower)
                lm.prob[k][ctx + (c,)] = math.log10(p)
    return lm


def _token_to_text(token: str) -> str:
    return _SPACE_TOKEN if token == " " else token


def _text_to_token(text: str) -> str:
    if text == _SPACE_TOKEN:
        return " "
    if text in (BOS, EOS) or len(text) == 1:
        return text
    raise MalformedArpa(f"unrecognized token {text!r}")


def write_arpa(lm: NGramLM, path) -> None:
    """Serialize in the standard ARPA text layout.

    The space character is written as the token <sp>; <s> appears in the
    unigram section with the conventional -99 dummy probability so its
    backoff weight has somewhere to live.
    """
    entries: dict[int, list[tuple[tuple, float]]] = {
        k: sorted(lm.prob[k].items()) for k in range(1, lm.order + 1)
    }
    if lm.order > 1:
        entries[1].append(((BOS,), _DUMMY_LOG10))
        entries[1].sort()
    with open(path, "w", encoding="utf-8") as f:
        f.write("\\data\\\n")
        for k in range(1, lm.order + 1):
            f.write(f"ngram {k}={len(entries[k])}\n")
        for k in range(1, lm.order + 1):
            f.write(f"\n\\{k}-grams:\n")
            for gram, logp in entries[k]:
                text = " ".join(_token_to_text(t) for t in gram)
                bow = lm.bow.get(gram) if k < lm.order else None
                if bow is None:
                    f.write(f"{logp:.7f}\t{text}\n")
                else:
                    f.write(f"{logp:.7f}\t{text}\t{bow:.7f}\n")
        f.write("\n\\end\\\n")


def read_arpa(path) -> NGramLM:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines) and lines[pos].strip() == "":
            pos += 1
        if pos >= len(lines):
            raise MalformedArpa("unexpected end of file")
        pos += 1
        return lines[pos - 1].strip()

    if next_line() != "\\data\\":
        raise MalformedArpa("missing \\data\\ header")
    declared: dict[int, int] = {}
    while True:
        line = next_line()
        if not line.startswith("ngram "):
            break
        order_text, _, count = line.removeprefix("ngram ").partition("=")
        try:
            declared[int(order_text)] = int(count)
        except ValueError:
            raise MalformedArpa(f"bad count line {line!r}") from None
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise MalformedArpa("incomplete ngram count declarations")
    order = max(declared)

    prob: dict[int, dict[tuple, float]] = {k: {} for k in range(1, order + 1)}
    bow: dict[tuple, float] = {}
    for k in range(1, order + 1):
        if line != f"\\{k}-grams:":
            raise MalformedArpa(f"expected \\{k}-grams: section, found {line!r}")
        for _ in range(declared[k]):
            fields = next_line().split("\t")
            if len(fields) not in (2, 3):
                raise MalformedArpa(f"bad n-gram line {fields!r}")
            gram = tuple(_text_to_token(t) for t in fields[1].split(" "))
            if len(gram) != k:
                raise MalformedArpa(f"{len(gram)}-gram in the {k}-gram section")
            prob[k][gram] = float(fields[0])
            if len(fields) == 3:
                bow[gram] = float(fields[2])
        line = next_line()
    if line != "\\end\\":
        raise MalformedArpa("missing \\end\\ terminator")

    chars = tuple(sorted(g[0] for g in prob[1] if g[0] not in (BOS, EOS)))
    if order > 1:
        if (BOS,) not in prob[1]:
            raise MalformedArpa("unigram section lacks <s>")
        del prob[1][(BOS,)]
    if (EOS,) not in prob[1]:
        raise MalformedArpa("unigram section lacks </s>")
    return NGramLM(order=order, chars=chars, prob=prob, bow=bow)
