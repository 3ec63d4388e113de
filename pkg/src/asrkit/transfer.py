"""Alphabets, checkpoint persistence and cross-lingual weight transfer.

Checkpoint layout (little-endian throughout): magic b"ASRZ", version u32, a
u32-length-prefixed UTF-8 metadata block of key=value lines, then tensor
records until EOF. Each record: name (u16 length + UTF-8), rank u8, one u64
per dimension, then the payload as IEEE-754 binary32 in row-major order.
Parameters live in float64 in memory and are stored at 32-bit precision.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FeatureConfig
from .model import ModelDims, ModelParams, glorot_uniform
from .numerics import Rng

CHECKPOINT_MAGIC = b"ASRZ"
CHECKPOINT_VERSION = 1


class AlphabetError(ValueError):
    """Malformed alphabet file or invalid character set."""


class CheckpointError(RuntimeError):
    """Base for checkpoint file problems."""


class BadMagic(CheckpointError):
    pass


class UnsupportedVersion(CheckpointError):
    pass


class ShapeMismatch(CheckpointError):
    pass


@dataclass(frozen=True)
class Alphabet:
    """Ordered characters of a language; the blank takes the next index."""

    chars: tuple[str, ...]

    def __post_init__(self):
        if not self.chars:
            raise AlphabetError("alphabet is empty")
        if len(set(self.chars)) != len(self.chars):
            raise AlphabetError("alphabet has duplicate characters")
        for c in self.chars:
            if len(c) != 1:
                raise AlphabetError(f"not a single character: {c!r}")

    @property
    def size(self) -> int:
        return len(self.chars)

    @property
    def blank_index(self) -> int:
        return len(self.chars)

    @property
    def n_labels(self) -> int:
        """Network output width: characters plus blank."""
        return len(self.chars) + 1

    def index(self, char: str) -> int:
        try:
            return self.chars.index(char)
        except ValueError:
            raise AlphabetError(f"character {char!r} not in alphabet") from None

    def __contains__(self, char: str) -> bool:
        return char in self.chars

    def encode(self, text: str) -> list[int]:
        return [self.index(c) for c in text]

    def decode(self, labels) -> str:
        return "".join(self.chars[i] for i in labels)

    @classmethod
    def from_string(cls, chars: str) -> "Alphabet":
        return cls(tuple(chars))

    @classmethod
    def from_file(cls, path) -> "Alphabet":
        """One character per line, LF endings, '#' lines are comments.

        A line holding a single space is the space character; blank lines
        are ignored (a '#' character therefore cannot be an alphabet member).
        """
        text = Path(path).read_text(encoding="utf-8")
        chars = []
        for lineno, line in enumerate(text.split("\n"), start=1):
            if line == "" or line.startswith("#"):
                continue
            if len(line) != 1:
                raise AlphabetError(f"{path}:{lineno}: expected one character, got {line!r}")
            chars.append(line)
        return cls(tuple(chars))

    def to_file(self, path) -> None:
        Path(path).write_text("".join(c + "\n" for c in self.chars), encoding="utf-8")


@dataclass(frozen=True)
class CheckpointMeta:
    dims: ModelDims
    alphabet: Alphabet
    feature_config: FeatureConfig
    epoch: int = 0
    val_loss: float = float("nan")


def _meta_to_lines(meta: CheckpointMeta) -> str:
    cfg = meta.feature_config
    rows = [
        ("input_width", meta.dims.input_width),
        ("hidden", meta.dims.hidden),
        ("n_labels", meta.dims.n_labels),
        ("alphabet", "".join(meta.alphabet.chars)),
        ("window_ms", cfg.window_ms),
        ("hop_ms", cfg.hop_ms),
        ("n_mel_filters", cfg.n_mel_filters),
        ("n_cepstra", cfg.n_cepstra),
        ("preemphasis", repr(cfg.preemphasis)),
        ("context_radius", cfg.context_radius),
        ("epoch", meta.epoch),
        ("val_loss", repr(meta.val_loss)),
    ]
    return "".join(f"{k}={v}\n" for k, v in rows)


def _meta_from_lines(text: str) -> CheckpointMeta:
    kv: dict[str, str] = {}
    for line in text.split("\n"):
        if not line:
            continue
        key, _, value = line.partition("=")
        kv[key] = value
    try:
        dims = ModelDims(int(kv["input_width"]), int(kv["hidden"]), int(kv["n_labels"]))
        alphabet = Alphabet.from_string(kv["alphabet"])
        cfg = FeatureConfig(
            window_ms=int(kv["window_ms"]),
            hop_ms=int(kv["hop_ms"]),
            n_mel_filters=int(kv["n_mel_filters"]),
            n_cepstra=int(kv["n_cepstra"]),
            preemphasis=float(kv["preemphasis"]),
            context_radius=int(kv["context_radius"]),
        )
        return CheckpointMeta(dims, alphabet, cfg,
                              epoch=int(kv["epoch"]), val_loss=float(kv["val_loss"]))
    except KeyError as e:
        raise CheckpointError(f"metadata is missing key {e}") from None


def save_checkpoint(params: ModelParams, meta: CheckpointMeta, path) -> None:
    if meta.dims != params.dims:
        raise ShapeMismatch(f"meta dims {meta.dims} != param dims {params.dims}")
    blob = _meta_to_lines(meta).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name in params.names():
            arr = np.ascontiguousarray(params.tensors[name], dtype="<f4")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<Q", d))
            f.write(arr.tobytes(order="C"))


def _read_exactly(f, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint: wanted {n} bytes, got {len(data)}")
    return data


def load_checkpoint(path) -> tuple[ModelParams, CheckpointMeta]:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise BadMagic(f"{path} does not start with {CHECKPOINT_MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exactly(f, 4))
        if version != CHECKPOINT_VERSION:
            raise UnsupportedVersion(f"checkpoint version {version}, supported: {CHECKPOINT_VERSION}")
        (meta_len,) = struct.unpack("<I", _read_exactly(f, 4))
        meta = _meta_from_lines(_read_exactly(f, meta_len).decode("utf-8"))
        tensors: dict[str, np.ndarray] = {}
        while True:
            head = f.read(2)
            if head == b"":
                break
            (name_len,) = struct.unpack("<H", head)
            name = _read_exactly(f, name_len).decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exactly(f, 1))
            shape = tuple(struct.unpack("<Q", _read_exactly(f, 8))[0] for _ in range(rank))
            count = int(np.prod(shape)) if shape else 1
            payload = _read_exactly(f, 4 * count)
            tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float64)
    expected = meta.dims.tensor_shapes()
    if set(tensors) != set(expected):
        raise ShapeMismatch(f"tensor set {sorted(tensors)} != expected {sorted(expected)}")
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise ShapeMismatch(f"{name} has shape {tensors[name].shape}, expected {shape}")
    return ModelParams(meta.dims, tensors), meta


def remap_output_layer(params: ModelParams, new_alphabet: Alphabet,
                       rng: Rng) -> ModelParams:
    """Keep layers 1-5, reshape and reinitialize layer 6 for a new alphabet.

    Reinitializes unconditionally, even when the label count is unchanged,
    so the operation is a pure function of (params, alphabet, seed).
    """
    old = params.dims
    dims = ModelDims(old.input_width, old.hidden, new_alphabet.n_labels)
    tensors = {k: v.copy() for k, v in params.tensors.items()
               if not k.startswith("layer6.")}
    tensors["layer6.W"] = glorot_uniform(rng, old.hidden, dims.n_labels,
                                         (old.hidden, dims.n_labels))
    tensors["layer6.b"] = np.zeros(dims.n_labels)
    return ModelParams(dims, tensors)
