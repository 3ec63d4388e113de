"""Adam with per-layer freeze masks.

The freeze plans mirror the six training regimes: a scratch reference, a
transfer baseline with nothing frozen, then freezing the first one, two or
three dense layers, and finally the first three plus the fifth (the LSTM is
never frozen; the output layer is always trainable because transfer
reinitializes it).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import ModelDims, ModelParams, layer_of
from .numerics import DimensionMismatch


class UnknownPlan(ValueError):
    """Not one of the six training regimes."""


class FreezePlan(enum.Enum):
    REFERENCE = "reference"
    F0 = "frozen0"
    F1 = "frozen1"
    F2 = "frozen2"
    F3 = "frozen3"
    F4 = "frozen4"

    @property
    def method_name(self) -> str:
        return _METHOD_NAMES[self]

    @property
    def uses_source_checkpoint(self) -> bool:
        return self is not FreezePlan.REFERENCE

    @classmethod
    def from_frozen_count(cls, n: int) -> "FreezePlan":
        try:
            return {0: cls.F0, 1: cls.F1, 2: cls.F2, 3: cls.F3, 4: cls.F4}[n]
        except KeyError:
            raise UnknownPlan(f"no plan freezes {n} layers") from None


_METHOD_NAMES = {
    FreezePlan.REFERENCE: "Reference",
    FreezePlan.F0: "0 Frozen Layers",
    FreezePlan.F1: "1 Frozen Layer",
    FreezePlan.F2: "2 Frozen Layers",
    FreezePlan.F3: "3 Frozen Layers",
    FreezePlan.F4: "4 Frozen Layers",
}

_FROZEN_LAYERS = {
    FreezePlan.REFERENCE: frozenset(),
    FreezePlan.F0: frozenset(),
    FreezePlan.F1: frozenset({1}),
    FreezePlan.F2: frozenset({1, 2}),
    FreezePlan.F3: frozenset({1, 2, 3}),
    FreezePlan.F4: frozenset({1, 2, 3, 5}),
}


@dataclass(frozen=True)
class FreezeMask:
    frozen_layers: frozenset[int]

    def __post_init__(self):
        if 6 in self.frozen_layers:
            raise ValueError("the output layer is always trainable")

    def trainable(self, tensor_name: str) -> bool:
        return layer_of(tensor_name) not in self.frozen_layers


def build_freeze_mask(plan: FreezePlan) -> FreezeMask:
    if not isinstance(plan, FreezePlan):
        raise UnknownPlan(f"unknown plan {plan!r}")
    return FreezeMask(_FROZEN_LAYERS[plan])


def trainable_param_count(dims: ModelDims, mask: FreezeMask) -> int:
    """Sum of tensor sizes over unfrozen layers.

    Per-layer counts: dense layers contribute in*out + out; the LSTM
    contributes 2H*4H + 4H.
    """
    total = 0
    for name, shape in dims.tensor_shapes().items():
        if mask.trainable(name):
            total += int(np.prod(shape))
    return total


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0 or not (0 <= self.beta1 < 1) or not (0 <= self.beta2 < 1):
            raise ValueError(f"bad Adam hyperparameters {self}")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def fresh(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in params.tensors.items()},
            v={k: np.zeros_like(a) for k, a in params.tensors.items()},
        )


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState,
              hyper: AdamHyper, mask: FreezeMask):
    """One Adam update in place. Frozen tensors skip both the parameter
    update and the moment accumulation, so they stay bit-identical."""
    state.t += 1
    bc1 = 1.0 - hyper.beta1 ** state.t
    bc2 = 1.0 - hyper.beta2 ** state.t
    for name in params.names():
        if not mask.trainable(name):
            continue
        theta = params.tensors[name]
        g = grads.tensors[name]
        if g.shape != theta.shape:
            raise DimensionMismatch(f"gradient shape {g.shape} != {theta.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= hyper.beta1
        m += (1.0 - hyper.beta1) * g
        v *= hyper.beta2
        v += (1.0 - hyper.beta2) * g * g
        theta -= hyper.lr * (m / bc1) / (np.sqrt(v / bc2) + hyper.eps)
    return params, state
