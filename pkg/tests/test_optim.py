from __future__ import annotations

import math

import numpy as np
import pytest

from asrkit.model import ModelDims, init_params
from asrkit.numerics import Rng
from asrkit.optim import (
    AdamHyper,
    AdamState,
    FreezePlan,
    UnknownPlan,
    adam_step,
    build_freeze_mask,
    trainable_param_count,
)


def setup(seed=0, dims=ModelDims(5, 4, 3)):
    params = init_params(dims, Rng(seed))
    return params, AdamState.fresh(params), AdamHyper()


def random_grads(params, seed):
    rng = Rng(seed)
    grads = params.zeros_like()
    for name in grads.names():
        grads.tensors[name][:] = rng.uniform(-1, 1, grads.tensors[name].shape)
    return grads


class TestAdamStep:
    def test_zero_grad_leaves_params_unchanged(self):
        params, state, hyper = setup()
        before = params.copy()
        adam_step(params, params.zeros_like(), state, hyper,
                  build_freeze_mask(FreezePlan.F0))
        for name in params.names():
            assert np.array_equal(params[name], before[name])

    def test_first_step_closed_form(self):
        # m_hat = v_hat = g on the first step, so the update is
        # -lr * g/(|g| + eps); for g = 1: about -lr
        params, state, hyper = setup()
        before = float(params["layer1.W"][0, 0])
        grads = params.zeros_like()
        grads.tensors["layer1.W"][0, 0] = 1.0
        adam_step(params, grads, state, hyper, build_freeze_mask(FreezePlan.F0))
        delta = float(params["layer1.W"][0, 0]) - before
        assert delta == pytest.approx(-0.0005 / (1.0 + 1e-8), rel=1e-12)

    def test_frozen_layer_bit_identical_after_100_steps(self):
        params, state, hyper = setup()
        snapshot = {k: v.copy() for k, v in params.layer_tensors(1).items()}
        mask = build_freeze_mask(FreezePlan.F1)
        for step in range(100):
            adam_step(params, random_grads(params, step), state, hyper, mask)
        for name, arr in params.layer_tensors(1).items():
            assert np.array_equal(arr, snapshot[name])
        # the frozen layer also accumulates no moments
        assert np.array_equal(state.m["layer1.W"], np.zeros_like(state.m["layer1.W"]))
        assert state.t == 100

    def test_unfrozen_tensor_moves(self):
        params, state, hyper = setup()
        before = params.copy()
        adam_step(params, random_grads(params, 1), state, hyper,
                  build_freeze_mask(FreezePlan.F4))
        assert not np.array_equal(params["layer4.W_gates"], before["layer4.W_gates"])
        assert not np.array_equal(params["layer6.W"], before["layer6.W"])

    def test_matches_scalar_reference_adam(self):
        # independent scalar-loop Adam over flattened parameters
        params, state, hyper = setup(seed=3)
        ref = {name: params[name].copy().reshape(-1) for name in params.names()}
        ref_m = {name: np.zeros_like(v) for name, v in ref.items()}
        ref_v = {name: np.zeros_like(v) for name, v in ref.items()}
        mask = build_freeze_mask(FreezePlan.F0)
        for step in range(1, 6):
            grads = random_grads(params, 100 + step)
            adam_step(params, grads, state, hyper, mask)
            for name in ref:
                g = grads.tensors[name].reshape(-1)
                for i in range(len(ref[name])):
                    ref_m[name][i] = 0.9 * ref_m[name][i] + 0.1 * g[i]
                    ref_v[name][i] = 0.999 * ref_v[name][i] + 0.001 * g[i] * g[i]
                    m_hat = ref_m[name][i] / (1 - 0.9 ** step)
                    v_hat = ref_v[name][i] / (1 - 0.999 ** step)
                    ref[name][i] -= 0.0005 * m_hat / (math.sqrt(v_hat) + 1e-8)
        for name in params.names():
            diff = np.abs(params[name].reshape(-1) - ref[name]).max()
            assert diff <= 1e-12, (name, diff)


class TestFreezePlans:
    def test_plan_to_frozen_layers(self):
        expected = {
            FreezePlan.REFERENCE: set(),
            FreezePlan.F0: set(),
            FreezePlan.F1: {1},
            FreezePlan.F2: {1, 2},
            FreezePlan.F3: {1, 2, 3},
            FreezePlan.F4: {1, 2, 3, 5},
        }
        for plan, layers in expected.items():
            assert set(build_freeze_mask(plan).frozen_layers) == layers

    def test_lstm_and_output_never_frozen(self):
        for plan in FreezePlan:
            mask = build_freeze_mask(plan)
            assert mask.trainable("layer4.W_gates")
            assert mask.trainable("layer6.W")
            assert mask.trainable("layer6.b")

    def test_unknown_plan(self):
        with pytest.raises(UnknownPlan):
            build_freeze_mask("frozen9")
        with pytest.raises(UnknownPlan):
            FreezePlan.from_frozen_count(5)

    def test_from_frozen_count(self):
        assert FreezePlan.from_frozen_count(0) is FreezePlan.F0
        assert FreezePlan.from_frozen_count(4) is FreezePlan.F4

    def test_method_names(self):
        assert [p.method_name for p in FreezePlan] == [
            "Reference", "0 Frozen Layers", "1 Frozen Layer",
            "2 Frozen Layers", "3 Frozen Layers", "4 Frozen Layers"]

    def test_trainable_counts_strictly_decreasing(self):
        dims = ModelDims(494, 64, 33)
        counts = [trainable_param_count(dims, build_freeze_mask(p))
                  for p in (FreezePlan.F0, FreezePlan.F1, FreezePlan.F2,
                            FreezePlan.F3, FreezePlan.F4)]
        assert all(a > b for a, b in zip(counts, counts[1:]))

    def test_count_formula(self):
        f, h, c = 5, 4, 3
        dims = ModelDims(f, h, c)
        full = (f * h + h) + 2 * (h * h + h) + (2 * h * 4 * h + 4 * h) \
            + (h * h + h) + (h * c + c)
        assert trainable_param_count(dims, build_freeze_mask(FreezePlan.F0)) == full
        assert trainable_param_count(dims, build_freeze_mask(FreezePlan.F1)) \
            == full - (f * h + h)
