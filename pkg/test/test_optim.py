"""SGD update rule, learning-rate schedule and parameter EMA."""

import numpy as np
import pytest

from maskface_utils.exceptions import ParameterError, StateError
from maskface_utils.nn.layers import Linear
from maskface_utils.optim.ema import EMAConfig, ModelEMA, ema_init, ema_update
from maskface_utils.optim.schedule import ScheduleConfig, lr_at
from maskface_utils.optim.sgd import SGD, SGDConfig, sgd_step
from maskface_utils.tensor.engine import Parameter, precision


class TestSGD:
    def test_single_step_closed_form(self):
        p, g, v = np.array([1.0, -2.0]), np.array([0.5, 0.5]), np.array([0.1, 0.0])
        cfg = SGDConfig(momentum=0.9, weight_decay=0.01)
        (new_p,), (new_v,) = sgd_step([p], [g], [v], lr=0.1, cfg=cfg)
        expected_v = 0.9 * v + g + 0.01 * p
        np.testing.assert_allclose(new_v, expected_v, rtol=1e-15)
        np.testing.assert_allclose(new_p, p - 0.1 * expected_v, rtol=1e-15)

    def test_two_steps_accumulate_momentum(self):
        p = np.array([1.0])
        cfg = SGDConfig(momentum=0.5, weight_decay=0.0)
        (p1,), (v1,) = sgd_step([p], [np.array([1.0])], [np.zeros(1)], 0.1, cfg)
        (p2,), (v2,) = sgd_step([p1], [np.array([1.0])], [v1], 0.1, cfg)
        np.testing.assert_allclose(v2, [1.5])
        np.testing.assert_allclose(p2, [1.0 - 0.1 - 0.15])

    def test_decay_mask_exempts_vectors(self):
        with precision(np.float64):
            matrix, vector = Parameter(np.ones((2, 2))), Parameter(np.ones(2))
        matrix.grad, vector.grad = np.zeros((2, 2)), np.zeros(2)
        opt = SGD([matrix, vector], SGDConfig(momentum=0.0, weight_decay=0.1, decay_norm_params=False))
        assert opt.decay_mask == [True, False]
        opt.step(lr=1.0)
        np.testing.assert_allclose(matrix.data, 0.9)
        np.testing.assert_allclose(vector.data, 1.0)

    def test_missing_gradient_and_shape_drift(self):
        cfg = SGDConfig()
        with pytest.raises(StateError):
            sgd_step([np.ones(2)], [None], [np.zeros(2)], 0.1, cfg)
        with pytest.raises(StateError):
            sgd_step([np.ones(2)], [np.ones(3)], [np.zeros(2)], 0.1, cfg)
        with pytest.raises(StateError):
            sgd_step([np.ones(2)], [], [np.zeros(2)], 0.1, cfg)

    def test_step_keeps_parameter_dtype_and_zero_grad_clears(self):
        p = Parameter(np.ones(3))
        p.grad = np.ones(3)
        opt = SGD([p])
        opt.step(lr=0.1)
        assert p.dtype == np.float32
        assert opt.steps == 1
        opt.zero_grad()
        assert p.grad is None

    @pytest.mark.parametrize("kwargs", [{"momentum": 1.0}, {"momentum": -0.1}, {"weight_decay": -1.0}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ParameterError):
            SGDConfig(**kwargs)


class TestSchedule:
    @pytest.fixture
    def cfg(self):
        return ScheduleConfig(steps_per_epoch=20)

    def test_warmup_is_linear_from_zero(self, cfg):
        assert lr_at(0, cfg) == 0.0
        assert lr_at(1, cfg) == pytest.approx(0.05)
        assert lr_at(2, cfg) == pytest.approx(0.1, abs=1e-15)

    def test_cosine_decay_endpoints_and_midpoint(self, cfg):
        assert lr_at(320, cfg) == pytest.approx(cfg.lr_min, abs=1e-15)
        assert lr_at(161, cfg) == pytest.approx((0.1 + cfg.lr_min) / 2, abs=1e-12)

    def test_continuous_at_warmup_end(self, cfg):
        assert abs(lr_at(2 - 1e-9, cfg) - lr_at(2, cfg)) < 1e-9
        assert abs(lr_at(2 + 1e-9, cfg) - lr_at(2, cfg)) < 1e-12

    def test_monotone_during_decay(self, cfg):
        lrs = [lr_at(step, cfg) for step in range(2, 321)]
        assert all(a >= b for a, b in zip(lrs, lrs[1:]))

    def test_cyclic_restarts(self, cfg):
        # restart cycles are 4 epochs = 80 steps, peaking at base_lr / 10
        assert lr_at(320 + 40, cfg) == pytest.approx((0.01 + cfg.lr_min) / 2, abs=1e-12)
        assert lr_at(400, cfg) == pytest.approx(cfg.lr_min)
        assert lr_at(401, cfg) == pytest.approx(0.01, rel=1e-3)
        assert lr_at(480, cfg) == pytest.approx(cfg.lr_min)
        assert max(lr_at(step, cfg) for step in range(321, 481)) <= 0.01

    def test_none_policy_holds_the_floor(self):
        cfg = ScheduleConfig(steps_per_epoch=20, restart_policy="none")
        assert all(lr_at(step, cfg) == cfg.lr_min for step in range(321, 481))

    def test_total_steps_and_bounds(self, cfg):
        assert cfg.total_steps == 480
        with pytest.raises(ParameterError):
            lr_at(-1, cfg)
        with pytest.raises(ParameterError):
            lr_at(481, cfg)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"steps_per_epoch": 0},
            {"warmup_epochs": 20},
            {"decay_epochs": 30},
            {"lr_min": 0.0},
            {"lr_min": 0.2},
            {"restart_policy": "step"},
            {"restart_len": 0},
            {"restart_peak": 0.5},
        ],
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(ParameterError):
            ScheduleConfig(**kwargs)


class TestEMA:
    def test_constant_parameters_closed_form(self):
        with precision(np.float64):
            p = Parameter(np.array([2.0, -1.0]))
        state = ema_init([("p", p)], decay=0.9)
        state.shadow["p"] = np.array([0.0, 0.0])
        for _ in range(25):
            ema_update(state, [("p", p)])
        expected = (1 - 0.9 ** 25) * p.data
        np.testing.assert_allclose(state.shadow["p"], expected, atol=1e-6)
        assert state.updates == 25

    def test_moving_parameters_follow_recurrence(self, rng):
        with precision(np.float64):
            p = Parameter(rng.normal(size=4))
        state = ema_init([("p", p)], decay=0.99)
        expected = p.data.copy()
        for _ in range(10):
            p.data = p.data + rng.normal(size=4)
            expected = 0.99 * expected + 0.01 * p.data
            ema_update(state, [("p", p)])
        np.testing.assert_allclose(state.shadow["p"], expected, atol=1e-12)

    def test_warmup_caps_early_decay(self):
        state = ema_init([], decay=0.999, warmup=True)
        assert state.effective_decay() == pytest.approx(0.1)
        state.updates = 10_000
        assert state.effective_decay() == 0.999

    def test_swap_twice_is_bitwise_identity(self, rng):
        layer = Linear(4, 3, rng=rng)
        ema = ModelEMA(layer, EMAConfig(decay=0.5))
        before = layer.weight.data.copy()
        layer.weight.data = layer.weight.data + 1.0
        ema.update()
        live = layer.weight.data.copy()
        shadow = ema.state.shadow["weight"].copy()
        ema.swap()
        np.testing.assert_array_equal(layer.weight.data, shadow)
        ema.swap()
        np.testing.assert_array_equal(layer.weight.data, live)
        np.testing.assert_array_equal(ema.state.shadow["weight"], shadow)
        assert not np.array_equal(shadow, before)

    def test_swapped_context_restores_on_error(self, rng):
        layer = Linear(2, 2, rng=rng)
        ema = ModelEMA(layer, EMAConfig())
        layer.weight.data = layer.weight.data * 3
        live = layer.weight.data.copy()
        with pytest.raises(RuntimeError):
            with ema.swapped():
                raise RuntimeError("boom")
        np.testing.assert_array_equal(layer.weight.data, live)

    def test_name_or_shape_mismatch(self, rng):
        layer = Linear(2, 2, rng=rng)
        state = ema_init(layer.named_parameters(), 0.9)
        with pytest.raises(StateError):
            ema_update(state, Linear(2, 2, bias=False).named_parameters())
        with pytest.raises(StateError):
            ema_update(state, Linear(3, 2).named_parameters())

    def test_invalid_decay(self):
        with pytest.raises(ParameterError):
            EMAConfig(decay=1.0)
        with pytest.raises(ParameterError):
            ema_init([], decay=0.0)
