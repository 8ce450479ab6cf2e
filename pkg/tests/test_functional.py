import numpy as np
import pytest

from xbarnet import (
    HARD_SIGMOID_LIMITER,
    ConfigError,
    GeometryError,
    LimiterSpec,
    activation_circuit,
    activation_ref,
    analog_add,
    analog_mul,
    hard_sigmoid_circuit,
    hard_swish_circuit,
    limit,
    relu_circuit,
)


def test_limiter_clamps():
    spec = LimiterSpec(-1.0, 2.0)
    x = np.array([-5.0, -1.0, 0.0, 2.0, 9.0])
    np.testing.assert_array_equal(limit(x, spec), [-1.0, -1, 0, 2, 2])


def test_limiter_rejects_empty_window():
    with pytest.raises(ConfigError):
        LimiterSpec(1.0, 1.0)
    with pytest.raises(ConfigError):
        LimiterSpec(2.0, -2.0)


def test_hard_sigmoid_breakpoints():
    assert hard_sigmoid_circuit(0.0) == 0.5
    assert hard_sigmoid_circuit(3.0) == 1.0
    assert hard_sigmoid_circuit(-3.0) == 0.0
    assert hard_sigmoid_circuit(1.0) == 2.0 / 3.0


def test_hard_swish_breakpoints():
    assert hard_swish_circuit(3.0) == 3.0
    assert hard_swish_circuit(-3.0) == 0.0
    assert hard_swish_circuit(0.0) == 0.0
    assert hard_swish_circuit(1.0) == 2.0 / 3.0


def test_relu_breakpoints():
    assert relu_circuit(-1.0) == 0.0
    assert relu_circuit(2.0) == 2.0
    assert relu_circuit(0.0) == 0.0


def test_shared_limiter_window():
    assert HARD_SIGMOID_LIMITER.lo == 0.0
    assert HARD_SIGMOID_LIMITER.hi == 6.0


def test_circuits_match_reference_bitwise():
    # same arithmetic path, so zero tolerance
    rng = np.random.default_rng(12)
    x = rng.uniform(-12, 12, 2000)
    for kind in ("relu", "hard_sigmoid", "hard_swish"):
        np.testing.assert_array_equal(activation_circuit(x, kind),
                                      activation_ref(x, kind))


def test_hswish_is_x_times_hsig():
    x = np.linspace(-10, 10, 1001)
    np.testing.assert_array_equal(hard_swish_circuit(x),
                                  x * hard_sigmoid_circuit(x))


def test_monotonicity():
    x = np.linspace(-10, 10, 4001)
    assert np.all(np.diff(hard_sigmoid_circuit(x)) >= 0)
    assert np.all(np.diff(relu_circuit(x)) >= 0)
    # x(x+3)/6 bottoms out at x = -1.5 and rises from there on
    right = x[x >= -1.5]
    assert np.all(np.diff(hard_swish_circuit(right)) >= 0)
    assert not np.any(hard_swish_circuit(x[x <= -3]))
    assert hard_swish_circuit(np.array([-1.5]))[0] == pytest.approx(-0.375)


def test_unknown_activation_kind():
    with pytest.raises(ConfigError):
        activation_circuit(np.zeros(3), "sigmoid")


class TestAnalogAdd:
    def test_sum(self):
        np.testing.assert_array_equal(
            analog_add(np.array([1.0, 2]), np.array([3.0, 4])), [4.0, 6])

    def test_zero_identity(self):
        x = np.array([[0.5, -1.5]])
        np.testing.assert_array_equal(analog_add(x, np.zeros_like(x)), x)

    def test_cancellation(self):
        x = np.array([2.0, -3.0])
        np.testing.assert_array_equal(analog_add(x, -x), [0.0, 0.0])

    def test_commutative_associative(self):
        rng = np.random.default_rng(13)
        a, b, c = rng.normal(size=(3, 50))
        np.testing.assert_allclose(analog_add(a, b), analog_add(b, a), atol=0)
        np.testing.assert_allclose(analog_add(analog_add(a, b), c),
                                   analog_add(a, analog_add(b, c)), atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(GeometryError):
            analog_add(np.zeros(3), np.zeros(4))


class TestAnalogMul:
    def test_identity_gain(self):
        rng = np.random.default_rng(14)
        x = rng.normal(size=(3, 2, 2))
        np.testing.assert_array_equal(analog_mul(x, np.ones(3)), x)

    def test_zero_gain(self):
        x = np.ones((2, 2, 2))
        assert not np.any(analog_mul(x, np.zeros(2)))

    def test_per_channel(self):
        x = np.array([[[2.0]], [[4.0]]])
        out = analog_mul(x, np.array([0.5, 0.25]))
        np.testing.assert_array_equal(out, [[[1.0]], [[1.0]]])

    def test_channel_mismatch(self):
        with pytest.raises(GeometryError):
            analog_mul(np.zeros((3, 2, 2)), np.zeros(2))
