import numpy as np
import pytest

from optstab.dynamics import (
    HyperParams,
    OptimizerSpec,
    State,
    autonomous_map,
    bias_factor,
    fixed_point,
    h_disturbance,
    step,
    theta,
    zero_state,
)
from optstab.errors import DivergedError, NotACriticalPointError, UsageError
from optstab.objectives import by_name

HP = HyperParams(alpha=0.01, epsilon=0.01, beta1=0.9, beta2=0.99, beta=0.9)


def spec_for(family, variant="eps2_bias"):
    return OptimizerSpec(family, HP, variant) if family == "adam" else OptimizerSpec(family, HP)


def test_hyperparams_validation():
    with pytest.raises(UsageError):
        HyperParams(alpha=0.0, epsilon=0.01)
    with pytest.raises(UsageError):
        HyperParams(alpha=0.1, epsilon=-1.0)
    with pytest.raises(UsageError):
        HyperParams(alpha=0.1, epsilon=0.1, beta=0.0)


def test_spec_validation_and_roundtrip():
    with pytest.raises(UsageError):
        OptimizerSpec("newton", HP)
    with pytest.raises(UsageError):
        OptimizerSpec("adam", HP, "weird")
    with pytest.raises(UsageError):
        OptimizerSpec("adam", HyperParams(0.1, 0.1, beta1=1.0))
    with pytest.raises(UsageError):
        OptimizerSpec("rmsprop", HyperParams(0.1, 0.1, beta=1.0))
    for family in ("adam", "rmsprop", "adagrad", "adadelta", "sgd"):
        s = spec_for(family)
        # the wire format drops fields the family does not use
        assert OptimizerSpec.from_dict(s.to_dict()).to_dict() == s.to_dict()


def test_layouts_and_zero_state():
    assert spec_for("adam").layout == ("m", "v", "w")
    assert spec_for("adadelta").layout == ("v", "m", "w")
    assert spec_for("rmsprop").layout == ("v", "w")
    assert spec_for("sgd").layout == ("w",)
    st = zero_state(spec_for("adam"), [4.0])
    assert st.t == 0 and st.m[0] == 0.0 and st.v[0] == 0.0 and st.w[0] == 4.0
    st = zero_state(spec_for("sgd"), [4.0])
    assert st.m is None and st.v is None
    assert spec_for("adam").state_dim(2) == 6


def test_pack_unpack_roundtrip():
    layout = ("m", "v", "w")
    st = State(w=np.array([1.0, 2.0]), m=np.array([3.0, 4.0]), v=np.array([5.0, 6.0]))
    back = State.unpack(st.pack(layout), layout)
    assert np.array_equal(back.w, st.w) and np.array_equal(back.m, st.m)
    with pytest.raises(UsageError):
        State.unpack(np.zeros(5), layout)


def test_bias_factor_t0():
    assert np.isclose(bias_factor(0, 0.9, 0.99), np.sqrt(0.01) / 0.1)
    assert np.isclose(bias_factor(0, 0.9, 0.99), 1.0)


def test_adam_first_step_hand_oracle():
    spec = spec_for("adam")
    obj = by_name("quad1d")
    st = zero_state(spec, [4.0])
    nxt = step(spec, obj, 0, st)
    m1 = (1.0 - 0.9) * 4.0
    v1 = (1.0 - 0.99) * 16.0
    w1 = 4.0 - 0.01 * bias_factor(0, 0.9, 0.99) * m1 / np.sqrt(v1 + 1e-4)
    assert nxt.m[0] == m1 and nxt.v[0] == v1
    assert nxt.w[0] == w1 and nxt.t == 1


def test_adam_variants_differ_only_in_denominator_and_bias():
    obj = by_name("quartic")
    st = State(w=np.array([0.3]), m=np.array([0.2]), v=np.array([0.5]), t=3)
    g = obj.grad(st.w)[0]
    m1 = 0.9 * 0.2 + 0.1 * g
    v1 = 0.99 * 0.5 + 0.01 * g * g
    bf = bias_factor(3, 0.9, 0.99)
    expected = {
        "eps2_bias": 0.3 - 0.01 * bf * m1 / np.sqrt(v1 + 1e-4),
        "eps2_nobias": 0.3 - 0.01 * m1 / np.sqrt(v1 + 1e-4),
        "orig_nobias": 0.3 - 0.01 * m1 / (np.sqrt(v1) + 0.01),
        "orig_bias": 0.3 - 0.01 * bf * m1 / (np.sqrt(v1) + 0.01),
    }
    for variant, w1 in expected.items():
        nxt = step(OptimizerSpec("adam", HP, variant), obj, 3, st)
        assert np.isclose(nxt.w[0], w1, rtol=0, atol=1e-18)


def test_sgd_is_plain_gradient_descent_bitwise():
    spec = spec_for("sgd")
    obj = by_name("quartic")
    rng = np.random.default_rng(5)
    for _ in range(100):
        w = rng.uniform(-1, 1, size=1)
        nxt = step(spec, obj, 0, State(w=w))
        assert nxt.w[0] == w[0] - HP.alpha * obj.grad(w)[0]


def test_adadelta_step_hand_oracle():
    spec = spec_for("adadelta")
    obj = by_name("scaled_quad:2.0")
    st = State(w=np.array([1.0]), m=np.array([0.3]), v=np.array([0.4]), t=0)
    g = 2.0
    e2 = 1e-4
    v1 = 0.9 * 0.4 + 0.1 * g * g
    m1 = 0.9 * 0.3 + 0.1 * g * g * (0.3 + e2) / (v1 + e2)
    w1 = 1.0 - 0.01 * np.sqrt(0.3 + e2) / np.sqrt(v1 + e2) * g
    nxt = step(spec, obj, 0, st)
    assert np.isclose(nxt.v[0], v1, atol=1e-18)
    assert np.isclose(nxt.m[0], m1, atol=1e-18)
    assert np.isclose(nxt.w[0], w1, atol=1e-18)


def test_step_index_mismatch():
    spec = spec_for("adam")
    st = zero_state(spec, [1.0])
    with pytest.raises(UsageError):
        step(spec, by_name("quad1d"), 3, st)


def test_divergence_guard():
    spec = OptimizerSpec("sgd", HyperParams(alpha=10.0, epsilon=0.01))
    obj = by_name("scaled_quad:2.0")
    st = State(w=np.array([1.0]))
    with pytest.raises(DivergedError) as exc:
        for t in range(200):
            st = step(spec, obj, t, st)
    assert exc.value.t >= 1


def test_fixed_point_and_critical_point_check():
    spec = spec_for("adam")
    obj = by_name("quartic")
    x = fixed_point(spec, obj)
    assert np.allclose(x.w, [-0.75]) and x.m[0] == 0.0 and x.v[0] == 0.0
    with pytest.raises(NotACriticalPointError):
        fixed_point(spec, obj, wstar=[0.5])
    assert fixed_point(spec, by_name("scaled_quad:1.0")).w[0] == 0.0


def test_fixed_points_are_invariant_under_autonomous_map():
    for family in ("adam", "rmsprop", "adagrad", "adadelta", "sgd"):
        spec = spec_for(family)
        obj = by_name("quartic")
        x = fixed_point(spec, obj)
        tbar = autonomous_map(spec, obj)
        packed = x.pack(spec.layout)
        assert np.allclose(tbar(packed), packed, atol=1e-15)


def test_theta_zero_at_unit_bias_factor():
    # beta2 = 0.99, beta1 = 0.9 gives bias factor exactly 1 at t = 0
    spec = spec_for("adam")
    st = State(w=np.array([0.7]), m=np.array([0.1]), v=np.array([0.2]), t=0)
    th = theta(spec, by_name("quad1d"), 0, st)
    assert np.allclose(th, 0.0, atol=1e-16)
    with pytest.raises(UsageError):
        theta(spec_for("sgd"), by_name("quad1d"), 0, st)


def test_h_disturbance_validation_and_identity():
    hp = HP
    with pytest.raises(UsageError):
        h_disturbance(State(w=np.array([1.0])), hp)
    with pytest.raises(UsageError):
        h_disturbance(State(w=np.array([1.0]), m=np.array([0.0]),
                            v=np.array([-1.0])), hp)
    obj = by_name("quartic")
    st = State(w=np.array([0.4]), m=np.array([0.2]), v=np.array([0.3]), t=7)
    eps2 = step(OptimizerSpec("adam", hp, "eps2_nobias"), obj, 7, st)
    orig = step(OptimizerSpec("adam", hp, "orig_nobias"), obj, 7, st)
    h = h_disturbance(State(w=st.w, m=eps2.m, v=eps2.v, t=8), hp)
    lhs = np.concatenate([orig.m, orig.v, orig.w])
    rhs = np.concatenate([eps2.m, eps2.v, eps2.w]) + h
    assert np.max(np.abs(lhs - rhs)) < 1e-16
