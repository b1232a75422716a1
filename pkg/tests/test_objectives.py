import numpy as np
import pytest

from optstab.errors import UsageError
from optstab.objectives import (
    by_name,
    builtin_ids,
    fd_check,
    hessian_spectrum,
    quad1d,
    quartic,
    scaled_quad,
    twodim,
)

ALL_IDS = ["quad1d", "quartic", "twodim", "scaled_quad:2.0"]


def test_quad1d_values_and_minimum():
    f = quad1d()
    assert f([0.0]) == 10.0
    assert f([2.0]) == 12.0
    assert np.allclose(f.grad([3.0]), [3.0])
    assert np.allclose(f.minimum, [0.0])
    assert hessian_spectrum(f, f.minimum).eigenvalues == (1.0,)


def test_quartic_minimum_and_curvature():
    f = quartic()
    assert np.allclose(f.minimum, [-0.75])
    assert abs(f.grad([-0.75])[0]) < 1e-15
    # H(-3/4) = 12*(9/16) - 6*(3/4) = 27/4 - 18/4 = 9/4
    assert hessian_spectrum(f, [-0.75]).eigenvalues == (2.25,)


def test_twodim_minimum_and_spectrum():
    f = twodim()
    assert np.allclose(f.minimum, [-2.0, -1.0])
    assert np.allclose(f.grad([-2.0, -1.0]), [0.0, 0.0])
    mu = hessian_spectrum(f, f.minimum).eigenvalues
    assert np.allclose(mu, (0.2, 2.0))


def test_scaled_quad_spectrum_exact():
    f = scaled_quad(1.9)
    assert hessian_spectrum(f, [0.0]).eigenvalues == (1.9,)
    assert f.grad([2.0])[0] == 1.9 * 2.0


def test_spectrum_sorted_and_pd_flags():
    s = hessian_spectrum(twodim(), [-2.0, -1.0])
    assert s.eigenvalues == tuple(sorted(s.eigenvalues))
    assert s.positive_definite and s.mu_max == max(s.eigenvalues)
    assert not hessian_spectrum(quartic(), [0.0]).positive_definite


@pytest.mark.parametrize("oid", ALL_IDS)
def test_fd_cross_check_all_builtins(oid):
    obj = by_name(oid)
    rng = np.random.default_rng(3)
    for _ in range(10):
        w = rng.uniform(-2, 2, size=obj.dim)
        rep = fd_check(obj, w)
        assert rep.max_rel_err_grad < 1e-6
        assert rep.max_rel_err_hess < 1e-6


def test_by_name_resolution():
    assert by_name("quartic").name == "quartic"
    assert by_name("scaled_quad:2.1").name == "scaled_quad:2.1"
    assert "quad1d" in builtin_ids()
    with pytest.raises(UsageError):
        by_name("nope")
    with pytest.raises(UsageError):
        by_name("scaled_quad:banana")


def test_point_validation():
    f = twodim()
    with pytest.raises(UsageError):
        f([1.0])  # wrong dimension
    with pytest.raises(UsageError):
        f.grad([np.nan, 0.0])
    with pytest.raises(UsageError):
        fd_check(f, [0.0, 0.0], step=-1.0)


def test_grad_broadcasts_over_leading_axes():
    for oid in ALL_IDS:
        obj = by_name(oid)
        batch = np.random.default_rng(0).uniform(-1, 1, size=(7, obj.dim))
        g = obj.grad_fn(batch)
        assert g.shape == (7, obj.dim)
        for i in range(7):
            assert np.allclose(g[i], obj.grad(batch[i]))
