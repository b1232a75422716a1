import numpy as np
import pytest

from optstab.dynamics import HyperParams, OptimizerSpec, fixed_point
from optstab.errors import UsageError
from optstab.objectives import HessianSpectrum, by_name, hessian_spectrum
from optstab.stability import (
    adam_closed_form_eigs,
    analyze,
    bound_check,
    classical_bounds,
    closed_form_eigs,
    epsilon_boundary,
    match_eig_multisets,
    numerical_eigs,
    per_mode_margins,
    spectral_radius,
)

HP = HyperParams(alpha=0.01, epsilon=0.01, beta1=0.9, beta2=0.99)


def test_adam_closed_form_reference_case():
    # mu = 1: phi = (0.01/0.01)*1*0.1 = 0.1; quadratic roots 0.9 +/- 0.3i
    eigs = adam_closed_form_eigs(HP, HessianSpectrum((1.0,)))
    assert len(eigs) == 3
    assert any(abs(z - 0.99) < 1e-15 for z in eigs)
    pair = sorted([z for z in eigs if abs(z.imag) > 0], key=lambda z: z.imag)
    assert np.isclose(pair[0].real, 0.9) and np.isclose(pair[0].imag, -0.3)
    assert np.isclose(abs(pair[0]), np.sqrt(0.9 * 0.99**0))  # |lambda| = sqrt(beta1)
    assert np.isclose(spectral_radius(eigs), 0.99)


def test_adam_real_branch_near_boundary():
    # epsilon below the critical value pushes a real eigenvalue beyond -1
    hp = HyperParams(alpha=0.01, epsilon=2.0e-4, beta1=0.9, beta2=0.99)
    eigs = adam_closed_form_eigs(hp, HessianSpectrum((1.0,)))
    assert spectral_radius(eigs) > 1.0
    hp = HyperParams(alpha=0.01, epsilon=3.0e-4, beta1=0.9, beta2=0.99)
    assert spectral_radius(adam_closed_form_eigs(hp, HessianSpectrum((1.0,)))) < 1.0


def test_family_eigenvalue_multisets():
    spectrum = HessianSpectrum((0.2, 2.0))
    hp = HyperParams(alpha=0.01, epsilon=0.1, beta=0.5)
    rms = closed_form_eigs(OptimizerSpec("rmsprop", hp), spectrum)
    assert sorted(z.real for z in rms) == sorted(
        [0.5, 0.5, 1 - 0.1 * 0.2, 1 - 0.1 * 2.0])
    ada = closed_form_eigs(OptimizerSpec("adagrad", hp), spectrum)
    assert sum(1 for z in ada if abs(z - 1) < 1e-15) == 2
    add = closed_form_eigs(OptimizerSpec("adadelta", hp), spectrum)
    assert sum(1 for z in add if abs(z - 0.5) < 1e-15) == 4
    assert any(abs(z - (1 - 0.01 * 2.0)) < 1e-15 for z in add)
    sgd = closed_form_eigs(OptimizerSpec("sgd", hp), spectrum)
    assert len(sgd) == 2 and any(abs(z - 0.998) < 1e-15 for z in sgd)


def test_bound_check_reference_cases():
    # ADAM: lhs = 0.1 < rhs = 3.8
    v = bound_check(OptimizerSpec("adam", HP), HessianSpectrum((1.0,)))
    assert v.satisfied and np.isclose(v.lhs, 0.1) and np.isclose(v.rhs, 3.8)
    # AdaDelta alpha=1, mu=2.1: 2.1 < 2 false
    v = bound_check(OptimizerSpec("adadelta", HyperParams(1.0, 0.1, beta=0.9)),
                    HessianSpectrum((2.1,)))
    assert not v.satisfied and v.lhs == 2.1 and v.rhs == 2.0
    # RMSProp boundary is excluded (strict inequality)
    v = bound_check(OptimizerSpec("rmsprop", HyperParams(0.01, 0.01, beta=0.9)),
                    HessianSpectrum((2.0,)))
    assert not v.satisfied and v.lhs == v.rhs == 2.0
    # AdaGrad: not applicable
    v = bound_check(OptimizerSpec("adagrad", HyperParams(0.01, 0.01)),
                    HessianSpectrum((1.0,)))
    assert v.satisfied is None and np.isnan(v.lhs)
    # flagged spectra
    v = bound_check(OptimizerSpec("sgd", HyperParams(0.01, 0.01)),
                    HessianSpectrum((-1.0, 1.0)))
    assert v.flagged


def test_classical_bounds_reference_cases():
    k, r = classical_bounds(HyperParams(0.01, 0.01, beta1=0.9, beta2=0.99))
    assert k.satisfied and np.isclose(k.lhs, 0.81) and np.isclose(k.rhs, 0.99498743710662)
    assert r.satisfied and np.isclose(r.lhs, 0.9)
    k, r = classical_bounds(HyperParams(0.01, 0.01, beta1=0.99, beta2=0.5))
    assert not r.satisfied and np.isclose(r.rhs, np.sqrt(0.5))
    k, _ = classical_bounds(HyperParams(0.01, 0.01, beta1=0.9, beta2=0.1))
    assert not k.satisfied and np.isclose(k.rhs, np.sqrt(0.1))


def test_epsilon_boundary_formula():
    assert np.isclose(
        epsilon_boundary(HyperParams(0.01, 1.0, beta1=0.9), 1.0),
        1e-3 / 3.8, rtol=1e-15,
    )
    assert np.isclose(
        epsilon_boundary(HyperParams(0.1, 1.0, beta1=0.5), 2.0),
        0.1 * 2.0 * 0.5 / 3.0, rtol=1e-15,
    )


def test_per_mode_margins():
    spec = OptimizerSpec("sgd", HyperParams(1.0, 0.01))
    margins = per_mode_margins(spec, HessianSpectrum((0.5, 1.5, 2.5)))
    assert len(margins) == 3
    assert margins[0] > margins[1] > 0 > margins[2]


def test_numerical_jacobian_matches_closed_forms():
    obj = by_name("twodim")
    for family in ("adam", "rmsprop", "adagrad", "adadelta", "sgd"):
        hp = HyperParams(alpha=0.005, epsilon=0.05, beta1=0.8, beta2=0.7, beta=0.6)
        spec = (OptimizerSpec(family, hp, "eps2_nobias") if family == "adam"
                else OptimizerSpec(family, hp))
        x = fixed_point(spec, obj)
        cf = closed_form_eigs(spec, hessian_spectrum(obj, x.w))
        nm = numerical_eigs(spec, obj, 0, x)
        assert match_eig_multisets(cf, nm) < 1e-9


def test_match_eig_multisets_validation():
    with pytest.raises(UsageError):
        match_eig_multisets([1 + 0j], [1 + 0j, 2 + 0j])
    assert match_eig_multisets([1 + 1j, 2 + 0j], [2 + 0j, 1 + 1j]) == 0.0
    with pytest.raises(UsageError):
        spectral_radius([])


def test_analyze_full_report():
    spec = OptimizerSpec("adam", HP)
    rep = analyze(spec, by_name("quad1d"))
    assert len(rep.eigenvalues) == 3
    assert np.isclose(rep.spectral_radius, 0.99)
    assert rep.ours.satisfied and rep.kingma.satisfied and rep.reddi.satisfied
    assert np.isclose(rep.epsilon_star, 1e-3 / 3.8, rtol=1e-12)
    d = rep.to_dict()
    assert d["ours"]["satisfied"] is True and len(d["eigenvalues"]) == 3

    rep2 = analyze(OptimizerSpec("sgd", HP), by_name("twodim"))
    assert len(rep2.eigenvalues) == 2
    assert rep2.kingma is None and rep2.epsilon_star is None
    assert len(rep2.per_mode_margins) == 2


def test_our_bound_implies_contraction_reference():
    # spot check of the soundness direction on a PD spectrum
    rng = np.random.default_rng(2)
    for _ in range(50):
        hp = HyperParams(alpha=float(10**rng.uniform(-3, 0)),
                         epsilon=float(10**rng.uniform(-3, 0)),
                         beta1=float(rng.uniform(0.05, 0.95)),
                         beta2=float(rng.uniform(0.05, 0.95)),
                         beta=float(rng.uniform(0.05, 0.95)))
        spectrum = HessianSpectrum((float(10**rng.uniform(-1, 0.5)),))
        for family in ("adam", "rmsprop", "adadelta", "sgd"):
            spec = OptimizerSpec(family, hp)
            if bound_check(spec, spectrum).satisfied:
                assert spectral_radius(closed_form_eigs(spec, spectrum)) < 1.0
