# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import math

import numpy as np
import pytest
import scipy.special

from hill import errors, potential


def test_mathieu_coefficients(mathieu):
    assert mathieu.q(2) == pytest.approx(-0.5j)
    assert mathieu.q(-2) == pytest.approx(0.5j)
    # v = 2 cos 2x
    assert potential.v_plus(mathieu, 2) == pytest.approx(1)
    assert potential.v_plus(mathieu, -2) == pytest.approx(1)
    assert mathieu.is_real() and mathieu.is_even()


def test_make_potential_validation():
    with pytest.raises(errors.OddIndexError):
        potential.make_potential({3: 1.0})
    with pytest.raises(errors.NonFiniteError):
        potential.make_potential({2: math.inf})
    assert potential.make_potential({6: 1.0}).band_limit == 3
    assert potential.make_potential({}).band_limit == 1
    # q_0 is dropped
    assert 0 not in potential.make_potential({0: 5.0, 2: 1.0}).q_coeffs


def test_q_outside_band_is_zero(mathieu):
    np.testing.assert_array_equal(mathieu.q(np.array([4, -6, 100])), 0)


def test_evaluate_q_mathieu(mathieu):
    x = np.linspace(0, math.pi, 17)
    np.testing.assert_allclose(potential.evaluate_q(mathieu, x), np.sin(2 * x), atol=1e-14)


def test_gasymov_is_not_real(gasymov):
    assert not gasymov.is_real()
    assert all(k > 0 for k in gasymov.q_coeffs)


def test_exact_q_delta_comb(delta_comb):
    x0 = math.pi / 2
    jump = potential.exact_q(delta_comb, x0 + 1e-9) - potential.exact_q(delta_comb, x0 - 1e-9)
    assert jump == pytest.approx(1.0, abs=1e-8)
    x = np.linspace(0, math.pi, 200001)
    assert abs(np.mean(potential.exact_q(delta_comb, x))) < 1e-4


def test_fejer_q_approaches_exact():
    p = potential.builtin("delta_comb", {"s": 1.0, "x0": math.pi / 2, "F": 256})
    x = np.array([0.3, math.pi / 4, 2.5])
    np.testing.assert_allclose(potential.fejer_q(p, x).real, potential.exact_q(p, x), atol=0.05)


def test_exact_q_needs_step_family(mathieu):
    with pytest.raises(errors.BadParamError):
        potential.exact_q(mathieu, 0.0)


@pytest.mark.parametrize(
    ("family", "params"),
    [
        ("delta_comb", {"x0": 0.0}),
        ("delta_comb", {"s": 0.0}),
        ("gasymov", {"r": 1.0}),
        ("sawtooth", {"F": 0}),
        ("unknown", {}),
    ],
)
def test_builtin_rejects_bad_params(family, params):
    with pytest.raises(errors.BadParamError):
        potential.builtin(family, params)


def test_random_weighted_is_seeded():
    a = potential.builtin("random_weighted", {"F": 16, "seed": 7, "a": 1.0})
    b = potential.builtin("random_weighted", {"F": 16, "seed": 7, "a": 1.0})
    c = potential.builtin("random_weighted", {"F": 16, "seed": 8, "a": 1.0})
    assert dict(a.q_coeffs) == dict(b.q_coeffs)
    assert dict(a.q_coeffs) != dict(c.q_coeffs)
    assert a.is_real()


def test_weight_families():
    sobolev = potential.Weight("sobolev", a=2.0)
    assert sobolev.omega(3) == pytest.approx(16.0)
    assert sobolev.capital(0) == 0
    assert sobolev.capital(4) == pytest.approx(25 / 4)
    assert sobolev.is_submultiplicative()
    assert potential.Weight("gevrey", c=1.0, g=0.5).is_submultiplicative()
    assert potential.Weight.from_params("exponential", {"c": 0.5}).omega(2) == pytest.approx(math.e)
    with pytest.raises(errors.BadParamError):
        potential.Weight("gevrey", c=1.0, g=1.5)
    with pytest.raises(errors.BadParamError):
        potential.Weight("polynomial")


def test_weighted_norm(mathieu):
    assert potential.weighted_potential_norm(mathieu, potential.Weight("sobolev")) == pytest.approx(math.sqrt(2))
    assert potential.weighted_potential_norm(potential.builtin("zero"), potential.Weight("sobolev")) == 0


def test_conjugate_and_shift(gasymov, mathieu):
    conj = potential.conjugate(gasymov)
    for k in (2, 4, 6):
        assert conj.q(-k) == pytest.approx(np.conj(gasymov.q(k)))
    shifted = potential.shift(mathieu, 0.3)
    assert shifted.q(2) == pytest.approx(mathieu.q(2) * np.exp(0.6j))


def test_sine_cosine_coeffs_mathieu(mathieu):
    # Q = sin 2x = (1/sqrt2) sqrt2 sin 2x
    dirichlet, neumann = potential.sine_cosine_coeffs(mathieu, 6)
    assert dirichlet[2] == pytest.approx(1 / math.sqrt(2))
    np.testing.assert_allclose(np.delete(dirichlet, 2), 0, atol=1e-14)
    # sin 2x against cos kx vanishes for even k only
    np.testing.assert_allclose(neumann[[0, 2, 4, 6]], 0, atol=1e-14)


def test_potential_file(tmp_path, gasymov):
    path = potential.dump_potential(gasymov, str(tmp_path / "gasymov.json"))
    loaded = potential.load_potential(path)
    assert dict(loaded.q_coeffs) == pytest.approx(dict(gasymov.q_coeffs))
    family = tmp_path / "family.json"
    family.write_text('{"family": "mathieu", "params": {"c": 2.0}}', encoding="utf-8")
    assert potential.load_potential(str(family)).q(2) == pytest.approx(-1j)
    broken = tmp_path / "broken.json"
    broken.write_text('{"values": []}', encoding="utf-8")
    with pytest.raises(errors.BadParamError):
        potential.load_potential(str(broken))


def test_v_plus_is_additive(gasymov, mathieu):
    summed = dict(gasymov.q_coeffs)
    for k, q in mathieu.q_coeffs.items():
        summed[k] = summed.get(k, 0) + q
    total = potential.make_potential(summed)
    ks = np.arange(-40, 41, 2)
    np.testing.assert_allclose(potential.v_plus(total, ks), potential.v_plus(gasymov, ks) + potential.v_plus(mathieu, ks), atol=1e-14)


@pytest.mark.parametrize(
    ("family", "params"),
    [
        ("zero", {}),
        ("mathieu", {"c": 1.5}),
        ("delta_comb", {"s": 1.0, "F": 8}),
        ("sawtooth", {"s": 0.7, "F": 8}),
        ("gasymov", {"r": 0.5, "F": 8}),
        ("random_weighted", {"F": 8, "a": 1.0}),
    ],
)
def test_sine_cosine_coeffs_against_quadrature(family, params):
    p = potential.builtin(family, params)
    kmax = 4 * p.band_limit
    nodes, weights = scipy.special.roots_legendre(256)
    x = math.pi / 2 * (nodes + 1)
    wq = math.pi / 2 * weights * potential.evaluate_q(p, x) / math.pi
    ks = np.arange(kmax + 1)
    sines = math.sqrt(2) * np.sin(np.outer(ks, x))
    cosines = math.sqrt(2) * np.cos(np.outer(ks, x))
    cosines[0] = 1
    dirichlet, neumann = potential.sine_cosine_coeffs(p, kmax)
    np.testing.assert_allclose(dirichlet, sines @ wq, atol=1e-12)
    np.testing.assert_allclose(neumann, cosines @ wq, atol=1e-12)
