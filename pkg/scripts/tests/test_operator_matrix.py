# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import math

import numpy as np
import pandas as pd
import pytest

from hill import errors, operator_matrix, potential
from hill.operator_matrix import Bc, build_matrix


@pytest.mark.parametrize(("bc", "size"), [("per+", 17), ("per-", 18), ("dir", 16), ("neu", 17)])
def test_window_sizes(bc, size):
    assert operator_matrix.indices(Bc(bc), 8).size == size


def test_for_mode():
    assert Bc.for_mode(4) is Bc.PER_PLUS
    assert Bc.for_mode(7) is Bc.PER_MINUS
    assert Bc.PER_MINUS.disc_count == 2 and Bc.NEU.disc_count == 1


@pytest.mark.parametrize("bc", list(Bc))
def test_zero_potential_is_diagonal(zero, bc):
    op = build_matrix(zero, bc, 8)
    np.testing.assert_array_equal(op.matrix, np.diag(op.free_diagonal))


def test_mathieu_periodic_entries(mathieu):
    op = build_matrix(mathieu, "per+", 8)
    assert op.matrix[op.position(0), op.position(2)] == pytest.approx(1)
    assert op.matrix[op.position(2), op.position(0)] == pytest.approx(1)
    assert op.matrix[op.position(0), op.position(4)] == 0
    assert op.matrix[op.position(6), op.position(6)] == 36


@pytest.mark.parametrize("bc", list(Bc))
def test_real_even_potential_gives_real_symmetric(mathieu, bc):
    a = build_matrix(mathieu, bc, 8).matrix
    np.testing.assert_allclose(a, a.T, atol=1e-14)
    np.testing.assert_allclose(a.imag, 0, atol=1e-14)


def test_real_potential_gives_hermitian_periodic(delta_comb):
    a = build_matrix(delta_comb, "per-", 16).matrix
    np.testing.assert_allclose(a, a.conj().T, atol=1e-13)


def test_matrix_is_read_only(mathieu):
    op = build_matrix(mathieu, "dir", 4)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 0


def test_truncation_checks(mathieu, delta_comb):
    with pytest.raises(errors.TruncationTooSmallError):
        build_matrix(mathieu, "per+", 3)
    with pytest.warns(UserWarning):
        build_matrix(delta_comb, "per+", 8)


def test_position(mathieu):
    op = build_matrix(mathieu, "per-", 4)
    assert op.indices[op.position(-3)] == -3
    assert op.free_modes(3) == [op.position(3), op.position(-3)]
    with pytest.raises(errors.ModeOutsideWindowError):
        op.position(2)


def test_disc_radius():
    assert operator_matrix.disc_radius(12) == 3
    assert operator_matrix.disc_radius(10, "shrinking") == pytest.approx(10 / math.log(10))
    with pytest.raises(errors.OverlappingDiscsError):
        operator_matrix.disc_radius(2, "shrinking")
    with pytest.raises(errors.BadParamError):
        operator_matrix.disc_radius(0)
    with pytest.raises(errors.BadParamError):
        operator_matrix.disc_radius(5, "wide")


def test_sqrt_branch():
    assert operator_matrix.sqrt_branch(4) == pytest.approx(2)
    assert operator_matrix.sqrt_branch(-4) == pytest.approx(2j)
    # the cut is the positive real axis, the lower half plane maps to the left half
    assert operator_matrix.sqrt_branch(-1j).real < 0


def test_k_lambda_on_free_spectrum():
    with pytest.raises(errors.OnSpectrumOfFreeError):
        operator_matrix.k_lambda("dir", 4, 9.0)
    k = operator_matrix.k_lambda("dir", 4, 10.0 + 1j)
    np.testing.assert_allclose(k @ k, np.diag(1 / (10.0 + 1j - np.arange(1, 9) ** 2)))


def test_resolvent(mathieu):
    op = build_matrix(mathieu, "neu", 8)
    lam = 10.5 + 1j
    r = operator_matrix.resolvent(op, lam)
    np.testing.assert_allclose(r @ (lam * np.eye(op.size) - op.matrix), np.eye(op.size), atol=1e-12)


def test_resolvent_near_eigenvalue(zero):
    op = build_matrix(zero, "per+", 8)
    with pytest.raises(errors.NearSingularError):
        operator_matrix.resolvent(op, 4 + 1e-14j)


def test_free_resolvent(zero):
    op = build_matrix(zero, "dir", 4)
    np.testing.assert_allclose(operator_matrix.free_resolvent(op, 2.5 + 1j), operator_matrix.resolvent(op, 2.5 + 1j), atol=1e-14)


def test_resolvent_series(mathieu):
    op = build_matrix(mathieu, "per+", 8)
    lam = 30.25 + 5j
    series, bound = operator_matrix.resolvent_series(op, lam, 40)
    assert operator_matrix.kvk_norm(mathieu, "per+", 8, lam)[0] < 0.5
    assert bound < 1e-10
    np.testing.assert_allclose(series, operator_matrix.resolvent(op, lam), atol=1e-10)


def test_kvk_norms_ordered(mathieu):
    spectral, frobenius = operator_matrix.kvk_norm(mathieu, "dir", 8, 20.5 + 3j)
    assert 0 < spectral <= frobenius


def test_dump_matrix(tmp_path, mathieu):
    op = build_matrix(mathieu, "per-", 4)
    path = operator_matrix.dump_matrix(op, str(tmp_path / "m" / "per-.csv"))
    frame = pd.read_csv(path, sep=";", index_col=0)
    assert frame.shape == (op.size, op.size)
    re, im = (float(v) for v in frame.iloc[0, 0].split(","))
    assert complex(re, im) == op.matrix[0, 0]


@pytest.mark.parametrize("bc", list(Bc))
def test_conjugate_potential_gives_adjoint(gasymov, bc):
    a = build_matrix(gasymov, bc, 32).matrix
    b = build_matrix(potential.conjugate(gasymov), bc, 32).matrix
    np.testing.assert_allclose(b, a.conj().T, atol=1e-12)


@pytest.mark.parametrize("bc", ["dir", "neu"])
@pytest.mark.parametrize("lam", [20.5 + 3j, 66.0])
def test_hilbert_schmidt_bound(gasymov, delta_comb, bc, lam):
    for p in (gasymov, delta_comb):
        _, hs = operator_matrix.kvk_norm(p, bc, 32, lam)
        assert hs**2 <= operator_matrix.hs_bound(p, bc, 32, lam) * (1 + 1e-9)
