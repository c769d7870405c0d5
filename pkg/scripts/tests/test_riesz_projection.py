# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import math

import numpy as np
import pytest

from hill import errors, riesz_projection, spectral_pairing
from hill.operator_matrix import Bc, build_matrix


def test_label_pair():
    assert riesz_projection.label_pair(1, 2) == (2, 1)
    assert riesz_projection.label_pair(3 - 1j, 3 + 1j) == (3 + 1j, 3 - 1j)


@pytest.mark.parametrize(("a", "b"), [(1, 2), (3 - 1j, 3 + 1j), (5 + 2j, 4 - 7j), (2.5, 2.5 + 1e-13), (7 + 1j, 7 + 1e-13 + 1j)])
def test_label_pair_ignores_order(a, b):
    plus, minus = riesz_projection.label_pair(a, b)
    assert riesz_projection.label_pair(b, a) == (plus, minus)
    assert abs(plus - minus) == abs(a - b)
    assert (plus + minus) / 2 == pytest.approx((a + b) / 2)


def test_free_projection_is_recovered(zero):
    op = build_matrix(zero, "per+", 8)
    contour = riesz_projection.contour_projection(op, 4, 4.0)
    np.testing.assert_allclose(contour.matrix, riesz_projection.free_projection(op, 4), atol=1e-9)
    assert contour.trace == pytest.approx(2)
    assert contour.idempotency <= 1e-9


def test_projection_is_rank_two_idempotent(mathieu):
    op = build_matrix(mathieu, "per-", 16)
    contour = riesz_projection.contour_projection(op, 7, 7 / 4)
    assert contour.trace == pytest.approx(2, abs=1e-9)
    assert contour.idempotency <= 1e-8
    assert contour.nodes >= riesz_projection.START_NODES


def test_enclosure_violation(zero):
    op = build_matrix(zero, "dir", 8)
    with pytest.raises(errors.EnclosureViolationError):
        # 25 sits on |lam - 16| = 9
        riesz_projection.contour_projection(op, 4, 9.0)


def test_node_limit(mathieu):
    with pytest.raises(errors.BadParamError):
        riesz_projection.contour_projection(build_matrix(mathieu, "dir", 8), 4, 1.0, nodes=8)


def test_derivative_map_periodic():
    d = riesz_projection.derivative_map("per+", 2)
    np.testing.assert_allclose(np.diag(d), 1j * np.array([-4, -2, 0, 2, 4]))


def test_derivative_map_dirichlet_neumann():
    d = riesz_projection.derivative_map("dir", 2)
    assert d.shape == (5, 4)
    assert d[3, 2] == 3
    n = riesz_projection.derivative_map("neu", 2)
    assert n.shape == (4, 5)
    assert n[1, 2] == -2
    np.testing.assert_array_equal(n[:, 0], 0)


def test_projection_norms_decrease(mathieu):
    reports = [riesz_projection.projection_norms(mathieu, Bc.for_mode(n), 32, n) for n in (6, 12, 24)]
    assert all(r.converged for r in reports)
    norms = [r.norm_p_diff for r in reports]
    assert norms[0] > norms[1] > norms[2]
    assert reports[0].scaled_dp_diff == pytest.approx(reports[0].norm_dp_diff / 6)


def test_invariant_pair_residuals(delta_comb):
    op = build_matrix(delta_comb, "per+", 32)
    pair = riesz_projection.invariant_pair(op, delta_comb, 10)
    assert not pair.degenerate
    residuals = riesz_projection.pair_residuals(op, pair)
    assert max(residuals.values()) <= 1e-8
    eigs = spectral_pairing.eigenvalues(op)
    assert np.abs(eigs - pair.lambda_plus).min() <= 1e-8
    assert pair.lambda_plus.real >= pair.lambda_minus.real


def test_degenerate_pair(zero):
    op = build_matrix(zero, "per+", 8)
    pair = riesz_projection.invariant_pair(op, zero, 6)
    assert pair.degenerate
    assert abs(pair.gamma) <= 1e-10
    assert abs(pair.xi) <= 1e-12
    with pytest.raises(errors.DegeneratePairError):
        riesz_projection.invariant_pair(op, zero, 6, strict=True)


def test_invariant_pair_needs_periodic_frame(mathieu):
    with pytest.raises(errors.ModeOutsideWindowError):
        riesz_projection.invariant_pair(build_matrix(mathieu, "neu", 8), mathieu, 4)


def test_free_pair_has_no_boundary_deviation(zero):
    pair = riesz_projection.invariant_pair(build_matrix(zero, "per-", 8), zero, 5)
    value, quasi = riesz_projection.boundary_deviation(pair)
    assert value <= 1e-12 and quasi <= 1e-12


def test_matched_vector(mathieu):
    op = build_matrix(mathieu, "per+", 32)
    pair = riesz_projection.invariant_pair(op, mathieu, 10)
    matched = riesz_projection.neumann_matched_vector(pair)
    assert np.linalg.norm(matched.vector) == pytest.approx(1, abs=1e-9)
    assert abs(matched.quasi_at_0) <= 1e-9


def test_matched_vector_boundary_from_coefficients(delta_comb):
    pair = riesz_projection.invariant_pair(build_matrix(delta_comb, "per+", 32), delta_comb, 10)
    shifted = dataclasses.replace(pair, w0=pair.w0 + 1)
    matched = riesz_projection.neumann_matched_vector(shifted)
    # a and b now cancel a quasi-derivative f does not have, -u0 / norm is left over
    norm = math.hypot(abs(pair.u0), abs(pair.w0 + 1))
    assert abs(matched.quasi_at_0) == pytest.approx(abs(pair.u0) / norm, abs=1e-9)


def test_neumann_gram_constant_mode():
    gram = riesz_projection.neumann_gram([-2, 0, 2], 2)
    # exp(0) against the constant and against sqrt2 cos 2x
    assert gram[1, 0] == pytest.approx(1)
    assert gram[2, 2] == pytest.approx(1 / math.sqrt(2))
    assert gram[0, 2] == pytest.approx(1 / math.sqrt(2))
    assert gram[1, 2] == pytest.approx(0)


def test_deviation_identity(mathieu, config):
    decomps = spectral_pairing.decompositions(mathieu, 32, config)
    slate = spectral_pairing.build_slate(mathieu, 32, [12], config, decomps)
    row = slate.row(12)
    matched = riesz_projection.neumann_matched_vector(row.pair)
    report = riesz_projection.deviation_identity_residual(row.pair, matched, row.delta_neu, row.g, 32)
    assert report.residual <= 1e-7 * (1 + abs(row.delta_neu))
    assert report.pairing >= 71 / 72
    with pytest.raises(errors.FrameMismatchError):
        riesz_projection.deviation_identity_residual(row.pair, matched, row.delta_neu, row.g, 16)
