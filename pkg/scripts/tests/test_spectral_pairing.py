# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import numpy as np
import pandas as pd
import pytest

from hill import errors, spectral_pairing
from hill.operator_matrix import Bc, build_matrix


@pytest.fixture
def mathieu_slate(mathieu, config):  # noqa: ANN001, ANN201
    return spectral_pairing.build_slate(mathieu, 32, range(6, 13), config)


def test_free_eigenvalues(zero):
    op = build_matrix(zero, "per+", 4)
    np.testing.assert_array_equal(spectral_pairing.eigenvalues(op), np.sort(op.free_diagonal))
    decomposition = spectral_pairing.decompose(op)
    assert list(decomposition.members(2, 0.5)) == [1, 2]


def test_localize_free(zero):
    eigs = spectral_pairing.eigenvalues(build_matrix(zero, "per+", 8))
    loc = spectral_pairing.localize(eigs, "per+", 8, 4)
    assert loc.matches
    assert loc.onset == 5
    assert loc.unassigned == 0
    assert loc.region_count == loc.region_expected == 5
    assert loc.counts[6] == 2 and loc.counts[7] == 0
    with pytest.raises(errors.BadParamError):
        spectral_pairing.localize(eigs, "per+", 8, 0)


def test_disc_count_mismatch(zero):
    decomposition = spectral_pairing.decompose(build_matrix(zero, "per+", 4))
    with pytest.raises(errors.CountMismatchError):
        spectral_pairing.disc_spectra(decomposition, 5, 1.25, 2)


def test_slate_rows(mathieu_slate):
    assert mathieu_slate.ns == list(range(6, 13))
    assert not mathieu_slate.skipped
    row = mathieu_slate.row(7)
    assert row.bc is Bc.PER_MINUS
    assert row.gamma == row.lambda_plus - row.lambda_minus
    assert row.z_star == pytest.approx(0.5 * (row.lambda_plus + row.lambda_minus) - 49)
    assert row.lambda_plus.real >= row.lambda_minus.real
    assert abs(row.mu - 49) < 7 / 4 and abs(row.nu - 49) < 7 / 4
    with pytest.raises(errors.ModeOutsideWindowError):
        mathieu_slate.row(99)


def test_resolution_floor(mathieu_slate):
    assert mathieu_slate.floor == pytest.approx(1e3 * np.finfo(float).eps * 65**2)
    assert mathieu_slate.row(6).resolved
    assert not mathieu_slate.row(12).resolved


def test_slate_frame(mathieu_slate):
    frame = mathieu_slate.to_frame()
    assert list(frame.columns) == list(spectral_pairing.SLATE_COLUMNS)
    assert len(frame) == 7
    np.testing.assert_allclose(frame["im_lambda_plus"], 0, atol=1e-10)
    extended = mathieu_slate.to_frame(extended=True)
    assert {"char_residual", "resolved", "alpha_asymmetry"} <= set(extended.columns)


def test_slate_is_deterministic(mathieu, mathieu_slate, config):
    again = spectral_pairing.build_slate(mathieu, 32, range(6, 13), config)
    pd.testing.assert_frame_equal(again.to_frame(), mathieu_slate.to_frame())


def test_slate_checks(mathieu, config):
    with pytest.raises(errors.BadParamError):
        spectral_pairing.build_slate(mathieu, 16, [], config)
    with pytest.warns(UserWarning, match="truncation"):
        spectral_pairing.build_slate(mathieu, 16, [16], config)


def test_k_stability(mathieu, config):
    changes = spectral_pairing.k_stability(mathieu, 16, range(6, 9), config)
    assert sorted(changes) == [6, 7, 8]
    assert max(changes.values()) <= 1e-10
