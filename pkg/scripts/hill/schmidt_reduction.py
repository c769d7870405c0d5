# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import warnings
from collections.abc import Iterable
from typing import Self

import numpy as np
import scipy.linalg

from hill import errors
from hill.operator_matrix import TruncatedOperator
from hill.potential import ComplexArray

NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 50


@dataclasses.dataclass(frozen=True)
class ReducedMatrix:
    """
    2x2 Schur complement of L - (n^2 + z) onto the modes (n, -n), shifted by n^2

    beta_plus couples mode -n into mode n, beta_minus the reverse
    """

    n: int
    z: complex
    alpha11: complex
    alpha22: complex
    beta_plus: complex
    beta_minus: complex
    outside_disc: bool = False

    @property
    def matrix(self: Self) -> ComplexArray:
        return np.array([[self.alpha11, self.beta_plus], [self.beta_minus, self.alpha22]], np.complex128)

    @property
    def asymmetry(self: Self) -> float:
        return abs(self.alpha11 - self.alpha22)

    def determinant(self: Self) -> complex:
        return (self.alpha11 - self.z) * (self.alpha22 - self.z) - self.beta_plus * self.beta_minus


def _blocks(op: TruncatedOperator, n: int) -> tuple[list[int], ComplexArray]:
    if not op.bc.periodic or n < 1:
        raise errors.ModeOutsideWindowError(f"the {op.bc} window has no mode pair (n({n}), -n)")
    pair = [op.position(n), op.position(-n)]
    rest = np.ones(op.size, bool)
    rest[pair] = False
    return pair, rest


def reduce_2x2(op: TruncatedOperator, n: int, z: complex) -> ReducedMatrix:
    pair, rest = _blocks(op, n)
    z = complex(z)
    lam = n * n + z
    outside = abs(z) >= n / 4
    if outside:
        warnings.warn(f"z({z:.6g}) outside the reduction disc |z| < n/4 for n({n})", stacklevel=2)
    a = op.matrix
    complement = lam * np.eye(int(rest.sum())) - a[np.ix_(rest, rest)]
    try:
        solved = scipy.linalg.solve(complement, a[np.ix_(rest, pair)], check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise errors.ComplementSingularError(f"n({n}) z({z}) got '{exc}'") from exc
    if not np.all(np.isfinite(solved)):
        raise errors.ComplementSingularError(f"n({n}) z({z}) complementary solve is not finite")
    s = a[np.ix_(pair, pair)] + a[np.ix_(pair, rest)] @ solved
    return ReducedMatrix(n, z, complex(s[0, 0] - n * n), complex(s[1, 1] - n * n), complex(s[0, 1]), complex(s[1, 0]), outside)


def characteristic_residual(op: TruncatedOperator, n: int, z: complex) -> float:
    """|det(S(z) - (n^2 + z) I)|, zero exactly at eigenvalues n^2 + z of op"""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return abs(reduce_2x2(op, n, z).determinant())


def reduced_roots(op: TruncatedOperator, n: int, seeds: Iterable[complex], tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> list[complex]:
    """Newton on det(S(z) - (n^2 + z) I) = 0 from each seed"""
    roots: list[complex] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for seed in seeds:
            z = complex(seed)
            for _ in range(max_iter):
                h = 1e-6 * (1 + abs(z))
                value = reduce_2x2(op, n, z).determinant()
                slope = (reduce_2x2(op, n, z + h).determinant() - reduce_2x2(op, n, z - h).determinant()) / (2 * h)
                if value == 0 or slope == 0:
                    break
                step = value / slope
                z -= step
                if abs(step) <= tol * (1 + abs(z)):
                    break
            else:
                raise errors.NotConvergedError(f"n({n}) Newton from seed({seed}) did not converge in {max_iter} steps")
            roots.append(z)
    return roots
