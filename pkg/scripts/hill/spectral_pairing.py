# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import math
import warnings
from collections.abc import Iterable, Mapping
from typing import Any, Self

import numpy as np
import pandas as pd
import scipy.linalg

from hill import config as hill_config
from hill import errors, riesz_projection, schmidt_reduction
from hill.operator_matrix import Bc, TruncatedOperator, build_matrix, disc_radius, indices
from hill.potential import ComplexArray, IntArray, PotentialSpec
from hill.riesz_projection import InvariantPair, label_pair

SLATE_COLUMNS = (
    "n",
    "re_lambda_plus",
    "im_lambda_plus",
    "re_lambda_minus",
    "im_lambda_minus",
    "re_mu",
    "im_mu",
    "re_nu",
    "im_nu",
    "abs_gamma",
    "abs_delta_dir",
    "abs_delta_neu",
    "re_z_star",
    "im_z_star",
    "abs_beta_plus",
    "abs_beta_minus",
    "abs_xi",
)


@dataclasses.dataclass(frozen=True, eq=False)
class Decomposition:
    op: TruncatedOperator
    values: ComplexArray
    vectors: ComplexArray

    def members(self: Self, n: int, r: float) -> IntArray:
        """positions of the eigenvalues inside D_n"""
        return np.flatnonzero(np.abs(self.values - n * n) < r)


@dataclasses.dataclass(frozen=True)
class Localization:
    bc: Bc
    N: int
    policy: str
    assignment: tuple[int, ...]
    counts: Mapping[int, int]
    expected: Mapping[int, int]
    region_count: int
    region_expected: int
    mismatches: tuple[int, ...]
    onset: int | None

    @property
    def unassigned(self: Self) -> int:
        return sum(1 for a in self.assignment if a < 0)

    @property
    def matches(self: Self) -> bool:
        return not self.mismatches


@dataclasses.dataclass(frozen=True, eq=False)
class SlateRow:
    n: int
    bc: Bc
    radius: float
    lambda_plus: complex
    lambda_minus: complex
    mu: complex
    nu: complex
    beta_plus: complex
    beta_minus: complex
    alpha11: complex
    alpha22: complex
    beta_plus_zplus: complex
    beta_minus_zplus: complex
    xi: complex
    char_residual: float
    resolved: bool
    pair: InvariantPair
    g: ComplexArray

    @property
    def gamma(self: Self) -> complex:
        return self.lambda_plus - self.lambda_minus

    @property
    def delta_dir(self: Self) -> complex:
        return self.lambda_plus - self.mu

    @property
    def delta_neu(self: Self) -> complex:
        return self.lambda_plus - self.nu

    @property
    def z_star(self: Self) -> complex:
        return 0.5 * (self.lambda_plus + self.lambda_minus) - self.n * self.n

    @property
    def beta_sum(self: Self) -> float:
        return abs(self.beta_plus) + abs(self.beta_minus)

    def record(self: Self) -> dict[str, Any]:
        return {
            "n": self.n,
            "re_lambda_plus": self.lambda_plus.real,
            "im_lambda_plus": self.lambda_plus.imag,
            "re_lambda_minus": self.lambda_minus.real,
            "im_lambda_minus": self.lambda_minus.imag,
            "re_mu": self.mu.real,
            "im_mu": self.mu.imag,
            "re_nu": self.nu.real,
            "im_nu": self.nu.imag,
            "abs_gamma": abs(self.gamma),
            "abs_delta_dir": abs(self.delta_dir),
            "abs_delta_neu": abs(self.delta_neu),
            "re_z_star": self.z_star.real,
            "im_z_star": self.z_star.imag,
            "abs_beta_plus": abs(self.beta_plus),
            "abs_beta_minus": abs(self.beta_minus),
            "abs_xi": abs(self.xi),
            "radius": self.radius,
            "alpha_asymmetry": abs(self.alpha11 - self.alpha22),
            "char_residual": self.char_residual,
            "resolved": self.resolved,
            "degenerate": self.pair.degenerate,
        }


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralSlate:
    p: PotentialSpec
    K: int
    policy: str
    floor: float
    rows: tuple[SlateRow, ...]
    skipped: Mapping[int, str] = dataclasses.field(default_factory=dict)

    @property
    def ns(self: Self) -> list[int]:
        return [row.n for row in self.rows]

    def row(self: Self, n: int) -> SlateRow:
        for row in self.rows:
            if row.n == n:
                return row
        raise errors.ModeOutsideWindowError(f"n({n}) not in the slate, skipped: {dict(self.skipped)}")

    def to_frame(self: Self, extended: bool = False) -> pd.DataFrame:
        frame = pd.DataFrame([row.record() for row in self.rows])
        if frame.empty:
            frame = pd.DataFrame(columns=list(SLATE_COLUMNS))
        return frame if extended else frame[list(SLATE_COLUMNS)]


def decompose(op: TruncatedOperator) -> Decomposition:
    try:
        values, vectors = scipy.linalg.eig(op.matrix, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise errors.EigensolveFailureError(f"{op.bc} K({op.K}) got '{exc}'") from exc
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(vectors))):
        raise errors.EigensolveFailureError(f"{op.bc} K({op.K}) eigensolve returned non-finite values")
    order = np.lexsort((values.imag, values.real))
    return Decomposition(op, values[order], vectors[:, order])


def eigenvalues(op: TruncatedOperator) -> ComplexArray:
    """full spectrum of op.matrix, sorted by (Re, Im)"""
    try:
        values = scipy.linalg.eigvals(op.matrix, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise errors.EigensolveFailureError(f"{op.bc} K({op.K}) got '{exc}'") from exc
    if not np.all(np.isfinite(values)):
        raise errors.EigensolveFailureError(f"{op.bc} K({op.K}) eigensolve returned non-finite values")
    return values[np.lexsort((values.imag, values.real))]


def _top_mode(bc: Bc, K: int) -> int:
    return int(np.abs(indices(bc, K)).max())


def localize(eigs: Iterable[complex], bc: Bc | str, K: int, N: int, radius_policy: str = "fixed_quarter") -> Localization:
    """
    assign each eigenvalue to R_N or to the unique disc D_n, n > N, holding it

    counts are compared with the free multiplicities for N < n <= K, the truncation edge is left out
    """
    bc = Bc(bc)
    if N < 1:
        raise errors.BadParamError(f"N({N}) must be >= 1")
    idx = np.abs(indices(bc, K))
    top = _top_mode(bc, K)
    radii = {n: disc_radius(n, radius_policy) for n in range(N + 1, top + 1)}
    values = np.asarray(list(eigs), np.complex128)
    assignment: list[int] = []
    for lam in values:
        guess = round(math.sqrt(max(lam.real, 0.0)))
        disc = next((n for n in (guess, guess - 1, guess + 1) if n in radii and abs(lam - n * n) < radii[n]), None)
        if disc is not None:
            assignment.append(disc)
        elif -N <= lam.real <= N * N + N and abs(lam.imag) < N:
            assignment.append(0)
        else:
            assignment.append(-1)
    counts = {n: assignment.count(n) for n in radii}
    expected = {n: int(np.sum(idx == n)) for n in radii}
    checked = [n for n in radii if n <= K]
    mismatches = tuple(n for n in checked if counts[n] != expected[n])
    onset = None
    if checked and checked[-1] not in mismatches:
        onset = max(mismatches) + 1 if mismatches else checked[0]
    return Localization(
        bc,
        N,
        radius_policy,
        tuple(assignment),
        counts,
        expected,
        assignment.count(0),
        int(np.sum(idx <= N)),
        mismatches,
        onset,
    )


def disc_spectra(decomposition: Decomposition, n: int, r: float, expected: int) -> IntArray:
    members = decomposition.members(n, r)
    if members.size != expected:
        raise errors.CountMismatchError(f"{decomposition.op.bc} disc D_{n} holds {members.size} eigenvalues, expected {expected}")
    return members


def _slate_row(
    p: PotentialSpec,
    decompositions: Mapping[Bc, Decomposition],
    n: int,
    config: hill_config.HillConfig,
    floor: float,
) -> SlateRow:
    bc = Bc.for_mode(n)
    r = disc_radius(n, config.RADIUS_POLICY)
    per = decompositions[bc]
    pers = disc_spectra(per, n, r, 2)
    mu = complex(per_value(decompositions[Bc.DIR], n, r))
    neu = decompositions[Bc.NEU]
    nu_at = disc_spectra(neu, n, r, 1)[0]
    lam_plus, lam_minus = label_pair(*per.values[pers])
    op = per.op
    z_star = 0.5 * (lam_plus + lam_minus) - n * n
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        at_star = schmidt_reduction.reduce_2x2(op, n, z_star)
        at_plus = schmidt_reduction.reduce_2x2(op, n, lam_plus - n * n)
    residual = max(schmidt_reduction.characteristic_residual(op, n, lam - n * n) for lam in (lam_plus, lam_minus))
    contour = riesz_projection.contour_projection(op, n, r, config.PROJECTION_NODES, config.PROJECTION_TOL, config.PROJECTION_MAX_NODES, per.values)
    pair = riesz_projection.invariant_pair(op, p, n, r, contour, degenerate_tol=config.DEGENERATE_TOL)
    return SlateRow(
        n,
        bc,
        r,
        lam_plus,
        lam_minus,
        mu,
        complex(neu.values[nu_at]),
        at_star.beta_plus,
        at_star.beta_minus,
        at_star.alpha11,
        at_star.alpha22,
        at_plus.beta_plus,
        at_plus.beta_minus,
        pair.xi,
        residual,
        abs(at_star.beta_plus) + abs(at_star.beta_minus) >= floor,
        pair,
        neu.vectors[:, nu_at] / np.linalg.norm(neu.vectors[:, nu_at]),
    )


def per_value(decomposition: Decomposition, n: int, r: float) -> complex:
    """the unique Dir or Neu eigenvalue in D_n"""
    return complex(decomposition.values[disc_spectra(decomposition, n, r, 1)[0]])


def decompositions(p: PotentialSpec, K: int, config: hill_config.HillConfig) -> dict[Bc, Decomposition]:
    bcs = list(Bc)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ops = [build_matrix(p, bc, K) for bc in bcs]
    return dict(zip(bcs, hill_config.map_threads(config, decompose, ops, "eig")))


def build_slate(
    p: PotentialSpec,
    K: int,
    n_range: Iterable[int],
    config: hill_config.HillConfig | None = None,
    decomps: Mapping[Bc, Decomposition] | None = None,
) -> SpectralSlate:
    """per-n pairing of the Per, Dir and Neu eigenvalues in D_n with the reduction and projection data"""
    config = config or hill_config.HillConfig()
    ns = sorted(set(n_range))
    if not ns or ns[0] < 1:
        raise errors.BadParamError(f"n range({ns[:1]}..{ns[-1:]}) is empty or starts below 1")
    if ns[-1] > K - p.band_limit:
        warnings.warn(f"n({ns[-1]}) > K - F({K - p.band_limit}), top rows feel the truncation", stacklevel=2)
    decomps = decomps or decompositions(p, K, config)
    floor = hill_config.resolution_floor(config, K)
    skipped: dict[int, str] = {}

    def work(n: int) -> SlateRow | None:
        try:
            return _slate_row(p, decomps, n, config, floor)
        except errors.CountMismatchError as exc:
            config.print(f"got '{exc}' for n({n}), skipping")
            skipped[n] = exc.kind()
            return None

    rows = hill_config.map_threads(config, work, ns, "slate")
    return SpectralSlate(p, K, config.RADIUS_POLICY, floor, tuple(row for row in rows if row is not None), dict(sorted(skipped.items())))


def k_stability(p: PotentialSpec, K: int, n_range: Iterable[int], config: hill_config.HillConfig | None = None) -> dict[int, float]:
    """largest change of lambda_plus, lambda_minus, mu, nu per n when K doubles"""
    config = config or hill_config.HillConfig()
    ns = list(n_range)
    base = decompositions(p, K, config)
    fine = decompositions(p, 2 * K, config)
    changes: dict[int, float] = {}
    for n in ns:
        r = disc_radius(n, config.RADIUS_POLICY)
        try:
            coarse_values = disc_values(base, n, r)
            fine_values = disc_values(fine, n, r)
        except errors.CountMismatchError as exc:
            config.print(f"got '{exc}' for n({n}), skipping")
            continue
        changes[n] = float(np.abs(coarse_values - fine_values).max())
    return changes


def disc_values(decomps: Mapping[Bc, Decomposition], n: int, r: float) -> ComplexArray:
    """(lambda_plus, lambda_minus, mu, nu) in D_n"""
    per = decomps[Bc.for_mode(n)]
    plus, minus = label_pair(*per.values[disc_spectra(per, n, r, 2)])
    return np.array([plus, minus, per_value(decomps[Bc.DIR], n, r), per_value(decomps[Bc.NEU], n, r)])
