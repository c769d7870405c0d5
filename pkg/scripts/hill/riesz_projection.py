# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import math
from collections.abc import Sequence
from typing import Self

import numpy as np
import scipy.linalg

from hill import errors, potential
from hill.operator_matrix import Bc, TruncatedOperator, build_matrix, disc_radius, indices, resolvent
from hill.potential import ComplexArray, FloatArray, PotentialSpec

START_NODES = 64
MAX_NODES = 1024
PROJECTION_TOL = 1e-9
ENCLOSURE_GAP = 1e-6
DEGENERATE_TOL = 1e-10
MATCH_TOL = 1e-12
RANK_TOL = 1e-6


@dataclasses.dataclass(frozen=True, eq=False)
class ContourProjection:
    matrix: ComplexArray
    nodes: int
    change: float

    @property
    def trace(self: Self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def idempotency(self: Self) -> float:
        return float(scipy.linalg.norm(self.matrix @ self.matrix - self.matrix, 2))


@dataclasses.dataclass(frozen=True)
class ProjectionReport:
    n: int
    bc: Bc
    norm_p_diff: float
    norm_dp_diff: float
    nodes: int
    converged: bool
    idempotency: float
    trace: complex

    @property
    def scaled_dp_diff(self: Self) -> float:
        return self.norm_dp_diff / self.n


@dataclasses.dataclass(frozen=True, eq=False)
class InvariantPair:
    """
    orthonormal basis {f, phi} of Ran P_n with L f = lambda_plus f and L phi = lambda_minus phi + xi f

    boundary data are evaluated on the Per frame exp(ikx), w0 and u0 are the quasi-derivatives of f and phi at 0
    """

    n: int
    bc: Bc
    K: int
    indices: Sequence[int]
    f: ComplexArray
    phi: ComplexArray
    xi: complex
    lambda_plus: complex
    lambda_minus: complex
    f_at_0: complex
    phi_at_0: complex
    df_at_0: complex
    dphi_at_0: complex
    w0: complex
    u0: complex
    f0_at_0: complex
    phi0_at_0: complex
    df0_at_0: complex
    dphi0_at_0: complex
    q_at_0: complex
    q_at_pi: complex
    degenerate: bool = False

    @property
    def gamma(self: Self) -> complex:
        return self.lambda_plus - self.lambda_minus

    @property
    def boundary_ratio(self: Self) -> float:
        return abs(self.w0) / abs(self.u0) if self.u0 else math.inf


@dataclasses.dataclass(frozen=True, eq=False)
class MatchedVector:
    vector: ComplexArray
    a: complex
    b: complex
    quasi_at_0: complex
    quasi_at_pi: complex


@dataclasses.dataclass(frozen=True)
class DeviationReport:
    n: int
    residual: float
    pairing: float
    phi_pairing: complex
    f_pairing: complex
    distance: float
    f_overlap: complex


def label_pair(first: complex, second: complex) -> tuple[complex, complex]:
    """(lambda_plus, lambda_minus): larger real part first, ties broken by the imaginary part"""
    first, second = complex(first), complex(second)
    tie = 1e-12 * (1 + max(abs(first), abs(second)))
    if abs(first.real - second.real) <= tie and first.imag != second.imag:
        return (first, second) if first.imag > second.imag else (second, first)
    return (first, second) if first.real >= second.real else (second, first)


def _check_enclosure(center: float, r: float, eigs: ComplexArray, gap: float = ENCLOSURE_GAP) -> None:
    distance = np.abs(np.abs(eigs - center) - r)
    if distance.size and distance.min() <= gap:
        raise errors.EnclosureViolationError(f"eigenvalue within {distance.min():.3g} of the contour |lambda - {center}| = {r}")


def _node_sum(op: TruncatedOperator, center: float, r: float, thetas: FloatArray) -> ComplexArray:
    total = np.zeros((op.size, op.size), np.complex128)
    for theta in thetas:
        point = r * np.exp(1j * theta)
        total += point * resolvent(op, center + point)
    return total


def contour_projection(
    op: TruncatedOperator,
    n: int,
    r: float,
    nodes: int = START_NODES,
    tol: float = PROJECTION_TOL,
    max_nodes: int = MAX_NODES,
    eigs: ComplexArray | None = None,
) -> ContourProjection:
    """
    (1 / 2 pi i) integral of (lam - L)^-1 over |lam - n^2| = r, trapezoid rule

    the node count doubles until the spectral-norm change drops to tol, old nodes are reused
    """
    if nodes < 16:
        raise errors.BadParamError(f"nodes({nodes}) must be >= 16")
    center = float(n * n)
    _check_enclosure(center, r, scipy.linalg.eigvals(op.matrix) if eigs is None else np.asarray(eigs))
    total = _node_sum(op, center, r, 2 * math.pi * np.arange(nodes) / nodes)
    current = total / nodes
    while True:
        # odd nodes of the doubled rule
        total = total + _node_sum(op, center, r, 2 * math.pi * (np.arange(nodes) + 0.5) / nodes)
        nodes *= 2
        refined = total / nodes
        change = float(scipy.linalg.norm(refined - current, 2))
        if change <= tol:
            return ContourProjection(refined, nodes, change)
        if 2 * nodes > max_nodes:
            raise errors.NotConvergedError(f"n({n}) projection changed by {change:.3g} at {nodes} nodes")
        current = refined


def projection(op: TruncatedOperator, n: int, r: float, M: int = START_NODES, tol: float = PROJECTION_TOL, max_nodes: int = MAX_NODES) -> ComplexArray:
    return contour_projection(op, n, r, M, tol, max_nodes).matrix


def free_projection(op: TruncatedOperator, n: int) -> ComplexArray:
    out = np.zeros((op.size, op.size), np.complex128)
    modes = op.free_modes(n)
    out[modes, modes] = 1
    return out


def derivative_map(bc: Bc | str, K: int) -> ComplexArray:
    """d/dx on coefficient vectors, Dir and Neu land in the other (orthonormal) frame"""
    bc = Bc(bc)
    idx = indices(bc, K)
    match bc:
        case Bc.PER_PLUS | Bc.PER_MINUS:
            return np.diag(1j * idx.astype(np.complex128))
        case Bc.DIR:
            # sqrt2 sin kx -> k sqrt2 cos kx, cosine frame 0..2K
            out = np.zeros((2 * K + 1, idx.size), np.complex128)
            out[idx, np.arange(idx.size)] = idx
            return out
        case Bc.NEU:
            # 1 -> 0, sqrt2 cos kx -> -k sqrt2 sin kx, sine frame 1..2K
            out = np.zeros((2 * K, idx.size), np.complex128)
            out[idx[1:] - 1, np.arange(1, idx.size)] = -idx[1:]
            return out


def projection_norms(
    p: PotentialSpec,
    bc: Bc | str,
    K: int,
    n: int,
    policy: str = "fixed_quarter",
    op: TruncatedOperator | None = None,
    eigs: ComplexArray | None = None,
    nodes: int = START_NODES,
    tol: float = PROJECTION_TOL,
    max_nodes: int = MAX_NODES,
) -> ProjectionReport:
    bc = Bc(bc)
    op = op or build_matrix(p, bc, K)
    contour = contour_projection(op, n, disc_radius(n, policy), nodes, tol, max_nodes, eigs)
    diff = contour.matrix - free_projection(op, n)
    return ProjectionReport(
        n,
        bc,
        float(scipy.linalg.norm(diff, 2)),
        float(scipy.linalg.norm(derivative_map(bc, K) @ diff, 2)),
        contour.nodes,
        contour.change <= tol,
        contour.idempotency,
        contour.trace,
    )


def _boundary(idx: Sequence[int], c: ComplexArray) -> tuple[complex, complex]:
    k = np.asarray(idx)
    return complex(np.sum(c)), complex(np.sum(1j * k * c))


def _free_boundary(op: TruncatedOperator, n: int, c: ComplexArray) -> tuple[complex, complex]:
    plus, minus = c[op.position(n)], c[op.position(-n)]
    return complex(plus + minus), complex(1j * n * (plus - minus))


def invariant_pair(
    op: TruncatedOperator,
    p: PotentialSpec,
    n: int,
    r: float | None = None,
    contour: ContourProjection | None = None,
    eigs: ComplexArray | None = None,
    degenerate_tol: float = DEGENERATE_TOL,
    strict: bool = False,
    nodes: int = START_NODES,
    tol: float = PROJECTION_TOL,
    max_nodes: int = MAX_NODES,
) -> InvariantPair:
    if not op.bc.periodic:
        raise errors.ModeOutsideWindowError(f"invariant pairs live on the periodic frames, got {op.bc}")
    if contour is None:
        contour = contour_projection(op, n, disc_radius(n) if r is None else r, nodes, tol, max_nodes, eigs)
    u, s, _ = scipy.linalg.svd(contour.matrix)
    if s.size < 3 or s[1] < 0.5 or s[2] > RANK_TOL * s[0]:
        raise errors.CountMismatchError(f"n({n}) projection singular values {s[:3]} are not those of a rank 2 projection")
    basis = u[:, :2]
    reduced = basis.conj().T @ op.matrix @ basis
    lam_plus, lam_minus = label_pair(*scipy.linalg.eigvals(reduced))
    degenerate = abs(lam_plus - lam_minus) <= degenerate_tol
    if degenerate:
        if strict:
            raise errors.DegeneratePairError(f"n({n}) |gamma|({abs(lam_plus - lam_minus):.3g}) <= {degenerate_tol}")
        t, z = scipy.linalg.schur(reduced, output="complex")
        f, phi, xi = basis @ z[:, 0], basis @ z[:, 1], complex(t[0, 1])
        lam_plus, lam_minus = complex(t[0, 0]), complex(t[1, 1])
    else:
        (a, b), (c, d) = reduced
        candidates = (np.array([b, lam_plus - a]), np.array([lam_plus - d, c]))
        y = max(candidates, key=lambda v: float(np.linalg.norm(v)))
        norm = float(np.linalg.norm(y))
        y = y / norm if norm > 0 else np.array([1, 0], np.complex128)
        f = basis @ y
        phi = basis @ np.array([-np.conj(y[1]), np.conj(y[0])])
        xi = complex(np.vdot(f, op.matrix @ phi - lam_minus * phi))
    idx = op.indices
    f_at_0, df_at_0 = _boundary(idx, f)
    phi_at_0, dphi_at_0 = _boundary(idx, phi)
    f0_at_0, df0_at_0 = _free_boundary(op, n, f)
    phi0_at_0, dphi0_at_0 = _free_boundary(op, n, phi)
    q0, qpi = complex(potential.fejer_q(p, 0.0)), complex(potential.fejer_q(p, math.pi))
    return InvariantPair(
        n,
        op.bc,
        op.K,
        tuple(int(k) for k in idx),
        f,
        phi,
        xi,
        lam_plus,
        lam_minus,
        f_at_0,
        phi_at_0,
        df_at_0,
        dphi_at_0,
        df_at_0 - q0 * f_at_0,
        dphi_at_0 - q0 * phi_at_0,
        f0_at_0,
        phi0_at_0,
        df0_at_0,
        dphi0_at_0,
        q0,
        qpi,
        degenerate,
    )


def pair_residuals(op: TruncatedOperator, pair: InvariantPair) -> dict[str, float]:
    lf = op.matrix @ pair.f
    lphi = op.matrix @ pair.phi
    return {
        "eigen": float(np.linalg.norm(lf - pair.lambda_plus * pair.f)),
        "complement": float(np.linalg.norm(lphi - pair.lambda_minus * pair.phi - pair.xi * pair.f)),
        "norm": max(abs(float(np.linalg.norm(pair.f)) - 1), abs(float(np.linalg.norm(pair.phi)) - 1)),
        "orthogonality": abs(complex(np.vdot(pair.f, pair.phi))),
    }


def boundary_deviation(pair: InvariantPair) -> tuple[float, float]:
    """max over G in {f, phi} of |G(0) - G0(0)| and |(G' - QG)(0) - G0'(0)| / n"""
    value = max(abs(pair.f_at_0 - pair.f0_at_0), abs(pair.phi_at_0 - pair.phi0_at_0))
    quasi = max(abs(pair.w0 - pair.df0_at_0), abs(pair.u0 - pair.dphi0_at_0))
    return value, quasi / pair.n


def neumann_matched_vector(pair: InvariantPair, tol: float = MATCH_TOL) -> MatchedVector:
    """unit G = a f + b phi in Ran P_n with vanishing quasi-derivative at 0"""
    if abs(pair.w0) <= tol:
        a, b = 1 + 0j, 0j
    else:
        norm = math.hypot(abs(pair.u0), abs(pair.w0))
        if norm <= tol:
            raise errors.NullMatchError(f"n({pair.n}) boundary data of f and phi both vanish")
        a, b = pair.u0 / norm, -pair.w0 / norm
    vector = a * pair.f + b * pair.phi
    k = np.asarray(pair.indices)
    at_0, d_at_0 = _boundary(k, vector)
    sign = np.where(k % 2, -1.0, 1.0)
    at_pi = complex(np.sum(sign * vector))
    quasi_pi = complex(np.sum(1j * k * sign * vector)) - pair.q_at_pi * at_pi
    return MatchedVector(vector, a, b, d_at_0 - pair.q_at_0 * at_0, quasi_pi)


def neumann_gram(per_idx: Sequence[int], K: int) -> ComplexArray:
    """(1/pi) integral over [0, pi] of exp(ikx) times the Neumann frame {1, sqrt2 cos mx}"""
    k = np.asarray(per_idx)[:, None]
    m = indices(Bc.NEU, K)[None, :]
    gram = math.sqrt(2) / (2 * math.pi) * (potential.exp_integral(k + m) + potential.exp_integral(k - m))
    gram[:, 0] = potential.exp_integral(k[:, 0]) / math.pi
    return gram


def deviation_identity_residual(pair: InvariantPair, matched: MatchedVector, delta_neu: complex, g: ComplexArray, neu_K: int) -> DeviationReport:
    """
    |<G, gbar> delta - b <phi, gbar> gamma + b <f, gbar> xi| with g phase-fixed so <G, gbar> >= 0

    the pairing <F, gbar> is the bilinear (1/pi) integral of F g
    """
    if neu_K != pair.K or g.size != indices(Bc.NEU, neu_K).size:
        raise errors.FrameMismatchError(f"Per frame K({pair.K}) against Neu frame K({neu_K}) of size {g.size}")
    gram = neumann_gram(pair.indices, neu_K)
    g = g / np.linalg.norm(g)
    raw = complex(matched.vector @ gram @ g)
    if raw:
        g = g * np.conj(raw) / abs(raw)
    pairing = complex(matched.vector @ gram @ g).real
    phi_pairing = complex(pair.phi @ gram @ g)
    f_pairing = complex(pair.f @ gram @ g)
    residual = abs(pairing * delta_neu - matched.b * phi_pairing * pair.gamma + matched.b * f_pairing * pair.xi)
    return DeviationReport(
        pair.n,
        residual,
        pairing,
        phi_pairing,
        f_pairing,
        math.sqrt(max(2 - 2 * pairing, 0.0)),
        complex(np.vdot(matched.vector, pair.f)),
    )
