# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import enum
import math
import os
import warnings
from typing import Any, Self

import numpy as np
import pandas as pd
import scipy.linalg

from hill import errors, potential
from hill.potential import ComplexArray, FloatArray, IntArray, PotentialSpec

MIN_TRUNCATION = 4
FREE_SPECTRUM_TOL = 1e-13
NEAR_SINGULAR_COND = 1e12
RADIUS_POLICIES = ("fixed_quarter", "shrinking")


class Bc(enum.StrEnum):
    PER_PLUS = "per+"
    PER_MINUS = "per-"
    DIR = "dir"
    NEU = "neu"

    @property
    def periodic(self: Self) -> bool:
        return self in {Bc.PER_PLUS, Bc.PER_MINUS}

    @classmethod
    def for_mode(cls: type[Self], n: int) -> "Bc":
        # periodic for even n, antiperiodic for odd n
        return Bc.PER_MINUS if n % 2 else Bc.PER_PLUS

    @property
    def disc_count(self: Self) -> int:
        return 2 if self.periodic else 1


def indices(bc: Bc, K: int) -> IntArray:
    match bc:
        case Bc.PER_PLUS:
            return np.arange(-2 * K, 2 * K + 1, 2, dtype=np.int64)
        case Bc.PER_MINUS:
            return np.arange(-2 * K - 1, 2 * K + 2, 2, dtype=np.int64)
        case Bc.DIR:
            return np.arange(1, 2 * K + 1, dtype=np.int64)
        case Bc.NEU:
            return np.arange(0, 2 * K + 1, dtype=np.int64)


@dataclasses.dataclass(frozen=True, eq=False)
class TruncatedOperator:
    bc: Bc
    K: int
    indices: IntArray
    matrix: ComplexArray

    @property
    def size(self: Self) -> int:
        return self.indices.size

    @property
    def free_diagonal(self: Self) -> FloatArray:
        return (self.indices**2).astype(np.float64)

    @property
    def potential_part(self: Self) -> ComplexArray:
        return self.matrix - np.diag(self.free_diagonal)

    def position(self: Self, k: int) -> int:
        where = np.flatnonzero(self.indices == k)
        if not where.size:
            raise errors.ModeOutsideWindowError(f"mode({k}) not in the {self.bc} window of K({self.K})")
        return int(where[0])

    def free_modes(self: Self, n: int) -> list[int]:
        """positions of the free eigenvectors with eigenvalue n^2"""
        return [self.position(k) for k in ((n, -n) if self.bc.periodic and n else (n,))]


def _periodic_part(p: PotentialSpec, idx: IntArray) -> ComplexArray:
    diff = idx[:, None] - idx[None, :]
    return potential.v_plus(p, diff)


def _dirichlet_part(p: PotentialSpec, idx: IntArray) -> ComplexArray:
    vt = potential.v_tilde(p, 2 * int(idx.max()))
    k, m = idx[:, None], idx[None, :]
    return (vt[np.abs(k - m)] - vt[k + m]) / math.sqrt(2)


def _neumann_part(p: PotentialSpec, idx: IntArray) -> ComplexArray:
    vt = potential.v_tilde(p, 2 * int(idx.max()))
    k, m = idx[:, None], idx[None, :]
    # the 0 <-> m coupling is vt(m) both ways, the form is symmetric
    weight = np.where((k == 0) | (m == 0), 0.5, 1 / math.sqrt(2))
    return weight * (vt[np.abs(k - m)] + vt[k + m])


def build_matrix(p: PotentialSpec, bc: Bc | str, K: int) -> TruncatedOperator:
    bc = Bc(bc)
    if K < MIN_TRUNCATION:
        raise errors.TruncationTooSmallError(f"K({K}) must be >= {MIN_TRUNCATION}")
    if K < 2 * p.band_limit:
        warnings.warn(f"K({K}) < 2F({2 * p.band_limit}), the window cuts the potential band", stacklevel=2)
    idx = indices(bc, K)
    match bc:
        case Bc.PER_PLUS | Bc.PER_MINUS:
            part = _periodic_part(p, idx)
        case Bc.DIR:
            part = _dirichlet_part(p, idx)
        case Bc.NEU:
            part = _neumann_part(p, idx)
    matrix = np.asarray(part, np.complex128) + np.diag((idx**2).astype(np.complex128))
    matrix.setflags(write=False)
    idx.setflags(write=False)
    return TruncatedOperator(bc, K, idx, matrix)


def disc_radius(n: int, policy: str = "fixed_quarter") -> float:
    """radius r_n of the disc D_n around n^2"""
    if n < 1:
        raise errors.BadParamError(f"n({n}) must be >= 1")
    match policy:
        case "fixed_quarter":
            r = n / 4
        case "shrinking":
            r = n / math.log(n) if n > 1 else math.inf
        case _:
            raise errors.BadParamError(f"unknown radius policy({policy}), known: {RADIUS_POLICIES}")
    if not r < n - 0.5:
        raise errors.OverlappingDiscsError(f"r({r:.4g}) >= n - 1/2 for n({n}) under {policy}, discs overlap")
    return r


def sqrt_branch(z: Any) -> Any:
    """z^(1/2) = |z|^(1/2) exp(i theta / 2) with theta in [0, 2 pi)"""
    z = np.asarray(z, np.complex128)
    theta = np.mod(np.angle(z), 2 * math.pi)
    return np.sqrt(np.abs(z)) * np.exp(0.5j * theta)


def _k_diagonal(idx: IntArray, lam: complex) -> ComplexArray:
    d = lam - idx**2
    if np.any(np.abs(d) <= FREE_SPECTRUM_TOL):
        raise errors.OnSpectrumOfFreeError(f"lambda({lam}) is a free eigenvalue m^2")
    return 1 / sqrt_branch(d)


def k_lambda(bc: Bc | str, K: int, lam: complex) -> ComplexArray:
    return np.diag(_k_diagonal(indices(Bc(bc), K), lam))


def kvk(op: TruncatedOperator, lam: complex) -> ComplexArray:
    k = _k_diagonal(op.indices, lam)
    return k[:, None] * op.potential_part * k[None, :]


def kvk_norm(p: PotentialSpec, bc: Bc | str, K: int, lam: complex) -> tuple[float, float]:
    a = kvk(build_matrix(p, bc, K), lam)
    return float(scipy.linalg.norm(a, 2)), float(scipy.linalg.norm(a, "fro"))


def hs_bound(p: PotentialSpec, bc: Bc | str, K: int, lam: complex) -> float:
    """finite double sum sum (k-m)^2 |Q^Dir_|k-m||^2 / (|lam-k^2| |lam-m^2|) bounding ||KVK||_HS^2"""
    idx = indices(Bc(bc), K)
    # sine/cosine windows are folded onto +-idx so both |k-m| and k+m differences appear
    ext = np.unique(np.concatenate((idx, -idx)))
    dirichlet, _ = potential.sine_cosine_coeffs(p, 2 * int(ext.max()) + 1)
    diff = np.abs(ext[:, None] - ext[None, :])
    dist = np.abs(lam - ext**2)
    return float(np.sum(diff**2 * np.abs(dirichlet[diff]) ** 2 / (dist[:, None] * dist[None, :])))


def free_resolvent(op: TruncatedOperator, lam: complex) -> ComplexArray:
    return np.diag(_k_diagonal(op.indices, lam) ** 2)


def resolvent(op: TruncatedOperator, lam: complex, max_cond: float = NEAR_SINGULAR_COND) -> ComplexArray:
    a = lam * np.eye(op.size) - op.matrix
    try:
        inverse = scipy.linalg.solve(a, np.eye(op.size, dtype=np.complex128), check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise errors.NearSingularError(f"lambda({lam}) got '{exc}'") from exc
    # 1-norm condition number, exact since the full inverse is at hand
    cond = float(np.abs(a).sum(0).max() * np.abs(inverse).sum(0).max())
    if not cond < max_cond:
        raise errors.NearSingularError(f"lambda({lam}) condition({cond:.3g}) > {max_cond:.3g}")
    return inverse


def resolvent_series(op: TruncatedOperator, lam: complex, terms: int = 20) -> tuple[ComplexArray, float]:
    """
    R0 + sum_{s=1}^{terms} K (KVK)^s K and the a priori tail bound 2 ||K||^2 ||KVK||^(terms+1)

    the bound assumes ||KVK|| <= 1/2
    """
    k = _k_diagonal(op.indices, lam)
    a = k[:, None] * op.potential_part * k[None, :]
    total = np.eye(op.size, dtype=np.complex128)
    power = np.eye(op.size, dtype=np.complex128)
    for _ in range(terms):
        power = power @ a
        total += power
    norm_k = float(np.abs(k).max())
    norm_a = float(scipy.linalg.norm(a, 2))
    return k[:, None] * total * k[None, :], 2 * norm_k**2 * norm_a ** (terms + 1)


def dump_matrix(op: TruncatedOperator, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    cells = np.vectorize(lambda z: f"{float(z.real)!r},{float(z.imag)!r}", otypes=[str])(op.matrix)
    pd.DataFrame(cells, index=op.indices, columns=op.indices).to_csv(path, sep=";")
    return path
