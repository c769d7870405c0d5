# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import math
import warnings
from collections.abc import Callable, Sequence
from typing import Any, Self

import numpy as np

from hill import errors, potential
from hill.operator_matrix import Bc
from hill.potential import ComplexArray, FloatArray, PotentialSpec

MIN_STEPS = 512
STEPS_PER_UNIT = 64
GRID_PER_UNIT = 8
ORACLE_TOL = 1e-10
EXACT_FAMILIES = frozenset({"zero", "delta_comb"})

_SQRT3 = math.sqrt(3)
_GAUSS = (0.5 - _SQRT3 / 6, 0.5 + _SQRT3 / 6)
_CIRCLE = np.exp(2j * math.pi * np.arange(8) / 8)

type Window = tuple[complex, complex]
type Target = Callable[[ComplexArray], tuple[ComplexArray, ComplexArray, FloatArray]]


@dataclasses.dataclass(frozen=True)
class MonodromyResult:
    """propagator over [0, pi] of y' = Qy + u, u' = -(lam + Q^2) y - Qu with M(0) = I"""

    lam: complex
    matrix: ComplexArray
    dmatrix: ComplexArray
    steps: int = 0
    error: float = 0.0

    @property
    def discriminant(self: Self) -> complex:
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def det(self: Self) -> complex:
        return complex(self.matrix[0, 0] * self.matrix[1, 1] - self.matrix[0, 1] * self.matrix[1, 0])


def exact_supported(p: PotentialSpec) -> bool:
    return p.family_tag in EXACT_FAMILIES


def effective_band(p: PotentialSpec, rel: float = 1e-16) -> int:
    qs = p.support
    if not qs.size:
        return 0
    mags = np.abs(p.q(qs))
    return int(np.abs(qs[mags >= rel * mags.max()]).max())


def steps_for(p: PotentialSpec, lam_abs: float, per_unit: int = STEPS_PER_UNIT) -> int:
    steps = max(MIN_STEPS, per_unit * math.ceil(math.sqrt(lam_abs) + effective_band(p)))
    return steps + steps % 2


def _magnus_coeffs(p: PotentialSpec, steps: int) -> tuple[ComplexArray, ...]:
    """
    per-step Magnus exponent split as P + lam R, both trace free

    returns (pa, pb, pc, ra, rb, rc) for [[a, b], [c, -a]]
    """
    h = math.pi / steps
    x0 = np.arange(steps) * h
    q1 = np.asarray(potential.evaluate_q(p, x0 + _GAUSS[0] * h), np.complex128)
    q2 = np.asarray(potential.evaluate_q(p, x0 + _GAUSS[1] * h), np.complex128)
    w = _SQRT3 * h * h / 12
    # A_i = B_i + lam N, B_i = [[q_i, 1], [-q_i^2, -q_i]], N = [[0, 0], [-1, 0]]
    # [A2, A1] = [B2, B1] + lam [B2 - B1, N]
    dq = q2 - q1
    pa = 0.5 * h * (q1 + q2) + w * (q2 * q2 - q1 * q1)
    pb = h + w * 2 * dq
    pc = -0.5 * h * (q1 * q1 + q2 * q2) - w * 2 * q1 * q2 * dq
    ra = np.zeros(steps, np.complex128)
    rb = np.zeros(steps, np.complex128)
    rc = -h + w * 2 * dq
    return pa, pb, pc, ra, rb, rc


def _sinhc(root: ComplexArray) -> ComplexArray:
    return np.sinc(1j * root / math.pi)


def _dsinhc(w: ComplexArray, cosh: ComplexArray, sinhc: ComplexArray) -> ComplexArray:
    """d/dw of sinh(sqrt w) / sqrt w"""
    small = np.abs(w) < 0.1
    safe = np.where(small, 1, w)
    series = 1 / 6 + w * (1 / 60 + w * (1 / 1680 + w * (1 / 90720 + w / 7983360)))
    return np.where(small, series, (cosh - sinhc) / (2 * safe))


def _magnus(p: PotentialSpec, lams: ComplexArray, steps: int) -> tuple[ComplexArray, ComplexArray]:
    pa, pb, pc, ra, rb, rc = _magnus_coeffs(p, steps)
    one = np.ones(lams.shape, np.complex128)
    zero = np.zeros(lams.shape, np.complex128)
    m00, m01, m10, m11 = one, zero, zero, one
    d00, d01, d10, d11 = zero, zero, zero, zero
    for j in range(steps):
        a = pa[j] + lams * ra[j]
        b = pb[j] + lams * rb[j]
        c = pc[j] + lams * rc[j]
        w = a * a + b * c
        root = np.sqrt(w)
        ch = np.cosh(root)
        sh = _sinhc(root)
        dsh = _dsinhc(w, ch, sh)
        dw = 2 * a * ra[j] + b * rc[j] + c * rb[j]
        e00, e01, e10, e11 = ch + sh * a, sh * b, sh * c, ch - sh * a
        dc, ds = 0.5 * sh * dw, dsh * dw
        f00 = dc + ds * a + sh * ra[j]
        f01 = ds * b + sh * rb[j]
        f10 = ds * c + sh * rc[j]
        f11 = dc - ds * a - sh * ra[j]
        d00, d01, d10, d11 = (
            f00 * m00 + f01 * m10 + e00 * d00 + e01 * d10,
            f00 * m01 + f01 * m11 + e00 * d01 + e01 * d11,
            f10 * m00 + f11 * m10 + e10 * d00 + e11 * d10,
            f10 * m01 + f11 * m11 + e10 * d01 + e11 * d11,
        )
        m00, m01, m10, m11 = e00 * m00 + e01 * m10, e00 * m01 + e01 * m11, e10 * m00 + e11 * m10, e10 * m01 + e11 * m11
        if not j % 256 and not np.all(np.isfinite(m00)):
            raise errors.StepFailureError(f"non-finite propagator at step {j} of {steps}")
    matrix = np.stack((np.stack((m00, m01), -1), np.stack((m10, m11), -1)), -2)
    dmatrix = np.stack((np.stack((d00, d01), -1), np.stack((d10, d11), -1)), -2)
    if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(dmatrix))):
        raise errors.StepFailureError(f"non-finite propagator after {steps} steps")
    return matrix, dmatrix


def _transfer(w: ComplexArray, length: float) -> ComplexArray:
    c = np.cos(w * length)
    s = length * np.sinc(w * length / math.pi)
    return np.stack((np.stack((c, s), -1), np.stack((-w * w * s, c), -1)), -2)


def _exact_matrix(p: PotentialSpec, lams: ComplexArray) -> ComplexArray:
    s = float(p.params.get("s", 0.0))
    x0 = float(p.params.get("x0", 0.0))
    q0 = complex(potential.exact_q(p, 0.0))
    w = np.sqrt(lams + s / math.pi + 0j)
    jump = np.array([[1, 0], [s, 1]], np.complex128)
    classical = _transfer(w, math.pi - x0) @ jump @ _transfer(w, x0)
    # (y, y') -> (y, y' - Q y), Q(0) = Q(pi)
    to_quasi = np.array([[1, 0], [-q0, 1]], np.complex128)
    from_quasi = np.array([[1, 0], [q0, 1]], np.complex128)
    return to_quasi @ classical @ from_quasi


def _exact(p: PotentialSpec, lams: ComplexArray) -> tuple[ComplexArray, ComplexArray]:
    matrix = _exact_matrix(p, lams)
    h = 1e-2 * np.sqrt(1 + np.abs(lams))
    # 8-point Cauchy derivative, exact for polynomials of degree < 8 in lam
    around = _exact_matrix(p, (lams[:, None] + h[:, None] * _CIRCLE[None, :]).ravel()).reshape((*lams.shape, _CIRCLE.size, 2, 2))
    dmatrix = np.einsum("ljab,j->lab", around, 1 / _CIRCLE) / (_CIRCLE.size * h[:, None, None])
    return matrix, dmatrix


def propagate(
    p: PotentialSpec,
    lams: Any,
    steps: int | None = None,
    exact: bool | None = None,
    richardson: bool = True,
    per_unit: int = STEPS_PER_UNIT,
) -> tuple[ComplexArray, ComplexArray, FloatArray, int]:
    """
    batched monodromy, returns (M, dM/dlam, error estimate, steps)

    exact closed form for the step families, Magnus otherwise with an optional Richardson step
    """
    lams = np.atleast_1d(np.asarray(lams, np.complex128))
    if exact is None:
        exact = exact_supported(p)
    if exact:
        if not exact_supported(p):
            raise errors.BadParamError(f"family({p.family_tag}) has no exact propagator, known: {sorted(EXACT_FAMILIES)}")
        matrix, dmatrix = _exact(p, lams)
        return matrix, dmatrix, np.zeros(lams.shape), 0
    if steps is None:
        steps = steps_for(p, float(np.abs(lams).max(initial=0.0)), per_unit)
    if steps < 2:
        raise errors.BadParamError(f"steps({steps}) must be >= 2")
    matrix, dmatrix = _magnus(p, lams, steps)
    if not richardson:
        return matrix, dmatrix, np.full(lams.shape, np.nan), steps
    fine, dfine = _magnus(p, lams, 2 * steps)
    # symmetric method, the error expands in even powers of h
    error = np.abs(fine - matrix).max((-2, -1)) / 15
    return (16 * fine - matrix) / 15, (16 * dfine - dmatrix) / 15, error, 2 * steps


def monodromy(
    p: PotentialSpec,
    lam: complex,
    steps: int | None = None,
    exact: bool | None = None,
    richardson: bool = False,
    per_unit: int = STEPS_PER_UNIT,
) -> MonodromyResult:
    matrix, dmatrix, error, used = propagate(p, [lam], steps, exact, richardson, per_unit)
    return MonodromyResult(complex(lam), matrix[0], dmatrix[0], used, float(error[0]) if richardson else 0.0)


def target(bc: Bc | str, matrix: ComplexArray, dmatrix: ComplexArray) -> tuple[ComplexArray, ComplexArray]:
    """scalar function whose zeros are the bc eigenvalues, and its lam derivative"""
    match Bc(bc):
        case Bc.PER_PLUS:
            return matrix[..., 0, 0] + matrix[..., 1, 1] - 2, dmatrix[..., 0, 0] + dmatrix[..., 1, 1]
        case Bc.PER_MINUS:
            return matrix[..., 0, 0] + matrix[..., 1, 1] + 2, dmatrix[..., 0, 0] + dmatrix[..., 1, 1]
        case Bc.DIR:
            return matrix[..., 0, 1], dmatrix[..., 0, 1]
        case Bc.NEU:
            return matrix[..., 1, 0], dmatrix[..., 1, 0]


def _target_func(p: PotentialSpec, bc: Bc, exact: bool | None, richardson: bool, per_unit: int) -> Target:
    def func(lams: ComplexArray) -> tuple[ComplexArray, ComplexArray, FloatArray]:
        matrix, dmatrix, error, _ = propagate(p, lams, None, exact, richardson, per_unit)
        value, slope = target(bc, matrix, dmatrix)
        # error of the scalar target is at most twice the entrywise one
        return value, slope, 2 * error

    return func


def _illinois(func: Callable[[FloatArray], FloatArray], a: FloatArray, b: FloatArray, fa: FloatArray, fb: FloatArray, xtol: float = 1e-15, max_iter: int = 80) -> FloatArray:
    """vectorized Illinois regula falsi, fa * fb < 0 on entry"""
    a, b, fa, fb = (np.array(v, np.float64) for v in (a, b, fa, fb))
    for _ in range(max_iter):
        active = (np.abs(b - a) > xtol * (1 + np.abs(b))) & (fb != 0)
        if not active.any():
            break
        c = b.copy()
        denom = fb[active] - fa[active]
        c[active] = np.where(denom != 0, (a[active] * fb[active] - b[active] * fa[active]) / np.where(denom != 0, denom, 1), 0.5 * (a[active] + b[active]))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        outside = active & ((c <= lo) | (c >= hi))
        c[outside] = 0.5 * (a[outside] + b[outside])
        stalled = active & (c == b)
        if stalled.all() or not (active & ~stalled).any():
            break
        active &= ~stalled
        fc = fb.copy()
        fc[active] = func(c[active])
        flip = active & (fc * fb < 0)
        keep = active & ~flip
        a[flip], fa[flip] = b[flip], fb[flip]
        fa[keep] *= 0.5
        b[active], fb[active] = c[active], fc[active]
    return b


def _real_grid(lo: float, hi: float, per_unit: int) -> FloatArray:
    parts: list[FloatArray] = []
    if lo < 0:
        parts.append(np.linspace(lo, min(hi, 0.0), max(8, math.ceil(per_unit * (min(hi, 0.0) - lo) / 4) + 1)))
    if hi > 0:
        t0, t1 = math.sqrt(max(lo, 0.0)), math.sqrt(hi)
        parts.append(np.linspace(t0, t1, max(16, math.ceil(per_unit * (t1 - t0)) + 1)) ** 2)
    return np.unique(np.concatenate(parts))


def _real_roots(func: Target, windows: Sequence[tuple[float, float]], periodic: bool, tol: float, grid_per_unit: int) -> list[list[float]]:
    """sign-change roots per window, all windows share one batched evaluation per sweep"""

    def value(x: FloatArray) -> FloatArray:
        return func(x.astype(np.complex128))[0].real

    def slope(x: FloatArray) -> FloatArray:
        return func(x.astype(np.complex128))[1].real

    grids = [_real_grid(lo, hi, grid_per_unit) for lo, hi in windows]
    f_all, fp_all, _ = func(np.concatenate(grids).astype(np.complex128))
    roots: list[list[float]] = [[] for _ in windows]
    # (window, a, b, fa, fb)
    brackets: list[tuple[int, float, float, float, float]] = []
    critical: list[tuple[int, float, float, float, float, float, float]] = []
    start = 0
    for w, grid in enumerate(grids):
        f, fp = f_all.real[start : start + grid.size], fp_all.real[start : start + grid.size]
        start += grid.size
        roots[w].extend(float(x) for x, v in zip(grid, f) if v == 0)
        for i in range(grid.size - 1):
            if f[i] == 0 or f[i + 1] == 0:
                continue
            if np.sign(f[i]) != np.sign(f[i + 1]):
                brackets.append((w, grid[i], grid[i + 1], f[i], f[i + 1]))
            elif periodic and fp[i] != 0 and np.sign(fp[i]) != np.sign(fp[i + 1]):
                critical.append((w, grid[i], grid[i + 1], fp[i], fp[i + 1], f[i], f[i + 1]))
    if critical:
        _, a, b, fa, fb, _, _ = (np.array(v) for v in zip(*critical))
        centers = _illinois(slope, a, b, fa, fb)
        fc, _, noise = func(centers.astype(np.complex128))
        for (w, a_, b_, _, _, f_lo, f_hi), c, v, e in zip(critical, centers, fc.real, noise):
            if v != 0 and np.sign(v) == -np.sign(f_lo):
                brackets.extend(((w, a_, c, f_lo, v), (w, c, b_, v, f_hi)))
            elif abs(v) <= max(tol, 10 * e if np.isfinite(e) else 0.0):
                # double root below the resolution of the discriminant
                roots[w].extend((float(c), float(c)))
    if brackets:
        owner, a, b, fa, fb = (np.array(v) for v in zip(*brackets))
        for w, r in zip(owner, _illinois(value, a, b, fa, fb)):
            roots[int(w)].append(float(r))
    return [sorted(r) for r in roots]


def _gauss_boundary(lo: complex, hi: complex, nodes: int) -> tuple[ComplexArray, ComplexArray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    corners = (lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag), lo)
    points, weights = [], []
    for start, end in zip(corners, corners[1:]):
        points.append(0.5 * (start + end) + 0.5 * (end - start) * x)
        weights.append(0.5 * (end - start) * w)
    return np.concatenate(points), np.concatenate(weights)


def _moments(func: Target, lo: complex, hi: complex, nodes: int) -> tuple[float, complex, complex, float]:
    center = 0.5 * (lo + hi)
    z, dz = _gauss_boundary(lo, hi, nodes)
    f, fp, _ = func(z)
    g = fp / f * dz / (2j * math.pi)
    shifted = z - center
    return complex(np.sum(g)).real, complex(np.sum(shifted * g)), complex(np.sum(shifted * shifted * g)), float(np.abs(f).min() / max(np.abs(f).max(), 1e-300))


def _count(func: Target, lo: complex, hi: complex) -> tuple[int, complex, complex]:
    nodes = 32
    while True:
        count, s1, s2, margin = _moments(func, lo, hi, nodes)
        m = round(count)
        if abs(count - m) <= 0.05 and margin > 1e-12:
            return m, s1, s2
        if nodes >= 512:
            raise errors.RootCountUnstableError(f"argument principle on [{lo}, {hi}] gave {count:.4f} at {nodes} nodes")
        nodes *= 2


def _newton(func: Target, z: ComplexArray, lo: complex, hi: complex, tol: float = 1e-14, max_iter: int = 30) -> ComplexArray:
    z = z.copy()
    for _ in range(max_iter):
        f, fp, _ = func(z)
        step = np.where(fp != 0, f / np.where(fp != 0, fp, 1), 0)
        z = z - step
        if np.all(np.abs(step) <= tol * (1 + np.abs(z))):
            break
    inside = (z.real >= lo.real) & (z.real <= hi.real) & (z.imag >= lo.imag) & (z.imag <= hi.imag)
    if not inside.all():
        raise errors.RootCountUnstableError(f"Newton left the rectangle [{lo}, {hi}]")
    return z


def _complex_roots(func: Target, lo: complex, hi: complex, depth: int = 0) -> list[complex]:
    m, s1, s2 = _count(func, lo, hi)
    center = 0.5 * (lo + hi)
    if not m:
        return []
    if m <= 2:
        if m == 1:
            guess = np.array([center + s1])
        else:
            disc = np.sqrt(s1 * s1 - 2 * (s1 * s1 - s2))
            guess = center + np.array([0.5 * (s1 + disc), 0.5 * (s1 - disc)])
        if m == 1 or abs(guess[0] - guess[1]) > 1e-6 * (1 + abs(center)):
            guess = _newton(func, guess, lo, hi)
        return [complex(z) for z in guess]
    if depth >= 40 or abs(hi - lo) <= 1e-9 * (1 + abs(center)):
        return [complex(center)] * m
    found: list[complex] = []
    mid = center
    for sub_lo, sub_hi in (
        (lo, mid),
        (complex(mid.real, lo.imag), complex(hi.real, mid.imag)),
        (complex(lo.real, mid.imag), complex(mid.real, hi.imag)),
        (mid, hi),
    ):
        found.extend(_complex_roots(func, sub_lo, sub_hi, depth + 1))
    if len(found) != m:
        raise errors.RootCountUnstableError(f"argument principle counted {m} roots on [{lo}, {hi}], subdivision found {len(found)}")
    return found


def _verified(func: Target, bc: Bc, found: list[list[complex]], tol: float) -> list[list[complex]]:
    flat = [root for roots in found for root in roots]
    if not flat:
        return [[] for _ in found]
    value, slope, noise = func(np.array(flat, np.complex128))
    checks = iter(zip(value, slope, noise))
    out: list[list[complex]] = []
    for roots in found:
        kept: list[complex] = []
        for root in roots:
            v, s, e = next(checks)
            limit = max(tol * max(1.0, abs(s) * (1 + abs(root))), 10 * e if np.isfinite(e) else 0.0)
            if abs(v) <= limit:
                kept.append(root)
            else:
                warnings.warn(f"{bc} root({root}) residual({abs(v):.3g}) above {limit:.3g}, dropped", stacklevel=2)
        out.append(sorted(kept, key=lambda z: (z.real, z.imag)))
    return out


def oracle_spectra(
    p: PotentialSpec,
    bc: Bc | str,
    windows: Sequence[Window],
    tol: float = ORACLE_TOL,
    exact: bool | None = None,
    richardson: bool = True,
    per_unit: int = STEPS_PER_UNIT,
    grid_per_unit: int = GRID_PER_UNIT,
) -> list[list[complex]]:
    """
    roots of the bc target function inside each window

    real windows on a real potential bracket sign changes on a sqrt(lam) uniform grid, anything else
    counts roots on the rectangle spanned by the two corners with the argument principle
    """
    bc = Bc(bc)
    boxes = [(complex(lo), complex(hi)) for lo, hi in windows]
    for lo, hi in boxes:
        if not hi.real > lo.real:
            raise errors.BadParamError(f"window({lo}, {hi}) is empty")
    func = _target_func(p, bc, exact, richardson, per_unit)
    real = p.is_real() and all(lo.imag == hi.imag == 0 for lo, hi in boxes)
    found: list[list[complex]]
    if real:
        found = [[complex(r) for r in roots] for roots in _real_roots(func, [(lo.real, hi.real) for lo, hi in boxes], bc.periodic, tol, grid_per_unit)]
    else:
        found = []
        for lo, hi in boxes:
            if lo.imag == hi.imag:
                half = 0.5 * (hi.real - lo.real)
                lo, hi = complex(lo.real, lo.imag - half), complex(hi.real, hi.imag + half)
            found.append(_complex_roots(func, lo, hi))
    return _verified(func, bc, found, tol)


def oracle_spectrum(
    p: PotentialSpec,
    bc: Bc | str,
    window: Window,
    tol: float = ORACLE_TOL,
    exact: bool | None = None,
    richardson: bool = True,
    per_unit: int = STEPS_PER_UNIT,
    grid_per_unit: int = GRID_PER_UNIT,
) -> list[complex]:
    return oracle_spectra(p, bc, [window], tol, exact, richardson, per_unit, grid_per_unit)[0]


def discriminant_grid(p: PotentialSpec, lams: Any, exact: bool | None = None, richardson: bool = True, per_unit: int = STEPS_PER_UNIT) -> ComplexArray:
    matrix, _, _, _ = propagate(p, lams, None, exact, richardson, per_unit)
    return matrix[..., 0, 0] + matrix[..., 1, 1]


def step_order(p: PotentialSpec, lam: complex, steps: tuple[int, int, int] = (128, 256, 512)) -> float:
    """observed order of the raw Magnus step from three halvings"""
    ms = [propagate(p, [lam], s, exact=False, richardson=False)[0][0] for s in steps]
    return math.log2(float(np.abs(ms[0] - ms[1]).max() / np.abs(ms[1] - ms[2]).max()))
