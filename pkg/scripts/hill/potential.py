# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import functools
import json
import math
import os
import types
from collections.abc import Mapping
from typing import Any, Self

import numpy as np

from hill import errors

FAMILIES = ("zero", "mathieu", "delta_comb", "gasymov", "sawtooth", "random_weighted", "custom")
WEIGHT_FAMILIES = ("sobolev", "exponential", "gevrey")

DEFAULT_BAND_LIMIT = 64
DEFAULT_X0 = math.pi / 2

type ComplexArray = np.ndarray[Any, np.dtype[np.complex128]]
type FloatArray = np.ndarray[Any, np.dtype[np.float64]]
type IntArray = np.ndarray[Any, np.dtype[np.int64]]


@dataclasses.dataclass(frozen=True, eq=False)
class PotentialSpec:
    """
    band-limited Q(x) = sum q_k exp(ikx) over even k, |k| <= 2 * band_limit

    the potential itself is v = Q', q_0 is always 0
    """

    q_coeffs: Mapping[int, complex]
    band_limit: int
    family_tag: str = "custom"
    params: Mapping[str, float] = dataclasses.field(default_factory=lambda: types.MappingProxyType({}))

    @functools.cached_property
    def _dense(self: Self) -> ComplexArray:
        dense = np.zeros(4 * self.band_limit + 1, np.complex128)
        for k, q in self.q_coeffs.items():
            dense[k + 2 * self.band_limit] = q
        return dense

    @functools.cached_property
    def support(self: Self) -> IntArray:
        return np.array(sorted(k for k, q in self.q_coeffs.items() if q != 0), np.int64)

    def q(self: Self, k: Any) -> Any:
        ks = np.asarray(k, np.int64)
        out = np.zeros(ks.shape, np.complex128)
        mask = np.abs(ks) <= 2 * self.band_limit
        out[mask] = self._dense[ks[mask] + 2 * self.band_limit]
        return out if out.ndim else complex(out)

    def is_real(self: Self, tol: float = 1e-14) -> bool:
        return all(abs(q - np.conj(self.q_coeffs.get(-k, 0))) <= tol for k, q in self.q_coeffs.items())

    def is_even(self: Self, tol: float = 1e-14) -> bool:
        # Q odd <=> v = Q' even
        return all(abs(q + self.q_coeffs.get(-k, 0)) <= tol for k, q in self.q_coeffs.items())


@dataclasses.dataclass(frozen=True)
class Weight:
    family: str = "sobolev"
    a: float = 0.0
    c: float = 0.0
    g: float = 1.0

    def __post_init__(self: Self) -> None:
        if self.family not in WEIGHT_FAMILIES:
            raise errors.BadParamError(f"unknown weight family({self.family}), expected one of {WEIGHT_FAMILIES}")
        if self.a < 0 or self.c < 0:
            raise errors.BadParamError(f"weight parameters must be nonnegative, got a({self.a}) c({self.c})")
        if not 0 < self.g <= 1:
            raise errors.BadParamError(f"gevrey index must be in (0, 1], got g({self.g})")

    def omega(self: Self, m: Any) -> FloatArray:
        m = np.abs(np.asarray(m, np.float64))
        match self.family:
            case "sobolev":
                return (1 + m) ** self.a
            case "exponential":
                return np.exp(self.c * m)
            case _:
                return np.exp(self.c * m**self.g)

    def capital(self: Self, m: Any) -> FloatArray:
        m = np.abs(np.asarray(m, np.float64))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(m > 0, self.omega(m) / np.where(m > 0, m, 1), 0.0)

    def is_submultiplicative(self: Self, samples: int = 256, high: int = 512, seed: int = 0) -> bool:
        rng = np.random.default_rng(seed)
        k, m = rng.integers(0, high, (2, samples))
        return bool(np.all(self.omega(k + m) <= self.omega(k) * self.omega(m) * (1 + 1e-12)))

    @classmethod
    def from_params(cls: type[Self], family: str, params: Mapping[str, Any] | None = None) -> Self:
        params = params or {}
        return cls(family, float(params.get("a", 0.0)), float(params.get("c", 0.0)), float(params.get("g", 1.0)))


def make_potential(coeffs: Mapping[int, complex], family_tag: str = "custom", params: Mapping[str, float] | None = None) -> PotentialSpec:
    q_coeffs: dict[int, complex] = {}
    for k, q in coeffs.items():
        k = int(k)
        if k % 2:
            raise errors.OddIndexError(f"coefficient index({k}) is odd, Q must be pi-periodic")
        q = complex(q)
        if not (math.isfinite(q.real) and math.isfinite(q.imag)):
            raise errors.NonFiniteError(f"coefficient q_{k}({q}) is not finite")
        if k and q:
            q_coeffs[k] = q
    band_limit = max(1, math.ceil(max((abs(k) for k in q_coeffs), default=0) / 2))
    return PotentialSpec(types.MappingProxyType(q_coeffs), band_limit, family_tag, types.MappingProxyType(dict(params or {})))


def v_plus(p: PotentialSpec, k: Any) -> Any:
    return 1j * np.asarray(k) * p.q(k) if np.ndim(k) else 1j * int(k) * p.q(k)


def exp_integral(m: Any) -> ComplexArray:
    """integral of exp(imx) over [0, pi] for integer m"""
    m = np.asarray(m, np.int64)
    safe = np.where(m == 0, 1, m)
    return np.where(m == 0, math.pi + 0j, (np.where(m % 2, -2.0, 0.0)) / (1j * safe))


def sine_cosine_coeffs(p: PotentialSpec, kmax: int) -> tuple[ComplexArray, ComplexArray]:
    """
    coefficients of Q against sqrt(2) sin kx and {1, sqrt(2) cos kx} on [0, pi], 0 <= k <= kmax

    closed form, every basis integral is a combination of exp_integral values
    """
    if kmax < 1:
        raise errors.BadParamError(f"kmax({kmax}) must be >= 1")
    ks = np.arange(kmax + 1)
    qs = p.support
    if not qs.size:
        return np.zeros(kmax + 1, np.complex128), np.zeros(kmax + 1, np.complex128)
    cq = p.q(qs)
    plus = exp_integral(qs[:, None] + ks[None, :])
    minus = exp_integral(qs[:, None] - ks[None, :])
    sin_part = (plus - minus) / 2j
    cos_part = (plus + minus) / 2
    dirichlet = math.sqrt(2) / math.pi * (cq @ sin_part)
    neumann = math.sqrt(2) / math.pi * (cq @ cos_part)
    dirichlet[0] = 0
    neumann[0] = (cq @ exp_integral(qs)) / math.pi
    return dirichlet, neumann


def v_tilde(p: PotentialSpec, kmax: int) -> ComplexArray:
    dirichlet, _ = sine_cosine_coeffs(p, kmax)
    return np.arange(kmax + 1) * dirichlet


def evaluate_q(p: PotentialSpec, x: Any) -> Any:
    x = np.asarray(x, np.float64)
    qs = p.support
    return np.exp(1j * np.multiply.outer(x, qs)) @ p.q(qs) if qs.size else np.zeros(x.shape, np.complex128)


def fejer_q(p: PotentialSpec, x: Any) -> Any:
    """Fejér (Cesàro) mean of the partial sums of Q, classical value at continuity points of Q"""
    x = np.asarray(x, np.float64)
    qs = p.support
    if not qs.size:
        return np.zeros(x.shape, np.complex128)
    weights = 1 - np.abs(qs // 2) / (p.band_limit + 1)
    return np.exp(1j * np.multiply.outer(x, qs)) @ (weights * p.q(qs))


def has_exact_q(p: PotentialSpec) -> bool:
    return p.family_tag in {"delta_comb", "sawtooth", "zero"}


def exact_q(p: PotentialSpec, x: Any) -> Any:
    """exact (not band-limited) Q for the step families: jump s at x0, slope -s/pi, mean zero"""
    if not has_exact_q(p):
        raise errors.BadParamError(f"family({p.family_tag}) has no exact step representation")
    x = np.mod(np.asarray(x, np.float64), math.pi)
    s, x0 = p.params.get("s", 0.0), p.params.get("x0", 0.0)
    return s * (np.where(x >= x0, 1.0, 0.0) - x / math.pi) + s * (x0 / math.pi - 0.5)


def weighted_potential_norm(p: PotentialSpec, w: Weight) -> float:
    qs = p.support
    if not qs.size:
        return 0.0
    # v is stored on 2Z, the weighted space is indexed by k / 2
    v = 1j * qs * p.q(qs)
    return float(np.sqrt(np.sum(np.abs(v) ** 2 * w.capital(qs // 2) ** 2)))


def conjugate(p: PotentialSpec) -> PotentialSpec:
    return make_potential({-k: np.conj(q) for k, q in p.q_coeffs.items()})


def shift(p: PotentialSpec, theta: float) -> PotentialSpec:
    return make_potential({k: q * np.exp(1j * k * theta) for k, q in p.q_coeffs.items()})


def _band_limit(params: Mapping[str, Any]) -> int:
    band_limit = int(params.get("F", DEFAULT_BAND_LIMIT))
    if band_limit < 1:
        raise errors.BadParamError(f"band limit F({band_limit}) must be positive")
    return band_limit


def _nonzero(params: Mapping[str, Any], key: str = "s") -> float:
    value = float(params.get(key, 1.0))
    if value == 0:
        raise errors.BadParamError(f"{key}(0) would give the zero potential")
    return value


def _step_coeffs(s: float, x0: float, band_limit: int) -> dict[int, complex]:
    return {k: s * np.exp(-1j * k * x0) / (1j * math.pi * k) for k in range(-2 * band_limit, 2 * band_limit + 1, 2) if k}


def builtin(family: str, params: Mapping[str, Any] | None = None) -> PotentialSpec:
    params = dict(params or {})
    match family:
        case "zero":
            return make_potential({}, "zero")
        case "mathieu":
            c = float(params.get("c", 1.0))
            # Q = c sin 2x, v = 2c cos 2x
            return make_potential({2: -0.5j * c, -2: 0.5j * c}, "mathieu", {"c": c})
        case "delta_comb":
            s, band_limit = _nonzero(params), _band_limit(params)
            x0 = float(params.get("x0", DEFAULT_X0))
            if not 0 < x0 < math.pi:
                raise errors.BadParamError(f"x0({x0}) must lie inside (0, pi)")
            return make_potential(_step_coeffs(s, x0, band_limit), "delta_comb", {"s": s, "x0": x0, "F": band_limit})
        case "sawtooth":
            s, band_limit = _nonzero(params), _band_limit(params)
            return make_potential(_step_coeffs(s, 0.0, band_limit), "sawtooth", {"s": s, "x0": 0.0, "F": band_limit})
        case "gasymov":
            s, band_limit = _nonzero(params), _band_limit(params)
            r = float(params.get("r", 0.5))
            if not 0 < r < 1:
                raise errors.BadParamError(f"r({r}) must lie inside (0, 1)")
            return make_potential({k: s * r**k for k in range(2, 2 * band_limit + 1, 2)}, "gasymov", {"s": s, "r": r, "F": band_limit})
        case "random_weighted":
            return _random_weighted(params)
        case _:
            raise errors.BadParamError(f"unknown family({family}), expected one of {FAMILIES[:-1]}")


def _random_weighted(params: Mapping[str, Any]) -> PotentialSpec:
    s, band_limit = _nonzero(params), _band_limit(params)
    weight = params.get("weight")
    if not isinstance(weight, Weight):
        weight = Weight.from_params(str(weight or "sobolev"), params)
    seed = int(params.get("seed", 42))
    rng = np.random.default_rng(seed)
    js = np.arange(1, band_limit + 1)
    # |v_j| Omega(j) ~ j^-0.51 keeps the weighted norm finite but only just
    magnitude = s * rng.uniform(0.5, 1.5, js.size) / (weight.capital(js) * js**0.51)
    phase = np.exp(2j * math.pi * rng.random(js.size))
    coeffs: dict[int, complex] = {}
    for j, v in zip(js, magnitude * phase):
        k = int(2 * j)
        coeffs[k] = v / (1j * k)
        coeffs[-k] = np.conj(coeffs[k])
    target = s * math.sqrt(2 * float(np.sum(js**-1.02)))
    return make_potential(
        coeffs,
        "random_weighted",
        {"s": s, "seed": seed, "F": band_limit, "a": weight.a, "c": weight.c, "g": weight.g, "target_norm": target},
    )


def load_potential(path: str) -> PotentialSpec:
    with open(path, encoding="utf-8") as file:
        data = json.load(file)
    if "family" in data:
        return builtin(data["family"], data.get("params"))
    if "coeffs" not in data:
        raise errors.BadParamError(f"'{path}' has neither 'family' nor 'coeffs'")
    coeffs: dict[int, complex] = {}
    for row in data["coeffs"]:
        k, re, im = row
        if not float(k).is_integer():
            raise errors.BadParamError(f"coefficient index({k}) is not an integer")
        coeffs[int(k)] = coeffs.get(int(k), 0) + complex(re, im)
    return make_potential(coeffs)


def dump_potential(p: PotentialSpec, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        json.dump({"coeffs": [[int(k), q.real, q.imag] for k, q in sorted(p.q_coeffs.items())]}, file, indent=4)
    return path
