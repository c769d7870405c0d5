# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import dataclasses
import enum
import math
from collections.abc import Iterable, Mapping
from typing import Any, Self

import numpy as np
import pandas as pd
import scipy.optimize

from hill import errors, riesz_projection
from hill.potential import FloatArray, Weight
from hill.spectral_pairing import SlateRow, SpectralSlate

SANDWICHES: Mapping[str, tuple[float, float]] = {
    "neu": (1 / 80, 19.0),
    "dir": (1 / 72, 58.0),
    "xi": (1 / 5, 9.0),
}
GAMMA_TOL = 1e-10
MIN_POINTS = 8
NO_DECAY_SLOPE = 0.5
SATURATION = 0.05
TAIL_BLOCKS = 4
EXPONENTIAL_CLASSES = frozenset({"exponential", "superexponential", "superexponential/zero"})


class Case(enum.StrEnum):
    CASE_1 = "1"
    CASE_2A = "2a"
    CASE_2B = "2b"

    @property
    def second(self: Self) -> bool:
        return self is not Case.CASE_1


@dataclasses.dataclass(frozen=True)
class Classification:
    n: int
    case: Case
    beta_plus: float
    beta_minus: float
    # |beta+(z*)| + |beta-(z*)| <= 2 |gamma|, Case 1 only
    gamma_bound: bool | None


@dataclasses.dataclass(frozen=True, eq=False)
class SandwichReport:
    frame: pd.DataFrame
    onset: int | None
    artifacts: tuple[int, ...]

    @property
    def passed(self: Self) -> bool:
        resolved = self.frame[self.frame["resolved"]] if not self.frame.empty else self.frame
        return bool(resolved[[f"{name}_pass" for name in SANDWICHES]].all(axis=None)) if not resolved.empty else True


@dataclasses.dataclass(frozen=True, eq=False)
class CriterionReport:
    frame: pd.DataFrame
    sup_neu: float
    sup_dir: float
    inf_beta: float
    verdict: str
    growth_exponent: float
    vacuous: bool
    basis_fails: bool
    flags: tuple[str, ...]


@dataclasses.dataclass(frozen=True, eq=False)
class DecayReport:
    ns: tuple[int, ...]
    label: str
    parameter: float
    partial_sums: FloatArray
    convergence: str
    aic: Mapping[str, float]

    @property
    def is_exponential_class(self: Self) -> bool:
        return self.label in EXPONENTIAL_CLASSES


def _sums(row: SlateRow) -> dict[str, float]:
    gamma = abs(row.gamma)
    return {"neu": gamma + abs(row.delta_neu), "dir": gamma + abs(row.delta_dir), "xi": gamma + abs(row.xi)}


def sandwich_report(slate: SpectralSlate, k_changes: Mapping[int, float] | None = None) -> SandwichReport:
    """
    the three two-sided bounds against |beta+(z*)| + |beta-(z*)| per row

    rows under the resolution floor are reported but do not decide the onset
    """
    records: list[dict[str, Any]] = []
    for row in slate.rows:
        beta = row.beta_sum
        record: dict[str, Any] = {"n": row.n, "beta_sum": beta, "resolved": row.resolved}
        for name, value in _sums(row).items():
            low, high = SANDWICHES[name]
            record[f"{name}_sum"] = value
            record[f"{name}_pass"] = low * beta <= value <= high * beta
        record["k_change"] = (k_changes or {}).get(row.n, math.nan)
        records.append(record)
    frame = pd.DataFrame(records, columns=["n", "beta_sum", "resolved", *(f"{name}_{kind}" for name in SANDWICHES for kind in ("sum", "pass")), "k_change"])
    artifacts = tuple(int(r["n"]) for r in records if r["resolved"] and r["neu_pass"] != r["dir_pass"])
    onset = None
    for r in reversed(records):
        if r["resolved"] and not all(r[f"{name}_pass"] for name in SANDWICHES):
            break
        onset = int(r["n"])
    return SandwichReport(frame, onset, artifacts)


def classify_case(row: SlateRow) -> Classification:
    """Case 1, 2(a) or 2(b) from beta+- at z+ = lambda_plus - n^2"""
    plus, minus = abs(row.beta_plus_zplus), abs(row.beta_minus_zplus)
    if 4 * plus < minus:
        case = Case.CASE_2A
    elif 4 * minus < plus:
        case = Case.CASE_2B
    else:
        case = Case.CASE_1
    bound = row.beta_sum <= 2 * abs(row.gamma) if case is Case.CASE_1 else None
    return Classification(row.n, case, plus, minus, bound)


def _gamma_set(slate: SpectralSlate, tol: float) -> list[SlateRow]:
    return [row for row in slate.rows if abs(row.gamma) > max(tol * row.radius, slate.floor)]


def riesz_criterion(slate: SpectralSlate, tol: float = GAMMA_TOL) -> CriterionReport:
    """
    ratios |delta_neu| / |gamma|, |delta_dir| / |gamma| and |beta-| / |beta+| over the rows with gamma != 0

    a bounded verdict means the running sup stopped moving (within 5%) over the second half of n
    """
    rows = _gamma_set(slate, tol)
    ns = np.array([row.n for row in rows], np.float64)
    neu = np.array([abs(row.delta_neu) / abs(row.gamma) for row in rows])
    dirichlet = np.array([abs(row.delta_dir) / abs(row.gamma) for row in rows])
    beta = np.array([abs(row.beta_minus) / abs(row.beta_plus) if row.beta_plus else math.inf for row in rows])
    frame = pd.DataFrame(
        {
            "n": ns.astype(np.int64),
            "neu_ratio": neu,
            "dir_ratio": dirichlet,
            "beta_ratio": beta,
            "running_sup_neu": np.maximum.accumulate(neu) if neu.size else neu,
        }
    )
    flags: list[str] = []
    vacuous = not rows
    sup_neu = float(neu.max()) if neu.size else 0.0
    sup_dir = float(dirichlet.max()) if dirichlet.size else 0.0
    growth = 0.0
    verdict = "bounded"
    if vacuous:
        flags.append("criterion vacuous")
        fallback = [abs(row.beta_minus) / abs(row.beta_plus) for row in slate.rows if row.beta_plus]
        inf_beta = float(min(fallback)) if fallback else math.nan
    else:
        inf_beta = float(beta.min())
        half = ns <= ns.max() / 2
        if not half.any():
            half = np.arange(ns.size) < max(1, ns.size // 2)
        early = float(neu[half].max())
        if sup_neu > (1 + SATURATION) * early:
            verdict = "unbounded trend"
        if ns.size >= 2 and np.all(neu > 0):
            growth = float(np.polyfit(np.log(ns), np.log(neu), 1)[0])
    basis_fails = verdict != "bounded" or (not math.isnan(inf_beta) and inf_beta <= 1e-12)
    if not math.isnan(inf_beta) and inf_beta <= 1e-12:
        flags.append("basis property fails: inf |beta-|/|beta+| = 0")
    if verdict != "bounded":
        flags.append(f"sup |delta_neu|/|gamma| grows, exponent {growth:.3g}")
    return CriterionReport(frame, sup_neu, sup_dir, inf_beta, verdict, growth, vacuous, basis_fails, tuple(flags))


def _aic(residuals: FloatArray, params: int) -> float:
    m = residuals.size
    return float(m * math.log(max(float(np.sum(residuals**2)) / m, 1e-300)) + 2 * params)


def _convergence(terms: FloatArray) -> str:
    total = float(terms.sum())
    if total == 0:
        return "converges"
    blocks = np.array_split(terms, TAIL_BLOCKS)
    if float(blocks[-1].sum()) <= 1e-3 * total:
        return "converges"
    # array_split leaves the shorter blocks at the end, compare per-term means
    means = [float(b.mean()) for b in blocks]
    if means[-1] >= means[-2] >= means[-3]:
        return "diverges"
    return "inconclusive"


def decay_classify(ns: Iterable[int], seq: Iterable[complex | float], w: Weight, floor: float = 0.0) -> DecayReport:
    """
    weighted partial sums of seq^2 Omega(n)^2 with a tail diagnosis, and a fit of log |seq|
    against power, exponential and stretched exponential decay chosen by AIC
    """
    n = np.asarray(list(ns), np.float64)
    values = np.abs(np.asarray(list(seq), np.complex128))
    if n.size != values.size:
        raise errors.BadParamError(f"got {n.size} indices for {values.size} values")
    if n.size < MIN_POINTS:
        raise errors.InsufficientDataError(f"{n.size} points, need {MIN_POINTS}")
    order = np.argsort(n)
    n, values = n[order], values[order]
    values = np.where(values <= floor, 0.0, values)
    terms = values**2 * w.capital(n) ** 2
    partial = np.cumsum(terms)
    convergence = _convergence(terms)
    nonzero = values > 0
    last = int(np.flatnonzero(nonzero).max()) if nonzero.any() else -1
    # the tail is exactly zero from some n on
    if last < 0 or (last < n.size - 1 and nonzero.sum() < MIN_POINTS // 2) or n.size - 1 - last >= n.size // 4:
        return DecayReport(tuple(int(k) for k in n), "superexponential/zero", math.nan, partial, convergence, {})
    if nonzero.sum() < 3:
        raise errors.InsufficientDataError(f"{int(nonzero.sum())} nonzero points")
    x, y = n[nonzero], np.log(values[nonzero])
    power = np.polyfit(np.log(x), y, 1)
    if -power[0] < NO_DECAY_SLOPE:
        return DecayReport(tuple(int(k) for k in n), "no decay", float(-power[0]), partial, convergence, {})
    exponential = np.polyfit(x, y, 1)
    aic = {
        "power": _aic(y - np.polyval(power, np.log(x)), 2),
        "exponential": _aic(y - np.polyval(exponential, x), 2),
    }
    params = {"power": float(-power[0]), "exponential": float(-exponential[0])}
    try:
        fitted, _ = scipy.optimize.curve_fit(
            lambda t, b, c, g: b - c * t**g,
            x,
            y,
            p0=(float(exponential[1]), max(float(-exponential[0]), 1e-6), 1.0),
            bounds=((-np.inf, 0.0, 0.05), (np.inf, np.inf, 3.0)),
            maxfev=10000,
        )
        b, c, g = (float(v) for v in fitted)
        aic["stretched"] = _aic(y - (b - c * x**g), 3)
        params["stretched"] = g
    except (RuntimeError, ValueError):
        pass
    best = min(aic, key=lambda k: aic[k])
    label = best
    if best == "stretched":
        g = params["stretched"]
        label = "subexponential" if g < 0.9 else "exponential" if g <= 1.1 else "superexponential"
    return DecayReport(tuple(int(k) for k in n), label, params[best], partial, convergence, aic)


def slate_sequences(slate: SpectralSlate) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "n": [row.n for row in slate.rows],
            "gamma": [abs(row.gamma) for row in slate.rows],
            "delta_neu": [abs(row.delta_neu) for row in slate.rows],
            "delta_dir": [abs(row.delta_dir) for row in slate.rows],
        }
    )


def matched_vector_report(slate: SpectralSlate) -> pd.DataFrame:
    """
    matched Neumann vector G per row with its deviation identity and the Case-2 boundary bounds

    columns ending in _ok are None where the bound does not apply to the row
    """
    records: list[dict[str, Any]] = []
    for row in slate.rows:
        pair = row.pair
        case = classify_case(row).case
        try:
            matched = riesz_projection.neumann_matched_vector(pair)
        except errors.NullMatchError as exc:
            records.append({"n": row.n, "case": str(case), "skipped": exc.kind()})
            continue
        dev = riesz_projection.deviation_identity_residual(pair, matched, row.delta_neu, row.g, slate.K)
        value_dev, quasi_dev = riesz_projection.boundary_deviation(pair)
        gamma, delta, xi = abs(row.gamma), abs(row.delta_neu), abs(pair.xi)
        close = dev.pairing >= 71 / 72
        second = case.second
        n = row.n
        records.append(
            {
                "n": n,
                "case": str(case),
                "resolved": row.resolved,
                "skipped": "",
                "pairing": dev.pairing,
                "identity_residual": dev.residual,
                "residual_ok": dev.residual <= 1e-7 * (1 + delta),
                "pairing_ok": close,
                "distance": dev.distance,
                "distance_ok": dev.distance <= 1 / 6 if close else None,
                "f_overlap_error": abs(dev.f_overlap - np.conj(matched.a)),
                "delta_bound_ok": delta <= 72 / 71 * (xi + gamma) if close else None,
                "quasi_at_0": abs(matched.quasi_at_0),
                "quasi_at_pi": abs(matched.quasi_at_pi),
                "value_deviation": value_dev,
                "quasi_deviation": quasi_dev,
                "boundary_ratio": pair.boundary_ratio,
                "boundary_ratio_ok": 1 / 4 <= pair.boundary_ratio <= 4 if second else None,
                "ab_ok": abs(matched.a) * abs(matched.b) >= 4 / 17 if second else None,
                "b_f_pairing_ok": abs(matched.b) * abs(dev.f_pairing) > 1 / 15 if second else None,
                "xi_bound_ok": xi <= 15 * (delta + gamma) if second else None,
                "free_bounds_ok": all(n / math.sqrt(6) <= abs(d) <= math.sqrt(2) * n for d in (pair.df0_at_0, pair.dphi0_at_0)) if second else None,
            }
        )
    return pd.DataFrame(records)
