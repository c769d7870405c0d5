# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import argparse
import json
import math
import os
import re
import sys
from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np
import pandas as pd

from hill import config as hill_config
from hill import errors, floquet_oracle, operator_matrix, potential, riesz_projection, schmidt_reduction, sequence_analysis, spectral_pairing, verify
from hill.config import HillConfig
from hill.operator_matrix import Bc
from hill.spectral_pairing import SpectralSlate
from hill.utils import boilerplate, misc

_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")
_WINDOW = re.compile(r"^\s*(\S+?)\s*\.\.\s*(\S+)\s*$")
_RADIUS = {"fixed": "fixed_quarter", "fixed_quarter": "fixed_quarter", "shrinking": "shrinking"}
_PARAMS = ("c", "s", "x0", "r")
_FLAG_KEYS = {
    "truncation": "TRUNCATION",
    "band_limit": "BAND_LIMIT",
    "tol": "GAMMA_TOL",
    "out": "OUTPUT_PATH",
    "seed": "SEED",
    "quick": "QUICK",
    "threads": "THREADS",
    "dump_matrix": "DUMP_MATRIX",
    "weight": "WEIGHT",
    "exact": "ORACLE_EXACT",
}


def parse_range(text: str) -> tuple[int, int]:
    """'A..B' or 'A' as an inclusive integer range"""
    match = _RANGE.match(text)
    if match:
        low, high = int(match[1]), int(match[2])
    elif text.strip().isdigit():
        low = high = int(text)
    else:
        raise errors.BadParamError(f"n range({text}) is not of the form A..B")
    if high < low:
        raise errors.BadParamError(f"n range({text}) is empty")
    return low, high


def parse_window(text: str) -> tuple[float, float]:
    match = _WINDOW.match(text)
    try:
        if not match:
            raise ValueError(text)
        low, high = float(match[1]), float(match[2])
    except ValueError as exc:
        raise errors.BadParamError(f"window({text}) is not of the form A..B") from exc
    if not (math.isfinite(low) and math.isfinite(high) and low < high):
        raise errors.BadParamError(f"window({text}) must be finite with A < B")
    return low, high


def prepare(config: HillConfig, name: str, **flags: Any) -> HillConfig:
    """command line flags over the loaded config, checked"""
    config.name = name
    updates = {key: flags[flag] for flag, key in _FLAG_KEYS.items() if flags.get(flag) is not None}
    builtin, potential_file = flags.get("builtin"), flags.get("potential_file")
    if builtin is not None and potential_file is not None:
        raise errors.BadParamError("--builtin and --potential-file exclude each other")
    params = dict(config.BUILTIN_PARAMS)
    if builtin is not None:
        if builtin not in potential.FAMILIES[:-1]:
            raise errors.BadParamError(f"unknown family({builtin}), expected one of {potential.FAMILIES[:-1]}")
        if builtin != config.BUILTIN:
            params = {}
        updates |= {"BUILTIN": builtin, "POTENTIAL_FILE": ""}
    if potential_file is not None:
        updates["POTENTIAL_FILE"] = potential_file
    params |= {key: flags[key] for key in _PARAMS if flags.get(key) is not None}
    updates["BUILTIN_PARAMS"] = params
    if flags.get("n_range") is not None:
        updates["N_MIN"], updates["N_MAX"] = parse_range(flags["n_range"])
    if flags.get("bc") is not None:
        try:
            updates["BC"] = [str(Bc(value.strip())) for value in flags["bc"].split(",") if value.strip()]
        except ValueError as exc:
            raise errors.BadParamError(f"bc({flags['bc']}), known: {[str(bc) for bc in Bc]}") from exc
    if flags.get("radius") is not None:
        updates["RADIUS_POLICY"] = _RADIUS[flags["radius"]]
    config.update(updates)
    if not config.BC:
        raise errors.BadParamError("no boundary condition selected")
    return hill_config.check(config)


def _potential_summary(p: potential.PotentialSpec) -> dict[str, Any]:
    return {"family": p.family_tag, "band_limit": p.band_limit, "params": dict(p.params), "real": p.is_real(), "even": p.is_even()}


def _emit(config: HillConfig, frames: Mapping[str, pd.DataFrame], summary: Mapping[str, Any]) -> None:
    """CSV per frame and one JSON summary with the effective config and the versions"""
    misc.silent_makedirs(config.OUTPUT_PATH)
    for stem, frame in frames.items():
        path = os.path.join(config.OUTPUT_PATH, f"{stem}.csv")
        frame.to_csv(path, index=False)
        config.print(f"wrote '{path}'")
    path = misc.write_json(
        os.path.join(config.OUTPUT_PATH, f"{config.name}.json"),
        {"command": config.name, "outputs": [f"{stem}.csv" for stem in frames], "config": config.dump(), "versions": misc.versions(), **summary},
    )
    config.print(f"wrote '{path}'")


def _slate(config: HillConfig) -> tuple[dict[Bc, spectral_pairing.Decomposition], SpectralSlate]:
    p = hill_config.make_potential(config)
    K = config.TRUNCATION
    if config.N_MAX > K - p.band_limit:
        config.print(f"n({config.N_MAX}) > K - F({K - p.band_limit}), top rows feel the truncation")
    decomps = spectral_pairing.decompositions(p, K, config)
    return decomps, spectral_pairing.build_slate(p, K, hill_config.n_range(config), config, decomps)


def _slate_summary(slate: SpectralSlate) -> dict[str, Any]:
    return {
        "potential": _potential_summary(slate.p),
        "K": slate.K,
        "radius_policy": slate.policy,
        "resolution_floor": slate.floor,
        "rows": len(slate.rows),
        "unresolved": [row.n for row in slate.rows if not row.resolved],
        "skipped": {str(n): kind for n, kind in slate.skipped.items()},
    }


def slate(config: HillConfig, **flags: Any) -> int:
    """periodic, antiperiodic, Dirichlet and Neumann eigenvalues per n with gaps, deviations and beta"""
    config = prepare(config, "slate", **flags)
    decomps, result = _slate(config)
    localization: dict[str, Any] = {}
    for bc in (Bc(value) for value in config.BC):
        loc = spectral_pairing.localize(decomps[bc].values, bc, result.K, config.LOCALIZE_N, config.RADIUS_POLICY)
        localization[str(bc)] = {"onset": loc.onset, "mismatches": list(loc.mismatches), "unassigned": loc.unassigned, "region_count": loc.region_count, "region_expected": loc.region_expected}
        if config.DUMP_MATRIX:
            path = operator_matrix.dump_matrix(decomps[bc].op, os.path.join(config.OUTPUT_PATH, f"matrix_{bc}_K{result.K}.csv"))
            config.print(f"wrote '{path}'")
    _emit(config, {"slate": result.to_frame()}, _slate_summary(result) | {"localization": localization})
    return 0


def beta(config: HillConfig, **flags: Any) -> int:
    """beta+- and alpha at z* per n, with the Case at z+"""
    config = prepare(config, "beta", **flags)
    decomps, result = _slate(config)
    records = []
    for row in result.rows:
        case = sequence_analysis.classify_case(row)
        targets = (row.lambda_plus - row.n**2, row.lambda_minus - row.n**2)
        try:
            roots = schmidt_reduction.reduced_roots(decomps[row.bc].op, row.n, targets)
            root_error = max(min(abs(root - t) for t in targets) for root in roots)
        except errors.NumericalError as exc:
            config.print(f"n({row.n}) reduced roots skipped, {exc.kind()}: {exc}")
            root_error = math.nan
        records.append(
            {
                "n": row.n,
                "re_z_star": row.z_star.real,
                "im_z_star": row.z_star.imag,
                "re_beta_plus": row.beta_plus.real,
                "im_beta_plus": row.beta_plus.imag,
                "re_beta_minus": row.beta_minus.real,
                "im_beta_minus": row.beta_minus.imag,
                "alpha_asymmetry": abs(row.alpha11 - row.alpha22),
                "abs_beta_plus_zplus": case.beta_plus,
                "abs_beta_minus_zplus": case.beta_minus,
                "case": str(case.case),
                "char_residual": row.char_residual,
                "reduced_root_error": root_error,
                "resolved": row.resolved,
            }
        )
    _emit(config, {"beta": pd.DataFrame(records)}, _slate_summary(result))
    return 0


def projections(config: HillConfig, **flags: Any) -> int:
    """Riesz projection deviations, boundary deviations and the deviation identity per n"""
    config = prepare(config, "projections", **flags)
    decomps, result = _slate(config)
    bcs = [Bc(value) for value in config.BC]
    jobs = [(row.bc, row.n) for row in result.rows if row.bc in bcs]
    jobs += [(bc, row.n) for bc in bcs if not bc.periodic for row in result.rows]

    def work(job: tuple[Bc, int]) -> dict[str, Any]:
        bc, n = job
        report = riesz_projection.projection_norms(
            result.p,
            bc,
            result.K,
            n,
            config.RADIUS_POLICY,
            decomps[bc].op,
            decomps[bc].values,
            config.PROJECTION_NODES,
            config.PROJECTION_TOL,
            config.PROJECTION_MAX_NODES,
        )
        record: dict[str, Any] = {
            "n": n,
            "bc": str(bc),
            "norm_p_diff": report.norm_p_diff,
            "norm_dp_diff": report.norm_dp_diff,
            "scaled_dp_diff": report.scaled_dp_diff,
            "nodes": report.nodes,
            "converged": report.converged,
            "idempotency": report.idempotency,
        }
        if not bc.periodic:
            # on the disc boundary, where the resolvent series is used
            lam = n * n + operator_matrix.disc_radius(n, config.RADIUS_POLICY)
            record["kvk_norm"], record["kvk_hs"] = operator_matrix.kvk_norm(result.p, bc, result.K, lam)
            record["hs_bound"] = operator_matrix.hs_bound(result.p, bc, result.K, lam)
        return record

    records = hill_config.map_threads(config, work, jobs, "projections")
    periodic = pd.DataFrame([r for r in records if Bc(r["bc"]).periodic], columns=list(records[0]) if records else ["n", "bc"])
    matched = sequence_analysis.matched_vector_report(result)
    columns = ["value_deviation", "quasi_deviation", "pairing", "identity_residual", "residual_ok", "case"]
    if matched.empty:
        matched = pd.DataFrame(columns=["n", *columns])
    frame = periodic.merge(matched.reindex(columns=["n", *columns]), on="n", how="left")
    frames = {"projections": frame}
    others = [r for r in records if not Bc(r["bc"]).periodic]
    if others:
        frames["projections_bc"] = pd.DataFrame(others)
    unconverged = [f"{r['bc']}:{r['n']}" for r in records if not r["converged"]]
    if unconverged:
        config.print(f"quadrature not converged for {unconverged}")
    _emit(config, frames, _slate_summary(result) | {"unconverged": unconverged})
    return 0


def oracle(config: HillConfig, window: str | None = None, **flags: Any) -> int:
    """Floquet discriminant on a grid and the oracle roots per boundary condition"""
    config = prepare(config, "oracle", **flags)
    p = hill_config.make_potential(config)
    lo, hi = parse_window(window) if window else ((config.N_MIN - 0.5) ** 2, (config.N_MAX + 0.5) ** 2)
    exact = None if config.ORACLE_EXACT else False
    options = {"exact": exact, "richardson": config.ORACLE_RICHARDSON, "per_unit": config.ORACLE_STEPS_PER_UNIT}
    grid = np.linspace(lo, hi, max(2, math.ceil((hi - lo) * config.ORACLE_GRID_PER_UNIT)) + 1)
    delta = floquet_oracle.discriminant_grid(p, grid, **options)
    records: list[dict[str, Any]] = []
    for bc in (Bc(value) for value in config.BC):
        roots = floquet_oracle.oracle_spectrum(p, bc, (lo, hi), config.ORACLE_TOL, grid_per_unit=config.ORACLE_GRID_PER_UNIT, **options)
        eigs = spectral_pairing.eigenvalues(operator_matrix.build_matrix(p, bc, config.TRUNCATION))
        config.print(f"{bc}: {len(roots)} roots in [{lo:.6g}, {hi:.6g}]")
        records += [
            {"bc": str(bc), "index": i, "re": root.real, "im": root.imag, "matrix_distance": float(np.abs(eigs - root).min())}
            for i, root in enumerate(roots)
        ]
    frames = {
        "oracle": pd.DataFrame({"lam": grid, "re_delta": delta.real, "im_delta": delta.imag}),
        "oracle_roots": pd.DataFrame(records, columns=["bc", "index", "re", "im", "matrix_distance"]),
    }
    summary = {
        "potential": _potential_summary(p),
        "window": [lo, hi],
        "exact": floquet_oracle.exact_supported(p) if exact is None else False,
        "roots": {bc: sum(1 for r in records if r["bc"] == bc) for bc in config.BC},
        "magnus_step_order": floquet_oracle.step_order(p, complex(hi)) if p.support.size else math.nan,
    }
    _emit(config, frames, summary)
    return 0


def criterion(config: HillConfig, **flags: Any) -> int:
    """Riesz basis criterion ratios, running sup and Case classification"""
    config = prepare(config, "criterion", **flags)
    _, result = _slate(config)
    report = sequence_analysis.riesz_criterion(result, config.GAMMA_TOL)
    cases = pd.DataFrame(
        [_case_record(sequence_analysis.classify_case(row)) | {"resolved": row.resolved} for row in result.rows],
        columns=["n", "case", "beta_plus", "beta_minus", "gamma_bound", "resolved"],
    )
    sandwich = sequence_analysis.sandwich_report(result)
    verdict = {
        "verdict": report.verdict,
        "sup_neu": report.sup_neu,
        "sup_dir": report.sup_dir,
        "inf_beta": report.inf_beta,
        "growth_exponent": report.growth_exponent,
        "vacuous": report.vacuous,
        "basis_fails": report.basis_fails,
        "flags": list(report.flags),
        "sandwich_onset": sandwich.onset,
        "sandwich_artifacts": list(sandwich.artifacts),
    }
    for key in ("verdict", "sup_neu", "sup_dir", "inf_beta", "basis_fails"):
        config.print(f"{key}: {verdict[key]}")
    for flag in report.flags:
        config.print(f"flag: {flag}")
    _emit(config, {"criterion": report.frame, "criterion_cases": cases, "criterion_sandwich": sandwich.frame}, _slate_summary(result) | verdict)
    return 0


def _case_record(case: sequence_analysis.Classification) -> dict[str, Any]:
    return {"n": case.n, "case": str(case.case), "beta_plus": case.beta_plus, "beta_minus": case.beta_minus, "gamma_bound": case.gamma_bound}


def smoothness(config: HillConfig, **flags: Any) -> int:
    """decay class and weighted partial sums of gamma and the deviations"""
    config = prepare(config, "smoothness", **flags)
    _, result = _slate(config)
    w = hill_config.make_weight(config)
    sequences = sequence_analysis.slate_sequences(result)
    frame = pd.DataFrame({"n": sequences["n"]})
    classes: dict[str, Any] = {}
    for name in ("gamma", "delta_neu", "delta_dir"):
        try:
            report = sequence_analysis.decay_classify(sequences["n"], sequences[name], w, result.floor)
        except errors.InsufficientDataError as exc:
            config.print(f"got '{exc}' for {name}, skipping")
            continue
        frame[name] = sequences[name]
        frame[f"partial_sum_{name}"] = report.partial_sums
        classes[name] = {"label": report.label, "parameter": report.parameter, "convergence": report.convergence, "aic": dict(report.aic)}
        config.print(f"{name}: {report.label}, weighted sum {report.convergence}")
    with np.errstate(divide="ignore"):
        plot = pd.DataFrame(
            {
                "n": sequences["n"],
                "log10_gamma": np.log10(sequences["gamma"].to_numpy()),
                "log10_delta_neu": np.log10(sequences["delta_neu"].to_numpy()),
            }
        )
    summary = _slate_summary(result) | {"weight": {"family": w.family, "a": w.a, "c": w.c, "g": w.g}, "classes": classes}
    _emit(config, {"smoothness": frame, "smoothness_plot": plot}, summary)
    return 0


def verify_command(config: HillConfig, **flags: Any) -> int:
    """acceptance suite, exit 1 when a check fails"""
    config = prepare(config, "verify", **flags)
    checks = verify.run_suite(config)
    frame = pd.DataFrame([{"number": c.number, "name": c.name, "passed": c.passed, "detail": c.detail} for c in checks])
    passed = all(c.passed for c in checks)
    config.print(f"{sum(c.passed for c in checks)} of {len(checks)} checks passed")
    _emit(config, {"verify": frame}, {"passed": passed, "quick": config.QUICK})
    return 0 if passed else 1


COMMANDS = {
    "slate": slate,
    "beta": beta,
    "projections": projections,
    "oracle": oracle,
    "criterion": criterion,
    "smoothness": smoothness,
    "verify": verify_command,
}


def extra_parse(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--builtin", help=f"builtin potential family, one of {potential.FAMILIES[:-1]}")
    source.add_argument("--potential-file", help="JSON potential file")
    parser.add_argument("--K", dest="truncation", type=int, help="truncation, modes |k| <= 2K")
    parser.add_argument("--F", dest="band_limit", type=int, help="band limit of the builtin families")
    parser.add_argument("--n", dest="n_range", help="n range A..B")
    parser.add_argument("--bc", help="comma separated subset of per+,per-,dir,neu")
    parser.add_argument("--radius", choices=sorted(_RADIUS), help="disc radius policy")
    parser.add_argument("--tol", type=float, help="gamma tolerance")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--quick", action="store_true", default=None, help="shorter verify ranges")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--weight", choices=potential.WEIGHT_FAMILIES)
    parser.add_argument("--dump-matrix", action="store_true", default=None, help="write the truncated matrices as CSV")
    parser.add_argument("--no-exact", dest="exact", action="store_false", default=None, help="always integrate numerically in the oracle")
    parser.add_argument("--window", help="oracle window A..B")
    for key in _PARAMS:
        parser.add_argument(f"--{key}", type=float, help=f"builtin parameter {key}")


parse, main = boilerplate.get_parse_main(HillConfig, __file__, COMMANDS, extra_parse, "hill-spectra")


def _fail(payload: Mapping[str, Any]) -> int:
    print(json.dumps(payload), file=sys.stderr)
    return int(payload["exit_code"])


def run(argv: Sequence[str] | None = None) -> int:
    args = vars(parse(argv))
    try:
        return main(**args)
    except errors.HillError as exc:
        return _fail(exc.as_dict())
    except (ValueError, TypeError) as exc:
        return _fail({"error": type(exc).__name__, "message": str(exc), "exit_code": 2})


if __name__ == "__main__":
    sys.exit(run())
