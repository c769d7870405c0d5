# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import math
import os
import sys
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import Any

from hill import errors, operator_matrix, potential
from hill.utils import config, misc

THREADS_ENV = "HILL_SPECTRA_THREADS"


class HillConfig(config.Config):
    PRINT_PROGRESS_BAR = sys.stderr.isatty()
    THREADS = 0
    SEED = 42
    QUICK = False

    BUILTIN = "mathieu"
    BUILTIN_PARAMS = {"c": 1.0}
    POTENTIAL_FILE = ""
    BAND_LIMIT = potential.DEFAULT_BAND_LIMIT

    TRUNCATION = 64
    N_MIN = 6
    N_MAX = 30
    BC = ["per+", "per-", "dir", "neu"]
    RADIUS_POLICY = "fixed_quarter"
    LOCALIZE_N = 4

    GAMMA_TOL = 1e-10
    DEGENERATE_TOL = 1e-10
    PROJECTION_TOL = 1e-9
    NEAR_SINGULAR_COND = 1e12
    RESOLUTION_FACTOR = 1e3

    PROJECTION_NODES = 64
    PROJECTION_MAX_NODES = 1024

    ORACLE_STEPS_PER_UNIT = 64
    ORACLE_TOL = 1e-10
    ORACLE_EXACT = True
    ORACLE_GRID_PER_UNIT = 8
    ORACLE_RICHARDSON = True

    WEIGHT = "sobolev"
    WEIGHT_PARAMS = {"a": 2.0}

    OUTPUT_PATH = os.path.join("..", "data", "hill")
    DUMP_MATRIX = False


def print_progress_bar(config: HillConfig, current: int, total: int, prefix: str = "", suffix: str = "") -> None:
    misc.print_progress_bar(current, total, prefix, suffix) if config.PRINT_PROGRESS_BAR else config.print(f"{prefix} {100 * current / max(total, 1):.1f}% {suffix}")


def threads(config: HillConfig) -> int:
    count = config.THREADS if config.THREADS > 0 else os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV, "")
    if cap.strip():
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            config.print(f"got '{cap}' for {THREADS_ENV}, ignoring")
    return max(1, count)


def map_threads[T, R](config: HillConfig, func: Callable[[T], R], items: Iterable[T], prefix: str = "") -> list[R]:
    """func over items on a thread pool, results in input order"""
    items = tuple(items)
    total = len(items)
    suffix = f"of {total}"
    print_progress_bar(config, 0, total, prefix, suffix)
    results: list[R] = []
    with ThreadPoolExecutor(threads(config)) as executor:
        for current, result in enumerate(executor.map(func, items), 1):
            results.append(result)
            print_progress_bar(config, current, total, prefix, suffix)
    return results


def builtin_params(config: HillConfig) -> dict[str, Any]:
    return {"F": config.BAND_LIMIT, "seed": config.SEED, **config.BUILTIN_PARAMS}


def make_potential(config: HillConfig) -> potential.PotentialSpec:
    if config.POTENTIAL_FILE:
        return potential.load_potential(config.POTENTIAL_FILE)
    return potential.builtin(config.BUILTIN, builtin_params(config))


def make_weight(config: HillConfig) -> potential.Weight:
    return potential.Weight.from_params(config.WEIGHT, config.WEIGHT_PARAMS)


def n_range(config: HillConfig) -> range:
    if config.N_MIN < 1 or config.N_MAX < config.N_MIN:
        raise errors.BadParamError(f"n range({config.N_MIN}..{config.N_MAX}) is empty or starts below 1")
    return range(config.N_MIN, config.N_MAX + 1)


def resolution_floor(config: HillConfig, K: int) -> float:
    """smallest spectral difference resolvable next to entries of size (2K+1)^2"""
    return config.RESOLUTION_FACTOR * sys.float_info.epsilon * (2 * K + 1) ** 2


def check(config: HillConfig) -> HillConfig:
    for key in ("GAMMA_TOL", "DEGENERATE_TOL", "PROJECTION_TOL", "ORACLE_TOL", "NEAR_SINGULAR_COND", "RESOLUTION_FACTOR"):
        value = getattr(config, key)
        if not (math.isfinite(value) and value > 0):
            raise errors.BadParamError(f"{key}({value}) must be positive")
    if config.PROJECTION_NODES < 16 or config.PROJECTION_MAX_NODES < config.PROJECTION_NODES:
        raise errors.BadParamError(f"projection nodes({config.PROJECTION_NODES}..{config.PROJECTION_MAX_NODES}) must start at 16 or more")
    if config.RADIUS_POLICY not in {"fixed_quarter", "shrinking"}:
        raise errors.BadParamError(f"unknown radius policy({config.RADIUS_POLICY}), known: 'fixed_quarter', 'shrinking'")
    if config.TRUNCATION < operator_matrix.MIN_TRUNCATION:
        raise errors.TruncationTooSmallError(f"K({config.TRUNCATION}) must be >= {operator_matrix.MIN_TRUNCATION}")
    if n_range(config).start <= 4:
        raise errors.BadParamError(f"n range must start above 4, got {config.N_MIN}")
    return config
