# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import datetime
import importlib.metadata
import json
import os
import platform
import shutil
import sys
import time
from collections.abc import Callable, Iterable
from typing import Any

_SILENCER_SENTINEL = object()


def _silencer(func: Callable[..., Any], exc_class: type[BaseException] | tuple[type[BaseException], ...], default: Any = _SILENCER_SENTINEL) -> Callable[..., Any]:
    """
    catches exc_class from func

    returns wrapper of func that returns:
        if default is not given: True if func executed successfully or False on Exception
        if default is given: func result on successful execution or default on Exception
    """

    def silent(*args: Any, **kwargs: Any) -> Any:
        try:
            result = func(*args, **kwargs)
        except exc_class:
            return default is not _SILENCER_SENTINEL and default
        return default is _SILENCER_SENTINEL or result

    return silent


silent_makedirs = _silencer(os.makedirs, OSError)
silent_unlink = _silencer(os.unlink, OSError)
silent_version = _silencer(importlib.metadata.version, importlib.metadata.PackageNotFoundError, "unknown")


_start = time.time()


def print_progress_bar(current: int, total: int, prefix: str = "", suffix: str = "", elapsed: bool = True, decimals: int = 1, fill: str = "█", empty: str = "-") -> None:
    percent = f"{((100 * current / total) if total else 100):{decimals + 4}.{decimals}f}%"
    if elapsed and not current:
        global _start  # noqa: PLW0603
        _start = time.time()
    prefix = f"{prefix.expandtabs()} " if prefix else ""
    suffix = f" {suffix.expandtabs()}" if suffix else ""
    _elapsed = f" {datetime.timedelta(seconds=int(time.time() - _start))}" if elapsed else ""
    length = max(5, shutil.get_terminal_size()[0] - len(prefix) - len(percent) - len(suffix) - len(_elapsed) - 2)
    fill_length = (length * current // total) if total else length
    bar = f"{fill * fill_length}{empty * (length - fill_length)}"
    # progress goes to stderr, stdout stays clean for piping
    print(f"\033[G\033[K\r{prefix}{bar} {percent}{suffix}{_elapsed}", end="\r" if current < total else "\n", flush=True, file=sys.stderr)


def versions(packages: Iterable[str] = ("numpy", "scipy", "pandas")) -> dict[str, str]:
    return {"python": platform.python_version(), **{package: silent_version(package) for package in packages}}


def write_json(path: str, data: Any) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8") as file:
            json.dump(data, file, ensure_ascii=False, indent=4, sort_keys=True, default=str)
    except:
        silent_unlink(path)
        raise
    return path
