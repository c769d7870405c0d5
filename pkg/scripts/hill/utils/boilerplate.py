# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import argparse
from collections.abc import Callable, Mapping, Sequence
from typing import Any

from hill.utils import config


def get_parse_main[T: config.Config](
    config_cls: type[T],
    config_name: str,
    commands: Mapping[str, Callable[..., int]],
    extra_parse: Callable[[argparse.ArgumentParser], None] | None = None,
    prog: str | None = None,
) -> tuple[
    Callable[[Sequence[str] | None, argparse.Namespace | None], argparse.Namespace],
    Callable[..., int],
]:
    """parse and main for a multi command entry point, each command gets the loaded config and the parsed extras"""
    config_type = config.get_config_type(config_cls)

    def parse(args: Sequence[str] | None = None, namespace: argparse.Namespace | None = None) -> argparse.Namespace:
        common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        common.add_argument("-c", "--config", default=f"{config_name}.json", help="config file, defaults to %(default)s")
        if extra_parse:
            extra_parse(common)
        parser = argparse.ArgumentParser(prog=prog, allow_abbrev=False)
        subparsers = parser.add_subparsers(dest="command", required=True)
        for name, command in commands.items():
            subparsers.add_parser(name, parents=[common], allow_abbrev=False, help=(command.__doc__ or "").strip().splitlines()[0] if command.__doc__ else None)
        return parser.parse_args(args, namespace)

    def main(command: str, config: T | str | Mapping[str, Any] | None = None, **kwargs: Any) -> int:
        if command not in commands:
            raise ValueError(f"unknown command({command}), known: {sorted(commands)}")
        return commands[command](config_type(config if config is not None else f"{config_name}.json"), **kwargs)

    return parse, main
