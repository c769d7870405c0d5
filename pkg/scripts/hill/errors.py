# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

from typing import Any, ClassVar


class HillError(Exception):
    exit_code: ClassVar[int] = 3

    @classmethod
    def kind(cls) -> str:
        return cls.__name__.removesuffix("Error")

    def as_dict(self) -> dict[str, Any]:
        return {"error": self.kind(), "message": str(self), "exit_code": self.exit_code}


class ConfigError(HillError):
    exit_code = 2


class NumericalError(HillError):
    exit_code = 3


class OddIndexError(ConfigError):
    pass


class NonFiniteError(ConfigError):
    pass


class BadParamError(ConfigError):
    pass


class TruncationTooSmallError(ConfigError):
    pass


class ModeOutsideWindowError(ConfigError):
    pass


class OverlappingDiscsError(ConfigError):
    pass


class InsufficientDataError(ConfigError):
    pass


class FrameMismatchError(ConfigError):
    pass


class OnSpectrumOfFreeError(NumericalError):
    pass


class NearSingularError(NumericalError):
    pass


class ComplementSingularError(NumericalError):
    pass


class CountMismatchError(NumericalError):
    pass


class EnclosureViolationError(NumericalError):
    pass


class NotConvergedError(NumericalError):
    pass


class DegeneratePairError(NumericalError):
    pass


class NullMatchError(NumericalError):
    pass


class StepFailureError(NumericalError):
    pass


class RootCountUnstableError(NumericalError):
    pass


class EigensolveFailureError(NumericalError):
    pass
