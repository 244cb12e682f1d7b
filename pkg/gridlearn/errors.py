from __future__ import annotations

from typing import Optional

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ORACLE = 3


class GridlearnError(Exception):
    exit_code = EXIT_NUMERICAL


class ConfigError(GridlearnError):
    exit_code = EXIT_CONFIG


class NetworkFileError(ConfigError):
    """Invalid network parameter file; `field` and `line` locate the problem."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class DimensionError(GridlearnError, ValueError):
    pass


class NumericalError(GridlearnError):
    exit_code = EXIT_NUMERICAL


class IntegrationDivergedError(NumericalError):
    def __init__(self, time: float, reason: str = "non-finite state"):
        self.time = time
        super().__init__(f"integration diverged at t={time:.6g} s ({reason})")


class DegenerateDataError(NumericalError):
    pass


class UndefinedRelativeErrorError(NumericalError):
    pass


class OracleFailure(GridlearnError):
    exit_code = EXIT_ORACLE

    def __init__(self, failures):
        self.failures = list(failures)
        names = ", ".join(f"{f.name} (deviation {f.deviation:.3e})" for f in self.failures)
        super().__init__(f"oracle failures: {names}")


class StageError(GridlearnError):
    """A pipeline stage failed; keeps the exit code of the underlying error."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EXIT_NUMERICAL)
        super().__init__(f"stage '{stage}' failed: {cause}")


class RankDeficiencyWarning(UserWarning):
    pass


def check_dim(condition: bool, message: str) -> None:
    if not condition:
        raise DimensionError(message)
