from typing import Optional


class TorheightError(Exception):
    """Base error carrying the process exit code the CLI reports for it."""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class GeometryError(TorheightError, ValueError):
    """A computation failed or one of its preconditions does not hold."""

    exit_code = 1


class InputError(TorheightError, ValueError):
    """Malformed input: unreadable file, schema violation, unknown name."""

    exit_code = 2


class CheckFailed(TorheightError):
    """At least one property of the verification suite failed."""

    exit_code = 3
