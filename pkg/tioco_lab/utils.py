import logging
import os
import sys
from fractions import Fraction

logger = logging.getLogger("base")


class TiocoError(Exception):
    """Base class for every error raised by the library."""


class InvalidModelError(TiocoError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "model is not well-formed: " + "; ".join(self.violations)
        )


class UnknownStateError(TiocoError):
    def __init__(self, state):
        super().__init__(f"unknown state or location `{state}`")


class UnknownLabelError(TiocoError):
    def __init__(self, label):
        super().__init__(f"unknown action label `{label}`")


class NotInputEnabledError(TiocoError):
    pass


class AlphabetMismatchError(TiocoError):
    pass


class NotCanonicError(TiocoError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "timed automaton is not canonic: " + "; ".join(self.violations)
        )


class ClockParameterError(TiocoError):
    pass


class WitnessReplayError(TiocoError):
    pass


class SuiteTooLargeError(TiocoError):
    def __init__(self, size, limit):
        self.size = size
        self.limit = limit
        super().__init__(f"exhaustive suite holds {size} tests, limit is {limit}")


class FormatError(TiocoError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class RegisteredOracleNameError(TiocoError):
    def __init__(self, name_error):
        super().__init__(
            f"Registered oracles must start with `oracle_`. Incorrect registration: {name_error}"
        )


class UnknownOracleError(TiocoError):
    def __init__(self, name):
        super().__init__(
            f"no oracle named `{name}`; available: {', '.join(sorted(_ORACLES))}"
        )


_ORACLES = {}


def register_oracle(func):
    if func.__name__.startswith("oracle_"):
        func._registered_oracle_name = func.__name__[7:]
        assert func._registered_oracle_name
    else:
        raise RegisteredOracleNameError(func.__name__)
    func._registered_oracle = True
    _ORACLES[func._registered_oracle_name] = func
    return func


def registered_oracles():
    """Names of all registered oracles, in registration order."""
    return list(_ORACLES)


def get_oracle(name):
    try:
        return _ORACLES[name]
    except KeyError:
        raise UnknownOracleError(name) from None


def parse_rational(text):
    """Parse `p/q` or an integer into an exact Fraction. Decimals are rejected."""
    text = str(text).strip()
    if not text or any(ch in text for ch in ".eE"):
        raise ValueError(f"expected an integer or `p/q`, got `{text}`")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"expected an integer or `p/q`, got `{text}`") from e


def format_rational(value):
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class TeeLogger:
    """Write to stdout and append to a report file at the same time."""

    def __init__(self, filename):
        self.terminal = sys.stdout
        self.log = open(filename, "w", encoding="utf-8")

    def write(self, message):
        self.terminal.write(message)
        self.log.write(message)
        self.log.flush()

    def flush(self):
        self.terminal.flush()

    def close(self):
        self.log.close()

    def isatty(self):
        return hasattr(self.terminal, "isatty") and self.terminal.isatty()


def use_color(stream=None):
    stream = stream or sys.stdout
    if os.environ.get("NO_COLOR") is not None:
        return False
    return hasattr(stream, "isatty") and stream.isatty()
