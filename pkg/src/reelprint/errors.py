"""Exception hierarchy.

Everything raised on purpose by the package derives from ``ReelprintError``,
so callers (and the CLI) can separate domain failures from programming errors.
"""


class ReelprintError(Exception):
    """Base class for domain errors."""


# ABC parsing and normalization

class AbcError(ReelprintError, ValueError):
    pass


class MissingHeaderField(AbcError):
    def __init__(self, field, detail=""):
        self.field = field
        msg = f"missing header field {field}:"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UnparsableToken(AbcError):
    def __init__(self, text, line, column, reason="not in the supported ABC subset"):
        self.text = text
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {text!r} {reason}")


class WrongSlotCount(AbcError):
    def __init__(self, count, expected=128):
        self.count = count
        self.expected = expected
        super().__init__(f"normalized grid has {count} slots, expected {expected}")


class UnsupportedRhythm(AbcError):
    pass


class OutOfRangePitch(AbcError):
    def __init__(self, semitone, slot=None):
        self.semitone = semitone
        self.slot = slot
        where = f" at slot {slot}" if slot is not None else ""
        super().__init__(f"semitone {semitone}{where} outside [-24, 48]")


# Signal processing

class NonPowerOfTwoLength(ReelprintError, ValueError):
    pass


class InvalidBand(ReelprintError, ValueError):
    pass


class InvalidRange(ReelprintError, ValueError):
    pass


class WindowTooLong(ReelprintError, ValueError):
    pass


class GridMismatch(ReelprintError, ValueError):
    pass


class LengthMismatch(ReelprintError, ValueError):
    pass


class SampleRateMismatch(ReelprintError, ValueError):
    pass


class EmptySignal(ReelprintError, ValueError):
    pass


# Tunebase and identification

class SchemaError(ReelprintError, ValueError):
    def __init__(self, message, tune_id=None):
        self.tune_id = tune_id
        if tune_id is not None:
            message = f"tune {tune_id}: {message}"
        super().__init__(message)


class UnknownTune(ReelprintError, LookupError):
    pass


class SettingOutOfRange(ReelprintError, LookupError):
    pass


class ConfigMismatch(ReelprintError, ValueError):
    pass


class TooFewCandidates(ReelprintError, ValueError):
    pass


# WAV I/O

class UnsupportedEncoding(ReelprintError, ValueError):
    pass


class CorruptHeader(ReelprintError, ValueError):
    pass
