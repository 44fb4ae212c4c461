"""Shared exception types."""


class ParseError(Exception):
    """A model, map, relation, or fairness file is malformed."""


class PreconditionError(Exception):
    """An operation was invoked outside its stated contract."""


class UnsupportedError(Exception):
    """The input lies outside the supported fragment."""


class InternalCheckError(AssertionError):
    """An internal consistency assertion failed; indicates a bug, not bad input."""
