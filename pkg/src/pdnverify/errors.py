"""Exception hierarchy shared by all pdnverify modules."""


class PdnVerifyError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PdnVerifyError, ValueError):
    """An argument lies outside the domain of the operation."""


class ModelError(PdnVerifyError, ValueError):
    """A PDN model violates a structural invariant."""


class ConfigurationError(PdnVerifyError, ValueError):
    """Inconsistent or infeasible settings (threshold, DTW window, ...)."""


class SingularityError(DomainError, ZeroDivisionError):
    """The requested conversion has a pole at the given input."""


class ParseError(PdnVerifyError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, section=None):
        self.line = line
        self.section = section
        where = []
        if section is not None:
            where.append(f"section [{section}]")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
