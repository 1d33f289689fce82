"""Exception hierarchy shared by every module."""


class B1Error(Exception):
    """Base class for all b1calc failures."""


class DomainError(B1Error, ValueError):
    """A point lies outside a domain, or two operands live on different domains."""


class CertificateError(B1Error, ArithmeticError):
    """A partial node (reciprocal, restricted tan, power) saw an argument it cannot take."""


class PreconditionError(B1Error, ValueError):
    """An operation was called with inputs violating its stated hypotheses."""


class BoundError(PreconditionError):
    """A declared bound is missing, too large, or contradicted at a sample."""


class ExtensionError(B1Error):
    """The extension loop broke one of its per-round invariants."""

    def __init__(self, message, round_index=None):
        super().__init__(message)
        self.round_index = round_index
