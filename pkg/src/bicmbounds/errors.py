"""Exceptions raised by bicmbounds. The CLI maps them to exit codes."""


class BicmError(Exception):
  pass


class ConfigurationError(BicmError, ValueError):
  pass


class ArgumentError(BicmError, ValueError):
  pass


class UnsupportedGeometryError(BicmError):
  pass


class DomainError(BicmError, ArithmeticError):
  pass


class NumericalFailureError(BicmError, ArithmeticError):
  """
  Raised when a quadrature does not converge.

  Attributes
  ----------
    diagnostics: dict
      node counts and the estimates that failed to agree
  """

  def __init__(self, message: str, diagnostics: dict = None):
    super(NumericalFailureError, self).__init__(message)
    self.diagnostics = diagnostics or {}


class VerificationInconclusiveError(BicmError):
  pass


class CatastrophicCodeError(BicmError):
  pass
