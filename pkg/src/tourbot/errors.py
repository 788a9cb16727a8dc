"""Exception types shared across the engine."""


class TourbotError(Exception):
    """Base class for every error raised by this package."""


class InvalidDefinitionError(TourbotError):
    """An action definition violates a registry invariant."""


class DuplicateActionError(TourbotError):
    """An action type is already registered and overwrite was not requested."""


class UnknownActionError(TourbotError):
    """Lookup of an action type that is not in the registry."""


class ParamValidationError(TourbotError):
    """Raw tag parameters do not fit the action's schema.

    Raised by parameter validation; sanitization catches these and turns
    them into report entries, so a bad tag never aborts a run.
    """

    def __init__(self, message: str, *, param_index: int | None = None):
        super().__init__(message)
        self.param_index = param_index


class ArityMismatchError(ParamValidationError):
    """Too few required or too many parameters."""


class TypeMismatchError(ParamValidationError):
    """A parameter string cannot be coerced to its schema kind."""


class ParseError(TourbotError):
    """Scenario text contains a tag opener that is never closed."""


class ConfigError(TourbotError):
    """A forest or routing configuration violates an invariant."""


class UnknownAgentError(TourbotError):
    """An agent id is not part of the forest."""


class UnroutableActionError(TourbotError):
    """No agent owns the action type of a dispatched event."""


class NoArmAvailableError(TourbotError):
    """Both arms hold actions at or above the pointing request's priority."""


class ProviderError(TourbotError):
    """Base class for generation provider failures."""


class ProviderUnavailableError(ProviderError):
    """The text provider cannot be reached or is not configured."""


class LengthViolationError(ProviderError):
    """Narrative length is outside the tolerance band even after a retry.

    Carries the offending text so the caller can decide whether to use it.
    """

    def __init__(self, message: str, *, text: str):
        super().__init__(message)
        self.text = text


class NarrativeMutatedError(ProviderError):
    """Tag insertion changed the underlying speech text even after a retry."""


class NoScenarioError(TourbotError):
    """The cache holds no scenario at all for the requested exhibit."""
