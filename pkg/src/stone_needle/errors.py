"""Exception hierarchy for the gateway.

Every error raised by this package derives from StoneNeedleError so callers
can catch the whole family at the service boundary.
"""


class StoneNeedleError(Exception):
    """Base class for all gateway errors."""


# --- core domain ---

class UnsupportedMediaType(StoneNeedleError):
    """Media type outside the four supported top-level types."""


class EmptyPayload(StoneNeedleError):
    """Zero-length byte payload where content is required."""


class InvalidQuery(StoneNeedleError):
    """Query rejected at the service boundary (empty, or bad references)."""


# --- intent analysis / registry ---

class EmptyRegistry(StoneNeedleError):
    """Scoring requested against a registry with no models."""


class DuplicateModelId(StoneNeedleError):
    """Attempt to register a model id twice."""


class UnknownModel(StoneNeedleError):
    """Model id not present in the registry."""


# --- adapter dispatch ---

class AdapterError(StoneNeedleError):
    """Base for task-model adapter failures; all are recoverable per turn."""


class AdapterTimeout(AdapterError):
    """Adapter call exceeded the descriptor's timeout."""


class AdapterProtocolError(AdapterError):
    """Adapter replied with a non-200 status or a malformed body."""


class AdapterUnavailable(AdapterError):
    """Adapter endpoint could not be reached."""


# --- knowledge base / prompt assembly ---

class KbParseError(StoneNeedleError):
    """Knowledge-base file is malformed."""


class KbAliasConflict(StoneNeedleError):
    """One alias maps to more than one entity."""


class BudgetTooSmall(StoneNeedleError):
    """Prompt cannot fit the budget even with all history dropped."""


# --- generation backend ---

class MlmError(StoneNeedleError):
    """Base for generation-backend failures."""


class MlmTimeout(MlmError):
    """Backend call timed out (after retries)."""


class MlmProtocolError(MlmError):
    """Backend replied with a malformed body or a non-retryable status."""


class MlmUnavailable(MlmError):
    """Backend unreachable after retries were exhausted."""


# --- persistence / service ---

class PersistenceError(StoneNeedleError):
    """Session log or blob store could not be read or written."""


class SessionNotFound(StoneNeedleError):
    """No committed session with the given id."""


class ResourceNotFound(StoneNeedleError):
    """No stored blob with the given content hash."""


class ConfigError(StoneNeedleError):
    """Service configuration file is invalid."""


# --- evaluation harness ---

class FixtureParseError(StoneNeedleError):
    """Routing fixture file is malformed."""


class UnknownLabel(StoneNeedleError):
    """Fixture expectation names a model id not in the registry."""


class EmptyMatrix(StoneNeedleError):
    """Metrics requested over a confusion matrix with no cases."""
