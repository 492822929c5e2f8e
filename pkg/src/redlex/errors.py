"""Exception types shared across the package."""


class RedlexError(Exception):
    """Base class for all redlex errors."""


# --- completion gateway ---

class MissingVariable(RedlexError):
    """A prompt placeholder was left unbound."""

    def __init__(self, name: str):
        super().__init__(f"missing template variable: {name!r}")
        self.name = name


class ProviderTransientError(RedlexError):
    """Retryable transport failure from a completion provider."""


class ProviderUnavailable(RedlexError):
    """Completion provider failed permanently (retries exhausted or fatal error)."""


class ResponseTooLong(RedlexError):
    """Provider truncated the response at the token budget."""


class UnparseableVerdict(RedlexError):
    """A yes/no response did not start with YES or NO."""


class EmptyResult(RedlexError):
    """A response parse recovered zero usable entries."""


# --- page source ---

class BackendUnavailable(RedlexError):
    """Page search/fetch backend could not be reached."""


class PageNotFound(RedlexError):
    """Requested page does not exist on the backend."""


# --- lexicon pipeline ---

class LexiconEmpty(RedlexError):
    """The pipeline ended with no surviving keywords."""


class PipelineStageError(RedlexError):
    """Wraps a failure with the name of the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


# --- dump ingest ---

class FileUnreadable(RedlexError):
    """Input dump file missing or unreadable."""


class CorruptCompression(RedlexError):
    """Compressed stream failed to decode mid-file."""


class MalformedRecord(RedlexError):
    """A dump line is not a usable record."""


class SkipBudgetExceeded(RedlexError):
    """Malformed-line ratio breached the configured abort threshold."""


# --- corpus builder ---

class OverlappingLists(RedlexError):
    """Centric and inclusive subreddit lists share a name."""


class MissingSalt(RedlexError):
    """Author anonymization requires a salt and none was configured."""


# --- thread assembler ---

class CrossThreadComment(RedlexError):
    """A comment's link_id points at a different submission."""


# --- analytics ---

class AdapterUnavailable(RedlexError):
    """Classifier adapter could not produce a batch."""
