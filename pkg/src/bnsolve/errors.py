"""Exception hierarchy shared across the pipeline."""


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PipelineError):
    """A config, manifest, or parameter failed validation."""


# ---------------------------------------------------------------------------
# model client

class ClientError(PipelineError):
    """Base class for model-endpoint failures."""


class AuthError(ClientError):
    """401/403 from the endpoint; never retried."""


class EndpointError(ClientError):
    """Endpoint unusable: retries exhausted or a non-retryable status."""


class TimeoutError_(EndpointError):
    """Retries exhausted and the last failure was a timeout."""


class MalformedReply(ClientError):
    """The endpoint body was unparseable or held the wrong candidate count."""


class ScriptExhausted(ClientError):
    """A scripted mock was called more times than it has entries."""


# ---------------------------------------------------------------------------
# prompts

class UnknownTemplate(PipelineError):
    def __init__(self, template_id: str):
        super().__init__(f"no template registered under id {template_id!r}")
        self.template_id = template_id


class MissingVariable(PipelineError):
    def __init__(self, name: str, template_id: str = ""):
        where = f" for template {template_id!r}" if template_id else ""
        super().__init__(f"missing template variable {name!r}{where}")
        self.name = name


class ParseError(PipelineError):
    """A template or dataset file could not be parsed; message carries diagnostics."""


class DuplicateId(ParseError):
    pass


# ---------------------------------------------------------------------------
# stages / harness

class EmptyTranslation(PipelineError):
    """The translator returned an empty string after stripping."""


class EmptyCandidateList(PipelineError):
    """majority_vote called with no candidates."""


class LoadError(PipelineError):
    """Dataset file rejected; message names the offending row(s)."""
