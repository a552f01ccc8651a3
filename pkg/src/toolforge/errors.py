"""Exception hierarchy shared across the engine."""


class ToolforgeError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(ToolforgeError):
    """Invalid or unusable configuration (bad KB root, missing interpreter, ...)."""


class KnowledgeBaseError(ToolforgeError):
    """Knowledge base load or mutation failure."""


class DescriptorParseError(KnowledgeBaseError):
    """A descriptor file could not be parsed or validated."""

    def __init__(self, filename: str, reason: str):
        super().__init__(f"{filename}: {reason}")
        self.filename = filename
        self.reason = reason


class PromotionError(KnowledgeBaseError):
    """Promotion could not be applied; the registry is unchanged."""


class NameCollisionError(PromotionError):
    """A tool with the requested name is already registered."""


class GatewayError(ToolforgeError):
    """Model gateway failure (transport, retries exhausted, provider misuse)."""


class TranscriptExhaustedError(GatewayError):
    """Replay transcript has no entry left for the current request."""


class RoleMismatchError(GatewayError):
    """Replay transcript entry was recorded for a different component role."""


class ProtocolViolationError(GatewayError):
    """Model response violates the tool-calling protocol (unknown tool name)."""


class CodeExtractionError(ToolforgeError):
    """No usable source code could be extracted from a model response."""


class EntrypointError(CodeExtractionError):
    """Generated source lacks the required entrypoint name."""


class ResolutionError(ToolforgeError):
    """An import plan could not be resolved for the requested function."""


class SandboxError(ToolforgeError):
    """Sandbox infrastructure failure (workdir creation, teardown)."""


class InterpreterNotFoundError(SandboxError):
    """The configured interpreter is not on PATH; distinct from a test failure."""


class ArgumentValidationError(ToolforgeError):
    """Tool arguments rejected by the descriptor's parameter schema."""
