class OnssError(Exception):
    pass


class DomainError(OnssError, ValueError):
    """A point or pose lies outside the workspace."""


class UsageError(OnssError, ValueError):
    """An operation was called outside its precondition."""


class ConfigurationError(OnssError):
    """Engine parameters violate the safety-margin requirement."""


class GenerationError(OnssError):
    """Scenario placement failed within the retry budget."""
