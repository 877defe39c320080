"""Exception types shared across the package."""


class CapabilityError(RuntimeError):
    """A requested system size or feature exceeds what this build supports."""


class IntegrityError(RuntimeError):
    """Certified quantities disagree; indicates a bug, not a bad input."""
