"""Exception types shared across isolab.

Every error carries a short machine-readable ``code`` (``"POLE_COLLISION"``,
``"BLOWUP_DETECTED"``, ...) so the CLI can map failures onto exit codes
without string matching on messages.
"""


class IsolabError(Exception):
    """Base class; ``code`` names the failure condition."""

    code = "ERROR"

    def __init__(self, message, code=None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details


class InvalidInput(IsolabError):
    """Rejected input: bad shapes, collisions, violated normalizations."""

    code = "INVALID_INPUT"


class NumericalAbort(IsolabError):
    """Integration or iteration could not finish (blow-up, step underflow)."""

    code = "NUMERICAL_ABORT"


class BlowupDetected(NumericalAbort):
    """Residues exceeded the configured ceiling during a Schlesinger flow.

    ``partial`` holds the last accepted state, ``samples`` any track samples
    collected before the abort.
    """

    code = "BLOWUP_DETECTED"

    def __init__(self, message, partial=None, **details):
        super().__init__(message, **details)
        self.partial = partial
