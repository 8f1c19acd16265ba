"""Exception hierarchy.

Every error raised on purpose by this package derives from DualPlaneError so
callers (the CLI in particular) can map failures to exit codes.
"""


class DualPlaneError(Exception):
    pass


# bit codec

class MalformedBlockError(DualPlaneError, ValueError):
    """A byte block did not contain exactly eight bits."""


class MalformedStreamError(DualPlaneError, ValueError):
    """A bit stream had a length the operation cannot accept."""


class ShareLengthMismatchError(DualPlaneError, ValueError):
    """Odd and even halves differ in length."""


# keys

class EntropyUnavailableError(DualPlaneError, RuntimeError):
    pass


class CannotExtendError(DualPlaneError, ValueError):
    """A key is too short for its plane and no random source was given."""


# shares and file formats

class InconsistentLengthError(DualPlaneError, ValueError):
    pass


class FormatError(DualPlaneError, ValueError):
    """Base class for problems reading DPS1/DPK1/DPW1 data."""


class NotAShareError(FormatError):
    """Unknown magic bytes."""


class NotAKeyError(NotAShareError):
    """Unknown magic bytes where a DPK1 key was expected."""


class CorruptShareError(FormatError):
    """Truncated or internally inconsistent share/key record."""


class UnsupportedVersionError(FormatError):
    pass


class NothingToExportError(DualPlaneError, ValueError):
    pass


# cipher

class KeySizeMismatchError(DualPlaneError, ValueError):
    pass


class WrongKeyError(DualPlaneError, ValueError):
    """Key belongs to the other plane."""


class InvalidBundleError(DualPlaneError, ValueError):
    pass


# session

class ProtocolViolationError(DualPlaneError):
    pass


class MalformedFrameError(FormatError):
    pass


class TruncatedFrameError(MalformedFrameError):
    pass


class OversizeFrameError(MalformedFrameError):
    pass


class SessionTimeoutError(DualPlaneError, TimeoutError):
    pass


class PeerError(DualPlaneError):
    """The remote side aborted the session with an ERROR frame."""

    def __init__(self, code, reason):
        super().__init__(reason)
        self.code = code
        self.reason = reason
