"""Exception hierarchy shared by every hammersim module."""


class HammersimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(HammersimError, ValueError):
    """Invalid experiment configuration; ``key`` names the offending config key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class GeometryError(ConfigError):
    pass


class _Positioned:
    # Trace replay fills in ``position`` with the index of the offending command.
    position = None

    def __str__(self):
        msg = super().__str__()
        if self.position is not None:
            return f"command {self.position}: {msg}"
        return msg


class AddressError(_Positioned, HammersimError, IndexError):
    pass


class ProtocolError(_Positioned, HammersimError):
    """A command violated the bank state machine."""


class BankAlreadyOpen(ProtocolError):
    pass


class RowNotOpen(ProtocolError):
    pass


class SpdFormatError(HammersimError, ValueError):
    pass


class TraceFormatError(HammersimError, ValueError):
    pass


class SparesExhausted(HammersimError):
    pass


class EdgeVictim(HammersimError, ValueError):
    pass
