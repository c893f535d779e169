"""Error types shared across the package."""


class ParseError(ValueError):
    """Malformed transaction input; message carries the 1-based line number."""


class DimensionError(ValueError):
    """Mismatched widths, lengths, or moduli between values that must agree."""


class ContractError(ValueError):
    """A precondition on an operation's arguments was violated."""


class UnsupportedConfiguration(ValueError):
    """Configuration outside the supported envelope (e.g. too few players)."""


class ImprobableFailure(RuntimeError):
    """A retry budget for a negligible-probability failure was exhausted."""


class ProtocolIntegrityError(RuntimeError):
    """A protocol run produced an internally inconsistent result."""


class RoutingError(LookupError):
    """A message was addressed to a player the fabric does not know."""
