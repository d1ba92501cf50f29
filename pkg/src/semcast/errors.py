"""Exception hierarchy for the semcast pipeline.

Parameter misuse (bad radius, mismatched dims, out-of-range rects) raises
plain ValueError; these classes cover domain failures that callers are
expected to handle or report.
"""


class SemcastError(Exception):
    """Base class for semcast domain errors."""


class CaptionError(SemcastError):
    """Caption source could not produce a caption."""


class EncodingError(SemcastError):
    """Payload cannot be serialized (invariant violation)."""


class FormatError(SemcastError):
    """Bitstream is structurally unreadable: bad magic, bad version, truncation."""


class IntegrityError(SemcastError):
    """Bitstream parses but its CRC does not match (uncorrected channel damage)."""


class LdpcConstructionError(SemcastError):
    """No full-rank parity-check matrix found within the reseed budget."""


class RestorationError(SemcastError):
    """Restoration backend failed; carries backend diagnostics in the message."""


class MetricError(SemcastError):
    """External metric plugin missing, crashed, or returned unparsable output."""


class FairnessError(SemcastError):
    """Compared systems consumed unequal channel uses; comparison refused."""
