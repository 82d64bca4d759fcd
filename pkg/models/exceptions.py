"""
Exception types for equipped Markov compacta
Input problems subclass ValueError; check failures are reported, not raised
"""


class CompactumError(Exception):
    """Base class for all library errors"""


class GraphFormatError(CompactumError, ValueError):
    """Malformed or invalid graph document"""


class LevelError(CompactumError, ValueError):
    """Unknown vertex, vertex at the wrong level, or level out of bounds"""


class EnumerationCapExceeded(CompactumError, RuntimeError):
    """Refusal to enumerate more paths than the configured cap"""

    def __init__(self, count: int, cap: int):
        super().__init__(f"enumeration refused: {count} paths exceed cap {cap}")
        self.count = count
        self.cap = cap


class CotransitionTableError(CompactumError, ValueError):
    """Cotransition row that is missing, off-support, or not summing to 1"""


class TailEquivalenceError(CompactumError, ValueError):
    """Two paths that are not tail-equivalent within the truncation"""


class MeasureError(CompactumError, ValueError):
    """Invalid Markov measure data or query"""


class NonCentralMeasureError(MeasureError):
    """Measure whose cocycle is not identically 1"""


class TableauError(CompactumError, ValueError):
    """Invalid tableau, Young path, or letter distribution"""


class ConfigError(CompactumError, ValueError):
    """Settings file that is not a YAML mapping of sections"""
