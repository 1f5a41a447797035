"""Exception hierarchy shared by all segrefine modules."""


class SegrefineError(Exception):
    """Base class for all data and model errors raised by this package."""


class EmptyLine(SegrefineError):
    """An input line contained nothing but whitespace."""


class AtomMisalignment(SegrefineError):
    """A gold word boundary falls inside an atom."""


class BeamEmpty(SegrefineError):
    """Beam search produced no valid label sequence."""


class NoPath(SegrefineError):
    """A word lattice has no path from start to end."""


class TextMismatch(SegrefineError):
    """Two segmentations of supposedly the same sentence disagree on text."""


class LengthMismatch(SegrefineError):
    """Parallel token and label sequences have different lengths."""


class ShapeMismatch(SegrefineError):
    """An array argument does not have the expected shape."""


class LengthExceeded(SegrefineError):
    """A sequence is longer than the model's configured maximum."""


class DimensionMismatch(SegrefineError):
    """A pretrained embedding file has the wrong vector dimension."""


class CorpusMismatch(SegrefineError):
    """Gold and predicted corpora are not sentence-parallel."""
