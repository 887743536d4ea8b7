"""Exception hierarchy shared across the package.

Two broad families matter to callers: ``DataError`` (bad or missing input
data, corpus problems, violated windowing preconditions) and
``AnalysisError`` (a computation cannot produce a meaningful result).
The CLI maps these onto distinct exit codes.
"""


class WorkbenchError(Exception):
    """Base class for all package errors."""


class DataError(WorkbenchError):
    """Input data is malformed, missing, or violates a precondition."""


class AnalysisError(WorkbenchError):
    """An analysis step cannot produce a valid result."""


# -- core model -------------------------------------------------------------

class WindowOutOfBounds(DataError):
    """Requested window crosses the stimulus span."""


class MissingModality(DataError):
    """A trial lacks a recording for the requested modality."""


class MissingBaseline(DataError):
    """Trial has no baseline span."""


# -- dsp --------------------------------------------------------------------

class UpsamplingNotSupported(DataError):
    pass


class IrrationalRatio(DataError):
    """Resampling ratio is not (approximately) a small rational."""


class InvalidBand(DataError):
    """Filter band lies outside (0, Nyquist)."""


class TooFewChannels(DataError):
    pass


class AllChannelsBad(DataError):
    pass


class MissingMontage(DataError):
    """Montage does not cover all channels of the recording."""


# -- features ---------------------------------------------------------------

class DegenerateVariance(AnalysisError):
    """Band variance below the numeric floor; entropy undefined."""


class NoPeaksFound(AnalysisError):
    pass


class TooFewIntervals(AnalysisError):
    pass


class InsufficientPulses(AnalysisError):
    pass


class MissingFeature(DataError):
    pass


# -- scr / stats ------------------------------------------------------------

class EmptyEventSet(AnalysisError):
    pass


class MissingEmotion(DataError):
    pass


class DegenerateGroup(AnalysisError):
    pass


class SegmentTooShort(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class TooFewSubjects(DataError):
    pass


class EmptyAdjacency(DataError):
    pass


class InsufficientData(DataError):
    pass


# -- harness ----------------------------------------------------------------

class UnlabeledTrial(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NonFiniteLoss(AnalysisError):
    """Training diverged even after learning-rate backoff."""


# -- io ---------------------------------------------------------------------

class ChecksumMismatch(DataError):
    pass


class UnsupportedVersion(DataError):
    pass


class MalformedManifest(DataError):
    pass


class InvalidSpec(DataError):
    pass
