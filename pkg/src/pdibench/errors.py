"""Exception hierarchy for the auditing engine.

Every error that a public operation can raise is a named subclass of
:class:`PdiError`, so callers can catch the base class at batch boundaries
and still report precise failure reasons per video.
"""


class PdiError(Exception):
    """Base class for all engine errors."""


# --- interchange ---------------------------------------------------------

class MissingMeta(PdiError):
    """Bundle directory has no parseable meta file."""


class DimensionMismatch(PdiError):
    """An evidence tensor disagrees with the video dimensions."""


class CorruptTensor(PdiError):
    """An evidence file exists but cannot be decoded consistently."""


# --- geometry ------------------------------------------------------------

class NonPositiveDepth(PdiError):
    """Projection requested for a point at or behind the camera plane."""


class InvalidSample(PdiError):
    """Pointmap sampled at a location marked invalid."""


class TransverseMotion(PdiError):
    """Vanishing point undefined: motion has no depth component."""


class DegenerateTrack(PdiError):
    """Pixel track too short or too small to fit a line."""


class VpTooClose(PdiError):
    """A centroid lies within one pixel of the vanishing point."""


class DegenerateVp(PdiError):
    """Vanishing-point direction vector shorter than one pixel."""


# --- metrics -------------------------------------------------------------

class InsufficientFrames(PdiError):
    """Too few frames for the requested kinematic quantity."""


class NoValidFrames(PdiError):
    """No frame has enough valid foreground evidence."""


class InsufficientAnchors(PdiError):
    """Fewer than two anchors survive filtering."""


class NoUsableFrames(PdiError):
    """No frame after the first has two usable anchor pairs."""


# --- fidelity guard ------------------------------------------------------

class MissingEvidence(PdiError):
    """Reprojection audit requested without frames, poses or intrinsics."""


# --- aggregation ---------------------------------------------------------

class InsufficientGt(PdiError):
    """Ground-truth anchoring needs at least two ground-truth videos."""


class TooFewValues(PdiError):
    """Outlier statistics need at least four values."""


class EmptyResults(PdiError):
    """Report requested over an empty results set."""


# --- synthetic scenes ----------------------------------------------------

class SpecInvalid(PdiError):
    """Scene specification failed validation."""


class ObjectOutOfView(PdiError):
    """Rendered object violates the visibility contract."""


class IncompatibleViolation(PdiError):
    """Violation parameters do not fit the scene (e.g. frame out of range)."""
