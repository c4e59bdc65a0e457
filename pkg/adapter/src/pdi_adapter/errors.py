class ExportError(Exception):
    """Base class for adapter failures."""


class ModelUnavailable(ExportError):
    """A neural perception model or its weights cannot be loaded."""


class SubjectNotFound(ExportError):
    """No audit subject could be isolated in the video."""


class ReconstructionFailed(ExportError):
    """3D uplifting produced no usable geometry."""


class VideoUnreadable(ExportError):
    """Input video or frame directory cannot be decoded."""
