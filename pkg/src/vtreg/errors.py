"""Exception types raised across the library.

Everything derives from VtregError so callers (notably the CLI) can catch
operational failures in one place and map them to an exit code.
"""


class VtregError(Exception):
    """Base class for all errors raised by this package."""


# geometry / io

class EmptyMesh(VtregError):
    """Mesh has no faces or no surface area to work with."""


class EmptyCloud(VtregError):
    """Operation requires a nonempty point cloud."""


class MeshFormatError(VtregError):
    """Mesh file could not be parsed as triangles."""


# preprocessing

class TooFewPoints(VtregError):
    """Cloud is too small for the requested neighborhood statistic."""


class TooFewFrames(VtregError):
    """Frame-to-frame statistic needs at least two frames."""


# fusion

class ModelLabelPresent(VtregError):
    """Sensor-weighting was asked to weight model-labeled points."""


class BothEmpty(VtregError):
    """Fusion needs at least one nonempty input cloud."""


class EmptyGroundTruth(VtregError):
    """Coverage metric needs a nonempty reference surface."""


# registration

class LengthMismatch(VtregError):
    """Paired arrays have different lengths."""


class ZeroTotalWeight(VtregError):
    """Weights sum to zero; the weighted problem is undefined."""


class DegenerateConfiguration(VtregError):
    """Point configuration does not pin down a unique rotation."""


class AllCorrespondencesRejected(VtregError):
    """Distance gating removed every correspondence."""


class AllStartsFailed(VtregError):
    """Every multi-start initialization raised instead of converging."""


# synthetic scenes

class BadDimensions(VtregError):
    """Shape specification has missing, unknown, or nonpositive dimensions."""


class CameraInsideMesh(VtregError):
    """Camera position lies inside the posed object."""


class ContactOffSurface(VtregError):
    """Tactile contact point is too far from the object surface."""


# evaluation

class ZeroVariance(VtregError):
    """Correlation is undefined when an input has zero variance."""


class EmptyBenchmark(VtregError):
    """Benchmark was invoked with no scenes."""


# cli

class InvalidConfig(VtregError):
    """Configuration file is missing, malformed, or has bad keys."""
