"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for all geometric failures."""


class ChartEscape(GeometryError):
    """The image of a chart point left the affine chart (singular denominator)."""


class DegenerateConfiguration(GeometryError):
    """Cross-ratio arguments coincide where the ratio is undefined or infinite."""


class NonDiagonalizableBeyondTolerance(GeometryError):
    """The dominant eigenvalue cluster has a defective (non-semisimple) block."""


class PointOutside(GeometryError):
    """A point required to be inside the body is not a member."""


class NotBoundary(GeometryError):
    """A point required to lie on the boundary is interior or far outside."""


class EmptyClip(GeometryError):
    """A body does not meet the clipping ball (no common reference point)."""


class BallNotContained(GeometryError):
    """The requested metric ball is not contained in the body."""


class NotOrthogonal(GeometryError):
    """A matrix required to be orthogonal fails the orthogonality check."""


class ConvergenceNotReached(GeometryError):
    """A degenerate-limit computation did not reach a rank-one limit."""


class WitnessNotFound(GeometryError):
    """A search that must produce a witness exhausted its budget without one."""


class ProbeOutside(GeometryError):
    """A probe point for a convergence experiment is outside a required body."""


class DescriptorError(GeometryError):
    """A domain descriptor or run configuration is malformed."""
