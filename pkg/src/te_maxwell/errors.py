"""Exception types shared across the toolkit."""


class TEMaxwellError(Exception):
    """Base class for all toolkit errors."""


class InvalidMediaError(TEMaxwellError):
    """Media parameters are non-positive or violate the ellipticity bounds."""


class DegenerateMediaError(TEMaxwellError):
    """Media contrast is (numerically) zero; the transmission problem degenerates."""


class BranchCutError(TEMaxwellError):
    """Square-root argument landed on the closed negative real axis.

    Signals a violated wedge hypothesis: the decaying branch is ill-defined.
    """


class DegenerateSymbolError(TEMaxwellError):
    """A boundary-symbol denominator fell below the relative degeneracy floor."""


class UndefinedRatioError(TEMaxwellError):
    """Stability ratio requested for identically zero trace data."""


class ContourError(TEMaxwellError):
    """A contour passes through (or too close to) a zero of the determinant."""


class RefineFailureError(TEMaxwellError):
    """Root refinement failed to converge; the caller should bisect the contour."""


class DiscretizationError(TEMaxwellError):
    """Discrete assembly lost coercivity or sanity checks failed; refine the grid."""
