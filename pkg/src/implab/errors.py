"""Exception types shared across the package."""


class ImplabError(Exception):
    """Base class for all package-specific errors."""


class BranchCutError(ImplabError):
    """Argument of a principal-branch function lies on its cut."""


class OrderMismatch(ImplabError):
    """Jet arithmetic between jets of different truncation order."""


class NonInvertibleJet(ImplabError):
    """Functional inversion of a jet whose linear coefficient vanishes."""


class NewtonDivergence(ImplabError):
    """Newton iteration failed to converge.

    Carries the seed and the last iterate for diagnosis.
    """

    def __init__(self, message, seed=None, last=None):
        super().__init__(message)
        self.seed = seed
        self.last = last


class ExtrapolationUnstable(ImplabError):
    """Successive extrapolation estimates diverge (or grid too small)."""


class ResonanceObstruction(ImplabError):
    """Non-solvable step in the term-by-term invariant-curve solve."""

    def __init__(self, degree, obstruction):
        super().__init__(
            f"resonant step at degree {degree}: obstruction {obstruction!r} is nonzero"
        )
        self.degree = degree
        self.obstruction = obstruction


class DegenerateSplitting(ImplabError):
    """The two fixed points split with equal first-order speed."""


class NotInBasin(ImplabError):
    """Orbit budget exhausted (or domain left) before petal entry."""


class TailNotConverged(ImplabError):
    """Limit sequence did not settle within the iteration policy."""


class InverseBranchLost(ImplabError):
    """Local inverse branch left its contraction region."""


class DomainEscape(ImplabError):
    """Forward orbit left the configured evaluation domain.

    ``index`` is the iteration step at which the escape happened.
    """

    def __init__(self, index, point=None):
        super().__init__(f"orbit escaped the evaluation domain at step {index}")
        self.index = index
        self.point = point


class ZeroTangentialCoordinate(ImplabError):
    """Tangential coordinate vanished where a logarithm is required."""
