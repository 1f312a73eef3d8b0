"""Exception types raised across the package."""


class CesaroError(Exception):
    """Base class for all package errors."""


class MalformedSpec(CesaroError):
    pass


class DepthExceeded(CesaroError):
    pass


class TreeMismatch(CesaroError):
    pass


class TooLarge(CesaroError):
    pass


class NotInDomain(CesaroError):
    pass


class NoConvergence(CesaroError):
    def __init__(self, max_iters, estimate=None):
        super().__init__(f"no convergence after {max_iters} iterations")
        self.max_iters = max_iters
        self.estimate = estimate


class OutsideDisc(CesaroError):
    pass


class LeafEncountered(CesaroError):
    """The forward solve hit a genuine leaf; carries the leaf eigenpair."""

    def __init__(self, vertex, depth):
        self.vertex = int(vertex)
        self.depth = int(depth)
        super().__init__(
            f"leaf {self.vertex} at depth {self.depth}: "
            f"C e_v = (1/{self.depth + 1}) e_v"
        )

    @property
    def eigenvalue(self):
        from fractions import Fraction

        return Fraction(1, self.depth + 1)


class NoBranchingVertex(CesaroError):
    pass


class NegativeEntry(CesaroError):
    pass


class InfiniteBranchingIndex(CesaroError):
    pass


class TruncationTooShallow(CesaroError):
    pass
