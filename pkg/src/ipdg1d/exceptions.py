"""Exception types raised by the solver and analysis routines."""

import numpy as np


class CoercivityError(RuntimeError):
    """The interior penalty form is not positive definite for the given penalty."""

    def __init__(self, sigma0, lambda_min=None, message=None):
        self.sigma0 = sigma0
        self.lambda_min = lambda_min
        if message is None:
            message = f"interior penalty form is not coercive for sigma0={sigma0:g}"
            if lambda_min is not None:
                message += f" (lambda_min={lambda_min:.6g})"
            message += "; increase sigma0"
        super().__init__(message)


class SkeletonCollisionError(ValueError):
    """A point source sits on (or numerically at) a mesh vertex."""

    def __init__(self, xbar, vertex, distance):
        self.xbar = xbar
        self.vertex = vertex
        self.distance = distance
        super().__init__(
            f"source location xbar={xbar!r} lies on the mesh skeleton "
            f"(vertex {vertex} at distance {distance:.3g})"
        )


class NumericalRankError(np.linalg.LinAlgError):
    """A Gram matrix is not numerically positive definite."""
