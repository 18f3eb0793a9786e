"""Nesterov's accelerated gradient method with a gradient-norm exit test."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonConvergenceError, ParameterError


@dataclass(frozen=True)
class AgdSpec:
    """Constants for `agd`: smoothness ``L``, strong convexity ``mu``, target distance ``delta``."""

    L: float
    mu: float
    delta: float
    max_iters: Optional[int] = None

    def __post_init__(self):
        if not (0 < self.mu <= self.L):
            raise ParameterError(f"need 0 < mu <= L, got mu={self.mu}, L={self.L}")
        if not self.delta > 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ParameterError("max_iters must be positive")

    @property
    def kappa(self):
        return self.L / self.mu

    @property
    def theta(self):
        s = math.sqrt(self.kappa)
        return (s - 1.0) / (s + 1.0)

    def iteration_bound(self, radius):
        """``2 sqrt(kappa) log(2 kappa radius / delta)``, clipped at 0."""
        k = self.kappa
        arg = 2.0 * k * radius / self.delta
        return 2.0 * math.sqrt(k) * math.log(arg) if arg > 1.0 else 0.0

    def default_cap(self, radius):
        return int(math.ceil(self.iteration_bound(radius))) + 64


def agd(grad, y0, spec, r_guess=None, callback=None):
    """Minimize a smooth strongly convex function to a target distance.

    Runs the constant-momentum scheme

        y~_{k+1} = y_k + theta (y_k - y_{k-1}),   y_{k+1} = y~_{k+1} - grad(y~_{k+1}) / L

    with ``y_{-1} = y_0`` until ``||grad(y_k)|| <= mu * delta``, which
    guarantees ``||y_k - y*|| <= delta``.

    Parameters
    ----------
    grad : callable
        Gradient oracle of an ``L``-smooth, ``mu``-strongly convex function.
    y0 : ndarray
        Starting point; tested before the first step.
    spec : AgdSpec
    r_guess : float, optional
        Caller's estimate of ``||y0 - y*||`` used for the iteration cap when
        ``spec.max_iters`` is unset. The cap uses the larger of this and the
        certified bound ``||grad(y0)|| / mu``.
    callback : callable, optional
        Called as ``callback(y)`` after every step with the new iterate.

    Returns
    -------
    y : ndarray
        Final iterate.
    iters : int
        Number of steps taken.

    Raises
    ------
    NonConvergenceError
        If the cap is reached before the exit test passes.
    """
    L, mu = spec.L, spec.mu
    tol = mu * spec.delta
    theta = spec.theta
    y = np.array(y0, dtype=np.float64)
    g = grad(y)
    gnorm = float(np.linalg.norm(g))
    if gnorm <= tol:
        return y, 0
    if spec.max_iters is not None:
        cap = spec.max_iters
    else:
        radius = gnorm / mu if r_guess is None else max(float(r_guess), gnorm / mu)
        cap = spec.default_cap(radius)

    y_prev = y
    for it in range(1, cap + 1):
        # with theta = 0, or on the first step, the extrapolated point is y itself
        y_tilde = y
        if theta != 0.0 and it > 1:
            y_tilde = y + theta * (y - y_prev)
            g = grad(y_tilde)
        y_prev, y = y, y_tilde - g / L
        if callback is not None:
            callback(y)
        g = grad(y)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return y, it
    raise NonConvergenceError(
        f"AGD did not reach ||grad|| <= {tol:.3g} in {cap} iterations (last {gnorm:.3g})",
        x=y, residual=gnorm)
