"""Prox calculus: conjugate prox via the Moreau decomposition and the h_rho surrogate."""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnsupportedError


@dataclass(frozen=True)
class SurrogateSpec:
    """Radius ``rho`` of the dual ball defining ``h_rho(z) = sup_{||y||<=rho} <y,z> - h*(y)``."""

    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")


def prox_conjugate_scaled(h, ell, w, prox=None):
    """Evaluate ``prox_{h*/ell}(w)`` using only the prox of ``h``.

    Parameters
    ----------
    h : ProxFunction
    ell : float
        Positive scaling.
    w : ndarray
    prox : callable, optional
        Replacement for ``h.prox`` (used to route the call through a counter).

    Returns
    -------
    ndarray
        ``w - prox(ell, ell * w) / ell``.
    """
    if not ell > 0:
        raise ParameterError(f"ell must be positive, got {ell}")
    prox = h.prox if prox is None else prox
    w = np.asarray(w, dtype=np.float64)
    return w - prox(ell, ell * w) / ell


def h_rho_value(h, spec, z):
    """Closed-form value of the ``rho``-Lipschitz surrogate ``h_rho(z) <= h(z)``.

    Cone indicators give ``rho * ||P_polar(z)||``. A norm of weight ``w``
    gives ``min(rho, w) * ||z||`` for the Euclidean norm; the l1 norm is only
    handled when ``rho >= w * sqrt(m)``, where the surrogate equals ``h``.
    """
    rho = spec.rho
    z = np.asarray(z, dtype=np.float64)
    if h.is_cone:
        return rho * float(np.linalg.norm(h.polar_projection(z)))
    if h.kind == "euclidean_norm":
        return min(rho, h.params["weight"]) * float(np.linalg.norm(z))
    if h.kind == "l1_norm":
        wt = h.params["weight"]
        if rho >= wt * np.sqrt(z.size):
            return h.value(z)
        raise UnsupportedError(
            f"h_rho for l1_norm needs rho >= weight*sqrt(m) = {wt * np.sqrt(z.size):.6g}", kind=h.kind)
    raise UnsupportedError(f"no closed-form surrogate for regularizer kind {h.kind!r}", kind=h.kind)
