"""Vector transports.

Closed-form differentiated retractions for the retractions in
:mod:`scaledcg.manifolds`, plus the norm-preserving rescaling of a
transported vector and the switching rule that applies the rescaling only
when the plain transport would lengthen the vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import DegenerateTransportError, DomainError, Manifold, zeros_like

DEGENERATE_NORM = 1e-300


def transport_diff_qr_sphere(x, eta, xi):
    """``D R_x(eta)[xi]`` for ``R_x(xi) = (x + xi) / |x + xi|``."""
    y = x + eta
    s = float(y @ y)
    return (xi - y * (float(y @ xi) / s)) / np.sqrt(s)


def transport_diff_orthographic(x, eta, xi):
    """``D R_x(eta)[xi]`` for the orthographic retraction.

    Only ``|eta| < 1`` is required; the map is linear in ``xi`` so no bound
    on ``xi`` is imposed.
    """
    s = float(eta @ eta)
    if s >= 1.0:
        raise DomainError(f"orthographic transport needs |eta| < 1, got {np.sqrt(s):.6g}")
    return xi - (float(eta @ xi) / np.sqrt(1.0 - s)) * x


def _skew_lower(a):
    low = np.tril(a, -1)
    return low - low.T


def transport_diff_qr_stiefel(X, eta, xi, method="analytic", h=1e-6):
    """``D qf(X + eta)[xi]``.

    The analytic route differentiates ``B = QR``: with ``Z = xi R^{-1}``,
    ``dQ = Q skew_lower(Q^T Z) + (I - Q Q^T) Z``. ``method="fd"`` uses a
    central difference of ``qf`` instead, projected back to the tangent
    space of the retracted point.
    """
    from .manifolds import qf, qr_positive

    B = X + eta
    if method == "fd":
        Q = qf(B)
        d = (qf(B + h * xi) - qf(B - h * xi)) / (2 * h)
        sym = Q.T @ d
        return d - Q @ (0.5 * (sym + sym.T))
    if method != "analytic":
        raise ValueError(f"unknown method {method!r}")
    Q, R = qr_positive(B)
    Z = solve_triangular(R, xi.T, trans="T", lower=False).T
    QtZ = Q.T @ Z
    return Q @ _skew_lower(QtZ) + (Z - Q @ QtZ)


@dataclass(frozen=True)
class TransportOutcome:
    """Result of the switching transport.

    ``ratio`` is ``|T^R_eta(xi)|`` at the new point over ``|xi|`` at the
    old one, whatever branch was taken; ``raw`` is the unscaled ``T^R_eta(xi)``.
    """

    vector: object
    ratio: float
    scaled: bool
    raw: object = None


def transport_scaled(manifold: Manifold, x, eta, xi, new_point=None):
    """Transport ``xi`` along ``eta`` and rescale it to keep its norm.

    ``new_point`` may be passed when ``R_x(eta)`` is already known.
    A zero ``xi`` maps to zero.
    """
    nxi = manifold.norm(x, xi)
    if nxi == 0.0:
        return zeros_like(xi)
    y = manifold.retract(x, eta) if new_point is None else new_point
    t = manifold.transport_diff(x, eta, xi)
    nt = manifold.norm(y, t)
    if nt <= DEGENERATE_NORM:
        raise DegenerateTransportError("transported vector vanished; cannot rescale")
    return t * (nxi / nt)


def transport_switch(manifold: Manifold, x, eta, xi, new_point=None) -> TransportOutcome:
    """Use the differentiated retraction unless it increases the norm.

    Ties keep the unscaled vector.
    """
    y = manifold.retract(x, eta) if new_point is None else new_point
    t = manifold.transport_diff(x, eta, xi)
    nxi = manifold.norm(x, xi)
    nt = manifold.norm(y, t)
    if nxi == 0.0:
        return TransportOutcome(t, 1.0, False, t)
    ratio = nt / nxi
    if nt <= nxi:
        return TransportOutcome(t, ratio, False, t)
    return TransportOutcome(t * (nxi / nt), ratio, True, t)
