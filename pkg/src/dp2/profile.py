"""Compact-support density shape in the self-similar coordinate.

The stored form is f(eta) = beta**-0.5 * sqrt(beta*alpha**2 - eta**2)
on |eta| <= sqrt(beta)*alpha and exactly 0 outside, with beta = xi/k3.
This is the canonical rewrite of the (k3/xi)-prefixed closed form; it
avoids the removable 0/0 when only the ratio beta is stored.  Note the
shape ODE beta*eta + f*f' = 0 is satisfied by this family exactly on
the unit-ratio profiles beta = 1, which are the ones the assembled
solutions are verified against at the PDE level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


class OutsideInterior(ValidationError):
    """A finite-difference stencil left the open support."""


@dataclass(frozen=True)
class Profile:
    """Semi-ellipse density shape with amplitude ``alpha`` and ratio ``beta``."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise ValidationError(f"alpha must be >= 0, got alpha={self.alpha}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValidationError(f"beta must be > 0, got beta={self.beta}")

    @classmethod
    def from_params(cls, k3: float, xi: float, alpha: float) -> "Profile":
        """Build the shape for given system constants.

        Only the sign-matched combinations (k3 > 0, xi > 0) and
        (k3 < 0, xi < 0) give beta = xi/k3 > 0 and hence a real
        compact-support shape; anything else is rejected.
        """
        if k3 == 0.0:
            raise ValidationError("k3=0 has no fixed shape; use FreeProfile")
        beta = xi / k3
        if beta <= 0.0:
            raise ValidationError(
                f"beta = xi/k3 = {beta} must be > 0 (xi and k3 of matching sign)"
            )
        return cls(alpha=alpha, beta=beta)

    @property
    def half_width(self) -> float:
        """Support bound sqrt(beta)*alpha."""
        return math.sqrt(self.beta) * self.alpha

    def eval_f(self, eta):
        """Evaluate f(eta); total function, 0 outside the support."""
        eta_arr = np.asarray(eta, dtype=float)
        rad = self.beta * self.alpha**2 - eta_arr**2
        vals = np.sqrt(np.maximum(rad, 0.0) / self.beta)
        vals = np.where(rad >= 0.0, vals, 0.0)
        if np.isscalar(eta) or eta_arr.ndim == 0:
            return float(vals)
        return vals

    def mass_eta(self) -> float:
        """Shape mass: semi-ellipse area (pi/2)*sqrt(beta)*alpha**2."""
        return 0.5 * math.pi * math.sqrt(self.beta) * self.alpha**2

    def ode_residual_f(self, eta: float, h: float) -> float:
        """Central-difference residual of the shape ODE at an interior point.

        Returns beta*eta + f(eta)*(f(eta+h) - f(eta-h))/(2h).  The
        stencil must stay strictly inside the support: the shape is
        only C0 at the boundary, where f' diverges.
        """
        if h <= 0.0:
            raise ValidationError(f"h must be > 0, got h={h}")
        if abs(eta) + h >= self.half_width:
            raise OutsideInterior(
                f"stencil |eta|+h = {abs(eta) + h} reaches the support "
                f"boundary {self.half_width}"
            )
        df = (self.eval_f(eta + h) - self.eval_f(eta - h)) / (2.0 * h)
        return self.beta * eta + self.eval_f(eta) * df
