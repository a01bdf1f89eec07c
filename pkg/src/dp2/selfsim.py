"""Assembled self-similar solutions of the two-component system.

A solution binds system constants (k1, k2, k3), a density shape and a
scale-factor trajectory a(s) into the pair

    rho(t, x) = f(eta) / a(4t)**((k1+k2)/4),   eta = x / a(4t)**(k2/4),
    u(t, x)   = (a'(4t) / a(4t)) * x,

using the similarity exponent k2/4 from the change of variables (the
two agree with the 1/4 shorthand exactly when k2 = 1).  The time map
s = 4t is applied once at the API boundary; everything internal runs
in s.  Evaluation past a touchdown is a hard error: the solution
ceases to exist when the density collapses at the origin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .emden import EmdenProblem, EmdenTrajectory, Fate, integrate
from .errors import ValidationError
from .profile import Profile


class WrongBranch(ValidationError):
    """Operation not defined for this branch of the solution family."""


class BeyondBlowup(ValidationError):
    """Requested time at or past the collapse time T = S/4."""


class HorizonExceeded(ValidationError):
    """Requested time past the integrated horizon of a global run."""


@dataclass(frozen=True)
class SystemParams:
    """Constants (k1, k2, k3) of the system; kappa = k1/2 + k2 - 1."""

    k1: float
    k2: float
    k3: float

    def __post_init__(self) -> None:
        for name in ("k1", "k2", "k3"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if not (self.k2 > 0.0):
            raise ValidationError(
                f"k2 must be > 0 for the similarity exponent k2/4, got k2={self.k2}"
            )

    @property
    def kappa(self) -> float:
        return 0.5 * self.k1 + self.k2 - 1.0


@dataclass(frozen=True)
class FreeProfile:
    """Arbitrary nonnegative C1 shape for the decoupled branch k3 = 0."""

    rho0: Callable[[np.ndarray], np.ndarray]

    def eval_f(self, eta):
        vals = np.asarray(self.rho0(np.asarray(eta, dtype=float)), dtype=float)
        if np.any(vals < 0.0):
            raise ValidationError("free profile returned negative density")
        if np.isscalar(eta) or np.ndim(eta) == 0:
            return float(vals)
        return vals


class OriginFate(enum.Enum):
    DIVERGES_AT_T = "DivergesAtT"
    DECAYS_TO_ZERO = "DecaysToZero"


@dataclass(frozen=True)
class OriginDensityResult:
    fate: OriginFate
    T: Optional[float]


@dataclass(frozen=True)
class SelfSimilarSolution:
    params: SystemParams
    profile: Union[Profile, FreeProfile]
    traj: EmdenTrajectory
    xi: float

    def __post_init__(self) -> None:
        k3 = self.params.k3
        if k3 == 0.0:
            if self.xi != 0.0:
                raise WrongBranch("k3 = 0 requires xi = 0")
            if not isinstance(self.profile, FreeProfile):
                raise WrongBranch("k3 = 0 takes a FreeProfile shape")
        else:
            if not isinstance(self.profile, Profile):
                raise WrongBranch("k3 != 0 takes the compact-support Profile")
            if k3 * self.xi <= 0.0:
                raise WrongBranch(
                    f"invalid branch: k3={k3} and xi={self.xi} must share a sign"
                )
        if self.traj.problem.xi != self.xi:
            raise ValidationError("trajectory was integrated with a different xi")

    # -- time handling ----------------------------------------------------

    def _scale_at(self, t: float) -> tuple[float, float]:
        """(a, a') at s = 4t with horizon and blowup guards."""
        s = 4.0 * t
        if s < 0.0:
            raise ValidationError(f"t must be >= 0, got t={t}")
        if self.traj.fate is Fate.TOUCHDOWN and s >= self.traj.touchdown_s:
            raise BeyondBlowup(
                f"t={t} is at or past the collapse time T={self.traj.touchdown_s / 4.0}"
            )
        if s > self.traj.s_end:
            raise HorizonExceeded(
                f"t={t} exceeds the integrated horizon t_max={self.traj.s_end / 4.0}"
            )
        return self.traj.a(s), self.traj.a_dot(s)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, t: float, x):
        """Density and velocity at (t, x); x may be a scalar or array."""
        a, a_dot = self._scale_at(t)
        x_arr = np.asarray(x, dtype=float)
        eta = x_arr / a ** (0.25 * self.params.k2)
        rho = self.profile.eval_f(eta) / a ** (0.25 * (self.params.k1 + self.params.k2))
        u = (a_dot / a) * x_arr
        if np.isscalar(x) or x_arr.ndim == 0:
            return float(rho), float(u)
        return np.asarray(rho), u

    def support_halfwidth(self, t: float) -> float:
        """Spatial support bound sqrt(beta)*alpha*a(4t)**(k2/4)."""
        if not isinstance(self.profile, Profile):
            raise WrongBranch("support bound is defined for compact profiles only")
        a, _ = self._scale_at(t)
        return self.profile.half_width * a ** (0.25 * self.params.k2)

    def mass(self, t: float) -> float:
        """Total mass a(4t)**(-k1/4) * mass_eta; conserved exactly iff k1 = 0."""
        if not isinstance(self.profile, Profile):
            raise WrongBranch("mass is defined for compact profiles only")
        a, _ = self._scale_at(t)
        return a ** (-0.25 * self.params.k1) * self.profile.mass_eta()

    # -- diagnostics -------------------------------------------------------

    def origin_density_limit(self, n_samples: int = 12) -> OriginDensityResult:
        """Fate of rho(t, 0): collapse for xi < 0, decay for xi > 0.

        For a touchdown trajectory, samples rho(t, 0) along a geometric
        approach t -> T- and checks monotone unbounded growth; for the
        global branch, checks monotone decay over the horizon.
        """
        if self.params.k3 == 0.0:
            raise WrongBranch("origin density fate needs a compact-profile branch")

        if self.traj.fate is Fate.TOUCHDOWN:
            S = self.traj.touchdown_s
            ts = (S / 4.0) * (1.0 - 4.0 ** (-np.arange(1, n_samples + 1, dtype=float)))
            vals = [self.evaluate(t, 0.0)[0] for t in ts]
            if not all(b > a for a, b in zip(vals, vals[1:])):
                raise ValidationError("rho(t,0) failed to grow monotonically toward T")
            if not vals[-1] > 1e2 * vals[0]:
                raise ValidationError("rho(t,0) growth toward T looks bounded")
            return OriginDensityResult(OriginFate.DIVERGES_AT_T, S / 4.0)

        ts = np.linspace(0.0, self.traj.s_end / 4.0, n_samples)
        vals = [self.evaluate(t, 0.0)[0] for t in ts]
        if not all(b < a for a, b in zip(vals, vals[1:])):
            raise ValidationError("rho(t,0) failed to decay over the horizon")
        return OriginDensityResult(OriginFate.DECAYS_TO_ZERO, None)

    # -- emission ----------------------------------------------------------

    def snapshot(self, t: float, xs: np.ndarray):
        rho, u = self.evaluate(t, xs)
        return rho, u

    def snapshot_metadata(self, t: float) -> dict:
        a, a_dot = self._scale_at(t)
        return {
            "t": t,
            "a": a,
            "a_dot": a_dot,
            "mass": self.mass(t) if isinstance(self.profile, Profile) else None,
            "support_halfwidth": (
                self.support_halfwidth(t) if isinstance(self.profile, Profile) else None
            ),
        }


def build_solution(
    params: SystemParams,
    xi: float,
    alpha: float,
    a0: float = 1.0,
    a1: float = 0.0,
    s_max: float = 10.0,
    mu: float = 4.0,
    tol: float = 1e-10,
    rho0: Optional[Callable] = None,
) -> SelfSimilarSolution:
    """Assemble a solution: shape from (k3, xi, alpha), trajectory from kappa.

    For k3 = 0 (and xi = 0) pass ``rho0``, the arbitrary nonnegative C1
    shape of the decoupled branch.
    """
    problem = EmdenProblem(xi=xi, kappa=params.kappa, mu=mu, a0=a0, a1=a1, s_max=s_max)
    traj = integrate(problem, tol=tol)
    if params.k3 == 0.0:
        if rho0 is None:
            raise ValidationError("k3 = 0 requires an explicit rho0 shape")
        prof: Union[Profile, FreeProfile] = FreeProfile(rho0=rho0)
    else:
        prof = Profile.from_params(params.k3, xi, alpha)
    return SelfSimilarSolution(params=params, profile=prof, traj=traj, xi=xi)
