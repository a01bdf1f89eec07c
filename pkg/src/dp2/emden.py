"""Scale-factor dynamics for the self-similar family.

The time-dependent scale factor a(s) obeys the Emden equation

    a''(s) = xi / (mu * a(s)**kappa),    a(0) = a0 > 0,  a'(0) = a1,

with mu = 4 for the scaled-time normalisation s = 4t used by the
self-similar construction (mu = 1 gives the unnormalised variant).
For xi < 0 the factor is pulled to a touchdown a -> 0+ at a finite
time S, which drives the density blowup of the assembled solution;
for xi > 0 the motion is convex and a grows without bound.

Two independent routes to the touchdown time are provided:

* :func:`integrate` - adaptive embedded Runge-Kutta with dense output
  and event detection at the touchdown threshold;
* :func:`touchdown_time_quadrature` - closed-form energy reduction
  a'^2 = a1^2 + 2*xi*(a^(1-kappa) - a0^(1-kappa))/(mu*(1-kappa))
  followed by adaptive quadrature of ds = -da/|a'(a)|.

They share no code path and cross-check each other in the test suite.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError, ValidationError

# Touchdown event fires at a = TOUCHDOWN_FRACTION * a0.  The slope a'(a)
# stays finite there for kappa < 1, so event bracketing at a small
# positive level is robust; only a = 0 itself is singular.
TOUCHDOWN_FRACTION = 1e-8

# Relative precision to which the event time is refined by bisection on
# the dense output.
TOUCHDOWN_REFINE_RTOL = 1e-10


class NonPositiveA0(ValidationError):
    """The initial value a0 must be strictly positive."""


class UnsupportedKappa(ValidationError):
    """Classification is only established for 0 < kappa <= 1."""


class StepCollapse(NumericalError):
    """The adaptive step size underflowed before touchdown or s_max."""


class NoTouchdown(ValidationError):
    """The energy level forbids the trajectory from reaching a = 0."""


class Fate(enum.Enum):
    TOUCHDOWN = "TouchdownAt"
    GLOBAL_ON_HORIZON = "GlobalOnHorizon"
    SLOPE_BLOWUP = "SlopeBlowup"


class Classification(enum.Enum):
    BLOWUP_FINITE_TIME = "BlowupFiniteTime"
    GLOBAL_GROWING = "GlobalGrowing"
    LINEAR = "Linear"


@dataclass(frozen=True)
class EmdenProblem:
    """Inputs of the scale-factor ODE.

    Parameters
    ----------
    xi : float
        Forcing strength; any sign.  xi < 0 pulls a(s) toward zero.
    kappa : float
        Exponent of the restoring term.  The canonical self-similar
        case k1 = k2 = 1 gives kappa = 1/2.
    mu : float
        Denominator normalisation, 1 or 4.  The scaled-time form of the
        construction carries mu = 4 (default).
    a0, a1 : float
        Initial value (must be > 0) and initial slope.
    s_max : float
        Integration horizon in the scaled time s = 4t.
    """

    xi: float
    kappa: float
    mu: float = 4.0
    a0: float = 1.0
    a1: float = 0.0
    s_max: float = 10.0

    def __post_init__(self) -> None:
        if not (self.a0 > 0.0):
            raise NonPositiveA0(f"a0 must be > 0, got a0={self.a0}")
        if self.mu not in (1.0, 4.0):
            raise ValidationError(f"mu must be 1 or 4, got mu={self.mu}")
        if not math.isfinite(self.kappa):
            raise ValidationError(f"kappa must be finite, got kappa={self.kappa}")
        if not (self.s_max > 0.0 and math.isfinite(self.s_max)):
            raise ValidationError(f"s_max must be positive and finite, got s_max={self.s_max}")
        for name in ("xi", "a1"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    def acceleration(self, a: float) -> float:
        return self.xi / (self.mu * a**self.kappa)

    def energy(self, a, a_dot):
        """Conserved energy; logarithmic potential for kappa = 1."""
        if self.kappa == 1.0:
            return 0.5 * np.asarray(a_dot) ** 2 - (self.xi / self.mu) * np.log(a)
        pw = 1.0 - self.kappa
        return 0.5 * np.asarray(a_dot) ** 2 - self.xi * np.asarray(a) ** pw / (self.mu * pw)


@dataclass(frozen=True)
class EmdenTrajectory:
    """Dense-output solution of an :class:`EmdenProblem`.

    ``samples`` holds the accepted integrator steps as rows (s, a, a').
    ``touchdown_s`` is the refined event time S when ``fate`` is
    TOUCHDOWN, else None.  Queries of a(s), a'(s) between samples use
    the integrator's dense output.
    """

    problem: EmdenProblem
    samples: np.ndarray
    fate: Fate
    touchdown_s: Optional[float]
    energy0: float
    energy_drift_max: float
    _dense: object = field(repr=False)

    @property
    def s_end(self) -> float:
        return float(self.samples[-1, 0])

    def _check_domain(self, s: float) -> None:
        if not (0.0 <= s <= self.s_end * (1.0 + 1e-12)):
            raise ValidationError(
                f"s={s} outside trajectory domain [0, {self.s_end}]"
            )

    def a(self, s: float) -> float:
        self._check_domain(s)
        return float(self._dense(min(s, self.s_end))[0])

    def a_dot(self, s: float) -> float:
        self._check_domain(s)
        return float(self._dense(min(s, self.s_end))[1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("s,a,a_dot\n")
            for s, a, ad in self.samples:
                fh.write(f"{s:.17g},{a:.17g},{ad:.17g}\n")

    def summary(self) -> dict:
        return {
            "fate": self.fate.value,
            "S": self.touchdown_s,
            "energy_drift_max": self.energy_drift_max,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def _rhs(problem: EmdenProblem, floor: float):
    xi, mu, kappa = problem.xi, problem.mu, problem.kappa

    def rhs(s, y):
        # Trial stages may probe below the touchdown level; pin the
        # force there so the solver never sees a NaN from a <= 0.
        a = y[0] if y[0] > floor else floor
        return (y[1], xi / (mu * a**kappa))

    return rhs


def _refine_touchdown(dense, lo: float, hi: float, eps_a: float) -> float:
    """Bisect the dense output for a(s) = eps_a to relative precision."""
    if dense(hi)[0] - eps_a > 0.0:
        return hi  # event locator already at machine precision
    while (hi - lo) > TOUCHDOWN_REFINE_RTOL * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if dense(mid)[0] - eps_a > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def integrate(problem: EmdenProblem, tol: float = 1e-10) -> EmdenTrajectory:
    """Integrate the scale-factor ODE with touchdown event detection.

    Uses an embedded adaptive Runge-Kutta pair (DOP853) with local error
    per step bounded by ``tol`` relative to the solution components.  If
    a(s) decreases through eps_a = 1e-8 * a0 the event time is refined
    by bisection on the dense output and the fate is TOUCHDOWN.

    Raises
    ------
    StepCollapse
        If the step size underflows before touchdown or s_max; must not
        occur for kappa in (0, 1].
    """
    if not (0.0 < tol <= 1e-3):
        raise ValidationError(f"tol must lie in (0, 1e-3], got {tol}")

    eps_a = TOUCHDOWN_FRACTION * problem.a0
    floor = 1e-3 * eps_a

    def touchdown_event(s, y):
        return y[0] - eps_a

    touchdown_event.terminal = True
    touchdown_event.direction = -1.0

    sol = solve_ivp(
        _rhs(problem, floor),
        (0.0, problem.s_max),
        (problem.a0, problem.a1),
        method="DOP853",
        rtol=tol,
        # Keep error control purely relative near touchdown (a ~ 1e-8*a0);
        # the tiny absolute floor only guards exact-zero components.
        atol=1e-30,
        dense_output=True,
        events=touchdown_event,
    )

    if sol.status == -1:
        raise StepCollapse(f"integrator failed before touchdown or s_max: {sol.message}")

    touchdown_s: Optional[float] = None
    if sol.status == 1:
        fate = Fate.TOUCHDOWN
        s_event = float(sol.t_events[0][0])
        lo = float(sol.t[-2]) if len(sol.t) >= 2 else 0.0
        touchdown_s = _refine_touchdown(sol.sol, lo, s_event, eps_a)
    else:
        fate = Fate.GLOBAL_ON_HORIZON

    samples = np.column_stack([sol.t, sol.y[0], sol.y[1]])
    if not np.all(np.isfinite(samples)):
        fate = Fate.SLOPE_BLOWUP
        keep = np.all(np.isfinite(samples), axis=1)
        samples = samples[keep]

    e0 = float(problem.energy(problem.a0, problem.a1))
    energies = problem.energy(samples[:, 1], samples[:, 2])
    drift = float(np.max(np.abs(energies - e0))) / max(1.0, abs(e0))

    return EmdenTrajectory(
        problem=problem,
        samples=samples,
        fate=fate,
        touchdown_s=touchdown_s,
        energy0=e0,
        energy_drift_max=drift,
        _dense=sol.sol,
    )


def classify(problem: EmdenProblem) -> Classification:
    """Fate dichotomy of the scale factor for 0 < kappa <= 1.

    xi < 0 gives touchdown in finite s (density blowup of the assembled
    solution), xi > 0 gives unbounded growth of a, and xi = 0 gives
    plain linear motion regardless of kappa.  The xi > 0 statement
    assumes the trajectory enters its growing branch (always true for
    a1 >= 0); a strongly negative a1 can still drive a to zero, which
    :func:`integrate` detects as a touchdown event.
    """
    if problem.xi == 0.0:
        return Classification.LINEAR
    if not (0.0 < problem.kappa <= 1.0):
        raise UnsupportedKappa(
            f"classification requires kappa in (0, 1], got kappa={problem.kappa}"
        )
    if problem.xi < 0.0:
        return Classification.BLOWUP_FINITE_TIME
    return Classification.GLOBAL_GROWING


# ---------------------------------------------------------------------------
# Quadrature oracle: energy reduction + adaptive Simpson integration.
# ---------------------------------------------------------------------------


class QuadratureBudgetExceeded(NumericalError):
    """Adaptive quadrature exceeded its evaluation budget."""


def _adaptive_simpson(f, a: float, b: float, rel_tol: float, depth: int = 48) -> float:
    """Adaptive Simpson with Richardson acceptance, relative tolerance.

    The absolute budget is anchored to a coarse composite estimate of
    the integral: endpoint or midpoint sampling alone misjudges the
    scale badly for boundary-layer integrands such as (w - v**2)**p at
    p >> 1 (the near-kappa-1 energy reductions).
    """
    xs = np.linspace(a, b, 257)
    fs = np.array([f(x) for x in xs])
    coarse = float(
        (b - a) / 256.0 / 3.0 * (fs[0] + fs[-1] + 4.0 * fs[1:-1:2].sum() + 2.0 * fs[2:-2:2].sum())
    )
    scale = max(abs(coarse), 1e-300)
    budget = [200_000]
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, depth, budget)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth, budget):
    budget[0] -= 1
    if budget[0] < 0:
        raise QuadratureBudgetExceeded(
            "adaptive Simpson exceeded its evaluation budget; integrand "
            "likely unresolved at the requested tolerance"
        )
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    return _simpson_rec(
        f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget
    ) + _simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget)


def touchdown_time_quadrature(problem: EmdenProblem, rel_tol: float = 1e-11) -> float:
    """Touchdown time from the conserved-energy reduction.

    Independent oracle for :func:`integrate`: reduces the dynamics to
    a'(a)^2 via energy conservation and integrates ds = -da/|a'(a)|
    over the decreasing branch with adaptive Simpson quadrature,
    splitting at the turning point when a1 > 0.  Endpoint square-root
    singularities are removed analytically by substitution before any
    numerical quadrature runs.

    Supports xi < 0 with kappa in (0, 1]; raises NoTouchdown otherwise.
    """
    if problem.xi >= 0.0:
        raise NoTouchdown(
            f"xi={problem.xi}: the force never drives a to zero from a0 > 0"
        )
    if not (0.0 < problem.kappa <= 1.0):
        raise ValidationError(
            f"quadrature oracle supports kappa in (0, 1], got {problem.kappa}"
        )

    if problem.kappa == 1.0:
        return _touchdown_log_potential(problem, rel_tol)
    return _touchdown_power_potential(problem, rel_tol)


def _touchdown_power_potential(problem: EmdenProblem, rel_tol: float) -> float:
    # a'(a)^2 = a1^2 + C*(a0^om - a^om) with om = 1-kappa, C = 2|xi|/(mu*om).
    om = 1.0 - problem.kappa
    p = problem.kappa / om
    C = 2.0 * abs(problem.xi) / (problem.mu * om)
    w0 = problem.a0**om
    a1 = problem.a1

    def branch_integrand(wt):
        # ds as a function of v after w = wt - v**2; max() guards the
        # rounding underflow of wt - v**2 at the endpoint.
        return lambda v: 2.0 * max(wt - v * v, 0.0) ** p / (om * math.sqrt(C))

    total = 0.0
    if a1 > 0.0:
        # Rising branch up to the turning point w_t, where a'(a_turn) = 0.
        wt = w0 + a1 * a1 / C
        total += _adaptive_simpson(branch_integrand(wt), 0.0, math.sqrt(wt - w0), rel_tol)
        # Falling branch from the turning point down to a = 0.
        total += _adaptive_simpson(branch_integrand(wt), 0.0, math.sqrt(wt), rel_tol)
        return total

    if a1 == 0.0:
        # Turning point coincides with a0: pure falling branch.
        return _adaptive_simpson(branch_integrand(w0), 0.0, math.sqrt(w0), rel_tol)

    # a1 < 0: monotone fall with nonzero speed everywhere; substitute
    # w = w0 - v^2 so the integrand is smooth on the interior.
    def fall(v):
        w = max(w0 - v * v, 0.0)
        return 2.0 * v * w**p / (om * math.sqrt(a1 * a1 + C * v * v))

    return _adaptive_simpson(fall, 0.0, math.sqrt(w0), rel_tol)


def _touchdown_log_potential(problem: EmdenProblem, rel_tol: float) -> float:
    # kappa = 1: a'(a)^2 = a1^2 + c*ln(a0/a), c = 2|xi|/mu.
    c = 2.0 * abs(problem.xi) / problem.mu
    a0, a1 = problem.a0, problem.a1

    total = 0.0
    if a1 > 0.0:
        a_pk = a0 * math.exp(a1 * a1 / c)
        z1 = math.log(a_pk / a0)
        up = lambda v: 2.0 * a_pk * math.exp(-v * v) / math.sqrt(c)
        total += _adaptive_simpson(up, 0.0, math.sqrt(z1), rel_tol)
        # Descent from rest at a_pk: closed form a_pk*sqrt(pi/c)
        # (Gaussian integral after a = a_pk*exp(-v^2)).
        total += a_pk * math.sqrt(math.pi / c)
        return total

    if a1 == 0.0:
        return a0 * math.sqrt(math.pi / c)

    # a1 < 0: integrate a0*exp(-z)/sqrt(a1^2 + c*z) with a = a0*exp(-z);
    # smooth, exponentially decaying; truncation error at Z=60 is ~1e-26.
    fall = lambda z: a0 * math.exp(-z) / math.sqrt(a1 * a1 + c * z)
    return _adaptive_simpson(fall, 0.0, 60.0, rel_tol)
