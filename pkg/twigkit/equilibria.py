"""Fixed points, stability and oscillation detection"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .exceptions import (DivergenceError, NoConvergenceError, NonOscillatoryError,
                         SingularJacobianError)
from .integrate import SampleGrid, integrate_trajectory
from .models import CoordinateKind, ModelSystem, cartesian_view, eval_rhs, state_jacobian

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
MAX_ITERATIONS = 100
MAX_HALVINGS = 20
MARGINAL_TOL = 1e-8
LOG_DOMAIN_FLOOR = 1e-12
MAX_CONDITION = 1e14
MIN_OSCILLATION_SAMPLES = 8
GUESS_HORIZON = 100.0


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True, eq=False)
class FixedPoint:
    location: np.ndarray
    residual_norm: float
    stability: Stability
    eigenvalues: np.ndarray
    iterations: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'location': [float(v) for v in self.location],
            'residual_norm': float(self.residual_norm),
            'stability': self.stability.value,
            'eigenvalues_real': [float(v) for v in np.real(self.eigenvalues)],
            'eigenvalues_imag': [float(v) for v in np.imag(self.eigenvalues)],
        }


@dataclass(frozen=True)
class OscillationCheck:
    oscillatory: bool
    period_estimate: Optional[float] = None
    component: Optional[int] = None
    sign_changes: int = 0


def classify_stability(eigenvalues: np.ndarray, tol: float = MARGINAL_TOL) -> Stability:
    real = np.real(np.asarray(eigenvalues))
    if np.any(real > tol):
        return Stability.UNSTABLE
    if np.all(real < -tol):
        return Stability.STABLE
    return Stability.MARGINAL


def _active_components(model: ModelSystem):
    return [k for k in range(model.state_dim) if k not in model.phase_components]


def _clamp(model: ModelSystem, y: np.ndarray) -> np.ndarray:
    for k in model.positive_components:
        y[k] = max(y[k], LOG_DOMAIN_FLOOR)
    return y


def find_fixed_point(model: ModelSystem, params: Optional[Sequence[float]],
                     guess: Optional[Sequence[float]] = None,
                     max_iterations: int = MAX_ITERATIONS, tol: float = RESIDUAL_TOL) -> FixedPoint:
    """Damped Newton iteration on f(y; theta) = 0.

    Phase components of polar models are excluded from the solve and set
    to zero. Each step is halved up to 20 times until the residual drops;
    components under a logarithm stay above 1e-12.
    """
    params = model.check_params(params)
    if guess is None:
        samples = integrate_trajectory(model, params, SampleGrid(0.0, GUESS_HORIZON, 8))
        guess = samples[-1]
    y = np.array(guess, dtype=float)
    if y.shape != (model.state_dim,) or not np.all(np.isfinite(y)):
        raise NoConvergenceError(f"{model.name}: guess must be a finite vector of length {model.state_dim}")

    active = _active_components(model)
    for k in model.phase_components:
        y[k] = 0.0
    y = _clamp(model, y)

    def residual(state):
        return eval_rhs(model, state, params, 0.0)[active]

    f = residual(y)
    norm = float(np.max(np.abs(f)))
    iterations = 0
    while norm > tol:
        if iterations >= max_iterations:
            raise NoConvergenceError(
                f"{model.name}: Newton did not converge in {max_iterations} iterations (residual {norm:.3e})"
            )
        jac = state_jacobian(model, y, params, 0.0)[np.ix_(active, active)]
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise SingularJacobianError(f"{model.name}: singular state Jacobian at y={y} (condition {cond:.3e})")
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as e:
            raise SingularJacobianError(f"{model.name}: singular state Jacobian at y={y}: {e}")

        scale = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = y.copy()
            trial[active] += scale * step
            trial = _clamp(model, trial)
            try:
                f_trial = residual(trial)
                trial_norm = float(np.max(np.abs(f_trial)))
            except DivergenceError:
                trial_norm = np.inf
            if trial_norm < norm:
                break
            scale *= 0.5
        else:
            raise NoConvergenceError(
                f"{model.name}: line search stalled at iteration {iterations} (residual {norm:.3e})"
            )
        y, f, norm = trial, f_trial, trial_norm
        iterations += 1

    eigenvalues = np.linalg.eigvals(state_jacobian(model, y, params, 0.0)[np.ix_(active, active)])
    stability = classify_stability(eigenvalues)
    logger.debug(f"{model.name}: fixed point {y} ({stability.value}) after {iterations} iterations")
    return FixedPoint(location=y, residual_norm=norm, stability=stability,
                      eigenvalues=eigenvalues, iterations=iterations)


def detect_oscillation(samples: np.ndarray, grid: SampleGrid) -> OscillationCheck:
    """Sign changes of centered components.

    A component oscillates with at least three sign changes over the window
    and at least one in its second half. The period is the mean spacing of
    same-direction crossings, located by linear interpolation.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    times = grid.times
    if samples.shape[0] < MIN_OSCILLATION_SAMPLES or samples.shape[0] != len(times):
        return OscillationCheck(False)
    if not np.all(np.isfinite(samples)):
        return OscillationCheck(False)

    half = samples.shape[0] // 2
    best = OscillationCheck(False)
    for k in range(samples.shape[1]):
        x = samples[:, k] - samples[:, k].mean()
        if np.ptp(x) <= 1e-12 * max(1.0, float(np.max(np.abs(samples[:, k])))):
            continue
        keep = np.nonzero(x != 0.0)[0]
        xv, tv = x[keep], times[keep]
        flips = np.nonzero(np.sign(xv[1:]) != np.sign(xv[:-1]))[0]
        late = int(np.sum(keep[flips + 1] >= half))
        if len(flips) < 3 or late < 1:
            continue
        crossing = tv[flips] - xv[flips] * (tv[flips + 1] - tv[flips]) / (xv[flips + 1] - xv[flips])
        rising = xv[flips] < 0
        gaps = np.concatenate([np.diff(crossing[rising]), np.diff(crossing[~rising])])
        period = float(np.mean(gaps)) if len(gaps) else None
        if len(flips) > best.sign_changes:
            best = OscillationCheck(True, period, k, int(len(flips)))
    return best


def interior_fixed_point(model: ModelSystem, params: Optional[Sequence[float]], cycle_samples: np.ndarray,
                         grid: SampleGrid) -> FixedPoint:
    """Equilibrium enclosed by a limit cycle, found from the cycle's time average"""
    view = cartesian_view(model, cycle_samples)
    check = detect_oscillation(view, grid)
    if not check.oscillatory:
        raise NonOscillatoryError(f"{model.name}: samples do not span an oscillation")
    if model.coordinate_kind == CoordinateKind.POLAR and model.phase_components:
        centroid = view.mean(axis=0)
        guess = np.zeros(model.state_dim)
        radius = _active_components(model)[0]
        guess[radius] = float(np.hypot(centroid[0], centroid[1]))
    else:
        guess = np.asarray(cycle_samples, dtype=float).mean(axis=0)
    return find_fixed_point(model, params, guess)
