"""Trajectory integration with forward parameter sensitivities"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import ConfigurationError, DivergenceError, HorizonExceededError, IntegrationError, StiffnessError
from .models import FD_STEP, ModelSystem, eval_rhs, param_jacobian_fd, state_jacobian

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
REFERENCE_RTOL = 1e-12
REFERENCE_ATOL = 1e-14
DIVERGENCE_LIMIT = 1e8
DEFAULT_SAMPLES = 50
CLOSED_FORM_RESOLUTION = 1e-9
SECTION_GRAZING = 1e-12


@dataclass(frozen=True)
class SampleGrid:
    """Uniform samples t_i = t0 + (i/n) t_max for i = 1..n (t0 itself excluded)"""
    t0: float = 0.0
    t_max: float = 1.0
    n_samples: int = DEFAULT_SAMPLES

    def __post_init__(self):
        if not np.isfinite(self.t_max) or self.t_max <= 0:
            raise ConfigurationError(f"t_max must be positive and finite, got {self.t_max}")
        if not np.isfinite(self.t0):
            raise ConfigurationError(f"t0 must be finite, got {self.t0}")
        if int(self.n_samples) < 1:
            raise ConfigurationError(f"n_samples must be positive, got {self.n_samples}")

    @property
    def times(self) -> np.ndarray:
        n = int(self.n_samples)
        return self.t0 + np.arange(1, n + 1) / n * self.t_max

    @property
    def t_end(self) -> float:
        return self.t0 + self.t_max


@dataclass(frozen=True)
class PoincareSection:
    """Upward crossings of y[component] through ``level``"""
    component: int
    level: float

    def event(self) -> Callable:
        def crossing(t, z):
            return z[self.component] - self.level
        crossing.direction = 1
        return crossing


@dataclass(frozen=True, eq=False)
class TrajectoryJacobian:
    """Sampled states and the sensitivity matrix J.

    Rows of ``jacobian`` run over (sample, observed component), columns over
    the model's free parameters. ``states`` are recentered when an offset
    was applied; ``raw_states`` undoes it. ``resolution`` is the absolute
    accuracy of a single entry.

    With a ``section``, sample i is observed at the last section crossing
    before t_i: the section component's row holds the crossing time
    measured from the first sample's crossing (``section_times``), the
    other rows the transverse state there.
    """
    grid: SampleGrid
    states: np.ndarray
    jacobian: np.ndarray
    observed_components: Tuple[int, ...]
    param_names: Tuple[str, ...]
    resolution: float = DEFAULT_ATOL
    offset: Optional[np.ndarray] = None
    section: Optional[PoincareSection] = None
    section_times: Optional[np.ndarray] = None

    @property
    def raw_states(self) -> np.ndarray:
        if self.offset is None:
            return self.states
        return self.states + self.offset

    @property
    def n_observed(self) -> int:
        return len(self.observed_components)

    def sensitivity(self, name: str, component: Optional[int] = None) -> np.ndarray:
        """d y_k(t_i) / d theta for one parameter, per sample"""
        col = self.param_names.index(name)
        block = self.jacobian[:, col].reshape(self.grid.n_samples, self.n_observed)
        component = self.observed_components[0] if component is None else component
        return block[:, self.observed_components.index(component)]


def _observed(model: ModelSystem, observed: Optional[Sequence[int]]) -> Tuple[int, ...]:
    if observed is None:
        return tuple(range(model.state_dim))
    observed = tuple(int(i) for i in observed)
    if not observed or any(not 0 <= i < model.state_dim for i in observed):
        raise ConfigurationError(f"{model.name}: observed components {observed} out of range")
    return observed


def _solve(model: ModelSystem, fun: Callable, z0: np.ndarray, grid: SampleGrid,
           method: str, rtol: float, atol: float, extra_events: Sequence[Callable] = ()):
    """solve_ivp on the grid with the divergence guard as a terminal event"""
    n = model.state_dim

    def escape(t, z):
        return DIVERGENCE_LIMIT - np.max(np.abs(z[:n]))
    escape.terminal = True
    escape.direction = -1

    try:
        sol = solve_ivp(fun, (grid.t0, grid.t_end), z0, method=method, t_eval=grid.times,
                        rtol=rtol, atol=atol, events=[escape, *extra_events])
    except DivergenceError as e:
        raise HorizonExceededError(f"{e} (horizon {grid.t_max:.6g})", time=e.time)

    if sol.status == 1 and len(sol.t_events[0]):
        t_bad = float(sol.t_events[0][0])
        raise HorizonExceededError(f"{model.name}: |y| exceeded {DIVERGENCE_LIMIT:.0e} at t={t_bad:.6g} "
                                   f"(horizon {grid.t_max:.6g})", time=t_bad)
    if sol.status == -1:
        t_fail = float(sol.t[-1]) if len(sol.t) else grid.t0
        raise StiffnessError(f"{model.name}: integration failed near t={t_fail:.6g}: {sol.message}")
    if sol.y.shape[1] != grid.n_samples:
        raise IntegrationError(f"{model.name}: expected {grid.n_samples} samples, got {sol.y.shape[1]}")

    finite = np.all(np.isfinite(sol.y), axis=0)
    if not np.all(finite):
        t_bad = float(sol.t[np.argmin(finite)])
        raise HorizonExceededError(f"{model.name}: non-finite samples from t={t_bad:.6g}", time=t_bad)
    return sol


def _closed_form_states(model: ModelSystem, params: np.ndarray, times: np.ndarray) -> np.ndarray:
    with np.errstate(all='ignore'):
        states = np.asarray(model.closed_form(params, times), dtype=float).reshape(len(times), model.state_dim)
    if not np.all(np.isfinite(states)):
        t_bad = float(times[np.argmin(np.all(np.isfinite(states), axis=1))])
        raise HorizonExceededError(f"{model.name}: closed form is non-finite at t={t_bad:.6g}", time=t_bad)
    if np.any(np.abs(states) > DIVERGENCE_LIMIT):
        t_bad = float(times[np.argmax(np.any(np.abs(states) > DIVERGENCE_LIMIT, axis=1))])
        raise HorizonExceededError(f"{model.name}: |y| exceeded {DIVERGENCE_LIMIT:.0e} at t={t_bad:.6g}",
                                   time=t_bad)
    return states


def _closed_form_jacobian(model: ModelSystem, params: np.ndarray, grid: SampleGrid,
                          observed: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form samples and central differences in each free parameter"""
    times = grid.times
    states = _closed_form_states(model, params, times)
    free = model.free_indices
    jac = np.empty((len(times), len(observed), len(free)))
    for col, j in enumerate(free):
        h = FD_STEP * (1.0 + abs(params[j]))
        up, down = params.copy(), params.copy()
        up[j] += h
        down[j] -= h
        diff = (_closed_form_states(model, up, times) - _closed_form_states(model, down, times)) / (2.0 * h)
        jac[:, :, col] = diff[:, list(observed)]
    return states, jac.reshape(len(times) * len(observed), len(free))


def _section_rows(model: ModelSystem, params: np.ndarray, grid: SampleGrid, section: PoincareSection,
                  crossing_times: np.ndarray, crossing_states: np.ndarray,
                  z0: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Jacobian rows and crossing times for section observations.

    At a crossing tau, d tau/d theta = -S_k / f_k and the transverse
    sensitivities are S_j + f_j d tau/d theta. Samples taken before the
    first crossing fall back on the start point with d tau/d theta = 0.
    """
    n, k = model.state_dim, section.component
    index = np.searchsorted(crossing_times, grid.times, side='right') - 1
    times = np.zeros(grid.n_samples)
    rows = np.empty((grid.n_samples, n, m))
    for i, e in enumerate(index):
        if e < 0:
            rows[i] = z0[n:].reshape(n, m)
            rows[i, k] = 0.0
            continue
        z, tau = crossing_states[e], float(crossing_times[e])
        sens = z[n:].reshape(n, m)
        f = eval_rhs(model, z[:n], params, tau)
        if f[k] <= SECTION_GRAZING:
            raise IntegrationError(f"{model.name}: trajectory grazes the section at t={tau:.6g} "
                                   f"(dy{k}/dt={f[k]:.3g})")
        dtau = -sens[k] / f[k]
        rows[i] = sens + np.outer(f, dtau)
        rows[i, k] = dtau
        times[i] = tau
    rows[:, k] -= rows[0, k]
    return rows.reshape(grid.n_samples * n, m), times - times[0]


def integrate_trajectory(model: ModelSystem, params: Optional[Sequence[float]], grid: SampleGrid,
                         method: str = 'RK45', rtol: float = DEFAULT_RTOL,
                         atol: float = DEFAULT_ATOL) -> np.ndarray:
    """Plain trajectory samples, shape (n_samples, state_dim)"""
    params = model.check_params(params)
    if not model.has_ode:
        return _closed_form_states(model, params, grid.times)

    def fun(t, y):
        return eval_rhs(model, y, params, t)

    sol = _solve(model, fun, model.initial_state(params), grid, method, rtol, atol)
    return sol.y.T.copy()


def integrate_with_sensitivities(model: ModelSystem, params: Optional[Sequence[float]], grid: SampleGrid,
                                 recenter: Optional[Sequence[float]] = None,
                                 observed: Optional[Sequence[int]] = None,
                                 rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                                 section: Optional[PoincareSection] = None) -> TrajectoryJacobian:
    """Integrate y' = f and S' = (df/dy) S + df/dtheta, sampled on the grid.

    S(0) seeds each free initial condition with a one. When ``recenter``
    is given it is subtracted from every sampled state; sensitivities are
    left untouched. Closed-form-only models are sampled directly and
    differentiated by central differences in theta. A ``section`` swaps
    the state rows of J for section observations of every component.
    """
    params = model.check_params(params)
    if section is not None:
        if not model.has_ode:
            raise ConfigurationError(f"{model.name}: section sampling needs an ODE model")
        if observed is not None and tuple(observed) != tuple(range(model.state_dim)):
            raise ConfigurationError(f"{model.name}: section sampling observes every component")
        if not 0 <= section.component < model.state_dim:
            raise ConfigurationError(f"{model.name}: section component {section.component} out of range")
    observed = _observed(model, observed)
    section_times = None

    if not model.has_ode:
        states, jac = _closed_form_jacobian(model, params, grid, observed)
        resolution = CLOSED_FORM_RESOLUTION
    else:
        n = model.state_dim
        free = list(model.free_indices)
        m = len(free)

        def augmented(t, z):
            y = z[:n]
            sens = z[n:].reshape(n, m)
            f = eval_rhs(model, y, params, t)
            a = state_jacobian(model, y, params, t)
            b = param_jacobian_fd(model, y, params, t)[:, free]
            return np.concatenate([f, (a @ sens + b).ravel()])

        z0 = np.concatenate([model.initial_state(params), model.initial_sensitivity().ravel()])
        events = () if section is None else (section.event(),)
        sol = _solve(model, augmented, z0, grid, 'RK45', rtol, atol, extra_events=events)
        states = sol.y[:n].T.copy()
        if section is None:
            sens = sol.y[n:].T.reshape(grid.n_samples, n, m)
            jac = sens[:, list(observed), :].reshape(grid.n_samples * len(observed), m)
            resolution = atol
        else:
            jac, section_times = _section_rows(model, params, grid, section, sol.t_events[1],
                                               np.asarray(sol.y_events[1]).reshape(-1, len(z0)), z0, m)
            # crossing times inherit the relative error of the secular sensitivities
            resolution = max(atol, rtol * float(np.max(np.abs(jac), initial=0.0)))

    offset = None
    if recenter is not None:
        offset = np.asarray(recenter, dtype=float)
        if offset.shape != (model.state_dim,):
            raise ConfigurationError(f"{model.name}: recenter offset must have {model.state_dim} entries")
        states = states - offset

    logger.debug(f"{model.name}: integrated t_max={grid.t_max:.6g} with {grid.n_samples} samples")
    return TrajectoryJacobian(
        grid=grid,
        states=states,
        jacobian=jac,
        observed_components=observed,
        param_names=model.free_names,
        resolution=resolution,
        offset=offset,
        section=section,
        section_times=section_times,
    )


def finite_difference_jacobian(model: ModelSystem, params: Optional[Sequence[float]], grid: SampleGrid,
                               observed: Optional[Sequence[int]] = None) -> TrajectoryJacobian:
    """Jacobian by re-integrating the plain system at theta_j +/- h.

    The reference solves run DOP853 at tight tolerances so the difference
    quotient is not swamped by integrator noise.
    """
    params = model.check_params(params)
    observed = _observed(model, observed)

    if not model.has_ode:
        states, jac = _closed_form_jacobian(model, params, grid, observed)
        return TrajectoryJacobian(grid, states, jac, observed, model.free_names, CLOSED_FORM_RESOLUTION)

    def run(values):
        return integrate_trajectory(model, values, grid, method='DOP853', rtol=REFERENCE_RTOL, atol=REFERENCE_ATOL)

    states = run(params)
    free = model.free_indices
    jac = np.empty((grid.n_samples, len(observed), len(free)))
    for col, j in enumerate(free):
        h = FD_STEP * (1.0 + abs(params[j]))
        up, down = params.copy(), params.copy()
        up[j] += h
        down[j] -= h
        jac[:, :, col] = ((run(up) - run(down)) / (2.0 * h))[:, list(observed)]

    return TrajectoryJacobian(
        grid=grid,
        states=states,
        jacobian=jac.reshape(grid.n_samples * len(observed), len(free)),
        observed_components=observed,
        param_names=model.free_names,
        resolution=REFERENCE_RTOL / FD_STEP,
    )


def trajectory_velocity(model: ModelSystem, params: Sequence[float], tj: TrajectoryJacobian) -> np.ndarray:
    """dy/dt at each sample of ``tj`` (closed forms by central differences in t)"""
    params = model.check_params(params)
    times = tj.grid.times
    if model.has_ode:
        return np.array([eval_rhs(model, y, params, t) for y, t in zip(tj.raw_states, times)])
    h = FD_STEP * (1.0 + np.abs(times))
    return (_closed_form_states(model, params, times + h)
            - _closed_form_states(model, params, times - h)) / (2.0 * h)[:, None]
