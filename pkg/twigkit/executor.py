"""Sweep execution: horizons, recentering and near-bifurcation profiles"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .classify import (DEFAULT_DILATION_ALIGNMENT, DEFAULT_FREQUENCY_SHARE, DEFAULT_SLOPE_TOL,
                       DEFAULT_TAIL_FRACTION, TwigReport, classify)
from .equilibria import OscillationCheck, detect_oscillation, find_fixed_point, interior_fixed_point
from .exceptions import ConfigurationError, HorizonExceededError, TwigError
from .integrate import (DEFAULT_ATOL, DEFAULT_RTOL, DEFAULT_SAMPLES, PoincareSection, SampleGrid,
                        TrajectoryJacobian, integrate_trajectory, integrate_with_sensitivities,
                        trajectory_velocity)
from .models import CoordinateKind, ModelSystem, cartesian_view, param_jacobian_fd
from .spectrum import RELATIVE_FLOOR, FimSpectrum, SweepFailure, TwigSweep, assemble_sweep, fim_spectrum
from .utils import geometric_grid, resolve_thread_count

logger = logging.getLogger(__name__)

MIN_HORIZONS = 8
MIN_SAMPLES = 4
PROBE_SAMPLES = 400


@dataclass
class SweepConfig:
    """Horizon grid and numerical settings for one sweep"""
    t_min: float = 1e-2
    t_max: float = 1e3
    count: int = 60
    n_samples: int = DEFAULT_SAMPLES
    recenter: bool = False
    observed: Optional[Tuple[int, ...]] = None
    threads: Optional[int] = None
    rel_floor: float = RELATIVE_FLOOR
    abs_floor: Optional[float] = None
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    probe_samples: int = PROBE_SAMPLES
    section: bool = False

    def validate(self) -> None:
        if not (self.t_min > 0 and self.t_max > self.t_min):
            raise ConfigurationError(f"sweep needs 0 < t_min < t_max, got t_min={self.t_min}, t_max={self.t_max}")
        if self.count < MIN_HORIZONS:
            raise ConfigurationError(f"sweep needs at least {MIN_HORIZONS} horizons, got {self.count}")
        if self.n_samples < MIN_SAMPLES:
            raise ConfigurationError(f"n_samples must be at least {MIN_SAMPLES}, got {self.n_samples}")

    @property
    def horizons(self) -> np.ndarray:
        return geometric_grid(self.t_min, self.t_max, self.count)


@dataclass
class ProfileEntry:
    """One offset of a near-bifurcation profile"""
    offset: float
    param_value: float
    report: Optional[TwigReport] = None
    error: Optional[str] = None
    leading_tail_slope: Optional[float] = None
    intermediate_end: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'offset': self.offset,
            'param_value': self.param_value,
            'report': None if self.report is None else self.report.to_dict(),
            'error': self.error,
            'leading_tail_slope': self.leading_tail_slope,
            'intermediate_end': self.intermediate_end,
        }


def phase_only_params(model: ModelSystem, params: np.ndarray, tj: Optional[TrajectoryJacobian]) -> Tuple[str, ...]:
    """Free parameters that act on phase components alone"""
    if not model.phase_components or tj is None:
        return ()
    phase = list(model.phase_components)
    other = [k for k in range(model.state_dim) if k not in phase]
    result = []
    if model.has_ode:
        blocks = np.array([param_jacobian_fd(model, y, params, t) for y, t in zip(tj.raw_states, tj.grid.times)])
    for idx in model.free_indices:
        p = model.parameters[idx]
        if p.is_initial_condition:
            if p.state_index in phase:
                result.append(p.name)
            continue
        if not model.has_ode:
            continue
        column = blocks[:, :, idx]
        if np.max(np.abs(column[:, other])) == 0.0 and np.max(np.abs(column[:, phase])) > 0.0:
            result.append(p.name)
    return tuple(result)


def dilation_signature(model: ModelSystem, params: np.ndarray, tj: TrajectoryJacobian) -> np.ndarray:
    """t_i * dy/dt(t_i) in Jacobian row order: the image of a pure time rescaling.

    Section observations stretch only their crossing times, so there the
    signature is the elapsed crossing time on the section row.
    """
    if tj.section is not None and tj.section_times is not None:
        signature = np.zeros((tj.grid.n_samples, model.state_dim))
        signature[:, tj.section.component] = tj.section_times
        return signature.ravel()
    velocity = trajectory_velocity(model, params, tj)
    scaled = tj.grid.times[:, None] * velocity
    return scaled[:, list(tj.observed_components)].ravel()


def intermediate_regime_end(t_values: np.ndarray, eigenvalues: np.ndarray, slope_tol: float) -> Optional[float]:
    """First horizon where a rising eigenvalue's local slope falls below slope_tol"""
    if len(t_values) < 3:
        return None
    slopes = np.gradient(np.log10(eigenvalues), np.log10(t_values))
    rising = False
    for t, slope in zip(t_values, slopes):
        if slope >= slope_tol:
            rising = True
        elif rising:
            return float(t)
    return None


class SweepExecutor:
    """Runs horizon sweeps for a model, concurrently when threads allow"""

    def __init__(self, config: Optional[SweepConfig] = None):
        self.config = config or SweepConfig()
        self.config.validate()
        self.threads = resolve_thread_count(self.config.threads)

    def run(self, model: ModelSystem, params: Optional[Sequence[float]] = None) -> TwigSweep:
        """Integrate, decompose and track every horizon of the grid"""
        cfg = self.config
        params = model.check_params(params)
        horizons = cfg.horizons
        logger.info(f"Sweeping {model.name}: {len(horizons)} horizons from {horizons[0]:.3g} to {horizons[-1]:.3g}")

        probe = self._probe(model, params, horizons)
        oscillation = OscillationCheck(False)
        if probe is not None:
            oscillation = detect_oscillation(cartesian_view(model, probe[1]), probe[0])
            if oscillation.oscillatory:
                logger.info(f"{model.name}: oscillation detected, period ~ {oscillation.period_estimate}")

        fixed_point = self._recenter_target(model, params, probe, oscillation) if cfg.recenter else None
        recenter = None if fixed_point is None else fixed_point.location
        section = self._section(model, probe, oscillation) if cfg.section else None

        results = self._evaluate_all(model, params, horizons, recenter, section)

        spectra: List[FimSpectrum] = []
        final_tj: Optional[TrajectoryJacobian] = None
        failure = None
        for t_max, result in zip(horizons, results):
            if isinstance(result, TwigError):
                failure = SweepFailure(float(t_max), str(result))
                logger.warning(f"{model.name}: sweep stopped at t_max={t_max:.6g}: {result}")
                break
            spectra.append(result[0])
            final_tj = result[1]

        extra: Dict[str, Any] = {
            'initial_condition_params': model.initial_condition_names,
            'failure': failure,
            'oscillatory': oscillation.oscillatory,
            'period_estimate': oscillation.period_estimate,
            'fixed_point': None if fixed_point is None else fixed_point.to_dict(),
            'section': None if section is None else {'component': section.component, 'level': section.level},
        }
        if final_tj is not None:
            extra['phase_params'] = phase_only_params(model, params, final_tj)
            extra['final_jacobian'] = final_tj.jacobian
            extra['final_trajectory'] = final_tj
            if oscillation.oscillatory:
                try:
                    extra['dilation_signature'] = dilation_signature(model, params, final_tj)
                except TwigError as e:
                    logger.warning(f"{model.name}: no dilation signature: {e}")

        sweep = assemble_sweep(model.name, model.free_names, horizons, spectra, **extra)
        logger.info(f"{model.name}: {len(spectra)}/{len(horizons)} horizons completed")
        return sweep

    def _evaluate_horizon(self, model: ModelSystem, params: np.ndarray, t_max: float,
                          recenter: Optional[np.ndarray], section: Optional[PoincareSection] = None
                          ) -> Union[Tuple[FimSpectrum, TrajectoryJacobian], TwigError]:
        cfg = self.config
        try:
            grid = SampleGrid(0.0, float(t_max), cfg.n_samples)
            tj = integrate_with_sensitivities(model, params, grid, recenter=recenter, observed=cfg.observed,
                                              rtol=cfg.rtol, atol=cfg.atol, section=section)
            spectrum = fim_spectrum(tj, rel_floor=cfg.rel_floor, abs_floor=cfg.abs_floor)
        except TwigError as e:
            return e
        logger.debug(f"{model.name}: t_max={t_max:.6g} leading eigenvalue {spectrum.eigenvalues[0]:.6g}")
        return spectrum, tj

    def _evaluate_all(self, model: ModelSystem, params: np.ndarray, horizons: np.ndarray,
                      recenter: Optional[np.ndarray], section: Optional[PoincareSection] = None) -> List[Any]:
        if self.threads == 1:
            return [self._evaluate_horizon(model, params, t, recenter, section) for t in horizons]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(self._evaluate_horizon, model, params, t, recenter, section) for t in horizons]
            return [future.result() for future in futures]

    def _section(self, model: ModelSystem, probe: Optional[Tuple[SampleGrid, np.ndarray]],
                 oscillation: OscillationCheck) -> Optional[PoincareSection]:
        """Section through the middle of the probe's late swing in the oscillating component"""
        if not oscillation.oscillatory or probe is None:
            logger.warning(f"{model.name}: no oscillation detected; section sampling skipped")
            return None
        if not model.has_ode or model.coordinate_kind == CoordinateKind.POLAR:
            logger.warning(f"{model.name}: section sampling needs a Cartesian ODE model; skipped")
            return None
        if self.config.observed is not None and tuple(self.config.observed) != tuple(range(model.state_dim)):
            logger.warning(f"{model.name}: section sampling observes every component; skipped")
            return None
        _, states = probe
        k = int(oscillation.component)
        late = states[len(states) // 2:, k]
        section = PoincareSection(k, 0.5 * float(late.min() + late.max()))
        logger.info(f"{model.name}: sampling on the section y{k} = {section.level:.6g}")
        return section

    def _probe(self, model: ModelSystem, params: np.ndarray,
               horizons: np.ndarray) -> Optional[Tuple[SampleGrid, np.ndarray]]:
        """Dense trajectory over the longest horizon that integrates cleanly"""
        candidates = list(horizons[::-1])
        while candidates:
            grid = SampleGrid(0.0, float(candidates[0]), self.config.probe_samples)
            try:
                return grid, integrate_trajectory(model, params, grid, rtol=self.config.rtol, atol=self.config.atol)
            except HorizonExceededError as e:
                limit = e.time if e.time is not None else candidates[0]
                candidates = [t for t in candidates[1:] if t < limit]
            except TwigError as e:
                logger.warning(f"{model.name}: probe trajectory failed: {e}")
                return None
        return None

    def _recenter_target(self, model: ModelSystem, params: np.ndarray,
                         probe: Optional[Tuple[SampleGrid, np.ndarray]], oscillation: OscillationCheck):
        if not model.has_ode:
            logger.warning(f"{model.name}: closed-form model has no fixed point; recentering skipped")
            return None
        if probe is None:
            logger.warning(f"{model.name}: no probe trajectory; recentering skipped")
            return None
        grid, states = probe
        try:
            if oscillation.oscillatory:
                return interior_fixed_point(model, params, states, grid)
            return find_fixed_point(model, params, guess=states[-1])
        except TwigError as e:
            logger.warning(f"{model.name}: recentering skipped: {e}")
            return None

    def profile(self, model: ModelSystem, base_params: Optional[Sequence[float]], offsets: Sequence[float],
                param: Optional[str] = None, tail_fraction: float = DEFAULT_TAIL_FRACTION,
                slope_tol: float = DEFAULT_SLOPE_TOL, frequency_share: float = DEFAULT_FREQUENCY_SHARE,
                dilation_alignment: float = DEFAULT_DILATION_ALIGNMENT) -> List[ProfileEntry]:
        """Sweep and classify at each offset of the bifurcation parameter"""
        param = param or model.bifurcation_param
        if param is None:
            raise ConfigurationError(f"{model.name}: no bifurcation parameter to perturb")
        idx = model.index_of(param)
        base = model.check_params(base_params)

        entries = []
        for offset in offsets:
            params = base.copy()
            params[idx] += float(offset)
            entry = ProfileEntry(offset=float(offset), param_value=float(params[idx]))
            try:
                sweep = self.run(model, params)
                entry.report = classify(sweep, tail_fraction, slope_tol, frequency_share, dilation_alignment)
                leading = sweep.track_eigenvalues(0)
                entry.leading_tail_slope = entry.report.directions[0].slope
                entry.intermediate_end = intermediate_regime_end(sweep.horizons, leading, slope_tol)
                if sweep.failure is not None:
                    entry.error = sweep.failure.message
            except TwigError as e:
                logger.warning(f"{model.name}: profile at {param}={params[idx]:.6g} failed: {e}")
                entry.error = str(e)
            entries.append(entry)
        return entries


def run_sweep(model: ModelSystem, params: Optional[Sequence[float]] = None,
              sweep_config: Optional[SweepConfig] = None) -> TwigSweep:
    return SweepExecutor(sweep_config).run(model, params)


def near_bifurcation_profile(model: ModelSystem, base_params: Optional[Sequence[float]], offsets: Sequence[float],
                             sweep_config: Optional[SweepConfig] = None, param: Optional[str] = None,
                             tail_fraction: float = DEFAULT_TAIL_FRACTION,
                             slope_tol: float = DEFAULT_SLOPE_TOL) -> List[ProfileEntry]:
    return SweepExecutor(sweep_config).profile(model, base_params, offsets, param=param,
                                               tail_fraction=tail_fraction, slope_tol=slope_tol)
