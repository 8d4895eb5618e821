"""Relevance classification of tracked eigendirections"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .exceptions import ClassificationError
from .spectrum import TwigSweep

logger = logging.getLogger(__name__)

DEFAULT_TAIL_FRACTION = 0.25
DEFAULT_SLOPE_TOL = 0.2
DEFAULT_FREQUENCY_SHARE = 0.9
DEFAULT_DILATION_ALIGNMENT = 0.9
MIN_TAIL_POINTS = 4
MAX_LOG_EXPONENT = 3.0
SETTLED_SHARE = 0.99


class Relevance(str, Enum):
    HYPERRELEVANT = "hyperrelevant"
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"


@dataclass(frozen=True)
class DirectionReport:
    index: int
    relevance: Relevance
    slope: float
    eigenvalue: float
    dominant_param: str
    dominant_participation: float
    participation: Tuple[float, ...]
    frequency_flag: bool = False
    floored: bool = False
    logarithmic: bool = False

    @property
    def counts(self) -> bool:
        """Contributes to the codimension"""
        return self.relevance != Relevance.IRRELEVANT and not self.frequency_flag

    def to_dict(self) -> Dict[str, Any]:
        return {
            'index': self.index,
            'classification': self.relevance.value,
            'slope': self.slope,
            'eigenvalue': self.eigenvalue,
            'dominant_param': self.dominant_param,
            'dominant_participation': self.dominant_participation,
            'participation': list(self.participation),
            'frequency_flag': self.frequency_flag,
            'floored': self.floored,
            'logarithmic': self.logarithmic,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DirectionReport':
        return cls(
            index=int(data['index']),
            relevance=Relevance(data['classification']),
            slope=float(data['slope']),
            eigenvalue=float(data['eigenvalue']),
            dominant_param=data['dominant_param'],
            dominant_participation=float(data['dominant_participation']),
            participation=tuple(float(p) for p in data['participation']),
            frequency_flag=bool(data['frequency_flag']),
            floored=bool(data['floored']),
            logarithmic=bool(data.get('logarithmic', False)),
        )


@dataclass(frozen=True)
class TwigReport:
    """Outcome of a sweep: one entry per tracked direction, labelled by its final index"""
    model: str
    param_names: Tuple[str, ...]
    t_max: float
    directions: Tuple[DirectionReport, ...]
    codimension: int
    raw_codimension: int
    converged: bool
    separatrix_normal: Tuple[float, ...]
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    slope_tol: float = DEFAULT_SLOPE_TOL
    oscillatory: bool = False
    period_estimate: Optional[float] = None
    horizons_completed: int = 0
    horizons_requested: int = 0
    weak_links: int = 0
    section_sampled: bool = False
    failure: Optional[Dict[str, Any]] = None
    errors: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def classifications(self) -> List[Relevance]:
        return [d.relevance for d in self.directions]

    @property
    def frequency_flags(self) -> List[bool]:
        return [d.frequency_flag for d in self.directions]

    @property
    def dominant_params(self) -> List[str]:
        return [d.dominant_param for d in self.directions]

    def direction_for(self, param: str) -> DirectionReport:
        """Direction where ``param`` has its largest participation"""
        idx = self.param_names.index(param)
        return max(self.directions, key=lambda d: d.participation[idx])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model,
            'param_names': list(self.param_names),
            't_max': self.t_max,
            'directions': [d.to_dict() for d in self.directions],
            'codimension': self.codimension,
            'raw_codimension': self.raw_codimension,
            'converged': self.converged,
            'separatrix_normal': list(self.separatrix_normal),
            'tail_fraction': self.tail_fraction,
            'slope_tol': self.slope_tol,
            'oscillatory': self.oscillatory,
            'period_estimate': self.period_estimate,
            'horizons_completed': self.horizons_completed,
            'horizons_requested': self.horizons_requested,
            'weak_links': self.weak_links,
            'section_sampled': self.section_sampled,
            'failure': self.failure,
            'errors': list(self.errors),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TwigReport':
        period = data.get('period_estimate')
        return cls(
            model=data['model'],
            param_names=tuple(data['param_names']),
            t_max=float(data['t_max']),
            directions=tuple(DirectionReport.from_dict(d) for d in data['directions']),
            codimension=int(data['codimension']),
            raw_codimension=int(data['raw_codimension']),
            converged=bool(data['converged']),
            separatrix_normal=tuple(float(v) for v in data['separatrix_normal']),
            tail_fraction=float(data.get('tail_fraction', DEFAULT_TAIL_FRACTION)),
            slope_tol=float(data.get('slope_tol', DEFAULT_SLOPE_TOL)),
            oscillatory=bool(data.get('oscillatory', False)),
            period_estimate=None if period is None else float(period),
            horizons_completed=int(data.get('horizons_completed', 0)),
            horizons_requested=int(data.get('horizons_requested', 0)),
            weak_links=int(data.get('weak_links', 0)),
            section_sampled=bool(data.get('section_sampled', False)),
            failure=data.get('failure'),
            errors=tuple(data.get('errors', ())),
        )


def tail_slope(t_values: np.ndarray, eigenvalues: np.ndarray) -> float:
    """Least-squares slope of log lambda against log t"""
    slope, _ = np.polyfit(np.log10(t_values), np.log10(eigenvalues), 1)
    return float(slope)


def _fit_residual(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    coeffs = np.polyfit(x, y, 1)
    return float(coeffs[0]), float(np.sum((np.polyval(coeffs, x) - y) ** 2))


def logarithmic_growth(t_values: np.ndarray, eigenvalues: np.ndarray,
                       max_exponent: float = MAX_LOG_EXPONENT) -> bool:
    """True when a rising eigenvalue follows (ln t)^k better than any power of t.

    Both fits run over the same tail; k must be positive and at most
    ``max_exponent``. Tails reaching down to t <= e are never logarithmic.
    """
    t_values = np.asarray(t_values, dtype=float)
    if len(t_values) < 3 or float(np.min(t_values)) <= math.e:
        return False
    log_t = np.log(t_values)
    log_lam = np.log(np.asarray(eigenvalues, dtype=float))
    _, power_residual = _fit_residual(log_t, log_lam)
    exponent, log_residual = _fit_residual(np.log(log_t), log_lam)
    return 0.0 < exponent <= max_exponent and log_residual < power_residual


def tail_window(count: int, tail_fraction: float) -> int:
    if not 0.0 < tail_fraction <= 1.0:
        raise ClassificationError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    points = int(math.ceil(tail_fraction * count))
    if points < MIN_TAIL_POINTS:
        raise ClassificationError(
            f"tail window holds {points} horizons, at least {MIN_TAIL_POINTS} are needed "
            f"({count} completed)"
        )
    return points


def _alignment(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(abs(np.dot(a, b)) / (na * nb))


def classify(sweep: TwigSweep, tail_fraction: float = DEFAULT_TAIL_FRACTION,
             slope_tol: float = DEFAULT_SLOPE_TOL, frequency_share: float = DEFAULT_FREQUENCY_SHARE,
             dilation_alignment: float = DEFAULT_DILATION_ALIGNMENT) -> TwigReport:
    """Classify each tracked direction by its late-horizon eigenvalue slope.

    Slopes above ``slope_tol`` are hyperrelevant, below ``-slope_tol``
    irrelevant, relevant otherwise. A rising eigenvalue that grows only
    like a power of ln t is relevant. A direction floored at the final
    horizon is irrelevant whatever its slope. In oscillatory systems, directions
    carried by phase-only parameters, and hyperrelevant directions whose
    image J v lines up with t * dy/dt, are frequency-flagged and left out
    of the codimension.

    Initial conditions have settled when each one's largest participation
    lies in the weakest ceil(m/4) directions, or when at least
    ``SETTLED_SHARE`` of its participation sits in irrelevant directions.
    """
    if not sweep.spectra:
        raise ClassificationError(f"{sweep.model_name}: sweep has no completed horizons")
    points = tail_window(len(sweep.spectra), tail_fraction)
    horizons = sweep.horizons[-points:]
    final = sweep.spectra[-1]
    names = sweep.param_names
    phase_idx = [names.index(p) for p in sweep.phase_params if p in names]

    directions = []
    for k in range(final.m):
        tail = sweep.track_eigenvalues(k)[-points:]
        slope = tail_slope(horizons, tail)
        floored = bool(final.floored[k])
        logarithmic = False
        if floored or slope < -slope_tol:
            relevance = Relevance.IRRELEVANT
        elif slope > slope_tol:
            logarithmic = logarithmic_growth(horizons, tail)
            relevance = Relevance.RELEVANT if logarithmic else Relevance.HYPERRELEVANT
        else:
            relevance = Relevance.RELEVANT

        column = final.participation[:, k]
        flag = False
        if sweep.oscillatory and relevance != Relevance.IRRELEVANT:
            if phase_idx and float(column[phase_idx].sum()) >= frequency_share:
                flag = True
            elif (relevance == Relevance.HYPERRELEVANT and sweep.dilation_signature is not None
                  and sweep.final_jacobian is not None):
                image = sweep.final_jacobian @ final.eigenvectors[:, k]
                flag = _alignment(image, sweep.dilation_signature) >= dilation_alignment

        dominant = int(np.argmax(column))
        directions.append(DirectionReport(
            index=k,
            relevance=relevance,
            slope=slope,
            eigenvalue=float(final.eigenvalues[k]),
            dominant_param=names[dominant],
            dominant_participation=float(column[dominant]),
            participation=tuple(float(p) for p in column),
            frequency_flag=flag,
            floored=floored,
            logarithmic=logarithmic,
        ))

    raw = sum(1 for d in directions if d.relevance != Relevance.IRRELEVANT)
    codimension = sum(1 for d in directions if d.counts)

    m = final.m
    band = int(math.ceil(m / 4))
    decayed = np.array([d.relevance == Relevance.IRRELEVANT for d in directions])

    def settled(param: str) -> bool:
        row = final.participation[names.index(param), :]
        return int(np.argmax(row)) >= m - band or float(row[decayed].sum()) >= SETTLED_SHARE

    converged = all(settled(p) for p in sweep.initial_condition_params if p in names)

    failure = None
    if sweep.failure is not None:
        failure = {'t_max': sweep.failure.t_max, 'message': sweep.failure.message}

    logger.info(f"{sweep.model_name}: codimension {codimension} (raw {raw}), converged={converged}")
    return TwigReport(
        model=sweep.model_name,
        param_names=tuple(names),
        t_max=float(final.t_max),
        directions=tuple(directions),
        codimension=codimension,
        raw_codimension=raw,
        converged=converged,
        separatrix_normal=tuple(float(v) for v in final.eigenvectors[:, 0]),
        tail_fraction=float(tail_fraction),
        slope_tol=float(slope_tol),
        oscillatory=sweep.oscillatory,
        period_estimate=sweep.period_estimate,
        horizons_completed=len(sweep.spectra),
        horizons_requested=len(sweep.grid_tmax),
        weak_links=sweep.weak_links,
        section_sampled=sweep.section is not None,
        failure=failure,
    )
