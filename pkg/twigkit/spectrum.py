"""Fisher information spectra and eigendirection tracking across horizons"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import SpectrumError
from .integrate import TrajectoryJacobian

logger = logging.getLogger(__name__)

RELATIVE_FLOOR = 1e-12
RESOLUTION_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class FimSpectrum:
    """Eigen-decomposition of J^T J at one horizon.

    ``eigenvectors[:, k]`` pairs with ``eigenvalues[k]``; ``participation[i, k]``
    is parameter i's share of direction k.
    """
    t_max: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    participation: np.ndarray
    singular_values: np.ndarray
    floor: float
    rank_floor: int

    @property
    def m(self) -> int:
        return len(self.eigenvalues)

    @property
    def floored(self) -> np.ndarray:
        return self.singular_values < np.sqrt(self.floor)

    def dominant(self, k: int) -> int:
        return int(np.argmax(self.participation[:, k]))


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude component is positive"""
    vectors = np.array(vectors, dtype=float)
    if vectors.size == 0:
        return vectors
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def resolution_floor(tj: TrajectoryJacobian) -> float:
    """Singular values below this are integrator noise"""
    return RESOLUTION_FACTOR * tj.resolution * float(np.sqrt(tj.jacobian.size))


def spectrum_from_jacobian(jacobian: np.ndarray, t_max: float, rel_floor: float = RELATIVE_FLOOR,
                           abs_floor: float = 0.0) -> FimSpectrum:
    """SVD of J; lambda = sigma^2, J^T J is never formed"""
    jacobian = np.asarray(jacobian, dtype=float)
    if jacobian.ndim != 2 or jacobian.shape[1] == 0:
        raise SpectrumError(f"Jacobian at t_max={t_max:.6g} has shape {jacobian.shape}", t_max=t_max)
    if not np.all(np.isfinite(jacobian)):
        raise SpectrumError(f"Jacobian at t_max={t_max:.6g} has non-finite entries", t_max=t_max)
    try:
        _, sigma, vt = np.linalg.svd(jacobian, full_matrices=True)
    except np.linalg.LinAlgError as e:
        raise SpectrumError(f"SVD failed at t_max={t_max:.6g}: {e}", t_max=t_max)

    m = jacobian.shape[1]
    singular = np.zeros(m)
    singular[:len(sigma)] = sigma
    sigma_floor = max(rel_floor * float(singular[0]), abs_floor, np.finfo(float).tiny)
    clamped = np.maximum(singular, sigma_floor)
    vectors = canonical_signs(vt.T)
    return FimSpectrum(
        t_max=float(t_max),
        eigenvalues=clamped ** 2,
        eigenvectors=vectors,
        participation=vectors ** 2,
        singular_values=singular,
        floor=sigma_floor ** 2,
        rank_floor=int(np.sum(singular < sigma_floor)),
    )


def fim_spectrum(tj: TrajectoryJacobian, rel_floor: float = RELATIVE_FLOOR,
                 abs_floor: Optional[float] = None) -> FimSpectrum:
    """FIM spectrum of a trajectory Jacobian with unit observation noise"""
    if abs_floor is None:
        abs_floor = resolution_floor(tj)
    return spectrum_from_jacobian(tj.jacobian, tj.grid.t_max, rel_floor, abs_floor)


def match_directions(previous: FimSpectrum, current: FimSpectrum) -> Tuple[np.ndarray, np.ndarray]:
    """Greedy maximal-overlap assignment between consecutive spectra.

    Returns ``perm`` with ``perm[k]`` the index in ``current`` that direction
    k of ``previous`` continues as, and the overlap of each assigned pair.
    Highest overlaps are claimed first; ties go to lower eigenvalue indices.
    """
    overlap = np.abs(previous.eigenvectors.T @ current.eigenvectors)
    m = overlap.shape[0]
    rows, cols = np.unravel_index(np.arange(m * m), (m, m))
    order = np.lexsort((cols, rows, -overlap.ravel()))
    perm = np.full(m, -1, dtype=int)
    taken = np.zeros(m, dtype=bool)
    for flat in order:
        k, j = rows[flat], cols[flat]
        if perm[k] >= 0 or taken[j]:
            continue
        perm[k] = j
        taken[j] = True
    return perm, overlap[np.arange(m), perm]


@dataclass(frozen=True)
class SweepFailure:
    t_max: float
    message: str


@dataclass(eq=False)
class TwigSweep:
    """Spectra over a horizon grid, tracked direction by direction.

    ``tracking[s][k]`` is where direction k at step s sits at step s + 1.
    When a horizon fails the sweep stops there and records ``failure``.
    """
    model_name: str
    param_names: Tuple[str, ...]
    grid_tmax: np.ndarray
    spectra: List[FimSpectrum]
    tracking: List[np.ndarray] = field(default_factory=list)
    overlaps: List[np.ndarray] = field(default_factory=list)
    initial_condition_params: Tuple[str, ...] = ()
    phase_params: Tuple[str, ...] = ()
    failure: Optional[SweepFailure] = None
    oscillatory: bool = False
    period_estimate: Optional[float] = None
    dilation_signature: Optional[np.ndarray] = None
    final_jacobian: Optional[np.ndarray] = None
    final_trajectory: Optional[TrajectoryJacobian] = None
    fixed_point: Optional[dict] = None
    section: Optional[dict] = None

    @property
    def m(self) -> int:
        return len(self.param_names)

    @property
    def horizons(self) -> np.ndarray:
        return np.array([s.t_max for s in self.spectra])

    @property
    def complete(self) -> bool:
        return self.failure is None and len(self.spectra) == len(self.grid_tmax)

    @property
    def weak_links(self) -> int:
        """Tracked pairs whose overlap falls below 1/sqrt(m)"""
        if not self.overlaps:
            return 0
        threshold = 1.0 / np.sqrt(self.m)
        return int(sum(np.sum(o < threshold) for o in self.overlaps))

    def track_path(self, final_index: int) -> np.ndarray:
        """Index at every horizon of the direction that ends at ``final_index``"""
        steps = len(self.spectra)
        path = np.empty(steps, dtype=int)
        path[-1] = final_index
        for s in range(steps - 2, -1, -1):
            path[s] = int(np.nonzero(self.tracking[s] == path[s + 1])[0][0])
        return path

    def track_eigenvalues(self, final_index: int) -> np.ndarray:
        path = self.track_path(final_index)
        return np.array([spec.eigenvalues[k] for spec, k in zip(self.spectra, path)])

    def track_floored(self, final_index: int) -> np.ndarray:
        path = self.track_path(final_index)
        return np.array([bool(spec.floored[k]) for spec, k in zip(self.spectra, path)])


def assemble_sweep(model_name: str, param_names: Sequence[str], grid_tmax: Sequence[float],
                   spectra: List[FimSpectrum], **extra) -> TwigSweep:
    """Track directions step to step and wrap the spectra in a TwigSweep"""
    tracking, overlaps = [], []
    for previous, current in zip(spectra[:-1], spectra[1:]):
        perm, overlap = match_directions(previous, current)
        tracking.append(perm)
        overlaps.append(overlap)

    sweep = TwigSweep(
        model_name=model_name,
        param_names=tuple(param_names),
        grid_tmax=np.asarray(grid_tmax, dtype=float),
        spectra=spectra,
        tracking=tracking,
        overlaps=overlaps,
        **extra,
    )
    if sweep.weak_links:
        logger.warning(f"{model_name}: {sweep.weak_links} tracked pairs overlap below 1/sqrt(m); "
                       f"direction identities may swap across horizons")
    return sweep


def sweep_from_jacobians(jacobians: Sequence[np.ndarray], t_values: Sequence[float],
                         param_names: Sequence[str], rel_floor: float = RELATIVE_FLOOR,
                         abs_floor: float = 0.0, model_name: str = 'synthetic', **extra) -> TwigSweep:
    """Sweep over precomputed Jacobians, one per horizon"""
    spectra = [spectrum_from_jacobian(j, t, rel_floor, abs_floor) for j, t in zip(jacobians, t_values)]
    return assemble_sweep(model_name, param_names, t_values, spectra, **extra)
