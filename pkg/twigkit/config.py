"""Configuration management for twigkit"""

import copy
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from .classify import (DEFAULT_DILATION_ALIGNMENT, DEFAULT_FREQUENCY_SHARE, DEFAULT_SLOPE_TOL,
                       DEFAULT_TAIL_FRACTION, MIN_TAIL_POINTS)
from .exceptions import ConfigurationError
from .executor import MIN_HORIZONS, MIN_SAMPLES, SweepConfig
from .integrate import DEFAULT_SAMPLES


@dataclass
class RunConfig:
    """Validated settings for one ``analyze`` run"""
    model: Union[str, Dict[str, Any]]
    order: int = 0
    params: Dict[str, float] = field(default_factory=dict)
    fixed: List[str] = field(default_factory=list)
    observe: Optional[List[int]] = None
    t_min: float = 1e-2
    t_max: float = 1e3
    count: int = 60
    n_samples: int = DEFAULT_SAMPLES
    recenter: bool = False
    section_sampling: bool = False
    near_bifurcation: Optional[Dict[str, Any]] = None
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    slope_tol: float = DEFAULT_SLOPE_TOL
    frequency_share: float = DEFAULT_FREQUENCY_SHARE
    dilation_alignment: float = DEFAULT_DILATION_ALIGNMENT
    outputs: str = 'twig-output'
    seed: int = 0
    threads: Optional[int] = None
    dump_trajectories: bool = False

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            t_min=self.t_min,
            t_max=self.t_max,
            count=self.count,
            n_samples=self.n_samples,
            recenter=self.recenter,
            section=self.section_sampling,
            observed=None if self.observe is None else tuple(self.observe),
            threads=self.threads,
        )

    @property
    def profile_offsets(self) -> Tuple[Optional[str], List[float]]:
        if not self.near_bifurcation:
            return None, []
        return self.near_bifurcation.get('param'), [float(o) for o in self.near_bifurcation.get('offsets', [])]


class Config:
    """Configuration manager for twigkit analyze runs"""

    DEFAULT_CONFIG = {
        'model': None,
        'order': 0,
        'params': {},
        'fixed': [],
        'observe': None,
        'sweep': {
            't_min': 1e-2,
            't_max': 1e3,
            'count': 60,
        },
        'n_samples': DEFAULT_SAMPLES,
        'recenter': False,
        'section_sampling': False,
        'near_bifurcation': None,
        'classification': {
            'tail_fraction': DEFAULT_TAIL_FRACTION,
            'slope_tol': DEFAULT_SLOPE_TOL,
            'frequency_share': DEFAULT_FREQUENCY_SHARE,
            'dilation_alignment': DEFAULT_DILATION_ALIGNMENT,
        },
        'outputs': 'twig-output',
        'seed': 0,
        'threads': None,
        'dump_trajectories': False,
        'verbose': False,
    }

    def __init__(self, config_file: Optional[str] = None, document: Optional[Dict[str, Any]] = None):
        self.config_file = config_file
        self.config = self._load_config(document)

    def _load_config(self, document: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        """Load configuration from file (JSON or YAML) and merge with defaults"""
        if document is None and self.config_file is not None:
            try:
                with open(self.config_file, 'r') as f:
                    document = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"Invalid config file {self.config_file}: {e}")
            except IOError as e:
                raise ConfigurationError(f"Cannot read config file {self.config_file}: {e}")
        document = document or {}
        if not isinstance(document, dict):
            raise ConfigurationError("Config document must be a mapping")

        merged = copy.deepcopy(self.DEFAULT_CONFIG)
        for key, value in document.items():
            if key not in merged:
                raise ConfigurationError(f"Unknown config key '{key}'")
            if isinstance(merged[key], dict) and key in ('sweep', 'classification'):
                if not isinstance(value, dict):
                    raise ConfigurationError(f"'{key}' must be a mapping")
                unknown = set(value) - set(merged[key])
                if unknown:
                    raise ConfigurationError(f"Unknown keys in '{key}': {', '.join(sorted(unknown))}")
                merged[key].update(value)
            else:
                merged[key] = value

        self._apply_env_overrides(merged)
        return merged

    def _apply_env_overrides(self, config: Dict[str, Any]) -> None:
        """Apply environment variable overrides"""
        env_mappings = {
            'TWIG_THREADS': 'threads',
            'TWIG_OUTPUTS': 'outputs',
            'TWIG_VERBOSE': 'verbose',
        }

        for env_var, config_key in env_mappings.items():
            env_value = os.getenv(env_var)
            if env_value is not None:
                if config_key == 'verbose':
                    config[config_key] = env_value.lower() in ('true', '1', 'yes', 'on')
                elif config_key == 'threads':
                    try:
                        config[config_key] = int(env_value)
                    except ValueError:
                        raise ConfigurationError(f"Invalid {env_var} value: {env_value}")
                else:
                    config[config_key] = env_value

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value"""
        return self.config.get(key, default)

    def update(self, updates: Dict[str, Any]) -> None:
        """Update configuration values"""
        self.config.update(updates)

    def to_run_config(self) -> RunConfig:
        """Validate and freeze into a RunConfig"""
        c = self.config
        model = c.get('model')
        if not model or not isinstance(model, (str, dict)):
            raise ConfigurationError("'model' must be a registry name or a model document")

        sweep, classification = c['sweep'], c['classification']
        try:
            run = RunConfig(
                model=model,
                order=int(c['order']),
                params={str(k): float(v) for k, v in (c['params'] or {}).items()},
                fixed=[str(n) for n in (c['fixed'] or [])],
                observe=None if c['observe'] is None else [int(i) for i in c['observe']],
                t_min=float(sweep['t_min']),
                t_max=float(sweep['t_max']),
                count=int(sweep['count']),
                n_samples=int(c['n_samples']),
                recenter=bool(c['recenter']),
                section_sampling=bool(c['section_sampling']),
                near_bifurcation=c['near_bifurcation'],
                tail_fraction=float(classification['tail_fraction']),
                slope_tol=float(classification['slope_tol']),
                frequency_share=float(classification['frequency_share']),
                dilation_alignment=float(classification['dilation_alignment']),
                outputs=str(c['outputs']),
                seed=int(c['seed']),
                threads=None if c['threads'] is None else int(c['threads']),
                dump_trajectories=bool(c['dump_trajectories']),
            )
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigurationError(f"Invalid config value: {e}")

        if not run.t_min < run.t_max or run.t_min <= 0:
            raise ConfigurationError(f"sweep needs 0 < t_min < t_max, got {run.t_min} and {run.t_max}")
        if run.count < MIN_HORIZONS:
            raise ConfigurationError(f"sweep.count must be at least {MIN_HORIZONS}, got {run.count}")
        if run.n_samples < MIN_SAMPLES:
            raise ConfigurationError(f"n_samples must be at least {MIN_SAMPLES}, got {run.n_samples}")
        if not 0.0 < run.tail_fraction <= 1.0:
            raise ConfigurationError(f"classification.tail_fraction must lie in (0, 1], got {run.tail_fraction}")
        if math.ceil(run.tail_fraction * run.count) < MIN_TAIL_POINTS:
            raise ConfigurationError(
                f"classification.tail_fraction {run.tail_fraction} of {run.count} horizons leaves fewer than "
                f"{MIN_TAIL_POINTS} tail points"
            )
        if run.slope_tol <= 0:
            raise ConfigurationError(f"classification.slope_tol must be positive, got {run.slope_tol}")
        if run.threads is not None and run.threads < 1:
            raise ConfigurationError(f"threads must be positive, got {run.threads}")
        if run.near_bifurcation is not None:
            nb = run.near_bifurcation
            if not isinstance(nb, dict) or not isinstance(nb.get('offsets'), list):
                raise ConfigurationError("near_bifurcation needs an 'offsets' list")
        return run

    def save(self, path: str) -> None:
        """Save current configuration to file"""
        with open(path, 'w') as f:
            yaml.dump(self.config, f, default_flow_style=False, indent=2)
