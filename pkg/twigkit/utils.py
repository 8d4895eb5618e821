"""Utility functions for twigkit"""

import os
from typing import Optional, Tuple

import numpy as np


def geometric_grid(t_min: float, t_max: float, count: int) -> np.ndarray:
    """Geometric horizon grid from t_min to t_max inclusive"""
    if not (t_min > 0 and t_max > t_min):
        raise ValueError(f"Invalid horizon range: need 0 < t_min < t_max, got {t_min}, {t_max}")
    if count < 2:
        raise ValueError(f"Invalid horizon count: {count}")
    return np.geomspace(t_min, t_max, int(count))


def parse_param_override(spec: str) -> Tuple[str, float]:
    """Parse a parameter override: name=value"""
    name, sep, value = spec.partition('=')
    if not sep or not name.strip():
        raise ValueError(f"Invalid parameter override: {spec}. Expected format: name=value")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise ValueError(f"Invalid value in parameter override: {spec}")


def format_number(value: float) -> str:
    """17 significant digits, enough to round-trip a double"""
    return f"{float(value):.17g}"


def resolve_thread_count(threads: Optional[int] = None) -> int:
    """Explicit count, else TWIG_THREADS, else machine parallelism"""
    if threads is None:
        env = os.getenv('TWIG_THREADS')
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"Invalid TWIG_THREADS value: {env}")
    if threads is None:
        threads = os.cpu_count() or 1
    return max(1, int(threads))


def relative_discrepancy(actual: np.ndarray, expected: np.ndarray,
                         column_floor: float = 1e-6, floor: float = 1e-10) -> Tuple[float, Tuple[int, int]]:
    """Largest elementwise relative error between two matrices.

    Entries are compared against max(|a|, |b|, column_floor * column max,
    floor) so columns that are identically tiny do not dominate.
    Returns the error and the (row, column) where it occurs.
    """
    a = np.atleast_2d(np.asarray(actual, dtype=float))
    b = np.atleast_2d(np.asarray(expected, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"Shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0, (0, 0)
    scale = np.maximum(np.abs(a), np.abs(b))
    column_max = scale.max(axis=0, keepdims=True)
    denom = np.maximum(np.maximum(scale, column_floor * column_max), floor)
    error = np.abs(a - b) / denom
    row, col = np.unravel_index(int(np.argmax(error)), error.shape)
    return float(error[row, col]), (int(row), int(col))
