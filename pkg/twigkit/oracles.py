"""Closed-form trajectories and sensitivities of the normal forms at their bifurcation points.

Every family is evaluated with all rate parameters at zero, where the
trajectory has an elementary closed form and each first-order sensitivity
w solves a linear equation w' = (df/dy) w + df/dtheta with w(0) = 0
(w(0) = 1 for the initial condition).
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import SingularityError, UnsupportedOracleError
from .models import ModelSystem, ParameterKind

logger = logging.getLogger(__name__)

Which = Union[str, Tuple[str, int]]
_ALPHA = re.compile(r'^alpha\(?(\d+)\)?$')


class Family(str, Enum):
    SADDLE_NODE = "saddle_node"
    TRANSCRITICAL = "transcritical"
    PITCHFORK_SUPER = "pitchfork_super"
    PITCHFORK_SUB = "pitchfork_sub"


@dataclass(frozen=True)
class OracleFamily:
    family: Family
    y0: float

    def __post_init__(self):
        object.__setattr__(self, 'family', Family(self.family))
        if self.y0 == 0.0:
            raise UnsupportedOracleError("y0 = 0 is the fixed point itself; every sensitivity is trivial")

    @property
    def singular_time(self) -> Optional[float]:
        if self.family == Family.SADDLE_NODE and self.y0 > 0:
            return 1.0 / self.y0
        if self.family == Family.TRANSCRITICAL and self.y0 < 0:
            return -1.0 / self.y0
        if self.family == Family.PITCHFORK_SUB:
            return 1.0 / (2.0 * self.y0 ** 2)
        return None


@dataclass(frozen=True)
class GrowthOrder:
    """Large-t behaviour t**exponent, times ln(t)**2 when ``logarithmic``"""
    exponent: Fraction
    logarithmic: bool = False


def parse_which(which: Which) -> Tuple[str, int]:
    """'r', 'y0', 'alphaN', 'alpha(N)' or ('alpha', N)"""
    if isinstance(which, tuple):
        kind, n = which
        if kind != 'alpha' or int(n) < 1:
            raise UnsupportedOracleError(f"Unsupported sensitivity {which!r}")
        return 'alpha', int(n)
    if which in ('r', 'y0'):
        return which, 0
    match = _ALPHA.match(str(which))
    if match and int(match.group(1)) >= 1:
        return 'alpha', int(match.group(1))
    raise UnsupportedOracleError(f"Unsupported sensitivity {which!r}; expected r, y0 or alphaN")


def _check_time(family: OracleFamily, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    singular = family.singular_time
    if singular is not None and np.any(t >= singular):
        raise SingularityError(f"{family.family.value}: t must stay below the singular time {singular:.6g}")
    return t


def _base(family: OracleFamily, t: np.ndarray) -> np.ndarray:
    """u(t): the quantity each closed form is written in"""
    y0 = family.y0
    if family.family == Family.SADDLE_NODE:
        return 1.0 - y0 * t
    if family.family == Family.TRANSCRITICAL:
        return 1.0 + y0 * t
    if family.family == Family.PITCHFORK_SUPER:
        return 1.0 + 2.0 * y0 ** 2 * t
    return 1.0 - 2.0 * y0 ** 2 * t


def oracle_trajectory(family: OracleFamily, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Exact solution from y(0) = y0 with every rate parameter at zero"""
    t = _check_time(family, t)
    u = _base(family, t)
    if family.family in (Family.SADDLE_NODE, Family.TRANSCRITICAL):
        return family.y0 / u
    return family.y0 / np.sqrt(u)


def _power_integral(u: np.ndarray, exponent: float) -> np.ndarray:
    """Integral of s**exponent from 1 to u"""
    if exponent == -1.0:
        return np.log(u)
    return (u ** (exponent + 1.0) - 1.0) / (exponent + 1.0)


def oracle_sensitivity(family: OracleFamily, which: Which,
                       t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """dy/d(which) along the exact trajectory"""
    kind, n = parse_which(which)
    t = _check_time(family, t)
    u = _base(family, t)
    y0 = family.y0

    if family.family in (Family.SADDLE_NODE, Family.TRANSCRITICAL):
        homogeneous = u ** -2.0
        if kind == 'y0':
            return homogeneous
        if family.family == Family.SADDLE_NODE:
            if kind == 'r':
                return (1.0 - u ** 3) / (3.0 * y0 * u ** 2)
            return -y0 ** (n + 1) * _power_integral(u, -float(n)) * homogeneous
        if kind == 'r':
            return (u ** 2 - 1.0) / (2.0 * u ** 2)
        return y0 ** (n + 1) * _power_integral(u, -float(n)) * homogeneous

    homogeneous = u ** -1.5
    sign = 1.0 if family.family == Family.PITCHFORK_SUPER else -1.0
    if kind == 'y0':
        return homogeneous
    if kind == 'r':
        return sign * (u ** 2 - 1.0) / (4.0 * y0) * homogeneous
    return sign * 0.5 * y0 ** (n + 1) * _power_integral(u, -0.5 * n) * homogeneous


def growth_order(family: OracleFamily, which: Which) -> GrowthOrder:
    """Large-t order of the squared sensitivity, the FIM diagonal entry it feeds"""
    kind, n = parse_which(which)
    if family.singular_time is not None:
        raise UnsupportedOracleError(
            f"{family.family.value} with y0={family.y0} blows up at t={family.singular_time:.6g}; "
            f"no large-t order exists"
        )
    if family.family in (Family.SADDLE_NODE, Family.TRANSCRITICAL):
        if kind == 'r':
            return GrowthOrder(Fraction(2) if family.family == Family.SADDLE_NODE else Fraction(0))
        return GrowthOrder(Fraction(-4), logarithmic=(kind == 'alpha' and n == 1))
    # supercritical pitchfork
    if kind == 'r':
        return GrowthOrder(Fraction(1))
    if kind == 'alpha' and n == 1:
        return GrowthOrder(Fraction(-2))
    return GrowthOrder(Fraction(-3), logarithmic=(kind == 'alpha' and n == 2))


@dataclass(frozen=True)
class OracleBinding:
    """Closed-form columns for one observed component of a model"""
    component: int
    trajectory: Callable[[np.ndarray], np.ndarray]
    columns: Dict[str, Callable[[np.ndarray], np.ndarray]]
    singular_time: Optional[float] = None


def _family_binding(model: ModelSystem, params: np.ndarray, family: Family, rename: Dict[str, str],
                    required_zero: Sequence[str], component: int = 0,
                    only: Optional[Sequence[str]] = None) -> Optional[OracleBinding]:
    values = dict(zip(model.param_names, params))
    if any(values.get(name, 0.0) != 0.0 for name in required_zero):
        return None
    y0 = values['y0']
    if y0 == 0.0:
        return None
    fam = OracleFamily(family, y0)
    columns = {}
    for name in model.free_names:
        if only is not None and name not in only:
            continue
        which = rename.get(name, name)
        try:
            parse_which(which)
        except UnsupportedOracleError:
            continue
        columns[name] = (lambda w: (lambda t: oracle_sensitivity(fam, w, t)))(which)
    return OracleBinding(component, lambda t: oracle_trajectory(fam, t), columns, fam.singular_time)


def _toy_binding(model: ModelSystem, params: np.ndarray) -> OracleBinding:
    t1, t2, t3 = params

    columns = {
        'theta1': lambda t: np.ones_like(np.asarray(t, dtype=float)),
        'theta2': lambda t: -t * np.exp(-t2 * t),
        'theta3': lambda t: t * np.exp(t3 * t),
    }
    return OracleBinding(0, lambda t: t1 + np.exp(-t2 * t) + np.exp(t3 * t),
                         {k: v for k, v in columns.items() if k in model.free_names})


def oracle_binding(model: ModelSystem, params: Optional[Sequence[float]] = None) -> Optional[OracleBinding]:
    """Closed-form reference for a registry model at ``params``, if one exists"""
    params = model.check_params(params)
    rates = [p.name for p in model.parameters if p.kind == ParameterKind.RATE]
    if model.name == 'toy_exponential':
        return _toy_binding(model, params)
    if model.name in (f.value for f in Family):
        return _family_binding(model, params, Family(model.name), {}, rates)
    if model.name == 'hopf_polar':
        radial = [name for name in ('mu', 'alpha1', 'alpha2') if name in model.param_names]
        return _family_binding(model, params, Family.PITCHFORK_SUPER, {'mu': 'r'}, radial,
                               only=radial + ['y0'])
    return None
