"""Parameterized dynamical systems and the built-in model registry"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DivergenceError, ModelError
from .templates import POLYNOMIAL_TEMPLATES

logger = logging.getLogger(__name__)

MAX_ORDER = 8
FD_STEP = 1e-6

RhsFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
ClosedFormFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class ParameterKind(str, Enum):
    RATE = "rate"
    INITIAL_CONDITION = "initial_condition"


class CoordinateKind(str, Enum):
    CARTESIAN = "cartesian"
    POLAR = "polar"


@dataclass(frozen=True)
class Parameter:
    """A named model parameter.

    Initial-condition parameters carry the index of the state component
    they seed. Parameters with ``free=False`` keep their value but are not
    differentiated against.
    """
    name: str
    value: float
    kind: ParameterKind = ParameterKind.RATE
    state_index: Optional[int] = None
    free: bool = True

    @property
    def is_initial_condition(self) -> bool:
        return self.kind == ParameterKind.INITIAL_CONDITION


@dataclass(frozen=True, eq=False)
class ModelSystem:
    """An ODE system y' = f(y; theta), or a closed-form observation map.

    Parameter vectors passed to the evaluators always cover every parameter
    in declaration order; Jacobian columns cover the free ones only.
    """
    name: str
    state_dim: int
    parameters: Tuple[Parameter, ...]
    rhs: Optional[RhsFn] = None
    closed_form: Optional[ClosedFormFn] = None
    analytic_state_jacobian: Optional[JacobianFn] = None
    analytic_param_jacobian: Optional[JacobianFn] = None
    coordinate_kind: CoordinateKind = CoordinateKind.CARTESIAN
    state_names: Tuple[str, ...] = ()
    phase_components: Tuple[int, ...] = ()
    positive_components: Tuple[int, ...] = ()
    bifurcation_param: Optional[str] = None
    origin: str = ""
    order: int = 0

    def __post_init__(self):
        if self.state_dim < 1:
            raise ModelError(f"{self.name}: state_dim must be positive, got {self.state_dim}")
        if self.rhs is None and self.closed_form is None:
            raise ModelError(f"{self.name}: a model needs a right-hand side or a closed form")

        names = [p.name for p in self.parameters]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ModelError(f"{self.name}: duplicate parameter names {duplicates}")

        seeded = set()
        for p in self.parameters:
            if not p.is_initial_condition:
                continue
            if p.state_index is None or not 0 <= p.state_index < self.state_dim:
                raise ModelError(f"{self.name}: initial condition {p.name} has no valid state index")
            if p.state_index in seeded:
                raise ModelError(f"{self.name}: state {p.state_index} has more than one initial condition")
            seeded.add(p.state_index)

        if self.rhs is not None and len(seeded) != self.state_dim:
            raise ModelError(f"{self.name}: every state component needs an initial-condition parameter")
        for idx in self.phase_components:
            if not 0 <= idx < self.state_dim:
                raise ModelError(f"{self.name}: phase component {idx} out of range")
        if self.bifurcation_param is not None and self.bifurcation_param not in names:
            raise ModelError(f"{self.name}: unknown bifurcation parameter {self.bifurcation_param}")
        if not self.state_names:
            default = ('y',) if self.state_dim == 1 else tuple(f"y{i + 1}" for i in range(self.state_dim))
            object.__setattr__(self, 'state_names', default)

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def free_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.parameters) if p.free)

    @property
    def free_names(self) -> Tuple[str, ...]:
        return tuple(self.parameters[i].name for i in self.free_indices)

    @property
    def initial_condition_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.parameters if p.is_initial_condition and p.free)

    @property
    def has_ode(self) -> bool:
        return self.rhs is not None

    def index_of(self, name: str) -> int:
        try:
            return self.param_names.index(name)
        except ValueError:
            raise ModelError(f"{self.name}: unknown parameter '{name}' (known: {', '.join(self.param_names)})")

    def default_params(self) -> np.ndarray:
        return np.array([p.value for p in self.parameters], dtype=float)

    def param_vector(self, overrides: Optional[Dict[str, float]] = None) -> np.ndarray:
        """Default parameter vector with named overrides applied"""
        params = self.default_params()
        for name, value in (overrides or {}).items():
            params[self.index_of(name)] = float(value)
        return params

    def check_params(self, params: Optional[Sequence[float]]) -> np.ndarray:
        if params is None:
            return self.default_params()
        params = np.asarray(params, dtype=float)
        if params.shape != (len(self.parameters),):
            raise ModelError(
                f"{self.name}: expected {len(self.parameters)} parameter values, got shape {params.shape}"
            )
        if not np.all(np.isfinite(params)):
            raise ModelError(f"{self.name}: parameter values must be finite")
        return params

    def with_values(self, overrides: Dict[str, float]) -> 'ModelSystem':
        """Copy of the model with new default values"""
        for name in overrides:
            self.index_of(name)
        parameters = tuple(
            replace(p, value=float(overrides[p.name])) if p.name in overrides else p
            for p in self.parameters
        )
        return replace(self, parameters=parameters)

    def with_fixed(self, names: Iterable[str]) -> 'ModelSystem':
        """Copy of the model with the named parameters held constant"""
        names = set(names)
        for name in names:
            self.index_of(name)
        parameters = tuple(replace(p, free=False) if p.name in names else p for p in self.parameters)
        return replace(self, parameters=parameters)

    def initial_state(self, params: np.ndarray) -> np.ndarray:
        state = np.zeros(self.state_dim)
        for i, p in enumerate(self.parameters):
            if p.is_initial_condition:
                state[p.state_index] = params[i]
        return state

    def initial_sensitivity(self) -> np.ndarray:
        """S(0): one in each free initial condition's (state, column) slot"""
        free = self.free_indices
        sens = np.zeros((self.state_dim, len(free)))
        for col, idx in enumerate(free):
            p = self.parameters[idx]
            if p.is_initial_condition:
                sens[p.state_index, col] = 1.0
        return sens


def eval_rhs(model: ModelSystem, state: np.ndarray, params: np.ndarray, t: float) -> np.ndarray:
    """f(y; theta) at one point; non-finite output raises DivergenceError"""
    if model.rhs is None:
        raise ModelError(f"{model.name} is a closed-form model without a right-hand side")
    state = np.asarray(state, dtype=float)
    if state.shape != (model.state_dim,):
        raise ModelError(f"{model.name}: expected state of length {model.state_dim}, got shape {state.shape}")
    with np.errstate(all='ignore'):
        value = np.asarray(model.rhs(state, params, t), dtype=float)
    if value.shape != (model.state_dim,):
        raise ModelError(f"{model.name}: rhs returned shape {value.shape}, expected ({model.state_dim},)")
    if not np.all(np.isfinite(value)):
        raise DivergenceError(f"{model.name}: non-finite derivative at t={t:.6g}, state={state}", time=t)
    return value


def param_jacobian_fd(model: ModelSystem, state: np.ndarray, params: np.ndarray, t: float,
                      use_analytic: bool = True) -> np.ndarray:
    """df/dtheta as an n x m matrix over every parameter.

    Central differences with step 1e-6 * (1 + |theta_j|) unless the model
    supplies an analytic Jacobian and ``use_analytic`` is set.
    """
    params = np.asarray(params, dtype=float)
    if use_analytic and model.analytic_param_jacobian is not None:
        with np.errstate(all='ignore'):
            jac = np.asarray(model.analytic_param_jacobian(state, params, t), dtype=float)
    else:
        jac = np.empty((model.state_dim, len(params)))
        for j in range(len(params)):
            h = FD_STEP * (1.0 + abs(params[j]))
            up, down = params.copy(), params.copy()
            up[j] += h
            down[j] -= h
            jac[:, j] = (eval_rhs(model, state, up, t) - eval_rhs(model, state, down, t)) / (2.0 * h)
    if not np.all(np.isfinite(jac)):
        raise DivergenceError(f"{model.name}: non-finite parameter Jacobian at t={t:.6g}", time=t)
    return jac


def state_jacobian(model: ModelSystem, state: np.ndarray, params: np.ndarray, t: float,
                   use_analytic: bool = True) -> np.ndarray:
    """df/dy as an n x n matrix"""
    state = np.asarray(state, dtype=float)
    if use_analytic and model.analytic_state_jacobian is not None:
        with np.errstate(all='ignore'):
            jac = np.asarray(model.analytic_state_jacobian(state, params, t), dtype=float)
    else:
        jac = np.empty((model.state_dim, model.state_dim))
        for k in range(model.state_dim):
            h = FD_STEP * (1.0 + abs(state[k]))
            up, down = state.copy(), state.copy()
            up[k] += h
            down[k] -= h
            jac[:, k] = (eval_rhs(model, up, params, t) - eval_rhs(model, down, params, t)) / (2.0 * h)
    if not np.all(np.isfinite(jac)):
        raise DivergenceError(f"{model.name}: non-finite state Jacobian at t={t:.6g}", time=t)
    return jac


def cartesian_view(model: ModelSystem, states: np.ndarray) -> np.ndarray:
    """Samples in Cartesian coordinates; polar (radius, angle) becomes (y cos, y sin)"""
    states = np.asarray(states, dtype=float)
    if model.coordinate_kind != CoordinateKind.POLAR or not model.phase_components:
        return states
    angle = model.phase_components[0]
    radius = next(i for i in range(model.state_dim) if i not in model.phase_components)
    return np.column_stack([states[:, radius] * np.cos(states[:, angle]),
                            states[:, radius] * np.sin(states[:, angle])])


class PolynomialField:
    """Vectorized sum of monomial terms, optionally times ln(y_l).

    Each term contributes ``w * prod(y ** powers) * ln(y[log_of])`` to one
    equation, where the weight w is a constant or ``scale * theta[param]``.
    """

    def __init__(self, state_dim: int, equations: List[List[Dict[str, Any]]], param_index: Dict[str, int]):
        rows, coeffs, params, powers, logs = [], [], [], [], []
        for eq, terms in enumerate(equations):
            for t in terms:
                coeff = t.get('coeff', 1.0)
                if isinstance(coeff, dict):
                    name = coeff.get('param')
                    if name not in param_index:
                        raise ModelError(f"equation {eq}: unknown coefficient parameter '{name}'")
                    coeffs.append(float(coeff.get('scale', 1.0)))
                    params.append(param_index[name])
                else:
                    coeffs.append(float(coeff))
                    params.append(-1)
                exps = t.get('powers', [0] * state_dim)
                if len(exps) != state_dim:
                    raise ModelError(f"equation {eq}: powers must have {state_dim} entries, got {len(exps)}")
                powers.append([float(e) for e in exps])
                log_of = t.get('log_of')
                if log_of is not None and not 0 <= int(log_of) < state_dim:
                    raise ModelError(f"equation {eq}: log_of index {log_of} out of range")
                logs.append(-1 if log_of is None else int(log_of))
                rows.append(eq)

        self.state_dim = state_dim
        self.n_params = len(param_index)
        self.rows = np.array(rows, dtype=int)
        self.coeffs = np.array(coeffs, dtype=float)
        self.params = np.array(params, dtype=int)
        self.powers = np.array(powers, dtype=float).reshape(len(rows), state_dim)
        self.log_of = np.array(logs, dtype=int)
        self.has_param = self.params >= 0
        self.has_log = self.log_of >= 0
        self.reduced = []
        for k in range(state_dim):
            lowered = self.powers.copy()
            lowered[:, k] = np.maximum(lowered[:, k] - 1.0, 0.0)
            self.reduced.append(lowered)

    @property
    def log_components(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.log_of[self.has_log].tolist())))

    def _weights(self, params: np.ndarray) -> np.ndarray:
        w = self.coeffs.copy()
        w[self.has_param] *= params[self.params[self.has_param]]
        return w

    def _monomials(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mono = np.prod(np.power(y[None, :], self.powers), axis=1)
        logs = np.ones(len(self.rows))
        logs[self.has_log] = np.log(y[self.log_of[self.has_log]])
        return mono, logs

    def rhs(self, y: np.ndarray, params: np.ndarray, t: float) -> np.ndarray:
        mono, logs = self._monomials(y)
        return np.bincount(self.rows, weights=self._weights(params) * mono * logs, minlength=self.state_dim)

    def param_jacobian(self, y: np.ndarray, params: np.ndarray, t: float) -> np.ndarray:
        mono, logs = self._monomials(y)
        jac = np.zeros((self.state_dim, self.n_params))
        values = (self.coeffs * mono * logs)[self.has_param]
        np.add.at(jac, (self.rows[self.has_param], self.params[self.has_param]), values)
        return jac

    def state_jacobian(self, y: np.ndarray, params: np.ndarray, t: float) -> np.ndarray:
        mono, logs = self._monomials(y)
        w = self._weights(params)
        jac = np.zeros((self.state_dim, self.state_dim))
        for k in range(self.state_dim):
            e = self.powers[:, k]
            dmono = np.where(e != 0.0, e * np.prod(np.power(y[None, :], self.reduced[k]), axis=1), 0.0)
            dlog = np.where(self.log_of == k, 1.0 / y[k], 0.0)
            jac[:, k] = np.bincount(self.rows, weights=w * (dmono * logs + mono * dlog), minlength=self.state_dim)
        return jac


def _parse_parameters(doc: Dict[str, Any], state_dim: int, state_names: Tuple[str, ...]) -> List[Parameter]:
    entries = doc.get('params', [])
    if not isinstance(entries, list):
        raise ModelError("'params' must be a list")
    initial_state = doc.get('initial_state')
    if initial_state is not None and len(initial_state) != state_dim:
        raise ModelError(f"'initial_state' must have {state_dim} entries")

    parameters: List[Parameter] = []
    seeded = set()
    pending = []
    for entry in entries:
        if not isinstance(entry, dict) or 'name' not in entry:
            raise ModelError(f"malformed parameter entry: {entry!r}")
        try:
            kind = ParameterKind(entry.get('kind', 'rate'))
        except ValueError:
            raise ModelError(f"parameter {entry['name']}: unknown kind {entry.get('kind')!r}")
        state = entry.get('state')
        if kind == ParameterKind.INITIAL_CONDITION and state is None:
            pending.append(len(parameters))
        elif state is not None:
            seeded.add(int(state))
        parameters.append(Parameter(
            name=str(entry['name']),
            value=float(entry.get('value', 0.0)),
            kind=kind,
            state_index=None if state is None else int(state),
            free=bool(entry.get('free', True)),
        ))

    # initial conditions without a state index seed the uncovered states in order
    open_states = [k for k in range(state_dim) if k not in seeded]
    for pos in pending:
        if not open_states:
            raise ModelError(f"initial condition {parameters[pos].name} has no state left to seed")
        parameters[pos] = replace(parameters[pos], state_index=open_states.pop(0))

    for k in open_states:
        value = 1.0 if initial_state is None else float(initial_state[k])
        parameters.append(Parameter(f"{state_names[k]}0", value, ParameterKind.INITIAL_CONDITION, k))
    return parameters


def model_from_document(doc: Dict[str, Any], name: Optional[str] = None, order: int = 0) -> ModelSystem:
    """Build a polynomial model from its JSON/YAML document"""
    if not isinstance(doc, dict):
        raise ModelError("model document must be a mapping")
    try:
        state_dim = int(doc['state_dim'])
        equations = doc['equations']
    except (KeyError, TypeError, ValueError) as e:
        raise ModelError(f"model document is missing a valid field: {e}")
    if state_dim < 1:
        raise ModelError(f"state_dim must be positive, got {state_dim}")
    if not isinstance(equations, list) or len(equations) != state_dim:
        raise ModelError(f"'equations' must list one term list per state component ({state_dim})")

    state_names = tuple(doc.get('state_names') or
                        (('y',) if state_dim == 1 else tuple(f"y{i + 1}" for i in range(state_dim))))
    if len(state_names) != state_dim:
        raise ModelError(f"'state_names' must have {state_dim} entries")

    parameters = _parse_parameters(doc, state_dim, state_names)
    field = PolynomialField(state_dim, equations, {p.name: i for i, p in enumerate(parameters)})

    try:
        coordinates = CoordinateKind(doc.get('coordinates', 'cartesian'))
    except ValueError:
        raise ModelError(f"unknown coordinate kind {doc.get('coordinates')!r}")

    return ModelSystem(
        name=name or doc.get('name', 'custom'),
        state_dim=state_dim,
        parameters=tuple(parameters),
        rhs=field.rhs,
        analytic_state_jacobian=field.state_jacobian,
        analytic_param_jacobian=field.param_jacobian,
        coordinate_kind=coordinates,
        state_names=state_names,
        phase_components=tuple(int(i) for i in doc.get('phase_components', [])),
        positive_components=field.log_components,
        bifurcation_param=doc.get('bifurcation_param'),
        origin=doc.get('origin', 'custom polynomial model'),
        order=order,
    )


def modified_transcritical(order: int = 0) -> ModelSystem:
    """y' = r ln y + a (y - alpha) + b (y - alpha)^2 + sum c_k (y - alpha)^(k+2)

    The scale ``a`` is held fixed: ln y and y - 1 agree to first order at the
    fixed point and would otherwise share the relevant direction.
    """
    series = [f"c{k}" for k in range(1, order + 1)]
    parameters = (
        [Parameter('r', -1.0), Parameter('a', 1.0, free=False), Parameter('alpha', 1.0), Parameter('b', 0.0)]
        + [Parameter(c, 0.0) for c in series]
        + [Parameter('y0', 0.5, ParameterKind.INITIAL_CONDITION, 0)]
    )
    powers = np.arange(3, order + 3, dtype=float)

    def rhs(y, params, t):
        r, a, alpha, b = params[:4]
        u = y[0] - alpha
        value = r * np.log(y[0]) + a * u + b * u ** 2
        if order:
            value += np.dot(params[4:4 + order], u ** powers)
        return np.array([value])

    def jacobian(y, params, t):
        r, a, alpha, b = params[:4]
        u = y[0] - alpha
        value = r / y[0] + a + 2.0 * b * u
        if order:
            value += np.dot(params[4:4 + order] * powers, u ** (powers - 1.0))
        return np.array([[value]])

    return ModelSystem(
        name='modified_transcritical',
        state_dim=1,
        parameters=tuple(parameters),
        rhs=rhs,
        analytic_state_jacobian=jacobian,
        state_names=('y',),
        positive_components=(0,),
        bifurcation_param='alpha',
        origin='Non-normal transcritical with shifted polynomial: codimension-two example',
        order=order,
    )


def toy_exponential(order: int = 0) -> ModelSystem:
    """Closed-form observation map y(t) = theta1 + exp(-theta2 t) + exp(theta3 t)"""

    def closed_form(params, times):
        t1, t2, t3 = params
        times = np.asarray(times, dtype=float)
        return (t1 + np.exp(-t2 * times) + np.exp(t3 * times))[:, None]

    return ModelSystem(
        name='toy_exponential',
        state_dim=1,
        parameters=(Parameter('theta1', 0.0), Parameter('theta2', 1.0), Parameter('theta3', 0.0)),
        closed_form=closed_form,
        state_names=('y',),
        origin='Toy observation map: offset, decaying and growing exponentials',
        order=order,
    )


def _template_factory(name: str) -> Callable[[int], ModelSystem]:
    def factory(order: int = 0) -> ModelSystem:
        return model_from_document(POLYNOMIAL_TEMPLATES[name](order), name=name, order=order)
    factory.__name__ = name
    return factory


@dataclass(frozen=True)
class ModelEntry:
    name: str
    factory: Callable[[int], ModelSystem]
    max_order: int
    origin: str


MODEL_REGISTRY: Dict[str, ModelEntry] = {
    'toy_exponential': ModelEntry('toy_exponential', toy_exponential, 0,
                                  'Toy observation map: theta1 + exp(-theta2 t) + exp(theta3 t)'),
    'saddle_node': ModelEntry('saddle_node', _template_factory('saddle_node'), MAX_ORDER,
                              'Normal-form list: saddle-node'),
    'transcritical': ModelEntry('transcritical', _template_factory('transcritical'), MAX_ORDER,
                                'Normal-form list: transcritical'),
    'pitchfork_super': ModelEntry('pitchfork_super', _template_factory('pitchfork_super'), MAX_ORDER,
                                  'Normal-form list: supercritical pitchfork'),
    'pitchfork_sub': ModelEntry('pitchfork_sub', _template_factory('pitchfork_sub'), MAX_ORDER,
                                'Normal-form list: subcritical pitchfork'),
    'hopf_polar': ModelEntry('hopf_polar', _template_factory('hopf_polar'), MAX_ORDER,
                             'Normal-form list: Hopf in polar coordinates'),
    'nonnormal_transcritical': ModelEntry('nonnormal_transcritical', _template_factory('nonnormal_transcritical'),
                                          MAX_ORDER, 'Non-normal forms: r ln y + y - 1'),
    'modified_transcritical': ModelEntry('modified_transcritical', modified_transcritical, MAX_ORDER,
                                         'Non-normal forms: modified transcritical, codimension two'),
    'selkov': ModelEntry('selkov', _template_factory('selkov'), 0,
                         "Biophysical example: Sel'kov glycolysis"),
}


def registry_names() -> List[str]:
    return list(MODEL_REGISTRY)


def build_model(name: str, order: int = 0) -> ModelSystem:
    """Instantiate a registry model with ``order`` higher-order terms"""
    if name not in MODEL_REGISTRY:
        raise ModelError(f"Unknown model '{name}'. Available models: {', '.join(registry_names())}")
    entry = MODEL_REGISTRY[name]
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)) or order < 0:
        raise ModelError(f"order must be a non-negative integer, got {order!r}")
    if order > entry.max_order:
        raise ModelError(f"{name} supports order <= {entry.max_order}, got {order}")
    logger.debug(f"Building model {name} (order {order})")
    return entry.factory(int(order))


def resolve_model(spec: Union[str, Dict[str, Any]], order: int = 0) -> ModelSystem:
    """Registry name or inline custom document"""
    if isinstance(spec, str):
        return build_model(spec, order)
    if isinstance(spec, dict):
        if order:
            logger.warning("'order' is ignored for inline model documents")
        return model_from_document(spec)
    raise ModelError(f"model must be a registry name or a model document, got {type(spec).__name__}")


__all__ = [
    'Parameter', 'ParameterKind', 'CoordinateKind', 'ModelSystem', 'ModelEntry', 'PolynomialField',
    'MODEL_REGISTRY', 'MAX_ORDER', 'build_model', 'resolve_model', 'model_from_document', 'registry_names',
    'eval_rhs', 'param_jacobian_fd', 'state_jacobian', 'cartesian_view',
]
