"""Polynomial model documents for the built-in registry"""

import math
from typing import Dict, List, Any, Optional, Union


Coefficient = Union[float, Dict[str, Any]]


def param_coeff(name: str, scale: float = 1.0) -> Dict[str, Any]:
    """Coefficient bound to a parameter, optionally scaled by a constant"""
    coeff: Dict[str, Any] = {'param': name}
    if scale != 1.0:
        coeff['scale'] = scale
    return coeff


def term(coeff: Coefficient, powers: List[float], log_of: Optional[int] = None) -> Dict[str, Any]:
    """One monomial: coeff * prod(y_k ** powers[k]) * ln(y[log_of])"""
    return {'coeff': coeff, 'powers': list(powers), 'log_of': log_of}


def rate(name: str, value: float = 0.0) -> Dict[str, Any]:
    return {'name': name, 'value': value, 'kind': 'rate'}


def initial(name: str, value: float, state: int) -> Dict[str, Any]:
    return {'name': name, 'value': value, 'kind': 'initial_condition', 'state': state}


def alpha_names(order: int, start: int = 1) -> List[str]:
    return [f"alpha{i}" for i in range(start, start + order)]


def shifted_power_terms(param: str, power: int, shift: float = 1.0) -> List[Dict[str, Any]]:
    """Binomial expansion of param * (y - shift) ** power for a 1-D state"""
    terms = []
    for j in range(power + 1):
        scale = math.comb(power, j) * (-shift) ** (power - j)
        if scale != 0.0:
            terms.append(term(param_coeff(param, scale), [j]))
    return terms


def saddle_node_template(order: int = 0) -> Dict[str, Any]:
    """y' = r + y^2 + sum alpha_n y^(n+2)"""
    alphas = alpha_names(order)
    equation = [term(param_coeff('r'), [0]), term(1.0, [2])]
    equation += [term(param_coeff(a), [n + 2]) for n, a in enumerate(alphas, start=1)]
    return {
        'name': 'saddle_node',
        'state_dim': 1,
        'state_names': ['y'],
        'origin': 'Normal form: saddle-node, r + y^2 with y^(n+2) series',
        'bifurcation_param': 'r',
        'params': [rate('r')] + [rate(a) for a in alphas] + [initial('y0', -1.0, 0)],
        'equations': [equation],
    }


def transcritical_template(order: int = 0) -> Dict[str, Any]:
    """y' = r y - y^2 + sum alpha_n y^(n+2)"""
    alphas = alpha_names(order)
    equation = [term(param_coeff('r'), [1]), term(-1.0, [2])]
    equation += [term(param_coeff(a), [n + 2]) for n, a in enumerate(alphas, start=1)]
    return {
        'name': 'transcritical',
        'state_dim': 1,
        'state_names': ['y'],
        'origin': 'Normal form: transcritical, r y - y^2 with y^(n+2) series',
        'bifurcation_param': 'r',
        'params': [rate('r')] + [rate(a) for a in alphas] + [initial('y0', 1.0, 0)],
        'equations': [equation],
    }


def pitchfork_template(order: int = 0, subcritical: bool = False) -> Dict[str, Any]:
    """y' = r y -/+ y^3 + sum alpha_n y^(n+3)"""
    alphas = alpha_names(order)
    cubic = 1.0 if subcritical else -1.0
    equation = [term(param_coeff('r'), [1]), term(cubic, [3])]
    equation += [term(param_coeff(a), [n + 3]) for n, a in enumerate(alphas, start=1)]
    if subcritical:
        # just to the stable side; |y0| stays inside the basin bounded by +/- sqrt(-r)
        params = [rate('r', -0.01)] + [rate(a) for a in alphas] + [initial('y0', 0.05, 0)]
        name, origin = 'pitchfork_sub', 'Normal form: subcritical pitchfork, r y + y^3 with y^(n+3) series'
    else:
        params = [rate('r')] + [rate(a) for a in alphas] + [initial('y0', 1.0, 0)]
        name, origin = 'pitchfork_super', 'Normal form: supercritical pitchfork, r y - y^3 with y^(n+3) series'
    return {
        'name': name,
        'state_dim': 1,
        'state_names': ['y'],
        'origin': origin,
        'bifurcation_param': 'r',
        'params': params,
        'equations': [equation],
    }


def hopf_polar_template(order: int = 0) -> Dict[str, Any]:
    """Hopf normal form in polar coordinates.

    Radial:  y' = mu y - y^3 + alpha1 y^4 + alpha2 y^5
    Angular: theta' = omega + beta y^2 + alpha3 y^3 + ... + alpha_k y^k

    The first two series coefficients extend the radial equation, the rest
    the angular one.
    """
    alphas = alpha_names(order)
    radial = [term(param_coeff('mu'), [1, 0]), term(-1.0, [3, 0])]
    angular = [term(param_coeff('omega'), [0, 0]), term(param_coeff('beta'), [2, 0])]
    for n, a in enumerate(alphas, start=1):
        if n <= 2:
            radial.append(term(param_coeff(a), [n + 3, 0]))
        else:
            angular.append(term(param_coeff(a), [n, 0]))
    return {
        'name': 'hopf_polar',
        'state_dim': 2,
        'state_names': ['y', 'theta'],
        'coordinates': 'polar',
        'phase_components': [1],
        'origin': 'Normal form: Hopf in polar coordinates with radial and angular series',
        'bifurcation_param': 'mu',
        'params': ([rate('mu'), rate('omega', 1.0), rate('beta')] + [rate(a) for a in alphas]
                   + [initial('y0', 1.0, 0), initial('theta0', 0.0, 1)]),
        'equations': [radial, angular],
    }


def nonnormal_transcritical_template(order: int = 0) -> Dict[str, Any]:
    """y' = r ln y + y - 1 + sum alpha_n (y - 1)^(n+1)"""
    alphas = alpha_names(order)
    equation = [term(param_coeff('r'), [0], log_of=0), term(1.0, [1]), term(-1.0, [0])]
    for n, a in enumerate(alphas, start=1):
        equation += shifted_power_terms(a, n + 1)
    return {
        'name': 'nonnormal_transcritical',
        'state_dim': 1,
        'state_names': ['y'],
        'origin': 'Non-normal transcritical: r ln y + y - 1, fixed point y=1 at r=-1',
        'bifurcation_param': 'r',
        # the flow is y - 1 - ln y >= 0 at r=-1, so the start must sit below the fixed point
        'params': [rate('r', -1.0)] + [rate(a) for a in alphas] + [initial('y0', 0.5, 0)],
        'equations': [equation],
    }


def selkov_separatrix_b(a: float, upper: bool = True) -> float:
    """b on the fixed-point/limit-cycle boundary b^2 = (1 - 2a +/- sqrt(1 - 8a)) / 2"""
    root = math.sqrt(1.0 - 8.0 * a)
    return math.sqrt(0.5 * (1.0 - 2.0 * a + (root if upper else -root)))


def selkov_template(a: float = 0.1, b: Optional[float] = None) -> Dict[str, Any]:
    """Sel'kov glycolysis oscillator with four nuisance coefficients.

    x' = -x + a y + x^2 y + c1 x^2 y + c2 x^3
    y' =  b - a y - x^2 y + c3 x^2 y + c4 y^2
    """
    if b is None:
        b = selkov_separatrix_b(a)
    x_star, y_star = b, b / (a + b * b)
    x_eq = [
        term(-1.0, [1, 0]),
        term(param_coeff('a'), [0, 1]),
        term(1.0, [2, 1]),
        term(param_coeff('c1'), [2, 1]),
        term(param_coeff('c2'), [3, 0]),
    ]
    y_eq = [
        term(param_coeff('b'), [0, 0]),
        term(param_coeff('a', -1.0), [0, 1]),
        term(-1.0, [2, 1]),
        term(param_coeff('c3'), [2, 1]),
        term(param_coeff('c4'), [0, 2]),
    ]
    return {
        'name': 'selkov',
        'state_dim': 2,
        'state_names': ['x', 'y'],
        'origin': "Sel'kov glycolysis (ADP x, F6P y) with nuisance terms c1..c4",
        'bifurcation_param': 'b',
        'params': ([rate('a', a), rate('b', b)] + [rate(f"c{i}") for i in range(1, 5)]
                   + [initial('x0', x_star + 0.1, 0), initial('y0', y_star + 0.1, 1)]),
        'equations': [x_eq, y_eq],
    }


POLYNOMIAL_TEMPLATES = {
    'saddle_node': saddle_node_template,
    'transcritical': transcritical_template,
    'pitchfork_super': lambda order=0: pitchfork_template(order, subcritical=False),
    'pitchfork_sub': lambda order=0: pitchfork_template(order, subcritical=True),
    'hopf_polar': hopf_polar_template,
    'nonnormal_transcritical': nonnormal_transcritical_template,
    'selkov': lambda order=0: selkov_template(),
}
