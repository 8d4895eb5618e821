"""Result files: eigenvalue and participation tables, report and rainbow plot"""

import csv
import json
import logging
import os
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .spectrum import TwigSweep
from .utils import format_number

logger = logging.getLogger(__name__)

EIGENVALUES_FILE = 'eigenvalues.csv'
PARTICIPATION_FILE = 'participation.csv'
REPORT_FILE = 'report.json'
RAINBOW_FILE = 'rainbow.svg'
TRAJECTORY_FILE = 'trajectories.csv'

PALETTE = [
    (214, 39, 40), (31, 119, 180), (44, 160, 44), (255, 127, 14), (148, 103, 189),
    (140, 86, 75), (227, 119, 194), (127, 127, 127), (188, 189, 34), (23, 190, 207),
]

SVG_WIDTH, SVG_HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 160, 40, 50


def local_slopes(t_values: np.ndarray, eigenvalues: np.ndarray) -> np.ndarray:
    """d log(lambda) / d log(t) along one tracked direction"""
    if len(t_values) < 2:
        return np.zeros(len(t_values))
    return np.gradient(np.log10(eigenvalues), np.log10(t_values))


def _tracks(sweep: TwigSweep) -> List[np.ndarray]:
    return [sweep.track_path(d) for d in range(sweep.m)] if sweep.spectra else []


def write_eigenvalues_csv(path: str, sweep: TwigSweep) -> None:
    """Columns t_max, direction_index, lambda, slope; one row per (horizon, tracked direction)"""
    horizons = sweep.horizons
    tracks = _tracks(sweep)
    slopes = [local_slopes(horizons, sweep.track_eigenvalues(d)) for d in range(len(tracks))]
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t_max', 'direction_index', 'lambda', 'slope'])
        for s, spectrum in enumerate(sweep.spectra):
            for d, path_d in enumerate(tracks):
                writer.writerow([format_number(spectrum.t_max), d,
                                 format_number(spectrum.eigenvalues[path_d[s]]), format_number(slopes[d][s])])


def write_participation_csv(path: str, sweep: TwigSweep) -> None:
    """Columns t_max, direction_index, param_name, p"""
    tracks = _tracks(sweep)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t_max', 'direction_index', 'param_name', 'p'])
        for s, spectrum in enumerate(sweep.spectra):
            for d, path_d in enumerate(tracks):
                column = spectrum.participation[:, path_d[s]]
                for name, p in zip(sweep.param_names, column):
                    writer.writerow([format_number(spectrum.t_max), d, name, format_number(p)])


def write_report_json(path: str, payload: Dict[str, Any]) -> None:
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write('\n')


def read_report_json(path: str) -> Dict[str, Any]:
    with open(path, 'r') as f:
        return json.load(f)


def write_trajectories_csv(path: str, times: Sequence[float], states: np.ndarray,
                           state_names: Sequence[str]) -> None:
    """Columns t, then one per state component"""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t'] + list(state_names))
        for t, row in zip(times, np.atleast_2d(states)):
            writer.writerow([format_number(t)] + [format_number(v) for v in row])


def blend_color(weights: np.ndarray) -> Tuple[int, int, int]:
    """Participation-weighted mix of the parameter colours"""
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        return (0, 0, 0)
    rgb = np.zeros(3)
    for i, w in enumerate(weights):
        rgb += w * np.array(PALETTE[i % len(PALETTE)])
    rgb /= total
    return tuple(int(round(c)) for c in rgb)


def render_rainbow_svg(sweep: TwigSweep, title: str = '') -> str:
    """Log-log eigenvalue traces coloured by participation, with a parameter legend"""
    plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_LEFT}" y="{MARGIN_TOP - 15}" font-family="sans-serif" font-size="14">'
        f'{title or sweep.model_name}</text>',
    ]

    if sweep.spectra:
        log_t = np.log10(sweep.horizons)
        log_lam = np.log10(np.array([s.eigenvalues for s in sweep.spectra]))
        t_lo, t_hi = float(log_t.min()), float(log_t.max())
        l_lo, l_hi = float(np.floor(log_lam.min())), float(np.ceil(log_lam.max()))
        if t_hi == t_lo:
            t_hi = t_lo + 1.0
        if l_hi == l_lo:
            l_hi = l_lo + 1.0

        def px(x: float) -> float:
            return MARGIN_LEFT + (x - t_lo) / (t_hi - t_lo) * plot_w

        def py(y: float) -> float:
            return MARGIN_TOP + (l_hi - y) / (l_hi - l_lo) * plot_h

        lines.append(f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
                     f'fill="none" stroke="black"/>')
        for decade in range(int(np.ceil(t_lo)), int(np.floor(t_hi)) + 1):
            x = px(decade)
            lines.append(f'<line x1="{x:.3f}" y1="{MARGIN_TOP + plot_h}" x2="{x:.3f}" '
                         f'y2="{MARGIN_TOP + plot_h + 5}" stroke="black"/>')
            lines.append(f'<text x="{x:.3f}" y="{MARGIN_TOP + plot_h + 20}" font-family="sans-serif" '
                         f'font-size="11" text-anchor="middle">1e{decade}</text>')
        step = max(1, int(np.ceil((l_hi - l_lo) / 10)))
        for decade in range(int(l_lo), int(l_hi) + 1, step):
            y = py(decade)
            lines.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{y:.3f}" x2="{MARGIN_LEFT}" y2="{y:.3f}" stroke="black"/>')
            lines.append(f'<text x="{MARGIN_LEFT - 8}" y="{y + 4:.3f}" font-family="sans-serif" '
                         f'font-size="11" text-anchor="end">1e{decade}</text>')
        lines.append(f'<text x="{MARGIN_LEFT + plot_w / 2:.3f}" y="{SVG_HEIGHT - 10}" font-family="sans-serif" '
                     f'font-size="12" text-anchor="middle">t_max</text>')
        lines.append(f'<text x="15" y="{MARGIN_TOP + plot_h / 2:.3f}" font-family="sans-serif" font-size="12" '
                     f'transform="rotate(-90 15 {MARGIN_TOP + plot_h / 2:.3f})" text-anchor="middle">'
                     f'FIM eigenvalue</text>')

        for d, path in enumerate(_tracks(sweep)):
            lams = sweep.track_eigenvalues(d)
            for s in range(len(path) - 1):
                weights = 0.5 * (sweep.spectra[s].participation[:, path[s]]
                                 + sweep.spectra[s + 1].participation[:, path[s + 1]])
                r, g, b = blend_color(weights)
                lines.append(
                    f'<line x1="{px(log_t[s]):.3f}" y1="{py(np.log10(lams[s])):.3f}" '
                    f'x2="{px(log_t[s + 1]):.3f}" y2="{py(np.log10(lams[s + 1])):.3f}" '
                    f'stroke="rgb({r},{g},{b})" stroke-width="2"/>'
                )

    legend_x = SVG_WIDTH - MARGIN_RIGHT + 20
    for i, name in enumerate(sweep.param_names):
        r, g, b = PALETTE[i % len(PALETTE)]
        y = MARGIN_TOP + 10 + 20 * i
        lines.append(f'<rect x="{legend_x}" y="{y - 10}" width="12" height="12" fill="rgb({r},{g},{b})"/>')
        lines.append(f'<text x="{legend_x + 18}" y="{y}" font-family="sans-serif" font-size="12">{name}</text>')
    lines.append('</svg>')
    return '\n'.join(lines) + '\n'


def write_rainbow_svg(path: str, sweep: TwigSweep, title: str = '') -> None:
    with open(path, 'w') as f:
        f.write(render_rainbow_svg(sweep, title))


def write_sweep_outputs(outputs: str, sweep: TwigSweep, payload: Dict[str, Any]) -> List[str]:
    """Write the four result files into ``outputs``; returns their paths"""
    os.makedirs(outputs, exist_ok=True)
    paths = [os.path.join(outputs, name) for name in (EIGENVALUES_FILE, PARTICIPATION_FILE, REPORT_FILE, RAINBOW_FILE)]
    write_eigenvalues_csv(paths[0], sweep)
    write_participation_csv(paths[1], sweep)
    write_report_json(paths[2], payload)
    write_rainbow_svg(paths[3], sweep)
    for p in paths:
        logger.info(f"Wrote {p}")
    return paths
