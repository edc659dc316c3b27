"""CSV writers/readers and a dependency-free SVG heat map."""

from __future__ import annotations

import html
from pathlib import Path

import numpy as np


def write_map_csv(smap, path, scale=1.0):
    """``lambda_p_nm,lambda_s_nm,N_density`` in row-major (pump, photon) order."""
    with Path(path).open("w") as fh:
        fh.write("lambda_p_nm,lambda_s_nm,N_density\n")
        for i, lp in enumerate(smap.lambda_p_axis):
            for j, lam in enumerate(smap.lambda_axis):
                fh.write(f"{lp:.6f},{lam:.6f},{smap.values[i, j] * scale:.10e}\n")


def write_solutions_csv(rows, path):
    """``rows`` are ``(lambda_p, PairPoint)`` tuples."""
    with Path(path).open("w") as fh:
        fh.write("lambda_p_nm,lambda_s_nm,lambda_i_nm,kind\n")
        for lp, pt in rows:
            fh.write(f"{lp:.6f},{pt.lambda_s:.9f},{pt.lambda_i:.9f},{pt.kind}\n")


def write_ridge_csv(lambda_p_axis, ridge, path):
    """Branch ridge per pump wavelength; rows without a ridge are omitted."""
    with Path(path).open("w") as fh:
        fh.write("lambda_p_nm,lambda_s_nm\n")
        for lp, lam in zip(lambda_p_axis, ridge):
            if not np.isnan(lam):
                fh.write(f"{lp:.6f},{lam:.6f}\n")


def write_fringe_csv(delta_x_nm, counts, path):
    with Path(path).open("w") as fh:
        fh.write("delta_x_nm,counts\n")
        for x, c in zip(delta_x_nm, counts):
            fh.write(f"{float(x)!r},{float(c)!r}\n")


def read_fringe_csv(path):
    x, y = [], []
    with Path(path).open() as fh:
        header = None
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in s.split(",")]
                if header[:2] != ["delta_x_nm", "counts"] and header[:2] != ["delta_x_nm", "coincidences"]:
                    raise ValueError(f"line {lineno}: expected header 'delta_x_nm,counts'")
                continue
            parts = s.split(",")
            try:
                x.append(float(parts[0]))
                y.append(float(parts[1]))
            except (ValueError, IndexError):
                raise ValueError(f"line {lineno}: malformed row {s!r}") from None
    if header is None:
        raise ValueError(f"{path}: empty fringe file")
    return np.array(x), np.array(y)


def _color(v):
    # perceptually ordered dark-blue -> yellow ramp
    stops = [(0.0, (13, 8, 135)), (0.25, (126, 3, 168)), (0.5, (204, 71, 120)),
             (0.75, (248, 149, 64)), (1.0, (240, 249, 33))]
    v = min(max(v, 0.0), 1.0)
    for (x0, c0), (x1, c1) in zip(stops, stops[1:]):
        if v <= x1:
            t = (v - x0) / (x1 - x0)
            return "#%02x%02x%02x" % tuple(int(round(a + t * (b - a))) for a, b in zip(c0, c1))
    return "#f0f921"


def map_svg(smap, path, title="Pair spectrum", overlay=None, log=True):
    """Heat map with photon wavelength on x and pump wavelength on y.

    ``overlay`` is an optional list of ``(lambda_p, lambda)`` points drawn as dots.
    """
    vals = np.asarray(smap.values, dtype=float)
    if log:
        floor = max(vals.max() * 1e-4, np.finfo(float).tiny)
        vals = np.log10(np.maximum(vals, floor))
    lo, hi = vals.min(), vals.max()
    norm = (vals - lo) / (hi - lo) if hi > lo else np.zeros_like(vals)
    n_p, n_l = vals.shape
    cell_w, cell_h = max(1.0, 600.0 / n_l), max(1.0, 400.0 / n_p)
    W, H = n_l * cell_w, n_p * cell_h
    mx, my = 70, 40
    lam0, lam1 = smap.lambda_axis[0], smap.lambda_axis[-1]
    lp0, lp1 = smap.lambda_p_axis[0], smap.lambda_p_axis[-1]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W + mx + 20:.0f}" '
           f'height="{H + my + 50:.0f}" font-family="sans-serif" font-size="12">',
           f'<text x="{mx}" y="20">{html.escape(title)}</text>',
           f'<g transform="translate({mx},{my})" shape-rendering="crispEdges">']
    for i in range(n_p):
        y = H - (i + 1) * cell_h
        for j in range(n_l):
            out.append(f'<rect x="{j * cell_w:.2f}" y="{y:.2f}" width="{cell_w:.2f}" '
                       f'height="{cell_h:.2f}" fill="{_color(norm[i, j])}"/>')
    if overlay:
        for lp, lam in overlay:
            if lam0 <= lam <= lam1 and lp0 <= lp <= lp1:
                x = (lam - lam0) / (lam1 - lam0) * W
                y = H - (lp - lp0) / (lp1 - lp0 or 1.0) * H
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.5" fill="white"/>')
    out.append(f'<rect x="0" y="0" width="{W:.2f}" height="{H:.2f}" fill="none" stroke="black"/>')
    out.append("</g>")
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        x = mx + frac * W
        out.append(f'<text x="{x:.1f}" y="{my + H + 16:.1f}" text-anchor="middle">'
                   f'{lam0 + frac * (lam1 - lam0):.0f}</text>')
        y = my + H - frac * H
        out.append(f'<text x="{mx - 6}" y="{y + 4:.1f}" text-anchor="end">'
                   f'{lp0 + frac * (lp1 - lp0):.1f}</text>')
    out.append(f'<text x="{mx + W / 2:.1f}" y="{my + H + 36:.1f}" text-anchor="middle">'
               'photon wavelength (nm)</text>')
    out.append(f'<text x="14" y="{my + H / 2:.1f}" transform="rotate(-90 14 {my + H / 2:.1f})" '
               'text-anchor="middle">pump wavelength (nm)</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
