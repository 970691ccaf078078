"""Polar quadrature about an isolated singular point.

A point is written z = c + rho * w with w on the unit sphere, and
w_j = r_j exp(i theta_j) where (r_1, ..., r_n) lies on the positive orthant
of the real sphere S^{n-1}. Then dV = rho^{2n-1} (prod r_j) dS(r) drho dtheta.
Angles use the trapezoid rule (exact for trigonometric polynomials of low
order), orthant angles and radii use Gauss-Legendre. Radial segments are cut
at the level sets of the gauge, so an eps-shell of any width gets the same
number of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np


class QuadratureError(RuntimeError):
    pass


CHUNK = 1 << 16


def _gauss(m: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(m)
    return a + (b - a) * (x + 1) / 2, w * (b - a) / 2


def _orthant(n: int, m: int):
    """Nodes r on the positive orthant of S^{n-1} and weights prod(r_j) dS(r)."""
    if n == 1:
        return np.ones((1, 1)), np.ones(1)
    eta, we = _gauss(m, 0.0, np.pi / 2)
    pts, wts = [], []
    for idx in product(range(m), repeat=n - 1):
        r = np.empty(n)
        s = 1.0
        w = 1.0
        for k, i in enumerate(idx):
            r[k] = s * np.cos(eta[i])
            w *= we[i] * np.sin(eta[i]) ** (n - 2 - k)
            s *= np.sin(eta[i])
        r[n - 1] = s
        pts.append(r)
        wts.append(w * np.prod(r))
    return np.array(pts), np.array(wts)


@dataclass(frozen=True)
class AngularRule:
    directions: np.ndarray  # (R, n) complex unit vectors
    weights: np.ndarray     # (R,)


def angular_rule(nvars: int, nodes: int) -> AngularRule:
    r, wr = _orthant(nvars, nodes)
    theta = 2 * np.pi * np.arange(nodes) / nodes
    wt = 2 * np.pi / nodes
    dirs, wts = [], []
    for ri, wi in zip(r, wr):
        for ths in product(range(nodes), repeat=nvars):
            dirs.append(ri * np.exp(1j * theta[list(ths)]))
            wts.append(wi * wt ** nvars)
    return AngularRule(np.array(dirs), np.array(wts))


def level_crossings(func, center, directions, levels, rho_max, iterations=60, check=True):
    """Radii where a radially nondecreasing function first reaches each level, per ray.

    ``func(points) -> (N,)`` real. Returns {level: (R,) radii clipped to [0, rho_max]}.
    """
    center = np.asarray(center, dtype=complex)
    R = len(directions)
    lo_r = rho_max * 1e-9
    if check:
        probe = np.geomspace(lo_r, rho_max, 24)
        vals = np.stack([func(center + rho * directions) for rho in probe], axis=1)
        drops = np.diff(vals, axis=1) < -1e-9 * np.maximum(np.abs(vals[:, 1:]), 1e-300)
        if np.any(drops):
            raise QuadratureError("gauge is not radially nondecreasing about the quadrature center")
    out = {}
    g_hi = func(center + rho_max * directions)
    for level in levels:
        lo = np.full(R, np.log(lo_r))
        hi = np.full(R, np.log(rho_max))
        for _ in range(iterations):
            mid = (lo + hi) / 2
            v = func(center + np.exp(mid)[:, None] * directions)
            below = v < level
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        root = np.exp((lo + hi) / 2)
        root = np.where(g_hi < level, rho_max, root)
        out[level] = np.clip(root, 0.0, rho_max)
    return out


@dataclass
class Segment:
    name: str
    a: np.ndarray  # (R,)
    b: np.ndarray  # (R,)
    log: bool = False


def integrate(integrand, center, rule: AngularRule, segments, nodes: int, nvars: int,
              chunk: int = CHUNK) -> complex:
    """Sum of integrand * dV over the radial segments of every ray.

    ``integrand(points, segment_name) -> (N,)`` complex. Chunks are summed in a
    fixed order so results are reproducible.
    """
    center = np.asarray(center, dtype=complex)
    x, wx = np.polynomial.legendre.leggauss(nodes)
    total = 0j
    for seg in segments:
        a = np.maximum(seg.a, 0.0)
        b = np.maximum(seg.b, a)
        keep = b > a * (1 + 1e-14)
        if seg.log:
            keep &= a > 0
        if not np.any(keep):
            continue
        a, b = a[keep], b[keep]
        dirs, wdir = rule.directions[keep], rule.weights[keep]
        if seg.log:
            la, lb = np.log(a), np.log(b)
            rho = np.exp(la[:, None] + (lb - la)[:, None] * (x + 1) / 2)
            wrho = rho * ((lb - la) / 2)[:, None] * wx
        else:
            rho = a[:, None] + (b - a)[:, None] * (x + 1) / 2
            wrho = ((b - a) / 2)[:, None] * wx
        w = wrho * rho ** (2 * nvars - 1) * wdir[:, None]
        pts = center + rho[:, :, None] * dirs[:, None, :]
        pts = pts.reshape(-1, nvars)
        w = w.reshape(-1)
        for s in range(0, len(w), chunk):
            vals = integrand(pts[s:s + chunk], seg.name)
            total += complex(np.dot(vals, w[s:s + chunk]))
    return total
