"""Initial-datum constructors shared by the CLI and the verification suites."""

from __future__ import annotations

import numpy as np

from .core_math import Params, kappa_a, psi_T
from .physical_solver import GridField
from .similarity_solver import SimField


def profile_shape(y: np.ndarray, s: float, params: Params) -> np.ndarray:
    """Self-similar near-profile kappa_a (1 + (p-1) y^2 / (4 p s))^(-1/(p-1))."""
    p = params.p
    return kappa_a(params) * (1.0 + (p - 1.0) * y * y / (4.0 * p * s)) ** (
        -1.0 / (p - 1.0)
    )


def random_smooth_shape(
    y: np.ndarray, params: Params, seed: int, amplitude: float = 0.25
) -> np.ndarray:
    """kappa_a times (1 + localized low-frequency noise), max perturbation =
    amplitude.  Deterministic in the seed."""
    rng = np.random.default_rng(seed)
    R = float(np.max(np.abs(y)))
    bump = np.zeros_like(y)
    for k in range(1, 4):
        c, d = rng.standard_normal(2) / k
        bump += c * np.cos(k * np.pi * y / R) + d * np.sin(k * np.pi * y / R)
    bump *= np.exp(-(y * y) / 8.0)
    peak = np.max(np.abs(bump))
    if peak > 0.0:
        bump *= amplitude / peak
    return kappa_a(params) * (1.0 + bump)


def sim_field(values: np.ndarray, nodes: np.ndarray, s: float, params: Params,
              geometry: str = "line") -> SimField:
    return SimField(geometry=geometry, nodes=nodes, values=values, s=s, params=params)


def line_grid(extent: float, resolution: int) -> np.ndarray:
    """Uniform symmetric grid with a node at the origin."""
    n = resolution if resolution % 2 == 1 else resolution + 1
    return np.linspace(-extent, extent, n)


def physical_constant(nodes: np.ndarray, c: float, params: Params,
                      geometry: str = "line") -> GridField:
    return GridField(
        geometry=geometry,
        dimension=params.N,
        nodes=nodes,
        values=np.full(nodes.shape, float(c)),
        time=0.0,
    )


def physical_gaussian(
    nodes: np.ndarray,
    amplitude: float,
    width: float,
    params: Params,
    floor: float = 0.0,
    geometry: str = "line",
) -> GridField:
    """floor + amplitude exp(-(x/width)^2); floor > 0 gives constant-dominating data."""
    values = floor + amplitude * np.exp(-((nodes / width) ** 2))
    return GridField(
        geometry=geometry,
        dimension=params.N,
        nodes=nodes,
        values=values,
        time=0.0,
    )


def physical_from_profile(
    nodes: np.ndarray, x0: float, T: float, params: Params, geometry: str = "line"
) -> GridField:
    """Physical-frame snapshot at t = 0 of the near-profile similarity datum."""
    s0 = -np.log(T)
    y = (nodes - x0) / np.sqrt(T)
    values = psi_T(0.0, T, params) * profile_shape(y, s0, params)
    return GridField(
        geometry=geometry, dimension=params.N, nodes=nodes, values=values, time=0.0
    )
