"""Admissible test conductivities: Gaussian bumps over a constant background.

Every phantom equals the background exactly on a collar near the boundary,
which is where the reconstruction reads its Dirichlet data.  The cutoff is a
C1 cubic smoothstep in the distance to the boundary: zero within one collar
width, one beyond two collar widths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import ScalarField
from .mesh import Mesh

__all__ = [
    "Bump", "PhantomSpec", "make_phantom", "boundary_distance", "collar_taper",
    "single_bump_spec", "three_bump_spec", "random_bump_spec",
]

#: iterates and phantoms below this conductivity are treated as inadmissible
LAMBDA_FLOOR = 1e-3


@dataclass(frozen=True)
class Bump:
    center: tuple[float, float]
    amplitude: float
    width: float


@dataclass(frozen=True)
class PhantomSpec:
    background: float = 0.2
    bumps: tuple[Bump, ...] = ()
    collar_width: float = 0.15
    taper: str = "smoothstep"


def boundary_distance(mesh: Mesh, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Distance to the rectangle boundary."""
    return np.minimum(
        np.minimum(x - mesh.x_min, mesh.x_max - x),
        np.minimum(y - mesh.y_min, mesh.y_max - y),
    )


def collar_taper(distance: np.ndarray, collar_width: float) -> np.ndarray:
    """Cubic smoothstep: exactly 0 within the collar, 1 beyond twice its width."""
    t = np.clip(distance / collar_width - 1.0, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def make_phantom(spec: PhantomSpec, mesh: Mesh) -> ScalarField:
    """Evaluate the phantom at the mesh nodes.

    Raises ``ValueError`` for invalid parameters or if the field falls below
    the admissibility floor anywhere.
    """
    if spec.collar_width <= 0.0:
        raise ValueError(f"collar width must be positive, got {spec.collar_width}")
    if spec.background <= 0.0:
        raise ValueError(f"background must be positive, got {spec.background}")
    if spec.taper != "smoothstep":
        raise ValueError(f"unknown taper profile {spec.taper!r}")
    for b in spec.bumps:
        if b.width <= 0.0:
            raise ValueError(f"bump width must be positive, got {b.width}")
        if b.amplitude <= -spec.background:
            raise ValueError(
                f"bump amplitude {b.amplitude} would cancel the background"
            )
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    taper = collar_taper(boundary_distance(mesh, x, y), spec.collar_width)
    values = np.full(mesh.n_nodes, float(spec.background))
    for b in spec.bumps:
        blob = b.amplitude * np.exp(
            -((x - b.center[0]) ** 2 + (y - b.center[1]) ** 2) / (2.0 * b.width**2)
        )
        values += blob * taper
    if np.any(values < LAMBDA_FLOOR):
        bad = int(np.argmin(values))
        raise ValueError(
            f"phantom dips to {values[bad]:.3e} at node {bad}, "
            f"below the admissibility floor {LAMBDA_FLOOR}"
        )
    return ScalarField(mesh, values)


def single_bump_spec(amplitude_scale: float = 1.0) -> PhantomSpec:
    """Mild off-center bump; the standard smooth test model."""
    return PhantomSpec(
        background=0.2,
        bumps=(Bump((0.4, 0.6), 0.1 * amplitude_scale, 0.12),),
        collar_width=0.15,
    )


def three_bump_spec(amplitude_scale: float = 1.0) -> PhantomSpec:
    """Steeper asymmetric three-bump model with a larger gradient."""
    return PhantomSpec(
        background=0.2,
        bumps=(
            Bump((0.35, 0.62), 0.16 * amplitude_scale, 0.085),
            Bump((0.65, 0.62), 0.16 * amplitude_scale, 0.085),
            Bump((0.5, 0.38), 0.13 * amplitude_scale, 0.09),
        ),
        collar_width=0.15,
    )


def random_bump_spec(rng: np.random.RandomState, n_bumps: int = 2) -> PhantomSpec:
    """Random admissible bump collection, for property and stability tests."""
    bumps = []
    for _ in range(n_bumps):
        center = (0.3 + 0.4 * rng.rand(), 0.3 + 0.4 * rng.rand())
        amplitude = 0.12 * (2.0 * rng.rand() - 1.0)
        width = 0.08 + 0.08 * rng.rand()
        bumps.append(Bump(center, amplitude, width))
    return PhantomSpec(background=0.2, bumps=tuple(bumps), collar_width=0.15)
