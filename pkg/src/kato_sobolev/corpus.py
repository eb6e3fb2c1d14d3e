"""Seeded random test functions.

Generators return plain callables of the coordinates so that the same function
can be sampled on a grid and on its refinement.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, SampledField, sample, samples_per_unit
from .partition import DecompositionFamily, bump_profile

GENERATOR = "numpy.random.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gaussian_packet(rng: np.random.Generator, n: int, spread: float = 1.0, width=(0.6, 1.4), modes: int = 3):
    """A Gaussian envelope times a random trigonometric polynomial."""
    center = rng.uniform(-spread, spread, size=n)
    w = rng.uniform(*width)
    freqs = rng.normal(scale=1.5, size=(modes, n))
    amps = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    phases = rng.uniform(0, 2 * np.pi, size=modes)

    def f(*x):
        r2 = sum((xa - ca) ** 2 for xa, ca in zip(x, center))
        wave = sum(a * np.cos(sum(k[i] * x[i] for i in range(n)) + ph) for a, k, ph in zip(amps, freqs, phases))
        return np.exp(-r2 / (2 * w * w)) * (1.0 + 0.5 * wave)

    return f


def packet_corpus(rng: np.random.Generator, n: int, box: float, count: int, modes: int = 3) -> list:
    """Packets whose Gaussian tails are below ``exp(-32)`` at the box edge.

    Centres lie within ``box/4`` of the origin and widths within ``[box/64, box/32]``,
    so the periodic extension has no visible seam at any Sobolev order.
    """
    return [gaussian_packet(rng, n, spread=box / 4, width=(box / 64, box / 32), modes=modes) for _ in range(count)]


def bandlimited(rng: np.random.Generator, grid: GridSpec, kmax: int = 6):
    """Random real trigonometric polynomial with wavenumbers up to ``kmax`` per axis."""
    n = grid.n
    ks = np.stack(np.meshgrid(*[np.arange(-kmax, kmax + 1)] * n, indexing="ij"), -1).reshape(-1, n)
    coef = (rng.normal(size=len(ks)) + 1j * rng.normal(size=len(ks))) / (1 + np.sum(ks**2, axis=1))
    box = np.asarray(grid.box)

    def f(*x):
        total = 0.0
        for k, c in zip(ks, coef):
            total = total + c * np.exp(1j * sum(2 * np.pi * k[i] / box[i] * x[i] for i in range(n)))
        return total.real

    return f


def cell_member(rng: np.random.Generator, n: int, support=((0.25, 0.75),)):
    """Smooth function vanishing identically outside the box ``support``."""
    support = tuple(support) * (n if len(support) == 1 else 1)
    profiles = []
    for lo, hi in support:
        a = rng.uniform(0.02, 0.08)
        b = rng.uniform(0.02, 0.08)
        profiles.append(bump_profile(lo, lo + 0.1 + a, hi - 0.1 - b, hi))
    freqs = rng.normal(scale=4.0, size=(2, n))
    amps = rng.normal(size=2) + 1j * rng.normal(size=2)

    def f(*x):
        env = np.ones(np.broadcast_shapes(*(np.shape(xa) for xa in x)))
        for p, xa in zip(profiles, x):
            env = env * p(xa)
        wave = sum(a * np.exp(1j * sum(k[i] * x[i] for i in range(n))) for a, k in zip(amps, freqs))
        return env * (1.0 + 0.4 * wave)

    return f


def random_family_recipe(rng: np.random.Generator, grid: GridSpec, members: int = 5, support=((0.25, 0.75),)):
    """``{gamma: callable}`` with distinct cells ``gamma`` inside the torus."""
    counts = [int(round(L)) for L in grid.box]
    cells = np.stack(np.meshgrid(*[np.arange(c) for c in counts], indexing="ij"), -1).reshape(-1, grid.n)
    chosen = rng.choice(len(cells), size=min(members, len(cells)), replace=False)
    # centre the cells around the origin so the family sits in the middle of the torus
    offset = np.array(counts) // 2
    return {tuple(int(v) for v in cells[i] - offset): cell_member(rng, grid.n, support) for i in sorted(chosen)}


def sample_family(recipe: dict, grid: GridSpec, support=((0.25, 0.75),)) -> DecompositionFamily:
    samples_per_unit(grid)
    support = tuple(support) * (grid.n if len(support) == 1 else 1)
    members = {gamma: sample(f, grid) for gamma, f in recipe.items()}
    return DecompositionFamily(grid, support, members)


def sample_all(funcs, grid: GridSpec) -> list[SampledField]:
    return [sample(f, grid) for f in funcs]
