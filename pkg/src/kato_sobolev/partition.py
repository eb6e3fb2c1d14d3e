"""Smooth partitions of unity, decomposition families, modulated periodization and retracts."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridError, PreconditionError
from .grid import (
    FREQ,
    SPACE,
    GridSpec,
    SampledField,
    dft_forward,
    field_read,
    field_write,
    require_domain,
    samples_per_unit,
    translate,
    zeros,
)
from .report import Case
from .sobolev import h_norm, lattice_index

SUPPORT_TOL = 1e-13


def _smoothstep(t):
    """0 for t <= 0, 1 for t >= 1, C-infinity in between (exp(-1/t) construction)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class BumpProfile:
    """Smooth 1-D profile: 0 outside (a, d), 1 on [b, c]."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a < self.b <= self.c < self.d):
            raise PreconditionError(f"ordering violation: need a<b<=c<d, got {self}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _smoothstep((x - self.a) / (self.b - self.a)) * _smoothstep(
            (self.d - x) / (self.d - self.c)
        )

    @property
    def min_transition(self) -> float:
        return min(self.b - self.a, self.d - self.c)


def bump_profile(a, b, c, d) -> BumpProfile:
    return BumpProfile(float(a), float(b), float(c), float(d))


@dataclass(frozen=True, eq=False)
class Window:
    """A compactly supported bump: sampled values plus its support box ``[(lo, hi), ...]``."""

    field: SampledField
    support: tuple[tuple[float, float], ...]
    name: str = "window"

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def tensor_window(grid: GridSpec, profile: BumpProfile, name="bump", center=None) -> Window:
    """Product of one profile per axis, optionally centred at ``center``."""
    center = np.zeros(grid.n) if center is None else np.broadcast_to(center, (grid.n,))
    vals = np.ones(grid.shape)
    for a in range(grid.n):
        vals = vals * profile(_wrap(grid.coords[a] - center[a], grid.box[a]))
    support = tuple((profile.a + c, profile.d + c) for c in center)
    return Window(SampledField(grid, SPACE, vals), support, name)


def _wrap(x, L):
    """Map coordinates into [-L/2, L/2)."""
    return (x + L / 2) % L - L / 2


def _check_resolution(grid: GridSpec, width: float, samples_required: int = 8):
    for L, N in zip(grid.box, grid.samples):
        if width / (L / N) < samples_required:
            raise GridError(
                f"grid too coarse: {width / (L / N):.2f} samples across a transition of width {width}"
            )


@dataclass(frozen=True, eq=False)
class PartitionFamily:
    points: tuple[tuple[float, ...], ...]
    h_tilde: Window
    h_i: tuple[Window, ...]
    chi_i: tuple[SampledField, ...]
    h: Window
    H_tilde: SampledField

    @property
    def grid(self) -> GridSpec:
        return self.h.grid


H_TILDE_PROFILE = BumpProfile(0.25, 1 / 3, 2 / 3, 0.75)


def build_partition(n: int, grid: GridSpec) -> PartitionFamily:
    """Partition ``h = sum_i h_i`` with ``sum_gamma tau_gamma h = 1`` on a unit-lattice torus."""
    if n != grid.n:
        raise GridError(f"dimension mismatch: n={n} but grid has {grid.n} axes")
    samples_per_unit(grid)
    if min(grid.box) < 2:
        raise GridError("box lengths must be at least 2 to hold a window copy")
    _check_resolution(grid, H_TILDE_PROFILE.min_transition)
    p = H_TILDE_PROFILE
    points = tuple(itertools.product((-1 / 3, 0.0, 1 / 3), repeat=n))

    def periodic_bump(x0):
        vals = np.ones(grid.shape)
        for a in range(n):
            vals = vals * p(np.mod(grid.coords[a] - x0[a], 1.0))
        return vals

    def local_bump(x0):
        vals = np.ones(grid.shape)
        for a in range(n):
            vals = vals * p(_wrap(grid.coords[a] - x0[a], grid.box[a]))
        return vals

    H = sum(periodic_bump(x0) for x0 in points)
    h_i, chi_i = [], []
    for x0 in points:
        support = tuple((c + p.a, c + p.d) for c in x0)
        h_i.append(Window(SampledField(grid, SPACE, local_bump(x0) / H), support, "h_i"))
        chi_i.append(SampledField(grid, SPACE, periodic_bump(x0) / H))
    h_vals = sum(w.values for w in h_i)
    lo = min(c for x0 in points for c in x0) + p.a
    hi = max(c for x0 in points for c in x0) + p.d
    h = Window(SampledField(grid, SPACE, h_vals), ((lo, hi),) * n, "partition")
    h_tilde = Window(SampledField(grid, SPACE, local_bump((0.0,) * n)), ((p.a, p.d),) * n, "h_tilde")
    return PartitionFamily(points, h_tilde, tuple(h_i), tuple(chi_i), h, SampledField(grid, SPACE, H))


def unit_shifts(grid: GridSpec) -> list[tuple[int, ...]]:
    """All integer translations of the torus, as per-axis sample offsets."""
    q = samples_per_unit(grid)
    counts = [int(round(L)) for L in grid.box]
    return [tuple(g * qa for g, qa in zip(gamma, q)) for gamma in itertools.product(*map(range, counts))]


def lattice_sum(u: SampledField) -> SampledField:
    """``sum_{gamma in Z^n} tau_gamma u`` over the torus."""
    total = np.zeros(u.grid.shape, dtype=np.complex128)
    for shift in unit_shifts(u.grid):
        total = total + translate(u, shift).values
    return SampledField(u.grid, SPACE, total)


def save_partition(family: PartitionFamily, directory) -> None:
    """Write a partition as KSF1 files plus ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = {"h": "h.ksf", "h_tilde": "h_tilde.ksf", "H_tilde": "H_tilde.ksf", "h_i": [], "chi_i": []}
    field_write(family.h.field, d / "h.ksf")
    field_write(family.h_tilde.field, d / "h_tilde.ksf")
    field_write(family.H_tilde, d / "H_tilde.ksf")
    for i, (w, chi) in enumerate(zip(family.h_i, family.chi_i)):
        field_write(w.field, d / f"h_{i}.ksf")
        field_write(chi, d / f"chi_{i}.ksf")
        entries["h_i"].append({"file": f"h_{i}.ksf", "support": w.support})
        entries["chi_i"].append(f"chi_{i}.ksf")
    manifest = {
        "points": family.points,
        "files": entries,
        "h_support": family.h.support,
        "h_tilde_support": family.h_tilde.support,
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_partition(directory) -> PartitionFamily:
    d = Path(directory)
    m = json.loads((d / "manifest.json").read_text())
    files = m["files"]
    tup = lambda s: tuple(tuple(x) for x in s)
    h_i = tuple(Window(field_read(d / e["file"]), tup(e["support"]), "h_i") for e in files["h_i"])
    chi_i = tuple(field_read(d / f) for f in files["chi_i"])
    return PartitionFamily(
        points=tup(m["points"]),
        h_tilde=Window(field_read(d / files["h_tilde"]), tup(m["h_tilde_support"]), "h_tilde"),
        h_i=h_i,
        chi_i=chi_i,
        h=Window(field_read(d / files["h"]), tup(m["h_support"]), "partition"),
        H_tilde=field_read(d / files["H_tilde"]),
    )


# --- decomposition families ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class DecompositionFamily:
    """Members ``u_gamma`` supported in the box ``K``; the field is ``sum tau_gamma u_gamma``."""

    grid: GridSpec
    support: tuple[tuple[float, float], ...]
    members: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.support) != self.grid.n:
            raise GridError("dimension mismatch: support box vs grid")
        for lo, hi in self.support:
            if not hi - lo < 1:
                raise PreconditionError("support box must have side < 1 so (K-K) meets Z^n only at 0")
        samples_per_unit(self.grid)
        mask = support_mask(self.grid, self.support)
        for gamma, u in self.members.items():
            if u.grid != self.grid:
                raise GridError("grid mismatch")
            if len(gamma) != self.grid.n:
                raise GridError("dimension mismatch: gamma vs grid")
            if np.any(np.abs(u.values[~mask]) > SUPPORT_TOL):
                raise PreconditionError(f"support violation for member {gamma}")


def support_mask(grid: GridSpec, box) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    for a, (lo, hi) in enumerate(box):
        mask = mask & (grid.coords[a] >= lo) & (grid.coords[a] <= hi)
    return mask


def gamma_shift(grid: GridSpec, gamma) -> tuple[int, ...]:
    q = samples_per_unit(grid)
    return tuple(int(g) * qa for g, qa in zip(gamma, q))


def assemble(family: DecompositionFamily, theta=None) -> SampledField:
    """``sum_gamma exp(i <gamma, theta>) tau_gamma u_gamma`` (``theta=None`` means 0)."""
    total = np.zeros(family.grid.shape, dtype=np.complex128)
    for gamma, u in sorted(family.members.items()):
        phase = 1.0 if theta is None else np.exp(1j * np.dot(gamma, theta))
        total = total + phase * translate(u, gamma_shift(family.grid, gamma)).values
    return SampledField(family.grid, SPACE, total)


def decomposition_ratio(family: DecompositionFamily, s) -> float:
    """``(sum_gamma ||u_gamma||_{H^s}^2)^{1/2} / ||u||_{H^s}``."""
    parts = np.sqrt(sum(h_norm(u, s) ** 2 for u in family.members.values()))
    return float(parts / h_norm(assemble(family), s))


def _band(ratios) -> dict:
    ratios = np.asarray(ratios, dtype=float)
    lo, hi = float(ratios.min()), float(ratios.max())
    return {"min": lo, "max": hi, "width": hi / lo, "c_obs": max(hi, 1 / lo)}


def band_stability_case(name, ratios, variants: dict, tol: float, extra=None) -> Case:
    """Pass iff every ratio is finite and positive and each variant's band width is within ``tol``."""
    band = _band(ratios)
    drifts = {}
    for key, other in variants.items():
        ob = _band(other)
        drifts[key] = abs(ob["width"] - band["width"]) / band["width"]
        band[f"{key}_width"] = ob["width"]
    ok = bool(np.all(np.isfinite(ratios)) and np.all(np.asarray(ratios) > 0))
    worst = max(drifts.values(), default=0.0)
    ok = ok and worst <= tol
    details = dict(band, drift=drifts, corpus=len(ratios))
    if extra:
        details.update(extra)
    return Case(name=name, status="pass" if ok else "fail", measured=worst, bound=tol, details=details)


def decomposition_equivalence_check(families, s, variants=None, tol=0.10, name=None) -> Case:
    """Band of decomposition ratios over a corpus of families.

    ``variants`` maps a label (for example ``"refined"`` or ``"reseeded"``) to another
    corpus whose band width must agree within ``tol``.
    """
    ratios = [decomposition_ratio(f, s) for f in families]
    var = {k: [decomposition_ratio(f, s) for f in v] for k, v in (variants or {}).items()}
    return band_stability_case(name or f"decomposition s={s}", ratios, var, tol)


# --- modulated periodization ---------------------------------------------------


def periodize_modulated(phi, theta) -> SampledField:
    """``sum_gamma exp(i <gamma, theta>) tau_gamma phi`` over the torus copies of Z^n."""
    u = phi.field if isinstance(phi, Window) else phi
    require_domain(u, SPACE)
    g = u.grid
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (g.n,))
    lattice_index(g, theta)
    total = np.zeros(g.shape, dtype=np.complex128)
    for gamma in itertools.product(*(range(int(round(L))) for L in g.box)):
        total = total + np.exp(1j * np.dot(gamma, theta)) * translate(u, gamma_shift(g, gamma)).values
    return SampledField(g, SPACE, total)


def coset_mask(grid: GridSpec, theta) -> np.ndarray:
    """Frequency bins congruent to ``theta`` modulo the lattice 2 pi Z^n."""
    k = lattice_index(grid, theta)
    mask = np.ones(grid.shape, dtype=bool)
    for a in range(grid.n):
        L = int(round(grid.box[a]))
        m = np.round(grid.freqs[a] * grid.box[a] / (2 * np.pi)).astype(int)
        mask = mask & ((m - k[a]) % L == 0)
    return mask


def periodization_spectrum_check(phi, theta, name=None) -> Case:
    """Coset support and bin masses ``(2 pi)^n phi_hat(2 pi gamma + theta)`` of a modulated periodization."""
    u = phi.field if isinstance(phi, Window) else phi
    g = u.grid
    spec = dft_forward(periodize_modulated(u, theta)).values
    mass = spec * g.freq_cell_volume
    expected = (2 * np.pi) ** g.n * dft_forward(u).values
    mask = coset_mask(g, theta)
    peak = np.max(np.abs(spec))
    off = float(np.max(np.abs(spec[~mask]), initial=0.0) / peak) if peak > 0 else 0.0
    scale = np.max(np.abs(expected[mask]))
    on = float(np.max(np.abs(mass[mask] - expected[mask])) / scale) if scale > 0 else 0.0
    ok = off <= 1e-11 and on <= 1e-9
    return Case(
        name=name or f"poisson theta={list(np.round(np.broadcast_to(theta, (g.n,)), 12))}",
        status="pass" if ok else "fail",
        measured=off,
        bound=1e-11,
        details={"coset_value_error": on, "coset_bins": int(mask.sum())},
    )


def theta_lattice(grid: GridSpec) -> list[np.ndarray]:
    """The finite set of phases ``2 pi k / L`` (mod 2 pi) on the frequency lattice."""
    ranges = [2 * np.pi * np.arange(int(round(L))) / L for L in grid.box]
    return [np.array(t) for t in itertools.product(*ranges)]


def theta_plancherel_error(family: DecompositionFamily) -> float:
    """Max relative gap between the theta-average of ``|u_theta_hat|^2`` and ``sum |u_gamma_hat|^2``."""
    g = family.grid
    thetas = theta_lattice(g)
    avg = sum(np.abs(dft_forward(assemble(family, th)).values) ** 2 for th in thetas) / len(thetas)
    direct = sum(np.abs(dft_forward(u).values) ** 2 for u in family.members.values())
    scale = np.max(direct)
    return float(np.max(np.abs(avg - direct)) / scale) if scale > 0 else 0.0


# --- retract ---------------------------------------------------------------------


def retract_window(family: PartitionFamily) -> Window:
    """A window equal to 1 on a neighbourhood of the support of the partition ``h``."""
    (lo, hi) = family.h.support[0]
    mid, half, pad = (lo + hi) / 2, (hi - lo) / 2, 1 / 12
    prof = bump_profile(-half - 2 * pad, -half - pad / 2, half + pad / 2, half + 2 * pad)
    # Centred on the cell so the window fits inside a torus of side 2.
    return tensor_window(family.grid, prof, name="retract", center=np.full(family.grid.n, mid))


def _cover_check(chi_z: Window, chi: Window):
    total = lattice_sum(chi_z.field).values
    if np.max(np.abs(total - 1)) > 1e-12:
        raise PreconditionError("cover condition violated: translates of chi_Z do not sum to 1")
    if chi is not None:
        near = np.abs(chi_z.values) > 0
        if np.max(np.abs(chi.values[near] - 1), initial=0.0) > 1e-12:
            raise PreconditionError("cover condition violated: chi is not 1 on the support of chi_Z")


def retract_split(u: SampledField, chi_z: Window) -> dict:
    """``S u = ((tau_k chi_Z) u)_k``; identically zero parts are dropped."""
    require_domain(u, SPACE)
    _cover_check(chi_z, None)
    g = u.grid
    parts = {}
    for gamma in itertools.product(*(range(int(round(L))) for L in g.box)):
        piece = translate(chi_z.field, gamma_shift(g, gamma)).values * u.values
        if np.any(piece != 0):
            parts[gamma] = SampledField(g, SPACE, piece)
    return parts


def retract_assemble(parts: dict, chi: Window, chi_z: Window | None = None) -> SampledField:
    """``R_chi (u_k) = sum_k (tau_k chi) u_k``."""
    if chi_z is not None:
        _cover_check(chi_z, chi)
    g = chi.grid
    total = np.zeros(g.shape, dtype=np.complex128)
    for gamma, part in sorted(parts.items()):
        total = total + translate(chi.field, gamma_shift(g, gamma)).values * part.values
    return SampledField(g, SPACE, total)
