"""Amalgam (Kato) norms: windowed H^s norms combined in l^p over translations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError, PreconditionError
from .grid import SPACE, GridSpec, SampledField, require_domain, samples_per_unit
from .partition import PartitionFamily, Window, band_stability_case, lattice_sum
from .report import Case
from .sobolev import derivative, h_norm, h_norms_batch, multiply
from .weights import as_order, conv_bound_constant_blocks, sigma_eps

PSI_FLOOR = 1e-6
_BATCH_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class TranslationSet:
    """Grid-aligned translations ``y`` with quadrature weight ``w_y``.

    ``mode="lattice"`` sums with unit weights; ``mode="subgrid"`` is a Riemann sum
    for the continuous ``dy`` integral.
    """

    mode: str
    shifts: tuple[tuple[int, ...], ...]
    weight: float

    @classmethod
    def lattice(cls, grid: GridSpec, spacing=1) -> "TranslationSet":
        """The lattice ``spacing * Z^n`` (per-axis spacing in physical units)."""
        spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (grid.n,))
        steps, counts = [], []
        for a in range(grid.n):
            q = spacing[a] * grid.samples[a] / grid.box[a]
            c = grid.box[a] / spacing[a]
            if abs(q - round(q)) > 1e-9 or abs(c - round(c)) > 1e-9 or round(q) < 1:
                raise GridError(f"lattice spacing {spacing[a]} not commensurate with axis {a}")
            steps.append(int(round(q)))
            counts.append(int(round(c)))
        shifts = tuple(
            tuple(k * st for k, st in zip(idx, steps)) for idx in itertools.product(*map(range, counts))
        )
        return cls("lattice", shifts, 1.0)

    @classmethod
    def subgrid(cls, grid: GridSpec, step=1) -> "TranslationSet":
        """Every ``step``-th sample shift, weighted by the cell volume ``prod(step * L / N)``."""
        step = tuple(int(k) for k in np.broadcast_to(step, (grid.n,)))
        for k, N in zip(step, grid.samples):
            if k < 1 or N % k:
                raise GridError(f"translation step {k} does not divide {N}")
        shifts = tuple(itertools.product(*(range(0, N, k) for N, k in zip(grid.samples, step))))
        weight = float(np.prod([k * L / N for k, L, N in zip(step, grid.box, grid.samples)]))
        return cls("subgrid", shifts, weight)


@dataclass(frozen=True, eq=False)
class KatoNormSpec:
    s: object
    p: float
    window: Window
    translations: TranslationSet
    check_psi: bool = True

    def __post_init__(self):
        if not (self.p >= 1):
            raise PreconditionError(f"exponent p must be >= 1, got {self.p}")
        if not np.any(self.window.values != 0):
            raise PreconditionError("window must be nonzero")
        if self.translations.mode == "lattice" and self.check_psi:
            psi = psi_function(self.window, self.translations)
            if psi.min() < PSI_FLOOR:
                raise PreconditionError(f"Psi-positivity failure: min Psi = {psi.min():.3g}")


def psi_function(window: Window, translations: TranslationSet) -> np.ndarray:
    """``Psi = sum_gamma |tau_gamma chi|^2`` over the translation set."""
    a2 = np.abs(window.values) ** 2
    n = window.grid.n
    return sum(np.roll(a2, sh, axis=tuple(range(n))) for sh in translations.shifts)


def windowed_norms(u: SampledField, window: Window, translations: TranslationSet, s) -> np.ndarray:
    """``||u tau_y chi||_{H^s}`` for every ``y`` in the translation set, in order."""
    require_domain(u, SPACE)
    g = u.grid
    if window.grid != g:
        raise GridError("grid mismatch between field and window")
    s = as_order(s, g.block_dims)
    axes = tuple(range(g.n))
    size = int(np.prod(g.shape))
    chunk = max(1, _BATCH_ELEMENTS // size)
    shifts = translations.shifts
    out = np.empty(len(shifts))
    for start in range(0, len(shifts), chunk):
        block = shifts[start : start + chunk]
        stack = np.stack([np.roll(window.values, sh, axis=axes) for sh in block])
        out[start : start + len(block)] = h_norms_batch(stack * u.values, g, s)
    return out


def combine(values: np.ndarray, p: float, weight: float) -> float:
    """``(sum_y w |a_y|^p)^{1/p}``, or ``max_y |a_y|`` for ``p = inf``."""
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(values.max(initial=0.0))
    top = values.max(initial=0.0)
    if top == 0:
        return 0.0
    return float(top * (weight * np.sum((values / top) ** p)) ** (1 / p))


def kato_norm(u: SampledField, spec: KatoNormSpec) -> float:
    norms = windowed_norms(u, spec.window, spec.translations, spec.s)
    return combine(norms, spec.p, spec.translations.weight)


def squared_window(window: Window) -> Window:
    return Window(SampledField(window.grid, SPACE, np.abs(window.values) ** 2), window.support, window.name + "^2")


# --- checks ------------------------------------------------------------------------


def window_equivalence_ratios(corpus, spec1: KatoNormSpec, spec2: KatoNormSpec) -> np.ndarray:
    return np.array([kato_norm(u, spec1) / kato_norm(u, spec2) for u in corpus])


def window_equivalence_check(corpus, spec1, spec2, variants=None, tol=0.10, name=None) -> Case:
    """Band of ``||u||_{chi1} / ||u||_{chi2}`` over a corpus.

    ``variants`` maps a label to another ``(corpus, spec1, spec2)`` triple (for
    example the same fields on a refined grid) whose band width must agree within ``tol``.
    """
    ratios = window_equivalence_ratios(corpus, spec1, spec2)
    var = {k: window_equivalence_ratios(*v) for k, v in (variants or {}).items()}
    return band_stability_case(
        name or f"window-equivalence p={spec1.p}", ratios, var, tol, {"p": spec1.p}
    )


def h_k2_ratios(corpus, s, family: PartitionFamily) -> np.ndarray:
    g = family.grid
    spec = KatoNormSpec(s, 2, family.h, TranslationSet.lattice(g), check_psi=False)
    return np.array([kato_norm(u, spec) / h_norm(u, s) for u in corpus])


def h_k2_zero_order_band(family: PartitionFamily) -> tuple[float, float]:
    """At order 0 the ratio lies in ``[min, max]`` of ``(sum_gamma (tau_gamma h)^2)^{1/2}``."""
    psi = lattice_sum(squared_window(family.h).field).values.real
    return float(np.sqrt(psi.min())), float(np.sqrt(psi.max()))


def h_equals_k2_check(corpus, s, family: PartitionFamily, variants=None, tol=0.10, name=None) -> Case:
    """Band of ``||u||_{s,2,Z^n,h} / ||u||_{H^s}``; ``variants`` maps labels to ``(corpus, family)``."""
    ratios = h_k2_ratios(corpus, s, family)
    var = {k: h_k2_ratios(c, s, f) for k, (c, f) in (variants or {}).items()}
    extra = {}
    case = band_stability_case(name or f"h-eq-k2 s={s}", ratios, var, tol)
    if np.all(np.asarray(s) == 0):
        lo, hi = h_k2_zero_order_band(family)
        inside = bool(ratios.min() >= lo * (1 - 1e-12) and ratios.max() <= hi * (1 + 1e-12))
        extra = {"oracle_band": [lo, hi], "inside_oracle_band": inside}
        case.details.update(extra)
        if not inside:
            case.status = "fail"
    return case


def _holder_exponent(p: float, q: float) -> float:
    inv = (0 if math.isinf(p) else 1 / p) + (0 if math.isinf(q) else 1 / q)
    if inv > 1 + 1e-12:
        raise PreconditionError(f"exponent mismatch: 1/p + 1/q = {inv} > 1")
    return math.inf if inv == 0 else 1 / inv


def kato_product_check(
    u, v, s, t, eps, p, q, window: Window, translations: TranslationSet, r=None, slack=0.05, name=None
) -> Case:
    """``||uv||_{sigma,r,chi^2} <= C ||u||_{s,p,chi} ||v||_{t,q,chi}`` with ``1/r = 1/p + 1/q``."""
    g = u.grid
    r_expected = _holder_exponent(p, q)
    if r is not None and not (r == r_expected or abs(r - r_expected) <= 1e-12 * r_expected):
        raise PreconditionError(f"exponent mismatch: r={r} but 1/p+1/q gives {r_expected}")
    r = r_expected
    spec = sigma_eps(s, t, eps, g.block_dims)
    constant = math.sqrt(conv_bound_constant_blocks(spec)) * (2 * math.pi) ** (-g.n / 2)
    w = translations.weight
    a = windowed_norms(u, window, translations, spec.s)
    b = windowed_norms(v, window, translations, spec.t)
    c = windowed_norms(multiply(u, v), squared_window(window), translations, spec.sigma)
    lhs = combine(c, r, w)
    rhs = combine(a, p, w) * combine(b, q, w)
    ratio = lhs / rhs if rhs > 0 else 0.0
    limit = constant * (1 + slack)
    return Case(
        name=name or f"kato-product p={p} q={q}",
        status="pass" if ratio <= limit else "fail",
        measured=ratio,
        bound=limit,
        details={"r": r, "lhs": lhs, "rhs": rhs, "constant": constant, "sigma": list(spec.sigma.orders)},
    )


def bc_norm(u: SampledField, m: int) -> float:
    """``max_{|alpha| <= m} sup |d^alpha u|`` by spectral differentiation."""
    best = u.sup()
    layer = {(): u}
    for _ in range(m):
        nxt = {}
        for alpha, f in layer.items():
            for axis in range(u.grid.n):
                key = tuple(sorted(alpha + (axis,)))
                if key not in nxt:
                    nxt[key] = derivative(f, axis)
        layer = nxt
        best = max(best, max(f.sup() for f in layer.values()))
    return best


def bc_embedding_constant(m: int, n: int) -> float:
    """Leibniz-rule constant ``(1 + 4n)^{m/2}``."""
    return (1 + 4 * n) ** (m / 2)


def bc_embedding_check(u, m: int, window: Window, translations: TranslationSet, bc=None, name=None) -> Case:
    """``||u||_{m,ul,chi} <= C ||u||_{BC^m} ||chi||_{H^m}``; the observed constant is reported."""
    g = u.grid
    bc = bc_norm(u, m) if bc is None else float(bc)
    ul = kato_norm(u, KatoNormSpec(m, math.inf, window, translations, check_psi=False))
    denom = bc * h_norm(window.field, m)
    c_obs = ul / denom if denom > 0 else 0.0
    # the constant is attained exactly for u = 1, so allow for roundoff
    bound = bc_embedding_constant(m, g.n) * (1 + 1e-12)
    return Case(
        name=name or f"bc-embed m={m}",
        status="pass" if c_obs <= bound else "fail",
        measured=c_obs,
        bound=bound,
        details={"ul_norm": ul, "bc_norm": bc, "window_h_norm": h_norm(window.field, m)},
    )


def _monotone_up_to(values, factor=1.05, floor=0.0) -> int:
    values = np.asarray(values)
    return int(np.sum(values[1:] > factor * values[:-1] + floor))


def cutoff_field(grid: GridSpec, eps: float, profile=None) -> SampledField:
    """``psi(eps x)`` with ``psi = 1`` on ``[-1, 1]^n`` and supported in ``[-2, 2]^n``."""
    from .partition import bump_profile

    profile = profile or bump_profile(-2, -1, 1, 2)
    vals = np.ones(grid.shape)
    for a in range(grid.n):
        vals = vals * profile(eps * grid.coords[a])
    return SampledField(grid, SPACE, vals)


def density_approx_check(u, s, p, window: Window, translations: TranslationSet, ks=range(7), name=None) -> Case:
    """Cutoff and mollifier approximations converge in ``K_p^s`` along ``eps = 2^{-k}``."""
    from .calculus import mollify

    if math.isinf(p):
        raise PreconditionError("precondition: density requires p < infinity")
    spec = KatoNormSpec(s, p, window, translations, check_psi=False)
    base = kato_norm(u, spec)
    eps = [2.0 ** (-k) for k in ks]
    cut = [kato_norm(cutoff_field(u.grid, e) * u - u, spec) for e in eps]
    mol = [kato_norm(mollify(u, e) - u, spec) for e in eps]
    floor = 1e-12 * base
    violations = _monotone_up_to(cut, floor=floor) + _monotone_up_to(mol, floor=floor)
    converging = cut[-1] <= 0.5 * max(cut[0], floor) + floor and mol[-1] <= 0.5 * mol[0] + floor
    ok = violations == 0 and converging
    return Case(
        name=name or f"density s={s} p={p}",
        status="pass" if ok else "fail",
        measured=max(cut[-1], mol[-1]) / base if base > 0 else 0.0,
        bound=None,
        details={"eps": eps, "cutoff_errors": cut, "mollifier_errors": mol, "violations": violations},
    )
