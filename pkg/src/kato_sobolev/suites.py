"""Named verification suites run by ``kato-sobolev verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import calculus as calc
from .errors import ConvergenceError, IndeterminateError, KatoSobolevError, PreconditionError
from .grid import SPACE, SampledField, constant, make_grid, sample, samples_per_unit
from .kato import (
    KatoNormSpec,
    TranslationSet,
    bc_embedding_check,
    density_approx_check,
    h_equals_k2_check,
    kato_norm,
    kato_product_check,
    window_equivalence_check,
)
from .partition import (
    assemble,
    bump_profile,
    build_partition,
    decomposition_equivalence_check,
    decomposition_ratio,
    lattice_sum,
    periodization_spectrum_check,
    retract_assemble,
    retract_split,
    retract_window,
    tensor_window,
    theta_lattice,
    theta_plancherel_error,
)
from .corpus import bandlimited, gaussian_packet, make_rng, packet_corpus, random_family_recipe, sample_family
from .report import Case
from .sobolev import (
    derivative,
    fourier_l1_bound,
    h_norm,
    modulate,
    multiply,
    modulation_bound,
    multiply_periodic,
    periodic_multiplier_bound,
    product_inequality_check,
)
from .weights import (
    BlockOrder,
    bracket,
    conv_bound_constant,
    conv_weight_check,
    multi_bracket,
    peetre_margin,
    weight_l1_norm,
)


@dataclass
class SuiteConfig:
    seed: int = 1
    size: int | None = None
    grid: int | None = None
    box: float | None = None
    blocks: tuple[int, ...] | None = None
    quadrature_nodes: int = 64

    def corpus(self, default: int) -> int:
        return default if self.size is None else self.size

    def samples(self, default: int) -> int:
        return default if self.grid is None else self.grid

    def length(self, default: float) -> float:
        return default if self.box is None else self.box


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def guarded(name: str, fn: Callable[[], Case]) -> Case:
    """Run a check; numerical non-convergence becomes a failed case rather than an error."""
    try:
        return fn()
    except (ConvergenceError, IndeterminateError) as exc:
        return Case(name, "fail", None, None, {"error": f"{type(exc).__name__}: {exc}"})


def expect_error(name: str, fn: Callable[[], object], exc_type=KatoSobolevError, text: str = "") -> Case:
    """Pass iff ``fn`` raises ``exc_type`` whose message contains ``text``."""
    try:
        fn()
    except exc_type as exc:
        ok = text in str(exc)
        return Case(name, _status(ok), None, None, {"raised": str(exc)})
    return Case(name, "fail", None, None, {"raised": None})


def _grid1(cfg: SuiteConfig, N: int, L: float):
    return make_grid([1], [cfg.samples(N)], [cfg.length(L)])


def _bump_window(grid, half_plateau: float, transition: float, name="bump"):
    prof = bump_profile(-half_plateau - transition, -half_plateau, half_plateau, half_plateau + transition)
    return tensor_window(grid, prof, name=name)


def _subgrid(grid, spacing: float) -> TranslationSet:
    """Translation sub-grid with a fixed physical spacing (refinement-invariant)."""
    step = [int(round(spacing * N / L)) for N, L in zip(grid.samples, grid.box)]
    return TranslationSet.subgrid(grid, step)


def _drift(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# --- weights ---------------------------------------------------------------------


def suite_peetre(cfg: SuiteConfig):
    rng = make_rng(cfg.seed)
    count = cfg.corpus(10_000)
    cases = []
    worst = math.inf
    worst_recip = 0.0
    worst_dom = -math.inf
    layouts = [(1,), (2,), (3,), (1, 1), (1, 2), (1, 1, 1)]
    per = -(-count // len(layouts))
    for dims in layouts:
        n = sum(dims)
        xi = rng.uniform(-50, 50, size=(per, n)) * rng.uniform(0, 1, size=(per, 1))
        eta = rng.uniform(-50, 50, size=(per, n)) * rng.uniform(0, 1, size=(per, 1))
        for row in range(per):
            s = BlockOrder(tuple(rng.uniform(-4, 4, size=len(dims))), dims)
            m = peetre_margin(xi[row], eta[row], s)
            worst = min(worst, float(m))
            worst_recip = max(worst_recip, abs(float(multi_bracket(xi[row], s) * multi_bracket(xi[row], -s)) - 1))
            worst_dom = max(worst_dom, float(multi_bracket(xi[row], s) / bracket(xi[row]) ** s.l1) - 1)
    cases.append(Case("peetre-margin", _status(-worst <= 1e-12), max(-worst, 0.0), 1e-12, {"samples": per * len(layouts), "min_margin": worst}))
    cases.append(Case("weight-reciprocal", _status(worst_recip <= 1e-12), worst_recip, 1e-12))
    cases.append(Case("weight-dominated-by-l1-order", _status(worst_dom <= 1e-12), max(worst_dom, 0.0), 1e-12))
    for lam in (0.75, 1.0, 2.0, 5.0):
        exact = math.sqrt(math.pi) * math.gamma(lam - 0.5) / math.gamma(lam)
        err = abs(weight_l1_norm(lam, 1) / exact - 1)
        cases.append(Case(f"weight-l1 n=1 lambda={lam}", _status(err <= 1e-8), err, 1e-8, {"value": weight_l1_norm(lam, 1)}))
    for lam, n in ((1.5, 2), (2.0, 3), (1.25, 2)):
        exact = math.pi ** (n / 2) * math.gamma(lam - n / 2) / math.gamma(lam)
        err = abs(weight_l1_norm(lam, n) / exact - 1)
        cases.append(Case(f"weight-l1 n={n} lambda={lam}", _status(err <= 1e-8), err, 1e-8))
    cases.append(expect_error("weight-l1 divergent", lambda: weight_l1_norm(0.5, 1), PreconditionError, "divergent"))
    return {"samples": per * len(layouts)}, cases


CONV_CONFIGS = [
    ((1,), 1, 1, 0.25),
    ((1,), 2, 2, None),
    ((1,), 0.3, 0.3, 0.05),
    ((1,), -1, 2, 0.25),
    ((1,), 2, -1, 0.25),
    ((1,), 0.5, 0.5, None),
    ((1,), 1, 0.5, None),
    ((1,), 3, 1, None),
    ((1,), 0.75, 0.25, None),
    ((2,), 1, 1, None),
    ((2,), 1.5, 0.75, None),
    ((3,), 1, 1, None),
    ((1, 1), 1, 1, None),
]


def suite_conv_bounds(cfg: SuiteConfig):
    cases = []
    configs = CONV_CONFIGS
    if cfg.blocks is not None:
        configs = [c for c in CONV_CONFIGS if c[0] == tuple(cfg.blocks)] or [(tuple(cfg.blocks), 1, 1, None)]
    for dims, s, t, eps in configs:
        n = sum(dims)
        N = cfg.samples(256 if n == 1 else 64)
        grid = make_grid(dims, [N] * n, [cfg.length(8.0)] * n)
        name = f"conv dims={list(dims)} s={s} t={t} eps={eps}"
        cases.append(guarded(name, lambda: _renamed(conv_weight_check(s, t, eps, grid), name)))
    checks = [((1, 1, 0.25, 1), 8 * math.pi), ((-1, 2, 0.25, 1), 2 * math.pi)]
    for args, exact in checks:
        err = abs(conv_bound_constant(*args) / exact - 1)
        cases.append(Case(f"conv-constant s={args[0]} t={args[1]}", _status(err <= 1e-10), err, 1e-10))
    cases.append(expect_error("conv-constant s=t=0", lambda: conv_bound_constant(0, 0, None, 1), PreconditionError))
    return {"configurations": len(configs)}, cases


def _renamed(case: Case, name: str) -> Case:
    case.name = name
    return case


# --- sobolev ---------------------------------------------------------------------


def _product_pairs(rng):
    gauss = lambda x: np.exp(-x * x)
    bump = lambda x: bump_profile(-2, -1, 1, 2)(x)
    rough = gaussian_packet(rng, 1, spread=0.5, width=(0.3, 0.5), modes=4)
    other = gaussian_packet(rng, 1, spread=0.5)
    return [
        ("gauss-gauss s=t=1", gauss, gauss, 1, 1, None),
        ("bump-packet s=t=1", bump, other, 1, 1, None),
        ("rough s=t=3", rough, other, 3, 3, None),
        ("mixed s=-0.5 t=1.5", other, rough, -0.5, 1.5, None),
        ("low s=t=0.4", rough, other, 0.4, 0.4, 0.05),
    ]


def suite_product(cfg: SuiteConfig):
    rng = make_rng(cfg.seed)
    cases = []
    N, L = cfg.samples(256), cfg.length(16.0)
    coarse, fine = make_grid([1], [N], [L]), make_grid([1], [2 * N], [L])
    for label, f, g, s, t, eps in _product_pairs(rng):
        c1 = product_inequality_check(sample(f, coarse), sample(g, coarse), s, t, eps, name=label)
        c2 = product_inequality_check(sample(f, fine), sample(g, fine), s, t, eps, name=label)
        drift = _drift(c1.measured, c2.measured)
        ok = c1.passed and c2.passed and drift <= 0.02
        cases.append(Case(f"product {label}", _status(ok), c2.measured, c2.bound, dict(c2.details, refinement_drift=drift)))
    g2 = make_grid([1, 1], [64, 64], [12.0, 12.0])
    f2, h2 = packet_corpus(rng, 2, 12.0, 2)
    cases.append(product_inequality_check(sample(f2, g2), sample(h2, g2), (1, 1), (1, 1), name="product 2-D two blocks"))

    # exact derivative identity on band-limited fields
    grid = make_grid([1], [64], [2 * np.pi])
    worst = 0.0
    for _ in range(cfg.corpus(50)):
        u = sample(bandlimited(rng, grid, kmax=8), grid)
        s = rng.uniform(-2, 3)
        lhs = h_norm(u, s) ** 2
        rhs = h_norm(u, s - 1) ** 2 + h_norm(derivative(u, 0), s - 1) ** 2
        worst = max(worst, abs(lhs - rhs) / lhs)
    cases.append(Case("derivative-identity", _status(worst <= 1e-9), worst, 1e-9))

    worst_mod = 0.0
    g_box = make_grid([1], [128], [8.0])
    for _ in range(cfg.corpus(50)):
        u = sample(gaussian_packet(rng, 1), g_box)
        eta = 2 * np.pi * rng.integers(-6, 7) / 8.0
        s = BlockOrder((rng.uniform(-3, 3),), (1,))
        worst_mod = max(worst_mod, h_norm(modulate(u, eta), s) / (modulation_bound([eta], s) * h_norm(u, s)))
    cases.append(Case("modulation-bound", _status(worst_mod <= 1.0), worst_mod, 1.0))

    u = sample(lambda x: np.exp(-x * x), g_box)
    coeffs = {(0,): 1.0, (1,): 0.5, (-1,): 0.5}
    for s in (0.0, 1.0, 2.0):
        lhs = h_norm(multiply_periodic(u, coeffs), s)
        rhs = periodic_multiplier_bound(coeffs, s) * h_norm(u, s)
        cases.append(Case(f"periodic-multiplier s={s}", _status(lhs <= rhs), lhs / rhs, 1.0))
    cases.append(fourier_l1_bound(u, 1.0, name="fourier-l1 gaussian"))
    wave = sample(lambda x: np.exp(1j * 2 * np.pi * x / 8.0), g_box)
    cases.append(fourier_l1_bound(wave, 1.0, name="fourier-l1 plane-wave"))
    return {"grid": [N, L]}, cases


# --- partition -------------------------------------------------------------------


def suite_partition(cfg: SuiteConfig):
    cases = []
    for n in (1, 2):
        N = cfg.samples(256)
        grid = make_grid([1] * n, [N] * n, [cfg.length(2.0)] * n)
        fam = build_partition(n, grid)
        chi_err = float(np.max(np.abs(sum(c.values for c in fam.chi_i) - 1)))
        h_err = float(np.max(np.abs(lattice_sum(fam.h.field).values - 1)))
        h_min = float(fam.H_tilde.values.real.min())
        neg = float(min(w.values.real.min() for w in fam.h_i))
        cases.append(Case(f"partition n={n} sum-chi", _status(chi_err <= 1e-12), chi_err, 1e-12, {"members": len(fam.points)}))
        cases.append(Case(f"partition n={n} sum-translates-h", _status(h_err <= 1e-12), h_err, 1e-12))
        cases.append(Case(f"partition n={n} H_tilde>=1", _status(h_min >= 1 - 1e-12), 1 - h_min, 1e-12, {"min": h_min}))
        cases.append(Case(f"partition n={n} h_i>=0", _status(neg >= 0), max(-neg, 0.0), 0.0))
        cases.append(Case(f"partition n={n} count", _status(len(fam.points) == 3**n), float(len(fam.points)), float(3**n)))
    slopes = dyadic_decay_slopes(bump_profile(0.25, 1 / 3, 2 / 3, 0.75), 1024)
    steepening = bool(np.all(np.diff(slopes) < 0))
    cases.append(Case("bump spectrum decays super-polynomially", _status(steepening), float(slopes[-1]), None, {"dyadic_slopes": slopes}))
    return {"n": [1, 2]}, cases


def dyadic_decay_slopes(profile, N: int) -> np.ndarray:
    """Log-log slopes between maxima of ``|c_k|`` on dyadic bands ``[2^j, 2^{j+1})`` of a unit-periodic profile."""
    coeffs = np.abs(np.fft.fft(profile(np.arange(N) / N))) / N
    bands = [coeffs[2**j : 2 ** (j + 1)].max() for j in range(2, int(np.log2(N)) - 1)]
    return np.diff(np.log2(bands))


def _families(cfg, grid, seed, count):
    rng = make_rng(seed)
    return [random_family_recipe(rng, grid) for _ in range(count)]


def suite_decomposition(cfg: SuiteConfig):
    N, L = cfg.samples(1024), cfg.length(8.0)
    coarse = make_grid([1], [N], [L])
    fine = make_grid([1], [2 * N], [L])
    count = cfg.corpus(20)
    recipes = _families(cfg, coarse, cfg.seed, count)
    reseeded = _families(cfg, coarse, cfg.seed + 1000, count)
    base = [sample_family(r, coarse) for r in recipes]
    refined = [sample_family(r, fine) for r in recipes]
    other = [sample_family(r, coarse) for r in reseeded]
    cases = []
    for s in (0.0, 1.0, 1.5, 1.7, -0.5):
        cases.append(
            decomposition_equivalence_check(base, s, {"refined": refined, "reseeded": other}, tol=0.10, name=f"decomposition s={s}")
        )
    one = sample_family({(0,): next(iter(recipes[0].values()))}, coarse)
    for s in (0.0, 1.0, -0.5):
        err = abs(decomposition_ratio(one, s) - 1)
        cases.append(Case(f"one-member s={s}", _status(err <= 1e-10), err, 1e-10))
    far = sample_family({(-3,): recipes[0][next(iter(recipes[0]))], (2,): recipes[1][next(iter(recipes[1]))]}, coarse)
    err = abs(decomposition_ratio(far, 0.0) - 1)
    cases.append(Case("two-far-members s=0", _status(err <= 1e-10), err, 1e-10))
    return {"grid": [N, L], "families": count}, cases


def suite_poisson(cfg: SuiteConfig):
    cases = []
    g1 = make_grid([1], [cfg.samples(1024)], [cfg.length(8.0)])
    fam = build_partition(1, g1)
    for theta in theta_lattice(g1)[:: max(1, len(theta_lattice(g1)) // 4)]:
        cases.append(periodization_spectrum_check(fam.h, theta, name=f"poisson h theta={theta[0]:.6f}"))
    win = sample(gaussian_packet(make_rng(cfg.seed), 1, spread=0.2, width=(0.15, 0.2)), g1)
    for theta in theta_lattice(g1)[1::3]:
        cases.append(periodization_spectrum_check(win, theta, name=f"poisson packet theta={theta[0]:.6f}"))
    g2 = make_grid([1, 1], [256, 256], [2.0, 2.0])
    fam2 = build_partition(2, g2)
    for theta in theta_lattice(g2):
        cases.append(periodization_spectrum_check(fam2.h, theta, name=f"poisson 2-D h theta={np.round(theta, 6).tolist()}"))
    rng = make_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.corpus(10)):
        worst = max(worst, theta_plancherel_error(sample_family(random_family_recipe(rng, g1), g1)))
    cases.append(Case("plancherel-theta", _status(worst <= 1e-9), worst, 1e-9))
    return {"grid": [g1.samples[0], g1.box[0]]}, cases


def suite_retract(cfg: SuiteConfig):
    rng = make_rng(cfg.seed)
    cases = []
    grid = make_grid([1], [cfg.samples(512)], [cfg.length(4.0)])
    fam = build_partition(1, grid)
    chi = retract_window(fam)
    worst = 0.0
    for _ in range(cfg.corpus(20)):
        u = sample(gaussian_packet(rng, 1, spread=1.0, width=(0.3, 0.8)), grid)
        back = retract_assemble(retract_split(u, fam.h), chi, fam.h)
        worst = max(worst, float(np.max(np.abs(back.values - u.values))) / u.sup())
    cases.append(Case("retract round trip 1-D", _status(worst <= 1e-11), worst, 1e-11))
    g2 = make_grid([1, 1], [256, 256], [2.0, 2.0])
    fam2 = build_partition(2, g2)
    chi2 = retract_window(fam2)
    worst = 0.0
    for _ in range(3):
        u = sample(gaussian_packet(rng, 2, spread=0.3, width=(0.3, 0.5)), g2)
        back = retract_assemble(retract_split(u, fam2.h), chi2, fam2.h)
        worst = max(worst, float(np.max(np.abs(back.values - u.values))) / u.sup())
    cases.append(Case("retract round trip 2-D", _status(worst <= 1e-11), worst, 1e-11))
    zero_parts = retract_split(constant(grid, 0.0), fam.h)
    cases.append(Case("retract zero field", _status(len(zero_parts) == 0), float(len(zero_parts)), 0.0))
    narrow = sample(lambda x: bump_profile(0.3, 0.4, 0.6, 0.7)(x), grid)
    parts = retract_split(narrow, fam.h)
    cases.append(Case("retract compact support finitely many parts", _status(len(parts) <= 2), float(len(parts)), 2.0))
    return {"grid": [grid.samples[0], grid.box[0]]}, cases


# --- kato ------------------------------------------------------------------------


def _kato_setting(grid):
    narrow = _bump_window(grid, 0.25, 0.5, "narrow")
    wide = _bump_window(grid, 0.5, 1.0, "wide")
    return narrow, wide


def suite_kato_equivalence(cfg: SuiteConfig):
    rng = make_rng(cfg.seed)
    N, L = cfg.samples(256), cfg.length(16.0)
    coarse, fine = make_grid([1], [N], [L]), make_grid([1], [2 * N], [L])
    funcs = packet_corpus(rng, 1, L, cfg.corpus(20))
    corpus = [sample(f, coarse) for f in funcs]
    corpus_fine = [sample(f, fine) for f in funcs]
    cases = []
    for p in (1.0, 2.0, math.inf):
        specs = []
        for grid in (coarse, fine):
            narrow, wide = _kato_setting(grid)
            ts = _subgrid(grid, 1 / 8)
            specs.append((KatoNormSpec(1.0, p, narrow, ts), KatoNormSpec(1.0, p, wide, ts)))
        cases.append(
            window_equivalence_check(corpus, *specs[0], {"refined": (corpus_fine, *specs[1])}, name=f"window-equivalence narrow/wide s=1 p={p}")
        )
        # subgrid vs lattice realisations of the same norm
        narrow, _ = _kato_setting(coarse)
        lat = KatoNormSpec(1.0, p, narrow, TranslationSet.lattice(coarse, 1.0))
        sub = KatoNormSpec(1.0, p, narrow, _subgrid(coarse, 1 / 8))
        narrow_f, _ = _kato_setting(fine)
        lat_f = KatoNormSpec(1.0, p, narrow_f, TranslationSet.lattice(fine, 1.0))
        sub_f = KatoNormSpec(1.0, p, narrow_f, _subgrid(fine, 1 / 8))
        cases.append(
            window_equivalence_check(corpus, lat, sub, {"refined": (corpus_fine, lat_f, sub_f)}, name=f"lattice-vs-subgrid s=1 p={p}")
        )
    narrow, _ = _kato_setting(coarse)
    ts = TranslationSet.lattice(coarse, 1.0)
    shifted = type(narrow)(SampledField(coarse, SPACE, np.roll(narrow.values, int(coarse.samples[0] / coarse.box[0]))), narrow.support, "shifted")
    same = max(abs(kato_norm(u, KatoNormSpec(1.0, 2.0, narrow, ts)) / kato_norm(u, KatoNormSpec(1.0, 2.0, shifted, ts)) - 1) for u in corpus)
    cases.append(Case("translated window ratio", _status(same <= 1e-12), same, 1e-12))
    ps = (1.0, 1.5, 2.0, 3.0, 4.0, 8.0, math.inf)
    violations = 0
    for u in corpus:
        vals = [kato_norm(u, KatoNormSpec(1.0, p, narrow, ts)) for p in ps]
        violations += sum(b > a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    cases.append(Case("p-chain monotone", _status(violations == 0), float(violations), 0.0, {"p": list(ps)}))
    # norm axioms and order monotonicity
    spec = KatoNormSpec(1.0, 2.0, narrow, ts)
    worst_tri, worst_hom, worst_s = 0.0, 0.0, 0.0
    for u, v in zip(corpus, corpus[1:]):
        a = complex(rng.normal(), rng.normal())
        worst_hom = max(worst_hom, abs(kato_norm(a * u, spec) - abs(a) * kato_norm(u, spec)) / kato_norm(u, spec))
        worst_tri = max(worst_tri, (kato_norm(u + v, spec) - kato_norm(u, spec) - kato_norm(v, spec)) / kato_norm(u, spec))
        low = KatoNormSpec(0.5, 2.0, narrow, ts)
        worst_s = max(worst_s, kato_norm(u, low) / kato_norm(u, spec) - 1)
    cases.append(Case("norm homogeneity", _status(worst_hom <= 1e-10), worst_hom, 1e-10))
    cases.append(Case("norm triangle", _status(worst_tri <= 1e-10), max(worst_tri, 0.0), 1e-10))
    cases.append(Case("order monotonicity", _status(worst_s <= 1e-9), max(worst_s, 0.0), 1e-9))
    return {"grid": [N, L], "corpus": len(corpus)}, cases


def suite_h_eq_k2(cfg: SuiteConfig):
    rng = make_rng(cfg.seed)
    N, L = cfg.samples(2048), cfg.length(16.0)
    coarse, fine = make_grid([1], [N], [L]), make_grid([1], [2 * N], [L])
    funcs = packet_corpus(rng, 1, L, cfg.corpus(30))
    corpus = [sample(f, coarse) for f in funcs]
    corpus_fine = [sample(f, fine) for f in funcs]
    fam, fam_fine = build_partition(1, coarse), build_partition(1, fine)
    cases = []
    for s in (0.0, 1.0, 2.0):
        cases.append(h_equals_k2_check(corpus, s, fam, {"refined": (corpus_fine, fam_fine)}, name=f"h-eq-k2 s={s}"))
    q = samples_per_unit(coarse)[0]
    spec = KatoNormSpec(1.0, 2, fam.h, TranslationSet.lattice(coarse), check_psi=False)
    shift_err = max(
        abs(kato_norm(SampledField(coarse, SPACE, np.roll(u.values, 2 * q)), spec) / kato_norm(u, spec) - 1) for u in corpus[:5]
    )
    cases.append(Case("h-eq-k2 whole-cell translation", _status(shift_err <= 1e-12), shift_err, 1e-12))
    return {"grid": [N, L], "corpus": len(corpus)}, cases


def suite_kato_product(cfg: SuiteConfig):
    rng = make_rng(cfg.seed)
    N, L = cfg.samples(256), cfg.length(16.0)
    fu, fv = packet_corpus(rng, 1, L, 1)[0], (lambda x: np.exp(-x * x / 4))
    bump = lambda x: bump_profile(-3, -1, 1, 3)(x)
    cases = []
    configs = [
        (math.inf, 2.0, 1, 1, fu, fv),
        (math.inf, 2.0, 1.5, 0.75, bump, fu),
        (2.0, 2.0, 1, 1, fu, fv),
        (4.0, 4.0, 1, 1, fu, fv),
        (math.inf, math.inf, 1, 1, fu, bump),
        (2.0, math.inf, 0.75, 1.5, fu, bump),
        (1.0, math.inf, 1, 1, fu, fv),
    ]
    for p, q, s, t, f, g in configs:
        results = []
        for grid in (make_grid([1], [N], [L]), make_grid([1], [2 * N], [L])):
            window = _bump_window(grid, 0.25, 0.5)
            results.append(kato_product_check(sample(f, grid), sample(g, grid), s, t, None, p, q, window, _subgrid(grid, 1 / 8)))
        drift = _drift(results[0].measured, results[1].measured)
        ok = results[0].passed and results[1].passed and drift <= 0.02
        cases.append(Case(f"kato-product p={p} q={q} s={s} t={t}", _status(ok), results[1].measured, results[1].bound, dict(results[1].details, refinement_drift=drift)))
    grid = make_grid([1], [N], [L])
    window = _bump_window(grid, 0.25, 0.5)
    zero = kato_product_check(sample(fu, grid), constant(grid, 0.0), 1, 1, None, math.inf, 2.0, window, _subgrid(grid, 1 / 8))
    cases.append(Case("kato-product v=0", _status(zero.details["lhs"] == 0 and zero.details["rhs"] == 0), 0.0, 0.0))
    cases.append(expect_error("kato-product exponent mismatch", lambda: kato_product_check(sample(fu, grid), sample(fv, grid), 1, 1, None, 1.0, 1.0, window, _subgrid(grid, 1 / 8)), PreconditionError, "exponent mismatch"))
    return {"grid": [N, L]}, cases


def suite_bc_embed(cfg: SuiteConfig):
    N, L = cfg.samples(256), cfg.length(4 * np.pi)
    grid = make_grid([1], [N], [L])
    window = _bump_window(grid, 0.25, 0.5)
    ts = _subgrid(grid, L / 64)
    cases = []
    for m in (0, 1, 2):
        c = bc_embedding_check(constant(grid, 1.0), m, window, ts, bc=1.0, name=f"bc-embed constant m={m}")
        err = abs(c.details["ul_norm"] - c.details["window_h_norm"]) / c.details["window_h_norm"]
        c.details["constant_identity_error"] = err
        if err > 1e-10:
            c.status = "fail"
        cases.append(c)
    cases.append(bc_embedding_check(sample(np.sin, grid), 2, window, ts, bc=1.0, name="bc-embed sin m=2"))
    cases.append(bc_embedding_check(sample(lambda x: np.sin(3 * x), grid), 1, window, ts, bc=3.0, name="bc-embed sin(3x) m=1"))
    g2 = make_grid([1, 1], [64, 64], [4 * np.pi, 4 * np.pi])
    w2 = _bump_window(g2, 0.5, 1.0)
    cases.append(bc_embedding_check(sample(lambda x, y: np.sin(x) * np.cos(y), g2), 2, w2, _subgrid(g2, 4 * np.pi / 16), bc=1.0, name="bc-embed 2-D m=2"))
    return {"grid": [N, L]}, cases


def suite_density(cfg: SuiteConfig):
    N, L = cfg.samples(2048), cfg.length(16.0)
    grid = make_grid([1], [N], [L])
    window = _bump_window(grid, 0.25, 0.5)
    ts = _subgrid(grid, 1 / 8)
    cases = [
        density_approx_check(sample(lambda x: np.exp(-x * x / 4), grid), 1.0, 2.0, window, ts, name="density gaussian s=1 p=2"),
        density_approx_check(sample(lambda x: np.exp(-x * x / 4) * np.cos(2 * x), grid), 0.5, 1.0, window, ts, name="density packet s=0.5 p=1"),
    ]
    compact = sample(lambda x: bump_profile(-0.8, -0.4, 0.4, 0.8)(x), grid)
    from .kato import cutoff_field

    err = kato_norm(cutoff_field(grid, 1.0) * compact - compact, KatoNormSpec(1.0, 2.0, window, ts, check_psi=False))
    cases.append(Case("density cutoff exact on compact support", _status(err == 0.0), err, 0.0))
    cases.append(expect_error("density p=inf", lambda: density_approx_check(compact, 1.0, math.inf, window, ts), PreconditionError, "precondition"))
    return {"grid": [N, L]}, cases


# --- calculus --------------------------------------------------------------------


def suite_mollifier_rate(cfg: SuiteConfig):
    N, L = cfg.samples(2048), cfg.length(16.0)
    grid = make_grid([1], [N], [L])
    u = sample(lambda x: np.exp(-x * x), grid)
    cases = [mollifier_case(u, s, sp) for s, sp in ((1.5, 0.5), (1.25, 0.75), (2.0, 0.5), (1.0, 1.0))]
    mean_err = abs(np.mean(calc.mollify(u, 0.25).values) - np.mean(u.values)) / abs(np.mean(u.values))
    cases.append(Case("mollifier mass", _status(mean_err <= 1e-10), float(mean_err), 1e-10))
    return {"grid": [N, L]}, cases


def mollifier_case(u, s, sp):
    return calc.mollifier_rate_check(u, s, sp, name=f"mollifier-rate s={s} s'={sp}")


def suite_conv_contraction(cfg: SuiteConfig):
    rng = make_rng(cfg.seed)
    N, L = cfg.samples(512), cfg.length(16.0)
    grid = make_grid([1], [N], [L])
    window = _bump_window(grid, 0.25, 0.5)
    ts = TranslationSet.subgrid(grid)
    cases = []
    for eps, mass in ((2 * L / N, 1.0), (0.5, 1.0), (0.5, 0.5)):
        phi = SampledField(grid, SPACE, np.fft.fftshift(calc.Mollifier(eps).kernel(grid)) * mass / grid.cell_volume)
        for k in range(3):
            u = sample(packet_corpus(rng, 1, L, 1)[0], grid)
            c = calc.conv_contraction_check(phi, u, 1.0, window, ts, name=f"conv-contraction eps={eps} mass={mass} #{k}")
            if mass != 1.0:
                c.details["homogeneity_bound"] = mass * (1 + 1e-6)
                c.status = _status(c.measured <= 1 + 1e-6)
            cases.append(c)
    return {"grid": [N, L]}, cases


def _calderon_fixtures(grid):
    x = grid.coords[0]
    s = lambda f: sample(f, grid)
    return [
        ("identity", calc.builtin_map("identity"), [s(lambda x: 0.5 + 0.2 * np.sin(x))]),
        ("exp", calc.builtin_map("exp"), [s(lambda x: 0.3 * np.sin(x))]),
        ("square", calc.builtin_map("square"), [s(lambda x: 0.4 * np.cos(x) + 0.1j * np.sin(2 * x))]),
        ("reciprocal", calc.builtin_map("reciprocal", rho=0.5), [s(lambda x: 2 + np.sin(x))]),
        ("product2", calc.builtin_map("product2"), [s(lambda x: 0.2 + 0.1 * np.sin(x)), s(lambda x: 0.3 + 0.1 * np.cos(x))]),
    ]


def suite_calderon(cfg: SuiteConfig):
    grid = make_grid([1], [cfg.samples(64)], [2 * np.pi])
    Q = cfg.quadrature_nodes
    cases = []
    for name, phi, u in _calderon_fixtures(grid):
        exact = calc.pointwise(phi, u).values

        def run(phi=phi, u=u, exact=exact, name=name):
            h = calc.calderon_apply(phi, u, nodes=Q)
            err = float(np.max(np.abs(h.values - exact)))
            return Case(f"calderon {name}", _status(err <= 1e-8), err, 1e-8, {"nodes": Q})

        cases.append(guarded(f"calderon {name}", run))
        errors = {}
        for q in (4, 8, 16, 32, 64, 128):
            h = calc.calderon_apply(phi, u, nodes=q, certify=False)
            errors[q] = float(np.max(np.abs(h.values - exact)))
        qs = sorted(errors)
        ok = all(errors[b] <= 0.5 * errors[a] or errors[a] <= 1e-10 for a, b in zip(qs, qs[1:]))
        cases.append(Case(f"calderon {name} node convergence", _status(ok), errors[64], None, {"errors": {str(k): v for k, v in errors.items()}}))
    # norms of Phi(u) are refinement stable
    for name, f in (("exp", lambda x: 0.3 * np.sin(x)), ("reciprocal", lambda x: 2 + np.sin(x))):
        phi = calc.builtin_map(name, rho=0.5)
        vals = []
        for N in (64, 128):
            g = make_grid([1], [N], [2 * np.pi])
            vals.append(h_norm(calc.calderon_apply(phi, sample(f, g), nodes=64), 1.5))
        drift = _drift(vals[0], vals[1])
        cases.append(Case(f"calderon {name} H^1.5 refinement", _status(drift <= 0.05), drift, 0.05, {"norms": vals}))
    return {"grid": [grid.samples[0], grid.box[0]], "nodes": Q}, cases


def suite_invert(cfg: SuiteConfig):
    grid = make_grid([1], [cfg.samples(64)], [2 * np.pi])
    cases = []
    fixtures = [
        ("constant 2", lambda x: 2.0 + 0 * x, 2.0),
        ("2+sin", lambda x: 2 + np.sin(x), 1.0),
        ("2+0.5exp(ix)", lambda x: 2 + 0.5 * np.exp(1j * x), 1.5),
        ("3+cos+sin2x", lambda x: 3 + np.cos(x) + 0.5 * np.sin(2 * x), 1.4),
    ]
    for name, f, c in fixtures:
        u = sample(f, grid)

        def run(u=u, c=c, name=name):
            inv = calc.invert(u, c, nodes=cfg.quadrature_nodes)
            err = float(np.max(np.abs(inv.values - 1 / u.values)))
            return Case(f"invert {name}", _status(err <= 1e-8), err, 1e-8, {"h_norms": {str(s): h_norm(inv, s) for s in (0.0, 1.0, 2.0)}})

        cases.append(guarded(f"invert {name}", run))
    g2 = make_grid([1, 1], [32, 32], [2 * np.pi, 2 * np.pi])
    u2 = sample(lambda x, y: 2 + np.sin(x) * np.cos(y), g2)

    def run2():
        err = float(np.max(np.abs(calc.invert(u2, 1.0, nodes=cfg.quadrature_nodes).values - 1 / u2.values)))
        return Case("invert 2-D", _status(err <= 1e-8), err, 1e-8)

    cases.append(guarded("invert 2-D", run2))
    cases.append(expect_error("invert with a zero", lambda: calc.invert(sample(np.sin, grid), 0.1), PreconditionError, "lower bound"))
    return {"grid": [grid.samples[0], grid.box[0]]}, cases


def suite_spectrum(cfg: SuiteConfig):
    grid = make_grid([1], [cfg.samples(64)], [2 * np.pi])
    u = sample(lambda x: 2 + np.sin(x), grid)
    cases = []
    res = calc.spectrum_member(u, 0.0)
    cases.append(Case("spectrum 2+sin lambda=0", _status(not res.member and res.residual <= 1e-8), res.residual, 1e-8, {"distance": res.distance}))
    inside = calc.spectrum_member(u, complex(u.values[7]))
    cases.append(Case("spectrum lambda=u(x7)", _status(inside.member), inside.distance, None))
    pair = [sample(np.sin, grid), sample(np.cos, grid)]
    res2 = calc.spectrum_member(pair, (2.0, 2.0))
    cases.append(Case("spectrum (sin,cos) lambda=(2,2)", _status(not res2.member and res2.residual <= 1e-8), res2.residual, 1e-8))
    swapped = calc.spectrum_member(pair[::-1], (2.0, 2.0))
    moved = calc.spectrum_member([p + 1.5 for p in pair], (3.5, 3.5))
    same = swapped.member == res2.member and moved.member == res2.member and abs(moved.distance - res2.distance) <= 1e-12
    cases.append(Case("spectrum relabel/translate invariance", _status(same), abs(moved.distance - res2.distance), 1e-12))
    cases.append(expect_error("spectrum borderline", lambda: calc.spectrum_member(u, 1.0 - 3 * calc.sample_range_tolerance([u])), IndeterminateError, "indeterminate"))
    return {"grid": [grid.samples[0], grid.box[0]]}, cases


def suite_chain_rule(cfg: SuiteConfig):
    grid = make_grid([1], [cfg.samples(64)], [2 * np.pi])
    s = lambda f: sample(f, grid)
    g2 = make_grid([1, 1], [32, 32], [2 * np.pi, 2 * np.pi])
    fixtures = [
        ("identity", [s(lambda x: 0.5 + 0.2 * np.sin(x))], 2.0, 1.5),
        ("exp", [s(lambda x: 0.3 * np.sin(x))], 2.0, 1.5),
        ("exp", [s(lambda x: 0.3 * np.sin(x))], 1.0, 0.9),
        ("reciprocal", [s(lambda x: 2 + np.sin(x))], 2.0, 1.5),
        ("product2", [s(lambda x: 0.2 + 0.1 * np.sin(x)), s(lambda x: 0.3 + 0.1 * np.cos(x))], 2.0, 1.5),
        ("square", [sample(lambda x, y: 0.3 * np.sin(x) * np.cos(y), g2)], 2.0, 1.5),
    ]
    cases = []
    for name, u, order, order_low in fixtures:
        phi = calc.builtin_map(name, rho=0.5)
        label = f"chain-rule {name} n={u[0].grid.n} s={order} s'={order_low}"
        cases.append(guarded(label, lambda phi=phi, u=u, order=order, order_low=order_low, label=label: calc.chain_rule_check(phi, u, order, order_low, name=label)))
    grad_err = max(calc.builtin_map(n, rho=0.5).grad_error(make_rng(cfg.seed)) for n in calc.BUILTIN_MAPS)
    cases.append(Case("holomap gradients vs central differences", _status(grad_err <= 1e-6), grad_err, 1e-6))
    return {"grid": [grid.samples[0], grid.box[0]]}, cases


def suite_divide(cfg: SuiteConfig):
    grid = make_grid([1], [cfg.samples(1024)], [8.0])
    box = ((-1.0, 1.0),)
    u = sample(lambda x: bump_profile(-1, -0.3, 0.3, 1)(x), grid)
    v = sample(lambda x: 2 + np.sin(np.pi * x / 4), grid)
    cases = []

    def run():
        res = calc.divide(u, v, 1.0, box)
        back = float(np.max(np.abs(multiply(res, v).values - u.values)))
        point = float(np.max(np.abs(res.values - u.values / v.values)))
        return Case("divide bump/(2+sin(pi x/4))", _status(max(back, point) <= 1e-8), max(back, point), 1e-8, {"reconstruction": back, "pointwise": point})

    cases.append(guarded("divide bump/(2+sin(pi x/4))", run))
    one = calc.divide(u, constant(grid, 1.0), 1.0, box)
    err = float(np.max(np.abs(one.values - u.values)))
    cases.append(Case("divide by 1", _status(err <= 1e-8), err, 1e-8))
    vanishing = sample(lambda x: np.sin(np.pi * x / 4), grid)
    cases.append(expect_error("divide v vanishing on support", lambda: calc.divide(u, vanishing, 0.5, box), PreconditionError, "dips below"))
    return {"grid": [grid.samples[0], grid.box[0]]}, cases


def suite_kp_compose(cfg: SuiteConfig):
    grid = make_grid([1], [cfg.samples(256)], [cfg.length(16.0)])
    window = _bump_window(grid, 0.25, 0.5)
    ts = TranslationSet.lattice(grid, 0.5)
    u = sample(lambda x: 0.4 * bump_profile(-3, -1, 1, 3)(x) * np.cos(x), grid)
    cases = []
    ident = calc.kp_composition_check(calc.builtin_map("identity"), u, 2.0, 1.0, window, ts, name="kp-compose identity p=2")
    ident.status = _status(ident.passed and abs(ident.measured - 1) <= 1e-8)
    cases.append(ident)
    cases.append(calc.kp_composition_check(calc.builtin_map("square"), u, 2.0, 1.0, window, ts, name="kp-compose square p=2"))
    cases.append(calc.kp_composition_check(calc.builtin_map("square"), u, 1.0, 1.0, window, ts, name="kp-compose square p=1"))
    sine = calc.HoloMap(1, np.sin, calc.entire(), (np.cos,), "sin")
    cases.append(calc.kp_composition_check(sine, u, 2.0, 1.0, window, ts, name="kp-compose sin p=2"))
    cases.append(expect_error("kp-compose exp rejected", lambda: calc.kp_composition_check(calc.builtin_map("exp"), u, 2.0, 1.0, window, ts), PreconditionError, "Phi(0)"))
    return {"grid": [grid.samples[0], grid.box[0]]}, cases


SUITES: dict[str, Callable] = {
    "peetre": suite_peetre,
    "conv-bounds": suite_conv_bounds,
    "product": suite_product,
    "partition": suite_partition,
    "decomposition": suite_decomposition,
    "poisson": suite_poisson,
    "retract": suite_retract,
    "kato-equivalence": suite_kato_equivalence,
    "h-eq-k2": suite_h_eq_k2,
    "kato-product": suite_kato_product,
    "bc-embed": suite_bc_embed,
    "density": suite_density,
    "mollifier-rate": suite_mollifier_rate,
    "conv-contraction": suite_conv_contraction,
    "calderon": suite_calderon,
    "invert": suite_invert,
    "spectrum": suite_spectrum,
    "chain-rule": suite_chain_rule,
    "divide": suite_divide,
    "kp-compose": suite_kp_compose,
}
