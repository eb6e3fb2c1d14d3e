"""Acceptance gate: one test per criterion, each at its stated tolerance."""

import json
import math
import re
import subprocess
import sys

import numpy as np
import pytest
import scipy.special

from kato_sobolev import calculus as calc
from kato_sobolev.corpus import bandlimited, gaussian_packet, make_rng
from kato_sobolev.errors import PreconditionError
from kato_sobolev.grid import make_grid, sample
from kato_sobolev.kato import KatoNormSpec, TranslationSet, kato_norm
from kato_sobolev.partition import (
    build_partition,
    bump_profile,
    lattice_sum,
    retract_assemble,
    retract_split,
    retract_window,
    tensor_window,
)
from kato_sobolev.sobolev import derivative, h_norm, multiply
from kato_sobolev.suites import SuiteConfig, suite_chain_rule, suite_conv_bounds, suite_decomposition
from kato_sobolev.suites import suite_h_eq_k2, suite_kato_equivalence, suite_kato_product, suite_peetre
from kato_sobolev.suites import suite_poisson, suite_product
from kato_sobolev.weights import weight_l1_norm

CFG = SuiteConfig(seed=1)


def _by_name(cases):
    return {c.name: c for c in cases}


def test_criterion_01_peetre_and_weight_l1(record):
    params, cases = suite_peetre(CFG)
    margin = _by_name(cases)["peetre-margin"].details["min_margin"]
    errors = {}
    for lam in (0.75, 1.0, 2.0, 5.0):
        exact = math.sqrt(math.pi) * math.exp(scipy.special.gammaln(lam - 0.5) - scipy.special.gammaln(lam))
        errors[lam] = abs(weight_l1_norm(lam, 1) / exact - 1)
    ok = params["samples"] >= 10_000 and margin >= -1e-12 and max(errors.values()) <= 1e-8
    record(1, ok, f"{params['samples']} triples, min margin {margin:.3g}; weight-l1 max rel err {max(errors.values()):.2g}")
    assert ok


def test_criterion_02_convolution_bounds(record):
    _, cases = suite_conv_bounds(CFG)
    conv = [c for c in cases if c.name.startswith("conv dims=")]
    worst_ratio = max(c.measured / c.details["constant"] for c in conv if c.measured is not None)
    worst_drift = max(c.details["refinement_drift"] for c in conv if "refinement_drift" in c.details)
    ok = len(conv) >= 10 and all(c.measured is not None for c in conv) and worst_ratio <= 1.05 and worst_drift <= 0.02
    record(2, ok, f"{len(conv)} configurations, max ratio/constant {worst_ratio:.4f}, max N->2N drift {worst_drift:.2g}")
    assert ok


def test_criterion_03_derivative_identity(record):
    rng = make_rng(3)
    grid = make_grid([1], [64], [2 * np.pi])
    worst = 0.0
    for _ in range(50):
        u = sample(bandlimited(rng, grid, kmax=8), grid)
        s = rng.uniform(-2, 3)
        lhs = h_norm(u, s) ** 2
        worst = max(worst, abs(lhs - h_norm(u, s - 1) ** 2 - h_norm(derivative(u, 0), s - 1) ** 2) / lhs)
    ok = worst <= 1e-9
    record(3, ok, f"50 fields, max relative defect {worst:.2g}")
    assert ok


def test_criterion_04_partition(record):
    worst_chi = worst_h = 0.0
    h_tilde_min = math.inf
    for n in (1, 2):
        grid = make_grid([1] * n, [256] * n, [2.0] * n)
        fam = build_partition(n, grid)
        worst_chi = max(worst_chi, float(np.max(np.abs(sum(c.values for c in fam.chi_i) - 1))))
        worst_h = max(worst_h, float(np.max(np.abs(lattice_sum(fam.h.field).values - 1))))
        h_tilde_min = min(h_tilde_min, float(fam.H_tilde.values.real.min()))
    ok = worst_chi <= 1e-12 and worst_h <= 1e-12 and h_tilde_min >= 1
    record(4, ok, f"sum chi err {worst_chi:.2g}, sum translates err {worst_h:.2g}, min H_tilde {h_tilde_min:.6f}")
    assert ok


def test_criterion_05_decomposition(record):
    _, cases = suite_decomposition(CFG)
    by = _by_name(cases)
    drifts = {s: by[f"decomposition s={s}"].measured for s in (0.0, 1.0, 1.7, -0.5)}
    single = max(by[f"one-member s={s}"].measured for s in (0.0, 1.0, -0.5))
    corpus = by["decomposition s=1.0"].details["corpus"]
    ok = corpus >= 20 and max(drifts.values()) <= 0.10 and single <= 1e-10
    record(5, ok, f"{corpus} families, worst band-width drift {max(drifts.values()):.3g}, one-member err {single:.2g}")
    assert ok


def test_criterion_06_periodization(record):
    _, cases = suite_poisson(CFG)
    spectra = [c for c in cases if c.name.startswith("poisson")]
    off = max(c.measured for c in spectra)
    plancherel = _by_name(cases)["plancherel-theta"].measured
    ok = off <= 1e-11 and plancherel <= 1e-9
    record(6, ok, f"{len(spectra)} spectra, max off-coset/peak {off:.2g}, theta-Plancherel err {plancherel:.2g}")
    assert ok


def test_criterion_07_retract(record):
    rng = make_rng(7)
    grid = make_grid([1], [512], [4.0])
    fam = build_partition(1, grid)
    chi = retract_window(fam)
    worst = 0.0
    for _ in range(20):
        u = sample(gaussian_packet(rng, 1, spread=1.0, width=(0.3, 0.8)), grid)
        back = retract_assemble(retract_split(u, fam.h), chi, fam.h)
        worst = max(worst, float(np.max(np.abs(back.values - u.values))) / u.sup())
    ok = worst <= 1e-11
    record(7, ok, f"20 fields, max relative round-trip error {worst:.2g}")
    assert ok


def test_criterion_08_h_equals_k2(record):
    _, cases = suite_h_eq_k2(CFG)
    by = _by_name(cases)
    bands = {s: by[f"h-eq-k2 s={s}"] for s in (0.0, 1.0, 2.0)}
    drift = max(c.measured for c in bands.values())
    corpus = bands[1.0].details["corpus"]
    two_sided = all(0 < c.details["min"] <= c.details["max"] < math.inf for c in bands.values())
    ok = corpus >= 30 and two_sided and drift <= 0.10
    spread = ", ".join(f"s={s}: [{c.details['min']:.4f}, {c.details['max']:.4f}]" for s, c in bands.items())
    record(8, ok, f"{corpus} fields, bands {spread}, worst refinement drift {drift:.2g}")
    assert ok


def test_criterion_09_window_equivalence_and_p_chain(record):
    _, cases = suite_kato_equivalence(CFG)
    bands = [c for c in cases if c.name.startswith(("window-equivalence", "lattice-vs-subgrid"))]
    drift = max(c.measured for c in bands)
    # independent recount of the p-chain in lattice mode on a fresh corpus
    grid = make_grid([1], [256], [16.0])
    window = tensor_window(grid, bump_profile(-0.75, -0.25, 0.25, 0.75))
    lattice = TranslationSet.lattice(grid, 1.0)
    rng = make_rng(9)
    violations = 0
    for _ in range(20):
        u = sample(gaussian_packet(rng, 1, spread=4.0, width=(0.25, 0.5)), grid)
        vals = [kato_norm(u, KatoNormSpec(1.0, p, window, lattice)) for p in (1, 1.5, 2, 3, 4, 8, math.inf)]
        violations += sum(b > a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    violations += int(_by_name(cases)["p-chain monotone"].measured)
    ok = all(c.passed for c in bands) and drift <= 0.10 and violations == 0
    record(9, ok, f"{len(bands)} window bands, worst drift {drift:.2g}; p-chain violations {violations}")
    assert ok


def test_criterion_10_products(record):
    _, plain = suite_product(CFG)
    _, kato = suite_kato_product(CFG)
    products = [c for c in plain if c.name.startswith("product")]
    kp = [c for c in kato if "refinement_drift" in c.details]
    drifts = [c.details["refinement_drift"] for c in products + kp if "refinement_drift" in c.details]
    has_sup_times_l2 = any(c.name.startswith("kato-product p=inf q=2.0") for c in kp)
    ok = has_sup_times_l2 and all(c.passed for c in products + kp) and max(drifts) <= 0.02
    record(10, ok, f"{len(products)} H^s and {len(kp)} Kato configurations incl. p=inf q=2, max drift {max(drifts):.2g}")
    assert ok


def test_criterion_11_mollifier_rate(record):
    grid = make_grid([1], [2048], [16.0])
    u = sample(lambda x: np.exp(-x * x), grid)
    summary, ok = [], True
    for s, sp in ((1.5, 0.5), (1.25, 0.75), (2.0, 0.5)):
        case = calc.mollifier_rate_check(u, s, sp)
        theta = min(s - sp, 1.0)
        good = case.details["violations"] == 0 and case.details["slope"] >= theta - 0.1 and len(case.details["eps"]) == 6
        ok = ok and good
        summary.append(f"({s},{sp}) slope {case.details['slope']:.3f}>={theta - 0.1:.2f}")
    record(11, ok, "; ".join(summary))
    assert ok


CALDERON_FIXTURES = [
    ("identity", [lambda x: 0.5 + 0.2 * np.sin(x)]),
    ("exp", [lambda x: 0.3 * np.sin(x)]),
    ("square", [lambda x: 0.4 * np.cos(x) + 0.1j * np.sin(2 * x)]),
    ("reciprocal", [lambda x: 2 + np.sin(x)]),
    ("product2", [lambda x: 0.2 + 0.1 * np.sin(x), lambda x: 0.3 + 0.1 * np.cos(x)]),
]


def test_criterion_12_calderon(record):
    grid = make_grid([1], [64], [2 * np.pi])
    worst64, halving = 0.0, True
    for name, fields in CALDERON_FIXTURES:
        phi = calc.builtin_map(name, rho=0.5)
        u = [sample(f, grid) for f in fields]
        exact = calc.pointwise(phi, u).values
        err = {q: float(np.max(np.abs(calc.calderon_apply(phi, u, nodes=q, certify=False).values - exact))) for q in (4, 8, 16, 32, 64, 128)}
        worst64 = max(worst64, err[64])
        qs = sorted(err)
        halving = halving and all(err[b] <= 0.5 * err[a] or err[a] <= 1e-10 for a, b in zip(qs, qs[1:]))
    inverse = 0.0
    for f, c in ((lambda x: 2 + np.sin(x), 1.0), (lambda x: 3 + np.cos(x) + 0.5 * np.sin(2 * x), 1.4)):
        u = sample(f, grid)
        inverse = max(inverse, float(np.max(np.abs(multiply(u, calc.invert(u, c)).values - 1))))
    ok = worst64 <= 1e-8 and halving and inverse <= 1e-8
    record(12, ok, f"Q=64 max error {worst64:.2g}, error halving {'holds' if halving else 'violated'}, u*(1/u)-1 {inverse:.2g}")
    assert ok


def test_criterion_13_chain_rule(record):
    _, cases = suite_chain_rule(CFG)
    chain = [c for c in cases if c.name.startswith("chain-rule")]
    worst = max(c.measured if c.measured is not None else math.inf for c in chain)
    ok = len(chain) >= 5 and worst <= 1e-6
    record(13, ok, f"{len(chain)} (map, field, order) triples, max residual {worst:.2g}")
    assert ok


def test_criterion_14_division(record):
    grid = make_grid([1], [1024], [8.0])
    box = ((-1.0, 1.0),)
    u = sample(lambda x: bump_profile(-1, -0.3, 0.3, 1)(x), grid)
    v = sample(lambda x: 2 + np.sin(np.pi * x / 4), grid)
    support = np.abs(grid.coords[0]) <= 1
    err = float(np.max(np.abs(multiply(calc.divide(u, v, 1.0, box), v).values - u.values)[support]))
    try:
        calc.divide(u, sample(lambda x: np.sin(np.pi * x / 4), grid), 0.5, box)
        raised = False
    except PreconditionError:
        raised = True
    ok = err <= 1e-8 and raised
    record(14, ok, f"bump/(2+sin) reconstruction error {err:.2g}; vanishing divisor rejected: {raised}")
    assert ok


def test_criterion_15_spectrum(record):
    grid = make_grid([1], [64], [2 * np.pi])
    u = sample(lambda x: 2 + np.sin(x), grid)
    outside = calc.spectrum_member(u, 0.0)
    members = [calc.spectrum_member(u, complex(u.values[k])).member for k in range(0, 64, 7)]
    ok = not outside.member and outside.residual <= 1e-8 and all(members)
    record(15, ok, f"lambda=0 Bezout residual {outside.residual:.2g}; {sum(members)}/{len(members)} sampled values are members")
    assert ok


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "kato_sobolev", *args], capture_output=True, text=True)


def test_criterion_16_cli_contract(record, tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / f"report{k}.json"
        assert _cli("verify", "peetre", "--seed", "5", "--size", "600", "--out", str(out)).returncode == 0
        raw = out.read_bytes()
        assert json.loads(raw)["meta"]["wall_time"] >= 0
        texts.append(re.sub(rb'"wall_time": [0-9.eE+-]+', b'"wall_time": _', raw))
    identical = texts[0] == texts[1]
    codes = (
        _cli("norm", str(tmp_path / "missing.ksf"), "--s", "1").returncode,
        _cli("verify", "no-such-suite").returncode,
        _cli("verify", "calderon", "--quadrature-nodes", "4", "--out", str(tmp_path / "q4.json")).returncode,
    )
    ok = identical and codes == (2, 3, 4)
    record(16, ok, f"byte-identical reports: {identical}; exit codes (missing file, unknown suite, Q=4) = {codes}")
    assert ok
