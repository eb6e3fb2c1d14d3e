import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from kato_sobolev import calculus as calc
from kato_sobolev.corpus import make_rng
from kato_sobolev.errors import ConvergenceError, IndeterminateError, PreconditionError
from kato_sobolev.grid import SPACE, SampledField, constant, make_grid, sample
from kato_sobolev.kato import TranslationSet
from kato_sobolev.partition import bump_profile, tensor_window
from kato_sobolev.sobolev import h_norm, multiply

TORUS = make_grid([1], [64], [2 * np.pi])
LINE = make_grid([1], [2048], [16.0])


def test_standard_profile():
    r = np.array([0.0, 0.5, 1.0, 2.0])
    assert np.allclose(calc.standard_profile(r), [math.exp(-1), math.exp(-1 / 0.75), 0, 0])


def test_mollifier_kernel_has_unit_mass_and_radius():
    g = make_grid([1], [256], [16.0])
    k = calc.Mollifier(0.5).kernel(g)
    assert k.sum() == pytest.approx(1.0)
    offsets = np.abs(np.fft.fftfreq(256, d=1 / 256) * 16 / 256)
    assert np.all(k[offsets >= 0.5] == 0)


def test_mollify_constant_and_plane_wave():
    g = make_grid([1], [256], [16.0])
    one = calc.mollify(constant(g, 3.0), 0.5)
    assert np.allclose(one.values, 3.0, atol=1e-12)
    wave = sample(lambda x: np.exp(1j * np.pi * x / 2), g)
    out = calc.mollify(wave, 0.5)
    factor = out.values / wave.values
    assert np.allclose(factor, factor[0], atol=1e-12)
    # direct quadrature of the bump's Fourier transform at the same frequency
    y = np.linspace(-0.5, 0.5, 20001)
    prof = calc.standard_profile(np.abs(y) / 0.5)
    expect = scipy.integrate.trapezoid(prof * np.cos(np.pi * y / 2), y) / scipy.integrate.trapezoid(prof, y)
    assert factor[0].real == pytest.approx(expect, abs=1e-4)


def test_mollify_converges_in_l2():
    u = sample(lambda x: np.exp(-x * x), LINE)
    errs = [h_norm(calc.mollify(u, 2.0**-k) - u, 0) for k in range(1, 6)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


def test_mollify_rejects_unresolved_eps():
    with pytest.raises(PreconditionError, match="unresolved eps"):
        calc.mollify(constant(LINE, 1.0), 0.01)


@pytest.mark.parametrize("s,sp", [(1.5, 0.5), (1.25, 0.75), (1.0, 1.0)])
def test_mollifier_rate(s, sp):
    case = calc.mollifier_rate_check(sample(lambda x: np.exp(-x * x), LINE), s, sp)
    assert case.passed
    assert case.details["slope"] >= min(s - sp, 1) - 0.1


def test_mollifier_rate_rejects_order_inversion():
    with pytest.raises(PreconditionError):
        calc.mollifier_rate_check(constant(LINE, 1.0), 0.5, 1.0)


def test_convolve_with_gaussian_matches_closed_form():
    g = make_grid([1], [512], [32.0])
    phi = sample(lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi), g)
    u = sample(lambda x: np.exp(-x * x / 2), g)
    # the convolution of two Gaussians of variance 1 is a Gaussian of variance 2
    expect = sample(lambda x: np.exp(-x * x / 4) / math.sqrt(2), g)
    assert np.allclose(calc.convolve(phi, u).values, expect.values, atol=1e-12)


def test_conv_contraction():
    g = make_grid([1], [512], [16.0])
    win = tensor_window(g, bump_profile(-0.75, -0.25, 0.25, 0.75))
    phi = SampledField(g, SPACE, np.fft.fftshift(calc.Mollifier(0.5).kernel(g)) / g.cell_volume)
    u = sample(lambda x: np.exp(-x * x) * np.cos(3 * x), g)
    case = calc.conv_contraction_check(phi, u, 1.0, win, TranslationSet.subgrid(g, 4))
    assert case.passed and case.details["phi_l1"] == pytest.approx(1.0)


def test_domain_distances():
    z = np.array([[2.0, 0.5j, -3.0]])
    assert np.allclose(calc.disc_exterior(1.0)(z), [1.0, 0.0, 2.0])
    assert np.allclose(calc.half_plane(0.0)(z), [2.0, 0.0, 0.0])
    assert np.allclose(calc.annulus(1.0, 4.0)(z), [1.0, 0.0, 1.0])
    assert np.allclose(calc.entire()(z), calc.ENTIRE_DISTANCE)
    pair = np.array([[0.1, 0.5], [0.2, 0.0]])
    assert np.allclose(calc.polydisc([1.0, 1.0])(pair), [0.8, 0.5])
    prod = calc.product_domain(calc.disc_exterior(0.0), calc.half_plane(0.0))
    assert np.allclose(prod(np.array([[2.0], [0.5]])), [0.5])


def test_range_radius_examples():
    assert calc.range_radius(constant(TORUS, 2.0), calc.disc_exterior(1.0)) == pytest.approx(1 / 8)
    assert calc.range_radius(sample(lambda x: 2 + np.sin(x), TORUS), calc.disc_exterior(0.5)) == pytest.approx(1 / 16)
    with pytest.raises(PreconditionError, match="escapes"):
        calc.range_radius(sample(np.sin, TORUS), calc.disc_exterior(0.5))


def test_companion_of_constant_is_itself():
    u = constant(TORUS, 2.0)
    (v,), eps = calc.choose_companion(u, 0.1)
    assert eps == 1.0 and np.allclose(v.values, 2.0)
    with pytest.raises(PreconditionError):
        calc.choose_companion(u, 0.0)


def test_contour_validation():
    with pytest.raises(PreconditionError):
        calc.PolydiscContour(0.0, 8, 1)
    with pytest.raises(PreconditionError):
        calc.PolydiscContour(1.0, 1, 1)


@pytest.mark.parametrize(
    "name,fields",
    [
        ("identity", [lambda x: 0.5 + 0.2 * np.sin(x)]),
        ("exp", [lambda x: 0.3 * np.sin(x)]),
        ("square", [lambda x: 0.4 * np.cos(x) + 0.1j * np.sin(2 * x)]),
        ("reciprocal", [lambda x: 2 + np.sin(x)]),
        ("product2", [lambda x: 0.2 + 0.1 * np.sin(x), lambda x: 0.3 + 0.1 * np.cos(x)]),
    ],
)
def test_calderon_matches_pointwise(name, fields):
    phi = calc.builtin_map(name, rho=0.5)
    u = [sample(f, TORUS) for f in fields]
    h = calc.calderon_apply(phi, u, nodes=64)
    assert np.max(np.abs(h.values - calc.pointwise(phi, u).values)) <= 1e-8


def test_calderon_too_few_nodes():
    u = sample(lambda x: 2 + np.sin(x), TORUS)
    with pytest.raises(ConvergenceError, match="Q too small"):
        calc.calderon_apply(calc.builtin_map("reciprocal", rho=0.5), u, nodes=4)


def test_calderon_arity_and_unknown_map():
    with pytest.raises(PreconditionError):
        calc.calderon_apply(calc.builtin_map("product2"), [constant(TORUS, 0.1)])
    with pytest.raises(PreconditionError, match="unknown map"):
        calc.builtin_map("log")


def test_builtin_gradients():
    rng = make_rng(3)
    for name in calc.BUILTIN_MAPS:
        assert calc.builtin_map(name, rho=0.5).grad_error(rng) <= 1e-6
    with pytest.raises(PreconditionError, match="missing grad"):
        calc.HoloMap(1, np.sin, calc.entire()).partial(0)


@settings(max_examples=20, deadline=None)
@given(st.floats(1.2, 4.0), st.floats(0.0, 0.9), st.integers(1, 3))
def test_invert_random_trig(offset, amp, k):
    u = sample(lambda x: offset + amp * np.cos(k * x), TORUS)
    inv = calc.invert(u, offset - amp)
    assert np.max(np.abs(inv.values - 1 / u.values)) <= 1e-8


def test_invert_rejects_zeros():
    with pytest.raises(PreconditionError, match="lower bound"):
        calc.invert(sample(np.sin, TORUS), 0.1)


def test_spectrum():
    u = sample(lambda x: 2 + np.sin(x), TORUS)
    out = calc.spectrum_member(u, 0.0)
    assert not out.member and out.residual <= 1e-8
    assert out.distance == pytest.approx(1.0)
    assert calc.spectrum_member(u, complex(u.values[7])).member
    with pytest.raises(IndeterminateError):
        calc.spectrum_member(u, 1.0 - 3 * calc.sample_range_tolerance([u]))
    with pytest.raises(PreconditionError, match="dimension"):
        calc.spectrum_member(u, (0.0, 0.0))


def test_joint_spectrum_witnesses():
    pair = [sample(np.sin, TORUS), sample(np.cos, TORUS)]
    out = calc.spectrum_member(pair, (2.0, 2.0))
    assert not out.member and len(out.witnesses) == 2 and out.residual <= 1e-8


@pytest.mark.parametrize("name,f,s,sp", [("exp", lambda x: 0.3 * np.sin(x), 2.0, 1.5), ("reciprocal", lambda x: 2 + np.sin(x), 2.0, 1.5)])
def test_chain_rule(name, f, s, sp):
    assert calc.chain_rule_check(calc.builtin_map(name, rho=0.5), sample(f, TORUS), s, sp).passed


def test_chain_rule_order_preconditions():
    u = sample(lambda x: 0.3 * np.sin(x), TORUS)
    with pytest.raises(PreconditionError, match="need s >"):
        calc.chain_rule_check(calc.builtin_map("exp"), u, 0.5, 0.4)
    with pytest.raises(PreconditionError, match="s'"):
        calc.chain_rule_check(calc.builtin_map("exp"), u, 2.0, 0.6)


def test_divide():
    g = make_grid([1], [1024], [8.0])
    u = sample(lambda x: bump_profile(-1, -0.3, 0.3, 1)(x), g)
    v = sample(lambda x: 2 + np.sin(np.pi * x / 4), g)
    q = calc.divide(u, v, 1.0, ((-1.0, 1.0),))
    assert np.max(np.abs(multiply(q, v).values - u.values)) <= 1e-8
    assert np.max(np.abs(q.values - u.values / v.values)) <= 1e-8
    with pytest.raises(PreconditionError, match="dips below"):
        calc.divide(u, sample(lambda x: np.sin(np.pi * x / 4), g), 0.5, ((-1.0, 1.0),))
    with pytest.raises(PreconditionError, match="vanish"):
        calc.divide(u, v, 1.0, ((-0.5, 0.5),))


def test_kp_composition():
    g = make_grid([1], [256], [16.0])
    win = tensor_window(g, bump_profile(-0.75, -0.25, 0.25, 0.75))
    ts = TranslationSet.lattice(g, 0.5)
    u = sample(lambda x: 0.4 * bump_profile(-3, -1, 1, 3)(x) * np.cos(x), g)
    ident = calc.kp_composition_check(calc.builtin_map("identity"), u, 2.0, 1.0, win, ts)
    assert ident.passed and ident.measured == pytest.approx(1.0, abs=1e-8)
    assert calc.kp_composition_check(calc.builtin_map("square"), u, 1.0, 1.0, win, ts).passed
    with pytest.raises(PreconditionError, match="Phi\\(0\\)"):
        calc.kp_composition_check(calc.builtin_map("exp"), u, 2.0, 1.0, win, ts)
