import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kato_sobolev.errors import FieldFormatError, GridError
from kato_sobolev.grid import (
    FREQ,
    MAGIC,
    SPACE,
    SampledField,
    constant,
    dft_forward,
    dft_inverse,
    fft_workers,
    field_read,
    field_write,
    make_grid,
    sample,
    samples_per_unit,
    translate,
    zeros,
)

TWO_PI = 2 * np.pi


def test_one_dimensional_torus():
    g = make_grid([1], [64], [TWO_PI])
    assert g.n == 1 and g.shape == (64,) and g.box == (TWO_PI,)
    x = g.axis_coords(0)
    assert x[0] == pytest.approx(-np.pi) and x[1] - x[0] == pytest.approx(TWO_PI / 64)


def test_two_blocks_vs_one_block():
    two = make_grid([1, 1], [32, 32], [10, 10])
    one = make_grid([2], [32, 32], [10, 10])
    assert two.shape == one.shape == (32, 32)
    assert two.block_axes() == [(0,), (1,)]
    assert one.block_axes() == [(0, 1)]


@pytest.mark.parametrize(
    "blocks, samples, box",
    [([1], [63], [1.0]), ([1], [2], [1.0]), ([1], [64], [0.0]), ([2], [32], [1.0]), ([1, 1, 1, 1], [4] * 4, [1] * 4)],
)
def test_invalid_grids(blocks, samples, box):
    with pytest.raises(GridError):
        make_grid(blocks, samples, box)


def test_zero_and_plane_wave_samples():
    g = make_grid([1], [64], [TWO_PI])
    assert np.all(sample(lambda x: 0 * x, g).values == 0)
    x = g.axis_coords(0)
    assert np.allclose(sample(lambda x: np.exp(1j * x), g).values, np.exp(1j * x), atol=0)


def test_gaussian_boundary_decay():
    g = make_grid([1], [256], [40.0])
    u = sample(lambda x: np.exp(-x * x), g)
    # exp(-400) at the edge, far below double precision relative to the peak
    assert abs(u.values[0]) < 1e-15


def test_constant_transform_is_point_mass():
    g = make_grid([1], [64], [TWO_PI])
    uhat = dft_forward(constant(g, 1.0))
    assert uhat.domain == FREQ
    assert uhat.values[0] == pytest.approx(TWO_PI, rel=1e-13)
    assert np.max(np.abs(uhat.values[1:])) < 1e-12


def test_plane_wave_transform_single_bin():
    g = make_grid([1], [64], [TWO_PI])
    uhat = dft_forward(sample(lambda x: np.exp(1j * x), g)).values
    xi = g.axis_freqs(0)
    k = int(np.argmax(np.abs(uhat)))
    assert xi[k] == pytest.approx(1.0)
    assert uhat[k] == pytest.approx(TWO_PI, rel=1e-13)
    assert np.max(np.abs(np.delete(uhat, k))) < 1e-12


def test_transform_convention_off_centre_box():
    # exp(-x^2/2) has transform sqrt(2 pi) exp(-xi^2/2) under u_hat(xi) = int e^{-i x xi} u(x) dx
    g = make_grid([1], [128], [24.0])
    uhat = dft_forward(sample(lambda x: np.exp(-x * x / 2), g)).values
    xi = g.axis_freqs(0)
    assert np.max(np.abs(uhat - math.sqrt(TWO_PI) * np.exp(-xi * xi / 2))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(
    arrays(np.complex128, (16, 8), elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)),
    st.floats(0.5, 20),
)
def test_round_trip_and_parseval(vals, L):
    g = make_grid([1, 1], [16, 8], [L, 2 * L])
    u = SampledField(g, SPACE, vals)
    uhat = dft_forward(u)
    assert np.allclose(dft_inverse(uhat).values, vals, atol=1e-12 * (1 + np.abs(vals).max()))
    lhs = np.sum(np.abs(vals) ** 2) * g.cell_volume
    rhs = np.sum(np.abs(uhat.values) ** 2) * g.freq_cell_volume / TWO_PI**2
    assert rhs == pytest.approx(lhs, rel=1e-10, abs=1e-20)


def test_domain_tags_enforced():
    g = make_grid([1], [16], [1.0])
    u = constant(g, 1.0)
    with pytest.raises(GridError, match="wrong domain_tag"):
        dft_inverse(u)
    with pytest.raises(GridError, match="wrong domain_tag"):
        u + dft_forward(u)


def test_translate_identities():
    g = make_grid([1, 1], [16, 8], [1.0, 1.0])
    rng = np.random.default_rng(0)
    u = SampledField(g, SPACE, rng.normal(size=(16, 8)))
    assert np.array_equal(translate(u, 0).values, u.values)
    assert np.array_equal(translate(u, (16, 8)).values, u.values)
    assert np.array_equal(translate(translate(u, (3, -5)), (-3, 5)).values, u.values)


def test_samples_per_unit():
    assert samples_per_unit(make_grid([1], [64], [4.0])) == (16,)
    with pytest.raises(GridError):
        samples_per_unit(make_grid([1], [64], [TWO_PI]))
    with pytest.raises(GridError):
        samples_per_unit(make_grid([1], [64], [3.0]))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(4,), (8, 6), (4, 4, 6)]), st.integers(0, 2**32 - 1), st.sampled_from([SPACE, FREQ]))
def test_file_round_trip_bitwise(tmp_path_factory, shape, seed, domain):
    rng = np.random.default_rng(seed)
    g = make_grid([1] * len(shape), list(shape), [1.5] * len(shape))
    u = SampledField(g, domain, rng.normal(size=shape) + 1j * rng.normal(size=shape))
    path = tmp_path_factory.mktemp("ksf") / "u.ksf"
    field_write(u, path)
    back = field_read(path)
    assert back.grid == g and back.domain == domain
    assert back.values.tobytes() == u.values.tobytes()


def _header(blocks=(1,), shape=(8,), box=(1.0,), domain=SPACE) -> bytes:
    import json

    h = json.dumps({"blocks": list(blocks), "shape": list(shape), "box": list(box), "domain": domain}).encode()
    return MAGIC + struct.pack("<I", len(h)) + h


def test_file_errors(tmp_path):
    p = tmp_path / "f.ksf"
    p.write_bytes(_header())
    with pytest.raises(FieldFormatError, match="truncated payload"):
        field_read(p)
    p.write_bytes(b"NOPE" + _header()[4:] + bytes(128))
    with pytest.raises(FieldFormatError, match="magic mismatch"):
        field_read(p)
    p.write_bytes(_header(shape=(7,)) + bytes(112))
    with pytest.raises(FieldFormatError, match="malformed header"):
        field_read(p)
    p.write_bytes(MAGIC + struct.pack("<I", 5) + b"{bad}")
    with pytest.raises(FieldFormatError, match="malformed header"):
        field_read(p)


def test_field_arithmetic():
    g = make_grid([1], [8], [1.0])
    u = constant(g, 2.0)
    assert np.all((u * u).values == 4) and np.all((u - u).values == 0) and np.all((u / 2).values == 1)
    assert u.sup() == 2 and zeros(g).l2_norm() == 0
    with pytest.raises(GridError, match="grid mismatch"):
        u + constant(make_grid([1], [8], [2.0]), 1.0)
    with pytest.raises(ValueError):
        u.values[0] = 1


def test_fft_workers(monkeypatch):
    monkeypatch.setenv("KS_THREADS", "3")
    assert fft_workers() == 3
    monkeypatch.setenv("KS_THREADS", "junk")
    assert fft_workers() == 1
    monkeypatch.delenv("KS_THREADS")
    assert fft_workers() == 1
