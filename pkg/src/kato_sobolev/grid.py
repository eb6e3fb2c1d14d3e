"""Torus grids, sampled fields, Fourier conventions, translations and KSF1 I/O.

A grid discretizes the torus ``prod_i [-L_i/2, L_i/2)`` with ``N_i`` samples per
axis.  The continuous transform ``u_hat(xi) = int exp(-i<x, xi>) u(x) dx`` is
approximated by a rectangle rule, so that

    ||u||_{L^2}^2 = (2 pi)^{-n} * sum_k |u_hat_k|^2 * prod_i (2 pi / L_i)

holds exactly on the grid.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.fft

from .errors import FieldFormatError, GridError

SPACE = "space"
FREQ = "freq"

MAGIC = b"KSF1"


def fft_workers() -> int:
    """Worker count for FFTs, capped by the ``KS_THREADS`` environment variable."""
    raw = os.environ.get("KS_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        return 1
    return max(1, cap)


@dataclass(frozen=True)
class GridSpec:
    block_dims: tuple[int, ...]
    samples: tuple[int, ...]
    box: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.samples

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.box, self.samples))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def freq_cell_volume(self) -> float:
        return float(np.prod([2 * np.pi / L for L in self.box]))

    def block_axes(self) -> list[tuple[int, ...]]:
        """Axis indices belonging to each block, in order."""
        out, start = [], 0
        for d in self.block_dims:
            out.append(tuple(range(start, start + d)))
            start += d
        return out

    def axis_coords(self, axis: int) -> np.ndarray:
        L, N = self.box[axis], self.samples[axis]
        return -L / 2 + np.arange(N) * (L / N)

    def axis_freqs(self, axis: int) -> np.ndarray:
        L, N = self.box[axis], self.samples[axis]
        return 2 * np.pi * np.fft.fftfreq(N, d=L / N)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays (one per axis)."""
        return _broadcast_axes([self.axis_coords(a) for a in range(self.n)])

    @cached_property
    def freqs(self) -> tuple[np.ndarray, ...]:
        """Broadcastable angular frequency arrays (one per axis)."""
        return _broadcast_axes([self.axis_freqs(a) for a in range(self.n)])

    def refined(self, factor: int = 2) -> "GridSpec":
        return make_grid(self.block_dims, [N * factor for N in self.samples], self.box)

    def to_dict(self) -> dict:
        return {"blocks": list(self.block_dims), "shape": list(self.samples), "box": list(self.box)}


def _broadcast_axes(arrays: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    n = len(arrays)
    out = []
    for a, arr in enumerate(arrays):
        shape = [1] * n
        shape[a] = arr.size
        out.append(arr.reshape(shape))
    return tuple(out)


def make_grid(block_dims, samples, box) -> GridSpec:
    block_dims = tuple(int(d) for d in block_dims)
    samples = tuple(int(N) for N in samples)
    box = tuple(float(L) for L in box)
    if any(d <= 0 for d in block_dims):
        raise GridError("dimension mismatch: block dimensions must be positive")
    if not (sum(block_dims) == len(samples) == len(box)):
        raise GridError(
            f"dimension mismatch: blocks {block_dims} vs samples {samples} vs box {box}"
        )
    if len(samples) > 3:
        raise GridError("dimension mismatch: at most 3 axes are supported")
    for N in samples:
        if N < 4 or N % 2:
            raise GridError(f"odd or tiny N: {N}")
    for L in box:
        if not (L > 0 and np.isfinite(L)):
            raise GridError(f"nonpositive L: {L}")
    return GridSpec(block_dims, samples, box)


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex samples on a grid, tagged as living in space or frequency.

    Arithmetic (``+``, ``-``, scalar ``*``) acts on samples.  ``u * v`` for two
    fields is the sample-wise product; use :func:`kato_sobolev.sobolev.multiply`
    for the de-aliased product.
    """

    grid: GridSpec
    domain: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.domain not in (SPACE, FREQ):
            raise GridError(f"unknown domain tag {self.domain!r}")
        vals = np.array(self.values, dtype=np.complex128, copy=True)
        if vals.shape != self.grid.shape:
            raise GridError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def _like(self, values) -> "SampledField":
        return SampledField(self.grid, self.domain, values)

    def _check(self, other: "SampledField"):
        if other.grid != self.grid:
            raise GridError("grid mismatch")
        if other.domain != self.domain:
            raise GridError("wrong domain_tag: operands live in different domains")

    def __add__(self, other):
        if isinstance(other, SampledField):
            self._check(other)
            return self._like(self.values + other.values)
        return self._like(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SampledField):
            self._check(other)
            return self._like(self.values - other.values)
        return self._like(self.values - other)

    def __rsub__(self, other):
        return self._like(other - self.values)

    def __neg__(self):
        return self._like(-self.values)

    def __mul__(self, other):
        if isinstance(other, SampledField):
            self._check(other)
            return self._like(self.values * other.values)
        return self._like(self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._like(self.values / scalar)

    def conj(self) -> "SampledField":
        return self._like(np.conj(self.values))

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        """Rectangle-rule L^2 norm of a space-domain field."""
        require_domain(self, SPACE)
        return float(np.sqrt(self.grid.cell_volume * np.sum(np.abs(self.values) ** 2)))


def require_domain(u: SampledField, domain: str):
    if u.domain != domain:
        raise GridError(f"wrong domain_tag: expected {domain}, got {u.domain}")


def require_same_grid(*fields: SampledField):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridError("grid mismatch")


def sample(f: Callable[..., np.ndarray], grid: GridSpec) -> SampledField:
    """Evaluate ``f(x_1, ..., x_n)`` on broadcastable coordinate arrays."""
    vals = np.broadcast_to(np.asarray(f(*grid.coords), dtype=np.complex128), grid.shape)
    return SampledField(grid, SPACE, vals)


def zeros(grid: GridSpec) -> SampledField:
    return SampledField(grid, SPACE, np.zeros(grid.shape))


def constant(grid: GridSpec, c: complex) -> SampledField:
    return SampledField(grid, SPACE, np.full(grid.shape, c, dtype=np.complex128))


def _phase(grid: GridSpec) -> np.ndarray:
    # x_0 = -L/2 contributes exp(i xi L / 2) = (-1)^m on bin m.
    out = np.ones(grid.shape)
    for a in range(grid.n):
        m = np.fft.fftfreq(grid.samples[a], d=1.0 / grid.samples[a]).astype(int)
        shape = [1] * grid.n
        shape[a] = -1
        out = out * np.where(m % 2 == 0, 1.0, -1.0).reshape(shape)
    return out


def dft_forward(u: SampledField) -> SampledField:
    require_domain(u, SPACE)
    g = u.grid
    raw = scipy.fft.fftn(u.values, workers=fft_workers())
    return SampledField(g, FREQ, g.cell_volume * _phase(g) * raw)


def dft_inverse(uhat: SampledField) -> SampledField:
    require_domain(uhat, FREQ)
    g = uhat.grid
    raw = scipy.fft.ifftn(_phase(g) * uhat.values, workers=fft_workers())
    return SampledField(g, SPACE, raw / g.cell_volume)


def apply_symbol(u: SampledField, symbol: np.ndarray) -> SampledField:
    """Fourier multiplier: inverse transform of ``symbol * u_hat``."""
    require_domain(u, SPACE)
    g = u.grid
    spec = scipy.fft.fftn(u.values, workers=fft_workers())
    return SampledField(g, SPACE, scipy.fft.ifftn(symbol * spec, workers=fft_workers()))


def translate(u: SampledField, shift) -> SampledField:
    """``tau_y u = u(. - y)`` for ``y`` an integer number of samples per axis."""
    require_domain(u, SPACE)
    shift = tuple(int(k) for k in np.broadcast_to(shift, (u.grid.n,)))
    return SampledField(u.grid, SPACE, np.roll(u.values, shift, axis=tuple(range(u.grid.n))))


def samples_per_unit(grid: GridSpec) -> tuple[int, ...]:
    """Samples per unit length on each axis; requires integer box and commensurate N."""
    out = []
    for L, N in zip(grid.box, grid.samples):
        if abs(L - round(L)) > 1e-12 or round(L) < 1:
            raise GridError(f"non-integer box length {L}")
        q = N / round(L)
        if abs(q - round(q)) > 1e-12:
            raise GridError(f"samples {N} not a multiple of box length {L}")
        out.append(int(round(q)))
    return tuple(out)


def field_write(u: SampledField, path) -> None:
    header = dict(u.grid.to_dict(), domain=u.domain)
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(u.values, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(hbytes)))
        fh.write(hbytes)
        fh.write(payload)


def field_read(path) -> SampledField:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise FieldFormatError("magic mismatch")
    if len(data) < 8:
        raise FieldFormatError("malformed header: missing length")
    (hlen,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + hlen:
        raise FieldFormatError("malformed header: truncated header")
    try:
        header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
        grid = make_grid(header["blocks"], header["shape"], header["box"])
        domain = header["domain"]
        if domain not in (SPACE, FREQ):
            raise ValueError(domain)
    except (ValueError, KeyError, TypeError, UnicodeDecodeError, GridError) as exc:
        raise FieldFormatError(f"malformed header: {exc}") from None
    payload = data[8 + hlen :]
    expected = 16 * int(np.prod(grid.shape))
    if len(payload) < expected:
        raise FieldFormatError("truncated payload")
    if len(payload) > expected:
        raise FieldFormatError("malformed header: trailing bytes after payload")
    vals = np.frombuffer(payload, dtype="<c16").reshape(grid.shape)
    return SampledField(grid, domain, vals)
