"""Bessel potentials, H^s norms, derivatives, modulation and products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import GridError, PreconditionError
from .grid import (
    SPACE,
    GridSpec,
    SampledField,
    apply_symbol,
    dft_forward,
    fft_workers,
    require_domain,
    require_same_grid,
)
from .report import Case
from .weights import (
    BlockOrder,
    as_order,
    conv_bound_constant_blocks,
    multi_bracket,
    sigma_eps,
    weight_l1_norm,
    weight_symbol,
)


@dataclass(frozen=True, eq=False)
class MultiplierOp:
    grid: GridSpec
    symbol: np.ndarray

    def __post_init__(self):
        if self.symbol.shape != self.grid.shape:
            raise GridError("symbol shape does not match grid")

    def apply(self, u: SampledField) -> SampledField:
        if u.grid != self.grid:
            raise GridError("grid mismatch")
        return apply_symbol(u, self.symbol)


def bessel_symbol(grid: GridSpec, s) -> np.ndarray:
    s = as_order(s, grid.block_dims)
    return np.broadcast_to(weight_symbol(grid.freqs, s), grid.shape)


def bessel_op(grid: GridSpec, s) -> MultiplierOp:
    return MultiplierOp(grid, bessel_symbol(grid, s).astype(np.complex128))


def bessel_apply(u: SampledField, s) -> SampledField:
    """``<<D>>^s u``."""
    return bessel_op(u.grid, s).apply(u)


def _norm_from_spectrum(grid: GridSpec, spectrum_abs: np.ndarray, s) -> float:
    axes = tuple(range(-grid.n, 0))
    weighted = bessel_symbol(grid, s) * spectrum_abs
    # rescale before squaring so tiny or huge fields neither underflow nor overflow
    top = np.max(weighted, axis=axes, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    total = np.sum((weighted / safe) ** 2, axis=axes)
    return np.squeeze(safe, axis=axes) * np.sqrt(total * grid.freq_cell_volume / (2 * np.pi) ** grid.n)


def h_norm(u: SampledField, s) -> float:
    """``||<<D>>^s u||_{L^2}`` evaluated by Parseval on the frequency grid."""
    require_domain(u, SPACE)
    uhat = dft_forward(u).values
    return float(_norm_from_spectrum(u.grid, np.abs(uhat), s))


def h_norms_batch(values: np.ndarray, grid: GridSpec, s) -> np.ndarray:
    """H^s norms of a stack of space-domain sample arrays (leading batch axes)."""
    axes = tuple(range(-grid.n, 0))
    raw = scipy.fft.fftn(values, axes=axes, workers=fft_workers())
    return _norm_from_spectrum(grid, np.abs(raw) * grid.cell_volume, s)


def derivative(u: SampledField, axis: int) -> SampledField:
    """``d u / d x_axis`` with symbol ``i xi_axis``."""
    require_domain(u, SPACE)
    if not 0 <= axis < u.grid.n:
        raise GridError(f"axis out of range: {axis}")
    symbol = np.broadcast_to(1j * u.grid.freqs[axis], u.grid.shape)
    return apply_symbol(u, symbol)


def lattice_index(grid: GridSpec, eta) -> tuple[int, ...]:
    """Integer bin offsets of a frequency on the grid lattice, or raise."""
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (grid.n,))
    m = eta * np.asarray(grid.box) / (2 * np.pi)
    k = np.round(m)
    if np.any(np.abs(m - k) > 1e-9):
        raise PreconditionError(f"off-lattice frequency {eta.tolist()}")
    return tuple(int(v) for v in k)


def modulate(u: SampledField, eta) -> SampledField:
    """``exp(i <x, eta>) u`` for ``eta`` on the frequency lattice."""
    require_domain(u, SPACE)
    lattice_index(u.grid, eta)
    phase = sum(e * x for e, x in zip(np.broadcast_to(eta, (u.grid.n,)), u.grid.coords))
    return SampledField(u.grid, SPACE, u.values * np.exp(1j * phase))


def modulation_bound(eta, s: BlockOrder) -> float:
    """``2^{|s|_1/2} <<eta>>^{|s|}``."""
    return float(2.0 ** (s.l1 / 2) * multi_bracket(np.asarray(eta, dtype=float), s.abs()))


def _pad_axis(F: np.ndarray, axis: int, M: int) -> np.ndarray:
    N = F.shape[axis]
    h = N // 2
    shape = list(F.shape)
    shape[axis] = M
    out = np.zeros(shape, dtype=F.dtype)

    def sl(obj, a, b):
        idx = [slice(None)] * obj.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    out[sl(out, 0, h)] = F[sl(F, 0, h)]
    out[sl(out, M - h + 1, M)] = F[sl(F, h + 1, N)]
    nyq = F[sl(F, h, h + 1)] / 2
    out[sl(out, h, h + 1)] += nyq
    out[sl(out, M - h, M - h + 1)] += nyq
    return out


def _truncate_axis(G: np.ndarray, axis: int, N: int) -> np.ndarray:
    M = G.shape[axis]
    h = N // 2

    def take(a, b):
        idx = [slice(None)] * G.ndim
        idx[axis] = slice(a, b)
        return G[tuple(idx)]

    return np.concatenate(
        [take(0, h), take(h, h + 1) + take(M - h, M - h + 1), take(M - h + 1, M)], axis=axis
    )


def multiply(u: SampledField, v: SampledField) -> SampledField:
    """Product ``u v`` evaluated on a 2x zero-padded grid, projected back to the grid modes."""
    require_domain(u, SPACE)
    require_domain(v, SPACE)
    require_same_grid(u, v)
    g = u.grid
    w = fft_workers()
    U = scipy.fft.fftn(u.values, workers=w)
    V = scipy.fft.fftn(v.values, workers=w)
    for a, N in enumerate(g.samples):
        U = _pad_axis(U, a, 2 * N)
        V = _pad_axis(V, a, 2 * N)
    scale = 2.0**g.n
    prod = scipy.fft.ifftn(U, workers=w) * scipy.fft.ifftn(V, workers=w) * scale * scale
    W = scipy.fft.fftn(prod, workers=w)
    for a, N in enumerate(g.samples):
        W = _truncate_axis(W, a, N)
    return SampledField(g, SPACE, scipy.fft.ifftn(W, workers=w) / scale)


def product_inequality_check(u: SampledField, v: SampledField, s, t, eps=None, slack=0.05, name=None):
    """Measured ``||uv||_{H^sigma} / (||u||_{H^s} ||v||_{H^t})`` against the explicit constant."""
    g = u.grid
    spec = sigma_eps(s, t, eps, g.block_dims)
    constant = np.sqrt(conv_bound_constant_blocks(spec)) * (2 * np.pi) ** (-g.n / 2)
    denom = h_norm(u, spec.s) * h_norm(v, spec.t)
    num = h_norm(multiply(u, v), spec.sigma)
    ratio = num / denom if denom > 0 else 0.0
    limit = constant * (1 + slack)
    return Case(
        name=name or f"product s={list(spec.s.orders)} t={list(spec.t.orders)}",
        status="pass" if ratio <= limit else "fail",
        measured=ratio,
        bound=limit,
        details={"sigma": list(spec.sigma.orders), "eps": list(spec.eps), "constant": constant},
    )


def periodic_multiplier_bound(coeffs: dict, s) -> float:
    """``2^{|s|_1/2} sum_gamma <2 pi gamma>^{|s|_1} |c_gamma|``."""
    l1 = s.l1 if isinstance(s, BlockOrder) else abs(float(s))
    total = 0.0
    for gamma, c in coeffs.items():
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        total += (1 + np.sum((2 * np.pi * gamma) ** 2)) ** (l1 / 2) * abs(c)
    return float(2.0 ** (l1 / 2) * total)


def multiply_periodic(u: SampledField, coeffs: dict, s=None) -> SampledField:
    """``chi u`` for the Z^n-periodic ``chi = sum_gamma c_gamma exp(2 pi i <x, gamma>)``.

    When ``s`` is given, the H^s bound by :func:`periodic_multiplier_bound` is
    asserted on the result.
    """
    require_domain(u, SPACE)
    g = u.grid
    if any(abs(L - round(L)) > 1e-12 for L in g.box):
        raise PreconditionError("non-integer box")
    out = np.zeros(g.shape, dtype=np.complex128)
    for gamma, c in sorted(coeffs.items()):
        gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (g.n,))
        out = out + c * modulate(u, 2 * np.pi * gamma).values
    result = SampledField(g, SPACE, out)
    if s is not None:
        s = as_order(s, g.block_dims)
        lhs, rhs = h_norm(result, s), periodic_multiplier_bound(coeffs, s) * h_norm(u, s)
        if lhs > rhs * (1 + 1e-10) + 1e-300:
            raise AssertionError(f"periodic multiplier bound violated: {lhs} > {rhs}")
    return result


def fourier_l1_bound(u: SampledField, s, name=None) -> Case:
    """Check ``sup|u| <= (2 pi)^{-n} ||u_hat||_{L^1}`` and the H^s control of ``||u_hat||_{L^1}``."""
    g = u.grid
    s = as_order(s, g.block_dims)
    if any(sl <= nl / 2 for sl, nl in zip(s.orders, s.block_dims)):
        raise PreconditionError(f"precondition: need s_l > n_l/2, got {s.orders}")
    l1 = float(np.sum(np.abs(dft_forward(u).values)) * g.freq_cell_volume)
    bound = (2 * np.pi) ** (-g.n) * l1 * (1 + 1e-9)
    sup = u.sup()
    # Cauchy-Schwarz on the grid, with the discrete and continuum weight sums side by side.
    weight_l2 = np.sqrt(np.sum(bessel_symbol(g, -s) ** 2) * g.freq_cell_volume)
    continuum = np.sqrt(np.prod([weight_l1_norm(sl, nl) for sl, nl in zip(s.orders, s.block_dims)]))
    sobolev_control = weight_l2 * (2 * np.pi) ** (g.n / 2) * h_norm(u, s)
    ok = sup <= bound and l1 <= sobolev_control * (1 + 1e-9)
    return Case(
        name=name or f"fourier-l1 s={list(s.orders)}",
        status="pass" if ok else "fail",
        measured=sup,
        bound=bound,
        details={
            "fourier_l1": l1,
            "sobolev_control": sobolev_control,
            "weight_l2_grid": weight_l2,
            "weight_l2_continuum": continuum,
        },
    )
