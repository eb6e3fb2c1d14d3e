"""Bracket weights, multi-order tensor weights and weighted-convolution constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, PreconditionError

LOG_SPACE_ORDER = 10.0


@dataclass(frozen=True)
class BlockOrder:
    """Multi-order ``s = (s_1, ..., s_j)`` attached to block dimensions ``(n_1, ..., n_j)``."""

    orders: tuple[float, ...]
    block_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(float(s) for s in self.orders))
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        if len(self.orders) != len(self.block_dims):
            raise PreconditionError(
                f"dimension mismatch: {len(self.orders)} orders for {len(self.block_dims)} blocks"
            )

    @property
    def l1(self) -> float:
        return float(sum(abs(s) for s in self.orders))

    @property
    def n(self) -> int:
        return sum(self.block_dims)

    def abs(self) -> "BlockOrder":
        return BlockOrder(tuple(abs(s) for s in self.orders), self.block_dims)

    def __neg__(self):
        return BlockOrder(tuple(-s for s in self.orders), self.block_dims)

    def __add__(self, other):
        other = as_order(other, self.block_dims)
        return BlockOrder(tuple(a + b for a, b in zip(self.orders, other.orders)), self.block_dims)

    def __sub__(self, other):
        return self + (-as_order(other, self.block_dims))

    def shifted(self, block: int, delta: float) -> "BlockOrder":
        s = list(self.orders)
        s[block] += delta
        return BlockOrder(tuple(s), self.block_dims)


def as_order(s, block_dims: Sequence[int]) -> BlockOrder:
    """Coerce a scalar, sequence or BlockOrder to a BlockOrder on ``block_dims``."""
    block_dims = tuple(block_dims)
    if isinstance(s, BlockOrder):
        if s.block_dims != block_dims:
            raise PreconditionError(f"dimension mismatch: {s.block_dims} vs {block_dims}")
        return s
    if np.ndim(s) == 0:
        return BlockOrder((float(s),) * len(block_dims), block_dims)
    return BlockOrder(tuple(s), block_dims)


def bracket(xi) -> np.ndarray:
    """``<xi> = (1 + |xi|^2)^{1/2}`` over the last axis."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        return np.sqrt(1.0 + xi * xi)
    return np.sqrt(1.0 + np.sum(xi * xi, axis=-1))


def _bracket_power(r2, s: float):
    if abs(s) > LOG_SPACE_ORDER:
        return np.exp(0.5 * s * np.log1p(r2))
    return (1.0 + r2) ** (0.5 * s)


def multi_bracket(xi, s: BlockOrder) -> np.ndarray:
    """``prod_l <xi^(l)>^{s_l}`` with ``xi`` split along its last axis by block."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1:] != (s.n,):
        raise PreconditionError(f"dimension mismatch: xi has {xi.shape[-1:]} axes, order needs {s.n}")
    out = np.ones(xi.shape[:-1])
    start = 0
    for sl, nl in zip(s.orders, s.block_dims):
        r2 = np.sum(xi[..., start : start + nl] ** 2, axis=-1)
        out = out * _bracket_power(r2, sl)
        start += nl
    return out


def weight_symbol(freqs: Sequence[np.ndarray], s: BlockOrder) -> np.ndarray:
    """``multi_bracket`` evaluated on broadcastable per-axis frequency arrays."""
    if len(freqs) != s.n:
        raise PreconditionError("dimension mismatch: grid axes vs order blocks")
    out = np.ones(np.broadcast_shapes(*(f.shape for f in freqs)))
    start = 0
    for sl, nl in zip(s.orders, s.block_dims):
        if sl != 0.0:
            r2 = sum(freqs[a] ** 2 for a in range(start, start + nl))
            out = out * _bracket_power(r2, sl)
        start += nl
    return out


def peetre_margin(xi, eta, s: BlockOrder) -> np.ndarray:
    """``2^{|s|_1/2} <<xi>>^s <<eta>>^{|s|} - <<xi+eta>>^s``; never negative."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    rhs = 2.0 ** (s.l1 / 2) * multi_bracket(xi, s) * multi_bracket(eta, s.abs())
    return rhs - multi_bracket(xi + eta, s)


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def weight_l1_norm(lam: float, n: int, nodes: int = 32) -> float:
    """``int_{R^n} <x>^{-2 lam} dx`` for ``2 lam > n``.

    The radial integral becomes ``int_0^{pi/2} sin^{n-1} t cos^{2 lam-n-1} t dt``
    after ``r = tan t``; the algebraic endpoint factor is absorbed into a
    Gauss-Jacobi weight so the remaining integrand is analytic.
    """
    if not 2 * lam > n:
        raise PreconditionError(f"divergent: 2*lambda={2 * lam} <= n={n}")
    beta = 2 * lam - n - 1
    a = math.pi / 4

    def radial(m):
        u, w = special.roots_jacobi(m, beta, 0.0)
        t = a * (1 + u)
        one_minus = 1 - u
        g = (np.sin(a * one_minus) / one_minus) ** beta
        return a * np.sum(w * np.sin(t) ** (n - 1) * g)

    coarse, fine = radial(nodes), radial(nodes + nodes // 2)
    if abs(fine - coarse) > 1e-11 * abs(fine):
        raise ConvergenceError("weight quadrature did not converge")
    return sphere_area(n) * fine


@dataclass(frozen=True)
class SigmaSpec:
    s: BlockOrder
    t: BlockOrder
    eps: tuple[float, ...]

    @property
    def sigma(self) -> BlockOrder:
        vals = tuple(
            min(sl, tl, sl + tl - nl / 2 - el)
            for sl, tl, nl, el in zip(self.s.orders, self.t.orders, self.s.block_dims, self.eps)
        )
        return BlockOrder(vals, self.s.block_dims)


def sigma_eps(s, t, eps=None, block_dims=(1,)) -> SigmaSpec:
    """Validate ``(s, t, eps)`` and build the order ``sigma = min{s, t, s+t-n/2-eps}``.

    ``eps`` defaults to ``min_l(s_l + t_l - n_l/2) / 4``.
    """
    s = as_order(s, block_dims)
    t = as_order(t, block_dims)
    gaps = [sl + tl - nl / 2 for sl, tl, nl in zip(s.orders, t.orders, s.block_dims)]
    if any(g <= 0 for g in gaps):
        raise PreconditionError(f"precondition: need s_l + t_l > n_l/2, got gaps {gaps}")
    if eps is None:
        eps = min(gaps) / 4
    eps = tuple(np.broadcast_to(np.asarray(eps, dtype=float), (len(gaps),)).tolist())
    for e, g in zip(eps, gaps):
        if not 0 < e < g:
            raise PreconditionError(f"eps out of range: need 0 < {e} < {g}")
    return SigmaSpec(s, t, eps)


def _block_constant(s: float, t: float, sigma: float, n: int) -> float:
    if s >= 0 and t >= 0:
        return 2.0 ** (2 * sigma + 1) * weight_l1_norm(s + t - sigma, n)
    return 2.0 ** abs(sigma) * weight_l1_norm(s + t, n)


def conv_bound_constant(s, t, eps=None, n: int = 1) -> float:
    """Single-block constant ``C(s, t, eps, n)`` of the weighted convolution bound."""
    spec = sigma_eps(s, t, eps, (n,))
    return _block_constant(spec.s.orders[0], spec.t.orders[0], spec.sigma.orders[0], n)


def conv_bound_constant_blocks(spec: SigmaSpec) -> float:
    """Tensor constant: product of the single-block constants."""
    return float(
        np.prod(
            [
                _block_constant(sl, tl, gl, nl)
                for sl, tl, gl, nl in zip(
                    spec.s.orders, spec.t.orders, spec.sigma.orders, spec.s.block_dims
                )
            ]
        )
    )


# --- radial convolution of two bracket powers -------------------------------

_QUAD = dict(epsabs=0.0, epsrel=1e-11, limit=400)


def _angular(s: float, rho: float, r, n: int):
    """Integral over the unit sphere of ``(1 + |rho e_1 - r w|^2)^{-s}`` in ``w``."""
    a = 1.0 + rho * rho + r * r
    b = 2.0 * rho * r
    if n == 2:
        z = (b / a) ** 2
        return 2 * math.pi * a ** (-s) * special.hyp2f1(s / 2, (s + 1) / 2, 1.0, z)
    if n == 3:
        if b == 0:
            return 4 * math.pi * a ** (-s)
        lo = a - b
        x = math.log1p(2 * b / lo)
        if abs(1 - s) < 1e-14:
            return 2 * math.pi * x / b
        return 2 * math.pi * lo ** (1 - s) * math.expm1((1 - s) * x) / (b * (1 - s))
    raise PreconditionError(f"no angular reduction for n={n}")


def _split_quad(f, breaks):
    breaks = sorted(set(breaks))
    total = integrate.quad(f, -np.inf, breaks[0], **_QUAD)[0]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        total += integrate.quad(f, lo, hi, **_QUAD)[0]
    total += integrate.quad(f, breaks[-1], np.inf, **_QUAD)[0]
    return total


def bracket_convolution(s: float, t: float, rho: float, n: int) -> float:
    """``(<.>^{-2s} * <.>^{-2t})(xi)`` on ``R^n`` at ``|xi| = rho``."""
    if not s + t > n / 2:
        raise PreconditionError("divergent convolution")
    if n == 1:
        return _split_quad(lambda y: (1 + (rho - y) ** 2) ** (-s) * (1 + y * y) ** (-t), [0.0, rho])
    f = lambda r: r ** (n - 1) * (1 + r * r) ** (-t) * _angular(s, rho, r, n)
    total = integrate.quad(f, 0.0, rho, **_QUAD)[0] if rho > 0 else 0.0
    return total + integrate.quad(f, rho, np.inf, **_QUAD)[0]


def _block_radii(grid, axes) -> np.ndarray:
    radii = set()
    for a in axes:
        xi = np.abs(grid.axis_freqs(a))
        radii.update(np.round(xi, 12).tolist())
    corner = math.sqrt(sum(np.max(np.abs(grid.axis_freqs(a))) ** 2 for a in axes))
    radii.add(round(corner, 12))
    return np.array(sorted(radii))


def _block_ratio_max(s, t, sigma, n, grid, axes) -> tuple[float, float]:
    best, where = 0.0, 0.0
    for rho in _block_radii(grid, axes):
        ratio = bracket_convolution(s, t, rho, n) * (1 + rho * rho) ** sigma
        if ratio > best:
            best, where = ratio, float(rho)
    return best, where


def conv_weight_check(s, t, eps, grid, slack: float = 0.05, tol: float = 0.02):
    """Maximum over the frequency grid of ``conv / <<.>>^{-2 sigma}`` vs. the constant."""
    from .report import Case

    spec = sigma_eps(s, t, eps, grid.block_dims)
    bound = conv_bound_constant_blocks(spec)
    fine = grid.refined(2)
    ratio_n, ratio_2n, peaks = 1.0, 1.0, []
    for l, axes in enumerate(grid.block_axes()):
        args = (spec.s.orders[l], spec.t.orders[l], spec.sigma.orders[l], grid.block_dims[l])
        r1, _ = _block_ratio_max(*args, grid, axes)
        r2, at = _block_ratio_max(*args, fine, axes)
        ratio_n *= r1
        ratio_2n *= r2
        peaks.append(at)
    drift = abs(ratio_2n - ratio_n) / ratio_2n
    if drift > tol:
        raise ConvergenceError(f"grid too coarse: ratio drift {drift:.3g} between N and 2N")
    limit = bound * (1 + slack)
    return Case(
        name=f"conv s={list(spec.s.orders)} t={list(spec.t.orders)} blocks={list(grid.block_dims)}",
        status="pass" if ratio_2n <= limit else "fail",
        measured=ratio_2n,
        bound=limit,
        details={
            "constant": bound,
            "sigma": list(spec.sigma.orders),
            "eps": list(spec.eps),
            "ratio_N": ratio_n,
            "refinement_drift": drift,
            "peak_radius": peaks,
        },
    )


@dataclass(frozen=True)
class SmoothnessBudget:
    m_s: int
    k_s: int


def smoothness_budget(s: BlockOrder) -> SmoothnessBudget:
    n = s.n
    return SmoothnessBudget(math.floor(s.l1 + (n + 1) / 2) + 1, math.floor(s.l1) + n + 2)
