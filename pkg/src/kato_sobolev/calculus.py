"""Mollification and holomorphic functional calculus through the Calderon contour formula.

For ``u = (u_1, ..., u_d)`` with range at sup-norm distance ``8 r`` from the
complement of ``Omega`` and a smooth companion ``v`` with ``|u - v| < r/2``,

    Phi(u) = (2 pi i)^{-d} oint_{|zeta_k| = 3r} Phi(zeta + v) / prod_k (zeta_k + v_k - u_k) dzeta,

which the trapezoidal rule evaluates with spectral accuracy in the node count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft

from .errors import ConvergenceError, IndeterminateError, PreconditionError
from .grid import SPACE, GridSpec, SampledField, fft_workers, require_domain, require_same_grid
from .kato import KatoNormSpec, TranslationSet, combine, kato_norm, windowed_norms
from .partition import Window, bump_profile, support_mask
from .report import Case
from .sobolev import derivative, h_norm, multiply

ENTIRE_DISTANCE = 1.0


# --- mollifiers ----------------------------------------------------------------


def standard_profile(r):
    """``exp(-1 / (1 - r^2))`` on ``r < 1``, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    inside = r < 1
    out = np.zeros_like(r)
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class Mollifier:
    """Unit-mass bump ``phi_eps = eps^{-n} phi(. / eps)`` supported in the ball of radius ``eps``."""

    epsilon: float
    profile: Callable = standard_profile

    def kernel(self, grid: GridSpec) -> np.ndarray:
        """Discrete convolution weights indexed by sample offset; they sum to 1."""
        r2 = np.zeros(grid.shape)
        for a in range(grid.n):
            N, L = grid.samples[a], grid.box[a]
            offs = np.fft.fftfreq(N, d=1.0 / N) * (L / N)
            shape = [1] * grid.n
            shape[a] = N
            r2 = r2 + (offs.reshape(shape) / self.epsilon) ** 2
        k = self.profile(np.sqrt(r2))
        return k / k.sum()

    def symbol(self, grid: GridSpec) -> np.ndarray:
        return scipy.fft.fftn(self.kernel(grid), workers=fft_workers()).real


def _check_resolved(grid: GridSpec, eps: float):
    step = max(grid.spacing)
    if eps < 2 * step * (1 - 1e-12):
        raise PreconditionError(f"unresolved eps: {eps} < 2 sample steps ({2 * step})")


def mollify(u: SampledField, eps: float, profile: Callable = standard_profile) -> SampledField:
    """``phi_eps * u`` as a frequency-domain product (mass exactly 1 on the grid)."""
    require_domain(u, SPACE)
    _check_resolved(u.grid, eps)
    sym = Mollifier(eps, profile).symbol(u.grid)
    w = fft_workers()
    return SampledField(u.grid, SPACE, scipy.fft.ifftn(sym * scipy.fft.fftn(u.values, workers=w), workers=w))


def mollifier_rate_check(u: SampledField, s: float, s_prime: float, ks=range(1, 7), name=None) -> Case:
    """``||phi_eps * u - u||_{H^{s'}} <= 2^{1-theta} eps^theta ||u||_{H^s}`` with ``theta = min(s - s', 1)``."""
    if s_prime > s:
        raise PreconditionError("precondition: need s' <= s")
    theta = min(s - s_prime, 1.0)
    eps = np.array([2.0 ** (-k) for k in ks])
    base = h_norm(u, s)
    lhs = np.array([h_norm(mollify(u, e) - u, s_prime) for e in eps])
    bound = 2 ** (1 - theta) * eps**theta * base
    ratio = lhs / bound
    slope = float(np.polyfit(np.log(eps), np.log(lhs), 1)[0])
    violations = int(np.sum(ratio > 1))
    ok = violations == 0 and slope >= theta - 0.1
    return Case(
        name=name or f"mollifier-rate s={s} s'={s_prime}",
        status="pass" if ok else "fail",
        measured=float(ratio.max()),
        bound=1.0,
        details={
            "theta": theta,
            "slope": slope,
            "min_slope": theta - 0.1,
            "eps": eps,
            "lhs": lhs,
            "rhs": bound,
            "violations": violations,
        },
    )


def convolve(phi: SampledField, u: SampledField) -> SampledField:
    """Grid convolution ``sum_j dx phi(y_j) u(x - y_j)`` with ``phi`` sampled on centred coordinates."""
    require_same_grid(phi, u)
    g = u.grid
    kernel = np.fft.ifftshift(phi.values) * g.cell_volume
    w = fft_workers()
    out = scipy.fft.ifftn(scipy.fft.fftn(kernel, workers=w) * scipy.fft.fftn(u.values, workers=w), workers=w)
    return SampledField(g, SPACE, out)


def conv_contraction_check(phi: SampledField, u: SampledField, s, window: Window, translations=None, name=None) -> Case:
    """``||phi * u||_{s,ul,chi} <= ||phi||_{L^1} ||u||_{s,ul,chi}``."""
    translations = translations or TranslationSet.subgrid(u.grid)
    spec = KatoNormSpec(s, math.inf, window, translations, check_psi=False)
    l1 = float(np.sum(np.abs(phi.values)) * u.grid.cell_volume)
    lhs = kato_norm(convolve(phi, u), spec)
    rhs = l1 * kato_norm(u, spec)
    ratio = lhs / rhs if rhs > 0 else 0.0
    bound = 1 + 1e-6
    return Case(
        name=name or f"conv-contraction s={s}",
        status="pass" if ratio <= bound else "fail",
        measured=ratio,
        bound=bound,
        details={"phi_l1": l1, "lhs": lhs, "rhs": rhs},
    )


# --- holomorphic maps and domains -------------------------------------------------


def entire(distance: float = ENTIRE_DISTANCE):
    """Distance oracle for ``Omega = C^d``: a fixed radius caps the contour size."""
    return lambda z: np.full(np.shape(z)[1:], float(distance))


def half_plane(a: float = 0.0):
    """``Omega = {Re z > a}`` (d = 1)."""
    return lambda z: np.maximum(np.real(z[0]) - a, 0.0)


def disc_exterior(rho: float):
    """``Omega = {|z| > rho}`` (d = 1)."""
    return lambda z: np.maximum(np.abs(z[0]) - rho, 0.0)


def annulus(inner: float, outer: float):
    """``Omega = {inner < |z| < outer}`` (d = 1)."""
    return lambda z: np.maximum(np.minimum(np.abs(z[0]) - inner, outer - np.abs(z[0])), 0.0)


def polydisc(radii: Sequence[float]):
    """``Omega = {|z_k| < radii_k}``; sup-norm distance to the complement."""
    radii = np.asarray(radii, dtype=float)
    return lambda z: np.maximum(
        np.min([radii[k] - np.abs(z[k]) for k in range(len(radii))], axis=0), 0.0
    )


def product_domain(*oracles):
    """Sup-norm distance for ``Omega_1 x ... x Omega_d`` from one-variable oracles."""
    return lambda z: np.min([o(z[k : k + 1]) for k, o in enumerate(oracles)], axis=0)


@dataclass(frozen=True)
class HoloMap:
    """Holomorphic ``Phi`` on ``Omega``; callables take ``d`` complex arrays ``z_1, ..., z_d``."""

    d: int
    eval: Callable
    omega_dist: Callable
    grad: tuple | None = None
    name: str = "custom"

    def __call__(self, *z):
        return self.eval(*z)

    def partial(self, k: int) -> "HoloMap":
        if self.grad is None:
            raise PreconditionError(f"missing grad for {self.name}")
        return HoloMap(self.d, self.grad[k], self.omega_dist, None, f"d{k}({self.name})")

    def grad_error(self, rng: np.random.Generator, points: int = 20, h: float = 1e-5) -> float:
        """Max relative mismatch between ``grad`` and central differences at fuzzed points in Omega."""
        if self.grad is None:
            raise PreconditionError(f"missing grad for {self.name}")
        worst, tried = 0.0, 0
        while tried < points:
            z = rng.normal(size=self.d) + 1j * rng.normal(size=self.d)
            if self.omega_dist(z.reshape(self.d, 1))[0] <= 10 * h:
                continue
            tried += 1
            for k in range(self.d):
                dz = np.zeros(self.d, dtype=complex)
                dz[k] = h
                fd = (self.eval(*(z + dz)) - self.eval(*(z - dz))) / (2 * h)
                exact = self.grad[k](*z)
                worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
        return worst


def builtin_map(name: str, **kw) -> HoloMap:
    """Named maps: identity, reciprocal (``rho`` = excluded radius), exp, square, product2."""
    if name == "identity":
        return HoloMap(1, lambda z: z, kw.get("omega", entire()), (lambda z: np.ones_like(z),), name)
    if name == "reciprocal":
        rho = kw.get("rho", 0.0)
        return HoloMap(1, lambda z: 1 / z, disc_exterior(rho), (lambda z: -1 / z**2,), name)
    if name == "exp":
        return HoloMap(1, np.exp, kw.get("omega", entire()), (np.exp,), name)
    if name == "square":
        return HoloMap(1, lambda z: z * z, kw.get("omega", entire()), (lambda z: 2 * z,), name)
    if name == "product2":
        return HoloMap(
            2, lambda a, b: a * b, kw.get("omega", entire()), (lambda a, b: b, lambda a, b: a), name
        )
    raise PreconditionError(f"unknown map {name!r}")


BUILTIN_MAPS = ("identity", "reciprocal", "exp", "square", "product2")


# --- Calderon formula ----------------------------------------------------------------


def _as_components(u) -> list[SampledField]:
    comps = [u] if isinstance(u, SampledField) else list(u)
    for c in comps:
        require_domain(c, SPACE)
    require_same_grid(*comps)
    return comps


def _stack(comps) -> np.ndarray:
    return np.stack([c.values for c in comps])


def range_radius(u, omega_dist: Callable) -> float:
    """``r = min_x dist(u(x), C^d minus Omega) / 8``."""
    dist = np.asarray(omega_dist(_stack(_as_components(u))), dtype=float)
    if not np.all(dist > 0):
        raise PreconditionError("range escapes Omega")
    return float(dist.min() / 8)


def choose_companion(u, r: float, eps0: float = 1.0):
    """Mollify with ``eps = eps0, eps0/2, ...`` until ``max |u - v| < r/2``; returns ``(v, eps)``."""
    if not r > 0:
        raise PreconditionError("companion radius must be positive")
    comps = _as_components(u)
    g = comps[0].grid
    floor = 2 * max(g.spacing)
    eps = eps0
    while eps >= floor * (1 - 1e-12):
        v = [mollify(c, eps) for c in comps]
        gap = max(float(np.max(np.abs(a.values - b.values))) for a, b in zip(comps, v))
        if gap < r / 2:
            return v, eps
        eps /= 2
    raise ConvergenceError("cannot satisfy companion bound at resolution limit")


@dataclass(frozen=True)
class PolydiscContour:
    """Torus ``(|zeta_k| = radius)^d`` sampled with ``nodes_per_factor`` equispaced nodes."""

    radius: float
    nodes_per_factor: int
    d: int

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError("contour radius must be positive")
        if self.nodes_per_factor < 2:
            raise PreconditionError("need at least 2 nodes per factor")

    def nodes(self) -> np.ndarray:
        q = self.nodes_per_factor
        return self.radius * np.exp(2j * np.pi * np.arange(q) / q)


def _calderon_sum(phi: HoloMap, u: np.ndarray, v: np.ndarray, contour: PolydiscContour, r: float) -> np.ndarray:
    d = phi.d
    zeta = contour.nodes()
    q = zeta.size
    w = u - v
    # vectorize over the last factor, loop over the rest in a fixed order
    last = zeta.reshape((q,) + (1,) * (u.ndim - 1))
    den_last = last + v[-1] - u[-1]
    if np.min(np.abs(den_last)) < 2 * r:
        raise ConvergenceError("denominator below 2r: companion too far")
    total = np.zeros(u.shape[1:], dtype=np.complex128)
    for head in itertools.product(range(q), repeat=d - 1):
        z_head = zeta[list(head)]
        den_head = np.ones(u.shape[1:], dtype=np.complex128)
        for k, zk in enumerate(z_head):
            den = zk - w[k]
            if np.min(np.abs(den)) < 2 * r:
                raise ConvergenceError("denominator below 2r: companion too far")
            den_head = den_head * (zk / den)
        args = [zk + v[k] for k, zk in enumerate(z_head)] + [last + v[-1]]
        vals = phi.eval(*args) * (last / den_last)
        total = total + den_head * vals.sum(axis=0)
    return total / q**d


def calderon_apply(phi: HoloMap, u, contour: PolydiscContour | None = None, nodes: int = 64,
                   certify: bool = True, tol: float = 1e-10, companion=None) -> SampledField:
    """``Phi(u)`` through the contour formula.

    With ``certify`` the result is compared against the rule with twice the nodes
    and :class:`ConvergenceError` is raised if they differ by more than ``tol``
    (relative to ``max(1, max |h|)``).
    """
    comps = _as_components(u)
    if len(comps) != phi.d:
        raise PreconditionError(f"{phi.name} takes {phi.d} fields, got {len(comps)}")
    g = comps[0].grid
    r = range_radius(comps, phi.omega_dist)
    v, _ = companion if companion is not None else choose_companion(comps, r)
    contour = contour or PolydiscContour(3 * r, nodes, phi.d)
    us, vs = _stack(comps), _stack(v)
    h = _calderon_sum(phi, us, vs, contour, r)
    if certify:
        finer = PolydiscContour(contour.radius, 2 * contour.nodes_per_factor, phi.d)
        gap = float(np.max(np.abs(_calderon_sum(phi, us, vs, finer, r) - h)))
        if gap > tol * max(1.0, float(np.max(np.abs(h)))):
            raise ConvergenceError(f"Q too small: rules with Q and 2Q differ by {gap:.3g}")
    return SampledField(g, SPACE, h)


def pointwise(phi: HoloMap, u) -> SampledField:
    comps = _as_components(u)
    return SampledField(comps[0].grid, SPACE, phi.eval(*[c.values for c in comps]))


def invert(u: SampledField, c: float, nodes: int = 64) -> SampledField:
    """``1/u`` for ``|u| >= c > 0`` via the contour formula on ``{|z| > c/2}``."""
    require_domain(u, SPACE)
    if not c > 0 or np.min(np.abs(u.values)) < c * (1 - 1e-12):
        raise PreconditionError(f"lower bound violated: min |u| = {np.min(np.abs(u.values)):.3g} < c = {c}")
    result = calderon_apply(builtin_map("reciprocal", rho=c / 2), u, nodes=nodes)
    residual = float(np.max(np.abs(multiply(u, result).values - 1)))
    if residual > 1e-8:
        raise ConvergenceError(f"inverse check failed: max |u (1/u) - 1| = {residual:.3g}")
    return result


@dataclass
class SpectrumResult:
    member: bool
    distance: float
    tolerance: float
    witnesses: list | None = None
    residual: float | None = None


def sample_range_tolerance(comps) -> float:
    """Half the largest jump between neighbouring samples (sup over components and axes)."""
    jump = 0.0
    for c in comps:
        for a in range(c.grid.n):
            jump = max(jump, float(np.max(np.abs(c.values - np.roll(c.values, 1, axis=a)))))
    return jump / 2


def spectrum_member(u, lam) -> SpectrumResult:
    """Joint-spectrum membership of ``lam``; outside the range a Bezout witness is built."""
    comps = _as_components(u)
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if lam.size != len(comps):
        raise PreconditionError("dimension mismatch between lambda and u")
    diffs = _stack(comps) - lam.reshape((-1,) + (1,) * comps[0].grid.n)
    dist = float(np.min(np.max(np.abs(diffs), axis=0)))
    tol = sample_range_tolerance(comps)
    if dist <= 2 * tol:
        return SpectrumResult(True, dist, tol)
    if dist <= 4 * tol:
        raise IndeterminateError("indeterminate at this resolution")
    w = [c - complex(l) for c, l in zip(comps, lam)]
    u_lam = sum((multiply(wk.conj(), wk) for wk in w[1:]), multiply(w[0].conj(), w[0]))
    u_lam = SampledField(u_lam.grid, SPACE, u_lam.values.real)
    inv = invert(u_lam, float(np.min(np.abs(u_lam.values))))
    witnesses = [multiply(wk.conj(), inv) for wk in w]
    total = sum((multiply(vk, wk) for vk, wk in zip(witnesses[1:], w[1:])), multiply(witnesses[0], w[0]))
    residual = float(np.max(np.abs(total.values - 1)))
    return SpectrumResult(False, dist, tol, witnesses, residual)


def chain_rule_check(phi: HoloMap, u, s: float, s_prime: float, nodes: int = 64, name=None) -> Case:
    """Residual of ``d_j Phi(u) = sum_k (d_k Phi)(u) d_j u_k`` in ``H^{s'-1}``."""
    comps = _as_components(u)
    g = comps[0].grid
    n = g.n
    if phi.grad is None:
        raise PreconditionError(f"missing grad for {phi.name}")
    low = max(n / 2, 0.75)
    if not s > low:
        raise PreconditionError(f"precondition: need s > {low}, got {s}")
    if not max(n / 2, n / 4 + 0.5) < s_prime < s:
        raise PreconditionError(f"precondition: need max(n/2, n/4+1/2) < s' < s, got s'={s_prime}")
    r = range_radius(comps, phi.omega_dist)
    comp = choose_companion(comps, r)
    h = calderon_apply(phi, comps, nodes=nodes, companion=comp)
    partials = [calderon_apply(phi.partial(k), comps, nodes=nodes, companion=comp) for k in range(phi.d)]
    order = s_prime - 1
    worst, details = 0.0, {}
    for j in range(n):
        lhs = derivative(h, j)
        terms = [multiply(pk, derivative(uk, j)) for pk, uk in zip(partials, comps)]
        rhs = sum(terms[1:], terms[0])
        scale = max(h_norm(lhs, order), sum(h_norm(t, order) for t in terms), 1e-300)
        res = h_norm(lhs - rhs, order) / scale
        details[f"axis{j}"] = res
        worst = max(worst, res)
    return Case(
        name=name or f"chain-rule {phi.name} s={s} s'={s_prime}",
        status="pass" if worst <= 1e-6 else "fail",
        measured=worst,
        bound=1e-6,
        details=dict(details, norm_order=order),
    )


def _cutoff(grid: GridSpec, box, delta: float) -> SampledField:
    vals = np.ones(grid.shape)
    for a, (lo, hi) in enumerate(box):
        vals = vals * bump_profile(lo - delta, lo, hi, hi + delta)(grid.coords[a])
    return SampledField(grid, SPACE, vals)


def divide(u: SampledField, v: SampledField, c: float, support, nodes: int = 64) -> SampledField:
    """``u / v`` for ``u`` supported in the box ``support`` where ``|v| >= c``."""
    require_same_grid(u, v)
    g = u.grid
    box = tuple(tuple(map(float, b)) for b in support)
    mask = support_mask(g, box)
    if np.min(np.abs(v.values[mask]), initial=np.inf) < c * (1 - 1e-12):
        raise PreconditionError("|v| dips below c on the support of u")
    if np.max(np.abs(u.values[~mask]), initial=0.0) > 1e-12:
        raise PreconditionError("u does not vanish outside the declared support")
    floor = 8 * max(g.spacing)
    room = min(L / 2 - max(abs(lo), abs(hi)) for L, (lo, hi) in zip(g.box, box))
    delta = min(max(hi - lo for lo, hi in box), room)
    phi = None
    while delta >= floor:
        wide = tuple((lo - delta, hi + delta) for lo, hi in box)
        if np.min(np.abs(v.values[support_mask(g, wide)])) >= c / 2:
            phi = _cutoff(g, box, delta)
            break
        delta /= 2
    if phi is None:
        raise PreconditionError("cutoff construction fails: no margin where |v| >= c/2")
    v2 = np.abs(v.values) ** 2
    w = SampledField(g, SPACE, phi.values.real * v2 + c * c * (1 - phi.values.real) / 4)
    q = multiply(u, invert(w, c * c / 4, nodes=nodes))
    result = multiply(v.conj(), q)
    err = float(np.max(np.abs(multiply(result, v).values - u.values)[mask], initial=0.0))
    if err > 1e-8 * max(1.0, u.sup()):
        raise ConvergenceError(f"division check failed: {err:.3g}")
    return result


def kp_composition_check(phi: HoloMap, u, p: float, s, window: Window, translations: TranslationSet,
                         nodes: int = 64, name=None) -> Case:
    """``Phi(u)`` stays in ``K_p^s`` and its windowed norms decay with those of ``u``."""
    comps = _as_components(u)
    zero = np.zeros((phi.d, 1), dtype=complex)
    if abs(phi.eval(*zero)[0]) > 1e-14:
        raise PreconditionError(f"Phi(0) != 0 for {phi.name}")
    h = calderon_apply(phi, comps, nodes=nodes)
    a = windowed_norms(h, window, translations, s)
    b = np.max([windowed_norms(c, window, translations, s) for c in comps], axis=0)
    norm = combine(a, p, translations.weight)
    floor = 1e-10 * b.max()
    live = b > floor
    decay = float(np.max(a[live] / b[live])) if live.any() else 0.0
    tail_ok = bool(np.all(a[~live] <= decay * floor + 1e-9 * max(a.max(), 1e-300)))
    ok = math.isfinite(norm) and math.isfinite(decay) and tail_ok
    return Case(
        name=name or f"kp-compose {phi.name} p={p}",
        status="pass" if ok else "fail",
        measured=decay,
        bound=None,
        details={"kato_norm": norm, "tail_ok": tail_ok, "windows": int(a.size), "live_windows": int(live.sum())},
    )
