"""Global correction: L2 projection of the coefficient function onto the coarse space.

The mass matrix here is the piecewise-linear mass matrix scaled by 6 (rows
``h_{i-1}, 2(h_{i-1}+h_i), h_i``); the same factor appears on both sides of
the projection system, so the correction is unaffected.

Fiber operators act along ``axis`` and broadcast over all other axes, so a
whole level is processed as one batch of independent fibers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .grid import GridHierarchy
from .transforms import coarse_slices, interp_weights

WORKERS_ENV = "HGREFACTOR_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _spacings(h, dtype) -> np.ndarray:
    h = np.asarray(h, dtype=dtype).reshape(-1)
    if np.any(h <= 0):
        raise ValueError("spacings must be positive")
    return h


def _bshape(w: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = w.size
    return w.reshape(shape)


def _along(axis: int, ndim: int, s: slice) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = s
    return tuple(idx)


def _float(v) -> np.ndarray:
    v = np.asarray(v)
    if v.dtype not in (np.float32, np.float64):
        v = v.astype(np.float64)
    return v


def mass_diagonal(h: np.ndarray) -> np.ndarray:
    d = np.empty(h.size + 1, dtype=h.dtype)
    d[0] = 2 * h[0]
    d[-1] = 2 * h[-1]
    d[1:-1] = 2 * (h[:-1] + h[1:])
    return d


def mass_apply(v, h, axis: int = -1) -> np.ndarray:
    """Multiply fibers by the (scaled) mass matrix of spacings ``h``."""
    v = _float(v)
    axis = axis % v.ndim
    h = _spacings(h, v.dtype)
    if v.shape[axis] != h.size + 1:
        raise ValueError(f"fiber length {v.shape[axis]} does not match {h.size} spacings")
    nd = v.ndim
    out = _bshape(mass_diagonal(h), axis, nd) * v
    hb = _bshape(h, axis, nd)
    out[_along(axis, nd, slice(1, None))] += hb * v[_along(axis, nd, slice(None, -1))]
    out[_along(axis, nd, slice(None, -1))] += hb * v[_along(axis, nd, slice(1, None))]
    return out


def transfer_weights(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per coarse node: weight of its left and right odd fine neighbours.

    These are the interpolation weights read backwards (transfer = prolongation
    transposed).  The first left and last right weight are zero.
    """
    wl, wr = interp_weights(h)
    m = wl.size
    from_left = np.zeros(m + 1, dtype=h.dtype)
    from_right = np.zeros(m + 1, dtype=h.dtype)
    from_right[:m] = wl
    from_left[1:] = wr
    return from_left, from_right


def _check_odd(n: int) -> None:
    if n < 3 or n % 2 == 0:
        raise ValueError(f"fine fiber length must be odd and at least 3, got {n}")


def transfer_apply(v, h, axis: int = -1) -> np.ndarray:
    """Restrict fine-basis loads to the coarse basis (fine length ``2m+1`` to ``m+1``)."""
    v = _float(v)
    axis = axis % v.ndim
    n = v.shape[axis]
    _check_odd(n)
    h = _spacings(h, v.dtype)
    if n != h.size + 1:
        raise ValueError(f"fiber length {n} does not match {h.size} spacings")
    nd = v.ndim
    left, right = transfer_weights(h)
    out = np.array(v[_along(axis, nd, slice(0, None, 2))], copy=True)
    odd = v[_along(axis, nd, slice(1, None, 2))]
    out[_along(axis, nd, slice(1, None))] += _bshape(left[1:], axis, nd) * odd
    out[_along(axis, nd, slice(None, -1))] += _bshape(right[:-1], axis, nd) * odd
    return out


def masstrans_bands(h: np.ndarray) -> np.ndarray:
    """Five bands of K = R·M, shape ``(5, m+1)``.

    Row ``o + 2`` holds the coefficient of fine node ``2i + o`` in coarse row
    ``i``; entries reaching outside the fiber are zero.
    """
    n = h.size + 1
    m = (n - 1) // 2
    D = mass_diagonal(h)
    # M[k, k+1] stored at H[k + 1]; zero padding covers k in [-2, n]
    H = np.zeros(n + 3, dtype=h.dtype)
    H[1:n] = h
    Dp = np.zeros(n + 2, dtype=h.dtype)
    Dp[1:n + 1] = D
    left, right = transfer_weights(h)
    i2 = 2 * np.arange(m + 1)

    def off(k):  # M[k, k+1], zero outside
        return H[k + 1]

    def diag(k):
        return Dp[k + 1]

    K = np.zeros((5, m + 1), dtype=h.dtype)
    K[0] = left * off(i2 - 2)
    K[1] = left * diag(i2 - 1) + off(i2 - 1)
    K[2] = left * off(i2 - 1) + D[i2] + right * off(i2)
    K[3] = off(i2) + right * diag(i2 + 1)
    K[4] = right * off(i2 + 1)
    return K


def _apply_bands(K: np.ndarray, v: np.ndarray, axis: int, odd_only: bool = False) -> np.ndarray:
    nd = v.ndim
    n = v.shape[axis]
    m = (n - 1) // 2
    shape = list(v.shape)
    shape[axis] = m + 1
    out = np.zeros(shape, dtype=v.dtype)
    head = _along(axis, nd, slice(1, None))
    tail = _along(axis, nd, slice(None, -1))
    b = lambda row, s: _bshape(K[row][s], axis, nd)  # noqa: E731
    if not odd_only:
        out += b(2, slice(None)) * v[_along(axis, nd, slice(0, None, 2))]
        out[head] += b(0, slice(1, None)) * v[_along(axis, nd, slice(0, n - 2, 2))]
    out[head] += b(1, slice(1, None)) * v[_along(axis, nd, slice(1, n - 1, 2))]
    out[tail] += b(3, slice(None, -1)) * v[_along(axis, nd, slice(1, None, 2))]
    if not odd_only:
        out[tail] += b(4, slice(None, -1)) * v[_along(axis, nd, slice(2, None, 2))]
    return out


def masstrans_apply(v, h, axis: int = -1) -> np.ndarray:
    """Fused ``transfer_apply(mass_apply(v, h), h)`` as one five-tap stencil."""
    v = _float(v)
    axis = axis % v.ndim
    n = v.shape[axis]
    _check_odd(n)
    h = _spacings(h, v.dtype)
    if n != h.size + 1:
        raise ValueError(f"fiber length {n} does not match {h.size} spacings")
    return _apply_bands(masstrans_bands(h), v, axis)


class ThomasFactor:
    """Forward-elimination factors of the mass matrix of spacings ``h``.

    They depend only on the grid, so one factor serves every fiber of a level.
    """

    def __init__(self, h: np.ndarray):
        n = h.size + 1
        self.n = n
        diag = mass_diagonal(h)
        self.sub = np.concatenate([np.zeros(1, dtype=h.dtype), h])
        self.cp = np.zeros(n, dtype=h.dtype)
        self.denom = np.empty(n, dtype=h.dtype)
        self.denom[0] = diag[0]
        for i in range(n):
            if i > 0:
                self.denom[i] = diag[i] - self.sub[i] * self.cp[i - 1]
            if i < n - 1:
                self.cp[i] = h[i] / self.denom[i]

    def solve(self, rhs: np.ndarray, axis: int, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.array(rhs, copy=True)
        elif out is not rhs:
            out[...] = rhs
        x = np.moveaxis(out, axis, 0)
        x[0] /= self.denom[0]
        for i in range(1, self.n):
            x[i] -= self.sub[i] * x[i - 1]
            x[i] /= self.denom[i]
        for i in range(self.n - 2, -1, -1):
            x[i] -= self.cp[i] * x[i + 1]
        return out


def thomas_solve(rhs, h, axis: int = -1, out: np.ndarray | None = None) -> np.ndarray:
    """Solve ``mass_apply(z, h) = rhs`` along ``axis`` for every fiber."""
    rhs = _float(rhs)
    axis = axis % rhs.ndim
    h = _spacings(h, rhs.dtype)
    if rhs.shape[axis] != h.size + 1:
        raise ValueError(f"fiber length {rhs.shape[axis]} does not match {h.size} spacings")
    return ThomasFactor(h).solve(rhs, axis, out=out)


def _cached(hier: GridHierarchy, key, build):
    cache = hier._cache
    if key not in cache:
        cache[key] = build()
    return cache[key]


def _bands(hier: GridHierarchy, l: int, d: int, dtype) -> np.ndarray:
    key = ("K", l, d, np.dtype(dtype).str)
    return _cached(hier, key, lambda: masstrans_bands(hier.spacings(l, d).astype(dtype)))


def _factor(hier: GridHierarchy, l: int, d: int, dtype) -> ThomasFactor:
    key = ("thomas", l, d, np.dtype(dtype).str)
    return _cached(hier, key, lambda: ThomasFactor(hier.spacings(l, d).astype(dtype)))


def _split_axis(shape, axis: int) -> int | None:
    others = [(n, a) for a, n in enumerate(shape) if a != axis]
    if not others:
        return None
    n, a = max(others)
    return a if n > 1 else None


def _fiberwise(fn, v: np.ndarray, axis: int, workers: int) -> np.ndarray:
    """Run ``fn(chunk)`` over chunks of independent fibers and reassemble."""
    split = _split_axis(v.shape, axis) if workers > 1 else None
    if split is None:
        return fn(v)
    bounds = np.linspace(0, v.shape[split], min(workers, v.shape[split]) + 1).astype(int)
    chunks = [v[_along(split, v.ndim, slice(a, b))] for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=split)


def load_vector(coeffs: np.ndarray, hier: GridHierarchy, l: int, masked: bool = False,
                workers: int = 1) -> np.ndarray:
    """Right-hand side ``f = (K ⊗ ... ⊗ K) vec(C)`` on the level ``l-1`` grid.

    With ``masked=True`` the coarse positions of ``coeffs`` are read as zero
    during the first-axis pass; ``coeffs`` itself is never copied or modified.
    """
    nd = coeffs.ndim
    dtype = coeffs.dtype
    K0 = _bands(hier, l, 0, dtype)
    f = _fiberwise(lambda c: _apply_bands(K0, c, 0), coeffs, 0, workers)
    if masked:
        # fibers along axis 0 whose other indices are all even carry the coarse nodes
        sel = (slice(None),) + (slice(None, None, 2),) * (nd - 1)
        f[sel] = _apply_bands(K0, coeffs[sel], 0, odd_only=True)
    for d in range(1, nd):
        Kd = _bands(hier, l, d, dtype)
        f = _fiberwise(lambda c, Kd=Kd, d=d: _apply_bands(Kd, c, d), f, d, workers)
    return f


def solve_mass(f: np.ndarray, hier: GridHierarchy, level: int, workers: int = 1) -> np.ndarray:
    """Solve the tensor-product mass system on ``level`` in place, one axis at a time."""
    for d in range(f.ndim):
        fac = _factor(hier, level, d, f.dtype)
        if workers > 1:
            f[...] = _fiberwise(lambda c, fac=fac, d=d: fac.solve(c, d), f, d, workers)
        else:
            fac.solve(f, d, out=f)
    return f


def compute_correction(coeffs, hier: GridHierarchy, l: int, *, masked: bool = False,
                       workers: int | None = None) -> np.ndarray:
    """Correction on the level ``l-1`` grid for level-``l`` coefficients.

    The result is the L2 projection onto the coarse piecewise-multilinear
    space of the function whose level-``l`` nodal values are ``coeffs``.
    Unless ``masked`` is set, ``coeffs`` must be zero at the coarse positions.
    """
    coeffs = _float(coeffs)
    if not 1 <= l <= hier.levels:
        raise ValueError(f"level {l} out of range [1, {hier.levels}]")
    if coeffs.shape != hier.level_shape(l):
        raise ValueError(
            f"coefficient shape {coeffs.shape} does not match level {l} shape {hier.level_shape(l)}"
        )
    if not masked and np.any(coeffs[coarse_slices(hier.ndim)] != 0):
        raise ValueError("coefficients must be zero at the coarse-level positions")
    workers = default_workers() if workers is None else max(1, workers)
    f = load_vector(coeffs, hier, l, masked=masked, workers=workers)
    return solve_mass(f, hier, l - 1, workers=workers)


def workspace_elements(hier: GridHierarchy, l: int) -> int:
    """Peak elements held in correction buffers while processing level ``l``.

    The first-axis pass reads the data array directly; after that each pass
    reads one workspace buffer and writes the next, and the solve is in place.
    """
    fine = list(hier.level_shape(l))
    coarse = hier.level_shape(l - 1)
    shape = fine[:]
    shape[0] = coarse[0]
    peak = int(np.prod(shape))
    for d in range(1, len(fine)):
        nxt = shape[:]
        nxt[d] = coarse[d]
        peak = max(peak, int(np.prod(shape)) + int(np.prod(nxt)))
        shape = nxt
    return peak
