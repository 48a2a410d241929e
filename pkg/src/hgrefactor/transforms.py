"""Multilinear interpolation between adjacent levels and hierarchical coefficients.

All functions take compact level arrays: an array "over N_l" has shape
``hier.level_shape(l)`` and may be a strided view into a finest-grid array.
Within a level-``l`` array the level-``l-1`` nodes sit at even indices along
every axis.
"""

from __future__ import annotations

import itertools

import numpy as np

from .grid import GridHierarchy


def interp_weights(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear weights of every odd fine node toward its two coarse neighbours.

    ``h`` holds the fine spacings of one fiber (length ``2m``).  Returns
    ``(w_left, w_right)``, each of length ``m``: odd node ``2i+1`` takes
    ``w_left[i]`` of coarse node ``i`` and ``w_right[i]`` of coarse node ``i+1``.
    """
    hl = h[0::2]
    hr = h[1::2]
    span = hl + hr
    return hr / span, hl / span


def _level_weights(hier: GridHierarchy, l: int, d: int, dtype) -> tuple[np.ndarray, np.ndarray]:
    key = ("w", l, d, np.dtype(dtype).str)
    cache = hier._cache
    if key not in cache:
        wl, wr = interp_weights(hier.spacings(l, d))
        cache[key] = (wl.astype(dtype), wr.astype(dtype))
    return cache[key]


def parities(ndim: int):
    """Parity patterns of the nodes new at a level (all except all-even)."""
    return [p for p in itertools.product((0, 1), repeat=ndim) if any(p)]


def parity_slices(p) -> tuple[slice, ...]:
    return tuple(slice(1, None, 2) if odd else slice(0, None, 2) for odd in p)


def coarse_slices(ndim: int) -> tuple[slice, ...]:
    return (slice(None, None, 2),) * ndim


def _broadcast(w: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = w.size
    return w.reshape(shape)


def interpolate_class(coarse: np.ndarray, hier: GridHierarchy, l: int, p) -> np.ndarray:
    """Interpolated values at the level-``l`` nodes of parity pattern ``p``.

    A node odd along ``m`` axes is a weighted sum of its ``2**m`` bracketing
    coarse nodes; axes are combined in ascending order.
    """
    out = coarse
    for d, odd in enumerate(p):
        if not odd:
            continue
        wl, wr = _level_weights(hier, l, d, coarse.dtype)
        lead = (slice(None),) * d
        lo = out[lead + (slice(None, -1),)]
        hi = out[lead + (slice(1, None),)]
        out = _broadcast(wl, d, out.ndim) * lo + _broadcast(wr, d, out.ndim) * hi
    return out


def _check_shapes(hier: GridHierarchy, l: int, coarse=None, fine=None) -> None:
    if not 1 <= l <= hier.levels:
        raise ValueError(f"level {l} out of range [1, {hier.levels}]")
    if coarse is not None and coarse.shape != hier.level_shape(l - 1):
        raise ValueError(
            f"coarse array shape {coarse.shape} does not match level {l - 1} "
            f"shape {hier.level_shape(l - 1)}"
        )
    if fine is not None and fine.shape != hier.level_shape(l):
        raise ValueError(
            f"array shape {fine.shape} does not match level {l} shape {hier.level_shape(l)}"
        )


def _as_float(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype not in (np.float32, np.float64):
        a = a.astype(np.float64)
    return a


def interpolate_to_fine(values_at_coarse, hier: GridHierarchy, l: int) -> np.ndarray:
    """Piecewise multilinear interpolant of level ``l-1`` values on the level-``l`` grid."""
    coarse = _as_float(values_at_coarse)
    _check_shapes(hier, l, coarse=coarse)
    out = np.empty(hier.level_shape(l), dtype=coarse.dtype)
    out[coarse_slices(hier.ndim)] = coarse
    for p in parities(hier.ndim):
        out[parity_slices(p)] = interpolate_class(coarse, hier, l, p)
    return out


def subtract_interpolant(view: np.ndarray, hier: GridHierarchy, l: int, sign: float = -1.0) -> None:
    """Add ``sign`` times the interpolant of the even nodes to the odd nodes, in place.

    ``sign=-1`` turns nodal values into coefficients, ``sign=+1`` undoes it.
    The even (coarse) positions are read but never written.
    """
    coarse = view[coarse_slices(hier.ndim)]
    for p in parities(hier.ndim):
        target = view[parity_slices(p)]
        if sign < 0:
            target -= interpolate_class(coarse, hier, l, p)
        else:
            target += interpolate_class(coarse, hier, l, p)


def compute_coefficients(data, hier: GridHierarchy, l: int) -> np.ndarray:
    """Hierarchical coefficients of level-``l`` data.

    Nodes new at level ``l`` get ``data - interpolant of the coarse nodes``;
    the coarse positions are exactly zero.
    """
    data = _as_float(data)
    _check_shapes(hier, l, fine=data)
    out = np.array(data, copy=True)
    subtract_interpolant(out, hier, l, sign=-1.0)
    out[coarse_slices(hier.ndim)] = 0
    return out


def apply_coefficients(coarse_values, coeffs, hier: GridHierarchy, l: int) -> np.ndarray:
    """Inverse of :func:`compute_coefficients`: interpolant plus coefficients."""
    coarse = _as_float(coarse_values)
    coeffs = _as_float(coeffs)
    _check_shapes(hier, l, coarse=coarse, fine=coeffs)
    dtype = np.result_type(coarse, coeffs)
    return interpolate_to_fine(coarse.astype(dtype, copy=False), hier, l) + coeffs


def node_classes(hier: GridHierarchy) -> np.ndarray:
    """Class index of every finest-grid node (0 for the coarsest nodes)."""
    key = ("classes",)
    if key not in hier._cache:
        cls = np.full(hier.shape, hier.levels, dtype=np.int16)
        for l in range(hier.levels - 1, -1, -1):
            cls[hier.level_slices(l)] = l
        cls.setflags(write=False)
        hier._cache[key] = cls
    return hier._cache[key]
