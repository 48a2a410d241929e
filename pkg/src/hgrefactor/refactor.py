"""Multi-level decomposition and prefix recomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correction import compute_correction
from .grid import GridHierarchy
from .transforms import coarse_slices, node_classes, subtract_interpolant


@dataclass
class RefactoredArray:
    """Finest-shape array of class-0 nodal values and class 1..L coefficients."""

    data: np.ndarray
    hier: GridHierarchy

    def __post_init__(self):
        if self.data.shape != self.hier.shape:
            raise ValueError(f"data shape {self.data.shape} does not match grid {self.hier.shape}")
        if self.data.dtype not in (np.float32, np.float64):
            raise ValueError(f"unsupported dtype {self.data.dtype}")

    @property
    def precision(self) -> int:
        return self.data.dtype.itemsize

    @property
    def levels(self) -> int:
        return self.hier.levels

    def class_values(self, l: int) -> np.ndarray:
        """Class-``l`` values in row-major order of their finest-grid indices."""
        self.hier._check_level(l)
        return self.data[node_classes(self.hier) == l]

    def set_class(self, l: int, values) -> None:
        self.hier._check_level(l)
        mask = node_classes(self.hier) == l
        values = np.asarray(values, dtype=self.data.dtype).reshape(-1)
        if values.size != self.hier.class_size(l):
            raise ValueError(f"class {l} needs {self.hier.class_size(l)} values, got {values.size}")
        self.data[mask] = values

    @classmethod
    def from_classes(cls, classes, hier: GridHierarchy, dtype=np.float64) -> "RefactoredArray":
        """Scatter a list of class payloads (classes 0..m) back into a finest array.

        Classes past the end of the list are zero.
        """
        r = cls(np.zeros(hier.shape, dtype=dtype), hier)
        for l, values in enumerate(classes):
            r.set_class(l, values)
        return r

    def truncated(self, m: int) -> "RefactoredArray":
        """Copy with every class above ``m`` zeroed."""
        self.hier._check_level(m)
        data = self.data.copy()
        data[node_classes(self.hier) > m] = 0
        return RefactoredArray(data, self.hier)


@dataclass(frozen=True)
class ErrorReport:
    l2_abs: float
    l2_rel: float
    linf_abs: float
    linf_rel: float

    def as_dict(self) -> dict:
        return {
            "l2_abs": self.l2_abs,
            "l2_rel": self.l2_rel,
            "linf_abs": self.linf_abs,
            "linf_rel": self.linf_rel,
        }


def decompose(data, hier: GridHierarchy, workers: int | None = None) -> RefactoredArray:
    """Refactor finest-grid data into coefficient classes, finest level first.

    At each level the new nodes are replaced by their coefficients, and the
    coarse nodes receive the correction computed from those coefficients.
    """
    data = np.asarray(data)
    if data.shape != hier.shape:
        raise ValueError(f"data shape {data.shape} does not match grid {hier.shape}")
    if data.dtype not in (np.float32, np.float64):
        data = data.astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise ValueError("input contains non-finite values")
    out = data.copy()
    for l in range(hier.levels, 0, -1):
        view = out[hier.level_slices(l)]
        subtract_interpolant(view, hier, l, sign=-1.0)
        z = compute_correction(view, hier, l, masked=True, workers=workers)
        view[coarse_slices(hier.ndim)] += z
    return RefactoredArray(out, hier)


def recompose(r: RefactoredArray, upto_class: int | None = None,
              workers: int | None = None) -> np.ndarray:
    """Reconstruct finest-grid data from classes ``0..upto_class``.

    Classes above the cutoff are treated as zero, so those levels reduce to
    plain multilinear interpolation.
    """
    hier = r.hier
    m = hier.levels if upto_class is None else int(upto_class)
    if not 0 <= m <= hier.levels:
        raise ValueError(f"class cutoff {m} out of range [0, {hier.levels}]")
    out = r.truncated(m).data
    for l in range(1, hier.levels + 1):
        view = out[hier.level_slices(l)]
        if l <= m:
            z = compute_correction(view, hier, l, masked=True, workers=workers)
            view[coarse_slices(hier.ndim)] -= z
        subtract_interpolant(view, hier, l, sign=+1.0)
    return out


def error_report(original, reconstruction) -> ErrorReport:
    """Discrete L2 and max-norm errors, absolute and relative to ``original``."""
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(reconstruction, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = (a - b).reshape(-1)
    l2 = float(np.linalg.norm(diff))
    linf = float(np.max(np.abs(diff))) if diff.size else 0.0
    a_l2 = float(np.linalg.norm(a.reshape(-1)))
    a_inf = float(np.max(np.abs(a))) if a.size else 0.0

    def rel(err, ref):
        if ref == 0:
            return 0.0 if err == 0 else float("inf")
        return err / ref

    return ErrorReport(l2, rel(l2, a_l2), linf, rel(linf, a_inf))
