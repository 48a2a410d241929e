"""Analytical memory-traffic cost model for the three refactoring kernel styles.

GPK is the grid-wise coefficient kernel, LPK the line-wise mass-trans
stencil kernel, IPK the iterative tridiagonal-solve kernel.  Estimates count
transaction-padded elements touched per thread block, times the block count,
read and written once each, divided by peak memory bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

KERNELS = ("GPK", "LPK", "IPK")

# passes over the level's data: coefficients, workspace copy, correction, apply correction
PASSES_PER_LEVEL = Fraction(1) + Fraction(1) + Fraction(21, 4) + Fraction(1, 8)
# each coarser level of a 3-D grid holds 1/8 of the nodes
LEVEL_RATIO = Fraction(1, 8)


@dataclass(frozen=True)
class KernelConfig:
    bx: int
    by: int
    bz: int

    def __post_init__(self):
        for name in ("bx", "by", "bz"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"block dimension {name} must be a positive integer, got {v}")

    def __str__(self):
        return f"({self.bx},{self.by},{self.bz})"


@dataclass(frozen=True)
class PerfParams:
    """Problem size and machine constants.

    ``n`` elements per dimension, ``s`` bytes per memory transaction, ``l``
    bytes per element, ``g`` ghost-region width (defaults to one transaction),
    ``peak_bw`` in bytes per second.
    """

    n: int
    l: int = 8
    s: int = 32
    g: int | None = None
    peak_bw: float = 900e9

    def __post_init__(self):
        if self.n < 1 or self.l < 1 or self.s < 1 or self.peak_bw <= 0:
            raise ValueError("performance parameters must be positive")
        if self.s % self.l:
            raise ValueError(f"transaction size {self.s} is not a multiple of element size {self.l}")
        if self.g is None:
            object.__setattr__(self, "g", self.s // self.l)
        elif self.g < 1:
            raise ValueError("ghost size must be positive")

    @property
    def per_transaction(self) -> int:
        return self.s // self.l


# Seven reference block shapes and their published estimated ranks (1 = fastest).
REFERENCE_CONFIGS = (
    KernelConfig(2, 2, 2),
    KernelConfig(4, 4, 4),
    KernelConfig(8, 4, 4),
    KernelConfig(16, 4, 4),
    KernelConfig(32, 4, 4),
    KernelConfig(64, 2, 2),
    KernelConfig(128, 2, 2),
)
REFERENCE_RANKS = {
    "GPK": (7, 6, 4, 2, 1, 5, 3),
    "LPK": (7, 6, 5, 4, 3, 2, 1),
    "IPK": (7, 1, 2, 3, 4, 5, 6),
}


def _cdiv(a: int, b: int) -> int:
    return -(-a // b)


def padded(elements: int, p: PerfParams) -> int:
    """Round a contiguous row of elements up to whole memory transactions."""
    t = p.per_transaction
    return _cdiv(elements, t) * t


def row_elements(kernel: str, cfg: KernelConfig, p: PerfParams) -> int:
    """Transaction-padded elements along x loaded per block (per block row)."""
    if kernel == "GPK":
        return padded(cfg.bx + 1, p)
    if kernel == "LPK":
        return padded(cfg.bx, p) + 2 * p.per_transaction
    if kernel == "IPK":
        return padded(p.g, p) + padded(cfg.bx, p) * _cdiv(p.n, cfg.bx)
    raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def elements_touched(kernel: str, cfg: KernelConfig, p: PerfParams) -> int:
    n = p.n
    rows = row_elements(kernel, cfg, p)
    if kernel == "GPK":
        return rows * (cfg.by + 1) * (cfg.bz + 1) * _cdiv(n, cfg.bx) * _cdiv(n, cfg.by) * _cdiv(n, cfg.bz)
    if kernel == "LPK":
        return rows * cfg.by * cfg.bz * _cdiv(n, cfg.bx) * _cdiv(n, cfg.by) * _cdiv(n, cfg.bz)
    # IPK blocks sweep the whole x extent, so x blocks are already in the row term
    return rows * cfg.by * cfg.bz * _cdiv(n, cfg.by) * _cdiv(n, cfg.bz)


def estimate_time(kernel: str, cfg: KernelConfig, p: PerfParams) -> float:
    """Estimated kernel time in seconds (every element read and written once)."""
    kernel = kernel.upper()
    return elements_touched(kernel, cfg, p) * 2 * p.l / p.peak_bw


def rank_configs(configs: Sequence[KernelConfig], kernel: str, p: PerfParams):
    """``(config, rank)`` pairs sorted by estimated time; ties keep input order."""
    configs = list(configs)
    if not configs:
        raise ValueError("no configurations to rank")
    times = [estimate_time(kernel, c, p) for c in configs]
    order = sorted(range(len(configs)), key=lambda i: times[i])
    return [(configs[i], rank) for rank, i in enumerate(order, start=1)]


def top_k(configs: Sequence[KernelConfig], kernel: str, p: PerfParams, k: int) -> list[KernelConfig]:
    if not 1 <= k <= len(configs):
        raise ValueError(f"k={k} must be between 1 and the number of configs ({len(configs)})")
    return [c for c, _ in rank_configs(configs, kernel, p)[:k]]


def accumulated_passes(levels: int | None = None) -> float:
    """Passes over the input for a full 3-D refactoring.

    With ``levels=None`` the per-level cost is summed over an unbounded
    geometric hierarchy; otherwise over ``levels`` levels.
    """
    if levels is None:
        return float(PASSES_PER_LEVEL / (1 - LEVEL_RATIO))
    if levels < 1:
        raise ValueError("levels must be positive")
    return float(PASSES_PER_LEVEL * sum(LEVEL_RATIO ** i for i in range(levels)))


def theoretical_peak(single_pass_throughput: float, levels: int | None = None) -> float:
    """Refactoring throughput bound from the measured single-pass throughput."""
    if single_pass_throughput <= 0:
        raise ValueError("throughput must be positive")
    return single_pass_throughput / accumulated_passes(levels)


def reference_comparison(p: PerfParams | None = None) -> list[dict]:
    """Model ranks of the seven reference configs next to the published ranks."""
    p = p or PerfParams(n=513, l=8, s=32, g=4)
    rows = [{"config": c, "model": {}, "published": {}} for c in REFERENCE_CONFIGS]
    for kernel in KERNELS:
        ranked = dict((c, r) for c, r in rank_configs(REFERENCE_CONFIGS, kernel, p))
        for row, pub in zip(rows, REFERENCE_RANKS[kernel]):
            row["model"][kernel] = ranked[row["config"]]
            row["published"][kernel] = pub
    return rows


def format_comparison(rows: list[dict]) -> str:
    lines = [f"{'Bz':>3} {'By':>3} {'Bx':>4}  " + "  ".join(f"{k:>9}" for k in KERNELS)]
    for row in rows:
        c = row["config"]
        cells = "  ".join(f"{row['model'][k]:>4}/{row['published'][k]:<4}" for k in KERNELS)
        lines.append(f"{c.bz:>3} {c.by:>3} {c.bx:>4}  {cells}")
    agree = {k: all(r["model"][k] == r["published"][k] for r in rows) for k in KERNELS}
    lines.append("model/published; exact column agreement: "
                 + ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in agree.items()))
    return "\n".join(lines)
