"""Command-line front end.

Exit codes: 0 on success, 1 for usage errors, 2 for data or format errors.
Pass ``--json`` to any subcommand to get one machine-readable JSON line after
the human-readable report.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import perfmodel
from .correction import WORKERS_ENV
from .grid import build_hierarchy
from .refactor import decompose, error_report, recompose
from .storage import FormatError, format_info, info, read_prefix, write_file

EXIT_USAGE = 1
EXIT_DATA = 2

_PRECISIONS = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_ints(text: str, what: str) -> list[int]:
    try:
        vals = [int(t) for t in text.replace("x", ",").split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise UsageError(f"{what} must be positive integers, got {text!r}")
    return vals


def _read_coords(path: str, dims: list[int]) -> list[np.ndarray]:
    """One float per line, dimension 0 first; blank lines and '#' comments ignored."""
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                vals.append(float(line))
    if len(vals) != sum(dims):
        raise DataError(f"{path}: expected {sum(dims)} coordinates for dims {dims}, got {len(vals)}")
    out, start = [], 0
    for n in dims:
        out.append(np.array(vals[start:start + n]))
        start += n
    return out


def _read_raw(path: str, dims: list[int], dtype: np.dtype) -> np.ndarray:
    expected = int(np.prod(dims)) * dtype.itemsize
    size = os.path.getsize(path)
    if size != expected:
        raise DataError(
            f"{path}: {size} bytes does not match dims {dims} x {dtype.itemsize} bytes = {expected}"
        )
    return np.fromfile(path, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))


def _emit(args, text: str, payload: dict) -> None:
    print(text)
    if args.json:
        print(json.dumps(payload, sort_keys=True))


def cmd_decompose(args) -> int:
    dims = _parse_ints(args.dims, "--dims")
    dtype = _PRECISIONS[args.precision]
    if args.coords_file and args.uniform is not None:
        raise UsageError("--coords-file and --uniform are mutually exclusive")
    if args.uniform not in (None, "") and _parse_ints(args.uniform, "--uniform") != dims:
        raise UsageError("--uniform sizes must match --dims")
    if args.coords_file:
        coords = _read_coords(args.coords_file, dims)
    else:
        coords = [np.arange(n, dtype=np.float64) for n in dims]
    try:
        hier = build_hierarchy(coords)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    data = _read_raw(args.input, dims, dtype)
    r = decompose(data, hier)
    nbytes = write_file(r, args.output)
    sizes = [hier.class_size(l) * dtype.itemsize for l in range(hier.class_count())]
    lines = [f"wrote {args.output}: {nbytes} bytes, {hier.class_count()} classes"]
    lines += [f"  class {l}: {b} bytes" for l, b in enumerate(sizes)]
    _emit(args, "\n".join(lines), {
        "command": "decompose", "output": args.output, "bytes": nbytes,
        "class_count": hier.class_count(), "class_bytes": sizes,
    })
    return 0


def cmd_recompose(args) -> int:
    r, nread = read_prefix(args.input, args.classes)
    out = recompose(r, r.hier.levels if args.classes is None else args.classes)
    out.astype(out.dtype.newbyteorder("<"), copy=False).tofile(args.output)
    full = os.path.getsize(args.input)
    m = r.hier.levels if args.classes is None else args.classes
    text = (f"wrote {args.output}: classes 0..{m} of {r.hier.class_count()}; "
            f"read {nread} of {full} bytes ({nread / full:.4f})")
    _emit(args, text, {
        "command": "recompose", "output": args.output, "classes": m,
        "bytes_read": nread, "file_bytes": full,
    })
    return 0


def cmd_info(args) -> int:
    summary = info(args.input)
    _emit(args, format_info(summary), dict(summary, command="info"))
    return 0


def cmd_error(args) -> int:
    dims = _parse_ints(args.dims, "--dims")
    dtype = _PRECISIONS[args.precision]
    a = _read_raw(args.original, dims, dtype)
    b = _read_raw(args.reconstruction, dims, dtype)
    rep = error_report(a, b)
    text = "\n".join(f"{k}: {v:.6e}" for k, v in rep.as_dict().items())
    _emit(args, text, dict(rep.as_dict(), command="error"))
    return 0


def _read_configs(path: str) -> list[perfmodel.KernelConfig]:
    """One ``bx,by,bz`` (or whitespace-separated) block shape per line."""
    configs = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].replace(",", " ").split()
            if not line:
                continue
            if len(line) != 3:
                raise DataError(f"{path}: expected 'bx by bz', got {' '.join(line)!r}")
            try:
                configs.append(perfmodel.KernelConfig(*(int(t) for t in line)))
            except ValueError as exc:
                raise DataError(f"{path}: {exc}") from exc
    return configs


def cmd_rank_configs(args) -> int:
    try:
        p = perfmodel.PerfParams(n=args.n, l=args.bytes_per_element, s=args.transaction_bytes,
                                 g=args.ghost, peak_bw=args.bandwidth)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    configs = _read_configs(args.configs) if args.configs else list(perfmodel.REFERENCE_CONFIGS)
    kernels = [args.kernel] if args.kernel else list(perfmodel.KERNELS)
    ranks = {k: dict((c, r) for c, r in perfmodel.rank_configs(configs, k, p)) for k in kernels}
    lines = [f"{'Bx':>5} {'By':>4} {'Bz':>4}  " + "  ".join(f"{k:>4} {'est (s)':>11}" for k in kernels)]
    rows = []
    for c in configs:
        ts = {k: perfmodel.estimate_time(k, c, p) for k in kernels}
        lines.append(f"{c.bx:>5} {c.by:>4} {c.bz:>4}  "
                     + "  ".join(f"{ranks[k][c]:>4} {ts[k]:>11.4e}" for k in kernels))
        rows.append({"config": [c.bx, c.by, c.bz],
                     "rank": {k: ranks[k][c] for k in kernels}, "time": ts})
    if args.top:
        for k in kernels:
            best = perfmodel.top_k(configs, k, p, min(args.top, len(configs)))
            lines.append(f"top {len(best)} {k}: " + " ".join(str(c) for c in best))
    if args.compare_reference:
        lines.append("")
        lines.append(perfmodel.format_comparison(perfmodel.reference_comparison(p)))
    _emit(args, "\n".join(lines), {"command": "rank-configs", "n": p.n, "rows": rows})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hgrefactor", description=__doc__.splitlines()[0])
    parser.add_argument("--workers", type=int, default=None,
                        help=f"worker threads for fiber batches (default: ${WORKERS_ENV} or 1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="also print a JSON report line")

    p = sub.add_parser("decompose", help="refactor a raw volume into a .hg file")
    p.add_argument("--input", required=True)
    p.add_argument("--dims", required=True, help="finest sizes, e.g. 65,65,65")
    p.add_argument("--precision", choices=sorted(_PRECISIONS), default="f64")
    p.add_argument("--coords-file", help="node coordinates, one per line, dimension 0 first")
    p.add_argument("--uniform", nargs="?", const="", default=None,
                   help="uniform coordinates 0..n-1 (the default)")
    p.add_argument("--output", required=True)
    common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("recompose", help="reconstruct a raw volume from a class prefix")
    p.add_argument("--input", required=True)
    p.add_argument("--classes", type=int, default=None, help="highest class to use (default: all)")
    p.add_argument("--output", required=True)
    common(p)
    p.set_defaults(func=cmd_recompose)

    p = sub.add_parser("info", help="summarize a .hg file")
    p.add_argument("--input", required=True)
    common(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("error", help="compare two raw volumes")
    p.add_argument("--original", required=True)
    p.add_argument("--reconstruction", required=True)
    p.add_argument("--dims", required=True)
    p.add_argument("--precision", choices=sorted(_PRECISIONS), default="f64")
    common(p)
    p.set_defaults(func=cmd_error)

    p = sub.add_parser("rank-configs", help="rank thread-block shapes with the cost model")
    p.add_argument("--n", type=int, required=True, help="elements per dimension")
    p.add_argument("--bytes-per-element", type=int, default=8)
    p.add_argument("--transaction-bytes", type=int, default=32)
    p.add_argument("--ghost", type=int, default=None)
    p.add_argument("--bandwidth", type=float, default=900e9, help="peak bytes/s")
    p.add_argument("--configs", help="file of 'bx,by,bz' lines (default: seven reference shapes)")
    p.add_argument("--kernel", choices=perfmodel.KERNELS)
    p.add_argument("--top", type=int, default=0, help="also list the k best shapes per kernel")
    p.add_argument("--compare-reference", action="store_true",
                   help="print model vs published ranks for the reference shapes")
    common(p)
    p.set_defaults(func=cmd_rank_configs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None:
        os.environ[WORKERS_ENV] = str(max(1, args.workers))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hgrefactor: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FormatError, ValueError, OSError) as exc:
        print(f"hgrefactor: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
