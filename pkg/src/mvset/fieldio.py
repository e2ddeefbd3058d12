"""Field, mask, and contour serialization.

Two field encodings share one header vocabulary: a human-diffable csv
(`# dim nx ny [nz] ox oy [oz] h`, then one value per line, row-major) and a
raw binary regression format (16-byte magic, little-endian u32 dimensions
and counts, f64 origin, spacing, values).  Raw round trips are bit exact;
csv carries 17 significant digits, which also pins every double uniquely.
Readers sniff the magic, so one entry point handles both encodings.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, ScalarField, build_grid

MAGIC = b"MVSETFLD0001____"


class FieldIOError(ValueError):
    """Corrupt, truncated, or unrepresentable field file."""


def format_field_csv(dim: int, counts, origin, h: float, values) -> str:
    """Header plus one value line per entry; layout shared by masks."""
    parts = [str(dim)]
    parts += [str(int(c)) for c in counts]
    parts += [repr(float(v)) for v in origin]
    parts.append(repr(float(h)))
    lines = ["# " + " ".join(parts)]
    lines += [f"{v:.16e}" for v in np.asarray(values, dtype=float)]
    return "\n".join(lines) + "\n"


def _header_line(grid: GridSpec) -> str:
    return format_field_csv(grid.dim, (grid.nodes_per_axis,) * grid.dim,
                            grid.origin, grid.h, []).rstrip("\n")


def _grid_from_header(dim: int, counts, origin, h: float,
                      source: str) -> GridSpec:
    if len(set(counts)) != 1:
        raise FieldIOError(f"{source}: per-axis counts {tuple(counts)} differ; "
                           f"only square grids are supported")
    n = int(counts[0])
    extent = tuple(h * (n - 1) for _ in range(dim))
    return build_grid(dim, origin, extent, n)


def write_field_csv(path: str, field: ScalarField) -> None:
    g = field.grid
    text = format_field_csv(g.dim, (g.nodes_per_axis,) * g.dim, g.origin,
                            g.h, field.values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_field_raw(path: str, field: ScalarField) -> None:
    g = field.grid
    blob = bytearray(MAGIC)
    blob += np.asarray([g.dim] + [g.nodes_per_axis] * g.dim,
                       dtype="<u4").tobytes()
    blob += np.asarray(list(g.origin) + [g.h], dtype="<f8").tobytes()
    blob += np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def _parse_header(line: str, source: str):
    if not line.startswith("#"):
        raise FieldIOError(f"{source}: missing # header line")
    parts = line[1:].split()
    if not parts:
        raise FieldIOError(f"{source}: empty header")
    try:
        dim = int(parts[0])
    except ValueError:
        raise FieldIOError(f"{source}: bad dimension {parts[0]!r}") from None
    want = 1 + dim + dim + 1
    if len(parts) != want:
        raise FieldIOError(f"{source}: header has {len(parts)} entries, "
                           f"dim {dim} needs {want}")
    try:
        counts = [int(p) for p in parts[1:1 + dim]]
        origin = [float(p) for p in parts[1 + dim:1 + 2 * dim]]
        h = float(parts[-1])
    except ValueError:
        raise FieldIOError(f"{source}: malformed header numbers") from None
    return dim, counts, origin, h


def _read_csv_lines(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError:
        raise FieldIOError(f"{path}: not a raw field file (bad magic) and "
                           f"not text") from None
    lines = text.splitlines()
    if not lines:
        raise FieldIOError(f"{path}: empty file")
    dim, counts, origin, h = _parse_header(lines[0], path)
    body = [ln for ln in lines[1:] if ln.strip()]
    n_expected = int(np.prod(counts))
    if len(body) != n_expected:
        raise FieldIOError(f"{path}: expected {n_expected} value lines, "
                           f"found {len(body)}")
    return dim, counts, origin, h, body


def read_field_csv(path: str) -> ScalarField:
    dim, counts, origin, h, body = _read_csv_lines(path)
    try:
        values = np.asarray([float(ln) for ln in body])
    except ValueError:
        raise FieldIOError(f"{path}: non-numeric value line") from None
    grid = _grid_from_header(dim, counts, origin, h, path)
    return ScalarField(grid, values)


def read_field_raw(path: str) -> ScalarField:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) or blob[:len(MAGIC)] != MAGIC:
        raise FieldIOError(f"{path}: bad magic, not a raw field file")
    off = len(MAGIC)

    def take(dtype, count):
        nonlocal off
        try:
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off)
        except ValueError:
            raise FieldIOError(f"{path}: truncated raw field file") from None
        off += arr.itemsize * count
        return arr

    dim = int(take("<u4", 1)[0])
    if dim not in (2, 3):
        raise FieldIOError(f"{path}: dimension {dim} out of range")
    counts = take("<u4", dim).tolist()
    origin = take("<f8", dim).tolist()
    h = float(take("<f8", 1)[0])
    n = int(np.prod(counts))
    values = take("<f8", n).astype(float)
    if off != len(blob):
        raise FieldIOError(f"{path}: {len(blob) - off} trailing bytes after "
                           f"field data")
    grid = _grid_from_header(dim, counts, origin, h, path)
    return ScalarField(grid, values)


def read_field(path: str) -> ScalarField:
    """Sniff the magic and dispatch to the raw or csv reader."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return read_field_raw(path)
    return read_field_csv(path)


def write_mask(path: str, grid: GridSpec, mask) -> None:
    """Mask in field layout: same header, one 0 or 1 per line."""
    flat = np.asarray(mask).reshape(-1)
    if flat.shape != (grid.n_nodes,):
        raise FieldIOError(f"mask has {flat.size} entries, grid has "
                           f"{grid.n_nodes} nodes")
    lines = [_header_line(grid)]
    lines += ["1" if v else "0" for v in flat]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mask(path: str):
    """Read a 0/1 mask file; returns (grid, flat boolean array)."""
    dim, counts, origin, h, body = _read_csv_lines(path)
    values = []
    for ln in body:
        tok = ln.strip()
        if tok not in ("0", "1"):
            raise FieldIOError(f"{path}: mask entries must be 0 or 1, "
                               f"got {tok!r}")
        values.append(tok == "1")
    grid = _grid_from_header(dim, counts, origin, h, path)
    return grid, np.asarray(values, dtype=bool)


def write_contour(path: str, polylines) -> None:
    """Polyline vertices as x,y lines; a blank line separates polylines."""
    chunks = ["# contour polylines: one x,y vertex per line, "
              "blank line separates polylines"]
    for poly in polylines:
        pts = np.asarray(poly, dtype=float)
        chunks.append("\n".join(f"{p[0]:.16e},{p[1]:.16e}" for p in pts))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n\n".join(chunks) + "\n")
