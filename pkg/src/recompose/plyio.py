"""PLY point-cloud reader/writer (ASCII and binary little-endian).

Only the vertex element is consumed; x, y, z and red, green, blue properties
are required, anything else is skipped.  Colors are stored 8-bit.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ingest import ColoredPointCloud


class PlyError(ValueError):
    """Base class for PLY parse failures."""


class PlyHeaderError(PlyError):
    """Malformed or unsupported header."""


class PlyPropertyError(PlyError):
    """Required vertex property missing or of unsupported type."""


class PlyPayloadError(PlyError):
    """Body shorter than the header promises, or unparseable values."""


_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_REQUIRED = ("x", "y", "z", "red", "green", "blue")


def _parse_header(raw: bytes):
    end = raw.find(b"end_header\n")
    if not raw.startswith(b"ply") or end < 0:
        raise PlyHeaderError("not a PLY file (missing 'ply' magic or 'end_header')")
    header_lines = raw[:end].decode("ascii", errors="replace").splitlines()
    body = raw[end + len(b"end_header\n"):]

    fmt = None
    elements = []  # (name, count, [(prop_name, dtype_token)])
    for line in header_lines[1:]:
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 3 or tokens[1] not in ("ascii", "binary_little_endian"):
                raise PlyHeaderError(f"unsupported PLY format line: {line!r}")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3 or not tokens[2].isdigit():
                raise PlyHeaderError(f"malformed element line: {line!r}")
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise PlyHeaderError("property declared before any element")
            if tokens[1] == "list":
                if len(tokens) != 5:
                    raise PlyHeaderError(f"malformed list property line: {line!r}")
                elements[-1][2].append((tokens[4], ("list", tokens[2], tokens[3])))
            else:
                if len(tokens) != 3:
                    raise PlyHeaderError(f"malformed property line: {line!r}")
                elements[-1][2].append((tokens[2], tokens[1]))
        elif tokens[0] in ("ply", "end_header"):
            continue
        else:
            raise PlyHeaderError(f"unrecognized header line: {line!r}")
    if fmt is None:
        raise PlyHeaderError("header missing 'format' line")
    return fmt, elements, body


def load_ply(path: str | Path) -> ColoredPointCloud:
    raw = Path(path).read_bytes()
    fmt, elements, body = _parse_header(raw)

    vertex = next((e for e in elements if e[0] == "vertex"), None)
    if vertex is None:
        raise PlyHeaderError("no vertex element in header")
    _, count, props = vertex
    names = [p[0] for p in props]
    for req in _REQUIRED:
        if req not in names:
            raise PlyPropertyError(f"vertex element missing required property {req!r}")
    for name, token in props:
        if isinstance(token, tuple):
            raise PlyPropertyError(f"list property {name!r} on vertex element is not supported")
        if token not in _DTYPES:
            raise PlyPropertyError(f"property {name!r} has unsupported type {token!r}")

    if elements[0][0] != "vertex":
        raise PlyHeaderError("vertex must be the first element (others cannot be skipped reliably)")

    if fmt == "ascii":
        table = _read_ascii_rows(body, count, len(props), path)
    else:
        table = _read_binary_rows(body, count, props, path)

    cols = {name: table[:, i] for i, (name, _) in enumerate(props)}
    positions = np.stack([cols["x"], cols["y"], cols["z"]], axis=1)
    colors = np.stack([cols["red"], cols["green"], cols["blue"]], axis=1)
    # 8-bit color convention; float color properties are assumed already in [0, 1]
    color_types = {name: tok for name, tok in props}
    for i, ch in enumerate(("red", "green", "blue")):
        if not color_types[ch].startswith("float") and color_types[ch] != "double":
            colors[:, i] = colors[:, i] / 255.0
    return ColoredPointCloud(positions, np.clip(colors, 0.0, 1.0))


def _read_ascii_rows(body: bytes, count: int, ncols: int, path) -> np.ndarray:
    lines = [ln for ln in body.decode("ascii", errors="replace").splitlines() if ln.strip()]
    if len(lines) < count:
        raise PlyPayloadError(f"{path}: expected {count} vertex rows, found {len(lines)}")
    rows = np.empty((count, ncols), dtype=np.float64)
    for i in range(count):
        fields = lines[i].split()
        if len(fields) < ncols:
            raise PlyPayloadError(f"{path}: vertex row {i} has {len(fields)} fields, expected {ncols}")
        try:
            rows[i] = [float(f) for f in fields[:ncols]]
        except ValueError as exc:
            raise PlyPayloadError(f"{path}: unparseable vertex row {i}: {exc}") from exc
    return rows


def _read_binary_rows(body: bytes, count: int, props, path) -> np.ndarray:
    dtype = np.dtype([(name, "<" + _DTYPES[tok]) for name, tok in props])
    needed = dtype.itemsize * count
    if len(body) < needed:
        raise PlyPayloadError(f"{path}: payload truncated ({len(body)} bytes, need {needed})")
    records = np.frombuffer(body[:needed], dtype=dtype)
    return np.stack([records[name].astype(np.float64) for name, _ in props], axis=1)


def save_ply(cloud: ColoredPointCloud, path: str | Path, binary: bool = True) -> None:
    """Write positions as float32 and colors as 8-bit uchar."""
    n = cloud.count
    header = (
        "ply\n"
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0\n"
        f"element vertex {n}\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
    )
    pos = cloud.positions.astype("<f4")
    col = np.floor(cloud.colors * 255.0 + 0.5).astype(np.uint8)
    path = Path(path)
    if binary:
        dtype = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                          ("red", "u1"), ("green", "u1"), ("blue", "u1")])
        records = np.empty(n, dtype=dtype)
        for i, name in enumerate(("x", "y", "z")):
            records[name] = pos[:, i]
        for i, name in enumerate(("red", "green", "blue")):
            records[name] = col[:, i]
        path.write_bytes(header.encode("ascii") + records.tobytes())
    else:
        lines = [
            f"{pos[i, 0]:.9g} {pos[i, 1]:.9g} {pos[i, 2]:.9g} {col[i, 0]} {col[i, 1]} {col[i, 2]}"
            for i in range(n)
        ]
        path.write_text(header + "\n".join(lines) + "\n", encoding="ascii")
