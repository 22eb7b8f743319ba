"""Plain-text readers and writers: XYZ and ASCII PLY clouds, OBJ meshes and grasp lists.

Grasp files hold one grasp per line as 14 numbers: the rotation matrix in
row-major order (9), the translation (3), the finger opening and the quality.
The grasp frame closes along its x axis and approaches along its -z axis.
Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import numpy as np

from .errors import EmptyGeometry, GeometryError, ParseError
from .geometry import PointCloud, RigidPose, TriMesh, _reorthonormalize
from .grasp import GraspCandidate

PathLike = Union[str, Path]
ROTATION_TOL = 1e-6


def _floats(tokens, lineno, path):
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-numeric value in {' '.join(tokens)!r}", lineno, path) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite value", lineno, path)
    return vals


def _fmt(x) -> str:
    # geometry files keep full precision so that round trips are exact
    return repr(float(x))


# ---------------------------------------------------------------------------
# Point clouds
# ---------------------------------------------------------------------------


def load_point_cloud(path: PathLike) -> PointCloud:
    """Read an ASCII PLY (``x y z [nx ny nz]``) or whitespace-separated XYZ file."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if lines and lines[0].strip() == "ply":
        return _read_ply(lines, path)
    rows = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        vals = _floats(line.replace(",", " ").split(), lineno, path)
        if len(vals) not in (3, 6):
            raise ParseError(f"expected 3 or 6 numbers, got {len(vals)}", lineno, path)
        rows.append(vals)
    return _cloud_from_rows(rows, path)


def _cloud_from_rows(rows, path) -> PointCloud:
    if not rows:
        raise EmptyGeometry(f"{path}: no points")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError("mixed rows with and without normals", None, path)
    a = np.array(rows, dtype=float)
    try:
        return PointCloud(a[:, :3], a[:, 3:6] if a.shape[1] == 6 else None)
    except GeometryError as exc:
        raise ParseError(str(exc), None, path) from exc


def _read_ply(lines: List[str], path: Path) -> PointCloud:
    count, props, in_vertex, fmt_ok = None, [], False, False
    body = None
    for lineno, line in enumerate(lines, 1):
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            if len(tok) < 2 or tok[1] != "ascii":
                raise ParseError("only ASCII PLY is supported", lineno, path)
            fmt_ok = True
        elif tok[0] == "element":
            in_vertex = len(tok) == 3 and tok[1] == "vertex"
            if in_vertex:
                try:
                    count = int(tok[2])
                except ValueError:
                    raise ParseError("bad vertex count", lineno, path) from None
        elif tok[0] == "property" and in_vertex:
            props.append(tok[-1])
        elif tok[0] == "end_header":
            body = lineno
            break
    if body is None or not fmt_ok or count is None:
        raise ParseError("incomplete PLY header", None, path)
    try:
        cols = [props.index(c) for c in ("x", "y", "z")]
    except ValueError:
        raise ParseError("PLY vertices need x, y and z properties", None, path) from None
    ncols = [props.index(c) for c in ("nx", "ny", "nz")] if all(c in props for c in ("nx", "ny", "nz")) else []
    rows = []
    for lineno in range(body + 1, body + 1 + count):
        if lineno > len(lines):
            raise ParseError(f"expected {count} vertices, file ended early", lineno, path)
        vals = _floats(lines[lineno - 1].split(), lineno, path)
        if len(vals) < len(props):
            raise ParseError(f"expected {len(props)} values, got {len(vals)}", lineno, path)
        rows.append([vals[i] for i in cols + ncols])
    return _cloud_from_rows(rows, path)


def write_point_cloud(path: PathLike, cloud: PointCloud) -> None:
    """Write PLY if the suffix is ``.ply``, else XYZ; normals are kept when present."""
    path = Path(path)
    data = cloud.points if cloud.normals is None else np.hstack([cloud.points, cloud.normals])
    body = "".join(" ".join(_fmt(v) for v in row) + "\n" for row in data)
    if path.suffix.lower() == ".ply":
        names = ["x", "y", "z"] + (["nx", "ny", "nz"] if cloud.normals is not None else [])
        header = ["ply", "format ascii 1.0", f"element vertex {len(data)}"]
        header += [f"property float {n}" for n in names] + ["end_header"]
        body = "\n".join(header) + "\n" + body
    path.write_text(body)


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------


def load_mesh(path: PathLike) -> TriMesh:
    """Read ``v`` and ``f`` records of an ASCII OBJ; polygons are fan-split."""
    path = Path(path)
    verts, faces, face_lines = [], [], []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        tok = line.split("#", 1)[0].split()
        if not tok:
            continue
        if tok[0] == "v":
            vals = _floats(tok[1:4], lineno, path)
            if len(vals) != 3:
                raise ParseError("vertex needs three coordinates", lineno, path)
            verts.append(vals)
        elif tok[0] == "f":
            if len(tok) < 4:
                raise ParseError("face needs at least three vertices", lineno, path)
            try:
                idx = [int(t.split("/")[0]) for t in tok[1:]]
            except ValueError:
                raise ParseError("bad face index", lineno, path) from None
            for a, b in zip(idx[1:-1], idx[2:]):
                faces.append((idx[0], a, b))
                face_lines.append(lineno)
    n = len(verts)
    out = []
    for (a, b, c), lineno in zip(faces, face_lines):
        tri = []
        for i in (a, b, c):
            j = i - 1 if i > 0 else n + i
            if not 0 <= j < n or i == 0:
                raise ParseError(f"face index {i} out of range (1..{n})", lineno, path)
            tri.append(j)
        out.append(tri)
    if not out:
        raise EmptyGeometry(f"{path}: no faces")
    return TriMesh(np.array(verts, dtype=float), np.array(out, dtype=np.int64))


def write_mesh(path: PathLike, mesh: TriMesh) -> None:
    lines = ["v " + " ".join(_fmt(c) for c in v) for v in mesh.vertices]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Grasps
# ---------------------------------------------------------------------------


def parse_grasps(text: str, path=None, max_opening: float = float("inf")) -> List[GraspCandidate]:
    grasps = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        vals = _floats(line.replace(",", " ").split(), lineno, path)
        if len(vals) != 14:
            raise ParseError(f"expected 14 numbers, got {len(vals)}", lineno, path)
        R = np.array(vals[:9]).reshape(3, 3)
        # text round-trips lose ~1e-10; accept small drift and snap back
        if np.abs(R.T @ R - np.eye(3)).max() < ROTATION_TOL and np.linalg.det(R) > 0:
            R = _reorthonormalize(R)
        try:
            pose = RigidPose(R, vals[9:12])
            if vals[12] > max_opening:
                raise ValueError(f"width {vals[12]} exceeds the gripper opening {max_opening}")
            grasps.append(GraspCandidate(pose, vals[12], vals[13]))
        except (GeometryError, ValueError) as exc:
            raise ParseError(str(exc), lineno, path) from exc
    return grasps


def load_grasps(path: PathLike, max_opening: float = float("inf")) -> List[GraspCandidate]:
    path = Path(path)
    return parse_grasps(path.read_text(), path, max_opening)


def format_grasps(grasps: Iterable[GraspCandidate]) -> str:
    out = ["# r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz width quality"]
    for g in grasps:
        nums = list(g.pose.rotation.reshape(-1)) + list(g.pose.translation) + [g.width, g.quality]
        out.append(" ".join(_fmt(v) for v in nums))
    return "\n".join(out) + "\n"


def write_grasps(path: PathLike, grasps: Sequence[GraspCandidate]) -> None:
    Path(path).write_text(format_grasps(grasps))
