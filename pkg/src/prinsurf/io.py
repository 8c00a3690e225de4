"""Plain-text formats: point-cloud CSV in, parametrization / surface / map /
report files out."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .core import DataError, FitConfig, ParseError, PointCloud3, ScalarMap2D
from .flatten import FlattenConfig, image_to_map, map_to_image
from .fitloop import FitResult
from .tps import eval_surface, lattice_nodes

NA = "NA"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_cloud_csv(path) -> PointCloud3:
    """Parse ``x,y,z`` or ``x,y,z,scalar`` rows; a non-numeric first row is a
    header.  Blank lines are skipped."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    rows = []
    ncol = None
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        cells = [c.strip() for c in row]
        if not cells or cells == [""]:
            continue
        if not rows and ncol is None and not all(_is_number(c) for c in cells):
            if len(cells) not in (3, 4):
                raise ParseError(f"{path}:{lineno}: header must have 3 or 4 columns")
            ncol = len(cells)
            continue
        if ncol is None:
            ncol = len(cells)
            if ncol not in (3, 4):
                raise ParseError(f"{path}:{lineno}: expected 3 or 4 columns, got {ncol}")
        if len(cells) != ncol:
            raise ParseError(f"{path}:{lineno}: expected {ncol} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    a = np.array(rows)
    return PointCloud3(a[:, :3], a[:, 3] if ncol == 4 else None)


def write_cloud_csv(path, cloud: PointCloud3) -> None:
    header = "x,y,z" if cloud.scalars is None else "x,y,z,scalar"
    lines = [header]
    for i, p in enumerate(cloud.points):
        cells = [_fmt(v) for v in p]
        if cloud.scalars is not None:
            cells.append(_fmt(cloud.scalars[i]))
        lines.append(",".join(cells))
    _write(Path(path), "\n".join(lines) + "\n")


def cloud_digest(cloud: PointCloud3) -> str:
    h = hashlib.sha256(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())
    if cloud.scalars is not None:
        h.update(np.ascontiguousarray(cloud.scalars, dtype="<f8").tobytes())
    return h.hexdigest()


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc


def pgm_pixels(smap: ScalarMap2D) -> np.ndarray:
    """8-bit raster: unmasked values min-max scaled to 0..255 (rounded half
    up), masked cells 0.  A constant map puts every unmasked cell at 255."""
    img = map_to_image(smap)
    ok = ~np.isnan(img)
    out = np.zeros(img.shape, dtype=np.int64)
    if ok.any():
        lo, hi = img[ok].min(), img[ok].max()
        if hi > lo:
            out[ok] = np.floor((img[ok] - lo) / (hi - lo) * 255.0 + 0.5).astype(np.int64)
        else:
            out[ok] = 255
    return out


def write_pgm(path, pixels: np.ndarray) -> None:
    """Plain (P2) PGM with maxval 255."""
    h, w = pixels.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join(str(int(v)) for v in row) for row in pixels]
    _write(Path(path), "\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if tokens[0] != "P2":
        raise ParseError(f"{path}: not a plain PGM file")
    w, h, _ = (int(t) for t in tokens[1:4])
    return np.array([int(t) for t in tokens[4 : 4 + w * h]]).reshape(h, w)


def write_map_csv(path, smap: ScalarMap2D) -> None:
    img = map_to_image(smap)
    lines = [",".join(NA if math.isnan(v) else _fmt(v) for v in row) for row in img]
    _write(Path(path), "\n".join(lines) + "\n")


def read_map_csv(path) -> ScalarMap2D:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([np.nan if c.strip() == NA else float(c) for c in line.split(",")])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: bad map cell") from None
    return image_to_map(np.array(rows))


def manifest_lines(
    cfg: FitConfig,
    fcfg: Optional[FlattenConfig],
    digest: str,
    version: str,
) -> list[str]:
    out = [f"tool_version: {version}", f"input_sha256: {digest}"]
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "lambda_grid":
            v = f"logspace({_fmt(v[0])}, {_fmt(v[-1])}, {len(v)})"
        out.append(f"fit.{f.name}: {v}")
    if fcfg is not None:
        out += [f"flatten.{f.name}: {getattr(fcfg, f.name)}" for f in dataclasses.fields(fcfg)]
    return out


def report_lines(result: FitResult) -> list[str]:
    r = result.report
    return [
        f"iterations_used: {r.iterations_used}",
        f"converged: {str(r.converged).lower()}",
        f"final_err: {_fmt(r.final_err)}",
        f"thres: {_fmt(r.thres)}",
        "err_trace: " + " ".join(_fmt(e) for e in r.err_trace),
        f"lambda: {_fmt(r.lam)}",
        f"boundary_fraction: {_fmt(r.boundary_fraction)}",
        f"self_consistency: {_fmt(result.self_consistency)}",
        f"surface_update: {_fmt(result.surface_update)}",
        "centroid: " + " ".join(_fmt(c) for c in result.centroid),
        f"fit_points: {len(result.fit_index)}",
        f"total_points: {result.params.n}",
    ]


def write_outputs(
    result: FitResult,
    out_dir,
    smap: Optional[ScalarMap2D] = None,
    manifest: Optional[list[str]] = None,
    extra: Optional[list[str]] = None,
    n_export: int = 50,
    timestamp: Optional[str] = None,
) -> list[Path]:
    """Write params.csv, surface.csv, report.txt and, with a map, map.csv and
    map.pgm into `out_dir` (created if missing).  Returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out}: {exc.strerror}") from exc
    written = []

    T = result.params.coords
    lines = ["index,t1,t2,proj_distance"]
    lines += [
        f"{i},{_fmt(T[i, 0])},{_fmt(T[i, 1])},{_fmt(result.distances[i])}" for i in range(len(T))
    ]
    _write(out / "params.csv", "\n".join(lines) + "\n")
    written.append(out / "params.csv")

    nodes = lattice_nodes(n_export)
    S = eval_surface(result.uncentered_model(), nodes)
    lines = ["t1,t2,x,y,z"]
    lines += [",".join(_fmt(v) for v in (*nodes[j], *S[j])) for j in range(len(nodes))]
    _write(out / "surface.csv", "\n".join(lines) + "\n")
    written.append(out / "surface.csv")

    rep = report_lines(result) + list(extra or []) + list(manifest or [])
    if timestamp is not None:
        rep.append(f"timestamp: {timestamp}")
    _write(out / "report.txt", "\n".join(rep) + "\n")
    written.append(out / "report.txt")

    if smap is not None:
        write_map_csv(out / "map.csv", smap)
        write_pgm(out / "map.pgm", pgm_pixels(smap))
        written += [out / "map.csv", out / "map.pgm"]
    return written
