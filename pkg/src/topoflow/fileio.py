"""File formats: point CSVs, OFF meshes, diagram CSVs, flow files, trace CSVs.

All floats are written with repr, the shortest representation that parses
back to the identical double, so every writer/reader pair round-trips
bit-exactly.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Union

import numpy as np

from .diffeo import Interpolant
from .optimizer import Flow, FlowStep, TraceRecord, TRACE_HEADER
from .rips import Diagram, PointCloud

PathLike = Union[str, Path]

DIAGRAM_HEADER = "dim,birth,death,b1,b2,d1,d2"
FLOW_MAGIC = "topoflow-flow"
FLOW_VERSION = 1


class FileFormatError(ValueError):
    """Malformed input file."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_float(cell: str, path, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise FileFormatError(
            f"{path}: row {row}, column {col}: {cell!r} is not a number") from None


def write_points(path: PathLike, X: PointCloud) -> None:
    X = X if isinstance(X, PointCloud) else PointCloud(np.asarray(X))
    with open(path, "w") as fh:
        for row in X.coords:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_points(path: PathLike) -> PointCloud:
    """CSV, one point per row; a single leading non-numeric row is a header."""
    rows: list[list[float]] = []
    arity = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if not rows and arity is None:
                try:
                    rows.append([float(c) for c in cells])
                    arity = len(cells)
                    continue
                except ValueError:
                    arity = len(cells)  # header row, skip
                    continue
            if len(cells) != arity:
                raise FileFormatError(
                    f"{path}: row {lineno} has {len(cells)} columns, expected {arity}")
            rows.append([_parse_float(c, path, lineno, i + 1)
                         for i, c in enumerate(cells)])
    if not rows:
        raise FileFormatError(f"{path}: no points found")
    return PointCloud(np.asarray(rows))


def read_off(path: PathLike) -> PointCloud:
    """Vertices of an OFF mesh, in file order; faces are ignored."""
    with open(path) as fh:
        tokens: list[str] = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise FileFormatError(f"{path}: missing OFF header")
    if len(tokens) < 4:
        raise FileFormatError(f"{path}: truncated OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
    except ValueError:
        raise FileFormatError(f"{path}: malformed OFF counts line") from None
    coords = tokens[4:4 + 3 * nv]
    if len(coords) < 3 * nv:
        raise FileFormatError(
            f"{path}: header promises {nv} vertices but the body has fewer")
    try:
        pts = np.asarray([float(t) for t in coords], dtype=np.float64).reshape(nv, 3)
    except ValueError:
        raise FileFormatError(f"{path}: non-numeric vertex coordinate") from None
    return PointCloud(pts)


def write_diagram(path: PathLike, D: Diagram) -> None:
    with open(path, "w") as fh:
        fh.write(DIAGRAM_HEADER + "\n")
        for p, b, d, be, de in zip(D.hom_dims, D.births, D.deaths,
                                   D.birth_edges, D.death_edges):
            death = "inf" if math.isinf(d) else _fmt(d)
            fh.write(f"{int(p)},{_fmt(b)},{death},"
                     f"{int(be[0])},{int(be[1])},{int(de[0])},{int(de[1])}\n")


def read_diagram(path: PathLike) -> Diagram:
    dims, births, deaths, bes, des = [], [], [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != DIAGRAM_HEADER:
            raise FileFormatError(f"{path}: expected header {DIAGRAM_HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 7:
                raise FileFormatError(f"{path}: row {lineno} has {len(cells)} columns")
            dims.append(int(cells[0]))
            births.append(_parse_float(cells[1], path, lineno, 2))
            deaths.append(math.inf if cells[2] == "inf"
                          else _parse_float(cells[2], path, lineno, 3))
            bes.append([int(cells[3]), int(cells[4])])
            des.append([int(cells[5]), int(cells[6])])
    return Diagram(np.asarray(dims, np.int32), np.asarray(births), np.asarray(deaths),
                   np.asarray(bes, np.int32).reshape(-1, 2),
                   np.asarray(des, np.int32).reshape(-1, 2))


def write_flow(path: PathLike, flow: Flow) -> None:
    with open(path, "w") as fh:
        fh.write(f"{FLOW_MAGIC} {FLOW_VERSION}\n")
        fh.write(f"dim {flow.dim}\n")
        fh.write(f"steps {len(flow.steps)}\n")
        for step in flow.steps:
            v = step.field
            fh.write(f"step lr {_fmt(step.lr)} sigma {_fmt(v.sigma)} m {v.m}\n")
            for row in v.centers:
                fh.write(" ".join(_fmt(x) for x in row) + "\n")
            for row in v.coeffs:
                fh.write(" ".join(_fmt(x) for x in row) + "\n")


def read_flow(path: PathLike) -> Flow:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    pos = 0

    def next_line() -> str:
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise FileFormatError(f"{path}: unexpected end of file")
        pos += 1
        return lines[pos - 1].strip()

    head = next_line().split()
    if len(head) != 2 or head[0] != FLOW_MAGIC:
        raise FileFormatError(f"{path}: not a flow file")
    if int(head[1]) != FLOW_VERSION:
        raise FileFormatError(f"{path}: unsupported flow version {head[1]}")
    dim_line = next_line().split()
    if dim_line[0] != "dim":
        raise FileFormatError(f"{path}: expected 'dim'")
    dim = int(dim_line[1])
    steps_line = next_line().split()
    if steps_line[0] != "steps":
        raise FileFormatError(f"{path}: expected 'steps'")
    n_steps = int(steps_line[1])
    steps = []
    for _ in range(n_steps):
        hdr = next_line().split()
        if len(hdr) != 7 or hdr[0] != "step" or hdr[1] != "lr" or hdr[3] != "sigma" \
                or hdr[5] != "m":
            raise FileFormatError(f"{path}: malformed step header")
        lr = float(hdr[2])
        sigma = float(hdr[4])
        m = int(hdr[6])
        try:
            centers = np.asarray([[float(t) for t in next_line().split()]
                                  for _ in range(m)], dtype=np.float64).reshape(m, dim)
            coeffs = np.asarray([[float(t) for t in next_line().split()]
                                 for _ in range(m)], dtype=np.float64).reshape(m, dim)
        except ValueError:
            raise FileFormatError(f"{path}: malformed step body") from None
        gram_sq = np.sum((centers[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
        kappa = float(np.linalg.cond(np.exp(-gram_sq / (2.0 * sigma ** 2))))
        steps.append(FlowStep(Interpolant(centers, coeffs, sigma, 0.0, kappa), lr))
    return Flow(steps, dim)


def write_trace(path: PathLike, trace: list[TraceRecord]) -> None:
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in trace:
            fh.write(f"{r.epoch},{_fmt(r.train_loss)},{_fmt(r.val_loss)},"
                     f"{r.support},{_fmt(r.kappa)},{_fmt(r.lip_bound)},"
                     f"{_fmt(r.seconds)}\n")


def read_trace(path: PathLike) -> list[TraceRecord]:
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise FileFormatError(f"{path}: expected header {TRACE_HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 7:
                raise FileFormatError(f"{path}: row {lineno} has {len(cells)} columns")
            out.append(TraceRecord(int(cells[0]),
                                   _parse_float(cells[1], path, lineno, 2),
                                   _parse_float(cells[2], path, lineno, 3),
                                   int(cells[3]),
                                   _parse_float(cells[4], path, lineno, 5),
                                   _parse_float(cells[5], path, lineno, 6),
                                   _parse_float(cells[6], path, lineno, 7)))
    return out
