"""Zero-level tracing on a regular 2-D grid.

Fields are indexed ``field[i, j] = f(xs[i], ys[j])`` with shape ``(nx, ny)``.
Cells are visited in order of their index ``j * (nx - 1) + i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["Grid2D", "extract_zero_contour", "extract_label_boundary"]


@dataclass(frozen=True)
class Grid2D:
    """Closed rectangle sampled at ``nx * ny`` nodes."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int = 201
    ny: int = 201

    def __post_init__(self):
        x0, x1 = map(float, self.x_range)
        y0, y1 = map(float, self.y_range)
        if not (x0 < x1 and y0 < y1):
            raise DomainError("grid ranges must be non-degenerate")
        if self.nx < 2 or self.ny < 2:
            raise DomainError("grid needs at least 2 nodes per axis")
        object.__setattr__(self, "x_range", (x0, x1))
        object.__setattr__(self, "y_range", (y0, y1))

    @classmethod
    def around(cls, points, pad: float = 0.2, nx: int = 201, ny: int = 201) -> "Grid2D":
        """Bounding box of ``points`` grown by ``pad`` times its extent per side."""
        P = np.asarray(points, dtype=float)
        lo, hi = P.min(axis=0), P.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        lo, hi = lo - pad * span, hi + pad * span
        return cls((lo[0], hi[0]), (lo[1], hi[1]), nx, ny)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.ny)

    @property
    def cell_diagonal(self) -> float:
        dx = (self.x_range[1] - self.x_range[0]) / (self.nx - 1)
        dy = (self.y_range[1] - self.y_range[0]) / (self.ny - 1)
        return float(np.hypot(dx, dy))

    def nodes(self) -> np.ndarray:
        """All nodes as an ``(nx * ny, 2)`` array in ``field.ravel()`` order."""
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def evaluate(self, fn) -> np.ndarray:
        """``fn`` maps an ``(m, 2)`` array to ``m`` values; returns shape ``(nx, ny)``."""
        return np.asarray(fn(self.nodes()), dtype=float).reshape(self.nx, self.ny)


# corner k of a cell and the two edges meeting there
# edges: 0 bottom, 1 right, 2 top, 3 left
_CORNER_EDGES = {0: (3, 0), 1: (0, 1), 2: (1, 2), 3: (2, 3)}


def _edge_key(i, j, e):
    if e == 0:
        return ("h", i, j)
    if e == 1:
        return ("v", i + 1, j)
    if e == 2:
        return ("h", i, j + 1)
    return ("v", i, j)


def _chain(segments):
    """Join segments that share endpoint keys into polylines of keys."""
    touching: dict = {}
    for s, (a, b) in enumerate(segments):
        touching.setdefault(a, []).append(s)
        touching.setdefault(b, []).append(s)
    used = [False] * len(segments)

    def walk(key, came_from):
        out = []
        while True:
            nxt = next((s for s in touching[key] if not used[s]), None)
            if nxt is None:
                return out
            used[nxt] = True
            a, b = segments[nxt]
            key = b if a == key else a
            out.append(key)

    lines = []
    for s, (a, b) in enumerate(segments):
        if used[s]:
            continue
        used[s] = True
        forward = walk(b, s)
        if forward and forward[-1] == a:
            lines.append([a, b] + forward)
            continue
        backward = walk(a, s)
        lines.append(backward[::-1] + [a, b] + forward)
    return lines


def extract_zero_contour(field, grid: Grid2D) -> list[np.ndarray]:
    """Marching squares for the zero level of ``field``.

    Nodes with ``f >= 0`` count as inside.  Crossing points are placed on
    cell edges by linear interpolation, so linear fields are traced exactly.
    Saddle cells are split according to the sign of the mean of their four
    corners.  Closed curves repeat their first vertex at the end.
    """
    f = np.asarray(field, dtype=float)
    if f.shape != (grid.nx, grid.ny):
        raise DomainError(f"field shape {f.shape} does not match grid ({grid.nx}, {grid.ny})")
    if not np.all(np.isfinite(f)):
        raise DomainError("field must be finite")
    inside = f >= 0
    c0, c1, c2, c3 = inside[:-1, :-1], inside[1:, :-1], inside[1:, 1:], inside[:-1, 1:]
    mixed = ~((c0 == c1) & (c1 == c2) & (c2 == c3))
    ii, jj = np.nonzero(mixed)
    order = np.lexsort((ii, jj))
    xs, ys = grid.xs, grid.ys

    segments = []
    for i, j in zip(ii[order].tolist(), jj[order].tolist()):
        corners = (inside[i, j], inside[i + 1, j], inside[i + 1, j + 1], inside[i, j + 1])
        n_in = sum(corners)
        if n_in in (1, 3):
            odd = corners.index(n_in == 1)
            pairs = [_CORNER_EDGES[odd]]
        elif corners[0] == corners[1]:
            pairs = [(1, 3)]
        elif corners[0] == corners[3]:
            pairs = [(0, 2)]
        else:
            centre_in = (f[i, j] + f[i + 1, j] + f[i + 1, j + 1] + f[i, j + 1]) / 4.0 >= 0
            # cut off the corners whose state differs from the centre
            pairs = [_CORNER_EDGES[k] for k in range(4) if corners[k] != centre_in]
        for ea, eb in pairs:
            segments.append((_edge_key(i, j, ea), _edge_key(i, j, eb)))

    def point(key):
        kind, i, j = key
        if kind == "h":
            fa, fb = f[i, j], f[i + 1, j]
            t = fa / (fa - fb)
            return xs[i] + t * (xs[i + 1] - xs[i]), ys[j]
        fa, fb = f[i, j], f[i, j + 1]
        t = fa / (fa - fb)
        return xs[i], ys[j] + t * (ys[j + 1] - ys[j])

    return [np.array([point(k) for k in line]) for line in _chain(segments)]


def _merge_collinear(P: np.ndarray) -> np.ndarray:
    if len(P) < 3:
        return P
    keep = [0]
    for k in range(1, len(P) - 1):
        a, b, c = P[keep[-1]], P[k], P[k + 1]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if cross != 0.0:
            keep.append(k)
    keep.append(len(P) - 1)
    return P[keep]


def extract_label_boundary(labels, grid: Grid2D) -> list[np.ndarray]:
    """Axis-aligned boundary between grid nodes of different label.

    Each node owns the rectangle halfway to its neighbours (clipped to the
    grid range); the boundary consists of the rectangle sides separating
    differently labelled nodes.  No interpolation is done, which suits
    piecewise-constant classifiers such as trees.
    """
    L = np.asarray(labels)
    if L.shape != (grid.nx, grid.ny):
        raise DomainError(f"label shape {L.shape} does not match grid ({grid.nx}, {grid.ny})")
    xs, ys = grid.xs, grid.ys
    bx = np.concatenate([[xs[0]], 0.5 * (xs[:-1] + xs[1:]), [xs[-1]]])
    by = np.concatenate([[ys[0]], 0.5 * (ys[:-1] + ys[1:]), [ys[-1]]])

    segments = []
    vi, vj = np.nonzero(L[:-1, :] != L[1:, :])
    hi_, hj = np.nonzero(L[:, :-1] != L[:, 1:])
    # sort all separating sides by the index of their lower-left node
    items = [(j, i, 0) for i, j in zip(vi.tolist(), vj.tolist())]
    items += [(j, i, 1) for i, j in zip(hi_.tolist(), hj.tolist())]
    for j, i, horizontal in sorted(items):
        if horizontal:
            segments.append(((i, j + 1), (i + 1, j + 1)))
        else:
            segments.append(((i + 1, j), (i + 1, j + 1)))
    lines = []
    for line in _chain(segments):
        P = np.array([(bx[a], by[b]) for a, b in line])
        lines.append(_merge_collinear(P))
    return lines
