"""Rectangular-window geometry: torus wrapping, window intersection, pairing.

Everything here works on plain (n, 2) float arrays of planar coordinates.
The two shift corrections need different primitives: the torus correction
wraps shifted coordinates back into the window modulo its side lengths, the
variance correction intersects the window with its shifted copy and keeps
only the points that fall inside. After either move, shifted covariate
locations no longer coincide with the sampling locations of the residual
field, so values are matched by nearest-neighbor pairing (deterministic,
ties broken by the smallest source index).

Regular grids get an exact fast path: when the locations form a full
rectangular lattice and shifts are lattice multiples, the pairing is pure
index arithmetic and every pair distance is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (EmptyIntersection, InfeasibleSeparation, NoPairs,
                     ValidationError)

# below this many sources a vectorized scan beats building a tree
_BRUTE_FORCE_LIMIT = 64
# relative slack used when deciding that two candidate distances are tied
_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max]."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValidationError(
                f"window must have positive extent, got "
                f"[{self.x_min}, {self.x_max}] x [{self.y_min}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the closed rectangle."""
        p = np.asarray(points, dtype=float)
        return (
            (p[:, 0] >= self.x_min)
            & (p[:, 0] <= self.x_max)
            & (p[:, 1] >= self.y_min)
            & (p[:, 1] <= self.y_max)
        )

    def as_tuple(self):
        return (self.x_min, self.x_max, self.y_min, self.y_max)


UNIT_SQUARE = Window(0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class PointSet:
    """Locations together with the window that owns them."""

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be (n, 2), got shape {pts.shape}")
        if not self.window.contains(pts).all():
            bad = int(np.flatnonzero(~self.window.contains(pts))[0])
            raise ValueError(f"point {bad} lies outside the owning window")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Pairing:
    """Matched index pairs between a target set and a source set.

    ``target_index[i]`` is paired with ``source_index[i]`` at Euclidean
    ``distance[i]``. Each target appears at most once; sources may repeat.
    """

    target_index: np.ndarray
    source_index: np.ndarray
    distance: np.ndarray

    @property
    def retained(self) -> int:
        return int(self.target_index.shape[0])


def torus_wrap(points, shift, window: Window) -> np.ndarray:
    """Translate points by ``shift`` and wrap back into the window.

    Each axis is reduced modulo the window side length, which glues opposite
    edges together; a point sitting exactly on the upper edge is identified
    with the lower edge.
    """
    p = np.asarray(points, dtype=float)
    out = np.empty_like(p)
    out[:, 0] = np.mod(p[:, 0] - window.x_min + shift[0], window.width) + window.x_min
    out[:, 1] = np.mod(p[:, 1] - window.y_min + shift[1], window.height) + window.y_min
    return out


def intersect_window(window: Window, shift) -> Window:
    """Intersection of the window with its copy translated by ``shift``.

    Raises EmptyIntersection when the overlap has zero area, i.e. when the
    shift meets or exceeds the window extent on either axis.
    """
    dx, dy = float(shift[0]), float(shift[1])
    lo_x = max(window.x_min, window.x_min + dx)
    hi_x = min(window.x_max, window.x_max + dx)
    lo_y = max(window.y_min, window.y_min + dy)
    hi_y = min(window.y_max, window.y_max + dy)
    if not (hi_x > lo_x and hi_y > lo_y):
        raise EmptyIntersection(f"shift ({dx}, {dy}) leaves no overlap")
    return Window(lo_x, hi_x, lo_y, hi_y)


def nearest_pairing(targets, sources, max_distance: float | None = None) -> Pairing:
    """Pair every target with its nearest source.

    Deterministic: exact distance ties go to the smallest source index. Uses
    a k-d tree above a small size cutoff and a direct scan below it; both
    routes produce identical pairings. With ``max_distance`` set, pairs
    farther apart are dropped. Raises NoPairs when nothing survives.
    """
    t = np.ascontiguousarray(np.asarray(targets, dtype=float))
    s = np.ascontiguousarray(np.asarray(sources, dtype=float))
    if t.size == 0 or s.size == 0:
        raise NoPairs("empty target or source set")

    if s.shape[0] < _BRUTE_FORCE_LIMIT:
        d2 = ((t[:, None, :] - s[None, :, :]) ** 2).sum(axis=2)
        # argmin returns the first minimum, which is the smallest source index
        idx = np.argmin(d2, axis=1)
        dist = np.sqrt(d2[np.arange(t.shape[0]), idx])
    else:
        tree = cKDTree(s)
        k = min(2, s.shape[0])
        dist, idx = tree.query(t, k=k)
        if k == 2:
            dist2 = dist[:, 1]
            dist = dist[:, 0]
            idx2 = idx[:, 1]
            idx = idx[:, 0]
            # re-resolve near-ties so the smallest-index rule holds exactly
            tied = dist2 - dist <= _TIE_RTOL * (1.0 + dist)
            if np.any(tied):
                sub = t[tied]
                d2 = ((sub[:, None, :] - s[None, :, :]) ** 2).sum(axis=2)
                dmin = d2.min(axis=1, keepdims=True)
                close = d2 <= dmin * (1.0 + _TIE_RTOL) + _TIE_RTOL
                pick = np.where(close, np.arange(s.shape[0])[None, :], s.shape[0]).min(axis=1)
                idx = idx.copy()
                dist = dist.copy()
                idx[tied] = pick
                dist[tied] = np.sqrt(d2[np.arange(sub.shape[0]), pick])
            del idx2

    keep = np.arange(t.shape[0])
    if max_distance is not None:
        inside = dist <= max_distance
        keep = keep[inside]
        idx = idx[inside]
        dist = dist[inside]
        if keep.size == 0:
            raise NoPairs(f"no pair within max_distance={max_distance}")
    return Pairing(
        target_index=keep.astype(np.intp),
        source_index=idx.astype(np.intp),
        distance=np.asarray(dist, dtype=float),
    )


@dataclass(frozen=True)
class GridInfo:
    """Description of locations that form a full rectangular lattice."""

    x_values: np.ndarray       # sorted unique x coordinates
    y_values: np.ndarray       # sorted unique y coordinates
    dx: float                  # spacing along x
    dy: float                  # spacing along y
    index: np.ndarray          # (n, 2) integer lattice coordinates per point

    @property
    def nx(self) -> int:
        return self.x_values.shape[0]

    @property
    def ny(self) -> int:
        return self.y_values.shape[0]


def detect_grid(points) -> GridInfo | None:
    """Recognize a complete, evenly spaced rectangular lattice.

    Returns None unless the points are exactly the product of their unique
    x and y coordinates with uniform spacing (up to rounding noise) and no
    duplicates. Detection is cheap and deterministic, so engines can use the
    exact index-arithmetic pairing whenever the data allow it.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 4:
        return None
    xs = np.unique(p[:, 0])
    ys = np.unique(p[:, 1])
    if xs.size < 2 or ys.size < 2 or xs.size * ys.size != p.shape[0]:
        return None
    dxs = np.diff(xs)
    dys = np.diff(ys)
    dx = dxs[0]
    dy = dys[0]
    scale_x = max(abs(xs[0]), abs(xs[-1]), 1.0)
    scale_y = max(abs(ys[0]), abs(ys[-1]), 1.0)
    if not (np.all(np.abs(dxs - dx) <= 1e-9 * scale_x) and np.all(np.abs(dys - dy) <= 1e-9 * scale_y)):
        return None
    ix = np.rint((p[:, 0] - xs[0]) / dx).astype(np.intp)
    iy = np.rint((p[:, 1] - ys[0]) / dy).astype(np.intp)
    if (np.abs(xs[0] + ix * dx - p[:, 0]) > 1e-9 * scale_x).any():
        return None
    if (np.abs(ys[0] + iy * dy - p[:, 1]) > 1e-9 * scale_y).any():
        return None
    flat = ix * ys.size + iy
    if np.unique(flat).size != p.shape[0]:
        return None
    index = np.stack([ix, iy], axis=1)
    return GridInfo(x_values=xs, y_values=ys, dx=float(dx), dy=float(dy), index=index)


def snap_shift_to_grid(shift, grid: GridInfo) -> tuple[int, int]:
    """Nearest lattice multiple of a continuous shift vector."""
    return (int(np.rint(shift[0] / grid.dx)), int(np.rint(shift[1] / grid.dy)))


def grid_torus_pairing(grid: GridInfo, steps: tuple[int, int]) -> Pairing:
    """Exact pairing for a lattice shifted by whole steps with wrap-around.

    The covariate point at lattice cell c lands on cell c + steps (mod grid
    extent), so the target at cell c is matched with the source at
    c - steps (mod extent); every distance is exactly zero.
    """
    mx = steps[0] % grid.nx
    my = steps[1] % grid.ny
    ix = (grid.index[:, 0] - mx) % grid.nx
    iy = (grid.index[:, 1] - my) % grid.ny
    lookup = np.empty(grid.nx * grid.ny, dtype=np.intp)
    lookup[grid.index[:, 0] * grid.ny + grid.index[:, 1]] = np.arange(grid.index.shape[0])
    src = lookup[ix * grid.ny + iy]
    n = grid.index.shape[0]
    return Pairing(
        target_index=np.arange(n, dtype=np.intp),
        source_index=src,
        distance=np.zeros(n, dtype=float),
    )


def grid_overlap_pairing(grid: GridInfo, steps: tuple[int, int]) -> Pairing:
    """Exact pairing for a lattice shifted by whole steps without wrapping.

    Keeps the targets whose back-shifted cell still lies on the lattice,
    which is precisely membership in the overlap of the window with its
    shifted copy.
    """
    ix = grid.index[:, 0] - steps[0]
    iy = grid.index[:, 1] - steps[1]
    ok = (ix >= 0) & (ix < grid.nx) & (iy >= 0) & (iy < grid.ny)
    if not ok.any():
        raise NoPairs("grid shift leaves no overlapping cells")
    lookup = np.empty(grid.nx * grid.ny, dtype=np.intp)
    lookup[grid.index[:, 0] * grid.ny + grid.index[:, 1]] = np.arange(grid.index.shape[0])
    src = lookup[ix[ok] * grid.ny + iy[ok]]
    return Pairing(
        target_index=np.flatnonzero(ok).astype(np.intp),
        source_index=src,
        distance=np.zeros(int(ok.sum()), dtype=float),
    )


def fixed_grid_shifts(window: Window, K: int, separation: float,
                      r_max: float | None = None) -> np.ndarray:
    """Deterministic lattice of K nonzero shift vectors.

    Vectors live in [-r_max, r_max]^2 (r_max defaults to half the shorter
    window side), inset by 10% so no vector sits on the boundary. Candidates
    are taken farthest-from-origin first. Raises InfeasibleSeparation when
    the K chosen vectors cannot all be `separation` apart from each other
    and from the origin.
    """
    if K < 1:
        raise ValueError("K must be positive")
    if separation <= 0:
        raise ValueError("separation must be positive")
    if r_max is None:
        r_max = 0.5 * min(window.width, window.height)
    half = 0.9 * r_max
    g = max(2, int(np.ceil(np.sqrt(K))))
    coords = np.linspace(-half, half, g)
    gx, gy = np.meshgrid(coords, coords, indexing="ij")
    cand = np.stack([gx.ravel(), gy.ravel()], axis=1)
    norms = np.hypot(cand[:, 0], cand[:, 1])
    # farthest first; ties resolved by lexicographic coordinates for determinism
    order = np.lexsort((cand[:, 1], cand[:, 0], -norms))
    cand = cand[order]
    norms = norms[order]
    usable = cand[norms >= separation]
    if usable.shape[0] < K:
        raise InfeasibleSeparation(
            f"only {usable.shape[0]} lattice vectors of norm >= {separation}, need {K}"
        )
    chosen = usable[:K]
    if K > 1:
        d2 = ((chosen[:, None, :] - chosen[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        if np.sqrt(d2.min()) < separation:
            raise InfeasibleSeparation(
                f"lattice spacing {np.sqrt(d2.min()):.6g} below separation {separation}"
            )
    return chosen
