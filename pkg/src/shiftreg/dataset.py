"""Tabular container for spatially indexed regression data.

A dataset is a window, an (n, 2) array of locations, a named and ordered set
of covariate columns, and one response column. The CSV layout is flat:
coordinate columns ``x`` and ``y``, one column per covariate, and the
response (named ``yresp`` by generated data). Values are written with
shortest round-trip float formatting, so a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SchemaError
from .geometry import Window

COORD_COLUMNS = ("x", "y")
DEFAULT_RESPONSE = "yresp"


@dataclass(frozen=True)
class SpatialDataset:
    window: Window
    locations: np.ndarray
    covariates: dict[str, np.ndarray]
    response: np.ndarray
    response_name: str = DEFAULT_RESPONSE

    def __post_init__(self):
        loc = np.ascontiguousarray(np.asarray(self.locations, dtype=float))
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise SchemaError(f"locations must be (n, 2), got {loc.shape}")
        n = loc.shape[0]
        cov = {}
        for name, values in self.covariates.items():
            v = np.ascontiguousarray(np.asarray(values, dtype=float))
            if v.shape != (n,):
                raise SchemaError(f"covariate {name!r} has shape {v.shape}, expected ({n},)")
            if name in COORD_COLUMNS or name == self.response_name:
                raise SchemaError(f"covariate name {name!r} collides with a reserved column")
            cov[name] = v
        resp = np.ascontiguousarray(np.asarray(self.response, dtype=float))
        if resp.shape != (n,):
            raise SchemaError(f"response has shape {resp.shape}, expected ({n},)")
        if not self.window.contains(loc).all():
            raise SchemaError("some locations fall outside the window")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "response", resp)

    @property
    def n(self) -> int:
        return self.locations.shape[0]

    @property
    def covariate_names(self) -> list[str]:
        return list(self.covariates.keys())

    def covariate_matrix(self, names=None) -> np.ndarray:
        """Column-stacked covariates in the given (or stored) order."""
        names = self.covariate_names if names is None else list(names)
        if not names:
            return np.empty((self.n, 0))
        return np.column_stack([self.covariates[name] for name in names])

    def standardized(self, columns=None) -> "SpatialDataset":
        """Copy with covariates and response centered and scaled to unit sd.

        Constant columns are left centered but unscaled. Coordinates are
        never touched.
        """
        names = self.covariate_names + [self.response_name] if columns is None else list(columns)
        cov = dict(self.covariates)
        resp = self.response
        for name in names:
            if name == self.response_name:
                resp = _zscore(resp)
            elif name in cov:
                cov[name] = _zscore(cov[name])
            else:
                raise SchemaError(f"cannot standardize unknown column {name!r}")
        return replace(self, covariates=cov, response=resp)


def _zscore(v: np.ndarray) -> np.ndarray:
    sd = v.std(ddof=1) if v.shape[0] > 1 else 0.0
    centered = v - v.mean()
    return centered / sd if sd > 0 else centered


def bounding_window(points) -> Window:
    """Tight axis-aligned bounding box of a point cloud."""
    p = np.asarray(points, dtype=float)
    return Window(float(p[:, 0].min()), float(p[:, 0].max()),
                  float(p[:, 1].min()), float(p[:, 1].max()))


def read_csv(path, response: str = DEFAULT_RESPONSE, covariates=None,
             window: Window | None = None) -> SpatialDataset:
    """Load a dataset, validating the column layout and every cell.

    Covariates default to every column that is neither a coordinate nor the
    response, in file order. Missing or non-numeric cells are rejected with
    their file line numbers (the header is line 1).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = list(reader)

    for col in COORD_COLUMNS:
        if col not in header:
            raise SchemaError(f"{path}: missing coordinate column {col!r}")
    if response not in header:
        raise SchemaError(f"{path}: missing response column {response!r}")
    if covariates is None:
        covariates = [h for h in header if h not in COORD_COLUMNS and h != response]
    else:
        covariates = list(covariates)
        for name in covariates:
            if name not in header:
                raise SchemaError(f"{path}: missing covariate column {name!r}")
    used = list(COORD_COLUMNS) + covariates + [response]
    pos = {name: header.index(name) for name in used}

    if not rows:
        raise SchemaError(f"{path}: no data rows")
    n = len(rows)
    data = {name: np.empty(n) for name in used}
    bad_lines: list[tuple[int, str]] = []
    for i, row in enumerate(rows):
        line_no = i + 2  # header is line 1
        if len(row) != len(header):
            bad_lines.append((line_no, "wrong field count"))
            continue
        for name in used:
            cell = row[pos[name]].strip()
            if cell == "" or cell.upper() in ("NA", "NAN"):
                bad_lines.append((line_no, f"missing value in {name!r}"))
                continue
            try:
                val = float(cell)
            except ValueError:
                bad_lines.append((line_no, f"non-numeric value {cell!r} in {name!r}"))
                continue
            if not np.isfinite(val):
                bad_lines.append((line_no, f"non-finite value in {name!r}"))
                continue
            data[name][i] = val
    if bad_lines:
        shown = "; ".join(f"line {ln}: {msg}" for ln, msg in bad_lines[:10])
        more = "" if len(bad_lines) <= 10 else f" (+{len(bad_lines) - 10} more)"
        raise SchemaError(f"{path}: {shown}{more}")

    locations = np.column_stack([data["x"], data["y"]])
    win = bounding_window(locations) if window is None else window
    return SpatialDataset(
        window=win,
        locations=locations,
        covariates={name: data[name] for name in covariates},
        response=data[response],
        response_name=response,
    )


def write_csv(dataset: SpatialDataset, path) -> None:
    """Write in the canonical column order: x, y, covariates, response.

    ``path`` may be a filesystem path or an open text stream. Values are
    written with repr, so a read_csv round trip reproduces them exactly.
    """
    if hasattr(path, "write"):
        _write_csv_stream(dataset, path)
        return
    with open(path, "w", newline="") as fh:
        _write_csv_stream(dataset, fh)


def _write_csv_stream(dataset: SpatialDataset, fh) -> None:
    names = dataset.covariate_names
    writer = csv.writer(fh)
    writer.writerow(list(COORD_COLUMNS) + names + [dataset.response_name])
    cols = [dataset.locations[:, 0], dataset.locations[:, 1]]
    cols += [dataset.covariates[name] for name in names]
    cols += [dataset.response]
    for i in range(dataset.n):
        writer.writerow([repr(float(c[i])) for c in cols])
