"""Continuous-time temporal graphs: data model, edge-list ingestion, incidence."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import yaml

logger = logging.getLogger(__name__)

DEFAULT_COLUMNS = ("u", "v", "t", "label")
DATA_DIR_ENV = "TDLG_DATA_DIR"


class EdgeListError(ValueError):
    """Raised for malformed or invalid rows in an edge-list file."""


@dataclass(frozen=True)
class TemporalEdge:
    u: int
    v: int
    t: float
    label: Optional[int] = None


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    """Node count plus an ordered set of timestamped edges.

    Edges are stored column-wise (``u``, ``v``, ``t`` and optional
    ``labels``); edge ``i`` is row ``i`` of each array, in ingestion order.
    ``node_ids`` keeps the raw identifier of each dense node index when the
    graph was read from a file.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    t: np.ndarray
    labels: Optional[np.ndarray] = None
    node_ids: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.int64)
        v = np.ascontiguousarray(self.v, dtype=np.int64)
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        if not (u.shape == v.shape == t.shape) or u.ndim != 1:
            raise ValueError("u, v and t must be 1-d arrays of equal length")
        if u.size:
            if u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= self.n:
                raise ValueError(f"node ids must lie in [0, {self.n})")
            loops = np.flatnonzero(u == v)
            if loops.size:
                raise ValueError(f"self-loop temporal edge at index {loops[0]}")
            if not np.all(np.isfinite(t)):
                bad = np.flatnonzero(~np.isfinite(t))[0]
                raise ValueError(f"non-finite time at edge index {bad}")
        labels = self.labels
        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype=np.int8)
            if labels.shape != u.shape:
                raise ValueError("labels must have one entry per edge")
            if labels.size and not np.isin(labels, (0, 1)).all():
                raise ValueError("labels must be binary (0/1)")
            labels.setflags(write=False)
        for arr in (u, v, t):
            arr.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return int(self.u.size)

    @property
    def edges(self) -> list[TemporalEdge]:
        labels = self.labels if self.labels is not None else [None] * self.m
        return [
            TemporalEdge(int(a), int(b), float(c), None if lab is None else int(lab))
            for a, b, c, lab in zip(self.u, self.v, self.t, labels)
        ]

    @classmethod
    def from_edges(cls, edges: Sequence, n: Optional[int] = None) -> "TemporalGraph":
        """Build from ``(u, v, t)`` or ``(u, v, t, label)`` tuples of dense ids."""
        rows = [tuple(e) for e in edges]
        if not rows:
            return cls(n or 0, np.empty(0), np.empty(0), np.empty(0))
        u = np.array([r[0] for r in rows], dtype=np.int64)
        v = np.array([r[1] for r in rows], dtype=np.int64)
        t = np.array([r[2] for r in rows], dtype=np.float64)
        labels = None
        if all(len(r) > 3 and r[3] is not None for r in rows):
            labels = np.array([r[3] for r in rows], dtype=np.int8)
        if n is None:
            n = int(max(u.max(), v.max())) + 1
        return cls(n, u, v, t, labels)

    def subgraph(self, index, labels: Optional[np.ndarray] = None) -> "TemporalGraph":
        """Edges selected by ``index`` (in that order), sharing this node space."""
        index = np.asarray(index)
        if labels is None and self.labels is not None:
            labels = self.labels[index]
        return TemporalGraph(self.n, self.u[index], self.v[index], self.t[index],
                             labels, self.node_ids)

    def with_labels(self, labels) -> "TemporalGraph":
        return TemporalGraph(self.n, self.u, self.v, self.t, labels, self.node_ids)

    def __eq__(self, other):
        if not isinstance(other, TemporalGraph):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None and other.labels is not None
            and np.array_equal(self.labels, other.labels))
        return (self.n == other.n and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v)
                and np.array_equal(self.t, other.t) and same_labels)

    __hash__ = None


def concat(graphs: Sequence[TemporalGraph]) -> TemporalGraph:
    """Concatenate edge lists of graphs that share one node-id space."""
    n = max(g.n for g in graphs)
    labels = None
    if all(g.labels is not None for g in graphs):
        labels = np.concatenate([g.labels for g in graphs])
    return TemporalGraph(
        n,
        np.concatenate([g.u for g in graphs]),
        np.concatenate([g.v for g in graphs]),
        np.concatenate([g.t for g in graphs]),
        labels,
        graphs[0].node_ids,
    )


def load_edge_list(path, delimiter: Optional[str] = ",", has_labels: bool = False,
                   label_threshold: float = 0.0, columns: Sequence[str] = DEFAULT_COLUMNS,
                   comments: str = "#%", skip_invalid: bool = False,
                   bipartite: bool = False) -> TemporalGraph:
    """Read a ``u,v,t[,label]`` edge list into a :class:`TemporalGraph`.

    Raw node ids can be any strings; they are mapped to dense indices in
    order of first appearance. ``columns`` names the meaning of each field
    (e.g. ``("u", "v", "label", "t")`` for the SNAP bitcoin files); extra
    trailing fields are ignored. A label is parsed as a number and binarized
    as ``label > label_threshold``. ``delimiter=None`` splits on whitespace.
    Blank lines and lines starting with a character in ``comments`` are
    skipped.

    Raises :class:`EdgeListError` with the 1-based line number for a
    malformed row, a self-loop, or a non-finite time. With
    ``skip_invalid=True`` such rows are logged and dropped instead.

    With ``bipartite=True`` the two id columns are separate namespaces (as in
    files that number both sides from 1); node ids become ``u:<id>`` and
    ``v:<id>``.
    """
    columns = tuple(columns)
    for need in ("u", "v", "t"):
        if need not in columns:
            raise ValueError(f"columns must include {need!r}")
    if has_labels and "label" not in columns:
        raise ValueError("has_labels requires a 'label' column")
    iu, iv, it = columns.index("u"), columns.index("v"), columns.index("t")
    il = columns.index("label") if has_labels else None
    width = max(iu, iv, it, il if il is not None else 0) + 1

    ids: dict[str, int] = {}
    us, vs, ts, labels = [], [], [], []
    rejected = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line[0] in comments:
                continue
            try:
                row = _parse_row(line, lineno, delimiter, width, iu, iv, it, il, label_threshold,
                                 bipartite)
            except EdgeListError as err:
                if not skip_invalid:
                    raise
                logger.warning("skipping %s", err)
                rejected += 1
                continue
            a, b, t, lab = row
            if lab is not None:
                labels.append(lab)
            if bipartite:
                a, b = "u:" + a, "v:" + b
            us.append(ids.setdefault(a, len(ids)))
            vs.append(ids.setdefault(b, len(ids)))
            ts.append(t)
    logger.info("loaded %d edges over %d nodes from %s (%d rejected)",
                len(us), len(ids), path, rejected)
    return TemporalGraph(
        len(ids),
        np.array(us, dtype=np.int64),
        np.array(vs, dtype=np.int64),
        np.array(ts, dtype=np.float64),
        np.array(labels, dtype=np.int8) if il is not None else None,
        list(ids),
    )


def _parse_row(line, lineno, delimiter, width, iu, iv, it, il, label_threshold, bipartite=False):
    parts = [p.strip() for p in (line.split(delimiter) if delimiter else line.split())]
    if len(parts) < width:
        raise EdgeListError(f"line {lineno}: expected at least {width} fields, got {len(parts)}")
    a, b = parts[iu], parts[iv]
    if a == b and not bipartite:
        raise EdgeListError(f"line {lineno}: self-loop on node {a!r}")
    try:
        t = float(parts[it])
    except ValueError:
        raise EdgeListError(f"line {lineno}: cannot parse time {parts[it]!r}") from None
    if not math.isfinite(t):
        raise EdgeListError(f"line {lineno}: non-finite time {parts[it]!r}")
    lab = None
    if il is not None:
        try:
            lab = 1 if float(parts[il]) > label_threshold else 0
        except ValueError:
            raise EdgeListError(f"line {lineno}: cannot parse label {parts[il]!r}") from None
    return a, b, t, lab


def load_manifest(path, base=None) -> dict:
    """Read a dataset manifest (YAML or JSON) mapping names to load options.

    Each entry may set ``path`` (relative paths resolve against ``base``,
    default the manifest's directory), ``delimiter``, ``columns``,
    ``label_threshold`` and ``has_labels``.
    """
    path = Path(path)
    base = path.parent if base is None else Path(base)
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    entries = raw.get("datasets", raw)
    out = {}
    for name, entry in entries.items():
        entry = dict(entry)
        p = Path(entry["path"]).expanduser()
        entry["path"] = p if p.is_absolute() else base / p
        out[name] = entry
    return out


def bundled_manifest(data_dir=None) -> dict:
    """The packaged manifest of benchmark datasets.

    Files are looked up in ``data_dir``, else ``$TDLG_DATA_DIR``, else the
    working directory. The raw files are not shipped; see the README.
    """
    base = data_dir or os.environ.get(DATA_DIR_ENV) or "."
    return load_manifest(Path(__file__).with_name("datasets.yaml"), base=base)


def load_dataset(name: str, manifest, data_dir=None) -> TemporalGraph:
    """Load a manifest entry by name. ``manifest`` is a path or a loaded dict."""
    entries = manifest if isinstance(manifest, dict) else load_manifest(manifest)
    if name not in entries:
        raise KeyError(f"dataset {name!r} not in manifest (have: {sorted(entries)})")
    entry = dict(entries[name])
    path = Path(entry.pop("path"))
    if data_dir is not None and not path.is_absolute():
        path = Path(data_dir) / path
    entry.pop("description", None)
    return load_edge_list(path, **entry)


@dataclass(frozen=True, eq=False)
class IncidenceView:
    """Per-node sorted lists of incident edge indices, in CSR layout.

    ``indices[indptr[v]:indptr[v + 1]]`` are the edges incident to node ``v``.
    """

    n: int
    m: int
    indptr: np.ndarray
    indices: np.ndarray

    def __getitem__(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def matrix(self) -> sp.csr_matrix:
        """The n x m 0/1 incidence matrix B."""
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.m))


def build_incidence(g: TemporalGraph) -> IncidenceView:
    ends = np.concatenate([g.u, g.v])
    edge_idx = np.concatenate([np.arange(g.m), np.arange(g.m)])
    order = np.lexsort((edge_idx, ends))
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(ends, minlength=g.n), out=indptr[1:])
    indices = edge_idx[order].astype(np.int64)
    indptr.setflags(write=False)
    indices.setflags(write=False)
    return IncidenceView(g.n, g.m, indptr, indices)


def time_std(g: TemporalGraph) -> float:
    """Population standard deviation of edge times.

    Returns 0.0 when all times coincide; callers resolving a relative
    decay scale must treat that as an error.
    """
    if g.m < 2:
        raise ValueError(f"time standard deviation needs at least 2 edges, got {g.m}")
    return float(np.std(g.t))
