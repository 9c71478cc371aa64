"""Build instances from GeoJSON: pedestrian network, point layers, shortest paths.

Point features carry a ``role`` property: ``residence``, ``candidate`` or
``existing:<type id>``. Network features are LineStrings (or
MultiLineStrings); every pair of consecutive coordinates becomes an edge.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from walkopt.errors import GeoDataError
from walkopt.instance import (
    DEFAULT_D_INFINITY,
    WALKSCORE_CURVE,
    AmenityTypeSpec,
    Instance,
    PwlCurve,
)

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6371008.8
SNAP_WARN_M = 500.0
_COORD_DIGITS = 9


def haversine(lon1, lat1, lon2, lat2):
    """Great-circle distance in meters; accepts scalars or arrays."""
    lon1, lat1, lon2, lat2 = map(np.radians, (lon1, lat1, lon2, lat2))
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    d = 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    return float(d) if np.ndim(d) == 0 else d


def _unit_xyz(lon, lat):
    lon, lat = np.radians(lon), np.radians(lat)
    return np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


@dataclass
class PedGraph:
    """Undirected walking network; node ``k`` has id ``k`` and sits at (lon[k], lat[k])."""

    lon: np.ndarray
    lat: np.ndarray
    edges: np.ndarray  # (E, 2) int
    lengths: np.ndarray  # (E,) meters
    dropped_segments: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.lon)

    @cached_property
    def adjacency(self) -> csr_matrix:
        n = self.n_nodes
        if len(self.edges) == 0:
            return csr_matrix((n, n))
        u, v = self.edges[:, 0], self.edges[:, 1]
        return coo_matrix((self.lengths, (u, v)), shape=(n, n)).tocsr()

    @cached_property
    def isolated(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        if len(self.edges):
            np.add.at(deg, self.edges.ravel(), 1)
        return np.flatnonzero(deg == 0)

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(_unit_xyz(self.lon, self.lat))

    @classmethod
    def from_segments(cls, lines: Iterable[Sequence[Sequence[float]]]) -> "PedGraph":
        """Build from coordinate sequences; shared coordinates become shared nodes.

        Node ids follow the (lon, lat) order of the deduplicated coordinates so
        they do not depend on feature order.
        """
        lines = [[(round(float(x), _COORD_DIGITS), round(float(y), _COORD_DIGITS)) for x, y, *_ in ln]
                 for ln in lines]
        coords = sorted({pt for ln in lines for pt in ln})
        index = {pt: k for k, pt in enumerate(coords)}
        best: dict[tuple[int, int], float] = {}
        dropped = 0
        for ln in lines:
            for p, q in zip(ln, ln[1:]):
                u, v = index[p], index[q]
                length = haversine(p[0], p[1], q[0], q[1])
                if u == v or length <= 0.0:
                    dropped += 1
                    continue
                key = (min(u, v), max(u, v))
                if key not in best or length < best[key]:
                    best[key] = length
        if dropped:
            log.warning("dropped %d zero-length segments", dropped)
        keys = sorted(best)
        arr = np.array(coords, dtype=float).reshape(-1, 2)
        return cls(
            lon=arr[:, 0],
            lat=arr[:, 1],
            edges=np.array(keys, dtype=int).reshape(-1, 2),
            lengths=np.array([best[k] for k in keys], dtype=float),
            dropped_segments=dropped,
        )


@dataclass(frozen=True)
class Point:
    role: str
    lon: float
    lat: float
    attributes: dict = field(default_factory=dict, compare=False)

    @property
    def type_id(self) -> int | None:
        return int(self.role.split(":", 1)[1]) if self.role.startswith("existing:") else None


@dataclass
class PointLayer:
    points: list[Point]

    def of_role(self, role: str) -> list[int]:
        return [k for k, p in enumerate(self.points) if p.role == role]

    def existing(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for k, p in enumerate(self.points):
            if p.type_id is not None:
                out.setdefault(p.type_id, []).append(k)
        return out


def _read_collection(path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GeoDataError(f"{path}: not readable as GeoJSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeoDataError(f"{path}: expected a GeoJSON FeatureCollection")
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise GeoDataError(f"{path}: 'features' must be an array")
    return feats


def _check_role(role: Any, where: str) -> str:
    if not isinstance(role, str):
        raise GeoDataError(f"{where}: missing 'role' property")
    if role in ("residence", "candidate"):
        return role
    if role.startswith("existing:"):
        try:
            int(role.split(":", 1)[1])
            return role
        except ValueError:
            pass
    raise GeoDataError(f"{where}: unknown role {role!r}")


def _finite(x, y, where):
    if not (math.isfinite(x) and math.isfinite(y)):
        raise GeoDataError(f"{where}: non-finite coordinates")


def read_network(path) -> PedGraph:
    lines = []
    for k, feat in enumerate(_read_collection(path)):
        geom = (feat or {}).get("geometry") or {}
        kind = geom.get("type")
        if kind == "LineString":
            lines.append(geom["coordinates"])
        elif kind == "MultiLineString":
            lines.extend(geom["coordinates"])
        else:
            raise GeoDataError(f"{path} feature {k}: expected LineString, got {kind!r}")
    for ln in lines:
        for pt in ln:
            _finite(float(pt[0]), float(pt[1]), str(path))
    return PedGraph.from_segments(lines)


def read_points(*paths) -> PointLayer:
    points = []
    for path in paths:
        for k, feat in enumerate(_read_collection(path)):
            where = f"{path} feature {k}"
            geom = (feat or {}).get("geometry") or {}
            props = dict((feat or {}).get("properties") or {})
            role = _check_role(props.pop("role", None), where)
            if geom.get("type") == "Point":
                coords = [geom["coordinates"]]
            elif geom.get("type") == "MultiPoint":
                coords = geom["coordinates"]
            else:
                raise GeoDataError(f"{where}: expected Point, got {geom.get('type')!r}")
            for c in coords:
                x, y = float(c[0]), float(c[1])
                _finite(x, y, where)
                points.append(Point(role, x, y, props))
    return PointLayer(points)


def load_geojson(network, *points) -> tuple[PedGraph, PointLayer]:
    """Load the network file and any number of point files."""
    return read_network(network), read_points(*points)


@dataclass
class SnapResult:
    nodes: np.ndarray
    displacement: np.ndarray
    far: list[int]  # point indices snapped farther than the warning threshold


def snap_points(graph: PedGraph, layer: PointLayer, warn_distance: float = SNAP_WARN_M) -> SnapResult:
    """Map every point to its nearest graph node (ties: lowest node id)."""
    if graph.n_nodes == 0:
        raise GeoDataError("cannot snap to an empty graph")
    n = len(layer.points)
    nodes = np.zeros(n, dtype=int)
    disp = np.zeros(n)
    if n:
        lon = np.array([p.lon for p in layer.points])
        lat = np.array([p.lat for p in layer.points])
        xyz = _unit_xyz(lon, lat)
        chord, _ = graph._tree.query(xyz)
        for k in range(n):
            near = graph._tree.query_ball_point(xyz[k], chord[k] * (1 + 1e-9) + 1e-12)
            near = np.array(sorted(near), dtype=int)
            d = haversine(lon[k], lat[k], graph.lon[near], graph.lat[near])
            d = np.atleast_1d(d)
            best = d.min()
            pick = int(near[np.flatnonzero(d <= best + 1e-9)[0]])
            nodes[k], disp[k] = pick, haversine(lon[k], lat[k], graph.lon[pick], graph.lat[pick])
    far = [int(k) for k in np.flatnonzero(disp > warn_distance)]
    for k in far:
        log.warning("point %d (%s) is %.0f m from the network", k, layer.points[k].role, disp[k])
    return SnapResult(nodes, disp, far)


def distance_matrix(
    graph: PedGraph,
    sources: Sequence[int],
    targets: Sequence[int],
    d_infinity: float = DEFAULT_D_INFINITY,
) -> np.ndarray:
    """Shortest-path meters, rows = ``targets``, columns = ``sources``.

    Unreachable pairs get ``d_infinity``.
    """
    sources = np.asarray(sources, dtype=int)
    targets = np.asarray(targets, dtype=int)
    if sources.size == 0 or targets.size == 0:
        return np.zeros((targets.size, sources.size))
    uniq, inv = np.unique(sources, return_inverse=True)
    dist = dijkstra(graph.adjacency, directed=False, indices=uniq)
    out = dist[inv][:, targets].T
    return np.where(np.isfinite(out), out, d_infinity)


@dataclass
class BuildReport:
    snap: SnapResult
    isolated_nodes: int
    dropped_segments: int


def build_instance(
    graph: PedGraph,
    layer: PointLayer,
    specs: Sequence[AmenityTypeSpec],
    curve: PwlCurve = WALKSCORE_CURVE,
    d_infinity: float = DEFAULT_D_INFINITY,
    name: str = "instance",
    warn_distance: float = SNAP_WARN_M,
) -> tuple[Instance, BuildReport]:
    """Snap points, derive residents/candidates/capacities, and compute distances."""
    known = {s.id for s in specs}
    existing_pts = layer.existing()
    unknown = sorted(set(existing_pts) - known)
    if unknown:
        raise GeoDataError(f"points reference amenity types {unknown} missing from the specs")
    snap = snap_points(graph, layer, warn_distance)

    residents = sorted({int(snap.nodes[k]) for k in layer.of_role("residence")})
    cap: dict[int, int] = {}
    for k in layer.of_role("candidate"):
        node = int(snap.nodes[k])
        cap[node] = cap.get(node, 0) + 1
    candidates = sorted(cap)
    existing = {a: tuple(sorted(int(snap.nodes[k]) for k in existing_pts.get(a, []))) for a in sorted(known)}

    columns = candidates + [node for a in sorted(existing) for node in existing[a]]
    dist = distance_matrix(graph, columns, residents, d_infinity)
    coords = {node: (float(graph.lon[node]), float(graph.lat[node])) for node in set(residents) | set(candidates)}
    instance = Instance(
        residents=residents,
        candidates=candidates,
        capacities=[cap[c] for c in candidates],
        existing=existing,
        dist=dist.reshape(len(residents), len(columns)),
        amenity_specs=sorted(specs, key=lambda s: s.id),
        curve=curve,
        d_infinity=d_infinity,
        name=name,
        coords=coords,
    )
    return instance, BuildReport(snap, len(graph.isolated), graph.dropped_segments)
