"""Geofence specification generator.

Turns a polygon into a monitoring spec that tracks, per position update:
whether the movement segment crossed any fence edge, whether the vehicle
is inside (ray-cast parity, unrolled over edges), the minimum distance to
the fence, and a straight-line time-to-breach estimate from the held
velocity.  Geometry runs in a local plane: either an equirectangular
projection around the fence centroid (degrees in, meters out) or the raw
coordinates for already-planar data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# meters per degree of latitude (spherical earth, adequate at fence scale)
_M_PER_DEG = 111_319.49079327358

# time-to-breach when the vehicle is not approaching the fence
NO_BREACH_SENTINEL_S = 1_000_000.0


@dataclass(frozen=True)
class GeofencePolygon:
    """Closed fence: ordered (lat, lon) vertices, implicitly closed.

    Must be simple (non-self-intersecting), free of consecutive duplicate
    vertices, with at least 3 vertices and nonzero area.
    """

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        v = self.vertices
        if len(v) < 3:
            raise ValueError("a geofence needs at least 3 vertices")
        n = len(v)
        for i in range(n):
            if v[i] == v[(i + 1) % n]:
                raise ValueError(f"consecutive duplicate vertex at index {i}")
        if abs(_shoelace(v)) == 0.0:
            raise ValueError("geofence polygon has zero area")
        if _self_intersects(v):
            raise ValueError("geofence polygon is self-intersecting")

    @staticmethod
    def from_file(path) -> "GeofencePolygon":
        """One 'lat,lon' (or whitespace-separated) pair per line; '#' and
        '//' start comments."""
        vertices: list[tuple[float, float]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                text = line.split("#", 1)[0].split("//", 1)[0].strip()
                if not text:
                    continue
                parts = text.replace(",", " ").split()
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{line_no}: expected 'lat, lon', got {line!r}"
                    )
                vertices.append((float(parts[0]), float(parts[1])))
        return GeofencePolygon(tuple(vertices))


def _shoelace(v) -> float:
    area = 0.0
    n = len(v)
    for i in range(n):
        (y1, x1), (y2, x2) = v[i], v[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return area / 2.0


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_cross(p1, p2, p3, p4) -> bool:
    d1 = _orient(*p3, *p4, *p1)
    d2 = _orient(*p3, *p4, *p2)
    d3 = _orient(*p1, *p2, *p3)
    d4 = _orient(*p1, *p2, *p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def _self_intersects(v) -> bool:
    n = len(v)
    edges = [((v[i][1], v[i][0]), (v[(i + 1) % n][1], v[(i + 1) % n][0]))
             for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex by construction
            if _segments_cross(*edges[i], *edges[j]):
                return True
    return False


@dataclass(frozen=True)
class GeofenceStreams:
    """Names of the vehicle's position and velocity input streams."""

    lat: str = "lat"
    lon: str = "lon"
    v_east: str = "v_east"
    v_north: str = "v_north"


def project_vertices(
    polygon: GeofencePolygon, projection: str
) -> tuple[list[tuple[float, float]], tuple[float, float, float, float]]:
    """Project vertices to the local plane.

    Returns (xy vertex list, (lat0, lon0, kx, ky)) where x = (lon-lon0)*kx
    and y = (lat-lat0)*ky.  The 'planar' projection treats lon as x and
    lat as y unchanged.
    """
    if projection == "planar":
        return [(lon, lat) for (lat, lon) in polygon.vertices], (0.0, 0.0, 1.0, 1.0)
    if projection != "equirectangular":
        raise ValueError(f"unknown projection {projection!r}")
    lat0 = sum(lat for lat, _ in polygon.vertices) / len(polygon.vertices)
    lon0 = sum(lon for _, lon in polygon.vertices) / len(polygon.vertices)
    kx = _M_PER_DEG * math.cos(math.radians(lat0))
    ky = _M_PER_DEG
    xy = [
        ((lon - lon0) * kx, (lat - lat0) * ky) for (lat, lon) in polygon.vertices
    ]
    return xy, (lat0, lon0, kx, ky)


def _f(value: float) -> str:
    """Full-precision literal, parenthesized when negative."""
    text = repr(float(value))
    return f"({text})" if text.startswith("-") else text


def generate_geofence_spec(
    polygon: GeofencePolygon,
    streams: GeofenceStreams = GeofenceStreams(),
    projection: str = "equirectangular",
    horizon_s: float = 30.0,
    sentinel_s: float = NO_BREACH_SENTINEL_S,
) -> str:
    """Emit the geofence monitoring specification for one polygon.

    Per edge: a movement-segment intersection flag and the squared
    point-to-edge distance; globally: the inside/outside flag, minimum
    fence distance, projected approach speed, and time-to-breach with
    ``sentinel_s`` standing for "no predicted breach".
    """
    xy, (lat0, lon0, kx, ky) = project_vertices(polygon, projection)
    n = len(xy)
    s = streams
    out: list[str] = []
    w = out.append

    w(f"// geofence monitor: {n}-edge fence, projection={projection}")
    w(f"// time-to-breach sentinel (not approaching): {sentinel_s!r} seconds")
    w(f"input {s.lat}: Float64")
    w(f"input {s.lon}: Float64")
    w(f"input {s.v_east}: Float64")
    w(f"input {s.v_north}: Float64")
    w("")
    if projection == "planar":
        w(f"output pos_x := {s.lon}")
        w(f"output pos_y := {s.lat}")
    else:
        w(f"output pos_x := ({s.lon} - {_f(lon0)}) * {_f(kx)}")
        w(f"output pos_y := ({s.lat} - {_f(lat0)}) * {_f(ky)}")
    w("output prev_x := pos_x.offset(by: -1, or: pos_x)")
    w("output prev_y := pos_y.offset(by: -1, or: pos_y)")
    w("")

    crossed_names: list[str] = []
    dist_names: list[str] = []
    for i in range(n):
        ax, ay = xy[i]
        bx, by = xy[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        len2 = ex * ex + ey * ey
        w(f"// edge {i}: ({ax!r}, {ay!r}) -> ({bx!r}, {by!r})")
        w(
            f"output d1_e{i} := {_f(ex)} * (prev_y - {_f(ay)}) - "
            f"{_f(ey)} * (prev_x - {_f(ax)})"
        )
        w(
            f"output d2_e{i} := {_f(ex)} * (pos_y - {_f(ay)}) - "
            f"{_f(ey)} * (pos_x - {_f(ax)})"
        )
        w(
            f"output d3_e{i} := (pos_x - prev_x) * ({_f(ay)} - prev_y) - "
            f"(pos_y - prev_y) * ({_f(ax)} - prev_x)"
        )
        w(
            f"output d4_e{i} := (pos_x - prev_x) * ({_f(by)} - prev_y) - "
            f"(pos_y - prev_y) * ({_f(bx)} - prev_x)"
        )
        w(
            f"output crossed_e{i} := d1_e{i} * d2_e{i} <= 0.0 "
            f"and d3_e{i} * d4_e{i} <= 0.0 "
            f"and max(prev_x, pos_x) >= {_f(min(ax, bx))} "
            f"and min(prev_x, pos_x) <= {_f(max(ax, bx))} "
            f"and max(prev_y, pos_y) >= {_f(min(ay, by))} "
            f"and min(prev_y, pos_y) <= {_f(max(ay, by))}"
        )
        crossed_names.append(f"crossed_e{i}")
        w(
            f"output t_e{i} := max(0.0, min(1.0, "
            f"((pos_x - {_f(ax)}) * {_f(ex)} + (pos_y - {_f(ay)}) * {_f(ey)}) "
            f"/ {_f(len2)}))"
        )
        w(f"output cx_e{i} := {_f(ax)} + t_e{i} * {_f(ex)}")
        w(f"output cy_e{i} := {_f(ay)} + t_e{i} * {_f(ey)}")
        w(
            f"output dist2_e{i} := (pos_x - cx_e{i}) * (pos_x - cx_e{i}) + "
            f"(pos_y - cy_e{i}) * (pos_y - cy_e{i})"
        )
        dist_names.append(f"dist2_e{i}")
        w("")

    # inside: ray-cast parity, horizontal edges never cross the ray
    terms: list[str] = []
    for i in range(n):
        ax, ay = xy[i]
        bx, by = xy[(i + 1) % n]
        if ay == by:
            continue
        slope = (bx - ax) / (by - ay)
        terms.append(
            f"(({_f(ay)} > pos_y) != ({_f(by)} > pos_y) "
            f"and pos_x < (pos_y - {_f(ay)}) * {_f(slope)} + {_f(ax)})"
        )
    w("output inside := " + " != ".join(terms))
    w("output boundary_crossed := " + " or ".join(crossed_names))
    w("")
    w(f"output min_dist2 := min({', '.join(dist_names)})")
    w("output min_dist := sqrt(min_dist2)")

    # first-minimum edge selection for the nearest boundary point
    sel_terms: list[str] = []
    for i in range(n):
        prior = "".join(f" and not sel_e{j}" for j in range(i))
        w(f"output sel_e{i} := dist2_e{i} == min_dist2{prior}")
        sel_terms.append(f"sel_e{i}")
    near_x = " + ".join(f"cast<Float64>(sel_e{i}) * cx_e{i}" for i in range(n))
    near_y = " + ".join(f"cast<Float64>(sel_e{i}) * cy_e{i}" for i in range(n))
    w(f"output near_x := {near_x}")
    w(f"output near_y := {near_y}")
    w("")
    w(
        f"output speed_toward := ({s.v_east}.hold(or: 0.0) * (near_x - pos_x) "
        f"+ {s.v_north}.hold(or: 0.0) * (near_y - pos_y)) "
        f"/ max(min_dist, 0.000000000001)"
    )
    w(
        f"output time_to_breach := min_dist / "
        f"max(speed_toward, min_dist / {_f(sentinel_s)}, 0.000000000001)"
    )
    w("")
    w('trigger not inside "geofence breached"')
    w(
        f"trigger inside and time_to_breach < {_f(horizon_s)} "
        f'"predicted geofence breach within {horizon_s:g}s"'
    )
    return "\n".join(out) + "\n"
