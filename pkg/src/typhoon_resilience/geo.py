"""Small spherical-earth helpers (WGS-84 lat/lon in degrees, distances in km)."""

import numpy as np

EARTH_RADIUS_KM = 6371.0088


def haversine(lat1, lon1, lat2, lon2):
    """Great-circle distance in km. Broadcasts over numpy arrays."""
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    a = (np.sin((lat2 - lat1) / 2.0) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def bearing(lat1, lon1, lat2, lon2):
    """Initial bearing from point 1 to point 2, degrees clockwise from north in [0, 360)."""
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    dlon = lon2 - lon1
    x = np.sin(dlon) * np.cos(lat2)
    y = np.cos(lat1) * np.sin(lat2) - np.sin(lat1) * np.cos(lat2) * np.cos(dlon)
    return np.mod(np.degrees(np.arctan2(x, y)), 360.0)


def offset(lat, lon, distance_km, heading_deg):
    """Move ``distance_km`` along ``heading_deg`` in the local tangent plane at (lat, lon)."""
    h = np.radians(heading_deg)
    dlat = distance_km * np.cos(h) / EARTH_RADIUS_KM
    dlon = distance_km * np.sin(h) / (EARTH_RADIUS_KM * np.cos(np.radians(lat)))
    return lat + np.degrees(dlat), lon + np.degrees(dlon)


def polyline_length(points):
    """Sum of haversine segment lengths of an (n, 2) lat/lon array."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(haversine(pts[:-1, 0], pts[:-1, 1], pts[1:, 0], pts[1:, 1])))


def fold_angle(angle_deg):
    """Fold an angle difference into [0, 180] degrees."""
    a = np.mod(np.asarray(angle_deg, dtype=float), 360.0)
    return np.where(a > 180.0, 360.0 - a, a)
