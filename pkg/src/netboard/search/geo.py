"""Great-circle distance and the nearby-listing boost."""

from __future__ import annotations

import math

EARTH_RADIUS_KM = 6371.0
DEFAULT_DECAY_KM = 25.0

Coords = tuple[float, float]


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return EARTH_RADIUS_KM * 2 * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def location_boost(
    origin: Coords | None,
    listing_location: Coords | None,
    decay_km: float = DEFAULT_DECAY_KM,
) -> float:
    """exp(-distance/decay) in [0, 1]; 0 (neutral) when either side is unknown."""
    if origin is None or listing_location is None:
        return 0.0
    d = haversine_km(origin[0], origin[1], listing_location[0], listing_location[1])
    return math.exp(-d / decay_km)
