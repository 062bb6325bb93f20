"""Trip origin/destination inference from GBFS free_bike_status snapshots."""

from .model import (
    Algorithm,
    EndpointKind,
    GridSpec,
    LocalProjection,
    Snapshot,
    TripEndpoint,
    TripOD,
    VehicleRecord,
    geo_distance,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "EndpointKind", "GridSpec", "LocalProjection", "Snapshot",
    "TripEndpoint", "TripOD", "VehicleRecord", "geo_distance",
]
