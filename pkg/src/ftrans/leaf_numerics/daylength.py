"""Day length in seconds from latitude and solar declination.

Semantics follow the CLM day-length routine: latitudes at or beyond the
pole (within ten machine epsilons) and declinations at or beyond pi/2 are
invalid and yield NaN; valid latitudes are clamped just inside the pole so
cos(lat) stays positive. The function is elementwise over arrays, like the
elemental Fortran original.
"""

from __future__ import annotations

import numpy as np

SECS_PER_RADIAN = 13750.9871
_LAT_EPSILON = 10.0 * np.finfo(float).eps
_POLE = np.pi / 2.0
_OFFSET_POLE = _POLE - _LAT_EPSILON


def daylength(lat, decl):
    """Seconds between sunrise and sunset; NaN for invalid inputs.

    lat and decl are radians, scalars or arrays (broadcast together).
    """
    lat_arr = np.asarray(lat, dtype=float)
    decl_arr = np.asarray(decl, dtype=float)
    scalar_in = lat_arr.ndim == 0 and decl_arr.ndim == 0

    lat_arr = np.where(np.abs(lat_arr) >= _POLE + _LAT_EPSILON, np.nan, lat_arr)
    decl_arr = np.where(np.abs(decl_arr) >= _POLE, np.nan, decl_arr)

    my_lat = np.clip(lat_arr, -_OFFSET_POLE, _OFFSET_POLE)
    temp = -(np.sin(my_lat) * np.sin(decl_arr)) / (np.cos(my_lat) * np.cos(decl_arr))
    temp = np.clip(temp, -1.0, 1.0)
    result = 2.0 * SECS_PER_RADIAN * np.arccos(temp)
    return float(result) if scalar_in else result
