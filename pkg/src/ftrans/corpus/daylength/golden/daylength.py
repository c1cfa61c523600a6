import numpy as np


def daylength(lat, decl):
    """
    Calculate the length of the day (in hours) given the
    latitude and the declination of the sun.  This is
    the number of seconds between sunrise and sunset.
    Returns NaN if input arguments are invalid.
    """
    # Number of seconds per radian of hour-angle
    secs_per_radian = 13750.9871

    # Epsilon for defining latitudes "near" the pole
    lat_epsilon = 10.0 * np.finfo(float).eps

    pole = np.pi / 2
    offset_pole = pole - lat_epsilon

    # Lat must be less than pi/2 within a small tolerance
    # Decl must be strictly less than pi/2
    lat = np.where(abs(lat) >= pole + lat_epsilon, np.nan, lat)
    decl = np.where(abs(decl) >= pole, np.nan, decl)

    my_lat = np.clip(lat, -offset_pole, offset_pole)
    temp = -np.tan(my_lat) * np.tan(decl)
    temp = np.clip(temp, -1, 1)
    return 2.0 * secs_per_radian * np.arccos(temp)
