import math


def medlyn_slope_term():
    """Humidity response factor of the stomatal model."""
    g1 = 4.0
    vpd = 1.5
    return 1.6 * (1.0 + g1 / math.sqrt(vpd))
