def dark_respiration():
    """Leaf dark respiration at 25 degC (umol CO2/m2/s)."""
    return 0.75
