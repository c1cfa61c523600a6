def diffusion_supply(gs, ci):
    """CO2 diffusion through stomata for a given conductance (umol/m2/s)."""
    ca = 40.0
    pressure = 101325.0
    return gs * (ca - ci) / (1.6 * pressure) * 1.0e6
