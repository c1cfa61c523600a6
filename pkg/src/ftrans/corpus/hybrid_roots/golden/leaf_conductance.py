def leaf_conductance(an, slope):
    """Stomatal conductance (mol/m2/s); never below the cuticular minimum."""
    g0 = 0.01
    ca = 40.0
    return g0 + slope * max(an, 0.0) / ca
