def rubisco_limited(ci):
    """Carboxylation-limited gross assimilation (umol CO2/m2/s)."""
    vcmax = 50.0
    gamma_star = 4.275
    kc = 40.49
    ko = 27840.0
    oi = 20900.0
    return vcmax * (ci - gamma_star) / (ci + kc * (1.0 + oi / ko))
