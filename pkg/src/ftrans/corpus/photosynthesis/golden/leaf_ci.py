import math


def leaf_ci(ci0):
    """Converged internal CO2 partial pressure (Pa) of a leaf at 25 degC.

    Net assimilation is the co-limited Farquhar rate minus respiration;
    supply follows the Medlyn stomatal model. The root of demand minus
    supply is found by a secant iteration safeguarded with bisection.
    """
    vcmax = 50.0
    jmax = 83.5
    rd = 0.75
    gamma_star = 4.275
    kc = 40.49
    ko = 27840.0
    oi = 20900.0
    ca = 40.0
    g0 = 0.01
    g1 = 4.0
    vpd = 1.5
    pressure = 101325.0
    ftol = 1.0e-6
    step_tol = 1.0e-3
    max_iter = 40

    km = kc * (1.0 + oi / ko)
    slope = 1.6 * (1.0 + g1 / math.sqrt(vpd))
    lo = 1.0e-6
    hi = 2.0 * ca

    def residual(ci):
        ac = vcmax * (ci - gamma_star) / (ci + km)
        aj = (jmax / 4.0) * (ci - gamma_star) / (ci + 2.0 * gamma_star)
        an = min(ac, aj) - rd
        gs = g0 + slope * max(an, 0.0) / ca
        return an - gs * (ca - ci) / (1.6 * pressure) * 1.0e6

    f_lo = residual(lo)
    x_prev, f_prev = lo, f_lo
    x = ci0
    fx = residual(x)
    step = abs(x - x_prev)

    for _ in range(max_iter):
        if abs(fx) <= ftol and step <= step_tol:
            return x
        if fx * f_lo > 0.0:
            lo, f_lo = x, fx
        else:
            hi = x
        denom = fx - f_prev
        if abs(denom) < 1.0e-300:
            cand = 0.5 * (lo + hi)
        else:
            cand = x - fx * (x - x_prev) / denom
            if cand <= lo or cand >= hi:
                cand = 0.5 * (lo + hi)
        x_prev, f_prev = x, fx
        x = cand
        fx = residual(x)
        step = abs(x - x_prev)
    return x
