from rubisco_limited import rubisco_limited
from light_limited import light_limited
from dark_respiration import dark_respiration
from net_assimilation import net_assimilation
from medlyn_slope_term import medlyn_slope_term
from leaf_conductance import leaf_conductance
from diffusion_supply import diffusion_supply
from secant_update import secant_update


def hybrid(ci0):
    """Solve demand == supply for internal CO2 with a safeguarded secant
    iteration started from ci0 and bracketed by (1e-6, 2*ca)."""
    ca = 40.0
    ftol = 1.0e-6
    step_tol = 1.0e-3
    max_iter = 40

    lo = 1.0e-6
    hi = 2.0 * ca
    slope = medlyn_slope_term()
    rd = dark_respiration()

    def residual(ci):
        ac = rubisco_limited(ci)
        aj = light_limited(ci)
        an = net_assimilation(ac, aj, rd)
        gs = leaf_conductance(an, slope)
        return an - diffusion_supply(gs, ci)

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
            cand = secant_update(x_prev, f_prev, x, fx)
            if cand <= lo or cand >= hi:
                cand = 0.5 * (lo + hi)
        x_prev, f_prev = x, fx
        x = cand
        fx = residual(x)
        step = abs(x - x_prev)
    return x
