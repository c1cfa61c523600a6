def light_limited(ci):
    """Electron-transport-limited gross assimilation at light saturation."""
    jmax = 83.5
    gamma_star = 4.275
    return (jmax / 4.0) * (ci - gamma_star) / (ci + 2.0 * gamma_star)
