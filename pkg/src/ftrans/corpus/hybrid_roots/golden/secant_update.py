def secant_update(x0, f0, x1, f1):
    """One secant step towards the root of f."""
    return x1 - f1 * (x1 - x0) / (f1 - f0)
