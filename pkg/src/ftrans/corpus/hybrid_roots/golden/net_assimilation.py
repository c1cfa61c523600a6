def net_assimilation(ac, aj, rd):
    """Co-limited net assimilation: hard minimum of the two gross rates."""
    return min(ac, aj) - rd
