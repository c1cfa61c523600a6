from leaf_conductance import leaf_conductance

tol = 1e-6
slope = 6.825578117937448


def test_typical():
    assert abs(leaf_conductance(5.0, slope) - 0.8631972647421811) < tol


def test_zero_assimilation():
    assert abs(leaf_conductance(0.0, slope) - 0.01) < tol


def test_negative_assimilation_clamped():
    assert abs(leaf_conductance(-3.0, slope) - 0.01) < tol


def test_monotone_in_an():
    assert leaf_conductance(10.0, slope) > leaf_conductance(5.0, slope)
