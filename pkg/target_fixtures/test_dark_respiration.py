from dark_respiration import dark_respiration


def test_value():
    assert abs(dark_respiration() - 0.75) < 1e-12


def test_positive():
    assert dark_respiration() > 0.0
