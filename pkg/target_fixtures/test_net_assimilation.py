from net_assimilation import net_assimilation


def test_rubisco_side():
    assert net_assimilation(3.0, 5.0, 0.75) == 2.25


def test_light_side():
    assert net_assimilation(5.0, 3.0, 0.75) == 2.25


def test_tie():
    assert net_assimilation(4.0, 4.0, 1.0) == 3.0


def test_negative_allowed():
    assert net_assimilation(-1.0, 2.0, 0.5) == -1.5
