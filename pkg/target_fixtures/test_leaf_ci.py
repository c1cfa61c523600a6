from leaf_ci import leaf_ci

tol = 1e-3
root = 39.053750712


def test_low_start():
    assert abs(leaf_ci(35.0) - root) < tol


def test_high_start():
    assert abs(leaf_ci(70.0) - root) < tol


def test_starts_agree():
    assert abs(leaf_ci(35.0) - leaf_ci(70.0)) < tol


def test_below_ambient():
    assert leaf_ci(50.0) < 40.0


def test_midrange_start():
    assert abs(leaf_ci(42.5) - root) < tol
