import json
import math

import numpy as np
import pytest

import qmei


def test_entropies():
    half = np.eye(2) / 2
    assert qmei.von_neumann_entropy(half) == pytest.approx(math.log(2))
    up = np.diag([1.0, 0.0])
    assert qmei.relative_entropy(up, half) == pytest.approx(math.log(2))
    assert math.isinf(qmei.relative_entropy(half, up))


def test_solve_minrent_closed_form():
    z = np.diag([1.0, -1.0])
    out = qmei.solve_minrent(np.eye(2) / 2, [z], [-math.tanh(1.0)], iota=1.0)
    assert abs(out["lambda"][0] - 1.0) < 1e-8
    assert np.allclose(out["mu"], np.diag([1 - math.tanh(1), 1 + math.tanh(1)]) / 2)


def test_infeasible_raises():
    z = np.diag([1.0, -1.0])
    with pytest.raises(qmei.FeasibilityError):
        qmei.solve_minrent(np.eye(2) / 2, [z], [1.5])


def test_non_hermitian_rejected():
    with pytest.raises(qmei.ValidationError):
        qmei.von_neumann_entropy(np.array([[0.5, 0.3], [0.1, 0.5]]))


def test_grains():
    rho = np.array([[0.9, 0.3], [0.3, 0.1]])
    assert np.allclose(qmei.pinch([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], rho), np.diag([0.9, 0.1]))
    bell = np.zeros((4, 4))
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    assert np.allclose(qmei.decorrelate(bell, 2, 2), np.eye(4) / 4)
    kg = qmei.kawasaki_gunton(np.eye(2) / 2, [np.diag([1.0, -1.0])], np.array([[0.65, 0.25], [0.25, 0.35]]))
    assert np.allclose(kg["mu"], np.diag([0.65, 0.35]), atol=1e-9)


def test_neyman_pearson_and_concentration():
    beta, rate = qmei.quantum_neyman_pearson(np.diag([0.75, 0.25]), np.diag([0.75, 0.25]), 2, 0.05)
    assert beta == pytest.approx(0.95)
    rep = qmei.concentration_simulation([0.5, 0.5], 1, 1000, [0.1], 1)
    assert rep["mean_rel_entropy"] == pytest.approx(math.log(2))


def test_selftest_and_cli():
    props = qmei.selftest(3, instances=5)
    assert all(p["passed"] for p in props)
    code, out = qmei.run_cli("entropy", json.dumps({"version": "qmei-problem/1", "rho": [[0.5, 0], [0, 0.5]]}))
    assert code == 0
    assert json.loads(out)["result"]["rho"]["von_neumann_entropy"] == pytest.approx(math.log(2))
    code, _ = qmei.run_cli("entropy", "{")
    assert code == 1
