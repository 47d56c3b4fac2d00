import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from flexmh.config import EXAMPLES
from flexmh.estimator import ContractMenuSolver


def test_params_round_trip():
    est = ContractMenuSolver(mode="convex", convex_grid=100)
    params = est.get_params()
    assert params["mode"] == "convex" and params["convex_grid"] == 100
    assert clone(est).get_params() == params
    est.set_params(seed=4)
    assert est.seed == 4


def test_fit_predict_example1(ex1):
    est = ContractMenuSolver(mode="convex").fit(ex1)
    assert est.regime_ == "Screening"
    assert est.objective_ == pytest.approx(0.19806499242164952, abs=1e-10)
    a0, a1 = est.menu_.alphas
    k0, k1 = est.menu_.powers
    X = np.array([[0, 0.0], [1, a1], [0, 0.49], [1, 0.1]])
    pay = est.predict(X)
    # payments on the range follow kappa * c(x); off the range they vanish
    assert pay[1] == pytest.approx(k1 * a1)
    assert pay[2] == 0.0 and pay[3] == 0.0
    assert est.score() == est.objective_


def test_fit_accepts_config_dict():
    est = ContractMenuSolver().fit(EXAMPLES["osc-ex1"])
    assert est.regime_ == "EqualPower"


def test_not_fitted_and_bad_input(ex1):
    with pytest.raises(NotFittedError):
        ContractMenuSolver().predict([[0, 0.1]])
    est = ContractMenuSolver(mode="convex").fit(ex1)
    with pytest.raises(ValueError):
        est.predict([[2, 0.1]])
    with pytest.raises(ValueError):
        est.predict([[0.5, 0.1]])
    with pytest.raises(ValueError):
        est.predict([[0, 0.1, 3.0]])
    with pytest.raises(TypeError):
        ContractMenuSolver().fit("not an environment")
