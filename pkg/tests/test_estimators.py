import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from polypin.estimators import BridgeDensity, RenewalLowerBound, TransferOperator
from polypin.potentials import PotentialSpec


def test_transfer_operator_params_and_fit():
    est = TransferOperator(L=8.0, n_points=129)
    assert est.get_params() == {"L": 8.0, "n_points": 129, "tol": 1e-10, "max_iter": 10000}
    est.set_params(n_points=257)
    est.fit(PotentialSpec.quadratic())
    assert est.lambda_ == pytest.approx(1.5491814708834637, rel=1e-10)
    assert np.allclose(est.transform(est.nodes_[::32]), est.v_[::32], rtol=1e-9)
    assert clone(est).get_params()["n_points"] == 257


def test_not_fitted_and_type_errors():
    with pytest.raises(NotFittedError):
        TransferOperator().transform([0.0])
    with pytest.raises(TypeError):
        TransferOperator().fit(np.zeros(3))


def test_pipeline_of_estimators():
    op = TransferOperator(n_points=129).fit(PotentialSpec.quadratic())
    bd = BridgeDensity(n_max=120).fit(op)
    assert bd.predict([2])[0] * op.lambda_ ** 2 == pytest.approx(1.0, rel=1e-9)
    rl = RenewalLowerBound(n_trunc=100).fit(bd)
    br = rl.brackets([1.0, 2.0])
    assert np.all(br[:, 1] > 0) and br[0, 1] < br[1, 1]
    assert rl.predict([1.0])[0] == pytest.approx(br[0, 1:].mean())
