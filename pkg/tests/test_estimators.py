import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tsdc.estimators import BruteForce, GreedyDeadline, ILSMDPSolver, UniformDuration
from tsdc.instance import instance_to_dict, save_instance
from tsdc.schedule import evaluate

from conftest import small_instance


def test_fit_predict_score():
    inst = small_instance(3, n=5)
    est = ILSMDPSolver(seed=2, stall_limit=3).fit(inst)
    assert est.predict() is est.schedule_
    assert est.predict(inst) is est.schedule_
    assert est.score() == est.objective_ == float(evaluate(inst, est.schedule_).objective)
    assert est.result_.best == est.schedule_


def test_accepts_documents_and_paths(tmp_path):
    inst = small_instance(4, n=4)
    path = tmp_path / "i.tsdc"
    save_instance(inst, path)
    a = GreedyDeadline().fit(inst).schedule_
    assert GreedyDeadline().fit(instance_to_dict(inst)).schedule_ == a
    assert GreedyDeadline().fit(str(path)).schedule_ == a
    with pytest.raises(TypeError):
        GreedyDeadline().fit(42)


def test_params_and_clone():
    est = ILSMDPSolver(seed=5, per_ap_cap=10)
    assert est.get_params()["per_ap_cap"] == 10
    twin = clone(est).set_params(seed=6)
    assert twin.seed == 6 and est.seed == 5
    assert twin.config().per_ap_cap == 10


def test_not_fitted():
    with pytest.raises(NotFittedError):
        UniformDuration().predict()


def test_predict_other_instance_solves_it():
    a, b = small_instance(1, n=4), small_instance(2, n=4)
    est = GreedyDeadline().fit(a)
    other = est.predict(b)
    assert other == GreedyDeadline().fit(b).schedule_
    assert est.score(b) == float(evaluate(b, other).objective)


def test_oracle_dominates_wrappers():
    inst = small_instance(5, n=4)
    top = BruteForce().fit(inst).objective_
    for est in (GreedyDeadline(), UniformDuration(duration=3), ILSMDPSolver(stall_limit=3)):
        assert est.fit(inst).objective_ <= top
