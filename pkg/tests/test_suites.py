import pytest

from pgrates.suites import SUITES, run_suite, worker_count


@pytest.mark.parametrize("name", sorted(SUITES))
def test_small_suites_pass(name):
    reports = run_suite(name, trials=20, seed=11)
    assert reports
    failed = [rep for rep in reports if not rep.passed]
    assert not failed, failed[:3]


def test_zero_trials_is_empty_except_fixtures():
    assert run_suite("smoothness", trials=0) == []
    assert run_suite("degree", trials=0) == []
    assert len(run_suite("fixtures", trials=0)) == 6


def test_suites_are_deterministic_and_seed_dependent():
    a = [rep.to_dict() for rep in run_suite("lojasiewicz", 30, seed=3)]
    b = [rep.to_dict() for rep in run_suite("lojasiewicz", 30, seed=3)]
    c = [rep.to_dict() for rep in run_suite("lojasiewicz", 30, seed=4)]
    assert a == b and a != c


def test_parallel_matches_serial():
    serial = [rep.to_dict() for rep in run_suite("spectrum", 450, seed=2, workers=1)]
    parallel = [rep.to_dict() for rep in run_suite("spectrum", 450, seed=2, workers=2)]
    assert serial == parallel


def test_mdp_share_of_suites():
    names = [rep.name for rep in run_suite("reversed", 50, seed=0)]
    assert len(names) == 60


def test_degree_suite_contains_plain_separation():
    reports = run_suite("degree", 5, seed=0)
    (sep,) = [rep for rep in reports if rep.name == "degree_plain_zero"]
    assert sep.passed and sep.context["eps"] == 1e-6


def test_unknown_suite_and_negative_trials():
    with pytest.raises(KeyError):
        run_suite("nope")
    with pytest.raises(ValueError):
        run_suite("spectrum", -1)


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("PGRATES_THREADS", "1")
    assert worker_count() == 1
