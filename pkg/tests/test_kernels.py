import numpy as np
import pytest

from pgrates import kernels
from pgrates.mdp_core import TabularMdp
from pgrates.optimizer import MethodSpec, RunConfig, run

needs_compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")

METHODS = [
    MethodSpec("plain", eta=0.4),
    MethodSpec("entropy", eta=0.4, tau=0.2),
    MethodSpec("two_stage", tau=0.2),
    MethodSpec("two_stage", tau=0.2, t1=300),
    MethodSpec("decaying", alpha=1.0),
]


def _config(method, seed=3):
    rng = np.random.default_rng(seed)
    r = rng.uniform(size=8)
    return RunConfig(TabularMdp.bandit(r), method, init="random", seed=seed, iterations=3000,
                     dense_until=1000, record_every=7)


@needs_compiled
@pytest.mark.parametrize("method", METHODS, ids=lambda m: f"{m.kind}-{m.t1}")
def test_backends_agree(method):
    cfg = _config(method)
    a, b = run(cfg, backend="python"), run(cfg, backend="cython")
    assert a.table.shape == b.table.shape
    np.testing.assert_array_equal(np.isnan(a.table), np.isnan(b.table))
    np.testing.assert_allclose(a.table, b.table, rtol=1e-9, atol=1e-15)
    np.testing.assert_allclose(a.final_logits, b.final_logits, rtol=1e-9)
    assert a.switch_t == b.switch_t


def test_python_backend_always_available():
    assert callable(kernels.get_backend("python"))
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize(
    "T, dense, every, expected",
    [(100, 1000, 5, 100), (1000, 1000, 5, 1000), (1010, 1000, 5, 1002), (1011, 1000, 5, 1003), (2000, 0, 1, 2000)],
)
def test_record_count(T, dense, every, expected):
    assert kernels.record_count(T, dense, every) == expected


def test_recorded_rows_include_last_iteration():
    trace = run(_config(MethodSpec("plain", eta=0.4)))
    assert trace.t[-1] == 3000
    assert len(trace.t) == kernels.record_count(3000, 1000, 7)
    assert np.all(np.diff(trace.t) > 0)
