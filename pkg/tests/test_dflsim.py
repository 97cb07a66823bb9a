"""D-PSGD and consensus simulation on quadratic tasks."""

import numpy as np
import pytest

from netmix.dflsim import (
    DivergenceError,
    QuadraticTask,
    TrainState,
    dpsgd_step,
    first_passage,
    run_consensus,
    run_dpsgd,
)
from netmix.mixing import complete_edges, metropolis_weights, mixing_from_weights


def _clique_matrix(m):
    return mixing_from_weights(metropolis_weights(complete_edges(m), m), m)


def test_task_validation_and_minimizer():
    with pytest.raises(ValueError):
        QuadraticTask(centers=np.zeros(3), curvatures=np.ones(3))
    with pytest.raises(ValueError):
        QuadraticTask(centers=np.zeros((3, 2)), curvatures=np.ones(2))
    with pytest.raises(ValueError):
        QuadraticTask(centers=np.zeros((2, 1)), curvatures=np.array([1.0, 0.0]))
    task = QuadraticTask(
        centers=np.array([[0.0], [3.0]]), curvatures=np.array([1.0, 2.0])
    )
    assert task.minimizer() == pytest.approx([2.0])


def test_gradients_noise_free_at_centers():
    task = QuadraticTask(centers=np.ones((3, 2)), curvatures=np.ones(3))
    g = task.gradients(np.ones((3, 2)), np.random.default_rng(0))
    assert np.allclose(g, 0.0)


def test_dpsgd_step_moves_towards_minimum():
    task = QuadraticTask(centers=np.zeros((3, 2)), curvatures=np.ones(3))
    w = _clique_matrix(3)
    state = TrainState(
        x=np.full((3, 2), 4.0), eta=0.1, rng=np.random.default_rng(0)
    )
    before = float(np.linalg.norm(state.x))
    dpsgd_step(state, w, task)
    assert state.iteration == 1
    assert float(np.linalg.norm(state.x)) < before


def test_run_consensus_contracts():
    w = _clique_matrix(4)
    rng = np.random.default_rng(3)
    trace = run_consensus(w, rng.standard_normal((4, 2)), k_max=10)
    assert trace.shape == (11,)
    # Clique mixing averages in one step.
    assert trace[1] < 1e-9


def test_run_consensus_rejects_nonconvergent():
    w = mixing_from_weights(np.zeros(3), 3)  # identity
    with pytest.raises(ValueError):
        run_consensus(w, np.ones((3, 1)), k_max=5)


def test_run_dpsgd_converges_and_records():
    task = QuadraticTask(
        centers=np.zeros((4, 3)), curvatures=np.ones(4), noise=1e-3
    )
    w = _clique_matrix(4)
    state = run_dpsgd(task, w, eta=0.1, k_max=200, seed=5)
    assert len(state.opt_distance_history) == 200
    assert state.opt_distance_history[-1] < 0.1
    assert state.consensus_history[-1] < 0.1


def test_run_dpsgd_rejects_unstable_eta():
    task = QuadraticTask(centers=np.zeros((3, 1)), curvatures=np.full(3, 2.0))
    with pytest.raises(ValueError, match="learning rate"):
        run_dpsgd(task, _clique_matrix(3), eta=0.5, k_max=10, seed=0)


def test_run_dpsgd_divergence_guard():
    # A crafted mixing matrix with rho < 1 but an expansive entry pattern
    # cannot be built from valid weights here; instead force divergence by
    # monkeypatching the gradient to push away from the optimum.
    task = QuadraticTask(centers=np.zeros((3, 1)), curvatures=np.ones(3))

    class Exploding(QuadraticTask):
        def gradients(self, x, rng):
            return -10.0 * np.ones_like(x)

    bad = Exploding(centers=task.centers, curvatures=task.curvatures)
    with pytest.raises(DivergenceError):
        run_dpsgd(bad, _clique_matrix(3), eta=0.5 - 1e-9, k_max=2000, seed=1)


def test_first_passage():
    assert first_passage([3.0, 2.0, 0.5, 0.1], 1.0) == 3
    assert first_passage([3.0, 2.0], 1.0) is None
    assert first_passage([], 1.0) is None
