import json
import random

import numpy as np
import pytest

from conftest import PLANT_A, PLANT_B
from encctl.encrypted_control import PlaintextOverflowError, input_error_bound
from encctl.numerics import NotPositiveDefiniteError
from encctl.simulator import (
    CryptoSetup,
    PlantModel,
    error_tube,
    read_trajectory_csv,
    run_closed_loop,
    sample_noise,
    stationary_covariance,
    write_cipherlog,
    write_trajectory_csv,
)

F_POLES = np.array([[-0.0398, 0.2]])
F_CHEAP = np.array([[-0.78077641, 0.8096118]])


@pytest.mark.parametrize(
    "L, variances, tol",
    [
        (1e4 * np.eye(2), [1e-4, 1e-4], 0.05),
        (np.eye(2), [1.0, 1.0], 0.05),
        (np.diag([4.0, 1.0]), [0.25, 1.0], 0.05),
    ],
)
def test_noise_covariance(L, variances, tol):
    w = sample_noise(L, np.random.default_rng(0), size=100_000)
    assert np.allclose(w.var(axis=0), variances, rtol=tol)


def test_noise_full_covariance():
    L = np.array([[2.0, 0.8], [0.8, 1.0]])
    w = sample_noise(L, np.random.default_rng(1), size=200_000)
    assert np.allclose(np.cov(w.T), np.linalg.inv(L), atol=0.02)


def test_noise_rejects_non_spd():
    with pytest.raises(NotPositiveDefiniteError):
        sample_noise(np.diag([1.0, -1.0]), np.random.default_rng(0))


def test_plant_validation():
    with pytest.raises(ValueError, match="controllable"):
        PlantModel(np.eye(2), np.array([[1.0], [0.0]]), np.eye(2))
    with pytest.raises(NotPositiveDefiniteError):
        PlantModel(PLANT_A, PLANT_B, -np.eye(2))
    with pytest.raises(ValueError):
        PlantModel(PLANT_A, PLANT_B, np.eye(3))


def test_deterministic_scalar_decay():
    plant = PlantModel([[0.5]], [[1.0]], [[1.0]])
    traj, _ = run_closed_loop(plant, [[0.0]], 3, x0=[1.0], noise=False)
    assert traj.states.ravel().tolist() == [1.0, 0.5, 0.25, 0.125]
    assert traj.inputs.shape == (3, 1)


def test_seed_reproducibility(unstable_plant):
    a, _ = run_closed_loop(unstable_plant, F_POLES, 200, seed=11)
    b, _ = run_closed_loop(unstable_plant, F_POLES, 200, seed=11)
    c, _ = run_closed_loop(unstable_plant, F_POLES, 200, seed=12)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)


def test_bad_mode_and_missing_crypto(unstable_plant):
    with pytest.raises(ValueError):
        run_closed_loop(unstable_plant, F_POLES, 5, mode="cloud")
    with pytest.raises(ValueError):
        run_closed_loop(unstable_plant, F_POLES, 5, mode="enc_static")
    with pytest.raises(ValueError):
        run_closed_loop(unstable_plant, np.zeros((2, 2)), 5)


@pytest.mark.parametrize("mode", ["enc_static", "enc_dynamic"])
def test_encrypted_loop_tracks_plain_loop(unstable_plant, keys512, mode):
    pk, sk = keys512
    crypto = CryptoSetup(pk, sk, 1e-6, 1e-6)
    plain, _ = run_closed_loop(unstable_plant, F_POLES, 100, seed=3)
    enc, log = run_closed_loop(unstable_plant, F_POLES, 100, mode=mode, seed=3, crypto=crypto)
    assert np.max(np.abs(enc.states - plain.states)) <= 1e-3
    bounds = [
        np.max(input_error_bound(F_POLES, x, 1e-6, 1e-6, enc.max_gap)) for x in enc.states[:-1]
    ]
    tube = error_tube(unstable_plant.closed_loop(F_POLES), unstable_plant.B_p, bounds)
    assert np.all(np.max(np.abs(enc.states - plain.states), axis=1) <= tube + 1e-12)
    assert len(log.records) == 100
    if mode == "enc_dynamic":
        assert [r["epoch"] for r in log.records] == list(range(100))
        assert len({r["h"] for r in log.records}) > 1


def test_overflow_reports_step(unstable_plant):
    from encctl.elgamal import keygen

    pk, sk = keygen(16, random.Random(0))
    crypto = CryptoSetup(pk, sk, 0.5, 0.5)
    with pytest.raises(PlaintextOverflowError, match="step 0"):
        run_closed_loop(unstable_plant, F_POLES * 1e4, 5, mode="enc_static", seed=0, crypto=crypto, x0=[500.0, 500.0])


def test_error_tube_scalar_closed_form():
    tube = error_tube([[0.5]], [[1.0]], [1.0, 1.0, 1.0])
    assert tube.tolist() == [0.0, 1.0, 1.5, 1.75]


def test_stationary_second_moment(unstable_plant):
    A = unstable_plant.closed_loop(F_CHEAP)
    expected = np.trace(stationary_covariance(A, unstable_plant.Sigma))
    energies = []
    for seed in range(20):
        traj, _ = run_closed_loop(unstable_plant, F_CHEAP, 2000, seed=seed)
        energies.append(np.mean(np.sum(traj.states[500:] ** 2, axis=1)))
    assert np.mean(energies) == pytest.approx(expected, rel=0.1)


def test_trajectory_csv_roundtrip(tmp_path, unstable_plant):
    traj, _ = run_closed_loop(unstable_plant, F_POLES, 20, seed=5)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, traj)
    back = read_trajectory_csv(path)
    assert np.array_equal(back.states, traj.states)
    assert np.array_equal(back.inputs, traj.inputs)
    header = path.read_text().splitlines()[0]
    assert header == "t,x1,x2,u1"


def test_cipherlog_is_jsonl(tmp_path, unstable_plant, keys32):
    pk, sk = keys32
    _, log = run_closed_loop(unstable_plant, F_POLES, 3, "enc_dynamic", 0, CryptoSetup(pk, sk, 1e-3, 1e-3))
    path = tmp_path / "log.jsonl"
    write_cipherlog(path, log)
    recs = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["t"] for r in recs] == [0, 1, 2]
    assert all(isinstance(c["c1"], str) for r in recs for c in r["c"])
