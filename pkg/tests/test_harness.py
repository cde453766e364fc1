import struct

import numpy as np
import pytest

from modblind import harness
from modblind.harness import (
    NOISE_SWEEP_HEADER,
    OVERSAMPLING_HEADER,
    PHASE_TRANSITION_HEADER,
    TRIAL_HEADER,
    GridResult,
    InstanceSpec,
    derive_seed,
    gen_instance,
    load_config,
    oversampling_sweep,
    phase_transition,
    read_cvec,
    run_trial,
    solver_config_from,
    success_frontier,
    write_cvec,
)
from modblind.solver import SolverConfig
from modblind.spectral import ProblemDims


def test_gen_instance_deterministic_and_normalized():
    spec = InstanceSpec(ProblemDims(64, 8, 4), seed=9, sigma=0.1, d0=2.0)
    a, b = gen_instance(spec), gen_instance(spec)
    for name in ("h0", "x0", "yhat", "e"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_array_equal(a.op.signs, b.op.signs)
    assert np.linalg.norm(a.h0) == pytest.approx(np.sqrt(2.0))
    assert np.linalg.norm(a.x0) == pytest.approx(np.sqrt(2.0))
    np.testing.assert_allclose(a.yhat - a.e, a.op.forward_fourier(a.x0, a.h0))
    c = gen_instance(InstanceSpec(ProblemDims(64, 8, 4), seed=10))
    assert not np.allclose(a.h0, c.h0)


def test_noise_free_instance_has_zero_noise():
    inst = gen_instance(InstanceSpec(ProblemDims(64, 8, 4), seed=1))
    assert not np.any(inst.e)


def test_instance_spec_validation():
    with pytest.raises(ValueError):
        InstanceSpec(ProblemDims(64, 8, 4), 0, sigma=-1.0)
    with pytest.raises(ValueError):
        InstanceSpec(ProblemDims(64, 8, 4), 0, truth_model="uniform")


def test_derived_seeds_unique():
    seeds = {derive_seed(0, c, t) for c in range(49) for t in range(20)}
    assert len(seeds) == 49 * 20
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(1, 1, 2) != derive_seed(0, 1, 2)


def test_run_trial_success_and_failure():
    ok = run_trial(InstanceSpec(ProblemDims(256, 32, 16), seed=0))
    assert ok.success and ok.relative_error < 1e-2
    assert "success=true" in str(ok)
    assert ok.csv_row()[-1] == "true"
    bad = run_trial(InstanceSpec(ProblemDims(64, 60, 60), seed=0))
    assert not bad.success
    assert "success=false" in str(bad)


def test_trial_row_schema():
    rec = run_trial(InstanceSpec(ProblemDims(64, 8, 4), seed=3, sigma=0.01))
    row = rec.csv_row()
    assert len(row) == len(TRIAL_HEADER)
    assert row[:3] == [64, 8, 4] and row[4] == 3
    assert float(row[3]) == 0.01


def test_csv_headers():
    assert ",".join(PHASE_TRANSITION_HEADER) == "K,M,Q,n_trials,success_rate"
    assert ",".join(NOISE_SWEEP_HEADER) == "snr_db,sigma,n_trials,mean_log10_relerr"
    assert ",".join(OVERSAMPLING_HEADER) == "ratio,Q,K,M,n_trials,mean_log10_relerr"


def test_phase_transition_small_grid(tmp_path):
    out = tmp_path / "pt.csv"
    grid = phase_transition(48, [4, 20], [4, 20], n_trials=3, output=out, master_seed=5)
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0] == "K,M,Q,n_trials,success_rate"
    assert [line.split(",")[:2] for line in lines[1:]] == [["4", "4"], ["4", "20"], ["20", "4"], ["20", "20"]]
    assert grid.column("success_rate")[0] == 1.0
    again = phase_transition(48, [4, 20], [4, 20], n_trials=3, master_seed=5)
    assert again.to_csv() == text


def test_run_many_threads_match_serial():
    specs = [InstanceSpec(ProblemDims(48, 6, 4), derive_seed(0, 0, t)) for t in range(4)]
    serial = harness.run_many(specs, SolverConfig(), 1)
    parallel = harness.run_many(specs, SolverConfig(), 2)
    assert [r.csv_row() for r in serial] == [r.csv_row() for r in parallel]


def test_oversampling_skips_small_Q():
    with pytest.warns(RuntimeWarning):
        grid = oversampling_sweep(24, 12, [0.5, 2.0], n_trials=2)
    assert grid.rows[0][:5] == [0.5, 18, 24, 12, 0]
    assert np.isnan(grid.rows[0][5])
    assert grid.rows[1][4] == 2
    assert grid.to_csv().splitlines()[1] == "0.5,18,24,12,0,nan"


def test_mean_log10_handles_zero_and_inf():
    assert harness._mean_log10([0.0]) == -300.0
    assert harness._mean_log10([np.inf]) == 300.0
    assert harness._mean_log10([1e-2, 1e-4]) == pytest.approx(-3.0)


def test_success_frontier_recovers_planted_boundary():
    rng = np.random.default_rng(0)
    records = []
    for Q in np.linspace(20, 200, 40).astype(int):
        for _ in range(30):
            ratio = Q / 20
            p = 1 / (1 + (ratio / 3.0) ** -6)
            records.append(harness.TrialRecord(int(Q), 10, 10, 0, 0.0, np.inf, 0, 0.0,
                                               bool(rng.random() < p), "converged", 0.0))
    grid = GridResult(PHASE_TRANSITION_HEADER, [], 30, records)
    assert success_frontier(grid) == pytest.approx(3.0, rel=0.1)


def test_cvec_roundtrip(tmp_path):
    path = tmp_path / "v.cvec"
    v = np.array([1 + 2j, -0.5j, 3.25])
    write_cvec(path, v)
    data = path.read_bytes()
    assert data[:8] == struct.pack("<Q", 3)
    assert struct.unpack("<2d", data[8:24]) == (1.0, 2.0)
    assert len(data) == 8 + 3 * 16
    np.testing.assert_array_equal(read_cvec(path), v)


def test_cvec_truncated(tmp_path):
    path = tmp_path / "bad.cvec"
    path.write_bytes(struct.pack("<Q", 4) + b"\x00" * 20)
    with pytest.raises(ValueError):
        read_cvec(path)
    path.write_bytes(b"\x01\x02")
    with pytest.raises(ValueError):
        read_cvec(path)


def test_load_config(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('Q = 128\neta = 0.1\nprojection = "clip"\nK_values = [4, 8]\n')
    opts = load_config(path)
    assert opts == {"Q": 128, "eta": 0.1, "projection": "clip", "K_values": [4, 8]}
    cfg = solver_config_from(opts)
    assert cfg.eta == 0.1 and cfg.projection == "clip"


@pytest.mark.parametrize("body", ['bogus = 1\n', 'Q = "many"\n', '[solver]\neta = 1\n'])
def test_load_config_rejects(tmp_path, body):
    path = tmp_path / "c.toml"
    path.write_text(body)
    with pytest.raises(ValueError):
        load_config(path)
