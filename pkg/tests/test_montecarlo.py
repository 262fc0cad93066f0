import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qzeno import model
from qzeno.montecarlo import (
    SURVIVOR_CAP,
    CounterStream,
    McConfig,
    resolve_workers,
    run_ensemble,
    sample_trajectory,
)
from qzeno.zeno import photon_atom_evolution, survival_probability

from conftest import random_state, same_up_to_phase

PLUS = model.bell_state(+1)


def reference_trajectory(ev, psi0, n_steps, stream):
    """Step-by-step Born-rule sampler written directly from the definition."""
    p, u = ev.survival_projector, ev.propagator
    phi = p @ psi0
    q = np.vdot(phi, phi).real
    if not stream.uniform(0) < q:
        return 0, None
    psi = phi / math.sqrt(q)
    for step in range(1, n_steps + 1):
        phi = p @ (u @ psi)
        q = np.vdot(phi, phi).real
        if not stream.uniform(step) < q:
            return step, None
        psi = phi / math.sqrt(q)
    return None, psi


def test_psi_plus_never_clicks():
    ev = photon_atom_evolution(0.7)
    for seed in (0, 1, 99, 2**40):
        clicked, final = sample_trajectory(ev, PLUS, 300, CounterStream(seed, 0))
        assert clicked is None
        assert same_up_to_phase(final, PLUS, 1e-12)
    res = run_ensemble(McConfig(5, 3000, 100, 0.7, PLUS), workers=2)
    assert res.no_click_fraction == 1.0
    assert res.click_step_histogram.sum() == 0


def test_explosion_state_clicks_at_step_zero():
    ev = photon_atom_evolution(0.7)
    for k in range(20):
        clicked, final = sample_trajectory(ev, model.basis_state("11"), 10, CounterStream(3, k))
        assert clicked == 0 and final is None


def test_single_trajectory_fraction():
    seen = set()
    for seed in range(40):
        res = run_ensemble(McConfig(seed, 1, 20, 0.7, model.basis_state("01")))
        assert res.no_click_fraction in (0.0, 1.0)
        seen.add(res.no_click_fraction)
    assert seen == {0.0, 1.0}


@pytest.mark.parametrize("index", [0, 1, 17, 4095])
def test_kernel_matches_reference_sampler(index):
    ev = photon_atom_evolution(1.3)
    psi0 = random_state(np.random.default_rng(index))
    stream = CounterStream(777, index)
    got = sample_trajectory(ev, psi0, 40, stream)
    ref = reference_trajectory(ev, psi0, 40, stream)
    assert got[0] == ref[0]
    if ref[1] is not None:
        assert np.max(np.abs(got[1] - ref[1])) < 1e-12


def test_kernel_matches_reference_sampler_many():
    ev = photon_atom_evolution(0.7)
    psi0 = model.basis_state("01")
    res = run_ensemble(McConfig(31, 500, 30, 0.7, psi0), workers=1)
    hist = np.zeros(31, dtype=np.int64)
    for k in range(500):
        clicked, _ = reference_trajectory(ev, psi0, 30, CounterStream(31, k))
        if clicked is not None:
            hist[clicked] += 1
    assert np.array_equal(res.click_step_histogram, hist)


CANNED = [
    (0.7, 500, "01"),
    (0.3, 50, "00"),
    (1.0, 20, "10"),
    (2.0, 10, "random"),
    (0.05, 200, "00"),
]


@pytest.mark.parametrize("dt,n_steps,label", CANNED)
def test_oracle_agreement(dt, n_steps, label):
    if label == "random":
        psi0 = random_state(np.random.default_rng(8))
    else:
        psi0 = model.basis_state(label)
    res = run_ensemble(McConfig(2024, 20_000, n_steps, dt, psi0))
    oracle = survival_probability(photon_atom_evolution(dt), psi0, n_steps)
    assert res.expected_probability == pytest.approx(oracle, abs=1e-14)
    assert abs(res.no_click_fraction - oracle) < 4 * res.standard_error + 1e-12
    assert res.standard_error == pytest.approx(
        math.sqrt(res.no_click_fraction * (1 - res.no_click_fraction) / 20_000))


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**63),
    n=st.integers(1, 3000),
    steps=st.integers(1, 60),
    dt=st.floats(0.01, 3.0),
)
def test_histogram_mass_conservation(seed, n, steps, dt):
    res = run_ensemble(McConfig(seed, n, steps, dt, model.basis_state("00")), workers=1)
    assert res.click_step_histogram.shape == (steps + 1,)
    assert res.n_survivors + int(res.click_step_histogram.sum()) == n
    assert res.no_click_fraction == res.n_survivors / n
    assert round(res.no_click_fraction * n) + int(res.click_step_histogram.sum()) == n
    assert len(res.final_states_sample) == min(res.n_survivors, SURVIVOR_CAP)


def test_deterministic_across_workers():
    cfg = McConfig(20240611, 9000, 80, 0.7, model.basis_state("01"))
    base = run_ensemble(cfg, workers=1)
    for w in (2, 3, 8):
        other = run_ensemble(cfg, workers=w)
        assert other.no_click_fraction == base.no_click_fraction
        assert np.array_equal(other.click_step_histogram, base.click_step_histogram)
        assert len(other.final_states_sample) == len(base.final_states_sample)
        for a, b in zip(other.final_states_sample, base.final_states_sample):
            assert np.array_equal(a, b)
        assert other.mean_survivor_fidelity == base.mean_survivor_fidelity


def test_survivor_collapse_to_psi_plus():
    res = run_ensemble(McConfig(1, 20_000, 500, 0.7, model.basis_state("01")))
    assert res.n_survivors > 0
    assert res.mean_survivor_fidelity > 1 - 1e-6
    for s in res.final_states_sample[:50]:
        assert same_up_to_phase(s, PLUS, 1e-6)


def test_no_survivors_fidelity_is_nan():
    res = run_ensemble(McConfig(1, 500, 500, 0.7, model.basis_state("00")))
    assert res.n_survivors == 0
    assert math.isnan(res.mean_survivor_fidelity)
    assert res.final_states_sample == []


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(0, 0, 10, 0.7, PLUS)
    with pytest.raises(ValueError):
        McConfig(0, 10, 0, 0.7, PLUS)
    with pytest.raises(ValueError):
        McConfig(0, 10, 10, 0.7, np.array([1.0, 1.0, 0.0, 0.0]))


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv("ZENO_THREADS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(5) == 5
    monkeypatch.delenv("ZENO_THREADS")
    assert resolve_workers() >= 1
