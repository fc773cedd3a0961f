"""Velocity summation and RK4 ensemble dynamics.

Point-vortex reference speeds: at separation d > eps the regularized
kernel coincides with the singular one (compact profile), so a pair of
unit-circulation blobs reproduces textbook point-vortex motion exactly.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortexblob import (
    BlowUpError,
    Ensemble,
    EvaluatorMethod,
    Integrator,
    Profile,
    VelocityEvaluator,
    default_dt,
    rk4_step,
    run,
    step,
    tree_velocity_all,
    velocity_at,
)
from vortexblob.dynamics import DIRECT

INV_TWO_PI = 1.0 / (2.0 * math.pi)


def make_ensemble(positions, circulations, epsilon=0.05) -> Ensemble:
    positions = np.asarray(positions, dtype=float)
    return Ensemble(
        positions=positions,
        circulations=np.asarray(circulations, dtype=float),
        cell_indices=np.zeros((positions.shape[0], 2), dtype=np.int64),
        epsilon=epsilon, delta=0.1, h=0.1, time=0.0, profile=Profile.POLY6,
    )


def random_ensemble(n, seed, epsilon=0.05) -> Ensemble:
    rng = np.random.default_rng(seed)
    return make_ensemble(rng.uniform(-1.0, 1.0, (n, 2)),
                         rng.uniform(-1.0, 1.0, n), epsilon)


# --------------------------------------------------------------------------
# velocity evaluation


def test_single_blob_velocity_at_distance():
    ens = make_ensemble([[0.0, 0.0]], [1.0], epsilon=0.1)
    v = velocity_at(ens, np.array([1.0, 0.0]))
    assert v.shape == (2,)
    np.testing.assert_allclose(v, [0.0, INV_TWO_PI], atol=1e-15)


def test_single_blob_is_stationary():
    ens = make_ensemble([[0.3, -0.2]], [2.5], epsilon=0.1)
    vel = DIRECT.self_velocities(ens.positions, ens.circulations,
                                 ens.epsilon, ens.kernel_profile_id())
    np.testing.assert_array_equal(vel, np.zeros((1, 2)))


def test_counter_rotating_pair_translates():
    # Gamma = +1 at (0, +1/2), Gamma = -1 at (0, -1/2): both blobs see the
    # same velocity (1/(2 pi), 0), a rigid translation along +x.
    ens = make_ensemble([[0.0, 0.5], [0.0, -0.5]], [1.0, -1.0])
    vel = DIRECT.self_velocities(ens.positions, ens.circulations,
                                 ens.epsilon, ens.kernel_profile_id())
    np.testing.assert_allclose(vel, [[INV_TWO_PI, 0.0]] * 2, rtol=1e-14)


def test_co_rotating_pair_spins_about_midpoint():
    ens = make_ensemble([[0.5, 0.0], [-0.5, 0.0]], [1.0, 1.0])
    vel = DIRECT.self_velocities(ens.positions, ens.circulations,
                                 ens.epsilon, ens.kernel_profile_id())
    np.testing.assert_allclose(vel[0], [0.0, INV_TWO_PI], rtol=1e-14)
    np.testing.assert_allclose(vel[1], -vel[0], rtol=1e-14)


def test_velocity_at_batch_and_empty():
    ens = make_ensemble([[0.0, 0.0]], [1.0], epsilon=0.1)
    out = velocity_at(ens, np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert out.shape == (2, 2)
    np.testing.assert_allclose(out[1], [-INV_TWO_PI, 0.0], atol=1e-15)
    none = velocity_at(ens, np.zeros((0, 2)))
    assert none.shape == (0, 2)


@given(st.floats(min_value=-3.0, max_value=3.0),
       st.floats(min_value=-3.0, max_value=3.0))
@settings(deadline=None, max_examples=25)
def test_velocity_translation_equivariance(cx, cy):
    ens = random_ensemble(12, seed=3)
    shift = np.array([cx, cy])
    moved = ens.with_positions(ens.positions + shift, 0.0)
    probe = np.array([[0.2, -0.4], [1.0, 1.0]])
    v0 = velocity_at(ens, probe)
    v1 = velocity_at(moved, probe + shift)
    np.testing.assert_allclose(v1, v0, rtol=0.0, atol=1e-12 * max(1.0, np.abs(v0).max()))


# --------------------------------------------------------------------------
# Barnes-Hut treecode


def test_tree_with_tiny_angle_matches_direct():
    ens = random_ensemble(300, seed=11, epsilon=0.05)
    direct = DIRECT.self_velocities(ens.positions, ens.circulations,
                                    ens.epsilon, ens.kernel_profile_id())
    tree = tree_velocity_all(ens, theta=1e-6)
    np.testing.assert_allclose(tree, direct, rtol=0.0,
                               atol=1e-12 * np.abs(direct).max())


def test_tree_far_field_accuracy_at_working_angle():
    # a tiled patch (coherent circulations) is the representative workload;
    # random-sign clouds cancel and inflate the relative error
    from vortexblob import Patch, mollify_initial, tile_and_weight

    w0eps = mollify_initial(Patch(amplitude=1.0, radius=1.0), delta=0.1)
    ens = tile_and_weight(w0eps, h=0.045, epsilon=0.02)
    assert ens.n_blobs > 1500
    direct = DIRECT.self_velocities(ens.positions, ens.circulations,
                                    ens.epsilon, ens.kernel_profile_id())
    tree = tree_velocity_all(ens, theta=0.5)
    err = np.abs(tree - direct).max() / np.abs(direct).max()
    assert err <= 1e-2


def test_tree_rejects_bad_angle():
    for theta in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            VelocityEvaluator(EvaluatorMethod.TREE, theta)
    VelocityEvaluator(EvaluatorMethod.DIRECT, theta=7.0)  # unused, unvalidated


def test_evaluator_method_parse():
    assert EvaluatorMethod.parse("tree") is EvaluatorMethod.TREE
    with pytest.raises(ValueError, match="direct"):
        EvaluatorMethod.parse("fmm")


# --------------------------------------------------------------------------
# RK4 stepping


def test_dipole_translation_is_exact_for_rk4():
    # rigid translation: stage velocities are constant, so RK4 is exact
    ens = make_ensemble([[0.0, 0.5], [0.0, -0.5]], [1.0, -1.0])
    final, records, _ = run(ens, Integrator(dt=0.01, t_end=1.0))
    np.testing.assert_allclose(
        final.positions,
        ens.positions + np.array([INV_TWO_PI, 0.0]),
        rtol=0.0, atol=1e-12,
    )
    sep = np.linalg.norm(final.positions[0] - final.positions[1])
    assert abs(sep - 1.0) <= 1e-9
    assert records[0]["time"] == 0.0 and records[-1]["time"] == pytest.approx(1.0)


def test_linear_impulse_conserved_to_rounding():
    ens = random_ensemble(30, seed=23)
    before = ens.circulations @ ens.positions
    final, _, _ = run(ens, Integrator(dt=0.02, t_end=0.5))
    after = final.circulations @ final.positions
    # RK4 preserves linear invariants exactly; only rounding remains
    assert np.abs(after - before).max() <= 1e-13 * max(1.0, np.abs(before).max())


def test_angular_impulse_nearly_conserved():
    # epsilon large enough that dt * Lip(v) << 1 for this cloud
    ens = random_ensemble(30, seed=29, epsilon=0.3)
    before = ens.circulations @ (ens.positions**2).sum(axis=1)
    final, _, _ = run(ens, Integrator(dt=0.005, t_end=0.5))
    after = final.circulations @ (final.positions**2).sum(axis=1)
    # quadratic invariant: conserved by the flow, O(dt^4) for RK4
    assert abs(after - before) <= 1e-9 * max(1.0, abs(before))


def test_reversal_returns_blobs_home():
    ens = random_ensemble(20, seed=41, epsilon=0.3)
    fwd, _, _ = run(ens, Integrator(dt=0.005, t_end=0.3))
    flipped = Ensemble(fwd.positions, -fwd.circulations, fwd.cell_indices,
                       fwd.epsilon, fwd.delta, fwd.h, 0.0, fwd.profile)
    back, _, _ = run(flipped, Integrator(dt=0.005, t_end=0.3))
    assert np.abs(back.positions - ens.positions).max() <= 1e-9


def test_rk4_is_fourth_order():
    ens = make_ensemble([[0.5, 0.0], [-0.5, 0.0]], [1.0, 1.0])
    t_end = 0.8
    ref, _, _ = run(ens, Integrator(dt=t_end / 256, t_end=t_end))
    errs = []
    for n in (4, 8):
        approx, _, _ = run(ens, Integrator(dt=t_end / n, t_end=t_end))
        errs.append(np.abs(approx.positions - ref.positions).max())
    order = math.log2(errs[0] / errs[1])
    assert 3.5 <= order <= 4.5


def test_step_override_dt():
    ens = make_ensemble([[0.0, 0.5], [0.0, -0.5]], [1.0, -1.0])
    itg = Integrator(dt=0.5, t_end=1.0)
    moved = step(ens, itg, dt=0.1)
    assert moved.time == pytest.approx(0.1)
    np.testing.assert_allclose(moved.positions[:, 0], 0.1 * INV_TWO_PI, rtol=1e-12)


def test_rk4_step_with_tracers_matches_blob_motion():
    # a tracer placed on a blob of zero circulation must follow the same path
    ens = make_ensemble([[0.0, 0.5], [0.0, -0.5], [0.3, 0.0]],
                        [1.0, -1.0, 0.0])
    tracers = np.array([[0.3, 0.0]])
    new_e, new_t = rk4_step(ens, 0.05, DIRECT, tracers)
    np.testing.assert_allclose(new_t[0], new_e.positions[2], rtol=0.0, atol=1e-15)


# --------------------------------------------------------------------------
# run() bookkeeping


def test_run_zero_span_observes_once():
    ens = random_ensemble(4, seed=1)
    final, records, _ = run(ens, Integrator(dt=0.1, t_end=0.0))
    assert final is ens or np.array_equal(final.positions, ens.positions)
    assert len(records) == 1 and records[0]["time"] == 0.0


def test_run_observe_every():
    ens = random_ensemble(4, seed=2)
    seen = []
    _, records, _ = run(ens, Integrator(dt=0.1, t_end=1.0), observe_every=3,
                        on_observe=lambda e, tr: seen.append(e.time))
    times = [r["time"] for r in records]
    np.testing.assert_allclose(times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)
    np.testing.assert_allclose(seen, times, atol=1e-12)
    with pytest.raises(ValueError):
        run(ens, Integrator(dt=0.1, t_end=1.0), observe_every=0)


def test_run_lands_exactly_on_t_end():
    ens = random_ensemble(3, seed=9)
    final, records, _ = run(ens, Integrator(dt=0.3, t_end=1.0))
    assert final.time == pytest.approx(1.0, abs=1e-12)
    assert len(records) == 5  # t = 0, .3, .6, .9, 1.0


def test_run_merges_observer_rows():
    ens = make_ensemble([[0.0, 0.0]], [1.0])
    obs = lambda e: {"n": float(e.n_blobs)}
    _, records, _ = run(ens, Integrator(dt=0.1, t_end=0.2), observers=[obs])
    assert records[0] == {"time": 0.0, "n": 1.0}


def test_integrator_validation_and_steps():
    with pytest.raises(ValueError):
        Integrator(dt=0.0, t_end=1.0)
    assert Integrator(dt=0.3, t_end=1.0).n_steps() == 4
    assert Integrator(dt=0.25, t_end=1.0).n_steps() == 4  # exact multiple
    assert Integrator(dt=0.1, t_end=0.0).n_steps() == 0
    assert Integrator(dt=0.1, t_end=1.0).n_steps(t_start=0.95) == 1


def test_blow_up_detection_carries_partial_records():
    # circulations at the float ceiling overflow the very first update
    ens = make_ensemble([[0.0, 0.5], [0.0, -0.5]], [1e308, -1e308])
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(BlowUpError) as exc:
            run(ens, Integrator(dt=100.0, t_end=200.0))
    err = exc.value
    assert err.records and err.records[0]["time"] == 0.0
    assert err.step == 1 and err.blob_index >= 0
    assert "blow-up" in str(err)


def test_default_dt():
    assert default_dt(0.1, 1.0) == pytest.approx(1e-3)
    assert default_dt(1.0, 1.0) == 1e-2  # capped
    assert default_dt(0.1, 0.0) == 1e-2  # degenerate norm falls back to cap
