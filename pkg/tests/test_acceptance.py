"""Top-level acceptance checks.

Each test exercises one contracted behavior end to end at its stated
tolerance and prints a single PASS/FAIL line (visible with -s or on
failure; pytest -v adds its own verdict per test).  Numerical tolerances
are the contract values, not re-measured slack.
"""
import math
import time

import numpy as np
import pytest

from vortexblob import (
    Ensemble,
    GaussianDipole,
    GridSpec,
    Integrator,
    Patch,
    Profile,
    RegularizedKernel,
    ZeroMeanGateError,
    blob_velocities,
    collect_series,
    f_eps_norms,
    grid_for_ensemble,
    impulses,
    kinetic_energy,
    lagrangian_gap,
    lp_norm,
    mollify_initial,
    reconstruct_vorticity,
    run,
    seed_tracers,
    serfati_residual,
    tile_and_weight,
    tree_velocity_all,
)
from tests.test_dynamics import make_ensemble
from tests.oracles.kernel_convolution import convolved_kernel
from tests.oracles.translation_gap import gap_integral


def verdict(tag: str, ok: bool, detail: str) -> None:
    line = f"{tag} {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def test_a01_corotating_pair_period():
    """Two equal blobs orbit their midpoint with the classical period
    2 pi^2 d^2 / Gamma and must land back on their starting points."""
    start = time.perf_counter()
    ens = make_ensemble([[0.5, 0.0], [-0.5, 0.0]], [1.0, 1.0], epsilon=0.05)
    period = 2.0 * math.pi**2
    final, _, _ = run(ens, Integrator(dt=1e-3, t_end=period))
    dist = float(np.linalg.norm(final.positions - ens.positions, axis=1).max())
    wall = time.perf_counter() - start
    verdict("A1", dist <= 5e-3 and wall < 10.0,
            f"co-rotating pair returns within {dist:.2e} of start "
            f"(tol 5e-3) in {wall:.1f}s (limit 10s)")


def test_a02_counterrotating_pair_translation():
    ens = make_ensemble([[0.0, 0.5], [0.0, -0.5]], [-1.0, 1.0], epsilon=0.05)
    sep0 = float(np.linalg.norm(ens.positions[0] - ens.positions[1]))
    final, _, _ = run(ens, Integrator(dt=1e-3, t_end=1.0))
    speeds = np.linalg.norm(final.positions - ens.positions, axis=1)  # per unit time
    want = 1.0 / (2.0 * math.pi)
    speed_err = float(np.abs(speeds - want).max() / want)
    sep_drift = abs(float(np.linalg.norm(final.positions[0] - final.positions[1])) - sep0)
    verdict("A2", speed_err <= 1e-3 and sep_drift <= 1e-9,
            f"dipole speed off by {speed_err:.2e} rel (tol 1e-3), "
            f"separation drift {sep_drift:.2e} (tol 1e-9)")


def test_a03_conservation_and_reversibility():
    w0eps = mollify_initial(Patch(amplitude=1.0, radius=0.5), delta=0.2**0.2)
    e0 = tile_and_weight(w0eps, h=0.049, epsilon=0.2)
    assert e0.n_blobs >= 2000
    tot0, lin0, ang0 = impulses(e0)
    e1, _, _ = run(e0, Integrator(dt=1e-3, t_end=1.0))
    tot1, lin1, ang1 = impulses(e1)
    lin_scale = float(np.abs(e0.circulations).sum())  # |Gamma|-mass * unit length
    lin_drift = float(np.abs(np.asarray(lin1) - np.asarray(lin0)).max()) / lin_scale
    ang_drift = abs(ang1 - ang0) / abs(ang0)
    reversed_run = Ensemble(e1.positions, -e1.circulations, e1.cell_indices,
                            e1.epsilon, e1.delta, e1.h, 0.0, e1.profile)
    back, _, _ = run(reversed_run, Integrator(dt=1e-3, t_end=1.0))
    ret = float(np.linalg.norm(back.positions - e0.positions, axis=1).max())
    verdict("A3", tot1 == tot0 and lin_drift <= 1e-9 and ang_drift <= 1e-9
            and ret <= 1e-6,
            f"{e0.n_blobs} blobs to t=1: circulation drift "
            f"{abs(tot1 - tot0):.1e} (exact), impulse drifts {lin_drift:.1e}/"
            f"{ang_drift:.1e} (tol 1e-9), reversal error {ret:.1e} (tol 1e-6)")


def test_a04_energy_conservation_and_gate():
    w0eps = mollify_initial(GaussianDipole(separation=1.0, core_width=0.25,
                                           cut_radius=0.6), delta=0.05)
    dip = tile_and_weight(w0eps, h=0.04, epsilon=0.1)
    cores = []
    state = dip
    for t_target in (0.0, 0.5, 1.0):
        if t_target > state.time:
            state, _, _ = run(state, Integrator(dt=2.5e-3, t_end=t_target))
        core, _tail = kinetic_energy(state, ball_radius=10.0, grid_spacing=0.025)
        cores.append(core)
    drift = max(abs(c - cores[0]) for c in cores) / cores[0]

    lump = tile_and_weight(mollify_initial(Patch(1.0, 0.5), delta=0.1),
                           h=0.05, epsilon=0.2)
    with pytest.raises(ZeroMeanGateError):
        kinetic_energy(lump, ball_radius=50.0, grid_spacing=0.05)
    verdict("A4", drift <= 1e-3,
            f"zero-mean dipole energy drift {drift:.2e} over t in [0,1] "
            f"(tol 1e-3); nonzero-mean datum refused by the gate")


def test_a05_vorticity_norm_bounds():
    w0 = Patch(amplitude=1.0, radius=0.5)
    l1_0 = w0.lp_norm(1.0)
    worst = {"l1": 0.0, 2.0: 0.0, 4.0: 0.0}
    for eps in (0.4, 0.2, 0.1):
        w0eps = mollify_initial(w0, delta=eps**0.2)
        state = tile_and_weight(w0eps, h=eps**1.5, epsilon=eps)
        for t_target in (0.0, 0.5, 1.0):
            if t_target > state.time:
                state, _, _ = run(state, Integrator(dt=5e-3, t_end=t_target))
            # blob fields with one-signed weights have L1 norm exactly
            # sum |Gamma_i| (unit-mass nonnegative bumps)
            worst["l1"] = max(worst["l1"], float(np.abs(state.circulations).sum()))
            om = reconstruct_vorticity(state, grid_for_ensemble(state))
            for p in (2.0, 4.0):
                worst[p] = max(worst[p], lp_norm(om, p))
    ok_l1 = worst["l1"] <= l1_0 * (1.0 + 1e-4)
    bounds = {p: 1.5 * (w0.lp_norm(p) + l1_0 ** (1.0 / p)) for p in (2.0, 4.0)}
    ok_p = all(worst[p] <= bounds[p] for p in (2.0, 4.0))
    verdict("A5", ok_l1 and ok_p,
            f"sup-in-time norms: L1 {worst['l1']:.6f} <= {l1_0 * (1 + 1e-4):.6f}, "
            f"L2 {worst[2.0]:.3f} <= {bounds[2.0]:.3f}, "
            f"L4 {worst[4.0]:.3f} <= {bounds[4.0]:.3f}")


def test_a06_consistency_error_decreases_with_epsilon():
    start = time.perf_counter()
    w0 = Patch(amplitude=1.0, radius=0.5)
    vals = []
    for eps in (0.4, 0.2, 0.1, 0.05):
        w0eps = mollify_initial(w0, delta=eps**0.2)
        ens = tile_and_weight(w0eps, h=eps**1.5, epsilon=eps)
        l1, _l2 = f_eps_norms(ens, grid_for_ensemble(ens))
        vals.append(l1)
    wall = time.perf_counter() - start
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    verdict("A6", decreasing and vals[-1] <= 0.2 * vals[0] and wall < 300.0,
            f"consistency error L1 {', '.join('%.2e' % v for v in vals)} "
            f"strictly decreasing, final/initial {vals[-1] / vals[0]:.3f} "
            f"(tol 0.2), wall {wall:.0f}s (limit 300s)")


def test_a07_blob_transport_gap_order_in_h():
    eps = 0.2
    w0eps = mollify_initial(Patch(amplitude=1.0, radius=0.5), delta=0.05)
    gap0, gap_t = {}, {}
    for h in (0.05, 0.025, 0.0125):
        ens = tile_and_weight(w0eps, h=h, epsilon=eps)
        tc = seed_tracers(w0eps, eps, pitch=h / 2.0)
        gap0[h] = lagrangian_gap(ens, tc, 1.0)
        moved, _, tracer_pos = run(ens, Integrator(dt=0.025, t_end=0.5),
                                   tracers=tc.positions.copy())
        gap_t[h] = lagrangian_gap(moved, tc.with_positions(tracer_pos, moved.time), 1.0)
    seq = [gap_t[h] for h in (0.05, 0.025, 0.0125)]
    order = math.log(gap0[0.05] / gap0[0.025]) / math.log(2.0)
    verdict("A7", all(b < a for a, b in zip(seq, seq[1:])) and order >= 0.8,
            f"t=0.5 gap {', '.join('%.2e' % v for v in seq)} strictly "
            f"decreasing as h halves; t=0 two-point order {order:.2f} (tol >= 0.8)")


def test_a08_kernel_identities():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-0.5, 0.5, size=(20, 2))
    lib = RegularizedKernel(Profile.POLY6, 0.2).value(pts)
    worst = 0.0
    for i, x in enumerate(pts):
        worst = max(worst, float(np.abs(lib[i] - convolved_kernel(x, 0.2,
                                                                  Profile.POLY6)).max()))
    j1 = gap_integral(1.0, 1.5, n_disc=70)
    j2 = gap_integral(0.5, 1.5, n_disc=70)
    slope = math.log((j1 ** (1 / 1.5)) / (j2 ** (1 / 1.5))) / math.log(2.0)
    slope_err = abs(slope - (2.0 / 1.5 - 1.0))
    verdict("A8", worst <= 1e-6 and slope_err <= 0.05,
            f"closed form vs convolution quadrature worst {worst:.1e} at 20 "
            f"points (tol 1e-6); shifted-kernel norm slope {slope:.4f} vs 1/3 "
            f"(err {slope_err:.1e}, tol 0.05)")


def _disc_cloud(rng, n):
    radius = np.sqrt(rng.uniform(0.0, 1.0, n))
    angle = rng.uniform(0.0, 2.0 * math.pi, n)
    pos = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    gam = rng.uniform(0.5, 1.5, n) * (math.pi / n)
    return make_ensemble(pos, gam, epsilon=0.02)


def test_a09_tree_accuracy_and_speedup():
    rng = np.random.default_rng(42)
    small = _disc_cloud(rng, 2000)
    direct = blob_velocities(small)
    tree = tree_velocity_all(small, theta=0.5)
    err = float(np.linalg.norm(tree - direct, axis=1).max()
                / np.linalg.norm(direct, axis=1).max())

    big = _disc_cloud(rng, 20000)
    blob_velocities(big)
    tree_velocity_all(big, theta=0.5)          # warm both code paths
    t_direct, t_tree = math.inf, math.inf
    for _ in range(2):
        t0 = time.perf_counter()
        blob_velocities(big)
        t_direct = min(t_direct, time.perf_counter() - t0)
        t0 = time.perf_counter()
        tree_velocity_all(big, theta=0.5)
        t_tree = min(t_tree, time.perf_counter() - t0)
    speedup = t_direct / t_tree
    verdict("A9", err <= 1e-2 and speedup >= 5.0,
            f"tree(theta=0.5) error {err:.2e} on 2000 blobs (tol 1e-2); "
            f"{speedup:.1f}x speedup at 20000 (tol >= 5x; direct "
            f"{t_direct * 1e3:.0f}ms vs tree {t_tree * 1e3:.0f}ms)")


def test_a10_velocity_identity_residual_refines():
    ens = make_ensemble([[0.0, 0.5], [0.0, -0.5]], [-1.0, 1.0], epsilon=0.2)
    samples = np.array([[0.0, 0.0], [0.3, 0.0], [0.0, -0.3]])

    def residual(dt, spacing):
        series = collect_series(ens, Integrator(dt=dt, t_end=0.5))
        npts = int(round(12.0 / spacing)) + 1
        grid = GridSpec((-6.0, -6.0), spacing, npts, npts)
        return serfati_residual(series, 1.0, grid, samples), series

    coarse, series = residual(0.05, 0.05)
    fine, _ = residual(0.025, 0.025)
    grid = GridSpec((-6.0, -6.0), 0.05, 241, 241)
    at_t0 = serfati_residual(series[:1], 1.0, grid, samples)
    verdict("A10", coarse / fine >= 2.0 and at_t0 <= fine,
            f"residual {coarse:.2e} -> {fine:.2e} under grid/dt halving "
            f"(ratio {coarse / fine:.1f}, tol >= 2); t=0 residual {at_t0:.1e} "
            f"below the {fine:.1e} floor")
