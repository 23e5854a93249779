"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Full-scale benchmark sweeps are out of desk reach; these combine exact
property suites with small-instance learning checks at pinned tolerances.
"""

import sys
import time

from macrl.core import rng_streams
from macrl.envs import BoxPushing
from macrl.harness import build_env, build_learner, preset_config, run_training
from macrl.oracle import scripted_optimal_return
from macrl.verify import (
    check_conditional_argmax, check_gradients, check_reward_accumulation,
    check_squeeze, check_toy_bellman,
)

import test_ac


def report(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    print(line, file=sys.stderr, flush=True)
    assert passed, line


def test_criterion_01_gradient_oracle():
    t0 = time.monotonic()
    ok, detail = check_gradients(trials=100, seed=0)
    elapsed = time.monotonic() - t0
    report(
        "1 gradient oracle (100 nets, rel err < 1e-4, < 1 min)",
        ok and elapsed < 60.0,
        f"{detail}; {elapsed:.1f}s",
    )


def test_criterion_02_squeeze_equivalence():
    t0 = time.monotonic()
    ok, detail = check_squeeze(episodes_per_env=1000)
    elapsed = time.monotonic() - t0
    report(
        "2 squeeze equivalence (1000 episodes/env, field-exact, < 1 min)",
        ok and elapsed < 60.0,
        f"{detail}; {elapsed:.1f}s",
    )


def test_criterion_03_reward_accumulation():
    ok, detail = check_reward_accumulation(streams=10_000)
    report("3 reward accumulation (1e4 streams, < 1e-12)", ok, detail)


def test_criterion_04_conditional_target_semantics():
    ok, detail = check_conditional_argmax(trials=1000)
    report("4 conditional target semantics (1000 tables)", ok, detail)


def test_criterion_05_bellman_oracle_convergence():
    ok_q, detail_q = check_toy_bellman()
    # fixed-policy critic evaluation for the three actor-critic families
    t0 = time.monotonic()
    try:
        test_ac.test_mac_iac_critic_converges_to_oracle()
        test_ac.test_mac_cac_critic_converges_to_oracle()
        test_ac.test_mac_iaicc_critics_converge_to_oracle_async()
        ok_c, detail_c = True, "IAC/CAC/IAICC critics within 1e-3 of oracle"
    except AssertionError as exc:
        ok_c, detail_c = False, f"critic evaluation failed: {exc}"
    report(
        "5 Bellman oracle convergence (Q within 1e-6; critics within 1e-3)",
        ok_q and ok_c,
        f"{detail_q}; {detail_c} ({time.monotonic() - t0:.0f}s)",
    )


def _learning_run(preset: str, seed: int, tmp_path, bar=None):
    cfg = preset_config(preset, seed=seed)
    cfg.out_dir = str(tmp_path / f"{preset}_s{seed}")
    stop = (lambda mean: mean >= bar) if bar is not None else None
    t0 = time.monotonic()
    metrics = run_training(cfg, stop_when=stop)
    elapsed = time.monotonic() - t0
    rows = metrics.read_text().splitlines()[2:]
    means = [float(r.split(",")[1]) for r in rows]
    return means, elapsed


def test_criterion_06_desk_scale_learning_bp4(tmp_path):
    gamma = 0.95
    bar = 0.95 * scripted_optimal_return(BoxPushing(n=4), gamma, "big_box")
    outcomes = {}
    worst_seed_time = 0.0
    for preset in ("bp4_cen_ddrqn_desk", "bp4_macdec_ddrqn_desk"):
        wins = 0
        for seed in range(10):
            means, elapsed = _learning_run(preset, seed, tmp_path, bar=bar)
            worst_seed_time = max(worst_seed_time, elapsed)
            if means and max(means) >= bar:
                wins += 1
            print(
                f"    {preset} seed {seed}: best={max(means) if means else None:.2f} "
                f"({elapsed:.0f}s)",
                file=sys.stderr, flush=True,
            )
        outcomes[preset] = wins
    ok = all(w >= 7 for w in outcomes.values()) and worst_seed_time < 1200.0
    report(
        "6 desk-scale learning BP 4x4 (>= 95% of scripted optimum, 7/10 seeds)",
        ok,
        f"wins={outcomes}, bar={bar:.2f}, slowest seed {worst_seed_time:.0f}s",
    )


def test_criterion_07_local_optimum_bp8(tmp_path):
    gamma = 0.95
    small = scripted_optimal_return(BoxPushing(n=8), gamma, "small_boxes")
    big = scripted_optimal_return(BoxPushing(n=8), gamma, "big_box")
    lo, hi, cap = 0.8 * small, 1.2 * small, 0.5 * big
    wins = 0
    for seed in range(10):
        means, elapsed = _learning_run("bp8_mac_iac_desk", seed, tmp_path)
        final = means[-1]
        hit = lo <= final <= hi and final < cap
        wins += int(hit)
        print(
            f"    mac_iac seed {seed}: final={final:.2f} "
            f"{'in' if hit else 'OUT of'} band [{lo:.1f}, {hi:.1f}] ({elapsed:.0f}s)",
            file=sys.stderr, flush=True,
        )
    report(
        "7 local-optimum reproduction BP 8x8 (Mac-IAC small-box band, 7/10)",
        wins >= 7,
        f"{wins}/10 seeds in band [{lo:.2f}, {hi:.2f}] and under {cap:.2f}",
    )


def test_criterion_08_asynchrony_equivalence():
    try:
        test_ac.test_synchronous_episodes_make_naive_and_iaicc_identical()
        test_ac.test_async_episode_differs_exactly_in_reward_and_tau()
        ok, detail = True, (
            "synchronous updates identical; async targets differ exactly "
            "through the reward/duration fields"
        )
    except AssertionError as exc:
        ok, detail = False, str(exc)
    report("8 asynchrony equivalence (Naive IACC vs IAICC)", ok, detail)


def test_criterion_09_parallel_isolation():
    cfg = preset_config("warehouse_a_parallel_desk", seed=0)
    streams = rng_streams(cfg.seed)
    env = build_env(cfg)
    learner = build_learner(cfg, env, streams)
    t0 = time.monotonic()
    for ep in range(cfg.episodes):
        learner.set_epsilon(ep)
        seed = int(streams["env"].integers(0, 2**63 - 1))
        learner.train_episode(env, seed)
    elapsed = time.monotonic() - t0
    cen_ok = all(e.provenance == "cen" for e in learner.cen_buffer)
    dec_ok = all(e.provenance == "dec" for e in learner.dec_buffer)
    resets_ok = (
        len(learner.cen_resets) > 0
        and len(learner.dec_resets) == cfg.episodes
        and learner.cen_resets != learner.dec_resets
    )
    report(
        "9 parallel isolation (Warehouse-A, 2K episodes)",
        cen_ok and dec_ok and resets_ok,
        f"cen episodes={len(learner.cen_resets)}, dec episodes="
        f"{len(learner.dec_resets)}, zero cross-contamination ({elapsed:.0f}s)",
    )


def test_criterion_10_determinism(tmp_path):
    cfg_a = preset_config("bp4_cen_ddrqn_desk", seed=3, episodes=300)
    cfg_a.out_dir = str(tmp_path / "det_a")
    cfg_b = preset_config("bp4_cen_ddrqn_desk", seed=3, episodes=300)
    cfg_b.out_dir = str(tmp_path / "det_b")
    pa = run_training(cfg_a)
    pb = run_training(cfg_b)
    same = pa.read_bytes() == pb.read_bytes()
    report(
        "10 determinism (preset rerun, byte-identical metrics CSV)",
        same,
        f"{pa.stat().st_size} bytes compared equal" if same else "files differ",
    )
