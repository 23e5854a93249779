"""Actor-critic learners: advantage and n-step arithmetic, epsilon-soft
mixtures, policy-gradient direction, critic policy-evaluation against the
exact oracle, and the synchronous-equivalence of the two CTDE learners."""

import numpy as np
import pytest

from macrl import nn
from macrl.ac import (
    ACDecDriver, ActorCriticConfig, MacCAC, MacIAC, MacIAICC, NaiveMacIACC,
    _actor_update, _critic_values, _nstep_batch, _nstep_flagged, advantage,
    epsilon_soft_probs, epsilon_soft_sample, n_step_target, softmax,
)
from macrl.buffers import collect_episode, pad_trajectories, squeeze_decentralized, squeeze_iaicc, squeeze_joint
from macrl.core import rng_streams
from macrl.envs import ToyChain
from macrl.oracle import TabularMacDecSpec, exact_q, fixture_path, load_tabular_spec
from macrl.qlearn import TabularCenDDRQN
from macrl.seq import dec_inputs, joint_inputs
from macrl.verify import PrefixDriver, enumerate_choice_paths


def uniform_policy(spec):
    return [
        (lambda hist, k=len(spec.durations[i]): [(m, 1.0 / k) for m in range(k)])
        for i in range(spec.n_agents)
    ]


def replicated_episodes(env, gamma):
    """All episodes of a deterministic instance, replicated so the batch is an
    exact expectation under the uniform gated policy (macro counts must be
    powers of two)."""
    paths = enumerate_choice_paths(env)
    depth = max(len(p) for p in paths)
    episodes = []
    for path in paths:
        ep = collect_episode(env, 0, PrefixDriver(env.catalog_sizes, path), gamma)
        for _ in range(2 ** (depth - len(path))):
            episodes.append(ep)
    return episodes


def zero_actor(learner) -> None:
    """Force exactly uniform policies so the behavior matches the oracle's
    uniform policy."""
    actors = getattr(learner, "actors", None) or [learner.actor]
    for a in actors:
        for k in a.online:
            a.online[k][:] = 0.0


# -- pure arithmetic -------------------------------------------------------------------


def test_advantage_examples():
    assert advantage(2.0, 0.95, 3, 1.0, 0.5) == pytest.approx(2.357375)
    assert advantage(1.5, 0.9, 2, 0.0, 0.2) == pytest.approx(1.3)   # terminal
    assert advantage(0.7, 0.5, 1, 0.0, 0.0) == pytest.approx(0.7)   # V == 0


def test_n_step_target_examples():
    # n = 1 reduces to the one-step advantage target
    assert n_step_target([2.0], [3], 0.95, 1.0) == pytest.approx(
        advantage(2.0, 0.95, 3, 1.0, 0.0)
    )
    assert n_step_target([1.0, 1.0], [1, 1], 0.9, 2.0) == pytest.approx(3.52)
    # durations (2, 3) put the rewards and tail at exponents (0, 2, 5)
    y = n_step_target([1.0, 1.0], [2, 3], 0.9, 2.0)
    assert y == pytest.approx(1.0 + 0.9**2 * 1.0 + 0.9**5 * 2.0)


def test_epsilon_soft_examples():
    probs = np.array([0.7, 0.3])
    assert np.allclose(epsilon_soft_probs(probs, 0.1), [0.68, 0.32])
    rng = np.random.default_rng(0)
    counts = np.zeros(2)
    for _ in range(2000):
        counts[epsilon_soft_sample(probs, 0.0, rng)] += 1
    assert counts[0] / 2000 == pytest.approx(0.7, abs=0.05)


def test_epsilon_soft_uniform_at_one():
    rng = np.random.default_rng(1)
    probs = np.array([0.99, 0.005, 0.005])
    n = 100_000
    counts = np.zeros(3)
    for _ in range(n):
        counts[epsilon_soft_sample(probs, 1.0, rng)] += 1
    p = 1 / 3
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) < 3 * sigma)


def test_epsilon_soft_restricted():
    probs = np.array([0.25, 0.25, 0.25, 0.25])
    allowed = np.array([False, True, False, True])
    mixed = epsilon_soft_probs(probs, 0.5, allowed)
    assert mixed[0] == 0.0 and mixed[2] == 0.0
    assert mixed.sum() == pytest.approx(1.0)


def test_nstep_batch_matches_scalar_reference():
    rng = np.random.default_rng(2)
    K, B = 6, 3
    rc = rng.normal(size=(K, B))
    tau = rng.integers(1, 4, size=(K, B))
    done = np.zeros((K, B), dtype=bool)
    done[-1] = True
    mask = np.ones((K, B))
    v_all = rng.normal(size=(K + 1, B))
    for n in (0, 1, 3, 10):
        y = _nstep_batch(rc, tau, done, mask, v_all, 0.9, n)
        n_eff = max(1, n)
        for b in range(B):
            for k in range(K):
                window = list(range(k, min(K, k + n_eff)))
                rewards = [rc[j, b] for j in window]
                taus = [tau[j, b] for j in window]
                if window[-1] == K - 1:   # window hits the episode end
                    ref = n_step_target(rewards, taus, 0.9, 0.0)
                else:
                    ref = n_step_target(rewards, taus, 0.9, v_all[window[-1] + 1, b])
                assert y[k, b] == pytest.approx(ref, abs=1e-12)


# -- actor gradient direction --------------------------------------------------------


def _tiny_actor(n_actions=3, width=4):
    spec = nn.NetworkSpec(width, 4, 4, 4, 4, n_actions)
    return nn.make_network(spec, np.random.default_rng(3))


def test_positive_advantage_raises_action_probability():
    net = _tiny_actor()
    x = np.random.default_rng(4).normal(size=(1, 1, 4))
    mask = np.ones((1, 1))
    before = softmax(nn.forward_sequence(net.online, x, mask)[0][0, 0])
    action = np.array([[2]])
    _actor_update(
        net, x, mask, action, np.array([[1.0]]), mask, np.array([0.1]), lr=0.05
    )
    after = softmax(nn.forward_sequence(net.online, x, mask)[0][0, 0])
    assert after[2] > before[2]


def test_zero_advantage_keeps_actor_unchanged():
    net = _tiny_actor()
    before = {k: v.copy() for k, v in net.online.items()}
    x = np.random.default_rng(5).normal(size=(2, 1, 4))
    mask = np.ones((2, 1))
    _actor_update(
        net, x, mask, np.zeros((2, 1), dtype=int), np.zeros((2, 1)), mask,
        np.array([0.2]), lr=0.05,
    )
    for k in before:
        assert np.array_equal(net.online[k], before[k]), k


# -- critic policy evaluation against the oracle -----------------------------------------


def _train_critic_to_convergence(learner, episodes, sync_every=25):
    for rounds, lr in ((1500, 0.01), (1500, 0.003)):
        learner.cfg.critic_lr = lr
        for r in range(rounds):
            learner.train_on_episodes(episodes)
            if (r + 1) % sync_every == 0:
                learner._sync_targets()
        learner._sync_targets()


def test_mac_iac_critic_converges_to_oracle():
    spec = load_tabular_spec(fixture_path("chain_async"))
    gamma = 0.9
    env = ToyChain(spec)
    values = exact_q(spec, uniform_policy(spec), gamma=gamma)
    cfg = ActorCriticConfig(
        actor_lr=1e-12, critic_lr=0.01, episodes_per_train=1,
        target_sync_episodes=10**9, n_step=0, gamma=gamma,
        eps_start=0.0, eps_end=0.0, eps_decay_episodes=1,
        fc=16, gru_dec=16, gru_cen=16,
    )
    streams = rng_streams(0)
    learner = MacIAC(env, cfg, streams["init"], streams["explore"])
    zero_actor(learner)
    episodes = replicated_episodes(env, gamma)
    _train_critic_to_convergence(learner, episodes)

    keymaker = TabularCenDDRQN(env.catalog_sizes, env.obs_widths)
    worst = 0.0
    for ep in {id(e): e for e in episodes}.values():
        for agent in range(2):
            tr = squeeze_decentralized(ep, agent)
            batch = pad_trajectories([tr])
            inputs, emask, _ = dec_inputs(batch, env.catalog_sizes[agent])
            v = _critic_values(learner.critics[agent].online, inputs, emask)
            # build this agent's history keys from its own record stream
            key = (int(np.argmax(tr.z[0])),)
            for k in range(tr.length):
                oracle_v = values.dec_v[agent][key]
                worst = max(worst, abs(v[k, 0] - oracle_v))
                key = key + (int(tr.m[k]), int(np.argmax(tr.z_next[k])))
    assert worst < 1e-3, worst


def test_mac_cac_critic_converges_to_oracle():
    spec = load_tabular_spec(fixture_path("chain_async"))
    gamma = 0.9
    env = ToyChain(spec)
    values = exact_q(spec, uniform_policy(spec), gamma=gamma)
    cfg = ActorCriticConfig(
        actor_lr=1e-12, critic_lr=0.01, episodes_per_train=1,
        target_sync_episodes=10**9, n_step=0, gamma=gamma,
        eps_start=0.0, eps_end=0.0, eps_decay_episodes=1,
        fc=16, gru_dec=16, gru_cen=16,
    )
    streams = rng_streams(1)
    learner = MacCAC(env, cfg, streams["init"], streams["explore"])
    zero_actor(learner)
    episodes = replicated_episodes(env, gamma)
    _train_critic_to_convergence(learner, episodes)

    keymaker = TabularCenDDRQN(env.catalog_sizes, env.obs_widths)
    worst = 0.0
    for ep in {id(e): e for e in episodes}.values():
        tr = squeeze_joint(ep, env.catalog_sizes)
        keys = keymaker.history_keys(tr)
        batch = pad_trajectories([tr])
        inputs, emask, _ = joint_inputs(batch, env.catalog_sizes)
        v = _critic_values(learner.critic.online, inputs, emask)
        for k in range(tr.length):
            worst = max(worst, abs(v[k, 0] - values.joint_v[keys[k]]))
    assert worst < 1e-3, worst


def test_mac_iaicc_critics_converge_to_oracle_async():
    spec = load_tabular_spec(fixture_path("chain_async"))
    gamma = 0.9
    env = ToyChain(spec)
    values = exact_q(spec, uniform_policy(spec), gamma=gamma)
    cfg = ActorCriticConfig(
        actor_lr=1e-12, critic_lr=0.01, episodes_per_train=1,
        target_sync_episodes=10**9, n_step=0, gamma=gamma,
        eps_start=0.0, eps_end=0.0, eps_decay_episodes=1,
        critic_input="history", fc=16, gru_dec=16, gru_cen=16,
    )
    streams = rng_streams(2)
    learner = MacIAICC(env, cfg, streams["init"], streams["explore"])
    zero_actor(learner)
    episodes = replicated_episodes(env, gamma)
    _train_critic_to_convergence(learner, episodes)

    keymaker = TabularCenDDRQN(env.catalog_sizes, env.obs_widths)
    worst = 0.0
    for ep in {id(e): e for e in episodes}.values():
        for agent in range(2):
            tr = squeeze_iaicc(ep, agent, env.catalog_sizes)
            keys = keymaker.history_keys(tr)
            batch = pad_trajectories([tr])
            inputs, emask, _ = joint_inputs(batch, env.catalog_sizes)
            v = _critic_values(learner.critics[agent].online, inputs, emask)
            for k in range(tr.length):
                if not tr.loss_flag[k]:
                    continue
                worst = max(worst, abs(v[k, 0] - values.iaicc_v[agent][keys[k]]))
    assert worst < 1e-3, worst


# -- CTDE equivalences -------------------------------------------------------------------


def sync_spec():
    # every macro lasts two ticks: terminations always coincide
    transitions, rewards = {}, {}
    for s in range(3):
        for m0 in range(2):
            for m1 in range(2):
                transitions[(s, (m0, m1))] = (((s + 1 + m0 + m1) % 3, 1.0),)
                rewards[(s, (m0, m1))] = 0.5 + s + m0 - 0.5 * m1
    return TabularMacDecSpec(
        n_agents=2, n_states=3, initial_state=0, horizon=6,
        durations=((2, 2), (2, 2)), transitions=transitions, rewards=rewards,
        obs=((0, 1, 2), (0, 1, 2)),
    )


def _aligned_learners(env, cfg, seed=3):
    naive = NaiveMacIACC(env, cfg, rng_streams(seed)["init"], rng_streams(seed)["explore"])
    iaicc = MacIAICC(env, cfg, rng_streams(seed)["init"], rng_streams(seed)["explore"])
    for i in range(env.n_agents):
        for k in naive.actors[i].online:
            iaicc.actors[i].online[k] = naive.actors[i].online[k].copy()
        for k in naive.critic.online:
            iaicc.critics[i].online[k] = naive.critic.online[k].copy()
            iaicc.critics[i].target[k] = naive.critic.target[k].copy()
    return naive, iaicc


def test_synchronous_episodes_make_naive_and_iaicc_identical():
    env = ToyChain(sync_spec())
    cfg = ActorCriticConfig(
        actor_lr=0.01, critic_lr=0.01, episodes_per_train=1,
        target_sync_episodes=10**9, n_step=0, gamma=0.95,
        critic_input="history", fc=8, gru_dec=8, gru_cen=8,
    )
    naive, iaicc = _aligned_learners(env, cfg)
    rng = np.random.default_rng(0)
    episodes = [
        collect_episode(
            env, s,
            PrefixDriver(env.catalog_sizes, list(rng.integers(0, 2, size=8))),
            cfg.gamma,
        )
        for s in range(4)
    ]
    naive.train_on_episodes(episodes)
    iaicc.train_on_episodes(episodes)
    for i in range(2):
        for k in naive.actors[i].online:
            assert np.allclose(
                naive.actors[i].online[k], iaicc.actors[i].online[k], atol=1e-12
            ), f"actor{i}/{k}"
    for i in range(2):
        for k in naive.critic.online:
            assert np.allclose(
                naive.critic.online[k], iaicc.critics[i].online[k], atol=1e-12
            ), f"critic{i}/{k}"


def test_async_episode_differs_exactly_in_reward_and_tau():
    spec = load_tabular_spec(fixture_path("chain_async"))
    env = ToyChain(spec)
    gamma = 0.9
    ep = collect_episode(
        env, 0, PrefixDriver(env.catalog_sizes, [0, 1, 1]), gamma
    )
    joint = squeeze_joint(ep, env.catalog_sizes)
    ia = squeeze_iaicc(ep, 1, env.catalog_sizes)   # agent 1 spans both segments
    assert joint.length == ia.length == 2
    # same kept ticks; the per-agent view differs only in reward/tau fields
    assert np.array_equal(joint.z, ia.z)
    assert not np.array_equal(joint.rc, ia.rc)
    assert not np.array_equal(joint.tau, ia.tau)

    # with one shared critic, the two targets differ exactly through those
    # fields at agent 1's flagged record
    critic = nn.make_network(nn.NetworkSpec(
        sum(env.obs_widths) + sum(env.catalog_sizes), 8, 8, 8, 8, 1
    ), np.random.default_rng(1))
    jb = pad_trajectories([joint])
    ib = pad_trajectories([ia])
    inputs, emask, _ = joint_inputs(jb, env.catalog_sizes)
    v_all = _critic_values(critic.online, inputs, emask)
    y_naive = _nstep_batch(jb.rc, jb.tau, jb.done, jb.mask, v_all, gamma, 0)
    y_iaicc = _nstep_flagged(
        ib.rc, ib.tau, ib.done, ib.mask, ib.loss_flag, v_all, gamma, 0
    )
    k = 1   # agent 1 terminates at the final record
    v_next = 0.0   # terminal record: both bootstrap zero
    expected_diff = (jb.rc[k, 0] - ib.rc[k, 0]) + (
        gamma ** jb.tau[k, 0] - gamma ** ib.tau[k, 0]
    ) * v_next
    assert (y_naive[k, 0] - y_iaicc[k, 0]) == pytest.approx(expected_diff, abs=1e-12)
    assert y_naive[k, 0] != y_iaicc[k, 0]


def test_cac_single_agent_reduces_to_iac():
    spec = TabularMacDecSpec(
        n_agents=1, n_states=3, initial_state=0, horizon=6,
        durations=((1, 2),),
        transitions={(s, (m,)): (((s + 1 + m) % 3, 1.0),) for s in range(3) for m in range(2)},
        rewards={(s, (m,)): float(1 + s - m) for s in range(3) for m in range(2)},
        obs=((0, 1, 2),),
    )
    env = ToyChain(spec)
    cfg = ActorCriticConfig(
        actor_lr=0.01, critic_lr=0.02, episodes_per_train=1,
        target_sync_episodes=10**9, n_step=2, gamma=0.9,
        fc=8, gru_dec=8, gru_cen=8,
    )
    iac = MacIAC(env, cfg, rng_streams(9)["init"], rng_streams(9)["explore"])
    cac = MacCAC(env, cfg, rng_streams(9)["init"], rng_streams(9)["explore"])
    for k in iac.actors[0].online:
        cac.actor.online[k] = iac.actors[0].online[k].copy()
        cac.critic.online[k] = iac.critics[0].online[k].copy()
        cac.critic.target[k] = iac.critics[0].target[k].copy()
    episodes = [
        collect_episode(
            env, s, PrefixDriver(env.catalog_sizes, [s % 2, 1, 0, 1, 0, 1]), 0.9
        )
        for s in range(3)
    ]
    iac.train_on_episodes(episodes)
    cac.train_on_episodes(episodes)
    for k in iac.actors[0].online:
        assert np.allclose(cac.actor.online[k], iac.actors[0].online[k], atol=1e-10), k
        assert np.allclose(cac.critic.online[k], iac.critics[0].online[k], atol=1e-10), k


def test_ac_driver_respects_policy_at_eps_zero():
    # a peaked actor must sample its argmax action under eps = 0
    spec = sync_spec()
    env = ToyChain(spec)
    actors = [_tiny_actor(2, env.obs_widths[i] + 2) for i in range(2)]
    for a in actors:
        for k in a.online:
            a.online[k][:] = 0.0
        a.online["out_b"][:] = np.array([10.0, -10.0])
    driver = ACDecDriver(actors, env.catalog_sizes, np.random.default_rng(0), eps=0.0)
    ep = collect_episode(env, 0, driver, 0.95)
    assert np.all(ep.m == 0)
