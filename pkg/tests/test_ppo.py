import numpy as np
import pytest

from gridplan.grid import Cell, load_map
from gridplan.ppo import (
    Adam,
    OBS_DIM,
    Policy,
    PpoConfig,
    RolloutDiverged,
    Trajectory,
    actor_loss_and_grads,
    critic_loss_and_grads,
    curriculum_start,
    discounted_returns,
    legal_move,
    load_policy,
    log_softmax,
    observe,
    ppo_update,
    rollout_path,
    run_episode,
    save_policy,
    train,
)


def empty_map(n, name="empty"):
    text = "\n".join("." * n for _ in range(n))
    return load_map("S" + text[1:-1] + "G", name=name)


@pytest.fixture
def grid8():
    return empty_map(8)


@pytest.fixture
def toy_setup():
    """Tiny nets on the 2-cell corridor with a batch collected from a
    different policy than the one being differentiated."""
    grid = load_map("SG")
    config = PpoConfig(hidden_sizes=(4, 3), episodes=10, max_steps=6)
    behavior = Policy((2, 1), config, np.random.default_rng(43))
    policy = Policy((2, 1), config, np.random.default_rng(42))
    rng = np.random.default_rng(7)
    traj = run_episode(grid, behavior, grid.start, config, rng)
    obs, actions = traj.observations, traj.actions
    old_logits, _ = behavior.actor.forward(obs)
    old_logp = log_softmax(old_logits)[np.arange(len(actions)), actions]
    advantages = np.resize(np.array([0.7, -0.4, 1.2, 0.3]), len(actions))
    return grid, config, policy, obs, actions, old_logp, advantages


def test_config_enforces_paper_learning_rate_bound():
    with pytest.raises(ValueError):
        PpoConfig(actor_lr=0.0005)
    with pytest.raises(ValueError):
        PpoConfig(critic_lr=0.001)
    with pytest.raises(ValueError):
        PpoConfig(clip_epsilon=1.5)


def test_observe_empty_center(grid8):
    obs = observe(grid8, Cell(4, 4), grid8.goal)
    assert obs.shape == (OBS_DIM,)
    assert not obs[4:].any()  # all free patch
    assert ((0 <= obs[:4]) & (obs[:4] <= 1)).all()


def test_observe_corner_out_of_bounds(grid8):
    obs = observe(grid8, Cell(0, 0), grid8.goal)
    assert int(obs[4:].sum()) == 16


def test_legal_move_corner_rule():
    grid = load_map("S#.\n...\n..G")
    assert legal_move(grid, Cell(1, 1), 0) is None  # N into the obstacle
    # NE from (1,1) to (2,0) cuts the corner at blocked (1,0)
    assert legal_move(grid, Cell(1, 1), 1) is None
    assert legal_move(grid, Cell(1, 1), 2) == Cell(2, 1)  # E is fine


def test_curriculum_monotone_and_first_episode(grid8):
    config = PpoConfig(episodes=100)
    rng = np.random.default_rng(0)
    for _ in range(20):
        start = curriculum_start(0, config, grid8, rng)
        assert max(abs(start.x - grid8.goal.x), abs(start.y - grid8.goal.y)) == 1

    def radius(ep):
        starts = {curriculum_start(ep, config, grid8, np.random.default_rng(s))
                  for s in range(60)}
        return max(
            max(abs(c.x - grid8.goal.x), abs(c.y - grid8.goal.y)) for c in starts
        )

    radii = [radius(e) for e in (0, 20, 40, 60, 99)]
    assert radii == sorted(radii)
    assert radii[-1] == 7  # full map reach after the ramp


def test_discounted_returns():
    r = np.array([1.0, 0.0, 2.0])
    out = discounted_returns(r, 0.5)
    assert np.allclose(out, [1.0 + 0.25 * 2, 0.5 * 2, 2.0])


def test_action_probs_normalized(toy_setup):
    _, _, policy, obs, *_ = toy_setup
    probs = policy.action_probs(obs)
    assert np.allclose(probs.sum(axis=-1), 1.0, atol=1e-6)
    assert (probs >= 0).all()


def _fd_check(flat_fn, base, analytic, eps=1e-6):
    num = np.zeros_like(base)
    for i in range(len(base)):
        up = base.copy(); up[i] += eps
        dn = base.copy(); dn[i] -= eps
        num[i] = (flat_fn(up) - flat_fn(dn)) / (2 * eps)
    mask = (np.abs(num) > 1e-7) | (np.abs(analytic) > 1e-7)
    rel = np.abs(analytic - num) / np.maximum(np.abs(num), 1e-8)
    return rel[mask].max() if mask.any() else 0.0


def test_actor_gradient_matches_finite_differences(toy_setup):
    _, _, policy, obs, actions, old_logp, advantages = toy_setup

    def loss_at(flat):
        policy.actor.load_flat(flat)
        loss, _, _ = actor_loss_and_grads(policy, obs, actions, advantages, old_logp, 0.2)
        return loss

    base = policy.actor.flat()
    _, grads, clip_frac = actor_loss_and_grads(
        policy, obs, actions, advantages, old_logp, 0.2
    )
    flat_grad = np.concatenate([g.ravel() for g in grads])
    err = _fd_check(loss_at, base, flat_grad)
    assert err < 1e-4
    assert 0.0 <= clip_frac <= 1.0


def test_critic_gradient_matches_finite_differences(toy_setup):
    _, _, policy, obs, *_ = toy_setup
    returns = np.linspace(-1, 1, len(obs))

    def loss_at(flat):
        policy.critic.load_flat(flat)
        loss, _ = critic_loss_and_grads(policy, obs, returns)
        return loss

    base = policy.critic.flat()
    _, grads = critic_loss_and_grads(policy, obs, returns)
    flat_grad = np.concatenate([g.ravel() for g in grads])
    assert _fd_check(loss_at, base, flat_grad) < 1e-4


def test_zero_advantage_leaves_actor_unchanged(toy_setup):
    grid, config, policy, obs, actions, old_logp, _ = toy_setup
    zero_adv = np.zeros(len(actions))
    _, grads, _ = actor_loss_and_grads(policy, obs, actions, zero_adv, old_logp, 0.2)
    assert max(np.abs(g).max() for g in grads) < 1e-9


def test_non_finite_gradient_aborts_update(toy_setup):
    grid, config, policy, obs, actions, old_logp, advantages = toy_setup
    traj = Trajectory(
        observations=obs,
        actions=actions,
        rewards=np.full(len(actions), np.nan),
        done=False,
    )
    before = policy.actor.flat().copy()
    diag = ppo_update(
        policy, [traj], config, np.random.default_rng(0),
        Adam(policy.actor.params(), config.actor_lr),
        Adam(policy.critic.params(), config.critic_lr),
    )
    assert diag.aborted
    assert np.array_equal(policy.actor.flat(), before)


def test_training_reaches_goal_on_small_map():
    grid = empty_map(6)
    config = PpoConfig(episodes=220, max_steps=48)
    policy, curves = train(grid, config, seed=11)
    assert len(curves.steps) == config.episodes
    assert sum(curves.reached[-30:]) >= 27


def test_training_reproducible():
    grid = empty_map(5)
    config = PpoConfig(episodes=40, max_steps=30)
    _, a = train(grid, config, seed=5)
    _, b = train(grid, config, seed=5)
    assert a.scores == b.scores
    assert a.steps == b.steps


def test_rollout_deterministic_and_reaches(grid8):
    config = PpoConfig(episodes=300, max_steps=64)
    policy, _ = train(grid8, config, seed=3)
    out1 = rollout_path(policy, grid8)
    out2 = rollout_path(policy, grid8)
    assert out1.path == out2.path
    assert out1.path[0] == grid8.start
    assert out1.path[-1] == grid8.goal


def test_untrained_rollout_may_diverge():
    # a wall forces a detour an untrained argmax policy cannot find
    grid = load_map(
        "S....\n"
        "####.\n"
        ".....\n"
        ".####\n"
        "....G"
    )
    config = PpoConfig(hidden_sizes=(8, 8), episodes=10)
    policy = Policy((5, 5), config, np.random.default_rng(1))
    with pytest.raises(RolloutDiverged):
        rollout_path(policy, grid, max_steps=40)


def test_checkpoint_round_trip(tmp_path, grid8):
    config = PpoConfig(episodes=5, max_steps=10)
    policy, _ = train(grid8, config, seed=1)
    ckpt = tmp_path / "policy.json"
    save_policy(policy, ckpt)
    again = load_policy(ckpt)
    obs = observe(grid8, Cell(3, 3), grid8.goal)
    assert np.allclose(policy.action_probs(obs), again.action_probs(obs))
    assert np.allclose(policy.value(obs), again.value(obs))


def test_curves_csv_shape(grid8):
    config = PpoConfig(episodes=12, max_steps=10)
    _, curves = train(grid8, config, seed=2)
    csv = curves.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "episode,steps,score"
    assert len(lines) == 13
