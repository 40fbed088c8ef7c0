"""Environments: arm generation, reward laws, regret oracles, dataset ingest."""

import numpy as np
import pytest

from langevin_bandits.core import RngStream
from langevin_bandits.envs import (
    DATASET_SPECS,
    DatasetEnv,
    SyntheticEnv,
    load_dataset,
    toy_dataset_path,
)
from langevin_bandits.errors import (
    DataFormatError,
    EndOfDataError,
    InvalidInputError,
)


def make_env(kind, **kw):
    defaults = dict(dim=5, n_arms=8, rng=RngStream(100, 2))
    defaults.update(kw)
    return SyntheticEnv(kind, **defaults)


class TestArmGeneration:
    def test_fixed_mode_repeats_the_same_set(self):
        env = make_env("linear", arm_mode="fixed")
        np.testing.assert_array_equal(env.arms_for_round(1), env.arms_for_round(999))

    def test_changing_mode_paper_scale_shapes(self):
        env = make_env("linear", dim=20, n_arms=50, arm_mode="changing")
        arms = env.arms_for_round(3)
        assert arms.shape == (50, 20)
        np.testing.assert_allclose(np.linalg.norm(arms, axis=1), 1.0, atol=1e-9)

    def test_changing_mode_differs_across_rounds_but_not_calls(self):
        env = make_env("linear", arm_mode="changing")
        a1, a2 = env.arms_for_round(1), env.arms_for_round(2)
        assert not np.array_equal(a1, a2)
        np.testing.assert_array_equal(a1, env.arms_for_round(1))

    def test_unit_norms_everywhere(self):
        env = make_env("quadratic", arm_mode="changing")
        for t in (1, 7, 31):
            norms = np.linalg.norm(env.arms_for_round(t), axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-9)
        assert np.linalg.norm(env.theta_star) == pytest.approx(1.0, abs=1e-9)


class TestPull:
    def test_linear_noise_is_centered(self):
        env = make_env("linear", noise_std=np.sqrt(0.5))
        x = env.arms_for_round(1)[0]
        expected = float(x @ env.theta_star)
        n = 100_000
        total = 0.0
        for t in range(1, n + 1):
            total += env.pull(t, 0, arms=x[None, :]).reward
        se = np.sqrt(0.5 / n)
        assert abs(total / n - expected) <= 3 * se

    def test_logistic_frequency_at_midpoint(self):
        env = make_env("logistic")
        # arm orthogonal to the parameter: mean reward forced to exactly 1/2
        projector = np.eye(5) - np.outer(env.theta_star, env.theta_star)
        x = projector[:, 0] / np.linalg.norm(projector[:, 0])
        assert env.expected_rewards(x[None, :])[0] == pytest.approx(0.5, abs=1e-12)
        n = 10_000
        wins = sum(env.pull(t, 0, arms=x[None, :]).reward for t in range(1, n + 1))
        sigma = np.sqrt(n * 0.25)
        assert abs(wins - 0.5 * n) <= 3 * sigma
        rewards = {env.pull(t, 0, arms=x[None, :]).reward for t in range(1, 50)}
        assert rewards <= {0.0, 1.0}

    def test_quadratic_expected_reward_at_parameter(self):
        env = make_env("quadratic")
        expected = env.expected_rewards(env.theta_star[None, :])
        assert expected[0] == pytest.approx(10.0, abs=1e-12)

    def test_pull_reports_exact_regret_decomposition(self):
        env = make_env("linear")
        arms = env.arms_for_round(4)
        expected = env.expected_rewards(arms)
        out = env.pull(4, 2, arms)
        assert out.expected == pytest.approx(float(expected[2]))
        assert out.expected_best == pytest.approx(float(expected.max()))
        assert out.regret == pytest.approx(out.expected_best - out.expected)
        assert out.regret >= 0.0


class TestOracle:
    def test_linear_oracle_is_projection_argmax(self):
        env = make_env("linear")
        arms = env.arms_for_round(1)
        idx, best = env.oracle_best(arms)
        assert idx == int(np.argmax(arms @ env.theta_star))
        assert best == pytest.approx(float((arms @ env.theta_star).max()))

    def test_quadratic_oracle_is_abs_projection_argmax(self):
        env = make_env("quadratic")
        arms = env.arms_for_round(2)
        idx, _ = env.oracle_best(arms)
        assert idx == int(np.argmax(np.abs(arms @ env.theta_star)))

    @pytest.mark.parametrize("kind", ["linear", "logistic", "quadratic"])
    def test_oracle_agrees_with_brute_force(self, kind):
        env = make_env(kind, arm_mode="changing")
        for t in range(1, 101):
            arms = env.arms_for_round(t)
            idx, best = env.oracle_best(arms)
            brute = max(range(len(arms)),
                        key=lambda j: (env.expected_rewards(arms)[j], -j))
            assert idx == brute
            assert best >= env.expected_rewards(arms).max() - 1e-12

    def test_expected_reward_consistency_by_kind(self):
        for kind in ("linear", "logistic", "quadratic"):
            env = make_env(kind)
            x = env.arms_for_round(1)[:1]
            mean = float(env.expected_rewards(x)[0])
            n = 100_000
            total = sum(env.pull(t, 0, arms=x).reward for t in range(1, n + 1))
            spread = {"linear": np.sqrt(0.5), "logistic": 0.5, "quadratic": 1.0}[kind]
            assert abs(total / n - mean) <= 3 * spread / np.sqrt(n) + 1e-12


class TestEnvErrors:
    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidInputError):
            SyntheticEnv("cubic", 3, 4, RngStream(0, 0))

    def test_round_index_validated(self):
        env = make_env("linear")
        with pytest.raises(InvalidInputError):
            env.arms_for_round(0)


def write_rows(path, rows):
    path.write_text("\n".join(",".join(str(v) for v in row) for row in rows) + "\n")


class TestDatasetEnv:
    def test_block_embedding_layout(self, tmp_path):
        f = tmp_path / "toy.csv"
        write_rows(f, [[0.1, 0.2, 0], [0.3, 0.4, 1], [0.5, 0.6, 2],
                       [0.7, 0.8, 0], [0.9, 1.0, 1], [0.2, 0.1, 2]])
        env = load_dataset(f, RngStream(1, 1), normalize=False)
        assert env.context_dim == 6
        assert env.n_classes == 3
        arms = env.arms_for_round(1)
        assert arms.shape == (3, 6)
        x = env.features[env._instance(1)]
        for j in range(3):
            np.testing.assert_array_equal(arms[j, 2 * j:2 * j + 2], x)
            mask = np.ones(6, dtype=bool)
            mask[2 * j:2 * j + 2] = False
            assert np.all(arms[j][mask] == 0.0)

    def test_exactly_one_rewarding_arm_per_round(self, tmp_path):
        f = tmp_path / "toy.csv"
        write_rows(f, [[0.1, 0.2, 0], [0.3, 0.4, 1], [0.5, 0.6, 1]])
        env = load_dataset(f, RngStream(2, 1))
        for t in range(1, 4):
            rewards = [env.pull(t, j).reward for j in range(env.n_classes)]
            assert sorted(rewards) == [0.0, 1.0]
            regrets = [env.pull(t, j).regret for j in range(env.n_classes)]
            assert set(regrets) <= {0.0, 1.0}

    def test_shuffle_is_seed_deterministic(self, tmp_path):
        f = tmp_path / "toy.csv"
        write_rows(f, [[float(i), float(i + 1), i % 2] for i in range(20)])
        env_a = load_dataset(f, RngStream(7, 1))
        env_b = load_dataset(f, RngStream(7, 1))
        env_c = load_dataset(f, RngStream(8, 1))
        order_a = [env_a.hidden_label(t) for t in range(1, 21)]
        order_b = [env_b.hidden_label(t) for t in range(1, 21)]
        order_c = [env_c.hidden_label(t) for t in range(1, 21)]
        assert order_a == order_b
        assert order_a != order_c

    def test_exhaustion_signals_end_of_data(self, tmp_path):
        f = tmp_path / "toy.csv"
        write_rows(f, [[0.0, 1.0, 0], [1.0, 0.0, 1]])
        env = load_dataset(f, RngStream(3, 1))
        env.arms_for_round(2)
        with pytest.raises(EndOfDataError):
            env.arms_for_round(3)
        wrapped = load_dataset(f, RngStream(3, 1), wrap=True)
        wrapped.arms_for_round(3)

    def test_min_max_normalization_bounds_features(self, tmp_path):
        f = tmp_path / "toy.csv"
        write_rows(f, [[-5.0, 100.0, 0], [5.0, 300.0, 1], [0.0, 200.0, 0]])
        env = load_dataset(f, RngStream(4, 1), normalize=True)
        assert env.features.min() >= 0.0
        assert env.features.max() <= 1.0
        raw = load_dataset(f, RngStream(4, 1), normalize=False)
        assert raw.features.min() == -5.0


class TestLoadDatasetErrors:
    def test_parse_failure_names_row(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1.0,2.0,0\n1.0,oops,1\n")
        with pytest.raises(DataFormatError, match="row 2"):
            load_dataset(f, RngStream(0, 0))

    def test_ragged_row_names_row(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1.0,2.0,0\n1.0,1\n")
        with pytest.raises(DataFormatError, match="row 2"):
            load_dataset(f, RngStream(0, 0))

    def test_label_out_of_declared_range(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1.0,2.0,0\n1.0,2.0,7\n")
        with pytest.raises(DataFormatError, match="row 2"):
            load_dataset(f, RngStream(0, 0), n_classes=3)

    def test_one_based_labels(self, tmp_path):
        f = tmp_path / "ok.csv"
        f.write_text("1.0,2.0,1\n3.0,4.0,2\n")
        env = load_dataset(f, RngStream(0, 0), label_base=1)
        assert env.n_classes == 2
        assert set(env.labels.tolist()) == {0, 1}

    def test_declared_shape_mismatch(self, tmp_path):
        f = tmp_path / "small.csv"
        f.write_text("1.0,2.0,0\n3.0,4.0,1\n")
        with pytest.raises(DataFormatError, match="declared"):
            load_dataset(f, RngStream(0, 0), expected=DATASET_SPECS["shuttle"])

    def test_header_row_skipped(self, tmp_path):
        f = tmp_path / "h.csv"
        f.write_text("a,b,label\n1.0,2.0,0\n3.0,4.0,1\n")
        env = load_dataset(f, RngStream(0, 0), header=True)
        assert env.n_instances == 2


class TestDeclaredSpecs:
    def test_catalog_shapes(self):
        # context dimension equals classes * features for the consistent rows
        shuttle = DATASET_SPECS["shuttle"]
        assert (shuttle.n_features, shuttle.n_classes) == (9, 7)
        assert shuttle.context_dim == 63
        assert shuttle.n_instances == 58_000
        magic = DATASET_SPECS["magic_telescope"]
        assert (magic.n_features, magic.n_classes) == (10, 2)
        assert magic.context_dim == 20
        assert magic.n_instances == 19_020
        assert DATASET_SPECS["covertype"].context_dim == 378
        assert DATASET_SPECS["cifar10"].context_dim == 30_720

    def test_bundled_toy_dataset_loads(self):
        env = load_dataset(toy_dataset_path(), RngStream(5, 5))
        assert env.n_features == 4
        assert env.n_classes == 3
        assert env.n_instances == 300
        assert env.context_dim == 12


class TestRegretAccounting:
    def test_uniform_agent_accrues_linear_regret(self):
        from langevin_bandits.harness import AgentConfig, EnvConfig, run_one

        rec = run_one(AgentConfig("uniform", {}),
                      EnvConfig(kind="linear", dim=10, n_arms=20), 5000, seed=1)
        # sanity floor: mean gap to the best arm stays bounded away from zero
        assert rec.regrets.mean() > 0.1
        late = rec.cum_regret[-1] - rec.cum_regret[2500 - 1]
        early = rec.cum_regret[2500 - 1]
        assert late > 0.5 * early  # no sublinear flattening for uniform play

    def test_cumulative_regret_is_running_sum(self):
        from langevin_bandits.harness import AgentConfig, EnvConfig, run_one

        rec = run_one(AgentConfig("uniform", {}),
                      EnvConfig(kind="logistic", dim=4, n_arms=6), 200, seed=3)
        np.testing.assert_allclose(rec.cum_regret, np.cumsum(rec.regrets), atol=0)
        assert np.all(rec.regrets >= 0)
