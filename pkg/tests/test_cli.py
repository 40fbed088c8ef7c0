"""Command-line interface: config validation, subcommands, exit codes."""

import numpy as np
import pytest

from langevin_bandits.cli import (
    echo_config,
    main,
    parse_config_text,
    parse_echo,
    run_diagnosis,
)
from langevin_bandits.errors import ConfigError
from langevin_bandits.harness import read_curve

MINIMAL = """
[env]
kind = linear
dim = 2
arms = 5

[agent]
variant = eps_greedy
explore_c = 1.0

[run]
horizon = 50
seeds = 1
tag = mini
"""

DIAG = """
[diagnose]
dim = 2
rounds = 3
chains = 100000
steps = 5
beta_inv = 0.5
threshold = 4.0
"""


def write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigParsing:
    def test_minimal_config_parses(self):
        cfg = parse_config_text(MINIMAL)
        assert cfg.env.kind == "linear"
        assert cfg.agent.variant == "eps_greedy"
        assert cfg.run.horizon == 50
        assert cfg.run.seeds == (1,)

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError, match="agent.agnet"):
            parse_config_text(MINIMAL.replace("explore_c = 1.0",
                                              "agnet = 1.0\nexplore_c = 1.0"))

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="surprise"):
            parse_config_text(MINIMAL + "\n[surprise]\nx = 1\n")

    def test_unknown_variant_rejected(self):
        with pytest.raises(ConfigError, match="variant"):
            parse_config_text(MINIMAL.replace("eps_greedy", "mystery"))

    def test_key_for_wrong_variant_rejected(self):
        with pytest.raises(ConfigError, match="scale_a"):
            parse_config_text(MINIMAL.replace("explore_c = 1.0", "scale_a = 1.0"))

    def test_type_errors_are_reported_with_path(self):
        with pytest.raises(ConfigError, match="run.horizon"):
            parse_config_text(MINIMAL.replace("horizon = 50", "horizon = soon"))

    def test_duplicate_seeds_caught_at_run_time(self, tmp_path):
        path = write(tmp_path, MINIMAL.replace("seeds = 1", "seeds = 1,1"))
        assert main(["simulate", path, "--out", str(tmp_path / "o")]) == 2

    def test_dataset_requires_path(self):
        text = MINIMAL.replace("kind = linear", "kind = dataset")
        with pytest.raises(ConfigError, match="dataset_path"):
            parse_config_text(text)

    def test_echo_round_trips(self):
        cfg = parse_config_text(MINIMAL)
        lines = [f"{k} = {v}" for k, v in echo_config(cfg).items()]
        env_cfg, agent_cfg, horizon, seeds = parse_echo(lines)
        assert env_cfg == cfg.env
        assert agent_cfg == cfg.agent
        assert horizon == cfg.run.horizon
        assert seeds == cfg.run.seeds


class TestSimulate:
    def test_minimal_run_writes_three_files(self, tmp_path):
        out = tmp_path / "results"
        code = main(["simulate", write(tmp_path, MINIMAL), "--out", str(out)])
        assert code == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["mini_curve.csv", "mini_meta.txt", "mini_run0.csv"]

    def test_invalid_key_exits_one(self, tmp_path, capsys):
        path = write(tmp_path, MINIMAL.replace("explore_c = 1.0", "agnet = 2"))
        code = main(["simulate", path, "--out", str(tmp_path / "o")])
        assert code == 1
        assert "agnet" in capsys.readouterr().err

    def test_seed_offset_changes_output(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        path = write(tmp_path, MINIMAL)
        assert main(["simulate", path, "--out", str(out_a)]) == 0
        assert main(["simulate", path, "--out", str(out_b), "--seed-offset", "100"]) == 0
        _, mean_a, _ = read_curve(out_a / "mini_curve.csv")
        _, mean_b, _ = read_curve(out_b / "mini_curve.csv")
        assert not np.array_equal(mean_a, mean_b)

    def test_no_files_outside_output_directory(self, tmp_path):
        out = tmp_path / "only_here"
        path = write(tmp_path, MINIMAL)
        before = set(p.name for p in tmp_path.iterdir())
        assert main(["simulate", path, "--out", str(out)]) == 0
        after = set(p.name for p in tmp_path.iterdir())
        assert after - before == {"only_here"}

    def test_metadata_echo_reparses_to_equal_config(self, tmp_path):
        out = tmp_path / "results"
        path = write(tmp_path, MINIMAL)
        main(["simulate", path, "--out", str(out)])
        lines = (out / "mini_meta.txt").read_text().splitlines()
        env_cfg, agent_cfg, horizon, seeds = parse_echo(lines)
        cfg = parse_config_text(MINIMAL)
        assert env_cfg == cfg.env
        assert agent_cfg == cfg.agent
        assert (horizon, seeds) == (cfg.run.horizon, cfg.run.seeds)


class TestDiagnose:
    def test_exact_oracle_passes(self, tmp_path):
        assert main(["diagnose", write(tmp_path, DIAG)]) == 0

    def test_zero_step_chains_pass(self, tmp_path):
        assert main(["diagnose", write(tmp_path, DIAG.replace("steps = 5",
                                                              "steps = 0"))]) == 0

    def test_mismatched_oracle_fails_with_exit_three(self, tmp_path):
        text = DIAG + "oracle_eta_scale = 1.25\n"
        assert main(["diagnose", write(tmp_path, text)]) == 3

    def test_nonlinear_model_rejected(self, tmp_path):
        text = DIAG + "\n[agent]\nvariant = langevin_ts\nmodel = glm\n"
        assert main(["diagnose", write(tmp_path, text)]) == 1

    def test_diagnosis_zscores_reasonable(self):
        from langevin_bandits.cli import DiagnoseConfig

        mean_z, cov_z = run_diagnosis(DiagnoseConfig(chains=50_000))
        assert mean_z <= 4.0
        assert cov_z <= 4.0


SWEEP = MINIMAL + """
[grid]
agent.explore_c = 0.5,2.0
agent.lam = 1.0,2.0
"""


class TestSweep:
    def test_grid_runs_all_cells_and_ranks(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", write(tmp_path, SWEEP), "--out", str(out)])
        assert code == 0
        curves = sorted(p.name for p in out.iterdir() if p.name.endswith("curve.csv"))
        assert curves == [f"mini_cell{i:03d}_curve.csv" for i in range(4)]
        summary = (out / "mini_sweep_summary.csv").read_text().strip().splitlines()
        assert summary[0] == "rank,cell,agent.explore_c,agent.lam,final_mean_regret"
        assert len(summary) == 5
        finals = [float(line.split(",")[-1]) for line in summary[1:]]
        assert finals == sorted(finals)
        # best row agrees with the per-cell curve file
        best_cell = int(summary[1].split(",")[1])
        _, mean, _ = read_curve(out / f"mini_cell{best_cell:03d}_curve.csv")
        assert finals[0] == pytest.approx(mean[-1])

    def test_single_cell_grid_matches_simulate(self, tmp_path):
        single = MINIMAL + "\n[grid]\nagent.explore_c = 1.0\n"
        out_sweep = tmp_path / "s"
        out_sim = tmp_path / "d"
        assert main(["sweep", write(tmp_path, single, "s.ini"),
                     "--out", str(out_sweep)]) == 0
        assert main(["simulate", write(tmp_path, MINIMAL, "m.ini"),
                     "--out", str(out_sim)]) == 0
        _, sweep_mean, _ = read_curve(out_sweep / "mini_cell000_curve.csv")
        _, sim_mean, _ = read_curve(out_sim / "mini_curve.csv")
        np.testing.assert_array_equal(sweep_mean, sim_mean)
        assert (out_sweep / "mini_sweep_summary.csv").exists()

    def test_empty_grid_is_config_error(self, tmp_path):
        assert main(["sweep", write(tmp_path, MINIMAL), "--out",
                     str(tmp_path / "x")]) == 1


@pytest.mark.slow
def test_paper_scale_config_completes(tmp_path):
    text = """
[env]
kind = linear
dim = 20
arms = 50
arm_mode = changing

[agent]
variant = langevin_ts
step_scale = 0.05
beta_inv = 0.01
epoch_steps = 100

[run]
horizon = 10000
seeds = 1,2,3,4,5,6,7,8,9,10
tag = paper_scale
"""
    out = tmp_path / "results"
    assert main(["simulate", write(tmp_path, text), "--out", str(out)]) == 0
    rounds, mean, stderr = read_curve(out / "paper_scale_curve.csv")
    assert len(rounds) == 10_000
    assert mean[-1] == mean.max()
