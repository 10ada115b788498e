import os

import numpy as np
import pytest

from kronmix.cli import main
from kronmix.errors import EmptyGraph, ParseError, SpecError
from kronmix.generators import TopologySpec
from kronmix.graphs import scc_decompose
from kronmix.netio import (CSV_HEADER, ExperimentConfig, config_from_mapping,
                           dataset_instructions, largest_scc, load_edgelist,
                           read_config, run_experiment, svg_loglog,
                           verify_checksum, write_csv)

DATA_DIR = os.environ.get("KRONMIX_DATA", "data")


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadEdgelist:
    def test_two_cycle(self, tmp_path):
        g = load_edgelist(write(tmp_path, "g.txt", "0 1\n1 0\n"))
        assert g.node_count == 2
        assert g.edge_count == 2
        assert scc_decompose(g).count == 1

    def test_comments_only_empty(self, tmp_path):
        path = write(tmp_path, "c.txt", "# one\n# two\n\n")
        with pytest.raises(EmptyGraph):
            load_edgelist(path)

    def test_malformed_line_number(self, tmp_path):
        path = write(tmp_path, "bad.txt", "0 1\n1 2 3\n")
        with pytest.raises(ParseError) as exc:
            load_edgelist(path)
        assert exc.value.line_number == 2

    def test_non_integer(self, tmp_path):
        path = write(tmp_path, "bad.txt", "# header\n0 x\n")
        with pytest.raises(ParseError) as exc:
            load_edgelist(path)
        assert exc.value.line_number == 2

    def test_id_remap_and_map_kept(self, tmp_path):
        g = load_edgelist(write(tmp_path, "g.txt", "10 30\n30 570\n"))
        assert g.node_count == 3
        assert g.meta["id_map"].tolist() == [10, 30, 570]

    def test_duplicates_merge(self, tmp_path):
        g = load_edgelist(write(tmp_path, "g.txt", "0 1\n0 1\n1 0\n"))
        assert g.edge_count == 2

    def test_undirected_symmetrizes(self, tmp_path):
        g = load_edgelist(write(tmp_path, "g.txt", "0 1\n"), directed=False)
        assert g.edge_set() == {(0, 1), (1, 0)}


class TestLargestScc:
    def test_strongly_connected_identity(self, tmp_path):
        g = load_edgelist(write(tmp_path, "g.txt", "0 1\n1 2\n2 0\n"))
        sub = largest_scc(g)
        assert sub.node_count == 3
        assert sub.edge_count == 3

    def test_picks_largest(self, tmp_path):
        text = "0 1\n1 0\n2 3\n3 4\n4 2\n1 2\n"
        sub = largest_scc(load_edgelist(write(tmp_path, "g.txt", text)))
        assert sub.node_count == 3
        assert sub.meta["id_map"].tolist() == [2, 3, 4]

    def test_tie_breaks_on_smallest_id(self, tmp_path):
        text = "5 6\n6 5\n1 2\n2 1\n"
        sub = largest_scc(load_edgelist(write(tmp_path, "g.txt", text)))
        assert sub.meta["id_map"].tolist() == [1, 2]


class TestConfig:
    def test_read_config(self, tmp_path):
        path = write(tmp_path, "cfg.txt",
                     "# sweep over agents\nagent.family = cycle\nagent.n= 11\n"
                     "constraint.family =path\nconstraint.directed = true\n"
                     "sweep = n\nsweep.start = 5\nsweep.stop = 9\nsweep.stride = 2\n"
                     "epsilon = 0.25\n")
        mapping = read_config(path)
        assert mapping["agent.family"] == "cycle"
        cfg = config_from_mapping(mapping)
        assert cfg.sweep_values() == [5, 7, 9]
        assert cfg.constraint.directed is True

    def test_bad_line(self, tmp_path):
        with pytest.raises(ParseError):
            read_config(write(tmp_path, "cfg.txt", "agent.family cycle\n"))

    def test_validation(self):
        with pytest.raises(SpecError):
            config_from_mapping({"agent.family": "cycle", "constraint.family": "path",
                                 "sweep": "x"})
        with pytest.raises(SpecError):
            config_from_mapping({"constraint.family": "path"})
        with pytest.raises(SpecError):
            config_from_mapping({"agent.family": "cycle", "constraint.family": "path",
                                 "epsilon": "1.5"})


def small_config(tmp_path, **overrides):
    cfg = ExperimentConfig(
        agent=TopologySpec("cycle", 5),
        constraint=TopologySpec("path", 3, directed=True),
        sweep="n", sweep_start=5, sweep_stop=9, sweep_stride=2,
        epsilon=0.25, seed=4, trials=60, alpha=0.0,
        outdir=str(tmp_path / "out"))
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


class TestRunExperiment:
    def test_schema_and_determinism(self, tmp_path):
        cfg = small_config(tmp_path)
        rows = run_experiment(cfg)
        csv_path = os.path.join(cfg.outdir, "experiment.csv")
        first = open(csv_path, encoding="utf-8").read()
        assert first.splitlines()[0] == CSV_HEADER
        assert len(first.splitlines()) == 1 + 3
        # odd cycles converge; no errors expected
        assert all(r["error"] == "" for r in rows)
        assert all(r["converges"] == "true" for r in rows)
        # re-run reproduces the CSV byte for byte
        run_experiment(cfg)
        assert open(csv_path, encoding="utf-8").read() == first

    def test_thread_env_does_not_change_results(self, tmp_path, monkeypatch):
        cfg = small_config(tmp_path)
        rows_serial = run_experiment(cfg)
        monkeypatch.setenv("KRONMIX_THREADS", "3")
        rows_parallel = run_experiment(cfg)
        assert rows_serial == rows_parallel

    def test_error_rows_recorded(self, tmp_path):
        # even cycle sizes: periodic oblivious component, verdict false, no t_mix
        cfg = small_config(tmp_path, sweep_start=4, sweep_stop=6, sweep_stride=2)
        rows = run_experiment(cfg)
        assert rows[0]["converges"] == "false"
        assert rows[0]["t_mix"] == ""
        # a family minimum violation must land in the error column, not abort
        cfg2 = small_config(tmp_path, sweep_start=2, sweep_stop=6, sweep_stride=2)
        cfg2.outdir = str(tmp_path / "out2")
        rows2 = run_experiment(cfg2)
        assert rows2[0]["error"] != ""
        assert rows2[-1]["converges"] != ""

    def test_tmix_column_monotone_for_cycles(self, tmp_path):
        cfg = small_config(tmp_path, sweep_start=5, sweep_stop=13, sweep_stride=4)
        rows = run_experiment(cfg)
        ts = [int(r["t_mix"]) for r in rows]
        assert ts == sorted(ts)

    def test_svg_written(self, tmp_path):
        cfg = small_config(tmp_path)
        run_experiment(cfg)
        svg = os.path.join(cfg.outdir, "t_mix.svg")
        assert os.path.exists(svg)
        body = open(svg, encoding="utf-8").read()
        assert body.startswith("<svg") and "slope" in body

    def test_epsilon_one_rejected_by_validation(self, tmp_path):
        cfg = small_config(tmp_path, epsilon=1.0)
        with pytest.raises(SpecError):
            cfg.sweep_values()

    def test_cycle_sweep_quadratic_growth(self, tmp_path):
        # odd cycles x directed path: t_mix climbs like n^2 (desk-scale range)
        cfg = ExperimentConfig(
            agent=TopologySpec("cycle", 11),
            constraint=TopologySpec("path", 10, directed=True),
            sweep="n", sweep_start=11, sweep_stop=51, sweep_stride=10,
            seed=2, trials=60, alpha=0.0, outdir=str(tmp_path / "quad"))
        rows = run_experiment(cfg)
        assert all(r["error"] == "" for r in rows)
        ts = [int(r["t_mix"]) for r in rows]
        assert ts == sorted(ts)
        slope = np.polyfit(np.log([r["sweep_value"] for r in rows]), np.log(ts), 1)[0]
        assert 1.4 <= slope <= 2.5

    def test_constraint_sweep_flat_until_dominant(self, tmp_path):
        # fixed slow agent graph: t_mix stays put until the constraints out-mix it
        cfg = ExperimentConfig(
            agent=TopologySpec("path", 25),
            constraint=TopologySpec("path", 5),
            sweep="m", sweep_start=5, sweep_stop=45, sweep_stride=20,
            seed=3, trials=60, alpha=0.5, outdir=str(tmp_path / "flat"))
        rows = run_experiment(cfg)
        assert all(r["error"] == "" for r in rows)
        ts = [int(r["t_mix"]) for r in rows]
        assert ts[1] <= ts[0] * 1.25  # constraints still dominated by the agents
        assert ts[2] > ts[0] * 1.5  # now the constraint graph sets the pace


class TestCsvAndSvg:
    def test_quoting(self, tmp_path):
        path = str(tmp_path / "x.csv")
        write_csv(path, [{"sweep_value": 1, "error": 'bad, "thing"'}])
        body = open(path, encoding="utf-8").read()
        assert '"bad, ""thing"""' in body

    def test_svg_slope_recovers_power_law(self, tmp_path):
        xs = np.array([10, 20, 40, 80], dtype=float)
        ys = 3.0 * xs ** 2
        slope = svg_loglog(str(tmp_path / "p.svg"), xs, ys)
        assert slope == pytest.approx(2.0, abs=1e-9)


class TestChecksumAndInstructions:
    def test_checksum(self, tmp_path):
        path = write(tmp_path, "f.txt", "hello\n")
        import hashlib
        digest = hashlib.sha256(b"hello\n").hexdigest()
        assert verify_checksum(path, digest)
        assert not verify_checksum(path, "0" * 64)

    def test_instructions_written(self, tmp_path):
        path = dataset_instructions(str(tmp_path / "data"))
        body = open(path, encoding="utf-8").read()
        assert "wiki-Vote" in body


class TestCli:
    def test_generate_ok(self, tmp_path, capsys):
        out = str(tmp_path / "g.txt")
        assert main(["generate", "--family", "cycle", "--n", "6", "--out", out]) == 0
        assert "nodes=6" in capsys.readouterr().out
        g = load_edgelist(out)
        assert g.node_count == 6

    def test_bad_family_exit_2(self, capsys):
        assert main(["generate", "--family", "cycle", "--n", "1"]) == 2

    def test_missing_file_exit_3(self, capsys):
        assert main(["ingest", "/nonexistent/file.txt"]) == 3

    def test_malformed_file_exit_3(self, tmp_path, capsys):
        path = write(tmp_path, "bad.txt", "0 x\n")
        assert main(["ingest", path]) == 3

    def test_ingest_reports_counts(self, tmp_path, capsys):
        path = write(tmp_path, "g.txt", "0 1\n1 0\n1 2\n")
        assert main(["ingest", path]) == 0
        out = capsys.readouterr().out
        assert "raw: nodes=3" in out
        assert "largest-scc: nodes=2" in out

    def test_analyze_and_verdict(self, capsys):
        code = main(["analyze", "--agent-family", "cycle", "--agent-n", "5",
                     "--constraint-family", "path", "--constraint-n", "4",
                     "--constraint-directed"])
        assert code == 0
        out = capsys.readouterr().out
        assert "converges: True" in out

    def test_simulate_nonconvergent_exit_4(self, capsys):
        code = main(["simulate", "--agent-family", "cycle", "--agent-n", "4",
                     "--constraint-family", "path", "--constraint-n", "4",
                     "--constraint-directed"])
        assert code == 4

    def test_simulate_ok(self, capsys):
        code = main(["simulate", "--agent-family", "cycle", "--agent-n", "5",
                     "--constraint-family", "path", "--constraint-n", "4",
                     "--constraint-directed"])
        assert code == 0
        assert "converged=True" in capsys.readouterr().out

    def test_mixing_command(self, capsys):
        assert main(["mixing", "--family", "complete", "--n", "6"]) == 0
        assert "t_mix" in capsys.readouterr().out

    def test_limits_command(self, capsys):
        code = main(["limits", "--agent-family", "complete", "--agent-n", "4",
                     "--constraint-family", "complete", "--constraint-n", "3",
                     "--alpha", "0.3", "--social-power"])
        assert code == 0
        out = capsys.readouterr().out
        assert "structural limit" in out
        assert "social power" in out

    def test_experiment_with_config_and_override(self, tmp_path, capsys):
        cfg_path = write(tmp_path, "cfg.txt",
                         "agent.family = cycle\nconstraint.family = path\n"
                         "constraint.directed = true\nconstraint.n = 3\n"
                         "sweep = n\nsweep.start = 5\nsweep.stop = 7\n"
                         "sweep.stride = 2\ntrials = 40\nalpha = 0\n"
                         f"outdir = {tmp_path / 'expout'}\n")
        assert main(["experiment", "--config", cfg_path, "--sweep-stop", "9"]) == 0
        csv_path = tmp_path / "expout" / "experiment.csv"
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1 + 3  # override extends the sweep to 5, 7, 9
        for line in lines[1:]:
            cells = line.split(",")
            assert cells[-1] == ""  # config values survive absent flags
            assert cells[2] == "3"  # constraint.n taken from the file

    def test_experiment_missing_config_exit_2(self, capsys):
        assert main(["experiment", "--sweep", "n"]) == 2


@pytest.mark.skipif(not os.path.exists(os.path.join(DATA_DIR, "wiki-Vote.txt")),
                    reason="SNAP datasets not supplied (see `kronmix ingest --instructions`)")
class TestWikiVoteRows:
    def test_largest_scc_rows_sum_to_one(self):
        from kronmix.stochastic import equal_weight_matrix
        from kronmix.generators import lazify
        g = largest_scc(load_edgelist(os.path.join(DATA_DIR, "wiki-Vote.txt")))
        m = equal_weight_matrix(lazify(g, 0.5))
        sums = np.asarray(m.csr.sum(axis=1)).ravel()
        assert m.n == 1300
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)
