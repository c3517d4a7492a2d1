import json

import pytest

from streamsketch.cli import main


def run_cli(*argv):
    return main(list(argv))


def write_edges(path, rows):
    path.write_text("".join(f"{u},{v},{t}\n" for u, v, t in rows))


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        run_cli("frobnicate")
    assert err.value.code == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as err:
        run_cli("midas", "--no-such-flag")
    assert err.value.code == 2


def test_missing_input_file_exits_1(tmp_path, capsys):
    code = run_cli("midas", "--input", str(tmp_path / "absent.csv"))
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_midas_reads_stdin_and_writes_stdout_by_default(monkeypatch, capsys):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("1,2,1\n1,2,2\n1,2,2\n"))
    assert run_cli("midas", "--buckets", "1024") == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert float(lines[0]) == 0.0


def test_midas_writes_one_score_per_line(tmp_path):
    edges = tmp_path / "edges.csv"
    out = tmp_path / "scores.txt"
    write_edges(edges, [(1, 2, 1), (1, 2, 2), (1, 2, 2), (3, 4, 3)])
    assert run_cli("midas", "--input", str(edges), "--output", str(out)) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    assert all(float(line) >= 0 for line in lines)


def test_midas_output_is_deterministic(tmp_path):
    edges = tmp_path / "edges.csv"
    write_edges(edges, [(i % 9, (i * 7) % 9, 1 + i // 10) for i in range(300)])
    out1, out2 = tmp_path / "a.txt", tmp_path / "b.txt"
    run_cli("midas-r", "--input", str(edges), "--output", str(out1), "--seed", "9")
    run_cli("midas-r", "--input", str(edges), "--output", str(out2), "--seed", "9")
    assert out1.read_bytes() == out2.read_bytes()


def test_seed_env_var_is_honoured(tmp_path, monkeypatch):
    edges = tmp_path / "edges.csv"
    write_edges(edges, [(i % 5, (i + 1) % 5, 1) for i in range(50)])
    out1, out2, out3 = (tmp_path / n for n in ("a.txt", "b.txt", "c.txt"))
    monkeypatch.setenv("STREAMSKETCH_SEED", "123")
    run_cli("midas", "--input", str(edges), "--output", str(out1))
    run_cli("midas", "--input", str(edges), "--output", str(out2))
    assert out1.read_bytes() == out2.read_bytes()
    monkeypatch.setenv("STREAMSKETCH_SEED", "124")
    run_cli("midas", "--input", str(edges), "--output", str(out3), "--seed", "123")
    assert out1.read_bytes() == out3.read_bytes()  # explicit flag beats environment


def test_config_file_is_weaker_than_flags(tmp_path):
    edges = tmp_path / "edges.csv"
    write_edges(edges, [(1, 2, 1), (1, 2, 2)])
    config = tmp_path / "run.conf"
    config.write_text("buckets=64\nseed=5\n")
    out1, out2, out3 = (tmp_path / n for n in ("a.txt", "b.txt", "c.txt"))
    run_cli("midas", "--input", str(edges), "--output", str(out1), "--config", str(config))
    run_cli("midas", "--input", str(edges), "--output", str(out2), "--buckets", "64", "--seed", "5")
    run_cli(
        "midas", "--input", str(edges), "--output", str(out3),
        "--config", str(config), "--seed", "6",
    )
    assert out1.read_bytes() == out2.read_bytes()
    run_cli("midas", "--input", str(edges), "--output", str(out2), "--buckets", "64", "--seed", "6")
    assert out3.read_bytes() == out2.read_bytes()


def test_flag_epsilon_adds_flag_column(tmp_path):
    edges = tmp_path / "edges.csv"
    write_edges(edges, [(1, 2, t) for t in (1, 2, 3, 4)])
    out = tmp_path / "scores.txt"
    run_cli("midas", "--input", str(edges), "--output", str(out), "--flag-epsilon", "0.05")
    for line in out.read_text().splitlines():
        score, flag = line.split(",")
        float(score)
        assert flag in ("0", "1")


def test_eval_mode_emits_auc_json(tmp_path):
    edges = tmp_path / "edges.csv"
    labels = tmp_path / "labels.txt"
    out = tmp_path / "metrics.json"
    rows = [(1, 2, 1)] * 5 + [(3, 4, 2)] * 5
    write_edges(edges, rows)
    labels.write_text("".join("0\n" if i < 5 else "1\n" for i in range(10)))
    code = run_cli(
        "midas", "--input", str(edges), "--output", str(out),
        "--eval", "--labels", str(labels),
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert 0.0 <= payload["auc"] <= 1.0


def test_eval_subcommand(tmp_path, capsys):
    scores = tmp_path / "scores.txt"
    labels = tmp_path / "labels.txt"
    scores.write_text("1\n2\n3\n")
    labels.write_text("0\n0\n1\n")
    assert run_cli("eval", "--scores", str(scores), "--labels", str(labels)) == 0
    assert json.loads(capsys.readouterr().out) == {"auc": 1.0}


def test_eval_subcommand_rejects_misaligned_files(tmp_path, capsys):
    scores = tmp_path / "scores.txt"
    labels = tmp_path / "labels.txt"
    scores.write_text("1\n2\n")
    labels.write_text("0\n")
    assert run_cli("eval", "--scores", str(scores), "--labels", str(labels)) == 1


def test_synth_roundtrips_through_midas_eval(tmp_path):
    edges = tmp_path / "edges.csv"
    labels = tmp_path / "labels.txt"
    out = tmp_path / "metrics.json"
    assert run_cli(
        "synth", "--kind", "burst", "--seed", "3",
        "--out-edges", str(edges), "--out-labels", str(labels),
        "--n-background", "2000", "--n-burst", "100",
    ) == 0
    assert run_cli(
        "midas-r", "--input", str(edges), "--output", str(out),
        "--eval", "--labels", str(labels), "--seed", "3",
    ) == 0
    assert json.loads(out.read_text())["auc"] > 0.9


def test_anoedge_and_anograph_commands(tmp_path):
    edges = tmp_path / "edges.csv"
    write_edges(edges, [(i % 4, (i + 1) % 4, 1 + i // 20) for i in range(100)])
    out = tmp_path / "scores.txt"
    assert run_cli("anoedge-l", "--input", str(edges), "--output", str(out)) == 0
    assert len(out.read_text().splitlines()) == 100
    assert run_cli(
        "anograph", "--input", str(edges), "--output", str(out), "--window-ticks", "2"
    ) == 0
    assert len(out.read_text().splitlines()) == 3  # ticks 1..5 in spans of 2
    assert run_cli(
        "anograph-k", "--input", str(edges), "--output", str(out),
        "--window-ticks", "2", "--k", "3",
    ) == 0
    assert len(out.read_text().splitlines()) == 3


def test_mstream_command(tmp_path):
    records = tmp_path / "records.csv"
    out = tmp_path / "scores.txt"
    lines = ["cat:proto,num:size,tick"]
    for i in range(50):
        lines.append(f"p{i % 3},{(i % 7) * 10},{1 + i // 10}")
    records.write_text("".join(line + "\n" for line in lines))
    assert run_cli("mstream", "--input", str(records), "--output", str(out)) == 0
    assert len(out.read_text().splitlines()) == 50


def test_sess_command_applies_feedback(tmp_path):
    edges = tmp_path / "edges.csv"
    feedback = tmp_path / "feedback.txt"
    out1, out2 = tmp_path / "a.txt", tmp_path / "b.txt"
    write_edges(edges, [(1, 2, t // 4 + 1) for t in range(40)])
    feedback.write_text("")
    run_cli("sess", "--input", str(edges), "--feedback", str(feedback), "--output", str(out1))
    feedback.write_text("10,1\n")
    run_cli("sess", "--input", str(edges), "--feedback", str(feedback), "--output", str(out2))
    first = [float(x) for x in out1.read_text().splitlines()]
    second = [float(x) for x in out2.read_text().splitlines()]
    assert first[:11] == second[:11]  # feedback lands after edge 10 is scored
    assert second[11] > first[11]     # boosted current count raises the next score


def test_sess_node_feedback_needs_3d_layout(tmp_path, capsys):
    edges = tmp_path / "edges.csv"
    feedback = tmp_path / "feedback.txt"
    write_edges(edges, [(1, 2, 1)])
    feedback.write_text("node,1,0\n")
    assert run_cli("sess", "--input", str(edges), "--feedback", str(feedback)) == 1
    assert "3d" in capsys.readouterr().err
    out = tmp_path / "scores.txt"
    assert run_cli(
        "sess", "--input", str(edges), "--feedback", str(feedback),
        "--layout", "3d", "--output", str(out),
    ) == 0


def test_pomdp_command_reproduces_imitate_row(tmp_path):
    # Estimates default to the true rates when not supplied.
    out = tmp_path / "table.csv"
    assert run_cli(
        "pomdp", "--p", "0.001", "--q", "0.02", "--predictor", "imitate",
        "--phi", "0", "--steps", "1000000", "--seeds", "3", "--output", str(out),
    ) == 0
    header, row = out.read_text().splitlines()
    assert header == "q_hat,phi,mean_accuracy,std_accuracy"
    fields = row.split(",")
    assert abs(float(fields[2]) - 0.908) < 0.005


def test_pomdp_sweep_emits_grid(tmp_path):
    out = tmp_path / "table.csv"
    assert run_cli(
        "pomdp", "--p", "0.01", "--q", "0.1", "--predictor", "opt",
        "--wait", "5,10", "--phi", "0,0.01", "--steps", "20000",
        "--seeds", "2", "--jobs", "2", "--output", str(out),
    ) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "L,phi,mean_accuracy,std_accuracy"
    assert len(lines) == 5
