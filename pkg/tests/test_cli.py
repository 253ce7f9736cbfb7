import json

import pandas as pd
import pytest

from harness.cli import EXIT_CONFIG, EXIT_DEPENDENCY, EXIT_IO, cli

TASK = """
[task]
kind = "classify"
classes = 4
feature_dim = 3
separation = 6.0
noise = 0.5
"""

TRAIN = """
[train]
optimizer = "adam"
lr = 0.01
loss = "cross-entropy"
epochs = 2
bc_batch_size = 8
episodes = 10
batch_size = 4
buffer_capacity = 100
target_update = 5
log_every = 5
"""


def _write_run_file(tmp_path, body, name="run.toml"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return str(path)


def _header(out, name="toy", seed=0):
    return f'[run]\nname = "{name}"\nseed = {seed}\nout = "{out.as_posix()}"\n'


def _invoke(runner, command, config, *extra):
    return runner.invoke(cli, [command, "--config", config, *extra])


def _train_base(runner, tmp_path, run_dir):
    config = _write_run_file(tmp_path, _header(run_dir) + TASK + "[data]\ncount = 40\n" + TRAIN, "bc.toml")
    result = _invoke(runner, "train-bc", config)
    assert result.exit_code == 0, result.output
    return run_dir / "checkpoints" / "toy-bc.json"


def _report_frame(run_dir, suffix):
    (csv_path,) = sorted((run_dir / "reports").glob(f"*-{suffix}.csv"))
    return pd.read_csv(csv_path)


# ----------------------------------------------------------------------
# Configuration errors
# ----------------------------------------------------------------------
def test_misspelled_task_key_is_named(runner, tmp_path, run_dir, caplog):
    body = _header(run_dir) + '[task]\nkind = "classify"\nclases = 5\n'
    result = _invoke(runner, "gen-data", _write_run_file(tmp_path, body))
    assert result.exit_code == EXIT_CONFIG
    assert "task.clases" in caplog.text


def test_unknown_section_and_malformed_toml(runner, tmp_path, run_dir):
    body = _header(run_dir) + "[evaluation]\nepisodes = 3\n"
    assert _invoke(runner, "eval", _write_run_file(tmp_path, body)).exit_code == EXIT_CONFIG
    broken = _write_run_file(tmp_path, "[run\nseed = 0\n", "broken.toml")
    assert _invoke(runner, "eval", broken).exit_code == EXIT_CONFIG
    assert _invoke(runner, "eval", str(tmp_path / "missing.toml")).exit_code == EXIT_CONFIG


def test_train_seed_is_rejected(runner, tmp_path, run_dir):
    body = _header(run_dir) + TASK + "[train]\nseed = 3\n"
    result = _invoke(runner, "train-bc", _write_run_file(tmp_path, body))
    assert result.exit_code == EXIT_CONFIG


# ----------------------------------------------------------------------
# gen-data
# ----------------------------------------------------------------------
def test_gen_data_is_deterministic(runner, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        body = _header(out, seed=11) + TASK + "[data]\ncount = 25\n"
        result = _invoke(runner, "gen-data", _write_run_file(tmp_path, body))
        assert result.exit_code == 0, result.output
    a = (first / "data" / "toy.json").read_bytes()
    b = (second / "data" / "toy.json").read_bytes()
    assert a == b
    assert json.loads(a)["count"] == 25


def test_seed_flag_changes_the_data(runner, tmp_path, run_dir):
    config = _write_run_file(tmp_path, _header(run_dir) + TASK + "[data]\ncount = 5\n")
    assert _invoke(runner, "gen-data", config, "--seed", "1").exit_code == 0
    one = (run_dir / "data" / "toy.json").read_bytes()
    assert _invoke(runner, "gen-data", config, "--seed", "2").exit_code == 0
    assert (run_dir / "data" / "toy.json").read_bytes() != one


# ----------------------------------------------------------------------
# Training
# ----------------------------------------------------------------------
def test_train_fa_without_base_checkpoint(runner, tmp_path, run_dir):
    body = _header(run_dir) + TASK + TRAIN
    assert _invoke(runner, "train-fa", _write_run_file(tmp_path, body)).exit_code == EXIT_DEPENDENCY
    missing = (tmp_path / "nowhere.json").as_posix()
    body += f'[policy]\nbase_checkpoint = "{missing}"\n'
    assert _invoke(runner, "train-fa", _write_run_file(tmp_path, body)).exit_code == EXIT_DEPENDENCY


def test_bc_then_failure_aware_training(runner, tmp_path, run_dir):
    base = _train_base(runner, tmp_path, run_dir)
    checkpoint = json.loads(base.read_text(encoding="utf-8"))
    assert checkpoint["architecture"]["architecture"] == "base"
    assert len(checkpoint["metrics"]["losses"]) == 2

    body = _header(run_dir) + TASK + TRAIN + f'[policy]\nname = "FMP-1"\nbase_checkpoint = "{base.as_posix()}"\n'
    result = _invoke(runner, "train-fa", _write_run_file(tmp_path, body, "fa.toml"))
    assert result.exit_code == 0, result.output
    trained = json.loads((run_dir / "checkpoints" / "toy-FMP-1.json").read_text(encoding="utf-8"))
    assert set(trained["shared"]) == {blob["name"] for blob in trained["params"] if not blob["trainable"]}
    assert (run_dir / "logs").is_dir()


def test_train_fa_rejects_untrainable_policy(runner, tmp_path, run_dir):
    base = _train_base(runner, tmp_path, run_dir)
    body = _header(run_dir) + TASK + TRAIN + f'[policy]\nname = "SP"\nbase_checkpoint = "{base.as_posix()}"\n'
    assert _invoke(runner, "train-fa", _write_run_file(tmp_path, body, "fa.toml")).exit_code == EXIT_CONFIG


# ----------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------
def test_eval_baselines(runner, tmp_path, run_dir):
    base = _train_base(runner, tmp_path, run_dir)
    body = (
        _header(run_dir)
        + TASK
        + f'[policy]\nnames = ["RE", "LPRE", "SP"]\nbase_checkpoint = "{base.as_posix()}"\n'
        + "[eval]\nepisodes = 40\nseeds = [0, 1]\nmax_trials = 4\n"
    )
    result = _invoke(runner, "eval", _write_run_file(tmp_path, body, "eval.toml"))
    assert result.exit_code == 0, result.output
    frame = _report_frame(run_dir, "eval")
    assert list(frame["policy"]) == ["RE", "RE", "LPRE", "LPRE", "SP", "SP"]
    assert list(frame["seed"]) == [0, 1, 0, 1, 0, 1]
    # four trials over four classes always succeed
    assert (frame["tsr"] == 1.0).all()


def test_eval_seed_flag_replaces_seed_list(runner, tmp_path, run_dir):
    body = _header(run_dir) + TASK + '[policy]\nnames = ["RE"]\n[eval]\nepisodes = 10\nseeds = [0, 1, 2]\n'
    result = _invoke(runner, "eval", _write_run_file(tmp_path, body), "--seed", "5")
    assert result.exit_code == 0, result.output
    assert list(_report_frame(run_dir, "eval")["seed"]) == [5]


def test_truncated_checkpoint_exit_code(runner, tmp_path, run_dir):
    base = _train_base(runner, tmp_path, run_dir)
    text = base.read_text(encoding="utf-8")
    base.write_text(text[: len(text) // 3], encoding="utf-8")
    body = _header(run_dir) + TASK + f'[policy]\nnames = ["SP"]\nbase_checkpoint = "{base.as_posix()}"\n'
    assert _invoke(runner, "eval", _write_run_file(tmp_path, body, "eval.toml")).exit_code == EXIT_IO


def test_checkpoint_entry_without_shape_exit_code(runner, tmp_path, run_dir):
    base = _train_base(runner, tmp_path, run_dir)
    payload = json.loads(base.read_text(encoding="utf-8"))
    del payload["params"][0]["shape"]
    base.write_text(json.dumps(payload), encoding="utf-8")
    body = _header(run_dir) + TASK + f'[policy]\nnames = ["SP"]\nbase_checkpoint = "{base.as_posix()}"\n'
    assert _invoke(runner, "eval", _write_run_file(tmp_path, body, "eval.toml")).exit_code == EXIT_IO


def test_eval_rejects_checkpoint_for_another_task(runner, tmp_path, run_dir):
    base = _train_base(runner, tmp_path, run_dir)
    other = TASK.replace("classes = 4\nfeature_dim = 3", "classes = 6\nfeature_dim = 5")
    body = _header(run_dir) + other + f'[policy]\nnames = ["SP"]\nbase_checkpoint = "{base.as_posix()}"\n'
    result = _invoke(runner, "eval", _write_run_file(tmp_path, body, "eval.toml"))
    assert result.exit_code == EXIT_DEPENDENCY


# ----------------------------------------------------------------------
# Sweeps and plots
# ----------------------------------------------------------------------
SWEEP = """
[policy]
names = ["RE"]
[eval]
episodes = 20
seeds = [0, 1]
max_trials = 2
[sweep]
axis = "task.classes"
values = [3, 4, 6]
[plot]
format = "html"
metrics = ["tsr", "tns"]
"""


def test_sweep_rows_and_labels(runner, tmp_path, run_dir):
    result = _invoke(runner, "sweep", _write_run_file(tmp_path, _header(run_dir) + TASK + SWEEP))
    assert result.exit_code == 0, result.output
    frame = _report_frame(run_dir, "sweep")
    assert len(frame) == 3 * 2
    assert list(dict.fromkeys(frame["task"])) == ["classes=3", "classes=4", "classes=6"]


def test_sweep_rejects_unknown_axis(runner, tmp_path, run_dir):
    body = _header(run_dir) + TASK + SWEEP.replace("task.classes", "task.colours")
    assert _invoke(runner, "sweep", _write_run_file(tmp_path, body)).exit_code == EXIT_CONFIG


def test_plot_from_report_csv(runner, tmp_path, run_dir):
    config = _write_run_file(tmp_path, _header(run_dir) + TASK + SWEEP)
    assert _invoke(runner, "sweep", config).exit_code == 0
    (csv_path,) = sorted((run_dir / "reports").glob("*-sweep.csv"))
    result = _invoke(runner, "plot", config, "--csv", str(csv_path))
    assert result.exit_code == 0, result.output
    written = sorted(path.name for path in (run_dir / "plots").iterdir())
    assert written == [f"{csv_path.stem}-tns.html", f"{csv_path.stem}-tsr.html"]


def test_plot_without_a_report(runner, tmp_path, run_dir):
    config = _write_run_file(tmp_path, _header(run_dir) + TASK)
    assert _invoke(runner, "plot", config).exit_code == EXIT_DEPENDENCY
    assert _invoke(runner, "plot", config, "--csv", str(tmp_path / "none.csv")).exit_code == EXIT_DEPENDENCY


def test_plot_every_report_of_the_run(runner, tmp_path, run_dir):
    body = _header(run_dir) + TASK + '[policy]\nnames = ["RE"]\n[eval]\nepisodes = 10\n[plot]\nformat = "html"\n'
    config = _write_run_file(tmp_path, body)
    assert _invoke(runner, "eval", config).exit_code == 0
    (run_dir / "reports" / "broken.csv").write_text("policy,tsr\nRE,0.5\n", encoding="utf-8")
    result = _invoke(runner, "plot", config)
    assert result.exit_code == 0, result.output
    written = sorted(path.name for path in (run_dir / "plots").iterdir())
    assert written == ["toy-eval-tns.html", "toy-eval-tsr.html"]


# ----------------------------------------------------------------------
# Case studies
# ----------------------------------------------------------------------
def test_trace_writes_decisions_and_figures(runner, tmp_path, run_dir):
    base = _train_base(runner, tmp_path, run_dir)
    body = (
        _header(run_dir)
        + TASK
        + f'[policy]\nnames = ["SP", "LPRE"]\nbase_checkpoint = "{base.as_posix()}"\n'
        + '[eval]\nmax_trials = 4\n[cases]\nepisodes = [0, 3]\n[plot]\nformat = "html"\n'
    )
    config = _write_run_file(tmp_path, body, "trace.toml")
    result = _invoke(runner, "trace", config)
    assert result.exit_code == 0, result.output
    assert "episode 3 SP:" in result.output

    log_path = run_dir / "logs" / "toy-cases.json"
    records = json.loads(log_path.read_text(encoding="utf-8"))["logs"]
    cases = [record for record in records if record["type"] == "case_study"]
    assert [(case["episode"], case["policy"]) for case in cases] == [(0, "SP"), (0, "LPRE"), (3, "SP"), (3, "LPRE")]
    for case in cases:
        for trial in case["trials"]:
            assert sum(trial["distribution"]) == pytest.approx(1.0)
    assert sorted(path.name for path in (run_dir / "plots").iterdir()) == [
        "toy-cases-episode0.html",
        "toy-cases-episode3.html",
    ]

    redraw = _invoke(runner, "plot", config, "--cases", str(log_path))
    assert redraw.exit_code == 0, redraw.output


def test_trace_rejects_negative_episode(runner, tmp_path, run_dir):
    body = _header(run_dir) + TASK + '[policy]\nnames = ["RE"]\n[cases]\nepisodes = [-1]\n'
    assert _invoke(runner, "trace", _write_run_file(tmp_path, body)).exit_code == EXIT_CONFIG


# ----------------------------------------------------------------------
# Reproducibility
# ----------------------------------------------------------------------
def test_rerun_writes_identical_checkpoint_and_reports(runner, tmp_path, run_dir):
    body = (
        _header(run_dir)
        + TASK
        + '[policy]\nnames = ["RE", "LPRE", "SP"]\n'
        + f'base_checkpoint = "{(run_dir / "checkpoints" / "toy-bc.json").as_posix()}"\n'
        + "[eval]\nepisodes = 30\nseeds = [0, 1]\nmax_trials = 3\n"
    )
    config = _write_run_file(tmp_path, body, "eval.toml")
    artifacts = [
        run_dir / "checkpoints" / "toy-bc.json",
        run_dir / "reports" / "toy-eval.csv",
        run_dir / "reports" / "toy-eval.json",
    ]

    snapshots = []
    for _ in range(2):
        _train_base(runner, tmp_path, run_dir)
        result = _invoke(runner, "eval", config, "--threads", "2")
        assert result.exit_code == 0, result.output
        snapshots.append([path.read_bytes() for path in artifacts])
    assert snapshots[0] == snapshots[1]


@pytest.mark.parametrize("command", ["gen-data", "train-bc", "train-fa", "eval", "sweep", "trace", "plot"])
def test_every_command_requires_a_run_file(runner, command):
    result = runner.invoke(cli, [command])
    assert result.exit_code == 2
