import shutil
import subprocess

import pytest

from stratshield.cli import build_parser, main

from synthdata import linear_numeric, rng_for


def write_csv(path, n=60, k=3, seed=0, holes=0.0):
    """Dump a synthetic dataset to a headed CSV the CLI can load."""
    data = linear_numeric(n=n, k=k, eps=holes, seed=seed)
    names = [f.name for f in data.schema.features]
    lines = [",".join(names + ["label"])]
    for x, y in data.rows:
        cells = ["?" if v is None else f"{v:.6f}" for v in x]
        lines.append(",".join(cells + [str(y)]))
    path.write_text("\n".join(lines) + "\n")
    return path


def test_example1_prints_accept_set_and_loss(capsys):
    assert main(["example1"]) == 0
    out = capsys.readouterr().out
    assert "(h,h), (h,l), (h,*)" in out
    assert "11/40" in out
    assert "0.275" in out
    assert "brute force agrees: True" in out


def test_train_evaluate_audit_round_trip(tmp_path, capsys):
    csv_path = write_csv(tmp_path / "d.csv", seed=41)
    model_path = tmp_path / "m.txt"
    assert main([
        "train", "--dataset", str(csv_path), "--classifier", "iclr",
        "--out", str(model_path),
    ]) == 0
    assert model_path.exists()
    capsys.readouterr()

    assert main(["evaluate", "--dataset", str(csv_path), "--model", str(model_path)]) == 0
    out = capsys.readouterr().out
    assert "rows 60" in out
    assert "truthful_flag True" in out
    tru = float(out.split("truthful_accuracy ")[1].split()[0])
    strat = float(out.split("strategic_accuracy ")[1].split()[0])
    assert tru == strat

    assert main(["audit", "--dataset", str(csv_path), "--model", str(model_path)]) == 0
    out = capsys.readouterr().out
    assert "violations 0" in out
    assert out.strip().endswith("ok")


def test_train_writes_model_to_stdout(tmp_path, capsys):
    csv_path = write_csv(tmp_path / "d.csv", seed=42)
    assert main(["train", "--dataset", str(csv_path), "--classifier", "lr"]) == 0
    out = capsys.readouterr().out
    assert "intercept" in out


def test_audit_flags_plain_lr(tmp_path, capsys):
    # a plain LR fit on informative features it is free to weight negatively
    rng = rng_for(43)
    lines = ["a,b,label"]
    for _ in range(120):
        a = float(rng.random())
        b = float(rng.random())
        y = int(a - b > 0.0)
        if rng.random() < 0.25:
            lines.append(f"{a:.6f},?,{y}")
        else:
            lines.append(f"{a:.6f},{b:.6f},{y}")
    csv_path = tmp_path / "d.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    model_path = tmp_path / "m.txt"
    assert main([
        "train", "--dataset", str(csv_path), "--classifier", "lr",
        "--out", str(model_path),
    ]) == 0
    capsys.readouterr()
    assert main(["audit", "--dataset", str(csv_path), "--model", str(model_path)]) == 0
    out = capsys.readouterr().out
    assert "NOT TRUTHFUL" in out
    assert "gain by withholding" in out


def test_experiment_writes_outputs(tmp_path, capsys):
    csv_path = write_csv(tmp_path / "d.csv", seed=44, holes=0.1)
    out = tmp_path / "res"
    assert main([
        "experiment", "--dataset", str(csv_path), "--classifiers", "iclr,maj",
        "--repeats", "1", "--threads", "1", "--out", str(out),
    ]) == 0
    printed = capsys.readouterr().out
    assert "iclr" in printed and "maj" in printed
    assert (tmp_path / "res.csv").exists()
    assert (tmp_path / "res.txt").exists()
    assert (tmp_path / "res.png").exists()
    header = (tmp_path / "res.csv").read_text().splitlines()[0]
    assert header.startswith("classifier,")


def test_experiment_no_figure_skips_png(tmp_path, capsys):
    csv_path = write_csv(tmp_path / "d.csv", seed=45)
    out = tmp_path / "res"
    assert main([
        "experiment", "--dataset", str(csv_path), "--classifiers", "maj",
        "--repeats", "1", "--threads", "1", "--out", str(out), "--no-figure",
    ]) == 0
    assert (tmp_path / "res.csv").exists()
    assert not (tmp_path / "res.png").exists()


def test_experiment_unknown_classifier_fails(tmp_path, capsys):
    csv_path = write_csv(tmp_path / "d.csv", seed=46)
    assert main([
        "experiment", "--dataset", str(csv_path), "--classifiers", "svm",
        "--repeats", "1",
    ]) == 1
    assert "svm" in capsys.readouterr().err


def test_experiment_missing_dataset_reports_load_stage(tmp_path, capsys):
    assert main([
        "experiment", "--dataset", str(tmp_path / "nope.csv"), "--repeats", "1",
    ]) == 1
    assert "error [load]" in capsys.readouterr().err


def test_evaluate_garbage_model_fails(tmp_path, capsys):
    csv_path = write_csv(tmp_path / "d.csv", seed=47)
    bad = tmp_path / "m.txt"
    bad.write_text("not a model\n")
    assert main(["evaluate", "--dataset", str(csv_path), "--model", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_parser_rejects_missing_subcommand(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_console_script_installed():
    exe = shutil.which("stratshield")
    if exe is None:
        pytest.skip("package not installed with scripts on PATH")
    proc = subprocess.run([exe, "example1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "11/40" in proc.stdout
