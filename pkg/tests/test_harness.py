import json
import pickle
import re

import numpy as np
import pytest

from motorpm import metrics as M
from motorpm.data import ConditionLabel, encode, parse_row
from motorpm.harness import (
    DEFAULT_CONFIGS,
    FORMAT_VERSION,
    MAGIC,
    MODEL_NAMES,
    ArchiveIntegrityError,
    ModelArchive,
    ModelResult,
    SchemaMismatchError,
    UnsupportedArchiveError,
    assemble_report,
    config_by_name,
    diagnose,
    load_archive,
    load_model,
    model_from_archive,
    parse_config,
    pct,
    render_report,
    run_benchmark,
    save_model,
    train_model,
)
from motorpm.synth import GeneratorConfig, generate

REFERENCE_CM = np.array([[76, 0, 0], [0, 72, 0], [15, 0, 47]])
EXAMPLE_ROWS = {
    "44,280,280,280,1.4,1.4,1.4,Normal": "H",
    "39,0,0,0,of,1.4,1.4,Normal": "B",
}


def reference_report():
    results = [ModelResult("CAT", 195 / 210, REFERENCE_CM),
               ModelResult("SVM-Sigmoid", 0.3619, np.diag([76, 0, 0]))]
    return assemble_report(results, {"n": 1050})


def test_config_set():
    assert len(DEFAULT_CONFIGS) == 11
    assert len(set(MODEL_NAMES)) == 11
    assert config_by_name("cat").params["rounds"] == 70
    assert config_by_name("RF").params["n_estimators"] == 200
    with pytest.raises(KeyError):
        config_by_name("GPT")


def test_parse_config_overrides():
    cfgs = parse_config("# comment\nCAT.rounds = 5\nSVM-RBF.gamma=0.5  # inline\n")
    assert config_by_name("CAT", cfgs).params["rounds"] == 5
    assert isinstance(config_by_name("CAT", cfgs).params["rounds"], int)
    assert config_by_name("SVM-RBF", cfgs).params["gamma"] == 0.5
    assert config_by_name("XGB", cfgs) == config_by_name("XGB")


@pytest.mark.parametrize("text", ["CAT.depthx = 3", "nonsense", "FOO.rounds = 2"])
def test_parse_config_errors(text):
    with pytest.raises((ValueError, KeyError)):
        parse_config(text)


def test_pct_half_up():
    assert str(pct(195 / 210)) == "92.86"
    assert str(pct(0.12345)) == "12.35"
    assert str(pct(0.5)) == "50.00"


def test_render_reference_text():
    text = render_report(reference_report(), "text")
    rows = {line.split()[0]: line.split()[1:] for line in text.splitlines()
            if line.split() and line.split()[0] in ("Healthy", "Broken", "Needs-PM")}
    assert rows["Healthy"] == ["76", "0", "0"]
    assert rows["Broken"] == ["0", "72", "0"]
    assert rows["Needs-PM"] == ["15", "0", "47"]
    assert "accuracy: 92.86" in text
    assert "precision_macro: 94.51" in text
    assert "recall_macro: 91.94" in text
    assert "f1_macro: 92.42" in text
    assert "Best model: CAT" in text


def test_text_and_json_agree():
    r = reference_report()
    text = render_report(r, "text")
    doc = json.loads(render_report(r, "machine-readable"))
    for k, v in doc["best"]["metrics_pct"].items():
        assert re.search(rf"^{k}: {v:.2f}$", text, re.M)
    for m in doc["models"]:
        assert re.search(rf"^\s+{re.escape(m['name'])}\s+{m['accuracy_pct']:.2f}$", text, re.M)
    assert doc["best"]["confusion_matrix"] == REFERENCE_CM.tolist()


def test_report_ordering_and_ties():
    cm = np.eye(3, dtype=int)
    r = assemble_report([ModelResult("b", 0.9, cm), ModelResult("a", 0.9, cm),
                         ModelResult("c", 0.5, cm)], {})
    assert [x.name for x in r.results] == ["c", "a", "b"]
    assert r.best == "a"


def test_empty_report_rejected():
    with pytest.raises(ValueError):
        assemble_report([], {})
    with pytest.raises(ValueError):
        render_report(None)


def test_benchmark_rejects_tiny_or_unlabeled():
    with pytest.raises(ValueError):
        run_benchmark(generate(GeneratorConfig(n=30, seed=1)))


# ---------------------------------------------------------------- archives

@pytest.fixture(scope="module")
def small_data():
    return generate(GeneratorConfig(n=300, seed=4))


@pytest.fixture(scope="module")
def probe():
    return encode(generate(GeneratorConfig(n=100, seed=77)))


@pytest.mark.parametrize("name", ["NB", "SVM-Poly", "KNN", "XGB", "LGBM", "LogReg"])
def test_archive_round_trip(tmp_path, small_data, probe, name):
    model = train_model(name, small_data)
    path = tmp_path / f"{name}.mpm"
    save_model(model, path)
    back = load_model(path)
    assert back.name == name
    np.testing.assert_array_equal(back.predict(probe), model.predict(probe))
    np.testing.assert_array_equal(back.predict_proba(probe), model.predict_proba(probe))


def test_archive_header(tmp_path, small_data):
    arc = save_model(train_model("NB", small_data), tmp_path / "nb.mpm")
    blob = (tmp_path / "nb.mpm").read_bytes()
    assert blob[:4] == MAGIC
    assert int.from_bytes(blob[4:6], "little") == FORMAT_VERSION
    assert ModelArchive.from_bytes(blob) == arc


def test_unknown_tag_and_version(tmp_path, small_data):
    save_model(train_model("NB", small_data), tmp_path / "nb.mpm")
    blob = (tmp_path / "nb.mpm").read_bytes()
    with pytest.raises(UnsupportedArchiveError):
        ModelArchive.from_bytes(b"XXXX" + blob[4:])
    with pytest.raises(UnsupportedArchiveError, match="version 9"):
        ModelArchive.from_bytes(blob[:4] + (9).to_bytes(2, "little") + blob[6:])


def test_truncated_archive(tmp_path, small_data):
    path = tmp_path / "nb.mpm"
    save_model(train_model("NB", small_data), path)
    blob = path.read_bytes()
    for cut in (1, 40, len(blob) - 3):
        path.write_bytes(blob[:-cut])
        with pytest.raises(ArchiveIntegrityError):
            load_archive(path)


def test_flipped_byte_detected():
    arc = ModelArchive(FORMAT_VERSION, "X", b"\0" * 16, b"payload")
    blob = bytearray(arc.to_bytes())
    blob[-40] ^= 1
    with pytest.raises(ArchiveIntegrityError):
        ModelArchive.from_bytes(bytes(blob))


def test_schema_mismatch(small_data):
    model = train_model("NB", small_data)
    arc = ModelArchive(FORMAT_VERSION, "NB", b"\x01" * 16, pickle.dumps(model, protocol=4))
    with pytest.raises(SchemaMismatchError, match="schema"):
        model_from_archive(arc)


# ---------------------------------------------------------------- diagnose

@pytest.mark.parametrize("row,label", sorted(EXAMPLE_ROWS.items()))
def test_diagnose_example_rows_every_model(benchmark_run, row, label):
    _, fitted, _ = benchmark_run
    reading = parse_row(row)
    assert reading.label is None
    for name, model in fitted.items():
        res = diagnose(model, reading)
        assert res["label"] == label, name
        assert sum(res["probabilities"].values()) == pytest.approx(1.0)


def test_diagnose_from_archive_path(tmp_path, small_data):
    path = tmp_path / "rf.mpm"
    save_model(train_model("RF", small_data), path)
    res = diagnose(str(path), parse_row("100,280,280,280,1.4,1.4,1.4,ABN,PM"))
    assert res["label"] == ConditionLabel.PM.name
    assert res["condition"] == "Needs-PM"


def test_benchmark_shared_split(benchmark_run):
    report, fitted, (train, test) = benchmark_run
    assert len(fitted) == 11
    assert report.fingerprint["n_train"] == len(train) == 840
    assert report.fingerprint["n_test"] == len(test) == 210
    for res in report.results:
        assert res.confusion.sum() == 210
        assert res.accuracy == pytest.approx(M.accuracy(res.confusion))
