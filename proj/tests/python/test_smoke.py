import math

import pytest

pt = pytest.importorskip("proxtrace")


def test_path_loss():
    assert pt.expected_distance(-52) == 1.0
    assert math.isclose(pt.expected_distance(-78, "coarse"), 10.0, rel_tol=1e-9)
    assert math.isclose(pt.expected_distance(-75, "fine"), 10.0, rel_tol=1e-9)
    assert math.isclose(pt.expected_distance(-76.5, "midpoint"), 10.0, rel_tol=1e-9)
    assert math.isclose(pt.sample_rssi(10.0, "coarse"), -78.0)
    assert pt.attenuation(-54, -80) == 26


def test_quantize_and_decide():
    assert pt.quantize_distance(0.9) == 1.2
    assert pt.quantize_distance(2.4) == 3.0
    with pytest.raises(pt.DataError):
        pt.quantize_distance(2.0)
    assert pt.decide(1.8, 1.8)
    assert not pt.decide(3.0, 1.8)


def test_scoring():
    assert math.isclose(pt.ndcf(0.01, 0.14), 0.15)
    assert pt.aggregate_event([1.2, 3.0]) == 1.2
    key = "a\t1.2\tfine\nb\t4.5\tfine\nc\t1.8\tcoarse\nd\t4.5\tcoarse\n"
    out = "a\t1.2\nb\t1.2\nc\t1.8\nd\t4.5\n"
    report = pt.score(key, out)
    assert report["rows"][0]["p_fa"] == 1.0
    assert report["rows"][3]["ndcf"] == 0.0
    assert "average scores" in report["text"]
    with pytest.raises(pt.DataError):
        pt.score(key, "a\t1.2\n")


def test_event_parsing():
    text = (
        "#event_id=e1\n#grain=fine\n#tx_power=-54\n#carry=hand\n#pose=sitting\n"
        "0,0.000000,attitude,0.1,0.2,0.3\n"
        "0,0.000000,magnetic_field,20,0,-40\n"
        "0,0.000000,gyroscope,0,0,0\n"
        "0,0.000000,accelerometer,0,0,1\n"
        "0,0.250000,bluetooth,-60\n"
    )
    ev = pt.parse_event(text)
    assert ev["looks"] == 1 and ev["readings"] == 5
    assert ev["serialized"] == text
    rows = pt.feature_rows(text)
    assert len(rows) == 1
    assert rows[0]["attenuation"] == 6


def test_config_errors():
    with pytest.raises(pt.ConfigError):
        pt.config_text("", {"gen.colour": "red"})
    assert "net.epochs = 5" in pt.config_text("net.epochs = 5\n")


def test_pipeline_round_trip(tmp_path):
    overrides = {
        "paths.corpus": str(tmp_path / "corpus"),
        "paths.models": str(tmp_path / "models"),
        "paths.reports": str(tmp_path / "reports"),
        "gen.events_per_class": "3",
        "net.hidden_layers": "16",
        "net.epochs": "5",
        "gbc.n_estimators": "5",
    }
    assert "train" in pt.gen("", overrides)
    pt.train("", overrides)
    result = pt.predict("", overrides)
    assert result["failures"] == []
    key_lines = (tmp_path / "corpus" / "dev" / "key.tsv").read_text().splitlines()
    assert len(result["predictions"]) == len(key_lines) == 14
    assert {d for _, d in result["predictions"]} <= {1.2, 1.8, 3.0, 4.5}
    report = pt.score_files(str(tmp_path / "corpus" / "dev" / "key.tsv"), str(result["output"]))
    assert report["average_ndcf"] is not None
