import math
import pathlib
import tempfile

import pytest

import infolm

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def test_measures():
    assert infolm.fisher_rao([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)
    assert infolm.fisher_rao([1.0, 0.0], [0.5, 0.5]) == pytest.approx(0.5, abs=1e-12)
    assert infolm.lp_distance([0.9, 0.1], [0.5, 0.5], "inf") == pytest.approx(0.4)
    kl = 0.9 * math.log(1.8) + 0.1 * math.log(0.2)
    assert infolm.kl_divergence([0.9, 0.1], [0.5, 0.5]) == pytest.approx(kl, rel=1e-12)
    assert infolm.evaluate_measure("ABDiv", [0.3, 0.7], [0.3, 0.7], alpha=3, beta=0.25) == pytest.approx(0.0, abs=1e-12)


def test_errors_map_to_python():
    with pytest.raises(infolm.InfoLMError):
        infolm.alpha_divergence([0.5, 0.5], [0.5, 0.5], 1.0)
    with pytest.raises(ValueError):
        infolm.temperature_softmax([1.0, 2.0], 0.0)
    with pytest.raises(infolm.InfoLMError):
        infolm.preset("missing")


def test_correlations():
    assert infolm.pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert infolm.kendall([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert infolm.spearman([1, 1, 1], [1, 2, 3]) is None
    w = infolm.williams_test(0.6, 0.6, 0.3, 20)
    assert w["p_value"] == 0.5 and w["t_statistic"] == 0.0


def test_presets_and_score():
    assert "summ-abs-ab" in infolm.preset_names()
    ab = infolm.preset("summ-abs-ab")
    assert (ab["alpha"], ab["beta"], ab["temperature"]) == (3.0, 0.25, 1.0)
    same = infolm.score("the cat sat", "the cat sat")
    assert abs(same["divergence"]) <= 1e-10
    diff = infolm.score("the cat sat", "a dog ran off", preset="summ-abs-ab")
    assert diff["similarity"] == -diff["divergence"] and diff["divergence"] > 0


def test_cli_golden():
    with tempfile.TemporaryDirectory() as out:
        code, _, err = infolm.run_cli([
            "score", "--dataset", str(FIXTURES / "golden_dataset.jsonl"),
            "--measure", "JeffreysKL", "--weighting", "uniform", "--out", out,
        ])
        assert code == 0, err
        produced = (pathlib.Path(out) / "scores.csv").read_bytes()
        assert produced == (FIXTURES / "golden_scores.csv").read_bytes()
