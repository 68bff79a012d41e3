import math

import numpy as np
import pytest

import compprobe as cp


def test_cnf_round_trip_and_harvest():
    tree = cp.parse_tree("(S (NP-SBJ (PRP He)) (VP (VBD left)) (. .))")
    binary = cp.to_cnf(tree)
    assert binary.children[1].label == "S|<VP-.>"
    assert cp.collapse_cnf(binary) == tree
    assert binary.yield_() == ["He", "left", "."]

    records = cp.harvest("( (S (NP-SBJ (PRP He)) (VP (VBD left)) (. .)) )", source="a.mrg")
    assert [r.parent_text for r in records] == ["He left .", "left ."]
    assert records[0].source_doc == "a.mrg#1"
    assert records[0].phrase_id == cp.phrase_id(
        "He left .", "He", "left .", records[0].tree_type)


def test_parse_error_is_typed():
    with pytest.raises(cp.ParseError):
        cp.parse_tree("(NP (DT the)")
    assert issubclass(cp.ParseError, cp.Error)


def test_store_round_trip(tmp_path):
    vectors = np.arange(12, dtype=np.float32).reshape(3, 4)
    for fmt in ("binary", "jsonl"):
        path = tmp_path / f"store.{fmt}"
        cp.write_store(path, ["a", "b", "a b"], vectors, "toy", "AVG", fmt)
        summary = cp.verify_store(path)
        assert summary["format"] == fmt
        assert (summary["dim"], summary["count"]) == (4, 3)
        store = cp.read_store(path)
        assert len(store) == 3 and cp.text_key("a b") in store
        np.testing.assert_array_equal(store.get(cp.text_key("b")), vectors[1])
    assert (cp.verify_store(tmp_path / "store.binary")["checksum"]
            == cp.verify_store(tmp_path / "store.jsonl")["checksum"])


def test_affine_probe_recovers_coefficients(tmp_path):
    rng = np.random.default_rng(0)
    left = rng.normal(size=(600, 8)).astype(np.float32)
    right = rng.normal(size=(600, 8)).astype(np.float32)
    beta = rng.normal(size=8).astype(np.float32)
    parent = 3 * left + 5 * right + beta
    train, dev = slice(0, 500), slice(500, 600)
    probe = cp.train_probe("AFF", parent[train], left[train], right[train],
                           parent[dev], left[dev], right[dev], batch_size=50,
                           patience=20, seed=1)
    assert probe.kind == "AFF"
    assert probe.alpha1 == pytest.approx(3, abs=0.1)
    assert probe.alpha2 == pytest.approx(5, abs=0.1)
    predicted = cp.apply_probe(probe, left, right)
    assert cp.mean_cosine_distance(predicted, parent) < 1e-3

    path = tmp_path / "aff.ctp"
    cp.write_probe(probe, path)
    assert cp.read_probe(path) == probe


def test_cross_validation_and_control_ratio():
    rng = np.random.default_rng(1)
    left = rng.normal(size=(200, 6)).astype(np.float32)
    right = rng.normal(size=(200, 6)).astype(np.float32)
    parent = left + right
    folds, held_out = cp.cross_validate("ADD", parent, left, right, folds=5)
    assert len(folds) == 5 and held_out.shape == parent.shape
    assert all(f["test_mean_cosine"] == pytest.approx(1.0, abs=1e-6) for f in folds)
    assert cp.control_error_ratio(held_out, parent, seed=3) < 1e-3
    with pytest.raises(cp.DimError):
        cp.cross_validate("ADD", parent, left[:10], right)


def test_statistics():
    r = cp.spearman([1, 2, 3, 4, 5], [5, 6, 7, 8, 7])
    assert r["rho"] == pytest.approx(0.8207826816681233)
    assert cp.holm_bonferroni([0.01, 0.04, 0.03]) == pytest.approx([0.03, 0.06, 0.06])
    ratings = {("u1", "a"): 1, ("u1", "b"): 1, ("u2", "a"): 3, ("u2", "b"): 3}
    assert cp.krippendorff_alpha(ratings) == 1.0
    assert cp.curve_auc([0.01, 1.0], [0.8, 1.0]) == 90.0
    with pytest.raises(cp.UndefinedCorrelation):
        cp.spearman([1, 1, 1], [1, 2, 3])


def test_idiom_matching(tmp_path):
    index_path = tmp_path / "index.tsv"
    index_path.write_text(
        "devil's advocate\tJJ/dep/2 NN/pobj/0\t250\n"
        "baker's town\tJJ/dep/2 NN/pobj/0\t250\n"
        "red house\tJJ/dep/2 NN/pobj/0\t100\n"
        "broken\n")
    index, warnings = cp.load_index(index_path)
    assert len(index) == 3 and len(warnings) == 1
    result = cp.match_idiom("devil's advocate", index, k=1)
    assert result["pattern"] == "JJ/dep/2 NN/pobj/0"
    assert round(result["log_freq"], 3) == 2.398
    assert [m["surface"] for m in result["matches"]] == ["baker's town"]
    assert math.isclose(result["matches"][0]["delta"], 0.0)
