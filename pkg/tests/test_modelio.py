import json
from fractions import Fraction

import numpy as np
import pytest

import cycleflow as cf
from cycleflow.errors import (
    FileAccessError,
    InvariantError,
    ModelParseError,
    UnknownKindError,
)

FINITE_DOC = {
    "kind": "finite_system",
    "map": [1, 0, 3, 2],
    "weights": [0.3, 0.3, 0.2, 0.2],
    "invertible": True,
}

MARKOV_DOC = {
    "kind": "markov_chain",
    "P": [[2 / 3, 1 / 3], [1 / 4, 3 / 4]],
}

HARRIS_DOC = {
    "kind": "harris_discrete",
    "K": [[0.5, 0.5, 0.0], [0.2, 0.5, 0.3], [0.1, 0.4, 0.5]],
    "R": [0, 1],
    "ell": 1,
}


def write(tmp_path, doc, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ---------------------------------------------------------------------------
# loading


def test_load_finite_system(tmp_path):
    model = cf.load_model(write(tmp_path, FINITE_DOC))
    assert isinstance(model, cf.FiniteSystem)
    assert model.kind == "finite_system"
    assert model.source == "model.json"
    assert list(model.mapping) == [1, 0, 3, 2]
    assert model.invertible


def test_load_rational_weights(tmp_path):
    doc = dict(FINITE_DOC, weights={"num": [1, 1, 1], "den": [2, 3, 6]},
               map=[1, 2, 0])
    model = cf.load_model(write(tmp_path, doc))
    assert model.exact
    assert model.weights[1] == Fraction(1, 3)
    assert model.total_mass == 1


def test_load_markov_chain(tmp_path):
    model = cf.load_model(write(tmp_path, MARKOV_DOC))
    assert isinstance(model, cf.StochasticMatrix)
    assert model.n == 2
    assert model.states == [0, 1]


def test_load_harris_fits_when_unspecified(tmp_path):
    model = cf.load_model(write(tmp_path, HARRIS_DOC))
    assert isinstance(model, cf.HarrisModel)
    assert model.fitted_fields == ("lambda", "epsilon")
    assert model.epsilon == pytest.approx(0.7, abs=1e-12)
    assert np.abs(model.lam - [2 / 7, 5 / 7, 0.0]).max() <= 1e-12


def test_load_harris_honours_given_split(tmp_path):
    doc = dict(HARRIS_DOC, epsilon=0.5, **{"lambda": [2 / 7, 5 / 7, 0.0]})
    model = cf.load_model(write(tmp_path, doc))
    assert model.fitted_fields == ()
    assert model.epsilon == 0.5


def test_loader_renormalises_sloppy_rows(tmp_path):
    doc = {"kind": "markov_chain",
           "P": [[0.5, 0.5 + 4e-10], [0.25, 0.75]]}
    model = cf.load_model(write(tmp_path, doc))
    assert np.abs(model.matrix.sum(axis=1) - 1.0).max() <= 1e-15


def test_state_labels_carried(tmp_path):
    doc = dict(MARKOV_DOC, states=["sunny", "rainy"])
    model = cf.load_model(write(tmp_path, doc))
    assert model.states == ["sunny", "rainy"]


# ---------------------------------------------------------------------------
# error paths


def test_missing_file_is_access_error(tmp_path):
    with pytest.raises(FileAccessError):
        cf.load_model(str(tmp_path / "absent.json"))


def test_bad_json_is_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope")
    with pytest.raises(ModelParseError):
        cf.load_model(str(path))


def test_unknown_kind(tmp_path):
    with pytest.raises(UnknownKindError):
        cf.load_model(write(tmp_path, {"kind": "continuous_flow"}))


def test_non_object_document():
    with pytest.raises(InvariantError) as err:
        cf.parse_model([1, 2, 3])
    assert err.value.field == "$"


def test_row_sum_error_names_the_row(tmp_path):
    doc = {"kind": "markov_chain", "P": [[0.5, 0.4], [0.25, 0.75]]}
    with pytest.raises(InvariantError) as err:
        cf.load_model(write(tmp_path, doc))
    assert err.value.field == "P[0]"
    assert "0.9" in str(err.value)


def test_ragged_matrix_names_the_row(tmp_path):
    doc = {"kind": "markov_chain", "P": [[1.0], [0.5, 0.5]]}
    with pytest.raises(InvariantError) as err:
        cf.load_model(write(tmp_path, doc))
    assert err.value.field.startswith("P[")


def test_missing_field_is_named(tmp_path):
    doc = {"kind": "finite_system", "map": [0]}
    with pytest.raises(InvariantError) as err:
        cf.load_model(write(tmp_path, doc))
    assert err.value.field == "weights"


def test_non_integer_map_rejected(tmp_path):
    doc = dict(FINITE_DOC, map=[1.0, 0.0, 3.0, 2.0])
    with pytest.raises(InvariantError) as err:
        cf.load_model(write(tmp_path, doc))
    assert err.value.field == "map"


def test_bool_is_not_a_number(tmp_path):
    doc = dict(FINITE_DOC, weights=[True, 0.3, 0.2, 0.2])
    with pytest.raises(InvariantError) as err:
        cf.load_model(write(tmp_path, doc))
    assert err.value.field == "weights"


def test_rational_weights_validated(tmp_path):
    doc = dict(FINITE_DOC, weights={"num": [1, 1], "den": [2]}, map=[1, 0])
    with pytest.raises(InvariantError):
        cf.load_model(write(tmp_path, doc))
    doc = dict(FINITE_DOC, weights={"num": [1, 1], "den": [2, 0]}, map=[1, 0])
    with pytest.raises(InvariantError) as err:
        cf.load_model(write(tmp_path, doc))
    assert err.value.field == "weights.den"


def test_states_length_mismatch(tmp_path):
    doc = dict(MARKOV_DOC, states=["only-one"])
    with pytest.raises(InvariantError) as err:
        cf.load_model(write(tmp_path, doc))
    assert err.value.field == "states"


def test_bad_ell_rejected(tmp_path):
    for ell in (0, True, "two"):
        doc = dict(HARRIS_DOC, ell=ell)
        with pytest.raises(InvariantError) as err:
            cf.load_model(write(tmp_path, doc))
        assert err.value.field == "ell"


# ---------------------------------------------------------------------------
# documents and hashing


def test_document_round_trip_finite(tmp_path):
    model = cf.load_model(write(tmp_path, FINITE_DOC))
    doc = cf.model_document(model)
    again = cf.parse_model(doc)
    assert np.array_equal(again.mapping, model.mapping)
    assert np.array_equal(again.weights, model.weights)
    assert cf.model_hash(again) == cf.model_hash(model)


def test_document_round_trip_rational(tmp_path):
    doc = dict(FINITE_DOC, weights={"num": [1, 2, 3], "den": [6, 6, 6]},
               map=[1, 2, 0])
    model = cf.load_model(write(tmp_path, doc))
    out = cf.model_document(model)
    assert out["weights"] == {"num": [1, 1, 1], "den": [6, 3, 2]}
    assert cf.parse_model(out).weights[2] == Fraction(1, 2)


def test_document_records_fitted_split(tmp_path):
    model = cf.load_model(write(tmp_path, HARRIS_DOC))
    doc = cf.model_document(model)
    assert doc["epsilon"] == pytest.approx(0.7, abs=1e-12)
    assert doc["R"] == [0, 1]
    again = cf.parse_model(doc)
    assert again.fitted_fields == ()
    assert cf.model_hash(again) == cf.model_hash(model)


def test_hash_is_content_sensitive(tmp_path):
    a = cf.load_model(write(tmp_path, MARKOV_DOC, "a.json"))
    b = cf.load_model(write(tmp_path, MARKOV_DOC, "b.json"))
    assert cf.model_hash(a) == cf.model_hash(b)  # names do not matter
    c = cf.parse_model({"kind": "markov_chain", "P": [[0.6, 0.4], [0.25, 0.75]]})
    assert cf.model_hash(c) != cf.model_hash(a)


def test_hash_is_stable_across_runs(tmp_path):
    model = cf.load_model(write(tmp_path, FINITE_DOC))
    assert cf.model_hash(model) == cf.model_hash(model)
    assert len(cf.model_hash(model)) == 64


def test_model_size_all_kinds(tmp_path):
    assert cf.model_size(cf.load_model(write(tmp_path, FINITE_DOC))) == 4
    assert cf.model_size(cf.load_model(write(tmp_path, MARKOV_DOC))) == 2
    assert cf.model_size(cf.load_model(write(tmp_path, HARRIS_DOC))) == 3


def test_document_rejects_foreign_objects():
    with pytest.raises(UnknownKindError):
        cf.model_document({"not": "a model"})
