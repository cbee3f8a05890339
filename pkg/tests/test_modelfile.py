import json
import pathlib

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tnseq import modelfile as mf
from tnseq.errors import ModelFileError
from tnseq.gallery import appendix_hmm, oscillating_noom, random_model
from tnseq.models import MpsChain

SCHEMA = json.loads((pathlib.Path(__file__).parents[1] / "docs" / "model_file.schema.json").read_text())
KINDS = ["hmm", "psr", "umps", "ubm", "noom", "hqmm", "ulps", "pomdp", "io_hqmm", "qomdp"]


@pytest.mark.parametrize("kind", KINDS)
@given(seed=st.integers(0, 2**32 - 1))
def test_round_trip_is_bit_exact(kind, seed):
    m = random_model(kind, 2, 2, seed)
    text = mf.dumps(m)
    back = mf.loads(text)
    assert mf.models_identical(m, back)
    assert mf.dumps(back) == text


@pytest.mark.parametrize("kind", KINDS)
def test_written_files_match_schema(kind):
    jsonschema.validate(json.loads(mf.dumps(random_model(kind, 2, 2, 0))), SCHEMA)


def test_gallery_round_trip():
    for m in (appendix_hmm().model, oscillating_noom().model):
        assert mf.models_identical(m, mf.loads(mf.dumps(m)))


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=2, max_size=2))
def test_extreme_doubles_survive(values):
    chain = MpsChain((np.array(values, dtype=float).reshape(2, 1, 1),))
    back = mf.loads(mf.dumps(chain))
    assert back.sites[0].tobytes() == chain.sites[0].tobytes()


def test_signed_zero_survives():
    chain = MpsChain((np.array([-0.0, 0.0]).reshape(2, 1, 1) * (1 - 1j),))
    back = mf.loads(mf.dumps(chain))
    assert back.sites[0].tobytes() == chain.sites[0].tobytes()


def test_discriminator_comes_first(fixtures):
    for path in fixtures.glob("*.json"):
        assert path.read_text().splitlines()[1].strip().startswith('"model_type"')


def test_fixtures_parse_and_match_schema(fixtures):
    names = sorted(p.stem for p in fixtures.glob("*.json"))
    assert names == ["appendix_hmm", "random_noom", "random_qomdp"]
    for path in fixtures.glob("*.json"):
        jsonschema.validate(json.loads(path.read_text()), SCHEMA)
        assert mf.dumps(mf.load(path)) == path.read_text()


def test_appendix_fixture_matches_gallery(fixtures):
    assert mf.models_identical(mf.load(fixtures / "appendix_hmm.json"), appendix_hmm().model)


@pytest.mark.parametrize("text, fragment", [
    ("not json", "not valid JSON"),
    ("[]", "top level"),
    ('{"model_type": "zzz"}', "unknown model_type"),
    ('{"model_type": "hmm", "format_version": "9"}', "format_version"),
    ('{"model_type": "hmm", "format_version": "1", "params": {}}', "missing parameters"),
])
def test_malformed_files(text, fragment):
    with pytest.raises(ModelFileError, match=fragment):
        mf.loads(text)


def test_inconsistent_header():
    doc = json.loads(mf.dumps(random_model("hmm", 2, 2, 0)))
    doc["obs_count"] = 3
    with pytest.raises(ModelFileError, match="obs_count"):
        mf.loads(json.dumps(doc))
    doc["obs_count"] = 2
    doc["params"]["x0"] = [[1.0], [2.0]]
    with pytest.raises(ModelFileError, match="re, im"):
        mf.loads(json.dumps(doc))


def test_non_finite_values_rejected():
    text = mf.dumps(MpsChain((np.ones((2, 1, 1)),))).replace("1.0", "1e999", 1)
    with pytest.raises(ModelFileError, match="finite"):
        mf.loads(text)
