import json

import pytest

from werfair import Corpus, GroupFactor, LoadOptions, Utterance, load_corpus, summarize
from werfair.errors import (
    CorpusError,
    MissingLevelError,
    MixedSchemaError,
    NonNumericCovariateError,
    SpeakerGroupConflictError,
    UnknownGroupError,
)


def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return str(path)


TEXT_RECORDS = [
    {"id": "u1", "speaker": "s1", "group": "male", "ref": "play music", "hyp": "play music"},
    {"id": "u2", "speaker": "s2", "group": "female", "ref": "call mom now", "hyp": "call mom"},
]


def test_load_text_records(tmp_path):
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", TEXT_RECORDS))
    assert len(corpus) == 2
    by_id = {u.id: u for u in corpus.utterances}
    assert by_id["u1"].errors == 0 and by_id["u1"].ref_words == 2
    assert by_id["u2"].errors == 1 and by_id["u2"].ref_words == 3


def test_load_count_records(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "errors": 3, "words": 10},
        {"id": "b", "speaker": "s2", "group": "g2", "errors": 0, "words": 4},
    ]
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", records))
    by_id = {u.id: u for u in corpus.utterances}
    assert by_id["a"].errors == 3 and by_id["a"].ref_words == 10


def test_empty_reference_excluded(tmp_path):
    records = TEXT_RECORDS + [
        {"id": "u3", "speaker": "s1", "group": "male", "ref": "", "hyp": "x"}
    ]
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", records))
    assert len(corpus) == 2
    assert corpus.n_excluded == 1


def test_mixed_schema_rejected(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "ref": "x", "hyp": "x"},
        {"id": "b", "speaker": "s2", "group": "g2", "errors": 1, "words": 2},
    ]
    with pytest.raises(MixedSchemaError):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", records))


def test_unknown_group_label(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", TEXT_RECORDS)
    with pytest.raises(UnknownGroupError):
        load_corpus(path, LoadOptions(levels=("male",)))


def test_non_numeric_covariate(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "errors": 1, "words": 2, "cov": [1.0]},
        {"id": "b", "speaker": "s2", "group": "g2", "errors": 1, "words": 2, "cov": ["oops"]},
    ]
    with pytest.raises(NonNumericCovariateError):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", records))


def test_speaker_under_two_groups(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "errors": 1, "words": 2},
        {"id": "b", "speaker": "s1", "group": "g2", "errors": 1, "words": 2},
    ]
    with pytest.raises(SpeakerGroupConflictError):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", records))


def test_utterance_level_factor_opt_in(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "errors": 1, "words": 2},
        {"id": "b", "speaker": "s1", "group": "g2", "errors": 1, "words": 2},
    ]
    path = write_jsonl(tmp_path / "c.jsonl", records)
    corpus = load_corpus(path, LoadOptions(utterance_level_factor=True))
    assert len(corpus) == 2


def test_missing_file():
    with pytest.raises(CorpusError):
        load_corpus("/nonexistent/file.jsonl")


def test_missing_level():
    factor = GroupFactor("g", ("a", "b"))
    with pytest.raises(MissingLevelError):
        Corpus(factor, [Utterance("u", "s", 0, 1, 2)])


def test_csv_load(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text(
        "id,speaker,group,errors,words,cov_0,cov_1\n"
        "a,s1,g1,2,10,0.5,1.5\n"
        "b,s2,g2,0,8,1.0,2.0\n"
    )
    corpus = load_corpus(str(path))
    assert corpus.covariate_names == ("cov_0", "cov_1")
    by_id = {u.id: u for u in corpus.utterances}
    assert by_id["a"].covariates == (0.5, 1.5)


def test_reload_is_identical(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", TEXT_RECORDS)
    c1 = load_corpus(path)
    c2 = load_corpus(path)
    assert [u for u in c1.utterances] == [u for u in c2.utterances]
    assert summarize(c1) == summarize(c2)


def test_summarize_counts(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "errors": 2, "words": 10},
        {"id": "b", "speaker": "s1", "group": "g1", "errors": 0, "words": 10},
        {"id": "c", "speaker": "s2", "group": "g2", "errors": 3, "words": 5},
    ]
    summary = summarize(load_corpus(write_jsonl(tmp_path / "c.jsonl", records)))
    rows = {r["level"]: r for r in summary["levels"]}
    assert rows["g1"]["n_utterances"] == 2
    assert rows["g1"]["n_speakers"] == 1
    assert rows["g1"]["wer"] == pytest.approx(0.1)
    assert rows["g2"]["wer"] == pytest.approx(0.6)
    assert sum(r["n_utterances"] for r in summary["levels"]) == summary["n_utterances"]


def test_summarize_symmetric_halves(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "errors": 2, "words": 10},
        {"id": "b", "speaker": "s2", "group": "g2", "errors": 2, "words": 10},
    ]
    summary = summarize(load_corpus(write_jsonl(tmp_path / "c.jsonl", records)))
    g1, g2 = summary["levels"]
    assert {k: v for k, v in g1.items() if k != "level"} == {
        k: v for k, v in g2.items() if k != "level"
    }


def test_single_utterance_wer(tmp_path):
    records = [
        {"id": "a", "speaker": "s1", "group": "g1", "errors": 3, "words": 12},
        {"id": "b", "speaker": "s2", "group": "g2", "errors": 0, "words": 1},
    ]
    summary = summarize(load_corpus(write_jsonl(tmp_path / "c.jsonl", records)))
    rows = {r["level"]: r for r in summary["levels"]}
    assert rows["g1"]["wer"] == pytest.approx(0.25)
