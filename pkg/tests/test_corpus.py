import json

import pytest

from topicforge.corpus import (
    Corpus, CorpusError, DocDate, Document, KeywordQuery, filter_by_keywords,
    load_corpus, load_keywords, save_corpus, year_histogram,
)


def jsonl_file(tmp_path, records, name="corpus.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


def record(i, **kw):
    base = {"id": f"d{i}", "title": f"Title {i}", "abstract": f"Abstract {i}",
            "date": "2020-01-02", "source": "pubmed"}
    base.update(kw)
    return base


def test_load_jsonl_preserves_order(tmp_path):
    path = jsonl_file(tmp_path, [record(i) for i in range(3)])
    c = load_corpus(path, "jsonl")
    assert len(c) == 3
    assert [d.id for d in c] == ["d0", "d1", "d2"]


def test_duplicate_id_rejected(tmp_path):
    path = jsonl_file(tmp_path, [record(0, id="x1"), record(1, id="x1")])
    with pytest.raises(CorpusError, match="x1"):
        load_corpus(path, "jsonl")


def test_csv_missing_abstract_column(tmp_path):
    path = tmp_path / "corpus.csv"
    path.write_text("id,title,date,source\nd0,T,2020,pubmed\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="abstract"):
        load_corpus(path, "csv")


def test_csv_roundtrip_fields(tmp_path):
    path = tmp_path / "corpus.csv"
    path.write_text(
        "id,title,abstract,date,source\nd0,Hello,World,2019-07,arxiv\n",
        encoding="utf-8",
    )
    c = load_corpus(path, "csv")
    assert c[0].title == "Hello"
    assert c[0].date == DocDate(2019, 7)
    assert c[0].source == "arxiv"


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(record(0)) + "\n{not json\n", encoding="utf-8")
    with pytest.raises(CorpusError, match=":2"):
        load_corpus(path, "jsonl")


def test_jsonl_roundtrip(tmp_path):
    path = jsonl_file(tmp_path, [record(i, date="2021") for i in range(5)])
    c = load_corpus(path, "jsonl")
    out = tmp_path / "again.jsonl"
    save_corpus(c, out)
    assert load_corpus(out, "jsonl") == c


@pytest.mark.parametrize("raw,expected", [
    ("2020", DocDate(2020)),
    ("2020-03", DocDate(2020, 3)),
    ("2020-03-15", DocDate(2020, 3, 15)),
])
def test_date_forms(raw, expected):
    assert DocDate.parse(raw) == expected


@pytest.mark.parametrize("raw", ["20-01", "1899", "2101", "2020-13", "March 2020"])
def test_bad_dates(raw):
    with pytest.raises(CorpusError):
        DocDate.parse(raw)


def test_empty_title_and_abstract_rejected():
    with pytest.raises(CorpusError):
        Document(id="x", title="", abstract="", date=DocDate(2020))


def _corpus(texts):
    return Corpus(tuple(
        Document(id=f"d{i}", title=t, abstract=f"body {i}", date=DocDate(2020))
        for i, t in enumerate(texts)
    ))


def test_filter_any_substring_match():
    c = _corpus(["Anxiety Disorder in adolescents", "Unrelated work"])
    q = KeywordQuery(("anxiety disorder",), "any")
    kept = filter_by_keywords(c, q)
    assert [d.id for d in kept] == ["d0"]


def test_filter_absent_keyword_empty():
    c = _corpus(["alpha", "beta"])
    assert len(filter_by_keywords(c, KeywordQuery(("zzz",), "any"))) == 0


def test_filter_all_mode():
    c = Corpus((
        Document(id="a", title="ptsd study", abstract="sleep effects", date=DocDate(2020)),
        Document(id="b", title="ptsd study", abstract="other effects", date=DocDate(2020)),
    ))
    kept = filter_by_keywords(c, KeywordQuery(("ptsd", "sleep"), "all"))
    assert [d.id for d in kept] == ["a"]


def test_filter_idempotent():
    c = _corpus(["anxiety paper", "sleep paper", "gene paper", "sleep anxiety"])
    q = KeywordQuery(("sleep", "anxiety"), "any")
    once = filter_by_keywords(c, q)
    assert filter_by_keywords(once, q) == once


def test_year_histogram_counts():
    c = Corpus(tuple(
        Document(id=f"d{i}", title="t", abstract="a", date=DocDate(y))
        for i, y in enumerate([2020, 2020, 2021])
    ))
    assert year_histogram(c) == {2020: 2, 2021: 1}


def test_year_histogram_empty():
    assert year_histogram(Corpus(())) == {}


def test_year_histogram_sums_to_size():
    c = _corpus([f"doc {i}" for i in range(17)])
    assert sum(year_histogram(c).values()) == len(c)


def test_load_keywords(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("anxiety disorder\n\nschizophrenia\n", encoding="utf-8")
    assert load_keywords(path) == ("anxiety disorder", "schizophrenia")
