import pytest

from pipeline.text import (
    NOISE_RE,
    StopwordTable,
    preprocess,
    read_stopword_file,
    remove_stopwords,
    strip_noise,
    tokenize,
)


class TestStripNoise:
    def test_removes_mentions_and_urls(self):
        assert strip_noise("RT @user http://t.co/x quake") == "RT quake"

    def test_leaves_clean_text(self):
        assert strip_noise("no noise here") == "no noise here"

    def test_url_only(self):
        assert strip_noise("https://a.b/c") == ""

    def test_www_and_whitespace(self):
        assert strip_noise("  help   www.redcross.org   now\n") == "help now"

    @pytest.mark.parametrize("text", [
        "http@x://y.z quake",
        "@@user hi",
        "see https://x.y/@user and @a_b!",
        "WWW.Example.com/Path ok",
    ])
    def test_output_never_rescans_as_noise(self, text):
        assert NOISE_RE.search(strip_noise(text)) is None


class TestTokenize:
    def test_basic(self):
        assert tokenize("Earthquake hits city") == ["earthquake", "hits", "city"]

    def test_hashtag_becomes_word(self):
        assert tokenize("#Nepal needs help!") == ["nepal", "needs", "help"]

    def test_unicode_lowercasing(self):
        assert tokenize("Terremoto EN ITALIA") == ["terremoto", "en", "italia"]

    def test_apostrophes_and_diacritics(self):
        assert tokenize("Don’t panic, ciudad DAÑADA") == ["don't", "panic", "ciudad", "dañada"]

    def test_nfkc(self):
        assert tokenize("ﬁre") == ["fire"]

    def test_underscore_and_lone_apostrophe_are_delimiters(self):
        assert tokenize("road_closed ' x") == ["road", "closed", "x"]

    @pytest.mark.parametrize("text", ["Earthquake hits city", "#Nepal needs help!", "Ça va? l'ÉTÉ 2013", "a--b__c"])
    def test_idempotent(self, text):
        tokens = tokenize(text)
        assert tokenize(" ".join(tokens)) == tokens
        assert all(t and " " not in t for t in tokens)


class TestStopwords:
    def test_english_list(self, table):
        assert remove_stopwords(["the", "city", "is", "safe"], {"en"}, table) == ["city", "safe"]

    def test_empty(self, table):
        assert remove_stopwords([], {"en"}, table) == []

    def test_all_stopwords(self, table):
        assert remove_stopwords(["the", "is", "a"], {"en"}, table) == []

    def test_idempotent(self, table):
        once = remove_stopwords(["el", "terremoto", "the", "de", "roma"], {"en", "es"}, table)
        assert remove_stopwords(once, {"en", "es"}, table) == once

    def test_unknown_language_is_empty(self, table):
        assert table.words("xx") == frozenset()
        assert remove_stopwords(["the"], {"xx"}, table) == ["the"]

    def test_builtin_languages(self, table):
        assert {"en", "es", "it", "tl"} <= set(table.languages)

    def test_file_format(self, tmp_path):
        path = tmp_path / "en.txt"
        path.write_text("# comment\nThe\n\n  city \n", encoding="utf-8")
        assert read_stopword_file(path) == {"the", "city"}

    def test_env_override_replaces_language(self, tmp_path, monkeypatch):
        (tmp_path / "en.txt").write_text("city\n", encoding="utf-8")
        monkeypatch.setenv("CRISDA_STOPWORDS_DIR", str(tmp_path))
        table = StopwordTable.load()
        assert table.words("en") == frozenset({"city"})
        assert "el" in table.words("es")


def test_preprocess_pipeline(table):
    text = "RT @redcross: The bridge is DOWN in #Manila http://t.co/abc"
    assert preprocess(text, {"en"}, table) == ["rt", "bridge", "manila"]
    assert preprocess(text, {"en"}, table) == preprocess(text, {"en"}, table)
