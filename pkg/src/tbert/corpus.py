"""Text ingestion and preprocessing.

Raw documents pass through a fixed chain: URL stripping, emoticon
replacement, canonicalization to lowercase ASCII letters, whitespace
tokenization, stopword removal, and Porter stemming.  The chain is
idempotent: feeding its own output back through produces identical
tokens.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, field

from .porter import stem_fixpoint


class CorpusFormatError(ValueError):
    """Raised when an input file does not match the documented layout."""


class VocabularyError(ValueError):
    """Raised when vocabulary construction or lookup cannot proceed."""


# English stopwords, stored in the same canonical form the pipeline
# produces (lowercased, apostrophes removed).  179 entries.
_STOPWORD_GROUPS = """
i me my myself we our ours ourselves you youre youve youll youd your
yours yourself yourselves he him his himself she shes her hers herself
it its itself they them their theirs themselves what which who whom
this that thatll these those
am is are was were be been being have has had having do does did doing
a an the and but if or because as until while of at by for with about
against between into through during before after above below to from
up down in out on off over under again further then once
here there when where why how all any both each few more most other
some such no nor not only own same so than too very
s t can will just don dont should shouldve now d ll m o re ve y
ain aren arent couldn couldnt didn didnt doesn doesnt hadn hadnt hasn
hasnt haven havent isn isnt ma mightn mightnt mustn mustnt needn neednt
shan shant shouldn shouldnt wasn wasnt weren werent won wont wouldn
wouldnt
"""

STOPWORDS = frozenset(_STOPWORD_GROUPS.split())

# Emoticon spellings mapped to replacement words.  Matching is
# longest-first so ":-)" wins over ":)" when both could apply.
EMOTICONS = {
    ":-)": "smile",
    ":)": "smile",
    "=)": "smile",
    ":-(": "sad",
    ":(": "sad",
    "=(": "sad",
    ":-D": "laugh",
    ":D": "laugh",
    "xD": "laugh",
    "XD": "laugh",
    ";-)": "wink",
    ";)": "wink",
    ":-P": "playful",
    ":P": "playful",
    ":p": "playful",
    ":-/": "skeptical",
    ":/": "skeptical",
    ":-\\": "skeptical",
    ":-O": "surprise",
    ":O": "surprise",
    ":o": "surprise",
    ":'(": "cry",
    ">:(": "angry",
    ":|": "neutral",
    "<3": "heart",
    "</3": "heartbreak",
    "^_^": "happy",
    ":*": "kiss",
}

_EMOTICON_RE = re.compile(
    "|".join(re.escape(e) for e in sorted(EMOTICONS, key=len, reverse=True))
)

_URL_RE = re.compile(r"(?:https?://|www\.)\S*")

_NON_LETTER_RE = re.compile(r"[^a-z\s]")

_WHITESPACE_RE = re.compile(r"\s+")


@dataclass
class RawDocument:
    id: str
    text: str


@dataclass
class ProcessedDocument:
    id: str
    tokens: list[str]


def strip_urls(text: str) -> str:
    """Remove http(s) and www URLs up to the next whitespace."""
    return _URL_RE.sub("", text)


def replace_emoticons(text: str) -> str:
    """Substitute known emoticons with word equivalents, longest first."""
    return _EMOTICON_RE.sub(lambda m: EMOTICONS[m.group(0)], text)


def canonicalize(text: str) -> str:
    """Reduce text to lowercase ASCII letters and single spaces.

    Accented characters are decomposed and their marks dropped; any
    character that is not a letter or whitespace is deleted outright,
    so digits and punctuation do not split words.
    """
    text = unicodedata.normalize("NFKD", text)
    text = "".join(ch for ch in text if not unicodedata.combining(ch))
    text = text.lower()
    text = _NON_LETTER_RE.sub("", text)
    return _WHITESPACE_RE.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    """Split on whitespace, dropping empty tokens."""
    return [t for t in text.split() if t]


def remove_stopwords(tokens: list[str]) -> list[str]:
    return [t for t in tokens if t not in STOPWORDS]


def stem_tokens(tokens: list[str]) -> list[str]:
    """Porter-stem each token, iterated to a fixpoint for stability."""
    return [stem_fixpoint(t) for t in tokens]


def preprocess(doc: RawDocument) -> ProcessedDocument:
    """Run the full preprocessing chain on one raw document.

    Stopwords are removed both before and after stemming; the second
    pass catches stems that collapse onto a stopword, which keeps the
    whole chain idempotent.
    """
    text = strip_urls(doc.text)
    text = replace_emoticons(text)
    text = canonicalize(text)
    tokens = remove_stopwords(tokenize(text))
    tokens = remove_stopwords(stem_tokens(tokens))
    return ProcessedDocument(id=doc.id, tokens=tokens)


def preprocess_corpus(docs: list[RawDocument]) -> list[ProcessedDocument]:
    return [preprocess(d) for d in docs]


@dataclass
class Vocabulary:
    """Sorted term list with document frequencies.

    Terms are ordered lexicographically, so term indices are stable
    across runs for the same input.
    """

    terms: list[str]
    doc_freq: list[int]
    num_docs: int
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.terms) != len(self.doc_freq):
            raise VocabularyError("terms and doc_freq lengths differ")
        self._index = {t: i for i, t in enumerate(self.terms)}
        if len(self._index) != len(self.terms):
            raise VocabularyError("duplicate terms in vocabulary")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index(self, term: str) -> int:
        try:
            return self._index[term]
        except KeyError:
            raise VocabularyError(f"term not in vocabulary: {term!r}") from None

    def save(self, path) -> None:
        payload = {
            "num_docs": self.num_docs,
            "terms": self.terms,
            "df": self.doc_freq,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        try:
            return cls(
                terms=list(payload["terms"]),
                doc_freq=[int(x) for x in payload["df"]],
                num_docs=int(payload["num_docs"]),
            )
        except KeyError as exc:
            raise CorpusFormatError(f"vocabulary file missing key {exc}") from None


def build_vocabulary(
    docs: list[ProcessedDocument],
    min_df: int = 2,
    max_df_fraction: float = 0.5,
) -> Vocabulary:
    """Collect terms whose document frequency falls inside the band.

    A term is kept when at least min_df documents contain it and its
    document frequency divided by the corpus size does not exceed
    max_df_fraction.
    """
    if not docs:
        raise VocabularyError("cannot build a vocabulary from zero documents")
    if min_df < 1:
        raise VocabularyError("min_df must be at least 1")
    if not 0.0 < max_df_fraction <= 1.0:
        raise VocabularyError("max_df_fraction must be in (0, 1]")
    num_docs = len(docs)
    df: dict[str, int] = {}
    for doc in docs:
        for term in set(doc.tokens):
            df[term] = df.get(term, 0) + 1
    kept = sorted(
        t for t, f in df.items() if f >= min_df and f / num_docs <= max_df_fraction
    )
    if not kept:
        raise VocabularyError(
            "no terms survive the document-frequency band; "
            "loosen min_df or max_df_fraction"
        )
    return Vocabulary(
        terms=kept, doc_freq=[df[t] for t in kept], num_docs=num_docs
    )


def to_bow(doc: ProcessedDocument, vocab: Vocabulary) -> list[tuple[int, int]]:
    """Bag-of-words as (term index, count) pairs sorted by index.

    Tokens outside the vocabulary are dropped.
    """
    counts: dict[int, int] = {}
    for token in doc.tokens:
        idx = vocab._index.get(token)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    return sorted(counts.items())


@dataclass
class Corpus:
    """Processed documents plus the vocabulary built over them."""

    docs: list[ProcessedDocument]
    vocabulary: Vocabulary

    def __post_init__(self):
        ids = [d.id for d in self.docs]
        if len(set(ids)) != len(ids):
            raise CorpusFormatError("document ids are not unique")

    @classmethod
    def from_processed(
        cls,
        docs: list[ProcessedDocument],
        min_df: int = 2,
        max_df_fraction: float = 0.5,
    ) -> "Corpus":
        return cls(docs=docs, vocabulary=build_vocabulary(docs, min_df, max_df_fraction))

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.docs]

    def bows(self) -> list[list[tuple[int, int]]]:
        return [to_bow(d, self.vocabulary) for d in self.docs]


def read_corpus_csv(path) -> list[RawDocument]:
    """Read documents from a CSV file with an id,text header."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "text"} <= set(reader.fieldnames):
            raise CorpusFormatError(
                f"{path}: expected a CSV header containing id and text columns"
            )
        docs = []
        for lineno, row in enumerate(reader, start=2):
            doc_id, text = row.get("id"), row.get("text")
            if doc_id is None or text is None:
                raise CorpusFormatError(f"{path}:{lineno}: missing id or text field")
            docs.append(RawDocument(id=doc_id, text=text))
    _check_unique_ids(docs, path)
    return docs


def read_corpus_jsonl(path) -> list[RawDocument]:
    """Read documents from JSON lines with id and text keys."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusFormatError(
                    f"{path}:{lineno}: each line needs id and text keys"
                )
            docs.append(RawDocument(id=str(obj["id"]), text=str(obj["text"])))
    _check_unique_ids(docs, path)
    return docs


def read_corpus(path) -> list[RawDocument]:
    """Dispatch on file extension: .csv or .jsonl/.json lines."""
    text_path = str(path)
    if text_path.endswith(".csv"):
        return read_corpus_csv(path)
    return read_corpus_jsonl(path)


def write_tokens_jsonl(docs: list[ProcessedDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "tokens": doc.tokens}, sort_keys=True))
            fh.write("\n")


def read_tokens_jsonl(path) -> list[ProcessedDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "tokens" not in obj:
                raise CorpusFormatError(
                    f"{path}:{lineno}: each line needs id and tokens keys"
                )
            docs.append(
                ProcessedDocument(id=str(obj["id"]), tokens=[str(t) for t in obj["tokens"]])
            )
    _check_unique_ids(docs, path)
    return docs


def _check_unique_ids(docs, path) -> None:
    seen = set()
    for doc in docs:
        if doc.id in seen:
            raise CorpusFormatError(f"{path}: duplicate document id {doc.id!r}")
        seen.add(doc.id)
