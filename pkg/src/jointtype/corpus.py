"""POS-tagged corpus: documents of sentences of (text, pos) tokens."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

DOCSTART = "-DOCSTART-"
DEFAULT_DOC = "DOC0"


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Token:
    text: str
    pos: str


@dataclass(frozen=True, slots=True)
class Sentence:
    doc_id: str
    sentence_index: int
    tokens: tuple[Token, ...]

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.sentence_index)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.tokens)

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(t.pos for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Document:
    doc_id: str
    sentences: list[Sentence] = field(default_factory=list)


@dataclass
class Corpus:
    documents: list[Document]
    dropped_empty: int = 0
    _index: dict[tuple[str, int], Sentence] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._index = {}
        for doc in self.documents:
            for s in doc.sentences:
                if s.key in self._index:
                    raise CorpusFormatError(f"duplicate sentence id {s.key}")
                self._index[s.key] = s

    def sentences(self) -> Iterator[Sentence]:
        for doc in self.documents:
            yield from doc.sentences

    def sentence(self, doc_id: str, sentence_index: int) -> Sentence:
        return self._index[doc_id, sentence_index]

    def __contains__(self, key) -> bool:
        return tuple(key) in self._index

    @property
    def n_sentences(self) -> int:
        return len(self._index)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self._index.values())

    def doc_ids(self) -> set[str]:
        return {d.doc_id for d in self.documents}

    @classmethod
    def concat(cls, corpora: Iterable["Corpus"]) -> "Corpus":
        docs: list[Document] = []
        dropped = 0
        for c in corpora:
            docs.extend(c.documents)
            dropped += c.dropped_empty
        return cls(docs, dropped)


def parse_corpus(lines: Iterable[str], source: str = "<corpus>") -> Corpus:
    docs: list[Document] = []
    current: Document | None = None
    tokens: list[Token] = []
    dropped = 0

    def flush() -> None:
        nonlocal tokens, current
        if not tokens:
            return
        if current is None:
            current = Document(DEFAULT_DOC)
            docs.append(current)
        current.sentences.append(Sentence(current.doc_id, len(current.sentences), tuple(tokens)))
        tokens = []

    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if line.startswith(DOCSTART):
            flush()
            doc_id = line[len(DOCSTART):].strip() or f"DOC{len(docs)}"
            current = Document(doc_id)
            docs.append(current)
            continue
        if not line.strip():
            if tokens:
                flush()
            else:
                dropped += 1
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0] or not cols[1]:
            raise CorpusFormatError(f"{source}:{lineno}: expected 'text<TAB>pos', got {line!r}")
        tokens.append(Token(cols[0], cols[1]))
    flush()

    corpus = Corpus([d for d in docs if d.sentences], dropped)
    if corpus.n_sentences == 0:
        raise CorpusFormatError(f"{source}: empty corpus")
    if dropped:
        logger.warning("%s: dropped %d empty sentences", source, dropped)
    logger.info("%s: %d documents, %d sentences, %d tokens", source,
                len(corpus.documents), corpus.n_sentences, corpus.n_tokens)
    return corpus


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, str(path))


def format_corpus(corpus: Corpus) -> str:
    out = []
    for doc in corpus.documents:
        out.append(f"{DOCSTART} {doc.doc_id}\n")
        for s in doc.sentences:
            out.extend(f"{t.text}\t{t.pos}\n" for t in s.tokens)
            out.append("\n")
    return "".join(out)


def dump_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_corpus(corpus))


def window(sentence: Sentence, span: tuple[int, int], k: int = 3) -> tuple[list[Token], list[Token]]:
    """Up to ``k`` tokens left and right of ``span``, truncated at sentence edges."""
    start, end = span
    if not (0 <= start < end <= len(sentence)):
        raise IndexError(f"span {span} outside sentence of length {len(sentence)}")
    if k <= 0:
        return [], []
    toks = sentence.tokens
    return list(toks[max(0, start - k):start]), list(toks[end:end + k])
