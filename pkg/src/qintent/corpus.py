"""Parsing, filtering, tokenization and slicing of the raw query export."""

from __future__ import annotations

import csv
import io
import string
from dataclasses import dataclass, field
from datetime import date
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Tuple


class UnusableQuery(ValueError):
    """Raised when a query has no usable tokens after cleanup."""


@dataclass(frozen=True)
class QueryRecord:
    id_group: int
    id_keyword: int
    date: date
    impressions: int
    clicks: int
    keyword: str


@dataclass(frozen=True)
class TokenizedQuery:
    tokens: Tuple[str, ...]
    record: Optional[QueryRecord] = None

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class CorpusSlice:
    name: str
    records: List[TokenizedQuery]
    filter_log: Dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class ParseLog:
    rows: int = 0
    skipped: int = 0
    header_skipped: bool = False
    rejects: List[str] = field(default_factory=list)


def _parse_date(raw: str) -> date:
    raw = raw.strip()
    return date(int(raw[:4]), int(raw[4:6]), int(raw[6:8]))


def parse_csv(source, delimiter: str = ",", log: Optional[ParseLog] = None) -> Iterator[QueryRecord]:
    """Stream QueryRecords out of a 6-column delimited export.

    `source` may be a path, a text file object, a binary file object or an
    iterable of lines. Malformed rows never abort the stream; they are counted
    in `log.skipped` and mirrored into `log.rejects`. A header row (non-numeric
    first field) is detected on the first line and skipped without counting as
    a reject.
    """
    if log is None:
        log = ParseLog()
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8", newline="")
        close_after = True
    elif isinstance(source, io.RawIOBase) or isinstance(source, io.BufferedIOBase):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")
    elif hasattr(source, "read") and isinstance(source.read(0), bytes):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")

    try:
        reader = csv.reader(source, delimiter=delimiter)
        first = True
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if first:
                first = False
                if not row[0].strip().lstrip("-").isdigit():
                    log.header_skipped = True
                    continue
            log.rows += 1
            if len(row) != 6:
                log.skipped += 1
                log.rejects.append(delimiter.join(row))
                continue
            try:
                rec = QueryRecord(
                    id_group=int(row[0]),
                    id_keyword=int(row[1]),
                    date=_parse_date(row[2]),
                    impressions=int(row[3]),
                    clicks=int(row[4]),
                    keyword=row[5].strip(),
                )
                if rec.impressions < 0 or rec.clicks < 0 or not rec.keyword:
                    raise ValueError("bad field")
            except (ValueError, IndexError):
                log.skipped += 1
                log.rejects.append(delimiter.join(row))
                continue
            yield rec
    finally:
        if close_after:
            source.close()


def write_csv(records: Iterable[QueryRecord], target, delimiter: str = ",") -> None:
    close_after = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        target = open(target, "w", encoding="utf-8", newline="")
        close_after = True
    try:
        writer = csv.writer(target, delimiter=delimiter)
        for r in records:
            writer.writerow([
                r.id_group,
                r.id_keyword,
                "%04d%02d%02d" % (r.date.year, r.date.month, r.date.day),
                r.impressions,
                r.clicks,
                r.keyword,
            ])
    finally:
        if close_after:
            target.close()


# Punctuation stripped off token edges; a leading "." survives so TLD-style
# keywords (".au", ".uk", ...) keep their identity.
_PUNCT = string.punctuation


def _clean_token(tok: str) -> str:
    tok = tok.rstrip(_PUNCT)
    keep_dot = tok.startswith(".")
    tok = tok.lstrip(_PUNCT)
    if keep_dot and tok:
        tok = "." + tok
    return tok


def tokenize(keyword: str, record: Optional[QueryRecord] = None) -> TokenizedQuery:
    """Lowercase, split on whitespace, strip edge punctuation per token."""
    tokens = tuple(t for t in (_clean_token(w) for w in keyword.lower().split()) if t)
    if not tokens:
        raise UnusableQuery("no usable tokens in %r" % keyword)
    return TokenizedQuery(tokens=tokens, record=record)


def _tokenize_stream(records: Iterable[QueryRecord], filter_log: Dict[str, int]) -> Iterator[TokenizedQuery]:
    for rec in records:
        try:
            yield tokenize(rec.keyword, record=rec)
        except UnusableQuery:
            filter_log["untokenizable"] = filter_log.get("untokenizable", 0) + 1


def slice_first_n(records: Iterable[QueryRecord], n: int) -> CorpusSlice:
    if n < 1:
        raise ValueError("n must be >= 1")
    filter_log: Dict[str, int] = {}
    out: List[TokenizedQuery] = []
    it = iter(records)
    taken = 0
    for rec in it:
        if taken >= n:
            break
        taken += 1
        try:
            out.append(tokenize(rec.keyword, record=rec))
        except UnusableQuery:
            filter_log["untokenizable"] = filter_log.get("untokenizable", 0) + 1
    return CorpusSlice(name="first-%d" % n, records=out, filter_log=filter_log)


def sidecar_detector(path) -> Callable[[int, str], str]:
    """Language hook backed by a precomputed `index<TAB>langcode` sidecar."""
    table: Dict[int, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            idx, code = line.split("\t")
            table[int(idx)] = code

    def detect(index: int, keyword: str) -> str:
        return table[index]

    return detect


def slice_by_language(records: Iterable[QueryRecord], detector: Callable[[int, str], str], lang: str) -> CorpusSlice:
    """Keep records whose detected language equals `lang`.

    The detector is called with (record index, keyword); detector failures drop
    the record under the "lang-detect-error" reason.
    """
    filter_log: Dict[str, int] = {}

    def _bump(reason: str) -> None:
        filter_log[reason] = filter_log.get(reason, 0) + 1

    out: List[TokenizedQuery] = []
    for idx, rec in enumerate(records):
        try:
            code = detector(idx, rec.keyword)
        except Exception:
            _bump("lang-detect-error")
            continue
        if code != lang:
            _bump("lang-mismatch")
            continue
        try:
            out.append(tokenize(rec.keyword, record=rec))
        except UnusableQuery:
            _bump("untokenizable")
    return CorpusSlice(name=lang.upper(), records=out, filter_log=filter_log)


def filter_trainable(slc: CorpusSlice, rules, emb, strict_oov: bool = False) -> CorpusSlice:
    """Keep queries that the labeler can label and that have embedded tokens.

    Default keeps a query if at least one token has an embedding; strict mode
    requires every token to be embedded.
    """
    from . import weak_label  # runtime import; weak_label depends on this module

    filter_log: Dict[str, int] = {}

    def _bump(reason: str) -> None:
        filter_log[reason] = filter_log.get(reason, 0) + 1

    out: List[TokenizedQuery] = []
    for q in slc.records:
        embedded = [tok for tok in q.tokens if emb.lookup(tok) is not None]
        if strict_oov:
            ok_emb = len(embedded) == len(q.tokens)
        else:
            ok_emb = len(embedded) > 0
        if not ok_emb:
            _bump("no-embedding")
            continue
        if weak_label.label_query(q, rules) is None:
            _bump("no-label")
            continue
        out.append(q)
    return CorpusSlice(name=slc.name + "+trainable", records=out, filter_log=filter_log)


def write_manifest(slc: CorpusSlice, target) -> None:
    """Structured text manifest: header block then one token-joined query per line."""
    close_after = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        target = open(target, "w", encoding="utf-8")
        close_after = True
    try:
        target.write("# slice: %s\n" % slc.name)
        target.write("# records: %d\n" % len(slc.records))
        for reason in sorted(slc.filter_log):
            target.write("# dropped %s: %d\n" % (reason, slc.filter_log[reason]))
        target.write("# end-header\n")
        for q in slc.records:
            target.write(q.text() + "\n")
    finally:
        if close_after:
            target.close()


def read_manifest(source) -> CorpusSlice:
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        name = ""
        expected = None
        filter_log: Dict[str, int] = {}
        records: List[TokenizedQuery] = []
        in_header = True
        for line in source:
            line = line.rstrip("\n")
            if in_header:
                if line == "# end-header":
                    in_header = False
                elif line.startswith("# slice: "):
                    name = line[len("# slice: "):]
                elif line.startswith("# records: "):
                    expected = int(line[len("# records: "):])
                elif line.startswith("# dropped "):
                    body = line[len("# dropped "):]
                    reason, count = body.rsplit(": ", 1)
                    filter_log[reason] = int(count)
                continue
            if line:
                records.append(TokenizedQuery(tokens=tuple(line.split(" "))))
        if expected is not None and expected != len(records):
            raise ValueError("manifest record count %s != %d lines" % (expected, len(records)))
        return CorpusSlice(name=name, records=records, filter_log=filter_log)
    finally:
        if close_after:
            source.close()
