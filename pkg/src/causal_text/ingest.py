"""Review-corpus ingestion: derive (A, C, Y) and featurize text.

Input is two JSON-lines files: reviews with fields {stars, text, useful,
user_id} and users with {user_id, useful}.  The derived variables:

  treatment  a = 1 for four/five-star reviews, 0 for one/two-star;
             three-star reviews are dropped from the analysis
  outcome    y = 1 iff the review received at least one "Useful" flag
  confounder c = 1 iff the author has at least two "Useful" flags overall

Text preprocessing is lowercase, tokenize on non-alphanumeric boundaries,
drop stopwords (fixed embedded list), Porter-stem.  The vocabulary keeps the
tokens occurring at least ``min_count`` times in a sample of reviews,
ordered lexicographically for cross-run stability.  Features are binary
word-presence indicators.

Malformed records never abort a bulk ingest: they are skipped and counted.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from ._porter import stem
from ._stopwords import STOPWORDS
from .data import Dataset, pack_indices
from .errors import EmptyDatasetError

_TOKEN_RE = re.compile(r"[a-z0-9]+")

GOOD_STARS = frozenset({4, 5})
BAD_STARS = frozenset({1, 2})
REVIEW_USEFUL_MIN = 1
AUTHOR_USEFUL_MIN = 2


def preprocess(text: str) -> list[str]:
    """Lowercase, tokenize, drop stopwords, Porter-stem. Deterministic."""
    tokens = _TOKEN_RE.findall(text.lower())
    return [stem(t) for t in tokens if t not in STOPWORDS]


def derive_variables(review: dict, author: dict) -> Optional[tuple[int, int, int]]:
    """(a, c, y) from a review/author pair, or None for three-star reviews.

    Raises KeyError/ValueError/TypeError on malformed records; bulk ingestion
    catches those, skips the row, and counts it.
    """
    stars = int(review["stars"])
    if stars < 1 or stars > 5:
        raise ValueError(f"stars must be in [1, 5], got {stars}")
    review_useful = int(review["useful"])
    author_useful = int(author["useful"])
    if review_useful < 0 or author_useful < 0:
        raise ValueError("useful counts must be nonnegative")
    if stars == 3:
        return None
    a = 1 if stars in GOOD_STARS else 0
    c = 1 if author_useful >= AUTHOR_USEFUL_MIN else 0
    y = 1 if review_useful >= REVIEW_USEFUL_MIN else 0
    return a, c, y


@dataclass(frozen=True)
class VocabSpec:
    """Lexicographically ordered vocabulary with its construction settings."""

    tokens: tuple[str, ...]
    min_count: int
    sample_size: int

    def __post_init__(self):
        if any(self.tokens[i] >= self.tokens[i + 1] for i in range(len(self.tokens) - 1)):
            raise ValueError("vocabulary tokens must be strictly increasing")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)


def _valid_review(review: dict) -> bool:
    try:
        stars = int(review["stars"])
        int(review["useful"])
        review["text"]
    except (KeyError, ValueError, TypeError):
        return False
    return 1 <= stars <= 5 and stars != 3


def build_vocab(reviews: Iterable[dict], sample_size: int = 10 ** 6,
                min_count: int = 1000) -> VocabSpec:
    """Count preprocessed tokens over the first ``sample_size`` usable reviews.

    A review is usable when well-formed with stars in {1, 2, 4, 5}.  Tokens
    are counted by occurrence; those reaching ``min_count`` form the
    vocabulary, sorted lexicographically.
    """
    counts: Counter[str] = Counter()
    scanned = 0
    for review in reviews:
        if scanned >= sample_size:
            break
        if not _valid_review(review):
            continue
        scanned += 1
        counts.update(preprocess(review["text"]))
    tokens = tuple(sorted(t for t, k in counts.items() if k >= min_count))
    if not tokens:
        raise EmptyDatasetError("vocabulary is empty; lower min_count or add data")
    return VocabSpec(tokens=tokens, min_count=min_count, sample_size=scanned)


def featurize(tokens: Iterable[str], vocab: VocabSpec) -> tuple[int, ...]:
    """Sorted set of vocabulary indices present; out-of-vocab tokens dropped."""
    index = vocab.index
    return tuple(sorted({index[t] for t in tokens if t in index}))


def save_vocab(vocab: VocabSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#min_count={vocab.min_count}\n")
        fh.write(f"#sample_size={vocab.sample_size}\n")
        for t in vocab.tokens:
            fh.write(t + "\n")


def load_vocab(path) -> VocabSpec:
    min_count = 0
    sample_size = 0
    tokens = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#min_count="):
                min_count = int(line.split("=", 1)[1])
            elif line.startswith("#sample_size="):
                sample_size = int(line.split("=", 1)[1])
            elif line:
                tokens.append(line)
    return VocabSpec(tokens=tuple(tokens), min_count=min_count, sample_size=sample_size)


def iter_jsonl(path) -> Iterator[dict]:
    """Yield one object per nonempty line; malformed lines yield {}."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                yield {}


@dataclass(frozen=True)
class IngestSummary:
    n_rows: int
    n_dropped_three_star: int
    n_skipped_malformed: int
    n_skipped_unknown_user: int
    fraction_positive: float
    fraction_useful: float
    fraction_high_flag_authors: float


def load_users(path) -> dict[str, int]:
    """user_id -> aggregate useful count; malformed records skipped."""
    users: dict[str, int] = {}
    for obj in iter_jsonl(path):
        try:
            users[str(obj["user_id"])] = int(obj["useful"])
        except (KeyError, ValueError, TypeError):
            continue
    return users


def ingest_corpus(review_path, user_path, vocab: VocabSpec,
                  provenance: str = "yelp") -> tuple[Dataset, IngestSummary]:
    """Join reviews to authors, derive variables, featurize.

    Users load into memory first (bounded by user count); reviews stream.
    Unknown user_ids and malformed records skip with a count.
    """
    users = load_users(user_path)
    a_col, c_col, y_col, idx_rows = [], [], [], []
    authors: list[str] = []
    dropped3 = malformed = unknown = 0
    for review in iter_jsonl(review_path):
        try:
            user_id = str(review["user_id"])
        except (KeyError, TypeError):
            malformed += 1
            continue
        if user_id not in users:
            unknown += 1
            continue
        try:
            derived = derive_variables(review, {"useful": users[user_id]})
            text = str(review["text"])
        except (KeyError, ValueError, TypeError):
            malformed += 1
            continue
        if derived is None:
            dropped3 += 1
            continue
        a, c, y = derived
        a_col.append(a)
        c_col.append(c)
        y_col.append(y)
        idx_rows.append(featurize(preprocess(text), vocab))
        authors.append(user_id)
    if not a_col:
        raise EmptyDatasetError("no usable rows after filtering")
    n = len(a_col)
    a = np.array(a_col, dtype=np.int8)
    data = Dataset(a=a, r_a=np.ones(n, dtype=np.uint8),
                   c=np.array(c_col, dtype=np.uint8),
                   y=np.array(y_col, dtype=np.uint8),
                   text=pack_indices(idx_rows, len(vocab)),
                   vocab_size=len(vocab), provenance=provenance)
    distinct = {}
    for user_id, c in zip(authors, c_col):
        distinct[user_id] = c
    summary = IngestSummary(
        n_rows=n, n_dropped_three_star=dropped3, n_skipped_malformed=malformed,
        n_skipped_unknown_user=unknown,
        fraction_positive=float(a.mean()),
        fraction_useful=float(np.mean(y_col)),
        fraction_high_flag_authors=float(np.mean(list(distinct.values()))),
    )
    return data, summary
