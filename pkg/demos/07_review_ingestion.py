"""
Review-corpus ingestion
=======================

Reviews and their authors arrive as JSON lines.  The derived variables:
a = 1 for 4-5 star reviews (0 for 1-2 stars; 3-star reviews are dropped),
y = 1 when the review got at least one "Useful" flag, c = 1 when its author
has at least two such flags overall.  Text is lowercased, tokenized,
stopword-filtered, Porter-stemmed, then featurized as word-presence
indicators over a min-count vocabulary.

Command-line equivalent:

    causal-text vocab  --reviews reviews.jsonl --min-count 1000 --sample 1000000
    causal-text ingest --reviews reviews.jsonl --users users.jsonl --out data/
"""

import json
import tempfile
from pathlib import Path

from causal_text.data import dump_rows, load_rows
from causal_text.ingest import (build_vocab, derive_variables, featurize,
                                ingest_corpus, iter_jsonl, preprocess)

REVIEWS = [
    {"stars": 5, "text": "The FOOD was amazing!! Great flavors.", "useful": 2, "user_id": "ana"},
    {"stars": 1, "text": "Cold food, slow service. Disappointing.", "useful": 0, "user_id": "bo"},
    {"stars": 3, "text": "It was fine I guess.", "useful": 1, "user_id": "ana"},
    {"stars": 4, "text": "Great service, amazing food. Coming back!", "useful": 1, "user_id": "cy"},
    {"stars": 2, "text": "Slow, cold, sad food.", "useful": 4, "user_id": "bo"},
]
USERS = [{"user_id": "ana", "useful": 9}, {"user_id": "bo", "useful": 1},
         {"user_id": "cy", "useful": 2}]

print("preprocess('The FOOD was amazing!!') ->",
      preprocess("The FOOD was amazing!!"))
print("derive_variables(5 stars, review useful=2, author useful=9) ->",
      derive_variables({"stars": 5, "useful": 2}, {"useful": 9}))
print("derive_variables(3 stars, ...) ->",
      derive_variables({"stars": 3, "useful": 1}, {"useful": 9}), "(dropped)")

with tempfile.TemporaryDirectory() as tmp:
    review_path = Path(tmp) / "reviews.jsonl"
    user_path = Path(tmp) / "users.jsonl"
    review_path.write_text("\n".join(json.dumps(r) for r in REVIEWS) + "\n")
    user_path.write_text("\n".join(json.dumps(u) for u in USERS) + "\n")

    vocab = build_vocab(iter_jsonl(review_path), min_count=1)
    print(f"\nvocabulary ({len(vocab)} tokens, lexicographic):", vocab.tokens)
    print("featurize(['food', 'food', 'unseen']) ->",
          featurize(["food", "food", "unseen"], vocab))

    data, summary = ingest_corpus(review_path, user_path, vocab)
    print(f"\ningested rows: {summary.n_rows} "
          f"(dropped {summary.n_dropped_three_star} three-star)")
    print(f"fraction positive = {summary.fraction_positive:.2f}, "
          f"useful = {summary.fraction_useful:.2f}, "
          f"high-flag authors = {summary.fraction_high_flag_authors:.2f}")

    rows_path = Path(tmp) / "rows.tsv"
    dump_rows(data, rows_path)
    print("\nrow-file format:")
    print(rows_path.read_text(), end="")
    back = load_rows(rows_path)
    print("round-trip n =", len(back))
