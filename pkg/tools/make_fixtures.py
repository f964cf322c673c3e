"""Regenerate the bundled synthetic fixtures under fixtures/.

Two 200-sample "domains" share a neutral vocabulary but differ in which
words are toxic, so constructed lexicons transfer only partially between
them while fixed word lists transfer fully. Alongside the corpora this
writes, per domain: a per-token score file (noisy scores peaking on gold
tokens), a binary prediction file (gold labels with a 10% flip rate), an
external span prediction file (gold spans with dropped/truncated/spurious
ranges), two shared word lists, and the experiment configs used by the
test suite.

Deterministic: fixed seeds, no timestamps. Run from the repository root:

    python tools/make_fixtures.py
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from toxspan.corpus import Dataset, Sample, write_canonical  # noqa: E402
from toxspan.gating import write_binary, write_span_predictions, BinaryPrediction  # noqa: E402
from toxspan.rationale import TokenScore, TokenScores, write_scores  # noqa: E402
from toxspan.spans import SpanSet, tokenize  # noqa: E402

FIXTURES = ROOT / "fixtures"

# Includes a few words that contain a toxic word as a substring, so plain
# substring matching produces realistic subword false positives.
NEUTRAL = """
the a this that you they we it he she one some any day time way thing
people home town road water light sound paper garden coffee window music
study market letter mountain river winter summer story question answer
friend family moment minute evening morning street corner bridge table
chair bottle basket ticket engine signal planet forest meadow harbor
grubby doltish oafish maggoty
""".split()

TOXIC_A = ["grub", "slime", "maggot", "wretch", "dolt", "cretin", "louse", "oaf", "churl", "dunce"]
TOXIC_B = ["slime", "maggot", "wretch", "dolt", "vermin", "scoundrel", "knave", "rascal", "boor", "clod"]

SPLIT_SIZES = {"train": 120, "dev": 40, "test": 40}


def build_domain(name: str, toxic_vocab: list[str], seed: int) -> Dataset:
    rng = random.Random(seed)
    samples = []
    counter = 0
    for split, size in SPLIT_SIZES.items():
        for _ in range(size):
            sid = f"{name}-{split}-{counter}"
            counter += 1
            n_words = rng.randint(6, 14)
            words = [rng.choice(NEUTRAL) for _ in range(n_words)]
            toxic = rng.random() < 0.55
            implicit = toxic and rng.random() < 0.06
            # marked: word index -> True when the span also covers the next word
            marked: dict[int, bool] = {}
            if toxic and not implicit:
                for _ in range(rng.randint(1, 3)):
                    pos = rng.randrange(n_words)
                    words[pos] = rng.choice(toxic_vocab)
                    marked[pos] = rng.random() < 0.25 and pos + 1 < n_words
                if rng.random() < 0.10:
                    # an annotation miss: a toxic word nobody marked
                    pos = rng.randrange(n_words)
                    if pos not in marked:
                        words[pos] = rng.choice(toxic_vocab)
            elif not toxic and rng.random() < 0.08:
                # quoted or sarcastic usage: toxic vocabulary, non-toxic message
                words[rng.randrange(n_words)] = rng.choice(toxic_vocab)
            text = " ".join(words)
            starts = []
            pos = 0
            for word in words:
                starts.append(pos)
                pos += len(word) + 1
            ranges = []
            for idx, phrase in marked.items():
                end_idx = idx + 1 if phrase else idx
                ranges.append((starts[idx], starts[end_idx] + len(words[end_idx])))
            samples.append(
                Sample(
                    id=sid,
                    text=text,
                    toxic=toxic,
                    gold_spans=SpanSet(ranges),
                    split=split,
                )
            )
    return Dataset(name=name, samples=samples, provenance=f"synthetic seed={seed}")


def make_scores(dataset: Dataset, seed: int) -> dict[str, TokenScores]:
    rng = random.Random(seed)
    out = {}
    for sample in dataset.samples:
        tokens = []
        for tok in tokenize(sample.text):
            covered = any(s <= tok.start and tok.end <= e for s, e in sample.gold_spans)
            if covered:
                score = 0.0 if rng.random() < 0.15 else rng.uniform(0.9, 1.3)
            else:
                score = rng.uniform(0.7, 1.0) if rng.random() < 0.05 else rng.uniform(0.0, 0.2)
            tokens.append(TokenScore(tok.start, tok.end, round(score, 4)))
        out[sample.id] = TokenScores(sample.id, "synthetic-attr", tuple(tokens))
    return out


def make_binary(dataset: Dataset, seed: int) -> dict[str, BinaryPrediction]:
    rng = random.Random(seed)
    return {
        s.id: BinaryPrediction(s.id, (not s.toxic) if rng.random() < 0.10 else s.toxic)
        for s in dataset.samples
    }


def make_span_preds(dataset: Dataset, seed: int) -> dict[str, SpanSet]:
    rng = random.Random(seed)
    out = {}
    for sample in dataset.samples:
        ranges = []
        for start, end in sample.gold_spans:
            roll = rng.random()
            if roll < 0.20:
                continue
            if roll < 0.50 and end - start > 3:
                end -= rng.randint(1, 2)
            ranges.append((start, end))
        if rng.random() < 0.15:
            tokens = tokenize(sample.text)
            if tokens:
                tok = rng.choice(tokens)
                ranges.append((tok.start, tok.end))
        out[sample.id] = SpanSet(ranges)
    return out


ORACLE_CONFIG = """\
# Fully synthetic two-domain benchmark, oracle setting.
seed = 7
setting = "oracle"
train = "{train}"

[datasets]
domain_a = "domain_a.jsonl"
domain_b = "domain_b.jsonl"

[[methods]]
name = "constructed"
kind = "constructed_lexicon"

[[methods]]
name = "wordlist-broad"
kind = "wordlist_lexicon"
lexicon = "wordlist_broad.txt"

[[methods]]
name = "wordlist-narrow"
kind = "wordlist_lexicon"
lexicon = "wordlist_narrow.txt"

[[methods]]
name = "synthetic-attr"
kind = "rationale_file"
scores = {{ domain_a = "scores_domain_a.jsonl", domain_b = "scores_domain_b.jsonl" }}

[[methods]]
name = "external-tagger"
kind = "span_file"
spans = {{ domain_a = "spanpred_domain_a.jsonl", domain_b = "spanpred_domain_b.jsonl" }}
"""

INFERRED_CONFIG = """\
# Fully synthetic two-domain benchmark, inferred setting (gated by binary
# verdicts with a 10% error rate).
seed = 7
setting = "inferred"
train = "{train}"

[datasets]
domain_a = "domain_a.jsonl"
domain_b = "domain_b.jsonl"

[binary]
domain_a = "binary_domain_a.jsonl"
domain_b = "binary_domain_b.jsonl"

[[methods]]
name = "constructed"
kind = "constructed_lexicon"

[[methods]]
name = "wordlist-broad"
kind = "wordlist_lexicon"
lexicon = "wordlist_broad.txt"

[[methods]]
name = "synthetic-attr"
kind = "rationale_file"
scores = {{ domain_a = "scores_domain_a.jsonl", domain_b = "scores_domain_b.jsonl" }}
"""


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    domains = {
        "domain_a": build_domain("domain_a", TOXIC_A, seed=101),
        "domain_b": build_domain("domain_b", TOXIC_B, seed=202),
    }
    for name, dataset in domains.items():
        write_canonical(dataset, FIXTURES / f"{name}.jsonl")
        write_scores(make_scores(dataset, seed=11), FIXTURES / f"scores_{name}.jsonl")
        write_binary(make_binary(dataset, seed=22), FIXTURES / f"binary_{name}.jsonl")
        write_span_predictions(make_span_preds(dataset, seed=33), FIXTURES / f"spanpred_{name}.jsonl")

    broad = sorted(set(TOXIC_A) | set(TOXIC_B) | {"scum", "jerk"})
    narrow = sorted(set(TOXIC_A) & set(TOXIC_B))
    (FIXTURES / "wordlist_broad.txt").write_text("\n".join(broad) + "\n", encoding="utf-8")
    (FIXTURES / "wordlist_narrow.txt").write_text("\n".join(narrow) + "\n", encoding="utf-8")

    (FIXTURES / "experiment_oracle_a.toml").write_text(ORACLE_CONFIG.format(train="domain_a"), encoding="utf-8")
    (FIXTURES / "experiment_oracle_b.toml").write_text(ORACLE_CONFIG.format(train="domain_b"), encoding="utf-8")
    (FIXTURES / "experiment_inferred_a.toml").write_text(INFERRED_CONFIG.format(train="domain_a"), encoding="utf-8")
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
