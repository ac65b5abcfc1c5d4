"""Corpus data model: tag inventories, sentences, vocabularies, file format, splits.

The on-disk format is a 4-column TSV, one token per line, blank line between
sentences, with a leading ``# id = <string>`` comment per sentence:

    token<TAB>predicate(0|1)<TAB>role-BIO-or-_<TAB>entity-BIO-or-_

Exactly one token per sentence carries predicate indicator 1. A ``_`` column
means the sentence is unlabeled for that task.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

UNK = "<unk>"


class CorpusError(ValueError):
    """Base class for corpus parsing/validation failures."""


class MalformedLineError(CorpusError):
    """A line does not follow the 4-column TSV contract."""


class InvalidBioError(CorpusError):
    """An I-x tag appears without a preceding B-x or I-x of the same label."""


class MissingPredicateError(CorpusError):
    """A sentence does not have exactly one token marked as predicate."""


class UnknownLabelError(CorpusError):
    """A BIO tag references a label outside the task's tag set."""


@dataclass(frozen=True)
class TagSet:
    """Ordered label inventory for one tagging task.

    ``labels`` are display names, ``codes`` the short forms used inside BIO
    tag strings (``B-<code>`` / ``I-<code>``). The derived ``bio_tags`` order
    is fixed: O first, then B/I pairs in label order, giving 2*len(labels)+1
    tags total.
    """

    task: str
    labels: tuple[str, ...]
    codes: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.codes):
            raise ValueError("labels and codes must be parallel")
        if len(set(self.codes)) != len(self.codes):
            raise ValueError("duplicate codes")

    @property
    def bio_tags(self) -> tuple[str, ...]:
        tags = ["O"]
        for code in self.codes:
            tags.append(f"B-{code}")
            tags.append(f"I-{code}")
        return tuple(tags)

    @property
    def num_tags(self) -> int:
        """Size of the BIO tag inventory (the K of the per-token softmax)."""
        return 2 * len(self.labels) + 1

    @property
    def o_index(self) -> int:
        return 0

    def tag_index(self, tag: str) -> int:
        try:
            return self.bio_tags.index(tag)
        except ValueError:
            raise UnknownLabelError(f"unknown {self.task} tag {tag!r}") from None

    def code_of(self, label: str) -> str:
        return self.codes[self.labels.index(label)]

    def label_of(self, code: str) -> str:
        return self.labels[self.codes.index(code)]

    def encode(self, tags: Iterable[str]) -> np.ndarray:
        return np.array([self.tag_index(t) for t in tags], dtype=np.int64)

    def decode(self, indices: Iterable[int]) -> tuple[str, ...]:
        bio = self.bio_tags
        return tuple(bio[int(i)] for i in indices)

    @staticmethod
    def srl_default() -> "TagSet":
        return TagSet(
            task="SRL",
            labels=("AGENT", "PATIENT", "BENEFACTOR", "GREET", "LOCATION", "TIME"),
            codes=("A", "PS", "BN", "G", "L", "T"),
        )

    @staticmethod
    def er_default() -> "TagSet":
        return TagSet(
            task="ER",
            labels=("PERSON", "LOCATION", "ORGANIZATION", "MISC"),
            codes=("PERSON", "LOCATION", "ORGANIZATION", "MISC"),
        )


def validate_bio(tags: Iterable[str], tag_set: TagSet) -> None:
    """Raise on tags outside ``tag_set`` or I-x not preceded by B-x/I-x."""
    prev_code = None
    for i, tag in enumerate(tags):
        if tag not in tag_set.bio_tags:
            raise UnknownLabelError(f"unknown {tag_set.task} tag {tag!r} at position {i}")
        if tag.startswith("I-"):
            code = tag[2:]
            if prev_code != code:
                raise InvalidBioError(
                    f"{tag_set.task} tag {tag!r} at position {i} does not continue a span"
                )
            prev_code = code
        elif tag.startswith("B-"):
            prev_code = tag[2:]
        else:
            prev_code = None


def repair_bio(tags: Iterable[str]) -> tuple[str, ...]:
    """Demote orphan I-x tags to B-x so any tag sequence becomes well-formed."""
    repaired: list[str] = []
    prev_code = None
    for tag in tags:
        if tag.startswith("I-"):
            code = tag[2:]
            if prev_code != code:
                tag = "B-" + code
            prev_code = code
        elif tag.startswith("B-"):
            prev_code = tag[2:]
        else:
            prev_code = None
        repaired.append(tag)
    return tuple(repaired)


@dataclass(frozen=True)
class Sentence:
    """One (sentence, predicate) instance with optional gold tag sequences."""

    id: str
    tokens: tuple[str, ...]
    predicate_index: int
    srl_tags: tuple[str, ...] | None = None
    er_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise CorpusError(f"sentence {self.id!r} has no tokens")
        if not 0 <= self.predicate_index < len(self.tokens):
            raise MissingPredicateError(
                f"sentence {self.id!r}: predicate index {self.predicate_index} out of range"
            )
        for tags in (self.srl_tags, self.er_tags):
            if tags is not None and len(tags) != len(self.tokens):
                raise CorpusError(f"sentence {self.id!r}: tag/token length mismatch")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Vocab:
    """Token-to-index map with a reserved UNK entry at index 0."""

    itos: tuple[str, ...]
    stoi: Mapping[str, int] = field(repr=False, hash=False, compare=False, default=None)

    def __post_init__(self):
        if self.itos[0] != UNK:
            raise ValueError("index 0 is reserved for UNK")
        object.__setattr__(self, "stoi", {s: i for i, s in enumerate(self.itos)})

    @property
    def unk_index(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def index(self, token: str) -> int:
        return self.stoi.get(token, 0)


@dataclass(frozen=True)
class Corpus:
    """Immutable sentence collection plus (optionally built) vocabularies."""

    sentences: tuple[Sentence, ...]
    srl_tag_set: TagSet = field(default_factory=TagSet.srl_default)
    er_tag_set: TagSet = field(default_factory=TagSet.er_default)
    word_vocab: Vocab | None = None
    char_vocab: Vocab | None = None

    def __post_init__(self):
        ids = [s.id for s in self.sentences]
        if len(set(ids)) != len(ids):
            raise CorpusError("duplicate sentence ids")
        object.__setattr__(self, "_by_id", {s.id: s for s in self.sentences})

    def __len__(self) -> int:
        return len(self.sentences)

    def __getitem__(self, sentence_id: str) -> Sentence:
        return self._by_id[sentence_id]

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self._by_id

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sentences)


def parse_corpus(stream, srl_tag_set: TagSet | None = None,
                 er_tag_set: TagSet | None = None) -> Corpus:
    """Parse the 4-column TSV format into a Corpus (vocabularies not built).

    ``stream`` is a text file object or a string. BIO well-formedness and the
    one-predicate-per-sentence contract are validated; an all-``_`` tag column
    yields a None tag sequence (unlabeled for that task).
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    srl_tag_set = srl_tag_set or TagSet.srl_default()
    er_tag_set = er_tag_set or TagSet.er_default()

    sentences: list[Sentence] = []
    rows: list[tuple[str, str, str, str]] = []
    current_id: str | None = None
    auto_index = 0

    def flush():
        nonlocal rows, current_id, auto_index
        if not rows:
            current_id = None
            return
        sid = current_id if current_id is not None else f"s{auto_index:06d}"
        auto_index += 1
        tokens = tuple(r[0] for r in rows)
        pred_flags = [r[1] for r in rows]
        if pred_flags.count("1") != 1:
            raise MissingPredicateError(
                f"sentence {sid!r}: expected exactly one predicate marker, got "
                f"{pred_flags.count('1')}"
            )
        predicate_index = pred_flags.index("1")

        def column(idx: int, tag_set: TagSet) -> tuple[str, ...] | None:
            values = [r[idx] for r in rows]
            blanks = sum(v == "_" for v in values)
            if blanks == len(values):
                return None
            if blanks:
                raise MalformedLineError(
                    f"sentence {sid!r}: mixed labeled/unlabeled {tag_set.task} column"
                )
            validate_bio(values, tag_set)
            return tuple(values)

        sentences.append(Sentence(
            id=sid,
            tokens=tokens,
            predicate_index=predicate_index,
            srl_tags=column(2, srl_tag_set),
            er_tags=column(3, er_tag_set),
        ))
        rows = []
        current_id = None

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if line.startswith("# id ="):
            if rows:
                flush()
            current_id = line[len("# id ="):].strip()
            continue
        if line.strip() == "":
            flush()
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise MalformedLineError(f"line {lineno}: expected 4 columns, got {len(fields)}")
        token, pred, srl, er = fields
        if token == "" or pred not in ("0", "1"):
            raise MalformedLineError(f"line {lineno}: bad token or predicate field")
        rows.append((token, pred, srl, er))
    flush()

    return Corpus(tuple(sentences), srl_tag_set=srl_tag_set, er_tag_set=er_tag_set)


def serialize_corpus(corpus: Corpus, hide_labels_for: set[str] | None = None) -> str:
    """Render a Corpus in the canonical TSV format (round-trips byte-exactly).

    Sentences whose id is in ``hide_labels_for`` are written with ``_`` tag
    columns, i.e. as the unlabeled pool view.
    """
    hide = hide_labels_for or set()
    out: list[str] = []
    for s in corpus.sentences:
        out.append(f"# id = {s.id}\n")
        srl = s.srl_tags if s.id not in hide else None
        er = s.er_tags if s.id not in hide else None
        for t in range(len(s)):
            fields = (
                s.tokens[t],
                "1" if t == s.predicate_index else "0",
                srl[t] if srl is not None else "_",
                er[t] if er is not None else "_",
            )
            out.append("\t".join(fields) + "\n")
        out.append("\n")
    return "".join(out)


def build_vocab(corpus: Corpus, train_ids: Iterable[str], min_count: int = 1) -> Corpus:
    """Return a new Corpus with vocabularies built from the training split only.

    Word tokens are lowercased; characters keep their case. Both vocabularies
    reserve UNK at index 0. Entries are ordered by descending frequency, ties
    broken lexicographically, so the result is independent of sentence order.
    """
    train_ids = set(train_ids)
    missing = train_ids - set(corpus.ids)
    if missing:
        raise CorpusError(f"train ids not in corpus: {sorted(missing)[:3]}")

    word_counts: dict[str, int] = {}
    char_counts: dict[str, int] = {}
    for s in corpus.sentences:
        if s.id not in train_ids:
            continue
        for token in s.tokens:
            word_counts[token.lower()] = word_counts.get(token.lower(), 0) + 1
            for ch in token:
                char_counts[ch] = char_counts.get(ch, 0) + 1

    def to_vocab(counts: dict[str, int], cutoff: int) -> Vocab:
        kept = sorted((w for w, c in counts.items() if c >= cutoff),
                      key=lambda w: (-counts[w], w))
        return Vocab(itos=(UNK, *kept))

    return replace(corpus,
                   word_vocab=to_vocab(word_counts, min_count),
                   char_vocab=to_vocab(char_counts, 1))


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic train/dev/test + seed-labeled/pool split configuration."""

    train_fraction: float = 0.8
    dev_fraction: float = 0.1
    test_fraction: float = 0.1
    seed_labeled_fraction: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        fracs = (self.train_fraction, self.dev_fraction, self.test_fraction)
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError("train/dev/test fractions must sum to 1")
        if not all(0.0 <= f <= 1.0 for f in fracs):
            raise ValueError("fractions must lie in [0, 1]")
        if not 0.0 <= self.seed_labeled_fraction <= 1.0:
            raise ValueError("seed_labeled_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class Splits:
    """Disjoint, exhaustive id partition plus the train-internal AL split."""

    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]
    seed_labeled: tuple[str, ...]
    pool_unlabeled: tuple[str, ...]


def _largest_remainder(total: int, fractions: tuple[float, ...]) -> list[int]:
    quotas = [f * total for f in fractions]
    counts = [int(np.floor(q)) for q in quotas]
    leftover = total - sum(counts)
    order = sorted(range(len(fractions)), key=lambda i: -(quotas[i] - counts[i]))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def split_corpus(corpus: Corpus, spec: SplitSpec) -> Splits:
    """Partition sentence ids into train/dev/test and split train into
    seed-labeled and unlabeled-pool parts.

    Sizes follow largest-remainder allocation of the fractions; the
    seed-labeled size is round(seed_labeled_fraction * |train|), half up.
    Deterministic given ``spec.rng_seed``. Pool sentences keep their gold
    tags in the corpus; hiding them from the learner is the caller's job.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot split an empty corpus")
    rng = np.random.default_rng(spec.rng_seed)
    ids = list(corpus.ids)
    perm = rng.permutation(len(ids))
    shuffled = [ids[i] for i in perm]

    n_train, n_dev, n_test = _largest_remainder(
        len(ids), (spec.train_fraction, spec.dev_fraction, spec.test_fraction))
    train = shuffled[:n_train]
    dev = shuffled[n_train:n_train + n_dev]
    test = shuffled[n_train + n_dev:]

    n_seed = round_half_up(spec.seed_labeled_fraction * n_train)
    seed_labeled = train[:n_seed]
    pool = train[n_seed:]
    return Splits(
        train=tuple(train),
        dev=tuple(dev),
        test=tuple(test),
        seed_labeled=tuple(seed_labeled),
        pool_unlabeled=tuple(pool),
    )
