"""Schema-compatible synthetic conversational corpus generator.

Emits chat-style sentences (user messages to a bot) with one marked
predicate per sentence, consistent role and entity gold tags, and optional
character-level noise that mimics misspellings and slang. The generator is
the stand-in for the private conversational dataset: same tag inventories,
same file schema, controllable size and role distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, Sentence, TagSet

# Default role weights, proportional to the span counts the reference corpus
# reports per role. Spans per sentence average ~1.21.
DEFAULT_ROLE_WEIGHTS: dict[str, float] = {
    "AGENT": 2843.0,
    "PATIENT": 3040.0,
    "BENEFACTOR": 293.0,
    "GREET": 572.0,
    "LOCATION": 183.0,
    "TIME": 399.0,
}
_SPANS_PER_SENTENCE = 1.21


class InvalidConfigError(ValueError):
    """Generator settings violate their domain (negative count or weights)."""


@dataclass(frozen=True)
class GeneratorConfig:
    count: int = 1000
    role_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_ROLE_WEIGHTS))
    noise_rate: float = 0.0

    def __post_init__(self):
        if self.count < 0:
            raise InvalidConfigError(f"count must be >= 0, got {self.count}")
        if set(self.role_weights) != set(DEFAULT_ROLE_WEIGHTS):
            raise InvalidConfigError("role_weights must cover exactly the six roles")
        if any(w < 0 for w in self.role_weights.values()):
            raise InvalidConfigError("role weights must be nonnegative")
        if sum(self.role_weights.values()) <= 0:
            raise InvalidConfigError("role weights must not all be zero")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise InvalidConfigError("noise_rate must lie in [0, 1]")


NAMES = ("Jemma", "Andi", "Rara", "Boby", "Sinta", "Dewi", "Rizky", "Tono",
         "Maya", "Putri", "Agus", "Wulan", "Nina", "Farhan")
HONORIFICS = ("kak", "bang", "mbak")
PRONOUNS = ("aku", "kamu", "saya", "dia", "kita")
GREETING_WORDS = ("hi", "halo", "hai", "pagi", "malem")
VERBS = ("pesan", "beli", "kirim", "cari", "makan", "minum", "nonton",
         "dengar", "baca", "kasih", "bantu", "tanya", "jawab", "main",
         "bayar", "pinjam", "lihat", "kangen", "ajak", "download")
MODALS = ("mau", "bisa", "pengen", "lagi")
# Patient noun phrases: (tokens, entity label or None).
PATIENTS_PLAIN = (("buku",), ("kado",), ("pulsa",), ("tiket",), ("lagu",),
                  ("film",), ("foto",), ("kopi",), ("es", "teh"),
                  ("nasi", "goreng"), ("mie", "ayam"), ("info", "makanan"),
                  ("sahabat", "virtual"), ("komik",), ("novel",), ("uang",),
                  ("baju",), ("sepatu",))
PATIENTS_MISC = (("mobile", "legends"), ("get", "rick"), ("spotify",),
                 ("wifi", "id"), ("flazz",))
PATIENTS_ORG = (("gojek",), ("tokopedia",), ("telkomsel",), ("shopee",), ("grab",))
PLACES = (("rumah",), ("kantor",), ("sekolah",), ("mall",), ("jakarta",),
          ("bandung",), ("surabaya",), ("warung",), ("kampus",), ("sana",),
          ("rumah", "sakit"))
TIMES = (("besok",), ("sekarang",), ("nanti",), ("kemarin",), ("tadi", "pagi"),
         ("hari", "ini"), ("malam", "ini"), ("minggu", "depan"), ("nanti", "sore"))
PARTICLES = ("dong", "ya", "deh", "nih", "kok", "min", "please")
PUNCT = (".", "?", "!")
LOC_PREPS = ("di", "ke")
BEN_PREPS = ("untuk", "buat")

SLANG = {
    "kamu": "km", "aku": "ak", "mau": "mo", "gak": "ga", "sekarang": "skrg",
    "besok": "bsk", "boleh": "blh", "tolong": "tlg", "download": "donlot",
    "makan": "mkn", "pesan": "pesen", "dengar": "denger", "lihat": "liat",
    "pagi": "pg", "nanti": "ntar", "saya": "sy", "please": "pls",
}

_VOWELS = "aeiou"
_CONSONANTS = "bcdfghjklmnpqrstvwyz"


def lexicon() -> set[str]:
    """Every token surface the generator can emit at noise rate 0."""
    toks: set[str] = set()
    toks.update(NAMES, HONORIFICS, PRONOUNS, GREETING_WORDS, VERBS, MODALS,
                PARTICLES, PUNCT, LOC_PREPS, BEN_PREPS, (",",))
    for group in (PATIENTS_PLAIN, PATIENTS_MISC, PATIENTS_ORG, PLACES, TIMES):
        for phrase in group:
            toks.update(phrase)
    return toks


def _perturb(token: str, rng: np.random.Generator) -> str:
    """One character-level misspelling or slang substitution."""
    if token in SLANG:
        return SLANG[token]
    if len(token) < 3 or not token.isalpha():
        return token
    op = rng.integers(0, 4)
    i = int(rng.integers(0, len(token)))
    if op == 0:  # drop
        return token[:i] + token[i + 1:]
    if op == 1:  # duplicate
        return token[:i + 1] + token[i] + token[i + 1:]
    if op == 2 and len(token) >= 2:  # swap adjacent
        i = min(i, len(token) - 2)
        return token[:i] + token[i + 1] + token[i] + token[i + 2:]
    pool = _VOWELS if token[i] in _VOWELS else _CONSONANTS
    return token[:i] + pool[int(rng.integers(0, len(pool)))] + token[i + 1:]


def _pick(rng: np.random.Generator, seq):
    return seq[int(rng.integers(0, len(seq)))]


def _role_quota_matrix(n: int, weights: dict[str, float],
                       rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Per-role boolean inclusion vectors with exact per-role counts, so the
    realized role distribution matches the weight ratios up to rounding."""
    total = sum(weights.values())
    include: dict[str, np.ndarray] = {}
    for role in DEFAULT_ROLE_WEIGHTS:  # fixed iteration order
        rate = min(0.97, _SPANS_PER_SENTENCE * weights[role] / total)
        target = int(np.floor(rate * n + 0.5))
        flags = np.zeros(n, dtype=bool)
        if target:
            flags[rng.choice(n, size=target, replace=False)] = True
        include[role] = flags
    return include


def _person_phrase(rng: np.random.Generator) -> tuple[str, ...]:
    if rng.random() < 0.3:
        return (_pick(rng, HONORIFICS), _pick(rng, NAMES))
    return (_pick(rng, NAMES),)


def _patient_phrase(rng: np.random.Generator) -> tuple[tuple[str, ...], str | None]:
    u = rng.random()
    if u < 0.55:
        return _pick(rng, PATIENTS_PLAIN), None
    if u < 0.70:
        return _pick(rng, PATIENTS_MISC), "MISC"
    if u < 0.82:
        return _pick(rng, PATIENTS_ORG), "ORGANIZATION"
    if rng.random() < 0.6:
        return (_pick(rng, ("kamu", "dia")),), "PERSON"
    return _person_phrase(rng), "PERSON"


def generate_synthetic(config: GeneratorConfig, rng_seed: int = 0) -> Corpus:
    """Generate a deterministic synthetic corpus (vocabularies not built)."""
    rng = np.random.default_rng(rng_seed)
    srl_ts = TagSet.srl_default()
    er_ts = TagSet.er_default()
    n = config.count
    include = _role_quota_matrix(n, config.role_weights, rng)

    sentences: list[Sentence] = []
    for i in range(n):
        tokens: list[str] = []
        srl = []
        er = []
        predicate_index = -1

        def emit(toks, role_code=None, er_label=None, predicate=False):
            nonlocal predicate_index
            if predicate:
                predicate_index = len(tokens)
            for j, tok in enumerate(toks):
                tokens.append(tok)
                srl.append("O" if role_code is None
                           else ("B-" if j == 0 else "I-") + role_code)
                er.append("O" if er_label is None
                          else ("B-" if j == 0 else "I-") + er_label)

        if include["GREET"][i]:
            emit((_pick(rng, GREETING_WORDS),))
            emit(_person_phrase(rng), role_code="G", er_label="PERSON")
            if rng.random() < 0.6:
                emit((",",))

        time_phrase = _pick(rng, TIMES) if include["TIME"][i] else None
        time_fronted = time_phrase is not None and rng.random() < 0.2
        if time_fronted:
            emit(time_phrase, role_code="T")

        if include["AGENT"][i]:
            if rng.random() < 0.7:
                emit((_pick(rng, PRONOUNS),), role_code="A", er_label="PERSON")
            else:
                emit(_person_phrase(rng), role_code="A", er_label="PERSON")
        if rng.random() < 0.25:
            emit((_pick(rng, MODALS),))

        emit((_pick(rng, VERBS),), predicate=True)

        if include["PATIENT"][i]:
            phrase, ent = _patient_phrase(rng)
            emit(phrase, role_code="PS", er_label=ent)
        if include["BENEFACTOR"][i]:
            emit((_pick(rng, BEN_PREPS),))
            emit(_person_phrase(rng) if rng.random() < 0.4
                 else (_pick(rng, ("dia", "kamu", "kita")),),
                 role_code="BN", er_label="PERSON")
        if include["LOCATION"][i]:
            emit((_pick(rng, LOC_PREPS),))
            emit(_pick(rng, PLACES), role_code="L", er_label="LOCATION")
        if time_phrase is not None and not time_fronted:
            emit(time_phrase, role_code="T")

        if rng.random() < 0.5:
            emit((_pick(rng, PARTICLES),))
        if rng.random() < 0.7:
            emit((_pick(rng, PUNCT),))

        if config.noise_rate > 0:
            noisy = []
            for tok in tokens:
                if rng.random() < config.noise_rate:
                    noisy.append(_perturb(tok, rng))
                else:
                    noisy.append(tok)
            tokens = noisy

        sentences.append(Sentence(
            id=f"syn-{i:05d}",
            tokens=tuple(tokens),
            predicate_index=predicate_index,
            srl_tags=tuple(srl),
            er_tags=tuple(er),
        ))

    return Corpus(tuple(sentences), srl_tag_set=srl_ts, er_tag_set=er_ts)
