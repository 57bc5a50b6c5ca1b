"""Deterministic rule-based tokenizer and caption annotator.

Produces every count the generality metrics consume: word count, named
entities, numerals, verb totals, present-indicative verb count, and the
caption's lexicon-resolved noun lemmas. The rules replace a statistical
tagger with an auditable cascade so every downstream number is reproducible
bit-for-bit.

Token rules, applied in order:

1. numeric  -- digits with optional ``.``/``,``/``%``, or a bundled number word
2. entity   -- capitalized and not sentence-initial; or all-caps of length
               >= 2; or a gazetteer word (weekdays, months, common names and
               places). Sentence-initial capitalized tokens need the
               gazetteer.
3. verb     -- lemma resolves through the auxiliary/modal table, the
               irregular-verb table, or suffix stripping into the bundled
               verb list. Present-indicative forms are base or third-person
               present; the modals can/will/may/must/shall count, while
               could/would/should/might, participles, past forms, and
               ``to``-infinitives do not.
4. noun     -- singularized lemma found in the supplied lexicon
5. other

"am" is deliberately absent from the auxiliary table: in captions it almost
always marks clock time ("10 am"), not the first person of "be".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from .lexicon import Lexicon

NOUN = "NOUN"
PROPN = "PROPN"
VERB = "VERB"
NUM = "NUM"
OTHER = "OTHER"

PRES_IND = "PRES_IND"
OTHER_VERB = "OTHER_VERB"
NONE = "NONE"

_NUMERIC_RE = re.compile(r"^[0-9][0-9.,%]*$")
_SPLIT_RE = re.compile(r"[-/]")
_SENTENCE_END = (".", "!", "?")

# present-indicative-compatible verb forms
_PRES_FORMS = {"base", "pres", "pres3", "modal_pres"}

_MODALS_PRES = {"can", "will", "may", "must", "shall"}
_MODALS_NONPRES = {"could", "would", "should", "might"}


def _resource_text(name: str) -> str:
    return (resources.files("replimit") / "resources" / name).read_text(encoding="utf-8")


def _load_wordset(name: str) -> frozenset[str]:
    out = set()
    for line in _resource_text(name).splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            out.add(line)
    return frozenset(out)


@lru_cache(maxsize=None)
def _verb_set() -> frozenset[str]:
    return _load_wordset("verbs.txt")


@lru_cache(maxsize=None)
def _number_words() -> frozenset[str]:
    return _load_wordset("number_words.txt")


@lru_cache(maxsize=None)
def _gazetteer() -> frozenset[str]:
    return _load_wordset("gazetteer.txt")


@lru_cache(maxsize=None)
def _irregular_verbs() -> dict[str, tuple[str, str]]:
    table = {}
    for lineno, line in enumerate(_resource_text("irregular_verbs.tsv").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ValueError(f"irregular_verbs.tsv line {lineno}: expected 3 columns")
        inflected, base, form = cols
        table[inflected] = (base, form)
    return table


@lru_cache(maxsize=None)
def common_noun_lemmas() -> frozenset[str]:
    """The bundled common-noun vocabulary (also the RC replacement pool)."""
    return _load_wordset("nouns.txt")


@dataclass(frozen=True)
class Token:
    text: str
    lemma: str
    pos: str
    is_entity: bool
    is_numeric: bool
    verb_form: str

    def __post_init__(self):
        if (self.verb_form != NONE) != (self.pos == VERB):
            raise ValueError("verb_form must be set exactly for VERB tokens")
        if self.is_numeric and self.pos != NUM:
            raise ValueError("numeric tokens must have pos NUM")


@dataclass(frozen=True)
class AnnotatedCaption:
    tokens: tuple[Token, ...]
    n_word: int
    ent: int
    num: int
    v_total: int
    count_pres_ind: int
    nouns: tuple[str, ...]

    def __post_init__(self):
        if self.ent + self.num > self.n_word:
            raise ValueError("ent + num cannot exceed n_word")
        if self.count_pres_ind > self.v_total:
            raise ValueError("count_pres_ind cannot exceed v_total")
        if self.tokens and self.n_word < 1:
            raise ValueError("non-empty captions must have n_word >= 1")


def _strip_outer(piece: str) -> str:
    # keep '%' so percentage tokens survive for the numeric rule
    start, end = 0, len(piece)
    while start < end and not (piece[start].isalnum() or piece[start] == "%"):
        start += 1
    while end > start and not (piece[end - 1].isalnum() or piece[end - 1] == "%"):
        end -= 1
    return piece[start:end]


def _fragments(text: str) -> list[tuple[str, bool]]:
    """(token text, sentence-initial flag) pairs, in order."""
    out = []
    sentence_start = True
    for raw in text.split():
        ends_sentence = raw.endswith(_SENTENCE_END)
        for piece in _SPLIT_RE.split(raw):
            piece = _strip_outer(piece)
            if not piece:
                continue
            out.append((piece, sentence_start))
            sentence_start = False
        if ends_sentence:
            sentence_start = True
    return out


def tokenize(text: str) -> list[str]:
    """Whitespace split, outer punctuation stripped, hyphen/slash split."""
    return [piece for piece, _ in _fragments(text)]


def _is_numeric(piece: str) -> bool:
    return bool(_NUMERIC_RE.match(piece)) or piece.lower() in _number_words()


def _is_entity(piece: str, sentence_initial: bool) -> bool:
    lower = piece.lower()
    if lower in _gazetteer():
        return True
    if len(piece) >= 2 and piece.isupper():
        return True
    if piece[0].isupper() and not sentence_initial:
        return True
    return False


def _verb_suffix_candidates(lower: str):
    """(candidate base, form) pairs from regular suffix stripping."""
    if len(lower) > 4 and lower.endswith("ing"):
        stem = lower[:-3]
        yield stem, "ger"
        yield stem + "e", "ger"
        if len(stem) >= 2 and stem[-1] == stem[-2]:
            yield stem[:-1], "ger"
    if len(lower) > 3 and lower.endswith("ed"):
        stem = lower[:-2]
        yield stem, "past"
        yield lower[:-1], "past"
        if len(stem) >= 2 and stem[-1] == stem[-2]:
            yield stem[:-1], "past"
    if len(lower) > 3 and lower.endswith("ies"):
        yield lower[:-3] + "y", "pres3"
    if len(lower) > 3 and lower.endswith("es"):
        yield lower[:-2], "pres3"
    if len(lower) > 2 and lower.endswith("s") and not lower.endswith("ss"):
        yield lower[:-1], "pres3"


def _verb_lemma(lower: str) -> Optional[tuple[str, str]]:
    """(base lemma, form) for verb tokens, None otherwise."""
    if lower in _MODALS_PRES:
        return lower, "modal_pres"
    if lower in _MODALS_NONPRES:
        return lower, "modal_past"
    irregular = _irregular_verbs()
    if lower in irregular:
        return irregular[lower]
    verbs = _verb_set()
    if lower in verbs:
        return lower, "base"
    for candidate, form in _verb_suffix_candidates(lower):
        if candidate in verbs:
            return candidate, form
    return None


def _singular_candidates(lower: str):
    # lexicon membership decides among the candidates, so over-generating
    # (boxes -> box, horses -> hors/horse) is harmless
    yield lower
    if len(lower) > 3 and lower.endswith("ies"):
        yield lower[:-3] + "y"
    if len(lower) > 3 and lower.endswith("es"):
        yield lower[:-2]
    if len(lower) > 1 and lower.endswith("s") and not lower.endswith("ss"):
        yield lower[:-1]


def _noun_lemma(lower: str, lexicon: Lexicon) -> Optional[str]:
    for candidate in _singular_candidates(lower):
        if lexicon.lookup(candidate) is not None:
            return candidate
    return None


def annotate(text: str, lexicon: Lexicon) -> AnnotatedCaption:
    """Apply the rule cascade to each token and collect the metric counts."""
    tokens: list[Token] = []
    prev_lower: Optional[str] = None
    for piece, sentence_initial in _fragments(text):
        lower = piece.lower()
        if _is_numeric(piece):
            tok = Token(piece, lower, NUM, False, True, NONE)
        elif _is_entity(piece, sentence_initial):
            tok = Token(piece, lower, PROPN, True, False, NONE)
        else:
            verb = _verb_lemma(lower)
            if verb is not None:
                base, form = verb
                pres = form in _PRES_FORMS and not (form == "base" and prev_lower == "to")
                tok = Token(piece, base, VERB, False, False, PRES_IND if pres else OTHER_VERB)
            else:
                noun = _noun_lemma(lower, lexicon)
                if noun is not None:
                    tok = Token(piece, noun, NOUN, False, False, NONE)
                else:
                    tok = Token(piece, lower, OTHER, False, False, NONE)
        tokens.append(tok)
        prev_lower = lower

    n_word = sum(1 for t in tokens if any(c.isalnum() for c in t.text))
    return AnnotatedCaption(
        tokens=tuple(tokens),
        n_word=n_word,
        ent=sum(1 for t in tokens if t.is_entity),
        num=sum(1 for t in tokens if t.is_numeric),
        v_total=sum(1 for t in tokens if t.pos == VERB),
        count_pres_ind=sum(1 for t in tokens if t.verb_form == PRES_IND),
        nouns=tuple(t.lemma for t in tokens if t.pos == NOUN),
    )
