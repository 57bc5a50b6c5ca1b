"""Caption generality metrics and their aggregation.

Four raw metrics in [0, 1]:

* SI: 1 - (entities + numerals) / words
* BT: min(sum of noun hyponym counts / (words * 2 * global mean), 1)
* TM: present-indicative verbs / total verbs, 0.5 when verbless
* DA: min(mean noun depth / (2 * global mean depth), 1)

Each is scaled by 10 and the generality score GS is the mean of the four
scaled values.

Note on DA's direction: deeper entries in a noun hierarchy are conventional
shorthand for *more specific* terms, yet DA rewards larger caption depth.
The formula is implemented exactly as defined; treat DA-heavy comparisons
with that in mind.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from .annotate import AnnotatedCaption, annotate
from .errors import CorpusFormatError, EmptyCaptionError
from .lexicon import Lexicon


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


@dataclass(frozen=True)
class GeneralityReport:
    si: float
    bt: float
    tm: float
    da: float

    @property
    def si10(self) -> float:
        return 10.0 * self.si

    @property
    def bt10(self) -> float:
        return 10.0 * self.bt

    @property
    def tm10(self) -> float:
        return 10.0 * self.tm

    @property
    def da10(self) -> float:
        return 10.0 * self.da

    @property
    def gs(self) -> float:
        return aggregate(self.si10, self.bt10, self.tm10, self.da10)

    def as_dict(self) -> dict:
        return {
            "si": self.si, "bt": self.bt, "tm": self.tm, "da": self.da,
            "si10": self.si10, "bt10": self.bt10, "tm10": self.tm10, "da10": self.da10,
            "gs": self.gs,
        }


def si_score(ann: AnnotatedCaption) -> float:
    """Information-specificity penalty: 1 - (Ent + Num) / N_word."""
    if ann.n_word < 1:
        raise EmptyCaptionError("caption has no countable words")
    return _clamp01(1.0 - (ann.ent + ann.num) / ann.n_word)


def bt_score(ann: AnnotatedCaption, lexicon: Lexicon) -> float:
    """Term broadness: clamped hyponym mass of the caption's nouns."""
    if ann.n_word < 1:
        raise EmptyCaptionError("caption has no countable words")
    total = 0
    for lemma in ann.nouns:
        entry = lexicon.lookup(lemma)
        if entry is not None:  # unknown nouns contribute nothing
            total += entry.hyponym_count
    return _clamp01(total / (ann.n_word * 2.0 * lexicon.avg_global_hypo))


def tm_score(ann: AnnotatedCaption) -> float:
    """Present-indicative verb fraction; 0.5 (neutral) for verbless captions."""
    if ann.v_total == 0:
        return 0.5
    return ann.count_pres_ind / ann.v_total


def da_score(ann: AnnotatedCaption, lexicon: Lexicon) -> float:
    """Abstraction degree: clamped mean depth of resolvable nouns.

    Captions without lexicon-resolvable nouns get 0 (no depth evidence).
    """
    depths = []
    for lemma in ann.nouns:
        entry = lexicon.lookup(lemma)
        if entry is not None:
            depths.append(entry.depth)
    if not depths:
        return 0.0
    da_caption = math.fsum(depths) / len(depths)
    return _clamp01(da_caption / (2.0 * lexicon.da_global))


def aggregate(si10: float, bt10: float, tm10: float, da10: float) -> float:
    """Mean of the four scaled metrics. Inputs must already be in [0, 10]."""
    for name, v in (("si10", si10), ("bt10", bt10), ("tm10", tm10), ("da10", da10)):
        if not (0.0 <= v <= 10.0):
            raise ValueError(f"{name} out of range [0, 10]: {v}")
    return math.fsum((si10, bt10, tm10, da10)) / 4.0


def score_caption(text: str, lexicon: Lexicon) -> GeneralityReport:
    ann = annotate(text, lexicon)
    if ann.n_word < 1:
        raise EmptyCaptionError(f"caption has no countable words: {text!r}")
    return GeneralityReport(
        si=si_score(ann),
        bt=bt_score(ann, lexicon),
        tm=tm_score(ann),
        da=da_score(ann, lexicon),
    )


# --- corpus-level scoring ---------------------------------------------------

@dataclass(frozen=True)
class CaptionRecord:
    id: str
    caption: str
    image: Optional[str] = None


def iter_caption_records(source: Union[str, Path, io.TextIOBase, Iterable[str]]) -> Iterator[CaptionRecord]:
    """Parse caption-corpus JSONL: one {id, caption[, image]} object per line."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from _iter_records(fh, path=source)
    else:
        yield from _iter_records(source, path=None)


def _iter_records(lines: Iterable[str], path) -> Iterator[CaptionRecord]:
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(lineno, f"invalid JSON: {exc.msg}", path=path) from None
        if not isinstance(obj, dict):
            raise CorpusFormatError(lineno, "record is not a JSON object", path=path)
        rec_id = obj.get("id")
        caption = obj.get("caption")
        if not isinstance(rec_id, str):
            raise CorpusFormatError(lineno, "missing or non-string 'id'", path=path)
        if not isinstance(caption, str):
            raise CorpusFormatError(lineno, "missing or non-string 'caption'", path=path)
        image = obj.get("image")
        if image is not None and not isinstance(image, str):
            raise CorpusFormatError(lineno, "'image' must be a string when present", path=path)
        yield CaptionRecord(id=rec_id, caption=caption, image=image)


@dataclass(frozen=True)
class CorpusSummary:
    count: int
    skipped: int
    mean_si10: float
    mean_bt10: float
    mean_tm10: float
    mean_da10: float
    mean_gs: float

    def as_dict(self) -> dict:
        return {
            "count": self.count, "skipped": self.skipped,
            "mean_si10": self.mean_si10, "mean_bt10": self.mean_bt10,
            "mean_tm10": self.mean_tm10, "mean_da10": self.mean_da10,
            "mean_gs": self.mean_gs,
        }


@dataclass(frozen=True)
class CorpusReport:
    reports: tuple[tuple[str, GeneralityReport], ...]  # (record id, report)
    summary: CorpusSummary


def score_corpus(source, lexicon: Lexicon) -> CorpusReport:
    """Score every record; empty captions are skipped and counted.

    Means use exact (order-independent) summation. A corpus that yields no
    scorable captions is an error.
    """
    scored: list[tuple[str, GeneralityReport]] = []
    skipped = 0
    for record in iter_caption_records(source):
        try:
            report = score_caption(record.caption, lexicon)
        except EmptyCaptionError:
            skipped += 1
            continue
        scored.append((record.id, report))
    if not scored:
        raise EmptyCaptionError("corpus contains no scorable captions")
    n = len(scored)
    summary = CorpusSummary(
        count=n,
        skipped=skipped,
        mean_si10=math.fsum(r.si10 for _, r in scored) / n,
        mean_bt10=math.fsum(r.bt10 for _, r in scored) / n,
        mean_tm10=math.fsum(r.tm10 for _, r in scored) / n,
        mean_da10=math.fsum(r.da10 for _, r in scored) / n,
        mean_gs=math.fsum(r.gs for _, r in scored) / n,
    )
    return CorpusReport(reports=tuple(scored), summary=summary)
