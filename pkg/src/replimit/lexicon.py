"""Lexical database: per-lemma hyponym counts and hierarchy depths, plus the
corpus-level normalizers used by the breadth and abstraction metrics.

The on-disk sources are either a WordNet 3.x noun database (``data.noun`` +
``index.noun``) or this package's compact TSV format.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

from .errors import DegenerateLexiconError, LexiconFormatError, WordNetFormatError

TOP_K_DEFAULT = 30000

_HYPERNYM_SYMBOLS = {"@", "@i"}
_HYPONYM_SYMBOLS = {"~", "~i"}


@dataclass(frozen=True)
class LexEntry:
    """One noun lemma with its mean direct-hyponym count and mean depth."""

    lemma: str
    hyponym_count: int
    depth: float

    def __post_init__(self):
        if not self.lemma or self.lemma != self.lemma.strip() or self.lemma != self.lemma.lower():
            raise ValueError(f"lemma must be non-empty, lowercase, unpadded: {self.lemma!r}")
        if self.hyponym_count < 0:
            raise ValueError(f"hyponym_count must be >= 0: {self.hyponym_count}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0: {self.depth}")


class Lexicon:
    """Immutable lemma -> LexEntry map with positive global normalizers."""

    __slots__ = ("entries", "avg_global_hypo", "da_global", "source")

    def __init__(self, entries: Mapping[str, LexEntry] | Iterable[LexEntry],
                 avg_global_hypo: float, da_global: float, source: str = ""):
        if not isinstance(entries, Mapping):
            entries = {e.lemma: e for e in entries}
        if avg_global_hypo <= 0:
            raise ValueError(f"avg_global_hypo must be > 0: {avg_global_hypo}")
        if da_global <= 0:
            raise ValueError(f"da_global must be > 0: {da_global}")
        object.__setattr__(self, "entries", MappingProxyType(dict(entries)))
        object.__setattr__(self, "avg_global_hypo", float(avg_global_hypo))
        object.__setattr__(self, "da_global", float(da_global))
        object.__setattr__(self, "source", source)

    def __setattr__(self, name, value):
        raise AttributeError("Lexicon is immutable")

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        return (f"Lexicon(len={len(self.entries)}, avg_global_hypo={self.avg_global_hypo:.6g}, "
                f"da_global={self.da_global:.6g}, source={self.source!r})")

    def lookup(self, lemma: str) -> Optional[LexEntry]:
        """Case-insensitive exact-match lookup; absent lemmas yield None."""
        if not lemma:
            return None
        return self.entries.get(lemma.lower())


def compute_globals(entries: Iterable[LexEntry], top_k: int = TOP_K_DEFAULT,
                    tag_counts: Optional[Mapping[str, int]] = None) -> tuple[float, float]:
    """Mean hyponym count and mean depth over the top_k most relevant lemmas.

    Relevance is the sense-tag count when ``tag_counts`` is supplied (ties and
    missing counts fall back to lexicographic order); otherwise plain
    lexicographic order is used. Fewer than top_k entries means all are used.
    """
    entries = list(entries)
    if not entries:
        raise DegenerateLexiconError("cannot compute globals over an empty lexicon")
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1: {top_k}")
    if tag_counts is not None:
        entries.sort(key=lambda e: (-tag_counts.get(e.lemma, 0), e.lemma))
    else:
        entries.sort(key=lambda e: e.lemma)
    chosen = entries[:top_k]
    n = len(chosen)
    avg_hypo = math.fsum(e.hyponym_count for e in chosen) / n
    avg_depth = math.fsum(e.depth for e in chosen) / n
    if avg_hypo <= 0:
        raise DegenerateLexiconError("selected lemmas have all-zero hyponym counts")
    if avg_depth <= 0:
        raise DegenerateLexiconError("selected lemmas have all-zero depths")
    return avg_hypo, avg_depth


# --- WordNet 3.x import -----------------------------------------------------

@dataclass
class _Synset:
    offset: str
    hypernyms: list[str] = field(default_factory=list)
    n_hyponyms: int = 0


def _parse_data_noun(path: Path) -> dict[str, _Synset]:
    if not path.is_file():
        raise WordNetFormatError(path, 0, "missing file")
    synsets: dict[str, _Synset] = {}
    offset_bytes = 0
    with open(path, "rb") as fh:
        for raw in fh:
            line_start = offset_bytes
            offset_bytes += len(raw)
            if raw.startswith(b" ") or not raw.strip():
                continue  # license header / blank
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise WordNetFormatError(path, line_start, f"undecodable line: {exc}") from None
            fields = line.split()
            try:
                syn_offset = fields[0]
                int(syn_offset)
                w_cnt = int(fields[3], 16)
                p_idx = 4 + 2 * w_cnt
                p_cnt = int(fields[p_idx], 10)
                syn = _Synset(offset=syn_offset)
                for i in range(p_cnt):
                    base = p_idx + 1 + 4 * i
                    symbol = fields[base]
                    target = fields[base + 1]
                    # fields[base+2] is pos, fields[base+3] is source/target
                    _ = fields[base + 3]
                    if symbol in _HYPERNYM_SYMBOLS:
                        syn.hypernyms.append(target)
                    elif symbol in _HYPONYM_SYMBOLS:
                        syn.n_hyponyms += 1
            except (IndexError, ValueError) as exc:
                raise WordNetFormatError(path, line_start, f"malformed synset record: {exc}") from None
            synsets[syn.offset] = syn
    if not synsets:
        raise WordNetFormatError(path, offset_bytes, "no synset records found")
    return synsets


def _parse_index_noun(path: Path) -> dict[str, tuple[int, list[str]]]:
    """lemma -> (tagsense_count, synset offsets)."""
    if not path.is_file():
        raise WordNetFormatError(path, 0, "missing file")
    index: dict[str, tuple[int, list[str]]] = {}
    offset_bytes = 0
    with open(path, "rb") as fh:
        for raw in fh:
            line_start = offset_bytes
            offset_bytes += len(raw)
            if raw.startswith(b" ") or not raw.strip():
                continue
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise WordNetFormatError(path, line_start, f"undecodable line: {exc}") from None
            fields = line.split()
            try:
                lemma = fields[0].lower()
                synset_cnt = int(fields[2])
                p_cnt = int(fields[3])
                tail = 4 + p_cnt
                _sense_cnt = int(fields[tail])
                tagsense_cnt = int(fields[tail + 1])
                offsets = fields[tail + 2: tail + 2 + synset_cnt]
                if len(offsets) != synset_cnt:
                    raise ValueError(f"expected {synset_cnt} synset offsets, found {len(offsets)}")
            except (IndexError, ValueError) as exc:
                raise WordNetFormatError(path, line_start, f"malformed index record: {exc}") from None
            index[lemma] = (tagsense_cnt, offsets)
    if not index:
        raise WordNetFormatError(path, offset_bytes, "no index records found")
    return index


def _synset_depths(synsets: Mapping[str, _Synset], data_path: Path) -> dict[str, int]:
    """Shortest hypernym-path length to the hierarchy root for each synset.

    A unique root sits at depth 0. With several roots a virtual root is
    placed at depth 0 and every actual root starts at depth 1.
    """
    children: dict[str, list[str]] = {off: [] for off in synsets}
    roots = []
    for syn in synsets.values():
        if syn.hypernyms:
            for h in syn.hypernyms:
                if h not in synsets:
                    raise WordNetFormatError(data_path, 0, f"hypernym target {h} not present in data file")
                children[h].append(syn.offset)
        else:
            roots.append(syn.offset)
    if not roots:
        raise WordNetFormatError(data_path, 0, "hierarchy has no root (hypernym cycle)")
    start_depth = 0 if len(roots) == 1 else 1
    depths: dict[str, int] = {}
    queue = deque()
    for r in sorted(roots):
        depths[r] = start_depth
        queue.append(r)
    while queue:
        cur = queue.popleft()
        for child in children[cur]:
            if child not in depths:
                depths[child] = depths[cur] + 1
                queue.append(child)
    missing = set(synsets) - set(depths)
    if missing:
        raise WordNetFormatError(data_path, 0,
                                 f"{len(missing)} synsets unreachable from the root (cycle?)")
    return depths


def import_wordnet(db_dir, top_k: int = TOP_K_DEFAULT) -> Lexicon:
    """Build a Lexicon from WordNet 3.x noun database files in ``db_dir``.

    Per lemma, the hyponym count is the mean number of direct hyponym
    pointers over the lemma's noun synsets (rounded half-up) and the depth is
    the mean shortest hypernym-path length to the root. Globals are computed
    over the ``top_k`` lemmas with the highest sense-tag counts, ties broken
    lexicographically.
    """
    db_dir = Path(db_dir)
    synsets = _parse_data_noun(db_dir / "data.noun")
    index = _parse_index_noun(db_dir / "index.noun")
    depths = _synset_depths(synsets, db_dir / "data.noun")

    entries: dict[str, LexEntry] = {}
    tag_counts: dict[str, int] = {}
    for lemma, (tagsense, offsets) in index.items():
        hypo_total = 0
        depth_total = 0
        for off in offsets:
            syn = synsets.get(off)
            if syn is None:
                raise WordNetFormatError(db_dir / "index.noun", 0,
                                         f"lemma {lemma!r} references unknown synset {off}")
            hypo_total += syn.n_hyponyms
            depth_total += depths[off]
        n = len(offsets)
        # integer mean with half-up rounding
        hypo_mean = (2 * hypo_total + n) // (2 * n)
        entries[lemma] = LexEntry(lemma=lemma, hyponym_count=hypo_mean, depth=depth_total / n)
        tag_counts[lemma] = tagsense

    avg_hypo, da = compute_globals(entries.values(), top_k=top_k, tag_counts=tag_counts)
    return Lexicon(entries, avg_hypo, da, source=f"wordnet:{db_dir}")


# --- compact TSV format -----------------------------------------------------

_TSV_HEADER = "lemma\thypo\tdepth"


def save_lexicon(lexicon: Lexicon, path) -> None:
    """Write the compact TSV form: header, sorted entries, two global lines.

    Depths and globals are printed with 9 significant digits, so one
    save/load cycle is the identity at that precision and further cycles are
    exact.
    """
    path = Path(path)
    lines = [_TSV_HEADER]
    for lemma in sorted(lexicon.entries):
        e = lexicon.entries[lemma]
        lines.append(f"{e.lemma}\t{e.hyponym_count}\t{e.depth:.9g}")
    lines.append(f"#avg_global_hypo={lexicon.avg_global_hypo:.9g}")
    lines.append(f"#da_global={lexicon.da_global:.9g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_lexicon(path) -> Lexicon:
    path = Path(path)
    if not path.is_file():
        raise LexiconFormatError(path, 0, "missing file")
    entries: dict[str, LexEntry] = {}
    globals_seen: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if lineno == 1:
                if line != _TSV_HEADER:
                    raise LexiconFormatError(path, lineno, f"bad header {line!r}")
                continue
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if not sep or key not in ("avg_global_hypo", "da_global"):
                    raise LexiconFormatError(path, lineno, f"unknown trailer line {line!r}")
                try:
                    globals_seen[key] = float(value)
                except ValueError:
                    raise LexiconFormatError(path, lineno, f"bad numeric value {value!r}") from None
                continue
            if globals_seen:
                raise LexiconFormatError(path, lineno, "entry row after global trailer lines")
            cols = line.split("\t")
            if len(cols) != 3:
                raise LexiconFormatError(path, lineno, f"expected 3 columns, found {len(cols)}")
            lemma, hypo_s, depth_s = cols
            if lemma in entries:
                raise LexiconFormatError(path, lineno, f"duplicate lemma {lemma!r}")
            try:
                hypo = int(hypo_s)
                depth = float(depth_s)
                entries[lemma] = LexEntry(lemma=lemma, hyponym_count=hypo, depth=depth)
            except ValueError as exc:
                raise LexiconFormatError(path, lineno, f"bad entry: {exc}") from None
    if not entries:
        raise LexiconFormatError(path, 0, "no entries")
    if set(globals_seen) != {"avg_global_hypo", "da_global"}:
        raise LexiconFormatError(path, 0, "missing global trailer lines")
    try:
        return Lexicon(entries, globals_seen["avg_global_hypo"], globals_seen["da_global"],
                       source=str(path))
    except ValueError as exc:
        raise LexiconFormatError(path, 0, str(exc)) from None
