"""Interaction records, hashtag normalisation and bipartite graph builders."""
import calendar
import csv
import io
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import combinations

from . import kernels
from .bigraph import BipartiteGraph, Graph

logger = logging.getLogger(__name__)

RECORD_FIELDS = ("id", "user", "verified", "rt_user", "rt_verified", "mentions", "hashtags", "ts")


@dataclass(frozen=True)
class InteractionRecord:
    record_id: str
    author_id: str
    author_verified: bool
    retweeted_id: str | None
    retweeted_verified: bool | None
    mentioned_ids: tuple = ()
    hashtags: tuple = ()
    timestamp: int = 0

    def to_json(self):
        return json.dumps(
            {
                "id": self.record_id,
                "user": self.author_id,
                "verified": self.author_verified,
                "rt_user": self.retweeted_id,
                "rt_verified": self.retweeted_verified,
                "mentions": list(self.mentioned_ids),
                "hashtags": list(self.hashtags),
                "ts": self.timestamp,
            },
            separators=(",", ":"),
        )


class RecordError(ValueError):
    pass


def normalize_hashtag(tag):
    return tag.strip().lstrip("#").lower()


def parse_record(line):
    """Decode one JSON line; raises :class:`RecordError` when malformed."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or set(obj) != set(RECORD_FIELDS):
        raise RecordError("record must carry exactly the fields " + ", ".join(RECORD_FIELDS))
    rid, user, ver = obj["id"], obj["user"], obj["verified"]
    rt, rtv, ts = obj["rt_user"], obj["rt_verified"], obj["ts"]
    if not isinstance(rid, str) or not isinstance(user, str) or not isinstance(ver, bool):
        raise RecordError("bad id/user/verified")
    if (rt is None) != (rtv is None):
        raise RecordError("rt_verified must be present iff rt_user is")
    if rt is not None and (not isinstance(rt, str) or not isinstance(rtv, bool)):
        raise RecordError("bad rt_user/rt_verified")
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise RecordError("ts must be integer epoch seconds")
    mentions, tags = obj["mentions"], obj["hashtags"]
    if not isinstance(mentions, list) or not all(isinstance(m, str) for m in mentions):
        raise RecordError("mentions must be a list of strings")
    if not isinstance(tags, list) or not all(isinstance(h, str) for h in tags):
        raise RecordError("hashtags must be a list of strings")
    tags = tuple(normalize_hashtag(h) for h in tags)
    if any(not h or any(c.isspace() for c in h) for h in tags):
        raise RecordError("hashtags must be non-empty and whitespace-free")
    return InteractionRecord(rid, user, ver, rt, rtv, tuple(mentions), tags, ts)


@dataclass
class ParseResult:
    records: list
    rejected: int = 0


def parse_corpus(stream):
    """Parse line-delimited records from a text stream.

    Malformed lines and duplicate record ids are skipped and counted.
    """
    records = []
    rejected = 0
    seen = set()
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            rec = parse_record(line)
        except RecordError as exc:
            logger.debug("line %d rejected: %s", lineno, exc)
            rejected += 1
            continue
        if rec.record_id in seen:
            rejected += 1
            continue
        seen.add(rec.record_id)
        records.append(rec)
    if rejected:
        logger.warning("%d malformed line(s) skipped", rejected)
    return ParseResult(records, rejected)


def read_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def write_corpus(records, path_or_stream):
    if isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__"):
        with open(path_or_stream, "w", encoding="utf-8") as fh:
            write_corpus(records, fh)
        return
    for rec in records:
        path_or_stream.write(rec.to_json())
        path_or_stream.write("\n")


def dumps_corpus(records):
    buf = io.StringIO()
    write_corpus(records, buf)
    return buf.getvalue()


# --- hashtag merging ---------------------------------------------------------


@dataclass(frozen=True)
class HashtagMergeMap:
    canonical: dict
    frequency: dict  # canonical hashtag -> total occurrences of its class
    raw_frequency: dict = field(default_factory=dict)

    def __call__(self, tag):
        return self.canonical.get(tag, tag)

    def classes(self):
        out = defaultdict(set)
        for raw, canon in self.canonical.items():
            out[canon].add(raw)
        return dict(out)


def levenshtein(a, b):
    return int(kernels.levenshtein(a, b))


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            if ri < rj:
                self.parent[rj] = ri
            else:
                self.parent[ri] = rj


def _deletion_keys(word, k):
    """All strings obtained by deleting up to ``k`` characters."""
    keys = {word}
    frontier = {word}
    for _ in range(k):
        nxt = set()
        for w in frontier:
            for i in range(len(w)):
                nxt.add(w[:i] + w[i + 1:])
        keys |= nxt
        frontier = nxt
    return keys


def candidate_pairs(words, max_distance):
    """Index pairs that may lie within ``max_distance`` edits.

    Two strings within ``k`` edits share a string reachable from both by at
    most ``k`` deletions, so bucketing deletion variants is lossless. Pairs
    also pass the length-difference prefilter.
    """
    buckets = defaultdict(list)
    for idx, w in enumerate(words):
        for key in _deletion_keys(w, max_distance):
            buckets[key].append(idx)
    pairs = set()
    for members in buckets.values():
        if len(members) < 2:
            continue
        for i, j in combinations(members, 2):
            if abs(len(words[i]) - len(words[j])) <= max_distance:
                pairs.add((i, j) if i < j else (j, i))
    return sorted(pairs)


def build_merge_map(hashtags, max_distance=2):
    """Cluster hashtags within ``max_distance`` edits and pick representatives.

    ``hashtags`` is an iterable of occurrences or a ``{tag: count}`` mapping.
    Classes are the transitive closure of the "within distance" relation;
    each class maps to its most frequent member, ties going to the
    lexicographically smallest.
    """
    if max_distance < 0:
        raise ValueError("max_distance must be >= 0")
    counts = Counter(hashtags) if not isinstance(hashtags, dict) else Counter(dict(hashtags))
    words = sorted(counts)
    uf = _UnionFind(len(words))
    if max_distance > 0:
        for i, j in candidate_pairs(words, max_distance):
            if uf.find(i) == uf.find(j):
                continue
            if kernels.levenshtein_bounded(words[i], words[j], max_distance) <= max_distance:
                uf.union(i, j)
    groups = defaultdict(list)
    for idx in range(len(words)):
        groups[uf.find(idx)].append(words[idx])
    canonical = {}
    frequency = {}
    for members in groups.values():
        rep = min(members, key=lambda w: (-counts[w], w))
        frequency[rep] = sum(counts[w] for w in members)
        for w in members:
            canonical[w] = rep
    return HashtagMergeMap(canonical, frequency, dict(counts))


def write_merge_map(mm, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["raw", "canonical"])
        w.writerows(sorted(mm.canonical.items()))


def read_merge_map(path):
    with open(path, newline="") as fh:
        canonical = {r["raw"]: r["canonical"] for r in csv.DictReader(fh)}
    return HashtagMergeMap(canonical, {})


# --- time windows --------------------------------------------------------------


@dataclass(frozen=True)
class TimeWindow:
    start: int
    end: int
    label: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("window start must precede end")

    def __contains__(self, ts):
        return self.start <= ts < self.end


ALL_TIME = TimeWindow(-(2**62), 2**62, "all")


def monthly_windows(start_ts, end_ts):
    """UTC calendar months covering ``[start_ts, end_ts]``."""
    t = datetime.fromtimestamp(start_ts, tz=timezone.utc)
    year, month = t.year, t.month
    out = []
    while True:
        lo = calendar.timegm((year, month, 1, 0, 0, 0))
        if lo > end_ts:
            break
        year2, month2 = (year + 1, 1) if month == 12 else (year, month + 1)
        hi = calendar.timegm((year2, month2, 1, 0, 0, 0))
        out.append(TimeWindow(lo, hi, f"{year:04d}-{month:02d}"))
        year, month = year2, month2
    return out


def corpus_windows(records):
    if not records:
        return []
    ts = [r.timestamp for r in records]
    return monthly_windows(min(ts), max(ts))


def in_window(records, window):
    return [r for r in records if r.timestamp in window]


# --- graph builders --------------------------------------------------------------


def build_user_bipartite(records, window=ALL_TIME):
    """Verified (top) x non-verified (bottom) retweet incidence, unweighted."""
    edges = []
    for r in records:
        if r.retweeted_id is None or r.timestamp not in window:
            continue
        if r.author_verified and not r.retweeted_verified:
            edges.append((r.author_id, r.retweeted_id))
        elif r.retweeted_verified and not r.author_verified:
            edges.append((r.retweeted_id, r.author_id))
    return BipartiteGraph.from_edges(edges)


def build_hashtag_bipartite(records, merge_map=None, window=ALL_TIME, users=None,
                            keep_isolated=False):
    """User (top) x canonical hashtag (bottom) usage incidence.

    ``users`` restricts the top layer; users without hashtags are kept as
    isolated nodes only when ``keep_isolated``.
    """
    canon = merge_map or (lambda h: h)
    edges = []
    extra = []
    for r in records:
        if r.timestamp not in window or (users is not None and r.author_id not in users):
            continue
        if not r.hashtags and keep_isolated:
            extra.append(r.author_id)
        for h in r.hashtags:
            edges.append((r.author_id, canon(h)))
    return BipartiteGraph.from_edges(edges, top_ids=extra if keep_isolated else None)


def build_retweet_graph(records, window=ALL_TIME, weighted=True):
    """Undirected user-user retweet network; weights count retweets."""
    edges = [
        (r.author_id, r.retweeted_id, 1.0)
        for r in records
        if r.retweeted_id is not None and r.timestamp in window
    ]
    return Graph.from_edges(edges, weighted=weighted)


def verified_users(records):
    out = set()
    for r in records:
        if r.author_verified:
            out.add(r.author_id)
        if r.retweeted_verified:
            out.add(r.retweeted_id)
    return out


def interaction_counts(records, window=ALL_TIME):
    """Directed ``(source, target) -> count`` maps for retweets and mentions."""
    rts = Counter()
    mentions = Counter()
    for r in records:
        if r.timestamp not in window:
            continue
        if r.retweeted_id is not None:
            rts[(r.author_id, r.retweeted_id)] += 1
        for m in r.mentioned_ids:
            mentions[(r.author_id, m)] += 1
    return rts, mentions


def hashtag_counts(records, window=ALL_TIME):
    return Counter(h for r in records if r.timestamp in window for h in r.hashtags)
