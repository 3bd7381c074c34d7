"""Synthetic corpora and graphs with planted ground truth."""
import calendar
import csv
import json
import string
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .bigraph import BipartiteGraph, Graph
from .corpus import InteractionRecord

EPOCH_2019_05 = calendar.timegm((2019, 5, 1, 0, 0, 0))


class ConfigError(ValueError):
    pass


@dataclass
class PlantedConfig:
    n_communities: int = 4
    verified_per_community: int = 15
    nonverified_per_community: int = 550
    intra_retweet_prob: float = 0.05
    inter_retweet_prob: float = 0.001
    hashtags_per_community: int = 60
    hashtag_crossover_prob: float = 0.1
    n_windows: int = 3
    event_spikes: list = field(default_factory=list)  # [window, community, multiplier]
    seed: int = 0
    # retweet probability multiplier for pairs involving one verified user
    verified_popularity: float = 10.0
    tweets_per_user: float = 1.5
    verified_activity: float = 4.0
    repeat_retweet_rate: float = 0.5
    typo_prob: float = 0.02
    mention_prob: float = 0.3
    mention_intra_prob: float = 0.4
    n_shared_hashtags: int = 5
    # each user favours one slice of its community vocabulary
    subtopics_per_community: int = 4
    topic_focus: float = 0.9
    # weight of same-topic over cross-topic pairs among non-verified users
    topic_homophily: float = 8.0
    start: int = EPOCH_2019_05

    def __post_init__(self):
        self.event_spikes = [list(s) for s in self.event_spikes]
        self.validate()

    def validate(self):
        for name in ("intra_retweet_prob", "inter_retweet_prob", "hashtag_crossover_prob",
                     "typo_prob", "mention_prob", "mention_intra_prob", "topic_focus"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        for name in ("n_communities", "verified_per_community", "nonverified_per_community",
                     "hashtags_per_community", "n_windows", "subtopics_per_community"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.verified_popularity <= 0 or self.tweets_per_user < 0:
            raise ConfigError("verified_popularity must be > 0 and tweets_per_user >= 0")
        if self.topic_homophily <= 0:
            raise ConfigError("topic_homophily must be > 0")
        for w, c, mult in self.event_spikes:
            if not (0 <= w < self.n_windows and 0 <= c < self.n_communities and mult > 0):
                raise ConfigError(f"bad event spike {(w, c, mult)}")

    @classmethod
    def from_dict(cls, obj):
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    def window_bounds(self):
        out = []
        year, month = divmod(_month_index(self.start), 12)
        for _ in range(self.n_windows + 1):
            out.append(calendar.timegm((year, month + 1, 1, 0, 0, 0)))
            year, month = (year + 1, 0) if month == 11 else (year, month + 1)
        return out

    def spike(self, window, community):
        m = 1.0
        for w, c, mult in self.event_spikes:
            if w == window and c == community:
                m *= mult
        return m


def _month_index(ts):
    t = np.datetime64(int(ts), "s").astype("datetime64[M]").astype(int)
    return int(t) + 1970 * 12


@dataclass
class SyntheticCorpus:
    records: list
    ground_truth: dict  # user id -> planted community
    verified: set
    message_retweets: dict  # user id -> list of retweet counts per message
    vocabularies: list


def _vocabulary(rng, size, taken):
    letters = np.array(list(string.ascii_lowercase))
    out = []
    while len(out) < size:
        word = "".join(rng.choice(letters, size=int(rng.integers(7, 13))))
        if word not in taken:
            taken.add(word)
            out.append(word)
    return out


def _typo(rng, word):
    letters = string.ascii_lowercase
    i = int(rng.integers(len(word)))
    kind = int(rng.integers(3))
    c = letters[int(rng.integers(26))]
    if kind == 0:
        return word[:i] + c + word[i + 1:]
    if kind == 1 and len(word) > 3:
        return word[:i] + word[i + 1:]
    return word[:i] + c + word[i:]


def _zipf_weights(n):
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


def generate_corpus(cfg):
    """Records in the ingest format plus planted community labels."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    C, nv, nn = cfg.n_communities, cfg.verified_per_community, cfg.nonverified_per_community
    users, comm, is_ver = [], [], []
    for c in range(C):
        for j in range(nv):
            users.append(f"v{c}_{j}")
            comm.append(c)
            is_ver.append(True)
        for j in range(nn):
            users.append(f"u{c}_{j}")
            comm.append(c)
            is_ver.append(False)
    comm = np.array(comm)
    is_ver = np.array(is_ver)
    n = len(users)

    taken = set()
    shared = _vocabulary(rng, cfg.n_shared_hashtags, taken)
    vocab = [_vocabulary(rng, cfg.hashtags_per_community, taken) for _ in range(C)]
    zipf = _zipf_weights(cfg.hashtags_per_community)
    slices = np.array_split(np.arange(cfg.hashtags_per_community),
                            min(cfg.subtopics_per_community, cfg.hashtags_per_community))
    slice_w = [_zipf_weights(len(sl)) for sl in slices]
    topic = rng.integers(len(slices), size=n)
    bounds = cfg.window_bounds()

    def draw_hashtags(u):
        c = int(comm[u])
        tags = []
        for _ in range(1 + int(rng.binomial(2, 0.3))):
            x = rng.random()
            if x < cfg.hashtag_crossover_prob:
                other = int(rng.integers(C))
                tag = vocab[other][int(rng.choice(len(zipf), p=zipf))]
            elif x < cfg.hashtag_crossover_prob + 0.1 and shared:
                tag = shared[int(rng.integers(len(shared)))]
            elif rng.random() < cfg.topic_focus:
                t = int(topic[u])
                tag = vocab[c][int(slices[t][rng.choice(len(slices[t]), p=slice_w[t])])]
            else:
                tag = vocab[c][int(rng.choice(len(zipf), p=zipf))]
            if rng.random() < cfg.typo_prob:
                tag = _typo(rng, tag)
            if tag not in tags:
                tags.append(tag)
        return tags

    def draw_mentions(c):
        if rng.random() >= cfg.mention_prob:
            return []
        if rng.random() < cfg.mention_intra_prob:
            pool = np.flatnonzero(comm == c)
        else:
            pool = np.flatnonzero(comm != c) if C > 1 else np.flatnonzero(comm == c)
        return [users[int(rng.choice(pool))]]

    records = []
    originals = {}  # (user index, window) -> list of record indices
    counter = [0]

    def add(author, rt, tags, mentions, ts):
        rid = f"r{counter[0]:08d}"
        counter[0] += 1
        records.append(InteractionRecord(
            rid, users[author], bool(is_ver[author]),
            None if rt is None else users[rt], None if rt is None else bool(is_ver[rt]),
            tuple(mentions), tuple(tags), int(ts),
        ))
        return len(records) - 1

    def original(u, w):
        lo, hi = bounds[w], bounds[w + 1]
        idx = add(u, None, draw_hashtags(u), draw_mentions(int(comm[u])),
                  rng.integers(lo, hi))
        originals.setdefault((u, w), []).append(idx)
        return idx

    for w in range(cfg.n_windows):
        for u in range(n):
            rate = cfg.tweets_per_user * cfg.spike(w, int(comm[u]))
            if is_ver[u]:
                rate *= cfg.verified_activity
            for _ in range(int(rng.poisson(rate))):
                original(u, w)

    # planted retweet pairs, drawn independently in every window
    iu, ju = np.triu_indices(n, 1)
    base = np.where(comm[iu] == comm[ju], cfg.intra_retweet_prob, cfg.inter_retweet_prob)
    one_verified = is_ver[iu] ^ is_ver[ju]
    base = np.where(one_verified, base * cfg.verified_popularity, base)
    S = len(slices)
    both_nv = ~is_ver[iu] & ~is_ver[ju]
    same_topic = topic[iu] == topic[ju]
    scale = S / (cfg.topic_homophily + S - 1)
    base = np.where(both_nv, base * np.where(same_topic, cfg.topic_homophily, 1.0) * scale, base)
    del both_nv, same_topic
    retweets_of = {}
    for w in range(cfg.n_windows):
        # non-verified users mostly retweet verified ones, not the reverse
        r = rng.random(len(iu))
        nv_author = r < 0.9
        flip = np.where(one_verified, np.where(is_ver[iu], nv_author, ~nv_author), r < 0.5)
        author = np.where(flip, ju, iu)
        target = np.where(flip, iu, ju)
        spike = np.array([cfg.spike(w, c) for c in range(C)])
        prob = np.minimum(base * spike[comm[author]], 1.0)
        hit = np.flatnonzero(rng.random(len(prob)) < prob)
        for a, t in zip(author[hit].tolist(), target[hit].tolist()):
            for _ in range(1 + int(rng.poisson(cfg.repeat_retweet_rate))):
                pool = originals.get((t, w))
                if not pool:
                    pool = [original(t, w)]
                src = records[pool[int(rng.integers(len(pool)))]]
                delay = int(rng.integers(0, max(1, min(86400, bounds[w + 1] - src.timestamp))))
                add(a, t, list(src.hashtags), draw_mentions(int(comm[a])), src.timestamp + delay)
                retweets_of[src.record_id] = retweets_of.get(src.record_id, 0) + 1
        del r, nv_author, flip, author, target, prob

    message_retweets = {}
    for (u, _w), idxs in sorted(originals.items()):
        for i in idxs:
            message_retweets.setdefault(users[u], []).append(
                retweets_of.get(records[i].record_id, 0))
    order = sorted(range(len(records)), key=lambda i: (records[i].timestamp, records[i].record_id))
    records = [records[i] for i in order]
    truth = {u: int(c) for u, c in zip(users, comm)}
    verified = {u for u, v in zip(users, is_ver) if v}
    return SyntheticCorpus(records, truth, verified, message_retweets, [shared] + vocab)


def write_ground_truth(truth, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "planted_label"])
        w.writerows(sorted(truth.items()))


def read_ground_truth(path):
    with open(path, newline="") as fh:
        return {r["node_id"]: int(r["planted_label"]) for r in csv.DictReader(fh)}


def write_message_retweets(message_retweets, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "message_index", "retweets"])
        for user in sorted(message_retweets):
            w.writerows((user, i, c) for i, c in enumerate(message_retweets[user]))


def read_message_retweets(path):
    out = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.setdefault(r["user_id"], []).append(int(r["retweets"]))
    return out


# --- graph generators -----------------------------------------------------------


@dataclass
class BlockmodelConfig:
    n_groups: int = 3
    top_per_group: int = 40
    bottom_per_group: int = 10
    p_in: float = 0.5
    p_out: float = 0.02
    seed: int = 0


def generate_bipartite_blockmodel(cfg):
    """Top nodes link within their group with ``p_in``, across with ``p_out``.

    Returns the graph and the planted group of every bottom node id.
    """
    rng = np.random.default_rng(cfg.seed)
    tg = np.repeat(np.arange(cfg.n_groups), cfg.top_per_group)
    bg = np.repeat(np.arange(cfg.n_groups), cfg.bottom_per_group)
    p = np.where(tg[:, None] == bg[None, :], cfg.p_in, cfg.p_out)
    m = rng.random(p.shape) < p
    g = BipartiteGraph.from_dense(
        m,
        top_ids=[f"t{i}" for i in range(len(tg))],
        bottom_ids=[f"b{j}" for j in range(len(bg))],
    )
    return g, {f"b{j}": int(c) for j, c in enumerate(bg)}


def planted_core_periphery(n_core=30, n_periphery=100, p_core=0.7, p_attach=0.05,
                           p_periphery=0.0, seed=0):
    """Dense core plus sparse periphery; every periphery node touches the core."""
    rng = np.random.default_rng(seed)
    n = n_core + n_periphery
    edges = []
    for i in range(n_core):
        for j in range(i + 1, n_core):
            if rng.random() < p_core:
                edges.append((i, j))
    for v in range(n_core, n):
        hits = np.flatnonzero(rng.random(n_core) < p_attach)
        if not hits.size:
            hits = [int(rng.integers(n_core))]
        edges.extend((int(h), v) for h in hits)
        for u in range(v + 1, n):
            if p_periphery and rng.random() < p_periphery:
                edges.append((v, u))
    ids = [f"c{i}" for i in range(n_core)] + [f"p{i}" for i in range(n_periphery)]
    r = [e[0] for e in edges]
    c = [e[1] for e in edges]
    return Graph.from_indices(tuple(ids), r, c), set(ids[:n_core])


def ring_of_cliques(n_cliques, size):
    edges = []
    for q in range(n_cliques):
        base = q * size
        edges.extend((base + i, base + j) for i in range(size) for j in range(i + 1, size))
        edges.append((base + size - 1, ((q + 1) % n_cliques) * size))
    ids = tuple(str(i) for i in range(n_cliques * size))
    g = Graph.from_indices(ids, [e[0] for e in edges], [e[1] for e in edges])
    return g, np.repeat(np.arange(n_cliques), size)


def erdos_renyi(n, p, seed=0):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    hit = rng.random(len(iu)) < p
    return Graph.from_indices(tuple(str(i) for i in range(n)), iu[hit], ju[hit])
