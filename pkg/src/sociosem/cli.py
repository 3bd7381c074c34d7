"""Command-line pipeline: ingest -> fit -> project -> communities -> mesoscale -> metrics.

Layout of a work directory::

    ingest/                       cleaned records, merge map, window list
    windows/<label>/fit/          user bipartite graph and BiCM solution
    windows/<label>/project/      validated projection of verified users
    windows/<label>/communities/  Louvain seeds, polarization, final labels
    windows/<label>/mesoscale/    per-community semantic networks
    windows/<label>/metrics/      community table, betweenness, h-index
    manifest.json                 config, versions and output hashes

Every stage directory ends with ``stage.json`` recording the hashes of the
files it consumed and produced; downstream stages refuse to run when it is
missing or no longer matches.

Random streams: stage ``s`` of window ``w`` draws from
``SeedSequence(seed, spawn_key=(w, s, ...))`` where ``w`` is 0 for the
aggregate window and ``1..n`` for the calendar windows in order.
"""
import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import shutil
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy

from . import __version__, kernels
from .bigraph import GraphError, read_bipartite, read_graph, write_bipartite, write_graph
from .community import (
    assign_polarized, label_propagation, louvain, polarization,
    read_assignment, write_assignment,
)
from .corpus import (
    ALL_TIME, TimeWindow, build_hashtag_bipartite, build_merge_map, build_retweet_graph,
    build_user_bipartite, corpus_windows, hashtag_counts, interaction_counts, read_corpus,
    read_merge_map, verified_users, write_corpus, write_merge_map,
)
from .mesoscale import (
    core_periphery, core_shell_jaccard, innermost_subcommunities, k_core_decompose,
    quantile_tiers, write_mesoscale,
)
from .metrics import (
    activity_series, betweenness, community_stats, user_h_indices, write_activity, write_table1,
)
from .nullmodel import ConvergenceError, SolverConfig, fit_bicm, read_solution, write_solution
from .projection import validated_projection, write_projection
from . import synth

logger = logging.getLogger("sociosem")

STAGES = ("ingest", "fit", "project", "communities", "mesoscale", "metrics")
UPSTREAM = {"fit": "ingest", "project": "fit", "communities": "project",
            "mesoscale": "communities", "metrics": "communities"}
STAGE_HELP = {
    "ingest": "clean the corpus and merge hashtag variants",
    "fit": "build the user bipartite graph and fit its BiCM",
    "project": "validate the projection on verified users",
    "communities": "seed communities by Louvain, then propagate labels",
    "mesoscale": "per-community hashtag networks and their core structure",
    "metrics": "per-community statistics and node rankings",
    "run": "every stage on every window, then manifest.json",
}
STAGE_ID = {"louvain": 1, "propagation": 2, "semantic_louvain": 3, "core_periphery": 4}

EXIT_OK, EXIT_CONFIG, EXIT_DEPENDENCY, EXIT_STAGE = 0, 2, 3, 4


class PipelineError(Exception):
    exit_code = EXIT_STAGE


class ConfigError(PipelineError):
    exit_code = EXIT_CONFIG


class DependencyError(PipelineError):
    exit_code = EXIT_DEPENDENCY


class StageError(PipelineError):
    exit_code = EXIT_STAGE


@dataclass
class PipelineConfig:
    input: str | None = None
    output_dir: str | None = None
    windows: object = "monthly"  # "monthly", "none" or [{"label", "start", "end"}, ...]
    significance: float = 0.01
    polarization_threshold: float = 0.9
    polarization_denominator: str = "labeled"
    louvain_runs: int = 1000
    propagation_runs: int = 1000
    solver_tolerance: float = 1e-8
    solver_max_iterations: int = 10000
    seed: int = 0
    weighted_propagation: bool = True
    literal_seed_propagation: bool = False
    drop_hashtagless_users: bool = True
    levenshtein_distance: int = 2
    mu_denominator: str = "performed"
    semantic_min_users: int = 10
    core_periphery_restarts: int = 20
    message_retweets: str | None = None

    def validate(self):
        if not 0 < self.significance < 1:
            raise ConfigError("significance must lie in (0, 1)")
        if not 0 < self.polarization_threshold <= 1:
            raise ConfigError("polarization threshold must lie in (0, 1]")
        if self.louvain_runs < 1 or self.propagation_runs < 1:
            raise ConfigError("run counts must be >= 1")
        if self.solver_tolerance <= 0 or self.solver_max_iterations < 1:
            raise ConfigError("bad solver settings")
        if self.levenshtein_distance < 0:
            raise ConfigError("levenshtein distance must be >= 0")
        if self.polarization_denominator not in ("labeled", "all"):
            raise ConfigError("polarization denominator must be 'labeled' or 'all'")
        if self.mu_denominator not in ("performed", "received"):
            raise ConfigError("mu denominator must be 'performed' or 'received'")
        if isinstance(self.windows, str):
            if self.windows not in ("monthly", "none"):
                raise ConfigError("windows must be 'monthly', 'none' or an explicit list")
        else:
            try:
                for w in self.windows:
                    TimeWindow(int(w["start"]), int(w["end"]), str(w["label"]))
            except (TypeError, KeyError, ValueError) as exc:
                raise ConfigError(f"bad explicit window list: {exc}") from None
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        return self

    @classmethod
    def from_dict(cls, obj):
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def solver(self):
        return SolverConfig(tolerance=self.solver_tolerance,
                            max_iterations=self.solver_max_iterations)


def stage_seed(master, window_index, stage, *extra):
    ss = np.random.SeedSequence(master, spawn_key=(window_index, STAGE_ID[stage], *extra))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


# --- stage bookkeeping ------------------------------------------------------------


class Workdir:
    def __init__(self, root):
        self.root = os.path.abspath(root)

    def rel(self, path):
        return os.path.relpath(path, self.root).replace(os.sep, "/")

    def ingest_dir(self):
        return os.path.join(self.root, "ingest")

    def stage_dir(self, stage, window=None):
        if stage == "ingest":
            return self.ingest_dir()
        return os.path.join(self.root, "windows", window, stage)

    def windows(self):
        meta = os.path.join(self.ingest_dir(), "ingest.json")
        if not os.path.exists(meta):
            raise DependencyError("no ingested corpus; run `sociosem ingest` first")
        out = []
        for w in _load_json(meta)["windows"]:
            out.append(ALL_TIME if w["label"] == "all" else
                       TimeWindow(w["start"], w["end"], w["label"]))
        return out

    def window(self, label):
        for idx, w in enumerate(self.windows()):
            if w.label == label:
                return idx, w
        raise ConfigError(f"unknown window {label!r}")

    def begin(self, stage, window=None):
        """Check the upstream stage and return a fresh output directory."""
        up = UPSTREAM.get(stage)
        inputs = {}
        if up is not None:
            inputs = self.verify(up, window, consumer=stage)
        d = self.stage_dir(stage, window)
        if os.path.exists(d):
            shutil.rmtree(d)
        os.makedirs(d)
        return d, inputs

    def verify(self, stage, window, consumer):
        d = self.stage_dir(stage, window)
        meta = os.path.join(d, "stage.json")
        where = "" if stage == "ingest" else f" for window {window}"
        if not os.path.exists(meta):
            raise DependencyError(
                f"`{consumer}` needs the output of `{stage}`{where}; run `sociosem {stage}` first")
        info = _load_json(meta)
        for rel, digest in {**info["inputs"], **info["outputs"]}.items():
            path = os.path.join(self.root, rel)
            if not os.path.exists(path) or sha256(path) != digest:
                raise DependencyError(
                    f"output of `{stage}`{where} is stale ({rel} changed); "
                    f"re-run `sociosem {stage}`")
        return {r: h for r, h in info["outputs"].items()}

    def finish(self, stage, window, inputs):
        d = self.stage_dir(stage, window)
        outputs = {}
        for base, _, files in os.walk(d):
            for f in files:
                if f != "stage.json":
                    p = os.path.join(base, f)
                    outputs[self.rel(p)] = sha256(p)
        _dump_json({"stage": stage, "window": window, "inputs": inputs,
                    "outputs": dict(sorted(outputs.items()))}, os.path.join(d, "stage.json"))


_record_cache = {}


def _records(wd):
    path = os.path.join(wd.ingest_dir(), "records.jsonl")
    st = os.stat(path)
    key = (path, st.st_mtime_ns, st.st_size)
    if key not in _record_cache:
        _record_cache.clear()
        _record_cache[key] = read_corpus(path).records
    return _record_cache[key]


# --- stages -------------------------------------------------------------------------


def stage_ingest(wd, cfg):
    if not cfg.input or not os.path.isfile(cfg.input):
        raise ConfigError(f"input corpus not found: {cfg.input!r}")
    if cfg.message_retweets and not os.path.isfile(cfg.message_retweets):
        raise ConfigError(f"message retweet table not found: {cfg.message_retweets!r}")
    d, _ = wd.begin("ingest")
    parsed = read_corpus(cfg.input)
    records = sorted(parsed.records, key=lambda r: (r.timestamp, r.record_id))
    write_corpus(records, os.path.join(d, "records.jsonl"))
    mm = build_merge_map(hashtag_counts(records), cfg.levenshtein_distance)
    write_merge_map(mm, os.path.join(d, "merge_map.csv"))
    if cfg.windows == "monthly":
        windows = corpus_windows(records)
    elif cfg.windows == "none":
        windows = []
    else:
        windows = [TimeWindow(int(w["start"]), int(w["end"]), str(w["label"]))
                   for w in cfg.windows]
    if any(w.label == "all" for w in windows):
        raise ConfigError("window label 'all' is reserved for the aggregate")
    meta = {
        "records": len(records),
        "rejected": parsed.rejected,
        "hashtags": len(mm.canonical),
        "canonical_hashtags": len(set(mm.canonical.values())),
        "windows": [{"label": "all", "start": None, "end": None}]
        + [{"label": w.label, "start": w.start, "end": w.end} for w in windows],
    }
    _dump_json(meta, os.path.join(d, "ingest.json"))
    if cfg.message_retweets:
        shutil.copyfile(cfg.message_retweets, os.path.join(d, "message_retweets.csv"))
    wd.finish("ingest", None, {})
    return meta


def stage_fit(wd, cfg, label):
    _, window = wd.window(label)
    d, inputs = wd.begin("fit", label)
    g = build_user_bipartite(_records(wd), window).drop_isolated()
    if g.n_edges == 0:
        raise StageError(f"window {label}: no verified/non-verified retweets")
    write_bipartite(g, os.path.join(d, "bipartite_edges.csv"), os.path.join(d, "bipartite_nodes.csv"))
    try:
        sol = fit_bicm(g, cfg.solver())
    except ConvergenceError as exc:
        raise StageError(f"window {label}: {exc}") from None
    write_solution(sol, g, os.path.join(d, "bicm_top.csv"), os.path.join(d, "bicm_bottom.csv"),
                   os.path.join(d, "bicm.json"))
    wd.finish("fit", label, inputs)


def _load_fit(wd, label):
    d = wd.stage_dir("fit", label)
    g = read_bipartite(os.path.join(d, "bipartite_edges.csv"), os.path.join(d, "bipartite_nodes.csv"))
    sol, top_ids, bottom_ids = read_solution(
        os.path.join(d, "bicm_top.csv"), os.path.join(d, "bicm_bottom.csv"),
        os.path.join(d, "bicm.json"))
    if tuple(top_ids) != tuple(g.top_ids) or tuple(bottom_ids) != tuple(g.bottom_ids):
        raise DependencyError(f"fit outputs for window {label} disagree; re-run `sociosem fit`")
    return g, sol


def stage_project(wd, cfg, label):
    d, inputs = wd.begin("project", label)
    g, sol = _load_fit(wd, label)
    vp = validated_projection(g, sol, "top", cfg.significance)
    write_projection(vp, os.path.join(d, "projection.csv"), os.path.join(d, "projection.json"))
    write_graph(vp.graph, os.path.join(d, "projection_graph.csv"),
                nodes_path=os.path.join(d, "projection_nodes.csv"))
    wd.finish("project", label, inputs)


def _load_projection(wd, label):
    d = wd.stage_dir("project", label)
    return read_graph(os.path.join(d, "projection_graph.csv"), os.path.join(d, "projection_nodes.csv"))


def stage_communities(wd, cfg, label):
    widx, window = wd.window(label)
    d, inputs = wd.begin("communities", label)
    records = _records(wd)
    pg = _load_projection(wd, label)
    deg = pg.degrees()
    sub = pg.subgraph(np.flatnonzero(deg > 0))
    if sub.n_edges == 0:
        raise StageError(f"window {label}: validated projection has no edges")
    lv = louvain(sub, runs=cfg.louvain_runs, seed=stage_seed(cfg.seed, widx, "louvain"))
    seeds = lv.as_dict(sub)
    with open(os.path.join(d, "seeds.csv"), "w") as fh:
        fh.write("node_id,label\n")
        fh.writelines(f"{u},{c}\n" for u, c in sorted(seeds.items()))

    rg = build_retweet_graph(records, window, weighted=True)
    verified = verified_users(records)
    candidates = [u for u in rg.ids if u not in verified]
    scores = polarization(rg, seeds, candidates, cfg.polarization_denominator)
    polarized = assign_polarized(scores, cfg.polarization_threshold)
    with open(os.path.join(d, "polarization.csv"), "w") as fh:
        fh.write("node_id,rho,target,assigned\n")
        for s in sorted(scores, key=lambda s: s.user):
            fh.write(f"{s.user},{s.rho!r},{s.target_community},{int(s.user in polarized)}\n")

    ca = label_propagation(rg, seeds, polarized, runs=cfg.propagation_runs,
                           seed=stage_seed(cfg.seed, widx, "propagation"),
                           weighted=cfg.weighted_propagation,
                           unique_seed_labels=cfg.literal_seed_propagation)
    ca.rho = {s.user: s.rho for s in scores}
    ca.modularity = lv.modularity
    nodes = sorted(set(rg.ids) | set(seeds))
    write_assignment(ca, os.path.join(d, "communities.csv"), os.path.join(d, "communities.json"),
                     nodes=nodes)
    wd.finish("communities", label, inputs)
    return ca


def _load_assignment(wd, label):
    d = wd.stage_dir("communities", label)
    return read_assignment(os.path.join(d, "communities.csv"), os.path.join(d, "communities.json"))


def stage_mesoscale(wd, cfg, label):
    widx, window = wd.window(label)
    d, inputs = wd.begin("mesoscale", label)
    records = _records(wd)
    mm = read_merge_map(os.path.join(wd.ingest_dir(), "merge_map.csv"))
    ca = _load_assignment(wd, label)
    groups = {}
    for u, c in ca.labels.items():
        groups.setdefault(c, set()).add(u)
    summary = {}
    for c in sorted(groups):
        key = f"c{c}"
        if len(groups[c]) < cfg.semantic_min_users:
            summary[key] = {"status": "skipped", "reason": "too few users"}
            continue
        cdir = os.path.join(d, key)
        os.makedirs(cdir)
        hb = build_hashtag_bipartite(records, mm, window, users=groups[c],
                                     keep_isolated=not cfg.drop_hashtagless_users)
        write_bipartite(hb, os.path.join(cdir, "hashtag_edges.csv"),
                        os.path.join(cdir, "hashtag_nodes.csv"))
        hb = hb.drop_isolated()
        if hb.n_edges == 0:
            summary[key] = {"status": "skipped", "reason": "no hashtags"}
            continue
        try:
            sol = fit_bicm(hb, cfg.solver())
        except ConvergenceError as exc:
            raise StageError(f"window {label}, community {c}: {exc}") from None
        vp = validated_projection(hb, sol, "bottom", cfg.significance)
        write_projection(vp, os.path.join(cdir, "semantic_projection.csv"),
                         os.path.join(cdir, "semantic_projection.json"))
        sg = vp.graph.subgraph(np.flatnonzero(vp.graph.degrees() > 0))
        write_graph(sg, os.path.join(cdir, "semantic_graph.csv"),
                    nodes_path=os.path.join(cdir, "semantic_nodes.csv"))
        if sg.n_edges == 0:
            summary[key] = {"status": "skipped", "reason": "no validated hashtag pairs"}
            continue
        dec = k_core_decompose(sg)
        tiers = quantile_tiers(dec)
        split = core_periphery(sg, seed=stage_seed(cfg.seed, widx, "core_periphery", c),
                               restarts=cfg.core_periphery_restarts, dec=dec)
        shell = innermost_subcommunities(sg, dec, runs=cfg.louvain_runs,
                                         seed=stage_seed(cfg.seed, widx, "semantic_louvain", c))
        write_mesoscale(os.path.join(cdir, "mesoscale.csv"), os.path.join(cdir, "mesoscale.json"),
                        dec, tiers, split, shell)
        summary[key] = {"status": "complete", "hashtags": sg.n, "edges": sg.n_edges,
                        "max_coreness": dec.max_coreness, "jaccard": core_shell_jaccard(split, dec)}
    _dump_json(summary, os.path.join(d, "mesoscale_summary.json"))
    wd.finish("mesoscale", label, inputs)


def stage_metrics(wd, cfg, label, table1_only=False):
    _, window = wd.window(label)
    meso_inputs = {} if table1_only else wd.verify("mesoscale", label, consumer="metrics")
    d, inputs = wd.begin("metrics", label)
    inputs.update(meso_inputs)
    records = _records(wd)
    ca = _load_assignment(wd, label)
    rg = build_retweet_graph(records, window, weighted=False)
    rts, mentions = interaction_counts(records, window)
    stats = community_stats(rg, ca.labels, rts, mentions, ca.rho, cfg.mu_denominator)
    write_table1(stats, os.path.join(d, "table1.csv"))
    if not table1_only:
        _betweenness_reports(wd, d, label)
        mr = os.path.join(wd.ingest_dir(), "message_retweets.csv")
        if os.path.exists(mr):
            h = user_h_indices(synth.read_message_retweets(mr))
            with open(os.path.join(d, "h_index.csv"), "w") as fh:
                fh.write("user_id,h_index,community\n")
                for u, v in h.items():
                    c = ca.labels.get(u)
                    fh.write(f"{u},{v},{'' if c is None else c}\n")
        if label == "all":
            windows = [w for w in wd.windows() if w.label != "all"]
            write_activity(activity_series(records, windows, ca.labels),
                           os.path.join(d, "activity.csv"))
    wd.finish("metrics", label, inputs)


def _betweenness_reports(wd, d, label):
    """Betweenness of every semantic network, joined with coreness and tier."""
    mdir = wd.stage_dir("mesoscale", label)
    for key in sorted(os.listdir(mdir)):
        gpath = os.path.join(mdir, key, "semantic_graph.csv")
        mpath = os.path.join(mdir, key, "mesoscale.csv")
        if not (os.path.exists(gpath) and os.path.exists(mpath)):
            continue
        sg = read_graph(gpath, os.path.join(mdir, key, "semantic_nodes.csv"))
        bc = betweenness(sg)
        with open(mpath, newline="") as fh:
            meso = {r["node_id"]: r for r in csv.DictReader(fh)}
        with open(os.path.join(d, f"betweenness_{key}.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_id", "betweenness", "coreness", "tier"])
            for node, v in sorted(bc.items(), key=lambda kv: (-kv[1], kv[0])):
                w.writerow([node, repr(v), meso[node]["coreness"], meso[node]["tier"]])


WINDOW_STAGES = {"fit": stage_fit, "project": stage_project, "communities": stage_communities,
                 "mesoscale": stage_mesoscale, "metrics": stage_metrics}


# --- whole pipeline ---------------------------------------------------------------


def _versions():
    return {"sociosem": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "kernels": kernels.BACKEND}


def _config_echo(cfg):
    out = asdict(cfg)
    out.pop("output_dir")
    for key in ("input", "message_retweets"):
        if out[key]:
            out[key] = {"name": os.path.basename(out[key]), "sha256": sha256(out[key])}
    return out


def run_pipeline(cfg):
    """Run every stage on every window and write ``manifest.json``.

    Timings go to ``run_log.json`` so that the manifest itself depends only
    on inputs, config and seed.
    """
    cfg.validate()
    if not cfg.output_dir:
        raise ConfigError("output directory is required")
    if not cfg.input or not os.path.isfile(cfg.input):
        raise ConfigError(f"input corpus not found: {cfg.input!r}")
    if os.path.exists(cfg.output_dir) and os.listdir(cfg.output_dir):
        for name in ("ingest", "windows", "manifest.json", "run_log.json"):
            p = os.path.join(cfg.output_dir, name)
            if os.path.isdir(p):
                shutil.rmtree(p)
            elif os.path.exists(p):
                os.remove(p)
    os.makedirs(cfg.output_dir, exist_ok=True)
    wd = Workdir(cfg.output_dir)
    timings = {}
    t0 = time.perf_counter()
    stage_ingest(wd, cfg)
    timings["ingest"] = time.perf_counter() - t0
    stages = {}
    failures = {}
    for w in wd.windows():
        stages[w.label] = {}
        for name in WINDOW_STAGES:
            t0 = time.perf_counter()
            if failures.get(w.label):
                stages[w.label][name] = "skipped"
                continue
            try:
                WINDOW_STAGES[name](wd, cfg, w.label)
                stages[w.label][name] = "complete"
            except (StageError, GraphError, ValueError, ConvergenceError) as exc:
                logger.error("window %s, stage %s failed: %s", w.label, name, exc)
                stages[w.label][name] = "failed"
                failures[w.label] = f"{name}: {exc}"
            timings[f"{w.label}/{name}"] = time.perf_counter() - t0
    outputs = {}
    for base, _, files in os.walk(wd.root):
        for f in files:
            p = os.path.join(base, f)
            rel = wd.rel(p)
            if rel not in ("manifest.json", "run_log.json"):
                outputs[rel] = sha256(p)
    manifest = {
        "status": "partial" if failures else "complete",
        "seed": cfg.seed,
        "seed_scheme": "SeedSequence(seed, spawn_key=(window_index, stage_id, ...))",
        "versions": _versions(),
        "config": _config_echo(cfg),
        "stages": stages,
        "failures": failures,
        "outputs": dict(sorted(outputs.items())),
    }
    _dump_json(manifest, os.path.join(wd.root, "manifest.json"))
    _dump_json({"timings_seconds": timings}, os.path.join(wd.root, "run_log.json"))
    return manifest


# --- argument parsing -------------------------------------------------------------


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_config_flags(p):
    p.add_argument("--config", help="JSON document with PipelineConfig fields")
    for f in fields(PipelineConfig):
        if f.name == "windows":
            p.add_argument("--windows", default=argparse.SUPPRESS,
                           help="'monthly', 'none' or a JSON list of {label,start,end}")
        elif f.type is bool:
            p.add_argument(_flag(f.name), dest=f.name, default=argparse.SUPPRESS,
                           action=argparse.BooleanOptionalAction)
        else:
            kind = f.type if f.type in (int, float) else str
            p.add_argument(_flag(f.name), dest=f.name, type=kind, default=argparse.SUPPRESS)
    p.add_argument("--workdir", dest="output_dir", default=argparse.SUPPRESS,
                   help="alias of --output-dir")


def _config_from_args(args):
    obj = {}
    if getattr(args, "config", None):
        try:
            obj = _load_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
    for f in fields(PipelineConfig):
        if hasattr(args, f.name):
            obj[f.name] = getattr(args, f.name)
    if isinstance(obj.get("windows"), str) and obj["windows"].lstrip().startswith("["):
        try:
            obj["windows"] = json.loads(obj["windows"])
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad --windows: {exc}") from None
    try:
        cfg = PipelineConfig.from_dict(obj)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def build_parser():
    parser = argparse.ArgumentParser(prog="sociosem", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("run",):
        p = sub.add_parser(name, help=STAGE_HELP[name])
        _add_config_flags(p)
        if name in WINDOW_STAGES:
            p.add_argument("--window", action="append", dest="only_windows",
                           help="window label (repeatable); default every window")
        if name == "metrics":
            p.add_argument("--table1", action="store_true",
                           help="only write the per-community structure table")
    p = sub.add_parser("synth", help="generate a synthetic corpus with planted communities")
    p.add_argument("--config", help="JSON document with generator settings")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--output-dir", "--workdir", dest="output_dir", required=True)
    return parser


def _cmd_synth(args):
    obj = {}
    if args.config:
        try:
            obj = _load_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if hasattr(args, "seed"):
        obj["seed"] = args.seed
    try:
        cfg = synth.PlantedConfig.from_dict(obj)
    except (synth.ConfigError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    os.makedirs(args.output_dir, exist_ok=True)
    sc = synth.generate_corpus(cfg)
    write_corpus(sc.records, os.path.join(args.output_dir, "corpus.jsonl"))
    synth.write_ground_truth(sc.ground_truth, os.path.join(args.output_dir, "ground_truth.csv"))
    synth.write_message_retweets(sc.message_retweets,
                                 os.path.join(args.output_dir, "message_retweets.csv"))
    _dump_json(cfg.to_dict(), os.path.join(args.output_dir, "synth_config.json"))
    print(f"{len(sc.records)} records, {len(sc.ground_truth)} users -> {args.output_dir}")


def _dispatch(args):
    if args.command == "synth":
        return _cmd_synth(args)
    cfg = _config_from_args(args)
    if not cfg.output_dir:
        raise ConfigError("--output-dir/--workdir is required")
    if args.command == "run":
        m = run_pipeline(cfg)
        print(f"pipeline {m['status']}: {len(m['outputs'])} outputs")
        if m["failures"]:
            raise StageError("; ".join(f"{w}: {e}" for w, e in m["failures"].items()))
        return
    wd = Workdir(cfg.output_dir)
    if args.command == "ingest":
        meta = stage_ingest(wd, cfg)
        print(f"{meta['records']} records ({meta['rejected']} rejected), "
              f"{len(meta['windows'])} windows")
        return
    labels = args.only_windows or [w.label for w in wd.windows()]
    for label in labels:
        try:
            if args.command == "metrics":
                stage_metrics(wd, cfg, label, table1_only=args.table1)
            else:
                WINDOW_STAGES[args.command](wd, cfg, label)
        except (GraphError, ConvergenceError) as exc:
            raise StageError(f"window {label}: {exc}") from None
        print(f"{args.command} [{label}] done")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
