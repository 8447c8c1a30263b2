"""Command-line entry point: ``bias-probe <subcommand> [options]``.

Every artifact is stamped with the config hash and seed. Experiment reports
hold no timings, so the same config and seed give byte-identical JSON;
timings go to ``run_log.jsonl`` in the output directory.

Exit codes: 0 success, 2 config error, 3 data error, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, acceptance
from . import config as config_mod
from .config import RunConfig
from .csvio import write_rows
from .embeddings import SyntheticEmbedderSpec, embed_all, load_embeddings, save_embeddings
from .errors import BiasProbeError, ConfigError, DataError, InvariantViolation
from .experiments import (
    Origin,
    RaceConfig,
    WorldConfig,
    build_world,
    check_disjoint,
    experiment_a,
    experiment_b,
    experiment_c,
    experiment_d,
    kfold_predictions,
    labeled_faces,
    load_races,
    projection_diagnostic,
    save_races,
    scramble_races,
    synthesize_races,
)
from .experiments import report as report_io
from .experiments.core import regression_summary
from .experiments.world import trait_geometry
from .explain import (
    ForestScorer,
    PatchEmbedder,
    SubprocessScorer,
    aggregate_heatmap,
    cohort,
    default_region,
    hottest,
    iou,
    lime_explain,
    load_png,
    render_explanation,
    save_heatmap,
    save_png,
    slic,
)
from .ratings import TraitScore, load_scores, save_ratings, save_scores
from .seeding import derive_seed
from .shape import (
    fit_trait_vector,
    generate_distinct_set,
    load_shapes,
    load_trait_vectors,
    save_shapes,
    save_trait_vectors,
    shape_matrix,
)
from .traits import TraitDimension

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4

ARTIFACTS = {
    "shapes": "shapes.csv", "bases": "bases.csv", "ratings": "ratings.csv", "scores": "scores.csv",
    "trait_vectors": "trait_vectors.csv", "distinct_shapes": "distinct_shapes.csv",
    "distinct_scores": "distinct_scores.csv", "random_embeddings": "random_embeddings.csv",
    "distinct_embeddings": "distinct_embeddings.csv",
}


class Run:
    """Resolved config, output directory and run log for one invocation."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.hash = cfg.hash()
        self.meta = {"config_hash": self.hash, "seed": cfg.seed, "version": __version__}
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self._log = self.out / "run_log.jsonl"

    def path(self, name: str) -> Path:
        return self.out / name

    def log(self, stage: str, seconds: float, **extra) -> None:
        entry = {"time": time.time(), "command": self.command, "stage": stage,
                 "seconds": round(seconds, 6), "config_hash": self.hash, "seed": self.cfg.seed, **extra}
        with self._log.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def stage(self, name: str, **extra):
        return _Stage(self, name, extra)

    def write_json(self, name: str, doc: dict) -> Path:
        p = self.path(name)
        report_io.write(p, doc, self.meta)
        return p

    @property
    def threads(self) -> int:
        return self.cfg.threads


class _Stage:
    def __init__(self, run: Run, name: str, extra: dict):
        self.run, self.name, self.extra = run, name, extra

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.run.log(self.name, time.perf_counter() - self.t0,
                     status="ok" if exc is None else type(exc).__name__, **self.extra)
        return False


# -- world and face sources ----------------------------------------------------

def world_config(cfg: RunConfig, eta: float | None = None, leakage: float | None = None) -> WorldConfig:
    w = cfg.world
    return WorldConfig(cfg.seed, w.D, w.n_random, w.n_bases, w.deltas, cfg.world_traits(),
                       w.eta if eta is None else eta, w.leakage if leakage is None else leakage,
                       w.n_raters_random, w.n_raters_calibration, w.noise_sd, w.target_alpha, w.embed_dim)


def embedder_spec(cfg: RunConfig, leakage: float | None = None) -> SyntheticEmbedderSpec:
    """The embedder the synthetic world uses, rebuilt from the config alone."""
    geom = trait_geometry(cfg.seed, cfg.world.D)
    null_dirs = tuple(tuple(v) for g in geom.values() for v in g.nonlinear)
    return SyntheticEmbedderSpec(derive_seed(cfg.seed, "embedder"),
                                 cfg.world.leakage if leakage is None else leakage,
                                 cfg.world.D, null_dirs, cfg.world.embed_dim)


def faces(run: Run):
    """(random, distinct) labeled faces from the data section, or the synthetic world."""
    d = run.cfg.data
    if d.random_embeddings:
        dim = run.cfg.world.embed_dim
        rnd = labeled_faces(load_scores(d.random_scores), load_embeddings(d.random_embeddings, dim), Origin.RANDOM)
        dst = []
        if d.distinct_embeddings:
            dst = labeled_faces(load_scores(d.distinct_scores), load_embeddings(d.distinct_embeddings, dim),
                                Origin.DISTINCT)
        check_disjoint(rnd, dst)
        return rnd, dst
    with run.stage("world"):
        world = build_world(world_config(run.cfg))
    return world.random_faces(), world.distinct_faces()


# -- subcommands ---------------------------------------------------------------

def cmd_gen(run: Run, args) -> None:
    with run.stage("gen"):
        w = build_world(world_config(run.cfg))
    save_shapes(run.path(ARTIFACTS["shapes"]), w.random_shapes, run.meta)
    save_shapes(run.path(ARTIFACTS["bases"]), w.bases, run.meta)
    save_ratings(run.path(ARTIFACTS["ratings"]), w.ratings, run.meta)
    save_scores(run.path(ARTIFACTS["scores"]), [s for t in w.config.traits for s in w.scores[t]], run.meta)
    run.write_json("gen.json", {
        "noise_sd": w.noise_sd,
        "alpha_calibration_raters": {t.value: a for t, a in w.alpha.items()},
        "alpha_all_raters": {t.value: a for t, a in w.alpha_all_raters.items()},
        "n_random": len(w.random_shapes), "n_bases": len(w.bases),
        "n_ratings": len(w.ratings),
    })


def cmd_fit_trait(run: Run, args) -> None:
    shapes = load_shapes(args.shapes or run.path(ARTIFACTS["shapes"]))
    scores = load_scores(args.scores or run.path(ARTIFACTS["scores"]))
    F = shape_matrix(shapes)
    order = {s.face_id: i for i, s in enumerate(shapes)}
    tvs = []
    with run.stage("fit-trait"):
        for t in run.cfg.world_traits():
            r = np.zeros(len(shapes))
            seen = 0
            for s in scores:
                if s.trait == t:
                    if s.face_id not in order:
                        raise DataError(f"scored face {s.face_id!r} has no shape")
                    r[order[s.face_id]] = s.score / 100.0
                    seen += 1
            if seen != len(shapes):
                raise DataError(f"{t.value}: {seen} scores for {len(shapes)} shapes")
            tvs.append(fit_trait_vector(F, r, t))
    save_trait_vectors(run.path(ARTIFACTS["trait_vectors"]), tvs, run.meta)


def cmd_manipulate(run: Run, args) -> None:
    bases = load_shapes(args.bases or run.path(ARTIFACTS["bases"]))
    tvs = load_trait_vectors(args.trait_vectors or run.path(ARTIFACTS["trait_vectors"]))
    with run.stage("manipulate"):
        faces_ = generate_distinct_set(bases, tvs, run.cfg.world.deltas, neutral_bases=True)
    save_shapes(run.path(ARTIFACTS["distinct_shapes"]), [m.shape for m in faces_], run.meta)
    save_scores(run.path(ARTIFACTS["distinct_scores"]),
                [TraitScore(m.face_id, m.trait, 100.0 * m.delta) for m in faces_], run.meta)


def cmd_embed(run: Run, args) -> None:
    spec = embedder_spec(run.cfg)
    pairs = [("shapes", "random_embeddings"), ("distinct_shapes", "distinct_embeddings")]
    with run.stage("embed"):
        for src, dst in pairs:
            p = run.path(ARTIFACTS[src])
            if src == "distinct_shapes" and not p.exists():
                continue
            save_embeddings(run.path(ARTIFACTS[dst]), embed_all(load_shapes(p), spec), run.meta)


def cmd_cv(run: Run, args) -> None:
    rnd, _ = faces(run)
    cfg = run.cfg
    out, rows = {}, []
    with run.stage("cv"):
        for t in cfg.trait_list():
            tf = [f for f in rnd if t in f.scores]
            X = np.vstack([f.embedding for f in tf])
            y = np.array([f.scores[t] for f in tf])
            pred = kfold_predictions(X, y, cfg.experiments.folds, cfg.forest_params(), cfg.seed,
                                     threads=cfg.threads)
            out[t.value] = regression_summary(pred, y)
            rows.extend((f.face_id, t.value, float(a), float(p)) for f, a, p in zip(tf, y, pred))
    write_rows(run.path("cv_predictions.csv"), ["face_id", "trait", "actual", "predicted"], rows, run.meta)
    run.write_json("cv.json", {"folds": cfg.experiments.folds, "traits": out})


def _exp_abc(run: Run, which: str) -> dict:
    rnd, dst = faces(run)
    cfg = run.cfg
    if not dst:
        raise DataError(f"experiment {which.upper()} needs distinct faces")
    fn = {"a": lambda t: experiment_a(rnd, dst, t, cfg.forest_params(), cfg.experiments.folds, cfg.seed, cfg.threads),
          "b": lambda t: experiment_b(dst, rnd, t, cfg.forest_params(), cfg.experiments.folds, cfg.seed, cfg.threads),
          "c": lambda t: experiment_c(rnd, dst, t, cfg.forest_params(), cfg.experiments.folds, cfg.seed, cfg.threads)}
    res = {}
    with run.stage(f"exp-{which}"):
        for t in cfg.trait_list():
            res[t.value] = fn[which](t)
    return {"experiment": which.upper(), "traits": res}


def _exp_d(run: Run) -> dict:
    cfg, el = run.cfg, run.cfg.election
    d = cfg.data
    with run.stage("exp-d"):
        if d.races:
            races = load_races(d.races)
            emb = {e.face_id: e.vector for e in load_embeddings(d.politician_embeddings, cfg.world.embed_dim)}
            _, dst = faces(run)
        else:
            w = build_world(world_config(cfg, el.eta, el.leakage))
            rc = RaceConfig(el.n_gubernatorial, el.n_senate, el.gap_min, el.gap_max,
                            el.spread_per_sd, el.spread_noise, el.n_raters)
            races, pols = synthesize_races(w, rc, cfg.seed)
            emb = {f.face_id: f.embedding for f in pols}
            dst = w.distinct_faces()
            save_races(run.path("races.csv"), races, run.meta)
        if not dst:
            raise DataError("experiment D needs distinct faces to train on")
        trait = TraitDimension.COMPETENT
        doc = {"experiment": "D", "source": "data" if d.races else "synthetic",
               "result": experiment_d(races, dst, emb, cfg.forest_params(), trait, cfg.seed, cfg.threads)}
        if el.scrambled_control:
            doc["scrambled_control"] = experiment_d(scramble_races(races, cfg.seed), dst, emb,
                                                    cfg.forest_params(), trait, cfg.seed, cfg.threads)
    return doc


def cmd_exp(run: Run, args) -> None:
    which = args.experiment
    doc = _exp_d(run) if which == "d" else _exp_abc(run, which)
    run.write_json(f"exp_{which}.json", doc)


def cmd_project(run: Run, args) -> None:
    _, dst = faces(run)
    if not dst:
        raise DataError("the projection diagnostic needs distinct faces")
    with run.stage("project"):
        X = np.vstack([f.embedding for f in dst])
        res = projection_diagnostic(X, [f.base_id for f in dst], [f.delta for f in dst])
    write_rows(run.path("projection.csv"), ["face_id", "base_id", "trait", "delta", "pc1", "pc2"],
               ((f.face_id, f.base_id, f.trait.value if f.trait else "", f.delta, float(c[0]), float(c[1]))
                for f, c in zip(dst, res["coords"])), run.meta)
    run.write_json("project.json", {k: v for k, v in res.items() if k != "coords"})


def cmd_explain(run: Run, args) -> None:
    xp, cfg = run.cfg.explain, run.cfg
    size = xp.image_size
    region = None
    with run.stage("explain.scorer"):
        if xp.scorer_command:
            scorer = SubprocessScorer(xp.scorer_command, xp.scorer_pool)
        else:
            train, levels = cohort(derive_seed(cfg.seed, "explain.train"), xp.cohort_train, size)
            scorer = ForestScorer.train(train, levels, cfg.forest_params(derive_seed(cfg.seed, "explain.forest")),
                                        PatchEmbedder(xp.patch_grid), cfg.threads)
    if xp.images:
        images = [load_png(p) for p in xp.images]
        names = [Path(p).stem for p in xp.images]
    else:
        images, _ = cohort(derive_seed(cfg.seed, "explain.test"), xp.cohort_explain, size)
        names = [f"face{i:04d}" for i in range(len(images))]
        region = default_region(size)

    out_dir = run.path("explain")
    out_dir.mkdir(exist_ok=True)
    exps, per = [], {}
    with run.stage("explain.lime", images=len(images)):
        for i, (name, im) in enumerate(zip(names, images)):
            seg = slic(im, xp.segments, xp.compactness, xp.iters)
            e = lime_explain(scorer, im, seg, xp.n_samples, derive_seed(cfg.seed, "explain.lime", i),
                             xp.kernel_width, xp.ridge, xp.top_k)
            exps.append(e)
            per[name] = e.to_dict()
            save_png(out_dir / f"{name}_overlay.png", render_explanation(im, e), run.meta)
    doc = {"images": per, "settings": exps[0].settings if exps else {}}
    sizes = {im.size for im in images}
    if len(sizes) == 1:
        heat = aggregate_heatmap(exps, images)
        save_heatmap(out_dir / "heatmap", heat, run.meta)
        if region is not None:
            doc["planted_region"] = {"y0": region.y0, "x0": region.x0, "height": region.height, "width": region.width}
            doc["heatmap_iou"] = iou(hottest(heat.values, 0.05), region.mask((size, size)))
    else:
        doc["heatmap"] = "skipped: images differ in size"
    run.write_json("explain.json", doc)


def cmd_report(run: Run, args) -> None:
    docs, hashes = {}, {}
    for p in sorted(run.out.glob("*.json")):
        if p.name == "report.json":
            continue
        doc = report_io.read(p)
        h = doc.get("meta", {}).get("config_hash")
        hashes[p.name] = h
        docs[p.stem] = doc
    mixed = sorted({h for h in hashes.values() if h})
    if len(mixed) > 1 or (mixed and mixed[0] != run.hash):
        raise InvariantViolation(f"artifact config hashes differ: {dict(sorted(hashes.items()))} "
                                 f"(current config {run.hash})")
    results = []
    if not args.skip_acceptance:
        wanted = {int(x) for x in args.criteria.split(",")} if args.criteria else set(range(1, 11))
        checks = {
            1: lambda: acceptance.criterion_1(run.cfg.seed, run.threads),
            2: lambda: acceptance.criterion_2(run.cfg.seed, run.threads),
            3: lambda: acceptance.criterion_3(run.cfg.seed),
            4: lambda: acceptance.criterion_4(run.cfg.seed),
            5: lambda: acceptance.criterion_5(run.cfg.seed),
            6: lambda: acceptance.criterion_6(run.cfg.seed),
            7: lambda: acceptance.criterion_7(run.cfg.seed),
            8: lambda: acceptance.criterion_8(run.cfg.seed, run.threads),
            9: lambda: acceptance.criterion_9(run.cfg.seed),
            10: lambda: _criterion_10(run),
        }
        bad = wanted - set(checks)
        if bad:
            raise ConfigError(f"unknown criteria {sorted(bad)}")
        with run.stage("report.acceptance"):
            for n in sorted(wanted):
                r = checks[n]()
                print(r.line(), flush=True)
                results.append(r)
    doc = {"artifacts": docs, "acceptance": [r.to_dict() for r in results]}
    run.write_json("report.json", doc)


def _criterion_10(run: Run):
    if not run.cfg.data.random_embeddings or not run.cfg.data.distinct_embeddings:
        return acceptance.criterion_10(seed=run.cfg.seed)
    rnd, dst = faces(run)
    return acceptance.criterion_10(rnd, dst, run.cfg.seed, run.threads)


COMMANDS = {
    "gen": cmd_gen, "fit-trait": cmd_fit_trait, "manipulate": cmd_manipulate, "embed": cmd_embed,
    "cv": cmd_cv, "exp": cmd_exp, "project": cmd_project, "explain": cmd_explain, "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dry-run", action="store_true", help="validate the config and exit")

    parser = argparse.ArgumentParser(prog="bias-probe", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="random shapes, simulated ratings and scores")
    p = sub.add_parser("fit-trait", parents=[common], help="fit trait vectors from shapes and scores")
    p.add_argument("--shapes")
    p.add_argument("--scores")
    p = sub.add_parser("manipulate", parents=[common], help="generate the maximally distinct face set")
    p.add_argument("--bases")
    p.add_argument("--trait-vectors")
    sub.add_parser("embed", parents=[common], help="embed shape files with the synthetic embedder")
    sub.add_parser("cv", parents=[common], help="k-fold forest regression on random faces")
    p = sub.add_parser("exp", parents=[common], help="run one experiment")
    p.add_argument("experiment", choices=["a", "b", "c", "d"])
    sub.add_parser("project", parents=[common], help="2-D projection and silhouette diagnostic")
    sub.add_parser("explain", parents=[common], help="superpixel explanations and cohort heatmap")
    p = sub.add_parser("report", parents=[common], help="bundle reports and run the acceptance checks")
    p.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    p.add_argument("--skip-acceptance", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config, {"seed": args.seed, "threads": args.threads, "out": args.out})
        if args.dry_run:
            print(f"config ok: hash {cfg.hash()} seed {cfg.seed}")
            return EXIT_OK
        run = Run(cfg, args.command)
        t0 = time.perf_counter()
        COMMANDS[args.command](run, args)
        run.log("total", time.perf_counter() - t0)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BiasProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
