"""Command-line pipeline driver.

    seshield <subcommand> --config run.json [--seed N] [--out DIR]

Subcommands cover the pipeline end to end: ingest, cluster, label, split,
augment, train, advtrain, eval, robust, export, probe. Each writes its
artifacts under the output directory together with a run manifest recording
the config hash and content addresses of the inputs it consumed.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import adversarial as adv
from . import augment as aug
from . import dataset as ds
from . import evaluation as ev
from . import export as ex
from . import fedtrain as fed
from .config import ConfigError, config_hash, file_hash, load_config
from .model import (
    AdaptedModel,
    BackboneSpec,
    PreprocessPolicy,
    adapt_backbone,
    load_checkpoint,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _policy_from(config: dict, family: str) -> PreprocessPolicy:
    overrides = config.get("preprocess", {})
    return PreprocessPolicy.for_family(family, **overrides)


def _fed_config(config: dict, seed: int) -> fed.FedConfig:
    cfg = fed.FedConfig(seed=seed, **config.get("fed", {}))
    cfg.validate(strict=True)
    return cfg


def _model_spec(config: dict) -> BackboneSpec:
    section = config.get("model", {})
    return BackboneSpec(
        family=section.get("family", "vgg19"),
        pretrained_on=section.get("pretrained_on", "none"),
    )


def _write_manifest(out_dir: Path, config: dict, seed: int,
                    inputs: list[Path], artifacts: list[Path]) -> None:
    manifest = {
        "config_hash": config_hash(config),
        "seed": seed,
        "inputs": {str(p): file_hash(p) for p in sorted(set(inputs)) if p.is_file()},
        "artifacts": sorted(str(a.relative_to(out_dir)) for a in artifacts),
    }
    manifest["manifest_hash"] = hashlib.sha256(
        json.dumps(manifest, sort_keys=True).encode()
    ).hexdigest()
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )


def _load_split_corpus(config: dict, out_dir: Path):
    paths = config["paths"]
    corpus = ds.load_corpus(paths.get("corpus", out_dir / "corpus.json"))
    split = ds.DatasetSplit.load(paths.get("split", out_dir / "split.json"))
    by_id = {im.id: im for im in corpus}
    train = [by_id[i] for i in sorted(split.train_ids) if i in by_id]
    val = [by_id[i] for i in sorted(split.val_ids) if i in by_id]
    test = [by_id[i] for i in sorted(split.test_ids) if i in by_id]
    return corpus, split, train, val, test


def cmd_ingest(config: dict, seed: int, out_dir: Path) -> list[Path]:
    paths = config["paths"]
    artifacts = []
    all_warnings = []
    for kind in ("benign", "se"):
        root = paths.get(f"{kind}_root")
        if root is None:
            continue
        records, report = ds.ingest_crawl_output(root)
        records = ds.dedup(records)
        target = out_dir / f"records_{kind}.json"
        ds.save_records(records, target)
        artifacts.append(target)
        all_warnings.extend(f"{kind}: {w}" for w in report.warnings)
        print(f"ingested {len(records)} {kind} records ({len(report.warnings)} warnings)")
    report_path = out_dir / "ingest_report.json"
    report_path.write_text(json.dumps({"warnings": all_warnings}, indent=1),
                           encoding="utf-8")
    artifacts.append(report_path)
    return artifacts


def cmd_cluster(config: dict, seed: int, out_dir: Path) -> list[Path]:
    threshold = config.get("cluster", {}).get("threshold", ds.DEFAULT_THRESHOLD)
    records = ds.load_records(out_dir / "records_se.json")
    by_id = {r.id: r for r in records}
    clusters = []
    for bucket in ds.bucket_by_resolution(records).values():
        clusters.extend(ds.cluster_by_phash(bucket, threshold))
    kept = ds.filter_clusters(clusters, by_id)
    target = out_dir / "clusters.json"
    ds.save_clusters(kept, target)
    print(f"{len(clusters)} clusters, {len(kept)} kept after the >=3/>=3 filter")
    return [target]


def cmd_label(config: dict, seed: int, out_dir: Path) -> list[Path]:
    paths = config["paths"]
    clusters = ds.load_clusters(out_dir / "clusters.json")
    metaclusters = ds.merge_metaclusters(clusters, paths.get("merge_file"))
    label_files = [ds.LabelFile.load(p) for p in paths.get("labels", [])]
    labeled = ds.apply_labels(metaclusters, label_files)
    target = out_dir / "metaclusters.json"
    ds.save_metaclusters(labeled, target)
    artifacts = [target]
    try:
        alpha = ds.krippendorff_alpha(label_files)
        print(f"labeler agreement alpha = {alpha:.3f}")
        (out_dir / "agreement.json").write_text(
            json.dumps({"krippendorff_alpha": alpha}), encoding="utf-8")
        artifacts.append(out_dir / "agreement.json")
    except (ds.UndefinedAgreementError, ValueError) as e:
        print(f"agreement not computed: {e}")

    benign_records = ds.load_records(out_dir / "records_benign.json")
    se_records = ds.load_records(out_dir / "records_se.json")
    corpus = ds.build_corpus(benign_records, se_records, clusters, labeled)
    corpus_path = out_dir / "corpus.json"
    ds.save_corpus(corpus, corpus_path)
    artifacts.append(corpus_path)
    print(f"corpus: {len(corpus)} labeled images")
    return artifacts


def cmd_split(config: dict, seed: int, out_dir: Path,
              scenario: str | None = None, excluded: str | None = None) -> list[Path]:
    paths = config["paths"]
    section = dict(config.get("split", {}))
    config_scenario = section.pop("scenario", ds.RQ1_RANDOM)
    config_excluded = section.pop("excluded_key", None)
    scenario = scenario or config_scenario
    excluded = excluded if excluded is not None else config_excluded
    options = ds.SplitOptions(**section) if section else ds.SplitOptions()
    corpus = ds.load_corpus(paths.get("corpus", out_dir / "corpus.json"))
    split = ds.build_split(corpus, scenario, seed, excluded_key=excluded, options=options)
    target = out_dir / "split.json"
    split.save(target)
    print(f"split {scenario}: {len(split.train_ids)} train / "
          f"{len(split.val_ids)} val / {len(split.test_ids)} test")
    return [target]


def cmd_augment(config: dict, seed: int, out_dir: Path) -> list[Path]:
    corpus, split, train, _, _ = _load_split_corpus(config, out_dir)
    target_count = config.get("augment", {}).get("per_cell_target", 500)
    cells = sorted({(im.resolution, im.class_name) for im in train},
                   key=lambda c: str(c))
    plan = aug.AugmentPlan.uniform(cells, target_count, seed=seed)
    augmented = aug.augment_to_quota(train, plan, out_dir / "augmented")
    combined = {im.id: im for im in corpus}
    for im in augmented:
        combined[im.id] = im
    corpus_path = out_dir / "corpus.json"
    ds.save_corpus(list(combined.values()), corpus_path)
    new_train = split.train_ids | {im.id for im in augmented if im.origin == "augmented"}
    split = ds.DatasetSplit(
        scenario=split.scenario, seed=split.seed, excluded_key=split.excluded_key,
        train_ids=frozenset(new_train), val_ids=split.val_ids, test_ids=split.test_ids,
    )
    split.validate()
    split_path = out_dir / "split.json"
    split.save(split_path)
    generated = sum(1 for im in augmented if im.origin == "augmented")
    print(f"augmented train set: +{generated} generated images")
    return [corpus_path, split_path]


def _train_common(config: dict, seed: int, out_dir: Path, adversarial_mode: bool):
    _, _, train, val, _ = _load_split_corpus(config, out_dir)
    spec = _model_spec(config)
    model = adapt_backbone(spec)
    policy = _policy_from(config, spec.family)
    cfg = _fed_config(config, seed)
    run_dir = out_dir / ("advtrain" if adversarial_mode else "train")
    if adversarial_mode:
        section = config.get("adversarial", {})
        policy_adv = adv.AdvTrainPolicy(
            epsilon_pool=tuple(section.get("epsilon_pool", adv.DEFAULT_EPSILON_POOL)),
            pgd_steps=section.get("pgd_steps", 10),
        )
        result = adv.adversarial_train(model, train, val, cfg, policy_adv,
                                       preprocess_policy=policy, out_dir=run_dir)
    else:
        result = fed.train(model, train, val, cfg, policy=policy, out_dir=run_dir)
    best = result.best_metrics or {}
    print(f"training done: best round {result.best_round}, metrics {best}")
    return [run_dir / "history.jsonl", *(p / "manifest.json" for p in result.checkpoints)]


def cmd_train(config: dict, seed: int, out_dir: Path) -> list[Path]:
    return _train_common(config, seed, out_dir, adversarial_mode=False)


def cmd_advtrain(config: dict, seed: int, out_dir: Path) -> list[Path]:
    return _train_common(config, seed, out_dir, adversarial_mode=True)


def _checkpoint_path(config: dict, out_dir: Path) -> Path:
    explicit = config["paths"].get("checkpoint")
    if explicit:
        return Path(explicit)
    for candidate in (out_dir / "train" / "best", out_dir / "advtrain" / "best"):
        if candidate.is_dir():
            return candidate
    raise FileNotFoundError("no checkpoint found; run the train subcommand first")


def cmd_eval(config: dict, seed: int, out_dir: Path,
             paper_format: bool = False) -> list[Path]:
    _, split, train, val, test = _load_split_corpus(config, out_dir)
    model, policy, _ = load_checkpoint(_checkpoint_path(config, out_dir))
    scores = fed.evaluate_scores(model, test, policy)
    report = ev.metrics_report(scores)
    result = ev.ProtocolResult(
        experiments=[ev.ExperimentResult(split.scenario, split, scores, report)],
        global_report=report, global_scores=scores,
    )
    paper = paper_format or config.get("eval", {}).get("paper_format", False)
    table = ev.write_table(result, out_dir / "eval_table.csv", paper_format=paper)
    roc = ev.write_roc(result, out_dir / "eval_roc.json")
    print(f"eval: DR@1%FP={report.dr_at_fp[1]:.3f} AUC={report.auc:.3f} "
          f"F1={report.f1:.3f}")
    return [table, roc]


def cmd_robust(config: dict, seed: int, out_dir: Path) -> list[Path]:
    _, _, _, _, test = _load_split_corpus(config, out_dir)
    model, policy, _ = load_checkpoint(_checkpoint_path(config, out_dir))
    epsilons = config.get("eval", {}).get("epsilons", [0.01, 0.1, 0.3, 0.5, 1.0])
    steps = config.get("adversarial", {}).get("pgd_steps", 10)
    reports = adv.robustness_eval(model, test, epsilons, policy=policy,
                                  pgd_steps=steps, seed=seed)
    target = adv.write_robustness_csv(reports, out_dir / "robustness.csv")
    for eps, rep in reports.items():
        print(f"eps={eps}: DR@1%FP={rep.dr_at_fp[1]:.3f}")
    return [target]


def cmd_export(config: dict, seed: int, out_dir: Path) -> list[Path]:
    bundle_dir = Path(config["paths"].get("bundle", out_dir / "bundle"))
    ex.export_web(_checkpoint_path(config, out_dir), bundle_dir)
    print(f"bundle written to {bundle_dir}")
    return [bundle_dir / "model.json", bundle_dir / "card.json",
            bundle_dir / "preprocess.json"]


def cmd_probe(config: dict, seed: int, out_dir: Path) -> list[Path]:
    bundle_dir = Path(config["paths"].get("bundle", out_dir / "bundle"))
    probe_dir = config["paths"].get("probe_images")
    if probe_dir is None:
        raise FileNotFoundError("paths.probe_images is required for the probe")
    images = sorted(Path(probe_dir).glob("*.png"))[:20]
    stats = ex.latency_probe(bundle_dir, images)
    target = out_dir / "latency.json"
    target.write_text(json.dumps(stats, indent=1), encoding="utf-8")
    print(f"latency p50={stats['p50_ms']:.1f}ms p95={stats['p95_ms']:.1f}ms")
    return [target]


COMMANDS = {
    "ingest": cmd_ingest,
    "cluster": cmd_cluster,
    "label": cmd_label,
    "split": cmd_split,
    "augment": cmd_augment,
    "train": cmd_train,
    "advtrain": cmd_advtrain,
    "eval": cmd_eval,
    "robust": cmd_robust,
    "export": cmd_export,
    "probe": cmd_probe,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seshield", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        if name == "split":
            p.add_argument("--scenario", default=None,
                           choices=["rq1", "rq2", "rq3", *ds.SCENARIOS])
            p.add_argument("--exclude", default=None,
                           help="held-out resolution (WxH) or campaign id")
        if name == "eval":
            p.add_argument("--paper-format", action="store_true")
    return parser


_SCENARIO_ALIASES = {
    "rq1": ds.RQ1_RANDOM,
    "rq2": ds.RQ2_LEAVE_RESOLUTION_OUT,
    "rq3": ds.RQ3_LEAVE_CAMPAIGN_OUT,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else config["seed"]
    out_dir = Path(args.out or config["paths"]["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = [Path(args.config)]
    for key in ("benign_root", "se_root", "merge_file", "corpus", "split"):
        value = config["paths"].get(key)
        if value and Path(value).is_file():
            inputs.append(Path(value))
    inputs.extend(Path(p) for p in config["paths"].get("labels", []))
    try:
        if args.command == "split":
            scenario = _SCENARIO_ALIASES.get(args.scenario, args.scenario)
            artifacts = cmd_split(config, seed, out_dir, scenario, args.exclude)
        elif args.command == "eval":
            artifacts = cmd_eval(config, seed, out_dir, args.paper_format)
        else:
            artifacts = COMMANDS[args.command](config, seed, out_dir)
        _write_manifest(out_dir, config, seed, inputs, artifacts)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # runtime failures map to exit 1 with a diagnostic
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
