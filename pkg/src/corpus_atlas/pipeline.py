"""Full-pipeline orchestration from a single TOML config.

Every stage hands off through files in the output directory so each step can
be re-run standalone; run_pipeline finishes by writing a manifest with a
SHA-256 digest per artifact. Given fixed seeds and inputs, reruns reproduce
every artifact byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import sys
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import cluster, corpus as corpus_mod, modelsel, project, reduce as reduce_mod, report
from .embedstore import read_embeddings, write_embeddings, align

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    records: Path
    embeddings: Path
    outdir: Path
    min_words: int = 31
    min_category_count: int = 250
    variance_target: float = 0.95
    fit_on: str = "train"  # or "all"
    k_min: int = 2
    k_max: int = 50
    n_init: int = 10
    max_iter: int = 300
    rel_tol: float = 1e-4
    subsample_cap: int = 10_000
    split_seed: int = 0
    model_seed: int = 0
    tsne_seed: int = 0
    report_top_n: int = 3
    report_min_count: int = 10
    project_enabled: bool = False
    perplexity: float = 30.0
    tsne_iterations: int = 1000
    max_points: int = 2000

    def validate(self) -> None:
        if self.k_min < 2 or self.k_max < self.k_min:
            raise ValueError(f"empty or invalid sweep range [{self.k_min}, {self.k_max}]")
        if self.min_words <= 0 or self.min_category_count <= 0:
            raise ValueError("filter thresholds must be positive")
        if not 0.0 < self.variance_target <= 1.0:
            raise ValueError("variance_target must be in (0, 1]")
        if self.fit_on not in ("train", "all"):
            raise ValueError(f"fit_on must be 'train' or 'all', got {self.fit_on!r}")
        for p in (self.records, self.embeddings):
            if not Path(p).exists():
                raise ValueError(f"input path does not exist: {p}")


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a pipeline TOML file; relative paths resolve against its directory."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    base = path.parent

    def _path(section: str, key: str) -> Path:
        try:
            value = raw[section][key]
        except KeyError as exc:
            raise PipelineError(f"{path}: missing [{section}] {key}") from exc
        p = Path(value)
        return p if p.is_absolute() else (base / p)

    def _get(section: str, key: str, default):
        return raw.get(section, {}).get(key, default)

    return PipelineConfig(
        records=_path("input", "records"),
        embeddings=_path("input", "embeddings"),
        outdir=_path("output", "dir"),
        min_words=int(_get("filter", "min_words", 31)),
        min_category_count=int(_get("filter", "min_category_count", 250)),
        variance_target=float(_get("pca", "variance_target", 0.95)),
        fit_on=str(_get("pca", "fit_on", "train")),
        k_min=int(_get("sweep", "k_min", 2)),
        k_max=int(_get("sweep", "k_max", 50)),
        n_init=int(_get("sweep", "n_init", 10)),
        max_iter=int(_get("sweep", "max_iter", 300)),
        rel_tol=float(_get("sweep", "rel_tol", 1e-4)),
        subsample_cap=int(_get("sweep", "subsample_cap", 10_000)),
        split_seed=int(_get("seeds", "split", 0)),
        model_seed=int(_get("seeds", "model", 0)),
        tsne_seed=int(_get("seeds", "tsne", 0)),
        report_top_n=int(_get("report", "top_n", 3)),
        report_min_count=int(_get("report", "min_count", 10)),
        project_enabled=bool(_get("project", "enabled", False)),
        perplexity=float(_get("project", "perplexity", 30.0)),
        tsne_iterations=int(_get("project", "iterations", 1000)),
        max_points=int(_get("project", "max_points", 2000)),
    )


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_echo(config: PipelineConfig) -> dict:
    echo = asdict(config)
    for key in ("records", "embeddings", "outdir"):
        echo[key] = str(echo[key])
    return echo


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute ingest -> align -> split -> reduce -> sweep -> cluster -> report
    (-> project), returning the written manifest. Any stage failure aborts
    with a stage-named error after flushing a partial manifest."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts: list[dict] = []
    stage = "config"

    def _add(stage_name: str, path: Path) -> None:
        artifacts.append(
            {
                "stage": stage_name,
                "name": str(path.relative_to(outdir)),
                "sha256": _sha256(path),
                "bytes": path.stat().st_size,
            }
        )

    def _manifest(status: str, failed_stage: str | None) -> dict:
        manifest = {
            "status": status,
            "failed_stage": failed_stage,
            "config": _config_echo(config),
            "artifacts": artifacts,
        }
        (outdir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return manifest

    try:
        config.validate()

        stage = "ingest"
        policy = corpus_mod.FilterPolicy(
            min_abstract_words=config.min_words,
            min_category_count=config.min_category_count,
        )
        corp = corpus_mod.load_corpus(config.records, policy)
        atlas_path = outdir / "corpus.atlas"
        corpus_mod.save_corpus(corp, atlas_path)
        _add(stage, atlas_path)

        stage = "align"
        emb = read_embeddings(config.embeddings)
        aligned = align(corp, emb)
        if aligned.missing_embedding:
            log.warning(
                "align: %d corpus records have no embedding row", len(aligned.missing_embedding)
            )
        aligned_path = outdir / "aligned.emb1"
        write_embeddings(aligned.matrix, aligned_path)
        _add(stage, aligned_path)
        kept_ids = set(aligned.matrix.ids)
        sub_records = [r for r in corp.records if r.id in kept_ids]
        sub_corpus = corpus_mod.Corpus(
            records=sub_records,
            category_counts=dict(Counter(c for r in sub_records for c in r.categories)),
            provenance={"derived_from": "align"},
        )

        stage = "split"
        split_index = corpus_mod.split(sub_corpus, config.split_seed)
        split_path = outdir / "split.json"
        split_path.write_text(corpus_mod.split_to_json(split_index) + "\n", encoding="utf-8")
        _add(stage, split_path)
        row_of = {rid: i for i, rid in enumerate(aligned.matrix.ids)}
        train_rows = np.asarray([row_of[i] for i in split_index.train_ids], dtype=np.intp)
        val_rows = np.asarray([row_of[i] for i in split_index.val_ids], dtype=np.intp)
        test_rows = np.asarray([row_of[i] for i in split_index.test_ids], dtype=np.intp)

        stage = "reduce"
        fit_data = (
            aligned.matrix.data[train_rows] if config.fit_on == "train" else aligned.matrix.data
        )
        pca = reduce_mod.fit(fit_data.astype(np.float64), config.variance_target)
        pca_path = outdir / "pca.json"
        reduce_mod.save_model(pca, pca_path)
        _add(stage, pca_path)
        reduced = reduce_mod.transform(pca, aligned.matrix)
        reduced_path = outdir / "reduced.emb1"
        write_embeddings(reduced, reduced_path)
        _add(stage, reduced_path)
        reduced_data = reduced.data.astype(np.float64)

        stage = "sweep"
        sweep_result = modelsel.sweep(
            reduced_data[train_rows],
            reduced_data[val_rows],
            k_values=range(config.k_min, config.k_max + 1),
            seed=config.model_seed,
            n_init=config.n_init,
            max_iter=config.max_iter,
            rel_tol=config.rel_tol,
            subsample_cap=config.subsample_cap,
        )
        sweep_path = outdir / "sweep.csv"
        modelsel.write_sweep_csv(sweep_result, sweep_path)
        _add(stage, sweep_path)
        plot_path = outdir / "sweep_plot.csv"
        modelsel.write_sweep_plot(sweep_result, plot_path)
        _add(stage, plot_path)

        stage = "cluster"
        model = cluster.fit(
            reduced_data[train_rows],
            cluster.KMeansParams(
                k=sweep_result.best_k,
                seed=config.model_seed,
                n_init=config.n_init,
                max_iter=config.max_iter,
                rel_tol=config.rel_tol,
            ),
        )
        model_path = outdir / "model.kmeans"
        cluster.save_model(model, model_path)
        _add(stage, model_path)
        labels = cluster.predict(model, reduced_data)
        labels_path = outdir / "labels.csv"
        with open(labels_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "cluster"])
            for rid, lab in zip(aligned.matrix.ids, labels):
                w.writerow([rid, int(lab)])
        _add(stage, labels_path)

        stage = "report"
        label_map = {rid: int(lab) for rid, lab in zip(aligned.matrix.ids, labels)}
        rep = report.build_report(
            label_map, corp, top_n=config.report_top_n, min_count=config.report_min_count
        )
        for path in report.emit_report(rep, outdir / "report"):
            _add(stage, path)

        if config.project_enabled:
            stage = "project"
            rows = np.arange(reduced_data.shape[0])
            if rows.size > config.max_points:
                rng = np.random.default_rng(config.tsne_seed)
                rows = np.sort(rng.choice(rows.size, size=config.max_points, replace=False))
            coords = project.tsne(
                reduced_data[rows],
                project.TsneConfig(
                    perplexity=config.perplexity,
                    iterations=config.tsne_iterations,
                    seed=config.tsne_seed,
                ),
            )
            proj_path = outdir / "proj.csv"
            with open(proj_path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["id", "x", "y", "cluster"])
                for r, (px, py) in zip(rows, coords):
                    w.writerow([aligned.matrix.ids[r], repr(float(px)), repr(float(py)),
                                int(labels[r])])
            _add(stage, proj_path)

        stage = "summary"
        test_sil = None
        if test_rows.size >= 3:
            test_labels = cluster.predict(model, reduced_data[test_rows])
            if np.unique(test_labels).size >= 2:
                test_sil, _ = modelsel.silhouette(reduced_data[test_rows], test_labels)
        summary = {
            "records_ingested": len(corp.records),
            "records_aligned": len(sub_records),
            "missing_embedding": len(aligned.missing_embedding),
            "unmatched_rows": len(aligned.unmatched_rows),
            "split_sizes": {
                "train": len(split_index.train_ids),
                "val": len(split_index.val_ids),
                "test": len(split_index.test_ids),
            },
            "pca_m": pca.m,
            "best_k": sweep_result.best_k,
            "silhouette_best": sweep_result.silhouette_val[
                sweep_result.k_values.index(sweep_result.best_k)
            ],
            "silhouette_test": test_sil,
            "skipped_k": sweep_result.skipped,
        }
        summary_path = outdir / "summary.json"
        summary_path.write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _add(stage, summary_path)
    except Exception as exc:
        _manifest("failed", stage)
        raise PipelineError(f"pipeline failed at stage '{stage}': {exc}") from exc
    return _manifest("complete", None)
