//! File-driven pipeline stages behind the CLI.
//!
//! Output layout under `paths.output_dir`:
//!
//! ```text
//! config.resolved.toml
//! attributes/<model>.csv
//! groundtruth/<model>/s<sigma>_n<n>.gt
//! models/manifest.json, models/fold<k>.json
//! detections/<model>.csv
//! eval/summary.json, eval/s<sigma>_n<n>.csv, eval/curves_s<sigma>.svg
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::attributes::{
    extract_all, parse_attribute_csv, read_attribute_csv, write_attribute_csv, AttributeMatrix,
};
use crate::config::RunConfig;
use crate::detector::{
    detect, read_detections, train_fold, write_detections, DetectionHeader, ModelInput, NmsConfig,
};
use crate::evaluation::{
    crossval_aggregate, curve_csv, curves_svg, summary_json, sweep, EvalModel, EvalReport,
};
use crate::forest::RandomForestModel;
use crate::groundtruth::{
    cluster_grid, parse_ground_truth, read_clicks, write_ground_truth, GroundTruthTable,
};
use crate::mesh::{read_off, TriMesh};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    /// Recompute outputs even when they look up to date.
    pub force: bool,
}

/// What a command did, for the CLI to print.
#[derive(Debug, Default)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<PathBuf>,
}

impl Report {
    pub fn summary(&self) -> String {
        format!(
            "{} written, {} up to date",
            self.written.len(),
            self.skipped.len()
        )
    }
}

fn dir(cfg: &RunConfig, sub: &str) -> PathBuf {
    cfg.paths.output_dir.join(sub)
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write(path: &Path, text: &str, report: &mut Report) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    report.written.push(path.to_path_buf());
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn mtime(path: &Path) -> Option<SystemTime> {
    fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// True when `output` exists and is at least as new as every input.
fn newer_than(output: &Path, inputs: &[&Path]) -> bool {
    match mtime(output) {
        Some(out) => inputs.iter().all(|i| mtime(i).is_some_and(|t| t <= out)),
        None => false,
    }
}

fn hash_str(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

/// Writes the resolved configuration next to the outputs.
pub fn write_snapshot(cfg: &RunConfig) -> Result<PathBuf> {
    let path = cfg.paths.output_dir.join("config.resolved.toml");
    let text = format!("# config hash {}\n{}", cfg.hash()?, cfg.to_toml()?);
    create_dir(&cfg.paths.output_dir)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// `(model id, path)` for every `.off` file, sorted by id.
pub fn list_meshes(mesh_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(mesh_dir).map_err(|e| Error::io(mesh_dir, e))?;
    let mut out = Vec::new();
    for e in entries {
        let path = e.map_err(|e| Error::io(mesh_dir, e))?.path();
        if path
            .extension()
            .and_then(|x| x.to_str())
            .map(|x| x.eq_ignore_ascii_case("off"))
            != Some(true)
        {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| {
                Error::InvalidArgument(format!("{}: file name is not UTF-8", path.display()))
            })?
            .to_string();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "{}: model ids (file stems) must be nonempty and contain no whitespace",
                path.display()
            )));
        }
        out.push((id, path));
    }
    out.sort();
    Ok(out)
}

fn require_models(cfg: &RunConfig) -> Result<Vec<(String, PathBuf)>> {
    let models = list_meshes(&cfg.paths.mesh_dir)?;
    if models.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no .off meshes in {}",
            cfg.paths.mesh_dir.display()
        )));
    }
    Ok(models)
}

fn attribute_path(cfg: &RunConfig, id: &str) -> PathBuf {
    dir(cfg, "attributes").join(format!("{id}.csv"))
}

fn clicks_path(cfg: &RunConfig, id: &str) -> PathBuf {
    cfg.paths.clicks_dir.join(format!("{id}.clicks"))
}

fn gt_dir(cfg: &RunConfig, id: &str) -> PathBuf {
    dir(cfg, "groundtruth").join(id)
}

fn cell_name(sigma: f64, n: usize) -> String {
    format!("s{sigma}_n{n}")
}

fn detection_path(cfg: &RunConfig, id: &str) -> PathBuf {
    dir(cfg, "detections").join(format!("{id}.csv"))
}

fn fail_if_any(what: &str, failures: Vec<String>) -> Result<()> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} failed for {} model(s):\n  {}",
            failures.len(),
            failures.join("\n  ")
        )))
    }
}

/// Whether an existing attribute file was computed with the configured
/// parameters and the current schema.
fn attribute_header_matches(path: &Path, cfg: &RunConfig) -> bool {
    let Ok(text) = read(path) else { return false };
    let head: String = text.lines().take(2).collect::<Vec<_>>().join("\n");
    match parse_attribute_csv(&head) {
        Ok(m) => {
            m.delta_fraction == cfg.attributes.delta_fraction
                && m.neighbors == cfg.attributes.neighbors
        }
        Err(_) => false,
    }
}

pub fn cmd_attributes(cfg: &RunConfig, opts: &Options) -> Result<Report> {
    let models = list_meshes(&cfg.paths.mesh_dir)?;
    let mut report = Report::default();
    if models.is_empty() {
        log::warn!("no .off meshes in {}", cfg.paths.mesh_dir.display());
        return Ok(report);
    }
    let params = cfg.attribute_params();
    let mut failures = Vec::new();
    for (id, mesh_path) in &models {
        let out = attribute_path(cfg, id);
        if !opts.force && newer_than(&out, &[mesh_path]) && attribute_header_matches(&out, cfg) {
            report.skipped.push(out);
            continue;
        }
        let result = read_off(mesh_path).and_then(|mesh| extract_all(&mesh, id, &params));
        match result {
            Ok(m) => {
                log::info!("{id}: {} vertices", m.len());
                write(&out, &write_attribute_csv(&m), &mut report)?;
            }
            Err(e) => {
                log::error!("{}: {e}", mesh_path.display());
                failures.push(format!("{}: {e}", mesh_path.display()));
            }
        }
    }
    fail_if_any("attribute extraction", failures)?;
    Ok(report)
}

pub fn cmd_cluster_gt(cfg: &RunConfig, opts: &Options) -> Result<Report> {
    let models = require_models(cfg)?;
    let cells = cfg.cells();
    let mut report = Report::default();
    let mut failures = Vec::new();
    for (id, mesh_path) in &models {
        let clicks_file = clicks_path(cfg, id);
        if !clicks_file.exists() {
            failures.push(format!(
                "{id}: missing click file {}",
                clicks_file.display()
            ));
            continue;
        }
        let outs: Vec<PathBuf> = cells
            .iter()
            .map(|&(s, n)| gt_dir(cfg, id).join(format!("{}.gt", cell_name(s, n))))
            .collect();
        if !opts.force
            && outs
                .iter()
                .all(|o| newer_than(o, &[mesh_path, &clicks_file]))
        {
            report.skipped.extend(outs);
            continue;
        }
        let result = (|| -> Result<GroundTruthTable> {
            let mesh = read_off(mesh_path)?;
            let mut clicks = read_clicks(&clicks_file)?;
            if clicks.model != *id {
                log::warn!(
                    "{}: declares model {}, using {id}",
                    clicks_file.display(),
                    clicks.model
                );
                clicks.model = id.clone();
            }
            cluster_grid(
                &mesh,
                &clicks,
                &cfg.ground_truth.sigmas,
                &cfg.ground_truth.ns,
            )
        })();
        match result {
            Ok(table) => {
                for (cell, out) in table.cells.iter().zip(&outs) {
                    let single = GroundTruthTable {
                        model: table.model.clone(),
                        cells: vec![cell.clone()],
                    };
                    write(out, &write_ground_truth(&single), &mut report)?;
                }
            }
            Err(e) => failures.push(format!("{id}: {e}")),
        }
    }
    fail_if_any("ground-truth clustering", failures)?;
    Ok(report)
}

/// Merges the per-cell files of one model.
pub fn load_ground_truth(cfg: &RunConfig, id: &str) -> Result<GroundTruthTable> {
    let mut table = GroundTruthTable {
        model: id.to_string(),
        cells: Vec::new(),
    };
    for (sigma, n) in cfg.cells() {
        let path = gt_dir(cfg, id).join(format!("{}.gt", cell_name(sigma, n)));
        if !path.exists() {
            continue;
        }
        let part = parse_ground_truth(&read(&path)?)?;
        table.cells.extend(part.cells);
    }
    Ok(table)
}

fn load_attributes(cfg: &RunConfig, id: &str, mesh: &TriMesh) -> Result<AttributeMatrix> {
    let path = attribute_path(cfg, id);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "{id}: no attribute file, run `attributes` first"
        )));
    }
    let m = read_attribute_csv(&path)?;
    if m.delta_fraction != cfg.attributes.delta_fraction || m.neighbors != cfg.attributes.neighbors
    {
        return Err(Error::Schema(format!(
            "{}: computed with delta_fraction {} and {} neighbors, config asks for {} and {}; rerun `attributes --force`",
            path.display(),
            m.delta_fraction,
            m.neighbors,
            cfg.attributes.delta_fraction,
            cfg.attributes.neighbors
        )));
    }
    if m.len() != mesh.vertex_count() {
        return Err(Error::Schema(format!(
            "{}: {} rows for a mesh with {} vertices; rerun `attributes --force`",
            path.display(),
            m.len(),
            mesh.vertex_count()
        )));
    }
    Ok(m)
}

fn load_inputs(cfg: &RunConfig) -> Result<Vec<ModelInput>> {
    let models = require_models(cfg)?;
    models
        .iter()
        .map(|(id, path)| {
            let mesh = read_off(path)?;
            let attributes = load_attributes(cfg, id, &mesh)?;
            let ground_truth = load_ground_truth(cfg, id)?;
            Ok(ModelInput {
                id: id.clone(),
                mesh,
                attributes,
                ground_truth,
            })
        })
        .collect()
}

/// Hash of the settings a trained model depends on.
fn training_key(cfg: &RunConfig) -> Result<String> {
    let v = json!({
        "attributes": cfg.attributes,
        "forest": cfg.forest,
        "ground_truth": cfg.ground_truth,
        "labels": cfg.detection.labels,
        "folds": cfg.detection.folds,
    });
    Ok(hash_str(&serde_json::to_string(&v)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub fold: usize,
    pub test_models: Vec<String>,
    pub psi: f64,
    pub forest_file: String,
    pub forest_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub training_key: String,
    pub seed: u64,
    pub folds: Vec<FoldEntry>,
}

fn manifest_path(cfg: &RunConfig) -> PathBuf {
    dir(cfg, "models").join("manifest.json")
}

fn with_provenance(json: &str, cfg: &RunConfig) -> Result<String> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("config_hash".into(), json!(cfg.hash()?));
    }
    let mut s = serde_json::to_string(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_train(cfg: &RunConfig, _opts: &Options) -> Result<Report> {
    let inputs = load_inputs(cfg)?;
    let ids: Vec<String> = inputs.iter().map(|m| m.id.clone()).collect();
    let folds = cfg.detection.folds.resolve(&ids)?;
    let params = cfg.forest_params();
    let mut report = Report::default();
    let mut entries = Vec::new();
    for (k, test) in folds.iter().enumerate() {
        let (forest, psi) = train_fold(&inputs, test, &params, &cfg.detection.labels)?;
        let file = format!("fold{k}.json");
        let forest_hash = forest.hash()?;
        write(
            &dir(cfg, "models").join(&file),
            &with_provenance(&forest.to_json()?, cfg)?,
            &mut report,
        )?;
        log::info!("fold {k}: forest {forest_hash}");
        entries.push(FoldEntry {
            fold: k,
            test_models: test.clone(),
            psi,
            forest_file: file,
            forest_hash,
        });
    }
    let manifest = Manifest {
        config_hash: cfg.hash()?,
        training_key: training_key(cfg)?,
        seed: cfg.forest.seed,
        folds: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write(&manifest_path(cfg), &text, &mut report)?;
    Ok(report)
}

fn load_manifest(cfg: &RunConfig) -> Result<Manifest> {
    let path = manifest_path(cfg);
    if !path.exists() {
        return Err(Error::InvalidArgument(
            "no trained models, run `train` first".into(),
        ));
    }
    let m: Manifest = serde_json::from_str(&read(&path)?)?;
    if m.training_key != training_key(cfg)? {
        return Err(Error::Schema(
            "models were trained with different attribute, forest, label or fold settings; rerun `train`".into(),
        ));
    }
    Ok(m)
}

pub fn cmd_detect(cfg: &RunConfig, _opts: &Options) -> Result<Report> {
    let manifest = load_manifest(cfg)?;
    let models: BTreeMap<String, PathBuf> = require_models(cfg)?.into_iter().collect();
    let config_hash = cfg.hash()?;
    let mut report = Report::default();
    for entry in &manifest.folds {
        let forest = RandomForestModel::load(&dir(cfg, "models").join(&entry.forest_file))?;
        if forest.hash()? != entry.forest_hash {
            return Err(Error::Schema(format!(
                "{} does not match the manifest; rerun `train`",
                entry.forest_file
            )));
        }
        let nms = NmsConfig {
            c: cfg.detection.c,
            psi: entry.psi,
        };
        for id in &entry.test_models {
            let path = models.get(id).ok_or_else(|| {
                Error::InvalidArgument(format!("model {id} from the manifest has no mesh"))
            })?;
            let mesh = read_off(path)?;
            let attrs = load_attributes(cfg, id, &mesh)?;
            let result = detect(&forest, &mesh, &attrs, &nms)?;
            let header = DetectionHeader {
                c: nms.c,
                psi: nms.psi,
                seed: forest.seed,
                forest_hash: entry.forest_hash.clone(),
                config_hash: config_hash.clone(),
            };
            log::info!("{id}: {} detections", result.detections.len());
            write(
                &detection_path(cfg, id),
                &write_detections(&result, &header),
                &mut report,
            )?;
        }
    }
    Ok(report)
}

fn eval_dir(cfg: &RunConfig) -> PathBuf {
    dir(cfg, "eval")
}

pub fn cmd_eval(cfg: &RunConfig, _opts: &Options) -> Result<Report> {
    let manifest = load_manifest(cfg)?;
    let models: BTreeMap<String, PathBuf> = require_models(cfg)?.into_iter().collect();
    let cells = cfg.cells();
    let mut fold_reports = Vec::new();
    for entry in &manifest.folds {
        let mut meshes = Vec::new();
        let mut tables = Vec::new();
        let mut dets = Vec::new();
        for id in &entry.test_models {
            let path = models.get(id).ok_or_else(|| {
                Error::InvalidArgument(format!("model {id} from the manifest has no mesh"))
            })?;
            meshes.push(read_off(path)?);
            tables.push(load_ground_truth(cfg, id)?);
            let det_path = detection_path(cfg, id);
            if !det_path.exists() {
                return Err(Error::InvalidArgument(format!(
                    "{id}: no detections, run `detect` first"
                )));
            }
            let (result, header) = read_detections(&det_path)?;
            if header.forest_hash != entry.forest_hash {
                return Err(Error::Schema(format!(
                    "{}: produced by a different forest; rerun `detect`",
                    det_path.display()
                )));
            }
            dets.push(result.vertices());
        }
        let eval_models: Vec<EvalModel> = meshes
            .iter()
            .zip(&tables)
            .zip(dets)
            .map(|((mesh, gt), detections)| EvalModel {
                mesh,
                detections,
                ground_truth: gt,
            })
            .collect();
        fold_reports.push(sweep(&eval_models, &cells, &cfg.evaluation.r)?);
    }
    let report = crossval_aggregate(&fold_reports)?;
    let provenance = json!({
        "config_hash": cfg.hash()?,
        "seed": manifest.seed,
        "forest_hashes": manifest.folds.iter().map(|f| f.forest_hash.clone()).collect::<Vec<_>>(),
        "per_fold_auc": fold_reports
            .iter()
            .map(|f| f.curves.iter().map(|c| c.auc).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    let mut out = Report::default();
    write(
        &eval_dir(cfg).join("summary.json"),
        &summary_json(&report, &provenance)?,
        &mut out,
    )?;
    write_curve_csvs(cfg, &report, &mut out)?;
    Ok(out)
}

fn write_curve_csvs(cfg: &RunConfig, report: &EvalReport, out: &mut Report) -> Result<()> {
    for c in &report.curves {
        let path = eval_dir(cfg).join(format!("{}.csv", cell_name(c.sigma, c.n)));
        write(&path, &curve_csv(&report.r, c), out)?;
    }
    Ok(())
}

pub fn load_summary(cfg: &RunConfig) -> Result<EvalReport> {
    let path = eval_dir(cfg).join("summary.json");
    if !path.exists() {
        return Err(Error::InvalidArgument(
            "no evaluation summary, run `eval` first".into(),
        ));
    }
    Ok(serde_json::from_str(&read(&path)?)?)
}

/// Per-cell CSVs and one SVG chart per σ from the evaluation summary.
pub fn cmd_curves(cfg: &RunConfig, _opts: &Options) -> Result<Report> {
    let report = load_summary(cfg)?;
    let mut out = Report::default();
    write_curve_csvs(cfg, &report, &mut out)?;
    let mut sigmas: Vec<f64> = report.curves.iter().map(|c| c.sigma).collect();
    sigmas.dedup();
    for sigma in sigmas {
        let subset = EvalReport {
            r: report.r.clone(),
            curves: report
                .curves
                .iter()
                .filter(|c| c.sigma == sigma)
                .cloned()
                .collect(),
            folds: report.folds,
        };
        let title = format!("IOU vs r, sigma = {sigma}, {} fold(s)", report.folds);
        write(
            &eval_dir(cfg).join(format!("curves_s{sigma}.svg")),
            &curves_svg(&subset, &title),
            &mut out,
        )?;
    }
    Ok(out)
}
