//! Experiment suites: Gaussian shifts, the four-mode GMM, sample-size
//! variability and the hybrid PCA/Gaussian-fit settings.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use prdkit_core::analysis::{build_envelope, iou, Envelope};
use prdkit_core::density::{gt_curve, DensityModel, GtConfig, DEFAULT_N_GT};
use prdkit_core::estimator::{aggregate, pareto_clean, Aggregate, CurveEnsemble};
use prdkit_core::linalg::{fit_gaussian, fit_pca, pca_project, PcaBasis};
use prdkit_core::pipeline::estimate_many;
use prdkit_core::synthetic::{gmm_pair, shift_pair, GmmConfig, ShiftConfig, SHIFT_VALUES};
use prdkit_core::{
    make_lambda_grid, FamilyConfig, KRule, LambdaGrid, Method, PrCurve, RngStream, SampleSet, SigmaRule, SplitSpec,
};
use serde::{Deserialize, Serialize};

use crate::embeddings::read_embeddings;
use crate::error::{Context, Error, Result};
use crate::formats::{write_curve, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Shift,
    Gmm,
    Variability,
    Hybrid,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => Ok(Suite::Shift),
            "gmm" => Ok(Suite::Gmm),
            "variability" => Ok(Suite::Variability),
            "hybrid" => Ok(Suite::Hybrid),
            other => Err(Error::usage(format!("unknown suite '{other}' (shift, gmm, variability, hybrid)"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Shift => "shift",
            Suite::Gmm => "gmm",
            Suite::Variability => "variability",
            Suite::Hybrid => "hybrid",
        })
    }
}

/// A JSON value that may be a number or a keyword (`"sqrt"`, `"auto"`, `"none"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Num(f64),
    Word(String),
}

impl Setting {
    fn word(w: &str) -> Self {
        Setting::Word(w.into())
    }

    fn text(&self) -> String {
        match self {
            Setting::Num(v) => format!("{v}"),
            Setting::Word(w) => w.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HybridSetting {
    /// Reference vs each truncated file.
    A,
    /// Each file against itself.
    B,
    /// `½G_shared + ½G_p` vs `½G_shared + ½G_q`.
    C,
}

impl FromStr for HybridSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(HybridSetting::A),
            "b" => Ok(HybridSetting::B),
            "c" => Ok(HybridSetting::C),
            other => Err(Error::usage(format!("unknown hybrid setting '{other}' (a, b or c)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub setting: HybridSetting,
    /// Embeddings defining the PCA basis (and `P` in setting a).
    pub reference: PathBuf,
    /// One embedding file per truncation level.
    pub files: Vec<PathBuf>,
    pub dims: Vec<usize>,
    /// Setting c: indices into `files` of the shared, P-only and Q-only modes.
    #[serde(default = "default_mixture")]
    pub mixture: [usize; 3],
}

fn default_mixture() -> [usize; 3] {
    [0, 1, 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodSpec {
    Name(String),
    Custom(MethodOverride),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodOverride {
    pub method: String,
    /// Row label; defaults to the method name.
    pub label: Option<String>,
    pub k: Option<Setting>,
    pub sigma: Option<Setting>,
    pub split: Option<Setting>,
}

/// A method with resolved hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub family: FamilyConfig,
    pub split: Option<f64>,
    pub k: String,
}

impl MethodSpec {
    fn resolve(&self, cfg: &ExperimentConfig) -> Result<Variant> {
        let (name, label, k, sigma, split) = match self {
            MethodSpec::Name(n) => (n, None, &cfg.k, &cfg.sigma, &cfg.split),
            MethodSpec::Custom(o) => (
                &o.method,
                o.label.clone(),
                o.k.as_ref().unwrap_or(&cfg.k),
                o.sigma.as_ref().unwrap_or(&cfg.sigma),
                o.split.as_ref().unwrap_or(&cfg.split),
            ),
        };
        let method: Method = name.parse().map_err(|e: prdkit_core::Error| Error::usage(e.to_string()))?;
        Ok(Variant {
            label: label.unwrap_or_else(|| method.name().into()),
            family: FamilyConfig { method, k: parse_k(k)?, sigma: parse_sigma(sigma)? },
            split: parse_split(split)?,
            k: k.text(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    /// Method names, or objects overriding `k`, `sigma` and `split` for one method.
    pub methods: Vec<MethodSpec>,
    /// Training fraction or `"none"`.
    pub split: Setting,
    pub k: Setting,
    pub sigma: Setting,
    /// Defaults: 10 for shift and gmm, 100 for variability, 1 for hybrid.
    pub repetitions: Option<usize>,
    pub seed: u64,
    /// Samples per distribution.
    pub n: usize,
    pub d: usize,
    pub lambdas: usize,
    pub n_gt: usize,
    pub shifts: Vec<f64>,
    pub gmm_preset: String,
    /// Variability suite: sample sizes and the shift.
    pub sizes: Vec<usize>,
    pub mu: f64,
    pub hybrid: Option<HybridConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            suite: Suite::Shift,
            methods: ["knn", "kde", "ipr", "cov"].map(|m| MethodSpec::Name(m.into())).to_vec(),
            split: Setting::Num(0.5),
            k: Setting::word("sqrt"),
            sigma: Setting::word("auto"),
            repetitions: None,
            seed: 0,
            n: 10_000,
            d: 64,
            lambdas: 101,
            n_gt: DEFAULT_N_GT,
            shifts: SHIFT_VALUES.to_vec(),
            gmm_preset: "main".into(),
            sizes: vec![10, 100, 1000, 10_000],
            mu: 0.21,
            hybrid: None,
        }
    }
}

impl ExperimentConfig {
    pub fn for_suite(suite: Suite) -> Self {
        ExperimentConfig { suite, ..Default::default() }
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions.unwrap_or(match self.suite {
            Suite::Shift | Suite::Gmm => 10,
            Suite::Variability => 100,
            Suite::Hybrid => 1,
        })
    }

    /// Methods with their effective hyperparameters.
    pub fn variants(&self) -> Result<Vec<Variant>> {
        if self.methods.is_empty() {
            return Err(Error::usage("at least one method is required"));
        }
        let variants = self.methods.iter().map(|m| m.resolve(self)).collect::<Result<Vec<_>>>()?;
        for (i, v) in variants.iter().enumerate() {
            if variants[..i].iter().any(|w| w.label == v.label) {
                return Err(Error::usage(format!("method label '{}' appears twice", v.label)));
            }
        }
        Ok(variants)
    }

    /// Checks every field before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.variants()?;
        if self.repetitions() == 0 {
            return Err(Error::usage("repetitions must be at least 1"));
        }
        if self.lambdas == 0 {
            return Err(Error::usage("lambdas must be at least 1"));
        }
        if self.n_gt < 2 {
            return Err(Error::usage("n_gt must be at least 2"));
        }
        if self.n < 2 || self.d == 0 {
            return Err(Error::usage("need n >= 2 and d >= 1"));
        }
        match self.suite {
            Suite::Shift if self.shifts.is_empty() => return Err(Error::usage("shift suite needs at least one shift")),
            Suite::Variability if self.sizes.iter().any(|n| *n < 2) || self.sizes.is_empty() => {
                return Err(Error::usage("variability sizes must be at least 2"))
            }
            Suite::Gmm => {
                GmmConfig::preset(&self.gmm_preset, self.d).map_err(|e| Error::usage(e.to_string()))?;
            }
            Suite::Hybrid => {
                let h = self.hybrid.as_ref().ok_or_else(|| Error::usage("hybrid suite needs a 'hybrid' section"))?;
                if h.files.is_empty() || h.dims.is_empty() || h.dims.contains(&0) {
                    return Err(Error::usage("hybrid needs at least one file and positive dimensions"));
                }
                for f in std::iter::once(&h.reference).chain(&h.files) {
                    if !f.exists() {
                        return Err(Error::usage(format!("hybrid input {} does not exist", f.display())));
                    }
                }
                if h.setting == HybridSetting::C && h.mixture.iter().any(|i| *i >= h.files.len()) {
                    return Err(Error::usage("setting c needs mixture indices into 'files'"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<LambdaGrid> {
        make_lambda_grid(self.lambdas).context("lambda grid")
    }
}

pub fn parse_k(s: &Setting) -> Result<KRule> {
    match s {
        Setting::Num(v) if *v >= 1.0 && v.fract() == 0.0 => Ok(KRule::Fixed(*v as usize)),
        Setting::Word(w) => w.parse().map_err(|e: prdkit_core::Error| Error::usage(e.to_string())),
        other => Err(Error::usage(format!("k must be a positive integer or 'sqrt', got {}", other.text()))),
    }
}

pub fn parse_sigma(s: &Setting) -> Result<SigmaRule> {
    match s {
        Setting::Num(v) if *v > 0.0 && v.is_finite() => Ok(SigmaRule::Fixed(*v)),
        Setting::Word(w) => w.parse().map_err(|e: prdkit_core::Error| Error::usage(e.to_string())),
        other => Err(Error::usage(format!("sigma must be a positive real or 'auto', got {}", other.text()))),
    }
}

pub fn parse_split(s: &Setting) -> Result<Option<f64>> {
    let v = match s {
        Setting::Word(w) if w.eq_ignore_ascii_case("none") => return Ok(None),
        Setting::Word(w) => {
            w.parse::<f64>().map_err(|_| Error::usage(format!("split must be a fraction or 'none', got '{w}'")))?
        }
        Setting::Num(v) => *v,
    };
    if v > 0.0 && v < 1.0 {
        Ok(Some(v))
    } else {
        Err(Error::usage(format!("split fraction must lie strictly between 0 and 1, got {v}")))
    }
}

/// One row of the IoU table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IouRow {
    /// Shift, dimension or sample size, e.g. `mu=0.12` or `d=16`.
    pub setting: String,
    pub method: String,
    pub split: String,
    pub k: String,
    pub mean: f64,
    pub std: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IouTable {
    pub rows: Vec<IouRow>,
}

impl IouTable {
    pub fn get(&self, setting: &str, method: &str) -> Option<&IouRow> {
        self.rows.iter().find(|r| r.setting == setting && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting,method,split,k,mean_iou,std_iou,reps\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{}\n",
                r.setting, r.method, r.split, r.k, r.mean, r.std, r.reps
            ));
        }
        out
    }
}

/// Repetitions of one method in one setting.
#[derive(Debug, Clone)]
pub struct CellCurves {
    pub setting: String,
    pub method: String,
    pub ious: Vec<f64>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub suite: Suite,
    pub table: IouTable,
    pub cells: Vec<CellCurves>,
    /// Ground-truth curve per setting.
    pub ground_truth: Vec<(String, PrCurve)>,
}

impl RunOutput {
    pub fn cell(&self, setting: &str, method: &str) -> Option<&CellCurves> {
        self.cells.iter().find(|c| c.setting == setting && c.method == method)
    }
}

/// Population mean and standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

pub fn envelope_of(curve: &PrCurve) -> Result<Envelope> {
    build_envelope(&pareto_clean(curve)).context("envelope")
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    variants: Vec<Variant>,
    grid: LambdaGrid,
}

fn split_text(split: Option<f64>) -> String {
    split.map_or_else(|| "none".into(), |f| format!("{f}"))
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Runner { cfg, variants: cfg.variants()?, grid: cfg.grid()? })
    }

    /// `reps` draws of `n` points from each model, every method scored on
    /// the same draws; IoU against `gt`.
    fn cell(
        &self,
        setting: &str,
        p: &DensityModel,
        q: &DensityModel,
        n: usize,
        gt: &Envelope,
        stream: &RngStream,
    ) -> Result<Vec<CellCurves>> {
        let reps = self.cfg.repetitions();
        let count = self.variants.len();
        let mut curves: Vec<Vec<PrCurve>> = vec![Vec::with_capacity(reps); count];
        let mut ious: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); count];
        let mut splits: Vec<Option<f64>> = Vec::new();
        for v in &self.variants {
            if !splits.contains(&v.split) {
                splits.push(v.split);
            }
        }
        for r in 0..reps {
            let s = stream.child(r as u64);
            let x = p.sample(n, &s.child(1)).context(setting)?.with_label("P");
            let y = q.sample(n, &s.child(2)).context(setting)?.with_label("Q");
            for split in &splits {
                let spec = match split {
                    Some(f) => SplitSpec::new(*f, s.child(3).derive_seed()),
                    None => SplitSpec::disabled(),
                };
                let members: Vec<usize> = (0..count).filter(|i| self.variants[*i].split == *split).collect();
                let families: Vec<FamilyConfig> = members.iter().map(|i| self.variants[*i].family).collect();
                let est = estimate_many(&x, &y, &families, &spec, &self.grid).context(setting)?;
                for (i, c) in members.into_iter().zip(est) {
                    ious[i].push(iou(&envelope_of(&c)?, gt).context(setting)?);
                    curves[i].push(c);
                }
            }
        }
        self.variants
            .iter()
            .zip(curves.into_iter().zip(ious))
            .map(|(v, (cs, iu))| {
                let aggregate = aggregate(&CurveEnsemble::new(cs)?)?;
                Ok(CellCurves { setting: setting.into(), method: v.label.clone(), ious: iu, aggregate })
            })
            .collect()
    }

    fn row(&self, cell: &CellCurves) -> IouRow {
        let v = self.variants.iter().find(|v| v.label == cell.method).expect("cell of a known variant");
        let (mean, std) = mean_std(&cell.ious);
        IouRow {
            setting: cell.setting.clone(),
            method: cell.method.clone(),
            split: split_text(v.split),
            k: v.k.clone(),
            mean,
            std,
            reps: cell.ious.len(),
        }
    }

    fn ground_truth(&self, p: &DensityModel, q: &DensityModel, index: u64) -> Result<PrCurve> {
        let seed = RngStream::new(self.cfg.seed, 0x6774_0000 + index).derive_seed();
        gt_curve(p, q, &GtConfig::new(self.grid.clone(), seed).with_n_gt(self.cfg.n_gt)).context("ground truth")
    }

    fn finish(&self, cells: Vec<CellCurves>, ground_truth: Vec<(String, PrCurve)>) -> RunOutput {
        let rows = cells.iter().map(|c| self.row(c)).collect();
        RunOutput { suite: self.cfg.suite, table: IouTable { rows }, cells, ground_truth }
    }

    fn pairwise(&self, settings: Vec<(String, DensityModel, DensityModel, usize)>) -> Result<RunOutput> {
        let mut cells = Vec::new();
        let mut gts = Vec::new();
        for (i, (label, p, q, n)) in settings.into_iter().enumerate() {
            let gt = self.ground_truth(&p, &q, i as u64)?;
            let env = envelope_of(&gt)?;
            cells.extend(self.cell(&label, &p, &q, n, &env, &RngStream::new(self.cfg.seed, 1 + i as u64))?);
            gts.push((label, gt));
        }
        Ok(self.finish(cells, gts))
    }
}

pub fn run_shift(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let runner = Runner::new(cfg)?;
    let settings = cfg
        .shifts
        .iter()
        .map(|&mu| {
            let (p, q) = shift_pair(&ShiftConfig::new(cfg.d, mu, cfg.n)).context("shift pair")?;
            Ok((format!("mu={mu}"), p, q, cfg.n))
        })
        .collect::<Result<Vec<_>>>()?;
    runner.pairwise(settings)
}

pub fn run_gmm(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let runner = Runner::new(cfg)?;
    let mut g = GmmConfig::preset(&cfg.gmm_preset, cfg.d).map_err(|e| Error::usage(e.to_string()))?;
    g.n = cfg.n;
    let (p, q) = gmm_pair(&g).context("gmm pair")?;
    runner.pairwise(vec![(format!("gmm={}", cfg.gmm_preset), p, q, cfg.n)])
}

pub fn run_variability(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let runner = Runner::new(cfg)?;
    let (p, q) = shift_pair(&ShiftConfig::new(cfg.d, cfg.mu, cfg.n)).context("shift pair")?;
    let gt = runner.ground_truth(&p, &q, 0)?;
    let env = envelope_of(&gt)?;
    let mut cells = Vec::new();
    for (i, &n) in cfg.sizes.iter().enumerate() {
        cells.extend(runner.cell(&format!("n={n}"), &p, &q, n, &env, &RngStream::new(cfg.seed, 1 + i as u64))?);
    }
    Ok(runner.finish(cells, vec![(format!("mu={}", cfg.mu), gt)]))
}

fn fitted(basis: &PcaBasis, s: &SampleSet, d: usize) -> Result<DensityModel> {
    let proj = pca_project(basis, s, d).context(s.label())?;
    let (mean, cov) = fit_gaussian(&proj).context(s.label())?;
    DensityModel::gaussian(mean, cov).context(s.label())
}

pub fn run_hybrid(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let runner = Runner::new(cfg)?;
    let h = cfg.hybrid.as_ref().expect("validated");
    let reference = read_embeddings(&h.reference, None)?;
    let files = h.files.iter().map(|f| read_embeddings(f, None)).collect::<Result<Vec<_>>>()?;
    if let Some(bad) = files.iter().find(|f| f.dim() != reference.dim()) {
        return Err(Error::usage(format!(
            "{} has dimension {}, reference has {}",
            bad.label(),
            bad.dim(),
            reference.dim()
        )));
    }
    if let Some(d) = h.dims.iter().find(|d| **d > reference.dim()) {
        return Err(Error::usage(format!("dimension {d} exceeds the embedding dimension {}", reference.dim())));
    }
    let basis = fit_pca(&reference).context("reference PCA")?;
    let mut cells: Vec<CellCurves> = Vec::new();
    let mut averages: Vec<IouRow> = Vec::new();
    let mut gts = Vec::new();
    let mut index = 0u64;
    for &d in &h.dims {
        let pairs: Vec<(String, DensityModel, DensityModel)> = match h.setting {
            HybridSetting::A => {
                let p = fitted(&basis, &reference, d)?;
                files
                    .iter()
                    .map(|f| Ok((f.label().to_string(), p.clone(), fitted(&basis, f, d)?)))
                    .collect::<Result<_>>()?
            }
            HybridSetting::B => files
                .iter()
                .map(|f| {
                    let g = fitted(&basis, f, d)?;
                    Ok((f.label().to_string(), g.clone(), g))
                })
                .collect::<Result<_>>()?,
            HybridSetting::C => {
                let [shared, po, qo] = h.mixture.map(|i| fitted(&basis, &files[i], d));
                let shared = shared?;
                let p = DensityModel::gmm(vec![0.5, 0.5], vec![shared.clone(), po?]).context("mixture")?;
                let q = DensityModel::gmm(vec![0.5, 0.5], vec![shared, qo?]).context("mixture")?;
                vec![("mixture".to_string(), p, q)]
            }
        };
        let mut per_method: Vec<Vec<f64>> = vec![Vec::new(); runner.variants.len()];
        for (label, p, q) in pairs {
            let setting = format!("d={d}/{label}");
            let gt = runner.ground_truth(&p, &q, index)?;
            let env = envelope_of(&gt)?;
            let got = runner.cell(&setting, &p, &q, cfg.n, &env, &RngStream::new(cfg.seed, 1 + index))?;
            for (acc, c) in per_method.iter_mut().zip(&got) {
                acc.extend(&c.ious);
            }
            cells.extend(got);
            gts.push((setting, gt));
            index += 1;
        }
        for (v, ious) in runner.variants.iter().zip(per_method) {
            let (mean, std) = mean_std(&ious);
            averages.push(IouRow {
                setting: format!("d={d}"),
                method: v.label.clone(),
                split: split_text(v.split),
                k: v.k.clone(),
                mean,
                std,
                reps: ious.len(),
            });
        }
    }
    let mut out = runner.finish(cells, gts);
    out.table.rows.extend(averages);
    Ok(out)
}

pub fn run_suite(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.suite {
        Suite::Shift => run_shift(cfg),
        Suite::Gmm => run_gmm(cfg),
        Suite::Variability => run_variability(cfg),
        Suite::Hybrid => run_hybrid(cfg),
    }
}

fn file_stem(setting: &str, method: &str) -> String {
    let clean: String =
        setting.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("{clean}_{method}")
}

/// Writes `curves/*.csv`, `iou_table.csv`, `summary.json` and `config_echo.json`.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    let curves = dir.join("curves");
    fs::create_dir_all(&curves).map_err(|e| Error::io(&curves, e))?;
    for c in &out.cells {
        let stem = file_stem(&c.setting, &c.method);
        write_curve(&c.aggregate.mean, &curves.join(format!("{stem}_mean.csv")))?;
        write_curve(&c.aggregate.plus_sigma, &curves.join(format!("{stem}_plus_sigma.csv")))?;
        write_curve(&c.aggregate.minus_sigma, &curves.join(format!("{stem}_minus_sigma.csv")))?;
    }
    for (setting, gt) in &out.ground_truth {
        write_curve(gt, &curves.join(format!("{}_gt.csv", file_stem(setting, "gt").trim_end_matches("_gt"))))?;
    }
    let table_path = dir.join("iou_table.csv");
    fs::write(&table_path, out.table.to_csv()).map_err(|e| Error::io(&table_path, e))?;
    let cells: Vec<serde_json::Value> = out
        .cells
        .iter()
        .map(|c| {
            let (mean, std) = mean_std(&c.ious);
            serde_json::json!({
                "setting": c.setting,
                "method": c.method,
                "iou_mean": mean,
                "iou_std": std,
                "ious": c.ious,
                "sigma_alpha": c.aggregate.sigma_alpha,
                "sigma_beta": c.aggregate.sigma_beta,
            })
        })
        .collect();
    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({"suite": out.suite.to_string(), "table": out.table.rows, "cells": cells}),
    )?;
    write_json(&dir.join("config_echo.json"), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite) -> ExperimentConfig {
        ExperimentConfig {
            suite,
            n: 60,
            d: 2,
            n_gt: 2000,
            lambdas: 21,
            repetitions: Some(2),
            shifts: vec![0.0, 1.0],
            sizes: vec![20, 60],
            ..Default::default()
        }
    }

    #[test]
    fn config_parsing_and_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"suite":"variability","k":4,"split":"none"}"#).unwrap();
        assert_eq!(cfg.repetitions(), 100);
        assert_eq!(parse_k(&cfg.k).unwrap(), KRule::Fixed(4));
        assert_eq!(cfg.variants().unwrap()[0].split, None);
        assert_eq!(ExperimentConfig::for_suite(Suite::Shift).repetitions(), 10);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus":1}"#).is_err());
        let bad = ExperimentConfig { k: Setting::Num(0.0), ..Default::default() };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
        let bad = ExperimentConfig { split: Setting::Num(1.0), ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn shift_suite_runs_and_is_reproducible() {
        let cfg = small(Suite::Shift);
        let a = run_shift(&cfg).unwrap();
        let b = run_shift(&cfg).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.table.rows.len(), 8);
        for r in &a.table.rows {
            assert!((0.0..=1.0).contains(&r.mean) && r.std >= 0.0);
        }
        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), &cfg, &a).unwrap();
        for f in ["iou_table.csv", "summary.json", "config_echo.json", "curves/mu_0_knn_mean.csv", "curves/mu_1_gt.csv"]
        {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }

    #[test]
    fn variability_single_repetition_has_zero_spread() {
        let cfg = ExperimentConfig {
            repetitions: Some(1),
            methods: vec![MethodSpec::Name("knn".into())],
            ..small(Suite::Variability)
        };
        let out = run_variability(&cfg).unwrap();
        for c in &out.cells {
            assert!(c.aggregate.sigma_alpha.iter().all(|s| *s == 0.0));
            for p in c.aggregate.mean.points.iter().filter(|p| p.lambda > 0.0 && p.lambda.is_finite()) {
                assert!((p.beta - p.alpha / p.lambda).abs() <= 1e-12 * (p.alpha / p.lambda).max(1.0));
            }
        }
    }
}
