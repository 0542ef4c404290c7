//! Curve CSV files, JSON sidecars and reports, and the density-model schema.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use prdkit_core::analysis::{MedianPoint, SummaryReport};
use prdkit_core::density::DensityModel;
use prdkit_core::extremes::ExtremeReport;
use prdkit_core::linalg::Matrix;
use prdkit_core::{CurveMeta, PrCurve, PrPoint, SplitSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// `inf` for +∞, `0` for zero, shortest round-trip decimal otherwise.
pub fn format_ext(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

pub fn parse_ext(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        t => t.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}

/// Serde adapter writing +∞ as the string `"inf"`.
pub mod ext_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::format_ext(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Ext {
            Num(f64),
            Text(String),
        }
        match Ext::deserialize(d)? {
            Ext::Num(v) => Ok(v),
            Ext::Text(t) => super::parse_ext(&t).ok_or_else(|| de::Error::custom(format!("not a number: {t}"))),
        }
    }
}

pub fn curve_to_csv(curve: &PrCurve) -> String {
    let mut out = String::from("lambda,alpha,beta\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", format_ext(p.lambda), format_ext(p.alpha), format_ext(p.beta)));
    }
    out
}

/// Parses `lambda,alpha,beta` rows; metadata comes from the sidecar, if any.
pub fn curve_from_csv(text: &str, path: &Path) -> Result<PrCurve> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(path, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["lambda", "alpha", "beta"] {
        return Err(Error::parse(
            path,
            format!("header must be 'lambda,alpha,beta', got '{}'", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, format!("line {row}: {e}")))?;
        let field = |j: usize| {
            rec.get(j)
                .and_then(parse_ext)
                .ok_or_else(|| Error::parse(path, format!("line {row}, column {}: expected a number", j + 1)))
        };
        let p = PrPoint { lambda: field(0)?, alpha: field(1)?, beta: field(2)? };
        if p.lambda < 0.0 || !(0.0..=1.0).contains(&p.alpha) || !(0.0..=1.0).contains(&p.beta) {
            return Err(Error::parse(path, format!("line {row}: need lambda >= 0 and alpha, beta in [0, 1]")));
        }
        if let Some(prev) = points.last().map(|q: &PrPoint| q.lambda) {
            if p.lambda <= prev {
                return Err(Error::parse(path, format!("line {row}: lambda values must increase")));
            }
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::parse(path, "curve has no rows"));
    }
    Ok(PrCurve::new(points, CurveMeta::default()))
}

/// `curve.csv` -> `curve.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitJson {
    pub enabled: bool,
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetaJson {
    pub method: String,
    pub k: Option<usize>,
    pub sigma: Option<f64>,
    pub split: Option<SplitJson>,
    pub seed: Option<u64>,
    pub lambdas: usize,
}

impl CurveMetaJson {
    pub fn from_curve(curve: &PrCurve) -> Self {
        let m = &curve.meta;
        CurveMetaJson {
            method: m.method.clone(),
            k: m.k,
            sigma: m.sigma,
            split: m.split.map(|s| SplitJson { enabled: s.enabled, fraction: s.fraction, seed: s.seed }),
            seed: m.seed,
            lambdas: curve.len(),
        }
    }

    pub fn to_meta(&self) -> CurveMeta {
        CurveMeta {
            method: self.method.clone(),
            k: self.k,
            sigma: self.sigma,
            split: self.split.as_ref().map(|s| SplitSpec { fraction: s.fraction, enabled: s.enabled, seed: s.seed }),
            seed: self.seed,
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes the CSV and its JSON metadata sidecar.
pub fn write_curve(curve: &PrCurve, path: &Path) -> Result<()> {
    write_text(path, &curve_to_csv(curve))?;
    write_json(&meta_path(path), &CurveMetaJson::from_curve(curve))
}

pub fn read_curve(path: &Path) -> Result<PrCurve> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut curve = curve_from_csv(&text, path)?;
    let side = meta_path(path);
    if side.exists() {
        curve.meta = read_json::<CurveMetaJson>(&side)?.to_meta();
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianJson {
    #[serde(with = "ext_f64")]
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Summary JSON: `{auc, f8, f1_8, pr_median, alpha_at_eps, beta_at_eps, alpha_inf, beta_0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryJson {
    pub auc: f64,
    pub f8: f64,
    pub f1_8: f64,
    pub b: f64,
    pub pr_median: Option<MedianJson>,
    pub alpha_at_eps: f64,
    pub beta_at_eps: f64,
    pub eps: f64,
    pub alpha_inf: f64,
    pub beta_0: f64,
}

impl From<&SummaryReport> for SummaryJson {
    fn from(r: &SummaryReport) -> Self {
        SummaryJson {
            auc: r.auc,
            f8: r.f_b,
            f1_8: r.f_inv_b,
            b: r.b,
            pr_median: r.pr_median.map(|MedianPoint { lambda, alpha, beta }| MedianJson { lambda, alpha, beta }),
            alpha_at_eps: r.alpha_at_eps,
            beta_at_eps: r.beta_at_eps,
            eps: r.eps,
            alpha_inf: r.alpha_inf,
            beta_0: r.beta_0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeParamsJson {
    pub k: usize,
    pub kprime: Option<usize>,
    pub radius: Option<f64>,
}

/// Extremes JSON: `{method, alpha_inf, beta_0, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeJson {
    pub method: String,
    pub alpha_inf: f64,
    pub beta_0: f64,
    pub params: ExtremeParamsJson,
}

impl From<&ExtremeReport> for ExtremeJson {
    fn from(r: &ExtremeReport) -> Self {
        ExtremeJson {
            method: r.method.name().into(),
            alpha_inf: r.alpha_inf,
            beta_0: r.beta_0,
            params: ExtremeParamsJson { k: r.k, kprime: r.kprime, radius: r.radius },
        }
    }
}

/// Density-model schema:
/// `{"type": "gaussian", "mean": [...], "cov": [[...]] | "identity"}` or
/// `{"type": "gmm", "weights": [...], "components": [<gaussian>, ...]}`.
pub fn model_from_json(value: &Value) -> std::result::Result<DensityModel, String> {
    let obj = value.as_object().ok_or("a density model must be a JSON object")?;
    let kind = obj.get("type").and_then(Value::as_str).ok_or("missing string field 'type'")?;
    let floats = |v: &Value, what: &str| -> std::result::Result<Vec<f64>, String> {
        v.as_array()
            .ok_or(format!("'{what}' must be an array of numbers"))?
            .iter()
            .map(|x| x.as_f64().ok_or(format!("'{what}' must be an array of numbers")))
            .collect()
    };
    match kind {
        "gaussian" => {
            let mean = floats(obj.get("mean").ok_or("gaussian needs 'mean'")?, "mean")?;
            match obj.get("cov") {
                None => DensityModel::isotropic(mean).map_err(|e| e.to_string()),
                Some(Value::String(s)) if s == "identity" => DensityModel::isotropic(mean).map_err(|e| e.to_string()),
                Some(Value::Array(rows)) => {
                    let rows = rows.iter().map(|r| floats(r, "cov")).collect::<std::result::Result<Vec<_>, _>>()?;
                    let cov = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
                    DensityModel::gaussian(mean, cov).map_err(|e| e.to_string())
                }
                Some(_) => Err("'cov' must be a matrix or \"identity\"".into()),
            }
        }
        "gmm" => {
            let weights = floats(obj.get("weights").ok_or("gmm needs 'weights'")?, "weights")?;
            let comps = obj
                .get("components")
                .and_then(Value::as_array)
                .ok_or("gmm needs a 'components' array")?
                .iter()
                .enumerate()
                .map(|(i, c)| model_from_json(c).map_err(|e| format!("component {i}: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            DensityModel::gmm(weights, comps).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown model type '{other}' (expected gaussian or gmm)")),
    }
}

pub fn model_to_json(model: &DensityModel) -> Value {
    match model {
        DensityModel::Isotropic { mean } => serde_json::json!({"type": "gaussian", "mean": mean, "cov": "identity"}),
        DensityModel::Gaussian { mean, cov, .. } => {
            let rows: Vec<&[f64]> = (0..cov.rows()).map(|i| cov.row(i)).collect();
            serde_json::json!({"type": "gaussian", "mean": mean, "cov": rows})
        }
        DensityModel::Gmm { weights, components } => serde_json::json!({
            "type": "gmm",
            "weights": weights,
            "components": components.iter().map(model_to_json).collect::<Vec<_>>(),
        }),
    }
}

pub fn read_model(path: &Path) -> Result<DensityModel> {
    let value: Value = read_json(path)?;
    model_from_json(&value).map_err(|msg| Error::parse(path, msg))
}

pub fn write_model(model: &DensityModel, path: &Path) -> Result<()> {
    write_json(path, &model_to_json(model))
}
