//! Sample sets in, PR curves out.

use alloc::vec::Vec;

use crate::error::Result;
use crate::estimator::estimate_curve;
use crate::model::{split_samples, CurveMeta, LambdaGrid, PrCurve, SampleSet, SplitSpec};
use crate::scores::{family_label, resolve_family, score_families, Family, FamilyConfig};

/// Estimates one curve per family configuration, sharing the split and the
/// neighbor scan.
pub fn estimate_many(
    x: &SampleSet,
    y: &SampleSet,
    configs: &[FamilyConfig],
    spec: &SplitSpec,
    grid: &LambdaGrid,
) -> Result<Vec<PrCurve>> {
    let split = split_samples(x, y, spec)?;
    let n = x.len().min(y.len());
    let families = configs.iter().map(|c| resolve_family(c, &split, n)).collect::<Result<Vec<Family>>>()?;
    let scored = score_families(&split, &families)?;
    families
        .iter()
        .zip(&scored)
        .map(|(family, scores)| {
            let mut curve = estimate_curve(scores, grid)?;
            curve.meta = CurveMeta {
                method: family.method().name().into(),
                k: family.k(),
                sigma: family.sigma(),
                split: Some(*spec),
                seed: spec.enabled.then_some(spec.seed),
            };
            Ok(curve)
        })
        .collect()
}

/// Estimates a single curve.
pub fn estimate_pr(
    x: &SampleSet,
    y: &SampleSet,
    config: &FamilyConfig,
    spec: &SplitSpec,
    grid: &LambdaGrid,
) -> Result<PrCurve> {
    let mut curves = estimate_many(x, y, core::slice::from_ref(config), spec, grid)?;
    Ok(curves.pop().expect("one config in, one curve out"))
}

/// Label such as `knn(k=71)` for the family a config resolves to on `x`, `y`.
pub fn describe_family(family: &Family) -> alloc::string::String {
    family_label(family)
}
