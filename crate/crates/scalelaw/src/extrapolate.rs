//! Fitting on one region of a measurement table and predicting another.
//!
//! The dense split is a corner split: training keeps configurations at or
//! below both cuts, targets are strictly larger in both axes, and mixed
//! configurations (one axis past its cut, the other not) are excluded from
//! both sides and only counted. Every target is a genuine extrapolation,
//! never an interpolation along one axis.

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::fit::{
    average_dense_replicates, average_prune_replicates, divergence, fit_dense, fit_prune_joint,
    mean_std, FitConfig, FitReport, FittedParams, PointKey,
};
use crate::forms::{eval_dense_envelope, eval_prune_joint, DenseMeasurement, PruneMeasurement};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationPoint {
    #[serde(flatten)]
    pub key: PointKey,
    pub actual: f64,
    /// Prediction of the winning restart.
    pub predicted_best: f64,
    pub delta_best: f64,
    /// Mean and spread of predictions across the near-optimal restart
    /// ensemble: a rough model-uncertainty band.
    pub predicted_mean: f64,
    pub predicted_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationReport {
    /// Fit on the training region only.
    pub fit: FitReport,
    pub points: Vec<ExtrapolationPoint>,
    /// Mean of `delta_best` over the target region.
    pub mu: f64,
    /// Population std of `delta_best` over the target region.
    pub sigma: f64,
    pub train_points: usize,
    pub target_points: usize,
    pub excluded_points: usize,
}

fn band(preds: &[f64]) -> (f64, f64) {
    mean_std(preds)
}

fn assemble(
    fit: FitReport,
    points: Vec<ExtrapolationPoint>,
    train_points: usize,
    excluded_points: usize,
) -> ExtrapolationReport {
    let deltas: Vec<f64> = points.iter().map(|p| p.delta_best).collect();
    let (mu, sigma) = mean_std(&deltas);
    ExtrapolationReport {
        fit,
        target_points: points.len(),
        points,
        mu,
        sigma,
        train_points,
        excluded_points,
    }
}

/// Fits on the corner `m <= m_cut && n <= n_cut` and predicts every
/// configuration strictly larger in both axes.
pub fn extrapolate_dense(
    data: &[DenseMeasurement],
    m_cut: f64,
    n_cut: f64,
    config: &FitConfig,
) -> Result<ExtrapolationReport> {
    for (name, v) in [("m_cut", m_cut), ("n_cut", n_cut)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Invalid(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    let (pts, _) = average_dense_replicates(data);
    let train: Vec<DenseMeasurement> =
        pts.iter().filter(|p| p.m <= m_cut && p.n <= n_cut).copied().collect();
    let targets: Vec<DenseMeasurement> =
        pts.iter().filter(|p| p.m > m_cut && p.n > n_cut).copied().collect();
    let excluded = pts.len() - train.len() - targets.len();
    if targets.is_empty() {
        return Err(Error::Invalid(
            "no measurements strictly larger than both cuts: nothing to predict".into(),
        ));
    }
    let fit = fit_dense(&train, config).map_err(|e| match e {
        Error::IllPosed(m) => Error::IllPosed(format!("training quadrant: {m}")),
        other => other,
    })?;
    let FittedParams::Dense(best) = &fit.params else { unreachable!() };
    let points: Vec<ExtrapolationPoint> = targets
        .iter()
        .map(|pt| {
            let predicted_best = eval_dense_envelope(best, pt.m, pt.n);
            let preds: Vec<f64> = fit
                .ensemble
                .iter()
                .map(|fp| {
                    let FittedParams::Dense(p) = fp else { unreachable!() };
                    eval_dense_envelope(p, pt.m, pt.n)
                })
                .collect();
            let (predicted_mean, predicted_std) = band(&preds);
            ExtrapolationPoint {
                key: PointKey::Dense { m: pt.m, n: pt.n },
                actual: pt.error,
                predicted_best,
                delta_best: divergence(predicted_best, pt.error),
                predicted_mean,
                predicted_std,
            }
        })
        .collect();
    let train_points = train.len();
    Ok(assemble(fit, points, train_points, excluded))
}

/// Fits the joint pruning form on the family members picked out by
/// `subset`, a predicate on (depth, width scale), and predicts every other
/// member at all of its densities. The usual experiment trains on the
/// smallest networks and predicts the larger ones. Anchors travel with the
/// rows, so a target keeps its own measured unpruned error.
///
/// When the architecture exponents are free the subset should span at least
/// two distinct depths and two distinct widths; a degenerate axis leaves the
/// matching exponent unconstrained and is flagged in the fit's warnings.
pub fn extrapolate_prune<F>(
    data: &[PruneMeasurement],
    subset: F,
    config: &FitConfig,
) -> Result<ExtrapolationReport>
where
    F: Fn(f64, f64) -> bool,
{
    let (pts, _) = average_prune_replicates(data);
    let (train, targets): (Vec<PruneMeasurement>, Vec<PruneMeasurement>) =
        pts.iter().copied().partition(|p| subset(p.l, p.w));
    if train.is_empty() {
        return Err(Error::Invalid("subset selects no training configurations".into()));
    }
    if targets.is_empty() {
        return Err(Error::Invalid(
            "subset selects every configuration: nothing to predict".into(),
        ));
    }
    let fit = fit_prune_joint(&train, config).map_err(|e| match e {
        Error::IllPosed(m) => Error::IllPosed(format!("training region: {m}")),
        other => other,
    })?;
    let FittedParams::PruneJoint(best) = &fit.params else { unreachable!() };
    let points: Vec<ExtrapolationPoint> = targets
        .iter()
        .map(|pt| {
            let predicted_best = eval_prune_joint(pt.eps_np, best, pt.l, pt.w, pt.d);
            let preds: Vec<f64> = fit
                .ensemble
                .iter()
                .map(|fp| {
                    let FittedParams::PruneJoint(p) = fp else { unreachable!() };
                    eval_prune_joint(pt.eps_np, p, pt.l, pt.w, pt.d)
                })
                .collect();
            let (predicted_mean, predicted_std) = band(&preds);
            ExtrapolationPoint {
                key: PointKey::Prune { l: pt.l, w: pt.w, d: pt.d, n: pt.n },
                actual: pt.error,
                predicted_best,
                delta_best: divergence(predicted_best, pt.error),
                predicted_mean,
                predicted_std,
            }
        })
        .collect();
    let train_points = train.len();
    Ok(assemble(fit, points, train_points, 0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SweepOutcome {
    Evaluated {
        mu: f64,
        sigma: f64,
        train_points: usize,
        target_points: usize,
        excluded_points: usize,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub m_cut: f64,
    pub n_cut: f64,
    #[serde(flatten)]
    pub outcome: SweepOutcome,
}

/// Runs [`extrapolate_dense`] for every cut pair. Infeasible corners (say,
/// a training quadrant too small to fit) become skipped cells instead of
/// failing the sweep.
pub fn extrapolation_sweep(
    data: &[DenseMeasurement],
    m_cuts: &[f64],
    n_cuts: &[f64],
    config: &FitConfig,
) -> Result<Vec<SweepCell>> {
    if m_cuts.is_empty() || n_cuts.is_empty() {
        return Err(Error::Invalid("sweep needs at least one cut on each axis".into()));
    }
    Ok(map_indexed(m_cuts.len() * n_cuts.len(), |idx| {
        let m_cut = m_cuts[idx / n_cuts.len()];
        let n_cut = n_cuts[idx % n_cuts.len()];
        let outcome = match extrapolate_dense(data, m_cut, n_cut, config) {
            Ok(rep) => SweepOutcome::Evaluated {
                mu: rep.mu,
                sigma: rep.sigma,
                train_points: rep.train_points,
                target_points: rep.target_points,
                excluded_points: rep.excluded_points,
            },
            Err(e) => SweepOutcome::Skipped { reason: e.to_string() },
        };
        SweepCell { m_cut, n_cut, outcome }
    }))
}
