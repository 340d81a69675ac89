//! Divergence objective, multi-start fits, and cross-validation.
//!
//! Every fit minimizes the sum of squared relative divergences
//! `delta = (estimated - actual) / actual` over the measurement table.
//! Positive parameters are optimized as logs, so the search space is
//! unconstrained while the forms stay in their valid domain. Each restart
//! draws its starting point from per-parameter log-uniform ranges on an
//! independent child stream of the seed, which makes results independent of
//! restart execution order: the winner is the lowest objective, ties broken
//! by the lowest restart index.

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::forms::{
    eval_dense_envelope, eval_prune_joint_at_mstar, eval_prune_single, DenseMeasurement,
    DenseParams, Eps0Mode, PruneJointParams, PruneMeasurement, PruneParams,
};
use crate::optim::Minimizer;
use crate::rng::Stream;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Relative divergence of an estimate from a measurement.
pub fn divergence(estimated: f64, actual: f64) -> f64 {
    (estimated - actual) / actual
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Which joint-form exponents to omit from the fit (pinned at 0, folding the
/// corresponding axis into the knee scale). Used for partial grids where an
/// axis has a single value and its exponent is unidentifiable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentFix {
    pub phi: bool,
    pub psi: bool,
}

/// Log-uniform sampling ranges for restart initialization, in natural units.
/// `eps_up_factor` is relative: the draw is `eps_np_max * factor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitRanges {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub b: (f64, f64),
    pub c_inf: (f64, f64),
    pub eta: (f64, f64),
    pub eps0: (f64, f64),
    pub gamma: (f64, f64),
    pub eps_up_factor: (f64, f64),
    pub p: (f64, f64),
    pub p_prime: (f64, f64),
    pub phi: (f64, f64),
    pub psi: (f64, f64),
}

impl Default for InitRanges {
    fn default() -> Self {
        InitRanges {
            alpha: (0.1, 2.0),
            beta: (0.1, 2.0),
            b: (1e-4, 10.0),
            c_inf: (1e-12, 10.0),
            eta: (0.1, 100.0),
            eps0: (0.5, 20.0),
            gamma: (0.5, 4.0),
            eps_up_factor: (1.0, 10.0),
            p: (1e-4, 1e2),
            p_prime: (1e-4, 1e2),
            phi: (0.1, 4.0),
            psi: (0.1, 4.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub objective_tolerance: f64,
    /// How `eps0` is treated by dense fits.
    pub eps0_mode: Eps0Mode,
    pub fixed_exponents: ExponentFix,
    pub init_ranges: InitRanges,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            seed: 0,
            restarts: 100,
            max_iterations: 500,
            objective_tolerance: 1e-10,
            eps0_mode: Eps0Mode::FreeParameter,
            fixed_exponents: ExponentFix::default(),
            init_ranges: InitRanges::default(),
        }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        FitConfig { seed, ..Default::default() }
    }
}

/// Identity of a fitted point in reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PointKey {
    Dense { m: f64, n: f64 },
    Curve { d: f64 },
    Prune { l: f64, w: f64, d: f64, n: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDivergence {
    #[serde(flatten)]
    pub key: PointKey,
    pub actual: f64,
    pub estimated: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum FittedParams {
    Dense(DenseParams),
    /// Single-curve pruning fit; carries the data-supplied anchor.
    PruneSingle { eps_np: f64, params: PruneParams },
    PruneJoint(PruneJointParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldStats {
    pub fold: usize,
    pub points: usize,
    pub mu: f64,
    pub sigma: f64,
}

/// Cross-validation summary: per-fold held-out stats plus their spread
/// across folds (a +-1 std confidence band on mu and sigma).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub k: usize,
    pub per_fold: Vec<FoldStats>,
    pub mu_mean: f64,
    pub mu_std: f64,
    pub sigma_mean: f64,
    pub sigma_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: FittedParams,
    /// Mean divergence over `per_point`.
    pub mu: f64,
    /// Population std of divergence over `per_point`.
    pub sigma: f64,
    /// Sum of squared divergences at the reported params over the fitted
    /// table. For cross-validation reports `per_point` holds the held-out
    /// divergences instead, so this stays the full-fit objective.
    pub objective: f64,
    pub per_point: Vec<PointDivergence>,
    /// Best objective reached by each restart, in restart order.
    pub restarts_summary: Vec<f64>,
    pub best_restart: usize,
    pub converged: bool,
    /// Restarts that ended on the simplex fallback path.
    pub fallback_restarts: usize,
    pub folds: Option<CvSummary>,
    pub warnings: Vec<String>,
    /// Parameter sets of every restart whose objective landed within 5% of
    /// the winner: competing explanations of the data, used for prediction
    /// bands. Always contains the winner. Not serialized.
    #[serde(skip)]
    pub ensemble: Vec<FittedParams>,
}

impl FitReport {
    fn finish(
        params: FittedParams,
        per_point: Vec<PointDivergence>,
        sel: Selection,
        unpack: impl Fn(&[f64]) -> FittedParams,
        warnings: Vec<String>,
    ) -> FitReport {
        let deltas: Vec<f64> = per_point.iter().map(|p| p.delta).collect();
        let (mu, sigma) = mean_std(&deltas);
        let objective: f64 = deltas.iter().map(|d| d * d).sum();
        let best_obj = sel.summary[sel.best];
        let ensemble = sel
            .us
            .iter()
            .zip(&sel.summary)
            .filter(|(_, &obj)| obj.is_finite() && obj <= best_obj * 1.05 + 1e-300)
            .map(|(u, _)| unpack(u))
            .collect();
        FitReport {
            params,
            mu,
            sigma,
            objective,
            per_point,
            restarts_summary: sel.summary,
            best_restart: sel.best,
            converged: sel.converged,
            fallback_restarts: sel.fallbacks,
            folds: None,
            warnings,
            ensemble,
        }
    }
}

/// Per-configuration replicate spread, kept for measurement-noise reporting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSpread {
    #[serde(flatten)]
    pub key: PointKey,
    pub mean: f64,
    pub std: f64,
    pub replicates: usize,
}

fn group_average<T: Copy, K: Ord + Copy>(
    data: &[T],
    key_of: impl Fn(&T) -> K,
    error_of: impl Fn(&T) -> f64,
    rebuild: impl Fn(&T, f64) -> T,
    point_key: impl Fn(&T) -> PointKey,
) -> (Vec<T>, Vec<ReplicateSpread>) {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by_key(|&i| (key_of(&data[i]), i));
    let mut averaged = Vec::new();
    let mut spreads = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && key_of(&data[order[j]]) == key_of(&data[order[i]]) {
            j += 1;
        }
        let errs: Vec<f64> = order[i..j].iter().map(|&t| error_of(&data[t])).collect();
        let (mean, std) = mean_std(&errs);
        let first = order[i..j].iter().min().copied().unwrap();
        averaged.push((first, rebuild(&data[first], mean)));
        spreads.push((
            first,
            ReplicateSpread {
                key: point_key(&data[first]),
                mean,
                std,
                replicates: errs.len(),
            },
        ));
        i = j;
    }
    // restore first-appearance order
    averaged.sort_by_key(|(first, _)| *first);
    spreads.sort_by_key(|(first, _)| *first);
    (
        averaged.into_iter().map(|(_, t)| t).collect(),
        spreads.into_iter().map(|(_, s)| s).collect(),
    )
}

/// Collapses replicate rows of each (m, n) configuration to their mean error;
/// the per-configuration std is returned alongside for noise reporting.
pub fn average_dense_replicates(
    data: &[DenseMeasurement],
) -> (Vec<DenseMeasurement>, Vec<ReplicateSpread>) {
    group_average(
        data,
        |p| (p.m.to_bits(), p.n.to_bits()),
        |p| p.error,
        |p, mean| DenseMeasurement { error: mean, replicate: None, ..*p },
        |p| PointKey::Dense { m: p.m, n: p.n },
    )
}

/// Same for (l, w, d, n) pruning configurations.
pub fn average_prune_replicates(
    data: &[PruneMeasurement],
) -> (Vec<PruneMeasurement>, Vec<ReplicateSpread>) {
    group_average(
        data,
        |p| (p.l.to_bits(), p.w.to_bits(), p.d.to_bits(), p.n.to_bits()),
        |p| p.error,
        |p, mean| PruneMeasurement { error: mean, replicate: None, ..*p },
        |p| PointKey::Prune { l: p.l, w: p.w, d: p.d, n: p.n },
    )
}

/// Outcome of the multi-start loop.
struct Selection {
    /// Final parameter vector of every restart, in restart order.
    us: Vec<Vec<f64>>,
    /// Final objective of every restart, in restart order.
    summary: Vec<f64>,
    best: usize,
    converged: bool,
    fallbacks: usize,
}

impl Selection {
    fn best_u(&self) -> &[f64] {
        &self.us[self.best]
    }
}

/// Runs the multi-start loop: per-restart init from `draw(child_stream)`,
/// local minimization, deterministic winner selection.
fn multi_start<F, D>(config: &FitConfig, n_res: usize, residuals: F, draw: D) -> Result<Selection>
where
    F: Fn(&[f64], &mut [f64]) + Sync + Send,
    D: Fn(&mut Stream) -> Vec<f64> + Sync + Send,
{
    if config.restarts == 0 {
        return Err(Error::Invalid("restarts must be >= 1".into()));
    }
    let minimizer = Minimizer {
        max_iterations: config.max_iterations,
        tolerance: config.objective_tolerance,
    };
    let root = Stream::new(config.seed);
    let outcomes = map_indexed(config.restarts, |k| {
        let mut rng = root.child(k as u64);
        let u0: Vec<f64> = draw(&mut rng).iter().map(|v| v.ln()).collect();
        minimizer.minimize(n_res, &residuals, &u0)
    });
    let summary: Vec<f64> = outcomes.iter().map(|o| o.objective).collect();
    let fallbacks = outcomes.iter().filter(|o| o.used_fallback).count();
    let mut best: Option<usize> = None;
    for (k, o) in outcomes.iter().enumerate() {
        if o.objective.is_finite() && best.map_or(true, |b| o.objective < outcomes[b].objective) {
            best = Some(k);
        }
    }
    let best =
        best.ok_or_else(|| Error::IllPosed("no restart produced a finite objective".into()))?;
    let converged = outcomes[best].converged;
    Ok(Selection {
        us: outcomes.into_iter().map(|o| o.u).collect(),
        summary,
        best,
        converged,
        fallbacks,
    })
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    values.map(f64::to_bits).collect::<BTreeSet<u64>>().len()
}

fn check_positive_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::Invalid(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Fits the dense envelope to a measurement table.
///
/// Replicates are averaged first. Requires at least as many distinct (m, n)
/// configurations as free parameters (6 with free `eps0`, 5 with it fixed)
/// and at least two distinct values on each axis.
pub fn fit_dense(data: &[DenseMeasurement], config: &FitConfig) -> Result<FitReport> {
    for p in data {
        check_positive_finite("m", p.m)?;
        check_positive_finite("n", p.n)?;
        check_positive_finite("error", p.error)?;
    }
    let (pts, _) = average_dense_replicates(data);
    let eps0_fixed = match config.eps0_mode {
        Eps0Mode::FixedFromClasses { classes } => {
            if classes < 2 {
                return Err(Error::Invalid(format!("classes must be >= 2, got {classes}")));
            }
            Some((classes as f64 - 1.0) / classes as f64)
        }
        Eps0Mode::FreeParameter => None,
    };
    let needed = if eps0_fixed.is_some() { 5 } else { 6 };
    if pts.len() < needed {
        return Err(Error::IllPosed(format!(
            "dense fit needs at least {needed} distinct configurations, got {}",
            pts.len()
        )));
    }
    if distinct(pts.iter().map(|p| p.m)) < 2 || distinct(pts.iter().map(|p| p.n)) < 2 {
        return Err(Error::IllPosed(
            "dense fit needs at least two distinct values on each of the m and n axes".into(),
        ));
    }

    let unpack = |u: &[f64]| -> DenseParams {
        DenseParams {
            alpha: u[0].exp(),
            beta: u[1].exp(),
            b: u[2].exp(),
            c_inf: u[3].exp(),
            eta: u[4].exp(),
            eps0: eps0_fixed.unwrap_or_else(|| u[5].exp()),
            eps0_mode: config.eps0_mode,
        }
    };
    let residuals = |u: &[f64], out: &mut [f64]| {
        let prm = unpack(u);
        for (i, pt) in pts.iter().enumerate() {
            out[i] = divergence(eval_dense_envelope(&prm, pt.m, pt.n), pt.error);
        }
    };
    let r = config.init_ranges;
    let draw = |rng: &mut Stream| -> Vec<f64> {
        let mut v = vec![
            rng.log_uniform(r.alpha.0, r.alpha.1),
            rng.log_uniform(r.beta.0, r.beta.1),
            rng.log_uniform(r.b.0, r.b.1),
            rng.log_uniform(r.c_inf.0, r.c_inf.1),
            rng.log_uniform(r.eta.0, r.eta.1),
        ];
        if eps0_fixed.is_none() {
            v.push(rng.log_uniform(r.eps0.0, r.eps0.1));
        }
        v
    };

    let sel = multi_start(config, pts.len(), residuals, draw)?;
    let prm = unpack(sel.best_u());
    let per_point: Vec<PointDivergence> = pts
        .iter()
        .map(|pt| {
            let est = eval_dense_envelope(&prm, pt.m, pt.n);
            PointDivergence {
                key: PointKey::Dense { m: pt.m, n: pt.n },
                actual: pt.error,
                estimated: est,
                delta: divergence(est, pt.error),
            }
        })
        .collect();
    let mut warnings = Vec::new();
    if !sel.converged {
        warnings.push("best restart stopped at the iteration cap without meeting tolerance".into());
    }
    Ok(FitReport::finish(
        FittedParams::Dense(prm),
        per_point,
        sel,
        |u| FittedParams::Dense(unpack(u)),
        warnings,
    ))
}

/// Fits the single-curve pruning form to one density ladder.
/// `curve` holds (density, error) rows; repeated densities are replicate
/// measurements and are averaged.
pub fn fit_prune_single(curve: &[(f64, f64)], eps_np: f64, config: &FitConfig) -> Result<FitReport> {
    check_positive_finite("eps_np", eps_np)?;
    for &(d, e) in curve {
        if !(d > 0.0 && d <= 1.0) || !d.is_finite() {
            return Err(Error::Invalid(format!("density must lie in (0, 1], got {d}")));
        }
        check_positive_finite("error", e)?;
    }
    // average replicate rows per density
    let raw: Vec<PruneMeasurement> = curve
        .iter()
        .map(|&(d, e)| PruneMeasurement { l: 1.0, w: 1.0, d, n: 1.0, error: e, eps_np, replicate: None })
        .collect();
    let (pts, _) = average_prune_replicates(&raw);
    if pts.len() < 4 {
        return Err(Error::IllPosed(format!(
            "single-curve fit needs at least 4 distinct densities, got {}",
            pts.len()
        )));
    }

    let mut warnings = Vec::new();
    let flat = pts.iter().all(|p| (p.error / eps_np - 1.0).abs() <= 1e-9);
    if flat {
        warnings.push(
            "degenerate fit: curve is flat at eps_np, the transition parameters are unidentifiable"
                .into(),
        );
    }

    let unpack = |u: &[f64]| PruneParams { eps_up: u[0].exp(), gamma: u[1].exp(), p: u[2].exp() };
    let residuals = |u: &[f64], out: &mut [f64]| {
        let prm = unpack(u);
        for (i, pt) in pts.iter().enumerate() {
            out[i] = divergence(eval_prune_single(eps_np, &prm, pt.d), pt.error);
        }
    };
    let r = config.init_ranges;
    let draw = |rng: &mut Stream| -> Vec<f64> {
        vec![
            eps_np * rng.log_uniform(r.eps_up_factor.0, r.eps_up_factor.1),
            rng.log_uniform(r.gamma.0, r.gamma.1),
            rng.log_uniform(r.p.0, r.p.1),
        ]
    };

    let sel = multi_start(config, pts.len(), residuals, draw)?;
    let prm = unpack(sel.best_u());
    let per_point: Vec<PointDivergence> = pts
        .iter()
        .map(|pt| {
            let est = eval_prune_single(eps_np, &prm, pt.d);
            PointDivergence {
                key: PointKey::Curve { d: pt.d },
                actual: pt.error,
                estimated: est,
                delta: divergence(est, pt.error),
            }
        })
        .collect();
    if !sel.converged {
        warnings.push("best restart stopped at the iteration cap without meeting tolerance".into());
    }
    Ok(FitReport::finish(
        FittedParams::PruneSingle { eps_np, params: prm },
        per_point,
        sel,
        |u| FittedParams::PruneSingle { eps_np, params: unpack(u) },
        warnings,
    ))
}

/// Grouped view of a pruning table: one entry per (l, w, n) configuration.
struct JointData {
    pts: Vec<PruneMeasurement>,
    /// (start, end) index ranges of each curve in `pts`, plus its anchor.
    curves: Vec<(usize, usize, f64)>,
    eps_np_max: f64,
}

fn group_joint(data: &[PruneMeasurement]) -> Result<JointData> {
    for p in data {
        check_positive_finite("l", p.l)?;
        check_positive_finite("w", p.w)?;
        check_positive_finite("n", p.n)?;
        check_positive_finite("error", p.error)?;
        check_positive_finite("eps_np", p.eps_np)?;
        if !(p.d > 0.0 && p.d <= 1.0) {
            return Err(Error::Invalid(format!("density must lie in (0, 1], got {}", p.d)));
        }
    }
    let (mut pts, _) = average_prune_replicates(data);
    // curve-major layout so the hot loop computes per-curve quantities once
    pts.sort_by(|a, b| {
        (a.l.to_bits(), a.w.to_bits(), a.n.to_bits())
            .cmp(&(b.l.to_bits(), b.w.to_bits(), b.n.to_bits()))
            .then(b.d.total_cmp(&a.d))
    });
    let mut curves = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let key = (pts[i].l.to_bits(), pts[i].w.to_bits(), pts[i].n.to_bits());
        let mut j = i;
        let anchor = pts[i].eps_np;
        while j < pts.len() && (pts[j].l.to_bits(), pts[j].w.to_bits(), pts[j].n.to_bits()) == key {
            if pts[j].eps_np != anchor {
                return Err(Error::Invalid(format!(
                    "inconsistent eps_np within configuration (l {}, w {}, n {})",
                    pts[i].l, pts[i].w, pts[i].n
                )));
            }
            j += 1;
        }
        curves.push((i, j, anchor));
        i = j;
    }
    let eps_np_max = curves.iter().map(|c| c.2).fold(f64::MIN, f64::max);
    Ok(JointData { pts, curves, eps_np_max })
}

/// Fits the joint pruning form across (depth, width, density, data)
/// configurations. Omitted exponents (see [`ExponentFix`]) are pinned at 0,
/// which folds the constant axis into the knee scale `p_prime`.
pub fn fit_prune_joint(data: &[PruneMeasurement], config: &FitConfig) -> Result<FitReport> {
    let jd = group_joint(data)?;
    let fix = config.fixed_exponents;
    let n_free = 3 + usize::from(!fix.phi) + usize::from(!fix.psi);
    if jd.pts.len() < n_free {
        return Err(Error::IllPosed(format!(
            "joint fit needs at least {n_free} distinct points, got {}",
            jd.pts.len()
        )));
    }

    let mut warnings = Vec::new();
    if distinct(jd.pts.iter().map(|p| p.l)) < 2 && !fix.phi {
        warnings.push(
            "depth axis has a single distinct value but phi is being fitted; consider omitting phi"
                .into(),
        );
    }
    if distinct(jd.pts.iter().map(|p| p.w)) < 2 && !fix.psi {
        warnings.push(
            "width axis has a single distinct value but psi is being fitted; consider omitting psi"
                .into(),
        );
    }

    let unpack = |u: &[f64]| -> PruneJointParams {
        let mut it = u.iter();
        let eps_up = it.next().unwrap().exp();
        let gamma = it.next().unwrap().exp();
        let p_prime = it.next().unwrap().exp();
        let phi = if fix.phi { 0.0 } else { it.next().unwrap().exp() };
        let psi = if fix.psi { 0.0 } else { it.next().unwrap().exp() };
        PruneJointParams { eps_up, gamma, p_prime, phi, psi }
    };
    let pts = &jd.pts;
    let curves = &jd.curves;
    let residuals = |u: &[f64], out: &mut [f64]| {
        let prm = unpack(u);
        for &(start, end, eps_np) in curves {
            let scale = pts[start].l.powf(prm.phi) * pts[start].w.powf(prm.psi);
            for (i, pt) in pts[start..end].iter().enumerate() {
                let est = eval_prune_joint_at_mstar(eps_np, &prm, scale * pt.d);
                out[start + i] = divergence(est, pt.error);
            }
        }
    };
    let r = config.init_ranges;
    let eps_np_max = jd.eps_np_max;
    let draw = |rng: &mut Stream| -> Vec<f64> {
        let mut v = vec![
            eps_np_max * rng.log_uniform(r.eps_up_factor.0, r.eps_up_factor.1),
            rng.log_uniform(r.gamma.0, r.gamma.1),
            rng.log_uniform(r.p_prime.0, r.p_prime.1),
        ];
        if !fix.phi {
            v.push(rng.log_uniform(r.phi.0, r.phi.1));
        }
        if !fix.psi {
            v.push(rng.log_uniform(r.psi.0, r.psi.1));
        }
        v
    };

    let sel = multi_start(config, pts.len(), residuals, draw)?;
    let prm = unpack(sel.best_u());
    let per_point: Vec<PointDivergence> = curves
        .iter()
        .flat_map(|&(start, end, eps_np)| {
            let scale = pts[start].l.powf(prm.phi) * pts[start].w.powf(prm.psi);
            pts[start..end].iter().map(move |pt| {
                let est = eval_prune_joint_at_mstar(eps_np, &prm, scale * pt.d);
                PointDivergence {
                    key: PointKey::Prune { l: pt.l, w: pt.w, d: pt.d, n: pt.n },
                    actual: pt.error,
                    estimated: est,
                    delta: divergence(est, pt.error),
                }
            })
        })
        .collect();
    if !sel.converged {
        warnings.push("best restart stopped at the iteration cap without meeting tolerance".into());
    }
    Ok(FitReport::finish(
        FittedParams::PruneJoint(prm),
        per_point,
        sel,
        |u| FittedParams::PruneJoint(unpack(u)),
        warnings,
    ))
}

/// The two table shapes cross-validation can run on.
pub enum CvData<'a> {
    Dense(&'a [DenseMeasurement]),
    PruneJoint(&'a [PruneMeasurement]),
}

/// K-fold cross-validation at configuration level.
///
/// Configurations (replicates pre-merged) are shuffled by a seeded
/// permutation and dealt round-robin into `k` folds. Every fold is predicted
/// by a model fitted on the other folds, so each configuration is held out
/// exactly once; the report's `mu`/`sigma` pool those held-out divergences,
/// `folds` carries the per-fold stats, and `params` come from a final fit on
/// all data.
pub fn cross_validate(data: CvData<'_>, k: usize, config: &FitConfig) -> Result<FitReport> {
    if k < 2 {
        return Err(Error::Invalid(format!("cross-validation needs k >= 2, got {k}")));
    }
    let n_cfg = match &data {
        CvData::Dense(d) => average_dense_replicates(d).0.len(),
        CvData::PruneJoint(d) => average_prune_replicates(d).0.len(),
    };
    if n_cfg < k {
        return Err(Error::IllPosed(format!(
            "cross-validation needs at least k = {k} configurations, got {n_cfg}"
        )));
    }
    let mut shuffle = Stream::new(config.seed).child(0xF01D);
    let perm = shuffle.permutation(n_cfg);
    let fold_of: Vec<usize> = {
        let mut f = vec![0usize; n_cfg];
        for (pos, &cfg) in perm.iter().enumerate() {
            f[cfg] = pos % k;
        }
        f
    };

    match data {
        CvData::Dense(raw) => {
            let (pts, _) = average_dense_replicates(raw);
            let mut held_out: Vec<Vec<PointDivergence>> = Vec::with_capacity(k);
            for fold in 0..k {
                let train: Vec<DenseMeasurement> = pts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| fold_of[*i] != fold)
                    .map(|(_, p)| *p)
                    .collect();
                let test: Vec<DenseMeasurement> = pts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| fold_of[*i] == fold)
                    .map(|(_, p)| *p)
                    .collect();
                let rep = fit_dense(&train, config).map_err(|e| {
                    Error::IllPosed(format!("training fold {fold} violates fit preconditions: {e}"))
                })?;
                let FittedParams::Dense(prm) = &rep.params else { unreachable!() };
                held_out.push(
                    test.iter()
                        .map(|pt| {
                            let est = eval_dense_envelope(prm, pt.m, pt.n);
                            PointDivergence {
                                key: PointKey::Dense { m: pt.m, n: pt.n },
                                actual: pt.error,
                                estimated: est,
                                delta: divergence(est, pt.error),
                            }
                        })
                        .collect(),
                );
            }
            let full = fit_dense(raw, config)?;
            Ok(assemble_cv(full, held_out, k))
        }
        CvData::PruneJoint(raw) => {
            let (pts, _) = average_prune_replicates(raw);
            let mut held_out: Vec<Vec<PointDivergence>> = Vec::with_capacity(k);
            for fold in 0..k {
                let train: Vec<PruneMeasurement> = pts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| fold_of[*i] != fold)
                    .map(|(_, p)| *p)
                    .collect();
                let test: Vec<PruneMeasurement> = pts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| fold_of[*i] == fold)
                    .map(|(_, p)| *p)
                    .collect();
                let rep = fit_prune_joint(&train, config).map_err(|e| {
                    Error::IllPosed(format!("training fold {fold} violates fit preconditions: {e}"))
                })?;
                let FittedParams::PruneJoint(prm) = &rep.params else { unreachable!() };
                held_out.push(
                    test.iter()
                        .map(|pt| {
                            let est = crate::forms::eval_prune_joint(pt.eps_np, prm, pt.l, pt.w, pt.d);
                            PointDivergence {
                                key: PointKey::Prune { l: pt.l, w: pt.w, d: pt.d, n: pt.n },
                                actual: pt.error,
                                estimated: est,
                                delta: divergence(est, pt.error),
                            }
                        })
                        .collect(),
                );
            }
            let full = fit_prune_joint(raw, config)?;
            Ok(assemble_cv(full, held_out, k))
        }
    }
}

fn assemble_cv(full: FitReport, held_out: Vec<Vec<PointDivergence>>, k: usize) -> FitReport {
    let per_fold: Vec<FoldStats> = held_out
        .iter()
        .enumerate()
        .map(|(fold, pts)| {
            let deltas: Vec<f64> = pts.iter().map(|p| p.delta).collect();
            let (mu, sigma) = mean_std(&deltas);
            FoldStats { fold, points: pts.len(), mu, sigma }
        })
        .collect();
    let (mu_mean, mu_std) = mean_std(&per_fold.iter().map(|f| f.mu).collect::<Vec<_>>());
    let (sigma_mean, sigma_std) = mean_std(&per_fold.iter().map(|f| f.sigma).collect::<Vec<_>>());
    let pooled: Vec<PointDivergence> = held_out.into_iter().flatten().collect();
    let deltas: Vec<f64> = pooled.iter().map(|p| p.delta).collect();
    let (mu, sigma) = mean_std(&deltas);
    FitReport {
        mu,
        sigma,
        per_point: pooled,
        folds: Some(CvSummary { k, per_fold, mu_mean, mu_std, sigma_mean, sigma_std }),
        ..full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::eval_prune_joint;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn divergence_sign_convention() {
        assert!((divergence(1.2, 1.0) - 0.2).abs() < 1e-15);
        assert!((divergence(0.08, 0.1) + 0.2).abs() < 1e-12);
        assert_eq!(divergence(0.5, 0.5), 0.0);
    }

    #[test]
    fn replicate_averaging_collapses_and_reports_spread() {
        let rows = vec![
            DenseMeasurement { m: 1.0, n: 1.0, error: 0.10, replicate: Some(0) },
            DenseMeasurement { m: 1.0, n: 1.0, error: 0.12, replicate: Some(1) },
            DenseMeasurement { m: 1.0, n: 1.0, error: 0.14, replicate: Some(2) },
            DenseMeasurement { m: 0.5, n: 1.0, error: 0.2, replicate: None },
        ];
        let (avg, spread) = average_dense_replicates(&rows);
        assert_eq!(avg.len(), 2);
        assert!(rel(avg[0].error, 0.12) < 1e-12);
        assert_eq!(avg[1].error, 0.2);
        assert_eq!(spread[0].replicates, 3);
        assert!(spread[0].std > 0.0);
        assert_eq!(spread[1].replicates, 1);
        assert_eq!(spread[1].std, 0.0);
    }

    fn dense_grid(prm: &DenseParams, ms: &[f64], ns: &[f64]) -> Vec<DenseMeasurement> {
        let mut v = Vec::new();
        for &m in ms {
            for &n in ns {
                v.push(DenseMeasurement { m, n, error: eval_dense_envelope(prm, m, n), replicate: None });
            }
        }
        v
    }

    #[test]
    fn dense_noiseless_recovery() {
        let truth =
            DenseParams::with_free_eps0(0.7, 0.5, 0.15, 0.7, 7.0, 1.0).unwrap();
        let ms: Vec<f64> = (0..6).map(|k| 0.25_f64.powi(k)).collect();
        let ns: Vec<f64> = (0..6).map(|k| 0.5_f64.powi(k)).collect();
        let data = dense_grid(&truth, &ms, &ns);
        let config = FitConfig { restarts: 40, ..FitConfig::with_seed(7) };
        let rep = fit_dense(&data, &config).unwrap();
        let FittedParams::Dense(got) = &rep.params else { panic!() };
        assert!(rep.objective < 1e-14, "objective {}", rep.objective);
        for (name, g, t) in [
            ("alpha", got.alpha, truth.alpha),
            ("beta", got.beta, truth.beta),
            ("b", got.b, truth.b),
            ("c_inf", got.c_inf, truth.c_inf),
            ("eta", got.eta, truth.eta),
            ("eps0", got.eps0, truth.eps0),
        ] {
            assert!(rel(g, t) < 1e-3, "{name}: got {g}, want {t}");
        }
    }

    #[test]
    fn dense_fixed_eps0_recovery() {
        let truth = DenseParams::with_classes(0.8, 0.6, 0.2, 0.5, 10.0, 100).unwrap();
        let ms: Vec<f64> = (0..5).map(|k| 0.25_f64.powi(k)).collect();
        let ns: Vec<f64> = (0..5).map(|k| 0.5_f64.powi(k)).collect();
        let data = dense_grid(&truth, &ms, &ns);
        let config = FitConfig {
            restarts: 30,
            eps0_mode: Eps0Mode::FixedFromClasses { classes: 100 },
            ..FitConfig::with_seed(3)
        };
        let rep = fit_dense(&data, &config).unwrap();
        let FittedParams::Dense(got) = &rep.params else { panic!() };
        assert_eq!(got.eps0, 0.99);
        assert!(rel(got.alpha, truth.alpha) < 1e-3);
        assert!(rel(got.eta, truth.eta) < 1e-3);
    }

    #[test]
    fn objective_matches_per_point_deltas() {
        let truth = DenseParams::with_free_eps0(0.7, 0.5, 0.15, 0.7, 7.0, 1.0).unwrap();
        let ms: Vec<f64> = (0..4).map(|k| 0.25_f64.powi(k)).collect();
        let ns: Vec<f64> = (0..4).map(|k| 0.5_f64.powi(k)).collect();
        let mut data = dense_grid(&truth, &ms, &ns);
        for (i, p) in data.iter_mut().enumerate() {
            p.error *= 1.0 + 0.01 * ((i % 3) as f64 - 1.0); // deterministic contamination
        }
        let rep = fit_dense(&data, &FitConfig { restarts: 10, ..FitConfig::with_seed(5) }).unwrap();
        let recomputed: f64 = rep.per_point.iter().map(|p| p.delta * p.delta).sum();
        assert!((rep.objective - recomputed).abs() <= 1e-12 * rep.objective.max(1e-300));
    }

    #[test]
    fn too_few_axis_values_is_ill_posed() {
        let truth = DenseParams::with_free_eps0(0.7, 0.5, 0.15, 0.7, 7.0, 1.0).unwrap();
        let data = dense_grid(&truth, &[1.0], &[1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125]);
        let got = fit_dense(&data, &FitConfig::with_seed(1));
        assert!(matches!(got, Err(Error::IllPosed(_))));
    }

    #[test]
    fn prune_single_noiseless_recovery() {
        let truth = PruneParams::new(0.9, 1.3, 0.02).unwrap();
        let eps_np = 0.1;
        let curve: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let d = 0.8_f64.powi(i);
                (d, eval_prune_single(eps_np, &truth, d))
            })
            .collect();
        let rep =
            fit_prune_single(&curve, eps_np, &FitConfig { restarts: 40, ..FitConfig::with_seed(2) })
                .unwrap();
        let FittedParams::PruneSingle { params: got, .. } = &rep.params else { panic!() };
        assert!(rep.objective < 1e-16, "objective {}", rep.objective);
        assert!(rel(got.eps_up, truth.eps_up) < 1e-3, "eps_up {}", got.eps_up);
        assert!(rel(got.gamma, truth.gamma) < 1e-3, "gamma {}", got.gamma);
        assert!(rel(got.p, truth.p) < 1e-3, "p {}", got.p);
    }

    #[test]
    fn flat_curve_warns_degenerate() {
        let curve: Vec<(f64, f64)> = (0..10).map(|i| (0.8_f64.powi(i), 0.25)).collect();
        let rep =
            fit_prune_single(&curve, 0.25, &FitConfig { restarts: 5, ..FitConfig::with_seed(1) })
                .unwrap();
        assert!(rep.warnings.iter().any(|w| w.contains("degenerate")));
    }

    fn joint_family(
        truth: &PruneJointParams,
        ls: &[f64],
        ws: &[f64],
        densities: &[f64],
    ) -> Vec<PruneMeasurement> {
        let mut out = Vec::new();
        for &l in ls {
            for &w in ws {
                let eps_np = 0.04 + 0.08 / (l * w * w); // spread of anchors
                for &d in densities {
                    out.push(PruneMeasurement {
                        l,
                        w,
                        d,
                        n: 1.0,
                        error: eval_prune_joint(eps_np, truth, l, w, d),
                        eps_np,
                        replicate: None,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn joint_noiseless_recovery() {
        let truth = PruneJointParams::new(0.82, 1.15, 0.9, 1.35, 2.1).unwrap();
        let densities: Vec<f64> = (0..20).map(|i| 0.8_f64.powi(i)).collect();
        let data = joint_family(&truth, &[8.0, 14.0, 20.0, 26.0], &[0.25, 0.5, 1.0, 2.0], &densities);
        let rep =
            fit_prune_joint(&data, &FitConfig { restarts: 40, ..FitConfig::with_seed(11) }).unwrap();
        let FittedParams::PruneJoint(got) = &rep.params else { panic!() };
        assert!(rep.objective < 1e-12, "objective {}", rep.objective);
        for (name, g, t) in [
            ("eps_up", got.eps_up, truth.eps_up),
            ("gamma", got.gamma, truth.gamma),
            ("p_prime", got.p_prime, truth.p_prime),
            ("phi", got.phi, truth.phi),
            ("psi", got.psi, truth.psi),
        ] {
            assert!(rel(g, t) < 1e-3, "{name}: got {g}, want {t}");
        }
    }

    #[test]
    fn joint_single_axis_warns_and_partial_fit_succeeds() {
        let truth = PruneJointParams::new(0.82, 1.15, 0.9, 0.0, 2.1).unwrap();
        let densities: Vec<f64> = (0..18).map(|i| 0.8_f64.powi(i)).collect();
        let data = joint_family(&truth, &[20.0], &[0.25, 0.5, 1.0, 2.0], &densities);

        let noisy = fit_prune_joint(&data, &FitConfig { restarts: 5, ..FitConfig::with_seed(4) }).unwrap();
        assert!(noisy.warnings.iter().any(|w| w.contains("phi")));

        let cfg = FitConfig {
            restarts: 30,
            fixed_exponents: ExponentFix { phi: true, psi: false },
            ..FitConfig::with_seed(4)
        };
        let rep = fit_prune_joint(&data, &cfg).unwrap();
        assert!(rep.warnings.iter().all(|w| !w.contains("unidentifiable")));
        let FittedParams::PruneJoint(got) = &rep.params else { panic!() };
        assert_eq!(got.phi, 0.0);
        assert!(rep.objective < 1e-12, "objective {}", rep.objective);
        assert!(rel(got.psi, truth.psi) < 1e-3);
    }

    #[test]
    fn restart_objectives_listed_per_restart() {
        let truth = DenseParams::with_free_eps0(0.7, 0.5, 0.15, 0.7, 7.0, 1.0).unwrap();
        let ms: Vec<f64> = (0..4).map(|k| 0.25_f64.powi(k)).collect();
        let ns: Vec<f64> = (0..4).map(|k| 0.5_f64.powi(k)).collect();
        let data = dense_grid(&truth, &ms, &ns);
        let rep = fit_dense(&data, &FitConfig { restarts: 17, ..FitConfig::with_seed(9) }).unwrap();
        assert_eq!(rep.restarts_summary.len(), 17);
        let min = rep.restarts_summary.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((rep.objective - min).abs() <= 1e-9 * min.max(1e-300) + 1e-300);
    }

    #[test]
    fn cv_loo_noiseless_is_tiny() {
        let truth = DenseParams::with_free_eps0(0.7, 0.5, 0.15, 0.7, 7.0, 1.0).unwrap();
        let ms: Vec<f64> = (0..4).map(|k| 0.25_f64.powi(k)).collect();
        let ns: Vec<f64> = (0..4).map(|k| 0.5_f64.powi(k)).collect();
        let data = dense_grid(&truth, &ms, &ns);
        let k = data.len();
        let rep = cross_validate(
            CvData::Dense(&data),
            k,
            &FitConfig { restarts: 15, ..FitConfig::with_seed(13) },
        )
        .unwrap();
        assert!(rep.mu.abs() < 1e-6, "mu {}", rep.mu);
        let folds = rep.folds.unwrap();
        assert_eq!(folds.k, k);
        assert_eq!(folds.per_fold.len(), k);
        assert!(folds.per_fold.iter().all(|f| f.points == 1));
        assert_eq!(rep.per_point.len(), data.len());
    }

    #[test]
    fn cv_k1_rejected() {
        let data =
            vec![DenseMeasurement { m: 1.0, n: 1.0, error: 0.1, replicate: None }; 4];
        let got = cross_validate(CvData::Dense(&data), 1, &FitConfig::with_seed(0));
        assert!(matches!(got, Err(Error::Invalid(_))));
    }

    #[test]
    fn scale_equivariance_of_divergences() {
        // doubling all error-unit inputs leaves every delta unchanged
        let truth = PruneParams::new(0.9, 1.3, 0.02).unwrap();
        let eps_np = 0.1;
        let curve: Vec<(f64, f64)> = (0..25)
            .map(|i| {
                let d = 0.8_f64.powi(i);
                let jitter = 1.0 + 0.02 * (((i * 37) % 11) as f64 - 5.0) / 5.0;
                (d, eval_prune_single(eps_np, &truth, d) * jitter)
            })
            .collect();
        let scaled: Vec<(f64, f64)> = curve.iter().map(|&(d, e)| (d, 2.0 * e)).collect();
        let config = FitConfig { restarts: 20, ..FitConfig::with_seed(21) };
        let a = fit_prune_single(&curve, eps_np, &config).unwrap();
        let b = fit_prune_single(&scaled, 2.0 * eps_np, &config).unwrap();
        // both runs converge to the same minimum of the (scale-free)
        // divergence objective, so deltas agree far beyond statistical noise
        for (x, y) in a.per_point.iter().zip(&b.per_point) {
            assert!((x.delta - y.delta).abs() <= 1e-8, "{} vs {}", x.delta, y.delta);
        }
        let FittedParams::PruneSingle { params: pa, .. } = &a.params else { panic!() };
        let FittedParams::PruneSingle { params: pb, .. } = &b.params else { panic!() };
        assert!((pb.eps_up / pa.eps_up - 2.0).abs() < 1e-6);
        assert!((pb.gamma / pa.gamma - 1.0).abs() < 1e-6);
        assert!((pb.p / pa.p - 1.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_identical_reports() {
        let truth = DenseParams::with_free_eps0(0.7, 0.5, 0.15, 0.7, 7.0, 1.0).unwrap();
        let ms: Vec<f64> = (0..4).map(|k| 0.25_f64.powi(k)).collect();
        let ns: Vec<f64> = (0..4).map(|k| 0.5_f64.powi(k)).collect();
        let data = dense_grid(&truth, &ms, &ns);
        let config = FitConfig { restarts: 8, ..FitConfig::with_seed(33) };
        let a = serde_json::to_string(&fit_dense(&data, &config).unwrap()).unwrap();
        let b = serde_json::to_string(&fit_dense(&data, &config).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
