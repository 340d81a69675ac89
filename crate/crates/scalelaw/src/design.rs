//! Design questions answered from a fitted law: how big a model is worth
//! training, how much data is worth collecting, compute-optimal pairs,
//! iso-error contours, and cheapest pruned configurations.
//!
//! The resource solvers all live on one balance curve of the dense core,
//! `n^-alpha = t * b * m^-beta`: the locus where the data term sits `t`
//! times above the model term. Solving it for `m` bounds the useful model
//! size under a data budget; solving it for `n` bounds the useful dataset
//! under a size budget.

use crate::error::{Error, Result};
use crate::forms::{
    eval_dense_core, eval_dense_envelope, eval_prune_joint, irreducible_error,
    prune_joint_amplitude, DenseParams, PruneJointParams,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Uniform answer shape for the design solvers, ready for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignAnswer {
    pub kind: String,
    pub values: BTreeMap<String, f64>,
    /// Error of the law at the answer, in the fitted units.
    pub achieved_error: Option<f64>,
    /// False when the question has no answer in its domain; `note` says why.
    pub feasible: bool,
    pub note: Option<String>,
}

impl DesignAnswer {
    fn infeasible(kind: &str, note: String) -> DesignAnswer {
        DesignAnswer {
            kind: kind.into(),
            values: BTreeMap::new(),
            achieved_error: None,
            feasible: false,
            note: Some(note),
        }
    }
}

fn finite_positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::Invalid(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

fn tradeoff_guard(p: &DenseParams) -> Result<()> {
    if p.alpha <= 0.0 || p.beta <= 0.0 || p.b <= 0.0 {
        return Err(Error::IllPosed(
            "the data/model trade-off needs alpha, beta and b all positive".into(),
        ));
    }
    Ok(())
}

/// The balance relation holds in the power-law region of the landscape;
/// near the random-guess plateau the envelope flattens and "useful" loses
/// meaning. Both balance solvers therefore report `power_law_region`
/// (1 when the core level at the answer sits below a tenth of the plateau
/// constant `eta`, 0 otherwise) instead of silently extrapolating.
fn balance_validity(values: &mut BTreeMap<String, f64>, note: &mut String, p: &DenseParams, m: f64, n: f64) {
    let core = eval_dense_core(p, m, n);
    let valid = core <= p.eta / 10.0;
    values.insert("core_level".into(), core);
    values.insert("power_law_region".into(), if valid { 1.0 } else { 0.0 });
    if !valid {
        note.push_str(
            "; caution: the answer sits near the random-guess plateau, outside the power-law region the balance relation assumes",
        );
    }
}

/// Largest model worth training against a dataset of size `n_lim`: the `m`
/// where the data term is `t` times the model term. Beyond it, growing the
/// model moves the error negligibly.
pub fn max_useful_model(p: &DenseParams, n_lim: f64, t: f64) -> Result<DesignAnswer> {
    finite_positive("n_lim", n_lim)?;
    finite_positive("t", t)?;
    tradeoff_guard(p)?;
    let m = (p.b * t).powf(1.0 / p.beta) * n_lim.powf(p.alpha / p.beta);
    let mut values = BTreeMap::new();
    values.insert("m_max".into(), m);
    values.insert("data_term".into(), n_lim.powf(-p.alpha));
    values.insert("model_term".into(), p.b * m.powf(-p.beta));
    let mut note = format!(
        "at m_max the data term is {t} times the model term; larger models are wasted on this dataset"
    );
    balance_validity(&mut values, &mut note, p, m, n_lim);
    Ok(DesignAnswer {
        kind: "max-model".into(),
        values,
        achieved_error: Some(eval_dense_envelope(p, m, n_lim)),
        feasible: true,
        note: Some(note),
    })
}

/// Largest dataset worth collecting for a model of size `m_lim`: the `n` on
/// the same balance curve, beyond which the model's own floor dominates the
/// return per sample.
pub fn max_useful_data(p: &DenseParams, m_lim: f64, t: f64) -> Result<DesignAnswer> {
    finite_positive("m_lim", m_lim)?;
    finite_positive("t", t)?;
    tradeoff_guard(p)?;
    let n = (1.0 / (p.b * t)).powf(1.0 / p.alpha) * m_lim.powf(p.beta / p.alpha);
    let mut values = BTreeMap::new();
    values.insert("n_max".into(), n);
    values.insert("data_term".into(), n.powf(-p.alpha));
    values.insert("model_term".into(), p.b * m_lim.powf(-p.beta));
    let mut note = format!(
        "at n_max the data term is {t} times the model term; more data mostly rides the model's floor"
    );
    balance_validity(&mut values, &mut note, p, m_lim, n);
    Ok(DesignAnswer {
        kind: "max-data".into(),
        values,
        achieved_error: Some(eval_dense_envelope(p, m_lim, n)),
        feasible: true,
        note: Some(note),
    })
}

/// The (m, n) pair reaching a target excess core error (the core value
/// above its floor `c_inf`) with the least compute, taking compute
/// proportional to `m * n`. At the optimum the marginal return of model
/// and data spending is equal: `(b beta / alpha) n^alpha / m^beta = 1`.
pub fn optimal_compute_pair(p: &DenseParams, excess: f64) -> Result<DesignAnswer> {
    finite_positive("excess core error", excess)?;
    tradeoff_guard(p)?;
    let n = ((1.0 + p.alpha / p.beta) / excess).powf(1.0 / p.alpha);
    let m = (p.b * p.beta * n.powf(p.alpha) / p.alpha).powf(1.0 / p.beta);
    let mut values = BTreeMap::new();
    values.insert("m".into(), m);
    values.insert("n".into(), n);
    values.insert("compute".into(), m * n);
    values.insert("core_excess".into(), eval_dense_core(p, m, n) - p.c_inf);
    values.insert("marginal_ratio".into(), p.b * p.beta / p.alpha * n.powf(p.alpha) * m.powf(-p.beta));
    Ok(DesignAnswer {
        kind: "optimal-pair".into(),
        values,
        achieved_error: Some(eval_dense_envelope(p, m, n)),
        feasible: true,
        note: Some("cheapest m * n reaching the target; marginal_ratio = 1 certifies the balance".into()),
    })
}

/// One iso-error slice: the `n` reaching `target` at this `m`, when one
/// exists below the per-size floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub m: f64,
    pub n: Option<f64>,
    pub achieved: Option<f64>,
}

/// Traces the iso-error contour `envelope(m, n) = target` across the given
/// model sizes by bisecting in `log n` (at most 200 halvings, accepted when
/// the re-evaluated error is within 1e-9 of the target, relatively).
///
/// The target must lie strictly between the irreducible error and the
/// random-guess level; sizes whose own floor exceeds the target yield
/// `n: None` cells.
pub fn error_contour(p: &DenseParams, target: f64, ms: &[f64]) -> Result<Vec<ContourPoint>> {
    finite_positive("target", target)?;
    if target >= p.eps0 {
        return Err(Error::Invalid(format!(
            "target {target} is at or above the random-guess level {}",
            p.eps0
        )));
    }
    let (floor, _) = irreducible_error(p);
    if target <= floor {
        return Err(Error::Infeasible(format!(
            "target {target} is at or below the irreducible error {floor}"
        )));
    }
    if ms.is_empty() {
        return Err(Error::Invalid("contour needs at least one model size".into()));
    }
    for &m in ms {
        finite_positive("m", m)?;
    }
    let envelope_of = |core: f64| p.eps0 * core / (core * core + p.eta * p.eta).sqrt();
    Ok(ms
        .iter()
        .map(|&m| {
            // n -> infinity limit at this size
            let m_floor = envelope_of(p.b * m.powf(-p.beta) + p.c_inf);
            if target <= m_floor {
                return ContourPoint { m, n: None, achieved: None };
            }
            let (mut lo, mut hi) = (1e-30f64.ln(), 1e30f64.ln());
            if eval_dense_envelope(p, m, lo.exp()) < target {
                return ContourPoint { m, n: None, achieved: None };
            }
            let mut n = f64::NAN;
            let mut achieved = f64::NAN;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                n = mid.exp();
                achieved = eval_dense_envelope(p, m, n);
                if ((achieved - target) / target).abs() <= 1e-9 {
                    break;
                }
                // envelope decreases in n
                if achieved > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            ContourPoint { m, n: Some(n), achieved: Some(achieved) }
        })
        .collect())
}

/// Closed-form contour under the power-law-region approximation
/// `error ~ eps0 * core / eta`, valid when the core level is well below
/// `eta` (targets far under the random-guess level). Each cell's `achieved`
/// is the exact envelope at the approximate solution, so the approximation
/// error is visible in the output rather than hidden. Use [`error_contour`]
/// when the target approaches either plateau.
pub fn error_contour_power_region(
    p: &DenseParams,
    target: f64,
    ms: &[f64],
) -> Result<Vec<ContourPoint>> {
    finite_positive("target", target)?;
    if target >= p.eps0 {
        return Err(Error::Invalid(format!(
            "target {target} is at or above the random-guess level {}",
            p.eps0
        )));
    }
    let (_, floor_approx) = irreducible_error(p);
    if target <= floor_approx {
        return Err(Error::Infeasible(format!(
            "target {target} is at or below the power-region irreducible error {floor_approx}"
        )));
    }
    if ms.is_empty() {
        return Err(Error::Invalid("contour needs at least one model size".into()));
    }
    for &m in ms {
        finite_positive("m", m)?;
    }
    let core_target = target * p.eta / p.eps0;
    Ok(ms
        .iter()
        .map(|&m| {
            let data_share = core_target - p.c_inf - p.b * m.powf(-p.beta);
            if data_share <= 0.0 {
                return ContourPoint { m, n: None, achieved: None };
            }
            let n = data_share.powf(-1.0 / p.alpha);
            ContourPoint { m, n: Some(n), achieved: Some(eval_dense_envelope(p, m, n)) }
        })
        .collect())
}

/// Inverts the joint pruning form at the effective-size level: the `m*`
/// where the curve anchored at `eps_np` passes through `target`.
/// Requires `eps_np < target < eps_up`.
pub fn invert_prune_for_mstar(
    eps_np: f64,
    joint: &PruneJointParams,
    target: f64,
) -> Result<f64> {
    finite_positive("eps_np", eps_np)?;
    finite_positive("target", target)?;
    if target <= eps_np || target >= joint.eps_up {
        return Err(Error::Infeasible(format!(
            "target {target} outside the reachable band ({eps_np}, {})",
            joint.eps_up
        )));
    }
    let a = prune_joint_amplitude(eps_np, joint);
    let r = (target / eps_np).powf(2.0 / joint.gamma);
    let num = a * a - r * joint.p_prime * joint.p_prime;
    Ok((num / (r - 1.0)).sqrt())
}

/// Sparsest density at which a (depth `l`, width `w`) network still meets
/// `target`, given its unpruned anchor. Infeasible when even the unpruned
/// network misses the target, or when the target sits at or above the
/// sparse-limit error `eps_up`.
pub fn invert_prune_density(
    eps_np: f64,
    joint: &PruneJointParams,
    l: f64,
    w: f64,
    target: f64,
) -> Result<DesignAnswer> {
    finite_positive("eps_np", eps_np)?;
    finite_positive("target", target)?;
    finite_positive("l", l)?;
    finite_positive("w", w)?;
    let kind = "invert-density";
    let scale = l.powf(joint.phi) * w.powf(joint.psi);
    if (joint.eps_up / eps_np - 1.0).abs() <= 1e-12 {
        // flat curve: pruning neither helps nor hurts
        return Ok(if target >= eps_np * (1.0 - 1e-12) {
            let mut values = BTreeMap::new();
            values.insert("density".into(), 1.0);
            values.insert("mstar".into(), scale);
            DesignAnswer {
                kind: kind.into(),
                values,
                achieved_error: Some(eps_np),
                feasible: true,
                note: Some("flat transition: error is eps_np at every density, keep d = 1".into()),
            }
        } else {
            DesignAnswer::infeasible(kind, format!("target {target} below the flat curve at {eps_np}"))
        });
    }
    let at_full = eval_prune_joint(eps_np, joint, l, w, 1.0);
    if target < at_full {
        return Ok(DesignAnswer::infeasible(
            kind,
            format!("even unpruned, this configuration gives {at_full}; the target {target} needs a larger network"),
        ));
    }
    if target >= joint.eps_up {
        return Ok(DesignAnswer::infeasible(
            kind,
            format!("target {target} is at or above the sparse-limit error {}", joint.eps_up),
        ));
    }
    let mstar = invert_prune_for_mstar(eps_np, joint, target)?;
    let d = (mstar / scale).min(1.0);
    let mut values = BTreeMap::new();
    values.insert("density".into(), d);
    values.insert("mstar".into(), mstar);
    values.insert("amplitude".into(), prune_joint_amplitude(eps_np, joint));
    Ok(DesignAnswer {
        kind: kind.into(),
        values,
        achieved_error: Some(eval_prune_joint(eps_np, joint, l, w, d)),
        feasible: true,
        note: None,
    })
}

/// Search space for [`prune_min_params`]: geometric grids over depth and
/// width multiplier, `coarse` points per axis, then two local refinements
/// around the best cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneDesignSpace {
    pub l_range: (f64, f64),
    pub w_range: (f64, f64),
    pub coarse: usize,
}

impl Default for PruneDesignSpace {
    fn default() -> Self {
        PruneDesignSpace { l_range: (4.0, 64.0), w_range: (0.25, 4.0), coarse: 13 }
    }
}

fn geom_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 || lo == hi {
        return vec![lo];
    }
    let step = (hi / lo).powf(1.0 / (k - 1) as f64);
    (0..k).map(|i| lo * step.powi(i as i32)).collect()
}

#[derive(Clone, Copy)]
struct PruneCell {
    cost: f64,
    l: f64,
    w: f64,
    d: f64,
    eps_np: f64,
    achieved: f64,
}

fn argmin_cell(
    ls: &[f64],
    ws: &[f64],
    eval: &impl Fn(f64, f64) -> Option<PruneCell>,
) -> Option<PruneCell> {
    let mut best: Option<PruneCell> = None;
    for &l in ls {
        for &w in ws {
            if let Some(cell) = eval(l, w) {
                if best.map_or(true, |b| cell.cost < b.cost) {
                    best = Some(cell);
                }
            }
        }
    }
    best
}

fn refined_argmin(
    space: &PruneDesignSpace,
    eval: &impl Fn(f64, f64) -> Option<PruneCell>,
) -> Option<PruneCell> {
    let (l_lo, l_hi) = space.l_range;
    let (w_lo, w_hi) = space.w_range;
    let mut best = argmin_cell(
        &geom_grid(l_lo, l_hi, space.coarse),
        &geom_grid(w_lo, w_hi, space.coarse),
        eval,
    )?;
    let mut l_step = (l_hi / l_lo).powf(1.0 / (space.coarse - 1) as f64);
    let mut w_step = (w_hi / w_lo).powf(1.0 / (space.coarse - 1) as f64);
    for _ in 0..2 {
        let ls = geom_grid((best.l / l_step).max(l_lo), (best.l * l_step).min(l_hi), 9);
        let ws = geom_grid((best.w / w_step).max(w_lo), (best.w * w_step).min(w_hi), 9);
        if let Some(better) = argmin_cell(&ls, &ws, eval) {
            if better.cost < best.cost {
                best = better;
            }
        }
        l_step = l_step.powf(0.25);
        w_step = w_step.powf(0.25);
    }
    Some(best)
}

/// Cheapest pruned configuration meeting `target` at dataset size `n`:
/// minimizes the parameter-count proxy `l * w^2 * d` over the search space,
/// choosing each cell's density by inverting the joint form. Anchors follow
/// the dense law through [`crate::synth::eps_np_from_dense`]. The answer
/// also carries the cheapest unpruned (d = 1) alternative for comparison;
/// that alternative is judged by the dense law directly, while pruned
/// candidates answer to the joint form, whose d = 1 value can sit slightly
/// above the anchor for networks near the transition.
#[allow(clippy::too_many_arguments)]
pub fn prune_min_params(
    dense: &DenseParams,
    base_l: f64,
    base_w: f64,
    joint: &PruneJointParams,
    n: f64,
    target: f64,
    space: &PruneDesignSpace,
) -> Result<DesignAnswer> {
    finite_positive("target", target)?;
    finite_positive("n", n)?;
    finite_positive("base_l", base_l)?;
    finite_positive("base_w", base_w)?;
    let (l_lo, l_hi) = space.l_range;
    let (w_lo, w_hi) = space.w_range;
    for (name, v) in [("depth range", l_lo), ("depth range", l_hi), ("width range", w_lo), ("width range", w_hi)] {
        finite_positive(name, v)?;
    }
    if l_lo > l_hi || w_lo > w_hi || space.coarse < 2 {
        return Err(Error::Invalid("search space needs lo <= hi ranges and coarse >= 2".into()));
    }
    if target >= joint.eps_up {
        return Err(Error::Invalid(format!(
            "target {target} is at or above the sparse-limit error {}; every density qualifies",
            joint.eps_up
        )));
    }
    let kind = "prune-min";

    let anchored = |l: f64, w: f64| crate::synth::eps_np_from_dense(dense, base_l, base_w, l, w, n);
    let pruned_cell = |l: f64, w: f64| -> Option<PruneCell> {
        let eps_np = anchored(l, w);
        let answer = invert_prune_density(eps_np, joint, l, w, target).ok()?;
        if !answer.feasible {
            return None;
        }
        let d = answer.values["density"];
        Some(PruneCell {
            cost: l * w * w * d,
            l,
            w,
            d,
            eps_np,
            achieved: answer.achieved_error.unwrap(),
        })
    };
    let unpruned_cell = |l: f64, w: f64| -> Option<PruneCell> {
        let eps_np = anchored(l, w);
        (eps_np <= target).then_some(PruneCell {
            cost: l * w * w,
            l,
            w,
            d: 1.0,
            eps_np,
            achieved: eps_np,
        })
    };

    let Some(best) = refined_argmin(space, &pruned_cell) else {
        return Ok(DesignAnswer::infeasible(
            kind,
            format!("no configuration in the search space reaches {target}; enlarge the depth or width ranges"),
        ));
    };
    let unpruned = refined_argmin(space, &unpruned_cell);

    let mut values = BTreeMap::new();
    values.insert("depth".into(), best.l);
    values.insert("width_scale".into(), best.w);
    values.insert("density".into(), best.d);
    values.insert("cost".into(), best.cost);
    values.insert("eps_np".into(), best.eps_np);
    let note = match unpruned {
        Some(u) => {
            values.insert("unpruned_cost".into(), u.cost);
            Some(format!(
                "pruned optimum costs {:.3}x the cheapest unpruned alternative (parameter proxy l * w^2 * d)",
                best.cost / u.cost
            ))
        }
        None => Some(
            "no unpruned configuration in the search space reaches the target; cost proxy is l * w^2 * d"
                .into(),
        ),
    };
    Ok(DesignAnswer {
        kind: kind.into(),
        values,
        achieved_error: Some(best.achieved),
        feasible: true,
        note,
    })
}

/// Minimum-cost sweep over several targets; per-target infeasibility
/// becomes an infeasible answer rather than an error.
#[allow(clippy::too_many_arguments)]
pub fn prune_min_param_envelope(
    dense: &DenseParams,
    base_l: f64,
    base_w: f64,
    joint: &PruneJointParams,
    n: f64,
    targets: &[f64],
    space: &PruneDesignSpace,
) -> Result<Vec<(f64, DesignAnswer)>> {
    if targets.is_empty() {
        return Err(Error::Invalid("envelope sweep needs at least one target".into()));
    }
    targets
        .iter()
        .map(|&t| {
            match prune_min_params(dense, base_l, base_w, joint, n, t, space) {
                Ok(a) => Ok((t, a)),
                Err(Error::Invalid(msg)) => Ok((t, DesignAnswer::infeasible("prune-min", msg))),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn imagenet_max_model_matches_closed_form() {
        let p = preset("imagenet").unwrap().params;
        let a = max_useful_model(&p, 1.2e6, 10.0).unwrap();
        let m = a.values["m_max"];
        assert!(rel(m, 861694435.1239175) < 1e-9, "m_max {m}");
        // the defining balance holds exactly: data term = t * model term
        let t = a.values["data_term"] / a.values["model_term"];
        assert!(rel(t, 10.0) < 1e-9, "balance {t}");
        assert!(a.feasible);
    }

    #[test]
    fn unit_max_data_is_m_over_t() {
        let p = DenseParams::with_free_eps0(1.0, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let a = max_useful_data(&p, 1000.0, 10.0).unwrap();
        let n = a.values["n_max"];
        assert!(rel(n, 100.0) < 1e-12, "n_max {n}");
        assert!(rel(a.values["data_term"] / a.values["model_term"], 10.0) < 1e-12);
    }

    #[test]
    fn zero_b_has_no_tradeoff() {
        let p = DenseParams::with_free_eps0(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(max_useful_model(&p, 10.0, 10.0), Err(Error::IllPosed(_))));
        assert!(matches!(optimal_compute_pair(&p, 0.5), Err(Error::IllPosed(_))));
    }

    #[test]
    fn imagenet_optimal_pair_sits_on_contour_and_balance() {
        let p = preset("imagenet").unwrap().params;
        let a = optimal_compute_pair(&p, 1.0).unwrap();
        let (m, n) = (a.values["m"], a.values["n"]);
        assert!(rel(n, 2.902782451713769810) < 1e-9, "n {n}");
        assert!(rel(m, 1.670504822276654657) < 1e-9, "m {m}");
        assert!(rel(a.values["core_excess"], 1.0) < 1e-12);
        assert!(rel(a.values["marginal_ratio"], 1.0) < 1e-12);
    }

    #[test]
    fn unit_optimal_pair_is_two_two() {
        let p = DenseParams::with_free_eps0(1.0, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let a = optimal_compute_pair(&p, 1.0).unwrap();
        assert!(rel(a.values["m"], 2.0) < 1e-15);
        assert!(rel(a.values["n"], 2.0) < 1e-15);
    }

    #[test]
    fn contour_recovers_a_known_point() {
        let p = preset("imagenet").unwrap().params;
        let target = crate::forms::eval_dense_envelope(&p, 0.3, 0.7);
        let pts = error_contour(&p, target, &[0.3]).unwrap();
        let n = pts[0].n.unwrap();
        assert!(rel(n, 0.7) < 1e-6, "n {n}");
        assert!(rel(pts[0].achieved.unwrap(), target) < 1e-9);
    }

    #[test]
    fn contour_marks_small_models_unreachable() {
        let p = preset("imagenet").unwrap().params;
        // floor at m = 1e-9 sits far above this mid-range target
        let target = crate::forms::eval_dense_envelope(&p, 1.0, 1.0) * 1.001;
        let pts = error_contour(&p, target, &[1e-9, 1.0]).unwrap();
        assert!(pts[0].n.is_none());
        assert!(pts[1].n.is_some());
    }

    #[test]
    fn contour_domain_errors() {
        let p = preset("imagenet").unwrap().params;
        let (floor, _) = irreducible_error(&p);
        assert!(matches!(error_contour(&p, floor * 0.9, &[1.0]), Err(Error::Infeasible(_))));
        assert!(matches!(error_contour(&p, p.eps0, &[1.0]), Err(Error::Invalid(_))));
        assert!(matches!(error_contour(&p, -0.1, &[1.0]), Err(Error::Invalid(_))));
    }

    fn invert_fixture() -> PruneJointParams {
        PruneJointParams::new(0.9, 1.2, 3.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn mstar_inversion_matches_frozen_value_and_forward_eval() {
        let joint = invert_fixture();
        let mstar = invert_prune_for_mstar(0.08, &joint, 0.3).unwrap();
        assert!(rel(mstar, 7.281474089758884531) < 1e-12, "mstar {mstar}");
        let forward = crate::forms::eval_prune_joint_at_mstar(0.08, &joint, mstar);
        assert!(rel(forward, 0.3) < 1e-12, "forward {forward}");
    }

    #[test]
    fn density_inversion_feasibility_band() {
        let joint = invert_fixture();
        let a = invert_prune_density(0.08, &joint, 20.0, 1.0, 0.3).unwrap();
        assert!(a.feasible);
        let d = a.values["density"];
        assert!(rel(d, 7.281474089758884531 / 20.0) < 1e-12, "d {d}");
        assert!(rel(a.achieved_error.unwrap(), 0.3) < 1e-12);

        // below what even the unpruned network reaches
        let low = invert_prune_density(0.08, &joint, 20.0, 1.0, 0.1).unwrap();
        assert!(!low.feasible);
        assert!(low.note.unwrap().contains("unpruned"));

        // at the sparse limit
        let high = invert_prune_density(0.08, &joint, 20.0, 1.0, 0.9).unwrap();
        assert!(!high.feasible);
    }

    #[test]
    fn flat_transition_keeps_full_density() {
        let joint = PruneJointParams::new(0.08, 1.2, 3.0, 1.0, 2.0).unwrap();
        let a = invert_prune_density(0.08, &joint, 20.0, 1.0, 0.09).unwrap();
        assert!(a.feasible);
        assert_eq!(a.values["density"], 1.0);
        assert!(a.note.unwrap().contains("flat"));
        let below = invert_prune_density(0.08, &joint, 20.0, 1.0, 0.05).unwrap();
        assert!(!below.feasible);
    }

    fn min_params_fixture() -> (DenseParams, PruneJointParams) {
        let dense = preset("cifar10").unwrap().params;
        let joint = PruneJointParams::new(0.6, 1.2, 0.03, 1.3, 2.0).unwrap();
        (dense, joint)
    }

    #[test]
    fn prune_min_beats_unpruned_and_meets_target() {
        let (dense, joint) = min_params_fixture();
        let space = PruneDesignSpace::default();
        let a = prune_min_params(&dense, 20.0, 1.0, &joint, 1.0, 0.08, &space).unwrap();
        assert!(a.feasible, "{a:?}");
        let (l, w, d) = (a.values["depth"], a.values["width_scale"], a.values["density"]);
        assert!(d > 0.0 && d <= 1.0, "d {d}");
        assert!(rel(a.values["cost"], l * w * w * d) < 1e-12);
        assert!(a.achieved_error.unwrap() <= 0.08 * (1.0 + 1e-9));
        assert!(
            a.values["cost"] < a.values["unpruned_cost"],
            "pruned {} vs unpruned {}",
            a.values["cost"],
            a.values["unpruned_cost"]
        );
    }

    #[test]
    fn envelope_cost_loosens_with_target() {
        let (dense, joint) = min_params_fixture();
        let space = PruneDesignSpace::default();
        let sweep =
            prune_min_param_envelope(&dense, 20.0, 1.0, &joint, 1.0, &[0.06, 0.08, 0.12], &space)
                .unwrap();
        let costs: Vec<f64> = sweep
            .iter()
            .map(|(_, a)| {
                assert!(a.feasible, "{a:?}");
                a.values["cost"]
            })
            .collect();
        assert!(costs[1] <= costs[0] * (1.0 + 1e-6), "{costs:?}");
        assert!(costs[2] <= costs[1] * (1.0 + 1e-6), "{costs:?}");
    }

    #[test]
    fn hopeless_target_is_infeasible_answer() {
        let (dense, joint) = min_params_fixture();
        let space = PruneDesignSpace { l_range: (4.0, 6.0), w_range: (0.25, 0.3), coarse: 5 };
        // tiny nets cannot reach a near-zero error target
        let a = prune_min_params(&dense, 20.0, 1.0, &joint, 1.0, 1e-4, &space).unwrap();
        assert!(!a.feasible);
        assert!(a.note.unwrap().contains("search space"));
    }

    #[test]
    fn sweep_tolerates_domain_errors_per_target() {
        let (dense, joint) = min_params_fixture();
        let space = PruneDesignSpace::default();
        let sweep =
            prune_min_param_envelope(&dense, 20.0, 1.0, &joint, 1.0, &[0.7, 0.08], &space).unwrap();
        assert!(!sweep[0].1.feasible); // 0.7 >= eps_up 0.6
        assert!(sweep[1].1.feasible);
    }
}
