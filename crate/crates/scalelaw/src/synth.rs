//! Synthetic measurement tables and fit-stability experiments.
//!
//! Generators evaluate a known ground-truth law on a grid and corrupt it
//! with a seeded noise model, which gives the test and benchmark fixtures a
//! known answer. Draw order is fixed (documented per generator), so a table
//! is a pure function of its arguments.

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::fit::{
    average_dense_replicates, average_prune_replicates, divergence, fit_dense, fit_prune_joint,
    mean_std, FitConfig, FittedParams,
};
use crate::forms::{
    eval_dense_envelope, eval_prune_joint, DenseMeasurement, DenseParams, PruneJointParams,
    PruneMeasurement,
};
use crate::rng::Stream;
use serde::{Deserialize, Serialize};

/// Measurement corruption applied on top of the ground-truth law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Exact law values.
    None,
    /// `error = law * exp(sigma * z)`, `z` standard normal.
    Lognormal { sigma: f64 },
    /// Lognormal noise everywhere plus a systematic dip on the densest
    /// quarter of each pruning ladder (the unpruned anchor row excluded):
    /// those measurements are scaled by `1 - u` with `u ~ U[0, 8 * depth)`,
    /// mimicking mild pruning beating the unpruned baseline. Pooled over a
    /// ladder, the fit then overestimates by about `depth` on average.
    Dip { depth: f64, sigma: f64 },
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        let sigma = match *self {
            NoiseModel::None => return Ok(()),
            NoiseModel::Lognormal { sigma } => sigma,
            NoiseModel::Dip { depth, sigma } => {
                if !depth.is_finite() || !(0.0..=0.05).contains(&depth) {
                    return Err(Error::Invalid(format!(
                        "dip depth must lie in [0, 0.05], got {depth}"
                    )));
                }
                sigma
            }
        };
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::Invalid(format!("noise sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(())
    }

    /// Multiplicative factor for one measurement. `dipped` marks points in
    /// the dip region of a pruning ladder.
    fn factor(&self, rng: &mut Stream, dipped: bool) -> f64 {
        match *self {
            NoiseModel::None => 1.0,
            NoiseModel::Lognormal { sigma } => (sigma * rng.normal()).exp(),
            NoiseModel::Dip { depth, sigma } => {
                let base = (sigma * rng.normal()).exp();
                if dipped {
                    base * (1.0 - rng.uniform() * 8.0 * depth)
                } else {
                    base
                }
            }
        }
    }
}

/// Evaluates the dense envelope on `ms x ns` and corrupts it with `noise`.
/// Draws consume one stream in row-major order (`m` outer, `n` inner,
/// replicate innermost). Errors are capped at the random-guess level `eps0`.
/// Dip injection is a pruning-ladder notion and is rejected here.
pub fn generate_dense_grid(
    params: &DenseParams,
    ms: &[f64],
    ns: &[f64],
    replicates: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<DenseMeasurement>> {
    noise.validate()?;
    if matches!(noise, NoiseModel::Dip { .. }) {
        return Err(Error::Invalid("dip injection applies to pruning ladders, not dense grids".into()));
    }
    if replicates == 0 {
        return Err(Error::Invalid("replicates must be >= 1".into()));
    }
    for &v in ms.iter().chain(ns) {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Invalid(format!("grid scales must be finite and > 0, got {v}")));
        }
    }
    let mut rng = Stream::new(seed);
    let mut out = Vec::with_capacity(ms.len() * ns.len() * replicates);
    for &m in ms {
        for &n in ns {
            let law = eval_dense_envelope(params, m, n);
            for r in 0..replicates {
                let error = (law * noise.factor(&mut rng, false)).min(params.eps0);
                out.push(DenseMeasurement {
                    m,
                    n,
                    error,
                    replicate: (replicates > 1).then_some(r as u32),
                });
            }
        }
    }
    Ok(out)
}

/// Unpruned error of a (depth `l`, width multiplier `w`, data `n`) network
/// under a dense law, taking the parameter count as depth times width
/// squared relative to the base configuration.
pub fn eps_np_from_dense(
    dense: &DenseParams,
    base_l: f64,
    base_w: f64,
    l: f64,
    w: f64,
    n: f64,
) -> f64 {
    eval_dense_envelope(dense, (l / base_l) * (w / base_w) * (w / base_w), n)
}

/// Evaluates the joint pruning form over every (l, w, n) configuration and
/// density ladder, corrupts it with `noise`, and records each curve's anchor
/// the way the loader does: `eps_np` is the mean of the generated unpruned
/// (d = 1) measurements of that curve.
///
/// The unpruned anchor of the truth comes from `dense` via
/// [`eps_np_from_dense`]. The ladder is deduplicated, sorted densest first,
/// and a d = 1 row is prepended when missing. Each curve consumes an
/// independent child stream (curve index in `l` outer, `w` middle, `n`
/// inner order), densest first, replicate innermost.
///
/// The joint form only reduces to the unpruned error at d = 1 when the
/// effective size `l^phi w^psi` sits well above the transition; parameter
/// and grid combinations where the d = 1 law value strays more than 10%
/// from the dense anchor are rejected as inconsistent.
#[allow(clippy::too_many_arguments)]
pub fn generate_prune_family(
    dense: &DenseParams,
    base_l: f64,
    base_w: f64,
    joint: &PruneJointParams,
    ls: &[f64],
    ws: &[f64],
    ns: &[f64],
    densities: &[f64],
    replicates: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<PruneMeasurement>> {
    noise.validate()?;
    if replicates == 0 {
        return Err(Error::Invalid("replicates must be >= 1".into()));
    }
    for &v in ls.iter().chain(ws).chain(ns) {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Invalid(format!("configuration axes must be finite and > 0, got {v}")));
        }
    }
    for &d in densities {
        if !d.is_finite() || d <= 0.0 || d > 1.0 {
            return Err(Error::Invalid(format!("density must lie in (0, 1], got {d}")));
        }
    }
    let mut ladder: Vec<f64> = densities.to_vec();
    if !ladder.contains(&1.0) {
        ladder.push(1.0);
    }
    ladder.sort_by(|a, b| b.total_cmp(a));
    ladder.dedup();
    // densest quarter of the ladder, the anchor row excluded
    let dip_rows = (ladder.len() as f64 * 0.25).ceil() as usize;

    let root = Stream::new(seed);
    let mut out = Vec::new();
    let mut curve = 0u64;
    for &l in ls {
        for &w in ws {
            for &n in ns {
                let eps_np_true = eps_np_from_dense(dense, base_l, base_w, l, w, n);
                let at_full = eval_prune_joint(eps_np_true, joint, l, w, 1.0);
                if (at_full / eps_np_true - 1.0).abs() > 0.10 {
                    return Err(Error::Invalid(format!(
                        "unpruned point of configuration (l {l}, w {w}) sits off the plateau: \
                         law gives {at_full} against anchor {eps_np_true}; \
                         move the transition knee below the unpruned size"
                    )));
                }
                let mut rng = root.child(curve);
                curve += 1;
                let mut rows = Vec::with_capacity(ladder.len() * replicates);
                let mut anchor_sum = 0.0;
                for (i, &d) in ladder.iter().enumerate() {
                    let law = eval_prune_joint(eps_np_true, joint, l, w, d);
                    let dipped = i < dip_rows && d != 1.0;
                    for r in 0..replicates {
                        let error = law * noise.factor(&mut rng, dipped);
                        if d == 1.0 {
                            anchor_sum += error;
                        }
                        rows.push(PruneMeasurement {
                            l,
                            w,
                            d,
                            n,
                            error,
                            eps_np: f64::NAN, // patched below
                            replicate: (replicates > 1).then_some(r as u32),
                        });
                    }
                }
                let anchor = anchor_sum / replicates as f64;
                for row in &mut rows {
                    row.eps_np = anchor;
                }
                out.extend(rows);
            }
        }
    }
    Ok(out)
}

/// Spread of fit quality across repeated subsampled fits, one cell per
/// training-set size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    /// Training-set size (dense: configurations; pruning: curves).
    pub t: usize,
    pub repeats: usize,
    pub mu_mean: f64,
    pub mu_std: f64,
    pub sigma_mean: f64,
    pub sigma_std: f64,
}

fn stability_cells<T: Clone + Sync>(
    units: &[T],
    sizes: &[usize],
    repeats: usize,
    seed: u64,
    fit_eval: &(impl Fn(&[T]) -> Result<Vec<f64>> + Sync),
) -> Result<Vec<StabilityCell>> {
    if repeats == 0 {
        return Err(Error::Invalid("repeats must be >= 1".into()));
    }
    let root = Stream::new(seed).child(0x57AB);
    let mut cells = Vec::with_capacity(sizes.len());
    for &t in sizes {
        if t > units.len() {
            return Err(Error::IllPosed(format!(
                "subsample size {t} exceeds the {} available units",
                units.len()
            )));
        }
        let stats: Vec<Result<(f64, f64)>> = map_indexed(repeats, |rep| {
            let mut rng = root.child(t as u64).child(rep as u64);
            // redraw when a subset happens to violate fit preconditions
            let mut last_err = None;
            for _ in 0..100 {
                let perm = rng.permutation(units.len());
                let subset: Vec<T> = perm[..t].iter().map(|&i| units[i].clone()).collect();
                match fit_eval(&subset) {
                    Ok(deltas) => return Ok(mean_std(&deltas)),
                    Err(e @ Error::IllPosed(_)) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(Error::IllPosed(format!(
                "no valid subset of size {t} found in 100 draws: {}",
                last_err.map(|e| e.to_string()).unwrap_or_default()
            )))
        });
        let mut mus = Vec::with_capacity(repeats);
        let mut sigmas = Vec::with_capacity(repeats);
        for s in stats {
            let (mu, sigma) = s?;
            mus.push(mu);
            sigmas.push(sigma);
        }
        let (mu_mean, mu_std) = mean_std(&mus);
        let (sigma_mean, sigma_std) = mean_std(&sigmas);
        cells.push(StabilityCell { t, repeats, mu_mean, mu_std, sigma_mean, sigma_std });
    }
    Ok(cells)
}

/// Measures how dense-fit quality settles as the table grows: for each size
/// in `sizes`, fits `repeats` seeded random configuration subsets and
/// evaluates each fit's divergence over the full table. A stable protocol
/// shows the across-repeat spread of mu and sigma shrinking with size.
pub fn subsample_stability(
    data: &[DenseMeasurement],
    sizes: &[usize],
    repeats: usize,
    config: &FitConfig,
) -> Result<Vec<StabilityCell>> {
    let (pts, _) = average_dense_replicates(data);
    stability_cells(&pts, sizes, repeats, config.seed, &|subset: &[DenseMeasurement]| {
        let rep = fit_dense(subset, config)?;
        let FittedParams::Dense(prm) = &rep.params else { unreachable!() };
        Ok(pts
            .iter()
            .map(|pt| divergence(eval_dense_envelope(prm, pt.m, pt.n), pt.error))
            .collect())
    })
}

/// Pruning-side stability: subsamples whole (l, w, n) curves, fits the
/// joint form, and evaluates over the full family.
pub fn subsample_stability_prune(
    data: &[PruneMeasurement],
    curve_counts: &[usize],
    repeats: usize,
    config: &FitConfig,
) -> Result<Vec<StabilityCell>> {
    let (pts, _) = average_prune_replicates(data);
    let mut curves: Vec<Vec<PruneMeasurement>> = Vec::new();
    {
        let mut keys: Vec<(u64, u64, u64)> = Vec::new();
        for p in &pts {
            let key = (p.l.to_bits(), p.w.to_bits(), p.n.to_bits());
            match keys.iter().position(|&k| k == key) {
                Some(i) => curves[i].push(*p),
                None => {
                    keys.push(key);
                    curves.push(vec![*p]);
                }
            }
        }
    }
    stability_cells(&curves, curve_counts, repeats, config.seed, &|subset: &[Vec<PruneMeasurement>]| {
        let flat: Vec<PruneMeasurement> = subset.iter().flatten().copied().collect();
        let rep = fit_prune_joint(&flat, config)?;
        let FittedParams::PruneJoint(prm) = &rep.params else { unreachable!() };
        Ok(pts
            .iter()
            .map(|pt| divergence(eval_prune_joint(pt.eps_np, prm, pt.l, pt.w, pt.d), pt.error))
            .collect())
    })
}

/// Pruning-side stability at the finest grain: subsamples individual
/// measurements (each one trained network) rather than whole curves.
/// Small draws are much more likely to be ill-posed than whole-curve
/// draws; the bounded redraw loop absorbs that up to a point.
pub fn subsample_stability_prune_points(
    data: &[PruneMeasurement],
    point_counts: &[usize],
    repeats: usize,
    config: &FitConfig,
) -> Result<Vec<StabilityCell>> {
    let (pts, _) = average_prune_replicates(data);
    stability_cells(&pts, point_counts, repeats, config.seed, &|subset: &[PruneMeasurement]| {
        let rep = fit_prune_joint(subset, config)?;
        let FittedParams::PruneJoint(prm) = &rep.params else { unreachable!() };
        Ok(pts
            .iter()
            .map(|pt| divergence(eval_prune_joint(pt.eps_np, prm, pt.l, pt.w, pt.d), pt.error))
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Eps0Mode;
    use crate::presets::preset;

    #[test]
    fn noiseless_grid_matches_law_exactly() {
        let p = preset("imagenet").unwrap().params;
        let ms = [1.0, 0.25];
        let ns = [1.0, 0.5];
        let grid = generate_dense_grid(&p, &ms, &ns, 1, &NoiseModel::None, 0).unwrap();
        assert_eq!(grid.len(), 4);
        for g in &grid {
            assert_eq!(g.error, eval_dense_envelope(&p, g.m, g.n));
            assert_eq!(g.replicate, None);
        }
    }

    #[test]
    fn same_seed_same_table() {
        let p = preset("cifar100").unwrap().params;
        let ms = [1.0, 0.25, 0.0625];
        let ns = [1.0, 0.5];
        let noise = NoiseModel::Lognormal { sigma: 0.02 };
        let a = generate_dense_grid(&p, &ms, &ns, 3, &noise, 42).unwrap();
        let b = generate_dense_grid(&p, &ms, &ns, 3, &noise, 42).unwrap();
        let c = generate_dense_grid(&p, &ms, &ns, 3, &noise, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lognormal_noise_has_declared_moments() {
        let p = preset("imagenet").unwrap().params;
        let grid =
            generate_dense_grid(&p, &[0.25], &[0.5], 20_000, &NoiseModel::Lognormal { sigma: 0.05 }, 7)
                .unwrap();
        let law = eval_dense_envelope(&p, 0.25, 0.5);
        let logs: Vec<f64> = grid.iter().map(|g| (g.error / law).ln()).collect();
        let (mean, std) = mean_std(&logs);
        assert!(mean.abs() < 2e-3, "log-noise mean {mean}");
        assert!((std - 0.05).abs() < 2e-3, "log-noise std {std}");
    }

    #[test]
    fn errors_capped_at_random_guess_level() {
        let p = preset("cifar10").unwrap().params;
        // deep in the saturated corner the lognormal tail would exceed eps0
        let grid = generate_dense_grid(
            &p,
            &[1e-9],
            &[1e-9],
            500,
            &NoiseModel::Lognormal { sigma: 0.5 },
            3,
        )
        .unwrap();
        assert!(grid.iter().all(|g| g.error <= p.eps0));
        assert!(grid.iter().any(|g| g.error == p.eps0));
    }

    #[test]
    fn dip_on_dense_grid_rejected() {
        let p = preset("imagenet").unwrap().params;
        let got = generate_dense_grid(&p, &[1.0], &[1.0], 1, &NoiseModel::Dip { depth: 0.01, sigma: 0.0 }, 0);
        assert!(matches!(got, Err(Error::Invalid(_))));
    }

    fn joint_fixture() -> (DenseParams, PruneJointParams) {
        let dense = preset("cifar10").unwrap().params;
        let joint = PruneJointParams::new(0.6, 1.2, 0.03, 1.3, 2.0).unwrap();
        (dense, joint)
    }

    #[test]
    fn prune_family_anchors_on_unpruned_row() {
        let (dense, joint) = joint_fixture();
        let densities: Vec<f64> = (1..16).map(|i| 0.8_f64.powi(i)).collect(); // no 1.0 given
        let fam = generate_prune_family(
            &dense,
            20.0,
            1.0,
            &joint,
            &[14.0, 20.0],
            &[1.0, 2.0],
            &[1.0],
            &densities,
            2,
            &NoiseModel::Lognormal { sigma: 0.01 },
            5,
        )
        .unwrap();
        // 4 curves x 16 ladder rows x 2 replicates, d = 1 inserted
        assert_eq!(fam.len(), 4 * 16 * 2);
        for ((l, w), chunk) in [(14.0, 1.0), (14.0, 2.0), (20.0, 1.0), (20.0, 2.0)]
            .iter()
            .zip(fam.chunks(32))
        {
            let anchors: Vec<&PruneMeasurement> =
                chunk.iter().filter(|p| p.d == 1.0).collect();
            assert_eq!(anchors.len(), 2, "curve ({l}, {w})");
            let mean = (anchors[0].error + anchors[1].error) / 2.0;
            assert!(chunk.iter().all(|p| p.eps_np == mean));
            assert!(chunk.iter().all(|p| p.l == *l && p.w == *w));
            // anchor within noise of the dense rule
            let rule = eps_np_from_dense(&dense, 20.0, 1.0, *l, *w, 1.0);
            assert!((mean / rule - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn dip_lowers_only_the_dense_end() {
        let (dense, joint) = joint_fixture();
        let densities: Vec<f64> = (0..20).map(|i| 0.8_f64.powi(i)).collect();
        let clean = generate_prune_family(
            &dense, 20.0, 1.0, &joint, &[20.0], &[1.0], &[1.0], &densities, 1,
            &NoiseModel::None, 9,
        )
        .unwrap();
        let dipped = generate_prune_family(
            &dense, 20.0, 1.0, &joint, &[20.0], &[1.0], &[1.0], &densities, 1,
            &NoiseModel::Dip { depth: 0.01, sigma: 0.0 }, 9,
        )
        .unwrap();
        assert_eq!(clean.len(), dipped.len());
        let mut n_lower = 0;
        for (c, d) in clean.iter().zip(&dipped) {
            assert_eq!(c.d, d.d);
            if c.d == 1.0 {
                assert_eq!(c.error, d.error, "anchor row must stay clean");
            } else if d.error < c.error {
                n_lower += 1;
                assert!(c.d > 0.8_f64.powi(5), "dip must stay in the densest quarter");
                assert!(d.error >= c.error * (1.0 - 0.08));
            }
        }
        assert_eq!(n_lower, 4); // ceil(20 / 4) = 5 rows, minus the anchor
    }

    #[test]
    fn off_plateau_family_rejected() {
        let dense = preset("cifar10").unwrap().params;
        // huge knee: the transition swallows the unpruned point
        let joint = PruneJointParams::new(0.6, 1.2, 5.0, 1.3, 2.0).unwrap();
        let got = generate_prune_family(
            &dense, 20.0, 1.0, &joint, &[8.0], &[0.5], &[1.0],
            &[1.0, 0.5, 0.25], 1, &NoiseModel::None, 0,
        );
        assert!(matches!(got, Err(Error::Invalid(_))));
    }

    #[test]
    fn stability_spread_vanishes_without_noise() {
        let p = preset("imagenet").unwrap().params;
        let ms: Vec<f64> = (0..5).map(|k| 0.25_f64.powi(k)).collect();
        let ns: Vec<f64> = (0..5).map(|k| 0.5_f64.powi(k)).collect();
        let grid = generate_dense_grid(&p, &ms, &ns, 1, &NoiseModel::None, 0).unwrap();
        let config = FitConfig {
            restarts: 16,
            eps0_mode: Eps0Mode::FixedFromClasses { classes: 1000 },
            ..FitConfig::with_seed(2)
        };
        let cells = subsample_stability(&grid, &[12, 16], 3, &config).unwrap();
        assert_eq!(cells.len(), 2);
        for c in &cells {
            assert_eq!(c.repeats, 3);
            assert!(c.mu_mean.abs() < 1e-5, "mu_mean {}", c.mu_mean);
            assert!(c.mu_std < 1e-5, "mu_std {}", c.mu_std);
            assert!(c.sigma_std < 1e-5, "sigma_std {}", c.sigma_std);
        }
    }

    #[test]
    fn oversized_subsample_rejected() {
        let p = preset("imagenet").unwrap().params;
        let grid = generate_dense_grid(&p, &[1.0, 0.5], &[1.0, 0.5], 1, &NoiseModel::None, 0).unwrap();
        let got = subsample_stability(&grid, &[9], 2, &FitConfig::with_seed(0));
        assert!(matches!(got, Err(Error::IllPosed(_))));
    }
}
