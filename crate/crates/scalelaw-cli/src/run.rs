//! Subcommand handlers: load inputs, call the library, write artifacts,
//! print the chosen stdout rendering.

use crate::{Command, DesignCmd, FitArgs, Format, OutArgs, SampleMode, SimulateCmd};
use scalelaw::design::{self, DesignAnswer, PruneDesignSpace};
use scalelaw::extrapolate::{self, ExtrapolationReport, SweepOutcome};
use scalelaw::fit::{self, CvData, ExponentFix, FitConfig, FitReport, FittedParams, PointKey};
use scalelaw::forms::{invariant_mstar, DenseParams, Eps0Mode, PruneJointParams};
use scalelaw::presets::{self, Task};
use scalelaw::synth::{self, StabilityCell};
use scalelaw::{io, Error, Result};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

pub fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::FitDense { input, eps0, fit, out } => fit_dense(&input, eps0, &fit, &out),
        Command::FitPrune { input, fit, out } => fit_prune(&input, &fit, &out),
        Command::FitPruneJoint { input, fix_phi, fix_psi, fit, out } => {
            fit_prune_joint(&input, fix_phi, fix_psi, &fit, &out)
        }
        Command::Cv { input, folds, eps0, fix_phi, fix_psi, fit, out } => {
            cv(&input, folds, eps0, fix_phi, fix_psi, &fit, &out)
        }
        Command::Extrapolate { input, m_cut, n_cut, l_cut, w_cut, eps0, fit, out } => {
            extrapolate_cmd(&input, m_cut, n_cut, l_cut, w_cut, eps0, &fit, &out)
        }
        Command::Design(d) => design_cmd(d),
        Command::Simulate(s) => simulate_cmd(s),
        Command::Stability { input, sizes, repeats, mode, eps0, fit, out } => {
            stability(&input, &sizes, repeats, mode, eps0, &fit, &out)
        }
        Command::Presets { format } => presets_cmd(format),
    }
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Pruning tables announce themselves by the density column.
fn is_prune_table(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|l| l.to_ascii_lowercase().contains("density"))
        .unwrap_or(false)
}

fn write_artifact(out: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", out.display()))))?;
    io::atomic_write(&out.join(name), text.as_bytes())
}

fn print_rendering(format: Format, json_text: &str, csv_text: &str) {
    match format {
        Format::Json => print!("{json_text}"),
        Format::Csv => print!("{csv_text}"),
    }
}

fn fit_config(fit: &FitArgs, eps0: Eps0Mode, fix_phi: bool, fix_psi: bool) -> FitConfig {
    let mut c = FitConfig::with_seed(fit.seed);
    c.restarts = fit.restarts;
    c.eps0_mode = eps0;
    c.fixed_exponents = ExponentFix { phi: fix_phi, psi: fix_psi };
    c
}

/// Per-point table behind the projection plots. Columns depend on the
/// fitted form; see docs/report-schema.md.
fn landscape_csv(report: &FitReport) -> String {
    let mut s = String::new();
    match &report.params {
        FittedParams::Dense(_) => {
            s.push_str("log10_m,log10_n,actual,estimated\n");
            for p in &report.per_point {
                if let PointKey::Dense { m, n } = p.key {
                    let _ = writeln!(s, "{},{},{},{}", m.log10(), n.log10(), p.actual, p.estimated);
                }
            }
        }
        FittedParams::PruneSingle { .. } => {
            s.push_str("density,actual,estimated\n");
            for p in &report.per_point {
                if let PointKey::Curve { d } = p.key {
                    let _ = writeln!(s, "{},{},{}", d, p.actual, p.estimated);
                }
            }
        }
        FittedParams::PruneJoint(prm) => {
            s.push_str("log10_mstar,depth,width_scale,density,n,actual,estimated\n");
            for p in &report.per_point {
                if let PointKey::Prune { l, w, d, n } = p.key {
                    let mstar = invariant_mstar(l, w, d, prm.phi, prm.psi);
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        mstar.log10(),
                        l,
                        w,
                        d,
                        n,
                        p.actual,
                        p.estimated
                    );
                }
            }
        }
    }
    s
}

fn finish_fit(kind: &str, inputs: Value, report: &FitReport, out: &OutArgs) -> Result<ExitCode> {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let payload = json!({ "inputs": inputs, "report": report });
    let report_text = io::report_json(kind, &payload)?;
    let table = landscape_csv(report);
    write_artifact(&out.out, "report.json", &report_text)?;
    write_artifact(&out.out, "landscape.csv", &table)?;
    print_rendering(out.format, &report_text, &table);
    Ok(ExitCode::SUCCESS)
}

fn fit_dense(input: &Path, eps0: Eps0Mode, fit: &FitArgs, out: &OutArgs) -> Result<ExitCode> {
    let data = io::load_dense_csv(&read_input(input)?)?;
    let config = fit_config(fit, eps0, false, false);
    let report = fit::fit_dense(&data, &config)?;
    let inputs = json!({
        "input": input.display().to_string(),
        "seed": fit.seed,
        "restarts": fit.restarts,
        "eps0": eps0,
    });
    finish_fit("fit-dense", inputs, &report, out)
}

fn fit_prune(input: &Path, fit: &FitArgs, out: &OutArgs) -> Result<ExitCode> {
    let (rows, warnings) = io::load_prune_csv(&read_input(input)?)?;
    let mut groups: Vec<(u64, u64, u64)> = rows
        .iter()
        .map(|p| (p.l.to_bits(), p.w.to_bits(), p.n.to_bits()))
        .collect();
    groups.sort_unstable();
    groups.dedup();
    if groups.len() != 1 {
        return Err(Error::Invalid(format!(
            "single-curve fit expects one (depth, width_scale, n) configuration, found {}; use fit-prune-joint",
            groups.len()
        )));
    }
    let eps_np = rows[0].eps_np;
    let curve: Vec<(f64, f64)> = rows.iter().map(|p| (p.d, p.error)).collect();
    let config = fit_config(fit, Eps0Mode::FreeParameter, false, false);
    let mut report = fit::fit_prune_single(&curve, eps_np, &config)?;
    report.warnings.splice(0..0, warnings);
    let inputs = json!({
        "input": input.display().to_string(),
        "seed": fit.seed,
        "restarts": fit.restarts,
    });
    finish_fit("fit-prune", inputs, &report, out)
}

fn fit_prune_joint(
    input: &Path,
    fix_phi: bool,
    fix_psi: bool,
    fit: &FitArgs,
    out: &OutArgs,
) -> Result<ExitCode> {
    let (rows, warnings) = io::load_prune_csv(&read_input(input)?)?;
    let config = fit_config(fit, Eps0Mode::FreeParameter, fix_phi, fix_psi);
    let mut report = fit::fit_prune_joint(&rows, &config)?;
    report.warnings.splice(0..0, warnings);
    let inputs = json!({
        "input": input.display().to_string(),
        "seed": fit.seed,
        "restarts": fit.restarts,
        "fix_phi": fix_phi,
        "fix_psi": fix_psi,
    });
    finish_fit("fit-prune-joint", inputs, &report, out)
}

fn cv(
    input: &Path,
    folds: usize,
    eps0: Eps0Mode,
    fix_phi: bool,
    fix_psi: bool,
    fit: &FitArgs,
    out: &OutArgs,
) -> Result<ExitCode> {
    let text = read_input(input)?;
    let config = fit_config(fit, eps0, fix_phi, fix_psi);
    let inputs = json!({
        "input": input.display().to_string(),
        "seed": fit.seed,
        "restarts": fit.restarts,
        "folds": folds,
        "eps0": eps0,
    });
    if is_prune_table(&text) {
        let (rows, warnings) = io::load_prune_csv(&text)?;
        let mut report = fit::cross_validate(CvData::PruneJoint(&rows), folds, &config)?;
        report.warnings.splice(0..0, warnings);
        finish_fit("cv", inputs, &report, out)
    } else {
        let data = io::load_dense_csv(&text)?;
        let report = fit::cross_validate(CvData::Dense(&data), folds, &config)?;
        finish_fit("cv", inputs, &report, out)
    }
}

fn extrapolation_points_csv(rep: &ExtrapolationReport, prune: bool) -> String {
    let mut s = String::from(if prune {
        "depth,width_scale,density,n,actual,predicted_best,delta_best,predicted_mean,predicted_std\n"
    } else {
        "log10_m,log10_n,actual,predicted_best,delta_best,predicted_mean,predicted_std\n"
    });
    for p in &rep.points {
        match p.key {
            PointKey::Dense { m, n } => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    m.log10(),
                    n.log10(),
                    p.actual,
                    p.predicted_best,
                    p.delta_best,
                    p.predicted_mean,
                    p.predicted_std
                );
            }
            PointKey::Prune { l, w, d, n } => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    l, w, d, n, p.actual, p.predicted_best, p.delta_best, p.predicted_mean, p.predicted_std
                );
            }
            PointKey::Curve { .. } => {}
        }
    }
    s
}

fn extrapolate_cmd(
    input: &Path,
    m_cut: Option<Vec<f64>>,
    n_cut: Option<Vec<f64>>,
    l_cut: Option<f64>,
    w_cut: Option<f64>,
    eps0: Eps0Mode,
    fit: &FitArgs,
    out: &OutArgs,
) -> Result<ExitCode> {
    let text = read_input(input)?;
    let config = fit_config(fit, eps0, false, false);
    if is_prune_table(&text) {
        if m_cut.is_some() || n_cut.is_some() {
            return Err(Error::Invalid(
                "pruning tables train on an architecture corner; use --l-cut and --w-cut".into(),
            ));
        }
        let (Some(l_cut), Some(w_cut)) = (l_cut, w_cut) else {
            return Err(Error::Invalid("pruning tables need --l-cut and --w-cut".into()));
        };
        let (rows, warnings) = io::load_prune_csv(&text)?;
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        let rep =
            extrapolate::extrapolate_prune(&rows, |l, w| l <= l_cut && w <= w_cut, &config)?;
        let inputs = json!({
            "input": input.display().to_string(),
            "seed": fit.seed,
            "restarts": fit.restarts,
            "l_cut": l_cut,
            "w_cut": w_cut,
        });
        let report_text = io::report_json("extrapolate", &json!({ "inputs": inputs, "report": rep }))?;
        let table = extrapolation_points_csv(&rep, true);
        write_artifact(&out.out, "report.json", &report_text)?;
        write_artifact(&out.out, "extrapolation_grid.csv", &table)?;
        print_rendering(out.format, &report_text, &table);
        return Ok(ExitCode::SUCCESS);
    }

    if l_cut.is_some() || w_cut.is_some() {
        return Err(Error::Invalid(
            "--l-cut/--w-cut apply to pruning tables; use --m-cut and --n-cut".into(),
        ));
    }
    let (Some(m_cuts), Some(n_cuts)) = (m_cut, n_cut) else {
        return Err(Error::Invalid("dense tables need --m-cut and --n-cut".into()));
    };
    let data = io::load_dense_csv(&text)?;
    let inputs = json!({
        "input": input.display().to_string(),
        "seed": fit.seed,
        "restarts": fit.restarts,
        "m_cut": m_cuts,
        "n_cut": n_cuts,
    });
    if m_cuts.len() == 1 && n_cuts.len() == 1 {
        let rep = extrapolate::extrapolate_dense(&data, m_cuts[0], n_cuts[0], &config)?;
        let report_text = io::report_json("extrapolate", &json!({ "inputs": inputs, "report": rep }))?;
        let table = extrapolation_points_csv(&rep, false);
        write_artifact(&out.out, "report.json", &report_text)?;
        write_artifact(&out.out, "extrapolation_grid.csv", &table)?;
        print_rendering(out.format, &report_text, &table);
        return Ok(ExitCode::SUCCESS);
    }

    let cells = extrapolate::extrapolation_sweep(&data, &m_cuts, &n_cuts, &config)?;
    let mut table =
        String::from("m_cut,n_cut,outcome,mu,sigma,train_points,target_points,excluded_points,reason\n");
    for c in &cells {
        match &c.outcome {
            SweepOutcome::Evaluated { mu, sigma, train_points, target_points, excluded_points } => {
                let _ = writeln!(
                    table,
                    "{},{},evaluated,{},{},{},{},{},",
                    c.m_cut, c.n_cut, mu, sigma, train_points, target_points, excluded_points
                );
            }
            SweepOutcome::Skipped { reason } => {
                let _ = writeln!(
                    table,
                    "{},{},skipped,,,,,,\"{}\"",
                    c.m_cut,
                    c.n_cut,
                    reason.replace('"', "'")
                );
            }
        }
    }
    let report_text = io::report_json("extrapolate-sweep", &json!({ "inputs": inputs, "cells": cells }))?;
    write_artifact(&out.out, "report.json", &report_text)?;
    write_artifact(&out.out, "extrapolation_grid.csv", &table)?;
    print_rendering(out.format, &report_text, &table);
    Ok(ExitCode::SUCCESS)
}

fn design_answer_csv(a: &DesignAnswer) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in &a.values {
        let _ = writeln!(s, "{k},{v}");
    }
    if let Some(e) = a.achieved_error {
        let _ = writeln!(s, "achieved_error,{e}");
    }
    let _ = writeln!(s, "feasible,{}", u8::from(a.feasible));
    s
}

fn finish_design(inputs: Value, answer: DesignAnswer, out: &OutArgs) -> Result<ExitCode> {
    let report_text = io::report_json("design", &json!({ "inputs": inputs, "answer": answer }))?;
    let table = design_answer_csv(&answer);
    write_artifact(&out.out, "report.json", &report_text)?;
    print_rendering(out.format, &report_text, &table);
    if answer.feasible {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("code:infeasible: {}", answer.note.as_deref().unwrap_or("no feasible answer"));
        Ok(ExitCode::from(4))
    }
}

fn design_cmd(cmd: DesignCmd) -> Result<ExitCode> {
    match cmd {
        DesignCmd::MaxModel { preset, n_lim, t, fractional, out } => {
            let ps = presets::preset(&preset)?;
            let n_frac = if fractional { n_lim } else { n_lim / ps.base_dataset_size };
            let mut ans = design::max_useful_model(&ps.params, n_frac, t)?;
            let m_frac = ans.values["m_max"];
            ans.values.insert("m_max_params".into(), m_frac * ps.base_model_size);
            ans.values.insert("n_lim_fraction".into(), n_frac);
            let inputs = json!({
                "preset": ps.name, "n_lim": n_lim, "t": t, "fractional": fractional,
            });
            finish_design(inputs, ans, &out)
        }
        DesignCmd::MaxData { preset, m_lim, t, fractional, out } => {
            let ps = presets::preset(&preset)?;
            let m_frac = if fractional { m_lim } else { m_lim / ps.base_model_size };
            let mut ans = design::max_useful_data(&ps.params, m_frac, t)?;
            let n_frac = ans.values["n_max"];
            ans.values.insert("n_max_examples".into(), n_frac * ps.base_dataset_size);
            ans.values.insert("m_lim_fraction".into(), m_frac);
            let inputs = json!({
                "preset": ps.name, "m_lim": m_lim, "t": t, "fractional": fractional,
            });
            finish_design(inputs, ans, &out)
        }
        DesignCmd::OptimalPair { preset, excess, fractional, out } => {
            let ps = presets::preset(&preset)?;
            let mut ans = design::optimal_compute_pair(&ps.params, excess)?;
            let (m, n) = (ans.values["m"], ans.values["n"]);
            ans.values.insert("m_params".into(), m * ps.base_model_size);
            ans.values.insert("n_examples".into(), n * ps.base_dataset_size);
            let inputs = json!({
                "preset": ps.name, "excess": excess, "fractional": fractional,
            });
            finish_design(inputs, ans, &out)
        }
        DesignCmd::Contour { preset, target, m_min, m_max, points, fast, fractional, out } => {
            contour(&preset, target, m_min, m_max, points, fast, fractional, &out)
        }
        DesignCmd::PruneMin {
            preset,
            joint,
            n,
            target,
            base_depth,
            base_width,
            l_range,
            w_range,
            coarse,
            fractional,
            out,
        } => {
            let ps = presets::preset(&preset)?;
            let joint = joint_params(&joint)?;
            let n_frac = match n {
                None => 1.0,
                Some(n) if fractional => n,
                Some(n) => n / ps.base_dataset_size,
            };
            let space = PruneDesignSpace { l_range, w_range, coarse };
            let inputs = json!({
                "preset": ps.name, "joint": joint, "n_fraction": n_frac,
                "targets": target, "base_depth": base_depth, "base_width": base_width,
            });
            if target.len() == 1 {
                let ans = design::prune_min_params(
                    &ps.params, base_depth, base_width, &joint, n_frac, target[0], &space,
                )?;
                return finish_design(inputs, ans, &out);
            }
            let curve = design::prune_min_param_envelope(
                &ps.params, base_depth, base_width, &joint, n_frac, &target, &space,
            )?;
            let mut table = String::from("target,feasible,cost,depth,width_scale,density,achieved\n");
            for (t, a) in &curve {
                if a.feasible {
                    let _ = writeln!(
                        table,
                        "{},1,{},{},{},{},{}",
                        t,
                        a.values["cost"],
                        a.values["depth"],
                        a.values["width_scale"],
                        a.values["density"],
                        a.achieved_error.unwrap_or(f64::NAN)
                    );
                } else {
                    let _ = writeln!(table, "{t},0,,,,,");
                }
            }
            let answers: Vec<&DesignAnswer> = curve.iter().map(|(_, a)| a).collect();
            let report_text =
                io::report_json("design-envelope", &json!({ "inputs": inputs, "answers": answers }))?;
            write_artifact(&out.out, "report.json", &report_text)?;
            write_artifact(&out.out, "envelope.csv", &table)?;
            print_rendering(out.format, &report_text, &table);
            if curve.iter().any(|(_, a)| a.feasible) {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("code:infeasible: no target level in the sweep is reachable");
                Ok(ExitCode::from(4))
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn contour(
    preset: &str,
    target: f64,
    m_min: f64,
    m_max: f64,
    points: usize,
    fast: bool,
    fractional: bool,
    out: &OutArgs,
) -> Result<ExitCode> {
    let ps = presets::preset(preset)?;
    if !(m_min > 0.0) || !(m_max > m_min) || points < 2 {
        return Err(Error::Invalid("contour needs 0 < m-min < m-max and points >= 2".into()));
    }
    let (lo, hi) = if fractional {
        (m_min, m_max)
    } else {
        (m_min / ps.base_model_size, m_max / ps.base_model_size)
    };
    let ms: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    let pts = if fast {
        design::error_contour_power_region(&ps.params, target, &ms)?
    } else {
        design::error_contour(&ps.params, target, &ms)?
    };
    let mut table = String::from("m,n,achieved,m_params,n_examples\n");
    for p in &pts {
        match (p.n, p.achieved) {
            (Some(n), Some(a)) => {
                let _ = writeln!(
                    table,
                    "{},{},{},{},{}",
                    p.m,
                    n,
                    a,
                    p.m * ps.base_model_size,
                    n * ps.base_dataset_size
                );
            }
            _ => {
                let _ = writeln!(table, "{},,,{},", p.m, p.m * ps.base_model_size);
            }
        }
    }
    let omitted: Vec<f64> = pts.iter().filter(|p| p.n.is_none()).map(|p| p.m).collect();
    let note = if omitted.is_empty() {
        "every size in the sweep reaches the target".to_string()
    } else {
        format!("{} model-limited sizes cannot reach the target at any n: {omitted:?}", omitted.len())
    };
    let inputs = json!({
        "preset": ps.name, "target": target, "m_min": m_min, "m_max": m_max,
        "points": points, "fast": fast, "fractional": fractional,
    });
    let report_text = io::report_json(
        "design-contour",
        &json!({ "inputs": inputs, "note": note, "points": pts }),
    )?;
    write_artifact(&out.out, "report.json", &report_text)?;
    write_artifact(&out.out, "contour.csv", &table)?;
    print_rendering(out.format, &report_text, &table);
    if omitted.len() == pts.len() {
        eprintln!("code:infeasible: {note}");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn exactly<const K: usize>(what: &str, v: &[f64]) -> Result<[f64; K]> {
    v.try_into().map_err(|_| {
        Error::Invalid(format!("{what} needs exactly {K} comma-separated values, got {}", v.len()))
    })
}

fn joint_params(v: &[f64]) -> Result<PruneJointParams> {
    let [eps_up, gamma, p_prime, phi, psi] = exactly("--joint (eps_up,gamma,p_prime,phi,psi)", v)?;
    PruneJointParams::new(eps_up, gamma, p_prime, phi, psi)
}

fn truth_params(preset: &Option<String>, truth: &Option<Vec<f64>>) -> Result<DenseParams> {
    match (truth, preset) {
        (Some(v), _) => {
            let [alpha, beta, b, c_inf, eta, eps0] =
                exactly("--truth (alpha,beta,b,c_inf,eta,eps0)", v)?;
            DenseParams::with_free_eps0(alpha, beta, b, c_inf, eta, eps0)
        }
        (None, Some(name)) => Ok(presets::preset(name)?.params),
        (None, None) => Err(Error::Invalid("pass --preset or --truth".into())),
    }
}

fn simulate_cmd(cmd: SimulateCmd) -> Result<ExitCode> {
    match cmd {
        SimulateCmd::Dense {
            preset,
            truth,
            m_scales,
            n_scales,
            levels,
            replicates,
            noise,
            seed,
            out,
        } => {
            let p = truth_params(&preset, &truth)?;
            let ms: Vec<f64> =
                m_scales.unwrap_or_else(|| (0..levels).map(|k| 4f64.powi(-(k as i32))).collect());
            let ns: Vec<f64> =
                n_scales.unwrap_or_else(|| (0..levels).map(|k| 2f64.powi(-(k as i32))).collect());
            let rows = synth::generate_dense_grid(&p, &ms, &ns, replicates as usize, &noise, seed)?;
            let csv = io::emit_dense_csv(&rows);
            write_artifact(&out, "dense.csv", &csv)?;
            println!("wrote dense.csv ({} rows)", rows.len());
            Ok(ExitCode::SUCCESS)
        }
        SimulateCmd::Prune {
            preset,
            truth,
            joint,
            base_depth,
            base_width,
            depths,
            widths,
            ns,
            ladder,
            replicates,
            noise,
            seed,
            out,
        } => {
            let dense = truth_params(&preset, &truth)?;
            let joint = joint_params(&joint)?;
            let densities: Vec<f64> = (0..=ladder).map(|i| 0.8f64.powi(i as i32)).collect();
            let rows = synth::generate_prune_family(
                &dense, base_depth, base_width, &joint, &depths, &widths, &ns, &densities,
                replicates as usize, &noise, seed,
            )?;
            let csv = io::emit_prune_csv(&rows);
            write_artifact(&out, "prune.csv", &csv)?;
            println!("wrote prune.csv ({} rows)", rows.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn stability_csv(cells: &[StabilityCell]) -> String {
    let mut s = String::from("t,repeats,mu_mean,mu_std,sigma_mean,sigma_std\n");
    for c in cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.t, c.repeats, c.mu_mean, c.mu_std, c.sigma_mean, c.sigma_std
        );
    }
    s
}

fn stability(
    input: &Path,
    sizes: &[usize],
    repeats: usize,
    mode: SampleMode,
    eps0: Eps0Mode,
    fit: &FitArgs,
    out: &OutArgs,
) -> Result<ExitCode> {
    let text = read_input(input)?;
    let config = fit_config(fit, eps0, false, false);
    let cells = if is_prune_table(&text) {
        let (rows, warnings) = io::load_prune_csv(&text)?;
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        match mode {
            SampleMode::Curves => synth::subsample_stability_prune(&rows, sizes, repeats, &config)?,
            SampleMode::Points => {
                synth::subsample_stability_prune_points(&rows, sizes, repeats, &config)?
            }
        }
    } else {
        let data = io::load_dense_csv(&text)?;
        synth::subsample_stability(&data, sizes, repeats, &config)?
    };
    let inputs = json!({
        "input": input.display().to_string(),
        "seed": fit.seed,
        "restarts": fit.restarts,
        "sizes": sizes,
        "repeats": repeats,
    });
    let report_text = io::report_json("stability", &json!({ "inputs": inputs, "cells": cells }))?;
    let table = stability_csv(&cells);
    write_artifact(&out.out, "report.json", &report_text)?;
    write_artifact(&out.out, "stability.csv", &table)?;
    print_rendering(out.format, &report_text, &table);
    Ok(ExitCode::SUCCESS)
}

fn presets_cmd(format: Format) -> Result<ExitCode> {
    let catalog = presets::catalog();
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&catalog)
                .map_err(|e| Error::Invalid(format!("catalog serialization: {e}")))?;
            println!("{text}");
        }
        Format::Csv => {
            let mut s = String::from(
                "name,task,alpha,beta,b,c_inf,eta,eps0,units,base_model_size,base_dataset_size\n",
            );
            for p in &catalog {
                let task = match p.task {
                    Task::Vision => "vision",
                    Task::Language => "language",
                };
                let q = &p.params;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},\"{}\",{},{}",
                    p.name,
                    task,
                    q.alpha,
                    q.beta,
                    q.b,
                    q.c_inf,
                    q.eta,
                    q.eps0,
                    p.units,
                    p.base_model_size,
                    p.base_dataset_size
                );
            }
            print!("{s}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
