//! Local minimizers for sum-of-squares objectives.
//!
//! [`Minimizer::minimize`] runs damped least-squares descent (Levenberg
//! style) with a central-difference Jacobian, and hands over to a
//! Nelder-Mead simplex when the normal equations stall or go non-finite.
//! Both paths are fully deterministic in the starting point, so multi-start
//! fits stay reproducible regardless of execution order.
//!
//! Parameter spaces here are unconstrained; callers that need positivity
//! optimize the log of their parameters.

/// Outcome of one local minimization.
#[derive(Clone, Debug)]
pub struct MinResult {
    pub u: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// True when the simplex fallback produced the final point.
    pub used_fallback: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct Minimizer {
    pub max_iterations: usize,
    /// Relative objective-change threshold for convergence.
    pub tolerance: f64,
}

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;
const LAMBDA_SHRINK: f64 = 3.0;
const LAMBDA_GROW: f64 = 10.0;

impl Minimizer {
    /// Minimizes `sum_i r_i(u)^2`. `residuals` writes the residual vector for
    /// a point into its output slice; `n_res` is the (fixed) vector length.
    pub fn minimize<F>(&self, n_res: usize, residuals: F, u0: &[f64]) -> MinResult
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let k = u0.len();
        let mut u = u0.to_vec();
        let mut r = vec![0.0; n_res];
        residuals(&u, &mut r);
        let mut obj = sumsq(&r);
        if !obj.is_finite() {
            // hopeless start for the gradient path; let the simplex try
            let nm = self.nelder_mead(n_res, &residuals, &u, self.max_iterations);
            return MinResult { used_fallback: true, ..nm };
        }

        let mut lambda = LAMBDA_INIT;
        let mut cols = vec![vec![0.0; n_res]; k]; // Jacobian columns
        let (mut rp, mut rm) = (vec![0.0; n_res], vec![0.0; n_res]);
        let mut u_try = vec![0.0; k];
        let mut r_try = vec![0.0; n_res];
        let mut small_steps = 0usize;

        for iter in 0..self.max_iterations {
            // central-difference Jacobian
            let mut finite = true;
            for j in 0..k {
                let h = 1e-6 * u[j].abs().max(1.0);
                let keep = u[j];
                u[j] = keep + h;
                residuals(&u, &mut rp);
                u[j] = keep - h;
                residuals(&u, &mut rm);
                u[j] = keep;
                for i in 0..n_res {
                    let v = (rp[i] - rm[i]) / (2.0 * h);
                    cols[j][i] = v;
                    finite &= v.is_finite();
                }
            }
            if !finite {
                let budget = self.max_iterations - iter;
                let nm = self.nelder_mead(n_res, &residuals, &u, budget);
                return if nm.objective < obj {
                    MinResult { used_fallback: true, iterations: iter + nm.iterations, ..nm }
                } else {
                    MinResult { u, objective: obj, iterations: iter, converged: false, used_fallback: true }
                };
            }

            // normal equations
            let mut h_mat = vec![0.0; k * k];
            let mut g = vec![0.0; k];
            for a in 0..k {
                for b in a..k {
                    let d = dot(&cols[a], &cols[b]);
                    h_mat[a * k + b] = d;
                    h_mat[b * k + a] = d;
                }
                g[a] = dot(&cols[a], &r);
            }
            if g.iter().map(|v| v.abs()).fold(0.0, f64::max) <= 1e-14 * obj.max(1e-300) {
                return MinResult { u, objective: obj, iterations: iter, converged: true, used_fallback: false };
            }

            // escalate damping until a step improves the objective
            let mut accepted = false;
            while lambda <= LAMBDA_MAX {
                let mut damped = h_mat.clone();
                for a in 0..k {
                    let diag = h_mat[a * k + a].max(1e-300);
                    damped[a * k + a] = diag * (1.0 + lambda);
                }
                if let Some(du) = solve_spd(&mut damped, &g, k) {
                    for j in 0..k {
                        u_try[j] = u[j] - du[j];
                    }
                    residuals(&u_try, &mut r_try);
                    let obj_try = sumsq(&r_try);
                    if obj_try.is_finite() && obj_try < obj {
                        let rel_drop = (obj - obj_try) / obj.max(1e-300);
                        u.copy_from_slice(&u_try);
                        r.copy_from_slice(&r_try);
                        obj = obj_try;
                        lambda = (lambda / LAMBDA_SHRINK).max(1e-12);
                        accepted = true;
                        if rel_drop <= self.tolerance {
                            small_steps += 1;
                            if small_steps >= 2 {
                                return MinResult {
                                    u,
                                    objective: obj,
                                    iterations: iter + 1,
                                    converged: true,
                                    used_fallback: false,
                                };
                            }
                        } else {
                            small_steps = 0;
                        }
                        break;
                    }
                }
                lambda *= LAMBDA_GROW;
            }
            if !accepted {
                // stalled normal equations: ill-conditioned locally
                let budget = self.max_iterations - iter;
                let nm = self.nelder_mead(n_res, &residuals, &u, budget);
                return if nm.objective < obj {
                    MinResult { used_fallback: true, iterations: iter + nm.iterations, ..nm }
                } else {
                    MinResult { u, objective: obj, iterations: iter, converged: true, used_fallback: false }
                };
            }
        }
        MinResult { u, objective: obj, iterations: self.max_iterations, converged: false, used_fallback: false }
    }

    /// Nelder-Mead simplex with the classic coefficients. Used directly for
    /// smoke tests and as the fallback path above.
    pub fn nelder_mead<F>(&self, n_res: usize, residuals: &F, u0: &[f64], budget: usize) -> MinResult
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let k = u0.len();
        let mut r = vec![0.0; n_res];
        let eval = |u: &[f64], r: &mut Vec<f64>| -> f64 {
            residuals(u, r);
            let s = sumsq(r);
            if s.is_finite() {
                s
            } else {
                f64::INFINITY
            }
        };

        // initial simplex: u0 plus one perturbed vertex per coordinate
        let mut verts: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
        verts.push(u0.to_vec());
        for j in 0..k {
            let mut v = u0.to_vec();
            v[j] += 0.25 * u0[j].abs().max(1.0);
            verts.push(v);
        }
        let mut f: Vec<f64> = verts.iter().map(|v| eval(v, &mut r)).collect();

        let mut iters = 0usize;
        while iters < budget {
            iters += 1;
            // order: best first; ties keep insertion order for determinism
            let mut idx: Vec<usize> = (0..=k).collect();
            idx.sort_by(|&a, &b| f[a].partial_cmp(&f[b]).unwrap_or(std::cmp::Ordering::Equal));
            let best = idx[0];
            let worst = idx[k];
            let second_worst = idx[k - 1];

            let spread = f[worst] - f[best];
            if spread <= self.tolerance * f[best].abs().max(1e-300) {
                break;
            }

            // centroid of all but the worst
            let mut cen = vec![0.0; k];
            for &i in idx.iter().take(k) {
                for j in 0..k {
                    cen[j] += verts[i][j];
                }
            }
            for c in cen.iter_mut() {
                *c /= k as f64;
            }

            let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
                a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
            };

            // reflect
            let refl = blend(&cen, &verts[worst], -1.0);
            let f_refl = eval(&refl, &mut r);
            if f_refl < f[best] {
                // expand
                let exp = blend(&cen, &verts[worst], -2.0);
                let f_exp = eval(&exp, &mut r);
                if f_exp < f_refl {
                    verts[worst] = exp;
                    f[worst] = f_exp;
                } else {
                    verts[worst] = refl;
                    f[worst] = f_refl;
                }
                continue;
            }
            if f_refl < f[second_worst] {
                verts[worst] = refl;
                f[worst] = f_refl;
                continue;
            }
            // contract
            let con = if f_refl < f[worst] {
                blend(&cen, &refl, 0.5)
            } else {
                blend(&cen, &verts[worst], 0.5)
            };
            let f_con = eval(&con, &mut r);
            if f_con < f[worst].min(f_refl) {
                verts[worst] = con;
                f[worst] = f_con;
                continue;
            }
            // shrink toward best
            let anchor = verts[best].clone();
            for i in 0..=k {
                if i == best {
                    continue;
                }
                verts[i] = blend(&anchor, &verts[i], 0.5);
                f[i] = eval(&verts[i], &mut r);
            }
        }

        let (mut bi, mut bf) = (0usize, f[0]);
        for (i, &fi) in f.iter().enumerate() {
            if fi < bf {
                bi = i;
                bf = fi;
            }
        }
        MinResult {
            u: verts[bi].clone(),
            objective: bf,
            iterations: iters,
            converged: iters < budget,
            used_fallback: false,
        }
    }
}

fn sumsq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = rhs` for symmetric positive-definite `A` (row-major, k*k)
/// by Cholesky factorization in place. Returns None when a pivot collapses.
fn solve_spd(a: &mut [f64], rhs: &[f64], k: usize) -> Option<Vec<f64>> {
    // factor: A = L L^T, L stored in the lower triangle
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for t in 0..j {
                s -= a[i * k + t] * a[j * k + t];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                a[i * k + i] = s.sqrt();
            } else {
                a[i * k + j] = s / a[j * k + j];
            }
        }
    }
    // forward then backward substitution
    let mut x = rhs.to_vec();
    for i in 0..k {
        for j in 0..i {
            x[i] = x[i] - a[i * k + j] * x[j];
        }
        x[i] /= a[i * k + i];
    }
    for i in (0..k).rev() {
        for j in i + 1..k {
            x[i] = x[i] - a[j * k + i] * x[j];
        }
        x[i] /= a[i * k + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: Minimizer = Minimizer { max_iterations: 500, tolerance: 1e-12 };

    #[test]
    fn linear_least_squares_exact() {
        // r_i = u0 + u1 * t_i - y_i with y from (2, -3)
        let ts: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 - 3.0 * t).collect();
        let res = M.minimize(
            ts.len(),
            |u: &[f64], out: &mut [f64]| {
                for (i, t) in ts.iter().enumerate() {
                    out[i] = u[0] + u[1] * t - ys[i];
                }
            },
            &[0.0, 0.0],
        );
        assert!(res.objective < 1e-18, "obj {}", res.objective);
        assert!((res.u[0] - 2.0).abs() < 1e-8);
        assert!((res.u[1] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_valley() {
        let res = M.minimize(
            2,
            |u: &[f64], out: &mut [f64]| {
                out[0] = 1.0 - u[0];
                out[1] = 10.0 * (u[1] - u[0] * u[0]);
            },
            &[-1.2, 1.0],
        );
        assert!(res.objective < 1e-16, "obj {}", res.objective);
        assert!((res.u[0] - 1.0).abs() < 1e-6);
        assert!((res.u[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exponential_decay_recovery() {
        let ts: Vec<f64> = (1..=20).map(|i| 0.3 * i as f64).collect();
        let truth = 0.7;
        let ys: Vec<f64> = ts.iter().map(|t| (-truth * t).exp()).collect();
        // optimize log k for positivity, as the fit layer does
        let res = M.minimize(
            ts.len(),
            |u: &[f64], out: &mut [f64]| {
                let kk = u[0].exp();
                for (i, t) in ts.iter().enumerate() {
                    out[i] = (-kk * t).exp() - ys[i];
                }
            },
            &[1.5f64.ln()],
        );
        assert!((res.u[0].exp() - truth).abs() < 1e-9, "k {}", res.u[0].exp());
    }

    #[test]
    fn nelder_mead_quadratic_bowl() {
        let res = M.nelder_mead(
            3,
            &|u: &[f64], out: &mut [f64]| {
                out[0] = u[0] - 1.0;
                out[1] = u[1] + 2.0;
                out[2] = u[2] - 0.5;
            },
            &[5.0, 5.0, 5.0],
            2000,
        );
        assert!(res.objective < 1e-14, "obj {}", res.objective);
    }

    #[test]
    fn survives_non_finite_start() {
        // residual is NaN at the start but finite near the solution
        let res = M.minimize(
            1,
            |u: &[f64], out: &mut [f64]| {
                out[0] = if u[0] > 10.0 { f64::NAN } else { u[0] - 1.0 };
            },
            &[20.0],
        );
        assert!(res.used_fallback);
    }

    #[test]
    fn dead_parameter_does_not_derail() {
        // second coordinate has no effect: Jacobian column is zero
        let res = M.minimize(
            2,
            |u: &[f64], out: &mut [f64]| {
                out[0] = u[0] - 4.0;
                out[1] = 0.0 * u[1];
            },
            &[0.0, 7.0],
        );
        assert!((res.u[0] - 4.0).abs() < 1e-8, "u0 {}", res.u[0]);
        assert!(res.objective < 1e-16);
    }
}
