//! Minimization drivers over an energy/gradient callable: gradient descent,
//! Adam, BFGS with a backtracking line search, and a derivative-free
//! Nelder-Mead baseline.
//!
//! Stopping follows the two-criteria rule: the run ends when the energy
//! change between successive epochs drops below `f_tol`, when the gradient
//! norm drops below `g_tol` (gradient-based methods), or at `max_iter`.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gd,
    Adam,
    Bfgs,
    /// Nelder-Mead simplex; comparison baseline only.
    GradientFree,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub max_iter: usize,
    pub f_tol: f64,
    pub g_tol: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(method: Method) -> Self {
        OptimizerConfig {
            method,
            learning_rate: 0.01,
            max_iter: if method == Method::GradientFree { 200 } else { 100 },
            f_tol: 1e-6,
            g_tol: 1e-5,
            seed: 0,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.f_tol > 0.0 && self.g_tol > 0.0) {
            return Err(Error::invalid("optimizer rates and tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ConvergedF,
    ConvergedG,
    MaxIter,
    /// Non-finite energy or gradient encountered; the trajectory up to that
    /// point is preserved as a diagnostic.
    Aborted,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub records: Vec<EpochRecord>,
    pub status: StopReason,
}

impl Trajectory {
    pub fn final_energy(&self) -> Option<f64> {
        self.records.last().map(|r| r.energy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,energy,grad_norm,seconds\n");
        for r in &self.records {
            writeln!(out, "{},{:.17e},{:.17e},{:.6}", r.epoch, r.energy, r.grad_norm, r.wall_time_s).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serialization")
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn finite(e: f64, g: &[f64]) -> bool {
    e.is_finite() && g.iter().all(|x| x.is_finite())
}

/// Minimize a deterministic energy/gradient callable starting from
/// `init_params` with the configured gradient-based method.
pub fn minimize<F>(mut eg: F, init_params: &[f64], cfg: &OptimizerConfig) -> Result<(Vec<f64>, Trajectory)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.check()?;
    match cfg.method {
        Method::Gd => descend(init_params, cfg, |x| eg(x), GdState::new()),
        Method::Adam => descend(init_params, cfg, |x| eg(x), AdamState::new(init_params.len())),
        Method::Bfgs => bfgs(eg, init_params, cfg),
        Method::GradientFree => Err(Error::invalid(
            "gradient-free method has no gradient callable; use gradient_free_baseline",
        )),
    }
}

trait StepRule {
    fn step(&mut self, lr: f64, x: &mut [f64], g: &[f64]);
}

struct GdState;

impl GdState {
    fn new() -> Self {
        GdState
    }
}

impl StepRule for GdState {
    fn step(&mut self, lr: f64, x: &mut [f64], g: &[f64]) {
        for (xi, gi) in x.iter_mut().zip(g) {
            *xi -= lr * gi;
        }
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl AdamState {
    fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

impl StepRule for AdamState {
    fn step(&mut self, lr: f64, x: &mut [f64], g: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bc1 = 1.0 - B1.powi(self.t as i32);
        let bc2 = 1.0 - B2.powi(self.t as i32);
        for i in 0..x.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g[i] * g[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            x[i] -= lr * mhat / (vhat.sqrt() + EPS);
        }
    }
}

fn descend<F, S>(init: &[f64], cfg: &OptimizerConfig, mut eg: F, mut rule: S) -> Result<(Vec<f64>, Trajectory)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    S: StepRule,
{
    let start = Instant::now();
    let mut x = init.to_vec();
    let mut records = Vec::new();
    let mut prev_e = f64::INFINITY;
    let mut status = StopReason::MaxIter;
    for epoch in 0..cfg.max_iter {
        let (e, g) = eg(&x)?;
        let gn = norm(&g);
        records.push(EpochRecord { epoch, energy: e, grad_norm: gn, wall_time_s: start.elapsed().as_secs_f64() });
        if !finite(e, &g) {
            status = StopReason::Aborted;
            break;
        }
        if gn < cfg.g_tol {
            status = StopReason::ConvergedG;
            break;
        }
        if (e - prev_e).abs() < cfg.f_tol {
            status = StopReason::ConvergedF;
            break;
        }
        prev_e = e;
        rule.step(cfg.learning_rate, &mut x, &g);
    }
    Ok((x, Trajectory { records, status }))
}

fn bfgs<F>(mut eg: F, init: &[f64], cfg: &OptimizerConfig) -> Result<(Vec<f64>, Trajectory)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let start = Instant::now();
    let n = init.len();
    let mut x = init.to_vec();
    let mut hinv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let mut records = Vec::new();
    let mut status = StopReason::MaxIter;

    let (mut e, mut g) = eg(&x)?;
    let mut prev_e = f64::INFINITY;
    for epoch in 0..cfg.max_iter {
        let gn = norm(&g);
        records.push(EpochRecord { epoch, energy: e, grad_norm: gn, wall_time_s: start.elapsed().as_secs_f64() });
        if !finite(e, &g) {
            status = StopReason::Aborted;
            break;
        }
        if gn < cfg.g_tol {
            status = StopReason::ConvergedG;
            break;
        }
        if (e - prev_e).abs() < cfg.f_tol {
            status = StopReason::ConvergedF;
            break;
        }
        prev_e = e;

        // search direction p = -Hinv g
        let mut p = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                p[i] -= hinv[i][j] * g[j];
            }
        }
        let slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // reset to steepest descent if curvature information went bad
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi = -gi;
            }
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] = f64::from(u8::from(i == j));
                }
            }
        }
        let slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();

        // backtracking Armijo line search, c = 1e-4, halving
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let xt: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + t * pi).collect();
            let (et, gt) = eg(&xt)?;
            if et <= e + 1e-4 * t * slope {
                accepted = Some((xt, et, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, en, gn2)) = accepted else {
            status = StopReason::ConvergedF;
            break;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn2.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // inverse BFGS update: H = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    hy[i] += hinv[i][j] * y[j];
                }
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + rho * (1.0 + rho * yhy) * s[i] * s[j];
                }
            }
        }
        x = xn;
        e = en;
        g = gn2;
    }
    Ok((x, Trajectory { records, status }))
}

/// Derivative-free Nelder-Mead simplex baseline.
pub fn gradient_free_baseline<F>(
    mut energy: F,
    init_params: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, Trajectory)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.check()?;
    let start = Instant::now();
    let n = init_params.len();
    if n == 0 {
        return Err(Error::invalid("gradient_free_baseline: no parameters"));
    }
    let step = 0.1;
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    {
        let e0 = energy(init_params)?;
        simplex.push((e0, init_params.to_vec()));
        for i in 0..n {
            let mut v = init_params.to_vec();
            v[i] += step;
            let e = energy(&v)?;
            simplex.push((e, v));
        }
    }
    let mut records = Vec::new();
    let mut status = StopReason::MaxIter;
    let mut prev_best = f64::INFINITY;

    for epoch in 0..cfg.max_iter {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].0;
        records.push(EpochRecord { epoch, energy: best, grad_norm: f64::NAN, wall_time_s: start.elapsed().as_secs_f64() });
        if !best.is_finite() {
            status = StopReason::Aborted;
            break;
        }
        if (best - prev_best).abs() < cfg.f_tol && (simplex[n].0 - best).abs() < cfg.f_tol {
            status = StopReason::ConvergedF;
            break;
        }
        prev_best = best;

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (_, v) in simplex.iter().take(n) {
            for (ci, vi) in centroid.iter_mut().zip(v) {
                *ci += vi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = centroid.iter().zip(&worst.1).map(|(c, w)| 2.0 * c - w).collect();
        let er = energy(&reflect)?;
        if er < simplex[0].0 {
            let expand: Vec<f64> = centroid.iter().zip(&worst.1).map(|(c, w)| 3.0 * c - 2.0 * w).collect();
            let ee = energy(&expand)?;
            simplex[n] = if ee < er { (ee, expand) } else { (er, reflect) };
        } else if er < simplex[n - 1].0 {
            simplex[n] = (er, reflect);
        } else {
            let contract: Vec<f64> = centroid.iter().zip(&worst.1).map(|(c, w)| 0.5 * (c + w)).collect();
            let ec = energy(&contract)?;
            if ec < worst.0 {
                simplex[n] = (ec, contract);
            } else {
                // shrink toward the best vertex
                let best_v = simplex[0].1.clone();
                for k in 1..=n {
                    let v: Vec<f64> = simplex[k]
                        .1
                        .iter()
                        .zip(&best_v)
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect();
                    let e = energy(&v)?;
                    simplex[k] = (e, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok((simplex[0].1.clone(), Trajectory { records, status }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let e = x.iter().map(|v| v * v).sum();
        let g = x.iter().map(|v| 2.0 * v).collect();
        Ok((e, g))
    }

    #[test]
    fn gd_on_quadratic_bowl() {
        let mut cfg = OptimizerConfig::new(Method::Gd);
        cfg.learning_rate = 0.1;
        cfg.f_tol = 1e-12;
        let (x, traj) = minimize(bowl, &[1.0, 1.0], &cfg).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-3));
        assert!(traj.final_energy().unwrap() < 1e-6);
        assert!(traj.records.len() <= 100);
        // monotone energies for GD on a convex bowl
        for w in traj.records.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-15);
        }
    }

    #[test]
    fn adam_on_quadratic_bowl() {
        let mut cfg = OptimizerConfig::new(Method::Adam);
        cfg.learning_rate = 0.2;
        cfg.max_iter = 300;
        cfg.f_tol = 1e-12;
        let (_, traj) = minimize(bowl, &[1.0, -0.5], &cfg).unwrap();
        assert!(traj.final_energy().unwrap() < 1e-4);
    }

    #[test]
    fn bfgs_on_cosine() {
        let cfg = OptimizerConfig::new(Method::Bfgs);
        let (x, traj) = minimize(
            |p: &[f64]| Ok((p[0].cos(), vec![-p[0].sin()])),
            &[0.3],
            &cfg,
        )
        .unwrap();
        assert!((traj.final_energy().unwrap() + 1.0).abs() < 1e-8);
        // any odd multiple of pi is the same minimum
        let folded = x[0].rem_euclid(2.0 * std::f64::consts::PI);
        assert!((folded - std::f64::consts::PI).abs() < 1e-3, "x {}", x[0]);
    }

    #[test]
    fn bfgs_on_quadratic_is_fast() {
        let cfg = OptimizerConfig::new(Method::Bfgs);
        let (_, traj) = minimize(bowl, &[2.0, -3.0, 1.0], &cfg).unwrap();
        assert!(traj.final_energy().unwrap() < 1e-9);
        assert!(traj.records.len() < 15, "took {} epochs", traj.records.len());
    }

    #[test]
    fn nelder_mead_on_bowl_and_cosine() {
        let cfg = OptimizerConfig::new(Method::GradientFree);
        let (x, _) = gradient_free_baseline(|p| Ok(p.iter().map(|v| v * v).sum()), &[1.0, 1.0], &cfg).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-2));

        let (_, traj) = gradient_free_baseline(|p: &[f64]| Ok(p[0].cos()), &[0.3], &cfg).unwrap();
        assert!((traj.final_energy().unwrap() + 1.0).abs() < 1e-4);
    }

    #[test]
    fn determinism() {
        let cfg = OptimizerConfig::new(Method::Bfgs);
        let run = || minimize(bowl, &[1.3, -0.4], &cfg).unwrap();
        let (x1, t1) = run();
        let (x2, t2) = run();
        assert_eq!(x1, x2);
        assert_eq!(
            t1.records.iter().map(|r| r.energy.to_bits()).collect::<Vec<_>>(),
            t2.records.iter().map(|r| r.energy.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn abort_on_non_finite() {
        let cfg = OptimizerConfig::new(Method::Gd);
        let (_, traj) = minimize(|_| Ok((f64::NAN, vec![0.0])), &[1.0], &cfg).unwrap();
        assert_eq!(traj.status, StopReason::Aborted);
        assert_eq!(traj.records.len(), 1);
    }

    #[test]
    fn csv_and_json_output() {
        let mut cfg = OptimizerConfig::new(Method::Gd);
        cfg.learning_rate = 0.1;
        let (_, traj) = minimize(bowl, &[1.0], &cfg).unwrap();
        let csv = traj.to_csv();
        assert!(csv.starts_with("epoch,energy,grad_norm,seconds\n"));
        assert!(csv.lines().count() > 2);
        let json = traj.to_json();
        assert!(json.contains("\"status\""));
    }

    #[test]
    fn config_validation() {
        let mut cfg = OptimizerConfig::new(Method::Gd);
        cfg.learning_rate = -1.0;
        assert!(minimize(bowl, &[1.0], &cfg).is_err());
    }
}
