//! Monte Carlo verification of the probabilistic estimates: Khintchine
//! moment growth, norm tails of randomized data, the T-scaling of the
//! local-in-time Strichartz tail constant, improved L^p integrability, and
//! the deterministic Strichartz baseline.
//!
//! Subgaussian tail constants are always fitted empirically — only the
//! functional form exp(−cλ²) and the scaling exponents are checked, never
//! literal constants. Fits use the exceedance band [1e−3, 0.5] to stay off
//! the Monte Carlo resolution floor.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpacetimeField};
use crate::grid::TorusGrid;
use crate::norms::{is_admissible, lp_norm, sobolev_norm, spacetime_norm};
use crate::randomize::{draw_sequence, randomize, sample, CoeffDistribution, PhiSpec};
use crate::spectral::propagate;
use crate::stats::{linreg, median, std_dev, wilson_ci};
use crate::wiener::{CubeIndexSet, PartitionOfUnity};

/// Exceedance band used for subgaussian fits.
pub const FIT_BAND: (f64, f64) = (1e-3, 0.5);

/// z-score for the Wilson confidence intervals attached to tail curves.
pub const TAIL_CI_Z: f64 = 1.96;

/// Empirical exceedance curve P(X > λ) with a subgaussian fit
/// log P ≈ log C − c λ² over the fit band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailCurve {
    pub lambda: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub n_trials: usize,
    pub fit: Option<TailFit>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailFit {
    /// Fitted prefactor Ĉ.
    pub c_big: f64,
    /// Fitted decay rate ĉ in exp(−ĉλ²).
    pub c_small: f64,
    /// Coefficient of determination of the linear-in-λ² regression.
    pub r2: f64,
    pub band: (f64, f64),
    pub points_used: usize,
}

impl TailCurve {
    /// Build the curve from raw statistic samples on the given λ grid.
    pub fn from_samples(samples: &[f64], lambda: Vec<f64>) -> Result<TailCurve> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::validation("tail.trials", "no samples"));
        }
        if lambda.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("tail.lambda", "grid must be strictly ascending"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mut p_hat = Vec::with_capacity(lambda.len());
        let mut ci_lo = Vec::with_capacity(lambda.len());
        let mut ci_hi = Vec::with_capacity(lambda.len());
        for &lam in &lambda {
            // number of samples strictly above λ
            let exceed = n - sorted.partition_point(|&x| x <= lam);
            let p = exceed as f64 / n as f64;
            let (lo, hi) = wilson_ci(exceed, n, TAIL_CI_Z);
            p_hat.push(p);
            ci_lo.push(lo);
            ci_hi.push(hi);
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &p) in p_hat.iter().enumerate() {
            if p >= FIT_BAND.0 && p <= FIT_BAND.1 {
                xs.push(lambda[i] * lambda[i]);
                ys.push(p.ln());
            }
        }
        let fit = if xs.len() >= 3 {
            linreg(&xs, &ys).map(|(intercept, slope, r2)| TailFit {
                c_big: intercept.exp(),
                c_small: -slope,
                r2,
                band: FIT_BAND,
                points_used: xs.len(),
            })
        } else {
            None
        };
        Ok(TailCurve {
            lambda,
            p_hat,
            ci_lo,
            ci_hi,
            n_trials: n,
            fit,
        })
    }
}

/// λ grid specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum LambdaGrid {
    /// Evenly spaced points spanning the sample range.
    Auto { count: usize },
    Explicit { lo: f64, hi: f64, count: usize },
}

impl LambdaGrid {
    fn materialize(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let (lo, hi, count) = match *self {
            LambdaGrid::Auto { count } => {
                let max = samples.iter().cloned().fold(0.0f64, f64::max);
                (0.0, max * 1.0001, count)
            }
            LambdaGrid::Explicit { lo, hi, count } => (lo, hi, count),
        };
        if count < 2 || !(hi > lo) {
            return Err(Error::validation("tail.lambda", "need at least two ascending points"));
        }
        Ok((0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect())
    }
}

/// Statistic measured per randomization trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "stat")]
pub enum Statistic {
    HsNorm { s: f64 },
    LpNorm { p: f64 },
    LocalStrichartz { q: f64, r: f64, t: f64 },
    /// Long-window proxy for the global-in-time estimate: the true t ∈ ℝ is
    /// unreachable, so the window extent is part of the record.
    GlobalStrichartz { q: f64, r_tilde: f64, window: f64 },
}

impl Statistic {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            Statistic::HsNorm { .. } => Ok(()),
            Statistic::LpNorm { p } => {
                if p >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::validation("stat.p", "p must be ≥ 1"))
                }
            }
            Statistic::LocalStrichartz { q, r, t } => {
                if !(q >= 2.0 && q.is_finite() && r >= 2.0 && r.is_finite()) {
                    return Err(Error::validation("stat.qr", "need 2 ≤ q, r < ∞"));
                }
                if !(t > 0.0) {
                    return Err(Error::validation("stat.t", "need T > 0"));
                }
                Ok(())
            }
            Statistic::GlobalStrichartz { q, r_tilde, window } => {
                if !(q >= 2.0 && q.is_finite() && r_tilde.is_finite()) {
                    return Err(Error::validation("stat.q", "need 2 ≤ q < ∞ and r̃ < ∞"));
                }
                // admissible partner r with 2/q + d/r = d/2 must exist with r ≤ r̃
                let df = d as f64;
                let denom = df / 2.0 - 2.0 / q;
                if denom <= 0.0 {
                    return Err(Error::validation(
                        "stat.q",
                        format!("no admissible partner exponent for q = {q} in d = {d}"),
                    ));
                }
                let r = df / denom;
                if r < 2.0 || !is_admissible(q, r, d) {
                    return Err(Error::validation(
                        "stat.q",
                        format!("(q, r) = ({q}, {r:.4}) is not Schrödinger admissible"),
                    ));
                }
                if r_tilde < r {
                    return Err(Error::validation(
                        "stat.r_tilde",
                        format!("r̃ = {r_tilde} must be ≥ admissible r = {r:.4}"),
                    ));
                }
                if !(window > 0.0) {
                    return Err(Error::validation("stat.window", "window must be > 0"));
                }
                Ok(())
            }
        }
    }

    fn evaluate(&self, phi_omega: &Field, frames: usize) -> Result<f64> {
        match *self {
            Statistic::HsNorm { s } => Ok(sobolev_norm(phi_omega, s)),
            Statistic::LpNorm { p } => lp_norm(phi_omega, p),
            Statistic::LocalStrichartz { q, r, t } => {
                let st = free_evolution(phi_omega, t, frames)?;
                spacetime_norm(&st, q, r, t)
            }
            Statistic::GlobalStrichartz { q, r_tilde, window } => {
                let st = free_evolution(phi_omega, window, frames)?;
                spacetime_norm(&st, q, r_tilde, window)
            }
        }
    }
}

/// Frames S(t_m)φ on the uniform grid covering [0, t_end].
pub fn free_evolution(phi: &Field, t_end: f64, frames: usize) -> Result<SpacetimeField> {
    if frames < 2 {
        return Err(Error::validation("frames", "need at least 2 frames"));
    }
    let dt = t_end / (frames - 1) as f64;
    let fields: Vec<Field> = (0..frames)
        .map(|m| propagate(phi, dt * m as f64))
        .collect();
    SpacetimeField::new(fields, 0.0, dt)
}

/// Everything needed to reproduce a tail experiment bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailExperiment {
    pub d: usize,
    pub m: usize,
    pub l: f64,
    pub psi_width: f64,
    pub dist: CoeffDistribution,
    pub phi: PhiSpec,
    pub trials: usize,
    pub seed: u64,
    pub lambda: LambdaGrid,
    /// Time frames used by Strichartz statistics.
    pub frames: usize,
}

impl TailExperiment {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.d, self.m, self.l)
    }
}

pub(crate) fn mix_seed(master: u64, purpose: u64) -> u64 {
    let mut z = master ^ purpose.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Raw statistic samples over all trials (one stream per trial).
pub fn statistic_samples(stat: &Statistic, exp: &TailExperiment) -> Result<Vec<f64>> {
    if exp.trials == 0 {
        return Err(Error::validation("tail.trials", "trials must be ≥ 1"));
    }
    let grid = exp.grid()?;
    stat.validate(grid.d())?;
    let psi = PartitionOfUnity::new(exp.psi_width)?;
    let cubes = CubeIndexSet::for_grid(&grid)?;
    let phi = exp.phi.build(&grid)?;
    let draw_seed = mix_seed(exp.seed, 0xD1A85);
    (0..exp.trials)
        .into_par_iter()
        .map(|trial| {
            let draw = sample(exp.dist, &cubes, draw_seed, trial as u64);
            let phi_omega = randomize(&phi, &draw, &psi)?;
            stat.evaluate(&phi_omega, exp.frames)
        })
        .collect()
}

/// Run the Monte Carlo tail experiment for one statistic.
pub fn tail_experiment(stat: &Statistic, exp: &TailExperiment) -> Result<TailCurve> {
    let samples = statistic_samples(stat, exp)?;
    let lambda = exp.lambda.materialize(&samples)?;
    TailCurve::from_samples(&samples, lambda)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KhintchineRow {
    pub p: f64,
    /// ‖Σ g_n c_n‖_{L^p(Ω)} / ‖c‖_{ℓ²}.
    pub ratio: f64,
    /// Relative Monte Carlo standard error of the ratio.
    pub se_rel: f64,
    /// Set when the standard error exceeds 10%.
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KhintchineTable {
    pub dist: CoeffDistribution,
    pub rows: Vec<KhintchineRow>,
    /// Fitted growth exponent α in ratio ∝ p^α.
    pub alpha: f64,
    pub trials: usize,
}

/// Monte Carlo moments of Σ g_n c_n against the √p growth bound.
pub fn khintchine_moments(
    dist: CoeffDistribution,
    c: &[f64],
    p_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<KhintchineTable> {
    if c.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateInput("all-zero coefficient vector".into()));
    }
    if p_list.iter().any(|&p| !(2.0..=64.0).contains(&p)) {
        return Err(Error::validation("khintchine.p", "p_list must lie in [2, 64]"));
    }
    if trials < 100_000 && p_list.iter().any(|&p| p <= 8.0) {
        return Err(Error::validation(
            "khintchine.trials",
            "need at least 1e5 trials for p ≤ 8",
        ));
    }
    let c_norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let moduli: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let g = draw_sequence(dist, seed, trial as u64, c.len());
            let x: Complex64 = g.iter().zip(c).map(|(gi, &ci)| gi * ci).sum();
            x.norm()
        })
        .collect();
    let mut rows = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let powered: Vec<f64> = moduli.iter().map(|x| x.powf(p)).collect();
        let m_p = powered.iter().sum::<f64>() / trials as f64;
        let se = std_dev(&powered) / (trials as f64).sqrt();
        let ratio = m_p.powf(1.0 / p) / c_norm;
        let se_rel = se / (p * m_p);
        rows.push(KhintchineRow {
            p,
            ratio,
            se_rel,
            flagged: se_rel > 0.1,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.p.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
    let alpha = linreg(&xs, &ys).map(|(_, slope, _)| slope).unwrap_or(f64::NAN);
    Ok(KhintchineTable {
        dist,
        rows,
        alpha,
        trials,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TScalingReport {
    pub q: f64,
    pub r: f64,
    /// (T, fitted tail) pairs.
    pub per_t: Vec<(f64, TailFit)>,
    /// Slope of log ĉ against log T.
    pub slope: f64,
    pub slope_r2: f64,
    /// −2/q, the exponent the tail constant should follow.
    pub expected: f64,
}

/// Fit ĉ(T) for each horizon and regress log ĉ against log T; the local
/// Strichartz tail scales like exp(−cλ²/T^{2/q}), i.e. slope −2/q.
pub fn strichartz_t_scaling(
    q: f64,
    r: f64,
    t_list: &[f64],
    exp: &TailExperiment,
) -> Result<TScalingReport> {
    if t_list.len() < 2 {
        return Err(Error::validation("tscaling.t_list", "need at least two horizons"));
    }
    let lo = t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = t_list.iter().cloned().fold(0.0f64, f64::max);
    if hi / lo < 10.0 {
        return Err(Error::validation(
            "tscaling.t_list",
            format!("horizons must span ≥ one decade, got {lo}..{hi}"),
        ));
    }
    let mut per_t = Vec::with_capacity(t_list.len());
    for (i, &t) in t_list.iter().enumerate() {
        let mut sub = exp.clone();
        sub.seed = mix_seed(exp.seed, 0x7C0DE + i as u64);
        let stat = Statistic::LocalStrichartz { q, r, t };
        let curve = tail_experiment(&stat, &sub)?;
        let fit = curve.fit.ok_or_else(|| {
            Error::NumericalFault(format!("tail fit failed at T = {t} (band underpopulated)"))
        })?;
        per_t.push((t, fit));
    }
    let xs: Vec<f64> = per_t.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = per_t.iter().map(|(_, f)| f.c_small.ln()).collect();
    let (_, slope, r2) = linreg(&xs, &ys)
        .ok_or_else(|| Error::NumericalFault("degenerate T-scaling regression".into()))?;
    Ok(TScalingReport {
        q,
        r,
        per_t,
        slope,
        slope_r2: r2,
        expected: -2.0 / q,
    })
}

/// Finite-horizon proxy ratio ‖S(t)φ‖_{L^q_T L^r} / ‖φ‖_{L²}.
pub fn deterministic_strichartz(
    phi: &Field,
    q: f64,
    r: f64,
    t_end: f64,
    frames: usize,
    allow_non_admissible: bool,
) -> Result<f64> {
    let d = phi.grid().d();
    if !allow_non_admissible && !is_admissible(q, r, d) {
        return Err(Error::validation(
            "strichartz.qr",
            format!("(q, r) = ({q}, {r}) is not Schrödinger admissible in d = {d}"),
        ));
    }
    let denom = phi.l2_norm();
    if denom == 0.0 {
        return Err(Error::DegenerateInput("zero field".into()));
    }
    let st = free_evolution(phi, t_end, frames)?;
    Ok(spacetime_norm(&st, q, r, t_end)? / denom)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpImprovementRow {
    pub m: usize,
    pub deterministic: f64,
    pub randomized_median: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpImprovementReport {
    pub p: f64,
    pub s_decay: f64,
    pub rows: Vec<LpImprovementRow>,
    /// Growth exponents of the L^p norm against M.
    pub det_norm_exponent: f64,
    pub rand_norm_exponent: f64,
    /// Growth exponents of ∫|φ|^p = ‖φ‖_p^p against M (p× the above).
    pub det_power_exponent: f64,
    pub rand_power_exponent: f64,
}

/// Deterministic vs randomized-median L^p growth across grid refinements of
/// an aligned-phase profile whose L^p norms are borderline on the grid.
pub fn lp_improvement_demo(
    s_decay: f64,
    p: f64,
    m_list: &[usize],
    l: f64,
    psi_width: f64,
    dist: CoeffDistribution,
    trials: usize,
    seed: u64,
) -> Result<LpImprovementReport> {
    if p < 2.0 {
        return Err(Error::validation("lpdemo.p", "improvement demo needs p ≥ 2"));
    }
    if m_list.len() < 2 {
        return Err(Error::validation("lpdemo.m_list", "need at least two grids"));
    }
    let psi = PartitionOfUnity::new(psi_width)?;
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let grid = TorusGrid::new(1, m, l)?;
        let cubes = CubeIndexSet::for_grid(&grid)?;
        let phi = PhiSpec::Aligned { s_decay, scale: 1.0 }.build(&grid)?;
        let deterministic = lp_norm(&phi, p)?;
        let draw_seed = mix_seed(seed, m as u64);
        let norms: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let draw = sample(dist, &cubes, draw_seed, trial as u64);
                lp_norm(&randomize(&phi, &draw, &psi)?, p)
            })
            .collect::<Result<_>>()?;
        rows.push(LpImprovementRow {
            m,
            deterministic,
            randomized_median: median(&norms),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
    let det: Vec<f64> = rows.iter().map(|r| r.deterministic.ln()).collect();
    let rand: Vec<f64> = rows.iter().map(|r| r.randomized_median.ln()).collect();
    let (_, det_slope, _) = linreg(&xs, &det)
        .ok_or_else(|| Error::NumericalFault("degenerate growth regression".into()))?;
    let (_, rand_slope, _) = linreg(&xs, &rand)
        .ok_or_else(|| Error::NumericalFault("degenerate growth regression".into()))?;
    Ok(LpImprovementReport {
        p,
        s_decay,
        rows,
        det_norm_exponent: det_slope,
        rand_norm_exponent: rand_slope,
        det_power_exponent: p * det_slope,
        rand_power_exponent: p * rand_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_experiment() -> TailExperiment {
        TailExperiment {
            d: 1,
            m: 64,
            l: 1.0,
            psi_width: 0.25,
            dist: CoeffDistribution::ComplexGaussian,
            phi: PhiSpec::Rough { s_decay: 0.8, scale: 1.0, seed: 5 },
            trials: 2000,
            seed: 40,
            lambda: LambdaGrid::Auto { count: 48 },
            frames: 33,
        }
    }

    #[test]
    fn tail_curve_is_monotone_and_starts_at_one() {
        let exp = small_experiment();
        let curve = tail_experiment(&Statistic::HsNorm { s: 0.5 }, &exp).unwrap();
        assert_eq!(curve.p_hat[0], 1.0, "exceedance at λ = 0 must be 1");
        for w in curve.p_hat.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for i in 0..curve.lambda.len() {
            assert!(curve.ci_lo[i] <= curve.p_hat[i] && curve.p_hat[i] <= curve.ci_hi[i]);
        }
        let fit = curve.fit.expect("band should be populated");
        assert!(fit.c_small > 0.0, "subgaussian rate must be positive");
    }

    #[test]
    fn tail_experiment_is_reproducible() {
        let exp = small_experiment();
        let stat = Statistic::HsNorm { s: 0.5 };
        let a = tail_experiment(&stat, &exp).unwrap();
        let b = tail_experiment(&stat, &exp).unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        assert_eq!(a.lambda, b.lambda);
    }

    #[test]
    fn zero_trials_rejected() {
        let mut exp = small_experiment();
        exp.trials = 0;
        let err = tail_experiment(&Statistic::HsNorm { s: 0.5 }, &exp).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn khintchine_p2_is_exact_and_single_coefficient_matches_moments() {
        let trials = 100_000;
        let c = [1.0];
        let p_list = [2.0, 4.0, 6.0, 8.0];
        let table = khintchine_moments(
            CoeffDistribution::ComplexGaussian,
            &c,
            &p_list,
            trials,
            7,
        )
        .unwrap();
        // E|Σ g c|² = ‖c‖² exactly; 3 SE bound
        let row2 = &table.rows[0];
        assert!((row2.ratio - 1.0).abs() < 3.0 * row2.se_rel, "{row2:?}");
        // complex Gaussian modulus: E|g|^p = Γ(p/2 + 1), i.e. (p/2)! here
        let factorials = [1.0f64, 2.0, 6.0, 24.0];
        for (row, gamma) in table.rows.iter().zip(factorials) {
            let expected = gamma.powf(1.0 / row.p);
            assert!(
                (row.ratio - expected).abs() < 3.0 * row.se_rel * expected + 1e-9,
                "p = {}: {} vs {expected}",
                row.p,
                row.ratio
            );
        }
        assert!(table.alpha < 0.55);
    }

    #[test]
    fn khintchine_validation() {
        assert!(khintchine_moments(CoeffDistribution::Bernoulli, &[0.0], &[2.0], 100_000, 1).is_err());
        assert!(khintchine_moments(CoeffDistribution::Bernoulli, &[1.0], &[70.0], 100_000, 1).is_err());
        assert!(khintchine_moments(CoeffDistribution::Bernoulli, &[1.0], &[2.0], 10, 1).is_err());
    }

    #[test]
    fn global_strichartz_validation() {
        // d = 1, q = 6 → admissible r = 6; r̃ ≥ 6 required
        assert!(Statistic::GlobalStrichartz { q: 6.0, r_tilde: 8.0, window: 1.0 }
            .validate(1)
            .is_ok());
        assert!(Statistic::GlobalStrichartz { q: 6.0, r_tilde: 4.0, window: 1.0 }
            .validate(1)
            .is_err());
        // q = ∞ rejected for the local statistic
        assert!(Statistic::LocalStrichartz { q: f64::INFINITY, r: 6.0, t: 1.0 }
            .validate(1)
            .is_err());
    }

    #[test]
    fn t_scaling_rejects_narrow_spans() {
        let exp = small_experiment();
        assert!(strichartz_t_scaling(6.0, 6.0, &[0.1, 0.2], &exp).is_err());
        assert!(strichartz_t_scaling(6.0, 6.0, &[0.1], &exp).is_err());
    }

    #[test]
    fn tail_constant_scales_with_data_norm() {
        // fitted ĉ against λ is quartered when φ doubles, i.e. ĉ fitted
        // against λ/‖φ‖₂ is invariant
        let exp = small_experiment();
        let stat = Statistic::HsNorm { s: 0.5 };
        let base = tail_experiment(&stat, &exp).unwrap().fit.unwrap();
        let mut scaled = exp.clone();
        scaled.phi = PhiSpec::Rough { s_decay: 0.8, scale: 2.0, seed: 5 };
        let doubled = tail_experiment(&stat, &scaled).unwrap().fit.unwrap();
        let ratio = base.c_small / doubled.c_small;
        assert!(
            (ratio - 4.0).abs() < 0.6,
            "ĉ(φ)/ĉ(2φ) = {ratio}, expected ≈ 4"
        );
    }

    #[test]
    fn deterministic_strichartz_stable_beyond_dispersion_time() {
        let grid = TorusGrid::new(1, 512, 16.0).unwrap();
        let phi = PhiSpec::Gaussian { scale: 1.0, dilation: 1.0 }.build(&grid).unwrap();
        let a = deterministic_strichartz(&phi, 6.0, 6.0, 2.0, 129, false).unwrap();
        let b = deterministic_strichartz(&phi, 6.0, 6.0, 4.0, 257, false).unwrap();
        assert!((b - a).abs() / a < 0.02, "ratio moved {a} → {b} as T doubled");
    }

    #[test]
    fn lp_demo_flat_at_p2() {
        // Plancherel + unit variance: neither the deterministic nor the
        // randomized L² norm grows under refinement
        let rep = lp_improvement_demo(
            0.2,
            2.0,
            &[64, 128, 256],
            1.0,
            0.25,
            CoeffDistribution::ComplexGaussian,
            100,
            3,
        )
        .unwrap();
        // both follow the same slowly-converging L² band sum: small and equal
        assert!(rep.det_norm_exponent.abs() < 0.1, "{}", rep.det_norm_exponent);
        assert!(rep.rand_norm_exponent.abs() < 0.1, "{}", rep.rand_norm_exponent);
        assert!(
            (rep.det_norm_exponent - rep.rand_norm_exponent).abs() < 0.03,
            "p = 2 exponents differ: {} vs {}",
            rep.det_norm_exponent,
            rep.rand_norm_exponent
        );
        assert!(lp_improvement_demo(
            0.2,
            1.5,
            &[64, 128],
            1.0,
            0.25,
            CoeffDistribution::ComplexGaussian,
            10,
            3
        )
        .is_err());
    }

    #[test]
    fn global_strichartz_window_saturates() {
        // the admissible-pair time integral converges on ℝ, so doubling the
        // finite proxy window barely moves the per-trial statistic
        let grid = TorusGrid::new(1, 128, 8.0).unwrap();
        let psi = PartitionOfUnity::new(0.25).unwrap();
        let cubes = CubeIndexSet::for_grid(&grid).unwrap();
        let phi = PhiSpec::Gaussian { scale: 1.0, dilation: 1.0 }.build(&grid).unwrap();
        let mut ratios = Vec::new();
        for trial in 0..100u64 {
            let draw = sample(CoeffDistribution::ComplexGaussian, &cubes, 77, trial);
            let phi_omega = randomize(&phi, &draw, &psi).unwrap();
            let short = Statistic::GlobalStrichartz { q: 6.0, r_tilde: 8.0, window: 4.0 }
                .evaluate(&phi_omega, 129)
                .unwrap();
            let long = Statistic::GlobalStrichartz { q: 6.0, r_tilde: 8.0, window: 8.0 }
                .evaluate(&phi_omega, 257)
                .unwrap();
            ratios.push(long / short);
        }
        let med = median(&ratios);
        assert!(med < 1.05, "window doubling moved the statistic by {med}");
    }

    #[test]
    fn deterministic_strichartz_homogeneity_and_admissibility() {
        let grid = TorusGrid::new(1, 128, 8.0).unwrap();
        let phi = PhiSpec::Gaussian { scale: 1.0, dilation: 1.0 }.build(&grid).unwrap();
        let r1 = deterministic_strichartz(&phi, 6.0, 6.0, 1.0, 65, false).unwrap();
        let phi2 = phi.scaled(Complex64::new(2.0, 0.0));
        let r2 = deterministic_strichartz(&phi2, 6.0, 6.0, 1.0, 65, false).unwrap();
        assert!((r1 - r2).abs() < 1e-12 * r1, "ratio must be 0-homogeneous");
        assert!(deterministic_strichartz(&phi, 6.0, 5.0, 1.0, 65, false).is_err());
        assert!(deterministic_strichartz(&phi, 6.0, 5.0, 1.0, 65, true).is_ok());
    }
}
