//! Unit-cube (Wiener) decomposition of frequency space and Littlewood-Paley
//! projections.
//!
//! The partition of unity is built per axis as ψ₁ = χ₁ / Σ_m χ₁(·−m) from a
//! C^∞ bump χ₁ that equals 1 on [−1/2, 1/2] and falls to 0 over a
//! transition band of the configured width, so Σ_n ψ(ξ−n) ≡ 1 holds by
//! construction rather than by tuning. The d-dimensional symbol is the
//! tensor product, supported in n + [−1, 1]^d.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{TorusGrid, MAX_DIM};
use crate::spectral::{apply_multiplier, to_frequency};

/// C^∞ step: 0 for s ≤ 0, 1 for s ≥ 1, strictly increasing in between.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let f = (-1.0 / s).exp();
        let g = (-1.0 / (1.0 - s)).exp();
        f / (f + g)
    }
}

/// Smooth partition of unity subordinate to the unit-cube decomposition.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PartitionOfUnity {
    transition_width: f64,
    /// min over ξ of Σ_m ψ₁(ξ−m)² from a dense 1-D scan.
    sum_sq_min_1d: f64,
    /// max over ξ of Σ_m ψ₁(ξ−m)².
    sum_sq_max_1d: f64,
}

/// Probe points per unit interval for the construction-time scan.
const SCAN_POINTS: usize = 10_000;

impl PartitionOfUnity {
    pub fn new(transition_width: f64) -> Result<Self> {
        if !(transition_width > 0.0 && transition_width < 0.5) {
            return Err(Error::validation(
                "psi.transition_width",
                format!("width {transition_width} not in (0, 1/2)"),
            ));
        }
        let mut psi = PartitionOfUnity {
            transition_width,
            sum_sq_min_1d: f64::INFINITY,
            sum_sq_max_1d: 0.0,
        };
        // Dense scan over one period: verifies the partition identity and
        // that the bump sum never vanishes, and records the
        // almost-orthogonality constants.
        for i in 0..SCAN_POINTS {
            let xi = i as f64 / SCAN_POINTS as f64;
            let chi_sum = psi.chi_sum_1d(xi);
            if chi_sum <= 0.0 {
                return Err(Error::validation(
                    "psi.transition_width",
                    format!("bump sum vanishes at ξ = {xi}"),
                ));
            }
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for m in -2..=2 {
                let v = psi.psi1(xi - m as f64);
                sum += v;
                sum_sq += v * v;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::validation(
                    "psi.transition_width",
                    format!("partition identity violated at ξ = {xi}: Σψ = {sum}"),
                ));
            }
            psi.sum_sq_min_1d = psi.sum_sq_min_1d.min(sum_sq);
            psi.sum_sq_max_1d = psi.sum_sq_max_1d.max(sum_sq);
        }
        Ok(psi)
    }

    pub fn transition_width(&self) -> f64 {
        self.transition_width
    }

    /// 1-D bump: 1 on [−1/2, 1/2], smooth decay to 0 at |ξ| = 1/2 + width.
    fn chi1(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 0.5 {
            1.0
        } else {
            smooth_step((0.5 + self.transition_width - a) / self.transition_width)
        }
    }

    fn chi_sum_1d(&self, xi: f64) -> f64 {
        // supp χ₁ ⊂ [−1, 1], so only the three nearest translates contribute.
        let base = xi.floor();
        (-1..=1).map(|m| self.chi1(xi - base - m as f64)).sum()
    }

    /// Normalized 1-D symbol: Σ_m ψ₁(ξ−m) = 1 identically.
    pub fn psi1(&self, xi: f64) -> f64 {
        let c = self.chi1(xi);
        if c == 0.0 {
            0.0
        } else {
            c / self.chi_sum_1d(xi)
        }
    }

    /// Tensor-product symbol ψ(ξ) = ψ₁(ξ_1)⋯ψ₁(ξ_d).
    pub fn psi(&self, xi: &[f64]) -> f64 {
        xi.iter().map(|&x| self.psi1(x)).product()
    }

    /// Radius of the plateau where ψ ≡ 1 around each cube center.
    pub fn plateau_radius(&self) -> f64 {
        0.5 - self.transition_width
    }

    /// Almost-orthogonality constants (c₁, c₂) for dimension d:
    /// c₁‖u‖₂² ≤ Σ_n ‖ψ(D−n)u‖₂² ≤ c₂‖u‖₂² on band-limited data.
    pub fn sum_sq_bounds(&self, d: usize) -> (f64, f64) {
        (
            self.sum_sq_min_1d.powi(d as i32),
            self.sum_sq_max_1d.powi(d as i32),
        )
    }
}

/// Retained unit-cube indices for a grid: |n|_∞ ≤ floor(M/(4L)) − 1, so
/// every ψ(·−n) support stays strictly inside the resolved band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeIndexSet {
    d: usize,
    n_max: i64,
    indices: Vec<[i64; MAX_DIM]>,
}

impl CubeIndexSet {
    pub fn for_grid(grid: &TorusGrid) -> Result<Self> {
        let n_max = grid.cube_limit();
        if n_max < 0 {
            return Err(Error::validation(
                "grid",
                format!(
                    "Nyquist {} too small to retain a single unit cube",
                    grid.nyquist()
                ),
            ));
        }
        let d = grid.d();
        let side = (2 * n_max + 1) as usize;
        let count = side.pow(d as u32);
        let mut indices = Vec::with_capacity(count);
        let mut n = [0i64; MAX_DIM];
        for a in 0..d {
            n[a] = -n_max;
        }
        for _ in 0..count {
            indices.push(n);
            for a in (0..d).rev() {
                n[a] += 1;
                if n[a] <= n_max {
                    break;
                }
                n[a] = -n_max;
            }
        }
        Ok(CubeIndexSet { d, n_max, indices })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64; MAX_DIM]> {
        self.indices.iter()
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        n.len() == self.d && n.iter().all(|&c| c.abs() <= self.n_max)
    }
}

/// Cube projection ψ(D−n): frequency support of the output lies in
/// n + [−1, 1]^d exactly (ψ has compact support evaluated on the lattice).
pub fn project_cube(field: &Field, n: &[i64], psi: &PartitionOfUnity) -> Result<Field> {
    let cubes = CubeIndexSet::for_grid(field.grid())?;
    if !cubes.contains(n) {
        return Err(Error::validation(
            "cube.n",
            format!("cube index {n:?} outside the retained band |n|_∞ ≤ {}", cubes.n_max()),
        ));
    }
    apply_multiplier(field, |xi| {
        let v: f64 = xi
            .iter()
            .zip(n)
            .map(|(&x, &c)| psi.psi1(x - c as f64))
            .product();
        Complex64::new(v, 0.0)
    })
}

/// Radial Littlewood-Paley bump: 1 on {|ξ| ≤ 1}, supported in {|ξ| ≤ 2}.
pub fn lp_bump(rho: f64) -> f64 {
    smooth_step(2.0 - rho.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpKind {
    /// P_{≤N}: multiplier φ(ξ/N).
    Leq,
    /// P_N: multiplier φ(ξ/N) − φ(2ξ/N), with the convention P_{≤1} = P_1.
    Eq,
}

fn check_dyadic(field: &Field, n: u64) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::validation("lp.n", format!("N = {n} is not dyadic ≥ 1")));
    }
    if (n as f64) > field.grid().nyquist() {
        return Err(Error::validation(
            "lp.n",
            format!("N = {n} above the Nyquist frequency {}", field.grid().nyquist()),
        ));
    }
    Ok(())
}

/// Smooth dyadic projection P_{≤N} or P_N.
pub fn lp_project(field: &Field, n: u64, kind: LpKind) -> Result<Field> {
    check_dyadic(field, n)?;
    let nf = n as f64;
    apply_multiplier(field, move |xi| {
        let rho = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v = match kind {
            LpKind::Leq => lp_bump(rho / nf),
            LpKind::Eq => {
                if n == 1 {
                    lp_bump(rho)
                } else {
                    lp_bump(rho / nf) - lp_bump(2.0 * rho / nf)
                }
            }
        };
        Complex64::new(v, 0.0)
    })
}

/// Dyadic levels N = 1, 2, 4, … up to the Nyquist frequency.
pub fn dyadic_levels(grid: &TorusGrid) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = 1u64;
    while (n as f64) <= grid.nyquist() {
        out.push(n);
        n *= 2;
    }
    out
}

/// ‖P_{≤N}f‖_q / (N^{d/p−d/q} ‖P_{≤N}f‖_p) for a field already of the form
/// P_{≤N}f. Bernstein's inequality bounds this uniformly in N.
pub fn bernstein_ratio(field: &Field, n: u64, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= p) {
        return Err(Error::validation(
            "bernstein.pq",
            format!("need 1 ≤ p ≤ q, got p = {p}, q = {q}"),
        ));
    }
    let d = field.grid().d() as f64;
    let num = crate::norms::lp_norm(field, q)?;
    let den = crate::norms::lp_norm(field, p)?;
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "Bernstein ratio of an identically zero field".into(),
        ));
    }
    let exponent = if q.is_infinite() {
        d / p
    } else {
        d / p - d / q
    };
    Ok(num / ((n as f64).powf(exponent) * den))
}

/// Fraction of spectral L² mass lying outside the retained cube band; data
/// generators are expected to keep this below ~1e−10.
pub fn frequency_leakage(field: &Field, cubes: &CubeIndexSet) -> f64 {
    let hat = to_frequency(field);
    let grid = hat.grid();
    let n_max = cubes.n_max() as f64;
    let mut outside = 0.0;
    let mut total = 0.0;
    let d = grid.d();
    let values = hat.values();
    grid.for_each_freq(|flat, _, xi| {
        let m = values[flat].norm_sqr();
        total += m;
        if xi[..d].iter().any(|&x| x.abs() > n_max) {
            outside += m;
        }
    });
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}
