//! Periodic computational box approximating ℝ^d.
//!
//! The box is [−L, L)^d sampled at M points per axis (M a power of two), so
//! dx = 2L/M. The frequency lattice is ξ_k = k/(2L) for k ∈ {−M/2, …, M/2−1}
//! per axis, matching the e^{−2πi x·ξ} transform convention: the Nyquist
//! frequency is M/(4L) and every unit frequency cube holds (2L)^d lattice
//! points, which is why L ≥ 1 is required.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported dimension.
pub const MAX_DIM: usize = 4;

/// Default per-field memory budget: 2 GiB.
pub const DEFAULT_MEM_BUDGET: u64 = 2 << 30;

/// Environment variable overriding the per-field memory budget in bytes.
pub const MEM_BUDGET_ENV: &str = "SPECLAB_MEM_BUDGET";

/// d=4 grids are capped at this many points per axis unless overridden.
pub const D4_DEFAULT_CAP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    d: usize,
    m: usize,
    l: f64,
}

impl TorusGrid {
    /// Build a grid, enforcing the memory budget (from the environment when
    /// set) and the default d=4 cap.
    pub fn new(d: usize, m: usize, l: f64) -> Result<Self> {
        let budget = std::env::var(MEM_BUDGET_ENV)
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
            .unwrap_or(DEFAULT_MEM_BUDGET);
        Self::with_budget(d, m, l, budget, false)
    }

    /// As [`TorusGrid::new`] but with an explicit budget and an override for
    /// the d=4 resolution cap.
    pub fn with_budget(d: usize, m: usize, l: f64, budget: u64, allow_large: bool) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::validation("grid.d", format!("dimension {d} not in 1..=4")));
        }
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::validation(
                "grid.m",
                format!("M = {m} must be a power of two ≥ 8"),
            ));
        }
        if !(l >= 1.0) {
            return Err(Error::validation(
                "grid.l",
                format!("L = {l} < 1 leaves fewer than one lattice point per unit cube per axis"),
            ));
        }
        if d == 4 && m > D4_DEFAULT_CAP && !allow_large {
            return Err(Error::validation(
                "grid.m",
                format!("d=4 runs are capped at M = {D4_DEFAULT_CAP} by default"),
            ));
        }
        let points = (m as u64).checked_pow(d as u32).ok_or(Error::MemoryBudget {
            requested: u64::MAX,
            budget,
        })?;
        let requested = points.saturating_mul(16);
        if requested > budget {
            return Err(Error::MemoryBudget { requested, budget });
        }
        Ok(TorusGrid { d, m, l })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Total number of lattice points M^d.
    pub fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spatial step 2L/M.
    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.m as f64
    }

    /// Frequency step 1/(2L).
    pub fn dxi(&self) -> f64 {
        1.0 / (2.0 * self.l)
    }

    /// dx^d, the physical-space quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// dξ^d, the frequency-space quadrature weight.
    pub fn freq_cell_volume(&self) -> f64 {
        self.dxi().powi(self.d as i32)
    }

    /// Box volume (2L)^d.
    pub fn volume(&self) -> f64 {
        (2.0 * self.l).powi(self.d as i32)
    }

    /// Largest resolved frequency M/(4L) per axis.
    pub fn nyquist(&self) -> f64 {
        self.m as f64 / (4.0 * self.l)
    }

    /// Largest unit-cube index retained for the Wiener decomposition:
    /// floor(M/(4L)) − 1, so every retained cube stays strictly inside the
    /// resolved band. Negative means the grid cannot hold a single cube.
    pub fn cube_limit(&self) -> i64 {
        self.nyquist().floor() as i64 - 1
    }

    /// Physical coordinates of the flat (row-major) index.
    pub fn x(&self, flat: usize) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        let mut rem = flat;
        for a in (0..self.d).rev() {
            let j = rem % self.m;
            rem /= self.m;
            out[a] = -self.l + j as f64 * self.dx();
        }
        out
    }

    /// Centered integer frequency index k of the flat index, k ∈ [−M/2, M/2).
    pub fn k(&self, flat: usize) -> [i64; MAX_DIM] {
        let mut out = [0i64; MAX_DIM];
        let mut rem = flat;
        let half = (self.m / 2) as i64;
        for a in (0..self.d).rev() {
            let j = (rem % self.m) as i64;
            rem /= self.m;
            out[a] = j - half;
        }
        out
    }

    /// Frequency ξ = k/(2L) of the flat index.
    pub fn xi(&self, flat: usize) -> [f64; MAX_DIM] {
        let k = self.k(flat);
        let mut out = [0.0; MAX_DIM];
        for a in 0..self.d {
            out[a] = k[a] as f64 * self.dxi();
        }
        out
    }

    /// Iterate (flat, k, ξ) over the centered frequency lattice without
    /// per-point divisions.
    pub fn for_each_freq(&self, mut f: impl FnMut(usize, &[i64; MAX_DIM], &[f64; MAX_DIM])) {
        let half = (self.m / 2) as i64;
        let mut k = [0i64; MAX_DIM];
        let mut xi = [0.0; MAX_DIM];
        let dxi = self.dxi();
        for a in 0..self.d {
            k[a] = -half;
            xi[a] = k[a] as f64 * dxi;
        }
        for flat in 0..self.len() {
            f(flat, &k, &xi);
            // odometer increment over the last axis fastest
            for a in (0..self.d).rev() {
                k[a] += 1;
                if k[a] < half {
                    xi[a] = k[a] as f64 * dxi;
                    break;
                }
                k[a] = -half;
                xi[a] = k[a] as f64 * dxi;
            }
        }
    }
}

/// ⟨v⟩ = (1 + |v|²)^{1/2} for a d-vector.
pub fn bracket(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}
