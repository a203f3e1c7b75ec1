//! Norm functionals: L^p, H^s, modulation M^{p,q}_s, Besov B^{p,q}_s,
//! mixed space-time L^q_t L^r_x, and a discrete X^{s,b} proxy.
//!
//! Spatial integrals are plain Riemann sums (spectrally accurate for smooth
//! periodic integrands); time integrals use the trapezoid rule. p = ∞ is
//! the grid max. The X^{s,b} proxy lives on a finite tapered window with a
//! discrete τ lattice and is only meaningful for relative comparisons,
//! never as an absolute continuum value.

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpacetimeField};
use crate::grid::bracket;
use crate::spectral::{to_frequency, to_physical};
use crate::wiener::{dyadic_levels, lp_project, smooth_step, CubeIndexSet, LpKind, PartitionOfUnity};

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::validation(name, format!("exponent {p} must be ≥ 1")));
    }
    Ok(())
}

/// ℓ^q of a weighted sequence; q = ∞ is the sup.
fn lq(values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        values.iter().cloned().fold(0.0, f64::max)
    } else {
        values.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Riemann-sum L^p norm; p = ∞ is the grid max.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64> {
    check_exponent("norm.p", p)?;
    let phys = to_physical(field);
    if p.is_infinite() {
        return Ok(phys.values().iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let w = phys.grid().cell_volume();
    Ok((phys.values().iter().map(|v| v.norm().powf(p)).sum::<f64>() * w).powf(1.0 / p))
}

/// ‖⟨∇⟩^s u‖_{L²} computed in frequency space.
pub fn sobolev_norm(field: &Field, s: f64) -> f64 {
    let hat = to_frequency(field);
    let grid = *hat.grid();
    let d = grid.d();
    let mut sum = 0.0;
    let values = hat.values();
    grid.for_each_freq(|flat, _, xi| {
        sum += bracket(&xi[..d]).powf(2.0 * s) * values[flat].norm_sqr();
    });
    (sum * grid.freq_cell_volume()).sqrt()
}

/// Modulation norm ‖⟨n⟩^s ‖ψ(D−n)u‖_{L^p}‖_{ℓ^q} over the retained cubes.
/// Use [`crate::wiener::frequency_leakage`] to check that spectral mass
/// outside the retained band is negligible.
pub fn modulation_norm(
    field: &Field,
    p: f64,
    q: f64,
    s: f64,
    psi: &PartitionOfUnity,
) -> Result<f64> {
    check_exponent("norm.p", p)?;
    check_exponent("norm.q", q)?;
    let cubes = CubeIndexSet::for_grid(field.grid())?;
    let hat = to_frequency(field);
    let grid = *hat.grid();
    let d = grid.d();
    let mut terms = Vec::with_capacity(cubes.len());
    let mut piece = hat.clone();
    for n in cubes.iter() {
        {
            let src = hat.values();
            let dst = piece.values_mut();
            grid.for_each_freq(|flat, _, xi| {
                let m: f64 = xi[..d]
                    .iter()
                    .zip(&n[..d])
                    .map(|(&x, &c)| psi.psi1(x - c as f64))
                    .product();
                dst[flat] = src[flat] * m;
            });
        }
        let norm = lp_norm(&piece, p)?;
        let nf: Vec<f64> = n[..d].iter().map(|&c| c as f64).collect();
        terms.push(bracket(&nf).powf(s) * norm);
    }
    Ok(lq(&terms, q))
}

/// Besov norm ‖2^{js} ‖P_{2^j}u‖_{L^p}‖_{ℓ^q_j} over dyadic blocks.
pub fn besov_norm(field: &Field, p: f64, q: f64, s: f64) -> Result<f64> {
    check_exponent("norm.p", p)?;
    check_exponent("norm.q", q)?;
    let mut terms = Vec::new();
    for (j, n) in dyadic_levels(field.grid()).into_iter().enumerate() {
        let block = lp_project(field, n, LpKind::Eq)?;
        terms.push((2.0f64).powf(j as f64 * s) * lp_norm(&block, p)?);
    }
    Ok(lq(&terms, q))
}

/// Index of the frame at time `t`, which must sit on the frame grid.
fn frame_index(st: &SpacetimeField, t: f64) -> Result<usize> {
    let pos = (t - st.t0()) / st.dt();
    let idx = pos.round() as i64;
    if (pos - idx as f64).abs() > 1e-9 {
        return Err(Error::validation(
            "spacetime.t",
            format!("t = {t} is not on the frame grid (dt = {})", st.dt()),
        ));
    }
    if idx < 0 || idx as usize >= st.frames().len() {
        return Err(Error::validation(
            "spacetime.t",
            format!("t = {t} outside the stored frames [{}, {}]", st.t0(), st.t_end()),
        ));
    }
    Ok(idx as usize)
}

/// Mixed norm ‖u‖_{L^q_t L^r_x([t0, T])}: trapezoid in time of the inner
/// L^r norm to the q-th power; q = ∞ is the max over frames.
pub fn spacetime_norm(st: &SpacetimeField, q: f64, r: f64, t_end: f64) -> Result<f64> {
    check_exponent("norm.q", q)?;
    check_exponent("norm.r", r)?;
    let last = frame_index(st, t_end)?;
    if last == 0 {
        return Err(Error::validation("spacetime.t", "empty time interval"));
    }
    let inner: Vec<f64> = st.frames()[..=last]
        .iter()
        .map(|f| lp_norm(f, r))
        .collect::<Result<_>>()?;
    if q.is_infinite() {
        return Ok(inner.into_iter().fold(0.0, f64::max));
    }
    let mut acc = 0.0;
    for (i, v) in inner.iter().enumerate() {
        let w = if i == 0 || i == last { 0.5 } else { 1.0 };
        acc += w * v.powf(q);
    }
    Ok((acc * st.dt()).powf(1.0 / q))
}

/// Fraction of the window tapered smoothly to zero at each end before the
/// temporal transform in [`xsb_norm`].
pub const XSB_TAPER_FRACTION: f64 = 0.1;

/// Discrete X^{s,b} proxy: smooth temporal taper, discrete space-time
/// Fourier transform, weight ⟨ξ⟩^s ⟨τ + 4π²|ξ|²⟩^b with τ in angular
/// units so the weight is minimal exactly on the free dispersion relation.
pub fn xsb_norm(st: &SpacetimeField, s: f64, b: f64) -> Result<f64> {
    let n_t = st.frames().len();
    if n_t < 16 {
        return Err(Error::validation(
            "xsb.frames",
            format!("need at least 16 frames, got {n_t}"),
        ));
    }
    let grid = *st.grid();
    let d = grid.d();
    let npts = grid.len();
    let dt = st.dt();

    let ramp = (XSB_TAPER_FRACTION * n_t as f64).max(1.0);
    let taper: Vec<f64> = (0..n_t)
        .map(|m| {
            let up = smooth_step((m as f64 + 0.5) / ramp);
            let down = smooth_step((n_t as f64 - 0.5 - m as f64) / ramp);
            up * down
        })
        .collect();

    // point-major layout: contiguous time series per spatial lattice point
    let mut series = vec![Complex64::ZERO; npts * n_t];
    for (m, frame) in st.frames().iter().enumerate() {
        let hat = to_frequency(frame);
        for (k, v) in hat.values().iter().enumerate() {
            series[k * n_t + m] = v * taper[m];
        }
    }

    // one batched FFT over all per-point time series
    let fft = crate::spectral::plan(n_t, FftDirection::Forward);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut series, &mut scratch);

    // angular temporal frequencies of the native DFT bins
    let dnu = 1.0 / (n_t as f64 * dt);
    let tau_angular: Vec<f64> = (0..n_t)
        .map(|j| {
            let centered = if j <= n_t / 2 { j as i64 } else { j as i64 - n_t as i64 };
            2.0 * std::f64::consts::PI * centered as f64 * dnu
        })
        .collect();

    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mut total = 0.0;
    let mut k = 0usize;
    grid.for_each_freq(|_, _, xi| {
        let line = &series[k * n_t..(k + 1) * n_t];
        let xi2: f64 = xi[..d].iter().map(|x| x * x).sum();
        let sx = bracket(&xi[..d]).powf(2.0 * s);
        let disp = 4.0 * pi2 * xi2;
        let mut acc = 0.0;
        for (tau, v) in tau_angular.iter().zip(line) {
            let resonance = tau + disp;
            acc += (1.0 + resonance * resonance).powf(b) * v.norm_sqr();
        }
        total += sx * acc;
        k += 1;
    });

    Ok((total * dt * dt * dnu * grid.freq_cell_volume()).sqrt())
}

/// Scaling-critical Sobolev index s_c = d/2 − 2/(p−1) for the power-p
/// nonlinearity.
pub fn critical_index(d: usize, p_nl: f64) -> Result<f64> {
    if !(p_nl > 1.0) {
        return Err(Error::validation(
            "nls.p",
            format!("nonlinearity power {p_nl} must be > 1"),
        ));
    }
    Ok(d as f64 / 2.0 - 2.0 / (p_nl - 1.0))
}

/// Schrödinger admissibility: 2/q + d/r = d/2 with 2 ≤ q, r ≤ ∞ and
/// (q, r, d) ≠ (2, ∞, 2).
pub fn is_admissible(q: f64, r: f64, d: usize) -> bool {
    if q < 2.0 || r < 2.0 || q.is_nan() || r.is_nan() {
        return false;
    }
    if q == 2.0 && r.is_infinite() && d == 2 {
        return false;
    }
    let lhs = 2.0 / q + d as f64 / r;
    (lhs - d as f64 / 2.0).abs() < 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Lp,
    Hs,
    Modulation,
    Besov,
    SpaceTime,
    Xsb,
}

/// Serializable description of a norm, used in manifests and JSON records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}
