//! Forward/inverse Fourier transforms, Fourier multipliers, and the free
//! Schrödinger propagator on the periodic box.
//!
//! Convention: û(ξ) = ∫ u(x) e^{−2πi x·ξ} dx, discretized so the forward
//! transform carries a dx^d weight and the inverse a (1/(2L))^d weight.
//! Under this convention Δ has symbol −4π²|ξ|², so S(t) = e^{itΔ} is the
//! multiplier e^{−4π²it|ξ|²}.
//!
//! Frequency-space fields are stored on the centered lattice (row-major in
//! k + M/2); the FFT-native ordering never escapes this module. Because the
//! box is [−L, L) the two orderings differ only by the alternating phase
//! (−1)^{k_1+…+k_d}.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::grid::TorusGrid;

type Plan = Arc<dyn Fft<f64>>;

pub(crate) fn plan(m: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (m, direction == FftDirection::Forward);
    let mut guard = cache.lock().unwrap();
    guard
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(m, direction))
        .clone()
}

/// Unnormalized multi-dimensional FFT in native (wrap-around) ordering.
/// Each round batch-transforms the contiguous last axis, then rotates the
/// axis order with a blocked transpose; after d rounds every axis has been
/// transformed and the layout is back to the original order.
fn fft_nd(values: &mut [Complex64], d: usize, m: usize, direction: FftDirection) {
    let fft = plan(m, direction);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    if d == 1 {
        fft.process_with_scratch(values, &mut scratch);
        return;
    }
    let rows = values.len() / m;
    let mut tmp = vec![Complex64::ZERO; values.len()];
    for _ in 0..d {
        fft.process_with_scratch(values, &mut scratch);
        transpose::transpose(values, &mut tmp, m, rows);
        values.copy_from_slice(&tmp);
    }
}

/// Signs (−1)^{j_1+…+j_d} over row-major indices, cached per (d, m).
fn parity_signs(d: usize, m: usize) -> Arc<Vec<f64>> {
    static SIGNS: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = SIGNS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((d, m))
        .or_insert_with(|| {
            let len = m.pow(d as u32);
            let mut signs = vec![1.0f64; len];
            for (flat, s) in signs.iter_mut().enumerate() {
                let mut rem = flat;
                let mut parity = 0usize;
                for _ in 0..d {
                    parity ^= rem % m;
                    rem /= m;
                }
                if parity & 1 == 1 {
                    *s = -1.0;
                }
            }
            Arc::new(signs)
        })
        .clone()
}

/// Multiply every entry by (−1)^{j_1+…+j_d} of its row-major index, with an
/// extra scalar weight folded in. The box starts at −L and the lattice at
/// −M/2, so this one modulation converts between FFT-native and centered
/// conventions on both sides of the transform (M/2 is even for all
/// supported M, so index parity equals k-parity).
fn modulate(values: &mut [Complex64], d: usize, m: usize, weight: f64) {
    let signs = parity_signs(d, m);
    for (v, s) in values.iter_mut().zip(signs.iter()) {
        *v *= s * weight;
    }
}

/// Toggle a field between physical and frequency space.
pub fn transform(field: &Field) -> Field {
    let grid = *field.grid();
    let (d, m) = (grid.d(), grid.m());
    let (direction, weight, target) = match field.space() {
        Space::Physical => (FftDirection::Forward, grid.cell_volume(), Space::Frequency),
        Space::Frequency => (
            FftDirection::Inverse,
            grid.freq_cell_volume(),
            Space::Physical,
        ),
    };
    let mut out = field.values().to_vec();
    modulate(&mut out, d, m, 1.0);
    fft_nd(&mut out, d, m, direction);
    modulate(&mut out, d, m, weight);
    Field::new(grid, target, out).expect("size preserved")
}

/// A field in frequency space (transforming if necessary).
pub fn to_frequency(field: &Field) -> Field {
    match field.space() {
        Space::Frequency => field.clone(),
        Space::Physical => transform(field),
    }
}

/// A field in physical space (transforming if necessary).
pub fn to_physical(field: &Field) -> Field {
    match field.space() {
        Space::Physical => field.clone(),
        Space::Frequency => transform(field),
    }
}

/// Apply the Fourier multiplier with symbol `symbol(ξ)`. The output is
/// returned in the same space as the input; the input is never mutated.
/// Non-finite symbol values are rejected.
pub fn apply_multiplier(
    field: &Field,
    symbol: impl Fn(&[f64]) -> Complex64,
) -> Result<Field> {
    let d = field.grid().d();
    let mut hat = to_frequency(field);
    let grid = *hat.grid();
    let mut bad = None;
    {
        let values = hat.values_mut();
        grid.for_each_freq(|flat, _, xi| {
            let s = symbol(&xi[..d]);
            if !(s.re.is_finite() && s.im.is_finite()) && bad.is_none() {
                bad = Some(xi[..d].to_vec());
            }
            values[flat] *= s;
        });
    }
    if let Some(xi) = bad {
        return Err(Error::NumericalFault(format!(
            "multiplier symbol non-finite at ξ = {xi:?}"
        )));
    }
    Ok(match field.space() {
        Space::Frequency => hat,
        Space::Physical => transform(&hat),
    })
}

/// Multiply a frequency-space value buffer in place by e^{−4π²it|ξ|²},
/// i.e. apply S(t) = e^{itΔ}. Exposed at the buffer level so time-stepping
/// loops can avoid reallocating fields.
pub(crate) fn rotate_frequency_values(values: &mut [Complex64], grid: &TorusGrid, t: f64) {
    grid.for_each_freq(|flat, _, xi| {
        let omega: f64 = xi[..grid.d()].iter().map(|x| x * x).sum();
        let phase = -4.0 * std::f64::consts::PI * std::f64::consts::PI * t * omega;
        values[flat] *= Complex64::from_polar(1.0, phase);
    });
}

/// Free Schrödinger propagator S(t) = e^{itΔ}. Unitary on L²; same-space
/// output as the input.
pub fn propagate(field: &Field, t: f64) -> Field {
    if t == 0.0 {
        return field.clone();
    }
    let mut hat = to_frequency(field);
    let grid = *hat.grid();
    rotate_frequency_values(hat.values_mut(), &grid, t);
    match field.space() {
        Space::Frequency => hat,
        Space::Physical => transform(&hat),
    }
}

/// Spectral interpolation onto a finer grid: zero-pad the centered
/// spectrum from M to `new_m` points per axis at fixed box size. Exact for
/// band-limited data; the L² norm and every lattice coefficient are
/// preserved.
pub fn upsample(field: &Field, new_m: usize) -> Result<Field> {
    let grid = *field.grid();
    if new_m < grid.m() {
        return Err(Error::validation(
            "upsample.m",
            format!("target M = {new_m} below source M = {}", grid.m()),
        ));
    }
    let fine = TorusGrid::with_budget(
        grid.d(),
        new_m,
        grid.l(),
        u64::MAX,
        true,
    )?;
    let hat = to_frequency(field);
    let mut out = Field::zeros(fine, Space::Frequency);
    let d = grid.d();
    let half = (grid.m() / 2) as i64;
    let fine_half = (new_m / 2) as i64;
    let values = out.values_mut();
    let src = hat.values();
    // copy each coarse coefficient to the matching fine lattice slot
    for (flat, v) in src.iter().enumerate() {
        let k = grid.k(flat);
        let mut fine_flat = 0usize;
        for a in 0..d {
            debug_assert!(k[a] >= -half && k[a] < half);
            fine_flat = fine_flat * new_m + (k[a] + fine_half) as usize;
        }
        values[fine_flat] = *v;
    }
    Ok(match field.space() {
        Space::Frequency => out,
        Space::Physical => transform(&out),
    })
}

/// Table of −4π²|ξ|² (the symbol of Δ) over the lattice, for propagator
/// recurrences in time-stepping loops.
pub(crate) fn laplacian_symbol(grid: &TorusGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    grid.for_each_freq(|flat, _, xi| {
        let omega: f64 = xi[..grid.d()].iter().map(|x| x * x).sum();
        out[flat] = -4.0 * pi2 * omega;
    });
    out
}
