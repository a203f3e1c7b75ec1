//! Subgaussian coefficient distributions, reproducible sampling, and the
//! unit-cube randomization of rough data.
//!
//! Sampling is counter-based: one ChaCha8 keystream per master seed, with
//! the 64-bit stream id selecting the trial and the word position selecting
//! the coefficient. Every coefficient is therefore a pure function of
//! (seed, stream, cube index) — draws are bit-identical regardless of
//! execution order or thread count.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::grid::{bracket, TorusGrid};
use crate::spectral::{to_frequency, transform};
use crate::wiener::{CubeIndexSet, PartitionOfUnity};

/// 32-bit keystream words reserved per coefficient.
const WORDS_PER_COEFF: u128 = 8;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Expand a 64-bit seed into a ChaCha key.
fn keyed_rng(seed: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn uniform_01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Independent N(0, 1/2) pair via Box-Muller; consumes exactly two u64.
fn gaussian_component_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = uniform_01(rng);
    let u2 = uniform_01(rng);
    let r = (-(1.0 - u1).ln()).sqrt(); // = sqrt(−2 ln u)·(1/√2)
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Coefficient distributions satisfying the subgaussian moment-generating
/// bound E e^{γX} ≤ e^{cγ²}. All are normalized to E|g|² = 1, i.e. variance
/// 1/2 per real component, with independent real and imaginary parts; at
/// this normalization the sharpest constant is c = 1/4 for each of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffDistribution {
    /// Re, Im ~ N(0, 1/2) independent.
    ComplexGaussian,
    /// Re, Im = ±1/√2 with equal probability, independent.
    Bernoulli,
    /// Re, Im uniform on [−√(3/2), √(3/2)] independent (compact support).
    UniformDisc,
}

/// Half-width of the per-component uniform distribution at unit second
/// moment: variance a²/3 = 1/2.
pub const UNIFORM_HALF_WIDTH: f64 = 1.224744871391589; // √(3/2)

impl CoeffDistribution {
    /// Smallest c with E e^{γX} ≤ e^{cγ²} per real component (analytic).
    pub fn subgaussian_constant(&self) -> f64 {
        0.25
    }

    /// Per-component moment generating function E e^{γX} (analytic).
    pub fn mgf(&self, gamma: f64) -> f64 {
        match self {
            // variance 1/2 Gaussian
            CoeffDistribution::ComplexGaussian => (gamma * gamma / 4.0).exp(),
            // ±1/√2
            CoeffDistribution::Bernoulli => (gamma / std::f64::consts::SQRT_2).cosh(),
            // uniform on [−a, a]: sinh(γa)/(γa)
            CoeffDistribution::UniformDisc => {
                let x = gamma * UNIFORM_HALF_WIDTH;
                if x.abs() < 1e-8 {
                    1.0 + x * x / 6.0
                } else {
                    x.sinh() / x
                }
            }
        }
    }

    /// One complex coefficient; consumes a fixed number of keystream words.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        match self {
            CoeffDistribution::ComplexGaussian => {
                let (re, im) = gaussian_component_pair(rng);
                Complex64::new(re, im)
            }
            CoeffDistribution::Bernoulli => {
                let bits = rng.next_u64();
                let half = 1.0 / std::f64::consts::SQRT_2;
                Complex64::new(
                    if bits & 1 == 0 { half } else { -half },
                    if bits & 2 == 0 { half } else { -half },
                )
            }
            CoeffDistribution::UniformDisc => {
                let re = UNIFORM_HALF_WIDTH * (2.0 * uniform_01(rng) - 1.0);
                let im = UNIFORM_HALF_WIDTH * (2.0 * uniform_01(rng) - 1.0);
                Complex64::new(re, im)
            }
        }
    }
}

/// One sampled realization of the coefficients {g_n} on a cube lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomDraw {
    pub seed: u64,
    pub stream: u64,
    d: usize,
    n_max: i64,
    values: Vec<Complex64>,
}

impl RandomDraw {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn matches(&self, cubes: &CubeIndexSet) -> bool {
        self.d == cubes.d() && self.n_max == cubes.n_max() && self.values.len() == cubes.len()
    }
}

/// i.i.d. coefficients keyed by (seed, stream, position); position i uses a
/// reserved block of keystream words so draws are order-independent.
pub fn draw_sequence(dist: CoeffDistribution, seed: u64, stream: u64, count: usize) -> Vec<Complex64> {
    let mut rng = keyed_rng(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|i| {
            rng.set_word_pos(i as u128 * WORDS_PER_COEFF);
            dist.draw(&mut rng)
        })
        .collect()
}

/// Draw i.i.d. coefficients for every retained cube, keyed by
/// (seed, stream, cube position).
pub fn sample(
    dist: CoeffDistribution,
    cubes: &CubeIndexSet,
    seed: u64,
    stream: u64,
) -> RandomDraw {
    RandomDraw {
        seed,
        stream,
        d: cubes.d(),
        n_max: cubes.n_max(),
        values: draw_sequence(dist, seed, stream, cubes.len()),
    }
}

/// Empirical E e^{γ Re g} by Monte Carlo (used for distributions without a
/// closed-form MGF and as a cross-check).
pub fn mc_mgf(dist: CoeffDistribution, gamma: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = keyed_rng(seed);
    let mut sum = 0.0;
    for i in 0..trials {
        rng.set_word_pos(i as u128 * WORDS_PER_COEFF);
        sum += (gamma * dist.draw(&mut rng).re).exp();
    }
    sum / trials as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgaussianPoint {
    pub gamma: f64,
    pub mgf: f64,
    pub bound: f64,
}

/// Verification of the subgaussian condition over a γ grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgaussianReport {
    pub dist: CoeffDistribution,
    pub declared_c: f64,
    /// max over the grid of ln MGF(γ)/γ².
    pub fitted_c: f64,
    pub pass: bool,
    pub points: Vec<SubgaussianPoint>,
}

/// Check E e^{γX} ≤ e^{cγ²} against the declared constant on a γ grid.
/// A failing report means the distribution must not be used in tail
/// experiments.
pub fn verify_subgaussian(dist: CoeffDistribution, gamma_grid: &[f64]) -> Result<SubgaussianReport> {
    if gamma_grid.is_empty() {
        return Err(Error::validation("subgaussian.gamma_grid", "empty grid"));
    }
    let declared = dist.subgaussian_constant();
    let mut fitted: f64 = 0.0;
    let mut pass = true;
    let mut points = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        let mgf = dist.mgf(gamma);
        let bound = (declared * gamma * gamma).exp();
        if mgf > bound * (1.0 + 1e-12) {
            pass = false;
        }
        if gamma != 0.0 {
            fitted = fitted.max(mgf.ln() / (gamma * gamma));
        }
        points.push(SubgaussianPoint { gamma, mgf, bound });
    }
    Ok(SubgaussianReport {
        dist,
        declared_c: declared,
        fitted_c: fitted,
        pass,
        points,
    })
}

/// Wiener randomization φ^ω = Σ_n g_n ψ(D−n)φ, computed in one
/// frequency-space pass through the combined multiplier Σ_n g_n ψ(ξ−n).
/// The spectrum of φ must lie inside the retained band.
pub fn randomize(phi: &Field, draw: &RandomDraw, psi: &PartitionOfUnity) -> Result<Field> {
    let grid = *phi.grid();
    let cubes = CubeIndexSet::for_grid(&grid)?;
    if !draw.matches(&cubes) {
        return Err(Error::GridMismatch(format!(
            "draw was sampled for d = {}, n_max = {}; grid needs d = {}, n_max = {}",
            draw.d,
            draw.n_max,
            cubes.d(),
            cubes.n_max()
        )));
    }
    let leak = crate::wiener::frequency_leakage(phi, &cubes);
    if leak > 1e-10 {
        return Err(Error::validation(
            "randomize.phi",
            format!("spectral mass fraction {leak:.3e} outside the retained cubes"),
        ));
    }
    let d = grid.d();
    let n_max = cubes.n_max();
    // cube (n_1, …, n_d) lives at position Σ (n_a + n_max)·side^(d−1−a)
    let side = (2 * n_max + 1) as usize;

    let mut hat = to_frequency(phi);
    let values = hat.values_mut();
    grid.for_each_freq(|flat, _, xi| {
        let mut mult = Complex64::ZERO;
        // only the neighboring integer translates can contribute: enumerate
        // floor(ξ_a) − 1 ..= floor(ξ_a) + 1 per axis
        let mut base = [0i64; 4];
        for a in 0..d {
            base[a] = xi[a].floor() as i64;
        }
        let combos = 3usize.pow(d as u32);
        'combo: for c in 0..combos {
            let mut rem = c;
            let mut w = 1.0;
            let mut pos = 0usize;
            for a in 0..d {
                let n_a = base[a] + (rem % 3) as i64 - 1;
                rem /= 3;
                if n_a.abs() > n_max {
                    continue 'combo;
                }
                w *= psi.psi1(xi[a] - n_a as f64);
                if w == 0.0 {
                    continue 'combo;
                }
                pos = pos * side + (n_a + n_max) as usize;
            }
            mult += draw.values[pos] * w;
        }
        values[flat] *= mult;
    });

    Ok(match phi.space() {
        Space::Frequency => hat,
        Space::Physical => transform(&hat),
    })
}

/// Deterministic-modulus rough data: |φ̂(ξ)| = ⟨ξ⟩^{−s_decay − d/2 − 0.01}
/// with seeded phases, supported on the retained cube band. The phases are
/// keyed by the integer lattice index so the function is fixed across
/// randomization trials, and stable when M is refined at fixed L.
pub fn make_rough_data(grid: &TorusGrid, s_decay: f64, seed: u64) -> Result<Field> {
    rough_data_impl(grid, s_decay, seed, true)
}

/// As [`make_rough_data`] but with all phases aligned to zero, producing a
/// concentrated profile whose high L^p norms grow under grid refinement.
pub fn make_aligned_data(grid: &TorusGrid, s_decay: f64) -> Result<Field> {
    rough_data_impl(grid, s_decay, 0, false)
}

fn rough_data_impl(grid: &TorusGrid, s_decay: f64, seed: u64, random_phases: bool) -> Result<Field> {
    let cubes = CubeIndexSet::for_grid(grid)?;
    let n_max = cubes.n_max() as f64;
    let d = grid.d();
    let decay = s_decay.min(1e3) + d as f64 / 2.0 + 0.01;
    let mut hat = Field::zeros(*grid, Space::Frequency);
    let values = hat.values_mut();
    grid.for_each_freq(|flat, k, xi| {
        if xi[..d].iter().any(|&x| x.abs() > n_max) {
            return;
        }
        let amp = bracket(&xi[..d]).powf(-decay);
        let phase = if random_phases {
            // stable hash of (seed, k): same ξ ⇒ same phase across M at fixed L
            let mut h = seed ^ 0xA076_1D64_78BD_642F;
            for &c in &k[..d] {
                h ^= c as u64;
                h = splitmix64(&mut h);
            }
            2.0 * std::f64::consts::PI * (h >> 11) as f64 / (1u64 << 53) as f64
        } else {
            0.0
        };
        values[flat] = Complex64::from_polar(amp, phase);
    });
    Ok(hat)
}

/// Declarative initial-data generator, recorded in experiment manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PhiSpec {
    /// Rough data with seeded phases; in H^σ exactly for σ < s_decay.
    Rough { s_decay: f64, scale: f64, seed: u64 },
    /// Same modulus with aligned phases: a concentrated profile whose high
    /// L^p norms grow under grid refinement.
    Aligned { s_decay: f64, scale: f64 },
    /// scale · dilation^{d/2} e^{−π dilation²|x|²} (L²-invariant dilations).
    Gaussian { scale: f64, dilation: f64 },
    /// Smooth bump supported strictly inside the ψ ≡ 1 plateau of the
    /// central cube, so ψ(D)φ = φ exactly.
    OneCube { scale: f64 },
}

/// Support radius of the [`PhiSpec::OneCube`] bump per axis; keep partition
/// transition widths ≤ 1/4 so the plateau covers it.
pub const ONE_CUBE_RADIUS: f64 = 0.2;

impl PhiSpec {
    /// Materialize the field in frequency space on the given grid.
    pub fn build(&self, grid: &TorusGrid) -> Result<Field> {
        match *self {
            PhiSpec::Rough { s_decay, scale, seed } => {
                Ok(make_rough_data(grid, s_decay, seed)?.scaled(Complex64::new(scale, 0.0)))
            }
            PhiSpec::Aligned { s_decay, scale } => {
                Ok(make_aligned_data(grid, s_decay)?.scaled(Complex64::new(scale, 0.0)))
            }
            PhiSpec::Gaussian { scale, dilation } => {
                if !(dilation > 0.0) {
                    return Err(Error::validation("phi.dilation", "must be > 0"));
                }
                let d = grid.d();
                let amp = scale * dilation.powf(d as f64 / 2.0);
                let f = Field::from_physical_fn(*grid, move |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    Complex64::new(
                        amp * (-std::f64::consts::PI * dilation * dilation * r2).exp(),
                        0.0,
                    )
                });
                Ok(to_frequency(&f))
            }
            PhiSpec::OneCube { scale } => {
                let d = grid.d();
                let mut hat = Field::zeros(*grid, Space::Frequency);
                let values = hat.values_mut();
                grid.for_each_freq(|flat, _, xi| {
                    let mut amp = scale;
                    for &x in &xi[..d] {
                        let t = x / ONE_CUBE_RADIUS;
                        if t.abs() >= 1.0 {
                            return;
                        }
                        amp *= (-1.0 / (1.0 - t * t)).exp() * std::f64::consts::E;
                    }
                    values[flat] = Complex64::new(amp, 0.0);
                });
                Ok(hat)
            }
        }
    }
}

/// Random band-limited test field: independent complex Gaussian lattice
/// coefficients inside the retained band, zero outside.
pub fn random_band_limited(grid: &TorusGrid, seed: u64) -> Result<Field> {
    let cubes = CubeIndexSet::for_grid(grid)?;
    let n_max = cubes.n_max() as f64;
    let d = grid.d();
    let mut rng = keyed_rng(seed ^ 0x517C_C1B7_2722_0A95);
    let mut hat = Field::zeros(*grid, Space::Frequency);
    let values = hat.values_mut();
    grid.for_each_freq(|flat, _, xi| {
        if xi[..d].iter().all(|&x| x.abs() <= n_max) {
            let (re, im) = gaussian_component_pair(&mut rng);
            values[flat] = Complex64::new(re, im);
        }
    });
    Ok(hat)
}
