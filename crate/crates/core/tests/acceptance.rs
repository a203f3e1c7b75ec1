//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with its measured quantities and elapsed time. Tolerances are
//! pinned in code next to each assertion.

use std::time::Instant;

use num_complex::Complex64;
use speclab::field::{Field, Space};
use speclab::nls::{
    duhamel, linear_part, lwp_probability, picard_solve, smoothness_gap, splitstep_reference,
    LwpConfig, PicardConfig, Sign,
};
use speclab::norms::sobolev_norm;
use speclab::probe::{
    khintchine_moments, lp_improvement_demo, strichartz_t_scaling, tail_experiment,
    deterministic_strichartz, LambdaGrid, Statistic, TailExperiment, FIT_BAND,
};
use speclab::randomize::{
    randomize, random_band_limited, sample, CoeffDistribution, PhiSpec,
};
use speclab::spectral::{propagate, to_physical, transform, upsample};
use speclab::stats::median;
use speclab::wiener::{project_cube, CubeIndexSet, PartitionOfUnity};
use speclab::{SpacetimeField, TorusGrid};

fn report(id: u32, pass: bool, detail: &str, started: Instant) {
    println!(
        "ACCEPTANCE {id:02}: {} — {detail} ({:.1?})",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed()
    );
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn uniform(state: &mut u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (splitmix(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// 1. Partition identity on 1e5 probe points and cube reconstruction on
///    100 random band-limited fields (d = 1, 2).
#[test]
fn acceptance_01_partition_reconstruction() {
    let t0 = Instant::now();
    let psi = PartitionOfUnity::new(0.25).unwrap();

    let mut state = 0xFEED_0001u64;
    let mut max_dev: f64 = 0.0;
    for _ in 0..50_000 {
        let xi = uniform(&mut state, -9.0, 9.0);
        let sum: f64 = (-10..=10).map(|m| psi.psi1(xi - m as f64)).sum();
        max_dev = max_dev.max((sum - 1.0).abs());
    }
    for _ in 0..50_000 {
        let xi = [uniform(&mut state, -4.0, 4.0), uniform(&mut state, -4.0, 4.0)];
        let mut sum = 0.0;
        for ma in -5..=5 {
            for mb in -5..=5 {
                sum += psi.psi(&[xi[0] - ma as f64, xi[1] - mb as f64]);
            }
        }
        max_dev = max_dev.max((sum - 1.0).abs());
    }

    let mut max_rec: f64 = 0.0;
    for trial in 0..100u64 {
        let grid = if trial % 2 == 0 {
            TorusGrid::new(1, 128, 2.0).unwrap()
        } else {
            TorusGrid::new(2, 32, 1.0).unwrap()
        };
        let cubes = CubeIndexSet::for_grid(&grid).unwrap();
        let u = random_band_limited(&grid, 900 + trial).unwrap();
        let mut sum = Field::zeros(grid, Space::Frequency);
        for n in cubes.iter() {
            sum = sum
                .add(&project_cube(&u, &n[..grid.d()], &psi).unwrap())
                .unwrap();
        }
        max_rec = max_rec.max(sum.sub(&u).unwrap().l2_norm() / u.l2_norm());
    }

    let pass = max_dev < 1e-12 && max_rec < 1e-11 && t0.elapsed().as_secs_f64() < 10.0;
    report(
        1,
        pass,
        &format!("max|Σψ−1| = {max_dev:.2e} (< 1e-12), max reconstruction err = {max_rec:.2e} (< 1e-11)"),
        t0,
    );
    assert!(pass);
}

/// 2. Spectral core: Plancherel, propagator unitarity and group law to
///    1e−11; Gaussian free evolution against the closed form to 1e−8.
#[test]
fn acceptance_02_spectral_core() {
    let t0 = Instant::now();
    let mut worst_plancherel: f64 = 0.0;
    let mut worst_unitary: f64 = 0.0;
    let mut worst_group: f64 = 0.0;
    for trial in 0..100u64 {
        let grid = TorusGrid::new(1, 64, 2.0).unwrap();
        let hat = random_band_limited(&grid, 7000 + trial).unwrap();
        let phys = transform(&hat);
        let rel = (phys.l2_norm() - hat.l2_norm()).abs() / hat.l2_norm();
        worst_plancherel = worst_plancherel.max(rel);

        let s = 0.1 + 0.003 * trial as f64;
        let t = 0.2 - 0.002 * trial as f64;
        let u1 = propagate(&hat, s);
        worst_unitary = worst_unitary.max((u1.l2_norm() - hat.l2_norm()).abs() / hat.l2_norm());
        let a = propagate(&u1, t);
        let b = propagate(&hat, s + t);
        worst_group = worst_group.max(a.sub(&b).unwrap().l2_norm() / hat.l2_norm());
    }

    // closed-form evolved Gaussian: S(t) e^{−πx²} = (1+4πit)^{−1/2} e^{−πx²/(1+4πit)}
    let grid = TorusGrid::new(1, 256, 8.0).unwrap();
    let gauss = Field::from_physical_fn(grid, |x| {
        Complex64::new((-std::f64::consts::PI * x[0] * x[0]).exp(), 0.0)
    });
    let mut worst_gauss: f64 = 0.0;
    for &t in &[0.05, 0.2] {
        let evolved = propagate(&gauss, t);
        let a = Complex64::new(1.0, 4.0 * std::f64::consts::PI * t);
        for (flat, v) in evolved.values().iter().enumerate() {
            let x = grid.x(flat)[0];
            let expected =
                (Complex64::new(-std::f64::consts::PI * x * x, 0.0) / a).exp() / a.sqrt();
            worst_gauss = worst_gauss.max((v - expected).norm());
        }
    }

    let pass = worst_plancherel < 1e-11
        && worst_unitary < 1e-11
        && worst_group < 1e-11
        && worst_gauss < 1e-8
        && t0.elapsed().as_secs_f64() < 10.0;
    report(
        2,
        pass,
        &format!(
            "plancherel {worst_plancherel:.2e}, unitarity {worst_unitary:.2e}, group {worst_group:.2e} (< 1e-11); gaussian {worst_gauss:.2e} (< 1e-8)"
        ),
        t0,
    );
    assert!(pass);
}

/// 3. Khintchine moments: p = 2 ratio equals 1 within 3 standard errors;
///    fitted growth exponent α ≤ 0.55 for Gaussian and Bernoulli.
#[test]
fn acceptance_03_khintchine() {
    let t0 = Instant::now();
    let c: Vec<f64> = (0..16).map(|n| 1.0 / (1.0 + (n * n) as f64).sqrt()).collect();
    let p_list = [2.0, 4.0, 8.0, 16.0];
    let mut pass = true;
    let mut detail = String::new();
    for dist in [CoeffDistribution::ComplexGaussian, CoeffDistribution::Bernoulli] {
        let table = khintchine_moments(dist, &c, &p_list, 100_000, 2024).unwrap();
        let row2 = &table.rows[0];
        let p2_ok = (row2.ratio - 1.0).abs() <= 3.0 * row2.se_rel.max(1e-12);
        let alpha_ok = table.alpha <= 0.55;
        pass &= p2_ok && alpha_ok;
        detail.push_str(&format!(
            "{dist:?}: p2 ratio {:.4}±{:.4} α {:.3} (≤ 0.55); ",
            row2.ratio, row2.se_rel, table.alpha
        ));
    }
    pass &= t0.elapsed().as_secs_f64() < 60.0;
    report(3, pass, &detail, t0);
    assert!(pass);
}

/// 4. H^s tail: log-linear in λ² with r² > 0.95 on the exceedance band,
///    plus the single-cube closed form P(|g|·A > λ) = e^{−(λ/A)²} inside
///    the Wilson intervals.
#[test]
fn acceptance_04_hs_tail() {
    let t0 = Instant::now();
    let exp = TailExperiment {
        d: 1,
        m: 128,
        l: 1.0,
        psi_width: 0.25,
        dist: CoeffDistribution::ComplexGaussian,
        phi: PhiSpec::Rough { s_decay: 0.8, scale: 1.0, seed: 11 },
        trials: 20_000,
        seed: 404,
        lambda: LambdaGrid::Auto { count: 64 },
        frames: 2,
    };
    let curve = tail_experiment(&Statistic::HsNorm { s: 0.8 }, &exp).unwrap();
    let fit = curve.fit.expect("fit band populated");
    let r2_ok = fit.r2 > 0.95;

    // single-cube data: φ^ω = g₀ φ exactly, so the exceedance is the
    // Rayleigh-modulus tail with scale A = ‖φ‖_{H^s}
    let one_cube = TailExperiment {
        phi: PhiSpec::OneCube { scale: 1.0 },
        seed: 405,
        ..exp.clone()
    };
    let grid = one_cube.grid().unwrap();
    let a = sobolev_norm(&one_cube.phi.build(&grid).unwrap(), 0.8);
    let curve1 = tail_experiment(&Statistic::HsNorm { s: 0.8 }, &one_cube).unwrap();
    let mut band_points = 0usize;
    let mut inside = 0usize;
    for i in 0..curve1.lambda.len() {
        let p = curve1.p_hat[i];
        if p >= FIT_BAND.0 && p <= FIT_BAND.1 {
            band_points += 1;
            let expected = (-(curve1.lambda[i] / a).powi(2)).exp();
            // widen the 95% band to z = 3 for a 30-point simultaneous check
            let half = (curve1.ci_hi[i] - curve1.ci_lo[i]) / 2.0 * (3.0 / 1.96);
            let mid = (curve1.ci_hi[i] + curve1.ci_lo[i]) / 2.0;
            if (expected - mid).abs() <= half {
                inside += 1;
            }
        }
    }
    let cube_ok = band_points >= 5 && inside * 10 >= band_points * 9;

    let pass = r2_ok && cube_ok && t0.elapsed().as_secs_f64() < 300.0;
    report(
        4,
        pass,
        &format!(
            "fit r² = {:.4} (> 0.95), ĉ = {:.3}; single-cube CI coverage {inside}/{band_points}",
            fit.r2, fit.c_small
        ),
        t0,
    );
    assert!(pass);
}

/// 5. Local Strichartz T-scaling: slope of log ĉ against log T within
///    ±0.3 of −2/q = −1/3 at (q, r) = (6, 6), d = 1.
#[test]
fn acceptance_05_strichartz_t_scaling() {
    let t0 = Instant::now();
    let exp = TailExperiment {
        d: 1,
        m: 64,
        l: 1.0,
        psi_width: 0.25,
        dist: CoeffDistribution::ComplexGaussian,
        phi: PhiSpec::Rough { s_decay: 0.8, scale: 1.0, seed: 5 },
        trials: 2000,
        seed: 40,
        lambda: LambdaGrid::Auto { count: 64 },
        frames: 49,
    };
    let rep = strichartz_t_scaling(6.0, 6.0, &[0.05, 0.1, 0.2, 0.4, 0.8], &exp).unwrap();
    let dev = (rep.slope - rep.expected).abs();
    let pass = dev <= 0.3 && t0.elapsed().as_secs_f64() < 1800.0;
    report(
        5,
        pass,
        &format!(
            "slope {:.4} vs −2/q = {:.4} (|Δ| = {dev:.3} ≤ 0.3), per-T r² ≥ {:.3}",
            rep.slope,
            rep.expected,
            rep.per_t.iter().map(|(_, f)| f.r2).fold(1.0f64, f64::min)
        ),
        t0,
    );
    assert!(pass);
}

/// 6. L^p improvement: deterministic ∫|φ|⁴ growth exponent across grid
///    refinements exceeds the randomized-median exponent by ≥ 0.1.
#[test]
fn acceptance_06_lp_improvement() {
    let t0 = Instant::now();
    let rep = lp_improvement_demo(
        0.2,
        4.0,
        &[64, 128, 256, 512],
        1.0,
        0.25,
        CoeffDistribution::ComplexGaussian,
        400,
        11,
    )
    .unwrap();
    let sep = rep.det_power_exponent - rep.rand_power_exponent;
    let pass = sep >= 0.1 && t0.elapsed().as_secs_f64() < 600.0;
    report(
        6,
        pass,
        &format!(
            "∫|φ|⁴ growth: deterministic {:.3}, randomized median {:.3} (separation {sep:.3} ≥ 0.1); norm-level {:.3} vs {:.3}",
            rep.det_power_exponent, rep.rand_power_exponent, rep.det_norm_exponent, rep.rand_norm_exponent
        ),
        t0,
    );
    assert!(pass);
}

/// 7. Deterministic Strichartz baseline: the ratio ‖S(t)φ‖_{L^q_TL^r}/‖φ‖₂
///    is invariant under dyadic L²-rescaling of a Gaussian within 5%, for
///    the d = 1 admissible pairs (6, 6) and (8, 4).
#[test]
fn acceptance_07_deterministic_strichartz() {
    let t0 = Instant::now();
    let grid = TorusGrid::new(1, 512, 16.0).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for (q, r) in [(6.0, 6.0), (8.0, 4.0)] {
        let base = deterministic_strichartz(
            &PhiSpec::Gaussian { scale: 1.0, dilation: 1.0 }.build(&grid).unwrap(),
            q,
            r,
            4.0,
            257,
            false,
        )
        .unwrap();
        let scaled = deterministic_strichartz(
            &PhiSpec::Gaussian { scale: 1.0, dilation: 2.0 }.build(&grid).unwrap(),
            q,
            r,
            4.0,
            257,
            false,
        )
        .unwrap();
        let rel = (base - scaled).abs() / base;
        pass &= rel < 0.05;
        detail.push_str(&format!("(q,r)=({q},{r}): ratios {base:.4}/{scaled:.4} Δ {rel:.3}; "));
    }
    pass &= t0.elapsed().as_secs_f64() < 60.0;
    report(7, pass, &format!("{detail}(< 5%)"), t0);
    assert!(pass);
}

/// 8. Duhamel/Picard correctness: refinement order ≥ 1.9, fixed-point
///    residual < 1e−6 on converged runs, Picard vs split-step relative L²
///    difference < 1e−4 at t = T for a d = 1 and a d = 4 run.
#[test]
fn acceptance_08_duhamel_picard() {
    let t0 = Instant::now();

    // refinement order of the Duhamel quadrature on smooth forcing
    let grid = TorusGrid::new(1, 32, 2.0).unwrap();
    let g = random_band_limited(&grid, 9).unwrap();
    let t_end = 0.5;
    let duhamel_at = |steps: usize| -> Field {
        let dt = t_end / steps as f64;
        let frames: Vec<Field> = (0..=steps)
            .map(|m| {
                let t = dt * m as f64;
                let f = to_physical(&propagate(&g, t));
                let mut nl = f.clone();
                // generic time envelope keeps the quadrature error term
                // away from accidental endpoint cancellations
                let env = 1.0 + 2.0 * t;
                for v in nl.values_mut().iter_mut() {
                    *v = env * v.norm_sqr() * *v;
                }
                nl
            })
            .collect();
        duhamel(
            &SpacetimeField::new(frames, 0.0, dt).unwrap(),
            t_end,
            Sign::Defocusing,
        )
        .unwrap()
    };
    let coarse = duhamel_at(64);
    let mid = duhamel_at(128);
    let fine = duhamel_at(256);
    let order = (coarse.sub(&mid).unwrap().l2_norm() / mid.sub(&fine).unwrap().l2_norm()).log2();

    // d = 1 smooth run
    let g1 = TorusGrid::new(1, 64, 4.0).unwrap();
    let phi1 = PhiSpec::Gaussian { scale: 0.6, dilation: 1.0 }.build(&g1).unwrap();
    let cfg1 = PicardConfig::new(0.1, 0.1 / 256.0);
    let res1 = picard_solve(&phi1, &cfg1).unwrap();
    let v1 = res1.v.as_ref().unwrap();
    let z1 = linear_part(&phi1, cfg1.t, cfg1.frames()).unwrap();
    let ss1 = splitstep_reference(&phi1, &cfg1).unwrap();
    let u1 = v1.frames().last().unwrap().add(z1.frames().last().unwrap()).unwrap();
    let diff1 =
        u1.sub(ss1.frames().last().unwrap()).unwrap().l2_norm() / ss1.frames().last().unwrap().l2_norm();

    // one d = 4, M = 16 run with randomized rough data
    let g4 = TorusGrid::new(4, 16, 2.0).unwrap();
    let psi = PartitionOfUnity::new(0.25).unwrap();
    let cubes = CubeIndexSet::for_grid(&g4).unwrap();
    let phi4 = PhiSpec::Rough { s_decay: 0.8, scale: 8.0, seed: 3 }.build(&g4).unwrap();
    let draw = sample(CoeffDistribution::ComplexGaussian, &cubes, 9, 0);
    let phi4_omega = randomize(&phi4, &draw, &psi).unwrap();
    let cfg4 = PicardConfig::new(0.01, 0.01 / 128.0);
    let res4 = picard_solve(&phi4_omega, &cfg4).unwrap();
    let v4 = res4.v.as_ref().unwrap();
    let z4 = linear_part(&phi4_omega, cfg4.t, cfg4.frames()).unwrap();
    let ss4 = splitstep_reference(&phi4_omega, &cfg4).unwrap();
    let u4 = v4.frames().last().unwrap().add(z4.frames().last().unwrap()).unwrap();
    let diff4 =
        u4.sub(ss4.frames().last().unwrap()).unwrap().l2_norm() / ss4.frames().last().unwrap().l2_norm();

    let pass = order >= 1.9
        && res1.converged
        && res4.converged
        && res1.residual < 1e-6
        && res4.residual < 1e-6
        && diff1 < 1e-4
        && diff4 < 1e-4
        && t0.elapsed().as_secs_f64() < 600.0;
    report(
        8,
        pass,
        &format!(
            "order {order:.2} (≥ 1.9); residuals {:.2e}/{:.2e} (< 1e-6); split-step diffs {diff1:.2e}/{diff4:.2e} (< 1e-4)",
            res1.residual, res4.residual
        ),
        t0,
    );
    assert!(pass);
}

/// 9. Local well-posedness sweep: d = 4, M = 16, L = 2, s_decay = 0.8,
///    50 seeds per horizon — failure fraction monotone non-increasing as T
///    decreases (modulo CI overlap) and ≥ 80% success at the smallest T.
#[test]
fn acceptance_09_lwp_sweep() {
    let t0 = Instant::now();
    let cfg = LwpConfig {
        d: 4,
        m: 16,
        l: 2.0,
        psi_width: 0.25,
        dist: CoeffDistribution::ComplexGaussian,
        phi: PhiSpec::Rough { s_decay: 0.8, scale: 32.0, seed: 3 },
        steps: 128,
        sign: Sign::Defocusing,
        sigma: 1.1,
        b: 0.55,
        tol: 1e-8,
        max_iters: 30,
        divergence_cap: 1e6,
        coupling: 1.0,
        seed: 7,
        gamma: 0.5,
    };
    let table = lwp_probability(&[0.005, 0.01, 0.02, 0.04], 50, &cfg).unwrap();
    let smallest = &table.rows[0];
    let mut detail = String::new();
    for row in &table.rows {
        detail.push_str(&format!("T={}: {}/{}; ", row.t, row.converged, row.seeds));
    }
    let pass = table.monotone_ok
        && smallest.success_fraction >= 0.8
        && t0.elapsed().as_secs_f64() < 7200.0;
    report(
        9,
        pass,
        &format!(
            "{detail}monotone_ok {} ; success(T=0.005) {:.2} (≥ 0.8)",
            table.monotone_ok, smallest.success_fraction
        ),
        t0,
    );
    assert!(pass);
}

/// 10. Smoothness gap: d = 1 analogue over 20 seeds — median spectral-decay
///     slope of v must exceed that of z by ≥ 0.5 over the upper octave of
///     the data band.
///
/// The configuration below is the strongest found for this statistic: the
/// randomization lives on a fine frequency lattice (L = 320) so the box's
/// exact-resonance line (weight ∝ dξ) stays below the smoothed cloud, the
/// evolution is dealiased on a doubled grid, the horizon matches the
/// dispersive time of the fit octave, and the octave ends on cube
/// boundaries. The measured gap still saturates near 0.3: the d = 1 cubic
/// resonance set transfers the data's tail shape into v with a coefficient
/// that decays no faster than ⟨ξ⟩^{−1/2}, so the criterion's 0.5 threshold
/// sits above what the raw nonlinear part can show on one octave.
#[test]
fn acceptance_10_smoothness_gap() {
    let t0 = Instant::now();
    let m_coarse = 16384usize;
    let l = 320.0;
    let coarse = TorusGrid::with_budget(1, m_coarse, l, u64::MAX, true).unwrap();
    let psi = PartitionOfUnity::new(0.25).unwrap();
    let cubes = CubeIndexSet::for_grid(&coarse).unwrap();
    let fit_band = 10.0;
    let phi = PhiSpec::Rough { s_decay: 0.3, scale: 2.0, seed: 5 }
        .build(&coarse)
        .unwrap();
    let mut slopes_v = Vec::new();
    let mut slopes_z = Vec::new();
    let mut paired = Vec::new();
    for seed in 0..20u64 {
        let draw = sample(CoeffDistribution::ComplexGaussian, &cubes, 50, seed);
        let phi_omega_coarse = randomize(&phi, &draw, &psi).unwrap();
        let phi_omega = upsample(&phi_omega_coarse, 2 * m_coarse).unwrap();
        let mut cfg = PicardConfig::new(0.002, 0.002 / 256.0);
        cfg.dealias = Some(cubes.n_max() as f64 + 1.0);
        cfg.track_xsb = false;
        let res = picard_solve(&phi_omega, &cfg).unwrap();
        if !res.converged {
            continue;
        }
        let z = linear_part(&phi_omega, cfg.t, cfg.frames()).unwrap();
        let gap = smoothness_gap(res.v.as_ref().unwrap(), &z, cfg.sigma, Some(fit_band)).unwrap();
        slopes_v.push(gap.slope_v);
        slopes_z.push(gap.slope_z);
        paired.push(gap.gap.unwrap());
    }
    // decay slope = −(log-log slope); median decay of v minus median decay of z
    let med_gap = median(&slopes_z) - median(&slopes_v);
    let pass = slopes_v.len() == 20 && med_gap >= 0.5 && t0.elapsed().as_secs_f64() < 600.0;
    report(
        10,
        pass,
        &format!(
            "median decay slopes: v {:.3}, z {:.3}; gap {med_gap:.3} (criterion ≥ 0.5; paired median {:.3})",
            -median(&slopes_v),
            -median(&slopes_z),
            median(&paired)
        ),
        t0,
    );
    assert!(
        pass,
        "criterion 10 fails as stated: measured gap {med_gap:.3} < 0.5 — see decisions ledger"
    );
}
