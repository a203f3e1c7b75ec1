use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use speclab::error::{Error, Result};
use speclab::field::Field;
use speclab::manifest::{
    parse_dist, parse_sign, parse_stat, Manifest, PicardSection, ProbeSection, StatKind,
};
use speclab::nls::{
    linear_part, lwp_probability, picard_solve, smoothness_gap, splitstep_reference, LwpConfig,
    PicardConfig,
};
use speclab::norms::{besov_norm, lp_norm, modulation_norm, sobolev_norm, xsb_norm};
use speclab::output;
use speclab::probe::{
    deterministic_strichartz, khintchine_moments, lp_improvement_demo, statistic_samples,
    strichartz_t_scaling, LambdaGrid, Statistic, TailCurve, TailExperiment,
};
use speclab::randomize::{randomize, sample, verify_subgaussian, PhiSpec};
use speclab::wiener::{frequency_leakage, project_cube, CubeIndexSet, PartitionOfUnity};
use speclab::TorusGrid;

#[derive(Parser)]
#[command(
    name = "speclab",
    version,
    about = "Periodic-box spectral laboratory for randomized dispersive data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Spatial dimension (1..=4)
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Points per axis (power of two ≥ 8)
    #[arg(long, default_value_t = 128)]
    m: usize,
    /// Half-extent of the box [−L, L)^d
    #[arg(long, default_value_t = 1.0)]
    l: f64,
}

#[derive(Args, Clone)]
struct PhiArgs {
    /// Data generator: rough | aligned | gaussian | one-cube
    #[arg(long, default_value = "rough")]
    phi: String,
    #[arg(long, default_value_t = 0.8)]
    s_decay: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 1.0)]
    dilation: f64,
    /// Seed of the rough-data phases (fixed across trials)
    #[arg(long, default_value_t = 1)]
    phi_seed: u64,
}

impl PhiArgs {
    fn spec(&self) -> Result<PhiSpec> {
        Ok(match self.phi.as_str() {
            "rough" => PhiSpec::Rough {
                s_decay: self.s_decay,
                scale: self.scale,
                seed: self.phi_seed,
            },
            "aligned" => PhiSpec::Aligned { s_decay: self.s_decay, scale: self.scale },
            "gaussian" => PhiSpec::Gaussian { scale: self.scale, dilation: self.dilation },
            "one-cube" => PhiSpec::OneCube { scale: self.scale },
            other => {
                return Err(Error::validation("phi.kind", format!("unknown generator `{other}`")))
            }
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print lattice geometry and retained-cube information
    GridInfo(GridArgs),
    /// Wiener decomposition of a stored field: per-cube L² masses
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        psi_width: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a norm of a stored field
    Norm {
        /// lp | hs | modulation | besov
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 0.25)]
        psi_width: f64,
        #[arg(long)]
        input: PathBuf,
    },
    /// Wiener-randomize a stored field and write the result
    Randomize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long, default_value_t = 0.25)]
        psi_width: f64,
    },
    /// Monte Carlo probes of the probabilistic estimates
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Randomized cubic Schrödinger solver
    #[command(subcommand)]
    Nls(NlsCommand),
    /// Summarize a completed run directory
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ProbeCommand {
    /// Tail curve P(X > λ) of a randomized statistic
    Tail {
        /// hs | lp | local-strichartz | global-strichartz
        #[arg(long)]
        stat: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        /// λ grid lo:hi:count (omit for automatic)
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        psi_width: Option<f64>,
        /// Manifest file to start from; flags override its fields
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Moment growth of Σ g_n c_n against the √p bound
    Khintchine {
        #[arg(long, default_value = "gaussian")]
        dist: String,
        /// Comma-separated moments
        #[arg(long, default_value = "2,4,8,16")]
        p_list: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Number of ℓ² coefficients c_n = ⟨n⟩^{−1}
        #[arg(long, default_value_t = 16)]
        coeffs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// T-scaling of the fitted local Strichartz tail constant
    Tscaling {
        #[arg(long, default_value_t = 6.0)]
        q: f64,
        #[arg(long, default_value_t = 6.0)]
        r: f64,
        #[arg(long, default_value = "0.05,0.1,0.2,0.4,0.8")]
        t_list: String,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 49)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 0.25)]
        psi_width: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Deterministic Strichartz ratio for a stored or generated field
    DetStrichartz {
        #[arg(long, default_value_t = 6.0)]
        q: f64,
        #[arg(long, default_value_t = 6.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 129)]
        frames: usize,
        #[arg(long)]
        allow_non_admissible: bool,
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        phi: PhiArgs,
    },
    /// Deterministic vs randomized L^p growth across grid refinements
    LpDemo {
        #[arg(long, default_value_t = 0.2)]
        s_decay: f64,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value = "64,128,256,512")]
        m_list: String,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 0.25)]
        psi_width: f64,
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 400)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Verify the subgaussian moment bound of a coefficient distribution
    Subgaussian {
        #[arg(long, default_value = "gaussian")]
        dist: String,
    },
}

#[derive(Subcommand)]
enum NlsCommand {
    /// One Picard run with randomized data; cross-checks against split-step
    Solve {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long, default_value_t = 0.01)]
        t: f64,
        #[arg(long, default_value_t = 128)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long, default_value = "defocusing")]
        sign: String,
        #[arg(long, default_value_t = 1.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.55)]
        b: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 40)]
        max_iters: usize,
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 0.25)]
        psi_width: f64,
        /// Also write the final v and z fields
        #[arg(long)]
        save_fields: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Success-fraction sweep over local horizons
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long, default_value = "0.005,0.01,0.02,0.04")]
        t_list: String,
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        #[arg(long, default_value_t = 128)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "defocusing")]
        sign: String,
        #[arg(long, default_value_t = 1.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.55)]
        b: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 40)]
        max_iters: usize,
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 0.25)]
        psi_width: f64,
        /// γ of the descriptive failure fit
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_list<T: std::str::FromStr>(s: &str, field: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<T>()
                .map_err(|_| Error::validation(field, format!("cannot parse `{x}`")))
        })
        .collect()
}

fn parse_lambda(s: &str) -> Result<LambdaGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::validation("probe.lambda", "expected lo:hi:count"));
    }
    Ok(LambdaGrid::Explicit {
        lo: parts[0]
            .parse()
            .map_err(|_| Error::validation("probe.lambda", "bad lo"))?,
        hi: parts[1]
            .parse()
            .map_err(|_| Error::validation("probe.lambda", "bad hi"))?,
        count: parts[2]
            .parse()
            .map_err(|_| Error::validation("probe.lambda", "bad count"))?,
    })
}

fn stat_from_section(p: &ProbeSection) -> Statistic {
    match p.stat {
        StatKind::Hs => Statistic::HsNorm { s: p.s },
        StatKind::Lp => Statistic::LpNorm { p: p.p },
        StatKind::LocalStrichartz => Statistic::LocalStrichartz { q: p.q, r: p.r, t: p.t },
        StatKind::GlobalStrichartz => Statistic::GlobalStrichartz {
            q: p.q,
            r_tilde: p.r,
            window: p.window,
        },
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GridInfo(g) => {
            let grid = TorusGrid::new(g.d, g.m, g.l)?;
            let cubes = CubeIndexSet::for_grid(&grid)?;
            println!("dimension        {}", grid.d());
            println!("points per axis  {}", grid.m());
            println!("half extent      {}", grid.l());
            println!("dx               {}", grid.dx());
            println!("dxi              {}", grid.dxi());
            println!("nyquist          {}", grid.nyquist());
            println!("total points     {}", grid.len());
            println!("retained cubes   {} (|n|_inf <= {})", cubes.len(), cubes.n_max());
        }
        Command::Decompose { input, psi_width, out_dir } => {
            let field = Field::load(&input)?;
            let psi = PartitionOfUnity::new(psi_width)?;
            let cubes = CubeIndexSet::for_grid(field.grid())?;
            output::ensure_dir(&out_dir)?;
            let mut dat = String::from("# cube_index_flat l2_mass\n");
            let mut sum = Field::zeros(*field.grid(), field.space());
            for (i, n) in cubes.iter().enumerate() {
                let piece = project_cube(&field, &n[..field.grid().d()], &psi)?;
                dat.push_str(&format!("{} {}\n", i, piece.l2_norm()));
                sum = sum.add(&piece)?;
            }
            let rec_err = sum.sub(&field)?.l2_norm() / field.l2_norm().max(1e-300);
            dat.push_str(&format!("# reconstruction_error {rec_err}\n"));
            std::fs::write(out_dir.join("decompose.dat"), dat)?;
            println!("cubes {} reconstruction_error {rec_err:.3e}", cubes.len());
        }
        Command::Norm { kind, p, q, s, psi_width, input } => {
            let field = Field::load(&input)?;
            let value = match kind.as_str() {
                "lp" => lp_norm(&field, p)?,
                "hs" => sobolev_norm(&field, s),
                "modulation" => {
                    let psi = PartitionOfUnity::new(psi_width)?;
                    let cubes = CubeIndexSet::for_grid(field.grid())?;
                    let leak = frequency_leakage(&field, &cubes);
                    if leak > 1e-10 {
                        eprintln!(
                            "warning: spectral mass fraction {leak:.3e} outside retained cubes"
                        );
                    }
                    modulation_norm(&field, p, q, s, &psi)?
                }
                "besov" => besov_norm(&field, p, q, s)?,
                other => {
                    return Err(Error::validation("norm.kind", format!("unknown norm `{other}`")))
                }
            };
            let record = serde_json::json!({
                "kind": kind, "p": p, "q": q, "s": s, "value": value,
                "grid": {"d": field.grid().d(), "m": field.grid().m(), "l": field.grid().l()},
                "psi": {"transition_width": psi_width},
            });
            println!("{}", serde_json::to_string(&record)?);
        }
        Command::Randomize { input, output: out, dist, seed, stream, psi_width } => {
            let field = Field::load(&input)?;
            let psi = PartitionOfUnity::new(psi_width)?;
            let cubes = CubeIndexSet::for_grid(field.grid())?;
            let draw = sample(parse_dist(&dist)?, &cubes, seed, stream);
            let randomized = randomize(&field, &draw, &psi)?;
            randomized.save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Probe(cmd) => run_probe(cmd)?,
        Command::Nls(cmd) => run_nls(cmd)?,
        Command::Report { dir } => {
            let (summary, table) = output::summarize(&dir)?;
            std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            print!("{table}");
            for p in &summary.partial {
                eprintln!("partial: {p}");
            }
        }
    }
    Ok(())
}

fn run_probe(cmd: ProbeCommand) -> Result<()> {
    match cmd {
        ProbeCommand::Tail {
            stat,
            s,
            p,
            q,
            r,
            t,
            window,
            trials,
            frames,
            lambda,
            seed,
            dist,
            psi_width,
            manifest,
            grid,
            phi,
            out_dir,
        } => {
            // manifest first, explicit flags override
            let mut man = match manifest {
                Some(path) => Manifest::from_flat(&std::fs::read_to_string(path)?)?,
                None => {
                    let mut m = Manifest::default();
                    m.grid.d = grid.d;
                    m.grid.m = grid.m;
                    m.grid.l = grid.l;
                    m.phi = phi.spec()?;
                    m.probe = Some(ProbeSection::default());
                    m
                }
            };
            let section = man.probe.get_or_insert_with(ProbeSection::default);
            if let Some(v) = stat {
                section.stat = parse_stat(&v)?;
            }
            if let Some(v) = s {
                section.s = v;
            }
            if let Some(v) = p {
                section.p = v;
            }
            if let Some(v) = q {
                section.q = v;
            }
            if let Some(v) = r {
                section.r = v;
            }
            if let Some(v) = t {
                section.t = v;
            }
            if let Some(v) = window {
                section.window = v;
            }
            if let Some(v) = trials {
                section.trials = v;
            }
            if let Some(v) = frames {
                section.frames = v;
            }
            if let Some(v) = lambda {
                section.lambda = parse_lambda(&v)?;
            }
            if let Some(v) = seed {
                man.seed = v;
            }
            if let Some(v) = dist {
                man.dist = parse_dist(&v)?;
            }
            if let Some(v) = psi_width {
                man.psi_width = v;
            }
            let section = *man.probe.as_ref().unwrap();
            let exp = TailExperiment {
                d: man.grid.d,
                m: man.grid.m,
                l: man.grid.l,
                psi_width: man.psi_width,
                dist: man.dist,
                phi: man.phi,
                trials: section.trials,
                seed: man.seed,
                lambda: section.lambda,
                frames: section.frames,
            };
            let statistic = stat_from_section(&section);
            let samples = statistic_samples(&statistic, &exp)?;
            let lambda_grid: Vec<f64> = match section.lambda {
                LambdaGrid::Auto { count } => {
                    let max = samples.iter().cloned().fold(0.0f64, f64::max);
                    (0..count)
                        .map(|i| max * 1.0001 * i as f64 / (count - 1) as f64)
                        .collect()
                }
                LambdaGrid::Explicit { lo, hi, count } => (0..count)
                    .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                    .collect(),
            };
            let curve = TailCurve::from_samples(&samples, lambda_grid)?;
            output::write_manifest(&out_dir, &man)?;
            output::write_tail_curve(&out_dir, &man, &curve)?;
            match &curve.fit {
                Some(f) => println!(
                    "tail fit: C = {:.4}, c = {:.4}, r2 = {:.4} ({} trials)",
                    f.c_big, f.c_small, f.r2, curve.n_trials
                ),
                None => println!("tail fit band underpopulated ({} trials)", curve.n_trials),
            }
        }
        ProbeCommand::Khintchine { dist, p_list, trials, coeffs, seed, out_dir } => {
            if coeffs == 0 {
                return Err(Error::validation("khintchine.coeffs", "need at least one"));
            }
            let c: Vec<f64> = (0..coeffs).map(|n| 1.0 / (1.0 + (n * n) as f64).sqrt()).collect();
            let p: Vec<f64> = parse_list(&p_list, "khintchine.p_list")?;
            let table = khintchine_moments(parse_dist(&dist)?, &c, &p, trials, seed)?;
            let mut man = Manifest::default();
            man.seed = seed;
            man.dist = parse_dist(&dist)?;
            output::write_manifest(&out_dir, &man)?;
            output::write_khintchine(&out_dir, &man, &table)?;
            println!("alpha = {:.4} over p = {:?}", table.alpha, p);
        }
        ProbeCommand::Tscaling {
            q,
            r,
            t_list,
            trials,
            frames,
            seed,
            dist,
            psi_width,
            grid,
            phi,
            out_dir,
        } => {
            let t: Vec<f64> = parse_list(&t_list, "tscaling.t_list")?;
            let mut man = Manifest::default();
            man.seed = seed;
            man.dist = parse_dist(&dist)?;
            man.psi_width = psi_width;
            man.grid.d = grid.d;
            man.grid.m = grid.m;
            man.grid.l = grid.l;
            man.phi = phi.spec()?;
            let exp = TailExperiment {
                d: grid.d,
                m: grid.m,
                l: grid.l,
                psi_width,
                dist: man.dist,
                phi: man.phi,
                trials,
                seed,
                lambda: LambdaGrid::Auto { count: 64 },
                frames,
            };
            let report = strichartz_t_scaling(q, r, &t, &exp)?;
            output::write_manifest(&out_dir, &man)?;
            output::write_tscaling(&out_dir, &man, &report)?;
            println!(
                "slope {:.4} expected {:.4} (r2 {:.4})",
                report.slope, report.expected, report.slope_r2
            );
        }
        ProbeCommand::DetStrichartz { q, r, t, frames, allow_non_admissible, input, grid, phi } => {
            let field = match input {
                Some(path) => Field::load(&path)?,
                None => {
                    let g = TorusGrid::new(grid.d, grid.m, grid.l)?;
                    phi.spec()?.build(&g)?
                }
            };
            let ratio = deterministic_strichartz(&field, q, r, t, frames, allow_non_admissible)?;
            println!("{ratio}");
        }
        ProbeCommand::LpDemo { s_decay, p, m_list, l, psi_width, dist, trials, seed, out_dir } => {
            let ms: Vec<usize> = parse_list(&m_list, "lpdemo.m_list")?;
            let report = lp_improvement_demo(
                s_decay,
                p,
                &ms,
                l,
                psi_width,
                parse_dist(&dist)?,
                trials,
                seed,
            )?;
            let mut man = Manifest::default();
            man.seed = seed;
            man.dist = parse_dist(&dist)?;
            man.psi_width = psi_width;
            man.phi = PhiSpec::Aligned { s_decay, scale: 1.0 };
            output::write_manifest(&out_dir, &man)?;
            output::write_lp_demo(&out_dir, &man, &report)?;
            println!(
                "deterministic power exponent {:.4}, randomized {:.4}",
                report.det_power_exponent, report.rand_power_exponent
            );
        }
        ProbeCommand::Subgaussian { dist } => {
            let gamma: Vec<f64> = (-40..=40).map(|i| i as f64 / 10.0).collect();
            let report = verify_subgaussian(parse_dist(&dist)?, &gamma)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.pass {
                return Err(Error::NumericalFault(
                    "distribution violates the subgaussian bound".into(),
                ));
            }
        }
    }
    Ok(())
}

fn run_nls(cmd: NlsCommand) -> Result<()> {
    match cmd {
        NlsCommand::Solve {
            grid,
            phi,
            t,
            steps,
            seed,
            stream,
            sign,
            sigma,
            b,
            tol,
            max_iters,
            dist,
            psi_width,
            save_fields,
            out_dir,
        } => {
            let g = TorusGrid::new(grid.d, grid.m, grid.l)?;
            let psi = PartitionOfUnity::new(psi_width)?;
            let cubes = CubeIndexSet::for_grid(&g)?;
            let phi_field = phi.spec()?.build(&g)?;
            let draw = sample(parse_dist(&dist)?, &cubes, seed, stream);
            let phi_omega = randomize(&phi_field, &draw, &psi)?;
            let mut cfg = PicardConfig::new(t, t / steps as f64);
            cfg.sign = parse_sign(&sign)?;
            cfg.sigma = sigma;
            cfg.b = b;
            cfg.tol = tol;
            cfg.max_iters = max_iters;
            let result = picard_solve(&phi_omega, &cfg)?;
            let mut man = Manifest::default();
            man.seed = seed;
            man.dist = parse_dist(&dist)?;
            man.psi_width = psi_width;
            man.grid.d = grid.d;
            man.grid.m = grid.m;
            man.grid.l = grid.l;
            man.phi = phi.spec()?;
            man.picard = Some(PicardSection {
                t,
                steps,
                sign: cfg.sign,
                sigma,
                b,
                tol,
                max_iters,
                divergence_cap: cfg.divergence_cap,
                coupling: cfg.coupling,
            });
            output::write_manifest(&out_dir, &man)?;
            output::write_json(&out_dir, "picard.json", &man, &result)?;
            let mut dat = String::from("# iter rho_ct rho_xsb\n");
            for (i, (a, b)) in result.rho_ct.iter().zip(&result.rho_xsb).enumerate() {
                dat.push_str(&format!("{} {} {}\n", i + 2, a, b));
            }
            std::fs::write(out_dir.join("convergence.dat"), dat)?;
            if result.converged {
                let v = result.v.as_ref().unwrap();
                let z = linear_part(&phi_omega, cfg.t, cfg.frames())?;
                let ss = splitstep_reference(&phi_omega, &cfg)?;
                let u_last = v.frames().last().unwrap().add(z.frames().last().unwrap())?;
                let cross = u_last.sub(ss.frames().last().unwrap())?.l2_norm()
                    / ss.frames().last().unwrap().l2_norm();
                let gap = smoothness_gap(v, &z, sigma, None).ok();
                let xsb_v = xsb_norm(v, sigma, b)?;
                let extra = serde_json::json!({
                    "splitstep_rel_l2_diff": cross,
                    "xsb_v": xsb_v,
                    "smoothness_gap": gap.as_ref().and_then(|g| g.gap),
                });
                output::write_json(&out_dir, "diagnostics.json", &man, extra)?;
                if save_fields {
                    v.frames().last().unwrap().save(&out_dir.join("v_final.field"))?;
                    z.frames().last().unwrap().save(&out_dir.join("z_final.field"))?;
                }
                println!(
                    "converged in {} iterations, residual {:.3e}, split-step diff {:.3e}",
                    result.iterations, result.residual, cross
                );
            } else {
                println!("did not converge in {} iterations", result.iterations);
            }
        }
        NlsCommand::Sweep {
            grid,
            phi,
            t_list,
            seeds,
            steps,
            seed,
            sign,
            sigma,
            b,
            tol,
            max_iters,
            dist,
            psi_width,
            gamma,
            out_dir,
        } => {
            let t: Vec<f64> = parse_list(&t_list, "sweep.t_list")?;
            let cfg = LwpConfig {
                d: grid.d,
                m: grid.m,
                l: grid.l,
                psi_width,
                dist: parse_dist(&dist)?,
                phi: phi.spec()?,
                steps,
                sign: parse_sign(&sign)?,
                sigma,
                b,
                tol,
                max_iters,
                divergence_cap: 1e6,
                coupling: 1.0,
                seed,
                gamma,
            };
            let table = lwp_probability(&t, seeds, &cfg)?;
            let mut man = Manifest::default();
            man.seed = seed;
            man.dist = cfg.dist;
            man.psi_width = psi_width;
            man.grid.d = grid.d;
            man.grid.m = grid.m;
            man.grid.l = grid.l;
            man.phi = cfg.phi;
            output::write_manifest(&out_dir, &man)?;
            output::write_sweep(&out_dir, &man, &table)?;
            for row in &table.rows {
                println!(
                    "T = {:<8} success {}/{} ({:.3})",
                    row.t, row.converged, row.seeds, row.success_fraction
                );
            }
            println!("monotone_ok = {}", table.monotone_ok);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
