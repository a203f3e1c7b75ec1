//! Experiment manifests: a flat, line-oriented key/value format with
//! dotted section paths, chosen for diff-friendliness in experiment
//! tracking. Serialization is lossless (floats print in shortest
//! round-trip form) and every run writes its resolved manifest beside its
//! outputs, together with a stable hash embedded in every output file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nls::Sign;
use crate::probe::LambdaGrid;
use crate::randomize::{CoeffDistribution, PhiSpec};

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub d: usize,
    pub m: usize,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSection {
    pub stat: StatKind,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub t: f64,
    pub window: f64,
    pub trials: usize,
    pub frames: usize,
    pub lambda: LambdaGrid,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            stat: StatKind::Hs,
            s: 0.8,
            p: 4.0,
            q: 6.0,
            r: 6.0,
            t: 0.1,
            window: 8.0,
            trials: 2000,
            frames: 49,
            lambda: LambdaGrid::Auto { count: 64 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatKind {
    Hs,
    Lp,
    LocalStrichartz,
    GlobalStrichartz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSection {
    pub t: f64,
    pub steps: usize,
    pub sign: Sign,
    pub sigma: f64,
    pub b: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub divergence_cap: f64,
    pub coupling: f64,
}

impl Default for PicardSection {
    fn default() -> Self {
        PicardSection {
            t: 0.01,
            steps: 128,
            sign: Sign::Defocusing,
            sigma: 1.1,
            b: 0.55,
            tol: 1e-8,
            max_iters: 40,
            divergence_cap: 1e6,
            coupling: 1.0,
        }
    }
}

/// Full experiment manifest. Optional sections are present only when the
/// subcommand uses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub seed: u64,
    pub version: String,
    pub grid: GridSection,
    pub psi_width: f64,
    pub dist: CoeffDistribution,
    pub phi: PhiSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSection>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            schema: MANIFEST_SCHEMA,
            seed: 0,
            version: env!("CARGO_PKG_VERSION").to_string(),
            grid: GridSection { d: 1, m: 128, l: 1.0 },
            psi_width: 0.25,
            dist: CoeffDistribution::ComplexGaussian,
            phi: PhiSpec::Rough { s_decay: 0.8, scale: 1.0, seed: 1 },
            probe: None,
            picard: None,
        }
    }
}

fn push_kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

fn dist_name(d: CoeffDistribution) -> &'static str {
    match d {
        CoeffDistribution::ComplexGaussian => "gaussian",
        CoeffDistribution::Bernoulli => "bernoulli",
        CoeffDistribution::UniformDisc => "uniform-disc",
    }
}

pub fn parse_dist(s: &str) -> Result<CoeffDistribution> {
    match s {
        "gaussian" => Ok(CoeffDistribution::ComplexGaussian),
        "bernoulli" => Ok(CoeffDistribution::Bernoulli),
        "uniform-disc" => Ok(CoeffDistribution::UniformDisc),
        other => Err(Error::validation("dist.kind", format!("unknown distribution `{other}`"))),
    }
}

pub fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Defocusing => "defocusing",
        Sign::Focusing => "focusing",
    }
}

pub fn parse_sign(s: &str) -> Result<Sign> {
    match s {
        "defocusing" => Ok(Sign::Defocusing),
        "focusing" => Ok(Sign::Focusing),
        other => Err(Error::validation("picard.sign", format!("unknown sign `{other}`"))),
    }
}

fn stat_name(s: StatKind) -> &'static str {
    match s {
        StatKind::Hs => "hs",
        StatKind::Lp => "lp",
        StatKind::LocalStrichartz => "local-strichartz",
        StatKind::GlobalStrichartz => "global-strichartz",
    }
}

pub fn parse_stat(s: &str) -> Result<StatKind> {
    match s {
        "hs" => Ok(StatKind::Hs),
        "lp" => Ok(StatKind::Lp),
        "local-strichartz" => Ok(StatKind::LocalStrichartz),
        "global-strichartz" => Ok(StatKind::GlobalStrichartz),
        other => Err(Error::validation("probe.stat", format!("unknown statistic `{other}`"))),
    }
}

impl Manifest {
    /// Serialize to the flat dotted key/value format, keys sorted.
    pub fn to_flat(&self) -> String {
        let mut out = String::new();
        push_kv(&mut out, "schema.version", self.schema);
        push_kv(&mut out, "run.seed", self.seed);
        push_kv(&mut out, "run.code_version", &self.version);
        push_kv(&mut out, "grid.d", self.grid.d);
        push_kv(&mut out, "grid.m", self.grid.m);
        push_kv(&mut out, "grid.l", self.grid.l);
        push_kv(&mut out, "psi.transition_width", self.psi_width);
        push_kv(&mut out, "dist.kind", dist_name(self.dist));
        match self.phi {
            PhiSpec::Rough { s_decay, scale, seed } => {
                push_kv(&mut out, "phi.kind", "rough");
                push_kv(&mut out, "phi.s_decay", s_decay);
                push_kv(&mut out, "phi.scale", scale);
                push_kv(&mut out, "phi.seed", seed);
            }
            PhiSpec::Aligned { s_decay, scale } => {
                push_kv(&mut out, "phi.kind", "aligned");
                push_kv(&mut out, "phi.s_decay", s_decay);
                push_kv(&mut out, "phi.scale", scale);
            }
            PhiSpec::Gaussian { scale, dilation } => {
                push_kv(&mut out, "phi.kind", "gaussian");
                push_kv(&mut out, "phi.scale", scale);
                push_kv(&mut out, "phi.dilation", dilation);
            }
            PhiSpec::OneCube { scale } => {
                push_kv(&mut out, "phi.kind", "one-cube");
                push_kv(&mut out, "phi.scale", scale);
            }
        }
        if let Some(p) = &self.probe {
            push_kv(&mut out, "probe.stat", stat_name(p.stat));
            push_kv(&mut out, "probe.s", p.s);
            push_kv(&mut out, "probe.p", p.p);
            push_kv(&mut out, "probe.q", p.q);
            push_kv(&mut out, "probe.r", p.r);
            push_kv(&mut out, "probe.t", p.t);
            push_kv(&mut out, "probe.window", p.window);
            push_kv(&mut out, "probe.trials", p.trials);
            push_kv(&mut out, "probe.frames", p.frames);
            match p.lambda {
                LambdaGrid::Auto { count } => {
                    push_kv(&mut out, "probe.lambda.kind", "auto");
                    push_kv(&mut out, "probe.lambda.count", count);
                }
                LambdaGrid::Explicit { lo, hi, count } => {
                    push_kv(&mut out, "probe.lambda.kind", "explicit");
                    push_kv(&mut out, "probe.lambda.lo", lo);
                    push_kv(&mut out, "probe.lambda.hi", hi);
                    push_kv(&mut out, "probe.lambda.count", count);
                }
            }
        }
        if let Some(p) = &self.picard {
            push_kv(&mut out, "picard.t", p.t);
            push_kv(&mut out, "picard.steps", p.steps);
            push_kv(&mut out, "picard.sign", sign_name(p.sign));
            push_kv(&mut out, "picard.sigma", p.sigma);
            push_kv(&mut out, "picard.b", p.b);
            push_kv(&mut out, "picard.tol", p.tol);
            push_kv(&mut out, "picard.max_iters", p.max_iters);
            push_kv(&mut out, "picard.divergence_cap", p.divergence_cap);
            push_kv(&mut out, "picard.coupling", p.coupling);
        }
        out
    }

    /// Parse the flat format; unknown keys are reported with their path.
    pub fn from_flat(text: &str) -> Result<Manifest> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::validation(format!("manifest:{}", idx + 1), "expected `key = value`")
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut m = Manifest::default();
        let mut take = |key: &str| map.remove(key);

        fn req<T: std::str::FromStr>(v: Option<String>, key: &str) -> Result<T> {
            let raw = v.ok_or_else(|| Error::validation(key, "missing"))?;
            raw.parse::<T>()
                .map_err(|_| Error::validation(key, format!("cannot parse `{raw}`")))
        }
        fn opt<T: std::str::FromStr>(v: Option<String>, key: &str) -> Result<Option<T>> {
            match v {
                None => Ok(None),
                Some(raw) => raw
                    .parse::<T>()
                    .map(Some)
                    .map_err(|_| Error::validation(key, format!("cannot parse `{raw}`"))),
            }
        }

        m.schema = req(take("schema.version"), "schema.version")?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Error::validation(
                "schema.version",
                format!("unsupported schema {}", m.schema),
            ));
        }
        m.seed = req(take("run.seed"), "run.seed")?;
        m.version = take("run.code_version").unwrap_or_else(|| m.version.clone());
        m.grid.d = req(take("grid.d"), "grid.d")?;
        m.grid.m = req(take("grid.m"), "grid.m")?;
        m.grid.l = req(take("grid.l"), "grid.l")?;
        m.psi_width = req(take("psi.transition_width"), "psi.transition_width")?;
        m.dist = parse_dist(&take("dist.kind").unwrap_or_default())?;
        let phi_kind = take("phi.kind").unwrap_or_default();
        m.phi = match phi_kind.as_str() {
            "rough" => PhiSpec::Rough {
                s_decay: req(take("phi.s_decay"), "phi.s_decay")?,
                scale: req(take("phi.scale"), "phi.scale")?,
                seed: req(take("phi.seed"), "phi.seed")?,
            },
            "aligned" => PhiSpec::Aligned {
                s_decay: req(take("phi.s_decay"), "phi.s_decay")?,
                scale: req(take("phi.scale"), "phi.scale")?,
            },
            "gaussian" => PhiSpec::Gaussian {
                scale: req(take("phi.scale"), "phi.scale")?,
                dilation: req(take("phi.dilation"), "phi.dilation")?,
            },
            "one-cube" => PhiSpec::OneCube {
                scale: req(take("phi.scale"), "phi.scale")?,
            },
            other => {
                return Err(Error::validation("phi.kind", format!("unknown generator `{other}`")))
            }
        };
        if let Some(stat) = take("probe.stat") {
            let lambda = match take("probe.lambda.kind").as_deref() {
                Some("auto") | None => LambdaGrid::Auto {
                    count: opt(take("probe.lambda.count"), "probe.lambda.count")?.unwrap_or(64),
                },
                Some("explicit") => LambdaGrid::Explicit {
                    lo: req(take("probe.lambda.lo"), "probe.lambda.lo")?,
                    hi: req(take("probe.lambda.hi"), "probe.lambda.hi")?,
                    count: req(take("probe.lambda.count"), "probe.lambda.count")?,
                },
                Some(other) => {
                    return Err(Error::validation(
                        "probe.lambda.kind",
                        format!("unknown lambda grid `{other}`"),
                    ))
                }
            };
            let dflt = ProbeSection::default();
            m.probe = Some(ProbeSection {
                stat: parse_stat(&stat)?,
                s: opt(take("probe.s"), "probe.s")?.unwrap_or(dflt.s),
                p: opt(take("probe.p"), "probe.p")?.unwrap_or(dflt.p),
                q: opt(take("probe.q"), "probe.q")?.unwrap_or(dflt.q),
                r: opt(take("probe.r"), "probe.r")?.unwrap_or(dflt.r),
                t: opt(take("probe.t"), "probe.t")?.unwrap_or(dflt.t),
                window: opt(take("probe.window"), "probe.window")?.unwrap_or(dflt.window),
                trials: opt(take("probe.trials"), "probe.trials")?.unwrap_or(dflt.trials),
                frames: opt(take("probe.frames"), "probe.frames")?.unwrap_or(dflt.frames),
                lambda,
            });
        }
        if let Some(t) = take("picard.t") {
            let dflt = PicardSection::default();
            m.picard = Some(PicardSection {
                t: t
                    .parse()
                    .map_err(|_| Error::validation("picard.t", format!("cannot parse `{t}`")))?,
                steps: opt(take("picard.steps"), "picard.steps")?.unwrap_or(dflt.steps),
                sign: match take("picard.sign") {
                    Some(s) => parse_sign(&s)?,
                    None => dflt.sign,
                },
                sigma: opt(take("picard.sigma"), "picard.sigma")?.unwrap_or(dflt.sigma),
                b: opt(take("picard.b"), "picard.b")?.unwrap_or(dflt.b),
                tol: opt(take("picard.tol"), "picard.tol")?.unwrap_or(dflt.tol),
                max_iters: opt(take("picard.max_iters"), "picard.max_iters")?
                    .unwrap_or(dflt.max_iters),
                divergence_cap: opt(take("picard.divergence_cap"), "picard.divergence_cap")?
                    .unwrap_or(dflt.divergence_cap),
                coupling: opt(take("picard.coupling"), "picard.coupling")?.unwrap_or(dflt.coupling),
            });
        }
        if let Some((key, _)) = map.into_iter().next() {
            return Err(Error::validation(key, "unknown manifest key"));
        }
        Ok(m)
    }

    /// Stable FNV-1a hash of the canonical serialization, embedded in every
    /// output file for provenance.
    pub fn hash(&self) -> u64 {
        let mut h = 0xCBF29CE484222325u64;
        for b in self.to_flat().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001B3);
        }
        h
    }
}
