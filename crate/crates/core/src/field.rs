//! Complex scalar fields on a [`TorusGrid`], tagged physical- or
//! frequency-space, plus time-indexed stacks of frames and the on-disk
//! format (raw little-endian complex128 + JSON sidecar).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

pub const FIELD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Physical,
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    space: Space,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: TorusGrid, space: Space, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid holds {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, space, values })
    }

    pub fn zeros(grid: TorusGrid, space: Space) -> Self {
        Field {
            grid,
            space,
            values: vec![Complex64::ZERO; grid.len()],
        }
    }

    /// Build a physical-space field by evaluating `f` at every grid point.
    pub fn from_physical_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.x(i)[..grid.d()])).collect();
        Field {
            grid,
            space: Space::Physical,
            values,
        }
    }

    /// Build a frequency-space field by evaluating `f` on the centered lattice.
    pub fn from_frequency_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut values = vec![Complex64::ZERO; grid.len()];
        grid.for_each_freq(|flat, _, xi| values[flat] = f(&xi[..grid.d()]));
        Field {
            grid,
            space: Space::Frequency,
            values,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub(crate) fn into_parts(self) -> (TorusGrid, Space, Vec<Complex64>) {
        (self.grid, self.space, self.values)
    }

    pub fn scaled(&self, factor: Complex64) -> Field {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v += w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v -= w;
        }
        Ok(out)
    }

    fn compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        if self.space != other.space {
            return Err(Error::GridMismatch("fields live in different spaces".into()));
        }
        Ok(())
    }

    /// L² norm using the quadrature weight of the current space; Parseval
    /// makes the two representations agree.
    pub fn l2_norm(&self) -> f64 {
        let w = match self.space {
            Space::Physical => self.grid.cell_volume(),
            Space::Frequency => self.grid.freq_cell_volume(),
        };
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
    }

    /// Largest |u| over grid points on the box boundary (first/last plane of
    /// each axis). Data meant to approximate a function on ℝ^d should decay
    /// below ~1e−10 here; periodically generated fields need not.
    pub fn boundary_max(&self) -> f64 {
        let d = self.grid.d();
        let m = self.grid.m();
        let mut max = 0.0f64;
        for (flat, v) in self.values.iter().enumerate() {
            let mut rem = flat;
            let mut on_boundary = false;
            for _ in 0..d {
                let j = rem % m;
                rem /= m;
                if j == 0 || j == m - 1 {
                    on_boundary = true;
                    break;
                }
            }
            if on_boundary {
                max = max.max(v.norm());
            }
        }
        max
    }

    /// Write raw little-endian complex128 (row-major over the centered
    /// lattice for frequency fields) plus a JSON sidecar at `<path>.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut raw = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            raw.extend_from_slice(&v.re.to_le_bytes());
            raw.extend_from_slice(&v.im.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&raw)?;
        let sidecar = FieldSidecar {
            d: self.grid.d(),
            m: self.grid.m(),
            l: self.grid.l(),
            space: self.space,
            version: FIELD_FORMAT_VERSION,
        };
        let json = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(sidecar_path(path), json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Field> {
        let sidecar: FieldSidecar =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        if sidecar.version != FIELD_FORMAT_VERSION {
            return Err(Error::validation(
                "field.version",
                format!("unsupported field format version {}", sidecar.version),
            ));
        }
        let grid = TorusGrid::new(sidecar.d, sidecar.m, sidecar.l)?;
        let mut raw = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut raw)?;
        if raw.len() != grid.len() * 16 {
            return Err(Error::validation(
                "field.data",
                format!("expected {} bytes, found {}", grid.len() * 16, raw.len()),
            ));
        }
        let values = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Field::new(grid, sidecar.space, values)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldSidecar {
    d: usize,
    m: usize,
    l: f64,
    space: Space,
    version: u32,
}

/// Time-indexed sequence of fields on one grid with a uniform step.
#[derive(Debug, Clone)]
pub struct SpacetimeField {
    frames: Vec<Field>,
    t0: f64,
    dt: f64,
}

impl SpacetimeField {
    pub fn new(frames: Vec<Field>, t0: f64, dt: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::validation("spacetime.frames", "no frames"));
        }
        if !(dt > 0.0) {
            return Err(Error::validation("spacetime.dt", format!("dt = {dt} must be > 0")));
        }
        let grid = *frames[0].grid();
        for f in &frames {
            if *f.grid() != grid {
                return Err(Error::GridMismatch("frames on different grids".into()));
            }
        }
        Ok(SpacetimeField { frames, t0, dt })
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [Field] {
        &mut self.frames
    }

    pub fn grid(&self) -> &TorusGrid {
        self.frames[0].grid()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.frames.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, idx: usize) -> f64 {
        self.t0 + idx as f64 * self.dt
    }

    pub fn has_nan(&self) -> bool {
        self.frames.iter().any(Field::has_nan)
    }
}
