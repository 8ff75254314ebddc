//! Run configuration for the CLI: domain and field sources, grid and
//! scan parameters, deterministic seeding.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::decompose::DecomposeParams;
use crate::error::Error;
use crate::fields::{io, VectorField};
use crate::geometry::{Domain, DomainKind};
use crate::grid::Grid;
use crate::Result;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FieldSource {
    /// Binary field file, format documented in docs/formats.md. The grid
    /// comes from the file header.
    File { path: PathBuf },
    /// Built-in analytic family: "rotation", "gradient", "mixed" or
    /// "random" (a seeded trigonometric polynomial).
    Analytic { name: String },
}

/// Domain description file: the boundary shape plus an optional chart
/// radius. Without an explicit radius each shape gets a default for which
/// the frozen-coefficient series is comfortably contractive.
#[derive(Debug, Clone, Deserialize)]
pub struct DomainFile {
    #[serde(flatten)]
    pub kind: DomainKind,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path to a domain JSON file, resolved relative to the config file.
    pub domain: PathBuf,
    pub field: FieldSource,
    /// Grid cells per axis; must be a power of two (spectral padding).
    pub n: usize,
    /// Half-width of the centered data box. Defaults to 1.5.
    pub half_width: Option<f64>,
    /// Chart radius override.
    pub rho: Option<f64>,
    /// Oscillation scan radius cap.
    pub mu: Option<f64>,
    /// Boundary scan radius cap.
    pub nu: Option<f64>,
    /// Chart cylinder lattice spacing. Defaults to 8 rho / 256.
    pub delta: Option<f64>,
    /// Acceptance threshold on the worst frozen-series residual.
    pub series_tol: Option<f64>,
    /// Probe budget for verification suites.
    pub probes: Option<usize>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

pub const DEFAULT_MU: f64 = 0.25;
pub const DEFAULT_NU: f64 = 0.1;
pub const DEFAULT_SERIES_TOL: f64 = 1e-6;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad config {}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            if cfg.domain.is_relative() {
                cfg.domain = dir.join(&cfg.domain);
            }
            if let FieldSource::File { path: p } = &mut cfg.field {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
            if cfg.out_dir.is_relative() {
                cfg.out_dir = dir.join(&cfg.out_dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 16 {
            return Err(Error::Config(format!(
                "grid size n = {} must be a power of two >= 16",
                self.n
            )));
        }
        for (name, v) in [
            ("half_width", self.half_width),
            ("rho", self.rho),
            ("mu", self.mu),
            ("nu", self.nu),
            ("delta", self.delta),
            ("series_tol", self.series_tol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::Config(format!("{name} = {v} must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(DEFAULT_MU)
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(DEFAULT_NU)
    }

    pub fn series_tol(&self) -> f64 {
        self.series_tol.unwrap_or(DEFAULT_SERIES_TOL)
    }

    pub fn grid(&self) -> Grid {
        Grid::centered(self.n, self.half_width.unwrap_or(1.5))
    }

    pub fn load_domain(&self) -> Result<Domain> {
        load_domain(&self.domain, self.rho)
    }

    /// Pipeline parameters derived from the config knobs.
    pub fn decompose_params(&self, rho: f64) -> DecomposeParams {
        let mut params = DecomposeParams::default();
        if let Some(delta) = self.delta {
            let m = (8.0 * rho / delta).round().max(16.0) as usize;
            params.cylinder_cells = (m + m % 2).min(1024);
        }
        params
    }

    /// The input field on the requested grid. File-backed fields keep the
    /// grid recorded in their header.
    pub fn load_field(&self) -> Result<VectorField> {
        match &self.field {
            FieldSource::File { path } => io::load_vector(path),
            FieldSource::Analytic { name } => analytic_field(name, self.grid(), self.seed),
        }
    }
}

pub fn load_domain(path: &Path, rho_override: Option<f64>) -> Result<Domain> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: DomainFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad domain file {}: {e}", path.display())))?;
    let rho = rho_override
        .or(file.rho)
        .unwrap_or_else(|| default_rho(&file.kind));
    Domain::new(file.kind, rho)
}

/// Chart radius at which the frozen-coefficient contraction ratio stays
/// well under 1/2 for each shipped shape.
pub fn default_rho(kind: &DomainKind) -> f64 {
    match kind {
        DomainKind::Disk { .. } => 0.08,
        DomainKind::Ellipse { .. } => 0.04,
        DomainKind::Star { .. } => 0.03,
    }
}

/// Named analytic fields used in examples and tests. "random" draws a
/// trigonometric polynomial with modes |k| <= 3 from the seed.
pub fn analytic_field(name: &str, grid: Grid, seed: u64) -> Result<VectorField> {
    match name {
        "rotation" => Ok(VectorField::from_fn(grid, |x, y| (-y, x))),
        // grad(r^3 cos 3 theta) = grad(x^3 - 3 x y^2).
        "gradient" => Ok(VectorField::from_fn(grid, |x, y| {
            (3.0 * (x * x - y * y), -6.0 * x * y)
        })),
        "mixed" => Ok(VectorField::from_fn(grid, |x, y| {
            (-y + 3.0 * (x * x - y * y), x - 6.0 * x * y)
        })),
        "random" => Ok(random_trig_field(grid, seed)),
        other => Err(Error::Config(format!(
            "unknown analytic field '{other}' (expected rotation, gradient, mixed or random)"
        ))),
    }
}

pub fn random_trig_field(grid: Grid, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for kx in -3i32..=3 {
        for ky in -3i32..=3 {
            if kx == 0 && ky == 0 {
                continue;
            }
            let ax: f64 = rng.gen_range(-1.0..1.0);
            let ay: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            modes.push((kx as f64, ky as f64, w * ax, w * ay, ph));
        }
    }
    VectorField::from_fn(grid, move |x, y| {
        let mut vx = 0.0;
        let mut vy = 0.0;
        for &(kx, ky, ax, ay, ph) in &modes {
            let c = (kx * x + ky * y + ph).cos();
            vx += ax * c;
            vy += ay * c;
        }
        (vx, vy)
    })
}
