//! Experiment configuration: TOML ingestion, validation, defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2, VelocityGrid};
use crate::particle::RunRng;
use crate::rates::{RateLaw, RateTable};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Which solver a run dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Particle,
    Moments,
    Reference,
    FirstOrder,
    Limit,
    Scalar,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Particle => "particle",
            ModelKind::Moments => "moments",
            ModelKind::Reference => "reference",
            ModelKind::FirstOrder => "first_order",
            ModelKind::Limit => "limit",
            ModelKind::Scalar => "scalar",
        }
    }

    pub fn needs_epsilon(&self) -> bool {
        matches!(
            self,
            ModelKind::Reference | ModelKind::FirstOrder | ModelKind::Scalar | ModelKind::Moments
        )
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "particle" => Ok(ModelKind::Particle),
            "moments" => Ok(ModelKind::Moments),
            "reference" => Ok(ModelKind::Reference),
            "first_order" | "first-order" => Ok(ModelKind::FirstOrder),
            "limit" => Ok(ModelKind::Limit),
            "scalar" => Ok(ModelKind::Scalar),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// One component of the initial velocity law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixtureComponent {
    Gaussian { mean: f64, sd: f64, mass: f64 },
    Uniform { lo: f64, hi: f64, mass: f64 },
}

impl MixtureComponent {
    fn mass(&self) -> f64 {
        match self {
            MixtureComponent::Gaussian { mass, .. } => *mass,
            MixtureComponent::Uniform { mass, .. } => *mass,
        }
    }

    fn density(&self, v: f64) -> f64 {
        match self {
            MixtureComponent::Gaussian { mean, sd, mass } => {
                let z = (v - mean) / sd;
                mass / (sd * (2.0 * std::f64::consts::PI).sqrt()) * (-0.5 * z * z).exp()
            }
            MixtureComponent::Uniform { lo, hi, mass } => {
                if v >= *lo && v < *hi {
                    mass / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            MixtureComponent::Gaussian { sd, mass, .. } => {
                if *sd <= 0.0 {
                    return Err(Error::Config(format!("initial.components: sd = {sd} <= 0")));
                }
                if *mass < 0.0 {
                    return Err(Error::Config("initial.components: negative mass".into()));
                }
            }
            MixtureComponent::Uniform { lo, hi, mass } => {
                if hi <= lo {
                    return Err(Error::Config(format!(
                        "initial.components: uniform bounds [{lo}, {hi}] are empty"
                    )));
                }
                if *mass < 0.0 {
                    return Err(Error::Config("initial.components: negative mass".into()));
                }
            }
        }
        Ok(())
    }
}

/// Mixture of Gaussian/uniform components; mass-weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<MixtureComponent>,
}

impl Mixture {
    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.mass()).sum()
    }

    pub fn density(&self, v: f64) -> f64 {
        self.components.iter().map(|c| c.density(v)).sum()
    }

    /// Gridded density with the total mass matched exactly (cell values are
    /// renormalized so truncation to the grid does not lose mass).
    pub fn to_density(&self, grid: VelocityGrid) -> Density1 {
        let mut f = Density1::from_fn(grid, |v| self.density(v));
        let m = f.mass();
        let target = self.total_mass();
        if m > 0.0 && target > 0.0 {
            let alpha = target / m;
            for v in &mut f.values {
                *v *= alpha;
            }
        }
        f
    }

    /// Sample one velocity from the mass-normalized law.
    pub fn sample(&self, rng: &mut RunRng) -> f64 {
        let total = self.total_mass();
        let mut r = rng.random::<f64>() * total;
        for c in &self.components {
            r -= c.mass();
            if r < 0.0 || std::ptr::eq(c, self.components.last().unwrap()) {
                return match c {
                    MixtureComponent::Gaussian { mean, sd, .. } => {
                        Normal::new(*mean, *sd).unwrap().sample(rng)
                    }
                    MixtureComponent::Uniform { lo, hi, .. } => {
                        lo + (hi - lo) * rng.random::<f64>()
                    }
                };
            }
        }
        unreachable!("mixture sampling fell through");
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub model: String,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_output_interval")]
    pub output_interval: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_t_end() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_output_interval() -> f64 {
    0.05
}
fn default_seed() -> u64 {
    42
}
fn default_format() -> String {
    "csv".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    #[serde(default)]
    pub lambda11: Option<f64>,
    #[serde(default)]
    pub lambda12: Option<f64>,
    #[serde(default)]
    pub mu11: Option<f64>,
    #[serde(default)]
    pub mu12: Option<f64>,
    /// constant-rate alternative (all size pairs), used by moments runs
    #[serde(default)]
    pub lambda_const: Option<f64>,
    #[serde(default)]
    pub mu_const: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_kmax")]
    pub kmax: usize,
}

fn default_kmax() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_v_min")]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_v_min() -> f64 {
    -4.0
}
fn default_v_max() -> f64 {
    4.0
}
fn default_n() -> usize {
    128
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            v_min: default_v_min(),
            v_max: default_v_max(),
            n: default_n(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub components: Vec<MixtureComponent>,
    /// start with the product-form pair density `f1^I ⊗ f1^I` scaled by
    /// this factor; zero (the default) starts without pairs
    #[serde(default)]
    pub pair_mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_leak_tol")]
    pub leak_tol: f64,
    #[serde(default = "default_clip_tol")]
    pub clip_tol: f64,
    #[serde(default = "default_n_sigma")]
    pub n_sigma: usize,
    #[serde(default = "default_mass_tol")]
    pub mass_tol: f64,
    #[serde(default = "default_refresh_interval")]
    pub refresh_interval: f64,
}

fn default_tail_tol() -> f64 {
    1e-8
}
fn default_leak_tol() -> f64 {
    1e-5
}
fn default_clip_tol() -> f64 {
    1e-5
}
fn default_n_sigma() -> usize {
    32
}
fn default_mass_tol() -> f64 {
    1e-4
}
fn default_refresh_interval() -> f64 {
    0.1
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            tail_tol: default_tail_tol(),
            leak_tol: default_leak_tol(),
            clip_tol: default_clip_tol(),
            n_sigma: default_n_sigma(),
            mass_tol: default_mass_tol(),
            refresh_interval: default_refresh_interval(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    #[serde(default = "default_n_individuals")]
    pub n_individuals: usize,
    /// system volume; defaults to the individual count
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_kmax_obs")]
    pub kmax_obs: usize,
    #[serde(default)]
    pub scaled: bool,
    #[serde(default)]
    pub record_events: bool,
}

fn default_n_individuals() -> usize {
    10_000
}
fn default_kmax_obs() -> usize {
    6
}

impl Default for ParticleSection {
    fn default() -> Self {
        Self {
            n_individuals: default_n_individuals(),
            omega: None,
            kmax_obs: default_kmax_obs(),
            scaled: false,
            record_events: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub eps: Vec<f64>,
    #[serde(default = "default_compare_with")]
    pub compare_with: String,
    #[serde(default = "default_window")]
    pub window: [f64; 2],
}

fn default_compare_with() -> String {
    "limit".into()
}
fn default_window() -> [f64; 2] {
    [0.5, 3.0]
}

/// Raw TOML document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub rates: RatesSection,
    #[serde(default)]
    pub grid: GridSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub particle: ParticleSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<ModelKind> {
        ModelKind::parse(&self.run.model)
    }

    /// Validate invariants and materialize the rate table. Every missing
    /// required field is reported by name.
    pub fn validated(&self) -> Result<ValidatedConfig> {
        let model = self.model()?;
        let grid = VelocityGrid::new(self.grid.v_min, self.grid.v_max, self.grid.n)?;
        if self.run.dt <= 0.0 {
            return Err(Error::Config("run.dt must be > 0".into()));
        }
        if self.run.output_interval <= 0.0 {
            return Err(Error::Config("run.output_interval must be > 0".into()));
        }
        if self.run.t_end <= 0.0 {
            return Err(Error::Config("run.t_end must be > 0".into()));
        }
        match self.run.format.as_str() {
            "csv" | "json" => {}
            other => {
                return Err(Error::Config(format!(
                    "run.format must be csv or json, got '{other}'"
                )))
            }
        }
        if self.initial.components.is_empty() {
            return Err(Error::Config("initial.components must not be empty".into()));
        }
        for c in &self.initial.components {
            c.validate()?;
        }
        if self.initial.pair_mass < 0.0 {
            return Err(Error::Config("initial.pair_mass must be >= 0".into()));
        }

        let epsilon = match self.rates.epsilon {
            Some(e) if e > 0.0 => e,
            Some(e) => {
                return Err(Error::Config(format!("rates.epsilon = {e} must be > 0")));
            }
            None => {
                if model.needs_epsilon() {
                    return Err(Error::Config(format!(
                        "rates.epsilon is required for model '{}'",
                        model.tag()
                    )));
                }
                1.0
            }
        };

        let rates = if let (Some(l), Some(m)) = (self.rates.lambda_const, self.rates.mu_const) {
            RateTable::new(
                RateLaw::constant(l),
                RateLaw::constant(m),
                epsilon,
                self.rates.kmax,
            )?
        } else {
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| Error::Config(format!("rates.{name} is required")))
            };
            let l11 = need(self.rates.lambda11, "lambda11")?;
            let m11 = need(self.rates.mu11, "mu11")?;
            let l12 = self.rates.lambda12.unwrap_or(0.0);
            let m12 = self.rates.mu12.unwrap_or(1.0);
            if l12 > 0.0 && m12 <= 0.0 {
                return Err(Error::Config(
                    "rates.mu12 must be > 0 when lambda12 > 0 (triples must fragment)".into(),
                ));
            }
            RateTable::pair_triple(l11, l12, m11, m12, epsilon)?
        };

        let mixture = Mixture {
            components: self.initial.components.clone(),
        };
        Ok(ValidatedConfig {
            model,
            grid,
            rates,
            mixture,
            raw: self.clone(),
        })
    }
}

/// Configuration after validation: grid, rate table and initial law are
/// materialized; the raw document is retained for metadata echo.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub model: ModelKind,
    pub grid: VelocityGrid,
    pub rates: RateTable,
    pub mixture: Mixture,
    pub raw: ExperimentConfig,
}

impl ValidatedConfig {
    pub fn f1_initial(&self) -> Density1 {
        self.mixture.to_density(self.grid)
    }

    /// Optional symmetric product-form pair initial data.
    pub fn f2_initial(&self) -> Option<Density2> {
        let pm = self.raw.initial.pair_mass;
        if pm <= 0.0 {
            return None;
        }
        let f1 = self.f1_initial();
        let m = f1.mass();
        if m <= 0.0 {
            return None;
        }
        let scale = pm / (m * m);
        let n = self.grid.n;
        let mut f2 = Density2::zeros(self.grid);
        for i in 0..n {
            for j in 0..n {
                f2.values[i * n + j] = scale * f1.values[i] * f1.values[j];
            }
        }
        Some(f2)
    }

    /// Echo of the resolved configuration for output metadata.
    pub fn echo(&self) -> Vec<(String, String)> {
        let r = &self.raw;
        let mut out = vec![
            ("model".to_string(), self.model.tag().to_string()),
            ("t_end".to_string(), r.run.t_end.to_string()),
            ("dt".to_string(), r.run.dt.to_string()),
            ("output_interval".to_string(), r.run.output_interval.to_string()),
            ("seed".to_string(), r.run.seed.to_string()),
            ("grid_v_min".to_string(), self.grid.v_min.to_string()),
            ("grid_v_max".to_string(), self.grid.v_max.to_string()),
            ("grid_n".to_string(), self.grid.n.to_string()),
            ("epsilon".to_string(), self.rates.epsilon.to_string()),
            ("tail_tol".to_string(), r.tolerances.tail_tol.to_string()),
            ("leak_tol".to_string(), r.tolerances.leak_tol.to_string()),
            ("clip_tol".to_string(), r.tolerances.clip_tol.to_string()),
            ("n_sigma".to_string(), r.tolerances.n_sigma.to_string()),
            ("initial_mass".to_string(), self.mixture.total_mass().to_string()),
        ];
        out.push((
            "lambda11".to_string(),
            self.rates.lambda(1, 1).to_string(),
        ));
        out.push(("lambda12".to_string(), self.rates.lambda(1, 2).to_string()));
        out.push(("mu11".to_string(), self.rates.mu(1, 1).to_string()));
        out.push(("mu12".to_string(), self.rates.mu(1, 2).to_string()));
        out
    }
}

/// Parse and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ValidatedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    load_config_str(&text)
}

/// Parse and validate configuration text.
pub fn load_config_str(text: &str) -> Result<ValidatedConfig> {
    let raw: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    raw.validated()
}
