//! Run configuration: a TOML tree with dotted `key=value` overrides.

use std::path::{Path, PathBuf};

use bdglab_core::geometry::{Lattice, Vec2};
use bdglab_core::potential::PotentialSpec;
use bdglab_core::state::{Interaction, ModelSpec, Thermo};
use bdglab_core::vortex::ScfConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Lowest temperature accepted by any command.
pub const MIN_TEMPERATURE: f64 = 1e-4;

/// Everything a command needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Flux quanta per cell.
    #[serde(default = "default_n")]
    pub n: i64,
    /// Grid points per direction.
    pub grid: usize,
    /// Target particle number; when set, `μ` is found by bisection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Truncation rank `M` of the pairing Hessian; `min(48, N²)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Worker threads; `BDGLAB_THREADS` is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Cell basis.
    pub lattice: LatticeConfig,
    /// Temperature and chemical potential.
    pub thermo: ThermoConfig,
    /// Pair potential.
    #[serde(default)]
    pub potential: PotentialConfig,
    /// Mean-field switches.
    #[serde(default)]
    pub interaction: InteractionConfig,
    /// Options of the `normal` command.
    #[serde(default)]
    pub normal: NormalConfig,
    /// Options of the `scf` command.
    #[serde(default)]
    pub scf: ScfSection,
    /// Options of the `tc` command.
    #[serde(default)]
    pub tc: TcSection,
    /// Options of the `check` command.
    #[serde(default)]
    pub check: CheckSection,
    /// Output location.
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_n() -> i64 {
    1
}

/// Truncation rank used when none is configured.
pub const DEFAULT_TRUNCATION: usize = 48;

/// Cell basis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// First basis vector.
    pub omega1: [f64; 2],
    /// Second basis vector.
    pub omega2: [f64; 2],
}

/// `(T, μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoConfig {
    /// Temperature.
    pub t: f64,
    /// Chemical potential.
    #[serde(default)]
    pub mu: f64,
}

/// Potential profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `v = 0`.
    #[default]
    Zero,
    /// `−depth · exp(−|x|²/(2 width²))`.
    Gaussian,
    /// `−depth · (1 + |x|)^{−κ}`.
    InversePower,
    /// Values read from a file.
    Table,
}

/// Pair potential; unused fields must be absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// Profile.
    #[serde(default)]
    pub kind: PotentialKind,
    /// Well depth (gaussian, inverse-power; default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    /// Gaussian width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Decay exponent of the inverse-power profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Whitespace- or comma-separated values on the difference index
    /// `dj·N + dk`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Rescale to this value of `∫v`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<f64>,
}

/// Which mean-field terms enter the one-particle Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    /// Direct term.
    #[serde(default = "yes")]
    pub direct: bool,
    /// Exchange term.
    #[serde(default)]
    pub exchange: bool,
}

fn yes() -> bool {
    true
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self { direct: true, exchange: false }
    }
}

/// `normal` options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalConfig {
    /// Also report the boundary-twist averaged density and current
    /// (`N²` extra diagonalizations).
    #[serde(default)]
    pub twist_average: bool,
}

/// `scf` options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScfSection {
    /// Mixing weight.
    #[serde(default = "d_damping")]
    pub damping: f64,
    /// Iteration cap.
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    /// Tolerance on the `Γ` residual.
    #[serde(default = "d_tol")]
    pub tol_gamma: f64,
    /// Tolerance on the Ampère residual.
    #[serde(default = "d_tol")]
    pub tol_a: f64,
    /// Iterations between Ampère updates; 0 freezes the field.
    #[serde(default = "d_ampere")]
    pub ampere_every: usize,
    /// Stall window.
    #[serde(default = "d_window")]
    pub stall_window: usize,
    /// Write the iteration trace.
    #[serde(default = "yes")]
    pub trace: bool,
    /// Also relax the normal state against the Ampère equation and report it.
    #[serde(default = "yes")]
    pub relaxed_normal: bool,
}

fn d_damping() -> f64 {
    0.3
}
fn d_max_iter() -> usize {
    3000
}
fn d_tol() -> f64 {
    1e-8
}
fn d_ampere() -> usize {
    5
}
fn d_window() -> usize {
    50
}

impl Default for ScfSection {
    fn default() -> Self {
        Self {
            damping: d_damping(),
            max_iter: d_max_iter(),
            tol_gamma: d_tol(),
            tol_a: d_tol(),
            ampere_every: d_ampere(),
            stall_window: d_window(),
            trace: true,
            relaxed_normal: true,
        }
    }
}

impl ScfSection {
    /// Solver settings.
    pub fn solver(&self) -> ScfConfig {
        ScfConfig {
            damping: self.damping,
            max_iter: self.max_iter,
            tol_gamma: self.tol_gamma,
            tol_a: self.tol_a,
            ampere_every: self.ampere_every,
            stall_window: self.stall_window,
        }
    }
}

/// `tc` options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcSection {
    /// Fields to scan; the cell is rescaled for each. Empty means the
    /// configured cell only.
    #[serde(default)]
    pub b: Vec<f64>,
    /// Lower end of the temperature bracket.
    #[serde(default = "d_tlo")]
    pub t_lo: f64,
    /// Upper end of the temperature bracket.
    #[serde(default = "d_thi")]
    pub t_hi: f64,
    /// Bisection tolerance in `T`.
    #[serde(default = "d_tc_tol")]
    pub tol: f64,
    /// When set, `μ = mu_over_b · b` per row instead of `thermo.mu`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_over_b: Option<f64>,
}

fn d_tlo() -> f64 {
    1e-3
}
fn d_thi() -> f64 {
    2.0
}
fn d_tc_tol() -> f64 {
    1e-4
}

impl Default for TcSection {
    fn default() -> Self {
        Self { b: Vec::new(), t_lo: d_tlo(), t_hi: d_thi(), tol: d_tc_tol(), mu_over_b: None }
    }
}

/// `check` options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Random trials per algebraic identity.
    #[serde(default = "d_trials")]
    pub trials: usize,
    /// Seed of every random draw.
    #[serde(default = "d_seed")]
    pub seed: u64,
}

fn d_trials() -> usize {
    1000
}
fn d_seed() -> u64 {
    1
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { trials: d_trials(), seed: d_seed() }
    }
}

/// Output location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving every file.
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
}

fn d_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: d_dir() }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Applies `a.b.c=value` to a TOML tree. The value is parsed as a TOML
/// literal and taken as a bare string when that fails.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| bad(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad(format!("empty path segment in override key '{key}'")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| bad(format!("override key '{key}' crosses a non-table value")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parses TOML text, applies overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(root).try_into().map_err(|e: toml::de::Error| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. A relative potential table path is resolved
    /// against the directory of the file.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text, overrides)?;
        if let (Some(table), Some(dir)) = (cfg.potential.table.as_mut(), path.parent()) {
            if table.is_relative() {
                *table = dir.join(&*table);
            }
        }
        Ok(cfg)
    }

    /// Canonical TOML text.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    /// Range checks done before any computation.
    pub fn validate(&self) -> Result<()> {
        let finite =
            |name: &str, x: f64| if x.is_finite() { Ok(()) } else { Err(bad(format!("{name} must be finite"))) };
        for (name, x) in [
            ("lattice.omega1[0]", self.lattice.omega1[0]),
            ("lattice.omega1[1]", self.lattice.omega1[1]),
            ("lattice.omega2[0]", self.lattice.omega2[0]),
            ("lattice.omega2[1]", self.lattice.omega2[1]),
            ("thermo.mu", self.thermo.mu),
        ] {
            finite(name, x)?;
        }
        self.lattice()?;
        if self.n < 1 {
            return Err(bad("n must be a positive integer"));
        }
        if self.grid < 4 {
            return Err(bad("grid must be at least 4"));
        }
        let dim = self.grid * self.grid;
        if !(self.thermo.t >= MIN_TEMPERATURE) || !self.thermo.t.is_finite() {
            return Err(bad(format!("thermo.t must be a finite number >= {MIN_TEMPERATURE:e}")));
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu < dim as f64) {
                return Err(bad(format!("nu must lie in (0, {dim})")));
            }
        }
        if self.truncation.is_some_and(|m| m == 0 || m > dim) {
            return Err(bad(format!("truncation must lie in 1..={dim}")));
        }
        if self.threads == Some(0) {
            return Err(bad("threads must be positive"));
        }
        self.validate_potential()?;
        if self.interaction.exchange {
            return Err(bad("the exchange term is not supported by the normal and stability solvers"));
        }
        self.scf.solver().validate().map_err(|e| bad(e.to_string()))?;
        if self.scf.max_iter == 0 {
            return Err(bad("scf.max_iter must be positive"));
        }
        let tc = &self.tc;
        if tc.b.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(bad("tc.b entries must be positive"));
        }
        if !(tc.t_lo >= MIN_TEMPERATURE && tc.t_hi > tc.t_lo && tc.t_hi.is_finite()) {
            return Err(bad(format!("tc bracket needs {MIN_TEMPERATURE:e} <= t_lo < t_hi")));
        }
        if !(tc.tol > 0.0) {
            return Err(bad("tc.tol must be positive"));
        }
        if let Some(r) = tc.mu_over_b {
            finite("tc.mu_over_b", r)?;
        }
        if self.check.trials == 0 {
            return Err(bad("check.trials must be positive"));
        }
        Ok(())
    }

    fn validate_potential(&self) -> Result<()> {
        let p = &self.potential;
        let positive = |name: &str, x: Option<f64>| match x {
            Some(v) if v > 0.0 && v.is_finite() => Ok(()),
            Some(_) => Err(bad(format!("potential.{name} must be positive"))),
            None => Err(bad(format!("potential.{name} is required"))),
        };
        let absent = |name: &str, present: bool| {
            if present {
                Err(bad(format!("potential.{name} does not apply to this kind")))
            } else {
                Ok(())
            }
        };
        if let Some(d) = p.depth {
            if !d.is_finite() {
                return Err(bad("potential.depth must be finite"));
            }
        }
        match p.kind {
            PotentialKind::Zero => {
                absent("depth", p.depth.is_some())?;
                absent("width", p.width.is_some())?;
                absent("kappa", p.kappa.is_some())?;
                absent("table", p.table.is_some())?;
                absent("integral", p.integral.is_some())?;
            }
            PotentialKind::Gaussian => {
                positive("width", p.width)?;
                absent("kappa", p.kappa.is_some())?;
                absent("table", p.table.is_some())?;
            }
            PotentialKind::InversePower => {
                positive("kappa", p.kappa)?;
                absent("width", p.width.is_some())?;
                absent("table", p.table.is_some())?;
            }
            PotentialKind::Table => {
                if p.table.is_none() {
                    return Err(bad("potential.table is required"));
                }
                absent("depth", p.depth.is_some())?;
                absent("width", p.width.is_some())?;
                absent("kappa", p.kappa.is_some())?;
            }
        }
        if p.integral.is_some_and(|x| !x.is_finite()) {
            return Err(bad("potential.integral must be finite"));
        }
        Ok(())
    }

    /// Truncation rank `M`.
    pub fn rank(&self) -> usize {
        self.truncation.unwrap_or(DEFAULT_TRUNCATION).min(self.grid * self.grid)
    }

    /// The configured cell.
    pub fn lattice(&self) -> Result<Lattice> {
        let [a, b] = self.lattice.omega1;
        let [c, d] = self.lattice.omega2;
        Lattice::new(Vec2::new(a, b), Vec2::new(c, d)).map_err(|e| bad(e.to_string()))
    }

    /// `(T, μ)` from the config.
    pub fn thermo(&self) -> Result<Thermo> {
        Ok(Thermo::new(self.thermo.t, self.thermo.mu)?)
    }

    /// Recipe for the core model; reads the potential table if one is used.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let p = &self.potential;
        let depth = p.depth.unwrap_or(1.0);
        let potential = match p.kind {
            PotentialKind::Zero => PotentialSpec::Zero,
            PotentialKind::Gaussian => PotentialSpec::Gaussian { depth, width: p.width.unwrap_or(1.0) },
            PotentialKind::InversePower => PotentialSpec::InversePower { kappa: p.kappa.unwrap_or(1.0), depth },
            PotentialKind::Table => PotentialSpec::Table(read_table(p.table.as_deref().unwrap_or(Path::new("")))?),
        };
        Ok(ModelSpec {
            lattice: self.lattice()?,
            n: self.n,
            grid_n: self.grid,
            potential,
            potential_integral: p.integral,
            interaction: Interaction { direct: self.interaction.direct, exchange: self.interaction.exchange },
        })
    }

    /// Thread count: config, then `BDGLAB_THREADS`, then 1.
    pub fn thread_count(&self) -> Result<usize> {
        if let Some(n) = self.threads {
            return Ok(n);
        }
        match std::env::var("BDGLAB_THREADS") {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(bad(format!("BDGLAB_THREADS='{s}' is not a positive integer"))),
            },
            Err(_) => Ok(1),
        }
    }
}

/// Reads a potential table.
pub fn read_table(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read potential table {}: {e}", path.display())))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad number '{s}' in {}", path.display()))))
        .collect()
}
