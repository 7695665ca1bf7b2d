//! TOML experiment configuration.
//!
//! Every quantity is dimensionless in units where ω_z = 1 and a = 1 unless
//! the optional `[physical]` block supplies laboratory values, which are
//! converted once, at load time.

use std::f64::consts::PI;
use std::path::Path;

use ion_dfs::chain::{build_spectrum, ising_coupling, ChainConfig, ModeSpectrum, WavenumberConvention};
use ion_dfs::kernels::BathParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {reason}")]
    Field { path: String, reason: String },
}

fn field(path: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field { path: path.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Modes,
    Kernels,
    Dephase,
    Dfs,
    Exact,
    Teleport,
    Sweep,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Modes => "modes",
            ExperimentKind::Kernels => "kernels",
            ExperimentKind::Dephase => "dephase",
            ExperimentKind::Dfs => "dfs",
            ExperimentKind::Exact => "exact",
            ExperimentKind::Teleport => "teleport",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub dfs: DfsSection,
    #[serde(default)]
    pub qubits: QubitSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub kernels: KernelSection,
    #[serde(default)]
    pub teleport: TeleportSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalUnits>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Traveling,
    Standing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub n_ions: usize,
    pub omega_z: f64,
    pub ion_spacing_a: f64,
    pub ion_mass_m: f64,
    pub charge_e: f64,
    pub laser_wavenumber_ktilde: f64,
    pub qubit_sites: [usize; 2],
    pub convention: Convention,
    /// Modes kept in mode sums and in λ; all `N − 1` by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
}

impl Default for ChainSection {
    fn default() -> Self {
        let c = ChainConfig::default();
        ChainSection {
            n_ions: c.n_ions,
            omega_z: c.omega_z,
            ion_spacing_a: c.ion_spacing_a,
            ion_mass_m: c.ion_mass_m,
            charge_e: c.charge_e,
            laser_wavenumber_ktilde: c.laser_wavenumber_ktilde,
            qubit_sites: c.qubit_sites,
            convention: Convention::Traveling,
            n_modes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    /// Defaults to `k̃²/(2mω_zν)` from the chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub omega_c: f64,
    pub temperature: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        BathSection { eta: None, omega_c: 1.0, temperature: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DfsSection {
    pub delta: f64,
    pub omega_0: f64,
    /// Defaults to the Ising coupling of the chain spectrum at separation r.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialQubits {
    /// `|+⟩|+⟩`: every coherence equal to 1/4.
    #[default]
    PlusPlus,
    /// `(|10⟩ + |01⟩)/√2`.
    DfsBell,
    /// `(|11⟩ + |00⟩)/√2`.
    Ghz,
    /// `|10⟩`, the DFS generation protocol.
    Excited10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct QubitSection {
    pub initial: InitialQubits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    #[default]
    Chebyshev,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSection {
    pub n_modes: usize,
    /// Per-mode Fock dimensions; overrides `fock_dim`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_dims: Option<Vec<usize>>,
    pub fock_dim: usize,
    /// Size every mode so that the Gibbs weight beyond it is below `max_deficit`.
    pub thermal_dims: bool,
    pub ceiling: usize,
    pub max_deficit: f64,
    pub prune_weight: f64,
    /// Raise the dimensions until the tracked coherences settle.
    pub converge: bool,
    pub converge_tol: f64,
    pub raise_step: usize,
    pub max_raises: usize,
    pub propagator: Propagator,
}

impl Default for TruncationSection {
    fn default() -> Self {
        TruncationSection {
            n_modes: 1,
            fock_dims: None,
            fock_dim: 8,
            thermal_dims: false,
            ceiling: ion_dfs::exact::DEFAULT_CEILING,
            max_deficit: 1e-6,
            prune_weight: 1e-11,
            converge: false,
            converge_tol: 1e-9,
            raise_step: 2,
            max_raises: 4,
            propagator: Propagator::Chebyshev,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { t_start: 0.0, t_end: 10.0, n_points: 101, spacing: Spacing::Linear }
    }
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let last = n - 1;
        (0..n)
            .map(|i| {
                if i == last {
                    return self.t_end;
                }
                let s = i as f64 / last as f64;
                match self.spacing {
                    Spacing::Linear => self.t_start + s * (self.t_end - self.t_start),
                    Spacing::Log => self.t_start * (self.t_end / self.t_start).powf(s),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethodChoice {
    #[default]
    Continuum,
    ModeSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub method: KernelMethodChoice,
    /// Qubit separation override; the chain geometry gives it otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    #[default]
    Ideal,
    Werner,
    Dephased,
    /// Ideal resource dephased by `e^{−2Γ₋}` of the configured bath at `time_grid.t_end`.
    Bath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeleportSection {
    pub resource: ResourceKind,
    pub p: f64,
    pub decay: f64,
    pub samples: usize,
    pub max_hops: usize,
}

impl Default for TeleportSection {
    fn default() -> Self {
        TeleportSection { resource: ResourceKind::Ideal, p: 1.0, decay: 1.0, samples: 10_000, max_hops: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into this configuration, e.g. `dfs.delta`.
    pub parameter: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub inner: ExperimentKind,
    pub axes: Vec<SweepAxis>,
}

/// Laboratory inputs. Frequencies in Hz are read as rates (s⁻¹) and divided
/// by the angular trap frequency `2π · omega_z_mhz · 10⁶`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalUnits {
    pub omega_z_mhz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ion_spacing_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laser_wavenumber_per_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_0_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_c_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature_hz: Option<f64>,
}

impl PhysicalUnits {
    /// Reference angular frequency in s⁻¹.
    pub fn unit_rate(&self) -> f64 {
        2.0 * PI * self.omega_z_mhz * 1e6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub csv: String,
    pub summary: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { csv: "output.csv".into(), summary: "summary.toml".into() }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_text(text, None).map(|(cfg, _)| cfg)
    }

    /// Parse `text`, replacing its `experiment` key with `experiment` when
    /// given. Returns the raw table too. Type errors carry line numbers.
    pub fn from_toml_text(text: &str, experiment: Option<ExperimentKind>) -> Result<(Self, toml::Table), ConfigError> {
        let mut raw: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        if let Some(kind) = experiment {
            raw.insert("experiment".into(), toml::Value::String(kind.as_str().into()));
        }
        match Self::from_table(raw.clone()) {
            Ok(cfg) => Ok((cfg, raw)),
            Err(ConfigError::Parse(plain)) => {
                // a table has lost its spans; the text still has them
                let spanned = toml::from_str::<ExperimentConfig>(text).err().map(|e| e.to_string());
                Err(ConfigError::Parse(spanned.unwrap_or(plain)))
            }
            Err(e) => Err(e),
        }
    }

    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig =
            table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.apply_physical_units()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Convert the `[physical]` block into the dimensionless fields it
    /// names. Setting a quantity both ways is an error.
    fn apply_physical_units(&mut self) -> Result<(), ConfigError> {
        let Some(ph) = self.physical.clone() else { return Ok(()) };
        if !(ph.omega_z_mhz.is_finite() && ph.omega_z_mhz > 0.0) {
            return Err(field("physical.omega_z_mhz", format!("must be > 0, got {}", ph.omega_z_mhz)));
        }
        let unit = ph.unit_rate() / self.chain.omega_z;
        let rate = |name: &str, v: f64| -> Result<f64, ConfigError> {
            if v.is_finite() {
                Ok(v / unit)
            } else {
                Err(field(format!("physical.{name}"), format!("must be finite, got {v}")))
            }
        };
        if let Some(v) = ph.lambda_hz {
            if self.dfs.lambda.is_some() {
                return Err(field("physical.lambda_hz", "conflicts with dfs.lambda"));
            }
            self.dfs.lambda = Some(rate("lambda_hz", v)?);
        }
        if let Some(v) = ph.delta_hz {
            self.dfs.delta = rate("delta_hz", v)?;
        }
        if let Some(v) = ph.omega_0_hz {
            self.dfs.omega_0 = rate("omega_0_hz", v)?;
        }
        if let Some(v) = ph.omega_c_hz {
            self.bath.omega_c = rate("omega_c_hz", v)?;
        }
        if let Some(v) = ph.temperature_hz {
            self.bath.temperature = rate("temperature_hz", v)?;
        }
        if let Some(k) = ph.laser_wavenumber_per_um {
            let Some(a) = ph.ion_spacing_um else {
                return Err(field("physical.laser_wavenumber_per_um", "needs physical.ion_spacing_um"));
            };
            self.chain.laser_wavenumber_ktilde = k * a / self.chain.ion_spacing_a;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let chain = self.chain_config();
        chain.validate().map_err(|e| core_field("chain", e))?;
        let max_modes = self.chain.n_ions - 1;
        if let Some(m) = self.chain.n_modes {
            if m == 0 || m > max_modes {
                return Err(field("chain.n_modes", format!("must lie in 1..={max_modes}, got {m}")));
            }
        }
        let bath = self.bath_params();
        bath.validate().map_err(|e| core_field("bath", e))?;
        if let Some(r) = self.kernels.r {
            if !(r.is_finite() && r >= 0.0 && r < chain.chain_length()) {
                return Err(field("kernels.r", format!("must lie in [0, L), got {r}")));
            }
        }
        for (name, v) in [("delta", self.dfs.delta), ("omega_0", self.dfs.omega_0)] {
            if !v.is_finite() {
                return Err(field(format!("dfs.{name}"), format!("must be finite, got {v}")));
            }
        }
        if let Some(l) = self.dfs.lambda {
            if !l.is_finite() {
                return Err(field("dfs.lambda", format!("must be finite, got {l}")));
            }
        }
        let g = &self.time_grid;
        if g.n_points < 2 {
            return Err(field("time_grid.n_points", format!("must be >= 2, got {}", g.n_points)));
        }
        if !(g.t_start.is_finite() && g.t_start >= 0.0) {
            return Err(field("time_grid.t_start", format!("must be >= 0, got {}", g.t_start)));
        }
        if !(g.t_end.is_finite() && g.t_end > g.t_start) {
            return Err(field("time_grid.t_end", format!("must exceed t_start = {}, got {}", g.t_start, g.t_end)));
        }
        if g.spacing == Spacing::Log && g.t_start <= 0.0 {
            return Err(field("time_grid.t_start", "log spacing needs t_start > 0"));
        }
        if !g.points().windows(2).all(|w| w[0] < w[1]) {
            return Err(field("time_grid", "points are not strictly increasing"));
        }
        let t = &self.truncation;
        if t.n_modes == 0 || t.n_modes > max_modes {
            return Err(field("truncation.n_modes", format!("must lie in 1..={max_modes}, got {}", t.n_modes)));
        }
        if let Some(d) = &t.fock_dims {
            if d.len() != t.n_modes {
                return Err(field("truncation.fock_dims", format!("has {} entries for {} modes", d.len(), t.n_modes)));
            }
        }
        self.truncation_spec().map_err(|e| core_field("truncation", e))?;
        if !(t.max_deficit > 0.0 && t.max_deficit < 1.0) {
            return Err(field("truncation.max_deficit", format!("must lie in (0, 1), got {}", t.max_deficit)));
        }
        if !(t.prune_weight >= 0.0 && t.prune_weight < 1.0) {
            return Err(field("truncation.prune_weight", format!("must lie in [0, 1), got {}", t.prune_weight)));
        }
        if t.converge && (t.raise_step == 0 || !(t.converge_tol > 0.0)) {
            return Err(field("truncation", "converge needs raise_step >= 1 and converge_tol > 0"));
        }
        let tp = &self.teleport;
        if !(0.0..=1.0).contains(&tp.p) {
            return Err(field("teleport.p", format!("must lie in [0, 1], got {}", tp.p)));
        }
        if !(0.0..=1.0).contains(&tp.decay) {
            return Err(field("teleport.decay", format!("must lie in [0, 1], got {}", tp.decay)));
        }
        if tp.samples < 2 {
            return Err(field("teleport.samples", format!("must be >= 2, got {}", tp.samples)));
        }
        if tp.max_hops == 0 {
            return Err(field("teleport.max_hops", "must be >= 1"));
        }
        match (&self.sweep, self.experiment) {
            (None, ExperimentKind::Sweep) => return Err(field("sweep", "missing for experiment = \"sweep\"")),
            (Some(s), _) => {
                if s.inner == ExperimentKind::Sweep {
                    return Err(field("sweep.inner", "cannot itself be a sweep"));
                }
                if !(1..=2).contains(&s.axes.len()) {
                    return Err(field("sweep.axes", format!("need one or two axes, got {}", s.axes.len())));
                }
                for (i, a) in s.axes.iter().enumerate() {
                    if a.values.is_empty() {
                        return Err(field(format!("sweep.axes[{i}].values"), "is empty"));
                    }
                    if a.parameter.starts_with("sweep") || a.parameter == "experiment" {
                        return Err(field(format!("sweep.axes[{i}].parameter"), "cannot sweep the sweep itself"));
                    }
                }
            }
            _ => {}
        }
        for (name, v) in [("csv", &self.output.csv), ("summary", &self.output.summary)] {
            let p = Path::new(v);
            if v.is_empty() || p.is_absolute() || p.components().count() != 1 {
                return Err(field(format!("output.{name}"), "must be a plain file name inside the output directory"));
            }
        }
        Ok(())
    }

    pub fn chain_config(&self) -> ChainConfig {
        let c = &self.chain;
        ChainConfig {
            n_ions: c.n_ions,
            omega_z: c.omega_z,
            ion_spacing_a: c.ion_spacing_a,
            ion_mass_m: c.ion_mass_m,
            charge_e: c.charge_e,
            laser_wavenumber_ktilde: c.laser_wavenumber_ktilde,
            qubit_sites: c.qubit_sites,
            convention: match c.convention {
                Convention::Traveling => WavenumberConvention::Traveling,
                Convention::Standing => WavenumberConvention::Standing,
            },
        }
    }

    pub fn n_modes(&self) -> usize {
        self.chain.n_modes.unwrap_or(self.chain.n_ions - 1)
    }

    pub fn spectrum(&self) -> ion_dfs::Result<ModeSpectrum> {
        build_spectrum(&self.chain_config(), self.n_modes())
    }

    pub fn separation(&self) -> f64 {
        self.kernels.r.unwrap_or_else(|| self.chain_config().separation())
    }

    pub fn bath_params(&self) -> BathParams {
        let eta = self.bath.eta.unwrap_or_else(|| self.chain_config().ohmic_eta());
        let mut b = BathParams::new(eta, self.bath.omega_c, self.bath.temperature);
        b.nu = self.chain_config().stiffness_nu();
        b
    }

    /// λ as configured, else the Ising coupling of the chain at separation r.
    pub fn lambda(&self) -> ion_dfs::Result<f64> {
        match self.dfs.lambda {
            Some(l) => Ok(l),
            None => Ok(ising_coupling(&self.spectrum()?, self.separation())),
        }
    }

    pub fn truncation_spec(&self) -> ion_dfs::Result<ion_dfs::exact::TruncationSpec> {
        use ion_dfs::exact::TruncationSpec;
        let t = &self.truncation;
        let dims = if let Some(d) = &t.fock_dims {
            d.clone()
        } else if t.thermal_dims {
            let s = self.spectrum()?;
            TruncationSpec::for_temperature(&s, t.n_modes, self.bath.temperature, t.max_deficit, t.fock_dim)?
                .fock_dims()
                .to_vec()
        } else {
            vec![t.fock_dim; t.n_modes]
        };
        TruncationSpec::with_ceiling(dims, t.ceiling)
    }
}

/// Prefix a core parameter error with its config section.
fn core_field(section: &str, e: ion_dfs::Error) -> ConfigError {
    match e {
        ion_dfs::Error::InvalidParameter { name, reason } => field(format!("{section}.{name}"), reason),
        other => field(section, other.to_string()),
    }
}

/// Set `path` (dot separated) inside `table`, creating intermediate tables.
pub fn set_dotted(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(field("sweep.axes.parameter", format!("malformed path {path:?}")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(field(path, format!("{p} is not a table"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
