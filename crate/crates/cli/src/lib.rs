//! Configuration-driven runner for the ion-dfs experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod config;
pub mod experiments;
pub mod output;
pub mod sweep;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use config::{ConfigError, ExperimentConfig, ExperimentKind};
use experiments::{run_experiment, RunOptions};
use output::{Scalars, Summary};

/// Parsed configuration plus the raw table that sweeps re-apply paths to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: toml::Table,
    pub config: ExperimentConfig,
}

impl LoadedConfig {
    /// Parse `text`; `experiment` replaces the file's `experiment` key when given.
    pub fn from_str(text: &str, experiment: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        let (config, raw) = ExperimentConfig::from_toml_text(text, experiment)?;
        Ok(LoadedConfig { raw, config })
    }

    pub fn from_path(path: &Path, experiment: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_str(&text, experiment)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunSettings {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub scalars: Scalars,
    pub warnings: Vec<String>,
}

/// Run the configured experiment and write its CSV and summary into `out_dir`.
pub fn run(loaded: &LoadedConfig, out_dir: &Path, settings: &RunSettings) -> Result<RunReport> {
    let mut cfg = loaded.config.clone();
    if let Some(seed) = settings.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = settings.tolerance {
        if !(tol.is_finite() && tol > 0.0) {
            anyhow::bail!("--tolerance must be > 0, got {tol}");
        }
    }
    if settings.workers == Some(0) {
        anyhow::bail!("--workers must be >= 1");
    }
    let opts = RunOptions { tolerance: settings.tolerance };

    let (table, scalars, warnings) = match (&cfg.sweep, cfg.experiment) {
        (Some(sw), ExperimentKind::Sweep) => {
            let points = sweep::run_sweep(&loaded.raw, sw, cfg.seed, &opts, settings.workers)?;
            let failed = points.iter().filter(|p| p.result.is_err()).count();
            let mut s = Scalars::default();
            s.int("points", points.len() as i64);
            s.int("failed", failed as i64);
            (sweep::sweep_table(sw, &points), s, Vec::new())
        }
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = settings.workers {
                builder = builder.num_threads(n);
            }
            let pool = builder.build().context("building worker pool")?;
            let o = pool.install(|| run_experiment(&cfg, &opts)).with_context(|| cfg.experiment.as_str())?;
            (o.table, o.scalars, o.warnings)
        }
    };

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv = out_dir.join(&cfg.output.csv);
    let summary = out_dir.join(&cfg.output.summary);
    table.write(&csv)?;
    Summary {
        experiment: cfg.experiment.as_str(),
        seed: cfg.seed,
        scalars: &scalars,
        warnings: &warnings,
        config: &cfg,
    }
    .write(&summary)?;
    Ok(RunReport { csv, summary, scalars, warnings })
}
