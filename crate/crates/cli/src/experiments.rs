//! One function per experiment kind. Each returns its table and scalars
//! without touching the filesystem.

use std::f64::consts::FRAC_1_SQRT_2;

use anyhow::{bail, Context, Result};
use ion_dfs::chain::{coupling_lambda, exact_axial_modes, ising_coupling, ModeSpectrum};
use ion_dfs::dephasing::dephase_map;
use ion_dfs::dfs::{dfs_evolve, entangling_time, DfsParams};
use ion_dfs::exact::{
    build_hamiltonian, converged_series, evolve_series, thermal_initial_state, EvolveOptions, PropagatorKind,
    ThermalOptions,
};
use ion_dfs::kernels::{continuum_kernels, dfs_lifetime, mode_sum_kernels, DecoherenceKernels, PhaseParams};
use ion_dfs::qinfo::{
    average_teleport_fidelity, concurrence, dfs_target_for, monte_carlo_fidelity, relay_fidelity, state_fidelity,
    TeleportResource,
};
use ion_dfs::quadrature::QuadOptions;
use ion_dfs::state::{c, ket, Ket4, QubitPairState, IDX_00, IDX_01, IDX_10, IDX_11};
use ion_dfs::Error;

use crate::config::{ExperimentConfig, ExperimentKind, InitialQubits, KernelMethodChoice, Propagator, ResourceKind};
use crate::output::{Cell, Scalars, Table};

/// Overrides taken from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub tolerance: Option<f64>,
}

impl RunOptions {
    fn quad(&self) -> QuadOptions {
        self.tolerance.map_or_else(QuadOptions::default, QuadOptions::with_tolerance)
    }

    fn propagator_tol(&self) -> f64 {
        self.tolerance.unwrap_or(1e-10)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub scalars: Scalars,
    pub warnings: Vec<String>,
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    match cfg.experiment {
        ExperimentKind::Modes => modes(cfg),
        ExperimentKind::Kernels => kernels(cfg, opts),
        ExperimentKind::Dephase => dephase(cfg, opts),
        ExperimentKind::Dfs => dfs(cfg),
        ExperimentKind::Exact => exact(cfg, opts),
        ExperimentKind::Teleport => teleport(cfg, opts),
        ExperimentKind::Sweep => bail!("a sweep runs through sweep::run_sweep"),
    }
}

pub fn initial_ket(choice: InitialQubits) -> Ket4 {
    let s = c(FRAC_1_SQRT_2, 0.0);
    match choice {
        InitialQubits::PlusPlus => (ket(1, 1) + ket(1, 0) + ket(0, 1) + ket(0, 0)) * c(0.5, 0.0),
        InitialQubits::DfsBell => (ket(1, 0) + ket(0, 1)) * s,
        InitialQubits::Ghz => (ket(1, 1) + ket(0, 0)) * s,
        InitialQubits::Excited10 => ket(1, 0),
    }
}

/// Chain spectrum with the qubits moved to separation `kernels.r` when set.
fn spectrum_for(cfg: &ExperimentConfig, n_modes: usize) -> Result<ModeSpectrum> {
    let s = cfg.spectrum().context("chain spectrum")?;
    if n_modes > s.len() {
        bail!("chain spectrum: {n_modes} modes requested but chain.n_modes = {}", s.len());
    }
    let s = s.truncated(n_modes);
    Ok(match cfg.kernels.r {
        Some(r) => s.with_positions(0.0, r),
        None => s,
    })
}

fn modes(cfg: &ExperimentConfig) -> Result<Outcome> {
    let chain = cfg.chain_config();
    let spectrum = cfg.spectrum().context("chain spectrum")?;
    let exact = exact_axial_modes(&chain).context("exact axial modes")?;
    let mut table = Table::new(
        "ion-dfs/modes/v1",
        &[
            "n",
            "omega",
            "omega_exact",
            "relative_deviation",
            "wavenumber",
            "z_tilde",
            "g1_re",
            "g1_im",
            "g2_re",
            "g2_im",
        ],
    );
    for m in &spectrum.modes {
        let w_exact = exact.frequencies[m.index - 1];
        table.push(vec![
            m.index.into(),
            m.omega.into(),
            w_exact.into(),
            ((m.omega - w_exact) / w_exact).into(),
            m.wavenumber.into(),
            m.z_tilde.into(),
            m.couplings[0].re.into(),
            m.couplings[0].im.into(),
            m.couplings[1].re.into(),
            m.couplings[1].im.into(),
        ]);
    }
    let r = cfg.separation();
    let mut s = Scalars::default();
    s.int("n_modes", spectrum.len() as i64);
    s.float("separation", r);
    s.float("chain_length", chain.chain_length());
    s.float("dispersion_velocity", chain.dispersion_velocity());
    s.float("eta", chain.ohmic_eta());
    s.float("coupling_sum", coupling_lambda(&spectrum, r));
    s.float("lambda", ising_coupling(&spectrum, r));
    s.int("newton_iterations", exact.newton_iterations as i64);
    s.float("equilibrium_residual", exact.residual);
    Ok(Outcome { table, scalars: s, warnings: Vec::new() })
}

fn compute_kernels(cfg: &ExperimentConfig, grid: &[f64], opts: &RunOptions) -> Result<DecoherenceKernels> {
    let phase = PhaseParams { omega_0: cfg.dfs.omega_0, lambda: cfg.lambda().context("lambda")? };
    let r = cfg.separation();
    match cfg.kernels.method {
        KernelMethodChoice::Continuum => {
            let v = cfg.chain_config().dispersion_velocity();
            continuum_kernels(grid, r, &cfg.bath_params(), v, phase, &opts.quad()).context("continuum kernels")
        }
        KernelMethodChoice::ModeSum => {
            let spectrum = cfg.spectrum().context("chain spectrum")?;
            mode_sum_kernels(&spectrum, r, cfg.bath.temperature, grid, phase).context("mode-sum kernels")
        }
    }
}

fn kernel_table(k: &DecoherenceKernels) -> Table {
    let mut table =
        Table::new("ion-dfs/kernels/v1", &["t", "gamma", "gamma_plus", "gamma_minus", "phi_plus", "phi_minus"]);
    for i in 0..k.len() {
        let p = k.point(i);
        table.push(vec![
            p.t.into(),
            p.gamma.into(),
            p.gamma_plus.into(),
            p.gamma_minus.into(),
            p.phi_plus.into(),
            p.phi_minus.into(),
        ]);
    }
    table
}

fn kernels(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let grid = cfg.time_grid.points();
    let k = compute_kernels(cfg, &grid, opts)?;
    let mut s = Scalars::default();
    let mut warnings = cfg.bath_params().consistency_warnings(cfg.dfs.delta);
    s.text("method", k.method.as_str());
    s.float("separation", cfg.separation());
    s.float("gamma_final", *k.gamma.last().unwrap());
    s.float("gamma_plus_final", *k.gamma_plus.last().unwrap());
    s.float("gamma_minus_final", *k.gamma_minus.last().unwrap());
    s.float("gamma_minus_max", k.gamma_minus.iter().copied().fold(0.0, f64::max));
    if cfg.bath.temperature > 0.0 {
        let chain = cfg.chain_config();
        let lt = dfs_lifetime(
            &cfg.bath_params(),
            cfg.separation(),
            chain.chain_length(),
            chain.omega_z,
            chain.dispersion_velocity(),
            &opts.quad(),
        );
        match lt {
            Ok(lt) => {
                s.float("tau_dfs", lt.tau().unwrap_or(f64::INFINITY));
                s.float("tau_dfs_estimate", lt.estimate);
            }
            Err(e @ Error::NoLifetimeRoot { .. }) => {
                warnings.push(format!("dfs lifetime: {e}"));
                s.float("tau_dfs", f64::INFINITY);
            }
            Err(e) => return Err(e).context("dfs lifetime"),
        }
    }
    Ok(Outcome { table: kernel_table(&k), scalars: s, warnings })
}

fn coherence_row(t: f64, rho: &QubitPairState) -> Vec<Cell> {
    vec![
        t.into(),
        rho.element(IDX_10, IDX_01).norm().into(),
        rho.element(IDX_11, IDX_00).norm().into(),
        rho.element(IDX_11, IDX_11).re.into(),
        rho.element(IDX_10, IDX_10).re.into(),
        rho.element(IDX_01, IDX_01).re.into(),
        rho.element(IDX_00, IDX_00).re.into(),
        concurrence(rho).into(),
    ]
}

const COHERENCE_COLUMNS: [&str; 8] = ["t", "abs_rho23", "abs_rho14", "p11", "p10", "p01", "p00", "concurrence"];

fn dephase(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let grid = cfg.time_grid.points();
    let k = compute_kernels(cfg, &grid, opts)?;
    let rho0 = QubitPairState::from_pure(&initial_ket(cfg.qubits.initial)).context("initial state")?;
    let mut cols = COHERENCE_COLUMNS.to_vec();
    cols.extend(["dfs_decay", "ghz_decay"]);
    let mut table = Table::new("ion-dfs/dephase/v1", &cols);
    let mut min_conc = f64::INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let rho = dephase_map(&rho0, t, &k, cfg.dfs.omega_0).context("dephasing map")?;
        let p = k.point(i);
        let mut row = coherence_row(t, &rho);
        row.push((-2.0 * p.gamma_minus).exp().into());
        row.push((-2.0 * p.gamma_plus).exp().into());
        min_conc = min_conc.min(concurrence(&rho));
        table.push(row);
    }
    let mut s = Scalars::default();
    s.text("method", k.method.as_str());
    s.float("dfs_decay_final", (-2.0 * k.gamma_minus.last().unwrap()).exp());
    s.float("ghz_decay_final", (-2.0 * k.gamma_plus.last().unwrap()).exp());
    s.float("concurrence_min", min_conc);
    Ok(Outcome { table, scalars: s, warnings: cfg.bath_params().consistency_warnings(cfg.dfs.delta) })
}

fn dfs(cfg: &ExperimentConfig) -> Result<Outcome> {
    let lambda = cfg.lambda().context("lambda")?;
    let p = DfsParams::new(cfg.dfs.delta, cfg.dfs.omega_0, lambda).context("dfs parameters")?;
    let t_star = entangling_time(&p).context("entangling time")?;
    let target = dfs_target_for(p.kappa);
    let mut table = Table::new("ion-dfs/dfs/v1", &["t", "p10", "p01", "concurrence", "target_fidelity"]);
    for t in cfg.time_grid.points() {
        let psi = dfs_evolve(t, &p);
        let rho = QubitPairState::from_pure(&psi).context("dfs state")?;
        table.push(vec![
            t.into(),
            psi[IDX_10].norm_sqr().into(),
            psi[IDX_01].norm_sqr().into(),
            concurrence(&rho).into(),
            state_fidelity(&rho, &target).context("fidelity")?.into(),
        ]);
    }
    let at_star = QubitPairState::from_pure(&dfs_evolve(t_star, &p)).context("dfs state")?;
    let mut s = Scalars::default();
    s.float("lambda", lambda);
    s.float("delta", p.delta);
    s.float("omega_0", cfg.dfs.omega_0);
    s.float("kappa", p.kappa);
    s.float("t_star", t_star);
    s.float("concurrence_t_star", concurrence(&at_star));
    s.float("fidelity_t_star", state_fidelity(&at_star, &target).context("fidelity")?);
    if let Some(ph) = &cfg.physical {
        let unit = ph.unit_rate() / cfg.chain.omega_z;
        s.float("lambda_hz", lambda * unit);
        s.float("kappa_hz", p.kappa * unit);
        s.float("t_star_s", t_star / unit);
    }
    Ok(Outcome { table, scalars: s, warnings: p.warnings() })
}

fn exact(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let t = &cfg.truncation;
    let spectrum = spectrum_for(cfg, t.n_modes)?;
    let trunc = cfg.truncation_spec().context("truncation")?;
    let grid = cfg.time_grid.points();
    let qubits = initial_ket(cfg.qubits.initial);
    let temp = cfg.bath.temperature;
    let thermal = ThermalOptions { max_deficit: t.max_deficit, prune_weight: t.prune_weight };
    let evolve = EvolveOptions {
        tolerance: opts.propagator_tol(),
        kind: match t.propagator {
            Propagator::Chebyshev => PropagatorKind::Chebyshev,
            Propagator::Lanczos => PropagatorKind::Lanczos,
        },
    };
    let (delta, omega_0) = (cfg.dfs.delta, cfg.dfs.omega_0);
    let mut s = Scalars::default();
    let (states, final_trunc) = if t.converge {
        let run = converged_series(
            &qubits,
            &spectrum,
            &trunc,
            temp,
            delta,
            omega_0,
            &grid,
            t.converge_tol,
            t.raise_step,
            t.max_raises,
            &thermal,
            &evolve,
        )
        .context("exact evolution")?;
        s.float("last_change", run.last_change);
        s.float("dropped_weight", run.dropped_weight);
        (run.states, run.truncation)
    } else {
        let h = build_hamiltonian(&spectrum, &trunc, delta, omega_0).context("hamiltonian")?;
        let s0 = thermal_initial_state(&qubits, &spectrum, &trunc, temp, &thermal).context("thermal state")?;
        s.float("dropped_weight", s0.dropped_weight());
        s.int("ensemble_members", s0.members().len() as i64);
        (evolve_series(&s0, &h, &grid, 20.0, &evolve).context("exact evolution")?, trunc)
    };
    s.int("dim", final_trunc.dim() as i64);
    s.text("fock_dims", format!("{:?}", final_trunc.fock_dims()));

    // Δ = 0 has the closed-form mode-sum law to compare against
    let law = if delta == 0.0 {
        let r = cfg.separation();
        Some(
            mode_sum_kernels(&spectrum, r, temp, &grid, PhaseParams { omega_0, lambda: 0.0 })
                .context("mode-sum kernels")?,
        )
    } else {
        None
    };
    let mut cols = COHERENCE_COLUMNS.to_vec();
    if law.is_some() {
        cols.extend(["law_rho23", "law_rho14"]);
    }
    let mut table = Table::new("ion-dfs/exact/v1", &cols);
    let (a23, a14) = (qubits[IDX_10] * qubits[IDX_01].conj(), qubits[IDX_11] * qubits[IDX_00].conj());
    let mut worst: f64 = 0.0;
    for (i, (&t, rho)) in grid.iter().zip(&states).enumerate() {
        let mut row = coherence_row(t, rho);
        if let Some(k) = &law {
            let p = k.point(i);
            let l23 = a23.norm() * (-2.0 * p.gamma_minus).exp();
            let l14 = a14.norm() * (-2.0 * p.gamma_plus).exp();
            worst = worst
                .max((rho.element(IDX_10, IDX_01).norm() - l23).abs())
                .max((rho.element(IDX_11, IDX_00).norm() - l14).abs());
            row.push(l23.into());
            row.push(l14.into());
        }
        table.push(row);
    }
    if law.is_some() {
        s.float("max_law_deviation", worst);
    }
    Ok(Outcome { table, scalars: s, warnings: final_trunc.occupancy_warnings(&spectrum, temp) })
}

fn resource(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(TeleportResource, f64)> {
    let tp = &cfg.teleport;
    Ok(match tp.resource {
        ResourceKind::Ideal => (TeleportResource::ideal(), 1.0),
        ResourceKind::Werner => (TeleportResource::werner(tp.p).context("werner resource")?, 1.0),
        ResourceKind::Dephased => (TeleportResource::dephased(tp.decay).context("dephased resource")?, tp.decay),
        ResourceKind::Bath => {
            let k = compute_kernels(cfg, &[cfg.time_grid.t_end], opts)?;
            let decay = (-2.0 * k.gamma_minus[0]).exp();
            (TeleportResource::dephased(decay).context("dephased resource")?, decay)
        }
    })
}

fn teleport(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let (res, decay) = resource(cfg, opts)?;
    let avg = average_teleport_fidelity(&res);
    let mc = monte_carlo_fidelity(&res, cfg.teleport.samples, cfg.seed).context("monte carlo teleportation")?;
    let mut table = Table::new("ion-dfs/teleport/v1", &["n_hops", "relay_fidelity"]);
    for n in 1..=cfg.teleport.max_hops {
        table.push(vec![n.into(), relay_fidelity(n, &res).context("relay fidelity")?.into()]);
    }
    let mut s = Scalars::default();
    s.float("dfs_decay", decay);
    s.float("singlet_fraction", res.singlet_fraction());
    s.float("average_fidelity", avg);
    s.float("mc_fidelity", mc.mean);
    s.float("mc_std_error", mc.std_error);
    s.int("mc_samples", mc.samples as i64);
    Ok(Outcome { table, scalars: s, warnings: Vec::new() })
}
