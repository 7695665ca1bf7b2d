//! Axial normal modes of a linear ion chain and the spin-phonon couplings of
//! two qubit ions embedded in it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// How mode `n` is assigned a wavenumber along a chain of length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavenumberConvention {
    /// `k_n = 2πn/L`.
    #[default]
    Traveling,
    /// `k_n = πn/L`.
    Standing,
}

impl WavenumberConvention {
    fn wavenumber(self, n: usize, chain_length: f64) -> f64 {
        match self {
            WavenumberConvention::Traveling => 2.0 * PI * n as f64 / chain_length,
            WavenumberConvention::Standing => PI * n as f64 / chain_length,
        }
    }
}

/// Physical parameters of the chain and of the two illuminated qubit ions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_ions: usize,
    pub omega_z: f64,
    pub ion_spacing_a: f64,
    pub ion_mass_m: f64,
    pub charge_e: f64,
    pub laser_wavenumber_ktilde: f64,
    /// Site indices of qubit 1 and qubit 2.
    pub qubit_sites: [usize; 2],
    pub convention: WavenumberConvention,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_ions: 10,
            omega_z: 1.0,
            ion_spacing_a: 1.0,
            ion_mass_m: 1.0,
            charge_e: 1.0,
            laser_wavenumber_ktilde: 0.2,
            qubit_sites: [4, 5],
            convention: WavenumberConvention::Traveling,
        }
    }
}

impl ChainConfig {
    /// Full invariant check, including distinct qubit sites.
    pub fn validate(&self) -> Result<()> {
        self.validate_physical()?;
        if self.qubit_sites[0] == self.qubit_sites[1] {
            return Err(Error::param("qubit_sites", "qubit sites must be distinct"));
        }
        Ok(())
    }

    /// Everything except site distinctness; coincident sites model the r = 0 limit.
    fn validate_physical(&self) -> Result<()> {
        if self.n_ions < 2 {
            return Err(Error::param("n_ions", format!("need at least 2 ions, got {}", self.n_ions)));
        }
        positive("omega_z", self.omega_z)?;
        positive("ion_spacing_a", self.ion_spacing_a)?;
        positive("ion_mass_m", self.ion_mass_m)?;
        positive("charge_e", self.charge_e)?;
        if !self.laser_wavenumber_ktilde.is_finite() {
            return Err(Error::param("laser_wavenumber_ktilde", "must be finite"));
        }
        for &s in &self.qubit_sites {
            if s >= self.n_ions {
                return Err(Error::param("qubit_sites", format!("site {s} outside [0, {})", self.n_ions)));
            }
        }
        Ok(())
    }

    /// `L = N a`.
    pub fn chain_length(&self) -> f64 {
        self.n_ions as f64 * self.ion_spacing_a
    }

    pub fn qubit_positions(&self) -> [f64; 2] {
        [self.qubit_sites[0] as f64 * self.ion_spacing_a, self.qubit_sites[1] as f64 * self.ion_spacing_a]
    }

    /// `r = |z'_1 - z'_2|`.
    pub fn separation(&self) -> f64 {
        let [z1, z2] = self.qubit_positions();
        (z1 - z2).abs()
    }

    /// Large-n slope dω_n/dk_n of the closed-form dispersion, used as the
    /// linear dispersion velocity of the continuum bath.
    pub fn dispersion_velocity(&self) -> f64 {
        let l = self.chain_length();
        match self.convention {
            WavenumberConvention::Traveling => self.omega_z * l / (2.0 * PI * 2f64.sqrt()),
            WavenumberConvention::Standing => self.omega_z * l / (PI * 2f64.sqrt()),
        }
    }

    /// Chain stiffness `ν = (3e²/mω_z²a³)^{1/2}`.
    pub fn stiffness_nu(&self) -> f64 {
        (3.0 * self.charge_e.powi(2) / (self.ion_mass_m * self.omega_z.powi(2) * self.ion_spacing_a.powi(3))).sqrt()
    }

    /// Ohmic coupling `η = k̃²/(2mω_zν)`.
    pub fn ohmic_eta(&self) -> f64 {
        self.laser_wavenumber_ktilde.powi(2) / (2.0 * self.ion_mass_m * self.omega_z * self.stiffness_nu())
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

/// One axial mode with the couplings of both qubits to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: usize,
    pub omega: f64,
    pub wavenumber: f64,
    /// Zero-point length `1/√(2mω_n)`.
    pub z_tilde: f64,
    /// `g_n^j = i k̃ z̃_n ω_n e^{i k_n z'_j}` for j = 1, 2.
    pub couplings: [C64; 2],
}

impl Mode {
    /// `|g_n|²`, identical for both qubits.
    pub fn coupling_sq(&self) -> f64 {
        self.couplings[0].norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub modes: Vec<Mode>,
    pub(crate) ktilde: f64,
    pub(crate) mass: f64,
}

impl ModeSpectrum {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    /// The lowest `n` modes.
    pub fn truncated(&self, n: usize) -> ModeSpectrum {
        ModeSpectrum { modes: self.modes.iter().take(n).copied().collect(), ..self.clone() }
    }

    /// Same modes with couplings re-evaluated for qubits at `z1`, `z2`.
    pub fn with_positions(&self, z1: f64, z2: f64) -> ModeSpectrum {
        let modes = self
            .modes
            .iter()
            .map(|m| Mode {
                couplings: [
                    coupling(self.ktilde, m.z_tilde, m.omega, m.wavenumber, z1),
                    coupling(self.ktilde, m.z_tilde, m.omega, m.wavenumber, z2),
                ],
                ..*m
            })
            .collect();
        ModeSpectrum { modes, ..self.clone() }
    }

    /// Multiply all couplings by `factor`; used to build weak-coupling test baths.
    pub fn scaled_couplings(&self, factor: f64) -> ModeSpectrum {
        let modes = self
            .modes
            .iter()
            .map(|m| Mode { couplings: [m.couplings[0] * factor, m.couplings[1] * factor], ..*m })
            .collect();
        ModeSpectrum { modes, ktilde: self.ktilde * factor, mass: self.mass }
    }
}

fn coupling(ktilde: f64, z_tilde: f64, omega: f64, k: f64, z: f64) -> C64 {
    C64::i() * (ktilde * z_tilde * omega) * C64::from_polar(1.0, k * z)
}

/// Closed-form axial dispersion `ω_n = ω_z √(n(n+1)/2)`.
pub fn mode_frequency(n: usize, omega_z: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "mode index starts at 1"));
    }
    let n = n as f64;
    Ok(omega_z * (n * (n + 1.0) / 2.0).sqrt())
}

/// Modes `1..=n_modes` from the closed-form dispersion with the couplings of
/// the configured qubit sites. Coincident sites are accepted (r = 0 limit).
pub fn build_spectrum(cfg: &ChainConfig, n_modes: usize) -> Result<ModeSpectrum> {
    cfg.validate_physical()?;
    if n_modes == 0 || n_modes > cfg.n_ions - 1 {
        return Err(Error::param(
            "n_modes",
            format!("need 1 <= n_modes <= n_ions - 1 = {}, got {n_modes}", cfg.n_ions - 1),
        ));
    }
    let l = cfg.chain_length();
    let [z1, z2] = cfg.qubit_positions();
    let m = cfg.ion_mass_m;
    let kt = cfg.laser_wavenumber_ktilde;
    let modes = (1..=n_modes)
        .map(|n| {
            let omega = mode_frequency(n, cfg.omega_z)?;
            let k = cfg.convention.wavenumber(n, l);
            let z_tilde = 1.0 / (2.0 * m * omega).sqrt();
            Ok(Mode {
                index: n,
                omega,
                wavenumber: k,
                z_tilde,
                couplings: [coupling(kt, z_tilde, omega, k, z1), coupling(kt, z_tilde, omega, k, z2)],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeSpectrum { modes, ktilde: kt, mass: m })
}

/// Equilibrium positions and axial normal-mode frequencies of the chain.
#[derive(Debug, Clone)]
pub struct AxialModes {
    /// Ascending normal-mode frequencies.
    pub frequencies: Vec<f64>,
    /// Equilibrium positions, ascending, in the length units implied by `e`, `m`, `ω_z`.
    pub positions: Vec<f64>,
    pub newton_iterations: usize,
    pub residual: f64,
}

const FORCE_TOLERANCE: f64 = 1e-12;
const MAX_NEWTON_ITERATIONS: usize = 200;

/// Exact axial modes from the harmonic trap plus pairwise Coulomb repulsion.
///
/// Positions are solved in the dimensionless length `ℓ = (e²/mω_z²)^{1/3}`,
/// where the potential reads `½Σu_i² + Σ_{i<j} 1/|u_i − u_j|`, by damped
/// Newton iteration from evenly spaced ions. The Hessian at equilibrium gives
/// `ω² / ω_z²`.
pub fn exact_axial_modes(cfg: &ChainConfig) -> Result<AxialModes> {
    cfg.validate_physical()?;
    let n = cfg.n_ions;
    let spacing = 2.0 / (n as f64).powf(0.56);
    let mut u = DVector::from_fn(n, |i, _| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing);

    let mut residual = force(&u).amax();
    let mut iterations = 0;
    while residual >= FORCE_TOLERANCE {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(Error::EquilibriumNotConverged { iterations, residual });
        }
        iterations += 1;
        let grad = -force(&u);
        let hess = hessian(&u);
        let step = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -grad.clone(),
        };
        // backtrack until the ions stay ordered and the energy does not rise
        let e0 = energy(&u);
        let mut alpha = 1.0;
        loop {
            let trial = &u + &step * alpha;
            if is_sorted(&trial) && energy(&trial) <= e0 + 1e-14 * e0.abs().max(1.0) {
                u = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return Err(Error::EquilibriumNotConverged { iterations, residual });
            }
        }
        residual = force(&u).amax();
    }

    let eig = hessian(&u).symmetric_eigen();
    let mut frequencies: Vec<f64> = eig.eigenvalues.iter().map(|&l| cfg.omega_z * l.max(0.0).sqrt()).collect();
    frequencies.sort_by(f64::total_cmp);
    let scale = (cfg.charge_e.powi(2) / (cfg.ion_mass_m * cfg.omega_z.powi(2))).cbrt();
    Ok(AxialModes {
        frequencies,
        positions: u.iter().map(|x| x * scale).collect(),
        newton_iterations: iterations,
        residual,
    })
}

fn is_sorted(u: &DVector<f64>) -> bool {
    u.as_slice().windows(2).all(|w| w[0] < w[1])
}

fn energy(u: &DVector<f64>) -> f64 {
    let n = u.len();
    let mut e = 0.5 * u.norm_squared();
    for i in 0..n {
        for j in (i + 1)..n {
            e += 1.0 / (u[i] - u[j]).abs();
        }
    }
    e
}

/// Net force `−∂V/∂u_i`.
fn force(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut f = -u[i];
        for j in 0..n {
            if j != i {
                let d = u[i] - u[j];
                f += d.signum() / (d * d);
            }
        }
        f
    })
}

fn hessian(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if j != i {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, j)] = -c;
                diag += c;
            }
        }
        h[(i, i)] = diag;
    }
    h
}

/// `λ = Σ_n |g_n|² cos(k_n r) / ω_n` as the literal mode sum.
pub fn coupling_lambda(spectrum: &ModeSpectrum, r: f64) -> f64 {
    spectrum.modes.iter().map(|m| m.coupling_sq() * (m.wavenumber * r).cos() / m.omega).sum()
}

/// Coefficient of `−σ_z¹σ_z²` after the polaron transformation of the
/// `σ_z/2 (g b† + g* b)` coupling: `Σ_n |g_n|² cos(k_n r) / (2ω_n)`.
///
/// This is the coupling that sets the intermediate-state energies of the
/// effective DFS Hamiltonian and the `±2λt` phases of the exact solution.
pub fn ising_coupling(spectrum: &ModeSpectrum, r: f64) -> f64 {
    0.5 * coupling_lambda(spectrum, r)
}
