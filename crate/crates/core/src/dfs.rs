//! Second-order dynamics inside the decoherence-free subspace {|10⟩, |01⟩}.
//!
//! With the laser drive Δ weak compared to the bath-induced coupling λ, the
//! states |11⟩ and |00⟩ are only virtually populated and the DFS evolves
//! under `H_eff = −κ(J₊J₋ + J₋J₊)`, `κ = λΔ²/[2(ω₀² − 4λ²)]`.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::state::{ket, Ket4};
use crate::{Error, Result, C64};

/// Drive above which the perturbative treatment is flagged.
pub const MAX_DRIVE_RATIO: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfsParams {
    pub delta: f64,
    pub omega_0: f64,
    pub lambda: f64,
    pub kappa: f64,
}

impl DfsParams {
    pub fn new(delta: f64, omega_0: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("delta", delta), ("omega_0", omega_0), ("lambda", lambda)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(DfsParams { delta, omega_0, lambda, kappa: kappa(lambda, delta, omega_0)? })
    }

    /// Soft validity checks of the perturbative regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.lambda == 0.0 || (self.delta / self.lambda).abs() > MAX_DRIVE_RATIO {
            w.push(format!(
                "Delta/lambda = {:.3} exceeds {MAX_DRIVE_RATIO}; second-order theory unreliable",
                (self.delta / self.lambda).abs()
            ));
        }
        w
    }
}

/// `κ = λΔ² / [2(ω₀² − 4λ²)]`.
pub fn kappa(lambda: f64, delta: f64, omega_0: f64) -> Result<f64> {
    let den = omega_0 * omega_0 - 4.0 * lambda * lambda;
    let scale = (omega_0 * omega_0).max(4.0 * lambda * lambda);
    if den == 0.0 || den.abs() <= 1e-12 * scale {
        return Err(Error::Resonance { omega_0, lambda });
    }
    Ok(lambda * delta * delta / (2.0 * den))
}

/// `|Ψ(t)⟩ = e^{2iκt}[cos 2κt |10⟩ + i sin 2κt |01⟩]`, starting from |10⟩.
pub fn dfs_evolve(t: f64, params: &DfsParams) -> Ket4 {
    let x = 2.0 * params.kappa * t;
    let phase = C64::from_polar(1.0, x);
    ket(1, 0) * (phase * x.cos()) + ket(0, 1) * (phase * C64::new(0.0, x.sin()))
}

/// `t* = π / (8|κ|)`, where the state is `(|10⟩ + i|01⟩)/√2` up to a global phase.
pub fn entangling_time(params: &DfsParams) -> Result<f64> {
    if params.kappa == 0.0 {
        return Err(Error::param("kappa", "kappa = 0: no entangling dynamics"));
    }
    Ok(PI / (8.0 * params.kappa.abs()))
}

/// Effective Hamiltonian on (|10⟩, |01⟩), assembled from the second-order
/// formula `(H_eff)_mn = −Σ_l V_ml V_ln / (E_l − (E_m + E_n)/2)` with
/// intermediate states |11⟩, |00⟩, polaron-frame energies
/// `E = (ω₀/2)(s₁ + s₂) − λ s₁s₂` and `V = (Δ/2)(σ_x¹ + σ_x²)`.
pub fn effective_hamiltonian_matrix(params: &DfsParams) -> Matrix2<C64> {
    let energy = |s1: f64, s2: f64| 0.5 * params.omega_0 * (s1 + s2) - params.lambda * s1 * s2;
    let dfs = [(1.0, -1.0), (-1.0, 1.0)];
    let intermediate = [(1.0, 1.0), (-1.0, -1.0)];
    // every DFS state couples to both intermediate states with Δ/2
    let v = 0.5 * params.delta;
    Matrix2::from_fn(|m, n| {
        let (em, en) = (energy(dfs[m].0, dfs[m].1), energy(dfs[n].0, dfs[n].1));
        let sum: f64 = intermediate.iter().map(|&(a, b)| v * v / (energy(a, b) - 0.5 * (em + en))).sum();
        C64::new(-sum, 0.0)
    })
}
