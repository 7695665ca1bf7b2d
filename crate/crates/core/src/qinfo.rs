//! Entanglement and teleportation metrics for the DFS resource state
//! `(|10⟩ + i|01⟩)/√2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix4, SMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::quadrature::NeumaierSum;
use crate::state::{c, ket, kron2, qubit, sigma_y, Ket2, Ket4, Op2, Op4, QubitPairState, IDX_01, IDX_10};
use crate::{Error, Result, C64};

/// Wootters concurrence `max(0, μ₁ − μ₂ − μ₃ − μ₄)`, with `μ` the square
/// roots of the eigenvalues of `√ρ ρ̃ √ρ` in decreasing order.
///
/// The `μ` are taken as the singular values of `√ρ (σ_y⊗σ_y) √ρ*`, whose
/// Gram matrix is `√ρ ρ̃ √ρ`; this avoids square roots of rounding-level
/// eigenvalues. Eigenvalues of ρ below `64 ε λ_max` are treated as zero.
pub fn concurrence(rho: &QubitPairState) -> f64 {
    let yy = kron2(&sigma_y(), &sigma_y());
    let eig = rho.rho().symmetric_eigen();
    let cutoff = 64.0 * f64::EPSILON * eig.eigenvalues.max();
    let sqrt_vals = eig.eigenvalues.map(|v| C64::new(if v > cutoff { v.sqrt() } else { 0.0 }, 0.0));
    let sqrt_rho = eig.eigenvectors * Op4::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    let a = sqrt_rho * yy * sqrt_rho.conjugate();
    let mut mu: Vec<f64> = a.singular_values().iter().copied().collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    (mu[0] - mu[1] - mu[2] - mu[3]).max(0.0)
}

/// `⟨ψ|ρ|ψ⟩` for a normalised target.
pub fn state_fidelity(rho: &QubitPairState, target: &Ket4) -> Result<f64> {
    let n = target.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("target norm {n} != 1")));
    }
    Ok((target.adjoint() * rho.rho() * target)[(0, 0)].re)
}

/// `(|10⟩ + i|01⟩)/√2`.
pub fn dfs_target() -> Ket4 {
    (ket(1, 0) + ket(0, 1) * c(0.0, 1.0)) * c(FRAC_1_SQRT_2, 0.0)
}

/// State reached from |10⟩ at t* = π/8|κ|: `dfs_target()` for κ > 0 and its
/// mirror `(|10⟩ − i|01⟩)/√2` for κ < 0, where the exchange runs backwards.
pub fn dfs_target_for(kappa: f64) -> Ket4 {
    (ket(1, 0) + ket(0, 1) * c(0.0, kappa.signum())) * c(FRAC_1_SQRT_2, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportResource {
    pub rho: QubitPairState,
}

impl TeleportResource {
    pub fn new(rho: QubitPairState) -> Self {
        TeleportResource { rho }
    }

    pub fn ideal() -> Self {
        Self::new(QubitPairState::from_pure(&dfs_target()).expect("normalised"))
    }

    /// `p |R⟩⟨R| + (1 − p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("must lie in [0, 1], got {p}")));
        }
        let t = dfs_target();
        let rho = t * t.adjoint() * c(p, 0.0) + Op4::identity() * c(0.25 * (1.0 - p), 0.0);
        Ok(Self::new(QubitPairState::new(rho)?))
    }

    /// Ideal resource whose DFS coherence `ρ₂₃` is multiplied by `decay`,
    /// as produced by collective dephasing with `decay = e^{−2Γ₋}`.
    pub fn dephased(decay: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&decay) {
            return Err(Error::param("decay", format!("must lie in [0, 1], got {decay}")));
        }
        let mut rho = *Self::ideal().rho.rho();
        rho[(IDX_10, IDX_01)] *= decay;
        rho[(IDX_01, IDX_10)] *= decay;
        Ok(Self::new(QubitPairState::new(rho)?))
    }

    pub fn target(&self) -> Ket4 {
        dfs_target()
    }

    /// `F = ⟨R|ρ|R⟩`.
    pub fn singlet_fraction(&self) -> f64 {
        state_fidelity(&self.rho, &dfs_target()).expect("normalised target")
    }
}

/// Bell basis of (input, resource half 1): Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
pub fn bell_basis() -> [Ket4; 4] {
    let s = c(FRAC_1_SQRT_2, 0.0);
    [(ket(0, 0) + ket(1, 1)) * s, (ket(0, 0) - ket(1, 1)) * s, (ket(0, 1) + ket(1, 0)) * s, (ket(0, 1) - ket(1, 0)) * s]
}

/// `M_k`: the map from the input qubit to resource half 2 for Bell outcome
/// `k` with the pure resource `r`; `M_k[b, i] = Σ_a conj(β_k[i, a]) r[a, b]`.
fn conditional_map(beta: &Ket4, r: &Ket4) -> Op2 {
    Op2::from_fn(|b, i| (0..2).map(|a| beta[2 * i + a].conj() * r[2 * a + b]).sum())
}

/// Corrections `C_k = 2 M_k†` derived for the ideal resource, so that
/// `C_k M_k = I/2` for every outcome.
pub fn correction_table() -> [Op2; 4] {
    let r = dfs_target();
    bell_basis().map(|b| conditional_map(&b, &r).adjoint() * c(2.0, 0.0))
}

type Op8 = SMatrix<C64, 8, 8>;

/// Unnormalised, corrected output of resource half 2 for each outcome.
fn branch_outputs(input: &Op2, resource: &TeleportResource) -> [Op2; 4] {
    // ordering (input, half 1, half 2), input slowest
    let rho = resource.rho.rho();
    let full = Op8::from_fn(|x, y| input[(x / 4, y / 4)] * rho[(x % 4, y % 4)]);
    let corrections = correction_table();
    let basis = bell_basis();
    let mut out = [Op2::zeros(); 4];
    for k in 0..4 {
        let beta = &basis[k];
        let reduced = Op2::from_fn(|b, bp| {
            let mut acc = C64::new(0.0, 0.0);
            for ia in 0..4 {
                for ia2 in 0..4 {
                    acc += beta[ia].conj() * full[(2 * ia + b, 2 * ia2 + bp)] * beta[ia2];
                }
            }
            acc
        });
        out[k] = corrections[k] * reduced * corrections[k].adjoint();
    }
    out
}

/// Channel applied by one teleportation hop, averaged over outcomes.
pub fn teleport_channel(input: &Op2, resource: &TeleportResource) -> Op2 {
    branch_outputs(input, resource).iter().fold(Op2::zeros(), |acc, m| acc + m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportOutcome {
    pub outcome: usize,
    pub probabilities: [f64; 4],
    pub output: Op2,
}

/// One run of the protocol: sample the Bell outcome and return the corrected
/// output of resource half 2.
pub fn teleport(input: &Ket2, resource: &TeleportResource, seed: u64) -> Result<TeleportOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    teleport_with(input, resource, &mut rng)
}

fn teleport_with(input: &Ket2, resource: &TeleportResource, rng: &mut ChaCha8Rng) -> Result<TeleportOutcome> {
    let n = input.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("input norm {n} != 1")));
    }
    let branches = branch_outputs(&(input * input.adjoint()), resource);
    let probabilities = branches.map(|m| m.trace().re);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut outcome = 3;
    for (k, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            outcome = k;
            break;
        }
    }
    let output = branches[outcome] / c(probabilities[outcome], 0.0);
    Ok(TeleportOutcome { outcome, probabilities, output })
}

/// Uniformly random pure qubit state (Haar measure).
pub fn haar_qubit<R: Rng>(rng: &mut R) -> Ket2 {
    let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
    let phi: f64 = 2.0 * PI * rng.gen::<f64>();
    let theta = z.acos();
    qubit(c((0.5 * theta).cos(), 0.0), C64::from_polar((0.5 * theta).sin(), phi))
}

/// `(2F + 1)/3`.
pub fn average_teleport_fidelity(resource: &TeleportResource) -> f64 {
    (2.0 * resource.singlet_fraction() + 1.0) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample mean of `⟨ψ|ρ_out|ψ⟩` over Haar inputs and sampled outcomes.
/// Sample `i` draws from ChaCha stream `i` of `seed`, so the result does not
/// depend on how samples are scheduled.
pub fn monte_carlo_fidelity(resource: &TeleportResource, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::param("samples", "need at least 2"));
    }
    let vals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let psi = haar_qubit(&mut rng);
            let out = teleport_with(&psi, resource, &mut rng)?;
            Ok((psi.adjoint() * out.output * psi)[(0, 0)].re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut s = NeumaierSum::default();
    vals.iter().for_each(|&v| s.add(v));
    let mean = s.value() / samples as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(MonteCarloEstimate { mean, std_error: (var / samples as f64).sqrt(), samples })
}

/// Qubit channel as a 4×4 superoperator acting on `vec(ρ)` (row-major).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitChannel {
    pub matrix: Matrix4<C64>,
}

impl QubitChannel {
    pub fn identity() -> Self {
        QubitChannel { matrix: Matrix4::identity() }
    }

    pub fn from_map<F: Fn(&Op2) -> Op2>(f: F) -> Self {
        let mut m = Matrix4::zeros();
        for col in 0..4 {
            let mut e = Op2::zeros();
            e[(col / 2, col % 2)] = c(1.0, 0.0);
            let out = f(&e);
            for row in 0..4 {
                m[(row, col)] = out[(row / 2, row % 2)];
            }
        }
        QubitChannel { matrix: m }
    }

    pub fn teleportation(resource: &TeleportResource) -> Self {
        Self::from_map(|e| teleport_channel(e, resource))
    }

    pub fn apply(&self, rho: &Op2) -> Op2 {
        let v = nalgebra::Vector4::new(rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)]);
        let w = self.matrix * v;
        Op2::new(w[0], w[1], w[2], w[3])
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &QubitChannel) -> Self {
        QubitChannel { matrix: other.matrix * self.matrix }
    }

    /// Average fidelity over the six eigenstates of σ_x, σ_y, σ_z, which
    /// equals the Haar average for any qubit channel.
    pub fn average_fidelity(&self) -> f64 {
        let s = FRAC_1_SQRT_2;
        let states = [
            qubit(c(1.0, 0.0), c(0.0, 0.0)),
            qubit(c(0.0, 0.0), c(1.0, 0.0)),
            qubit(c(s, 0.0), c(s, 0.0)),
            qubit(c(s, 0.0), c(-s, 0.0)),
            qubit(c(s, 0.0), c(0.0, s)),
            qubit(c(s, 0.0), c(0.0, -s)),
        ];
        states.iter().map(|p| (p.adjoint() * self.apply(&(p * p.adjoint())) * p)[(0, 0)].re).sum::<f64>() / 6.0
    }

    /// Haar Monte-Carlo estimate of the average fidelity.
    pub fn haar_fidelity(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = NeumaierSum::default();
        for _ in 0..samples {
            let p = haar_qubit(&mut rng);
            s.add((p.adjoint() * self.apply(&(p * p.adjoint())) * p)[(0, 0)].re);
        }
        s.value() / samples as f64
    }
}

/// Average fidelity after `n_hops` identical teleportation hops.
pub fn relay_fidelity(n_hops: usize, per_hop_resource: &TeleportResource) -> Result<f64> {
    if n_hops == 0 {
        return Err(Error::param("n_hops", "must be >= 1"));
    }
    relay_fidelity_chain(&vec![*per_hop_resource; n_hops])
}

/// Average fidelity through hops with individual resources, in order.
pub fn relay_fidelity_chain(resources: &[TeleportResource]) -> Result<f64> {
    if resources.is_empty() {
        return Err(Error::param("n_hops", "must be >= 1"));
    }
    let total = resources.iter().fold(QubitChannel::identity(), |acc, r| acc.then(&QubitChannel::teleportation(r)));
    Ok(total.average_fidelity())
}
