//! The untransformed two-qubit spin-boson Hamiltonian
//! `H = Σ_j (Δ/2 σ_x^j + ω₀/2 σ_z^j) + Σ_n ω_n b†_n b_n + Σ_j Σ_n σ_z^j/2 (g_n^j b†_n + h.c.)`
//! on the truncated space.

use crate::chain::ModeSpectrum;
use crate::exact::{sparse::CsrMatrix, TruncationSpec};
use crate::{Error, Result, C64};

/// `σ_z` eigenvalues `(s₁, s₂)` of the two-qubit basis index `q`.
pub(crate) fn spins(q: usize) -> (f64, f64) {
    let s1 = if q < 2 { 1.0 } else { -1.0 };
    let s2 = if q.is_multiple_of(2) { 1.0 } else { -1.0 };
    (s1, s2)
}

pub fn build_hamiltonian(
    spectrum: &ModeSpectrum,
    trunc: &TruncationSpec,
    delta: f64,
    omega_0: f64,
) -> Result<CsrMatrix> {
    let m = trunc.n_modes();
    if spectrum.len() < m {
        return Err(Error::param(
            "n_modes",
            format!("truncation uses {m} modes but the spectrum has {}", spectrum.len()),
        ));
    }
    trunc.check_ceiling()?;
    let dims = trunc.fock_dims();
    let strides = trunc.strides();
    let p = trunc.phonon_dim();
    let dim = 4 * p;

    let mut entries = Vec::with_capacity(dim * (3 + 2 * m));
    let mut occ = vec![0usize; m];
    for k in 0..p {
        trunc.occupations_into(k, &mut occ);
        let phonon_energy: f64 = occ.iter().zip(&spectrum.modes).map(|(&n, md)| n as f64 * md.omega).sum();
        for q in 0..4 {
            let (s1, s2) = spins(q);
            let i = q * p + k;
            entries.push((i, i, C64::new(0.5 * omega_0 * (s1 + s2) + phonon_energy, 0.0)));
            if delta != 0.0 {
                // σ_x on qubit 1 flips bit 1 of q, on qubit 2 bit 0
                for flipped in [q ^ 2, q ^ 1] {
                    entries.push((flipped * p + k, i, C64::new(0.5 * delta, 0.0)));
                }
            }
            for (mode, md) in spectrum.modes.iter().take(m).enumerate() {
                let n = occ[mode];
                if n + 1 >= dims[mode] {
                    continue;
                }
                let f = (md.couplings[0] * s1 + md.couplings[1] * s2) * 0.5;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                let v = f * ((n + 1) as f64).sqrt();
                let up = i + strides[mode];
                entries.push((up, i, v));
                entries.push((i, up, v.conj()));
            }
        }
    }
    let h = CsrMatrix::from_triplets(dim, entries);
    let defect = h.hermiticity_defect();
    if defect != 0.0 {
        return Err(Error::InvalidState(format!("assembled Hamiltonian not Hermitian ({defect:.3e})")));
    }
    Ok(h)
}
