//! Extraction of the DFS exchange rate κ from exact dynamics.

use crate::chain::ModeSpectrum;
use crate::dfs::MAX_DRIVE_RATIO;
use crate::exact::{build_hamiltonian, reduced_qubit_state, Chebyshev, FullState, SpectralPropagator, TruncationSpec};
use crate::state::{ket, IDX_01, IDX_10};
use crate::{Error, Result, C64};

/// Largest dimension propagated through a dense eigendecomposition.
const DENSE_LIMIT: usize = 1024;
const MAX_RESIDUAL: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct KappaFit {
    /// Signed rate; the sign comes from the DFS coherence `Im ρ(10,01)`.
    pub kappa: f64,
    /// RMS deviation of `P₀₁(t)` from `sin²(2κt)`.
    pub residual: f64,
    /// Ising coupling implied by the spectrum.
    pub lambda: f64,
    pub times: Vec<f64>,
    pub p01: Vec<f64>,
}

fn ising_from_couplings(spectrum: &ModeSpectrum, n_modes: usize) -> f64 {
    spectrum.modes[..n_modes].iter().map(|m| 0.5 * (m.couplings[0] * m.couplings[1].conj()).re / m.omega).sum()
}

fn loss(kappa: f64, times: &[f64], p: &[f64]) -> f64 {
    times.iter().zip(p).map(|(t, y)| (y - (2.0 * kappa * t).sin().powi(2)).powi(2)).sum()
}

/// Evolve `|10⟩ ⊗ |vac⟩` under the full Hamiltonian at `n_samples` equally
/// spaced times in `[0, t_max]` and fit `P₀₁(t) = sin²(2κt)`.
pub fn measure_kappa(
    spectrum: &ModeSpectrum,
    trunc: &TruncationSpec,
    delta: f64,
    omega_0: f64,
    t_max: f64,
    n_samples: usize,
) -> Result<KappaFit> {
    if spectrum.len() < trunc.n_modes() {
        return Err(Error::param("n_modes", "spectrum has fewer modes than the truncation"));
    }
    let lambda = ising_from_couplings(spectrum, trunc.n_modes());
    if lambda == 0.0 || (delta / lambda).abs() > MAX_DRIVE_RATIO {
        return Err(Error::param(
            "delta",
            format!("|Delta/lambda| must be <= {MAX_DRIVE_RATIO} (Delta = {delta}, lambda = {lambda})"),
        ));
    }
    if !(t_max > 0.0) || n_samples < 8 {
        return Err(Error::param("t_max", "need t_max > 0 and at least 8 samples"));
    }
    let h = build_hamiltonian(spectrum, trunc, delta, omega_0)?;
    let st = FullState::product(&ket(1, 0), &vec![0; trunc.n_modes()], trunc)?;
    let psi0 = st.members()[0].amplitudes.clone();
    let times: Vec<f64> = (0..n_samples).map(|k| t_max * k as f64 / (n_samples - 1) as f64).collect();

    let amps: Vec<Vec<C64>> = if h.dim() <= DENSE_LIMIT {
        let prop = SpectralPropagator::new(&h);
        times.iter().map(|&t| prop.apply(&psi0, t)).collect()
    } else {
        let step = Chebyshev::new(&h, times[1], 1e-10)?;
        let mut out = vec![psi0.clone()];
        for _ in 1..n_samples {
            let next = step.apply(&h, out.last().unwrap());
            out.push(next);
        }
        out
    };
    let mut p01 = Vec::with_capacity(n_samples);
    let mut coherence = Vec::with_capacity(n_samples);
    for a in amps {
        let r = reduced_qubit_state(&FullState::pure(trunc, a)?)?;
        p01.push(r.element(IDX_01, IDX_01).re);
        coherence.push(-r.element(IDX_10, IDX_01).im);
    }

    let peak = p01.iter().copied().fold(0.0, f64::max);
    if peak < 1e-10 {
        let residual = (p01.iter().map(|p| p * p).sum::<f64>() / n_samples as f64).sqrt();
        return Ok(KappaFit { kappa: 0.0, residual, lambda, times, p01 });
    }

    // coarse scan up to the sampling Nyquist rate, then golden-section refinement
    let dt = times[1];
    let k_hi = std::f64::consts::PI / (4.0 * dt);
    let dk = std::f64::consts::PI / (80.0 * t_max);
    let n_scan = (k_hi / dk).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..=n_scan {
        let k = i as f64 * dk;
        let l = loss(k, &times, &p01);
        if l < best.0 {
            best = (l, k);
        }
    }
    let (mut a, mut b) = ((best.1 - dk).max(0.0), best.1 + dk);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (loss(c, &times, &p01), loss(d, &times, &p01));
    while (b - a) > 1e-13 * best.1.max(f64::MIN_POSITIVE) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = loss(c, &times, &p01);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = loss(d, &times, &p01);
        }
    }
    let k_abs = 0.5 * (a + b);
    let residual = (loss(k_abs, &times, &p01) / n_samples as f64).sqrt();
    if residual > MAX_RESIDUAL {
        return Err(Error::FitFailed {
            reason: format!(
                "rms residual {residual:.3e} above {MAX_RESIDUAL} (best |kappa| {k_abs:.6e}, peak P01 {peak:.4}, {n_samples} samples to t = {t_max})"
            ),
        });
    }
    let orientation: f64 = times.iter().zip(&coherence).map(|(t, y)| y * (4.0 * k_abs * t).sin()).sum();
    let kappa = if orientation < 0.0 { -k_abs } else { k_abs };
    Ok(KappaFit { kappa, residual, lambda, times, p01 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_spectrum, ChainConfig};
    use crate::dfs::kappa;

    fn single_mode() -> ModeSpectrum {
        // |g|² = 0.02 on the ω = 1 mode, qubits one spacing apart
        build_spectrum(&ChainConfig { qubit_sites: [4, 5], ..Default::default() }, 1).unwrap()
    }

    #[test]
    fn no_drive_no_transfer() {
        let s = single_mode();
        let t = TruncationSpec::uniform(1, 6).unwrap();
        let fit = measure_kappa(&s, &t, 0.0, 0.0, 100.0, 50).unwrap();
        assert_eq!(fit.kappa, 0.0);
    }

    #[test]
    fn rejects_strong_drive() {
        let s = single_mode();
        let t = TruncationSpec::uniform(1, 6).unwrap();
        let lambda = ising_from_couplings(&s, 1);
        assert!(measure_kappa(&s, &t, 0.5 * lambda, 0.0, 100.0, 50).is_err());
    }

    #[test]
    fn rate_close_to_effective_theory() {
        let s = single_mode();
        let t = TruncationSpec::uniform(1, 8).unwrap();
        let lambda = ising_from_couplings(&s, 1);
        let delta = 0.05 * lambda;
        let want = kappa(lambda, delta, 0.0).unwrap();
        let t_max = 1.2 * std::f64::consts::PI / (2.0 * want.abs());
        let fit = measure_kappa(&s, &t, delta, 0.0, t_max, 600).unwrap();
        assert!(((fit.kappa - want) / want).abs() < 0.1, "fit {} vs {want}", fit.kappa);
    }
}
