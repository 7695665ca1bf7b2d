//! Exact Δ = 0 reduced dynamics: populations are frozen and every coherence
//! is multiplied by a factor built from the decoherence kernels.

use crate::kernels::{DecoherenceKernels, KernelPoint};
use crate::state::{Op4, QubitPairState, IDX_00, IDX_01, IDX_10, IDX_11};
use crate::{Error, Result, C64};

/// Multiplicative factors `f_ij` (i < j) applied to the upper triangle.
fn factors(p: &KernelPoint, omega_0: f64) -> [(usize, usize, C64); 6] {
    let minus = C64::new(-p.gamma, -p.phi_minus).exp();
    let plus = C64::new(-p.gamma, -p.phi_plus).exp();
    [
        (IDX_11, IDX_10, minus),
        (IDX_11, IDX_01, minus),
        (IDX_10, IDX_00, plus),
        (IDX_01, IDX_00, plus),
        (IDX_10, IDX_01, C64::new((-2.0 * p.gamma_minus).exp(), 0.0)),
        (IDX_11, IDX_00, C64::new(-2.0 * p.gamma_plus, -2.0 * omega_0 * p.t).exp()),
    ]
}

/// State at time `t` (a point of the kernel grid) evolved from `rho0`.
pub fn dephase_map(
    rho0: &QubitPairState,
    t: f64,
    kernels: &DecoherenceKernels,
    omega_0: f64,
) -> Result<QubitPairState> {
    let p = kernels.at(t)?;
    let r0 = rho0.rho();
    let mut rho = Op4::zeros();
    for i in 0..4 {
        rho[(i, i)] = r0[(i, i)];
    }
    for (i, j, f) in factors(&p, omega_0) {
        let v = r0[(i, j)] * f;
        rho[(i, j)] = v;
        rho[(j, i)] = v.conj();
    }
    Ok(QubitPairState::from_raw(rho))
}

/// `(|ρ₂₃(t)|/|ρ₂₃(0)|, |ρ₁₄(t)|/|ρ₁₄(0)|)`, i.e. `(e^{−2Γ₋}, e^{−2Γ₊})`.
pub fn coherence_ratio(rho0: &QubitPairState, t: f64, kernels: &DecoherenceKernels) -> Result<(f64, f64)> {
    let dfs0 = rho0.element(IDX_10, IDX_01).norm();
    let ghz0 = rho0.element(IDX_11, IDX_00).norm();
    if dfs0 == 0.0 {
        return Err(Error::UndefinedRatio { element: "rho_23" });
    }
    if ghz0 == 0.0 {
        return Err(Error::UndefinedRatio { element: "rho_14" });
    }
    let rho = dephase_map(rho0, t, kernels, 0.0)?;
    Ok((rho.element(IDX_10, IDX_01).norm() / dfs0, rho.element(IDX_11, IDX_00).norm() / ghz0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_spectrum, ChainConfig};
    use crate::kernels::{continuum_kernels, mode_sum_kernels, BathParams, PhaseParams};
    use crate::quadrature::QuadOptions;
    use crate::state::{c, ket, Ket4};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn kernels(r_sites: [usize; 2], temp: f64) -> (DecoherenceKernels, f64) {
        let cfg = ChainConfig { qubit_sites: r_sites, laser_wavenumber_ktilde: 0.6, ..Default::default() };
        let s = build_spectrum(&cfg, 4).unwrap();
        let grid: Vec<f64> = (0..30).map(|i| 0.25 * i as f64).collect();
        let phase = PhaseParams { omega_0: 0.4, lambda: 0.05 };
        (mode_sum_kernels(&s, cfg.separation(), temp, &grid, phase).unwrap(), cfg.separation())
    }

    fn bell(a: Ket4, b: Ket4) -> QubitPairState {
        QubitPairState::from_pure(&((a + b) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0))).unwrap()
    }

    #[test]
    fn diagonal_states_are_stationary() {
        let (k, _) = kernels([2, 5], 0.3);
        let rho0 = QubitPairState::from_pure(&ket(1, 0)).unwrap();
        for &t in &k.time_grid {
            assert_eq!(dephase_map(&rho0, t, &k, 0.4).unwrap(), rho0);
        }
    }

    #[test]
    fn dfs_pair_decays_with_gamma_minus_only() {
        let (k, _) = kernels([2, 5], 0.3);
        let rho0 = bell(ket(1, 0), ket(0, 1));
        for i in 0..k.len() {
            let p = k.point(i);
            let rho = dephase_map(&rho0, p.t, &k, 0.4).unwrap();
            let v = rho.element(IDX_10, IDX_01);
            assert_relative_eq!(v.re, 0.5 * (-2.0 * p.gamma_minus).exp(), max_relative = 1e-14);
            assert_eq!(v.im, 0.0);
        }
        // coincident qubits: the DFS pair is frozen
        let (k0, r) = kernels([3, 3], 0.3);
        assert_eq!(r, 0.0);
        for &t in &k0.time_grid {
            assert_eq!(dephase_map(&rho0, t, &k0, 0.4).unwrap(), rho0);
        }
    }

    #[test]
    fn ghz_pair_decays_faster() {
        let (k, _) = kernels([2, 5], 0.0);
        let rho0 = bell(ket(1, 1), ket(0, 0));
        for i in 1..k.len() {
            let p = k.point(i);
            let rho = dephase_map(&rho0, p.t, &k, 0.4).unwrap();
            assert_relative_eq!(
                rho.element(IDX_11, IDX_00).norm(),
                0.5 * (-2.0 * p.gamma_plus).exp(),
                max_relative = 1e-14
            );
        }
        // nearby qubits in the continuum bath: Γ₊ > Γ₋ at every t > 0
        let bath = BathParams::new(0.5, 1.0, 0.2);
        let v = ChainConfig::default().dispersion_velocity();
        let grid: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let kc =
            continuum_kernels(&grid, 0.5, &bath, v, PhaseParams { omega_0: 0.0, lambda: 0.0 }, &QuadOptions::default())
                .unwrap();
        let dfs0 = bell(ket(1, 0), ket(0, 1));
        for &t in &grid[1..] {
            let ghz = dephase_map(&rho0, t, &kc, 0.0).unwrap().element(IDX_11, IDX_00).norm();
            let dfs = dephase_map(&dfs0, t, &kc, 0.0).unwrap().element(IDX_10, IDX_01).norm();
            assert!(ghz < dfs, "t = {t}");
        }
    }

    #[test]
    fn ratios() {
        let (k, _) = kernels([2, 5], 0.2);
        let rho0 = QubitPairState::from_pure(&((ket(1, 1) + ket(1, 0) + ket(0, 1) + ket(0, 0)) * c(0.5, 0.0))).unwrap();
        assert_eq!(coherence_ratio(&rho0, 0.0, &k).unwrap(), (1.0, 1.0));
        for i in 0..k.len() {
            let p = k.point(i);
            let (a, b) = coherence_ratio(&rho0, p.t, &k).unwrap();
            assert_relative_eq!(a * b, (-4.0 * p.gamma).exp(), max_relative = 1e-9);
        }
        let (k0, _) = kernels([3, 3], 0.2);
        for i in 0..k0.len() {
            let p = k0.point(i);
            let (a, b) = coherence_ratio(&rho0, p.t, &k0).unwrap();
            assert_eq!(a, 1.0);
            assert_relative_eq!(b, (-4.0 * p.gamma).exp(), max_relative = 1e-12);
        }
        let diag = QubitPairState::from_pure(&ket(1, 0)).unwrap();
        assert!(matches!(coherence_ratio(&diag, 0.0, &k), Err(Error::UndefinedRatio { .. })));
        assert!(dephase_map(&rho0, 0.1234, &k, 0.0).is_err());
    }

    #[test]
    fn one_step_differs_from_naive_two_step() {
        // non-Markovian: applying the map for t/2 twice is not the map for t
        let (k, _) = kernels([2, 5], 0.0);
        let rho0 = bell(ket(1, 1), ket(0, 0));
        let (t_half, t) = (k.time_grid[4], k.time_grid[8]);
        let once = dephase_map(&rho0, t, &k, 0.0).unwrap();
        let twice = dephase_map(&dephase_map(&rho0, t_half, &k, 0.0).unwrap(), t_half, &k, 0.0).unwrap();
        let d = (once.element(IDX_11, IDX_00) - twice.element(IDX_11, IDX_00)).norm();
        assert!(d > 1e-6, "difference {d}");
    }

    fn random_state(vals: &[f64]) -> QubitPairState {
        // ρ = A A† / tr
        let a = Op4::from_fn(|i, j| c(vals[4 * i + j], vals[16 + 4 * i + j]));
        let m = a * a.adjoint();
        let tr = m.trace();
        QubitPairState::new(m / tr).unwrap()
    }

    proptest! {
        #[test]
        fn map_preserves_state_validity(vals in proptest::collection::vec(-1.0f64..1.0, 32), idx in 0usize..30) {
            prop_assume!(vals.iter().map(|v| v * v).sum::<f64>() > 0.1);
            let (k, _) = kernels([1, 6], 0.5);
            let rho0 = random_state(&vals);
            let t = k.time_grid[idx];
            let rho = dephase_map(&rho0, t, &k, 0.4).unwrap();
            prop_assert!(rho.check().is_ok());
            for i in 0..4 {
                prop_assert_eq!(rho.element(i, i), rho0.element(i, i));
            }
        }
    }
}
