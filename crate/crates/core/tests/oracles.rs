//! Cross-checks of the analytic modules against independent computations.

use std::f64::consts::FRAC_1_SQRT_2;

use ion_dfs::chain::{build_spectrum, coupling_lambda, ChainConfig};
use ion_dfs::dfs::{dfs_evolve, DfsParams};
use ion_dfs::exact::{
    build_hamiltonian, evolve_series, thermal_initial_state, EvolveOptions, ThermalOptions, TruncationSpec,
};
use ion_dfs::kernels::{gamma, mode_sum_kernels, BathParams, PhaseParams};
use ion_dfs::qinfo::concurrence;
use ion_dfs::quadrature::QuadOptions;
use ion_dfs::state::{c, ket, QubitPairState, IDX_00, IDX_01, IDX_10, IDX_11};

/// Error-free transformation sum carried as a double-double.
#[derive(Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        let lo = self.lo + err;
        self.hi = s + lo;
        self.lo = lo - (self.hi - s);
    }
}

#[test]
fn coupling_lambda_matches_double_double_sum() {
    let cfg = ChainConfig { qubit_sites: [4, 5], laser_wavenumber_ktilde: 0.37, ..Default::default() };
    let s = build_spectrum(&cfg, 9).unwrap();
    let mut acc = DoubleDouble::default();
    for n in 1..=9 {
        let omega = (n as f64 * (n as f64 + 1.0) / 2.0).sqrt();
        let k = 2.0 * std::f64::consts::PI * n as f64 / 10.0;
        // |g|² = k̃² ω / 2m
        acc.add(0.37 * 0.37 * omega / 2.0 * k.cos() / omega);
    }
    let got = coupling_lambda(&s, 1.0);
    assert!((got - acc.hi).abs() <= 4.0 * f64::EPSILON * acc.hi.abs(), "{got} vs {}", acc.hi);
}

/// Composite Simpson rule on [0, 40 ω_c] with 10⁶ panels and compensated sums.
fn gamma_simpson(t: f64, eta: f64, wc: f64, temp: f64) -> f64 {
    let f = |w: f64| {
        if w == 0.0 {
            return eta * temp * t * t;
        }
        let x = w / (2.0 * temp);
        let coth = if x > 20.0 { 1.0 } else { 1.0 / x.tanh() };
        let s = (0.5 * w * t).sin();
        eta * (-w / wc).exp() * coth * 2.0 * s * s / w
    };
    let n = 1_000_000usize;
    let b = 40.0 * wc;
    let h = b / n as f64;
    let mut acc = DoubleDouble::default();
    acc.add(f(0.0) + f(b));
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(w * f(i as f64 * h));
    }
    (acc.hi + acc.lo) * h / 3.0
}

#[test]
fn finite_temperature_gamma_matches_fixed_rule() {
    for (t, temp) in [(0.7, 0.3), (5.0, 1.0), (20.0, 2.5)] {
        let bath = BathParams::new(0.8, 1.0, temp);
        let got = gamma(t, &bath, &QuadOptions::default()).unwrap();
        let want = gamma_simpson(t, 0.8, 1.0, temp);
        assert!(((got - want) / want).abs() < 1e-8, "t={t} T={temp}: {got} vs {want}");
    }
}

#[test]
fn dfs_concurrence_is_sin_4_kappa_t() {
    let p = DfsParams::new(0.1, 3.0, 1.0).unwrap();
    for i in 0..40 {
        let t = i as f64 * 37.3;
        let rho = QubitPairState::from_pure(&dfs_evolve(t, &p)).unwrap();
        let want = (4.0 * p.kappa * t).sin().abs();
        assert!((concurrence(&rho) - want).abs() < 1e-12, "t={t}");
    }
}

fn exact_vs_mode_sum(sites: [usize; 2], n_modes: usize, temp: f64, dims: Vec<usize>) -> f64 {
    let cfg = ChainConfig { qubit_sites: sites, ..Default::default() };
    let spectrum = build_spectrum(&cfg, n_modes).unwrap();
    let trunc = TruncationSpec::new(dims).unwrap();
    let psi = (ket(1, 1) + ket(1, 0) + ket(0, 1) + ket(0, 0)) * c(0.5, 0.0);
    let h = build_hamiltonian(&spectrum, &trunc, 0.0, 0.3).unwrap();
    let s0 = thermal_initial_state(&psi, &spectrum, &trunc, temp, &ThermalOptions::default()).unwrap();
    let grid: Vec<f64> = (0..12).map(|i| 0.6 * i as f64).collect();
    let series = evolve_series(&s0, &h, &grid, 20.0, &EvolveOptions::default()).unwrap();
    let k =
        mode_sum_kernels(&spectrum, cfg.separation(), temp, &grid, PhaseParams { omega_0: 0.3, lambda: 0.0 }).unwrap();
    let mut worst: f64 = 0.0;
    for (i, rho) in series.iter().enumerate() {
        let p = k.point(i);
        worst = worst.max((rho.element(IDX_10, IDX_01).norm() - 0.25 * (-2.0 * p.gamma_minus).exp()).abs());
        worst = worst.max((rho.element(IDX_11, IDX_00).norm() - 0.25 * (-2.0 * p.gamma_plus).exp()).abs());
        for q in 0..4 {
            worst = worst.max((rho.element(q, q).re - 0.25).abs());
        }
        worst = worst.max((rho.element(IDX_11, IDX_10).norm() - 0.25 * (-p.gamma).exp()).abs());
    }
    worst
}

#[test]
fn exact_dephasing_matches_mode_sum_at_zero_temperature() {
    assert!(exact_vs_mode_sum([4, 5], 2, 0.0, vec![10, 8]) < 1e-9);
    assert!(exact_vs_mode_sum([4, 4], 2, 0.0, vec![10, 8]) < 1e-9);
}

#[test]
fn exact_dephasing_matches_mode_sum_when_warm() {
    assert!(exact_vs_mode_sum([3, 5], 1, 0.5, vec![30]) < 1e-9);
}

#[test]
fn coherence_magnitude_exact_for_dfs_pair_only_state() {
    // (|10⟩ + |01⟩)/√2 at coincident sites stays exactly pure
    let cfg = ChainConfig { qubit_sites: [2, 2], ..Default::default() };
    let spectrum = build_spectrum(&cfg, 1).unwrap();
    let trunc = TruncationSpec::uniform(1, 8).unwrap();
    let psi = (ket(1, 0) + ket(0, 1)) * c(FRAC_1_SQRT_2, 0.0);
    let h = build_hamiltonian(&spectrum, &trunc, 0.0, 0.0).unwrap();
    let s0 = thermal_initial_state(&psi, &spectrum, &trunc, 0.0, &ThermalOptions::default()).unwrap();
    let series = evolve_series(&s0, &h, &[0.0, 3.0, 9.0], 20.0, &EvolveOptions::default()).unwrap();
    for rho in series {
        assert!((rho.element(IDX_10, IDX_01).norm() - 0.5).abs() < 1e-12);
    }
}
