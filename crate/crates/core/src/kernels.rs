//! Decoherence exponents Γ(t), Γ±(t) and phases φ±(t) of the two-qubit
//! independent-boson problem.
//!
//! Two routes are provided: continuum integrals over the Ohmic spectral
//! density `J(ω) = ηωe^{−ω/ω_c}` (with a linear dispersion `k = ω/v` for the
//! interference factor), and exact sums over a finite [`ModeSpectrum`].

use std::f64::consts::PI;

use crate::chain::ModeSpectrum;
use crate::quadrature::{integrate, QuadOptions};
use crate::{Error, Result};

/// Continuum bath description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub eta: f64,
    pub omega_c: f64,
    pub temperature: f64,
    /// Chain stiffness `ν`; carried for reference, `eta` already includes it.
    pub nu: f64,
}

impl BathParams {
    pub fn new(eta: f64, omega_c: f64, temperature: f64) -> Self {
        BathParams { eta, omega_c, temperature, nu: f64::NAN }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::param("eta", format!("must be > 0, got {}", self.eta)));
        }
        if !(self.omega_c.is_finite() && self.omega_c > 0.0) {
            return Err(Error::param("omega_c", format!("must be > 0, got {}", self.omega_c)));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::param("temperature", format!("must be >= 0, got {}", self.temperature)));
        }
        Ok(())
    }

    /// Soft checks: the cutoff should sit well above the drive and the
    /// thermal energy. Returns human-readable warnings, empty when fine.
    pub fn consistency_warnings(&self, delta: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.omega_c < 10.0 * delta.abs() {
            out.push(format!(
                "omega_c = {} is not >> Delta = {} (ratio {:.2})",
                self.omega_c,
                delta,
                self.omega_c / delta.abs()
            ));
        }
        if self.temperature > 0.0 && self.omega_c < 10.0 * self.temperature {
            out.push(format!(
                "omega_c = {} is not >> T = {} (ratio {:.2})",
                self.omega_c,
                self.temperature,
                self.omega_c / self.temperature
            ));
        }
        out
    }
}

/// `J(ω) = ηωe^{−ω/ω_c}`.
pub fn spectral_density(omega: f64, bath: &BathParams) -> Result<f64> {
    if omega < 0.0 || omega.is_nan() {
        return Err(Error::param("omega", format!("must be >= 0, got {omega}")));
    }
    Ok(bath.eta * omega * (-omega / bath.omega_c).exp())
}

const LAURENT_SWITCH: f64 = 1e-6;

/// `coth(ω/2T)`, with `T = 0` mapped to 1 and the Laurent series near ω = 0.
pub fn coth_half(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let x = omega / (2.0 * temperature);
    if x < LAURENT_SWITCH {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// `coth(ω/2T)/ω`, finite-precision safe for small ω when T > 0.
fn coth_over_omega(omega: f64, temperature: f64) -> f64 {
    coth_half(omega, temperature) / omega
}

/// `1 − cos x` without cancellation.
fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

fn one_plus_cos(x: f64) -> f64 {
    let c = (0.5 * x).cos();
    2.0 * c * c
}

const OMEGA_MAX_FACTOR: f64 = 40.0;

/// Initial subdivision of `[0, 40ω_c]`: a coarse geometric split of the
/// exponential envelope plus half-periods of every fast oscillation.
fn breakpoints(omega_c: f64, periods: &[f64]) -> Vec<f64> {
    let w_max = OMEGA_MAX_FACTOR * omega_c;
    let mut pts =
        vec![0.0, 0.5 * omega_c, omega_c, 2.0 * omega_c, 5.0 * omega_c, 10.0 * omega_c, 20.0 * omega_c, w_max];
    for &rate in periods {
        // rate is the angular "time" multiplying ω inside a cosine/sine
        if rate * omega_c > 10.0 {
            let step = PI / rate;
            let n = (w_max / step).floor() as usize;
            pts.extend((1..=n).map(|k| k as f64 * step));
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * w_max);
    pts
}

/// Analytic bound on the part of a Γ-type integral above `40ω_c`, with the
/// oscillatory bracket bounded by `bracket_max`.
fn tail_bound(bath: &BathParams, bracket_max: f64) -> f64 {
    let w_max = OMEGA_MAX_FACTOR * bath.omega_c;
    bath.eta * coth_half(w_max, bath.temperature) * bracket_max * bath.omega_c * (-OMEGA_MAX_FACTOR).exp() / w_max
}

fn decay_integral<B: Fn(f64) -> f64>(
    t: f64,
    extra_rate: f64,
    bracket: B,
    bracket_max: f64,
    bath: &BathParams,
    opts: &QuadOptions,
    context: &'static str,
) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::param("t", format!("must be >= 0, got {t}")));
    }
    bath.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (eta, wc, temp) = (bath.eta, bath.omega_c, bath.temperature);
    let f = |w: f64| {
        if w == 0.0 {
            // limit of coth(ω/2T)/ω · (1 − cos ωt) · bracket
            return if temp > 0.0 { eta * temp * t * t * bracket(0.0) } else { 0.0 };
        }
        eta * (-w / wc).exp() * coth_over_omega(w, temp) * one_minus_cos(w * t) * bracket(w)
    };
    let pts = breakpoints(wc, &[t, extra_rate]);
    let res = integrate(f, &pts, opts, context)?;
    let tail = tail_bound(bath, 2.0 * bracket_max);
    let tol = opts.abs_tol.max(opts.rel_tol * res.value.abs());
    if res.error + tail > tol {
        return Err(Error::QuadratureNotConverged { error: res.error + tail, tolerance: tol, context });
    }
    Ok(res.value)
}

/// `Γ(t) = ∫₀^∞ J(ω)/ω² coth(ω/2T) (1 − cos ωt) dω`.
pub fn gamma(t: f64, bath: &BathParams, opts: &QuadOptions) -> Result<f64> {
    decay_integral(t, 0.0, |_| 1.0, 1.0, bath, opts, "gamma")
}

/// `Γ±(t)`: the Γ integrand weighted by `[1 ± cos(ωr/v)]`.
pub fn gamma_pm(t: f64, r: f64, bath: &BathParams, dispersion_velocity: f64, opts: &QuadOptions) -> Result<(f64, f64)> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::param("r", format!("must be >= 0, got {r}")));
    }
    if !(dispersion_velocity > 0.0 && dispersion_velocity.is_finite()) {
        return Err(Error::param("dispersion_velocity", "must be finite and > 0"));
    }
    let q = r / dispersion_velocity;
    let plus = decay_integral(t, q, |w| one_plus_cos(w * q), 2.0, bath, opts, "gamma_plus")?;
    let minus = decay_integral(t, q, |w| one_minus_cos(w * q), 2.0, bath, opts, "gamma_minus")?;
    Ok((plus, minus))
}

/// `∫₀^∞ J(ω)/ω² sin ωt dω`, the bath part of φ±.
///
/// No thermal factor: the displacement phase of the independent-boson
/// solution is temperature independent, and with `coth` the integral would
/// diverge logarithmically at ω → 0 for any T > 0. At T = 0 both agree.
pub fn phase_integral(t: f64, bath: &BathParams, opts: &QuadOptions) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::param("t", format!("must be >= 0, got {t}")));
    }
    bath.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (eta, wc) = (bath.eta, bath.omega_c);
    let f = |w: f64| {
        if w == 0.0 {
            eta * t
        } else {
            eta * (-w / wc).exp() * (w * t).sin() / w
        }
    };
    let pts = breakpoints(wc, &[t]);
    let res = integrate(f, &pts, opts, "phase_integral")?;
    let tail = eta * (-OMEGA_MAX_FACTOR).exp() / OMEGA_MAX_FACTOR;
    let tol = opts.abs_tol.max(opts.rel_tol * res.value.abs());
    if res.error + tail > tol {
        return Err(Error::QuadratureNotConverged {
            error: res.error + tail,
            tolerance: tol,
            context: "phase_integral",
        });
    }
    Ok(res.value)
}

/// Detuning and induced coupling entering the phases `φ± = ω₀t ± 2λt ± ∫…`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseParams {
    pub omega_0: f64,
    pub lambda: f64,
}

/// `(φ₊, φ₋)` at time `t`.
pub fn phi_pm(t: f64, bath: &BathParams, phase: PhaseParams, opts: &QuadOptions) -> Result<(f64, f64)> {
    let integral = phase_integral(t, bath, opts)?;
    Ok(combine_phases(t, integral, phase))
}

fn combine_phases(t: f64, integral: f64, phase: PhaseParams) -> (f64, f64) {
    let base = phase.omega_0 * t;
    let shift = 2.0 * phase.lambda * t + integral;
    (base + shift, base - shift)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Continuum,
    ModeSum,
}

impl KernelMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelMethod::Continuum => "continuum",
            KernelMethod::ModeSum => "mode_sum",
        }
    }
}

/// Kernel values on a caller-supplied ascending time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceKernels {
    pub time_grid: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub phi_plus: Vec<f64>,
    pub phi_minus: Vec<f64>,
    pub method: KernelMethod,
}

/// All kernel values at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub t: f64,
    pub gamma: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

impl DecoherenceKernels {
    pub fn len(&self) -> usize {
        self.time_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_grid.is_empty()
    }

    pub fn point(&self, i: usize) -> KernelPoint {
        KernelPoint {
            t: self.time_grid[i],
            gamma: self.gamma[i],
            gamma_plus: self.gamma_plus[i],
            gamma_minus: self.gamma_minus[i],
            phi_plus: self.phi_plus[i],
            phi_minus: self.phi_minus[i],
        }
    }

    /// Exact grid lookup; `t` must coincide with a grid point up to rounding.
    pub fn at(&self, t: f64) -> Result<KernelPoint> {
        let tol = 1e-12 * t.abs().max(1.0);
        let i = self.time_grid.partition_point(|&x| x < t - tol);
        match self.time_grid.get(i) {
            Some(&x) if (x - t).abs() <= tol => Ok(self.point(i)),
            _ => Err(Error::OffGrid { t }),
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("time_grid", "empty"));
    }
    if grid[0] < 0.0 || !grid.iter().all(|t| t.is_finite()) {
        return Err(Error::param("time_grid", "times must be finite and >= 0"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::param("time_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Continuum kernels on `grid`.
pub fn continuum_kernels(
    grid: &[f64],
    r: f64,
    bath: &BathParams,
    dispersion_velocity: f64,
    phase: PhaseParams,
    opts: &QuadOptions,
) -> Result<DecoherenceKernels> {
    check_grid(grid)?;
    let n = grid.len();
    let mut k = DecoherenceKernels {
        time_grid: grid.to_vec(),
        gamma: Vec::with_capacity(n),
        gamma_plus: Vec::with_capacity(n),
        gamma_minus: Vec::with_capacity(n),
        phi_plus: Vec::with_capacity(n),
        phi_minus: Vec::with_capacity(n),
        method: KernelMethod::Continuum,
    };
    for &t in grid {
        let g = gamma(t, bath, opts)?;
        let (gp, gm) = gamma_pm(t, r, bath, dispersion_velocity, opts)?;
        let (pp, pm) = phi_pm(t, bath, phase, opts)?;
        k.gamma.push(g);
        k.gamma_plus.push(gp);
        k.gamma_minus.push(gm);
        k.phi_plus.push(pp);
        k.phi_minus.push(pm);
    }
    Ok(k)
}

/// Exact finite-chain kernels: every integral replaced by the sum over modes
/// `Σ_n |g_n|²/ω_n² coth(ω_n/2T) (1 − cos ω_n t) [1 ± cos(k_n r)]`.
pub fn mode_sum_kernels(
    spectrum: &ModeSpectrum,
    r: f64,
    temperature: f64,
    grid: &[f64],
    phase: PhaseParams,
) -> Result<DecoherenceKernels> {
    if spectrum.is_empty() {
        return Err(Error::param("spectrum", "no modes"));
    }
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::param("temperature", format!("must be >= 0, got {temperature}")));
    }
    check_grid(grid)?;
    let n = grid.len();
    let mut k = DecoherenceKernels {
        time_grid: grid.to_vec(),
        gamma: Vec::with_capacity(n),
        gamma_plus: Vec::with_capacity(n),
        gamma_minus: Vec::with_capacity(n),
        phi_plus: Vec::with_capacity(n),
        phi_minus: Vec::with_capacity(n),
        method: KernelMethod::ModeSum,
    };
    for &t in grid {
        let (mut g, mut gp, mut gm, mut s) = (0.0, 0.0, 0.0, 0.0);
        for m in &spectrum.modes {
            let w = m.coupling_sq() / (m.omega * m.omega);
            let decay = w * coth_half(m.omega, temperature) * one_minus_cos(m.omega * t);
            g += decay;
            gp += decay * one_plus_cos(m.wavenumber * r);
            gm += decay * one_minus_cos(m.wavenumber * r);
            s += w * (m.omega * t).sin();
        }
        let (pp, pm) = combine_phases(t, s, phase);
        k.gamma.push(g);
        k.gamma_plus.push(gp);
        k.gamma_minus.push(gm);
        k.phi_plus.push(pp);
        k.phi_minus.push(pm);
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LifetimeOutcome {
    /// First time at which `Γ₋(τ) = 1`.
    Root(f64),
    /// `Γ₋ ≡ 0` (r = 0): the subspace does not decay.
    NoDecay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfsLifetime {
    pub outcome: LifetimeOutcome,
    /// Closed-form scale `(ηT)^{-1/2} (ω_c r / ω_z L)^{-1}`.
    pub estimate: f64,
}

impl DfsLifetime {
    pub fn tau(&self) -> Option<f64> {
        match self.outcome {
            LifetimeOutcome::Root(t) => Some(t),
            LifetimeOutcome::NoDecay => None,
        }
    }
}

/// DFS coherence lifetime defined by `Γ₋(τ) = 1` on the continuum kernel.
pub fn dfs_lifetime(
    bath: &BathParams,
    r: f64,
    chain_length: f64,
    omega_z: f64,
    dispersion_velocity: f64,
    opts: &QuadOptions,
) -> Result<DfsLifetime> {
    bath.validate()?;
    if bath.temperature <= 0.0 {
        return Err(Error::param("temperature", "lifetime estimate needs T > 0"));
    }
    if r < 0.0 || r.is_nan() {
        return Err(Error::param("r", format!("must be >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok(DfsLifetime { outcome: LifetimeOutcome::NoDecay, estimate: f64::INFINITY });
    }
    let estimate = 1.0 / ((bath.eta * bath.temperature).sqrt() * (bath.omega_c * r / (omega_z * chain_length)));

    // Γ₋(t) → ∫ J/ω² coth (1 − cos kr) dω as t → ∞ and never exceeds twice that.
    let q = r / dispersion_velocity;
    let (eta, wc, temp) = (bath.eta, bath.omega_c, bath.temperature);
    let plateau = integrate(
        |w: f64| {
            if w == 0.0 {
                eta * temp * q * q
            } else {
                eta * (-w / wc).exp() * coth_over_omega(w, temp) * one_minus_cos(w * q)
            }
        },
        &breakpoints(wc, &[q]),
        opts,
        "gamma_minus_plateau",
    )?
    .value;
    let window = 1e6 / wc;
    if 2.0 * plateau < 1.0 {
        return Err(Error::NoLifetimeRoot {
            window,
            reason: format!("Gamma_- saturates at {plateau:.4e}, never reaching 1"),
        });
    }

    let gm = |t: f64| gamma_pm(t, r, bath, dispersion_velocity, opts).map(|(_, m)| m);
    let mut lo = 0.0;
    let mut hi = (0.01 / wc).min(estimate);
    let step = 2f64.powf(0.25);
    while gm(hi)? < 1.0 {
        lo = hi;
        hi *= step;
        if hi > window {
            return Err(Error::NoLifetimeRoot {
                window,
                reason: format!("Gamma_- stays below 1 (plateau {plateau:.4e})"),
            });
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if gm(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DfsLifetime { outcome: LifetimeOutcome::Root(0.5 * (lo + hi)), estimate })
}
