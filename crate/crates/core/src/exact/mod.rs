//! Brute-force evolution of the full two-qubit spin-boson Hamiltonian with a
//! few truncated phonon modes.
//!
//! Basis index = `q · P + phonon index`, where `q` runs over
//! {|11⟩, |10⟩, |01⟩, |00⟩}, `P = Π d_n` and the phonon index has mode 1 as
//! its slowest digit. Mixed states are carried as weighted ensembles of pure
//! trajectories; the truncated Gibbs state is diagonal in the Fock basis, so
//! its spectral decomposition is a set of product Fock states.

mod fit;
mod hamiltonian;
mod propagate;
mod sparse;

use rayon::prelude::*;

use crate::chain::ModeSpectrum;
use crate::quadrature::NeumaierSum;
use crate::state::{Ket4, Op4, QubitPairState};
use crate::{Error, Result, C64};

pub use fit::{measure_kappa, KappaFit};
pub use hamiltonian::build_hamiltonian;
pub use propagate::{lanczos_step, Chebyshev, SpectralPropagator};
pub use sparse::CsrMatrix;

pub const DEFAULT_CEILING: usize = 1 << 18;

/// Thermal occupancy `n̄ = 1/(e^{ω/T} − 1)`, zero at `T = 0`.
pub fn mean_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSpec {
    fock_dims: Vec<usize>,
    ceiling: usize,
}

impl TruncationSpec {
    pub fn new(fock_dims: Vec<usize>) -> Result<Self> {
        Self::with_ceiling(fock_dims, DEFAULT_CEILING)
    }

    pub fn uniform(n_modes: usize, fock_dim: usize) -> Result<Self> {
        Self::new(vec![fock_dim; n_modes])
    }

    pub fn with_ceiling(fock_dims: Vec<usize>, ceiling: usize) -> Result<Self> {
        if fock_dims.is_empty() {
            return Err(Error::param("n_modes", "need at least one mode"));
        }
        if let Some(d) = fock_dims.iter().find(|&&d| d < 2) {
            return Err(Error::param("fock_dim", format!("must be >= 2, got {d}")));
        }
        let t = TruncationSpec { fock_dims, ceiling };
        t.check_ceiling()?;
        Ok(t)
    }

    /// Per-mode dimensions large enough that each truncated Gibbs tail
    /// `e^{−d ω_n / T}` is at most `max_deficit`, and at least `min_dim`.
    pub fn for_temperature(
        spectrum: &ModeSpectrum,
        n_modes: usize,
        temperature: f64,
        max_deficit: f64,
        min_dim: usize,
    ) -> Result<Self> {
        if n_modes == 0 || n_modes > spectrum.len() {
            return Err(Error::param("n_modes", format!("need 1..={} modes", spectrum.len())));
        }
        let dims = spectrum.modes[..n_modes]
            .iter()
            .map(|m| {
                if temperature == 0.0 {
                    min_dim
                } else {
                    let d = (-max_deficit.ln() * temperature / m.omega).ceil() as usize;
                    d.max(min_dim)
                }
            })
            .collect();
        Self::new(dims)
    }

    pub(crate) fn check_ceiling(&self) -> Result<()> {
        let dim = self.fock_dims.iter().try_fold(4usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
        if dim > self.ceiling {
            return Err(Error::DimensionCeiling { dim, ceiling: self.ceiling });
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.fock_dims.len()
    }

    pub fn fock_dims(&self) -> &[usize] {
        &self.fock_dims
    }

    pub fn ceiling(&self) -> usize {
        self.ceiling
    }

    pub fn phonon_dim(&self) -> usize {
        self.fock_dims.iter().product()
    }

    /// Total dimension `4 Π d_n`.
    pub fn dim(&self) -> usize {
        4 * self.phonon_dim()
    }

    /// Every mode raised by `extra` levels.
    pub fn raised(&self, extra: usize) -> Result<Self> {
        Self::with_ceiling(self.fock_dims.iter().map(|d| d + extra).collect(), self.ceiling)
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.fock_dims.len()];
        for i in (0..self.fock_dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.fock_dims[i + 1];
        }
        s
    }

    pub(crate) fn occupations_into(&self, mut k: usize, occ: &mut [usize]) {
        for (o, &d) in occ.iter_mut().zip(&self.fock_dims).rev() {
            *o = k % d;
            k /= d;
        }
    }

    /// Warnings for modes with `3 n̄ ≥ d`.
    pub fn occupancy_warnings(&self, spectrum: &ModeSpectrum, temperature: f64) -> Vec<String> {
        self.fock_dims
            .iter()
            .zip(&spectrum.modes)
            .enumerate()
            .filter_map(|(i, (&d, m))| {
                let nbar = mean_occupation(m.omega, temperature);
                (3.0 * nbar >= d as f64)
                    .then(|| format!("mode {}: 3 n_bar = {:.3} not below Fock dimension {d}", i + 1, 3.0 * nbar))
            })
            .collect()
    }
}

/// A weighted pure trajectory of the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub weight: f64,
    pub amplitudes: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    trunc: TruncationSpec,
    members: Vec<Trajectory>,
    dropped_weight: f64,
}

const NORM_TOL: f64 = 1e-10;

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl FullState {
    pub fn pure(trunc: &TruncationSpec, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != trunc.dim() {
            return Err(Error::InvalidState(format!(
                "amplitude vector has length {}, expected {}",
                amplitudes.len(),
                trunc.dim()
            )));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {n} != 1")));
        }
        Ok(FullState {
            trunc: trunc.clone(),
            members: vec![Trajectory { weight: 1.0, amplitudes }],
            dropped_weight: 0.0,
        })
    }

    /// `|ψ⟩ ⊗ |n_1 … n_M⟩`.
    pub fn product(qubits: &Ket4, occupations: &[usize], trunc: &TruncationSpec) -> Result<Self> {
        let k = phonon_index(trunc, occupations)?;
        let p = trunc.phonon_dim();
        let mut amp = vec![C64::new(0.0, 0.0); trunc.dim()];
        for q in 0..4 {
            amp[q * p + k] = qubits[q];
        }
        Self::pure(trunc, amp)
    }

    /// The same ensemble inside a larger truncation (every Fock dimension
    /// at least as large as the current one).
    pub fn embed(&self, target: &TruncationSpec) -> Result<Self> {
        if target.n_modes() != self.trunc.n_modes()
            || target.fock_dims().iter().zip(self.trunc.fock_dims()).any(|(big, small)| big < small)
        {
            return Err(Error::param("truncation", "embedding needs every Fock dimension to grow or stay"));
        }
        let (p_old, p_new) = (self.trunc.phonon_dim(), target.phonon_dim());
        let mut map = Vec::with_capacity(p_old);
        let mut occ = vec![0; self.trunc.n_modes()];
        for k in 0..p_old {
            self.trunc.occupations_into(k, &mut occ);
            map.push(phonon_index(target, &occ)?);
        }
        let members = self
            .members
            .iter()
            .map(|m| {
                let mut amp = vec![C64::new(0.0, 0.0); target.dim()];
                for q in 0..4 {
                    for (k, &j) in map.iter().enumerate() {
                        amp[q * p_new + j] = m.amplitudes[q * p_old + k];
                    }
                }
                Trajectory { weight: m.weight, amplitudes: amp }
            })
            .collect();
        Ok(FullState { trunc: target.clone(), members, dropped_weight: self.dropped_weight })
    }

    pub fn members(&self) -> &[Trajectory] {
        &self.members
    }

    pub fn truncation(&self) -> &TruncationSpec {
        &self.trunc
    }

    /// Gibbs weight discarded when pruning negligible ensemble members.
    pub fn dropped_weight(&self) -> f64 {
        self.dropped_weight
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.members.iter().map(|m| (norm(&m.amplitudes) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Ensemble average `Σ w ⟨ψ|H|ψ⟩`.
    pub fn energy(&self, h: &CsrMatrix) -> f64 {
        let mut s = NeumaierSum::default();
        for m in &self.members {
            s.add(m.weight * h.expectation(&m.amplitudes).re);
        }
        s.value()
    }
}

fn phonon_index(trunc: &TruncationSpec, occupations: &[usize]) -> Result<usize> {
    if occupations.len() != trunc.n_modes() {
        return Err(Error::param("occupations", "one occupation per mode required"));
    }
    let mut k = 0;
    for (&n, &d) in occupations.iter().zip(trunc.fock_dims()) {
        if n >= d {
            return Err(Error::param("occupations", format!("occupation {n} outside Fock dimension {d}")));
        }
        k = k * d + n;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy)]
pub struct ThermalOptions {
    /// Largest allowed truncated-Gibbs trace deficit, summed over modes.
    pub max_deficit: f64,
    /// Ensemble members are dropped, lightest first, while their total
    /// weight stays below this value.
    pub prune_weight: f64,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        ThermalOptions { max_deficit: 1e-6, prune_weight: 1e-11 }
    }
}

/// `|ψ⟩⟨ψ| ⊗ Π_n ρ_B,n` with each mode in its truncated, renormalised Gibbs
/// state at `temperature`.
pub fn thermal_initial_state(
    qubits: &Ket4,
    spectrum: &ModeSpectrum,
    trunc: &TruncationSpec,
    temperature: f64,
    opts: &ThermalOptions,
) -> Result<FullState> {
    if !(temperature >= 0.0) {
        return Err(Error::param("temperature", format!("must be >= 0, got {temperature}")));
    }
    let qn = qubits.norm();
    if (qn - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("qubit state norm {qn} != 1")));
    }
    if spectrum.len() < trunc.n_modes() {
        return Err(Error::param("n_modes", "spectrum has fewer modes than the truncation"));
    }
    if temperature == 0.0 {
        return FullState::product(qubits, &vec![0; trunc.n_modes()], trunc);
    }

    let mut populations = Vec::with_capacity(trunc.n_modes());
    for (i, (&d, m)) in trunc.fock_dims().iter().zip(&spectrum.modes).enumerate() {
        let x = m.omega / temperature;
        let deficit = (-(d as f64) * x).exp();
        if deficit > opts.max_deficit {
            return Err(Error::TruncationInadequate { mode: i + 1, deficit });
        }
        let w: Vec<f64> = (0..d).map(|k| (-(k as f64) * x).exp()).collect();
        let z: f64 = w.iter().sum();
        populations.push(w.into_iter().map(|v| v / z).collect::<Vec<f64>>());
    }

    let p = trunc.phonon_dim();
    let mut occ = vec![0usize; trunc.n_modes()];
    let mut weights: Vec<(f64, usize)> = (0..p)
        .map(|k| {
            trunc.occupations_into(k, &mut occ);
            (occ.iter().zip(&populations).map(|(&n, pop)| pop[n]).product(), k)
        })
        .collect();
    weights.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut dropped = 0.0;
    while let Some(&(w, _)) = weights.last() {
        if dropped + w > opts.prune_weight || weights.len() == 1 {
            break;
        }
        dropped += w;
        weights.pop();
    }
    let kept = 1.0 - dropped;
    weights.sort_by_key(|&(_, k)| k);
    let members = weights
        .into_iter()
        .map(|(w, k)| {
            let mut amp = vec![C64::new(0.0, 0.0); trunc.dim()];
            for q in 0..4 {
                amp[q * p + k] = qubits[q];
            }
            Trajectory { weight: w / kept, amplitudes: amp }
        })
        .collect();
    Ok(FullState { trunc: trunc.clone(), members, dropped_weight: dropped })
}

/// Partial trace of one pure trajectory over the phonons.
fn reduced_pure(amp: &[C64], p: usize) -> Op4 {
    Op4::from_fn(|a, b| {
        let (ra, rb) = (&amp[a * p..(a + 1) * p], &amp[b * p..(b + 1) * p]);
        ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum()
    })
}

/// Ordered weighted sum of per-member reduced matrices.
fn combine(weights: &[f64], parts: &[Op4]) -> Op4 {
    let mut re = [[NeumaierSum::default(); 4]; 4];
    let mut im = [[NeumaierSum::default(); 4]; 4];
    for (w, m) in weights.iter().zip(parts) {
        for a in 0..4 {
            for b in 0..4 {
                re[a][b].add(w * m[(a, b)].re);
                im[a][b].add(w * m[(a, b)].im);
            }
        }
    }
    Op4::from_fn(|a, b| C64::new(re[a][b].value(), im[a][b].value()))
}

fn to_pair_state(rho: Op4) -> Result<QubitPairState> {
    // Hermitian part only; the anti-Hermitian remainder is pure rounding
    QubitPairState::new((rho + rho.adjoint()) * C64::new(0.5, 0.0))
}

/// `ρ = Tr_B |Ψ⟩⟨Ψ|` averaged over the ensemble.
pub fn reduced_qubit_state(state: &FullState) -> Result<QubitPairState> {
    let p = state.trunc.phonon_dim();
    let parts: Vec<Op4> = state.members.par_iter().map(|m| reduced_pure(&m.amplitudes, p)).collect();
    let weights: Vec<f64> = state.members.iter().map(|m| m.weight).collect();
    to_pair_state(combine(&weights, &parts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagatorKind {
    #[default]
    Chebyshev,
    Lanczos,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub tolerance: f64,
    pub kind: PropagatorKind,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { tolerance: 1e-10, kind: PropagatorKind::Chebyshev }
    }
}

enum Stepper {
    Chebyshev(Chebyshev),
    Lanczos { dt: f64, tol: f64 },
}

impl Stepper {
    fn new(h: &CsrMatrix, dt: f64, opts: &EvolveOptions) -> Result<Self> {
        Ok(match opts.kind {
            PropagatorKind::Chebyshev => Stepper::Chebyshev(Chebyshev::new(h, dt, opts.tolerance)?),
            PropagatorKind::Lanczos => Stepper::Lanczos { dt, tol: opts.tolerance },
        })
    }

    fn apply(&self, h: &CsrMatrix, psi: &[C64]) -> Result<Vec<C64>> {
        match self {
            Stepper::Chebyshev(c) => Ok(c.apply(h, psi)),
            Stepper::Lanczos { dt, tol } => lanczos_substeps(h, psi, *dt, *tol),
        }
    }
}

/// Trajectories propagated together by the blocked Chebyshev kernel.
const BLOCK: usize = 8;

/// Chebyshev propagation of up to `BLOCK` trajectories through one shared
/// sweep per term. Unused slots are zero and skipped by the norm check.
fn evolve_block(
    chunk: &[Trajectory],
    h: &CsrMatrix,
    cache: &[(u64, Stepper)],
    plan: &[(usize, usize)],
    p: usize,
) -> Result<Vec<Vec<Op4>>> {
    let n = h.dim();
    let mut x = vec![C64::new(0.0, 0.0); n * BLOCK];
    for (b, m) in chunk.iter().enumerate() {
        for (i, a) in m.amplitudes.iter().enumerate() {
            x[i * BLOCK + b] = *a;
        }
    }
    let mut out = vec![Vec::with_capacity(plan.len()); chunk.len()];
    let mut column = vec![C64::new(0.0, 0.0); n];
    let mut step = 0;
    for &(idx, pieces) in plan {
        if idx != usize::MAX {
            let Stepper::Chebyshev(cheb) = &cache[idx].1 else {
                unreachable!("block evolution is only planned with Chebyshev steppers")
            };
            for _ in 0..pieces {
                step += 1;
                x = cheb.apply_block::<BLOCK>(h, &x);
                for b in 0..chunk.len() {
                    let norm2: f64 = (0..n).map(|i| x[i * BLOCK + b].norm_sqr()).sum();
                    let dev = (norm2.sqrt() - 1.0).abs();
                    if dev > NORM_TOL {
                        return Err(Error::PropagatorFailure { step, reason: format!("norm drift {dev:.3e}") });
                    }
                }
            }
        }
        for (b, o) in out.iter_mut().enumerate() {
            for (i, v) in column.iter_mut().enumerate() {
                *v = x[i * BLOCK + b];
            }
            o.push(reduced_pure(&column, p));
        }
    }
    Ok(out)
}

/// Lanczos over `dt`, halving the sub-step until each one converges.
fn lanczos_substeps(h: &CsrMatrix, psi: &[C64], dt: f64, tol: f64) -> Result<Vec<C64>> {
    let (lo, hi) = h.gershgorin_bounds();
    let mut pieces = (0.5 * (hi - lo) * dt / 4.0).ceil().max(1.0) as usize;
    loop {
        let sub = dt / pieces as f64;
        let mut cur = psi.to_vec();
        let mut ok = true;
        for _ in 0..pieces {
            match lanczos_step(h, &cur, sub, tol / pieces as f64, 40) {
                Ok(v) => cur = v,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(cur);
        }
        if pieces > 1 << 20 {
            return Err(Error::PropagatorFailure { step: 0, reason: "Lanczos sub-stepping failed".into() });
        }
        pieces *= 2;
    }
}

fn check_norm(amp: &[C64], step: usize) -> Result<()> {
    let dev = (norm(amp) - 1.0).abs();
    if dev > NORM_TOL {
        return Err(Error::PropagatorFailure { step, reason: format!("norm drift {dev:.3e}") });
    }
    Ok(())
}

/// `e^{−iHt}` applied to every trajectory in `n_steps` equal steps.
pub fn evolve(state: &FullState, h: &CsrMatrix, t: f64, n_steps: usize, opts: &EvolveOptions) -> Result<FullState> {
    if h.dim() != state.trunc.dim() {
        return Err(Error::param("h", "Hamiltonian dimension does not match the state"));
    }
    if n_steps == 0 {
        return Err(Error::param("n_steps", "must be >= 1"));
    }
    let stepper = Stepper::new(h, t / n_steps as f64, opts)?;
    let members = state
        .members
        .par_iter()
        .map(|m| {
            let mut amp = m.amplitudes.clone();
            for step in 1..=n_steps {
                amp = stepper.apply(h, &amp)?;
                check_norm(&amp, step)?;
            }
            Ok(Trajectory { weight: m.weight, amplitudes: amp })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FullState { trunc: state.trunc.clone(), members, dropped_weight: state.dropped_weight })
}

/// Reduced qubit states on an ascending time grid starting at `t ≥ 0`,
/// propagating each trajectory from one grid point to the next. Each
/// interval is split so that `(spectral half-width) · dt ≤ max_phase`.
pub fn evolve_series(
    state: &FullState,
    h: &CsrMatrix,
    grid: &[f64],
    max_phase: f64,
    opts: &EvolveOptions,
) -> Result<Vec<QubitPairState>> {
    if h.dim() != state.trunc.dim() {
        return Err(Error::param("h", "Hamiltonian dimension does not match the state"));
    }
    if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("time_grid", "must be non-empty, >= 0 and strictly increasing"));
    }
    let (lo, hi) = h.gershgorin_bounds();
    let half = 0.5 * (hi - lo);
    let mut cache: Vec<(u64, Stepper)> = Vec::new();
    let mut plan: Vec<(usize, usize)> = Vec::with_capacity(grid.len());
    let mut prev = 0.0;
    for &t in grid {
        let dt = t - prev;
        prev = t;
        if dt == 0.0 {
            plan.push((usize::MAX, 0));
            continue;
        }
        let pieces = ((half * dt) / max_phase).ceil().max(1.0) as usize;
        let sub = dt / pieces as f64;
        let key = sub.to_bits();
        let idx = match cache.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                cache.push((key, Stepper::new(h, sub, opts)?));
                cache.len() - 1
            }
        };
        plan.push((idx, pieces));
    }

    let p = state.trunc.phonon_dim();
    let per_member: Vec<Vec<Op4>> = match opts.kind {
        PropagatorKind::Chebyshev => {
            let chunks: Vec<&[Trajectory]> = state.members.chunks(BLOCK).collect();
            let per_chunk =
                chunks.par_iter().map(|chunk| evolve_block(chunk, h, &cache, &plan, p)).collect::<Result<Vec<_>>>()?;
            per_chunk.into_iter().flatten().collect()
        }
        PropagatorKind::Lanczos => state
            .members
            .par_iter()
            .map(|m| {
                let mut amp = m.amplitudes.clone();
                let mut out = Vec::with_capacity(grid.len());
                let mut step = 0;
                for &(idx, pieces) in &plan {
                    if idx != usize::MAX {
                        for _ in 0..pieces {
                            step += 1;
                            amp = cache[idx].1.apply(h, &amp)?;
                            check_norm(&amp, step)?;
                        }
                    }
                    out.push(reduced_pure(&amp, p));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let weights: Vec<f64> = state.members.iter().map(|m| m.weight).collect();
    (0..grid.len())
        .map(|i| {
            let parts: Vec<Op4> = per_member.iter().map(|v| v[i]).collect();
            to_pair_state(combine(&weights, &parts))
        })
        .collect()
}

/// Δ = 0 reduced coherences `|ρ₂₃(t)|`, `|ρ₁₄(t)|` from a converged run.
#[derive(Debug, Clone)]
pub struct ConvergedCoherences {
    pub truncation: TruncationSpec,
    pub states: Vec<QubitPairState>,
    /// Largest change of any tracked coherence in the last truncation raise.
    pub last_change: f64,
    pub dropped_weight: f64,
}

/// Evolve `qubits ⊗ ρ_B` on `grid`, raising every Fock dimension by `step`
/// until the tracked coherences move by less than `tol`. The thermal
/// ensemble is drawn once on `start` and embedded in each raised space, so
/// the raises probe only the dynamical cutoff.
#[allow(clippy::too_many_arguments)]
pub fn converged_series(
    qubits: &Ket4,
    spectrum: &ModeSpectrum,
    start: &TruncationSpec,
    temperature: f64,
    delta: f64,
    omega_0: f64,
    grid: &[f64],
    tol: f64,
    step: usize,
    max_raises: usize,
    thermal: &ThermalOptions,
    opts: &EvolveOptions,
) -> Result<ConvergedCoherences> {
    use crate::state::{IDX_00, IDX_01, IDX_10, IDX_11};
    let initial = thermal_initial_state(qubits, spectrum, start, temperature, thermal)?;
    let run = |trunc: &TruncationSpec| -> Result<Vec<QubitPairState>> {
        let h = build_hamiltonian(spectrum, trunc, delta, omega_0)?;
        evolve_series(&initial.embed(trunc)?, &h, grid, 40.0, opts)
    };
    let tracked = |s: &QubitPairState| {
        [s.element(IDX_10, IDX_01), s.element(IDX_11, IDX_00), s.element(IDX_10, IDX_10), s.element(IDX_11, IDX_11)]
    };
    let mut trunc = start.clone();
    let mut states = run(&trunc)?;
    for _ in 0..max_raises {
        let next = trunc.raised(step)?;
        let new_states = run(&next)?;
        let change = states
            .iter()
            .zip(&new_states)
            .flat_map(|(a, b)| tracked(a).into_iter().zip(tracked(b)).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max);
        trunc = next;
        states = new_states;
        if change < tol {
            return Ok(ConvergedCoherences {
                truncation: trunc,
                states,
                last_change: change,
                dropped_weight: initial.dropped_weight(),
            });
        }
    }
    Err(Error::PropagatorFailure {
        step: 0,
        reason: format!("Fock truncation not converged to {tol:.1e} after {max_raises} raises"),
    })
}
