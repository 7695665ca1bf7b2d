//! Time propagators for `e^{−iHt}` acting on state vectors.

use nalgebra::{DMatrix, DVector};

use crate::exact::sparse::CsrMatrix;
use crate::{Error, Result, C64};

/// Bessel functions `J_0(x) … J_{n}(x)` for `x ≥ 0` by Miller's backward
/// recurrence, normalised with `J_0 + 2Σ J_{2k} = 1`.
pub(crate) fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = {
        let s = n.max(x.ceil() as usize) + 30 + (12.0 * x.cbrt()) as usize;
        s + s % 2
    };
    let mut j = vec![0.0f64; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in &mut j[k - 1..=start] {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * j[k];
    }
    for (o, v) in out.iter_mut().zip(&j) {
        *o = v / norm;
    }
    out
}

/// Chebyshev expansion of `e^{−iH dt}` for a fixed step.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    centre: f64,
    half_width: f64,
    dt: f64,
    coeffs: Vec<C64>,
}

impl Chebyshev {
    /// Expansion truncated where the remaining Bessel coefficients sum below
    /// `tol · 10⁻⁵`; the spectrum is bracketed by Gershgorin discs.
    pub fn new(h: &CsrMatrix, dt: f64, tol: f64) -> Result<Self> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::param("dt", format!("must be finite and >= 0, got {dt}")));
        }
        let (lo, hi) = h.gershgorin_bounds();
        let centre = 0.5 * (lo + hi);
        // small margin keeps the scaled spectrum strictly inside [−1, 1]
        let half_width = 0.5 * (hi - lo) * (1.0 + 1e-12) + 1e-300;
        let x = half_width * dt;
        let n_max = (x.ceil() as usize) + 40 + (12.0 * x.cbrt()) as usize;
        let j = bessel_j_sequence(x, n_max);
        let mut order = n_max;
        let mut tail = 0.0;
        while order > 1 {
            let next = tail + 2.0 * j[order].abs();
            if next > tol * 1e-5 {
                break;
            }
            tail = next;
            order -= 1;
        }
        if 2.0 * j[n_max].abs() > tol * 1e-5 {
            return Err(Error::PropagatorFailure {
                step: 0,
                reason: format!("Chebyshev series not converged at order {n_max}"),
            });
        }
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut mi = C64::new(1.0, 0.0);
        for (k, jk) in j.iter().take(order + 1).enumerate() {
            let w = if k == 0 { 1.0 } else { 2.0 };
            coeffs.push(mi * (w * jk));
            mi *= C64::new(0.0, -1.0);
        }
        Ok(Chebyshev { centre, half_width, dt, coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Apply to `B` vectors at once, stored interleaved (`x[row * B + b]`).
    /// Each Chebyshev term is one fused sweep over the matrix, done on split
    /// real and imaginary parts so the inner loop over `b` vectorises.
    pub fn apply_block<const B: usize>(&self, h: &CsrMatrix, x: &[C64]) -> Vec<C64> {
        let n = h.dim();
        debug_assert_eq!(x.len(), n * B);
        let (row_ptr, col_idx, values) = h.parts();
        let m = SplitMatrix {
            row_ptr,
            col_idx,
            re: values.iter().map(|v| v.re).collect(),
            im: values.iter().map(|v| v.im).collect(),
        };
        let mut prev = Block::<B>::from_interleaved(x);
        let mut cur = Block::<B>::zeros(n);
        let mut next = Block::<B>::zeros(n);
        let mut out = Block::<B>::zeros(n);
        out.add_scaled(&prev, self.coeffs[0]);
        let inv = 1.0 / self.half_width;
        if self.coeffs.len() > 1 {
            // T₁ = Ĥ x
            m.sweep(&prev, &prev, &mut cur, &mut out, inv, self.centre, 0.0, self.coeffs[1]);
            for &a in &self.coeffs[2..] {
                // T_{k+1} = 2Ĥ T_k − T_{k−1}
                m.sweep(&cur, &prev, &mut next, &mut out, 2.0 * inv, self.centre, 1.0, a);
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        let phase = C64::from_polar(1.0, -self.centre * self.dt);
        out.to_interleaved().into_iter().map(|v| v * phase).collect()
    }

    pub fn apply(&self, h: &CsrMatrix, psi: &[C64]) -> Vec<C64> {
        let n = psi.len();
        let inv = 1.0 / self.half_width;
        let scaled = |x: &[C64], y: &mut [C64]| {
            h.mul_vec_into(x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = (*yi - xi * self.centre) * inv;
            }
        };
        let mut out: Vec<C64> = psi.iter().map(|v| v * self.coeffs[0]).collect();
        if self.coeffs.len() > 1 {
            let mut prev = psi.to_vec();
            let mut cur = vec![C64::new(0.0, 0.0); n];
            scaled(&prev, &mut cur);
            for (o, c) in out.iter_mut().zip(&cur) {
                *o += c * self.coeffs[1];
            }
            let mut next = vec![C64::new(0.0, 0.0); n];
            for a in &self.coeffs[2..] {
                scaled(&cur, &mut next);
                for ((nx, p), o) in next.iter_mut().zip(&prev).zip(out.iter_mut()) {
                    *nx = 2.0 * *nx - p;
                    *o += *nx * a;
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        let phase = C64::from_polar(1.0, -self.centre * self.dt);
        for o in &mut out {
            *o *= phase;
        }
        out
    }
}

/// One Lanczos step `ψ ↦ e^{−iH dt}ψ` with the usual a-posteriori error
/// estimate; the Krylov space grows until the estimate drops below `tol`.
pub fn lanczos_step(h: &CsrMatrix, psi: &[C64], dt: f64, tol: f64, max_dim: usize) -> Result<Vec<C64>> {
    let n = psi.len();
    let norm0 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return Ok(psi.to_vec());
    }
    let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|v| v / norm0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); n];
    for m in 1..=max_dim.min(n) {
        let v = &basis[m - 1];
        h.mul_vec_into(v, &mut w);
        let a: C64 = v.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
        alpha.push(a.re);
        // full reorthogonalisation against the whole basis
        for b in &basis {
            let proj: C64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= bi * proj;
            }
        }
        let bnorm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();

        let (coef, err) = krylov_exponential(&alpha, &beta, dt, bnorm);
        if err < tol || bnorm < 1e-14 || m == n {
            let mut out = vec![C64::new(0.0, 0.0); n];
            for (c, b) in coef.iter().zip(&basis) {
                for (o, bi) in out.iter_mut().zip(b) {
                    *o += bi * c;
                }
            }
            for o in &mut out {
                *o *= norm0;
            }
            return Ok(out);
        }
        beta.push(bnorm);
        basis.push(w.iter().map(|x| x / bnorm).collect());
    }
    Err(Error::PropagatorFailure {
        step: 0,
        reason: format!("Lanczos error estimate above {tol:.1e} with {max_dim} Krylov vectors"),
    })
}

/// First column of `e^{−iT dt}` for the tridiagonal `T`, plus the error
/// estimate `β_m |[e^{−iT dt}]_{m,1}|`.
fn krylov_exponential(alpha: &[f64], beta: &[f64], dt: f64, next_beta: f64) -> (Vec<C64>, f64) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let coef: Vec<C64> = (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let v = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                    C64::from_polar(v, -eig.eigenvalues[k] * dt)
                })
                .sum()
        })
        .collect();
    let err = next_beta * coef[m - 1].norm();
    (coef, err)
}

/// Exact propagation through the eigendecomposition of a dense copy of `H`;
/// only sensible for small spaces.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl SpectralPropagator {
    pub fn new(h: &CsrMatrix) -> Self {
        let eig = h.to_dense().symmetric_eigen();
        SpectralPropagator { energies: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn apply(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let x = DVector::from_column_slice(psi);
        let mut c = self.vectors.adjoint() * x;
        for (ci, e) in c.iter_mut().zip(self.energies.iter()) {
            *ci *= C64::from_polar(1.0, -e * t);
        }
        (&self.vectors * c).iter().copied().collect()
    }
}

/// `B` vectors of length `n` stored row-major as split real/imaginary parts.
struct Block<const B: usize> {
    re: Vec<[f64; B]>,
    im: Vec<[f64; B]>,
}

impl<const B: usize> Block<B> {
    fn zeros(n: usize) -> Self {
        Block { re: vec![[0.0; B]; n], im: vec![[0.0; B]; n] }
    }

    fn from_interleaved(x: &[C64]) -> Self {
        let mut blk = Self::zeros(x.len() / B);
        for (i, row) in x.chunks_exact(B).enumerate() {
            for (b, v) in row.iter().enumerate() {
                blk.re[i][b] = v.re;
                blk.im[i][b] = v.im;
            }
        }
        blk
    }

    fn to_interleaved(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).flat_map(|(r, i)| (0..B).map(move |b| C64::new(r[b], i[b]))).collect()
    }

    fn add_scaled(&mut self, x: &Block<B>, a: C64) {
        for i in 0..self.re.len() {
            for b in 0..B {
                let (xr, xi) = (x.re[i][b], x.im[i][b]);
                self.re[i][b] += a.re * xr - a.im * xi;
                self.im[i][b] += a.re * xi + a.im * xr;
            }
        }
    }
}

struct SplitMatrix<'a> {
    row_ptr: &'a [usize],
    col_idx: &'a [usize],
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SplitMatrix<'_> {
    /// `next = scale (H − centre) cur − beta prev` and `out += a · next`.
    #[allow(clippy::too_many_arguments)]
    fn sweep<const B: usize>(
        &self,
        cur: &Block<B>,
        prev: &Block<B>,
        next: &mut Block<B>,
        out: &mut Block<B>,
        scale: f64,
        centre: f64,
        beta: f64,
        a: C64,
    ) {
        for i in 0..self.row_ptr.len() - 1 {
            let mut ar = [0.0; B];
            let mut ai = [0.0; B];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (vr, vi) = (self.re[k], self.im[k]);
                let j = self.col_idx[k];
                let (xr, xi) = (&cur.re[j], &cur.im[j]);
                for b in 0..B {
                    ar[b] += vr * xr[b] - vi * xi[b];
                    ai[b] += vr * xi[b] + vi * xr[b];
                }
            }
            let (cr, ci) = (&cur.re[i], &cur.im[i]);
            let (pr, pi) = (&prev.re[i], &prev.im[i]);
            let (nr, ni) = (&mut next.re[i], &mut next.im[i]);
            let (or, oi) = (&mut out.re[i], &mut out.im[i]);
            for b in 0..B {
                let tr = scale * (ar[b] - centre * cr[b]) - beta * pr[b];
                let ti = scale * (ai[b] - centre * ci[b]) - beta * pi[b];
                nr[b] = tr;
                ni[b] = ti;
                or[b] += a.re * tr - a.im * ti;
                oi[b] += a.re * ti + a.im * tr;
            }
        }
    }
}
