//! Two-qubit states in the ordered basis {|11⟩, |10⟩, |01⟩, |00⟩}.
//!
//! Single-qubit vectors use the matching order (|1⟩, |0⟩), so the two-qubit
//! basis is the Kronecker product with qubit 1 as the left factor and
//! `σ_z = diag(+1, −1)`.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::{Error, Result, C64};

pub type Ket2 = Vector2<C64>;
pub type Ket4 = Vector4<C64>;
pub type Op2 = Matrix2<C64>;
pub type Op4 = Matrix4<C64>;

pub const IDX_11: usize = 0;
pub const IDX_10: usize = 1;
pub const IDX_01: usize = 2;
pub const IDX_00: usize = 3;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Basis ket `|q1 q2⟩` with `q ∈ {0, 1}`.
pub fn ket(q1: u8, q2: u8) -> Ket4 {
    let mut v = Ket4::zeros();
    v[basis_index(q1, q2)] = C64::new(1.0, 0.0);
    v
}

pub fn basis_index(q1: u8, q2: u8) -> usize {
    2 * (1 - q1 as usize) + (1 - q2 as usize)
}

/// Single-qubit ket `α|0⟩ + β|1⟩` stored in (|1⟩, |0⟩) order.
pub fn qubit(alpha: C64, beta: C64) -> Ket2 {
    Ket2::new(beta, alpha)
}

pub fn sigma_x() -> Op2 {
    Op2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0))
}

/// σ_y written in the (|1⟩, |0⟩) order.
pub fn sigma_y() -> Op2 {
    Op2::new(C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(0.0, 0.0))
}

pub fn sigma_z() -> Op2 {
    Op2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0))
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs<R: nalgebra::Dim, Cc: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, Cc>>(
    m: &nalgebra::Matrix<C64, R, Cc, S>,
) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron2(a: &Op2, b: &Op2) -> Op4 {
    Op4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

pub fn kron_ket(a: &Ket2, b: &Ket2) -> Ket4 {
    Ket4::from_fn(|i, _| a[i / 2] * b[i % 2])
}

/// Two-qubit density matrix satisfying Hermiticity, unit trace and positivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitPairState {
    rho: Op4,
}

impl QubitPairState {
    pub fn new(rho: Op4) -> Result<Self> {
        let s = QubitPairState { rho };
        s.check()?;
        Ok(s)
    }

    /// Skip validation; for matrices that are valid by construction.
    pub(crate) fn from_raw(rho: Op4) -> Self {
        QubitPairState { rho }
    }

    pub fn from_pure(psi: &Ket4) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("pure state norm {n} != 1")));
        }
        Ok(QubitPairState { rho: psi * psi.adjoint() })
    }

    pub fn maximally_mixed() -> Self {
        QubitPairState { rho: Op4::identity() * C64::new(0.25, 0.0) }
    }

    pub fn rho(&self) -> &Op4 {
        &self.rho
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.rho[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut e: Vec<f64> = self.rho.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        [e[0], e[1], e[2], e[3]]
    }

    pub fn check(&self) -> Result<()> {
        let herm = max_abs(&(self.rho - self.rho.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (max deviation {herm:.3e})")));
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Reduced state of qubit 1 (`which = 0`) or qubit 2 (`which = 1`).
    pub fn reduced(&self, which: usize) -> Op2 {
        Op2::from_fn(|a, b| {
            (0..2)
                .map(|k| match which {
                    0 => self.rho[(2 * a + k, 2 * b + k)],
                    _ => self.rho[(2 * k + a, 2 * k + b)],
                })
                .sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_order_matches_kron() {
        let one = qubit(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        let zero = qubit(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        assert_eq!(kron_ket(&one, &zero), ket(1, 0));
        assert_eq!(kron_ket(&zero, &one), ket(0, 1));
        assert_eq!(ket(1, 1)[IDX_11], C64::new(1.0, 0.0));
        assert_eq!(ket(0, 0)[IDX_00], C64::new(1.0, 0.0));
        // σ_z ⊗ I on |10⟩ gives +|10⟩
        let zi = kron2(&sigma_z(), &Op2::identity());
        assert_eq!(zi * ket(1, 0), ket(1, 0));
    }

    #[test]
    fn validation() {
        assert!(QubitPairState::from_pure(&ket(1, 0)).is_ok());
        let mut bad = Op4::identity() * C64::new(0.25, 0.0);
        bad[(0, 1)] = C64::new(0.1, 0.0);
        assert!(QubitPairState::new(bad).is_err());
        let neg = Op4::from_diagonal(&Vector4::new(c(1.2, 0.0), c(-0.2, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
        assert!(QubitPairState::new(neg).is_err());
    }

    #[test]
    fn partial_traces_of_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = (ket(1, 0) + ket(0, 1) * c(0.0, 1.0)) * c(s, 0.0);
        let st = QubitPairState::from_pure(&psi).unwrap();
        for w in 0..2 {
            let r = st.reduced(w);
            assert!(max_abs(&(r - Op2::identity() * c(0.5, 0.0))) < 1e-15);
        }
    }
}
