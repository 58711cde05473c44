//! Finite-dimensional state algebra for SWAP-test statistics, trace
//! products and fidelity bounds.

pub mod random;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension accepted for states and unitaries.
pub const MAX_DIM: usize = 32;
/// Default cap on d² for the explicit c-SWAP circuit (d ≤ 8).
pub const CSWAP_MAX_PAIR_DIM: usize = 64;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidState {
            kind: "dimension",
            reason: "must be at least 1".into(),
        });
    }
    if d > MAX_DIM {
        return Err(Error::DimensionOverflow { dim: d, cap: MAX_DIM });
    }
    Ok(())
}

fn check_same(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    v: CVector,
}

impl PureState {
    pub fn new(v: CVector) -> Result<Self> {
        check_dim(v.len())?;
        let norm = v.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState {
                kind: "pure state",
                reason: format!("norm {norm}, expected 1"),
            });
        }
        Ok(Self { v })
    }

    pub fn from_components(c: &[Complex64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(c))
    }

    /// Rescales a non-zero vector to unit norm.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState {
                kind: "pure state",
                reason: "zero or non-finite norm".into(),
            });
        }
        Self::new(v / Complex64::new(norm, 0.0))
    }

    /// Computational basis vector |k⟩ in dimension d.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        check_dim(d)?;
        if k >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: k + 1,
            });
        }
        let mut v = CVector::zeros(d);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(Self { v })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.v
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_same(self.dim(), other.dim())?;
        Ok(self.v.dotc(&other.v))
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.v * self.v.adjoint(),
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        check_dim(m.nrows())?;
        let asym = (&m - m.adjoint()).norm();
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState {
                kind: "density matrix",
                reason: format!("not Hermitian, ‖ρ−ρ†‖ = {asym:e}"),
            });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState {
                kind: "density matrix",
                reason: format!("trace {tr}, expected 1"),
            });
        }
        let min_eig = m.clone().symmetric_eigenvalues().min();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState {
                kind: "density matrix",
                reason: format!("eigenvalue {min_eig:e} below zero"),
            });
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            m: CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        })
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let diag = CVector::from_iterator(p.len(), p.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&diag))
    }

    /// Σ p_k |ψ_k⟩⟨ψ_k|.
    pub fn mixture(terms: &[(f64, PureState)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidState {
            kind: "mixture",
            reason: "no components".into(),
        })?;
        let d = first.1.dim();
        let mut m = CMatrix::zeros(d, d);
        for (p, psi) in terms {
            check_same(d, psi.dim())?;
            m += psi.density().m * Complex64::new(*p, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(&self.m, &self.m)
    }

    /// Eigenvalues (ascending) and matching eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        let e = self.m.clone().symmetric_eigen();
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
        let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
        let vecs = CMatrix::from_columns(&idx.iter().map(|&i| e.eigenvectors.column(i)).collect::<Vec<_>>());
        (vals, vecs)
    }

    fn conjugated(&self, u: &UnitaryMatrix) -> CMatrix {
        &u.m * &self.m * u.m.adjoint()
    }
}

/// Square matrix with U†U = I.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    m: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        check_dim(m.nrows())?;
        let d = m.nrows();
        let dev = (m.adjoint() * &m - CMatrix::identity(d, d)).norm();
        if dev > UNITARY_TOL {
            return Err(Error::InvalidState {
                kind: "unitary",
                reason: format!("‖U†U − I‖ = {dev:e}"),
            });
        }
        Ok(Self { m })
    }

    pub fn identity(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            m: CMatrix::identity(d, d),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    /// self · other.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_same(self.dim(), other.dim())?;
        Ok(Self { m: &self.m * &other.m })
    }
}

/// Re Tr(AB) computed without forming the product.
fn trace_of_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

fn probs_from_overlap(overlap_sq: f64) -> (f64, f64) {
    (0.5 * (1.0 + overlap_sq), 0.5 * (1.0 - overlap_sq))
}

/// SWAP-test outcome probabilities (P0, P1) for two pure states.
pub fn swap_test_probs(phi: &PureState, psi: &PureState) -> Result<(f64, f64)> {
    Ok(probs_from_overlap(phi.inner(psi)?.norm_sqr()))
}

/// SWAP-test outcome probabilities for two mixed states.
pub fn swap_test_probs_mixed(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<(f64, f64)> {
    Ok(probs_from_overlap(trace_product(rho1, rho2)?))
}

/// Runs H · cSWAP · H on |0⟩|φ⟩|ψ⟩ with the full 2d² state vector.
pub fn simulate_cswap(phi: &PureState, psi: &PureState) -> Result<(f64, f64)> {
    simulate_cswap_with_cap(phi, psi, CSWAP_MAX_PAIR_DIM)
}

pub fn simulate_cswap_with_cap(phi: &PureState, psi: &PureState, cap: usize) -> Result<(f64, f64)> {
    check_same(phi.dim(), psi.dim())?;
    let d = phi.dim();
    let pair = d * d;
    if pair > cap {
        return Err(Error::DimensionOverflow { dim: pair, cap });
    }
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    // index = control·d² + i·d + j
    let mut state = CVector::zeros(2 * pair);
    for i in 0..d {
        for j in 0..d {
            state[i * d + j] = phi.v[i] * psi.v[j];
        }
    }
    let hadamard = |s: &CVector| {
        let mut out = CVector::zeros(2 * pair);
        for k in 0..pair {
            out[k] = h * (s[k] + s[pair + k]);
            out[pair + k] = h * (s[k] - s[pair + k]);
        }
        out
    };
    state = hadamard(&state);
    let mut swapped = state.clone();
    for i in 0..d {
        for j in 0..d {
            swapped[pair + i * d + j] = state[pair + j * d + i];
        }
    }
    let out = hadamard(&swapped);
    let p0: f64 = (0..pair).map(|k| out[k].norm_sqr()).sum();
    let p1: f64 = (pair..2 * pair).map(|k| out[k].norm_sqr()).sum();
    Ok((p0, p1))
}

/// Tr(ρ₁ρ₂).
pub fn trace_product(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_same(rho1.dim(), rho2.dim())?;
    Ok(trace_of_product(&rho1.m, &rho2.m))
}

/// S_L = 1 − Tr(ρ²).
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - rho.purity()
}

/// Lower and upper bounds on the squared fidelity F².
pub fn fidelity_bounds(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<(f64, f64)> {
    let lower = trace_product(rho1, rho2)?;
    let spread = (linear_entropy(rho1).max(0.0) * linear_entropy(rho2).max(0.0)).sqrt();
    Ok((lower, lower + spread))
}

/// Eigenvalues below this multiple of the largest are rounding noise of the
/// eigensolver and are taken as zero before the square root.
const SQRT_FLOOR: f64 = 1e-13;

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let e = m.clone().symmetric_eigen();
    let floor = SQRT_FLOOR * e.eigenvalues.max().max(0.0);
    let roots = CVector::from_iterator(
        e.eigenvalues.len(),
        e.eigenvalues
            .iter()
            .map(|&l| Complex64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0)),
    );
    &e.eigenvectors * CMatrix::from_diagonal(&roots) * e.eigenvectors.adjoint()
}

/// Uhlmann fidelity F = Tr √(√ρ₁ ρ₂ √ρ₁), evaluated as the trace norm ‖√ρ₁ √ρ₂‖₁.
pub fn uhlmann_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_same(rho1.dim(), rho2.dim())?;
    let prod = psd_sqrt(&rho1.m) * psd_sqrt(&rho2.m);
    Ok(prod.singular_values().sum())
}

/// Tr(U₁ρ₁U₁† U₂ρ₂U₂†).
pub fn modulated_trace_product(
    u1: &UnitaryMatrix,
    u2: &UnitaryMatrix,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<f64> {
    let d = rho1.dim();
    check_same(d, rho2.dim())?;
    check_same(d, u1.dim())?;
    check_same(d, u2.dim())?;
    Ok(trace_of_product(&rho1.conjugated(u1), &rho2.conjugated(u2)))
}

/// Tr(Uρ₁U†ρ₂), the same quantity written with a single relative unitary.
pub fn relative_trace_product(
    u: &UnitaryMatrix,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<f64> {
    let d = rho1.dim();
    check_same(d, rho2.dim())?;
    check_same(d, u.dim())?;
    Ok(trace_of_product(&rho1.conjugated(u), &rho2.m))
}

/// ρ_S ⊗ ρ.
pub fn tensor_embed(signal: &DensityMatrix, other: &DensityMatrix) -> Result<DensityMatrix> {
    let d = signal.dim() * other.dim();
    if d > MAX_DIM {
        return Err(Error::DimensionOverflow { dim: d, cap: MAX_DIM });
    }
    Ok(DensityMatrix {
        m: signal.m.kronecker(&other.m),
    })
}

/// Projects the signal factor of a ρ_S ⊗ ρ state onto |s⟩. Returns the
/// outcome probability and the normalized post-measurement state.
pub fn project_signal(state: &DensityMatrix, signal: &PureState) -> Result<(f64, DensityMatrix)> {
    let ds = signal.dim();
    if ds == 0 || !state.dim().is_multiple_of(ds) {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: ds,
        });
    }
    let dother = state.dim() / ds;
    let proj = signal.density().m.kronecker(&CMatrix::identity(dother, dother));
    let post = &proj * &state.m * &proj;
    let p = post.trace().re;
    if p <= 0.0 {
        return Err(Error::DegenerateInput);
    }
    Ok((p, DensityMatrix::new(post / Complex64::new(p, 0.0))?))
}
