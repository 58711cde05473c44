//! Random states and unitaries, plus a counterexample search for the
//! modulated trace-product inequality.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{relative_trace_product, trace_product, CMatrix, CVector, DensityMatrix, PureState, UnitaryMatrix};
use crate::error::Result;

fn ginibre(rows: usize, cols: usize, rng: &mut dyn RngCore) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// GG†/Tr(GG†) with G a d×rank complex Ginibre matrix.
pub fn random_density(d: usize, rank: usize, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    // Hermitian part only; rounding in the product leaves ~1e-17 asymmetry
    DensityMatrix::new((&m + m.adjoint()) * Complex64::new(0.5, 0.0))
}

pub fn random_pure(d: usize, rng: &mut dyn RngCore) -> Result<PureState> {
    let g = ginibre(d, 1, rng);
    PureState::normalized(CVector::from_column_slice(g.as_slice()))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with R's diagonal phases removed.
pub fn random_unitary(d: usize, rng: &mut dyn RngCore) -> Result<UnitaryMatrix> {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(q)
}

/// A draw where Tr(Uρ₁U†ρ₂) exceeds Tr(ρ₁ρ₂).
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub unitary: UnitaryMatrix,
    pub modulated: f64,
    pub unmodulated: f64,
}

impl Counterexample {
    pub fn excess(&self) -> f64 {
        self.modulated - self.unmodulated
    }
}

#[derive(Debug, Clone)]
pub struct InequalitySearch {
    pub draws: usize,
    pub violations: usize,
    pub worst: Option<Counterexample>,
}

/// Tests Tr(Uρ₁U†ρ₂) ≤ Tr(ρ₁ρ₂) on independent random draws, with `slack`.
pub fn search_trace_product_counterexample(
    d: usize,
    draws: usize,
    slack: f64,
    rng: &mut dyn RngCore,
) -> Result<InequalitySearch> {
    let mut violations = 0;
    let mut worst: Option<Counterexample> = None;
    for _ in 0..draws {
        let rho1 = random_density(d, d, rng)?;
        let rho2 = random_density(d, d, rng)?;
        let u = random_unitary(d, rng)?;
        let modulated = relative_trace_product(&u, &rho1, &rho2)?;
        let unmodulated = trace_product(&rho1, &rho2)?;
        if modulated > unmodulated + slack {
            violations += 1;
            if worst.as_ref().is_none_or(|w| modulated - unmodulated > w.excess()) {
                worst = Some(Counterexample {
                    rho1,
                    rho2,
                    unitary: u,
                    modulated,
                    unmodulated,
                });
            }
        }
    }
    Ok(InequalitySearch {
        draws,
        violations,
        worst,
    })
}
