use num_complex::Complex64;

use super::qfi::SUPPORT_CUTOFF;
use super::ParamChart;
use crate::linalg::{self, c, CMatrix};
use crate::spin::{moments, thermal_state, Axis, FieldParams, SpinSystem};
use crate::{Error, Result};

/// Symmetric logarithmic derivative: Hermitian `L` with `(ρL + Lρ)/2 = ∂ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SldOperator {
    pub matrix: CMatrix,
}

impl SldOperator {
    /// `‖(ρL + Lρ)/2 − ∂ρ‖_max`.
    pub fn lyapunov_residual(&self, rho: &CMatrix, drho: &CMatrix) -> f64 {
        let lhs = linalg::anticommutator(rho, &self.matrix).scale(0.5);
        linalg::max_abs(&(lhs - drho))
    }
}

fn ensure_density(rho: &CMatrix) -> Result<()> {
    linalg::ensure_hermitian(rho, "density matrix")?;
    let tr = linalg::trace(rho);
    if (tr - c(1.0)).norm() > 1e-10 {
        return Err(Error::domain(format!("density matrix has trace {tr}")));
    }
    Ok(())
}

/// SLD from the eigenbasis of ρ: `L_kl = 2⟨k|∂ρ|l⟩/(p_k + p_l)`, dropping
/// pairs with `p_k + p_l ≤ 1e-12`.
pub fn sld_spectral(rho: &CMatrix, drho: &CMatrix) -> Result<SldOperator> {
    ensure_density(rho)?;
    linalg::ensure_hermitian(drho, "state derivative")?;
    linalg::ensure_dim(drho, rho.nrows())?;
    let (pops, vecs) = linalg::hermitian_eigen(rho);
    let d = vecs.adjoint() * drho * &vecs;
    let n = rho.nrows();
    let mut l = CMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let denom = pops[k] + pops[j];
            if denom > SUPPORT_CUTOFF {
                l[(k, j)] = d[(k, j)] * (2.0 / denom);
            }
        }
    }
    let matrix = &vecs * l * vecs.adjoint();
    Ok(SldOperator {
        matrix: (&matrix + matrix.adjoint()).scale(0.5),
    })
}

/// Closed-form SLD of the Gibbs state along chart direction `i`:
/// `L = −2(∂θ/∂λᵢ)·tanh(δ/2)·S_X + (∂δ/∂λᵢ)·(⟨S_Z⟩ − S_Z)`,
/// with `S_X`, `S_Z` the field-frame components `U·s·U†`.
pub fn sld_analytic(
    sys: &SpinSystem,
    params: &FieldParams,
    chart: &ParamChart,
    i: usize,
) -> Result<SldOperator> {
    if i >= chart.n_params() {
        return Err(Error::domain(format!("parameter index {i} out of range")));
    }
    let delta = params.delta();
    let state = thermal_state(sys, params);
    let big_x = state.frame_component(sys, Axis::X);
    let big_z = state.frame_component(sys, Axis::Z);
    let mz = moments(sys.spin, delta).mz;
    let theta_part = big_x * c(-2.0 * chart.d_theta(i) * (delta / 2.0).tanh());
    let delta_part = (linalg::identity(sys.dim()) * c(mz) - big_z) * c(chart.d_delta(i));
    Ok(SldOperator {
        matrix: theta_part + delta_part,
    })
}

/// `tr(ρ[L_i, L_j])/i`, real for Hermitian arguments. Zero is the condition
/// under which the multi-parameter SLD bound is attainable.
pub fn weak_commutativity(rho: &CMatrix, li: &SldOperator, lj: &SldOperator) -> Result<f64> {
    let n = linalg::ensure_square(rho)?;
    linalg::ensure_dim(&li.matrix, n)?;
    linalg::ensure_dim(&lj.matrix, n)?;
    let tr = linalg::trace(&(rho * linalg::commutator(&li.matrix, &lj.matrix)));
    Ok((tr * Complex64::new(0.0, -1.0)).re)
}
