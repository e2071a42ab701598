use nalgebra::DMatrix;

use super::FisherMatrix;
use crate::coarsen::{dot, BlochVector};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result};

/// Eigenvalue pairs with `p_k + p_l` at or below this are outside the support.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// `F_ij = Σ_{k,l} 2·Re[⟨k|∂ᵢρ|l⟩⟨l|∂ⱼρ|k⟩]/(p_k + p_l)` in the eigenbasis of ρ.
pub fn qfi_from_derivatives(rho: &CMatrix, drhos: &[CMatrix]) -> Result<FisherMatrix> {
    let n = linalg::ensure_square(rho)?;
    for d in drhos {
        linalg::ensure_dim(d, n)?;
    }
    let (pops, vecs) = linalg::hermitian_eigen(rho);
    let rotated: Vec<CMatrix> = drhos.iter().map(|d| vecs.adjoint() * d * &vecs).collect();
    let m = drhos.len();
    let mut f = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    let denom = pops[k] + pops[l];
                    if denom > SUPPORT_CUTOFF {
                        acc += 2.0 * (rotated[a][(k, l)] * rotated[b][(l, k)]).re / denom;
                    }
                }
            }
            f[(a, b)] = acc;
            f[(b, a)] = acc;
        }
    }
    FisherMatrix::unlabeled(f)
}

/// Spectral QFI of a state family with central-difference derivatives; the
/// numerical reference every closed form is checked against.
pub fn qfi_spectral<F>(family: F, point: &[f64], steps: &[f64]) -> Result<FisherMatrix>
where
    F: Fn(&[f64]) -> Result<CMatrix>,
{
    if steps.len() != point.len() {
        return Err(Error::DimensionMismatch {
            expected: point.len(),
            got: steps.len(),
        });
    }
    if steps.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::domain("finite-difference steps must be positive"));
    }
    let rho = family(point)?;
    let mut probe = point.to_vec();
    let mut drhos = Vec::with_capacity(point.len());
    for (i, &h) in steps.iter().enumerate() {
        probe[i] = point[i] + h;
        let plus = family(&probe)?;
        probe[i] = point[i] - h;
        let minus = family(&probe)?;
        probe[i] = point[i];
        drhos.push((plus - minus).unscale(2.0 * h));
    }
    qfi_from_derivatives(&rho, &drhos)
}

/// Default (θ, ω) steps: absolute in θ, relative in ω.
pub fn theta_omega_steps(omega: f64) -> [f64; 2] {
    [
        super::DEFAULT_STEP,
        super::DEFAULT_STEP * omega.abs().max(1e-3),
    ]
}

/// Two-level QFI from the Bloch vector:
/// `F_ij = ∂ᵢr·∂ⱼr + (r·∂ᵢr)(r·∂ⱼr)/(1 − |r|²)`.
pub fn qfi_bloch(r: &BlochVector, drs: &[[f64; 3]]) -> Result<FisherMatrix> {
    let norm2 = dot(&r.0, &r.0);
    if norm2.sqrt() > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "Bloch vector length {} exceeds 1",
            norm2.sqrt()
        )));
    }
    let purity_gap = 1.0 - norm2;
    let radial: Vec<f64> = drs.iter().map(|d| dot(&r.0, d)).collect();
    let pure = purity_gap <= 1e-12;
    if pure && radial.iter().any(|p| p.abs() >= 1e-12) {
        return Err(Error::Singular(
            "pure state with a derivative leaving the sphere".into(),
        ));
    }
    let m = drs.len();
    let f = DMatrix::from_fn(m, m, |i, j| {
        let tangential = dot(&drs[i], &drs[j]);
        if pure {
            tangential
        } else {
            tangential + radial[i] * radial[j] / purity_gap
        }
    });
    FisherMatrix::unlabeled(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn bloch_radial_case() {
        let (t, s) = (0.6, 0.3);
        let f = qfi_bloch(&BlochVector([0.0, 0.0, t]), &[[0.0, 0.0, s]]).unwrap();
        assert!((f.get(0, 0) - s * s / (1.0 - t * t)).abs() < 1e-15);
    }

    #[test]
    fn bloch_at_origin_is_tangential_only() {
        let f = qfi_bloch(&BlochVector([0.0; 3]), &[[0.7, 0.0, 0.0], [0.0, 1.3, 0.0]]).unwrap();
        assert!((f.get(0, 0) - 0.49).abs() < 1e-15);
        assert!((f.get(1, 1) - 1.69).abs() < 1e-15);
        assert_eq!(f.get(0, 1), 0.0);
    }

    #[test]
    fn bloch_domain_errors() {
        assert!(matches!(
            qfi_bloch(&BlochVector([0.0, 0.0, 1.1]), &[[1.0, 0.0, 0.0]]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            qfi_bloch(&BlochVector([0.0, 0.0, 1.0]), &[[0.0, 0.0, 0.1]]),
            Err(Error::Singular(_))
        ));
        let f = qfi_bloch(&BlochVector([0.0, 0.0, 1.0]), &[[0.2, 0.0, 0.0]]).unwrap();
        assert!((f.get(0, 0) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn constant_family_has_no_information() {
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.7), c(0.1), c(0.1), c(0.3)]);
        let f = qfi_spectral(|_| Ok(rho.clone()), &[0.3, 0.4], &[1e-5, 1e-5]).unwrap();
        assert_eq!(f.entries().amax(), 0.0);
    }

    #[test]
    fn step_validation() {
        let rho = CMatrix::identity(2, 2).unscale(2.0);
        assert!(qfi_spectral(|_| Ok(rho.clone()), &[0.3], &[0.0]).is_err());
        assert!(qfi_spectral(|_| Ok(rho.clone()), &[0.3], &[]).is_err());
    }
}
