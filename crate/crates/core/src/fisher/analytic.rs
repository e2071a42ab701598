//! Closed-form information matrices.

use nalgebra::DMatrix;

use super::{FisherMatrix, ParamChart};
use crate::coarsen::{gamma as coarsening_gamma, Axis, SpinHalfPoint};
use crate::spin::{moments, FieldParams, Spin};
use crate::{Error, Result};

/// QFI of the uncoarsened Gibbs state in `(θ, δ)`: `diag(4tanh²(δ/2)⟨S_X²⟩, Var S_Z)`.
fn theta_delta_information(spin: Spin, delta: f64) -> (f64, f64) {
    let m = moments(spin, delta);
    let t = (delta / 2.0).tanh();
    (4.0 * t * t * m.mx2, m.variance_z())
}

/// QFI of the Gibbs state in `(θ, ω)` from the closed-form moments.
pub fn thermal_qfi(spin: Spin, params: &FieldParams) -> FisherMatrix {
    let (f_theta, f_delta) = theta_delta_information(spin, params.delta());
    let t2 = params.temperature * params.temperature;
    FisherMatrix::from_2x2(f_theta, 0.0, f_delta / t2)
}

/// `Jᵀ·diag(F_θθ, F_δδ)·J` for an arbitrary chart.
pub fn thermal_qfi_in_chart(spin: Spin, delta: f64, chart: &ParamChart) -> FisherMatrix {
    let (f_theta, f_delta) = theta_delta_information(spin, delta);
    let j = chart.jacobian();
    let base = DMatrix::from_row_slice(2, 2, &[f_theta, 0.0, 0.0, f_delta]);
    let f = j.transpose() * base * j;
    FisherMatrix::new((&f + f.transpose()).scale(0.5), chart.labels().to_vec())
        .expect("symmetric by construction")
}

/// Closed-form `tr F⁻¹` for two parameters of the Gibbs state:
/// `(δ₁² + δ₂²)/(4tanh²(δ/2)⟨S_X²⟩·D²) + (θ₁² + θ₂²)/(Var S_Z·D²)`,
/// with `D = θ₂δ₁ − θ₁δ₂`. Infinite when the chart is singular.
///
/// The bound does not depend on θ.
pub fn crbound_general(spin: Spin, delta: f64, chart: &ParamChart) -> Result<f64> {
    let det = chart.determinant().ok_or_else(|| {
        Error::domain(format!(
            "chart has {} parameters, expected 2",
            chart.n_params()
        ))
    })?;
    if chart.is_singular() {
        return Ok(f64::INFINITY);
    }
    let (f_theta, f_delta) = theta_delta_information(spin, delta);
    let d2 = det * det;
    let delta_sq = chart.d_delta(0).powi(2) + chart.d_delta(1).powi(2);
    let theta_sq = chart.d_theta(0).powi(2) + chart.d_theta(1).powi(2);
    Ok(delta_sq / (f_theta * d2) + theta_sq / (f_delta * d2))
}

/// Numerical rank of the m-parameter QFI (threshold 1e-10 relative). Every
/// parameter acts through (θ, δ) only, so the rank never exceeds 2.
pub fn multiparam_rank_check(spin: Spin, delta: f64, chart: &ParamChart) -> usize {
    thermal_qfi_in_chart(spin, delta, chart).rank(1e-10)
}

/// Spin-½ coarsened QFI in `(θ, ω)` from the reduced variables `(t, α, θ)`.
///
/// With `g` the squared length of the coarsened unit direction:
///
/// - z: `g = cos²θ + γ²sin²θ`,
///   `F_θθ = t²(γ²cos²θ + sin²θ) + t⁴(γ²−1)²sin²2θ / (4(1 − t²g))`,
///   `F_θω = αt(γ²−1)sin2θ / (1 − t²g)`, `F_ωω = 4α²g / (1 − t²g)`.
/// - x: θ-roles of sin and cos swap, `g = γ²cos²θ + sin²θ`, and `F_θω` flips sign.
/// - y: `diag(γ²t², 4α²γ²(1 + γ²t²/(1 − γ²t²)))`.
pub fn qfi_coarsened_reduced(axis: Axis, point: &SpinHalfPoint, eta: f64) -> Result<FisherMatrix> {
    let g = coarsening_gamma(eta)?;
    let g2 = g * g;
    let t = point.tanh_half_delta;
    let t2 = t * t;
    let a = point.alpha;
    let (s, co) = point.theta.sin_cos();
    let (s2, c2) = (s * s, co * co);
    let sin2 = (2.0 * point.theta).sin();
    let f = match axis {
        Axis::Y => {
            let f22 = 4.0 * a * a * g2 * (1.0 + g2 * t2 / (1.0 - g2 * t2));
            FisherMatrix::from_2x2(g2 * t2, 0.0, f22)
        }
        Axis::Z | Axis::X => {
            let (len2, tangential, sign) = match axis {
                Axis::Z => (c2 + g2 * s2, g2 * c2 + s2, 1.0),
                _ => (g2 * c2 + s2, c2 + g2 * s2, -1.0),
            };
            let gap = 1.0 - t2 * len2;
            let f11 = t2 * tangential + t2 * t2 * (g2 - 1.0).powi(2) * sin2 * sin2 / (4.0 * gap);
            let f12 = sign * a * t * (g2 - 1.0) * sin2 / gap;
            let f22 = 4.0 * a * a * len2 / gap;
            FisherMatrix::from_2x2(f11, f12, f22)
        }
    };
    Ok(f)
}

/// Spin-½ coarsened QFI at a physical point. Other spins have no closed form
/// here; use the spectral route.
pub fn qfi_coarsened_analytic(
    spin: Spin,
    axis: Axis,
    params: &FieldParams,
    eta: f64,
) -> Result<FisherMatrix> {
    if spin != Spin::HALF {
        return Err(Error::Unsupported(format!(
            "closed-form coarsened QFI exists for spin 1/2 only (got {spin}); use the spectral route"
        )));
    }
    qfi_coarsened_reduced(axis, &SpinHalfPoint::from_field(params), eta)
}

/// Closed-form `tr F⁻¹` for z-axis coarsening of spin ½:
/// `[4α² + t² + (4α² − (2t² − 1)t²)γ² + (t² − 4α²)(γ² − 1)cos2θ] / (8γ²α²t²)`.
pub fn simultaneous_precision_z_closed_form(point: &SpinHalfPoint, eta: f64) -> Result<f64> {
    let g2 = coarsening_gamma(eta)?.powi(2);
    let t2 = point.tanh_half_delta.powi(2);
    let a2 = point.alpha * point.alpha;
    let num = 4.0 * a2
        + t2
        + (4.0 * a2 - (2.0 * t2 - 1.0) * t2) * g2
        + (t2 - 4.0 * a2) * (g2 - 1.0) * (2.0 * point.theta).cos();
    let den = 8.0 * g2 * a2 * t2;
    Ok(if den == 0.0 { f64::INFINITY } else { num / den })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fig1_point() -> SpinHalfPoint {
        SpinHalfPoint::new((1.0f64 / 3.0).sqrt(), 1.0, PI / 3.0).unwrap()
    }

    #[test]
    fn consistency_point_values() {
        let p = fig1_point();
        let f = qfi_coarsened_reduced(Axis::Z, &p, 0.0).unwrap();
        assert!((f.simultaneous_precision() - 19.0 / 6.0).abs() < 1e-12);
        assert!((f.independent_precision() - 19.0 / 3.0).abs() < 1e-12);
        assert!(
            (simultaneous_precision_z_closed_form(&p, 0.0).unwrap() - 19.0 / 6.0).abs() < 1e-12
        );
    }

    #[test]
    fn y_axis_is_diagonal() {
        for eta in [0.0, 0.4, 1.7] {
            let f = qfi_coarsened_reduced(Axis::Y, &fig1_point(), eta).unwrap();
            assert_eq!(f.get(0, 1), 0.0);
        }
    }

    #[test]
    fn closed_form_matches_matrix_inverse_for_all_eta() {
        let p = SpinHalfPoint::new(0.45, 0.7, 1.2).unwrap();
        for eta in [0.0, 0.3, 0.9, 1.6, 2.4] {
            let f = qfi_coarsened_reduced(Axis::Z, &p, eta).unwrap();
            let closed = simultaneous_precision_z_closed_form(&p, eta).unwrap();
            assert!((f.simultaneous_precision() - closed).abs() < 1e-10 * closed);
        }
    }

    #[test]
    fn other_spins_unsupported() {
        let params = FieldParams::from_delta(0.3, 1.0).unwrap();
        let err = qfi_coarsened_analytic(Spin::from_twice(2), Axis::Z, &params, 0.5).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn identity_chart_bound() {
        let delta = 1.3;
        let bound = crbound_general(Spin::HALF, delta, &ParamChart::identity()).unwrap();
        let m = moments(Spin::HALF, delta);
        let t = (delta / 2.0).tanh();
        let quantum = 1.0 / (4.0 * t * t * m.mx2);
        let classical = 1.0 / m.variance_z();
        assert!(quantum > 0.0 && classical > 0.0);
        assert!((bound - (quantum + classical)).abs() < 1e-12);
    }

    #[test]
    fn collinear_chart_is_infinite() {
        let temp = 0.8;
        let chart = ParamChart::from_partials(&[[1.0, 1.0 / temp], [1.0, 1.0 / temp]]).unwrap();
        assert_eq!(
            crbound_general(Spin::HALF, 1.0, &chart).unwrap(),
            f64::INFINITY
        );
        assert!(crbound_general(
            Spin::HALF,
            1.0,
            &ParamChart::from_partials(&[[1.0, 0.0]; 3]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn ranks() {
        let generic = ParamChart::from_partials(&[[1.0, 0.2], [0.3, -1.0], [0.7, 0.5]]).unwrap();
        assert_eq!(multiparam_rank_check(Spin::from_twice(3), 0.9, &generic), 2);
        let repeated = ParamChart::from_partials(&[[0.4, 0.9]; 3]).unwrap();
        assert_eq!(
            multiparam_rank_check(Spin::from_twice(3), 0.9, &repeated),
            1
        );
        assert_eq!(
            multiparam_rank_check(Spin::HALF, 0.9, &ParamChart::identity()),
            2
        );
    }
}
