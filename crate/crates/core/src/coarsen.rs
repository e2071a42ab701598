//! Coarsened measurement reference: the measurement frame jitters about a
//! fixed axis by a Gaussian-distributed angle of spread η.
//!
//! Averaging `e^{−iS_aφ} ρ e^{iS_aφ}` over `φ ~ N(0, η²)` multiplies every
//! coherence between `S_a` eigenvectors with eigenvalues `m, m'` by the
//! Gaussian characteristic function `e^{−η²(m−m')²/2}`. For spin ½ that is
//! `γ = e^{−η²/2}` on the Bloch components perpendicular to the axis.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMatrix};
use crate::spin::{thermal_derivatives, thermal_state, FieldParams, SpinSystem};
use crate::{Error, Result};

pub use crate::spin::Axis;

/// `γ = e^{−η²/2}`.
pub fn gamma(eta: f64) -> Result<f64> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!(
            "coarsening degree must be a finite, non-negative number, got {eta}"
        )));
    }
    Ok((-eta * eta / 2.0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseningModel {
    pub axis: Axis,
    pub eta: f64,
}

impl CoarseningModel {
    pub fn new(axis: Axis, eta: f64) -> Result<Self> {
        gamma(eta)?;
        Ok(CoarseningModel { axis, eta })
    }

    pub fn gamma(&self) -> f64 {
        (-self.eta * self.eta / 2.0).exp()
    }

    pub fn is_identity(&self) -> bool {
        self.eta == 0.0
    }
}

/// Element-wise damping `ρ_{mm'} ↦ ρ_{mm'}·e^{−η²(m−m')²/2}` in the `sz` basis.
pub fn dephase_z(rho: &CMatrix, sys: &SpinSystem, eta: f64) -> Result<CMatrix> {
    linalg::ensure_dim(rho, sys.dim())?;
    gamma(eta)?;
    let ms: Vec<f64> = sys.spin.magnetic_numbers().collect();
    let mut out = rho.clone();
    if eta == 0.0 {
        return Ok(out);
    }
    for i in 0..sys.dim() {
        for j in 0..sys.dim() {
            if i != j {
                let k = ms[i] - ms[j];
                out[(i, j)] *= (-eta * eta * k * k / 2.0).exp();
            }
        }
    }
    Ok(out)
}

/// Fixed rotation `R` with `R·sz·R† = S_axis`.
fn axis_frame(sys: &SpinSystem, axis: Axis) -> Option<CMatrix> {
    match axis {
        Axis::Z => None,
        Axis::X => Some(sys.rotation(Axis::Y, FRAC_PI_2)),
        Axis::Y => Some(sys.rotation(Axis::X, -FRAC_PI_2)),
    }
}

/// Gaussian-averaged rotation channel about `model.axis`, exact for any spin.
pub fn coarsen_axis(rho: &CMatrix, sys: &SpinSystem, model: &CoarseningModel) -> Result<CMatrix> {
    match axis_frame(sys, model.axis) {
        None => dephase_z(rho, sys, model.eta),
        Some(frame) => {
            linalg::ensure_dim(rho, sys.dim())?;
            let in_z = frame.adjoint() * rho * &frame;
            let damped = dephase_z(&in_z, sys, model.eta)?;
            Ok(linalg::conjugate(&frame, &damped))
        }
    }
}

/// Two-level Bloch vector, `ρ = (I + r·σ)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub fn from_density(rho: &CMatrix) -> Result<Self> {
        linalg::ensure_dim(rho, 2)?;
        Ok(BlochVector([
            2.0 * rho[(0, 1)].re,
            -2.0 * rho[(0, 1)].im,
            rho[(0, 0)].re - rho[(1, 1)].re,
        ]))
    }

    pub fn to_density(&self) -> CMatrix {
        let [x, y, z] = self.0;
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c((1.0 + z) / 2.0),
                num_complex::Complex64::new(x / 2.0, -y / 2.0),
                num_complex::Complex64::new(x / 2.0, y / 2.0),
                c((1.0 - z) / 2.0),
            ],
        )
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Spin-½ working point in the reduced variables that fix every spin-½
/// result: `t = tanh(δ/2) = p₂ − p₁`, `α = ½·∂t/∂ω` and θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinHalfPoint {
    pub tanh_half_delta: f64,
    pub alpha: f64,
    pub theta: f64,
}

/// Bloch vector of a coarsened spin-½ Gibbs state and its (θ, ω) derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochTangent {
    pub r: BlochVector,
    pub d_theta: [f64; 3],
    pub d_omega: [f64; 3],
}

impl SpinHalfPoint {
    pub fn new(tanh_half_delta: f64, alpha: f64, theta: f64) -> Result<Self> {
        if !(tanh_half_delta.abs() < 1.0) || !alpha.is_finite() || !theta.is_finite() {
            return Err(Error::domain(format!(
                "need |tanh(delta/2)| < 1 and finite alpha, theta (got t={tanh_half_delta}, alpha={alpha})"
            )));
        }
        Ok(SpinHalfPoint {
            tanh_half_delta,
            alpha,
            theta,
        })
    }

    /// From `p₁ = e^{−δ/2}/Z`, the population of `m = +½`.
    pub fn from_p1(p1: f64, alpha: f64, theta: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::domain(format!("p1 must lie in (0, 1), got {p1}")));
        }
        Self::new(1.0 - 2.0 * p1, alpha, theta)
    }

    pub fn from_field(params: &FieldParams) -> Self {
        SpinHalfPoint {
            tanh_half_delta: params.tanh_half_delta(),
            alpha: params.alpha(),
            theta: params.theta,
        }
    }

    /// The unique physical point with this `t` and `α`:
    /// `T = (1 − t²)/(4α)`, `ω = 2·artanh(t)·T`.
    pub fn to_field(&self) -> Result<FieldParams> {
        if !(self.alpha > 0.0) {
            return Err(Error::domain("a physical point needs alpha > 0"));
        }
        let t = self.tanh_half_delta;
        let temperature = (1.0 - t * t) / (4.0 * self.alpha);
        FieldParams::new(self.theta, 2.0 * t.atanh() * temperature, temperature)
    }

    pub fn p1(&self) -> f64 {
        (1.0 - self.tanh_half_delta) / 2.0
    }

    /// Coarsened Bloch vector `r = −t·D·n(θ)` with `n = (sinθ, 0, cosθ)` and `D`
    /// the γ-damping of the components perpendicular to the axis.
    pub fn bloch(&self, axis: Axis, gamma: f64) -> BlochTangent {
        let damp = match axis {
            Axis::X => [1.0, gamma, gamma],
            Axis::Y => [gamma, 1.0, gamma],
            Axis::Z => [gamma, gamma, 1.0],
        };
        let (s, co) = self.theta.sin_cos();
        let n = [s, 0.0, co];
        let dn = [co, 0.0, -s];
        let t = self.tanh_half_delta;
        let scale =
            |k: f64, v: [f64; 3]| [k * damp[0] * v[0], k * damp[1] * v[1], k * damp[2] * v[2]];
        BlochTangent {
            r: BlochVector(scale(-t, n)),
            d_theta: scale(-t, dn),
            d_omega: scale(-2.0 * self.alpha, n),
        }
    }
}

/// Gibbs state followed by the coarsening channel, as a function of (θ, ω)
/// at fixed temperature and fixed jitter.
#[derive(Debug, Clone)]
pub struct CoarsenedFamily {
    pub sys: SpinSystem,
    pub temperature: f64,
    pub model: CoarseningModel,
}

impl CoarsenedFamily {
    pub fn new(sys: SpinSystem, temperature: f64, model: CoarseningModel) -> Result<Self> {
        FieldParams::new(0.0, 0.0, temperature)?;
        Ok(CoarsenedFamily {
            sys,
            temperature,
            model,
        })
    }

    pub fn params(&self, theta: f64, omega: f64) -> Result<FieldParams> {
        FieldParams::new(theta, omega, self.temperature)
    }

    pub fn state(&self, theta: f64, omega: f64) -> Result<CMatrix> {
        let params = self.params(theta, omega)?;
        coarsen_axis(
            &thermal_state(&self.sys, &params).rho,
            &self.sys,
            &self.model,
        )
    }

    /// Evaluate at `point = [θ, ω]`; the shape expected by the spectral QFI.
    pub fn eval(&self, point: &[f64]) -> Result<CMatrix> {
        match point {
            [theta, omega] => self.state(*theta, *omega),
            _ => Err(Error::DimensionMismatch {
                expected: 2,
                got: point.len(),
            }),
        }
    }

    /// State and exact derivatives; the channel is linear and parameter-free,
    /// so it commutes with ∂.
    pub fn state_and_derivatives(&self, theta: f64, omega: f64) -> Result<(CMatrix, [CMatrix; 2])> {
        let params = self.params(theta, omega)?;
        let rho = coarsen_axis(
            &thermal_state(&self.sys, &params).rho,
            &self.sys,
            &self.model,
        )?;
        let [dt, dw] = thermal_derivatives(&self.sys, &params);
        let dt = coarsen_axis(&dt, &self.sys, &self.model)?;
        let dw = coarsen_axis(&dw, &self.sys, &self.model)?;
        Ok((rho, [dt, dw]))
    }
}

/// Family closure over (θ, ω) for a given spin system and coarsening model.
pub fn coarsened_family(
    sys: SpinSystem,
    temperature: f64,
    model: CoarseningModel,
) -> Result<impl Fn(&[f64]) -> Result<CMatrix>> {
    let family = CoarsenedFamily::new(sys, temperature, model)?;
    Ok(move |point: &[f64]| family.eval(point))
}
