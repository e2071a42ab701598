//! Spin operators, rotations and Gibbs states of a spin in a static field.
//!
//! Basis vectors are ordered by descending magnetic quantum number:
//! index `k` carries `m = S − k`, so `sz = diag(S, S−1, …, −S)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMatrix, I};
use crate::{Error, Result};

/// Default cap on the Hilbert-space dimension `2S+1`.
pub const DEFAULT_DIM_CAP: usize = 64;

/// Below this |δ| the moments switch to their δ → 0 series.
const SMALL_DELTA: f64 = 1e-6;

/// Spin quantum number, stored as `2S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };

    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "spin {s} is not a non-negative half-integer"
            )));
        }
        Ok(Spin {
            twice: twice.round() as u32,
        })
    }

    pub fn from_twice(twice: u32) -> Self {
        Spin { twice }
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// `S(S+1)`.
    pub fn casimir(self) -> f64 {
        let s = self.value();
        s * (s + 1.0)
    }

    /// Magnetic quantum numbers in basis order, `S, S−1, …, −S`.
    pub fn magnetic_numbers(self) -> impl Iterator<Item = f64> {
        let s = self.value();
        (0..self.dim()).map(move |k| s - k as f64)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for Spin {
    type Err = Error;

    /// Accepts `1.5`, `3/2` or `1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let value = match s.split_once('/') {
            Some((num, den)) => {
                let num: f64 = num
                    .trim()
                    .parse()
                    .map_err(|_| Error::domain(format!("bad spin {s:?}")))?;
                let den: f64 = den
                    .trim()
                    .parse()
                    .map_err(|_| Error::domain(format!("bad spin {s:?}")))?;
                num / den
            }
            None => s
                .parse()
                .map_err(|_| Error::domain(format!("bad spin {s:?}")))?,
        };
        Spin::new(value)
    }
}

/// Cartesian axis selector for spin components and rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::domain(format!(
                "unknown axis {other:?}, expected x, y or z"
            ))),
        }
    }
}

/// Spin-`S` operator triple in the `sz` eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    pub spin: Spin,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

impl SpinSystem {
    pub fn new(spin: Spin) -> Result<Self> {
        Self::with_cap(spin, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(spin: Spin, cap: usize) -> Result<Self> {
        let dim = spin.dim();
        if dim > cap {
            return Err(Error::Capacity { dim, cap });
        }
        let casimir = spin.casimir();
        let ms: Vec<f64> = spin.magnetic_numbers().collect();

        // S+ |m⟩ = sqrt(S(S+1) − m(m+1)) |m+1⟩, and |m+1⟩ sits one index up.
        let mut raise = CMatrix::zeros(dim, dim);
        for k in 1..dim {
            let m = ms[k];
            raise[(k - 1, k)] = c((casimir - m * (m + 1.0)).sqrt());
        }
        let lower = raise.adjoint();
        let sx = (&raise + &lower).scale(0.5);
        let sy = (&raise - &lower) * Complex64::new(0.0, -0.5);
        let sz = CMatrix::from_diagonal(&DVector::from_iterator(dim, ms.iter().map(|&m| c(m))));
        Ok(SpinSystem { spin, sx, sy, sz })
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn component(&self, axis: Axis) -> &CMatrix {
        match axis {
            Axis::X => &self.sx,
            Axis::Y => &self.sy,
            Axis::Z => &self.sz,
        }
    }

    /// `exp(−i·angle·S_axis)`.
    pub fn rotation(&self, axis: Axis, angle: f64) -> CMatrix {
        if angle == 0.0 {
            return linalg::identity(self.dim());
        }
        linalg::unitary_exp(self.component(axis), angle)
    }

    pub fn rotation_y(&self, theta: f64) -> CMatrix {
        self.rotation(Axis::Y, theta)
    }
}

/// Build the spin operators for spin `s` with the default dimension cap.
pub fn spin_operators(s: f64) -> Result<SpinSystem> {
    SpinSystem::new(Spin::new(s)?)
}

/// Field orientation θ, intensity ω and bath temperature T (k_B = ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub theta: f64,
    pub omega: f64,
    pub temperature: f64,
}

impl FieldParams {
    pub fn new(theta: f64, omega: f64, temperature: f64) -> Result<Self> {
        if !theta.is_finite() || !omega.is_finite() {
            return Err(Error::domain("theta and omega must be finite"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::domain(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(FieldParams {
            theta,
            omega,
            temperature,
        })
    }

    /// Unit temperature, so that ω = δ.
    pub fn from_delta(theta: f64, delta: f64) -> Result<Self> {
        Self::new(theta, delta, 1.0)
    }

    pub fn delta(&self) -> f64 {
        self.omega / self.temperature
    }

    pub fn tanh_half_delta(&self) -> f64 {
        (self.delta() / 2.0).tanh()
    }

    /// `½·|∂(p₁ − p₂)/∂ω| = sech²(δ/2)/(4T)` for spin ½.
    pub fn alpha(&self) -> f64 {
        let sech = 1.0 / (self.delta() / 2.0).cosh();
        sech * sech / (4.0 * self.temperature)
    }

    pub fn with_theta(self, theta: f64) -> Self {
        FieldParams { theta, ..self }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        FieldParams { omega, ..self }
    }
}

/// Gibbs state `Σ_M e^{−δM}/Z |M_Z⟩⟨M_Z|` with `|M_Z⟩ = e^{−iS_yθ}|M⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSpinState {
    pub rho: CMatrix,
    pub partition: f64,
    /// Boltzmann weights in basis order (`m = S, S−1, …`).
    pub populations: Vec<f64>,
    /// The frame rotation `e^{−iS_yθ}`.
    pub frame: CMatrix,
}

fn boltzmann(spin: Spin, delta: f64) -> (Vec<f64>, f64) {
    let exponents: Vec<f64> = spin.magnetic_numbers().map(|m| -delta * m).collect();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|e| (e - shift).exp()).collect();
    let sum: f64 = weights.iter().sum();
    let populations = weights.iter().map(|w| w / sum).collect();
    (populations, sum * shift.exp())
}

pub fn thermal_state(sys: &SpinSystem, params: &FieldParams) -> ThermalSpinState {
    let (populations, partition) = boltzmann(sys.spin, params.delta());
    let frame = sys.rotation_y(params.theta);
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        sys.dim(),
        populations.iter().map(|&p| c(p)),
    ));
    let rho = linalg::conjugate(&frame, &diag);
    ThermalSpinState {
        rho,
        partition,
        populations,
        frame,
    }
}

impl ThermalSpinState {
    /// Frame-rotated operator `U·S_axis·U†`, i.e. S_X, S_Y, S_Z of the field frame.
    pub fn frame_component(&self, sys: &SpinSystem, axis: Axis) -> CMatrix {
        linalg::conjugate(&self.frame, sys.component(axis))
    }
}

/// Exact derivatives `[∂ρ/∂θ, ∂ρ/∂ω]` of the Gibbs state.
pub fn thermal_derivatives(sys: &SpinSystem, params: &FieldParams) -> [CMatrix; 2] {
    let state = thermal_state(sys, params);
    // θ enters only through e^{−iS_yθ}, and S_y commutes with it.
    let d_theta = linalg::commutator(&sys.sy, &state.rho) * (-I);
    let mean_m: f64 = sys
        .spin
        .magnetic_numbers()
        .zip(&state.populations)
        .map(|(m, p)| m * p)
        .sum();
    let d_pops = DVector::from_iterator(
        sys.dim(),
        sys.spin
            .magnetic_numbers()
            .zip(&state.populations)
            .map(|(m, &p)| c(p * (mean_m - m) / params.temperature)),
    );
    let d_omega = linalg::conjugate(&state.frame, &CMatrix::from_diagonal(&d_pops));
    [d_theta, d_omega]
}

/// Thermal expectations of the field-frame spin components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// ⟨S_Z⟩
    pub mz: f64,
    /// ⟨S_Z²⟩
    pub mz2: f64,
    /// ⟨S_X²⟩
    pub mx2: f64,
}

impl Moments {
    pub fn variance_z(&self) -> f64 {
        self.mz2 - self.mz * self.mz
    }
}

/// `(coth x − 1/x)/x`, analytic at 0 with value 1/3.
fn langevin_over_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        1.0 / 3.0
            + x2 * (-1.0 / 45.0
                + x2 * (2.0 / 945.0
                    + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0 - x2 * 1382.0 / 638_512_875.0))))
    } else {
        (1.0 / x.tanh() - 1.0 / x) / x
    }
}

/// Closed-form thermal moments
/// `⟨S_Z⟩ = ½coth(δ/2) − (S+½)coth((S+½)δ)`, `⟨S_Z²⟩ = S(S+1) + coth(δ/2)⟨S_Z⟩`,
/// `⟨S_X²⟩ = (S(S+1) − ⟨S_Z²⟩)/2`.
///
/// The two `1/δ` poles of the coth terms cancel; they are removed analytically
/// by writing `coth x = 1/x + x·g(x)`, so the expressions stay accurate as δ → 0.
pub fn moments(spin: Spin, delta: f64) -> Moments {
    let casimir = spin.casimir();
    if delta.abs() < SMALL_DELTA {
        let mz2 = casimir / 3.0;
        return Moments {
            mz: -delta * casimir / 3.0,
            mz2,
            mx2: (casimir - mz2) / 2.0,
        };
    }
    let a = spin.value() + 0.5;
    let half = delta / 2.0;
    let g_half = langevin_over_x(half);
    let g_a = langevin_over_x(a * delta);
    // ½·L(δ/2) − a·L(aδ) with L(x) = x·g(x)
    let mz = 0.5 * half * g_half - a * a * delta * g_a;
    // coth(δ/2)·⟨S_Z⟩ = (2/δ)⟨S_Z⟩ + L(δ/2)⟨S_Z⟩
    let two_over_delta_mz = 0.5 * g_half - 2.0 * a * a * g_a;
    let mz2 = casimir + two_over_delta_mz + half * g_half * mz;
    Moments {
        mz,
        mz2,
        mx2: (casimir - mz2) / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use std::f64::consts::PI;

    fn direct_moments(spin: Spin, delta: f64) -> (f64, f64) {
        let (pops, _) = boltzmann(spin, delta);
        let mz = spin.magnetic_numbers().zip(&pops).map(|(m, p)| m * p).sum();
        let mz2 = spin
            .magnetic_numbers()
            .zip(&pops)
            .map(|(m, p)| m * m * p)
            .sum();
        (mz, mz2)
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let sys = spin_operators(0.5).unwrap();
        let half = c(0.5);
        assert_eq!(
            sys.sx,
            CMatrix::from_row_slice(2, 2, &[c(0.0), half, half, c(0.0)])
        );
        assert_eq!(
            sys.sy,
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    c(0.0),
                    Complex64::new(0.0, -0.5),
                    Complex64::new(0.0, 0.5),
                    c(0.0)
                ]
            )
        );
        assert_eq!(
            sys.sz,
            CMatrix::from_row_slice(2, 2, &[half, c(0.0), c(0.0), -half])
        );
    }

    #[test]
    fn spin_one_ladder_elements() {
        let sys = spin_operators(1.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sys.sx[(0, 1)].re - r).abs() < 1e-15);
        assert!((sys.sx[(1, 2)].re - r).abs() < 1e-15);
        assert_eq!(sys.sx[(0, 2)], c(0.0));
        let diag: Vec<f64> = sys.sz.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn algebra_holds_up_to_fifteen_halves() {
        for twice in 0..=15 {
            let sys = SpinSystem::new(Spin::from_twice(twice)).unwrap();
            let comm = linalg::commutator(&sys.sx, &sys.sy) - &sys.sz * I;
            assert!(max_abs(&comm) < 1e-12, "2S={twice}");
            let comm = linalg::commutator(&sys.sy, &sys.sz) - &sys.sx * I;
            assert!(max_abs(&comm) < 1e-12);
            let comm = linalg::commutator(&sys.sz, &sys.sx) - &sys.sy * I;
            assert!(max_abs(&comm) < 1e-12);
            let total = &sys.sx * &sys.sx + &sys.sy * &sys.sy + &sys.sz * &sys.sz;
            let expect = linalg::identity(sys.dim()) * c(sys.spin.casimir());
            assert!(max_abs(&(total - expect)) < 1e-12);
        }
    }

    #[test]
    fn bad_spins_are_rejected() {
        assert!(matches!(Spin::new(0.3), Err(Error::Domain(_))));
        assert!(matches!(Spin::new(-0.5), Err(Error::Domain(_))));
        assert!(matches!(
            SpinSystem::new(Spin::new(40.0).unwrap()),
            Err(Error::Capacity { dim: 81, cap: 64 })
        ));
        assert!(SpinSystem::with_cap(Spin::new(40.0).unwrap(), 100).is_ok());
    }

    #[test]
    fn spin_parses_fractions() {
        assert_eq!("3/2".parse::<Spin>().unwrap(), Spin::from_twice(3));
        assert_eq!("1".parse::<Spin>().unwrap(), Spin::from_twice(2));
        assert_eq!(Spin::from_twice(3).to_string(), "3/2");
        assert!("1/3".parse::<Spin>().is_err());
    }

    #[test]
    fn rotation_special_values() {
        let sys = spin_operators(0.5).unwrap();
        assert_eq!(sys.rotation_y(0.0), linalg::identity(2));
        let u = sys.rotation_y(PI);
        let expect = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        assert!(max_abs(&(u - expect)) < 1e-14);
    }

    #[test]
    fn thermal_state_limits() {
        for twice in [1, 2, 3] {
            let sys = SpinSystem::new(Spin::from_twice(twice)).unwrap();
            let state = thermal_state(&sys, &FieldParams::from_delta(0.8, 0.0).unwrap());
            let flat = linalg::identity(sys.dim()) * c(1.0 / sys.dim() as f64);
            assert!(max_abs(&(state.rho - flat)) < 1e-14);
        }
        let sys = spin_operators(0.5).unwrap();
        let state = thermal_state(&sys, &FieldParams::from_delta(0.0, 1.0).unwrap());
        let z = (-0.5f64).exp() + 0.5f64.exp();
        assert!((state.rho[(0, 0)].re - (-0.5f64).exp() / z).abs() < 1e-15);
        assert!((state.rho[(1, 1)].re - 0.5f64.exp() / z).abs() < 1e-15);
        assert!((state.partition - z).abs() < 1e-14);
    }

    #[test]
    fn populations_increase_toward_ground_state() {
        let sys = spin_operators(2.0).unwrap();
        let state = thermal_state(&sys, &FieldParams::new(0.3, 1.2, 2.0).unwrap());
        // index k has m = S − k, so for δ > 0 later indices are more populated
        for w in state.populations.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!((state.populations.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let m = moments(Spin::HALF, 2.0);
        assert!((m.mz + 1f64.tanh() / 2.0).abs() < 1e-15);
        assert!((m.mz + 0.380797).abs() < 1e-6);
        for twice in [1, 2, 5, 15] {
            let spin = Spin::from_twice(twice);
            assert!((moments(spin, 50.0).mz + spin.value()).abs() < 1e-10);
        }
        let (mz, mz2) = direct_moments(Spin::from_twice(2), 1.0);
        let m = moments(Spin::from_twice(2), 1.0);
        assert!((m.mz - mz).abs() < 1e-12);
        assert!((m.mz2 - mz2).abs() < 1e-12);
    }

    #[test]
    fn moments_near_zero_delta() {
        for twice in [1, 2, 3, 8] {
            let spin = Spin::from_twice(twice);
            let m = moments(spin, 1e-8);
            assert!(m.mz.abs() < 1e-6);
            assert!((m.mz2 - spin.casimir() / 3.0).abs() < 1e-6);
            let m0 = moments(spin, 0.0);
            assert_eq!(m0.mz, 0.0);
            assert!(m0.mz2.is_finite());
        }
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let sys = spin_operators(1.5).unwrap();
        let p = FieldParams::new(0.9, 0.7, 0.6).unwrap();
        let [dth, dom] = thermal_derivatives(&sys, &p);
        let h = 1e-5;
        let fd_th = (thermal_state(&sys, &p.with_theta(p.theta + h)).rho
            - thermal_state(&sys, &p.with_theta(p.theta - h)).rho)
            / c(2.0 * h);
        let fd_om = (thermal_state(&sys, &p.with_omega(p.omega + h)).rho
            - thermal_state(&sys, &p.with_omega(p.omega - h)).rho)
            / c(2.0 * h);
        assert!(max_abs(&(dth - fd_th)) < 1e-7);
        assert!(max_abs(&(dom - fd_om)) < 1e-7);
    }
}
