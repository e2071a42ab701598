//! Fisher information matrices and the precision functionals built on them.

mod analytic;
mod qfi;
mod sld;

use crate::linalg;
use crate::{Error, Result};
use nalgebra::DMatrix;

pub use analytic::{
    crbound_general, multiparam_rank_check, qfi_coarsened_analytic, qfi_coarsened_reduced,
    simultaneous_precision_z_closed_form, thermal_qfi, thermal_qfi_in_chart,
};
pub use qfi::{qfi_bloch, qfi_from_derivatives, qfi_spectral, theta_omega_steps, SUPPORT_CUTOFF};
pub use sld::{sld_analytic, sld_spectral, weak_commutativity, SldOperator};

/// Smallest-to-largest eigenvalue ratio below which information is singular.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Central-difference step used by the spectral oracle for angles.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Real symmetric information matrix with ordered parameter labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    entries: DMatrix<f64>,
    labels: Vec<String>,
}

fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("lambda{i}")).collect()
}

impl FisherMatrix {
    /// Symmetrises `entries`; rejects matrices whose asymmetry exceeds 1e-10
    /// relative to their largest entry.
    pub fn new(entries: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::domain("Fisher matrix must be square"));
        }
        if labels.len() != entries.nrows() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: labels.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("Fisher matrix has non-finite entries"));
        }
        let scale = entries.amax().max(1.0);
        let asym = (&entries - entries.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::domain(format!(
                "Fisher matrix asymmetric by {asym:e}"
            )));
        }
        let entries = (&entries + entries.transpose()).scale(0.5);
        Ok(FisherMatrix { entries, labels })
    }

    pub fn unlabeled(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        Self::new(entries, default_labels(n))
    }

    pub fn from_2x2(f11: f64, f12: f64, f22: f64) -> Self {
        FisherMatrix {
            entries: DMatrix::from_row_slice(2, 2, &[f11, f12, f12, f22]),
            labels: vec!["theta".into(), "omega".into()],
        }
    }

    pub fn zeros(n: usize) -> Self {
        FisherMatrix {
            entries: DMatrix::zeros(n, n),
            labels: default_labels(n),
        }
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        assert_eq!(
            labels.len(),
            self.dim(),
            "label count must match matrix size"
        );
        self.labels = labels;
        self
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::symmetric_eigenvalues(&self.entries)
    }

    /// `λ_min / λ_max`, or 0 for a matrix with no positive eigenvalue.
    pub fn condition_ratio(&self) -> f64 {
        let ev = self.eigenvalues();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if hi <= 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    pub fn is_singular(&self) -> bool {
        self.condition_ratio() < SINGULAR_RATIO
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues()[0] >= -tol
    }

    /// `tr F⁻¹`: the summed variance bound when all parameters are estimated
    /// from the same probes. `+∞` when the information is singular.
    pub fn simultaneous_precision(&self) -> f64 {
        if self.is_singular() {
            return f64::INFINITY;
        }
        match self.entries.clone().try_inverse() {
            Some(inv) => inv.trace(),
            None => f64::INFINITY,
        }
    }

    /// `m·Σ 1/F_ii`: the probes are split evenly over `m` separate single-parameter
    /// experiments. For two parameters this is `2(1/F₁₁ + 1/F₂₂)`.
    pub fn independent_precision(&self) -> f64 {
        let m = self.dim() as f64;
        let mut sum = 0.0;
        for i in 0..self.dim() {
            let d = self.entries[(i, i)];
            if d <= 0.0 {
                return f64::INFINITY;
            }
            sum += 1.0 / d;
        }
        m * sum
    }

    /// Numerical rank with a threshold relative to the largest eigenvalue.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let ev = self.eigenvalues();
        let hi = ev.iter().copied().fold(0.0, f64::max);
        if hi <= 0.0 {
            return 0;
        }
        ev.iter().filter(|&&v| v > rel_tol * hi).count()
    }

    /// `self − other`, keeping this matrix's labels.
    pub fn difference(&self, other: &FisherMatrix) -> Result<FisherMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(FisherMatrix {
            entries: &self.entries - &other.entries,
            labels: self.labels.clone(),
        })
    }

    /// Largest entrywise deviation relative to `max(1, |other|_max)`.
    pub fn max_rel_diff(&self, other: &FisherMatrix) -> f64 {
        let scale = other.entries.amax().max(1.0);
        (&self.entries - &other.entries).amax() / scale
    }
}

pub fn simultaneous_precision(f: &FisherMatrix) -> f64 {
    f.simultaneous_precision()
}

pub fn independent_precision(f: &FisherMatrix) -> f64 {
    f.independent_precision()
}

/// Jacobian of a parametrisation `λ ↦ (θ, δ)` at a point. Column `i` holds
/// `(∂θ/∂λᵢ, ∂δ/∂λᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamChart {
    jacobian: DMatrix<f64>,
    labels: Vec<String>,
}

/// Below this |det J| a two-parameter chart cannot separate its parameters.
pub const CHART_SINGULAR_DET: f64 = 1e-12;

impl ParamChart {
    /// One `(∂θ/∂λᵢ, ∂δ/∂λᵢ)` pair per parameter.
    pub fn from_partials(partials: &[[f64; 2]]) -> Result<Self> {
        if partials.is_empty() {
            return Err(Error::domain("a chart needs at least one parameter"));
        }
        if partials.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain("chart jacobian has non-finite entries"));
        }
        let m = partials.len();
        let jacobian = DMatrix::from_fn(2, m, |r, col| partials[col][r]);
        Ok(ParamChart {
            jacobian,
            labels: default_labels(m),
        })
    }

    /// `λ₁ = θ`, `λ₂ = δ`.
    pub fn identity() -> Self {
        ParamChart::from_partials(&[[1.0, 0.0], [0.0, 1.0]])
            .expect("finite")
            .with_labels(["theta", "delta"])
    }

    /// `λ₁ = θ`, `λ₂ = ω` at temperature `T`, so `∂δ/∂ω = 1/T`.
    pub fn theta_omega(temperature: f64) -> Result<Self> {
        Ok(
            ParamChart::from_partials(&[[1.0, 0.0], [0.0, 1.0 / temperature]])?
                .with_labels(["theta", "omega"]),
        )
    }

    /// Central-difference Jacobian of `map` at `point`.
    pub fn from_map<F>(map: F, point: &[f64], step: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> (f64, f64),
    {
        if !(step > 0.0) {
            return Err(Error::domain("step must be positive"));
        }
        let mut partials = Vec::with_capacity(point.len());
        let mut probe = point.to_vec();
        for i in 0..point.len() {
            probe[i] = point[i] + step;
            let (tp, dp) = map(&probe);
            probe[i] = point[i] - step;
            let (tm, dm) = map(&probe);
            probe[i] = point[i];
            partials.push([(tp - tm) / (2.0 * step), (dp - dm) / (2.0 * step)]);
        }
        Self::from_partials(&partials)
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        assert_eq!(
            labels.len(),
            self.n_params(),
            "label count must match parameter count"
        );
        self.labels = labels;
        self
    }

    pub fn n_params(&self) -> usize {
        self.jacobian.ncols()
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `∂θ/∂λᵢ`
    pub fn d_theta(&self, i: usize) -> f64 {
        self.jacobian[(0, i)]
    }

    /// `∂δ/∂λᵢ`
    pub fn d_delta(&self, i: usize) -> f64 {
        self.jacobian[(1, i)]
    }

    /// `∂θ/∂λ₂·∂δ/∂λ₁ − ∂θ/∂λ₁·∂δ/∂λ₂`; `None` unless there are exactly two parameters.
    pub fn determinant(&self) -> Option<f64> {
        (self.n_params() == 2)
            .then(|| self.d_theta(1) * self.d_delta(0) - self.d_theta(0) * self.d_delta(1))
    }

    pub fn is_singular(&self) -> bool {
        self.determinant()
            .is_some_and(|d| d.abs() < CHART_SINGULAR_DET)
    }
}
