//! Reference implementations used only as test oracles.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use spinmetro::CMatrix;

/// `exp(a)` by scaling and squaring with a 30-term Taylor series.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(1.0 / 2f64.powi(squarings as i32));
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(−i·angle·h)` via [`expm`].
pub fn rotation(h: &CMatrix, angle: f64) -> CMatrix {
    expm(&h.map(|z| z * Complex64::new(0.0, -angle)))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Gaussian average over φ ~ N(0, η²) of `e^{−iφh} ρ e^{iφh}` by quadrature
/// on `[−8η, 8η]`.
pub fn gaussian_twirl(rho: &CMatrix, h: &CMatrix, eta: f64, nodes: usize) -> CMatrix {
    if eta == 0.0 {
        return rho.clone();
    }
    let (x, w) = gauss_legendre(nodes);
    let half = 8.0 * eta;
    let norm = 1.0 / (eta * (2.0 * std::f64::consts::PI).sqrt());
    let mut acc = CMatrix::zeros(rho.nrows(), rho.ncols());
    for (xi, wi) in x.iter().zip(&w) {
        let phi = half * xi;
        let density = norm * (-phi * phi / (2.0 * eta * eta)).exp();
        let u = rotation(h, phi);
        acc += (&u * rho * u.adjoint()).scale(wi * half * density);
    }
    acc
}

/// Solve `(ρL + Lρ)/2 = d` by vectorising into an `n² × n²` linear system.
pub fn lyapunov_sld(rho: &CMatrix, d: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let eye = CMatrix::identity(n, n);
    let system = (eye.kronecker(rho) + rho.transpose().kronecker(&eye)).scale(0.5);
    let rhs = DVector::from_iterator(n * n, d.iter().cloned());
    let sol = system.lu().solve(&rhs).expect("full-rank state");
    CMatrix::from_iterator(n, n, sol.iter().cloned())
}

/// QFI matrix entries `Re tr(∂ᵢρ Lⱼ)` from Lyapunov-solved SLDs.
pub fn qfi_lyapunov(rho: &CMatrix, drhos: &[CMatrix]) -> DMatrix<f64> {
    let slds: Vec<CMatrix> = drhos.iter().map(|d| lyapunov_sld(rho, d)).collect();
    let m = drhos.len();
    DMatrix::from_fn(m, m, |i, j| (&drhos[i] * &slds[j]).trace().re)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(a: &DMatrix<f64>) -> f64 {
    a.amax()
}
