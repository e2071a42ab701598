//! POVMs, outcome statistics, classical Fisher information and
//! maximum-likelihood fitting of sampled outcome counts.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::coarsen::BlochTangent;
use crate::fisher::FisherMatrix;
use crate::linalg::{self, c, CMatrix};
use crate::{Error, Result};

/// Identifier recorded next to every sampled histogram.
pub const PRNG_ID: &str =
    "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = replication index";

/// Outcomes with probability below this are left out of the CFI sum.
pub const MIN_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::domain("a POVM needs at least one effect"))?;
        let dim = linalg::ensure_square(first)?;
        let mut total = CMatrix::zeros(dim, dim);
        for (k, e) in effects.iter().enumerate() {
            linalg::ensure_dim(e, dim)?;
            linalg::ensure_hermitian(e, &format!("effect {k}"))?;
            let (ev, _) = linalg::hermitian_eigen(e);
            if ev[0] < -1e-12 {
                return Err(Error::domain(format!(
                    "effect {k} has negative eigenvalue {}",
                    ev[0]
                )));
            }
            total += e;
        }
        if linalg::max_abs(&(total - linalg::identity(dim))) > 1e-12 {
            return Err(Error::domain("effects do not sum to the identity"));
        }
        Ok(Povm { effects })
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }
}

/// `Π₁ = ½|0⟩⟨0|`, `Π₂ = ¼(|0⟩+|1⟩)(⟨0|+⟨1|)`, `Π₃ = I − Π₁ − Π₂`.
pub fn standard_povm() -> Povm {
    let p1 = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.0)]);
    let p2 = CMatrix::from_element(2, 2, c(0.25));
    let p3 = linalg::identity(2) - &p1 - &p2;
    Povm::new(vec![p1, p2, p3]).expect("standard POVM is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Accepts entries down to −1e-14 and a total within 1e-10 of one, then
    /// clamps and renormalises.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("empty distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -1e-14) {
            return Err(Error::domain(format!("invalid probabilities {probs:?}")));
        }
        let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("probabilities sum to {total}")));
        }
        Ok(OutcomeDistribution {
            probs: probs.into_iter().map(|p| p.max(0.0) / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `P_k = tr(Π_k·ρ)`.
pub fn probabilities(povm: &Povm, rho: &CMatrix) -> Result<OutcomeDistribution> {
    linalg::ensure_dim(rho, povm.dim())?;
    let probs = povm
        .effects
        .iter()
        .map(|e| linalg::trace(&(e * rho)).re)
        .collect();
    OutcomeDistribution::new(probs)
}

/// `F_ij = Σ_k ∂ᵢP_k·∂ⱼP_k / P_k`, skipping outcomes with `P_k < 1e-12`.
pub fn cfi_from_derivatives(probs: &[f64], dprobs: &[Vec<f64>]) -> Result<FisherMatrix> {
    let m = dprobs.len();
    for d in dprobs {
        if d.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: probs.len(),
                got: d.len(),
            });
        }
    }
    let mut f = DMatrix::zeros(m, m);
    for (k, &p) in probs.iter().enumerate() {
        if p < MIN_PROBABILITY {
            if dprobs.iter().any(|d| d[k] != 0.0) {
                log::warn!("outcome {k} has probability {p:e}; dropped from the Fisher sum");
            }
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                f[(i, j)] += dprobs[i][k] * dprobs[j][k] / p;
            }
        }
    }
    FisherMatrix::unlabeled(f)
}

/// Classical Fisher information with central-difference derivatives.
pub fn cfi_matrix<F>(family: F, point: &[f64], steps: &[f64]) -> Result<FisherMatrix>
where
    F: Fn(&[f64]) -> Result<OutcomeDistribution>,
{
    if steps.len() != point.len() {
        return Err(Error::DimensionMismatch {
            expected: point.len(),
            got: steps.len(),
        });
    }
    let center = family(point)?;
    let mut probe = point.to_vec();
    let mut dprobs = Vec::with_capacity(point.len());
    for (i, &h) in steps.iter().enumerate() {
        if !(h > 0.0) {
            return Err(Error::domain("finite-difference steps must be positive"));
        }
        probe[i] = point[i] + h;
        let plus = family(&probe)?;
        probe[i] = point[i] - h;
        let minus = family(&probe)?;
        probe[i] = point[i];
        if plus.len() != center.len() || minus.len() != center.len() {
            return Err(Error::domain("outcome count changed across the stencil"));
        }
        dprobs.push(
            plus.probs
                .iter()
                .zip(&minus.probs)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect(),
        );
    }
    cfi_from_derivatives(&center.probs, &dprobs)
}

/// Exact two-level CFI from a Bloch vector and its tangents:
/// `∂P_k = tr(Π_k·(∂r·σ)/2)`.
pub fn spin_half_cfi(povm: &Povm, tangent: &BlochTangent) -> Result<FisherMatrix> {
    if povm.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: povm.dim(),
        });
    }
    let dist = probabilities(povm, &tangent.r.to_density())?;
    let direction = |d: &[f64; 3]| {
        // (d·σ)/2, the traceless part of a Bloch-vector density
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(d[2] / 2.0),
                num_complex::Complex64::new(d[0] / 2.0, -d[1] / 2.0),
                num_complex::Complex64::new(d[0] / 2.0, d[1] / 2.0),
                c(-d[2] / 2.0),
            ],
        )
    };
    let dprobs: Vec<Vec<f64>> = [tangent.d_theta, tangent.d_omega]
        .iter()
        .map(|d| {
            let dm = direction(d);
            povm.effects
                .iter()
                .map(|e| linalg::trace(&(e * &dm)).re)
                .collect()
        })
        .collect();
    Ok(cfi_from_derivatives(&dist.probs, &dprobs)?.with_labels(["theta", "omega"]))
}

/// Outcome counts from `n` draws.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub seed: u64,
    pub stream: u64,
    pub prng: &'static str,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts that did not come from the sampler (fixtures, recorded data).
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Histogram {
            counts,
            seed: 0,
            stream: 0,
            prng: "none",
        }
    }
}

pub fn sample_outcomes(dist: &OutcomeDistribution, n: u64, seed: u64) -> Result<Histogram> {
    sample_outcomes_stream(dist, n, seed, 0)
}

/// Multinomial draw via sequential conditional binomials on an independent
/// ChaCha20 stream.
pub fn sample_outcomes_stream(
    dist: &OutcomeDistribution,
    n: u64,
    seed: u64,
    stream: u64,
) -> Result<Histogram> {
    if n == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let k = dist.len();
    let mut counts = vec![0u64; k];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &p) in dist.probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == k - 1 {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::domain(format!("binomial({remaining}, {q}): {e}")))?
            .sample(&mut rng);
        counts[i] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(Histogram {
        counts,
        seed,
        stream,
        prng: PRNG_ID,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleConfig {
    pub theta_range: (f64, f64),
    pub omega_range: (f64, f64),
    pub grid_points: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl MleConfig {
    pub fn new(theta_range: (f64, f64), omega_range: (f64, f64)) -> Self {
        MleConfig {
            theta_range,
            omega_range,
            grid_points: 41,
            max_iter: 100,
            grad_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleResult {
    pub theta_hat: f64,
    pub omega_hat: f64,
    /// `Σ_k n_k ln P_k` at the estimate.
    pub loglik: f64,
    pub counts: Vec<u64>,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    /// False when the observed information at the estimate is singular.
    pub identifiable: bool,
}

struct Likelihood<'a, F> {
    model: &'a F,
    freqs: Vec<f64>,
}

impl<F> Likelihood<'_, F>
where
    F: Fn(&[f64]) -> Result<OutcomeDistribution>,
{
    fn probs(&self, x: [f64; 2]) -> Option<Vec<f64>> {
        self.model(&x).ok().map(|d| d.probs)
    }

    fn model(&self, x: &[f64]) -> Result<OutcomeDistribution> {
        (self.model)(x)
    }

    /// Mean log-likelihood per sample.
    fn value(&self, x: [f64; 2]) -> f64 {
        let Some(p) = self.probs(x) else {
            return f64::NEG_INFINITY;
        };
        if p.len() != self.freqs.len() {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for (f, p) in self.freqs.iter().zip(&p) {
            if *f > 0.0 {
                if *p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += f * p.ln();
            }
        }
        total
    }

    /// Gradient, Hessian and expected information of the mean log-likelihood.
    fn derivatives(
        &self,
        x: [f64; 2],
        steps: [f64; 2],
    ) -> Option<(Vector2<f64>, Matrix2<f64>, Matrix2<f64>)> {
        let shifted = |dx: [f64; 2]| self.probs([x[0] + dx[0], x[1] + dx[1]]);
        let p0 = shifted([0.0, 0.0])?;
        let fine = [steps[0] * 1e-2, steps[1] * 1e-2];
        let mut d1 = [vec![], vec![]];
        let mut d2 = [[vec![], vec![]], [vec![], vec![]]];
        for i in 0..2 {
            let mut e = [0.0; 2];
            e[i] = fine[i];
            let plus = shifted(e)?;
            let minus = shifted([-e[0], -e[1]])?;
            d1[i] = plus
                .iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / (2.0 * fine[i]))
                .collect();
            let mut e = [0.0; 2];
            e[i] = steps[i];
            let plus = shifted(e)?;
            let minus = shifted([-e[0], -e[1]])?;
            d2[i][i] = (0..p0.len())
                .map(|k| (plus[k] - 2.0 * p0[k] + minus[k]) / (steps[i] * steps[i]))
                .collect();
        }
        let (h0, h1) = (steps[0], steps[1]);
        let pp = shifted([h0, h1])?;
        let pm = shifted([h0, -h1])?;
        let mp = shifted([-h0, h1])?;
        let mm = shifted([-h0, -h1])?;
        let mixed: Vec<f64> = (0..p0.len())
            .map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h0 * h1))
            .collect();
        d2[0][1] = mixed.clone();
        d2[1][0] = mixed;

        let mut grad = Vector2::zeros();
        let mut hess = Matrix2::zeros();
        let mut info = Matrix2::zeros();
        for (k, &f) in self.freqs.iter().enumerate() {
            let p = p0[k];
            if p < MIN_PROBABILITY {
                continue;
            }
            for i in 0..2 {
                grad[i] += f * d1[i][k] / p;
                for j in 0..2 {
                    hess[(i, j)] += f * (d2[i][j][k] / p - d1[i][k] * d1[j][k] / (p * p));
                    info[(i, j)] += d1[i][k] * d1[j][k] / p;
                }
            }
        }
        Some((grad, hess, info))
    }
}

fn is_negative_definite(h: &Matrix2<f64>) -> bool {
    h[(0, 0)] < 0.0 && h.determinant() > 0.0
}

/// Maximise the multinomial likelihood of `counts` over (θ, ω): a coarse grid
/// over the configured ranges, then damped Newton steps.
pub fn mle_fit<F>(counts: &Histogram, model: F, config: &MleConfig) -> Result<MleResult>
where
    F: Fn(&[f64]) -> Result<OutcomeDistribution>,
{
    let total = counts.total();
    if total == 0 {
        return Err(Error::domain("histogram is empty"));
    }
    if config.grid_points < 2 {
        return Err(Error::domain("grid needs at least two points per axis"));
    }
    let lik = Likelihood {
        model: &model,
        freqs: counts
            .counts
            .iter()
            .map(|&n| n as f64 / total as f64)
            .collect(),
    };

    let axis = |(lo, hi): (f64, f64), i: usize| {
        lo + (hi - lo) * i as f64 / (config.grid_points - 1) as f64
    };
    let mut best = ([f64::NAN; 2], f64::NEG_INFINITY);
    for i in 0..config.grid_points {
        for j in 0..config.grid_points {
            let x = [axis(config.theta_range, i), axis(config.omega_range, j)];
            let v = lik.value(x);
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    if !best.1.is_finite() {
        return Err(Error::domain("likelihood is -inf on the whole grid"));
    }

    let (mut x, mut value) = best;
    let steps = |x: [f64; 2]| [1e-4, 1e-4 * x[1].abs().max(1e-3)];
    let mut iterations = 0;
    let mut converged = false;
    let mut observed = Matrix2::zeros();
    while iterations < config.max_iter {
        let Some((grad, hess, info)) = lik.derivatives(x, steps(x)) else {
            break;
        };
        observed = -hess;
        if grad.norm() < config.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let system = if is_negative_definite(&hess) {
            -hess
        } else {
            info
        };
        let Some(dir) = system.try_inverse().map(|inv| inv * grad) else {
            break;
        };
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = [x[0] + scale * dir[0], x[1] + scale * dir[1]];
            let inside = cand[0] > 0.0 && cand[0] < std::f64::consts::PI && cand[1] > 0.0;
            if inside {
                let v = lik.value(cand);
                if v >= value {
                    moved = (cand[0] - x[0]).abs() > 1e-14 * x[0].abs() || (cand[1] - x[1]).abs() > 1e-14 * x[1].abs();
                    x = cand;
                    value = v;
                    break;
                }
            }
            scale /= 2.0;
        }
        if !moved {
            // no ascent direction left (or the step is below rounding)
            converged = grad.norm() < 1e3 * config.grad_tol;
            break;
        }
    }
    let ev = observed.symmetric_eigen().eigenvalues;
    let (lo, hi) = (ev.min(), ev.max());
    let identifiable = hi > 0.0 && lo / hi >= crate::fisher::SINGULAR_RATIO;
    Ok(MleResult {
        theta_hat: x[0],
        omega_hat: x[1],
        loglik: value * total as f64,
        counts: counts.counts.clone(),
        seed: counts.seed,
        iterations,
        converged,
        identifiable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_povm_structure() {
        let povm = standard_povm();
        let sum = povm
            .effects()
            .iter()
            .fold(CMatrix::zeros(2, 2), |acc, e| acc + e);
        assert_eq!(sum, linalg::identity(2));
        let p3 = &povm.effects()[2];
        let expect = CMatrix::from_row_slice(2, 2, &[c(0.25), c(-0.25), c(-0.25), c(0.75)]);
        assert_eq!(*p3, expect);
        let det = p3.determinant().re;
        assert!((det - 0.125).abs() < 1e-15);
        let traces: Vec<f64> = povm.effects().iter().map(|e| linalg::trace(e).re).collect();
        assert_eq!(traces, vec![0.5, 0.5, 1.0]);
    }

    #[test]
    fn invalid_povms_rejected() {
        let half = linalg::identity(2).unscale(2.0);
        assert!(Povm::new(vec![half.clone()]).is_err());
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(0.5)]);
        let pos = linalg::identity(2) - &neg;
        assert!(Povm::new(vec![neg, pos]).is_err());
        assert!(Povm::new(vec![]).is_err());
    }

    #[test]
    fn maximally_mixed_probabilities() {
        let dist = probabilities(&standard_povm(), &linalg::identity(2).unscale(2.0)).unwrap();
        assert_eq!(dist.probs(), &[0.25, 0.25, 0.5]);
        assert!(probabilities(&standard_povm(), &linalg::identity(3)).is_err());
    }

    #[test]
    fn degenerate_and_deterministic_sampling() {
        let dist = OutcomeDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            sample_outcomes(&dist, 1000, 7).unwrap().counts,
            vec![1000, 0, 0]
        );
        let dist = OutcomeDistribution::new(vec![0.25, 0.25, 0.5]).unwrap();
        let a = sample_outcomes(&dist, 10_000, 99).unwrap();
        let b = sample_outcomes(&dist, 10_000, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 10_000);
        let c = sample_outcomes_stream(&dist, 10_000, 99, 1).unwrap();
        assert_ne!(a.counts, c.counts);
        assert!(sample_outcomes(&dist, 0, 1).is_err());
    }

    #[test]
    fn sampling_concentrates() {
        let probs = [0.25, 0.25, 0.5];
        let dist = OutcomeDistribution::new(probs.to_vec()).unwrap();
        let n = 1_000_000u64;
        let h = sample_outcomes(&dist, n, 2024).unwrap();
        for (k, &p) in probs.iter().enumerate() {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let freq = h.counts[k] as f64 / n as f64;
            assert!((freq - p).abs() < 4.0 * sigma, "outcome {k}: {freq}");
        }
    }

    #[test]
    fn parameter_free_family_has_zero_cfi() {
        let f = cfi_matrix(
            |_| OutcomeDistribution::new(vec![0.2, 0.8]),
            &[0.1, 0.2],
            &[1e-5, 1e-5],
        )
        .unwrap();
        assert_eq!(f.entries().amax(), 0.0);
    }

    #[test]
    fn distribution_validation() {
        assert!(OutcomeDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(OutcomeDistribution::new(vec![-0.1, 1.1]).is_err());
        let d = OutcomeDistribution::new(vec![-1e-15, 1.0]).unwrap();
        assert_eq!(d.probs()[0], 0.0);
    }
}
