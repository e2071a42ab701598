//! Working points, η-sweeps, bound reports and Monte Carlo validation; the
//! computations behind the command-line subcommands.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::coarsen::{gamma, Axis, CoarsenedFamily, CoarseningModel, SpinHalfPoint};
use crate::fisher::{
    qfi_coarsened_reduced, qfi_from_derivatives, qfi_spectral,
    simultaneous_precision_z_closed_form, theta_omega_steps, FisherMatrix,
};
use crate::measurement::{
    cfi_matrix, mle_fit, probabilities, sample_outcomes_stream, spin_half_cfi, MleConfig,
    OutcomeDistribution, Povm, PRNG_ID,
};
use crate::spin::{FieldParams, Spin, SpinSystem};
use crate::{Error, Result};

/// Maximum relative disagreement tolerated between a closed form and its
/// finite-difference oracle before a report is refused.
pub const ORACLE_TOL: f64 = 1e-6;

const LABELS: [&str; 2] = ["theta", "omega"];

/// Where a computation is evaluated: either a physical (S, θ, ω, T) point or
/// the spin-½ reduced variables (t, α, θ) taken as free inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum WorkingPoint {
    Physical { spin: Spin, field: FieldParams },
    Phenomenological(SpinHalfPoint),
}

impl WorkingPoint {
    pub fn spin(&self) -> Spin {
        match self {
            WorkingPoint::Physical { spin, .. } => *spin,
            WorkingPoint::Phenomenological(_) => Spin::HALF,
        }
    }

    /// Reduced spin-½ variables, when the point is spin ½.
    pub fn reduced(&self) -> Option<SpinHalfPoint> {
        match self {
            WorkingPoint::Physical { spin, field } if *spin == Spin::HALF => {
                Some(SpinHalfPoint::from_field(field))
            }
            WorkingPoint::Physical { .. } => None,
            WorkingPoint::Phenomenological(p) => Some(*p),
        }
    }

    /// The physical point; reduced inputs map to the unique `(ω, T)` with the
    /// same `t` and `α`.
    pub fn physical(&self) -> Result<(Spin, FieldParams)> {
        match self {
            WorkingPoint::Physical { spin, field } => Ok((*spin, *field)),
            WorkingPoint::Phenomenological(p) => Ok((Spin::HALF, p.to_field()?)),
        }
    }

    fn family(&self, model: CoarseningModel) -> Result<(CoarsenedFamily, FieldParams)> {
        let (spin, field) = self.physical()?;
        Ok((
            CoarsenedFamily::new(SpinSystem::new(spin)?, field.temperature, model)?,
            field,
        ))
    }

    /// QFI in (θ, ω): closed form for spin ½, exact-derivative spectral sum otherwise.
    pub fn qfi(&self, model: CoarseningModel) -> Result<FisherMatrix> {
        if let Some(p) = self.reduced() {
            return qfi_coarsened_reduced(model.axis, &p, model.eta);
        }
        let (family, field) = self.family(model)?;
        let (rho, drhos) = family.state_and_derivatives(field.theta, field.omega)?;
        Ok(qfi_from_derivatives(&rho, &drhos)?.with_labels(LABELS))
    }

    /// Spectral QFI with central-difference derivatives.
    pub fn qfi_oracle(&self, model: CoarseningModel) -> Result<FisherMatrix> {
        let (family, field) = self.family(model)?;
        let f = qfi_spectral(
            |x| family.eval(x),
            &[field.theta, field.omega],
            &theta_omega_steps(field.omega),
        )?;
        Ok(f.with_labels(LABELS))
    }

    /// Exact CFI of a two-level POVM on the coarsened spin-½ state.
    pub fn cfi(&self, povm: &Povm, model: CoarseningModel) -> Result<FisherMatrix> {
        let p = self.reduced().ok_or_else(|| {
            Error::Unsupported(format!(
                "POVM Fisher information needs spin 1/2, got {}",
                self.spin()
            ))
        })?;
        spin_half_cfi(povm, &p.bloch(model.axis, model.gamma()))
    }

    /// CFI with central-difference derivatives of the outcome probabilities.
    pub fn cfi_oracle(&self, povm: &Povm, model: CoarseningModel) -> Result<FisherMatrix> {
        let (family, field) = self.family(model)?;
        let probs = |x: &[f64]| probabilities(povm, &family.eval(x)?);
        let f = cfi_matrix(
            probs,
            &[field.theta, field.omega],
            &theta_omega_steps(field.omega),
        )?;
        Ok(f.with_labels(LABELS))
    }
}

/// Which information matrix a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InfoSource {
    Quantum,
    Classical,
}

impl fmt::Display for InfoSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfoSource::Quantum => "quantum",
            InfoSource::Classical => "classical",
        })
    }
}

impl FromStr for InfoSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quantum" | "qfi" => Ok(InfoSource::Quantum),
            "classical" | "cfi" => Ok(InfoSource::Classical),
            other => Err(Error::domain(format!(
                "unknown information source {other:?}"
            ))),
        }
    }
}

/// Evenly spaced η values, both ends included.
pub fn eta_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::domain("eta grid needs at least two points"));
    }
    gamma(start)?;
    gamma(stop)?;
    if stop < start {
        return Err(Error::domain("eta grid must be non-decreasing"));
    }
    let span = stop - start;
    Ok((0..count)
        .map(|i| start + span * i as f64 / (count - 1) as f64)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub gamma: f64,
    pub simultaneous: f64,
    pub independent: f64,
    pub f11: f64,
    pub f12: f64,
    pub f22: f64,
}

impl SweepRow {
    fn from_fisher(eta: f64, f: &FisherMatrix) -> Self {
        SweepRow {
            eta,
            gamma: (-eta * eta / 2.0).exp(),
            simultaneous: f.simultaneous_precision(),
            independent: f.independent_precision(),
            f11: f.get(0, 0),
            f12: f.get(0, 1),
            f22: f.get(1, 1),
        }
    }
}

/// One row per η, in grid order. Rows are computed in parallel.
pub fn sweep(
    point: &WorkingPoint,
    axis: Axis,
    etas: &[f64],
    source: InfoSource,
    povm: &Povm,
) -> Result<Vec<SweepRow>> {
    etas.par_iter()
        .map(|&eta| {
            let model = CoarseningModel::new(axis, eta)?;
            let f = match source {
                InfoSource::Quantum => point.qfi(model)?,
                InfoSource::Classical => point.cfi(povm, model)?,
            };
            Ok(SweepRow::from_fisher(eta, &f))
        })
        .collect()
}

/// Index of the first row where the simultaneous value exceeds the
/// independent one, if the sign of their difference changes.
pub fn sign_changes(rows: &[SweepRow]) -> Vec<usize> {
    let sign = |r: &SweepRow| r.simultaneous > r.independent;
    rows.windows(2)
        .enumerate()
        .filter(|(_, w)| sign(&w[0]) != sign(&w[1]))
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub model: CoarseningModel,
    pub qfi: FisherMatrix,
    pub qfi_oracle_diff: f64,
    pub simultaneous: f64,
    pub independent: f64,
    /// simultaneous / independent
    pub ratio: f64,
    /// The z-axis closed form for `tr F⁻¹`, spin ½ only.
    pub closed_form_simultaneous: Option<f64>,
    pub cfi: Option<FisherMatrix>,
    pub cfi_oracle_diff: Option<f64>,
    pub classical_simultaneous: Option<f64>,
    pub classical_independent: Option<f64>,
    pub errata_notes: Vec<String>,
}

fn errata_notes(point: &WorkingPoint, axis: Axis) -> Vec<String> {
    let mut notes = Vec::new();
    if point.reduced().is_some() {
        notes.push("spin-1/2 populations: p1 = exp(-delta/2)/Z for m = +1/2, p2 = exp(+delta/2)/Z, so p1 - p2 = -tanh(delta/2)".into());
        notes.push("alpha = sech^2(delta/2)/(4T) = |d(p1 - p2)/d omega|/2".into());
        if axis != Axis::Y {
            notes.push("F_omega_omega = 4 alpha^2 g/(1 - t^2 g) > 0; the form 4 alpha^2/(t^2 - 1/g) has the wrong sign".into());
        }
        if axis == Axis::Z {
            notes.push("F_theta_omega sign follows the Bloch vector r = (p1 - p2)(gamma sin theta, 0, cos theta)".into());
        }
    }
    notes
}

fn ratio(sim: f64, ind: f64) -> f64 {
    if sim.is_infinite() || ind.is_infinite() {
        f64::INFINITY
    } else {
        sim / ind
    }
}

/// QFI and (for spin ½) CFI of `povm` at one coarsening setting, each checked
/// against its finite-difference oracle.
pub fn bound(point: &WorkingPoint, model: CoarseningModel, povm: &Povm) -> Result<BoundReport> {
    let qfi = point.qfi(model)?;
    let qfi_oracle_diff = qfi.max_rel_diff(&point.qfi_oracle(model)?);
    if qfi_oracle_diff > ORACLE_TOL {
        return Err(Error::Validation(format!(
            "QFI disagrees with the spectral oracle by {qfi_oracle_diff:e} (tolerance {ORACLE_TOL:e})"
        )));
    }
    let simultaneous = qfi.simultaneous_precision();
    let independent = qfi.independent_precision();

    let reduced = point.reduced();
    let closed_form_simultaneous = match (reduced, model.axis) {
        (Some(p), Axis::Z) => Some(simultaneous_precision_z_closed_form(&p, model.eta)?),
        _ => None,
    };

    let (cfi, cfi_oracle_diff) = if reduced.is_some() {
        let cfi = point.cfi(povm, model)?;
        let diff = cfi.max_rel_diff(&point.cfi_oracle(povm, model)?);
        if diff > ORACLE_TOL {
            return Err(Error::Validation(format!(
                "CFI disagrees with its finite-difference oracle by {diff:e} (tolerance {ORACLE_TOL:e})"
            )));
        }
        (Some(cfi), Some(diff))
    } else {
        (None, None)
    };
    let classical_simultaneous = cfi.as_ref().map(FisherMatrix::simultaneous_precision);
    let classical_independent = cfi.as_ref().map(FisherMatrix::independent_precision);

    Ok(BoundReport {
        model,
        qfi,
        qfi_oracle_diff,
        simultaneous,
        independent,
        ratio: ratio(simultaneous, independent),
        closed_form_simultaneous,
        cfi,
        cfi_oracle_diff,
        classical_simultaneous,
        classical_independent,
        errata_notes: errata_notes(point, model.axis),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub n_shots: u64,
    pub n_reps: usize,
    pub seed: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub identifiable: bool,
    /// Parameters along the null direction of the CFI when it is singular.
    pub non_identifiable: Vec<String>,
    pub theta: f64,
    pub omega: f64,
    pub temperature: f64,
    pub n_shots: u64,
    pub n_reps: usize,
    pub seed: u64,
    pub prng: &'static str,
    pub tolerance: f64,
    /// `tr F_c⁻¹ / n`
    pub theoretical_trace: f64,
    /// Trace of the sample covariance of the estimates.
    pub empirical_trace: Option<f64>,
    pub ratio: Option<f64>,
    pub mean_estimate: Option<[f64; 2]>,
    pub converged_reps: usize,
    pub pass: bool,
}

/// Null-direction parameters of a singular 2×2 information matrix.
fn null_directions(f: &FisherMatrix) -> Vec<String> {
    let eig = f.entries().clone().symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k);
    f.labels()
        .iter()
        .zip(v.iter())
        .filter(|(_, c)| c.abs() > 0.1)
        .map(|(l, _)| l.clone())
        .collect()
}

/// Outcome probabilities of `povm` on the coarsened spin-½ Gibbs state at (θ, ω).
pub fn spin_half_outcome_model(
    povm: &Povm,
    model: CoarseningModel,
    temperature: f64,
) -> impl Fn(&[f64]) -> Result<OutcomeDistribution> + Sync + '_ {
    move |x: &[f64]| {
        let field = FieldParams::new(x[0], x[1], temperature)?;
        let bloch = SpinHalfPoint::from_field(&field).bloch(model.axis, model.gamma());
        probabilities(povm, &bloch.r.to_density())
    }
}

/// Sample `n_reps` histograms of `n_shots` outcomes at the working point, fit
/// each by maximum likelihood and compare the spread of the estimates with
/// the classical Cramér–Rao bound.
pub fn mc_validate(
    point: &WorkingPoint,
    model: CoarseningModel,
    povm: &Povm,
    config: &McConfig,
) -> Result<McReport> {
    if point.spin() != Spin::HALF {
        return Err(Error::Unsupported(
            "Monte Carlo validation is implemented for spin 1/2".into(),
        ));
    }
    if config.n_shots == 0 || config.n_reps < 2 {
        return Err(Error::domain("need n_shots >= 1 and n_reps >= 2"));
    }
    let (_, field) = point.physical()?;
    let cfi = point.cfi(povm, model)?;
    let n = config.n_shots as f64;
    let mut report = McReport {
        identifiable: !cfi.is_singular(),
        non_identifiable: Vec::new(),
        theta: field.theta,
        omega: field.omega,
        temperature: field.temperature,
        n_shots: config.n_shots,
        n_reps: config.n_reps,
        seed: config.seed,
        prng: PRNG_ID,
        tolerance: config.tolerance,
        theoretical_trace: cfi.simultaneous_precision() / n,
        empirical_trace: None,
        ratio: None,
        mean_estimate: None,
        converged_reps: 0,
        pass: false,
    };
    if !report.identifiable {
        report.non_identifiable = null_directions(&cfi);
        return Ok(report);
    }

    let outcome_model = spin_half_outcome_model(povm, model, field.temperature);
    let truth = outcome_model(&[field.theta, field.omega])?;
    let omega_scale = field.omega.abs();
    let mle = MleConfig::new(
        (0.01, std::f64::consts::PI - 0.01),
        (0.05 * omega_scale, 4.0 * omega_scale),
    );
    let fits: Vec<_> = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| {
            let counts = sample_outcomes_stream(&truth, config.n_shots, config.seed, rep as u64)?;
            mle_fit(&counts, &outcome_model, &mle)
        })
        .collect::<Result<_>>()?;

    let reps = fits.len() as f64;
    let mean = [
        fits.iter().map(|f| f.theta_hat).sum::<f64>() / reps,
        fits.iter().map(|f| f.omega_hat).sum::<f64>() / reps,
    ];
    let var = |g: &dyn Fn(&crate::measurement::MleResult) -> f64, m: f64| {
        fits.iter().map(|f| (g(f) - m).powi(2)).sum::<f64>() / (reps - 1.0)
    };
    let empirical = var(&|f| f.theta_hat, mean[0]) + var(&|f| f.omega_hat, mean[1]);
    let ratio = empirical / report.theoretical_trace;
    report.empirical_trace = Some(empirical);
    report.ratio = Some(ratio);
    report.mean_estimate = Some(mean);
    report.converged_reps = fits.iter().filter(|f| f.converged).count();
    report.pass = (ratio - 1.0).abs() <= config.tolerance;
    Ok(report)
}

/// Fixed working points for the three precision-versus-η curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
}

impl Preset {
    pub const ETA_START: f64 = 0.0;
    pub const ETA_STOP: f64 = 2.5;
    pub const ETA_COUNT: usize = 101;

    /// α = 1, θ = π/3 throughout; fig2 fixes p1 = 1/3, the others tanh²(δ/2) = 1/3.
    pub fn point(self) -> WorkingPoint {
        let theta = std::f64::consts::FRAC_PI_3;
        let p = match self {
            Preset::Fig1 | Preset::Fig3 => SpinHalfPoint::new((1.0f64 / 3.0).sqrt(), 1.0, theta),
            Preset::Fig2 => SpinHalfPoint::from_p1(1.0 / 3.0, 1.0, theta),
        };
        WorkingPoint::Phenomenological(p.expect("preset parameters are valid"))
    }

    pub fn axis(self) -> Axis {
        match self {
            Preset::Fig1 | Preset::Fig2 => Axis::Z,
            Preset::Fig3 => Axis::Y,
        }
    }

    pub fn source(self) -> InfoSource {
        match self {
            Preset::Fig1 | Preset::Fig3 => InfoSource::Quantum,
            Preset::Fig2 => InfoSource::Classical,
        }
    }

    pub fn etas(self) -> Vec<f64> {
        eta_grid(Self::ETA_START, Self::ETA_STOP, Self::ETA_COUNT).expect("preset grid is valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            other => Err(Error::domain(format!("unknown preset {other:?}"))),
        }
    }
}
