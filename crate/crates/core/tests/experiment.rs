use spinmetro::coarsen::{Axis, CoarseningModel, SpinHalfPoint};
use spinmetro::experiment::{
    bound, eta_grid, mc_validate, sign_changes, sweep, InfoSource, McConfig, Preset, WorkingPoint,
};
use spinmetro::measurement::standard_povm;
use spinmetro::spin::{FieldParams, Spin};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn bound_at_fig1_point() {
    let report = bound(
        &Preset::Fig1.point(),
        CoarseningModel::new(Axis::Z, 0.0).unwrap(),
        &standard_povm(),
    )
    .unwrap();
    assert!(close(report.simultaneous, 19.0 / 6.0, 1e-10));
    assert!(close(report.independent, 19.0 / 3.0, 1e-10));
    assert!(close(
        report.closed_form_simultaneous.unwrap(),
        19.0 / 6.0,
        1e-10
    ));
    assert!(report.qfi_oracle_diff < 1e-7);
    assert!(report.cfi_oracle_diff.unwrap() < 1e-7);
    assert!(!report.errata_notes.is_empty());
}

#[test]
fn bound_y_axis_ratio_is_half() {
    for eta in [0.0, 0.7, 1.9] {
        let r = bound(
            &Preset::Fig3.point(),
            CoarseningModel::new(Axis::Y, eta).unwrap(),
            &standard_povm(),
        )
        .unwrap();
        assert!((r.ratio - 0.5).abs() < 1e-9, "eta {eta}: {}", r.ratio);
    }
}

#[test]
fn bound_diverges_on_z_at_large_eta() {
    let r = bound(
        &Preset::Fig1.point(),
        CoarseningModel::new(Axis::Z, 6.0).unwrap(),
        &standard_povm(),
    )
    .unwrap();
    assert!(r.simultaneous.is_infinite());
}

#[test]
fn bound_for_higher_spin_has_no_cfi() {
    let point = WorkingPoint::Physical {
        spin: Spin::new(1.0).unwrap(),
        field: FieldParams::new(0.8, 1.1, 0.9).unwrap(),
    };
    let r = bound(
        &point,
        CoarseningModel::new(Axis::X, 0.6).unwrap(),
        &standard_povm(),
    )
    .unwrap();
    assert!(r.cfi.is_none());
    assert!(r.qfi_oracle_diff < 1e-7);
    assert!(r.simultaneous.is_finite());
}

#[test]
fn eta_grid_validation() {
    assert_eq!(eta_grid(0.0, 0.0, 2).unwrap(), vec![0.0, 0.0]);
    assert!(eta_grid(0.0, 1.0, 1).is_err());
    assert!(eta_grid(1.0, 0.5, 3).is_err());
    assert!(eta_grid(-1.0, 0.5, 3).is_err());
    let g = eta_grid(0.0, 2.5, 101).unwrap();
    assert_eq!(g.len(), 101);
    assert_eq!(g[100], 2.5);
}

#[test]
fn constant_grid_gives_identical_rows() {
    let rows = sweep(
        &Preset::Fig1.point(),
        Axis::Z,
        &[0.0, 0.0],
        InfoSource::Quantum,
        &standard_povm(),
    )
    .unwrap();
    assert_eq!(rows[0], rows[1]);
}

#[test]
fn sweep_rows_follow_grid_order() {
    let etas = Preset::Fig1.etas();
    let rows = sweep(
        &Preset::Fig1.point(),
        Axis::Z,
        &etas,
        InfoSource::Quantum,
        &standard_povm(),
    )
    .unwrap();
    for (row, eta) in rows.iter().zip(&etas) {
        assert_eq!(row.eta, *eta);
        assert!(close(row.gamma, (-eta * eta / 2.0).exp(), 1e-15));
    }
    assert_eq!(sign_changes(&rows).len(), 1);
}

#[test]
fn fig2_classical_sweep_crosses_once() {
    let p = Preset::Fig2;
    let rows = sweep(
        &p.point(),
        p.axis(),
        &p.etas(),
        p.source(),
        &standard_povm(),
    )
    .unwrap();
    assert_eq!(sign_changes(&rows).len(), 1);
    assert!(rows[0].simultaneous < rows[0].independent);
}

#[test]
fn mc_report_is_deterministic() {
    let config = McConfig {
        n_shots: 10_000,
        n_reps: 12,
        seed: 7,
        tolerance: 0.5,
    };
    let model = CoarseningModel::new(Axis::Z, 0.3).unwrap();
    let a = mc_validate(&Preset::Fig2.point(), model, &standard_povm(), &config).unwrap();
    let b = mc_validate(&Preset::Fig2.point(), model, &standard_povm(), &config).unwrap();
    assert_eq!(a, b);
    assert!(a.identifiable);
    assert_eq!(a.converged_reps, 12);
    assert!(a.ratio.unwrap() > 0.3 && a.ratio.unwrap() < 3.0);
}

#[test]
fn mc_flags_degenerate_point() {
    let point = WorkingPoint::Physical {
        spin: Spin::HALF,
        field: FieldParams::new(0.0, 60.0, 1.0).unwrap(),
    };
    let config = McConfig {
        n_shots: 1000,
        n_reps: 10,
        seed: 1,
        tolerance: 0.1,
    };
    let r = mc_validate(
        &point,
        CoarseningModel::new(Axis::Z, 0.0).unwrap(),
        &standard_povm(),
        &config,
    )
    .unwrap();
    assert!(!r.identifiable);
    assert!(!r.non_identifiable.is_empty());
    assert!(!r.pass);
}

#[test]
fn phenomenological_and_physical_points_agree() {
    let p = SpinHalfPoint::new(0.4, 0.7, 1.2).unwrap();
    let phys = WorkingPoint::Physical {
        spin: Spin::HALF,
        field: p.to_field().unwrap(),
    };
    let model = CoarseningModel::new(Axis::X, 0.8).unwrap();
    let a = WorkingPoint::Phenomenological(p).qfi(model).unwrap();
    let b = phys.qfi(model).unwrap();
    assert!(a.max_rel_diff(&b) < 1e-12);
}
