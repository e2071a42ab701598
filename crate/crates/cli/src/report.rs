//! Output encoding: the sweep CSV table and JSON documents.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use spinmetro::experiment::{BoundReport, McReport, SweepRow};
use spinmetro::measurement::PRNG_ID;
use spinmetro::FisherMatrix;

pub const CSV_HEADER: &str = "eta,gamma,sim_precision,ind_precision,f11,f12,f22";
const SIG_DIGITS: usize = 12;

/// 12 significant digits, shortest form, `inf` / `-inf` / `nan` for
/// non-finite values. Independent of locale.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_fraction(mantissa), exp)
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// A JSON number rounded to 12 significant digits, or the string form for
/// non-finite values.
pub fn json_number(x: f64) -> Value {
    let s = format_number(x);
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => json!(v),
        _ => json!(s),
    }
}

fn matrix(f: &FisherMatrix) -> Value {
    let n = f.dim();
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| json_number(f.get(i, j))).collect()))
            .collect(),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.eta,
            r.gamma,
            r.simultaneous,
            r.independent,
            r.f11,
            r.f12,
            r.f22,
        ];
        let line: Vec<String> = fields.iter().map(|&x| format_number(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn row_json(r: &SweepRow) -> Value {
    json!({
        "eta": json_number(r.eta),
        "gamma": json_number(r.gamma),
        "sim_precision": json_number(r.simultaneous),
        "ind_precision": json_number(r.independent),
        "f11": json_number(r.f11),
        "f12": json_number(r.f12),
        "f22": json_number(r.f22),
    })
}

fn provenance(seed: u64) -> Value {
    json!({ "version": env!("CARGO_PKG_VERSION"), "seed": seed, "prng": PRNG_ID })
}

fn config_json(echo: &BTreeMap<String, Value>) -> Value {
    Value::Object(
        echo.iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect::<Map<_, _>>(),
    )
}

fn document(
    echo: &BTreeMap<String, Value>,
    body: (&str, Value),
    notes: &[String],
    seed: u64,
) -> String {
    let mut doc = Map::new();
    doc.insert("config".into(), config_json(echo));
    doc.insert(body.0.into(), body.1);
    doc.insert("errata_notes".into(), json!(notes));
    doc.insert("provenance".into(), provenance(seed));
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serialisable");
    s.push('\n');
    s
}

pub fn sweep_json(
    echo: &BTreeMap<String, Value>,
    rows: &[SweepRow],
    notes: &[String],
    seed: u64,
) -> String {
    document(
        echo,
        ("rows", rows.iter().map(row_json).collect()),
        notes,
        seed,
    )
}

fn bound_json_row(r: &BoundReport) -> Value {
    let eta = r.model.eta;
    let opt = |x: Option<f64>| x.map(json_number).unwrap_or(Value::Null);
    json!({
        "eta": json_number(eta),
        "gamma": json_number(r.model.gamma()),
        "qfi": matrix(&r.qfi),
        "sim_precision": json_number(r.simultaneous),
        "ind_precision": json_number(r.independent),
        "ratio": json_number(r.ratio),
        "closed_form_sim_precision": opt(r.closed_form_simultaneous),
        "cfi": r.cfi.as_ref().map(matrix).unwrap_or(Value::Null),
        "cfi_sim_precision": opt(r.classical_simultaneous),
        "cfi_ind_precision": opt(r.classical_independent),
        "oracle_max_rel_diff": {
            "qfi": json_number(r.qfi_oracle_diff),
            "cfi": opt(r.cfi_oracle_diff),
        },
    })
}

pub fn bound_json(echo: &BTreeMap<String, Value>, reports: &[BoundReport], seed: u64) -> String {
    let notes = reports
        .first()
        .map(|r| r.errata_notes.clone())
        .unwrap_or_default();
    document(
        echo,
        ("rows", reports.iter().map(bound_json_row).collect()),
        &notes,
        seed,
    )
}

pub fn mc_json(echo: &BTreeMap<String, Value>, report: &McReport, notes: &[String]) -> String {
    let opt = |x: Option<f64>| x.map(json_number).unwrap_or(Value::Null);
    let result = json!({
        "identifiable": report.identifiable,
        "non_identifiable": report.non_identifiable,
        "theta": json_number(report.theta),
        "omega": json_number(report.omega),
        "temperature": json_number(report.temperature),
        "n_shots": report.n_shots,
        "n_reps": report.n_reps,
        "theoretical_trace": json_number(report.theoretical_trace),
        "empirical_trace": opt(report.empirical_trace),
        "ratio": opt(report.ratio),
        "mean_estimate": report.mean_estimate.map(|m| json!([json_number(m[0]), json_number(m[1])])).unwrap_or(Value::Null),
        "converged_reps": report.converged_reps,
        "tolerance": json_number(report.tolerance),
        "pass": report.pass,
    });
    document(echo, ("result", result), notes, report.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(19.0 / 6.0), "3.16666666667");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(2.5), "2.5");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-1.25e-7), "-1.25e-7");
        assert_eq!(format_number(123456789012345.0), "1.23456789012e14");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_number(1e-5), "0.00001");
        assert_eq!(format_number(100.0), "100");
    }

    #[test]
    fn json_numbers() {
        assert_eq!(json_number(f64::INFINITY), json!("inf"));
        assert_eq!(json_number(0.1 + 0.2), json!(0.3));
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            eta: 0.0,
            gamma: 1.0,
            simultaneous: f64::INFINITY,
            independent: 2.0,
            f11: 1.0,
            f12: 0.0,
            f22: 1.0,
        };
        assert_eq!(
            sweep_csv(&[row]),
            format!("{CSV_HEADER}\n0,1,inf,2,1,0,1\n")
        );
    }
}
