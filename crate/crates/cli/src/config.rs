//! Run configuration: presets, `key = value` files and flags, merged in that
//! order (later layers win), then validated into a [`RunConfig`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use spinmetro::coarsen::SpinHalfPoint;
use spinmetro::experiment::{eta_grid, InfoSource, Preset, WorkingPoint};
use spinmetro::spin::{FieldParams, Spin};
use spinmetro::Axis;

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 24301;
pub const DEFAULT_SHOTS: u64 = 100_000;
pub const DEFAULT_REPS: usize = 200;
pub const DEFAULT_TOLERANCE: f64 = 0.1;

pub const KEYS: &[&str] = &[
    "preset",
    "mode",
    "spin",
    "theta",
    "omega",
    "temperature",
    "alpha",
    "tanh2",
    "p1",
    "axis",
    "eta",
    "eta_start",
    "eta_stop",
    "eta_count",
    "fisher",
    "seed",
    "out",
    "format",
    "shots",
    "reps",
    "tolerance",
];

const PHYSICAL_KEYS: &[&str] = &["omega", "temperature"];
const PHENOMENOLOGICAL_KEYS: &[&str] = &["alpha", "tanh2", "p1"];
const POPULATION_KEYS: &[&str] = &["tanh2", "p1"];
const GRID_KEYS: &[&str] = &["eta_start", "eta_stop", "eta_count"];

/// One layer of string-valued settings.
pub type Layer = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Physical,
    Phenomenological,
}

impl Mode {
    fn parse(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "physical" => Ok(Mode::Physical),
            "phenomenological" => Ok(Mode::Phenomenological),
            other => Err(CliError::config(
                "mode",
                format!("expected physical or phenomenological, got {other:?}"),
            )),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Physical => "physical",
            Mode::Phenomenological => "phenomenological",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub point: WorkingPoint,
    pub axis: Axis,
    pub etas: Vec<f64>,
    pub fisher: InfoSource,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub shots: u64,
    pub reps: usize,
    pub tolerance: f64,
    /// Resolved settings echoed into JSON output.
    pub echo: BTreeMap<String, Value>,
}

/// Normalise `--eta-start` / `eta-start` / `eta_start` to one spelling.
fn normalise_key(key: &str) -> String {
    key.trim()
        .trim_start_matches('-')
        .replace('-', "_")
        .to_ascii_lowercase()
}

/// Parse a flat `key = value` file. `#` and `;` start comments; `[section]`
/// headers are ignored.
pub fn parse_config_text(text: &str) -> CliResult<Layer> {
    let mut layer = Layer::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(
                format!("line {}", lineno + 1),
                "expected key = value",
            ));
        };
        let key = normalise_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(key, "unknown key"));
        }
        layer.insert(key, value.trim().trim_matches('"').to_string());
    }
    Ok(layer)
}

pub fn read_config_file(path: &Path) -> CliResult<Layer> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

pub fn preset_layer(preset: Preset) -> Layer {
    let mut entries = vec![
        ("mode", "phenomenological"),
        ("theta", "pi/3"),
        ("alpha", "1"),
        ("eta_start", "0"),
        ("eta_stop", "2.5"),
        ("eta_count", "101"),
    ];
    match preset {
        Preset::Fig1 => entries.extend([("tanh2", "1/3"), ("axis", "z"), ("fisher", "quantum")]),
        Preset::Fig2 => entries.extend([("p1", "1/3"), ("axis", "z"), ("fisher", "classical")]),
        Preset::Fig3 => entries.extend([("tanh2", "1/3"), ("axis", "y"), ("fisher", "quantum")]),
    }
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Reals with optional `pi` factors and one division: `1.5`, `pi/3`,
/// `2pi/3`, `-pi/4`, `1/3`, `2.5e-3`.
pub fn parse_real(s: &str) -> Option<f64> {
    fn term(t: &str) -> Option<f64> {
        let t = t.trim();
        let (sign, t) = match t.strip_prefix('-') {
            Some(rest) => (-1.0, rest.trim()),
            None => (1.0, t.strip_prefix('+').unwrap_or(t).trim()),
        };
        let lower = t.to_ascii_lowercase();
        let value = if let Some(coef) = lower.strip_suffix("pi") {
            let coef = coef.trim().trim_end_matches('*').trim();
            let c = if coef.is_empty() {
                1.0
            } else {
                coef.parse::<f64>().ok()?
            };
            c * std::f64::consts::PI
        } else {
            lower.parse::<f64>().ok()?
        };
        Some(sign * value)
    }
    let value = match s.split_once('/') {
        Some((num, den)) => term(num)? / term(den)?,
        None => term(s)?,
    };
    value.is_finite().then_some(value)
}

struct Resolver {
    values: Layer,
}

impl Resolver {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn real(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key)
            .map(|v| {
                parse_real(v).ok_or_else(|| CliError::config(key, format!("not a number: {v:?}")))
            })
            .transpose()
    }

    fn required_real(&self, key: &str, mode: Mode) -> CliResult<f64> {
        self.real(key)?
            .ok_or_else(|| CliError::config(key, format!("required in {} mode", mode.name())))
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.trim().parse::<T>().map_err(|_| {
                    CliError::config(key, format!("not a non-negative integer: {v:?}"))
                })
            })
            .transpose()
    }

    fn parsed<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::config(key, e)))
            .transpose()
    }
}

/// Merge the preset, the config file and the flags, then validate.
///
/// The preset's mode-specific keys are dropped when a later layer selects the
/// other mode, and its population key is dropped when a later layer sets
/// `tanh2` or `p1`.
pub fn resolve(file: Layer, flags: Layer) -> CliResult<RunConfig> {
    let preset_name = flags.get("preset").or_else(|| file.get("preset")).cloned();
    let preset = preset_name
        .as_deref()
        .map(str::parse::<Preset>)
        .transpose()
        .map_err(|e| CliError::config("preset", e))?;

    let mut user = file;
    user.extend(flags);

    let mut values = preset.map(preset_layer).unwrap_or_default();
    if let Some(mode) = user.get("mode").map(|m| Mode::parse(m)).transpose()? {
        let drop: &[&str] = match mode {
            Mode::Physical => PHENOMENOLOGICAL_KEYS,
            Mode::Phenomenological => PHYSICAL_KEYS,
        };
        values.retain(|k, _| !drop.contains(&k.as_str()));
    }
    if POPULATION_KEYS.iter().any(|k| user.contains_key(*k)) {
        values.retain(|k, _| !POPULATION_KEYS.contains(&k.as_str()));
    }
    if user.contains_key("eta") {
        values.retain(|k, _| !GRID_KEYS.contains(&k.as_str()));
    }
    values.extend(user);
    let r = Resolver { values };

    let has_physical = PHYSICAL_KEYS.iter().find(|k| r.get(k).is_some());
    let has_phen = PHENOMENOLOGICAL_KEYS.iter().find(|k| r.get(k).is_some());
    let mode = match r.get("mode").map(Mode::parse).transpose()? {
        Some(mode) => mode,
        None => match (has_physical, has_phen) {
            (Some(_), None) => Mode::Physical,
            (None, Some(_)) => Mode::Phenomenological,
            (Some(k), Some(_)) => {
                return Err(CliError::config(
                    *k,
                    "physical and phenomenological parameters both given",
                ))
            }
            (None, None) => {
                return Err(CliError::config(
                    "mode",
                    "no working point given (use --preset or one mode's parameters)",
                ))
            }
        },
    };
    let stray = match mode {
        Mode::Physical => has_phen,
        Mode::Phenomenological => has_physical,
    };
    if let Some(k) = stray {
        return Err(CliError::config(
            *k,
            format!("not a {} parameter", mode.name()),
        ));
    }

    let mut echo = BTreeMap::new();
    echo.insert("mode".to_string(), json!(mode.name()));
    if let Some(p) = preset {
        echo.insert("preset".to_string(), json!(p.to_string()));
    }

    let spin = r.parsed::<Spin>("spin")?.unwrap_or(Spin::HALF);
    let theta = r.required_real("theta", mode)?;
    echo.insert("spin".to_string(), json!(spin.to_string()));
    echo.insert("theta".to_string(), json!(theta));

    let point = match mode {
        Mode::Physical => {
            let omega = r.required_real("omega", mode)?;
            let temperature = r.required_real("temperature", mode)?;
            let field = FieldParams::new(theta, omega, temperature).map_err(|e| {
                let field = if !(temperature > 0.0) {
                    "temperature"
                } else if !omega.is_finite() {
                    "omega"
                } else {
                    "theta"
                };
                CliError::config(field, e)
            })?;
            echo.insert("omega".to_string(), json!(omega));
            echo.insert("temperature".to_string(), json!(temperature));
            WorkingPoint::Physical { spin, field }
        }
        Mode::Phenomenological => {
            if spin != Spin::HALF {
                return Err(CliError::config(
                    "spin",
                    "phenomenological mode is spin 1/2 only",
                ));
            }
            let alpha = r.required_real("alpha", mode)?;
            echo.insert("alpha".to_string(), json!(alpha));
            let p = match (r.real("tanh2")?, r.real("p1")?) {
                (Some(_), Some(_)) => {
                    return Err(CliError::config("p1", "give either tanh2 or p1, not both"))
                }
                (None, None) => {
                    return Err(CliError::config(
                        "tanh2",
                        "tanh2 or p1 required in phenomenological mode",
                    ))
                }
                (Some(t2), None) => {
                    if !(t2 > 0.0 && t2 < 1.0) {
                        return Err(CliError::config(
                            "tanh2",
                            format!("must lie in (0, 1), got {t2}"),
                        ));
                    }
                    echo.insert("tanh2".to_string(), json!(t2));
                    SpinHalfPoint::new(t2.sqrt(), alpha, theta)
                        .map_err(|e| CliError::config("alpha", e))?
                }
                (None, Some(p1)) => {
                    if !(p1 > 0.0 && p1 < 0.5) {
                        return Err(CliError::config(
                            "p1",
                            format!("must lie in (0, 1/2), got {p1}"),
                        ));
                    }
                    echo.insert("p1".to_string(), json!(p1));
                    SpinHalfPoint::from_p1(p1, alpha, theta)
                        .map_err(|e| CliError::config("alpha", e))?
                }
            };
            p.to_field().map_err(|e| CliError::config("alpha", e))?;
            WorkingPoint::Phenomenological(p)
        }
    };

    let axis = r.parsed::<Axis>("axis")?.unwrap_or(Axis::Z);
    echo.insert("axis".to_string(), json!(axis.to_string()));

    let etas = match r.real("eta")? {
        Some(eta) => {
            spinmetro::coarsen::gamma(eta).map_err(|e| CliError::config("eta", e))?;
            echo.insert("eta".to_string(), json!(eta));
            vec![eta]
        }
        None if GRID_KEYS.iter().any(|k| r.get(k).is_some()) => {
            let start = r.real("eta_start")?.unwrap_or(Preset::ETA_START);
            let stop = r.real("eta_stop")?.unwrap_or(Preset::ETA_STOP);
            let count = r
                .integer::<usize>("eta_count")?
                .unwrap_or(Preset::ETA_COUNT);
            let grid = eta_grid(start, stop, count).map_err(|e| {
                let field = if count < 2 {
                    "eta_count"
                } else if !(start >= 0.0) {
                    "eta_start"
                } else {
                    "eta_stop"
                };
                CliError::config(field, e)
            })?;
            echo.insert(
                "eta_grid".to_string(),
                json!({ "start": start, "stop": stop, "count": count }),
            );
            grid
        }
        None => {
            echo.insert("eta".to_string(), json!(0.0));
            vec![0.0]
        }
    };

    let fisher = r
        .parsed::<InfoSource>("fisher")?
        .unwrap_or(InfoSource::Quantum);
    echo.insert("fisher".to_string(), json!(fisher.to_string()));
    let seed = r.integer::<u64>("seed")?.unwrap_or(DEFAULT_SEED);
    echo.insert("seed".to_string(), json!(seed));

    let format = match r.get("format").map(|f| f.trim().to_ascii_lowercase()) {
        None => None,
        Some(f) if f == "csv" => Some(Format::Csv),
        Some(f) if f == "json" => Some(Format::Json),
        Some(f) => {
            return Err(CliError::config(
                "format",
                format!("expected csv or json, got {f:?}"),
            ))
        }
    };

    let shots = r.integer::<u64>("shots")?.unwrap_or(DEFAULT_SHOTS);
    let reps = r.integer::<usize>("reps")?.unwrap_or(DEFAULT_REPS);
    let tolerance = r.real("tolerance")?.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance > 0.0) {
        return Err(CliError::config("tolerance", "must be positive"));
    }

    Ok(RunConfig {
        point,
        axis,
        etas,
        fisher,
        seed,
        out: r.get("out").map(PathBuf::from),
        format,
        shots,
        reps,
        tolerance,
        echo,
    })
}
