//! Text configuration format for scenarios.
//!
//! The format is flat `key = value` lines with dotted section prefixes.
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, so an empty file is the reference scenario; unknown and
//! duplicated keys are rejected with their line number. The full schema:
//!
//! ```text
//! run.seed                  = 0            # u64 seed for the chacha8 stream
//! run.rng                   = chacha8      # rng algorithm; chacha8 only
//! run.duration              = 20           # seconds
//! run.dt                    = 0.01         # measurement interval, seconds
//! velocity.profile          = cosine       # cosine | constant
//! velocity.amplitude        = 2            # cosine only: v = (A cos(w t), 0)
//! velocity.frequency        = 2            # cosine only
//! velocity.vx               = 0            # constant only
//! velocity.vy               = 0            # constant only
//! landmarks.count           = 4
//! landmarks.box             = -0.5 0.5 1 2 # xmin xmax ymin ymax
//! landmarks.offset          = -1 1 -1 1    # origin offset box, same order
//! filter.process_noise      = 0.0004       # scalar, or 4 / 4n values as
//! filter.measurement_noise  = 0.0001       #   row-major 2x2 blocks
//! filter.initial_covariance = 16
//! filter.integrator         = geometric    # euler | exponential | geometric
//! filter.bearing_noise      = 0            # stddev of bearing noise, 0 = off
//! excitation.window         = 3.14159...   # seconds
//! excitation.threshold      = 0.01
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Matrix2;

use crate::error::ConfigError;
use crate::filter::ObserverScheme;
use crate::sim::{GainSpec, SamplingBox, ScenarioConfig, VelocityProfile};

const KNOWN_KEYS: &[&str] = &[
    "run.seed",
    "run.rng",
    "run.duration",
    "run.dt",
    "velocity.profile",
    "velocity.amplitude",
    "velocity.frequency",
    "velocity.vx",
    "velocity.vy",
    "landmarks.count",
    "landmarks.box",
    "landmarks.offset",
    "filter.process_noise",
    "filter.measurement_noise",
    "filter.initial_covariance",
    "filter.integrator",
    "filter.bearing_noise",
    "excitation.window",
    "excitation.threshold",
];

/// Reads and validates a scenario configuration file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Parses configuration text into a validated scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let entries = tokenize(text)?;
    let config = build(&entries)?;
    config.validate()?;
    Ok(config)
}

fn tokenize(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or(ConfigError::Malformed {
            line,
            text: stripped.to_string(),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if entries.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        entries.insert(key, (line, value));
    }
    Ok(entries)
}

fn build(entries: &BTreeMap<String, (usize, String)>) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    let get = |key: &str| entries.get(key).map(|(_, v)| v.as_str());
    let invalid = |key: &str, detail: String| ConfigError::InvalidValue {
        key: key.to_string(),
        detail,
    };

    if let Some(v) = get("run.rng") {
        if v != "chacha8" {
            return Err(invalid(
                "run.rng",
                format!("unsupported generator `{v}`; only chacha8 is available"),
            ));
        }
    }
    if let Some(v) = get("run.seed") {
        config.seed = v
            .parse()
            .map_err(|e| invalid("run.seed", format!("not a u64: {e}")))?;
    }
    if let Some(v) = get("run.duration") {
        config.duration = parse_float("run.duration", v)?;
    }
    if let Some(v) = get("run.dt") {
        config.dt = parse_float("run.dt", v)?;
    }
    if let Some(v) = get("landmarks.count") {
        config.landmark_count = v
            .parse()
            .map_err(|e| invalid("landmarks.count", format!("not a count: {e}")))?;
    }
    if let Some(v) = get("landmarks.box") {
        config.landmark_box = parse_box("landmarks.box", v)?;
    }
    if let Some(v) = get("landmarks.offset") {
        config.offset_box = parse_box("landmarks.offset", v)?;
    }

    let profile = get("velocity.profile").unwrap_or(match config.velocity {
        VelocityProfile::Cosine { .. } => "cosine",
        VelocityProfile::Constant(_) => "constant",
    });
    match profile {
        "cosine" => {
            for key in ["velocity.vx", "velocity.vy"] {
                if entries.contains_key(key) {
                    return Err(invalid(key, "only applies to the constant profile".into()));
                }
            }
            let amplitude = match get("velocity.amplitude") {
                Some(v) => parse_float("velocity.amplitude", v)?,
                None => 2.0,
            };
            let frequency = match get("velocity.frequency") {
                Some(v) => parse_float("velocity.frequency", v)?,
                None => 2.0,
            };
            config.velocity = VelocityProfile::Cosine {
                amplitude,
                frequency,
            };
        }
        "constant" => {
            for key in ["velocity.amplitude", "velocity.frequency"] {
                if entries.contains_key(key) {
                    return Err(invalid(key, "only applies to the cosine profile".into()));
                }
            }
            let vx = match get("velocity.vx") {
                Some(v) => parse_float("velocity.vx", v)?,
                None => 0.0,
            };
            let vy = match get("velocity.vy") {
                Some(v) => parse_float("velocity.vy", v)?,
                None => 0.0,
            };
            config.velocity = VelocityProfile::Constant(nalgebra::Vector2::new(vx, vy));
        }
        other => {
            return Err(invalid(
                "velocity.profile",
                format!("unknown profile `{other}`; use cosine or constant"),
            ));
        }
    }

    for (key, slot) in [
        ("filter.process_noise", &mut config.process_noise),
        ("filter.measurement_noise", &mut config.measurement_noise),
        ("filter.initial_covariance", &mut config.initial_covariance),
    ] {
        if let Some(v) = get(key) {
            *slot = parse_gain(key, v)?;
        }
    }
    if let Some(v) = get("filter.integrator") {
        config.scheme = match v {
            "euler" => ObserverScheme::Euler,
            "exponential" => ObserverScheme::ExponentialScale,
            "geometric" => ObserverScheme::Geometric,
            other => {
                return Err(invalid(
                    "filter.integrator",
                    format!("unknown integrator `{other}`; use euler, exponential or geometric"),
                ));
            }
        };
    }
    if let Some(v) = get("filter.bearing_noise") {
        config.bearing_noise = parse_float("filter.bearing_noise", v)?;
    }
    if let Some(v) = get("excitation.window") {
        config.excitation_window = parse_float("excitation.window", v)?;
    }
    if let Some(v) = get("excitation.threshold") {
        config.excitation_threshold = parse_float("excitation.threshold", v)?;
    }
    Ok(config)
}

fn parse_float(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        detail: format!("not a number: {e}"),
    })
}

fn parse_floats(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split_whitespace()
        .map(|tok| parse_float(key, tok))
        .collect()
}

fn parse_box(key: &str, value: &str) -> Result<SamplingBox, ConfigError> {
    let vals = parse_floats(key, value)?;
    if vals.len() != 4 {
        return Err(ConfigError::InvalidValue {
            key: key.to_string(),
            detail: format!("expected `xmin xmax ymin ymax`, got {} values", vals.len()),
        });
    }
    Ok(SamplingBox::new((vals[0], vals[1]), (vals[2], vals[3])))
}

fn parse_gain(key: &str, value: &str) -> Result<GainSpec, ConfigError> {
    let vals = parse_floats(key, value)?;
    match vals.len() {
        1 => Ok(GainSpec::Isotropic(vals[0])),
        len if len % 4 == 0 && len > 0 => Ok(GainSpec::Blocks(
            vals.chunks(4)
                .map(|c| Matrix2::new(c[0], c[1], c[2], c[3]))
                .collect(),
        )),
        len => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            detail: format!("expected 1 scalar or a multiple of 4 block entries, got {len}"),
        }),
    }
}

/// Renders a scenario in the configuration format; parsing the result
/// reproduces the scenario exactly.
pub fn to_config_string(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut push = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    push("run.seed", config.seed.to_string());
    push("run.rng", "chacha8".to_string());
    push("run.duration", config.duration.to_string());
    push("run.dt", config.dt.to_string());
    match config.velocity {
        VelocityProfile::Cosine {
            amplitude,
            frequency,
        } => {
            push("velocity.profile", "cosine".to_string());
            push("velocity.amplitude", amplitude.to_string());
            push("velocity.frequency", frequency.to_string());
        }
        VelocityProfile::Constant(v) => {
            push("velocity.profile", "constant".to_string());
            push("velocity.vx", v.x.to_string());
            push("velocity.vy", v.y.to_string());
        }
    }
    push("landmarks.count", config.landmark_count.to_string());
    push("landmarks.box", box_string(&config.landmark_box));
    push("landmarks.offset", box_string(&config.offset_box));
    push("filter.process_noise", gain_string(&config.process_noise));
    push(
        "filter.measurement_noise",
        gain_string(&config.measurement_noise),
    );
    push(
        "filter.initial_covariance",
        gain_string(&config.initial_covariance),
    );
    push(
        "filter.integrator",
        match config.scheme {
            ObserverScheme::Euler => "euler",
            ObserverScheme::ExponentialScale => "exponential",
            ObserverScheme::Geometric => "geometric",
        }
        .to_string(),
    );
    push("filter.bearing_noise", config.bearing_noise.to_string());
    push("excitation.window", config.excitation_window.to_string());
    push(
        "excitation.threshold",
        config.excitation_threshold.to_string(),
    );
    out
}

fn box_string(b: &SamplingBox) -> String {
    format!("{} {} {} {}", b.min.x, b.max.x, b.min.y, b.max.y)
}

fn gain_string(g: &GainSpec) -> String {
    match g {
        GainSpec::Isotropic(s) => s.to_string(),
        GainSpec::Blocks(blocks) => blocks
            .iter()
            .map(|m| format!("{} {} {} {}", m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_reference_scenario() {
        let config = parse_config("").unwrap();
        assert_eq!(config, ScenarioConfig::default());
    }

    #[test]
    fn defaults_documented_in_schema() {
        let config = parse_config("# nothing but comments\n\n").unwrap();
        assert_eq!(config.seed, 0);
        assert_eq!(config.duration, 20.0);
        assert_eq!(config.dt, 0.01);
        assert_eq!(config.landmark_count, 4);
    }

    #[test]
    fn round_trip_through_text() {
        let config = ScenarioConfig {
            seed: 42,
            duration: 7.5,
            bearing_noise: 0.001,
            process_noise: GainSpec::Blocks(vec![Matrix2::new(1e-4, 0.0, 0.0, 2e-4)]),
            ..ScenarioConfig::default()
        };
        let text = to_config_string(&config);
        let back = parse_config(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn round_trip_constant_profile() {
        let config = ScenarioConfig {
            velocity: VelocityProfile::Constant(nalgebra::Vector2::new(0.3, -0.1)),
            ..ScenarioConfig::default()
        };
        let back = parse_config(&to_config_string(&config)).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let err = parse_config("run.seed = 1\nrun.sede = 2\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key } => {
                assert_eq!(line, 2);
                assert_eq!(key, "run.sede");
            }
            other => panic!("expected unknown key, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_config("run.seed = 1\nrun.seed = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn malformed_line_is_rejected() {
        let err = parse_config("run.seed\n").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
    }

    #[test]
    fn negative_dt_names_the_key() {
        let err = parse_config("run.dt = -0.5\n").unwrap_err();
        match err {
            ConfigError::InvalidValue { key, .. } => assert_eq!(key, "run.dt"),
            other => panic!("expected invalid value, got {other:?}"),
        }
    }

    #[test]
    fn rng_must_be_chacha8() {
        assert!(parse_config("run.rng = chacha8\n").is_ok());
        assert!(parse_config("run.rng = mt19937\n").is_err());
    }

    #[test]
    fn profile_specific_keys_are_exclusive() {
        assert!(parse_config("velocity.profile = constant\nvelocity.amplitude = 2\n").is_err());
        assert!(parse_config("velocity.profile = cosine\nvelocity.vx = 1\n").is_err());
        let config = parse_config("velocity.profile = constant\nvelocity.vx = 1\n").unwrap();
        assert_eq!(
            config.velocity,
            VelocityProfile::Constant(nalgebra::Vector2::new(1.0, 0.0))
        );
    }

    #[test]
    fn per_landmark_gain_blocks() {
        let text = "landmarks.count = 2\nfilter.process_noise = 1 0 0 1  2 0 0 2\n";
        let config = parse_config(text).unwrap();
        match &config.process_noise {
            GainSpec::Blocks(b) => {
                assert_eq!(b.len(), 2);
                assert_eq!(b[1], Matrix2::new(2.0, 0.0, 0.0, 2.0));
            }
            other => panic!("expected blocks, got {other:?}"),
        }
    }

    #[test]
    fn wrong_gain_arity_is_rejected() {
        assert!(parse_config("filter.process_noise = 1 2 3\n").is_err());
    }

    #[test]
    fn inline_comments_are_stripped() {
        let config = parse_config("run.seed = 9 # the seed\n").unwrap();
        assert_eq!(config.seed, 9);
    }
}
