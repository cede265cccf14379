//! Line-based domain/run configuration files.
//!
//! The format is deliberately small: one `key value…` pair per line, `#`
//! comments, no sections. Unknown keys are rejected (with the offending line
//! number) rather than skipped, so a typo cannot silently change a run.
//!
//! ```text
//! # Unit disk
//! domain disk                 # disk | stadium | square | custom
//! seed 7                      # optional run options
//! ppw 10.0
//! ```
//!
//! Custom domains list their boundary pieces explicitly:
//!
//! ```text
//! domain custom
//! name half-moon
//! arc circle-arc center 0 0 radius 1 angles 0 3.141592653589793
//! arc line-segment endpoints -1 0 1 0
//! ```

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{build_domain, stadium, unit_disk, unit_square, ArcSpec, Domain};
use crate::report::sha256_hex;

/// Bundled configuration texts (also shipped as files under `configs/`).
pub const DISK_CFG: &str = include_str!("../configs/disk.cfg");
pub const STADIUM_CFG: &str = include_str!("../configs/stadium.cfg");
pub const SQUARE_CFG: &str = include_str!("../configs/square.cfg");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: no `domain` line found")]
    NoDomain { path: String },
    #[error("{path}: the arc cycle is invalid: {message}")]
    Build { path: String, message: String },
    #[error(
        "domain {name:?} is neither a readable file nor a bundled preset \
         (disk, stadium, square)"
    )]
    UnknownDomain { name: String },
}

/// Run options a configuration file may set; command-line flags override.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub ppw: Option<f64>,
    pub n_fixed: Option<usize>,
    pub n_max: Option<usize>,
}

/// A parsed configuration: the validated domain, its display name, the
/// SHA-256 of the source bytes (for run manifests), and any run options.
#[derive(Debug, Clone)]
pub struct Config {
    pub domain: Domain,
    pub name: String,
    pub file_hash: String,
    pub options: RunOptions,
}

/// Read and parse a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<Config, ConfigError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: label.clone(),
        source,
    })?;
    parse_config_str(&text, &label)
}

/// Resolve a `--domain` argument: an existing file path, `configs/<name>`,
/// or a bundled preset name (`disk`, `stadium`, `square`, with or without a
/// `.cfg` suffix).
pub fn load_domain(spec: &str) -> Result<Config, ConfigError> {
    let direct = Path::new(spec);
    if direct.is_file() {
        return parse_config(direct);
    }
    let bundled = Path::new("configs").join(spec);
    if bundled.is_file() {
        return parse_config(&bundled);
    }
    let stem = spec.strip_suffix(".cfg").unwrap_or(spec);
    let text = match stem {
        "disk" => DISK_CFG,
        "stadium" => STADIUM_CFG,
        "square" => SQUARE_CFG,
        _ => {
            return Err(ConfigError::UnknownDomain {
                name: spec.to_string(),
            })
        }
    };
    parse_config_str(text, &format!("<bundled {stem}>"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Preset {
    Disk,
    Stadium,
    Square,
    Custom,
}

/// Parse configuration text; `path` only labels error messages.
pub fn parse_config_str(text: &str, path: &str) -> Result<Config, ConfigError> {
    let err = |line: usize, message: String| ConfigError::Parse {
        path: path.to_string(),
        line,
        message,
    };

    let mut preset: Option<Preset> = None;
    let mut name: Option<String> = None;
    let mut stadium_a: Option<f64> = None;
    let mut stadium_r: Option<f64> = None;
    let mut arcs: Vec<ArcSpec> = Vec::new();
    let mut options = RunOptions::default();

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let key = tokens[0];

        let one_value = |tokens: &[&str]| -> Result<String, ConfigError> {
            if tokens.len() != 2 {
                return Err(err(
                    line_no,
                    format!("`{key}` takes exactly one value, got {}", tokens.len() - 1),
                ));
            }
            Ok(tokens[1].to_string())
        };

        match key {
            "domain" => {
                if preset.is_some() {
                    return Err(err(line_no, "duplicate `domain` line".to_string()));
                }
                preset = Some(match one_value(&tokens)?.as_str() {
                    "disk" => Preset::Disk,
                    "stadium" => Preset::Stadium,
                    "square" => Preset::Square,
                    "custom" => Preset::Custom,
                    other => {
                        return Err(err(
                            line_no,
                            format!(
                                "unknown domain {other:?}; expected disk, stadium, \
                                 square, or custom"
                            ),
                        ))
                    }
                });
            }
            "name" => {
                name = Some(one_value(&tokens)?);
            }
            "stadium-a" | "stadium-r" => {
                let value: f64 = one_value(&tokens)?
                    .parse()
                    .map_err(|_| err(line_no, format!("`{key}` expects a number")))?;
                if !(value > 0.0) || !value.is_finite() {
                    return Err(err(
                        line_no,
                        format!("`{key}` must be positive and finite, got {value}"),
                    ));
                }
                if key == "stadium-a" {
                    stadium_a = Some(value);
                } else {
                    stadium_r = Some(value);
                }
            }
            "seed" => {
                options.seed = Some(
                    one_value(&tokens)?
                        .parse()
                        .map_err(|_| err(line_no, "`seed` expects a nonnegative integer".into()))?,
                );
            }
            "ppw" => {
                let value: f64 = one_value(&tokens)?
                    .parse()
                    .map_err(|_| err(line_no, "`ppw` expects a number".into()))?;
                if !(value >= 2.0) {
                    return Err(err(
                        line_no,
                        format!("`ppw` must be at least 2 points per wavelength, got {value}"),
                    ));
                }
                options.ppw = Some(value);
            }
            "n-fixed" | "n-max" => {
                let value: usize = one_value(&tokens)?
                    .parse()
                    .map_err(|_| err(line_no, format!("`{key}` expects a positive integer")))?;
                if value < 8 {
                    return Err(err(line_no, format!("`{key}` must be at least 8")));
                }
                if key == "n-fixed" {
                    options.n_fixed = Some(value);
                } else {
                    options.n_max = Some(value);
                }
            }
            "arc" => {
                arcs.push(parse_arc(&tokens, line_no, path)?);
            }
            other => {
                return Err(err(line_no, format!("unknown key {other:?}")));
            }
        }
    }

    let preset = preset.ok_or_else(|| ConfigError::NoDomain {
        path: path.to_string(),
    })?;

    if preset != Preset::Custom && !arcs.is_empty() {
        return Err(err(
            0,
            "`arc` lines are only valid with `domain custom`".to_string(),
        ));
    }
    if preset != Preset::Stadium && (stadium_a.is_some() || stadium_r.is_some()) {
        return Err(err(
            0,
            "`stadium-a`/`stadium-r` are only valid with `domain stadium`".to_string(),
        ));
    }

    let (domain, default_name) = match preset {
        Preset::Disk => (unit_disk(), "disk"),
        Preset::Square => (unit_square(), "square"),
        Preset::Stadium => (
            stadium(stadium_a.unwrap_or(1.0), stadium_r.unwrap_or(1.0)),
            "stadium",
        ),
        Preset::Custom => {
            if arcs.is_empty() {
                return Err(ConfigError::Build {
                    path: path.to_string(),
                    message: "`domain custom` requires at least one `arc` line".to_string(),
                });
            }
            let domain = build_domain(arcs).map_err(|e| ConfigError::Build {
                path: path.to_string(),
                message: e.to_string(),
            })?;
            (domain, "custom")
        }
    };

    Ok(Config {
        domain,
        name: name.unwrap_or_else(|| default_name.to_string()),
        file_hash: sha256_hex(text.as_bytes()),
        options,
    })
}

/// `arc circle-arc center x y radius r angles a b`
/// `arc line-segment endpoints x0 y0 x1 y1`
fn parse_arc(tokens: &[&str], line_no: usize, path: &str) -> Result<ArcSpec, ConfigError> {
    let err = |message: String| ConfigError::Parse {
        path: path.to_string(),
        line: line_no,
        message,
    };
    let number = |text: &str, what: &str| -> Result<f64, ConfigError> {
        text.parse::<f64>()
            .map_err(|_| err(format!("{what} expects a number, got {text:?}")))
    };

    if tokens.len() < 2 {
        return Err(err(
            "`arc` needs a kind: circle-arc or line-segment".to_string(),
        ));
    }
    match tokens[1] {
        "circle-arc" => {
            if tokens.len() != 10 || tokens[2] != "center" || tokens[5] != "radius" || tokens[7] != "angles" {
                return Err(err(
                    "expected `arc circle-arc center <x> <y> radius <r> angles <a0> <a1>`"
                        .to_string(),
                ));
            }
            let center = [number(tokens[3], "center x")?, number(tokens[4], "center y")?];
            let radius = number(tokens[6], "radius")?;
            if !(radius > 0.0) || !radius.is_finite() {
                return Err(err(format!(
                    "radius must be positive and finite, got {radius}"
                )));
            }
            let start_angle = number(tokens[8], "start angle")?;
            let end_angle = number(tokens[9], "end angle")?;
            if end_angle <= start_angle {
                return Err(err(
                    "angles must increase (counterclockwise traversal)".to_string(),
                ));
            }
            Ok(ArcSpec::CircleArc {
                center,
                radius,
                start_angle,
                end_angle,
            })
        }
        "line-segment" => {
            if tokens.len() != 7 || tokens[2] != "endpoints" {
                return Err(err(
                    "expected `arc line-segment endpoints <x0> <y0> <x1> <y1>`".to_string(),
                ));
            }
            let start = [number(tokens[3], "x0")?, number(tokens[4], "y0")?];
            let end = [number(tokens[5], "x1")?, number(tokens[6], "y1")?];
            if start == end {
                return Err(err("segment endpoints must be distinct".to_string()));
            }
            Ok(ArcSpec::LineSegment { start, end })
        }
        other => Err(err(format!(
            "unknown arc kind {other:?}; expected circle-arc or line-segment"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_presets_parse() {
        let disk = parse_config_str(DISK_CFG, "disk.cfg").unwrap();
        assert_eq!(disk.name, "disk");
        assert!((disk.domain.area() - std::f64::consts::PI).abs() < 1e-12);

        let st = parse_config_str(STADIUM_CFG, "stadium.cfg").unwrap();
        assert_eq!(st.name, "stadium");
        assert!(st.domain.corners().is_empty());

        let sq = parse_config_str(SQUARE_CFG, "square.cfg").unwrap();
        assert_eq!(sq.domain.corners().len(), 4);
    }

    #[test]
    fn unknown_key_reports_line_number() {
        let text = "domain disk\nppq 10\n";
        let e = parse_config_str(text, "t.cfg").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("t.cfg:2"), "{msg}");
        assert!(msg.contains("unknown key"), "{msg}");
    }

    #[test]
    fn negative_radius_rejected_with_line() {
        let text = "domain custom\narc circle-arc center 0 0 radius -1 angles 0 6.28\n";
        let e = parse_config_str(text, "t.cfg").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("t.cfg:2"), "{msg}");
        assert!(msg.contains("radius"), "{msg}");
    }

    #[test]
    fn custom_arc_cycle_builds() {
        let text = "domain custom\n\
                    arc circle-arc center 0 0 radius 1 angles 0 6.283185307179586\n";
        let cfg = parse_config_str(text, "t.cfg").unwrap();
        assert!((cfg.domain.length() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn options_parse_and_validate() {
        let cfg =
            parse_config_str("domain disk\nseed 42\nppw 12.5\nn-max 1024\n", "t.cfg").unwrap();
        assert_eq!(cfg.options.seed, Some(42));
        assert_eq!(cfg.options.ppw, Some(12.5));
        assert_eq!(cfg.options.n_max, Some(1024));
        assert!(parse_config_str("domain disk\nppw 1\n", "t.cfg").is_err());
    }
}
