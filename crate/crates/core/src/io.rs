//! File formats: frame streams, polygon and mask JSON lines, query points
//! and the TOML configuration.
//!
//! Frame files are line oriented:
//!
//! ```text
//! # comment
//! frame <timestamp> [<pose_x> <pose_y> <heading>]
//! <x> <y> <z> <doppler> <snr> [linear|db]
//! ```
//!
//! Every point line belongs to the most recent `frame` header. SNR defaults
//! to a linear power ratio; `db` values are converted on ingest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FreeSpaceMask, GridSpec, Point2, Pose, RadarPoint, RadarPolygon};
use crate::metrics::EvalConfig;
use crate::sim::{generate_scenarios, Scenario, SimFrame, DEFAULT_SEED, SCENARIO_NAMES};

/// One frame of a stream. SNR values are always linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub timestamp: f64,
    pub points: Vec<RadarPoint>,
    pub pose: Option<Pose>,
}

impl From<&SimFrame> for FrameRecord {
    fn from(f: &SimFrame) -> Self {
        Self {
            timestamp: f.timestamp,
            points: f.points.clone(),
            pose: Some(f.pose),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrUnit {
    Linear,
    Decibel,
}

impl SnrUnit {
    pub fn to_linear(self, value: f64) -> f64 {
        match self {
            SnrUnit::Linear => value,
            SnrUnit::Decibel => 10f64.powf(value / 10.0),
        }
    }
}

/// Splits a line into whitespace-separated tokens with 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn number(line: usize, (column, tok): (usize, &str), what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_error(line, column, format!("expected {what}, found `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_error(line, column, format!("{what} must be finite")));
    }
    Ok(v)
}

/// The line up to its `#` comment, if any.
fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or_default()
}

fn end_of_line(line: &str) -> usize {
    line.trim_end().chars().count() + 1
}

/// Parses a frame stream. Timestamps must strictly increase.
pub fn parse_frames(text: &str) -> Result<Vec<FrameRecord>> {
    let mut frames: Vec<FrameRecord> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let line = strip_comment(line);
        if line.trim().is_empty() {
            continue;
        }
        let toks = tokens(line);
        if toks[0].1 == "frame" {
            let (t, pose) = match toks.len() {
                2 => (number(ln, toks[1], "timestamp")?, None),
                5 => {
                    let t = number(ln, toks[1], "timestamp")?;
                    let x = number(ln, toks[2], "pose x")?;
                    let y = number(ln, toks[3], "pose y")?;
                    let h = number(ln, toks[4], "heading")?;
                    (t, Some(Pose::new(x, y, h)))
                }
                n => {
                    let col = toks.get(2).map_or(end_of_line(line), |t| t.0);
                    return Err(parse_error(
                        ln,
                        col,
                        format!("frame header takes a timestamp and an optional pose (x y heading), found {} fields", n - 1),
                    ));
                }
            };
            if let Some(prev) = frames.last() {
                if t <= prev.timestamp {
                    return Err(Error::NonMonotonicTimestamp {
                        previous: prev.timestamp,
                        current: t,
                    });
                }
            }
            frames.push(FrameRecord {
                timestamp: t,
                points: Vec::new(),
                pose,
            });
            continue;
        }
        let Some(frame) = frames.last_mut() else {
            return Err(parse_error(
                ln,
                toks[0].0,
                "point line before any `frame` header",
            ));
        };
        if toks.len() < 5 || toks.len() > 6 {
            let col = toks.get(6).map_or(end_of_line(line), |t| t.0);
            return Err(parse_error(
                ln,
                col,
                format!(
                    "point needs `x y z doppler snr [linear|db]`, found {} fields",
                    toks.len()
                ),
            ));
        }
        let unit = match toks.get(5) {
            None => SnrUnit::Linear,
            Some((_, u)) if u.eq_ignore_ascii_case("linear") => SnrUnit::Linear,
            Some((_, u)) if u.eq_ignore_ascii_case("db") => SnrUnit::Decibel,
            Some(&(col, u)) => {
                return Err(parse_error(
                    ln,
                    col,
                    format!("unknown snr unit `{u}` (linear or db)"),
                ))
            }
        };
        let snr = unit.to_linear(number(ln, toks[4], "snr")?);
        if snr < 0.0 {
            return Err(parse_error(
                ln,
                toks[4].0,
                "linear snr must be non-negative",
            ));
        }
        frame.points.push(RadarPoint::new(
            number(ln, toks[0], "x")?,
            number(ln, toks[1], "y")?,
            number(ln, toks[2], "z")?,
            number(ln, toks[3], "doppler")?,
            snr,
        ));
    }
    Ok(frames)
}

/// Canonical text form: shortest round-trip decimals, linear SNR, no
/// comments.
pub fn format_frames(frames: &[FrameRecord]) -> String {
    let mut out = String::new();
    for f in frames {
        let _ = match f.pose {
            Some(p) => writeln!(out, "frame {} {} {} {}", f.timestamp, p.x, p.y, p.heading),
            None => writeln!(out, "frame {}", f.timestamp),
        };
        for p in &f.points {
            let _ = writeln!(out, "{} {} {} {} {}", p.x, p.y, p.z, p.doppler, p.snr);
        }
    }
    out
}

pub fn load_frames(path: &Path) -> Result<Vec<FrameRecord>> {
    parse_frames(&fs::read_to_string(path)?)
}

pub fn save_frames(path: &Path, frames: &[FrameRecord]) -> Result<()> {
    Ok(fs::write(path, format_frames(frames))?)
}

fn parse_json_lines<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            serde_json::from_str(l).map_err(|e| parse_error(k + 1, e.column(), e.to_string()))
        })
        .collect()
}

fn format_json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

/// One polygon per line.
pub fn parse_polygons(text: &str) -> Result<Vec<RadarPolygon>> {
    parse_json_lines(text)
}

pub fn format_polygons(polys: &[RadarPolygon]) -> Result<String> {
    format_json_lines(polys)
}

pub fn load_polygons(path: &Path) -> Result<Vec<RadarPolygon>> {
    parse_polygons(&fs::read_to_string(path)?)
}

/// Run-length encoded mask with the sensor pose it was taken from.
///
/// `runs` alternates occupied and free cell counts in row-major order,
/// starting with occupied (possibly zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub timestamp: f64,
    pub pose: Pose,
    pub spec: GridSpec,
    pub runs: Vec<usize>,
}

impl MaskRecord {
    pub fn encode(timestamp: f64, pose: Pose, mask: &FreeSpaceMask) -> Self {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0;
        for &c in &mask.cells {
            if c == current {
                len += 1;
            } else {
                runs.push(len);
                current = c;
                len = 1;
            }
        }
        runs.push(len);
        Self {
            timestamp,
            pose,
            spec: mask.spec,
            runs,
        }
    }

    pub fn decode(&self) -> Result<FreeSpaceMask> {
        self.spec.validate()?;
        let total: usize = self.runs.iter().sum();
        if total != self.spec.cell_count() {
            return Err(Error::InvalidConfig(format!(
                "mask runs cover {total} cells, grid has {}",
                self.spec.cell_count()
            )));
        }
        let mut cells = Vec::with_capacity(total);
        for (k, &n) in self.runs.iter().enumerate() {
            cells.extend(std::iter::repeat_n(k % 2 == 1, n));
        }
        Ok(FreeSpaceMask {
            spec: self.spec,
            cells,
        })
    }
}

pub fn parse_masks(text: &str) -> Result<Vec<MaskRecord>> {
    parse_json_lines(text)
}

pub fn format_masks(masks: &[MaskRecord]) -> Result<String> {
    format_json_lines(masks)
}

pub fn load_masks(path: &Path) -> Result<Vec<MaskRecord>> {
    parse_masks(&fs::read_to_string(path)?)
}

/// Query points, one `a b` pair per line.
pub fn parse_queries(text: &str) -> Result<Vec<Point2>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let line = strip_comment(line);
        if line.trim().is_empty() {
            continue;
        }
        let toks = tokens(line);
        if toks.len() != 2 {
            let col = toks.get(2).map_or(end_of_line(line), |t| t.0);
            return Err(parse_error(
                ln,
                col,
                "query line needs exactly two coordinates",
            ));
        }
        out.push(Point2::new(
            number(ln, toks[0], "a")?,
            number(ln, toks[1], "b")?,
        ));
    }
    Ok(out)
}

pub fn load_queries(path: &Path) -> Result<Vec<Point2>> {
    parse_queries(&fs::read_to_string(path)?)
}

/// Everything tunable in one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub seed: u64,
    pub eval: EvalConfig,
    /// Replace library scenarios of the same name or add new ones.
    pub scenarios: Vec<Scenario>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            eval: EvalConfig::default(),
            scenarios: Vec::new(),
        }
    }
}

impl Config {
    pub fn with_scenario_library() -> Self {
        Self {
            scenarios: generate_scenarios(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.eval.ism.validate()?;
        self.eval.grid.validate()?;
        self.scenarios.iter().try_for_each(Scenario::validate)
    }

    /// Looks up a scenario, preferring entries from this file, and applies
    /// the configured seed.
    pub fn scenario(&self, name: &str) -> Result<Scenario> {
        let scn = match self.scenarios.iter().find(|s| s.name == name) {
            Some(s) => s.clone(),
            None => generate_scenarios()
                .into_iter()
                .find(|s| s.name == name)
                .ok_or_else(|| Error::UnknownName {
                    kind: "scenario",
                    name: name.to_string(),
                    valid: SCENARIO_NAMES
                        .iter()
                        .map(|s| s.to_string())
                        .chain(self.scenarios.iter().map(|s| s.name.clone()))
                        .collect(),
                })?,
        };
        Ok(scn.with_seed(self.seed))
    }
}
