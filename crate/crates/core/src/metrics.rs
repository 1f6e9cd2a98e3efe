//! Accuracy, smoothness, prediction and resource metrics, and the
//! per-method evaluation pipeline behind the `eval` and `sweep-theta`
//! commands.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::deformation::predict_polygon;
use crate::error::{Error, Result};
use crate::formation::form_polygon;
use crate::geometry::{
    mask_iou, polygon_iou, rasterize_polygon, FreeSpaceMask, Point2, Pose, RadarPolygon,
};
use crate::grid::{GridAccumulator, GridConfig, OccupancyGrid};
use crate::ism::{
    compensate_pose, state_memory_report, update_polygon_ism, IsmConfig, PolygonState,
};
use crate::sim::{simulate, Scenario, SimFrame};

/// An IoU value with a flag for inputs that could not be rasterized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IouOutcome {
    pub value: f64,
    /// The polygon was empty or degenerate; `value` is 0.
    pub degenerate: bool,
}

impl IouOutcome {
    fn degenerate() -> Self {
        Self {
            value: 0.0,
            degenerate: true,
        }
    }
}

pub fn iou_gt(poly: &RadarPolygon, gt: &FreeSpaceMask) -> Result<IouOutcome> {
    let raster = rasterize_polygon(poly, &gt.spec);
    if raster.degenerate {
        return Ok(IouOutcome::degenerate());
    }
    Ok(IouOutcome {
        value: mask_iou(&raster.mask, gt)?,
        degenerate: false,
    })
}

/// Expresses `prev`, observed from `prev_pose`, in the sensor frame at `cur_pose`.
pub fn compensate_polygon(prev: &RadarPolygon, prev_pose: &Pose, cur_pose: &Pose) -> RadarPolygon {
    RadarPolygon {
        vertices: compensate_pose(&prev.vertices, prev_pose, cur_pose),
        sensor_origin: cur_pose.to_local(prev_pose.to_global(prev.sensor_origin)),
        ..prev.clone()
    }
}

/// How consecutive polygons are compared for smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothMode {
    /// Motion-compensated previous polygon against the current one.
    #[default]
    Compensated,
    /// Compensated previous polygon, Doppler-predicted to the current time.
    Predicted,
}

/// Smoothness between successive polygons. An empty polygon on either side
/// gives 0 with the flag set; a non-empty degenerate ring is an error.
pub fn iou_smooth(
    prev: &RadarPolygon,
    prev_pose: &Pose,
    cur: &RadarPolygon,
    cur_pose: &Pose,
    resolution: f64,
) -> Result<IouOutcome> {
    iou_smooth_with(
        prev,
        prev_pose,
        cur,
        cur_pose,
        resolution,
        SmoothMode::Compensated,
    )
}

pub fn iou_smooth_with(
    prev: &RadarPolygon,
    prev_pose: &Pose,
    cur: &RadarPolygon,
    cur_pose: &Pose,
    resolution: f64,
    mode: SmoothMode,
) -> Result<IouOutcome> {
    if prev.vertices.is_empty() || cur.vertices.is_empty() {
        return Ok(IouOutcome::degenerate());
    }
    let mut moved = compensate_polygon(prev, prev_pose, cur_pose);
    if mode == SmoothMode::Predicted {
        moved = predict_polygon(&moved, (cur.timestamp - prev.timestamp).max(0.0))?;
    }
    Ok(IouOutcome {
        value: polygon_iou(&moved, cur, resolution)?,
        degenerate: false,
    })
}

/// Fraction of cells on which the two masks disagree.
pub fn mse_free(pred: &FreeSpaceMask, gt: &FreeSpaceMask) -> Result<f64> {
    if pred.spec != gt.spec {
        return Err(Error::GridMismatch);
    }
    if gt.cells.is_empty() {
        return Ok(0.0);
    }
    let wrong = pred
        .cells
        .iter()
        .zip(&gt.cells)
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / gt.cells.len() as f64)
}

/// IoU between `cur` predicted `dt` ahead and the polygon formed at that time.
pub fn prediction_iou(
    cur: &RadarPolygon,
    dt: f64,
    next_formed: &RadarPolygon,
    resolution: f64,
) -> Result<f64> {
    polygon_iou(&predict_polygon(cur, dt)?, next_formed, resolution)
}

/// Wall-clock statistics over per-frame durations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RuntimeProfile {
    pub frames: usize,
    pub total_ms: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
}

pub fn runtime_profile(durations: &[Duration]) -> RuntimeProfile {
    if durations.is_empty() {
        return RuntimeProfile::default();
    }
    let mut ms: Vec<f64> = durations.iter().map(|d| d.as_secs_f64() * 1e3).collect();
    let total: f64 = ms.iter().sum();
    ms.sort_by(f64::total_cmp);
    let rank = ((0.95 * ms.len() as f64).ceil() as usize).clamp(1, ms.len());
    RuntimeProfile {
        frames: ms.len(),
        total_ms: total,
        mean_ms: total / ms.len() as f64,
        p95_ms: ms[rank - 1],
    }
}

/// Grid cells per stored polygon vertex slot.
pub fn memory_ratio(grid: &OccupancyGrid, state: &PolygonState) -> f64 {
    memory_ratio_counts(grid.cell_count(), state.vertex_capacity())
}

pub fn memory_ratio_counts(grid_cells: usize, vertex_capacity: usize) -> f64 {
    grid_cells as f64 / vertex_capacity.max(1) as f64
}

/// Fraction of frames in which some polygon vertex sits exactly on an
/// isolated clutter point (no other detection within `radius`).
pub fn clutter_vertex_rate(frames: &[SimFrame], polygons: &[RadarPolygon], radius: f64) -> f64 {
    if frames.is_empty() {
        return 0.0;
    }
    let r2 = radius * radius;
    let hits = frames
        .iter()
        .zip(polygons)
        .filter(|(f, poly)| {
            let isolated: Vec<Point2> = (0..f.points.len())
                .filter(|&i| f.is_clutter(i))
                .map(|i| f.points[i].position())
                .filter(|&c| {
                    f.points
                        .iter()
                        .filter(|q| q.position().distance_sq(c) <= r2)
                        .count()
                        == 1
                })
                .collect();
            poly.vertices
                .iter()
                .any(|v| !v.is_virtual && isolated.contains(&v.position))
        })
        .count();
    hits as f64 / frames.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Single-shot polygon formed from each frame alone.
    Polygon,
    /// Recursive polygon with the inverse sensor model.
    PolygonIsm,
    /// Occupancy grid baseline.
    Grid,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Polygon, Method::PolygonIsm, Method::Grid];

    pub fn name(self) -> &'static str {
        match self {
            Method::Polygon => "polygon",
            Method::PolygonIsm => "polygon_ism",
            Method::Grid => "grid",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "method",
                name: name.to_string(),
                valid: Self::ALL.iter().map(|m| m.name().to_string()).collect(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub ism: IsmConfig,
    pub grid: GridConfig,
    pub smooth_mode: SmoothMode,
    /// Track with Doppler compensation instead of poses.
    pub doppler_compensation: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ism: IsmConfig::default(),
            grid: GridConfig::default(),
            smooth_mode: SmoothMode::Compensated,
            doppler_compensation: false,
        }
    }
}

/// Per-frame results of one method on one frame sequence.
#[derive(Debug, Clone, Default)]
pub struct MethodSeries {
    pub iou_gt: Vec<f64>,
    /// One entry per frame after the first.
    pub iou_smooth: Vec<f64>,
    pub mse: Vec<f64>,
    pub durations: Vec<Duration>,
    /// Empty for the grid.
    pub polygons: Vec<RadarPolygon>,
    pub degenerate_frames: usize,
    /// Memory report of the final polygon state, or grid cells for the grid.
    pub stored_items: usize,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl MethodSeries {
    pub fn mean_iou_gt(&self) -> Option<f64> {
        mean(&self.iou_gt)
    }

    pub fn mean_iou_smooth(&self) -> Option<f64> {
        mean(&self.iou_smooth)
    }

    pub fn mean_mse(&self) -> Option<f64> {
        mean(&self.mse)
    }

    pub fn profile(&self) -> RuntimeProfile {
        runtime_profile(&self.durations)
    }
}

fn polygon_metrics(series: &mut MethodSeries, frames: &[SimFrame], cfg: &EvalConfig) -> Result<()> {
    let res = frames.first().map_or(0.1, |f| f.gt.spec.resolution);
    for (k, (f, poly)) in frames.iter().zip(&series.polygons).enumerate() {
        let outcome = iou_gt(poly, &f.gt)?;
        series.degenerate_frames += usize::from(outcome.degenerate);
        series.iou_gt.push(outcome.value);
        series
            .mse
            .push(mse_free(&rasterize_polygon(poly, &f.gt.spec).mask, &f.gt)?);
        if k > 0 {
            let prev = &series.polygons[k - 1];
            let s = iou_smooth_with(
                prev,
                &frames[k - 1].pose,
                poly,
                &f.pose,
                res,
                cfg.smooth_mode,
            )?;
            series.iou_smooth.push(s.value);
        }
    }
    Ok(())
}

/// Runs one method over pre-simulated frames. Only the method update is
/// timed; rasterization and metric evaluation are excluded.
pub fn run_method(frames: &[SimFrame], method: Method, cfg: &EvalConfig) -> Result<MethodSeries> {
    let mut series = MethodSeries::default();
    match method {
        Method::Polygon => {
            for f in frames {
                let start = Instant::now();
                let poly = form_polygon(&f.points, &cfg.ism.formation, f.timestamp)?;
                series.durations.push(start.elapsed());
                series.polygons.push(poly);
            }
            series.stored_items = series.polygons.last().map_or(0, |p| p.ring_len());
            polygon_metrics(&mut series, frames, cfg)?;
        }
        Method::PolygonIsm => {
            let mut state = PolygonState::new(&cfg.ism);
            for f in frames {
                let pose = (!cfg.doppler_compensation).then_some(f.pose);
                let start = Instant::now();
                state = update_polygon_ism(state, &f.points, pose, f.timestamp, &cfg.ism)?;
                series.durations.push(start.elapsed());
                series.polygons.push(state.polygon.clone());
            }
            series.stored_items = state_memory_report(&state).vertex_count;
            polygon_metrics(&mut series, frames, cfg)?;
        }
        Method::Grid => {
            let mut acc = GridAccumulator::new(cfg.grid, cfg.ism.formation)?;
            for f in frames {
                let start = Instant::now();
                acc.update(&f.points, &f.pose)?;
                series.durations.push(start.elapsed());
                let free = acc.free_mask_in_sensor_frame(&f.gt.spec, &f.pose);
                series.mse.push(mse_free(&free, &f.gt)?);
            }
            series.stored_items = acc.grid().cell_count();
        }
    }
    Ok(series)
}

/// One report line: the columns of the accuracy/runtime comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    /// Not defined for the grid.
    pub iou_gt: Option<f64>,
    pub iou_smooth: Option<f64>,
    pub mse: Option<f64>,
    /// `None` when timing is omitted for reproducible output.
    pub ms_per_frame: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub frames: usize,
    pub rows: Vec<ReportRow>,
}

pub fn report_row(method: Method, series: &MethodSeries, timing: bool) -> ReportRow {
    let polygonal = method != Method::Grid;
    ReportRow {
        method: method.name().to_string(),
        iou_gt: if polygonal {
            series.mean_iou_gt()
        } else {
            None
        },
        iou_smooth: if polygonal {
            series.mean_iou_smooth()
        } else {
            None
        },
        mse: series.mean_mse(),
        ms_per_frame: timing.then(|| series.profile().mean_ms),
    }
}

pub fn evaluate_frames(
    scenario: &str,
    seed: u64,
    frames: &[SimFrame],
    methods: &[Method],
    cfg: &EvalConfig,
    timing: bool,
) -> Result<Report> {
    let rows = methods
        .iter()
        .map(|&m| Ok(report_row(m, &run_method(frames, m, cfg)?, timing)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        scenario: scenario.to_string(),
        seed,
        frames: frames.len(),
        rows,
    })
}

pub fn evaluate_scenario(
    scn: &Scenario,
    methods: &[Method],
    cfg: &EvalConfig,
    timing: bool,
) -> Result<Report> {
    let frames = simulate(scn)?;
    evaluate_frames(&scn.name, scn.rng_seed, &frames, methods, cfg, timing)
}

/// Metrics of an externally produced polygon stream against ground truth.
pub fn evaluate_polygon_stream(
    polygons: &[RadarPolygon],
    poses: &[Pose],
    gts: &[FreeSpaceMask],
    cfg: &EvalConfig,
) -> Result<MethodSeries> {
    if polygons.len() != gts.len() || polygons.len() != poses.len() {
        return Err(Error::InvalidConfig(format!(
            "stream lengths differ: {} polygons, {} poses, {} masks",
            polygons.len(),
            poses.len(),
            gts.len()
        )));
    }
    let frames: Vec<SimFrame> = gts
        .iter()
        .zip(poses)
        .zip(polygons)
        .enumerate()
        .map(|(k, ((gt, pose), p))| SimFrame {
            index: k,
            timestamp: p.timestamp,
            points: Vec::new(),
            sources: Vec::new(),
            pose: *pose,
            gt: gt.clone(),
        })
        .collect();
    let mut series = MethodSeries {
        polygons: polygons.to_vec(),
        ..MethodSeries::default()
    };
    polygon_metrics(&mut series, &frames, cfg)?;
    Ok(series)
}

fn cell(v: Option<f64>, percent: bool) -> String {
    match v {
        Some(x) if percent => format!("{:.2}%", 100.0 * x),
        Some(x) => format!("{x:.4}"),
        None => "--".to_string(),
    }
}

impl Report {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {} (seed {}, {} frames)",
            self.scenario, self.seed, self.frames
        );
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>11} {:>8} {:>9}",
            "method", "IoU-gt", "IoU-smooth", "MSE", "ms/frame"
        );
        for r in &self.rows {
            let ms = r
                .ms_per_frame
                .map_or("--".to_string(), |m| format!("{m:.3}"));
            let _ = writeln!(
                out,
                "{:<12} {:>9} {:>11} {:>8} {:>9}",
                r.method,
                cell(r.iou_gt, true),
                cell(r.iou_smooth, true),
                cell(r.mse, false),
                ms
            );
        }
        out
    }
}

/// One sampling-angle configuration of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_theta_deg: f64,
    pub sectors: usize,
    pub polygon_iou_gt: f64,
    pub polygon_iou_smooth: f64,
    /// Mean ring length, counting the origin closure.
    pub polygon_vertices: f64,
    pub ism_iou_gt: f64,
    pub ism_iou_smooth: f64,
    pub ism_vertices: f64,
    pub polygon_ms: Option<f64>,
    pub ism_ms: Option<f64>,
}

/// Both polygon methods over the same frames for each sampling angle.
pub fn sweep_theta(
    frames: &[SimFrame],
    deltas_deg: &[f64],
    cfg: &EvalConfig,
    timing: bool,
) -> Result<Vec<SweepRow>> {
    deltas_deg
        .iter()
        .map(|&d| {
            let mut c = *cfg;
            let s = &mut c.ism.formation.sector;
            *s = crate::geometry::SectorConfig::from_degrees(
                d,
                s.fov_start.to_degrees(),
                s.fov_end.to_degrees(),
                s.max_range,
            );
            c.ism.validate()?;
            let single = run_method(frames, Method::Polygon, &c)?;
            let ism = run_method(frames, Method::PolygonIsm, &c)?;
            let vertices = |s: &MethodSeries| {
                s.polygons.iter().map(|p| p.ring_len() as f64).sum::<f64>()
                    / s.polygons.len().max(1) as f64
            };
            Ok(SweepRow {
                delta_theta_deg: d,
                sectors: c.ism.formation.sector.sector_count(),
                polygon_iou_gt: single.mean_iou_gt().unwrap_or(0.0),
                polygon_iou_smooth: single.mean_iou_smooth().unwrap_or(0.0),
                polygon_vertices: vertices(&single),
                ism_iou_gt: ism.mean_iou_gt().unwrap_or(0.0),
                ism_iou_smooth: ism.mean_iou_smooth().unwrap_or(0.0),
                ism_vertices: vertices(&ism),
                polygon_ms: timing.then(|| single.profile().mean_ms),
                ism_ms: timing.then(|| ism.profile().mean_ms),
            })
        })
        .collect()
}

/// Prediction IoU between consecutive single-shot polygons of a sequence.
pub fn prediction_series(
    frames: &[SimFrame],
    cfg: &EvalConfig,
    dt: f64,
    resolution: f64,
) -> Result<Vec<f64>> {
    let polys = frames
        .iter()
        .map(|f| form_polygon(&f.points, &cfg.ism.formation, f.timestamp))
        .collect::<Result<Vec<_>>>()?;
    polys
        .windows(2)
        .filter(|w| !w[0].is_degenerate() && !w[1].is_degenerate())
        .map(|w| prediction_iou(&w[0], dt, &w[1], resolution))
        .collect()
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
