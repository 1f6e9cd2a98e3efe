//! Seeded synthetic radar scenes: ray-cast detections, clutter, ego motion
//! and ground-truth visible free space.
//!
//! Obstacles are oriented rectangles moving at constant velocity. The sensor
//! sits at the ego origin, rotated by `mount_yaw`. Each frame draws from its
//! own ChaCha stream, so frames can be generated independently and in any
//! order with bit-identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::detection_probability;
use crate::geometry::{FreeSpaceMask, GridSpec, Point2, Pose, RadarPoint, SectorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    /// Center at t = 0 (global).
    pub center: Point2,
    pub half_length: f64,
    pub half_width: f64,
    pub yaw: f64,
    /// Constant global velocity (m/s).
    pub velocity: Point2,
    /// Multiplier on the SNR of returns from this obstacle.
    pub rcs_scale: f64,
}

impl Obstacle {
    pub fn static_box(cx: f64, cy: f64, half_length: f64, half_width: f64, yaw: f64) -> Self {
        Self {
            center: Point2::new(cx, cy),
            half_length,
            half_width,
            yaw,
            velocity: Point2::ORIGIN,
            rcs_scale: 1.0,
        }
    }

    /// Axis-aligned wall from `(x0, y0)` to `(x1, y1)`.
    pub fn wall(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::static_box(
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0,
            (x1 - x0).abs() / 2.0,
            (y1 - y0).abs() / 2.0,
            0.0,
        )
    }

    pub fn moving(mut self, velocity: Point2) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn center_at(&self, t: f64) -> Point2 {
        self.center + self.velocity * t
    }

    /// Corners at time `t`, counter-clockwise.
    pub fn corners_at(&self, t: f64) -> [Point2; 4] {
        let c = self.center_at(t);
        let (s, co) = self.yaw.sin_cos();
        let u = Point2::new(co, s) * self.half_length;
        let v = Point2::new(-s, co) * self.half_width;
        [c - u - v, c + u - v, c + u + v, c - u + v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub range_sigma: f64,
    pub azimuth_sigma: f64,
    /// Linear SNR of a unit-RCS return at 1 m.
    pub snr_mean_at_1m: f64,
    pub snr_range_decay: f64,
    /// Standard deviation of the log-normal SNR jitter (natural-log units).
    pub snr_jitter: f64,
    /// Expected clutter points per frame.
    pub clutter_rate: f64,
    /// Mean linear SNR of clutter points (exponentially distributed).
    pub clutter_snr: f64,
    pub doppler_sigma: f64,
    /// Probability that a ray return is lost regardless of SNR.
    pub dropout: f64,
    /// Expected one-frame ghost clusters (multipath, ground patches) per frame.
    pub ghost_rate: f64,
    pub ghost_points: usize,
    /// Standard deviation of ghost points around their cluster center.
    pub ghost_spread: f64,
    /// Swerling-1 fluctuation: every return's SNR is scaled by an
    /// independent Exp(1) factor.
    pub fading: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            range_sigma: 0.04,
            azimuth_sigma: 0.2_f64.to_radians(),
            snr_mean_at_1m: 2.0e4,
            snr_range_decay: 2.0,
            snr_jitter: 0.3,
            clutter_rate: 1.0,
            clutter_snr: 2.0,
            doppler_sigma: 0.05,
            dropout: 0.02,
            ghost_rate: 0.0,
            ghost_points: 8,
            ghost_spread: 0.15,
            fading: false,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            range_sigma: 0.0,
            azimuth_sigma: 0.0,
            snr_jitter: 0.0,
            clutter_rate: 0.0,
            doppler_sigma: 0.0,
            dropout: 0.0,
            ghost_rate: 0.0,
            fading: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("range_sigma", self.range_sigma),
            ("azimuth_sigma", self.azimuth_sigma),
            ("snr_mean_at_1m", self.snr_mean_at_1m),
            ("snr_range_decay", self.snr_range_decay),
            ("snr_jitter", self.snr_jitter),
            ("clutter_rate", self.clutter_rate),
            ("clutter_snr", self.clutter_snr),
            ("doppler_sigma", self.doppler_sigma),
            ("dropout", self.dropout),
            ("ghost_rate", self.ghost_rate),
            ("ghost_spread", self.ghost_spread),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "noise {name} must be non-negative and finite"
                )));
            }
        }
        if self.dropout > 1.0 {
            return Err(Error::InvalidConfig(
                "noise dropout must not exceed 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub sector: SectorConfig,
    /// Sensor boresight relative to the ego heading.
    pub mount_yaw: f64,
    /// Angular spacing of the cast rays (radians).
    pub ray_spacing: f64,
    /// Height assigned to obstacle returns.
    pub point_height: f64,
    /// Ground-truth mask resolution (meters).
    pub gt_resolution: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            sector: SectorConfig::default(),
            mount_yaw: 0.0,
            ray_spacing: 0.5_f64.to_radians(),
            point_height: 0.5,
            gt_resolution: 0.1,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        self.sector.validate()?;
        if !(self.ray_spacing > 0.0) || !(self.gt_resolution > 0.0) {
            return Err(Error::InvalidConfig(
                "ray_spacing and gt_resolution must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Ray azimuths in the sensor frame, centered inside the field of view.
    pub fn ray_azimuths(&self) -> Vec<f64> {
        let n = (self.sector.span() / self.ray_spacing).round().max(1.0) as usize;
        let step = self.sector.span() / n as f64;
        (0..n)
            .map(|k| self.sector.fov_start + (k as f64 + 0.5) * step)
            .collect()
    }

    /// Sensor-frame grid covering the field of view.
    pub fn gt_spec(&self) -> GridSpec {
        let (lo, hi) = self.sector.bounding_box();
        GridSpec::covering(lo, hi, self.gt_resolution).expect("validated sensor model")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub obstacles: Vec<Obstacle>,
    /// Global ego pose per frame.
    pub ego_trajectory: Vec<Pose>,
    pub frame_rate: f64,
    pub sensor: SensorModel,
    pub noise: NoiseModel,
    pub rng_seed: u64,
}

/// Origin of a simulated detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    /// Return from the obstacle with this index.
    Obstacle(usize),
    /// Isolated low-SNR clutter point.
    Clutter,
    /// Member of a one-frame ghost cluster.
    Ghost,
}

/// One simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFrame {
    pub index: usize,
    pub timestamp: f64,
    /// Detections in the sensor frame.
    pub points: Vec<RadarPoint>,
    pub sources: Vec<PointSource>,
    /// Global sensor pose.
    pub pose: Pose,
    pub gt: FreeSpaceMask,
}

impl SimFrame {
    /// Isolated clutter (ghost clusters excluded).
    pub fn is_clutter(&self, i: usize) -> bool {
        self.sources[i] == PointSource::Clutter
    }

    pub fn is_false_alarm(&self, i: usize) -> bool {
        !matches!(self.sources[i], PointSource::Obstacle(_))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.ego_trajectory.is_empty() {
            return Err(Error::InvalidConfig(
                "scenario trajectory must contain at least one pose".into(),
            ));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::InvalidConfig("frame_rate must be positive".into()));
        }
        self.sensor.validate()?;
        self.noise.validate()
    }

    pub fn frame_count(&self) -> usize {
        self.ego_trajectory.len()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.frame_rate
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Truncates the trajectory, or extends it at the final velocity.
    pub fn with_frames(mut self, n: usize) -> Self {
        let n = n.max(1);
        let len = self.ego_trajectory.len();
        if n <= len {
            self.ego_trajectory.truncate(n);
            return self;
        }
        let last = self.ego_trajectory[len - 1];
        let (step, turn) = if len >= 2 {
            let prev = self.ego_trajectory[len - 2];
            (
                last.position() - prev.position(),
                last.heading - prev.heading,
            )
        } else {
            (Point2::ORIGIN, 0.0)
        };
        for k in 1..=(n - len) {
            let p = last.position() + step * k as f64;
            self.ego_trajectory
                .push(Pose::new(p.x, p.y, last.heading + turn * k as f64));
        }
        self
    }

    /// Global sensor pose at a frame.
    pub fn sensor_pose(&self, frame_index: usize) -> Pose {
        let ego = self.ego_trajectory[frame_index];
        Pose::new(ego.x, ego.y, ego.heading + self.sensor.mount_yaw)
    }

    /// Ego velocity (global) by finite differences of the trajectory.
    pub fn ego_velocity(&self, frame_index: usize) -> Point2 {
        let t = &self.ego_trajectory;
        if t.len() < 2 {
            return Point2::ORIGIN;
        }
        let k = frame_index.min(t.len() - 2);
        (t[k + 1].position() - t[k].position()) * self.frame_rate
    }
}

/// First intersection of a ray with a segment, as the ray parameter.
fn ray_segment(origin: Point2, dir: Point2, p: Point2, q: Point2) -> Option<f64> {
    let e = q - p;
    let denom = dir.x * e.y - dir.y * e.x;
    if denom == 0.0 {
        return None;
    }
    let w = p - origin;
    let t = (w.x * e.y - w.y * e.x) / denom;
    let u = (w.x * dir.y - w.y * dir.x) / denom;
    (t > 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Obstacle outlines at one instant, in the sensor frame.
struct LocalScene {
    edges: Vec<(Point2, Point2, usize)>,
    boxes: Vec<[Point2; 4]>,
}

impl LocalScene {
    fn new(scn: &Scenario, pose: &Pose, t: f64) -> Self {
        let reach = scn.sensor.sector.max_range;
        let mut edges = Vec::new();
        let mut boxes = Vec::new();
        for (i, ob) in scn.obstacles.iter().enumerate() {
            let c = pose.to_local(ob.center_at(t));
            if c.norm() > reach + ob.half_length + ob.half_width {
                continue;
            }
            let corners = ob.corners_at(t).map(|g| pose.to_local(g));
            for k in 0..4 {
                edges.push((corners[k], corners[(k + 1) % 4], i));
            }
            boxes.push(corners);
        }
        Self { edges, boxes }
    }

    /// Nearest hit along a sensor-frame azimuth.
    fn cast(&self, azimuth: f64) -> Option<(f64, usize)> {
        let dir = Point2::from_polar(1.0, azimuth);
        let mut best: Option<(f64, usize)> = None;
        for &(p, q, i) in &self.edges {
            if let Some(t) = ray_segment(Point2::ORIGIN, dir, p, q) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best
    }

    fn inside_any(&self, p: Point2) -> bool {
        self.boxes.iter().any(|b| {
            (0..4).all(|k| {
                let (a, c) = (b[k], b[(k + 1) % 4]);
                (c.x - a.x) * (p.y - a.y) - (c.y - a.y) * (p.x - a.x) >= 0.0
            })
        })
    }

    /// Whether the open segment from the sensor to `p` hits any obstacle.
    fn occluded(&self, p: Point2) -> bool {
        let r = p.norm();
        if r == 0.0 {
            return false;
        }
        let dir = p * (1.0 / r);
        self.edges
            .iter()
            .any(|&(a, b, _)| ray_segment(Point2::ORIGIN, dir, a, b).is_some_and(|t| t < r))
    }
}

/// Visible free space in the sensor frame: cells whose center lies inside the
/// field of view, within range, outside every obstacle and with an
/// unobstructed line of sight.
fn ground_truth(scene: &LocalScene, sensor: &SensorModel) -> FreeSpaceMask {
    let spec = sensor.gt_spec();
    let mut mask = FreeSpaceMask::empty(spec);
    let cfg = &sensor.sector;
    for iy in 0..spec.height {
        for ix in 0..spec.width {
            let c = spec.cell_center(ix, iy);
            let r = c.norm();
            if r > cfg.max_range || r == 0.0 {
                continue;
            }
            let az = c.azimuth();
            if !cfg.is_full_circle() && (az < cfg.fov_start || az > cfg.fov_end) {
                continue;
            }
            if scene.inside_any(c) || scene.occluded(c) {
                continue;
            }
            mask.set(ix, iy, true);
        }
    }
    mask
}

pub fn frame_rng(seed: u64, frame_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index as u64);
    rng
}

fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    z * sigma
}

/// Frame `frame_index` of a scenario: detections, sensor pose and ground truth.
pub fn simulate_frame(scn: &Scenario, frame_index: usize) -> Result<SimFrame> {
    scn.validate()?;
    if frame_index >= scn.frame_count() {
        return Err(Error::InvalidConfig(format!(
            "frame {frame_index} outside trajectory of {} frames",
            scn.frame_count()
        )));
    }
    let t = frame_index as f64 * scn.dt();
    let pose = scn.sensor_pose(frame_index);
    let ego_v = scn.ego_velocity(frame_index);
    let scene = LocalScene::new(scn, &pose, t);
    let noise = &scn.noise;
    let cfg = &scn.sensor.sector;
    let mut rng = frame_rng(scn.rng_seed, frame_index);

    let mut points = Vec::new();
    let mut sources = Vec::new();
    for az in scn.sensor.ray_azimuths() {
        let Some((range, ob)) = scene.cast(az) else {
            continue;
        };
        if range > cfg.max_range {
            continue;
        }
        // draws happen for every hit so the stream layout does not depend on outcomes
        let r_noise = normal(&mut rng, noise.range_sigma);
        let az_noise = normal(&mut rng, noise.azimuth_sigma);
        let jitter = normal(&mut rng, noise.snr_jitter).exp();
        let d_noise = normal(&mut rng, noise.doppler_sigma);
        let u_detect: f64 = rng.random();
        let u_drop: f64 = rng.random();
        let fade: f64 = Exp1.sample(&mut rng);

        let obstacle = &scn.obstacles[ob];
        let snr = noise.snr_mean_at_1m / range.max(1e-3).powf(noise.snr_range_decay)
            * obstacle.rcs_scale
            * jitter
            * if noise.fading { fade } else { 1.0 };
        if u_drop < noise.dropout || u_detect >= detection_probability(snr, 1e-3)? {
            continue;
        }
        let los_global = Point2::from_polar(1.0, az + pose.heading);
        let rel = obstacle.velocity - ego_v;
        let doppler = rel.x * los_global.x + rel.y * los_global.y + d_noise;
        let p = Point2::from_polar((range + r_noise).max(0.0), az + az_noise);
        points.push(RadarPoint::new(
            p.x,
            p.y,
            scn.sensor.point_height,
            doppler,
            snr,
        ));
        sources.push(PointSource::Obstacle(ob));
    }

    if noise.clutter_rate > 0.0 {
        let count = Poisson::new(noise.clutter_rate)
            .map_err(|e| Error::InvalidConfig(format!("clutter_rate: {e}")))?
            .sample(&mut rng) as usize;
        for _ in 0..count {
            let r = cfg.max_range * rng.random::<f64>().sqrt();
            let az = cfg.fov_start + cfg.span() * rng.random::<f64>();
            let e: f64 = Exp1.sample(&mut rng);
            let snr = noise.clutter_snr * e;
            let doppler = normal(&mut rng, noise.doppler_sigma);
            let z = rng.random_range(-0.5..2.0);
            let p = Point2::from_polar(r, az);
            points.push(RadarPoint::new(p.x, p.y, z, doppler, snr));
            sources.push(PointSource::Clutter);
        }
    }

    if noise.ghost_rate > 0.0 {
        let count = Poisson::new(noise.ghost_rate)
            .map_err(|e| Error::InvalidConfig(format!("ghost_rate: {e}")))?
            .sample(&mut rng) as usize;
        for _ in 0..count {
            let r = cfg.max_range * rng.random::<f64>().sqrt();
            let az = cfg.fov_start + cfg.span() * rng.random::<f64>();
            let center = Point2::from_polar(r, az);
            let snr_mean = noise.snr_mean_at_1m / r.max(1.0).powf(noise.snr_range_decay);
            let doppler = normal(&mut rng, noise.doppler_sigma);
            for _ in 0..noise.ghost_points {
                let p = center
                    + Point2::new(
                        normal(&mut rng, noise.ghost_spread),
                        normal(&mut rng, noise.ghost_spread),
                    );
                let e: f64 = Exp1.sample(&mut rng);
                points.push(RadarPoint::new(
                    p.x,
                    p.y,
                    scn.sensor.point_height,
                    doppler + normal(&mut rng, noise.doppler_sigma),
                    snr_mean * e,
                ));
                sources.push(PointSource::Ghost);
            }
        }
    }

    Ok(SimFrame {
        index: frame_index,
        timestamp: t,
        points,
        sources,
        pose,
        gt: ground_truth(&scene, &scn.sensor),
    })
}

/// All frames of a scenario, in order.
pub fn simulate(scn: &Scenario) -> Result<Vec<SimFrame>> {
    (0..scn.frame_count())
        .map(|k| simulate_frame(scn, k))
        .collect()
}

pub const SCENARIO_NAMES: [&str; 5] = [
    "backoff",
    "pedestrian_pass",
    "vehicle_pass",
    "static_lot",
    "noisy_lot",
];

pub const DEFAULT_SEED: u64 = 42;

fn static_trajectory(frames: usize) -> Vec<Pose> {
    vec![Pose::default(); frames]
}

/// Car footprint for perpendicular parking: long axis along y.
fn parked_car(cx: f64, cy: f64) -> Obstacle {
    Obstacle::static_box(cx, cy, 2.25, 0.9, std::f64::consts::FRAC_PI_2)
}

fn static_lot() -> Scenario {
    // nose-in row facing the sensor with one empty bay, then the lot boundary
    let mut obstacles: Vec<Obstacle> = [-7.4, -4.6, 1.0, 3.8, 6.6]
        .iter()
        .enumerate()
        .map(|(k, &y)| Obstacle::static_box(10.25 + 0.2 * (k % 2) as f64, y, 2.25, 0.9, 0.0))
        .collect();
    obstacles.push(Obstacle::wall(16.0, -12.0, 16.4, 12.0));
    obstacles.push(Obstacle::wall(0.0, 11.0, 16.0, 11.4));
    obstacles.push(Obstacle::wall(0.0, -11.4, 16.0, -11.0));
    Scenario {
        name: "static_lot".into(),
        obstacles,
        ego_trajectory: static_trajectory(100),
        frame_rate: 10.0,
        sensor: SensorModel {
            ray_spacing: 0.125_f64.to_radians(),
            ..SensorModel::default()
        },
        noise: NoiseModel::default(),
        rng_seed: DEFAULT_SEED,
    }
}

fn noisy_lot() -> Scenario {
    let mut scn = static_lot();
    scn.name = "noisy_lot".into();
    scn.sensor.ray_spacing = 0.5_f64.to_radians();
    scn.noise = NoiseModel {
        range_sigma: 0.08,
        azimuth_sigma: 0.5_f64.to_radians(),
        snr_mean_at_1m: 5.0e3,
        snr_jitter: 0.5,
        clutter_rate: 5.0,
        clutter_snr: 2.0,
        doppler_sigma: 0.1,
        dropout: 0.1,
        ghost_rate: 1.0,
        fading: true,
        ..NoiseModel::default()
    };
    scn
}

/// Ego reverses down a lane between two rows of parked cars, rear radar.
fn backoff() -> Scenario {
    let mut obstacles = Vec::new();
    let mut x = 3.0;
    let mut k = 0;
    while x > -34.0 {
        // leave a few empty bays
        if k % 5 != 3 {
            obstacles.push(parked_car(x, 4.9 + 0.15 * ((k % 3) as f64 - 1.0)));
        }
        if k % 7 != 2 {
            obstacles.push(parked_car(x - 0.4, -4.9 - 0.1 * ((k % 2) as f64)));
        }
        x -= 2.7;
        k += 1;
    }
    obstacles.push(Obstacle::wall(-36.4, -9.0, -36.0, 9.0));
    let frames = 200;
    let speed = 1.0;
    let trajectory = (0..frames)
        .map(|k| Pose::new(-speed * k as f64 / 10.0, 0.0, 0.0))
        .collect();
    Scenario {
        name: "backoff".into(),
        obstacles,
        ego_trajectory: trajectory,
        frame_rate: 10.0,
        sensor: SensorModel {
            mount_yaw: std::f64::consts::PI,
            ..SensorModel::default()
        },
        noise: NoiseModel::default(),
        rng_seed: DEFAULT_SEED,
    }
}

fn crossing(name: &str, mover: Obstacle) -> Scenario {
    let obstacles = vec![
        mover,
        Obstacle::wall(15.0, -12.0, 15.4, 12.0),
        parked_car(11.0, -6.5),
        parked_car(11.2, 6.8),
    ];
    Scenario {
        name: name.into(),
        obstacles,
        ego_trajectory: static_trajectory(100),
        frame_rate: 10.0,
        sensor: SensorModel::default(),
        noise: NoiseModel::default(),
        rng_seed: DEFAULT_SEED,
    }
}

fn pedestrian_pass() -> Scenario {
    crossing(
        "pedestrian_pass",
        Obstacle::static_box(6.0, -7.0, 0.25, 0.25, 0.0).moving(Point2::new(0.0, 1.4)),
    )
}

fn vehicle_pass() -> Scenario {
    crossing(
        "vehicle_pass",
        Obstacle::static_box(8.0, -25.0, 2.25, 0.9, std::f64::consts::FRAC_PI_2)
            .moving(Point2::new(0.0, 5.0)),
    )
}

/// The built-in scenario library.
pub fn generate_scenarios() -> Vec<Scenario> {
    vec![
        backoff(),
        pedestrian_pass(),
        vehicle_pass(),
        static_lot(),
        noisy_lot(),
    ]
}

pub fn scenario_by_name(name: &str) -> Result<Scenario> {
    generate_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "scenario",
            name: name.to_string(),
            valid: SCENARIO_NAMES.iter().map(|s| s.to_string()).collect(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_scene() -> Scenario {
        Scenario {
            name: "empty".into(),
            obstacles: vec![],
            ego_trajectory: static_trajectory(2),
            frame_rate: 10.0,
            sensor: SensorModel::default(),
            noise: NoiseModel::noiseless(),
            rng_seed: 1,
        }
    }

    fn wall_scene(ego_speed: f64) -> Scenario {
        Scenario {
            obstacles: vec![Obstacle::wall(10.0, -30.0, 10.4, 30.0)],
            ego_trajectory: (0..3)
                .map(|k| Pose::new(ego_speed * k as f64 / 10.0, 0.0, 0.0))
                .collect(),
            noise: NoiseModel {
                clutter_rate: 0.0,
                ..NoiseModel::default()
            },
            ..empty_scene()
        }
    }

    #[test]
    fn empty_scene_is_all_free() {
        let f = simulate_frame(&empty_scene(), 0).unwrap();
        assert!(f.points.is_empty());
        let spec = f.gt.spec;
        for iy in 0..spec.height {
            for ix in 0..spec.width {
                let c = spec.cell_center(ix, iy);
                let in_fov =
                    c.norm() <= 20.0 && c.azimuth().abs() <= 65f64.to_radians() && c.norm() > 0.0;
                assert_eq!(f.gt.get(ix, iy), in_fov);
            }
        }
    }

    #[test]
    fn static_wall_has_zero_doppler() {
        let scn = wall_scene(0.0);
        let f = simulate_frame(&scn, 0).unwrap();
        assert!(!f.points.is_empty());
        for p in &f.points {
            assert!(p.doppler.abs() < 5.0 * scn.noise.doppler_sigma);
        }
    }

    #[test]
    fn approaching_wall_closes() {
        let scn = wall_scene(2.0);
        let f = simulate_frame(&scn, 0).unwrap();
        let ahead = f
            .points
            .iter()
            .min_by(|a, b| {
                a.position()
                    .azimuth()
                    .abs()
                    .total_cmp(&b.position().azimuth().abs())
            })
            .unwrap();
        assert!(
            (ahead.doppler + 2.0).abs() < 0.3,
            "doppler {}",
            ahead.doppler
        );
    }

    #[test]
    fn hits_lie_on_obstacles_without_noise() {
        let mut scn = static_lot();
        scn.noise = NoiseModel::noiseless();
        let f = simulate_frame(&scn, 0).unwrap();
        assert!(!f.points.is_empty());
        for (p, src) in f.points.iter().zip(&f.sources) {
            let PointSource::Obstacle(i) = *src else {
                panic!("unexpected false alarm");
            };
            let ob = scn.obstacles[i];
            let c = ob.corners_at(0.0);
            let on_edge = (0..4).any(|k| {
                let (a, b) = (c[k], c[(k + 1) % 4]);
                let e = b - a;
                let w = p.position() - a;
                let cross = (e.x * w.y - e.y * w.x).abs() / e.norm();
                cross < 1e-9
            });
            assert!(on_edge);
        }
    }

    #[test]
    fn seeded_frames_repeat() {
        let scn = scenario_by_name("noisy_lot").unwrap();
        assert_eq!(
            simulate_frame(&scn, 3).unwrap(),
            simulate_frame(&scn, 3).unwrap()
        );
        let a = simulate_frame(&scn, 0).unwrap();
        let b = simulate_frame(&scn, 1).unwrap();
        assert_eq!(a.gt, b.gt);
        assert_ne!(a.points, b.points);
    }

    #[test]
    fn gt_excludes_obstacle_interiors() {
        let scn = static_lot();
        let f = simulate_frame(&scn, 0).unwrap();
        let scene = LocalScene::new(&scn, &f.pose, 0.0);
        let spec = f.gt.spec;
        for iy in 0..spec.height {
            for ix in 0..spec.width {
                if f.gt.get(ix, iy) {
                    assert!(!scene.inside_any(spec.cell_center(ix, iy)));
                }
            }
        }
    }

    #[test]
    fn backoff_reverses() {
        let scn = backoff();
        for w in scn.ego_trajectory.windows(2) {
            assert!(w[1].x < w[0].x);
        }
    }

    #[test]
    fn clutter_count_is_poisson() {
        let scn = noisy_lot();
        let total: usize = (0..100)
            .map(|k| {
                simulate_frame(&scn, k)
                    .unwrap()
                    .sources
                    .iter()
                    .filter(|s| **s == PointSource::Clutter)
                    .count()
            })
            .sum();
        let mean = scn.noise.clutter_rate * 100.0;
        assert!(
            (total as f64 - mean).abs() <= 3.0 * mean.sqrt(),
            "total {total}"
        );
    }

    #[test]
    fn unknown_scenario_lists_names() {
        let err = scenario_by_name("nope").unwrap_err().to_string();
        assert!(err.contains("backoff") && err.contains("noisy_lot"));
    }

    #[test]
    fn with_frames_extends_and_truncates() {
        let scn = backoff().with_frames(250);
        assert_eq!(scn.frame_count(), 250);
        assert!((scn.ego_trajectory[249].x + 24.9).abs() < 1e-9);
        assert_eq!(static_lot().with_frames(5).frame_count(), 5);
    }
}
