//! Single-timeslot radar polygon formation.
//!
//! Points are height-gated and projected to the ground plane, bucketed into
//! angular sectors, and each sector keeps its closest point whose normalized
//! occupancy evidence clears `p_thr`. Sectors without such a point get a
//! virtual vertex on the range boundary, unless the gap between the two
//! bracketing real vertices is too short to be worth a spike.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, PolygonVertex, RadarPoint, RadarPolygon, SectorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormationConfig {
    pub sector: SectorConfig,
    /// Neighbor radius in meters; the evidence kernel has sigma = epsilon1 / 3.
    pub epsilon1: f64,
    /// False-alarm rate of the point-cloud detector.
    pub p_fa: f64,
    /// Evidence shift of the sigmoid normalization.
    pub p_bar: f64,
    /// Evidence scale of the sigmoid normalization.
    pub sigma_p: f64,
    /// Normalized-evidence threshold, inside (0.5, 1).
    pub p_thr: f64,
    /// Cross-range length below which virtual spikes are removed (meters).
    pub l_thr: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Candidates examined per sector before the sector is declared empty.
    pub max_candidates: usize,
}

impl Default for FormationConfig {
    fn default() -> Self {
        Self {
            sector: SectorConfig::default(),
            epsilon1: 1.0,
            p_fa: 1e-3,
            p_bar: 12.1,
            sigma_p: 7.132,
            p_thr: 0.62,
            l_thr: 7.5,
            z_min: -1.5,
            z_max: 3.0,
            max_candidates: 5,
        }
    }
}

impl FormationConfig {
    pub fn validate(&self) -> Result<()> {
        self.sector.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.epsilon1 > 0.0) {
            return bad("epsilon1 must be positive");
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return bad("p_fa must lie in (0, 1)");
        }
        if !(self.sigma_p > 0.0) || !self.p_bar.is_finite() {
            return bad("sigma_p must be positive and p_bar finite");
        }
        if !(self.p_thr > 0.5 && self.p_thr < 1.0) {
            return bad("p_thr must lie in (0.5, 1)");
        }
        if !(self.l_thr > 0.0) {
            return bad("l_thr must be positive");
        }
        if !(self.z_min < self.z_max) {
            return bad("z_min must be below z_max");
        }
        if self.max_candidates == 0 {
            return bad("max_candidates must be at least 1");
        }
        Ok(())
    }

    /// Standard deviation of the isotropic evidence kernel.
    pub fn evidence_sigma(&self) -> f64 {
        self.epsilon1 / 3.0
    }
}

/// Swerling-1 detection probability `p_fa^(1 / (1 + snr))` for linear SNR.
pub fn detection_probability(snr: f64, p_fa: f64) -> Result<f64> {
    if !(snr >= 0.0) || snr.is_nan() {
        return Err(Error::InvalidSnr(snr));
    }
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p_fa));
    }
    Ok(p_fa.powf(1.0 / (1.0 + snr)))
}

/// Isotropic 2D normal density at squared distance `dist_sq`.
#[inline]
pub fn gaussian_density(dist_sq: f64, sigma: f64) -> f64 {
    let var = sigma * sigma;
    (-dist_sq / (2.0 * var)).exp() / (2.0 * PI * var)
}

/// Raw occupancy evidence at `candidate`: sum over frame points within
/// `epsilon1` of `p_d * N(candidate; point, (epsilon1/3)^2 I)`.
/// The frame is taken as given (already gated and projected by the caller).
pub fn occupancy_evidence(
    candidate: &RadarPoint,
    frame: &[RadarPoint],
    cfg: &FormationConfig,
) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let c = candidate.position();
    let eps_sq = cfg.epsilon1 * cfg.epsilon1;
    let sigma = cfg.evidence_sigma();
    let mut sum = 0.0;
    for p in frame {
        let d2 = c.distance_sq(p.position());
        if d2 <= eps_sq {
            sum += detection_probability(p.snr, cfg.p_fa)? * gaussian_density(d2, sigma);
        }
    }
    Ok(sum)
}

/// Sigmoid normalization into (0.5, 1).
pub fn normalize_evidence(p: f64, cfg: &FormationConfig) -> f64 {
    0.5 + 0.5 / (1.0 + (-(p - cfg.p_bar) / cfg.sigma_p).exp())
}

/// `ln(p / (1 - p))`.
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// One gated, projected detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub position: Point2,
    pub doppler: f64,
    pub snr: f64,
    pub detection_probability: f64,
    pub range: f64,
}

/// Spatial hash over a frame for fixed-radius evidence sums.
#[derive(Debug, Clone)]
pub struct EvidenceField {
    positions: Vec<Point2>,
    weights: Vec<f64>,
    radius: f64,
    sigma: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl EvidenceField {
    pub fn new(positions: Vec<Point2>, weights: Vec<f64>, radius: f64, sigma: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            buckets
                .entry(Self::key(*p, radius))
                .or_default()
                .push(i as u32);
        }
        Self {
            positions,
            weights,
            radius,
            sigma,
            buckets,
        }
    }

    fn key(p: Point2, radius: f64) -> (i64, i64) {
        ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64)
    }

    /// Evidence at `at`, summed in point-index order so the result matches a
    /// brute-force scan bit for bit.
    pub fn evidence_at(&self, at: Point2) -> f64 {
        let (kx, ky) = Self::key(at, self.radius);
        let r2 = self.radius * self.radius;
        let mut hits: Vec<u32> = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(idx) = self.buckets.get(&(kx + dx, ky + dy)) {
                    hits.extend(
                        idx.iter()
                            .copied()
                            .filter(|&i| at.distance_sq(self.positions[i as usize]) <= r2),
                    );
                }
            }
        }
        hits.sort_unstable();
        hits.iter()
            .map(|&i| {
                let i = i as usize;
                self.weights[i] * gaussian_density(at.distance_sq(self.positions[i]), self.sigma)
            })
            .sum()
    }

    /// Peak contribution of a point with detection probability `pd`.
    pub fn self_evidence(&self, pd: f64) -> f64 {
        pd * gaussian_density(0.0, self.sigma)
    }
}

/// A frame after height gating, projection and sector bucketing.
#[derive(Debug, Clone)]
pub struct FrameEvidence {
    pub points: Vec<ProjectedPoint>,
    /// Point indices per sector, ascending range (ties by index).
    pub sectors: Vec<Vec<usize>>,
    pub field: EvidenceField,
}

impl FrameEvidence {
    pub fn build(frame: &[RadarPoint], cfg: &FormationConfig) -> Result<Self> {
        let sector_cfg = &cfg.sector;
        let mut points = Vec::new();
        let mut sectors = vec![Vec::new(); sector_cfg.sector_count()];
        for p in frame {
            if !(p.z > cfg.z_min && p.z < cfg.z_max) {
                continue;
            }
            let pd = detection_probability(p.snr, cfg.p_fa)?;
            let position = p.position();
            let range = position.norm();
            if !(range > 0.0 && range <= sector_cfg.max_range) {
                continue;
            }
            if let Some(s) = sector_cfg.sector_index(position.azimuth()) {
                sectors[s].push(points.len());
            }
            points.push(ProjectedPoint {
                position,
                doppler: p.doppler,
                snr: p.snr,
                detection_probability: pd,
                range,
            });
        }
        for bucket in &mut sectors {
            bucket.sort_by(|&a, &b| points[a].range.total_cmp(&points[b].range).then(a.cmp(&b)));
        }
        let field = EvidenceField::new(
            points.iter().map(|p| p.position).collect(),
            points.iter().map(|p| p.detection_probability).collect(),
            cfg.epsilon1,
            cfg.evidence_sigma(),
        );
        Ok(Self {
            points,
            sectors,
            field,
        })
    }

    /// Normalized evidence at a frame point.
    pub fn normalized_at(&self, index: usize, cfg: &FormationConfig) -> f64 {
        normalize_evidence(self.field.evidence_at(self.points[index].position), cfg)
    }

    /// Closest qualifying point of `sector`, with its normalized evidence.
    pub fn select(&self, sector: usize, cfg: &FormationConfig) -> Option<(usize, f64)> {
        self.sectors[sector]
            .iter()
            .take(cfg.max_candidates)
            .map(|&i| (i, self.normalized_at(i, cfg)))
            .find(|&(_, p_tilde)| p_tilde > cfg.p_thr)
    }

    pub fn vertex(&self, index: usize, sector: usize, confidence: f64) -> PolygonVertex {
        let p = &self.points[index];
        PolygonVertex::real(p.position, p.doppler, p.snr, confidence, sector)
    }
}

/// Vertex choice for one sector: closest point (among the first
/// `max_candidates` by range) whose normalized evidence exceeds `p_thr`.
/// Evidence is summed over `frame`, which must contain the sector points.
pub fn select_sector_vertex(
    sector_points: &[RadarPoint],
    frame: &[RadarPoint],
    sector: usize,
    cfg: &FormationConfig,
) -> Result<Option<PolygonVertex>> {
    let mut order: Vec<usize> = (0..sector_points.len()).collect();
    order.sort_by(|&a, &b| {
        sector_points[a]
            .range()
            .total_cmp(&sector_points[b].range())
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(cfg.max_candidates) {
        let p_tilde = normalize_evidence(occupancy_evidence(&sector_points[i], frame, cfg)?, cfg);
        if p_tilde > cfg.p_thr {
            let p = &sector_points[i];
            return Ok(Some(PolygonVertex::real(
                p.position(),
                p.doppler,
                p.snr,
                logit(p_tilde),
                sector,
            )));
        }
    }
    Ok(None)
}

/// Per-sector outcome before assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectorSlot {
    Real(PolygonVertex),
    Virtual(PolygonVertex),
    /// No vertex at all (not even a boundary placeholder).
    Empty,
}

impl SectorSlot {
    pub fn is_real(&self) -> bool {
        matches!(self, SectorSlot::Real(_))
    }

    pub fn vertex(&self) -> Option<&PolygonVertex> {
        match self {
            SectorSlot::Real(v) | SectorSlot::Virtual(v) => Some(v),
            SectorSlot::Empty => None,
        }
    }
}

/// Removes virtual vertices between two real vertices whose cross-range arc
/// `((r1 + r2) / 2) * gap_sectors * delta_theta` is shorter than `l_thr`.
///
/// Runs touching the edge of a partial field of view have only one real
/// neighbor and are kept. With a full-circle FoV the last and first real
/// vertices bracket the wrap-around run.
pub fn prune_virtual_spikes(mut slots: Vec<SectorSlot>, cfg: &FormationConfig) -> Vec<SectorSlot> {
    let reals: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_real())
        .map(|(i, _)| i)
        .collect();
    if reals.is_empty() {
        return slots;
    }
    let n = slots.len();
    let range_of = |s: &SectorSlot| s.vertex().map(|v| v.position.norm()).unwrap_or(0.0);
    let mut pairs: Vec<(usize, usize)> = reals.windows(2).map(|w| (w[0], w[1])).collect();
    if cfg.sector.is_full_circle() {
        pairs.push((reals[reals.len() - 1], reals[0] + n));
    }
    for (i, j) in pairs {
        let gap = j - i - 1;
        if gap == 0 {
            continue;
        }
        let mean_r = 0.5 * (range_of(&slots[i % n]) + range_of(&slots[j % n]));
        let arc = mean_r * gap as f64 * cfg.sector.delta_theta;
        if arc < cfg.l_thr {
            for k in (i + 1)..j {
                if let SectorSlot::Virtual(_) = slots[k % n] {
                    slots[k % n] = SectorSlot::Empty;
                }
            }
        }
    }
    slots
}

/// Builds the polygon from sector slots (sector order is ascending azimuth).
/// A frame with no real vertex yields a polygon without vertices.
pub fn assemble_polygon(
    slots: &[SectorSlot],
    sector: &SectorConfig,
    timestamp: f64,
) -> RadarPolygon {
    let has_real = slots.iter().any(SectorSlot::is_real);
    let vertices = if has_real {
        slots.iter().filter_map(|s| s.vertex().copied()).collect()
    } else {
        Vec::new()
    };
    RadarPolygon {
        vertices,
        sensor_origin: Point2::ORIGIN,
        closed_through_origin: !sector.is_full_circle(),
        timestamp,
    }
}

/// Forms the radar polygon of one frame given in sensor coordinates.
///
/// Real vertices carry `ln(p~ / (1 - p~))` as confidence. The result is
/// degenerate (check [`RadarPolygon::is_degenerate`]) when no sector produced
/// a real vertex.
pub fn form_polygon(
    frame: &[RadarPoint],
    cfg: &FormationConfig,
    timestamp: f64,
) -> Result<RadarPolygon> {
    cfg.validate()?;
    let evidence = FrameEvidence::build(frame, cfg)?;
    let slots = (0..cfg.sector.sector_count())
        .map(|s| match evidence.select(s, cfg) {
            Some((i, p_tilde)) => SectorSlot::Real(evidence.vertex(i, s, logit(p_tilde))),
            None => SectorSlot::Virtual(PolygonVertex::virtual_at(&cfg.sector, s)),
        })
        .collect();
    let slots = prune_virtual_spikes(slots, cfg);
    Ok(assemble_polygon(&slots, &cfg.sector, timestamp))
}
