//! Recursive polygon update with an inverse sensor model.
//!
//! Every frame the previous polygon is carried into the current sensor frame
//! (rigid pose compensation, or radial Doppler displacement when no pose is
//! available) and its real vertices compete with the new detections for their
//! sector. The winner of a sector falls in one of four cases:
//!
//! * old vertex: reused with a confidence penalty `l_pen`, dropped once its
//!   confidence turns negative;
//! * tracked: a new detection within `epsilon2` of the previous vertex of the
//!   sector, whose log-odds confidence is updated;
//! * emerging: anything else waits in the uncertain set until it has been
//!   associated at least twice;
//! * missing: no admissible candidate, a zero-confidence virtual vertex.

use serde::{Deserialize, Serialize};

use crate::deformation::displace_vertex;
use crate::error::{Error, Result};
use crate::formation::{
    assemble_polygon, detection_probability, logit, normalize_evidence, prune_virtual_spikes,
    EvidenceField, FormationConfig, FrameEvidence, SectorSlot,
};
use crate::geometry::{Point2, PolygonVertex, Pose, RadarPoint, RadarPolygon};

/// Log-odds values are clamped to this magnitude.
pub const LOG_ODDS_LIMIT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsmConfig {
    /// Association radius (meters).
    pub epsilon2: f64,
    /// Confidence penalty for reusing an old vertex.
    pub l_pen: f64,
    /// Prior log-odds.
    pub l_init: f64,
    /// Uncertain entries are promoted once their association count exceeds this.
    pub min_association_age: u32,
    /// Uncertain entries are dropped after this many frames without association.
    pub uncertain_ttl: u32,
    pub formation: FormationConfig,
}

impl Default for IsmConfig {
    fn default() -> Self {
        Self {
            epsilon2: 1.0,
            l_pen: 0.5,
            l_init: 0.0,
            min_association_age: 1,
            uncertain_ttl: 3,
            formation: FormationConfig::default(),
        }
    }
}

impl IsmConfig {
    pub fn validate(&self) -> Result<()> {
        self.formation.validate()?;
        if !(self.epsilon2 > 0.0) {
            return Err(Error::InvalidConfig("epsilon2 must be positive".into()));
        }
        if !(self.l_pen >= 0.0) {
            return Err(Error::InvalidConfig("l_pen must be non-negative".into()));
        }
        if !self.l_init.is_finite() {
            return Err(Error::InvalidConfig("l_init must be finite".into()));
        }
        if self.uncertain_ttl == 0 {
            return Err(Error::InvalidConfig(
                "uncertain_ttl must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A candidate vertex waiting for re-association.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainEntry {
    pub vertex: PolygonVertex,
    /// Number of associated observations so far (>= 1).
    pub associations: u32,
    /// Consecutive frames without association.
    pub missed: u32,
}

impl UncertainEntry {
    pub fn last_seen(&self) -> Point2 {
        self.vertex.position
    }
}

/// How the sectors of the latest update were resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateCounts {
    /// Old vertex kept with a penalty.
    pub reused: usize,
    /// New detection associated with the previous vertex of its sector.
    pub tracked: usize,
    /// Uncertain entry confirmed and inserted.
    pub promoted: usize,
    /// New detection parked in the uncertain set; sector left empty.
    pub deferred: usize,
    /// No admissible candidate; virtual vertex.
    pub missing: usize,
}

/// Persistent tracker state. Confidences live on the polygon vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonState {
    pub polygon: RadarPolygon,
    pub uncertain: Vec<UncertainEntry>,
    pub last_pose: Option<Pose>,
    pub last_timestamp: Option<f64>,
    /// Sectors of the configured field of view.
    pub sector_count: usize,
    pub frames: u64,
    #[serde(default)]
    pub counts: UpdateCounts,
}

impl PolygonState {
    pub fn new(cfg: &IsmConfig) -> Self {
        Self {
            polygon: RadarPolygon::empty(0.0),
            uncertain: Vec::new(),
            last_pose: None,
            last_timestamp: None,
            sector_count: cfg.formation.sector.sector_count(),
            frames: 0,
            counts: UpdateCounts::default(),
        }
    }

    /// Per-vertex log-odds, parallel to `polygon.vertices`.
    pub fn confidences(&self) -> Vec<f64> {
        self.polygon.vertices.iter().map(|v| v.confidence).collect()
    }

    /// Maximum number of stored polygon vertices (one per sector).
    pub fn vertex_capacity(&self) -> usize {
        self.sector_count
    }
}

/// Storage accounting for a tracker state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    /// Ring vertices including the origin closure.
    pub vertex_count: usize,
    pub uncertain_count: usize,
    pub bytes_estimate: usize,
}

/// Bytes charged per stored vertex: the in-memory size of [`PolygonVertex`].
pub const BYTES_PER_VERTEX: usize = std::mem::size_of::<PolygonVertex>();
/// Bytes charged per uncertain entry.
pub const BYTES_PER_UNCERTAIN: usize = std::mem::size_of::<UncertainEntry>();

pub fn state_memory_report(state: &PolygonState) -> MemoryReport {
    let vertex_count = state.polygon.ring_len();
    let uncertain_count = state.uncertain.len();
    MemoryReport {
        vertex_count,
        uncertain_count,
        bytes_estimate: vertex_count * BYTES_PER_VERTEX + uncertain_count * BYTES_PER_UNCERTAIN,
    }
}

/// Re-expresses vertices observed from `from` in the frame of `to`.
pub fn compensate_pose(vertices: &[PolygonVertex], from: &Pose, to: &Pose) -> Vec<PolygonVertex> {
    vertices
        .iter()
        .map(|v| PolygonVertex {
            position: to.to_local(from.to_global(v.position)),
            ..*v
        })
        .collect()
}

/// Pose-free alternative: moves each real vertex radially by `doppler * dt`.
pub fn compensate_doppler(
    vertices: &[PolygonVertex],
    dt: f64,
    sensor: Point2,
) -> Vec<PolygonVertex> {
    vertices
        .iter()
        .map(|v| displace_vertex(v, sensor, dt))
        .collect()
}

/// `l_prev + ln(p / (1 - p)) - l_init`, clamped to +-[`LOG_ODDS_LIMIT`].
pub fn log_odds_update(l_prev: f64, p_tilde: f64, l_init: f64) -> Result<f64> {
    if !(p_tilde > 0.0 && p_tilde < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p_tilde));
    }
    Ok((l_prev + logit(p_tilde) - l_init).clamp(-LOG_ODDS_LIMIT, LOG_ODDS_LIMIT))
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Current(usize),
    Old(usize),
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    position: Point2,
    range: f64,
    source: Source,
}

/// One step of the polygon ISM. Consumes the previous state and returns the
/// next one; `pose` is the global sensor pose of `frame`, or `None` to fall
/// back to Doppler compensation.
pub fn update_polygon_ism(
    state: PolygonState,
    frame: &[RadarPoint],
    pose: Option<Pose>,
    timestamp: f64,
    cfg: &IsmConfig,
) -> Result<PolygonState> {
    cfg.validate()?;
    let fcfg = &cfg.formation;
    if let Some(prev) = state.last_timestamp {
        if !(timestamp > prev) {
            return Err(Error::NonMonotonicTimestamp {
                previous: prev,
                current: timestamp,
            });
        }
    }
    let evidence = FrameEvidence::build(frame, fcfg)?;
    let sector_count = fcfg.sector.sector_count();

    if state.frames == 0 {
        let slots = (0..sector_count)
            .map(|s| match evidence.select(s, fcfg) {
                Some((i, p_tilde)) => Ok(SectorSlot::Real(evidence.vertex(
                    i,
                    s,
                    log_odds_update(cfg.l_init, p_tilde, cfg.l_init)?,
                ))),
                None => Ok(SectorSlot::Virtual(PolygonVertex::virtual_at(
                    &fcfg.sector,
                    s,
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let slots = prune_virtual_spikes(slots, fcfg);
        return Ok(PolygonState {
            polygon: assemble_polygon(&slots, &fcfg.sector, timestamp),
            uncertain: Vec::new(),
            last_pose: pose,
            last_timestamp: Some(timestamp),
            sector_count,
            frames: 1,
            counts: UpdateCounts::default(),
        });
    }

    // Bring the previous polygon and the uncertain set into the current frame.
    let dt = timestamp - state.last_timestamp.unwrap_or(timestamp);
    let compensate = |vs: &[PolygonVertex]| -> Vec<PolygonVertex> {
        match (state.last_pose.as_ref(), pose.as_ref()) {
            (Some(from), Some(to)) => compensate_pose(vs, from, to),
            _ => compensate_doppler(vs, dt, Point2::ORIGIN),
        }
    };
    let old: Vec<PolygonVertex> = compensate(&state.polygon.vertices)
        .into_iter()
        .filter(|v| !v.is_virtual)
        .collect();
    // Old vertices join the measurement set when old candidates are scored.
    let old_field = EvidenceField::new(
        old.iter().map(|v| v.position).collect(),
        old.iter()
            .map(|v| detection_probability(v.snr, fcfg.p_fa))
            .collect::<Result<Vec<_>>>()?,
        fcfg.epsilon1,
        fcfg.evidence_sigma(),
    );
    let uncertain_vertices: Vec<PolygonVertex> = state.uncertain.iter().map(|u| u.vertex).collect();
    let mut uncertain: Vec<UncertainEntry> = state
        .uncertain
        .iter()
        .zip(compensate(&uncertain_vertices))
        .map(|(u, v)| UncertainEntry { vertex: v, ..*u })
        .collect();
    let mut associated = vec![false; uncertain.len()];

    // Candidate pool per sector: current detections plus re-sectored old vertices.
    let mut pool: Vec<Vec<Candidate>> = evidence
        .sectors
        .iter()
        .map(|idx| {
            idx.iter()
                .map(|&i| Candidate {
                    position: evidence.points[i].position,
                    range: evidence.points[i].range,
                    source: Source::Current(i),
                })
                .collect()
        })
        .collect();
    let mut previous_in_sector: Vec<Option<usize>> = vec![None; sector_count];
    for (k, v) in old.iter().enumerate() {
        let range = v.position.norm();
        if !(range > 0.0 && range <= fcfg.sector.max_range) {
            continue;
        }
        let Some(s) = fcfg.sector.sector_index(v.position.azimuth()) else {
            continue;
        };
        pool[s].push(Candidate {
            position: v.position,
            range,
            source: Source::Old(k),
        });
        match previous_in_sector[s] {
            Some(j) if old[j].position.norm() <= range => {}
            _ => previous_in_sector[s] = Some(k),
        }
    }
    for cands in &mut pool {
        // closest first; on equal range current detections precede old vertices
        cands.sort_by(|a, b| {
            a.range
                .total_cmp(&b.range)
                .then_with(|| match (a.source, b.source) {
                    (Source::Current(x), Source::Current(y)) => x.cmp(&y),
                    (Source::Old(x), Source::Old(y)) => x.cmp(&y),
                    (Source::Current(_), Source::Old(_)) => std::cmp::Ordering::Less,
                    (Source::Old(_), Source::Current(_)) => std::cmp::Ordering::Greater,
                })
        });
    }

    let mut counts = UpdateCounts::default();
    let mut slots = Vec::with_capacity(sector_count);
    for (s, cands) in pool.iter().enumerate() {
        let mut chosen = None;
        for c in cands.iter().take(fcfg.max_candidates) {
            let raw = match c.source {
                Source::Current(_) => evidence.field.evidence_at(c.position),
                Source::Old(k) => {
                    if old[k].confidence < 0.0 {
                        continue;
                    }
                    evidence.field.evidence_at(c.position) + old_field.evidence_at(c.position)
                }
            };
            let p_tilde = normalize_evidence(raw, fcfg);
            if p_tilde > fcfg.p_thr {
                chosen = Some((c, p_tilde));
                break;
            }
        }
        let Some((cand, p_tilde)) = chosen else {
            counts.missing += 1;
            slots.push(SectorSlot::Virtual(PolygonVertex::virtual_at(
                &fcfg.sector,
                s,
            )));
            continue;
        };
        match cand.source {
            Source::Old(k) => {
                let v = old[k];
                counts.reused += 1;
                slots.push(SectorSlot::Real(PolygonVertex {
                    confidence: (v.confidence - cfg.l_pen).clamp(-LOG_ODDS_LIMIT, LOG_ODDS_LIMIT),
                    sector: s,
                    age: v.age.saturating_add(1),
                    ..v
                }));
            }
            Source::Current(i) => {
                let tracked = previous_in_sector[s]
                    .map(|k| old[k])
                    .filter(|prev| prev.position.distance(cand.position) <= cfg.epsilon2);
                if let Some(prev) = tracked {
                    let mut v = evidence.vertex(
                        i,
                        s,
                        log_odds_update(prev.confidence, p_tilde, cfg.l_init)?,
                    );
                    v.age = prev.age.saturating_add(1);
                    counts.tracked += 1;
                    slots.push(SectorSlot::Real(v));
                    continue;
                }
                // emerging vertex: associate with the nearest free uncertain entry
                let nearest = uncertain
                    .iter()
                    .enumerate()
                    .filter(|(u, _)| !associated[*u])
                    .map(|(u, e)| (u, e.last_seen().distance(cand.position)))
                    .filter(|&(_, d)| d <= cfg.epsilon2)
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                let fresh = evidence.vertex(i, s, 0.0);
                match nearest {
                    Some((u, _)) if uncertain[u].associations + 1 > cfg.min_association_age => {
                        let mut v = evidence.vertex(
                            i,
                            s,
                            log_odds_update(cfg.l_init, p_tilde, cfg.l_init)?,
                        );
                        v.age = uncertain[u].associations;
                        associated[u] = true;
                        uncertain[u].associations = 0;
                        counts.promoted += 1;
                        slots.push(SectorSlot::Real(v));
                    }
                    Some((u, _)) => {
                        associated[u] = true;
                        uncertain[u].associations += 1;
                        uncertain[u].missed = 0;
                        uncertain[u].vertex = fresh;
                        counts.deferred += 1;
                        slots.push(SectorSlot::Empty);
                    }
                    None => {
                        uncertain.push(UncertainEntry {
                            vertex: fresh,
                            associations: 1,
                            missed: 0,
                        });
                        associated.push(true);
                        counts.deferred += 1;
                        slots.push(SectorSlot::Empty);
                    }
                }
            }
        }
    }

    // Promoted entries (associations reset to 0) leave the set; stale ones expire.
    let mut next_uncertain = Vec::with_capacity(uncertain.len());
    for (mut e, seen) in uncertain.into_iter().zip(associated) {
        if e.associations == 0 {
            continue;
        }
        if !seen {
            e.missed += 1;
            if e.missed >= cfg.uncertain_ttl {
                continue;
            }
        }
        next_uncertain.push(e);
    }

    let slots = prune_virtual_spikes(slots, fcfg);
    Ok(PolygonState {
        polygon: assemble_polygon(&slots, &fcfg.sector, timestamp),
        uncertain: next_uncertain,
        last_pose: pose,
        last_timestamp: Some(timestamp),
        sector_count,
        frames: state.frames + 1,
        counts,
    })
}

/// Stateful wrapper that owns a [`PolygonState`] and its configuration.
#[derive(Debug, Clone)]
pub struct PolygonTracker {
    cfg: IsmConfig,
    state: PolygonState,
}

impl PolygonTracker {
    pub fn new(cfg: IsmConfig) -> Result<Self> {
        cfg.validate()?;
        let state = PolygonState::new(&cfg);
        Ok(Self { cfg, state })
    }

    pub fn update(
        &mut self,
        frame: &[RadarPoint],
        pose: Option<Pose>,
        timestamp: f64,
    ) -> Result<&RadarPolygon> {
        let state = std::mem::replace(&mut self.state, PolygonState::new(&self.cfg));
        match update_polygon_ism(state.clone(), frame, pose, timestamp, &self.cfg) {
            Ok(next) => {
                self.state = next;
                Ok(&self.state.polygon)
            }
            Err(e) => {
                self.state = state;
                Err(e)
            }
        }
    }

    pub fn state(&self) -> &PolygonState {
        &self.state
    }

    pub fn config(&self) -> &IsmConfig {
        &self.cfg
    }
}
