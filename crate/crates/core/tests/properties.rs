mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use radar_polygon::collision::{batch_collision, point_in_polygon, CollisionKernel, QueryMatrix};
use radar_polygon::deformation::predict_polygon;
use radar_polygon::formation::{
    detection_probability, form_polygon, normalize_evidence, occupancy_evidence, FormationConfig,
};
use radar_polygon::geometry::{
    mask_iou, polygon_iou, rasterize_ring, sector_index, FreeSpaceMask, GridSpec, Point2,
    PolygonVertex, Pose, RadarPoint, RadarPolygon, SectorConfig,
};
use radar_polygon::ism::{compensate_pose, update_polygon_ism, IsmConfig, PolygonState};
use radar_polygon::metrics::{iou_smooth, mse_free};

use common::{oracle_inside, random_simple_ring};

fn spec(w: usize, h: usize) -> GridSpec {
    GridSpec::new(Point2::new(-1.0, 2.0), 0.25, w, h).unwrap()
}

fn mask_strategy() -> impl Strategy<Value = FreeSpaceMask> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<bool>(), w * h).prop_map(move |cells| FreeSpaceMask {
            spec: spec(w, h),
            cells,
        })
    })
}

fn mask_pair() -> impl Strategy<Value = (FreeSpaceMask, FreeSpaceMask)> {
    mask_strategy().prop_flat_map(|a| {
        let n = a.cells.len();
        let s = a.spec;
        (
            Just(a),
            proptest::collection::vec(any::<bool>(), n)
                .prop_map(move |cells| FreeSpaceMask { spec: s, cells }),
        )
    })
}

/// Points in front of the sensor, some clustered so that they pass the
/// evidence threshold.
fn frame_strategy() -> impl Strategy<Value = Vec<RadarPoint>> {
    let cluster = (2.0f64..18.0, -60.0f64..60.0, 1usize..10, 10.0f64..1e4);
    proptest::collection::vec(cluster, 0..25).prop_map(|clusters| {
        let mut pts = Vec::new();
        for (r, az, n, snr) in clusters {
            for k in 0..n {
                let a = (az + 0.3 * k as f64).to_radians();
                let rr = r + 0.05 * k as f64;
                pts.push(RadarPoint::new(rr * a.cos(), rr * a.sin(), 0.5, -0.2, snr));
            }
        }
        pts
    })
}

proptest! {
    #[test]
    fn sector_index_breaks_at_multiples(k in 0usize..65, frac in 0.001f64..0.999) {
        let cfg = SectorConfig::default();
        let az = cfg.fov_start + (k as f64 + frac) * cfg.delta_theta;
        prop_assert_eq!(sector_index(az, &cfg), Some(k));
    }

    #[test]
    fn mask_iou_is_symmetric_and_bounded((a, b) in mask_pair()) {
        let ab = mask_iou(&a, &b).unwrap();
        prop_assert_eq!(ab, mask_iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        let same = a.cells == b.cells;
        if a.free_count() > 0 || b.free_count() > 0 {
            prop_assert_eq!(ab == 1.0, same);
        }
        prop_assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn mse_is_disagreement_fraction((a, b) in mask_pair()) {
        let agree = a.cells.iter().zip(&b.cells).filter(|(x, y)| x == y).count();
        let mse = mse_free(&a, &b).unwrap();
        prop_assert!((mse - (1.0 - agree as f64 / a.cells.len() as f64)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&mse));
    }

    #[test]
    fn polygon_iou_with_itself_is_one(seed in any::<u64>(), n in 3usize..40, res in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = random_simple_ring(&mut rng, n);
        prop_assume!(ring.len() >= 3);
        let poly = polygon_from_ring(&ring);
        prop_assert_eq!(polygon_iou(&poly, &poly, res).unwrap(), 1.0);
    }

    #[test]
    fn detection_probability_bounded_and_monotone(s1 in 0.0f64..1e3, ds in 1e-3f64..1e3, p_fa in 1e-9f64..0.5) {
        let a = detection_probability(s1, p_fa).unwrap();
        let b = detection_probability(s1 + ds, p_fa).unwrap();
        prop_assert!(a >= p_fa && a < 1.0);
        prop_assert!(b > a);
    }

    #[test]
    fn normalized_evidence_bounded_and_monotone(p in 0.0f64..40.0, dp in 1e-6f64..10.0) {
        let cfg = FormationConfig::default();
        let a = normalize_evidence(p, &cfg);
        let b = normalize_evidence(p + dp, &cfg);
        prop_assert!(a > 0.5 && a < 1.0);
        prop_assert!(b >= a);
    }

    #[test]
    fn formation_one_vertex_per_sector_from_inputs(frame in frame_strategy()) {
        let cfg = FormationConfig::default();
        prop_assume!(!frame.is_empty());
        let poly = form_polygon(&frame, &cfg, 0.0).unwrap();
        let mut seen = vec![false; cfg.sector.sector_count()];
        for v in &poly.vertices {
            prop_assert!(!seen[v.sector]);
            seen[v.sector] = true;
            if !v.is_virtual {
                prop_assert!(frame.iter().any(|p| p.position() == v.position));
            }
        }
    }

    #[test]
    fn selected_vertex_is_closest_qualified(frame in frame_strategy()) {
        let cfg = FormationConfig::default();
        prop_assume!(!frame.is_empty());
        let poly = form_polygon(&frame, &cfg, 0.0).unwrap();
        for v in poly.vertices.iter().filter(|v| !v.is_virtual) {
            let r = v.position.norm();
            for p in &frame {
                if sector_index(p.position().azimuth(), &cfg.sector) != Some(v.sector) || p.range() >= r {
                    continue;
                }
                let e = occupancy_evidence(p, &frame, &cfg).unwrap();
                prop_assert!(normalize_evidence(e, &cfg) <= cfg.p_thr);
            }
        }
    }

    #[test]
    fn removing_far_isolated_point_keeps_polygon(frame in frame_strategy(), pick in any::<prop::sample::Index>(), extra in 1.1f64..4.0) {
        let cfg = FormationConfig::default();
        prop_assume!(!frame.is_empty());
        let poly = form_polygon(&frame, &cfg, 0.0).unwrap();
        let real: Vec<_> = poly.vertices.iter().filter(|v| !v.is_virtual).collect();
        prop_assume!(!real.is_empty());
        let v = real[pick.index(real.len())];
        let r = v.position.norm() + extra;
        prop_assume!(r < cfg.sector.max_range);
        let at = Point2::from_polar(r, v.position.azimuth());
        prop_assume!(frame.iter().all(|q| q.position().distance(at) > cfg.epsilon1));
        let mut with_extra = frame.clone();
        with_extra.push(RadarPoint::new(at.x, at.y, 0.5, 0.0, 1e4));
        prop_assert_eq!(form_polygon(&with_extra, &cfg, 0.0).unwrap(), poly);
    }

    #[test]
    fn batch_matches_scalar_and_translation(seed in any::<u64>(), n in 3usize..30, dx in -40i32..40, dy in -40i32..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // dyadic coordinates keep the translated arithmetic exact
        let ring: Vec<Point2> = random_simple_ring(&mut rng, n)
            .into_iter()
            .map(|p| Point2::new((p.x * 8.0).round() / 8.0, (p.y * 8.0).round() / 8.0))
            .collect();
        prop_assume!(ring.len() >= 3);
        let kernel = CollisionKernel::from_ring(&ring).unwrap();
        let offset = Point2::new(dx as f64 / 4.0, dy as f64 / 4.0);
        let moved: Vec<Point2> = ring.iter().map(|&p| p + offset).collect();
        let kernel_moved = CollisionKernel::from_ring(&moved).unwrap();
        let queries: Vec<Point2> = (0..64)
            .map(|k| Point2::new(-26.0 + (k % 8) as f64 * 6.5 + 1.0 / 64.0, -26.0 + (k / 8) as f64 * 6.5))
            .collect();
        let batch = batch_collision(&kernel, &QueryMatrix::from_points(&queries));
        for (q, flag) in queries.iter().zip(&batch) {
            prop_assert_eq!(*flag, point_in_polygon(&kernel, q.x, q.y));
            let t = *q + offset;
            prop_assert_eq!(*flag, point_in_polygon(&kernel_moved, t.x, t.y));
        }
    }

    #[test]
    fn prediction_zero_horizon_and_displacement(seed in any::<u64>(), n in 3usize..30, dt in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = random_simple_ring(&mut rng, n);
        prop_assume!(ring.len() >= 3 && ring.iter().all(|p| p.norm() > 1e-6));
        let mut poly = polygon_from_ring(&ring);
        for (k, v) in poly.vertices.iter_mut().enumerate() {
            v.doppler = (k as f64 * 0.37).sin() * 3.0;
        }
        prop_assert_eq!(&predict_polygon(&poly, 0.0).unwrap(), &poly);
        let moved = predict_polygon(&poly, dt).unwrap();
        for (a, b) in poly.vertices.iter().zip(&moved.vertices) {
            prop_assert!((a.position.distance(b.position) - a.doppler.abs() * dt).abs() < 1e-9);
        }
    }

    #[test]
    fn pose_compensation_inverts(x in -50.0f64..50.0, y in -50.0f64..50.0, h in -3.1f64..3.1,
                                 x2 in -50.0f64..50.0, y2 in -50.0f64..50.0, h2 in -3.1f64..3.1,
                                 px in -20.0f64..20.0, py in -20.0f64..20.0) {
        let a = Pose::new(x, y, h);
        let b = Pose::new(x2, y2, h2);
        let v = PolygonVertex::real(Point2::new(px, py), 0.0, 1.0, 0.0, 0);
        let back = compensate_pose(&compensate_pose(&[v], &a, &b), &b, &a);
        prop_assert!(back[0].position.distance(v.position) < 1e-9);
    }

    #[test]
    fn ism_is_bounded_and_deterministic(frames in proptest::collection::vec(frame_strategy(), 1..8)) {
        let cfg = IsmConfig::default();
        let sectors = cfg.formation.sector.sector_count();
        let mut a = PolygonState::new(&cfg);
        let mut b = PolygonState::new(&cfg);
        for (k, f) in frames.iter().enumerate() {
            let t = k as f64 * 0.1;
            a = update_polygon_ism(a, f, Some(Pose::default()), t, &cfg).unwrap();
            b = update_polygon_ism(b, f, Some(Pose::default()), t, &cfg).unwrap();
            prop_assert!(a.polygon.ring_len() <= sectors + 1);
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn identical_frames_never_lower_tracked_confidence(frame in frame_strategy()) {
        let cfg = IsmConfig::default();
        prop_assume!(!frame.is_empty());
        let mut state = PolygonState::new(&cfg);
        let mut prev: Option<RadarPolygon> = None;
        for k in 0..4 {
            state = update_polygon_ism(state, &frame, Some(Pose::default()), k as f64 * 0.1, &cfg).unwrap();
            if let Some(p) = &prev {
                for v in state.polygon.vertices.iter().filter(|v| !v.is_virtual) {
                    if let Some(old) = p.vertices.iter().find(|o| !o.is_virtual && o.sector == v.sector && o.position == v.position) {
                        prop_assert!(v.confidence >= old.confidence);
                    }
                }
            }
            prev = Some(state.polygon.clone());
        }
    }

    #[test]
    fn smoothness_invariant_under_shared_rigid_motion(seed in any::<u64>(), tx in -30.0f64..30.0, ty in -30.0f64..30.0, th in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = random_simple_ring(&mut rng, 24);
        let ring2 = random_simple_ring(&mut rng, 24);
        prop_assume!(ring.len() >= 3 && ring2.len() >= 3);
        let (p, q) = (polygon_from_ring(&ring), polygon_from_ring(&ring2));
        let pa = Pose::new(1.0, 2.0, 0.3);
        let pb = Pose::new(1.5, 1.0, 0.5);
        let base = iou_smooth(&p, &pa, &q, &pb, 0.1).unwrap().value;
        let lift = |z: &Pose| {
            let g = Pose::new(tx, ty, th).to_global(z.position());
            Pose::new(g.x, g.y, z.heading + th)
        };
        let moved = iou_smooth(&p, &lift(&pa), &q, &lift(&pb), 0.1).unwrap().value;
        prop_assert!((base - moved).abs() < 2e-3, "{} vs {}", base, moved);
    }
}

fn polygon_from_ring(ring: &[Point2]) -> RadarPolygon {
    RadarPolygon {
        vertices: ring
            .iter()
            .enumerate()
            .map(|(k, &p)| PolygonVertex::real(p, 0.0, 1.0, 0.0, k))
            .collect(),
        sensor_origin: Point2::ORIGIN,
        closed_through_origin: false,
        timestamp: 0.0,
    }
}

#[test]
fn rasterization_matches_oracle_on_random_polygons() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 200 {
        let n = 3 + checked % 40;
        let ring = random_simple_ring(&mut rng, n);
        if ring.len() < 3 {
            continue;
        }
        let (lo, hi) = common::bounding_box(&ring);
        let spec = GridSpec::covering(lo - Point2::new(1.0, 1.0), hi + Point2::new(1.0, 1.0), 0.1)
            .unwrap();
        let raster = rasterize_ring(&ring, &spec);
        assert!(!raster.degenerate);
        for iy in 0..spec.height {
            for ix in 0..spec.width {
                let c = spec.cell_center(ix, iy);
                assert_eq!(
                    raster.mask.get(ix, iy),
                    oracle_inside(&ring, c.x, c.y),
                    "polygon {checked} cell ({ix}, {iy})"
                );
            }
        }
        checked += 1;
    }
}
