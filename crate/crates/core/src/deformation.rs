//! Doppler-driven shape prediction of a radar polygon.
//!
//! Each real vertex moves along the sensor-to-vertex direction by
//! `doppler * dt`; tangential motion is not observable and is ignored.
//! Virtual vertices carry zero Doppler and stay put.

use crate::error::{Error, Result};
use crate::geometry::{is_simple, Point2, PolygonVertex, RadarPolygon};

/// Radial velocity components `(v_x, v_y)` of a vertex seen from `sensor`.
pub fn radial_components(vertex: Point2, sensor: Point2, doppler: f64) -> Result<(f64, f64)> {
    let d = vertex - sensor;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::ZeroRadial);
    }
    Ok((d.x / r * doppler, d.y / r * doppler))
}

/// Moves one vertex by its radial displacement over `dt`.
///
/// Virtual vertices and vertices sitting on the sensor are returned unchanged.
pub fn displace_vertex(vertex: &PolygonVertex, sensor: Point2, dt: f64) -> PolygonVertex {
    if vertex.is_virtual || vertex.doppler == 0.0 || dt == 0.0 {
        return *vertex;
    }
    match radial_components(vertex.position, sensor, vertex.doppler) {
        Ok((vx, vy)) => PolygonVertex {
            position: Point2::new(vertex.position.x + vx * dt, vertex.position.y + vy * dt),
            ..*vertex
        },
        Err(_) => *vertex,
    }
}

/// Polygon predicted `dt` seconds ahead. Vertex order, flags and confidences
/// are kept; the timestamp advances by `dt`.
pub fn predict_polygon(poly: &RadarPolygon, dt: f64) -> Result<RadarPolygon> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "prediction horizon must be >= 0, got {dt}"
        )));
    }
    let vertices = poly
        .vertices
        .iter()
        .map(|v| displace_vertex(v, poly.sensor_origin, dt))
        .collect();
    Ok(RadarPolygon {
        vertices,
        sensor_origin: poly.sensor_origin,
        closed_through_origin: poly.closed_through_origin,
        timestamp: poly.timestamp + dt,
    })
}

/// Prediction together with the simplicity check of the deformed ring.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub polygon: RadarPolygon,
    /// Large horizons can fold the ring; it is reported, never repaired.
    pub self_intersecting: bool,
    /// Some real vertex was pushed through the sensor (range would go negative).
    pub crossed_sensor: bool,
}

pub fn predict_polygon_checked(poly: &RadarPolygon, dt: f64) -> Result<Prediction> {
    let polygon = predict_polygon(poly, dt)?;
    let crossed_sensor = poly.vertices.iter().any(|v| {
        !v.is_virtual
            && v.doppler < 0.0
            && -v.doppler * dt > v.position.distance(poly.sensor_origin)
    });
    let ring = polygon.ring();
    let self_intersecting = ring.len() >= 3 && !is_simple(&ring);
    Ok(Prediction {
        polygon,
        self_intersecting,
        crossed_sensor,
    })
}
