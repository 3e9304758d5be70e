//! Geodesic primitives: coordinates, haversine distance and centroids.
//!
//! Trigonometry goes through `libm` so distances are bit-identical on every
//! platform, which keeps emitted solutions reproducible across machines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IUGG mean Earth radius in kilometers.
pub const MEAN_EARTH_RADIUS_KM: f64 = 6371.0088;

/// A latitude/longitude pair in degrees.
///
/// In planar distance mode the same struct carries Cartesian coordinates
/// with `lon` as x and `lat` as y; range checks only apply in geo mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Checked constructor for geographic coordinates.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCoordinate {
                lat: self.lat,
                lon: self.lon,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    pub radius_km: f64,
}

impl EarthModel {
    pub fn new(radius_km: f64) -> Result<Self> {
        if radius_km.is_finite() && radius_km > 0.0 {
            Ok(EarthModel { radius_km })
        } else {
            Err(Error::InvalidParameter(format!(
                "earth radius must be positive, got {radius_km}"
            )))
        }
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        EarthModel {
            radius_km: MEAN_EARTH_RADIUS_KM,
        }
    }
}

/// Great-circle distance in kilometers.
pub fn haversine(a: GeoPoint, b: GeoPoint, earth: EarthModel) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    // |delta| keeps the evaluation order independent of argument order.
    let half_dphi = (phi2 - phi1).abs() / 2.0;
    let half_dlambda = (b.lon - a.lon).abs().to_radians() / 2.0;

    let s_phi = libm::sin(half_dphi);
    let s_lambda = libm::sin(half_dlambda);
    let h = s_phi * s_phi + (libm::cos(phi1) * libm::cos(phi2)) * (s_lambda * s_lambda);
    let h = h.clamp(0.0, 1.0);

    2.0 * earth.radius_km * libm::asin(libm::sqrt(h))
}

/// Component-wise arithmetic mean of the points.
pub fn centroid(points: &[GeoPoint]) -> Result<GeoPoint> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let (mut lat, mut lon) = (0.0, 0.0);
    for p in points {
        lat += p.lat;
        lon += p.lon;
    }
    let n = points.len() as f64;
    Ok(GeoPoint {
        lat: lat / n,
        lon: lon / n,
    })
}

/// Distance function used by every stage of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Metric {
    /// Great-circle distance over geographic coordinates.
    Geo { earth: EarthModel },
    /// Euclidean distance over planar coordinates.
    Planar,
}

impl Metric {
    pub fn geo(earth: EarthModel) -> Self {
        Metric::Geo { earth }
    }

    pub fn distance(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        match self {
            Metric::Geo { earth } => haversine(a, b, *earth),
            Metric::Planar => {
                let dx = b.lon - a.lon;
                let dy = b.lat - a.lat;
                libm::sqrt(dx * dx + dy * dy)
            }
        }
    }
}

impl Default for Metric {
    fn default() -> Self {
        Metric::geo(EarthModel::default())
    }
}

impl From<EarthModel> for Metric {
    fn from(earth: EarthModel) -> Self {
        Metric::geo(earth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn identical_points_are_zero_apart() {
        let a = p(33.89, 35.50);
        assert_eq!(haversine(a, a, EarthModel::default()), 0.0);
    }

    #[test]
    fn antipodal_equator_is_half_circumference() {
        let d = haversine(p(0.0, 0.0), p(0.0, 180.0), EarthModel::default());
        assert!((d - 20015.1).abs() <= 0.1, "{d}");
        assert!((d - std::f64::consts::PI * MEAN_EARTH_RADIUS_KM).abs() < 1e-9);
    }

    #[test]
    fn beirut_to_tripoli_matches_extended_precision() {
        // 50-digit evaluation of the same formula.
        let expected = 68.327_576_730_679_13;
        let d = haversine(
            p(33.8886, 35.4955),
            p(34.4346, 35.8362),
            EarthModel::default(),
        );
        assert!((d - expected).abs() < 1e-9, "{d}");
    }

    #[test]
    fn centroid_cases() {
        assert_eq!(centroid(&[p(10.0, 10.0)]).unwrap(), p(10.0, 10.0));
        assert_eq!(centroid(&[p(0.0, 0.0), p(2.0, 4.0)]).unwrap(), p(1.0, 2.0));
        assert!(matches!(centroid(&[]), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn centroid_of_random_points_matches_independent_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<GeoPoint> = (0..5)
            .map(|_| p(rng.gen_range(33.0..35.0), rng.gen_range(35.0..36.0)))
            .collect();
        // Reverse-order summation as an independent route.
        let lat = pts.iter().rev().map(|q| q.lat).fold(0.0, |a, b| a + b) / 5.0;
        let lon = pts.iter().rev().map(|q| q.lon).fold(0.0, |a, b| a + b) / 5.0;
        let c = centroid(&pts).unwrap();
        assert!((c.lat - lat).abs() < 1e-12 && (c.lon - lon).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(EarthModel::new(0.0).is_err());
    }

    #[test]
    fn planar_metric_is_euclidean() {
        let m = Metric::Planar;
        let d = m.distance(
            GeoPoint { lat: 0.0, lon: 0.0 },
            GeoPoint { lat: 4.0, lon: 3.0 },
        );
        assert_eq!(d, 5.0);
    }

    fn point() -> impl Strategy<Value = GeoPoint> {
        (-90.0..=90.0f64, -180.0..=180.0f64).prop_map(|(lat, lon)| GeoPoint { lat, lon })
    }

    proptest! {
        #[test]
        fn haversine_is_symmetric_and_bounded(a in point(), b in point()) {
            let e = EarthModel::default();
            let d = haversine(a, b, e);
            prop_assert_eq!(d.to_bits(), haversine(b, a, e).to_bits());
            prop_assert!(d >= 0.0 && d <= std::f64::consts::PI * e.radius_km + 1e-9);
            prop_assert_eq!(haversine(a, a, e), 0.0);
        }

        #[test]
        fn centroid_of_copies_is_the_point(a in point(), k in 1usize..20) {
            let c = centroid(&vec![a; k]).unwrap();
            prop_assert!((c.lat - a.lat).abs() < 1e-12 && (c.lon - a.lon).abs() < 1e-12);
        }
    }
}
