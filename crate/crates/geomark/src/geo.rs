//! Geodesic and delay-to-distance primitives shared by every other module.
//!
//! Distances are spherical great-circle (haversine form with atan2) on the
//! mean Earth radius. Delay-to-distance conversion follows the constraint
//! rule `r = rtt/2 * f * c` with a converting factor bounded above by 2/3.

use thiserror::Error;

/// Mean Earth radius in kilometers (IUGG mean radius).
pub const MEAN_EARTH_RADIUS_KM: f64 = 6371.0088;

/// Speed of light in vacuum, km/s.
pub const LIGHT_SPEED_KM_S: f64 = 299_792.458;

/// Default converting factor for delay-to-distance upper bounds.
pub const DEFAULT_CONVERTING_FACTOR: f64 = 4.0 / 9.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("coordinate component is not finite")]
    NotFinite,
    #[error("negative RTT {0} ms")]
    NegativeRtt(f64),
    #[error("distance must be non-negative and finite, got {0}")]
    InvalidDistance(f64),
    #[error("converting factor {0} outside (0, 2/3]")]
    InvalidConvertingFactor(f64),
    #[error("constant {name} must be positive, got {value}")]
    NonPositiveConstant { name: &'static str, value: f64 },
}

/// A latitude/longitude pair in degrees. Longitude is normalized into
/// (-180, 180] on construction; latitude must lie in [-90, 90].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GeoCoordinate {
    lat: f64,
    lon: f64,
}

impl GeoCoordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeoError::NotFinite);
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

fn normalize_lon(lon: f64) -> f64 {
    // Into (-180, 180]: shift by 180, wrap into [0, 360), shift back.
    let mut x = (lon + 180.0) % 360.0;
    if x <= 0.0 {
        x += 360.0;
    }
    x - 180.0
}

/// Non-negative finite distance in kilometers.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DistanceKm(f64);

impl DistanceKm {
    pub fn new(value: f64) -> Result<Self, GeoError> {
        if !value.is_finite() || value < 0.0 {
            return Err(GeoError::InvalidDistance(value));
        }
        Ok(Self(value))
    }

    pub fn km(&self) -> f64 {
        self.0
    }
}

/// Measurement constants used for delay-to-distance conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConstants {
    /// Converting factor f, fraction of light speed; must lie in (0, 2/3].
    pub converting_factor: f64,
    /// Light speed c in km/s.
    pub light_speed_km_s: f64,
    /// Sphere radius for great-circle distances, km.
    pub sphere_radius_km: f64,
}

impl Default for MeasurementConstants {
    fn default() -> Self {
        Self {
            converting_factor: DEFAULT_CONVERTING_FACTOR,
            light_speed_km_s: LIGHT_SPEED_KM_S,
            sphere_radius_km: MEAN_EARTH_RADIUS_KM,
        }
    }
}

impl MeasurementConstants {
    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.converting_factor.is_finite()
            || self.converting_factor <= 0.0
            || self.converting_factor > 2.0 / 3.0
        {
            return Err(GeoError::InvalidConvertingFactor(self.converting_factor));
        }
        if !self.light_speed_km_s.is_finite() || self.light_speed_km_s <= 0.0 {
            return Err(GeoError::NonPositiveConstant {
                name: "light_speed_km_s",
                value: self.light_speed_km_s,
            });
        }
        if !self.sphere_radius_km.is_finite() || self.sphere_radius_km <= 0.0 {
            return Err(GeoError::NonPositiveConstant {
                name: "sphere_radius_km",
                value: self.sphere_radius_km,
            });
        }
        Ok(())
    }
}

/// Great-circle distance on the default mean Earth radius.
pub fn great_circle_distance(a: GeoCoordinate, b: GeoCoordinate) -> DistanceKm {
    great_circle_distance_with_radius(a, b, MEAN_EARTH_RADIUS_KM)
}

/// Great-circle distance on a caller-supplied sphere radius.
///
/// Uses the atan2 form of the haversine formula, which is well conditioned
/// for both tiny separations and near-antipodal pairs.
pub fn great_circle_distance_with_radius(
    a: GeoCoordinate,
    b: GeoCoordinate,
    radius_km: f64,
) -> DistanceKm {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();

    let s = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    let arc = 2.0 * s.sqrt().atan2((1.0 - s).max(0.0).sqrt());
    DistanceKm(arc * radius_km)
}

/// Convert a round-trip time into the constraint-circle radius
/// `(rtt/2) * f * c`. RTT is in milliseconds, the result in kilometers.
pub fn delay_to_distance(rtt_ms: f64, consts: &MeasurementConstants) -> Result<DistanceKm, GeoError> {
    if !rtt_ms.is_finite() || rtt_ms < 0.0 {
        return Err(GeoError::NegativeRtt(rtt_ms));
    }
    consts.validate()?;
    let one_way_s = rtt_ms / 1000.0 / 2.0;
    DistanceKm::new(one_way_s * consts.converting_factor * consts.light_speed_km_s)
}
