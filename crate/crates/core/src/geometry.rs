//! Uniformly sampled disk apertures.
//!
//! All lengths are in wavelengths. The sampling grid is anchored so that one
//! sample sits exactly on the disk center, and boundary points with
//! `x² + y² == radius²` belong to the disk.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Default sample spacing: half a wavelength.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// One sample of an aperture, in wavelengths (Cartesian) and polar form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub x: f64,
    pub y: f64,
    pub rho: f64,
    /// Angle in `[0, 2π)`; zero at the origin.
    pub theta: f64,
}

impl SamplePoint {
    pub fn new(x: f64, y: f64) -> Self {
        let rho = x.hypot(y);
        let theta = if rho == 0.0 {
            0.0
        } else {
            wrap_angle(y.atan2(x))
        };
        Self { x, y, rho, theta }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let t = if a < 0.0 { a + TAU } else { a };
    // -tiny + 2π rounds to exactly 2π
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// A disk of radius `radius` sampled on a square grid of spacing `pitch`,
/// lying in the plane `z = z_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aperture {
    radius: f64,
    pitch: f64,
    z_offset: f64,
    points: Vec<SamplePoint>,
}

impl Aperture {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn z_offset(&self) -> f64 {
        self.z_offset
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same sample layout moved to another plane.
    pub fn with_z_offset(&self, z_offset: f64) -> Self {
        Self {
            z_offset,
            ..self.clone()
        }
    }

    /// Stable identifier of the sample layout (radius, pitch, count).
    /// Independent of `z_offset`, so Tx-side precoders can be matched to
    /// the aperture they were built on.
    pub fn layout_id(&self) -> u64 {
        // FNV-1a over the defining parameters
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let words = [
            self.radius.to_bits(),
            self.pitch.to_bits(),
            self.points.len() as u64,
        ];
        for w in words {
            for b in w.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Sample a closed disk on a centered square grid.
///
/// Points are sorted by `(y, x)`.
pub fn sample_disk(radius: f64, pitch: f64, z_offset: f64) -> Result<Aperture> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("radius must be > 0, got {radius}")));
    }
    if !(pitch.is_finite() && pitch > 0.0) {
        return Err(Error::invalid(format!("pitch must be > 0, got {pitch}")));
    }
    if !z_offset.is_finite() {
        return Err(Error::invalid("z_offset must be finite"));
    }

    // Index range; the exact containment test below decides membership.
    let half = (radius / pitch).floor() as i64 + 1;
    let r2 = radius * radius;
    let mut points = Vec::new();
    for j in -half..=half {
        let y = j as f64 * pitch;
        for i in -half..=half {
            let x = i as f64 * pitch;
            if x * x + y * y <= r2 {
                points.push(SamplePoint::new(x, y));
            }
        }
    }

    Ok(Aperture {
        radius,
        pitch,
        z_offset,
        points,
    })
}

pub fn point_count(aperture: &Aperture) -> usize {
    aperture.points.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Counts grid points in the disk by scanning a generous index box.
    fn enumerate_count(radius: f64, pitch: f64) -> usize {
        let n = (radius / pitch).ceil() as i64 + 3;
        let mut c = 0;
        for i in -n..=n {
            for j in -n..=n {
                let (x, y) = (i as f64 * pitch, j as f64 * pitch);
                if x * x + y * y <= radius * radius {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn tiny_disk_has_only_center() {
        let a = sample_disk(0.4, 0.5, 0.0).unwrap();
        assert_eq!(point_count(&a), 1);
        let p = a.points()[0];
        assert_eq!((p.x, p.y, p.rho, p.theta), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn unit_disk_half_wavelength_has_13_points() {
        assert_eq!(enumerate_count(1.0, 0.5), 13);
        let a = sample_disk(1.0, 0.5, 0.0).unwrap();
        assert_eq!(point_count(&a), 13);
    }

    #[test]
    fn ten_wavelength_disk_count() {
        let oracle = enumerate_count(10.0, 0.5);
        let a = sample_disk(10.0, 0.5, 0.0).unwrap();
        assert_eq!(point_count(&a), oracle);
        assert_eq!(point_count(&a), a.points().len());
        assert!((1131..=1383).contains(&point_count(&a)));
    }

    #[test]
    fn boundary_points_are_included() {
        let a = sample_disk(1.0, 0.5, 0.0).unwrap();
        assert!(a.points().iter().any(|p| p.x == 1.0 && p.y == 0.0));
        assert!(a.points().iter().any(|p| p.x == 0.0 && p.y == -1.0));
    }

    #[test]
    fn sorted_by_y_then_x() {
        let a = sample_disk(3.0, 0.5, 0.0).unwrap();
        for w in a.points().windows(2) {
            assert!((w[0].y, w[0].x) < (w[1].y, w[1].x));
        }
    }

    #[test]
    fn theta_quadrants() {
        let p = SamplePoint::new(0.0, -1.0);
        assert!((p.theta - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        let p = SamplePoint::new(-1.0, 0.0);
        assert!((p.theta - std::f64::consts::PI).abs() < 1e-15);
        let p = SamplePoint::new(1.0, -1e-300);
        assert!((0.0..TAU).contains(&p.theta));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            sample_disk(0.0, 0.5, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_disk(-1.0, 0.5, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_disk(1.0, 0.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_disk(1.0, -0.5, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(sample_disk(f64::NAN, 0.5, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn disk_invariants(radius in 0.3f64..8.0, pitch in 0.2f64..1.0) {
            let a = sample_disk(radius, pitch, 0.0).unwrap();
            let b = sample_disk(radius, pitch, 0.0).unwrap();
            prop_assert_eq!(&a, &b);

            let mut xy: Vec<(i64, i64)> = a.points().iter()
                .map(|p| ((p.x / pitch).round() as i64, (p.y / pitch).round() as i64))
                .collect();
            xy.sort();
            let mut fx: Vec<_> = xy.iter().map(|&(i, j)| (-i, j)).collect();
            fx.sort();
            let mut fy: Vec<_> = xy.iter().map(|&(i, j)| (i, -j)).collect();
            fy.sort();
            prop_assert_eq!(&xy, &fx);
            prop_assert_eq!(&xy, &fy);

            for p in a.points() {
                prop_assert!(p.x * p.x + p.y * p.y <= radius * radius);
                prop_assert_eq!(p.rho, p.x.hypot(p.y));
                prop_assert!((0.0..TAU).contains(&p.theta));
            }
            prop_assert!(a.points().iter().any(|p| p.x == 0.0 && p.y == 0.0));
        }

        #[test]
        fn count_close_to_area(ratio in 10.0f64..30.0) {
            let a = sample_disk(ratio * 0.5, 0.5, 0.0).unwrap();
            let area = std::f64::consts::PI * ratio * ratio;
            let n = point_count(&a) as f64;
            prop_assert!((n - area).abs() <= 0.1 * area);
        }
    }
}
