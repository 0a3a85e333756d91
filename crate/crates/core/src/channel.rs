//! Scalar free-space Green's function and the discretized line-of-sight
//! channel between two parallel, coaxial apertures.
//!
//! Distances are in wavelengths, so the wavenumber times a distance is
//! `2π · dist`. No per-element area weight is applied: every entry is a raw
//! Green's function sample.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Aperture;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// `exp(-j 2π dist) / (4π dist)` with `dist = ‖rx - tx‖` in wavelengths.
pub fn green(rx: Point3, tx: Point3) -> Result<Complex64> {
    green_at_distance(rx.distance(&tx))
}

#[inline]
fn green_at_distance(dist: f64) -> Result<Complex64> {
    if dist == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(Complex64::from_polar(1.0 / (4.0 * PI * dist), -TAU * dist))
}

/// `N_r × N_t` transfer matrix; row `i` is receive sample `i`, column `j`
/// transmit sample `j`.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    entries: Array2<Complex64>,
    separation: f64,
    tx_layout_id: u64,
}

impl ChannelMatrix {
    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn rx_count(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tx_count(&self) -> usize {
        self.entries.ncols()
    }

    /// Axial distance between the apertures (signed: rx minus tx).
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// [`Aperture::layout_id`] of the transmit side.
    pub fn tx_layout_id(&self) -> u64 {
        self.tx_layout_id
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Writes the matrix as text, one matrix row per line, each entry as a
    /// `re,im` pair.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for row in self.entries.rows() {
            line.clear();
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{},{}", c.re, c.im));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}

impl From<ChannelMatrix> for Array2<Complex64> {
    fn from(h: ChannelMatrix) -> Self {
        h.entries
    }
}

pub fn build_channel(tx: &Aperture, rx: &Aperture) -> Result<ChannelMatrix> {
    let separation = rx.z_offset() - tx.z_offset();
    if separation == 0.0 || !separation.is_finite() {
        return Err(Error::invalid(
            "apertures must lie in distinct parallel planes",
        ));
    }
    let dz2 = separation * separation;
    let (nr, nt) = (rx.len(), tx.len());
    let tx_pts = tx.points();

    let mut entries = Array2::<Complex64>::zeros((nr, nt));
    entries
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(rx.points().par_iter())
        .for_each(|(mut row, r)| {
            for (h, t) in row.iter_mut().zip(tx_pts) {
                let (dx, dy) = (r.x - t.x, r.y - t.y);
                let dist = (dx * dx + dy * dy + dz2).sqrt();
                *h = Complex64::from_polar(1.0 / (4.0 * PI * dist), -TAU * dist);
            }
        });

    Ok(ChannelMatrix {
        entries,
        separation,
        tx_layout_id: tx.layout_id(),
    })
}

/// Thin SVD `H = U diag(s) Vᴴ` with `min(N_r, N_t)` triplets.
///
/// Each right singular vector is rotated so that its largest-magnitude entry
/// is real and positive; the matching left vector gets the same rotation.
#[derive(Debug, Clone)]
pub struct ChannelSvd {
    left: Array2<Complex64>,
    singular_values: Array1<f64>,
    right: Array2<Complex64>,
    tx_layout_id: u64,
}

impl ChannelSvd {
    pub fn left_vectors(&self) -> &Array2<Complex64> {
        &self.left
    }

    /// Non-increasing.
    pub fn singular_values(&self) -> &Array1<f64> {
        &self.singular_values
    }

    /// `N_t × k`, columns are the right singular vectors.
    pub fn right_vectors(&self) -> &Array2<Complex64> {
        &self.right
    }

    pub fn tx_layout_id(&self) -> u64 {
        self.tx_layout_id
    }

    pub fn rank_count(&self) -> usize {
        self.singular_values.len()
    }

    /// Eigenvalues of `HᴴH`, i.e. `s_i²`.
    pub fn eigenvalues(&self) -> Array1<f64> {
        self.singular_values.mapv(|s| s * s)
    }

    /// `‖H − U diag(s) Vᴴ‖_F`.
    pub fn reconstruction_error(&self, h: &Array2<Complex64>) -> f64 {
        let us = &self.left
            * &self
                .singular_values
                .mapv(Complex64::from)
                .view()
                .insert_axis(Axis(0));
        let vh = self.right.t().mapv(|c| c.conj());
        let diff = h - &us.dot(&vh);
        diff.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn channel_svd(h: &ChannelMatrix) -> Result<ChannelSvd> {
    let mut svd = svd_of(&h.entries)?;
    svd.tx_layout_id = h.tx_layout_id;
    Ok(svd)
}

/// SVD of an arbitrary complex matrix, with the same phase convention as
/// [`channel_svd`].
pub fn svd_of(h: &Array2<Complex64>) -> Result<ChannelSvd> {
    if h.is_empty() {
        return Err(Error::invalid("empty channel matrix"));
    }
    if h.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical(
            "channel matrix has non-finite entries".into(),
        ));
    }
    let (u, s, vt) = h
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e}")))?;
    let (mut left, mut right_h) = match (u, vt) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("SVD returned no singular vectors".into())),
    };

    for k in 0..s.len() {
        let mut row = right_h.row_mut(k);
        // Vᴴ row k holds conj(v_k); the largest entry of v_k has the same index.
        let (_, pivot) =
            row.iter()
                .enumerate()
                .fold((0usize, Complex64::new(0.0, 0.0)), |best, (i, &c)| {
                    if c.norm() > best.1.norm() {
                        (i, c)
                    } else {
                        best
                    }
                });
        if pivot.norm() == 0.0 {
            continue;
        }
        // pivot = conj(v_k[p]) = |v_k[p]|·e^{-jφ}; v_k ← v_k·e^{-jφ}, u_k likewise.
        let unit = pivot / pivot.norm();
        row.mapv_inplace(|c| c * unit.conj());
        left.column_mut(k).mapv_inplace(|c| c * unit);
    }

    let right = right_h.t().mapv(|c| c.conj());
    Ok(ChannelSvd {
        left,
        singular_values: s,
        right,
        tx_layout_id: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_disk;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wrap_pi(a: f64) -> f64 {
        let r = a.rem_euclid(TAU);
        if r > PI {
            r - TAU
        } else {
            r
        }
    }

    #[test]
    fn green_unit_distance() {
        let g = green(Point3::new(0.0, 0.0, 1.0), Point3::new(0.0, 0.0, 0.0)).unwrap();
        assert!((g.norm() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(wrap_pi(g.arg()).abs() < 1e-12);
    }

    #[test]
    fn green_half_wavelength() {
        let g = green(Point3::new(0.0, 0.0, 0.5), Point3::new(0.0, 0.0, 0.0)).unwrap();
        assert!((g.norm() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(wrap_pi(g.arg() + PI).abs() < 1e-12);
    }

    #[test]
    fn green_is_reciprocal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = Point3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            );
            let b = Point3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            );
            assert_eq!(green(a, b).unwrap(), green(b, a).unwrap());
        }
    }

    #[test]
    fn green_coincident_points_fail() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(matches!(green(p, p), Err(Error::Singularity)));
    }

    #[test]
    fn single_point_channel() {
        let tx = sample_disk(0.4, 0.5, 0.0).unwrap();
        let rx = tx.with_z_offset(1.0);
        let h = build_channel(&tx, &rx).unwrap();
        assert_eq!(h.entries().dim(), (1, 1));
        let g = green(Point3::new(0.0, 0.0, 1.0), Point3::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(h.entries()[[0, 0]], g);
    }

    #[test]
    fn zero_separation_rejected() {
        let tx = sample_disk(1.0, 0.5, 0.0).unwrap();
        assert!(matches!(
            build_channel(&tx, &tx),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn swapping_ends_transposes() {
        let tx = sample_disk(1.5, 0.5, 0.0).unwrap();
        let rx = sample_disk(1.0, 0.5, 7.0).unwrap();
        let h = build_channel(&tx, &rx).unwrap();
        let back = build_channel(&rx.with_z_offset(0.0), &tx.with_z_offset(7.0)).unwrap();
        assert_eq!(back.entries(), &h.entries().t());
    }

    #[test]
    fn entries_match_scalar_green() {
        let tx = sample_disk(1.0, 0.5, 0.0).unwrap();
        let rx = tx.with_z_offset(20.0);
        let h = build_channel(&tx, &rx).unwrap();
        for (i, r) in rx.points().iter().enumerate() {
            for (j, t) in tx.points().iter().enumerate() {
                let g = green(Point3::new(r.x, r.y, 20.0), Point3::new(t.x, t.y, 0.0)).unwrap();
                let e = h.entries()[[i, j]];
                assert!((e - g).norm() <= 1e-15 * g.norm(), "({i},{j})");
            }
        }
    }

    #[test]
    fn energy_and_phase() {
        let tx = sample_disk(2.0, 0.5, 0.0).unwrap();
        let rx = sample_disk(1.5, 0.5, 3.3).unwrap();
        let h = build_channel(&tx, &rx).unwrap();
        let mut energy = 0.0;
        for (i, r) in rx.points().iter().enumerate() {
            for (j, t) in tx.points().iter().enumerate() {
                let d = Point3::new(r.x, r.y, 3.3).distance(&Point3::new(t.x, t.y, 0.0));
                energy += (1.0 / (4.0 * PI * d)).powi(2);
                let e = h.entries()[[i, j]];
                assert!(wrap_pi(e.arg() + TAU * d).abs() < 1e-9);
            }
        }
        let f2 = h.frobenius_norm().powi(2);
        assert!((f2 - energy).abs() <= 1e-12 * energy);
    }

    #[test]
    fn svd_of_scalar() {
        let h = Array2::from_elem((1, 1), Complex64::new(-3.0, 4.0));
        let svd = svd_of(&h).unwrap();
        assert!((svd.singular_values()[0] - 5.0).abs() < 1e-14);
        let v = svd.right_vectors()[[0, 0]];
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(svd.reconstruction_error(&h) < 1e-14);
    }

    #[test]
    fn svd_of_scaled_orthogonal_columns() {
        let mut h = Array2::<Complex64>::zeros((3, 2));
        h[[0, 0]] = Complex64::new(3.0, 0.0);
        h[[1, 1]] = Complex64::new(0.0, 4.0);
        let svd = svd_of(&h).unwrap();
        let s = svd.singular_values();
        assert!((s[0] - 4.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_random_orthonormal_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = Array2::from_shape_fn((8, 6), |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let svd = svd_of(&h).unwrap();
        let v = svd.right_vectors();
        let gram = v.t().mapv(|c| c.conj()).dot(v);
        for ((i, j), g) in gram.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((g - Complex64::new(expect, 0.0)).norm() <= 1e-10);
        }
        let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(svd.reconstruction_error(&h) <= 1e-8 * norm);
        for w in svd.singular_values().windows(2) {
            assert!(w[0] >= w[1]);
        }
        // phase convention
        for k in 0..svd.rank_count() {
            let col = v.column(k);
            let big = col.iter().fold(Complex64::new(0.0, 0.0), |b, &c| {
                if c.norm() > b.norm() {
                    c
                } else {
                    b
                }
            });
            assert!(big.im.abs() < 1e-14 && big.re > 0.0);
        }
    }

    #[test]
    fn csv_dump_layout() {
        let tx = sample_disk(0.5, 0.5, 0.0).unwrap();
        let h = build_channel(&tx, &tx.with_z_offset(2.0)).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), h.rx_count());
        let first: Vec<f64> = lines[0].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first.len(), 2 * h.tx_count());
        assert_eq!(first[0], h.entries()[[0, 0]].re);
        assert_eq!(first[1], h.entries()[[0, 0]].im);
    }
}
