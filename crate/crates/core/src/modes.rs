//! Transmission modes on a disk aperture and the precoders built from them.
//!
//! OAM modes carry a continuous helical phase `e^{jℓθ}`; the focused variant
//! adds a paraxial focusing phase toward a receiver at distance `d`. Polar
//! Walsh functions are separable ±1 patterns in `(ρ/r_t)²` and `θ/2`. All
//! of them have constant amplitude `1/(√π r_t)` on the continuous disk.

use std::f64::consts::{PI, TAU};

use ndarray::{s, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::ChannelSvd;
use crate::error::{Error, Result};
use crate::geometry::{Aperture, SamplePoint};

/// Largest supported Walsh resolution (bits per coordinate).
pub const MAX_WALSH_BITS: u32 = 16;

/// Identity of one transmission mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeSpec {
    /// `rank`-th right singular vector (0 = strongest).
    Svd {
        rank: usize,
    },
    OamUnfocused {
        n: u32,
    },
    OamFocused {
        n: u32,
    },
    /// Radial index `m < 2^mu`, angular index `n < 2^nu`.
    Walsh {
        m: u32,
        n: u32,
        mu: u32,
        nu: u32,
    },
}

impl std::fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ModeSpec::Svd { rank } => write!(f, "svd_{rank}"),
            ModeSpec::OamUnfocused { n } => write!(f, "oamu_{n}"),
            ModeSpec::OamFocused { n } => write!(f, "oamf_{n}"),
            ModeSpec::Walsh { m, n, mu, nu } => write!(f, "walsh_mu{mu}_nu{nu}_m{m}_n{n}"),
        }
    }
}

/// A family of geometric (channel-independent) modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeFamily {
    OamUnfocused,
    /// Focused toward a receiver `distance` wavelengths away.
    OamFocused {
        distance: f64,
    },
    Walsh {
        mu: u32,
        nu: u32,
    },
}

impl ModeFamily {
    pub fn radial_walsh(mu: u32) -> Self {
        ModeFamily::Walsh { mu, nu: 0 }
    }

    pub fn angular_walsh(nu: u32) -> Self {
        ModeFamily::Walsh { mu: 0, nu }
    }

    /// Number of distinct modes, `None` if unbounded.
    pub fn capacity(&self) -> Option<usize> {
        match *self {
            ModeFamily::Walsh { mu, nu } => Some(1usize << (mu + nu)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ModeFamily::OamUnfocused => Ok(()),
            ModeFamily::OamFocused { distance } => check_distance(distance),
            ModeFamily::Walsh { mu, nu } => {
                if mu > MAX_WALSH_BITS || nu > MAX_WALSH_BITS {
                    Err(Error::invalid(format!(
                        "Walsh resolution (mu={mu}, nu={nu}) exceeds {MAX_WALSH_BITS} bits"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The first `count` modes. OAM by `n = 0..count`, Walsh row-major in
    /// `(m, n)`.
    pub fn modes(&self, count: usize) -> Result<Vec<ModeSpec>> {
        self.validate()?;
        if let Some(cap) = self.capacity() {
            if count > cap {
                return Err(Error::invalid(format!(
                    "requested {count} modes but the family only has {cap}"
                )));
            }
        }
        let list = match *self {
            ModeFamily::OamUnfocused => (0..count as u32)
                .map(|n| ModeSpec::OamUnfocused { n })
                .collect(),
            ModeFamily::OamFocused { .. } => (0..count as u32)
                .map(|n| ModeSpec::OamFocused { n })
                .collect(),
            ModeFamily::Walsh { mu, nu } => (0..count as u32)
                .map(|idx| ModeSpec::Walsh {
                    m: idx >> nu,
                    n: idx & ((1u32 << nu) - 1),
                    mu,
                    nu,
                })
                .collect(),
        };
        Ok(list)
    }

    /// Continuous (analytically normalized) value of `mode` at `point`.
    pub fn value(&self, mode: &ModeSpec, point: &SamplePoint, radius: f64) -> Result<Complex64> {
        match (*self, *mode) {
            (ModeFamily::OamUnfocused, ModeSpec::OamUnfocused { n }) => {
                Ok(oam_unfocused_value(n, point, radius))
            }
            (ModeFamily::OamFocused { distance }, ModeSpec::OamFocused { n }) => {
                oam_focused_value(n, point, radius, distance)
            }
            (
                ModeFamily::Walsh { mu, nu },
                ModeSpec::Walsh {
                    m,
                    n,
                    mu: mu2,
                    nu: nu2,
                },
            ) if mu == mu2 && nu == nu2 => {
                walsh_value(m, n, mu, nu, point, radius).map(Complex64::from)
            }
            _ => Err(Error::invalid(format!(
                "mode {mode} does not belong to {self:?}"
            ))),
        }
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "focusing distance must be > 0, got {d}"
        )))
    }
}

/// Integer OAM order of the `n`-th mode: 0, +1, −1, +2, −2, …
pub fn oam_order(n: u32) -> i64 {
    let n = n as i64;
    if n % 2 == 0 {
        -(n / 2)
    } else {
        (n + 1) / 2
    }
}

fn amplitude(radius: f64) -> f64 {
    1.0 / (PI.sqrt() * radius)
}

pub fn oam_unfocused_value(n: u32, point: &SamplePoint, radius: f64) -> Complex64 {
    let phase = oam_order(n) as f64 * point.theta;
    Complex64::from_polar(amplitude(radius), phase)
}

/// Unfocused mode times `exp(j 2π d (1 + ρ²/(2d²)))`.
pub fn oam_focused_value(
    n: u32,
    point: &SamplePoint,
    radius: f64,
    distance: f64,
) -> Result<Complex64> {
    check_distance(distance)?;
    let focus = TAU * distance * (1.0 + point.rho * point.rho / (2.0 * distance * distance));
    Ok(oam_unfocused_value(n, point, radius) * Complex64::from_polar(1.0, focus))
}

#[inline]
fn sign_of_cos(x: f64) -> f64 {
    if x.cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Polar Walsh function `(m, n)` at resolution `(mu, nu)`; real, `±1/(√π r_t)`.
pub fn walsh_value(
    m: u32,
    n: u32,
    mu: u32,
    nu: u32,
    point: &SamplePoint,
    radius: f64,
) -> Result<f64> {
    if mu > MAX_WALSH_BITS || nu > MAX_WALSH_BITS {
        return Err(Error::invalid("Walsh resolution too large"));
    }
    if m >= 1 << mu || n >= 1 << nu {
        return Err(Error::invalid(format!(
            "Walsh index (m={m}, n={n}) out of range for mu={mu}, nu={nu}"
        )));
    }
    let u = (point.rho / radius).powi(2);
    let half_theta = point.theta / 2.0;
    let mut sign = 1.0;
    for k in 0..mu {
        if (m >> k) & 1 == 1 {
            sign *= sign_of_cos((1u64 << k) as f64 * PI * u);
        }
    }
    for k in 0..nu {
        if (n >> k) & 1 == 1 {
            sign *= sign_of_cos((1u64 << k) as f64 * half_theta);
        }
    }
    Ok(sign * amplitude(radius))
}

/// `N_t × N` precoding matrix with unit-norm columns.
#[derive(Debug, Clone)]
pub struct Precoder {
    matrix: Array2<Complex64>,
    modes: Vec<ModeSpec>,
    tx_layout_id: u64,
}

impl Precoder {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn tx_count(&self) -> usize {
        self.matrix.nrows()
    }

    /// [`Aperture::layout_id`] of the transmit aperture.
    pub fn tx_layout_id(&self) -> u64 {
        self.tx_layout_id
    }

    /// Wraps an arbitrary matrix; columns are normalized.
    pub fn from_matrix(
        mut matrix: Array2<Complex64>,
        modes: Vec<ModeSpec>,
        tx_layout_id: u64,
    ) -> Result<Self> {
        if matrix.ncols() != modes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns but {} mode labels",
                matrix.ncols(),
                modes.len()
            )));
        }
        normalize_columns(&mut matrix)?;
        Ok(Self {
            matrix,
            modes,
            tx_layout_id,
        })
    }
}

fn normalize_columns(m: &mut Array2<Complex64>) -> Result<()> {
    for mut col in m.columns_mut() {
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(
                "precoder column has zero or non-finite norm".into(),
            ));
        }
        col.mapv_inplace(|c| c / norm);
    }
    Ok(())
}

/// Samples `count` modes of `family` at every transmit point and normalizes
/// each column to unit Euclidean norm. No re-orthogonalization is applied.
pub fn build_mode_precoder(family: ModeFamily, tx: &Aperture, count: usize) -> Result<Precoder> {
    if count == 0 {
        return Err(Error::invalid("mode count must be >= 1"));
    }
    if count > tx.len() {
        return Err(Error::invalid(format!(
            "{count} modes exceed the {} transmit samples",
            tx.len()
        )));
    }
    let modes = family.modes(count)?;
    let radius = tx.radius();
    let points = tx.points();

    let columns: Vec<Vec<Complex64>> = modes
        .par_iter()
        .map(|mode| {
            points
                .iter()
                .map(|p| family.value(mode, p, radius))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let matrix = Array2::from_shape_fn((points.len(), count), |(i, j)| columns[j][i]);
    Precoder::from_matrix(matrix, modes, tx.layout_id())
}

/// The `count` leading right singular vectors.
pub fn build_svd_precoder(svd: &ChannelSvd, count: usize) -> Result<Precoder> {
    if count == 0 {
        return Err(Error::invalid("mode count must be >= 1"));
    }
    if count > svd.rank_count() {
        return Err(Error::invalid(format!(
            "{count} modes requested but the SVD has {} triplets",
            svd.rank_count()
        )));
    }
    let matrix = svd.right_vectors().slice(s![.., ..count]).to_owned();
    let modes = (0..count).map(|rank| ModeSpec::Svd { rank }).collect();
    // Right singular vectors are already unit norm; renormalizing only
    // removes rounding.
    Precoder::from_matrix(matrix, modes, svd.tx_layout_id())
}

/// `FᴴF`.
pub fn gram(f: &Precoder) -> Array2<Complex64> {
    let m = f.matrix();
    m.t().mapv(|c| c.conj()).dot(m)
}

/// Largest off-diagonal magnitude of `FᴴF`.
pub fn gram_orthogonality(f: &Precoder) -> f64 {
    gram(f)
        .indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max)
}
