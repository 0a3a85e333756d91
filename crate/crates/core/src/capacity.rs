//! Capacity of a precoded link under a diagonal power allocation.
//!
//! Transmit power follows the link's distance so that the received SNR at
//! boresight stays fixed: `P_t/σ² = SNR·(4π d)²` with `d` in wavelengths,
//! which exactly cancels the `1/(4π d)` Green's function amplitude of a
//! single on-axis element pair.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::{Cholesky, UPLO};
use num_complex::Complex64;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::modes::Precoder;

/// Slack allowed on the total-power constraint.
pub const POWER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationKind {
    Epa,
    Waterfilling,
    Custom,
}

/// Diagonal of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    weights: Vec<f64>,
    kind: AllocationKind,
}

impl PowerAllocation {
    /// Arbitrary diagonal allocation: non-negative weights summing to at most 1.
    pub fn diagonal(weights: Vec<f64>) -> Result<Self> {
        Self::checked(weights, AllocationKind::Custom)
    }

    fn checked(weights: Vec<f64>, kind: AllocationKind) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("power allocation needs at least one weight"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid(
                "power weights must be finite and non-negative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + POWER_TOLERANCE {
            return Err(Error::invalid(format!("power weights sum to {total} > 1")));
        }
        Ok(Self { weights, kind })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> AllocationKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Indices with strictly positive power.
    pub fn active_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }
}

/// `P_t/σ²` for a given received SNR and separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    snr: f64,
    separation: f64,
    effective_gain: f64,
}

impl LinkBudget {
    /// Linear received SNR.
    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn effective_gain(&self) -> f64 {
        self.effective_gain
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn link_budget(snr_db: f64, separation: f64) -> Result<LinkBudget> {
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::invalid(format!(
            "separation must be > 0, got {separation}"
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("SNR must be finite"));
    }
    let snr = db_to_linear(snr_db);
    let effective_gain = snr * (4.0 * PI * separation).powi(2);
    if !(effective_gain > 0.0 && effective_gain.is_finite()) {
        return Err(Error::invalid(format!(
            "effective gain {effective_gain} out of range for SNR {snr_db} dB"
        )));
    }
    Ok(LinkBudget {
        snr,
        separation,
        effective_gain,
    })
}

/// Equal power allocation, `Q = I/N`.
pub fn epa(count: usize) -> Result<PowerAllocation> {
    if count == 0 {
        return Err(Error::invalid("EPA needs at least one mode"));
    }
    PowerAllocation::checked(vec![1.0 / count as f64; count], AllocationKind::Epa)
}

/// Water-filling over parallel channels with power gains `gains`
/// (`g_i = P_t/σ² · s_i²`), distributing `budget` in total.
///
/// The water level is bracketed by bisection, then polished in closed form
/// on the resulting active set so that the budget is met to rounding.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<PowerAllocation> {
    if !(budget.is_finite() && budget > 0.0 && budget <= 1.0 + POWER_TOLERANCE) {
        return Err(Error::invalid(format!(
            "budget must lie in (0, 1], got {budget}"
        )));
    }
    if gains.iter().any(|g| g.is_nan() || *g < 0.0) {
        return Err(Error::invalid("gains must be non-negative"));
    }
    // Floors 1/g_i; zero gains (and gains so small the floor overflows) are
    // never filled.
    let floors: Vec<f64> = gains
        .iter()
        .map(|&g| if g > 0.0 { 1.0 / g } else { f64::INFINITY })
        .collect();
    let lowest = floors.iter().copied().fold(f64::INFINITY, f64::min);
    if !lowest.is_finite() {
        return Err(Error::invalid(
            "water-filling needs at least one positive gain",
        ));
    }

    let filled = |level: f64| -> f64 { floors.iter().map(|&f| (level - f).max(0.0)).sum() };

    // At `lowest` nothing is filled; at `lowest + budget` the best mode alone
    // takes the whole budget.
    let (mut lo, mut hi) = (lowest, lowest + budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let total = filled(mid);
        if (total - budget).abs() <= 1e-12 * budget {
            lo = mid;
            hi = mid;
            break;
        }
        if total > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let approx = 0.5 * (lo + hi);

    // Closed-form level on the active set {f_i < level}, shrinking the set
    // until it is self-consistent.
    let mut active: Vec<usize> = (0..floors.len()).filter(|&i| floors[i] < approx).collect();
    if active.is_empty() {
        active = (0..floors.len()).filter(|&i| floors[i] == lowest).collect();
    }
    let mut level;
    loop {
        level = (budget + active.iter().map(|&i| floors[i]).sum::<f64>()) / active.len() as f64;
        let before = active.len();
        active.retain(|&i| floors[i] < level);
        if active.len() == before || active.is_empty() {
            break;
        }
    }
    if active.is_empty() {
        active = (0..floors.len()).filter(|&i| floors[i] == lowest).collect();
        level = lowest + budget / active.len() as f64;
    }

    let mut weights = vec![0.0; floors.len()];
    for &i in &active {
        weights[i] = (level - floors[i]).max(0.0);
    }
    // Remove rounding drift so the budget holds tightly.
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        let scale = budget / total;
        weights.iter_mut().for_each(|w| *w *= scale);
    }
    PowerAllocation::checked(weights, AllocationKind::Waterfilling)
}

/// The water level of an allocation produced by [`waterfill`]:
/// `p_i + 1/g_i` on any active mode.
pub fn water_level(gains: &[f64], alloc: &PowerAllocation) -> Option<f64> {
    gains
        .iter()
        .zip(alloc.weights())
        .find(|(_, &p)| p > 0.0)
        .map(|(&g, &p)| p + 1.0 / g)
}

/// `log₂ det(I + g·H F Q Fᴴ Hᴴ)` in bit/s/Hz, computed through the
/// `N × N` form `log₂ det(I + g·Q^{1/2} Fᴴ Hᴴ H F Q^{1/2})`.
pub fn capacity(
    h: &ChannelMatrix,
    f: &Precoder,
    q: &PowerAllocation,
    link: &LinkBudget,
) -> Result<f64> {
    if f.tx_count() != h.tx_count() {
        return Err(Error::DimensionMismatch(format!(
            "precoder has {} rows but the channel has {} transmit samples",
            f.tx_count(),
            h.tx_count()
        )));
    }
    capacity_of(
        h.entries().view(),
        f.matrix().view(),
        q.weights(),
        link.effective_gain(),
    )
}

/// Matrix-level form of [`capacity`].
pub fn capacity_of(
    h: ArrayView2<Complex64>,
    f: ArrayView2<Complex64>,
    weights: &[f64],
    effective_gain: f64,
) -> Result<f64> {
    if f.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "F has {} rows, H has {} columns",
            f.nrows(),
            h.ncols()
        )));
    }
    if f.ncols() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "F has {} columns, Q has {} weights",
            f.ncols(),
            weights.len()
        )));
    }
    if !(effective_gain.is_finite() && effective_gain >= 0.0) {
        return Err(Error::invalid(format!(
            "effective gain must be >= 0, got {effective_gain}"
        )));
    }

    let hf = h.dot(&f);
    let gram = hf.t().mapv(|c| c.conj()).dot(&hf);
    let n = weights.len();
    let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let a = Array2::from_shape_fn((n, n), |(i, j)| {
        let v = gram[[i, j]] * (effective_gain * roots[i] * roots[j]);
        if i == j {
            v + 1.0
        } else {
            v
        }
    });
    let chol = a.cholesky(UPLO::Lower).map_err(|e| {
        Error::Numerical(format!(
            "Cholesky of I + gQ^(1/2)FᴴHᴴHFQ^(1/2) failed ({e}); n={n}, gain={effective_gain:e}"
        ))
    })?;
    let log2_det: f64 = (0..n).map(|i| 2.0 * chol[[i, i]].re.log2()).sum();
    if !log2_det.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite capacity (n={n}, gain={effective_gain:e})"
        )));
    }
    // log det(I + PSD) ≥ 0; clamp rounding noise at tiny gains
    Ok(log2_det.max(0.0))
}

/// `Σ log₂(1 + g·p_i·s_i²)`: capacity of parallel channels, as obtained with
/// the right singular vectors as precoder.
pub fn parallel_capacity(singular_values: &[f64], weights: &[f64], effective_gain: f64) -> f64 {
    singular_values
        .iter()
        .zip(weights)
        .map(|(s, p)| (effective_gain * p * s * s).ln_1p() / std::f64::consts::LN_2)
        .sum()
}
