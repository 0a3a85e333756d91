//! Capacity-versus-distance study.
//!
//! Distances are swept in units of the Rayleigh distance `d_r = r_t²/2`
//! (wavelengths). At every distance the channel and its SVD are computed
//! once and shared by all schemes.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{self, capacity, epa, link_budget, waterfill, LinkBudget};
use crate::channel::{build_channel, channel_svd, ChannelMatrix, ChannelSvd};
use crate::error::{Error, Result};
use crate::geometry::{sample_disk, Aperture, HALF_WAVELENGTH};
use crate::modes::{
    build_mode_precoder, build_svd_precoder, gram_orthogonality, oam_order, walsh_value,
    ModeFamily, Precoder,
};

pub const CSV_HEADER: [&str; 4] = ["d_over_dr", "d_wavelengths", "scheme", "capacity_bits"];

/// Precoding scheme compared in the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Right singular vectors with water-filling over every singular mode.
    #[value(name = "svd_wf")]
    SvdWf,
    /// Leading `n_modes` right singular vectors, equal power.
    #[value(name = "svd_epa")]
    SvdEpa,
    #[value(name = "oam_unfocused")]
    OamUnfocused,
    #[value(name = "oam_focused")]
    OamFocused,
    #[value(name = "walsh_radial")]
    WalshRadial,
    #[value(name = "walsh_angular")]
    WalshAngular,
    #[value(name = "walsh_polar")]
    WalshPolar,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::SvdWf,
        Scheme::SvdEpa,
        Scheme::OamUnfocused,
        Scheme::OamFocused,
        Scheme::WalshRadial,
        Scheme::WalshAngular,
        Scheme::WalshPolar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SvdWf => "svd_wf",
            Scheme::SvdEpa => "svd_epa",
            Scheme::OamUnfocused => "oam_unfocused",
            Scheme::OamFocused => "oam_focused",
            Scheme::WalshRadial => "walsh_radial",
            Scheme::WalshAngular => "walsh_angular",
            Scheme::WalshPolar => "walsh_polar",
        }
    }

    pub fn is_svd(&self) -> bool {
        matches!(self, Scheme::SvdWf | Scheme::SvdEpa)
    }

    /// Mode family behind a geometric scheme; `None` for the SVD schemes.
    ///
    /// Walsh resolutions use `b = ⌈log₂ N⌉` bits: all radial, all angular,
    /// or split `(⌊b/2⌋, ⌈b/2⌉)` for polar.
    pub fn family(&self, n_modes: usize, distance: f64) -> Option<ModeFamily> {
        let bits = walsh_bits(n_modes);
        match self {
            Scheme::SvdWf | Scheme::SvdEpa => None,
            Scheme::OamUnfocused => Some(ModeFamily::OamUnfocused),
            Scheme::OamFocused => Some(ModeFamily::OamFocused { distance }),
            Scheme::WalshRadial => Some(ModeFamily::radial_walsh(bits)),
            Scheme::WalshAngular => Some(ModeFamily::angular_walsh(bits)),
            Scheme::WalshPolar => Some(ModeFamily::Walsh {
                mu: bits / 2,
                nu: bits - bits / 2,
            }),
        }
    }
}

fn walsh_bits(n_modes: usize) -> u32 {
    n_modes.max(1).next_power_of_two().trailing_zeros()
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .iter()
            .copied()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!("unknown scheme '{s}'; valid: {}", scheme_names()))
            })
    }
}

pub fn scheme_names() -> String {
    Scheme::ALL
        .iter()
        .map(Scheme::name)
        .collect::<Vec<_>>()
        .join(", ")
}

/// `count` ratios spaced evenly in log scale over `[min, max]`.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            (0..count)
                .map(|i| match i {
                    0 => min,
                    i if i == count - 1 => max,
                    i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

pub const DEFAULT_SWEEP_MIN: f64 = 0.2;
pub const DEFAULT_SWEEP_MAX: f64 = 10.0;
pub const DEFAULT_SWEEP_POINTS: usize = 40;

/// Flat, JSON-serializable study configuration. Missing fields take the
/// reference values: 10λ apertures at λ/2 pitch, −20 dB, 16 modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub r_t: f64,
    pub r_r: f64,
    pub pitch: f64,
    pub snr_db: f64,
    pub n_modes: usize,
    pub schemes: Vec<Scheme>,
    /// Distances as multiples of the Rayleigh distance.
    pub sweep: Vec<f64>,
    /// Only used to report distances in meters.
    pub wavelength_m: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            r_t: 10.0,
            r_r: 10.0,
            pitch: HALF_WAVELENGTH,
            snr_db: -20.0,
            n_modes: 16,
            schemes: Scheme::ALL.to_vec(),
            sweep: log_spaced(DEFAULT_SWEEP_MIN, DEFAULT_SWEEP_MAX, DEFAULT_SWEEP_POINTS),
            wavelength_m: 0.01,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)?.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn rayleigh_distance(&self) -> f64 {
        rayleigh_distance(self.r_t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_t", self.r_t),
            ("r_r", self.r_r),
            ("pitch", self.pitch),
            ("wavelength_m", self.wavelength_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db must be finite"));
        }
        if self.n_modes == 0 {
            return Err(Error::invalid("n_modes must be >= 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("at least one scheme is required"));
        }
        if self.sweep.is_empty() {
            return Err(Error::invalid("sweep must contain at least one distance"));
        }
        if self.sweep.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("sweep ratios must be finite and > 0"));
        }
        if self.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sweep ratios must be strictly increasing"));
        }
        Ok(())
    }
}

/// `r_t²/(2λ)` in wavelengths.
pub fn rayleigh_distance(r_t: f64) -> f64 {
    r_t * r_t / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub d_over_dr: f64,
    pub d_wavelengths: f64,
    pub scheme: Scheme,
    pub capacity_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeDefect {
    pub scheme: Scheme,
    /// Largest off-diagonal `|FᴴF|` seen over the sweep.
    pub max_gram_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config: SweepConfig,
    pub tx_points: usize,
    pub rx_points: usize,
    pub rayleigh_distance_wavelengths: f64,
    pub rayleigh_distance_m: f64,
    pub orthogonality: Vec<SchemeDefect>,
    pub timestamp_unix: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    /// Capacities of one scheme in sweep order.
    pub fn series(&self, scheme: Scheme) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| (r.d_over_dr, r.capacity_bits))
            .collect()
    }

    pub fn capacity_at(&self, d_over_dr: f64, scheme: Scheme) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.scheme == scheme && r.d_over_dr == d_over_dr)
            .map(|r| r.capacity_bits)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Write the channel matrix of every sweep point here as CSV.
    pub dump_channel_dir: Option<PathBuf>,
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, &SweepOptions::default())
}

/// Geometric precoders that do not depend on distance, built once.
struct FixedPrecoders {
    by_scheme: Vec<(Scheme, Precoder)>,
}

impl FixedPrecoders {
    fn get(&self, scheme: Scheme) -> Option<&Precoder> {
        self.by_scheme
            .iter()
            .find(|(s, _)| *s == scheme)
            .map(|(_, p)| p)
    }
}

/// Capacities of all schemes at one distance, plus each precoder's Gram defect.
struct PointOutcome {
    records: Vec<SweepRecord>,
    defects: Vec<f64>,
}

pub fn run_sweep_with(config: &SweepConfig, options: &SweepOptions) -> Result<SweepResult> {
    config.validate()?;
    let d_r = config.rayleigh_distance();
    let tx = sample_disk(config.r_t, config.pitch, 0.0)?;
    let rx = sample_disk(config.r_r, config.pitch, 0.0)?;

    let mut fixed = Vec::new();
    for &scheme in &config.schemes {
        if scheme == Scheme::OamFocused || scheme.is_svd() {
            continue;
        }
        let family = scheme
            .family(config.n_modes, d_r)
            .expect("geometric scheme");
        let f = build_mode_precoder(family, &tx, config.n_modes).map_err(|e| Error::Sweep {
            ratio: f64::NAN,
            scheme: scheme.to_string(),
            source: Box::new(e),
        })?;
        fixed.push((scheme, f));
    }
    let fixed = FixedPrecoders { by_scheme: fixed };

    if let Some(dir) = &options.dump_channel_dir {
        std::fs::create_dir_all(dir)?;
    }

    let outcomes: Vec<PointOutcome> = config
        .sweep
        .par_iter()
        .enumerate()
        .map(|(idx, &ratio)| {
            let d = ratio * d_r;
            let rx_here = rx.with_z_offset(d);
            let h = build_channel(&tx, &rx_here).map_err(|e| point_error(ratio, "channel", e))?;
            if let Some(dir) = &options.dump_channel_dir {
                h.dump_csv(&dir.join(format!("channel_{idx:03}.csv")))?;
            }
            evaluate_point(config, &tx, &h, ratio, d, &fixed)
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(config.sweep.len() * config.schemes.len());
    let mut worst = vec![0.0f64; config.schemes.len()];
    for out in outcomes {
        records.extend(out.records);
        for (w, d) in worst.iter_mut().zip(out.defects) {
            *w = w.max(d);
        }
    }

    let metadata = SweepMetadata {
        config: config.clone(),
        tx_points: tx.len(),
        rx_points: rx.len(),
        rayleigh_distance_wavelengths: d_r,
        rayleigh_distance_m: d_r * config.wavelength_m,
        orthogonality: config
            .schemes
            .iter()
            .zip(worst)
            .map(|(&scheme, max_gram_defect)| SchemeDefect {
                scheme,
                max_gram_defect,
            })
            .collect(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(SweepResult { records, metadata })
}

fn point_error(ratio: f64, what: &str, e: Error) -> Error {
    Error::Sweep {
        ratio,
        scheme: what.to_string(),
        source: Box::new(e),
    }
}

fn evaluate_point(
    config: &SweepConfig,
    tx: &Aperture,
    h: &ChannelMatrix,
    ratio: f64,
    d: f64,
    fixed: &FixedPrecoders,
) -> Result<PointOutcome> {
    let link = link_budget(config.snr_db, d).map_err(|e| point_error(ratio, "link budget", e))?;
    let svd = if config.schemes.iter().any(Scheme::is_svd) {
        Some(channel_svd(h).map_err(|e| point_error(ratio, "svd", e))?)
    } else {
        None
    };

    let mut records = Vec::with_capacity(config.schemes.len());
    let mut defects = Vec::with_capacity(config.schemes.len());
    for &scheme in &config.schemes {
        let (c, defect) = scheme_capacity(config, tx, h, svd.as_ref(), &link, scheme, d, fixed)
            .map_err(|e| point_error(ratio, scheme.name(), e))?;
        if !(c.is_finite() && c >= 0.0) {
            return Err(point_error(
                ratio,
                scheme.name(),
                Error::Numerical(format!("capacity {c} is not a finite non-negative value")),
            ));
        }
        records.push(SweepRecord {
            d_over_dr: ratio,
            d_wavelengths: d,
            scheme,
            capacity_bits: c,
        });
        defects.push(defect);
    }
    Ok(PointOutcome { records, defects })
}

#[allow(clippy::too_many_arguments)]
fn scheme_capacity(
    config: &SweepConfig,
    tx: &Aperture,
    h: &ChannelMatrix,
    svd: Option<&ChannelSvd>,
    link: &LinkBudget,
    scheme: Scheme,
    d: f64,
    fixed: &FixedPrecoders,
) -> Result<(f64, f64)> {
    match scheme {
        Scheme::SvdWf => {
            let svd = svd.expect("svd computed for svd schemes");
            svd_waterfilling_capacity(h, svd, link)
        }
        Scheme::SvdEpa => {
            let svd = svd.expect("svd computed for svd schemes");
            let f = build_svd_precoder(svd, config.n_modes)?;
            let c = capacity(h, &f, &epa(config.n_modes)?, link)?;
            Ok((c, gram_orthogonality(&f)))
        }
        Scheme::OamFocused => {
            let family = scheme.family(config.n_modes, d).expect("geometric scheme");
            let f = build_mode_precoder(family, tx, config.n_modes)?;
            let c = capacity(h, &f, &epa(config.n_modes)?, link)?;
            Ok((c, gram_orthogonality(&f)))
        }
        _ => {
            let f = fixed.get(scheme).expect("fixed precoder prepared");
            let c = capacity(h, f, &epa(config.n_modes)?, link)?;
            Ok((c, gram_orthogonality(f)))
        }
    }
}

/// Water-filling over all singular modes; the precoder keeps only the modes
/// that receive power.
pub fn svd_waterfilling_capacity(
    h: &ChannelMatrix,
    svd: &ChannelSvd,
    link: &LinkBudget,
) -> Result<(f64, f64)> {
    let gains: Vec<f64> = svd
        .eigenvalues()
        .iter()
        .map(|e| e * link.effective_gain())
        .collect();
    let q = waterfill(&gains, 1.0)?;
    // gains are non-increasing, so the active set is a prefix
    let active = q.active_count().max(1);
    let f = build_svd_precoder(svd, active)?;
    let q_active = capacity::PowerAllocation::diagonal(q.weights()[..active].to_vec())?;
    let c = capacity(h, &f, &q_active, link)?;
    Ok((c, gram_orthogonality(&f)))
}

/// Header plus one line per record, LF endings, shortest round-trip floats.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.d_over_dr.to_string(),
            r.d_wavelengths.to_string(),
            r.scheme.name().to_string(),
            r.capacity_bits.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(&result.records, file)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::invalid(format!("unexpected CSV header: {header:?}")));
    }
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("bad number '{}': {e}", &row[i])))
        };
        records.push(SweepRecord {
            d_over_dr: num(0)?,
            d_wavelengths: num(1)?,
            scheme: row[2].parse()?,
            capacity_bits: num(3)?,
        });
    }
    Ok(records)
}

pub fn emit_metadata(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, &result.metadata)?;
    Ok(())
}

/// Phase in `[0, 2π)`.
fn phase_of(c: num_complex::Complex64) -> f64 {
    let a = c.arg();
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Writes one `x,y,phase_radians` CSV per mode of `family` into `dir`.
/// Returns the files in mode order.
pub fn emit_mode_maps(
    family: ModeFamily,
    aperture: &Aperture,
    count: usize,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let modes = family.modes(count)?;
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(modes.len());
    for mode in &modes {
        let path = dir.join(format!("{mode}.csv"));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(["x", "y", "phase_radians"])?;
        for p in aperture.points() {
            let v = family.value(mode, p, aperture.radius())?;
            w.write_record([p.x.to_string(), p.y.to_string(), phase_of(v).to_string()])?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Continuous inner products `∫∫ φ_a φ_b ρ dρ dθ` of the polar Walsh
/// functions at resolution `(mu, nu)`, by midpoint quadrature on a polar grid.
pub fn walsh_continuous_gram(
    mu: u32,
    nu: u32,
    radius: f64,
    radial_nodes: usize,
    angular_nodes: usize,
) -> Result<Vec<Vec<f64>>> {
    let family = ModeFamily::Walsh { mu, nu };
    let count = family.capacity().expect("Walsh family is finite");
    let modes = family.modes(count)?;
    let dr = radius / radial_nodes as f64;
    let dt = TAU / angular_nodes as f64;
    let mut gram = vec![vec![0.0; count]; count];
    let mut values = vec![0.0; count];
    for i in 0..radial_nodes {
        let rho = (i as f64 + 0.5) * dr;
        for j in 0..angular_nodes {
            let theta = (j as f64 + 0.5) * dt;
            let p = crate::geometry::SamplePoint {
                x: rho * theta.cos(),
                y: rho * theta.sin(),
                rho,
                theta,
            };
            for (v, m) in values.iter_mut().zip(&modes) {
                if let crate::modes::ModeSpec::Walsh { m, n, .. } = *m {
                    *v = walsh_value(m, n, mu, nu, &p, radius)?;
                }
            }
            let w = rho * dr * dt;
            for a in 0..count {
                for b in a..count {
                    gram[a][b] += values[a] * values[b] * w;
                }
            }
        }
    }
    for a in 1..count {
        let (upper, lower) = gram.split_at_mut(a);
        for (b, row) in upper.iter().enumerate() {
            lower[0][b] = row[a];
        }
    }
    Ok(gram)
}

/// `(1/2π) ∫ e^{j(ℓ_a − ℓ_b)θ} dθ` for the first `count` OAM orders, by the
/// periodic rectangle rule; returns the largest deviation from identity.
pub fn oam_angular_defect(count: u32, nodes: usize) -> f64 {
    let dt = TAU / nodes as f64;
    let mut worst: f64 = 0.0;
    for a in 0..count {
        for b in 0..count {
            let dl = (oam_order(a) - oam_order(b)) as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..nodes {
                let t = (k as f64 + 0.5) * dt;
                re += (dl * t).cos();
                im += (dl * t).sin();
            }
            let (re, im) = (re / nodes as f64, im / nodes as f64);
            let expect = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((re - expect).hypot(im));
        }
    }
    worst
}

/// Result of the `validate` checks.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub text: String,
    pub passed: bool,
}

/// Orthogonality and unit-convention checks on the configured aperture.
pub fn validate_report(config: &SweepConfig) -> Result<ValidationReport> {
    config.validate()?;
    let mut text = String::new();
    let mut passed = true;
    let d_r = config.rayleigh_distance();
    let tx = sample_disk(config.r_t, config.pitch, 0.0)?;
    let rx = sample_disk(config.r_r, config.pitch, d_r)?;
    let _ = writeln!(
        text,
        "aperture: r_t={} r_r={} pitch={} -> N_t={} N_r={}; d_r={} wavelengths",
        config.r_t,
        config.r_r,
        config.pitch,
        tx.len(),
        rx.len(),
        d_r
    );

    let h = build_channel(&tx, &rx)?;
    let svd = channel_svd(&h)?;
    let n = config.n_modes;
    let _ = writeln!(
        text,
        "discrete Gram defects (max off-diagonal |FᴴF|, N={n}, d=d_r):"
    );
    let svd_f = build_svd_precoder(&svd, n)?;
    let svd_defect = gram_orthogonality(&svd_f);
    let ok = svd_defect <= 1e-10;
    passed &= ok;
    let _ = writeln!(
        text,
        "  {:<14} {:.3e} {}",
        "svd",
        svd_defect,
        if ok { "ok" } else { "FAIL" }
    );
    for scheme in [
        Scheme::OamUnfocused,
        Scheme::OamFocused,
        Scheme::WalshRadial,
        Scheme::WalshAngular,
        Scheme::WalshPolar,
    ] {
        let family = scheme.family(n, d_r).expect("geometric scheme");
        let f = build_mode_precoder(family, &tx, n)?;
        let _ = writeln!(
            text,
            "  {:<14} {:.3e}",
            scheme.name(),
            gram_orthogonality(&f)
        );
    }

    let recon = svd.reconstruction_error(h.entries()) / h.frobenius_norm();
    let ok = recon <= 1e-8;
    passed &= ok;
    let _ = writeln!(
        text,
        "SVD relative reconstruction error: {recon:.3e} {}",
        if ok { "ok" } else { "FAIL" }
    );

    let gram = walsh_continuous_gram(2, 2, config.r_t, 512, 512)?;
    let mut worst: f64 = 0.0;
    for (a, row) in gram.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            worst = worst.max((v - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    let ok = worst <= 1e-2;
    passed &= ok;
    let _ = writeln!(
        text,
        "polar Walsh (mu=2, nu=2) continuous Gram vs identity, 512x512 quadrature: {worst:.3e} {}",
        if ok { "ok" } else { "FAIL" }
    );

    let oam = oam_angular_defect(n as u32, 4096);
    let ok = oam <= 1e-10;
    passed &= ok;
    let _ = writeln!(
        text,
        "OAM angular orthogonality defect: {oam:.3e} {}",
        if ok { "ok" } else { "FAIL" }
    );

    // One on-axis element at each end must see exactly the configured SNR.
    let one = sample_disk(config.pitch * 0.5, config.pitch, 0.0)?;
    let h1 = build_channel(&one, &one.with_z_offset(d_r))?;
    let f1 = build_mode_precoder(ModeFamily::OamUnfocused, &one, 1)?;
    let link = link_budget(config.snr_db, d_r)?;
    let c1 = capacity(&h1, &f1, &epa(1)?, &link)?;
    let expect = (1.0 + link.snr()).log2();
    let ok = (c1 - expect).abs() <= 1e-12;
    passed &= ok;
    let _ = writeln!(
        text,
        "single-element capacity {c1:.15} vs log2(1+SNR) {expect:.15} {}",
        if ok { "ok" } else { "FAIL" }
    );

    let _ = writeln!(
        text,
        "{}",
        if passed {
            "all checks passed"
        } else {
            "SOME CHECKS FAILED"
        }
    );
    Ok(ValidationReport { text, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_examples() {
        assert_eq!(rayleigh_distance(10.0), 50.0);
        assert_eq!(rayleigh_distance(1.0), 0.5);
        assert_eq!(rayleigh_distance(5.0), 12.5);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        let err = "bogus".parse::<Scheme>().unwrap_err().to_string();
        assert!(err.contains("svd_wf") && err.contains("walsh_polar"));
    }

    #[test]
    fn walsh_resolutions_for_sixteen_modes() {
        assert_eq!(
            Scheme::WalshRadial.family(16, 1.0),
            Some(ModeFamily::Walsh { mu: 4, nu: 0 })
        );
        assert_eq!(
            Scheme::WalshAngular.family(16, 1.0),
            Some(ModeFamily::Walsh { mu: 0, nu: 4 })
        );
        assert_eq!(
            Scheme::WalshPolar.family(16, 1.0),
            Some(ModeFamily::Walsh { mu: 2, nu: 2 })
        );
        assert_eq!(
            Scheme::WalshPolar.family(20, 1.0),
            Some(ModeFamily::Walsh { mu: 2, nu: 3 })
        );
        assert_eq!(
            Scheme::WalshRadial.family(1, 1.0),
            Some(ModeFamily::Walsh { mu: 0, nu: 0 })
        );
    }

    #[test]
    fn default_config() {
        let c = SweepConfig::default();
        c.validate().unwrap();
        assert_eq!(c.sweep.len(), 40);
        assert_eq!(c.sweep[0], DEFAULT_SWEEP_MIN);
        assert_eq!(*c.sweep.last().unwrap(), DEFAULT_SWEEP_MAX);
        assert_eq!(c.rayleigh_distance(), 50.0);
        assert_eq!(c.schemes.len(), 7);
    }

    #[test]
    fn config_json_partial_and_invalid() {
        let c = SweepConfig::from_json(
            r#"{"r_t": 5, "r_r": 5, "schemes": ["svd_epa", "walsh_polar"]}"#,
        )
        .unwrap();
        assert_eq!(c.r_t, 5.0);
        assert_eq!(c.snr_db, -20.0);
        assert_eq!(c.schemes, vec![Scheme::SvdEpa, Scheme::WalshPolar]);
        assert!(SweepConfig::from_json(r#"{"schemes": ["bogus"]}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"sweep": [1.0, 0.5]}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"pitch": 0}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"n_modes": 0}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"typo_field": 1}"#).is_err());
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(0.1, 10.0, 5);
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[4], 10.0);
        assert!((v[2] - 1.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_point_single_scheme() {
        let cfg = SweepConfig {
            r_t: 2.0,
            r_r: 2.0,
            schemes: vec![Scheme::SvdEpa],
            sweep: vec![1.0],
            ..SweepConfig::default()
        };
        let res = run_sweep(&cfg).unwrap();
        assert_eq!(res.records.len(), 1);
        assert_eq!(res.records[0].d_wavelengths, 2.0);
        assert_eq!(res.metadata.tx_points, res.metadata.rx_points);
    }

    #[test]
    fn csv_header_only_and_counts() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "d_over_dr,d_wavelengths,scheme,capacity_bits\n"
        );

        let recs: Vec<SweepRecord> = (0..3)
            .map(|i| SweepRecord {
                d_over_dr: 0.1 * (i + 1) as f64,
                d_wavelengths: 5.0 * (i + 1) as f64 / 3.0,
                scheme: Scheme::ALL[i],
                capacity_bits: 1.0 / 3.0 + i as f64,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(read_csv(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn oam_angular_quadrature_exact() {
        assert!(oam_angular_defect(16, 256) <= 1e-10);
    }
}
