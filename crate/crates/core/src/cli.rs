//! Command-line front end: `sweep`, `modes` and `validate`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiment::{
    emit_csv, emit_metadata, emit_mode_maps, log_spaced, run_sweep_with, scheme_names,
    validate_report, Scheme, SweepConfig, SweepOptions, DEFAULT_SWEEP_MAX, DEFAULT_SWEEP_MIN,
    DEFAULT_SWEEP_POINTS,
};
use crate::geometry::sample_disk;
use crate::modes::ModeFamily;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "holomimo",
    version,
    about = "Near-field disk-aperture MIMO capacity study"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Capacity versus distance for the selected schemes, written as CSV.
    Sweep(SweepArgs),
    /// Dump per-mode phase maps (x, y, phase_radians) as CSV files.
    Modes(ModesArgs),
    /// Orthogonality and unit-convention checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct GeometryArgs {
    /// Aperture radius in wavelengths (Tx and Rx unless --rx-radius is set).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    rx_radius: Option<f64>,
    /// Sample spacing in wavelengths.
    #[arg(long)]
    pitch: Option<f64>,
    /// Number of modes per precoder.
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV.
    #[arg(long, default_value = "capacity.csv")]
    out: PathBuf,
    /// Metadata JSON (defaults to <out>.meta.json).
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Log-spaced sweep density.
    #[arg(long)]
    points_per_decade: Option<f64>,
    /// Smallest d/d_r.
    #[arg(long)]
    d_min: Option<f64>,
    /// Largest d/d_r.
    #[arg(long)]
    d_max: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write each sweep point's channel matrix as CSV into this directory.
    #[arg(long)]
    dump_channel: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "oam_unfocused")]
    OamUnfocused,
    #[value(name = "oam_focused")]
    OamFocused,
    #[value(name = "walsh")]
    Walsh,
}

#[derive(Debug, Args)]
struct ModesArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Radial Walsh resolution.
    #[arg(long, default_value_t = 2)]
    mu: u32,
    /// Angular Walsh resolution.
    #[arg(long, default_value_t = 2)]
    nu: u32,
    /// Number of modes (default: all Walsh functions, or 4 OAM modes).
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pitch: f64,
    /// Focusing distance in wavelengths (default: the Rayleigh distance).
    #[arg(long)]
    distance: Option<f64>,
    #[arg(long, default_value = "modes")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    geometry: GeometryArgs,
}

/// Runs the CLI and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Modes(a) => modes(a),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn base_config(path: Option<&Path>, geometry: &GeometryArgs) -> Result<SweepConfig> {
    let mut cfg = match path {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    if let Some(r) = geometry.radius {
        cfg.r_t = r;
        cfg.r_r = geometry.rx_radius.unwrap_or(r);
    } else if let Some(r) = geometry.rx_radius {
        cfg.r_r = r;
    }
    if let Some(p) = geometry.pitch {
        cfg.pitch = p;
    }
    if let Some(n) = geometry.modes {
        cfg.n_modes = n;
    }
    if let Some(s) = geometry.snr_db {
        cfg.snr_db = s;
    }
    Ok(cfg)
}

fn sweep_config(a: &SweepArgs) -> Result<SweepConfig> {
    let mut cfg = base_config(a.config.as_deref(), &a.geometry)?;
    if let Some(s) = &a.schemes {
        cfg.schemes = s.clone();
    }
    if a.d_min.is_some() || a.d_max.is_some() || a.points_per_decade.is_some() {
        let lo = a
            .d_min
            .unwrap_or_else(|| cfg.sweep.first().copied().unwrap_or(DEFAULT_SWEEP_MIN));
        let hi = a
            .d_max
            .unwrap_or_else(|| cfg.sweep.last().copied().unwrap_or(DEFAULT_SWEEP_MAX));
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::invalid(format!("invalid sweep range [{lo}, {hi}]")));
        }
        let count = match a.points_per_decade {
            Some(ppd) if ppd > 0.0 && ppd.is_finite() => {
                ((hi / lo).log10() * ppd).round() as usize + 1
            }
            Some(ppd) => {
                return Err(Error::invalid(format!(
                    "points-per-decade must be > 0, got {ppd}"
                )))
            }
            None => DEFAULT_SWEEP_POINTS,
        };
        cfg.sweep = if hi == lo {
            vec![lo]
        } else {
            log_spaced(lo, hi, count.max(2))
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let cfg = sweep_config(&a)?;
    let options = SweepOptions {
        dump_channel_dir: a.dump_channel.clone(),
    };
    let result = match a.threads {
        Some(0) => return Err(Error::invalid("--threads must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(|| run_sweep_with(&cfg, &options))?,
        None => run_sweep_with(&cfg, &options)?,
    };
    emit_csv(&result, &a.out)?;
    let meta = a.meta.clone().unwrap_or_else(|| {
        let mut name = a.out.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    });
    emit_metadata(&result, &meta)?;
    eprintln!(
        "wrote {} records ({} distances x {} schemes) to {}",
        result.records.len(),
        cfg.sweep.len(),
        cfg.schemes.len(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

fn modes(a: ModesArgs) -> Result<i32> {
    let aperture = sample_disk(a.radius, a.pitch, 0.0)?;
    let (family, default_count) = match a.family {
        FamilyArg::OamUnfocused => (ModeFamily::OamUnfocused, 4),
        FamilyArg::OamFocused => (
            ModeFamily::OamFocused {
                distance: a.distance.unwrap_or(a.radius * a.radius / 2.0),
            },
            4,
        ),
        FamilyArg::Walsh => {
            let fam = ModeFamily::Walsh { mu: a.mu, nu: a.nu };
            (fam, fam.capacity().unwrap_or(1))
        }
    };
    let paths = emit_mode_maps(
        family,
        &aperture,
        a.count.unwrap_or(default_count),
        &a.out_dir,
    )?;
    for p in &paths {
        println!("{}", p.display());
    }
    Ok(EXIT_OK)
}

fn validate(a: ValidateArgs) -> Result<i32> {
    let cfg = base_config(a.config.as_deref(), &a.geometry)?;
    let report = validate_report(&cfg)?;
    print!("{}", report.text);
    Ok(if report.passed { EXIT_OK } else { EXIT_RUNTIME })
}

/// Valid `--schemes` values, comma separated.
pub fn valid_schemes() -> String {
    scheme_names()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bogus_scheme_is_usage_error() {
        assert_eq!(
            cli_main(["holomimo", "sweep", "--schemes", "bogus"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(cli_main(["holomimo", "sweep", "--frobnicate"]), EXIT_USAGE);
        assert_eq!(cli_main(["holomimo"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(cli_main(["holomimo", "--help"]), EXIT_OK);
    }

    #[test]
    fn negative_snr_flag_parses() {
        let cli = Cli::try_parse_from([
            "holomimo",
            "sweep",
            "--snr-db",
            "-20",
            "--d-min",
            "0.5",
            "--d-max",
            "2",
            "--points-per-decade",
            "10",
        ])
        .unwrap();
        let Command::Sweep(a) = cli.command else {
            panic!()
        };
        let cfg = sweep_config(&a).unwrap();
        assert_eq!(cfg.snr_db, -20.0);
        assert_eq!(cfg.sweep.len(), 7);
        assert_eq!(cfg.sweep[0], 0.5);
    }

    #[test]
    fn invalid_range_is_rejected() {
        assert_eq!(
            cli_main(["holomimo", "sweep", "--d-min", "2", "--d-max", "1"]),
            EXIT_USAGE
        );
    }
}
