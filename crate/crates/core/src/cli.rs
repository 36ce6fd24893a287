//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::circuit::{channel_transfer_matrix, MirrorId};
use crate::dynamics::{
    calibrate, epsilon_sweep, finite_diff_sensitivity, footprint_report, power_spectrum, simulate_timeseries,
};
use crate::error::{Error, Result};
use crate::scenario::{footprint_json, load_scenario, series_csv, spectrum_csv, write_atomic};

#[derive(Debug, Parser)]
#[command(name = "mzi-footprint", version, about = "Nested Mach-Zehnder footprint simulator")]
pub struct Cli {
    /// Report failures as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the detector paths and the zero-angle transfer matrix.
    Paths { scenario: PathBuf },
    /// Write the quad-signal time series as CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the power spectrum and the per-mirror footprint report.
    Spectrum {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full spectrum as CSV.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Finite-difference sensitivity of the baseline signal to one mirror.
    Sensitivity {
        scenario: PathBuf,
        #[arg(long)]
        mirror: String,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        /// Sweep the inner-arm mismatch ε over `lo:hi:n` and fit a line.
        #[arg(long, allow_hyphen_values = true)]
        sweep: Option<String>,
        /// Mirrors receiving +ε/2 and −ε/2 during a sweep.
        #[arg(long, default_value = "A,B")]
        pair: String,
    },
    /// Find the detector offset that nulls the baseline signal.
    Calibrate {
        scenario: PathBuf,
        /// Search half-width; defaults to the scenario's calibration bracket.
        #[arg(long)]
        bracket: Option<f64>,
    },
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::usage(format!("--sweep expects lo:hi:n with n ≥ 2, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n < 2 || !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(bad());
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn parse_pair(spec: &str) -> Result<(MirrorId, MirrorId)> {
    match spec.split(',').map(str::trim).collect::<Vec<_>>().as_slice() {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok((MirrorId::from(*a), MirrorId::from(*b))),
        _ => Err(Error::usage(format!("--pair expects two mirror ids `X,Y`, got `{spec}`"))),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

/// Executes one command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Paths { scenario } => {
            let s = load_scenario(scenario)?;
            let exp = s.build_experiment()?;
            writeln!(out, "{:<6} {:>24} {:>24}  mirrors", "path", "re", "im").map_err(io_err)?;
            for (i, p) in exp.paths().iter().enumerate() {
                let label = if p.mirrors.is_empty() { "-".to_string() } else { p.mirror_labels() };
                writeln!(out, "{:<6} {:>24.16e} {:>24.16e}  {label}", i + 1, p.coefficient.re, p.coefficient.im)
                    .map_err(io_err)?;
            }
            let u = channel_transfer_matrix(exp.circuit())?;
            writeln!(out, "\ntransfer matrix (rows: output channel, columns: input channel)").map_err(io_err)?;
            for r in 1..=u.dim() {
                let row: Vec<String> = (1..=u.dim())
                    .map(|c| {
                        let z = u.entry(r, c);
                        format!("{:>+.6}{:+.6}i", z.re, z.im)
                    })
                    .collect();
                writeln!(out, "  {}", row.join("  ")).map_err(io_err)?;
            }
            writeln!(out, "unitarity residual: {:.3e}", u.unitarity_residual()).map_err(io_err)?;
        }
        Command::Simulate { scenario, out: path } => {
            let s = load_scenario(scenario)?;
            let series = simulate_timeseries(&s.build_experiment()?)?;
            write_atomic(path, &series_csv(&s, &series))?;
            writeln!(out, "wrote {} samples to {}", series.len(), path.display()).map_err(io_err)?;
        }
        Command::Spectrum {
            scenario,
            out: path,
            plot_data,
        } => {
            let s = load_scenario(scenario)?;
            let exp = s.build_experiment()?;
            let series = simulate_timeseries(&exp)?;
            let spectrum = power_spectrum(&series)?;
            let report = footprint_report(&spectrum, exp.drivers(), exp.threshold())?;
            write_atomic(path, &footprint_json(&s, &report))?;
            if let Some(plot) = plot_data {
                write_atomic(plot, &spectrum_csv(&s, &spectrum))?;
            }
            writeln!(out, "{:<8} {:>10} {:>24} {:>14}  detected", "mirror", "freq_hz", "peak_power", "normalized")
                .map_err(io_err)?;
            for (id, m) in &report.mirrors {
                writeln!(
                    out,
                    "{:<8} {:>10} {:>24.16e} {:>14.6e}  {}",
                    id.to_string(),
                    m.frequency,
                    m.peak_power,
                    m.normalized_power,
                    m.detected
                )
                .map_err(io_err)?;
            }
        }
        Command::Sensitivity {
            scenario,
            mirror,
            step,
            sweep,
            pair,
        } => {
            let s = load_scenario(scenario)?;
            let exp = s.build_experiment()?;
            let id = MirrorId::from(mirror.as_str());
            match sweep {
                None => {
                    let est = finite_diff_sensitivity(&exp, &id, *step)?;
                    if est.step_warning {
                        eprintln!("warning: step {step} is not small against the signal curvature");
                    }
                    writeln!(out, "d(signal)/d(theta_{id}) = {:.16e}", est.value).map_err(io_err)?;
                }
                Some(spec) => {
                    let eps = parse_sweep(spec)?;
                    let (plus, minus) = parse_pair(pair)?;
                    let (points, fit) = epsilon_sweep(&exp, &id, (&plus, &minus), &eps, *step)?;
                    writeln!(out, "{:>24} {:>24}", "epsilon", "sensitivity").map_err(io_err)?;
                    for p in &points {
                        if p.sensitivity.step_warning {
                            eprintln!("warning: step {step} is not small at epsilon = {:e}", p.epsilon);
                        }
                        writeln!(out, "{:>24.16e} {:>24.16e}", p.epsilon, p.sensitivity.value).map_err(io_err)?;
                    }
                    writeln!(out, "slope: {:.16e}", fit.slope).map_err(io_err)?;
                    writeln!(out, "intercept: {:.16e}", fit.intercept).map_err(io_err)?;
                    writeln!(out, "r_squared: {:.16}", fit.r_squared).map_err(io_err)?;
                }
            }
        }
        Command::Calibrate { scenario, bracket } => {
            let s = load_scenario(scenario)?;
            let exp = s.build_experiment()?;
            let bracket = bracket.unwrap_or_else(|| s.calibration_bracket());
            let y = calibrate(&exp, bracket)?;
            let calibrated = exp.clone().with_detector(exp.detector().with_offset(y)?);
            writeln!(out, "offset: {y:.16e}").map_err(io_err)?;
            writeln!(out, "residual: {:.16e}", calibrated.baseline_signal()?).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Error object printed with `--json-errors`.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": e.kind(),
            "exit_code": e.exit_code(),
            "message": e.to_string(),
        }
    })
    .to_string()
}

/// Process entry point; returns the exit status.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            if cli.json_errors {
                eprintln!("{}", error_json(&e));
            } else {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}
