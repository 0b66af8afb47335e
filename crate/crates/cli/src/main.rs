//! `bergman` — command-line front end for the Bergman-space laboratory.
//!
//! Every subcommand prints JSON to stdout (matrices row-major, complex
//! entries as `[re, im]` pairs) and reports problems on stderr. Exit codes:
//! 0 success, 1 estimation failure, 2 invalid input or I/O failure,
//! 3 acceptance-suite failure. Usage errors from the argument parser also
//! exit with 2.

use bergman_core::autgroup::{isometry_defect, unipotent_gamma};
use bergman_core::bergman::{canonical_qr, param_dim};
use bergman_core::experiments::{run_acceptance_suite, run_experiment, Profile};
use bergman_core::metrics::{gram, volume_density};
use bergman_core::projspace::{CMat, C64};
use bergman_core::{
    build_basis, section_space_dim, BergmanPoint, Error, MetricKind, QuadratureSpec, SLMatrix,
};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bergman",
    version,
    about = "Bergman metrics on CP^n: canonical coordinates, restricted Calabi/Mabuchi \
             metrics, unipotent orbit experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Calabi,
    Mabuchi,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Calabi => MetricKind::Calabi,
            MetricArg::Mabuchi => MetricKind::Mabuchi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Quick,
    Full,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Quick => Profile::Quick,
            ProfileArg::Full => Profile::Full,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Section-space and coordinate dimensions for (n, k).
    Dims {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// The ordered monomial basis of degree-k sections on CP^n.
    Basis {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Canonical QR of a matrix file (rescaled to determinant 1 first).
    Qr {
        /// JSON file: row-major matrix, complex entries as [re, im].
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Gram matrix of the restricted metric at a point.
    Gram {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// "identity" or a path to a matrix file (any invertible matrix;
        /// it is rescaled and sent to its canonical representative).
        #[arg(long)]
        point: String,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Volume density (sqrt of the Gram determinant) at a point.
    Density {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        point: String,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Unipotent orbit sweep driven by a JSON config file.
    OrbitSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Congruence defect of one unipotent pullback (0 for an exact isometry).
    IsometryCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "identity")]
        point: String,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the acceptance suite and print one verdict line per criterion.
    Accept {
        #[arg(long, value_enum)]
        profile: ProfileArg,
        /// Optional path for the machine-readable JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::EstimationFailure(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cmd: Cmd) -> Result<u8, Error> {
    match cmd {
        Cmd::Dims { n, k } => {
            let sections = section_space_dim(n, k)?;
            emit(&json!({
                "n": n,
                "k": k,
                "sections": sections,
                "param_dim": param_dim(sections),
            }));
            Ok(0)
        }
        Cmd::Basis { n, k } => {
            let basis = build_basis(n, k)?;
            let monomials: Vec<&[u32]> =
                basis.indices().iter().map(|mi| mi.exponents()).collect();
            emit(&json!({
                "n": n,
                "k": k,
                "length": basis.len(),
                "monomials": monomials,
            }));
            Ok(0)
        }
        Cmd::Qr { matrix } => {
            let a = SLMatrix::new(read_matrix(&matrix)?)?;
            let (q, r) = canonical_qr(&a)?;
            emit(&json!({
                "dim": a.dim(),
                "q": complex_rows(&q),
                "r": complex_rows(&r),
            }));
            Ok(0)
        }
        Cmd::Gram {
            n,
            k,
            point,
            metric,
            samples,
            seed,
        } => {
            let base = load_point(n, k, &point)?;
            let quad = QuadratureSpec::monte_carlo(samples, seed);
            let g = gram(&base, metric.into(), &quad)?;
            emit(&json!({
                "n": n,
                "k": k,
                "metric": g.kind,
                "samples": samples,
                "seed": seed,
                "dim": g.dim(),
                "entries": real_rows(&g.entries),
                "std_errors": real_rows(&g.std_errors),
                "min_eigenvalue": g.min_eigenvalue(),
            }));
            Ok(0)
        }
        Cmd::Density {
            n,
            k,
            point,
            metric,
            samples,
            seed,
        } => {
            let base = load_point(n, k, &point)?;
            let quad = QuadratureSpec::monte_carlo(samples, seed);
            let est = volume_density(&base, metric.into(), &quad)?;
            emit(&json!({
                "n": n,
                "k": k,
                "metric": MetricKind::from(metric),
                "samples": samples,
                "seed": seed,
                "value": est.value,
                "std_error": est.std_error,
            }));
            Ok(0)
        }
        Cmd::OrbitSweep { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
            let cfg = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", config.display())))?;
            let (sweep, report) = run_experiment(&cfg)?;
            emit(&serde_json::to_value(&report).expect("report serializes"));
            if sweep.failures.is_empty() {
                Ok(0)
            } else {
                for f in &sweep.failures {
                    eprintln!("station m = {} failed: {}", f.m, f.message);
                }
                Ok(1)
            }
        }
        Cmd::IsometryCheck {
            n,
            k,
            point,
            m,
            metric,
            samples,
            seed,
        } => {
            let base = load_point(n, k, &point)?;
            let gamma = unipotent_gamma(m, n)?;
            let quad = QuadratureSpec::monte_carlo(samples, seed);
            let defect = isometry_defect(&base, &gamma, metric.into(), &quad)?;
            emit(&json!({
                "n": n,
                "k": k,
                "m": m,
                "metric": MetricKind::from(metric),
                "samples": samples,
                "seed": seed,
                "defect": defect,
            }));
            Ok(0)
        }
        Cmd::Accept { profile, report } => {
            let suite = run_acceptance_suite(profile.into());
            print!("{}", suite.summary());
            if let Some(path) = report {
                std::fs::write(&path, suite.to_json())
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(if suite.all_passed { 0 } else { 3 })
        }
    }
}

fn emit(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON output"));
}

/// Read a row-major complex matrix from a JSON file of `[re, im]` pairs.
fn read_matrix(path: &PathBuf) -> Result<CMat, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidConfig(format!(
            "{}: expected a JSON matrix of [re, im] pairs: {e}",
            path.display()
        ))
    })?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidConfig(format!(
            "{}: matrix rows must be nonempty and of equal length",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// `identity` or a matrix file; files go through determinant normalization
/// and canonical QR, so any invertible matrix names a valid point.
fn load_point(n: usize, k: usize, spec: &str) -> Result<BergmanPoint, Error> {
    if spec == "identity" {
        return BergmanPoint::identity(n, k);
    }
    let a = SLMatrix::new(read_matrix(&PathBuf::from(spec))?)?;
    let (_, r) = canonical_qr(&a)?;
    BergmanPoint::from_matrix(n, k, r)
}

fn complex_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn real_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
