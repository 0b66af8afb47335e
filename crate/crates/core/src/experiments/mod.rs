//! Orbit sweeps, divergence reports, and the acceptance suite.
//!
//! The headline demonstration: pulling a base metric back along the
//! discrete unipotent group produces infinitely many isometric copies of
//! one coordinate ball, pairwise disjoint because consecutive orbit points
//! are separated by `r_{N-1,N-1}` in a single canonical coordinate. The
//! sweep measures the volume contribution of each copy; the report checks
//! that partial sums grow linearly in the ball count — the numerical
//! shadow of an infinite total volume.
//!
//! "Ball" here always means a coordinate cube of half-width `epsilon` in
//! the canonical coordinates, with midpoint density: Riemannian metric
//! balls of the restricted metrics have no computable closed form, and
//! equal, non-decaying, disjoint cube contributions already exhibit the
//! divergence mechanism. Reports label the volumes accordingly.

pub mod acceptance;

use crate::autgroup::{orbit_separation_entry, pullback_point, unipotent_gamma, OrbitRecord};
use crate::bergman::{
    canonical_coordinates, param_dim, random_walk_point, BergmanPoint,
};
use crate::error::{Error, Result};
use crate::metrics::{volume_density, MetricKind};
use crate::projspace::{section_space_dim, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub use acceptance::{
    run_acceptance_suite, run_criterion, AcceptanceReport, CriterionResult, Profile,
    CRITERION_COUNT,
};

/// Default coordinate half-width as a fraction of the base point's
/// `r_{N-1,N-1}`; the disjointness invariant needs the fraction < 1/2.
pub const DEFAULT_EPSILON_FRACTION: f64 = 0.1;

fn default_m_range() -> [i64; 2] {
    [-10, 10]
}

fn default_metric() -> MetricKind {
    MetricKind::Calabi
}

/// How an experiment picks its base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BasePointSpec {
    /// The Fubini-Study point `R = I`.
    #[default]
    Identity,
    /// An explicit canonical matrix (validated on construction).
    Explicit { point: BergmanPoint },
    /// Deterministic random walk from the identity.
    RandomWalk {
        seed: u64,
        steps: usize,
        step_size: f64,
    },
}

/// Declarative description of an orbit sweep. Serialized as JSON with
/// complex entries as `[re, im]` pairs, matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub base_point: BasePointSpec,
    /// Inclusive interval of unipotent powers, ascending.
    #[serde(default = "default_m_range")]
    pub m_range: [i64; 2],
    /// Coordinate half-width of the swept ball. Default: 0.1 times the
    /// base point's `r_{N-1,N-1}`. Must stay below half that entry.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_metric")]
    pub metric: MetricKind,
    pub quad: QuadratureSpec,
    /// Optional output path for the per-m CSV table.
    #[serde(default)]
    pub csv_path: Option<String>,
    /// Optional output path for the JSON divergence report.
    #[serde(default)]
    pub report_path: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        section_space_dim(self.n, self.k)?;
        if self.m_range[0] > self.m_range[1] {
            return Err(Error::InvalidConfig(format!(
                "m_range [{}, {}] is empty",
                self.m_range[0], self.m_range[1]
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "epsilon must be positive and finite, got {eps}"
                )));
            }
        }
        self.quad.validate()?;
        if let BasePointSpec::RandomWalk { step_size, .. } = &self.base_point {
            if !(*step_size > 0.0) || !step_size.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "random walk step_size must be positive and finite, got {step_size}"
                )));
            }
        }
        Ok(())
    }

    /// Materialize the base point.
    pub fn resolve_base_point(&self) -> Result<BergmanPoint> {
        match &self.base_point {
            BasePointSpec::Identity => BergmanPoint::identity(self.n, self.k),
            BasePointSpec::Explicit { point } => {
                if point.n() != self.n || point.k() != self.k {
                    return Err(Error::InvalidConfig(format!(
                        "explicit base point is for (n, k) = ({}, {}), config says ({}, {})",
                        point.n(),
                        point.k(),
                        self.n,
                        self.k
                    )));
                }
                Ok(point.clone())
            }
            BasePointSpec::RandomWalk {
                seed,
                steps,
                step_size,
            } => random_walk_point(self.n, self.k, *steps, *step_size, *seed),
        }
    }

    /// The effective half-width, checked against the disjointness
    /// invariant `epsilon < r_{N-1,N-1} / 2`: consecutive orbit points are
    /// `r_{N-1,N-1}` apart in one canonical coordinate, so cubes of any
    /// smaller half-width cannot meet.
    pub fn resolve_epsilon(&self, base: &BergmanPoint) -> Result<f64> {
        let gap = base.diagonal_entry(base.dim() - 2);
        let eps = self
            .epsilon
            .unwrap_or(DEFAULT_EPSILON_FRACTION * gap);
        if !(eps < gap / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {eps} must stay below r_(N-1,N-1)/2 = {} to keep orbit cubes disjoint",
                gap / 2.0
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        Ok(eps)
    }
}

/// A per-`m` estimation failure, recorded without aborting the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub m: i64,
    pub message: String,
}

/// Result of sweeping the unipotent orbit of the base point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitSweep {
    pub config: ExperimentConfig,
    pub base: BergmanPoint,
    pub epsilon: f64,
    /// `(2 epsilon)^D`, the coordinate measure of each swept cube.
    pub cube_measure: f64,
    /// Successful stations in ascending `m`.
    pub records: Vec<OrbitRecord>,
    pub failures: Vec<SweepFailure>,
}

/// Sweep the orbit `m -> gamma_m^* (base)` across `m_range`: pull the
/// point back, read off its separation entry, and estimate the volume
/// density and the cube volume it contributes. Per-`m` estimation
/// failures are recorded, never fatal; config errors are.
pub fn orbit_sweep(cfg: &ExperimentConfig) -> Result<OrbitSweep> {
    cfg.validate()?;
    let base = cfg.resolve_base_point()?;
    let epsilon = cfg.resolve_epsilon(&base)?;
    let dim_c = param_dim(base.dim());
    let cube_measure = (2.0 * epsilon).powi(dim_c as i32);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for m in cfg.m_range[0]..=cfg.m_range[1] {
        match sweep_station(cfg, &base, m, cube_measure) {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(SweepFailure {
                m,
                message: e.to_string(),
            }),
        }
    }
    Ok(OrbitSweep {
        config: cfg.clone(),
        base,
        epsilon,
        cube_measure,
        records,
        failures,
    })
}

fn sweep_station(
    cfg: &ExperimentConfig,
    base: &BergmanPoint,
    m: i64,
    cube_measure: f64,
) -> Result<OrbitRecord> {
    let gamma = unipotent_gamma(m, cfg.n)?;
    let point = pullback_point(base, &gamma)?;
    let entry = orbit_separation_entry(base, m)?;
    let density = volume_density(&point, cfg.metric, &cfg.quad)?;
    Ok(OrbitRecord {
        m,
        point,
        entry,
        density: density.value,
        ball_volume: density.value * cube_measure,
        std_error: density.std_error * cube_measure,
    })
}

/// CSV rendering of a sweep, one row per successful station.
pub fn sweep_csv(sweep: &OrbitSweep) -> String {
    let mut out =
        String::from("m,entry,density,density_stderr,ball_volume,ball_volume_stderr\n");
    for rec in &sweep.records {
        let density_stderr = rec.std_error / sweep.cube_measure;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            rec.m, rec.entry, rec.density, density_stderr, rec.ball_volume, rec.std_error
        );
    }
    out
}

/// One symmetric partial sum `S_M = sum of ball volumes over |m| <= M`.
/// `band` is the conservative error bound `sum of member standard errors`
/// (valid under the arbitrary positive correlation that common random
/// numbers induce across stations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub m_max: i64,
    /// Number of summed balls, `2 m_max + 1`.
    pub window: i64,
    pub value: f64,
    pub band: f64,
}

/// Least-squares line through `(window, partial sum)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_rel_residual: f64,
}

/// The divergence-mechanism report: linearly growing partial sums over
/// pairwise disjoint, equal-volume cubes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub partial_sums: Vec<PartialSum>,
    pub fit: LinearFit,
    /// Pairwise coordinate-cube disjointness certificate: every pair of
    /// station centers differs by more than `2 epsilon` in some canonical
    /// coordinate.
    pub disjoint: bool,
    pub config_echo: Option<ExperimentConfig>,
    /// Rationale for the volume model (coordinate cubes, not metric balls).
    pub ball_model: String,
}

const BALL_MODEL_NOTE: &str = "volumes are coordinate cubes of half-width epsilon in canonical \
     coordinates with midpoint density, not Riemannian metric balls; equal, non-decaying, \
     disjoint cube contributions demonstrate the same divergence";

/// Summarize a sweep's records: symmetric partial sums around `m = 0`
/// (computed for every `M` whose full window `|m| <= M` was estimated),
/// their linear fit in the window size, and the disjointness certificate.
///
/// `epsilon` must be the half-width the records were swept with;
/// `config_echo` is attached verbatim when given.
pub fn divergence_report(
    records: &[OrbitRecord],
    epsilon: f64,
    config_echo: Option<&ExperimentConfig>,
) -> Result<DivergenceReport> {
    if records.is_empty() {
        return Err(Error::EstimationFailure(
            "divergence report needs at least one sweep record".into(),
        ));
    }
    let by_m = |m: i64| records.iter().find(|r| r.m == m);
    let mut partial_sums = Vec::new();
    let mut m_max = 0i64;
    while {
        let lo = by_m(-m_max).is_some();
        let hi = by_m(m_max).is_some();
        lo && hi
    } {
        let mut value = 0.0;
        let mut band = 0.0;
        for m in -m_max..=m_max {
            // Windows stay contiguous: the loop above only admits m_max
            // whose extremes exist, interior gaps end the scan below.
            match by_m(m) {
                Some(rec) => {
                    value += rec.ball_volume;
                    band += rec.std_error;
                }
                None => {
                    value = f64::NAN;
                    break;
                }
            }
        }
        if !value.is_finite() {
            break;
        }
        partial_sums.push(PartialSum {
            m_max,
            window: 2 * m_max + 1,
            value,
            band,
        });
        m_max += 1;
    }
    let fit = fit_line(&partial_sums);
    let disjoint = all_cubes_disjoint(records, epsilon);
    Ok(DivergenceReport {
        partial_sums,
        fit,
        disjoint,
        config_echo: config_echo.cloned(),
        ball_model: BALL_MODEL_NOTE.to_string(),
    })
}

fn fit_line(sums: &[PartialSum]) -> LinearFit {
    match sums.len() {
        0 => LinearFit {
            slope: 0.0,
            intercept: 0.0,
            max_rel_residual: 0.0,
        },
        1 => LinearFit {
            // One point pins the through-origin model S = c * window.
            slope: sums[0].value / sums[0].window as f64,
            intercept: 0.0,
            max_rel_residual: 0.0,
        },
        _ => {
            let n = sums.len() as f64;
            let mx = sums.iter().map(|s| s.window as f64).sum::<f64>() / n;
            let my = sums.iter().map(|s| s.value).sum::<f64>() / n;
            let sxx: f64 = sums
                .iter()
                .map(|s| (s.window as f64 - mx) * (s.window as f64 - mx))
                .sum();
            let sxy: f64 = sums
                .iter()
                .map(|s| (s.window as f64 - mx) * (s.value - my))
                .sum();
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            let max_rel_residual = sums
                .iter()
                .map(|s| {
                    let predicted = slope * s.window as f64 + intercept;
                    (s.value - predicted).abs() / s.value.abs().max(f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max);
            LinearFit {
                slope,
                intercept,
                max_rel_residual,
            }
        }
    }
}

fn all_cubes_disjoint(records: &[OrbitRecord], epsilon: f64) -> bool {
    let coords: Vec<_> = records
        .iter()
        .map(|r| canonical_coordinates(&r.point))
        .collect();
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            let gap = (&coords[i] - &coords[j]).amax();
            if !(gap > 2.0 * epsilon) {
                return false;
            }
        }
    }
    true
}

/// Run a configured experiment end to end: sweep, report, and write any
/// requested output files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(OrbitSweep, DivergenceReport)> {
    let sweep = orbit_sweep(cfg)?;
    let report = divergence_report(&sweep.records, sweep.epsilon, Some(&sweep.config))?;
    if let Some(path) = &cfg.csv_path {
        std::fs::write(path, sweep_csv(&sweep))
            .map_err(|e| Error::Io(format!("cannot write {path}: {e}")))?;
    }
    if let Some(path) = &cfg.report_path {
        let mut json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Io(format!("cannot serialize report: {e}")))?;
        json.push('\n');
        std::fs::write(path, json)
            .map_err(|e| Error::Io(format!("cannot write {path}: {e}")))?;
    }
    Ok((sweep, report))
}
