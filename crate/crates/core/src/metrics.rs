//! Restricted Calabi and Mabuchi metrics on a Bergman slice.
//!
//! Every integral over `CP^n` is computed by importance sampling against
//! the Fubini-Study probability measure: `int f dV_R = E_FS[f * rho]`
//! where `rho` is the pointwise volume-density ratio. One sampler
//! therefore serves every Bergman point, and a single deterministic
//! sample set is shared by all entries of a Gram matrix (common random
//! numbers), which makes the matrices exactly symmetric and keeps
//! cross-entry noise out of determinant and isometry comparisons.
//!
//! Volume convention: `dV = omega^n / n!` with the Fubini-Study form
//! normalized to unit total volume, so FS expectation and FS integral
//! coincide.
//!
//! All accumulations are sequential in sample order; results for a fixed
//! `QuadratureSpec` are bit-reproducible.

use crate::bergman::{canonical_directions, direction_tangent, BergmanPoint, TangentParam};
use crate::error::{Error, Result};
use crate::projspace::{build_basis, sample_fs, QuadratureSpec};
use crate::bergman::PointData;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Number of contiguous sample blocks used for batch-means error bars on
/// derived (nonlinear) quantities such as sqrt-determinants.
const BATCH_COUNT: usize = 10;

/// A Monte Carlo estimate together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Calabi,
    Mabuchi,
}

/// Gram matrix of a restricted metric over the canonical parameter frame.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub kind: MetricKind,
    /// `D x D` real symmetric, `D = dim^2 - 1`.
    pub entries: DMatrix<f64>,
    /// Per-entry standard errors (symmetric by the shared-sample design).
    pub std_errors: DMatrix<f64>,
    pub base: BergmanPoint,
    pub quad: QuadratureSpec,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        nalgebra::SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .min()
    }
}

/// Per-sample evaluations shared by all estimators: density ratios,
/// tangent-function values per direction, and (when requested) their
/// metric Laplacians.
struct SampleTable {
    rho: Vec<f64>,
    /// `u[a][i]` = tangent function of direction `a` at sample `i`.
    u: Vec<Vec<f64>>,
    /// Laplacians, same layout; empty unless requested.
    lap: Vec<Vec<f64>>,
}

impl SampleTable {
    fn len(&self) -> usize {
        self.rho.len()
    }
}

/// Evaluate the shared sample table for a direction list. Fails if any
/// sample point degenerates (reported, never skipped: a skipped point
/// would silently bias the measure).
fn evaluate_samples(
    r: &BergmanPoint,
    dirs: &[TangentParam],
    quad: &QuadratureSpec,
    need_laplacians: bool,
) -> Result<SampleTable> {
    for d in dirs {
        if d.dim() != r.dim() {
            return Err(Error::ShapeMismatch(format!(
                "tangent dimension {} does not match point dimension {}",
                d.dim(),
                r.dim()
            )));
        }
    }
    let points = sample_fs(r.n(), quad)?;
    let basis = build_basis(r.n(), r.k())?;
    let m = points.len();
    let mut rho = Vec::with_capacity(m);
    let mut u = vec![Vec::with_capacity(m); dirs.len()];
    let mut lap = if need_laplacians {
        vec![Vec::with_capacity(m); dirs.len()]
    } else {
        Vec::new()
    };
    for p in &points {
        let chart = p.to_chart();
        let data = PointData::prepare(r, &basis, &chart)?;
        rho.push(data.density_ratio());
        for (a, d) in dirs.iter().enumerate() {
            u[a].push(data.tangent_value(d));
            if need_laplacians {
                lap[a].push(data.laplacian_value(d));
            }
        }
    }
    Ok(SampleTable { rho, u, lap })
}

/// Mean and standard error of the per-sample terms `f(i)`, centered
/// two-pass for numerical stability.
fn term_estimate(m: usize, f: impl Fn(usize) -> f64) -> Estimate {
    let mut sum = 0.0;
    for i in 0..m {
        sum += f(i);
    }
    let mean = sum / m as f64;
    if m < 2 {
        return Estimate {
            value: mean,
            std_error: f64::INFINITY,
        };
    }
    let mut ss = 0.0;
    for i in 0..m {
        let d = f(i) - mean;
        ss += d * d;
    }
    Estimate {
        value: mean,
        std_error: (ss / ((m - 1) as f64 * m as f64)).sqrt(),
    }
}

/// `dV_R`-mean of a tangent function: self-normalizing ratio estimator
/// `sum(rho u) / sum(rho)`, which annihilates constants exactly.
fn weighted_mean(rho: &[f64], u: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, v) in rho.iter().zip(u) {
        num += w * v;
        den += w;
    }
    num / den
}

// The inner product is grouped before the weight so that swapping the
// two directions gives bit-identical terms (binary * is commutative).
fn calabi_entry_from(rho: &[f64], la: &[f64], lb: &[f64]) -> Estimate {
    term_estimate(rho.len(), |i| rho[i] * (la[i] * lb[i]))
}

fn mabuchi_entry_from(rho: &[f64], ua: &[f64], ub: &[f64]) -> Estimate {
    let ma = weighted_mean(rho, ua);
    let mb = weighted_mean(rho, ub);
    term_estimate(rho.len(), move |i| {
        rho[i] * ((ua[i] - ma) * (ub[i] - mb))
    })
}

/// Restricted Calabi pairing `int Lap(u1) Lap(u2) dV_R` of two tangent
/// directions, with both Laplacian fields evaluated on one sample set.
pub fn calabi_pairing(
    r: &BergmanPoint,
    d1: &TangentParam,
    d2: &TangentParam,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let table = evaluate_samples(r, &[d1.clone(), d2.clone()], quad, true)?;
    Ok(calabi_entry_from(&table.rho, &table.lap[0], &table.lap[1]))
}

/// Restricted Mabuchi pairing `int (u1 - mean)(u2 - mean) dV_R`, means
/// taken against `dV_R` (self-normalized, one pass for both directions).
pub fn mabuchi_pairing(
    r: &BergmanPoint,
    d1: &TangentParam,
    d2: &TangentParam,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let table = evaluate_samples(r, &[d1.clone(), d2.clone()], quad, false)?;
    Ok(mabuchi_entry_from(&table.rho, &table.u[0], &table.u[1]))
}

/// Gram matrix of the restricted metric over the canonical parameter
/// frame, all `D(D+1)/2` pairings from one shared sample set. Symmetry is
/// exact by construction.
pub fn gram(r: &BergmanPoint, kind: MetricKind, quad: &QuadratureSpec) -> Result<GramMatrix> {
    let dirs: Vec<TangentParam> = canonical_directions(r.dim())
        .into_iter()
        .map(|c| direction_tangent(r, c))
        .collect();
    let table = evaluate_samples(r, &dirs, quad, kind == MetricKind::Calabi)?;
    let d = dirs.len();
    let mut entries = DMatrix::zeros(d, d);
    let mut std_errors = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let est = match kind {
                MetricKind::Calabi => calabi_entry_from(&table.rho, &table.lap[a], &table.lap[b]),
                MetricKind::Mabuchi => mabuchi_entry_from(&table.rho, &table.u[a], &table.u[b]),
            };
            entries[(a, b)] = est.value;
            entries[(b, a)] = est.value;
            std_errors[(a, b)] = est.std_error;
            std_errors[(b, a)] = est.std_error;
        }
    }
    Ok(GramMatrix {
        kind,
        entries,
        std_errors,
        base: r.clone(),
        quad: quad.clone(),
    })
}

fn sqrt_det_spd(m: &DMatrix<f64>, context: &str) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(m.clone()).ok_or_else(|| {
        Error::EstimationFailure(format!(
            "{context}: Gram matrix is not positive definite (increase the sample budget)"
        ))
    })?;
    let l = chol.l();
    let mut root = 1.0;
    for i in 0..m.nrows() {
        root *= l[(i, i)];
    }
    Ok(root)
}

/// Gram entries restricted to a contiguous sample range, with the means
/// (Mabuchi centering) taken from the full table so batches differ only
/// in their quadrature nodes.
fn gram_on_range(
    table: &SampleTable,
    kind: MetricKind,
    means: &DVector<f64>,
    lo: usize,
    hi: usize,
) -> DMatrix<f64> {
    let d = table.u.len();
    let len = (hi - lo) as f64;
    let mut g = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut sum = 0.0;
            match kind {
                MetricKind::Calabi => {
                    for i in lo..hi {
                        sum += table.rho[i] * (table.lap[a][i] * table.lap[b][i]);
                    }
                }
                MetricKind::Mabuchi => {
                    for i in lo..hi {
                        sum +=
                            table.rho[i] * ((table.u[a][i] - means[a]) * (table.u[b][i] - means[b]));
                    }
                }
            }
            g[(a, b)] = sum / len;
            g[(b, a)] = sum / len;
        }
    }
    g
}

/// Volume density `sqrt(det Gram)` of the restricted metric at `r`, the
/// integrand of the parameter-space volume measure. The standard error
/// comes from batch means over contiguous sample blocks; a Gram that
/// loses positive definiteness (tiny budgets) is reported as a failure,
/// never clipped.
pub fn volume_density(
    r: &BergmanPoint,
    kind: MetricKind,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let dirs: Vec<TangentParam> = canonical_directions(r.dim())
        .into_iter()
        .map(|c| direction_tangent(r, c))
        .collect();
    let table = evaluate_samples(r, &dirs, quad, kind == MetricKind::Calabi)?;
    let d = dirs.len();
    let m = table.len();
    let means = DVector::from_fn(d, |a, _| match kind {
        MetricKind::Calabi => 0.0,
        MetricKind::Mabuchi => weighted_mean(&table.rho, &table.u[a]),
    });
    let full = gram_on_range(&table, kind, &means, 0, m);
    let value = sqrt_det_spd(&full, "volume density")?;
    let mut batch_values = Vec::with_capacity(BATCH_COUNT);
    for b in 0..BATCH_COUNT {
        let lo = b * m / BATCH_COUNT;
        let hi = (b + 1) * m / BATCH_COUNT;
        if hi <= lo {
            return Err(Error::EstimationFailure(format!(
                "volume density: sample budget {m} too small for {BATCH_COUNT} error batches"
            )));
        }
        let g = gram_on_range(&table, kind, &means, lo, hi);
        batch_values.push(sqrt_det_spd(&g, "volume density error batch")?);
    }
    let bmean = batch_values.iter().sum::<f64>() / BATCH_COUNT as f64;
    let bvar = batch_values
        .iter()
        .map(|v| (v - bmean) * (v - bmean))
        .sum::<f64>()
        / (BATCH_COUNT - 1) as f64;
    Ok(Estimate {
        value,
        std_error: (bvar / BATCH_COUNT as f64).sqrt(),
    })
}

/// Total volume `int dV_R`, the FS-mean of the density ratio. Equal to 1
/// for every Bergman point (both forms represent the same cohomology
/// class); serves as a measure sanity anchor and importance-sampling
/// stress probe.
pub fn total_volume(r: &BergmanPoint, quad: &QuadratureSpec) -> Result<Estimate> {
    let table = evaluate_samples(r, &[], quad, false)?;
    Ok(term_estimate(table.len(), |i| table.rho[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{param_dim, random_tangent, random_walk_point};
    use crate::projspace::QuadratureSpec;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn identity11() -> BergmanPoint {
        BergmanPoint::identity(1, 1).unwrap()
    }

    #[test]
    fn zero_direction_pairs_to_zero() {
        let r = random_walk_point(1, 2, 5, 0.2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_tangent(&r, &mut rng, 1.0);
        let z = TangentParam::zero(r.dim());
        let q = QuadratureSpec::monte_carlo(500, 7);
        assert_eq!(calabi_pairing(&r, &z, &d, &q).unwrap().value, 0.0);
        assert_eq!(mabuchi_pairing(&r, &z, &d, &q).unwrap().value, 0.0);
    }

    #[test]
    fn self_pairings_are_positive() {
        let r = random_walk_point(1, 2, 5, 0.25, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = QuadratureSpec::monte_carlo(2000, 11);
        for _ in 0..5 {
            let d = random_tangent(&r, &mut rng, 1.0);
            let ca = calabi_pairing(&r, &d, &d, &q).unwrap();
            let ma = mabuchi_pairing(&r, &d, &d, &q).unwrap();
            assert!(ca.value > 0.0, "calabi self-pairing {ca:?}");
            assert!(ma.value > 0.0, "mabuchi self-pairing {ma:?}");
        }
    }

    #[test]
    fn pairings_are_bit_symmetric() {
        let r = random_walk_point(1, 2, 6, 0.2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d1 = random_tangent(&r, &mut rng, 1.0);
        let d2 = random_tangent(&r, &mut rng, 1.0);
        let q = QuadratureSpec::monte_carlo(1000, 13);
        let a = mabuchi_pairing(&r, &d1, &d2, &q).unwrap();
        let b = mabuchi_pairing(&r, &d2, &d1, &q).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let a = calabi_pairing(&r, &d1, &d2, &q).unwrap();
        let b = calabi_pairing(&r, &d2, &d1, &q).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    /// Mean subtraction annihilates constants exactly: a constant injected
    /// test function gives a bitwise-zero Mabuchi pairing, and shifting
    /// both functions by the same constant moves the pairing by at most
    /// roundoff. This is the submersion consistency of the two Mabuchi
    /// presentations (potentials modulo constants vs normalized potentials).
    #[test]
    fn mabuchi_quotients_out_constants() {
        let r = random_walk_point(1, 2, 6, 0.2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d1 = random_tangent(&r, &mut rng, 1.0);
        let d2 = random_tangent(&r, &mut rng, 1.0);
        let table =
            evaluate_samples(&r, &[d1, d2], &QuadratureSpec::monte_carlo(4000, 17), false)
                .unwrap();
        let ones = vec![1.0; table.len()];
        let injected = mabuchi_entry_from(&table.rho, &ones, &table.u[1]);
        assert_eq!(injected.value, 0.0, "constant test function must vanish");

        let base = mabuchi_entry_from(&table.rho, &table.u[0], &table.u[1]);
        let c = 5.0;
        let shifted: Vec<Vec<f64>> = (0..2)
            .map(|a| table.u[a].iter().map(|v| v + c).collect())
            .collect();
        let moved = mabuchi_entry_from(&table.rho, &shifted[0], &shifted[1]);
        assert!(
            (moved.value - base.value).abs() < 1e-10,
            "constant shift moved the pairing by {}",
            (moved.value - base.value).abs()
        );
    }

    /// At the Fubini-Study point (n = 1, k = 1) every tangent function is a
    /// first Laplace eigenfunction, so Calabi/Mabuchi self-pairings have the
    /// fixed ratio lambda_1^2 = (4 pi)^2 for every direction.
    #[test]
    fn spectral_ratio_at_fubini_study() {
        let r = identity11();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let q = QuadratureSpec::monte_carlo(50_000, 19);
        let expect = 16.0 * PI * PI;
        for _ in 0..3 {
            let d = random_tangent(&r, &mut rng, 1.0);
            let ca = calabi_pairing(&r, &d, &d, &q).unwrap();
            let ma = mabuchi_pairing(&r, &d, &d, &q).unwrap();
            let ratio = ca.value / ma.value;
            assert!(
                (ratio / expect - 1.0).abs() < 2e-3,
                "spectral ratio {ratio} vs 16 pi^2 = {expect}"
            );
        }
    }

    #[test]
    fn gram_has_frame_dimension_and_exact_symmetry() {
        let r = identity11();
        assert_eq!(param_dim(r.dim()), 3);
        let q = QuadratureSpec::monte_carlo(2000, 23);
        for kind in [MetricKind::Calabi, MetricKind::Mabuchi] {
            let g = gram(&r, kind, &q).unwrap();
            assert_eq!(g.dim(), 3);
            assert_eq!(g.entries, g.entries.transpose(), "bitwise symmetry");
            assert!(
                g.min_eigenvalue() > 0.0,
                "{kind:?} Gram not PD: min eig {}",
                g.min_eigenvalue()
            );
        }
    }

    #[test]
    fn gram_entries_match_standalone_pairings() {
        let r = random_walk_point(1, 1, 5, 0.2, 12).unwrap();
        let q = QuadratureSpec::monte_carlo(1500, 29);
        let dirs: Vec<TangentParam> = canonical_directions(r.dim())
            .into_iter()
            .map(|c| direction_tangent(&r, c))
            .collect();
        let gc = gram(&r, MetricKind::Calabi, &q).unwrap();
        let gm = gram(&r, MetricKind::Mabuchi, &q).unwrap();
        let pc = calabi_pairing(&r, &dirs[0], &dirs[2], &q).unwrap();
        let pm = mabuchi_pairing(&r, &dirs[0], &dirs[2], &q).unwrap();
        // Shared deterministic sampling makes these bitwise equal, not
        // merely close.
        assert_eq!(gc.entries[(0, 2)].to_bits(), pc.value.to_bits());
        assert_eq!(gm.entries[(0, 2)].to_bits(), pm.value.to_bits());
    }

    #[test]
    fn gram_is_positive_definite_at_random_points() {
        let q = QuadratureSpec::monte_carlo(3000, 31);
        for seed in 0..5 {
            let r = random_walk_point(1, 2, 5, 0.25, 100 + seed).unwrap();
            let g = gram(&r, MetricKind::Mabuchi, &q).unwrap();
            assert_eq!(g.dim(), 8);
            let min = g.min_eigenvalue();
            assert!(min > 0.0, "seed {seed}: min eigenvalue {min}");
        }
    }

    /// Cauchy-Schwarz for the Mabuchi pairing over random direction pairs,
    /// with slack for the Monte Carlo noise of the three estimates.
    #[test]
    fn mabuchi_pairing_satisfies_cauchy_schwarz() {
        let r = random_walk_point(1, 2, 5, 0.2, 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for trial in 0..100u64 {
            let d1 = random_tangent(&r, &mut rng, 1.0);
            let d2 = random_tangent(&r, &mut rng, 1.0);
            let table = evaluate_samples(
                &r,
                &[d1, d2],
                &QuadratureSpec::monte_carlo(3000, 1000 + trial),
                false,
            )
            .unwrap();
            let p11 = mabuchi_entry_from(&table.rho, &table.u[0], &table.u[0]);
            let p22 = mabuchi_entry_from(&table.rho, &table.u[1], &table.u[1]);
            let p12 = mabuchi_entry_from(&table.rho, &table.u[0], &table.u[1]);
            let sigma = p12.std_error.max(p11.std_error).max(p22.std_error);
            assert!(
                p12.value * p12.value <= p11.value * p22.value + 4.0 * sigma,
                "trial {trial}: CS violated: {} vs {}",
                p12.value * p12.value,
                p11.value * p22.value
            );
        }
    }

    /// Doubling the sample budget moves each Gram entry by less than three
    /// combined standard errors (the second run extends the first stream,
    /// which only tightens the comparison).
    #[test]
    fn gram_is_stable_under_budget_doubling() {
        let r = random_walk_point(1, 1, 5, 0.3, 16).unwrap();
        let g1 = gram(
            &r,
            MetricKind::Calabi,
            &QuadratureSpec::monte_carlo(20_000, 37),
        )
        .unwrap();
        let g2 = gram(
            &r,
            MetricKind::Calabi,
            &QuadratureSpec::monte_carlo(40_000, 37),
        )
        .unwrap();
        for a in 0..g1.dim() {
            for b in 0..g1.dim() {
                let diff = (g1.entries[(a, b)] - g2.entries[(a, b)]).abs();
                let sigma = g1.std_errors[(a, b)].hypot(g2.std_errors[(a, b)]);
                assert!(
                    diff <= 3.0 * sigma + 1e-9,
                    "entry ({a},{b}): moved {diff} vs sigma {sigma}"
                );
            }
        }
    }

    #[test]
    fn volume_density_is_positive_for_both_kinds() {
        let r = identity11();
        let q = QuadratureSpec::monte_carlo(20_000, 41);
        for kind in [MetricKind::Calabi, MetricKind::Mabuchi] {
            let est = volume_density(&r, kind, &q).unwrap();
            assert!(est.value > 0.0, "{kind:?}: {est:?}");
            assert!(est.std_error.is_finite() && est.std_error > 0.0);
        }
    }

    /// With fewer samples than frame directions the Gram is rank-deficient
    /// by construction and the failure must surface as a diagnostic.
    #[test]
    fn volume_density_reports_rank_deficient_budgets() {
        let r = BergmanPoint::identity(1, 2).unwrap();
        // param_dim = 8 directions, 4 samples per error batch would already
        // fail; the full Gram with 4 samples is singular outright.
        let err = volume_density(&r, MetricKind::Mabuchi, &QuadratureSpec::monte_carlo(40, 43));
        match err {
            Err(Error::EstimationFailure(msg)) => {
                assert!(msg.contains("positive definite"), "got: {msg}");
            }
            other => panic!("expected estimation failure, got {other:?}"),
        }
    }

    #[test]
    fn total_volume_is_one() {
        // At the FS point the density ratio is identically 1.
        let r = identity11();
        let est = total_volume(&r, &QuadratureSpec::monte_carlo(1000, 47)).unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-12);
        // At a random point it is 1 in expectation (class invariance).
        let r = random_walk_point(1, 2, 6, 0.2, 18).unwrap();
        let est = total_volume(&r, &QuadratureSpec::monte_carlo(200_000, 53)).unwrap();
        assert!(est.std_error < 0.005, "std error {}", est.std_error);
        assert!(
            (est.value - 1.0).abs() <= 3.0 * est.std_error,
            "total volume {} +/- {}",
            est.value,
            est.std_error
        );
    }

    /// Quadrature refinement study: the volume density at the FS base point
    /// moves by less than 1% when the budget grows from 1e5 to 4e5.
    #[test]
    fn volume_density_converges_under_refinement() {
        for (k, kind) in [(1usize, MetricKind::Calabi), (2, MetricKind::Mabuchi)] {
            let r = BergmanPoint::identity(1, k).unwrap();
            let coarse =
                volume_density(&r, kind, &QuadratureSpec::monte_carlo(100_000, 59)).unwrap();
            let fine =
                volume_density(&r, kind, &QuadratureSpec::monte_carlo(400_000, 59)).unwrap();
            let rel = (coarse.value - fine.value).abs() / fine.value;
            assert!(
                rel < 0.01,
                "k = {k}, {kind:?}: relative drift {rel} between budgets"
            );
        }
    }
}
