//! The canonical real parameter frame on the triangular group.
//!
//! A Bergman point has `N = dim - 1` free positive diagonal entries (the
//! last is pinned by the unit-product constraint) and `N (N + 1) / 2` free
//! complex strict-upper entries, for `D = N^2 + 2N = dim^2 - 1` real
//! parameters. The canonical global coordinates are
//! `(log R_00, ..., log R_{N-1,N-1}, Re R_01, Im R_01, Re R_02, ...)`
//! with strict-upper entries in row-major order; the canonical tangent
//! directions are exactly the coordinate frame of this chart:
//! `e_i = R_ii E_ii - R_NN E_NN` for the diagonal block, then unit real and
//! imaginary directions per strict-upper entry.

use super::{canonical_qr, BergmanPoint, SLMatrix, TangentParam};
use crate::error::{Error, Result};
use crate::projspace::{section_space_dim, C64, CMat};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Real dimension of the parameter space for triangular matrices of size
/// `dim`: `dim^2 - 1`.
pub fn param_dim(dim: usize) -> usize {
    dim * dim - 1
}

/// One direction of the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalDirection {
    /// Multiplicative diagonal direction `R_ii E_ii - R_NN E_NN`
    /// (log-coordinate of diagonal entry `i < N`).
    LogDiagonal(usize),
    /// Unit real direction of strict-upper entry `(i, j)`.
    UpperReal(usize, usize),
    /// Unit imaginary direction of strict-upper entry `(i, j)`.
    UpperImag(usize, usize),
}

/// The canonical frame in its fixed order: diagonal log-directions first,
/// then Re/Im per strict-upper entry in row-major order.
pub fn canonical_directions(dim: usize) -> Vec<CanonicalDirection> {
    let mut dirs = Vec::with_capacity(param_dim(dim));
    for i in 0..dim - 1 {
        dirs.push(CanonicalDirection::LogDiagonal(i));
    }
    for i in 0..dim {
        for j in i + 1..dim {
            dirs.push(CanonicalDirection::UpperReal(i, j));
            dirs.push(CanonicalDirection::UpperImag(i, j));
        }
    }
    debug_assert_eq!(dirs.len(), param_dim(dim));
    dirs
}

/// Materialize a canonical direction as a tangent parameter at `r`.
pub fn direction_tangent(r: &BergmanPoint, dir: CanonicalDirection) -> TangentParam {
    let dim = r.dim();
    let mut d = CMat::zeros(dim, dim);
    match dir {
        CanonicalDirection::LogDiagonal(i) => {
            d[(i, i)] = C64::new(r.diagonal_entry(i), 0.0);
            d[(dim - 1, dim - 1)] = C64::new(-r.diagonal_entry(dim - 1), 0.0);
        }
        CanonicalDirection::UpperReal(i, j) => {
            d[(i, j)] = C64::new(1.0, 0.0);
        }
        CanonicalDirection::UpperImag(i, j) => {
            d[(i, j)] = C64::new(0.0, 1.0);
        }
    }
    TangentParam::from_parts_unchecked(d)
}

/// Canonical global coordinates of a point (see the module docs for the
/// ordering). This is a diffeomorphism onto `R^D`.
pub fn canonical_coordinates(r: &BergmanPoint) -> DVector<f64> {
    let dim = r.dim();
    let mut c = DVector::zeros(param_dim(dim));
    let mut idx = 0;
    for i in 0..dim - 1 {
        c[idx] = r.diagonal_entry(i).ln();
        idx += 1;
    }
    let m = r.matrix();
    for i in 0..dim {
        for j in i + 1..dim {
            c[idx] = m[(i, j)].re;
            c[idx + 1] = m[(i, j)].im;
            idx += 2;
        }
    }
    c
}

/// Inverse of [`canonical_coordinates`]: the last diagonal entry is
/// reconstructed from the unit-product constraint.
pub fn point_from_coordinates(n: usize, k: usize, coords: &DVector<f64>) -> Result<BergmanPoint> {
    let dim = section_space_dim(n, k)?;
    if coords.len() != param_dim(dim) {
        return Err(Error::ShapeMismatch(format!(
            "expected {} canonical coordinates for dimension {dim}, got {}",
            param_dim(dim),
            coords.len()
        )));
    }
    let mut r = CMat::zeros(dim, dim);
    let mut log_sum = 0.0;
    for i in 0..dim - 1 {
        let l = coords[i];
        if !l.is_finite() {
            return Err(Error::InvalidStructure(
                "log-diagonal coordinate must be finite".into(),
            ));
        }
        r[(i, i)] = C64::new(l.exp(), 0.0);
        log_sum += l;
    }
    r[(dim - 1, dim - 1)] = C64::new((-log_sum).exp(), 0.0);
    let mut idx = dim - 1;
    for i in 0..dim {
        for j in i + 1..dim {
            r[(i, j)] = C64::new(coords[idx], coords[idx + 1]);
            idx += 2;
        }
    }
    BergmanPoint::from_matrix(n, k, r)
}

/// Determinant-preserving retraction: `R + h dR`, rescaled by the principal
/// root of its determinant back onto the unit-determinant slice. Steps that
/// push a diagonal entry to zero or below are rejected.
pub fn retract(r: &BergmanPoint, d: &TangentParam, h: f64) -> Result<BergmanPoint> {
    if d.dim() != r.dim() {
        return Err(Error::ShapeMismatch(format!(
            "tangent dimension {} does not match point dimension {}",
            d.dim(),
            r.dim()
        )));
    }
    let dim = r.dim();
    let mut m = r.matrix() + d.matrix().map(|z| z * h);
    let mut det = 1.0f64;
    for i in 0..dim {
        let di = m[(i, i)].re;
        if !(di > 0.0) {
            return Err(Error::InvalidStructure(format!(
                "retraction step leaves the cone: diagonal entry {i} = {di}"
            )));
        }
        det *= di;
    }
    // The determinant is a positive real, so the principal root is a
    // plain power; rescaling keeps the diagonal positive.
    let s = C64::new(det.powf(-1.0 / dim as f64), 0.0);
    m *= s;
    BergmanPoint::from_matrix(r.n(), r.k(), m)
}

/// Random tangent parameter with independent Gaussian entries of the given
/// scale; the diagonal is projected onto the determinant constraint.
pub fn random_tangent<R: Rng>(r: &BergmanPoint, rng: &mut R, scale: f64) -> TangentParam {
    let dim = r.dim();
    let mut d = CMat::zeros(dim, dim);
    let mut ratios = vec![0.0f64; dim];
    for ratio in ratios.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *ratio = scale * g;
    }
    let mean = ratios.iter().sum::<f64>() / dim as f64;
    for i in 0..dim {
        // dR_ii = R_ii * (g_i - mean) keeps sum dR_ii / R_ii = 0 exactly.
        d[(i, i)] = C64::new(r.diagonal_entry(i) * (ratios[i] - mean), 0.0);
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            d[(i, j)] = C64::new(scale * re, scale * im);
        }
    }
    TangentParam::from_parts_unchecked(d)
}

/// Random special-linear matrix: complex Ginibre entries rescaled to unit
/// determinant. Draws are retried (deterministically) if the sample is too
/// ill-conditioned to factor.
pub fn random_sl<R: Rng>(dim: usize, rng: &mut R) -> Result<SLMatrix> {
    for _ in 0..64 {
        let mut m = CMat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                m[(i, j)] = C64::new(re, im);
            }
        }
        let a = match SLMatrix::new(m) {
            Ok(a) => a,
            Err(_) => continue,
        };
        if a.condition_number() < 1e9 {
            return Ok(a);
        }
    }
    Err(Error::EstimationFailure(
        "failed to draw a well-conditioned special-linear matrix".into(),
    ))
}

/// Random special-unitary matrix: the unitary factor of a random
/// special-linear matrix.
pub fn random_special_unitary<R: Rng>(dim: usize, rng: &mut R) -> Result<CMat> {
    let a = random_sl(dim, rng)?;
    let (q, _) = canonical_qr(&a)?;
    Ok(q)
}

/// Deterministic bounded random walk on the parameter space, started at the
/// identity point: `steps` retraction steps of size `step_size` along unit
/// random tangents.
pub fn random_walk_point(
    n: usize,
    k: usize,
    steps: usize,
    step_size: f64,
    seed: u64,
) -> Result<BergmanPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = BergmanPoint::identity(n, k)?;
    for _ in 0..steps {
        let d = random_tangent(&r, &mut rng, 1.0);
        // A failed step (cone violation) is retried with the next draw.
        match retract(&r, &d, step_size) {
            Ok(next) => r = next,
            Err(_) => continue,
        }
    }
    Ok(r)
}
