//! The Bergman space of metrics in canonical QR coordinates.
//!
//! A metric point is an upper-triangular matrix `R` with strictly positive
//! diagonal of unit product, acting on the ordered degree-`k` monomial
//! basis. Every special-linear matrix `A` factors uniquely as `A = Q R`
//! with `Q` special-unitary and `R` of that shape, and `A`, `B` induce the
//! same metric exactly when `A^H A` and `B^H B` agree up to a positive
//! scalar. `canonical_qr` therefore lands every equivalence class on its
//! single triangular representative.

mod geometry;
mod params;

pub use geometry::{
    density_ratio, density_ratio_in_chart, laplacian_of, laplacian_of_in_chart, metric_tensor,
    metric_tensor_in_chart, potential, potential_in_chart, potential_of_form, tangent_function,
    tangent_function_in_chart, PointData,
};
pub use params::{
    canonical_coordinates, canonical_directions, direction_tangent, param_dim,
    point_from_coordinates, random_sl, random_special_unitary, random_tangent, random_walk_point,
    retract, CanonicalDirection,
};

use crate::error::{Error, Result};
use crate::projspace::{section_space_dim, C64, CMat};

/// Condition-number ceiling for factorizations; beyond this the input is
/// rejected as near-singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative tolerance for structural checks on constructed points
/// (unit-product diagonal, trace-free tangents, exact triangularity).
pub const STRUCTURE_TOL: f64 = 1e-12;

fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Principal `m`-th root of a nonzero complex number (argument in
/// `(-pi, pi]` divided by `m`).
pub(crate) fn principal_root(z: C64, m: usize) -> C64 {
    C64::from_polar(z.norm().powf(1.0 / m as f64), z.arg() / m as f64)
}

/// A square complex matrix normalized to determinant one.
///
/// The constructor rescales its input by the principal root of the
/// determinant, so any invertible representative of a projective class of
/// embeddings can be passed in.
#[derive(Debug, Clone, PartialEq)]
pub struct SLMatrix {
    m: CMat,
}

impl SLMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "special-linear matrix must be square of size >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidStructure(
                "matrix entries must be finite".into(),
            ));
        }
        let det = m.determinant();
        let abs_det = det.norm();
        // Scale-aware singularity guard: |det|^(1/d) far below the entry
        // scale means no rescaling can give a usable determinant.
        let scale = frobenius(&m) / (m.nrows() as f64).sqrt();
        if abs_det == 0.0 || abs_det.powf(1.0 / m.nrows() as f64) < 1e-14 * scale.max(1e-300) {
            return Err(Error::SingularDeterminant { abs_det });
        }
        let s = principal_root(det, m.nrows()).inv();
        let normalized = m.map(|z| z * s);
        Ok(Self { m: normalized })
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// 2-norm condition number, computed from the singular values.
    pub fn condition_number(&self) -> f64 {
        let sv = self.m.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// The canonical triangular representative of a Bergman metric on `CP^n`
/// with sections of degree `k`: upper triangular, strictly positive
/// diagonal with unit product, exact zeros below the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BergmanPoint {
    n: usize,
    k: usize,
    r: CMat,
}

impl BergmanPoint {
    /// Validate and wrap a matrix already in canonical triangular shape.
    /// Strictly-lower entries up to `STRUCTURE_TOL` (relative) are snapped
    /// to exact zeros, as are tiny imaginary parts on the diagonal.
    pub fn from_matrix(n: usize, k: usize, r: CMat) -> Result<Self> {
        let dim = section_space_dim(n, k)?;
        if r.nrows() != dim || r.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "CP^{n} with degree {k} needs a {dim}x{dim} matrix, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        let scale = frobenius(&r).max(f64::MIN_POSITIVE);
        let mut r = r;
        for i in 0..dim {
            for j in 0..i {
                if r[(i, j)].norm() > STRUCTURE_TOL * scale {
                    return Err(Error::InvalidStructure(format!(
                        "entry ({i}, {j}) below the diagonal is not zero"
                    )));
                }
                r[(i, j)] = C64::new(0.0, 0.0);
            }
            let d = r[(i, i)];
            if d.im.abs() > STRUCTURE_TOL * scale {
                return Err(Error::InvalidStructure(format!(
                    "diagonal entry {i} has a nonreal phase"
                )));
            }
            if !(d.re > 0.0) {
                return Err(Error::InvalidStructure(format!(
                    "diagonal entry {i} must be strictly positive, got {}",
                    d.re
                )));
            }
            r[(i, i)] = C64::new(d.re, 0.0);
        }
        let prod: f64 = (0..dim).map(|i| r[(i, i)].re).product();
        if (prod - 1.0).abs() > 1e-12 * prod.max(1.0) {
            return Err(Error::InvalidStructure(format!(
                "diagonal product must be 1, got {prod}"
            )));
        }
        Ok(Self { n, k, r })
    }

    /// The identity point (Gram form is the plain monomial inner product).
    pub fn identity(n: usize, k: usize) -> Result<Self> {
        let dim = section_space_dim(n, k)?;
        Ok(Self {
            n,
            k,
            r: CMat::identity(dim, dim),
        })
    }

    /// Canonical representative of the metric class of a special-linear
    /// matrix: the triangular factor of its canonical QR decomposition.
    pub fn from_sl(n: usize, k: usize, a: &SLMatrix) -> Result<Self> {
        let dim = section_space_dim(n, k)?;
        if a.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "CP^{n} with degree {k} needs dimension {dim}, got {}",
                a.dim()
            )));
        }
        let (_, r) = canonical_qr(a)?;
        Self::from_matrix(n, k, r)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.r
    }

    pub fn diagonal_entry(&self, i: usize) -> f64 {
        self.r[(i, i)].re
    }
}

/// Wire format for a Bergman point: row-major matrix entries as
/// `[re, im]` pairs. Deserialization goes through `from_matrix`, so a
/// decoded point always satisfies the canonical-shape invariants.
#[derive(serde::Serialize, serde::Deserialize)]
struct BergmanPointRepr {
    n: usize,
    k: usize,
    rows: Vec<Vec<[f64; 2]>>,
}

impl serde::Serialize for BergmanPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let dim = self.dim();
        let rows = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        let z = self.r[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        BergmanPointRepr {
            n: self.n,
            k: self.k,
            rows,
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for BergmanPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = BergmanPointRepr::deserialize(d)?;
        let dim = repr.rows.len();
        if repr.rows.iter().any(|row| row.len() != dim) {
            return Err(serde::de::Error::custom("matrix rows of uneven length"));
        }
        let m = CMat::from_fn(dim, dim, |i, j| {
            C64::new(repr.rows[i][j][0], repr.rows[i][j][1])
        });
        BergmanPoint::from_matrix(repr.n, repr.k, m).map_err(serde::de::Error::custom)
    }
}

/// A tangent direction at a Bergman point: upper-triangular perturbation
/// `dR` with real diagonal satisfying `sum_i dR_ii / R_ii = 0`, the
/// linearization of the unit-determinant constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentParam {
    d: CMat,
}

impl TangentParam {
    pub fn new(base: &BergmanPoint, d: CMat) -> Result<Self> {
        let dim = base.dim();
        if d.nrows() != dim || d.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "tangent must be {dim}x{dim}, got {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        let scale = frobenius(&d).max(f64::MIN_POSITIVE);
        let mut d = d;
        let mut trace = 0.0;
        for i in 0..dim {
            for j in 0..i {
                if d[(i, j)].norm() > STRUCTURE_TOL * scale {
                    return Err(Error::InvalidTangent(format!(
                        "entry ({i}, {j}) below the diagonal is not zero"
                    )));
                }
                d[(i, j)] = C64::new(0.0, 0.0);
            }
            if d[(i, i)].im.abs() > STRUCTURE_TOL * scale {
                return Err(Error::InvalidTangent(format!(
                    "diagonal entry {i} must be real"
                )));
            }
            d[(i, i)] = C64::new(d[(i, i)].re, 0.0);
            trace += d[(i, i)].re / base.diagonal_entry(i);
        }
        if trace.abs() > STRUCTURE_TOL * (scale / frobenius(base.matrix()).max(1e-300)).max(1.0) {
            return Err(Error::InvalidTangent(format!(
                "determinant constraint violated: sum dR_ii / R_ii = {trace:e}"
            )));
        }
        Ok(Self { d })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            d: CMat::zeros(dim, dim),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.d
    }

    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    pub(crate) fn from_parts_unchecked(d: CMat) -> Self {
        Self { d }
    }
}

/// The Hermitian Gram form `H = R^H R` (or `A^H A`) whose logarithm is the
/// metric potential.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    h: CMat,
}

impl HermitianForm {
    /// Gram form of an arbitrary factor matrix: `F^H F`.
    pub fn from_factor(f: &CMat) -> Result<Self> {
        if f.nrows() != f.ncols() {
            return Err(Error::ShapeMismatch("factor must be square".into()));
        }
        let mut h = f.ad_mul(f);
        // Symmetrize roundoff so the form is exactly Hermitian.
        for i in 0..h.nrows() {
            h[(i, i)] = C64::new(h[(i, i)].re, 0.0);
            for j in 0..i {
                let avg = (h[(i, j)] + h[(j, i)].conj()) * C64::new(0.5, 0.0);
                h[(i, j)] = avg;
                h[(j, i)] = avg.conj();
            }
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &CMat {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Gram form of a Bergman point.
pub fn hermitian_form(r: &BergmanPoint) -> HermitianForm {
    HermitianForm::from_factor(r.matrix()).expect("square by construction")
}

/// Gram form of a special-linear matrix.
pub fn hermitian_form_of_sl(a: &SLMatrix) -> HermitianForm {
    HermitianForm::from_factor(a.matrix()).expect("square by construction")
}

/// Unique factorization `A = Q R` with `Q` special-unitary and `R` upper
/// triangular with strictly positive diagonal of unit product.
///
/// A Householder factorization fixes `Q R` only up to diagonal phases; the
/// canonical choice moves every diagonal phase of `R` into `Q`. Unit
/// determinant of `A` then forces `det R = 1` (positive real) and hence
/// `det Q = 1`. Near-singular inputs (condition number beyond
/// [`CONDITION_LIMIT`]) are rejected.
pub fn canonical_qr(a: &SLMatrix) -> Result<(CMat, CMat)> {
    let cond = a.condition_number();
    if !cond.is_finite() || cond >= CONDITION_LIMIT {
        return Err(Error::NearSingular {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    let dim = a.dim();
    let (mut q, mut r) = a.matrix().clone().qr().unpack();
    for i in 0..dim {
        let d = r[(i, i)];
        let abs = d.norm();
        if abs == 0.0 {
            return Err(Error::NearSingular {
                cond: f64::INFINITY,
                limit: CONDITION_LIMIT,
            });
        }
        let phase = d / C64::new(abs, 0.0);
        let phase_conj = phase.conj();
        // Row i of R picks up conj(phase); column i of Q picks up phase.
        // The product Q R is unchanged and R_ii becomes |R_ii| > 0.
        for j in i..dim {
            r[(i, j)] *= phase_conj;
        }
        for t in 0..dim {
            q[(t, i)] *= phase;
        }
        r[(i, i)] = C64::new(abs, 0.0);
    }
    // Triangular zeros are exact by construction of the factorization.
    for i in 0..dim {
        for j in 0..i {
            r[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, r))
}

/// Whether two special-linear matrices induce the same Bergman metric:
/// `A^H A = rho^2 B^H B` with `rho^2` fixed by the trace ratio, compared in
/// relative Frobenius norm against `tol`.
pub fn are_equivalent(a: &SLMatrix, b: &SLMatrix, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "cannot compare forms of dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let ga = hermitian_form_of_sl(a);
    let gb = hermitian_form_of_sl(b);
    let ta = ga.matrix().trace().re;
    let tb = gb.matrix().trace().re;
    if !(tb > 0.0) {
        return Err(Error::InvalidStructure(
            "Gram trace must be positive".into(),
        ));
    }
    let rho2 = ta / tb;
    let diff = ga.matrix() - gb.matrix().map(|z| z * rho2);
    Ok(frobenius(&diff) / frobenius(ga.matrix()) <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::gram_schmidt_qr;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mat2(a: f64, b: f64, cc: f64, d: f64) -> CMat {
        CMat::from_row_slice(2, 2, &[c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0)])
    }

    #[test]
    fn sl_normalization_uses_principal_root() {
        let m = mat2(2.0, 0.0, 0.0, 2.0); // det 4 -> rescale by 1/2
        let a = SLMatrix::new(m).unwrap();
        assert_abs_diff_eq!(a.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!((a.matrix().determinant() - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);

        // A complex determinant lands on the principal ray.
        let m = CMat::from_row_slice(
            2,
            2,
            &[c(0.0, 2.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        let a = SLMatrix::new(m).unwrap();
        assert!((a.matrix().determinant() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let m = mat2(1.0, 2.0, 2.0, 4.0);
        assert!(matches!(
            SLMatrix::new(m),
            Err(Error::SingularDeterminant { .. })
        ));
    }

    #[test]
    fn canonical_qr_of_identity() {
        let a = SLMatrix::new(CMat::identity(3, 3)).unwrap();
        let (q, r) = canonical_qr(&a).unwrap();
        assert!(frobenius(&(q - CMat::identity(3, 3))) < 1e-14);
        assert!(frobenius(&(r - CMat::identity(3, 3))) < 1e-14);
    }

    /// Frozen hand Gram-Schmidt example: A = [[1, 0], [1, 1]].
    #[test]
    fn canonical_qr_two_by_two_example() {
        let a = SLMatrix::new(mat2(1.0, 0.0, 1.0, 1.0)).unwrap();
        let (q, r) = canonical_qr(&a).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let q_expect = mat2(s, -s, s, s);
        let r_expect = mat2(2.0f64.sqrt(), s, 0.0, s);
        assert!(frobenius(&(q - q_expect)) < 1e-12);
        assert!(frobenius(&(r.clone() - r_expect)) < 1e-12);
        let det_r: f64 = (0..2).map(|i| r[(i, i)].re).product();
        assert_abs_diff_eq!(det_r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn canonical_qr_round_trip_and_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..200 {
            let dim = 2 + trial % 5;
            let a = random_sl(dim, &mut rng).unwrap();
            let (q, r) = canonical_qr(&a).unwrap();
            // Reconstruction within 1e-10 Frobenius (relative).
            let err = frobenius(&(&q * &r - a.matrix())) / frobenius(a.matrix());
            assert!(err < 1e-10, "trial {trial}: reconstruction error {err:e}");
            // Unitarity within 1e-12.
            let qhq = q.ad_mul(&q);
            assert!(frobenius(&(qhq - CMat::identity(dim, dim))) < 1e-12);
            // det Q = 1 (special-unitary), positive unit-product diagonal.
            assert!((q.determinant() - c(1.0, 0.0)).norm() < 1e-10);
            let prod: f64 = (0..dim).map(|i| r[(i, i)].re).product();
            assert_abs_diff_eq!(prod, 1.0, epsilon = 1e-12);
            for i in 0..dim {
                assert!(r[(i, i)].re > 0.0);
                assert_eq!(r[(i, i)].im, 0.0);
                for j in 0..i {
                    assert_eq!(r[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    /// Uniqueness: factoring Q0 R0 returns exactly (Q0, R0).
    #[test]
    fn canonical_qr_uniqueness() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let dim = 2 + rng.random_range(0..4usize);
            let q0 = random_special_unitary(dim, &mut rng).unwrap();
            let r0 = random_upper_positive(dim, &mut rng);
            let a = SLMatrix::new(&q0 * &r0).unwrap();
            let (q, r) = canonical_qr(&a).unwrap();
            assert!(frobenius(&(q - &q0)) < 1e-10);
            assert!(frobenius(&(r - &r0)) < 1e-10);
        }
    }

    /// Idempotence: a canonical point factors as (I, itself).
    #[test]
    fn canonical_qr_is_idempotent_on_triangular_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let r0 = random_upper_positive(4, &mut rng);
            let a = SLMatrix::new(r0.clone()).unwrap();
            let (q, r) = canonical_qr(&a).unwrap();
            assert!(frobenius(&(q - CMat::identity(4, 4))) < 1e-10);
            assert!(frobenius(&(r - r0)) < 1e-10);
        }
    }

    /// Independent oracle: modified Gram-Schmidt with positive diagonal
    /// agrees with the Householder-based canonical factorization.
    #[test]
    fn canonical_qr_matches_gram_schmidt_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..25 {
            let a = random_sl(4, &mut rng).unwrap();
            if a.condition_number() > 1e6 {
                continue;
            }
            let (q, r) = canonical_qr(&a).unwrap();
            let (q_ref, r_ref) = gram_schmidt_qr(a.matrix());
            assert!(frobenius(&(q - q_ref)) < 1e-8);
            assert!(frobenius(&(r - r_ref)) < 1e-8);
        }
    }

    #[test]
    fn near_singular_inputs_are_rejected_with_diagnostic() {
        // Condition number ~1e14 after determinant normalization.
        let m = CMat::from_row_slice(
            2,
            2,
            &[c(1e7, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-7, 0.0)],
        );
        let a = SLMatrix::new(m).unwrap();
        match canonical_qr(&a) {
            Err(Error::NearSingular { cond, .. }) => assert!(cond > 1e12),
            other => panic!("expected near-singular rejection, got {other:?}"),
        }
    }

    #[test]
    fn equivalence_detects_unitary_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_sl(3, &mut rng).unwrap();
        let q = random_special_unitary(3, &mut rng).unwrap();
        // rho Q A rescales back to Q A inside the constructor.
        let b = SLMatrix::new((&q * a.matrix()).map(|z| z * 2.0)).unwrap();
        assert!(are_equivalent(&a, &b, 1e-10).unwrap());
        assert!(are_equivalent(&b, &a, 1e-10).unwrap());
    }

    #[test]
    fn equivalence_rejects_distinct_forms() {
        let a = SLMatrix::new(CMat::identity(2, 2)).unwrap();
        let b = SLMatrix::new(mat2(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert!(!are_equivalent(&a, &b, 1e-6).unwrap());
    }

    /// Frozen example: R = [[sqrt2, 1/sqrt2], [0, 1/sqrt2]] has Gram form
    /// [[2, 1], [1, 1]].
    #[test]
    fn hermitian_form_example() {
        let s = 1.0 / 2.0f64.sqrt();
        let r = BergmanPoint::from_matrix(1, 1, mat2(2.0f64.sqrt(), s, 0.0, s)).unwrap();
        let h = hermitian_form(&r);
        let expected = mat2(2.0, 1.0, 1.0, 1.0);
        assert!(frobenius(&(h.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn bergman_point_validation() {
        // Lower-triangular garbage is rejected.
        assert!(matches!(
            BergmanPoint::from_matrix(1, 1, mat2(1.0, 0.0, 0.5, 1.0)),
            Err(Error::InvalidStructure(_))
        ));
        // Non-unit diagonal product is rejected.
        assert!(matches!(
            BergmanPoint::from_matrix(1, 1, mat2(2.0, 0.0, 0.0, 1.0)),
            Err(Error::InvalidStructure(_))
        ));
        // Wrong size for (n, k) is rejected.
        assert!(matches!(
            BergmanPoint::from_matrix(1, 2, mat2(1.0, 0.0, 0.0, 1.0)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn bergman_point_serde_round_trip_revalidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let r = BergmanPoint::from_matrix(1, 2, random_upper_positive(3, &mut rng)).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: BergmanPoint = serde_json::from_str(&json).unwrap();
        assert_eq!(r, back);
        // A tampered wire value that breaks the triangular invariant is
        // rejected at decode time, not deferred to first use.
        let bad = json.replacen("[0.0,0.0]", "[0.5,0.0]", 1);
        assert!(serde_json::from_str::<BergmanPoint>(&bad).is_err());
    }

    #[test]
    fn tangent_validation() {
        let base = BergmanPoint::identity(1, 2).unwrap();
        let mut d = CMat::zeros(3, 3);
        d[(0, 0)] = c(1.0, 0.0);
        d[(1, 1)] = c(0.5, 0.0);
        d[(2, 2)] = c(-1.5, 0.0);
        d[(0, 2)] = c(0.3, -0.7);
        assert!(TangentParam::new(&base, d.clone()).is_ok());
        // Violating the trace constraint fails.
        d[(2, 2)] = c(0.5, 0.0);
        assert!(matches!(
            TangentParam::new(&base, d.clone()),
            Err(Error::InvalidTangent(_))
        ));
        // Imaginary diagonal fails.
        d[(2, 2)] = c(-1.5, 0.4);
        assert!(matches!(
            TangentParam::new(&base, d),
            Err(Error::InvalidTangent(_))
        ));
    }

    /// 1000 random special-linear matrices round-trip (acceptance-grade
    /// volume, dims 2..=6).
    #[test]
    fn qr_round_trip_high_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..1000 {
            let dim = 2 + trial % 5;
            let a = random_sl(dim, &mut rng).unwrap();
            let (q, r) = canonical_qr(&a).unwrap();
            let err = frobenius(&(&q * &r - a.matrix())) / frobenius(a.matrix());
            assert!(err < 1e-10, "trial {trial} dim {dim}: {err:e}");
        }
    }

    fn random_upper_positive(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        use rand::Rng;
        let mut r = CMat::zeros(dim, dim);
        let mut logs = vec![0.0f64; dim];
        let mut sum = 0.0;
        for l in logs.iter_mut().take(dim - 1) {
            *l = rng.random_range(-0.5..0.5);
            sum += *l;
        }
        logs[dim - 1] = -sum;
        for i in 0..dim {
            r[(i, i)] = c(logs[i].exp(), 0.0);
            for j in i + 1..dim {
                r[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        r
    }
}
