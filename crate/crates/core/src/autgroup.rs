//! Automorphisms of `CP^n` acting on Bergman points.
//!
//! An automorphism `g` pulls a degree-`k` monomial back by the coordinate
//! substitution `Z -> g^{-1} Z`; expanding each substituted monomial on
//! the lex-ordered basis gives the induced section matrix `A`, and the
//! action on canonical points is `R -> canonical_qr(R A)`.
//!
//! The discrete group of interest is `Gamma = { gamma_m = I + m E_{n-1,n} }`.
//! Its substitution only raises the last exponent, so in the ascending
//! basis `A_m` is exactly unit upper triangular, `R A_m` stays in the
//! triangular gauge (no QR rotation), and the `(N-1, N)` entry walks by
//! `-m r_{N-1,N-1}` — the separation that makes the orbit discrete.
//! Unit-upper-triangular integer automorphisms are expanded in checked
//! 128-bit arithmetic; the group law `A_m = A_1^m` and the separation
//! entry are then machine-exact. Everything else takes the float path
//! with SL normalization by the principal determinant root.

use crate::bergman::{
    canonical_coordinates, canonical_directions, canonical_qr, direction_tangent, principal_root,
    retract, BergmanPoint, SLMatrix, CONDITION_LIMIT,
};
use crate::error::{Error, Result};
use crate::metrics::{gram, MetricKind};
use crate::projspace::{build_basis, C64, CMat, MonomialBasis, QuadratureSpec};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Step for the central finite-difference Jacobian of the pullback map in
/// canonical coordinates. The unipotent action is affine in these
/// coordinates, so the central difference is exact up to roundoff.
const FD_JACOBIAN_STEP: f64 = 1e-5;

/// Agreement demanded between closed-form and explicitly multiplied
/// separation entries.
const INTERNAL_AGREEMENT_TOL: f64 = 1e-12;

/// Largest float magnitude accepted as an exact integer entry.
const EXACT_INT_LIMIT: f64 = 9.0e15; // < 2^53, every integer below is exact

type IntMat = Vec<Vec<i128>>;

/// An automorphism of `CP^n`: an invertible `(n+1) x (n+1)` matrix,
/// normalized so `|det| = 1`. Unit-upper-triangular integer matrices keep
/// an exact integer representative alongside the float one.
#[derive(Debug, Clone)]
pub struct ProjectiveAutomorphism {
    g: CMat,
    exact: Option<IntMat>,
}

impl ProjectiveAutomorphism {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::InvalidStructure(format!(
                "automorphism matrix must be square of size >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidStructure(
                "matrix entries must be finite".into(),
            ));
        }
        if let Some(exact) = integer_entries(&m) {
            if is_unit_upper_triangular(&exact) {
                // det = 1 by structure; nothing to rescale and the float
                // copy stays exactly integral.
                return Ok(Self {
                    g: m,
                    exact: Some(exact),
                });
            }
        }
        let det = m.determinant();
        let abs_det = det.norm();
        if abs_det == 0.0 || !abs_det.is_finite() {
            return Err(Error::SingularDeterminant { abs_det });
        }
        let sv = m.clone().singular_values();
        let cond = sv.max() / sv.min();
        if !(cond < CONDITION_LIMIT) {
            return Err(Error::NearSingular {
                cond,
                limit: CONDITION_LIMIT,
            });
        }
        let s = abs_det.powf(-1.0 / m.nrows() as f64);
        Ok(Self {
            g: m.map(|z| z * s),
            exact: None,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.g
    }

    /// Rows/columns of the matrix, i.e. `n + 1`.
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// The exact integer representative, when the automorphism is
    /// unit-upper-triangular with integer entries.
    pub fn exact_entries(&self) -> Option<&IntMat> {
        self.exact.as_ref()
    }
}

/// The generator family of the unipotent group: `gamma_m = I + m E_{n-1,n}`
/// (entry `m` at row `n-1`, column `n`). Always carries an exact integer
/// representative, even for `m` beyond float precision.
pub fn unipotent_gamma(m: i64, n: usize) -> Result<ProjectiveAutomorphism> {
    if n < 1 {
        return Err(Error::InvalidDimension { n: 0, k: 1 });
    }
    let dim = n + 1;
    let mut g = CMat::identity(dim, dim);
    g[(n - 1, n)] = C64::new(m as f64, 0.0);
    let mut exact = vec![vec![0i128; dim]; dim];
    for (i, row) in exact.iter_mut().enumerate() {
        row[i] = 1;
    }
    exact[n - 1][n] = i128::from(m);
    Ok(ProjectiveAutomorphism {
        g,
        exact: Some(exact),
    })
}

fn integer_entries(m: &CMat) -> Option<IntMat> {
    let dim = m.nrows();
    let mut out = vec![vec![0i128; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let z = m[(i, j)];
            if z.im != 0.0 || z.re.fract() != 0.0 || z.re.abs() > EXACT_INT_LIMIT {
                return None;
            }
            out[i][j] = z.re as i128;
        }
    }
    Some(out)
}

fn is_unit_upper_triangular(g: &IntMat) -> bool {
    for (i, row) in g.iter().enumerate() {
        if row[i] != 1 {
            return false;
        }
        if row[..i].iter().any(|&v| v != 0) {
            return false;
        }
    }
    true
}

/// The matrix of an automorphism's pullback action on degree-`k` sections,
/// rows indexed by source monomials, columns by the lex basis.
#[derive(Debug, Clone)]
pub struct InducedSectionMatrix {
    a: CMat,
    exact: Option<IntMat>,
    n: usize,
    k: usize,
}

impl InducedSectionMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.a
    }

    pub fn exact_entries(&self) -> Option<&IntMat> {
        self.exact.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Compute the induced section matrix of `gamma` on the given basis.
/// Unit-upper-triangular integer automorphisms are expanded exactly in
/// checked `i128` arithmetic (overflow is reported, never wrapped); all
/// others are expanded in complex floats and SL-normalized.
pub fn induced_section_matrix(
    gamma: &ProjectiveAutomorphism,
    basis: &MonomialBasis,
) -> Result<InducedSectionMatrix> {
    if gamma.dim() != basis.n() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "automorphism of dimension {} does not act on CP^{}",
            gamma.dim(),
            basis.n()
        )));
    }
    let nb = basis.len();
    if let Some(g) = &gamma.exact {
        let inv = int_unit_upper_inverse(g)?;
        let mut exact = vec![vec![0i128; nb]; nb];
        for i in 0..nb {
            let poly = expand_int(&inv, basis.index(i).exponents())?;
            for (exp, coeff) in poly {
                let j = basis
                    .position(&exp)
                    .ok_or_else(|| Error::InvalidStructure(
                        "internal consistency: substitution left the degree-k basis".into(),
                    ))?;
                exact[i][j] = coeff;
            }
        }
        let a = CMat::from_fn(nb, nb, |i, j| C64::new(exact[i][j] as f64, 0.0));
        return Ok(InducedSectionMatrix {
            a,
            exact: Some(exact),
            n: basis.n(),
            k: basis.k(),
        });
    }
    let inv = gamma
        .g
        .clone()
        .try_inverse()
        .ok_or(Error::SingularDeterminant { abs_det: 0.0 })?;
    let mut a = CMat::zeros(nb, nb);
    for i in 0..nb {
        let poly = expand_complex(&inv, basis.index(i).exponents());
        for (exp, coeff) in poly {
            let j = basis
                .position(&exp)
                .ok_or_else(|| Error::InvalidStructure(
                    "internal consistency: substitution left the degree-k basis".into(),
                ))?;
            a[(i, j)] = coeff;
        }
    }
    let det = a.determinant();
    if det.norm() == 0.0 || !det.norm().is_finite() {
        return Err(Error::SingularDeterminant {
            abs_det: det.norm(),
        });
    }
    let s = principal_root(det, nb).inv();
    Ok(InducedSectionMatrix {
        a: a.map(|z| z * s),
        exact: None,
        n: basis.n(),
        k: basis.k(),
    })
}

/// Exact inverse of a unit-upper-triangular integer matrix by back
/// substitution (all divisions are by the unit diagonal).
fn int_unit_upper_inverse(g: &IntMat) -> Result<IntMat> {
    let dim = g.len();
    let mut inv = vec![vec![0i128; dim]; dim];
    for c in 0..dim {
        for r in (0..=c).rev() {
            let mut acc: i128 = i128::from(r == c);
            for j in r + 1..=c {
                let t = g[r][j]
                    .checked_mul(inv[j][c])
                    .ok_or(Error::CoefficientOverflow)?;
                acc = acc.checked_sub(t).ok_or(Error::CoefficientOverflow)?;
            }
            inv[r][c] = acc;
        }
    }
    Ok(inv)
}

/// Expand `prod_l (sum_p c[l][p] Z_p)^(alpha_l)` over exponent vectors,
/// with checked integer coefficients.
fn expand_int(c: &IntMat, alpha: &[u32]) -> Result<HashMap<Vec<u32>, i128>> {
    let nvars = c.len();
    let mut poly: HashMap<Vec<u32>, i128> = HashMap::new();
    poly.insert(vec![0u32; nvars], 1);
    for (l, &power) in alpha.iter().enumerate() {
        for _ in 0..power {
            let mut next: HashMap<Vec<u32>, i128> = HashMap::with_capacity(poly.len() * 2);
            for (exp, &coeff) in &poly {
                for (p, &factor) in c[l].iter().enumerate() {
                    if factor == 0 {
                        continue;
                    }
                    let term = coeff
                        .checked_mul(factor)
                        .ok_or(Error::CoefficientOverflow)?;
                    let mut e = exp.clone();
                    e[p] += 1;
                    let slot = next.entry(e).or_insert(0);
                    *slot = slot.checked_add(term).ok_or(Error::CoefficientOverflow)?;
                }
            }
            poly = next;
        }
    }
    poly.retain(|_, v| *v != 0);
    Ok(poly)
}

fn expand_complex(c: &CMat, alpha: &[u32]) -> HashMap<Vec<u32>, C64> {
    let nvars = c.nrows();
    let mut poly: HashMap<Vec<u32>, C64> = HashMap::new();
    poly.insert(vec![0u32; nvars], C64::new(1.0, 0.0));
    for (l, &power) in alpha.iter().enumerate() {
        for _ in 0..power {
            let mut next: HashMap<Vec<u32>, C64> = HashMap::with_capacity(poly.len() * 2);
            for (exp, &coeff) in &poly {
                for p in 0..nvars {
                    let factor = c[(l, p)];
                    if factor == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut e = exp.clone();
                    e[p] += 1;
                    *next.entry(e).or_insert(C64::new(0.0, 0.0)) += coeff * factor;
                }
            }
            poly = next;
        }
    }
    poly
}

fn int_mat_mul(a: &IntMat, b: &IntMat) -> Result<IntMat> {
    let dim = a.len();
    let mut out = vec![vec![0i128; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc: i128 = 0;
            for l in 0..dim {
                let t = a[i][l]
                    .checked_mul(b[l][j])
                    .ok_or(Error::CoefficientOverflow)?;
                acc = acc.checked_add(t).ok_or(Error::CoefficientOverflow)?;
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

fn int_identity(dim: usize) -> IntMat {
    let mut m = vec![vec![0i128; dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    m
}

/// Verify the group law `A_m = A_1^m` exactly for `m in [-5, 5]`. The
/// argument must be the generator `gamma_1`; anything else is rejected so
/// a passing check cannot be produced by accident.
pub fn power_identity_check(
    gamma1: &ProjectiveAutomorphism,
    basis: &MonomialBasis,
) -> Result<bool> {
    let n = basis.n();
    let expected = unipotent_gamma(1, n)?;
    if gamma1.exact != expected.exact {
        return Err(Error::InvalidStructure(
            "power identity check requires the unipotent generator gamma_1".into(),
        ));
    }
    let a1 = induced_section_matrix(gamma1, basis)?;
    let a1e = a1.exact.as_ref().expect("unipotent source stays exact");
    let a1_inv = int_unit_upper_inverse(a1e)?;
    for m in -5i64..=5 {
        let am = induced_section_matrix(&unipotent_gamma(m, n)?, basis)?;
        let ame = am.exact.as_ref().expect("unipotent source stays exact");
        let base = if m >= 0 { a1e } else { &a1_inv };
        let mut powed = int_identity(basis.len());
        for _ in 0..m.unsigned_abs() {
            powed = int_mat_mul(&powed, base)?;
        }
        if &powed != ame {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pull a Bergman point back along an automorphism: the canonical
/// representative of `R * A(gamma)`. For triangular (exact) actions the
/// product is already canonical up to scaling, and the QR factor `Q` must
/// come out as the identity — this is asserted, since a rotation there
/// would mean the basis ordering is broken.
pub fn pullback_point(
    r: &BergmanPoint,
    gamma: &ProjectiveAutomorphism,
) -> Result<BergmanPoint> {
    let basis = build_basis(r.n(), r.k())?;
    let induced = induced_section_matrix(gamma, &basis)?;
    let product = r.matrix() * induced.matrix();
    let sl = SLMatrix::new(product)?;
    let (q, rr) = canonical_qr(&sl)?;
    if induced.exact.is_some() {
        let rotation = (&q - CMat::identity(q.nrows(), q.ncols())).norm();
        if rotation > 1e-10 {
            return Err(Error::InvalidStructure(format!(
                "internal consistency: triangular pullback produced a rotation of size {rotation:e}"
            )));
        }
    }
    BergmanPoint::from_matrix(r.n(), r.k(), rr)
}

/// The `(N-1, N)` entry of `R A_m` — the coordinate in which the unipotent
/// orbit marches off: it equals `r_{N-1,N} - m r_{N-1,N-1}` in closed form.
/// Computed both ways (formula and explicit multiplication), which must
/// agree to 1e-12; returns the real part, which carries the entire
/// `m`-dependence (the diagonal is real).
pub fn orbit_separation_entry(r: &BergmanPoint, m: i64) -> Result<f64> {
    let dim = r.dim();
    let (row, col) = (dim - 2, dim - 1);
    let closed =
        r.matrix()[(row, col)] - C64::new(m as f64, 0.0) * r.matrix()[(row, row)];
    let basis = build_basis(r.n(), r.k())?;
    let induced = induced_section_matrix(&unipotent_gamma(m, r.n())?, &basis)?;
    let mut explicit = C64::new(0.0, 0.0);
    for j in 0..dim {
        explicit += r.matrix()[(row, j)] * induced.matrix()[(j, col)];
    }
    let tol = INTERNAL_AGREEMENT_TOL * closed.norm().max(1.0);
    if (closed - explicit).norm() > tol {
        return Err(Error::InvalidStructure(format!(
            "internal consistency: separation entry {closed} vs explicit product {explicit}"
        )));
    }
    Ok(closed.re)
}

/// Jacobian of the pullback map `R -> pullback_point(R, gamma)` in
/// canonical coordinates, by central differences along the canonical
/// frame with the determinant-preserving retraction.
pub fn pullback_jacobian(
    r: &BergmanPoint,
    gamma: &ProjectiveAutomorphism,
    step: f64,
) -> Result<DMatrix<f64>> {
    let dirs = canonical_directions(r.dim());
    let d = dirs.len();
    let mut jac = DMatrix::zeros(d, d);
    for (col, dir) in dirs.into_iter().enumerate() {
        let tangent = direction_tangent(r, dir);
        let plus = canonical_coordinates(&pullback_point(&retract(r, &tangent, step)?, gamma)?);
        let minus = canonical_coordinates(&pullback_point(&retract(r, &tangent, -step)?, gamma)?);
        for i in 0..d {
            jac[(i, col)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Congruence defect `|G1 - J^T G2 J|_F / |G1|_F` between two Gram
/// matrices under a coordinate Jacobian — zero for an exact isometry.
pub fn congruence_defect(g1: &DMatrix<f64>, g2: &DMatrix<f64>, jac: &DMatrix<f64>) -> f64 {
    let transported = jac.transpose() * g2 * jac;
    (g1 - transported).norm() / g1.norm()
}

/// Measure how far the pullback is from a Gram isometry: compare the Gram
/// matrix at `R` with the Jacobian-transported Gram matrix at the pulled
/// back point, both computed from the same deterministic sample sequence
/// (common random numbers).
pub fn isometry_defect(
    r: &BergmanPoint,
    gamma: &ProjectiveAutomorphism,
    kind: MetricKind,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let g1 = gram(r, kind, quad)?;
    let pulled = pullback_point(r, gamma)?;
    let g2 = gram(&pulled, kind, quad)?;
    let jac = pullback_jacobian(r, gamma, FD_JACOBIAN_STEP)?;
    Ok(congruence_defect(&g1.entries, &g2.entries, &jac))
}

/// One station of a unipotent orbit sweep: the pulled-back point, its
/// separation entry, the volume density there, and the volume of the
/// coordinate ball carried along the orbit. `std_error` belongs to
/// `ball_volume`; the density error is `std_error / (2 eps)^D`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub m: i64,
    pub point: BergmanPoint,
    pub entry: f64,
    pub density: f64,
    pub ball_volume: f64,
    pub std_error: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::random_walk_point;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn unipotent_generator_examples() {
        let id = unipotent_gamma(0, 2).unwrap();
        assert_eq!(id.matrix(), &CMat::identity(3, 3));
        let g3 = unipotent_gamma(3, 1).unwrap();
        assert_eq!(g3.matrix()[(0, 1)], c(3.0, 0.0));
        assert_eq!(g3.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(g3.matrix()[(1, 0)], c(0.0, 0.0));
        assert_eq!(g3.matrix()[(1, 1)], c(1.0, 0.0));
        // One-parameter group: gamma_a gamma_b = gamma_{a+b}, exactly.
        for (a, b) in [(2i64, 5i64), (-3, 7), (4, -4)] {
            let ga = unipotent_gamma(a, 2).unwrap();
            let gb = unipotent_gamma(b, 2).unwrap();
            let gab = unipotent_gamma(a + b, 2).unwrap();
            assert_eq!(ga.matrix() * gb.matrix(), *gab.matrix());
        }
    }

    #[test]
    fn induced_identity_is_identity() {
        let basis = build_basis(2, 2).unwrap();
        let a = induced_section_matrix(&unipotent_gamma(0, 2).unwrap(), &basis).unwrap();
        assert_eq!(a.matrix(), &CMat::identity(6, 6));
        assert_eq!(a.exact_entries().unwrap(), &int_identity(6));
    }

    /// Frozen expansions on CP^1, degree 2, basis (Z0^2, Z0 Z1, Z1^2):
    /// substituting Z0 -> Z0 - m Z1 gives the matrices below.
    #[test]
    fn induced_matrix_frozen_examples() {
        let basis = build_basis(1, 2).unwrap();
        let a1 = induced_section_matrix(&unipotent_gamma(1, 1).unwrap(), &basis).unwrap();
        let expect1: IntMat = vec![vec![1, -2, 1], vec![0, 1, -1], vec![0, 0, 1]];
        assert_eq!(a1.exact_entries().unwrap(), &expect1);
        let a2 = induced_section_matrix(&unipotent_gamma(2, 1).unwrap(), &basis).unwrap();
        let expect2: IntMat = vec![vec![1, -4, 4], vec![0, 1, -2], vec![0, 0, 1]];
        assert_eq!(a2.exact_entries().unwrap(), &expect2);
    }

    /// Structure of induced unipotent matrices over a grid of (n, k, m):
    /// exactly unit upper triangular with (N-1, N) entry equal to -m.
    #[test]
    fn induced_matrices_are_unit_upper_triangular() {
        for (n, k) in [(1usize, 1usize), (1, 2), (1, 3), (2, 1), (2, 2), (3, 2)] {
            let basis = build_basis(n, k).unwrap();
            for m in [-7i64, -1, 2, 13] {
                let a = induced_section_matrix(&unipotent_gamma(m, n).unwrap(), &basis).unwrap();
                let e = a.exact_entries().unwrap();
                let nb = basis.len();
                for i in 0..nb {
                    assert_eq!(e[i][i], 1, "(n={n}, k={k}, m={m}) diagonal");
                    for j in 0..i {
                        assert_eq!(e[i][j], 0, "(n={n}, k={k}, m={m}) lower part");
                    }
                }
                assert_eq!(
                    e[nb - 2][nb - 1],
                    i128::from(-m),
                    "(n={n}, k={k}) separation coefficient"
                );
            }
        }
    }

    #[test]
    fn power_identity_holds_on_sample_grid() {
        for (n, k) in [(1usize, 2usize), (2, 2), (1, 4)] {
            let basis = build_basis(n, k).unwrap();
            let g1 = unipotent_gamma(1, n).unwrap();
            assert!(power_identity_check(&g1, &basis).unwrap(), "(n={n}, k={k})");
        }
    }

    #[test]
    fn power_identity_rejects_non_generator() {
        let basis = build_basis(1, 2).unwrap();
        let g2 = unipotent_gamma(2, 1).unwrap();
        assert!(matches!(
            power_identity_check(&g2, &basis),
            Err(Error::InvalidStructure(_))
        ));
    }

    /// Coefficients grow like m^k; beyond i128 the failure must be an
    /// explicit overflow report, not a wrapped value.
    #[test]
    fn coefficient_overflow_is_reported() {
        let basis = build_basis(1, 3).unwrap();
        let huge = unipotent_gamma(2_000_000_000_000_000_000, 1).unwrap();
        assert!(matches!(
            induced_section_matrix(&huge, &basis),
            Err(Error::CoefficientOverflow)
        ));
    }

    #[test]
    fn general_automorphism_induces_special_linear_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = build_basis(1, 2).unwrap();
        let m = CMat::from_fn(2, 2, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let gamma = ProjectiveAutomorphism::new(m).unwrap();
        assert!(gamma.exact_entries().is_none());
        assert_abs_diff_eq!(gamma.matrix().determinant().norm(), 1.0, epsilon = 1e-12);
        let a = induced_section_matrix(&gamma, &basis).unwrap();
        assert_abs_diff_eq!(a.matrix().determinant().norm(), 1.0, epsilon = 1e-10);
    }

    /// In the row convention (row i = expansion of the i-th substituted
    /// monomial) the induced map reverses products: A(g h) = A(h) A(g),
    /// up to the principal-root phase absorbed by the unitary quotient.
    /// For k = 1 this is just (g h)^{-1} = h^{-1} g^{-1}.
    #[test]
    fn induced_map_reverses_products_up_to_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis = build_basis(1, 2).unwrap();
        let sample = |rng: &mut ChaCha8Rng| {
            CMat::from_fn(2, 2, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        };
        for _ in 0..10 {
            let m1 = sample(&mut rng);
            let m2 = sample(&mut rng);
            let g1 = ProjectiveAutomorphism::new(m1.clone()).unwrap();
            let g2 = ProjectiveAutomorphism::new(m2.clone()).unwrap();
            let g12 = ProjectiveAutomorphism::new(&m1 * &m2).unwrap();
            let a12 = induced_section_matrix(&g12, &basis).unwrap();
            let prod = induced_section_matrix(&g2, &basis).unwrap().matrix()
                * induced_section_matrix(&g1, &basis).unwrap().matrix();
            // Best unitary scalar aligning the two.
            let num = (prod.adjoint() * a12.matrix()).trace();
            let den = (prod.adjoint() * &prod).trace();
            let s = num / den;
            assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-8);
            assert!((a12.matrix() - prod.map(|z| z * s)).norm() < 1e-8);
        }
    }

    /// The product reversal above cancels against right multiplication, so
    /// pulling back by g2 and then by g1 is the pullback by g1 g2 — also
    /// through the float path, where each factor carries its own
    /// principal-root phase (killed by canonicalization).
    #[test]
    fn pullback_is_a_left_action_on_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = random_walk_point(1, 2, 6, 0.2, 27).unwrap();
        for _ in 0..5 {
            let m1 = CMat::from_fn(2, 2, |i, j| {
                c(
                    if i == j { 1.0 } else { 0.0 } + 0.3 * rng.random_range(-1.0..1.0),
                    0.3 * rng.random_range(-1.0..1.0),
                )
            });
            let m2 = CMat::from_fn(2, 2, |i, j| {
                c(
                    if i == j { 1.0 } else { 0.0 } + 0.3 * rng.random_range(-1.0..1.0),
                    0.3 * rng.random_range(-1.0..1.0),
                )
            });
            let g1 = ProjectiveAutomorphism::new(m1.clone()).unwrap();
            let g2 = ProjectiveAutomorphism::new(m2.clone()).unwrap();
            let g12 = ProjectiveAutomorphism::new(&m1 * &m2).unwrap();
            let stepwise = pullback_point(&pullback_point(&r, &g2).unwrap(), &g1).unwrap();
            let joint = pullback_point(&r, &g12).unwrap();
            assert!(
                (stepwise.matrix() - joint.matrix()).norm() < 1e-9,
                "difference {:e}",
                (stepwise.matrix() - joint.matrix()).norm()
            );
        }
    }

    #[test]
    fn pullback_by_identity_returns_same_point() {
        let r = random_walk_point(1, 2, 6, 0.2, 9).unwrap();
        let pulled = pullback_point(&r, &unipotent_gamma(0, 1).unwrap()).unwrap();
        assert!((r.matrix() - pulled.matrix()).norm() < 1e-12);
    }

    #[test]
    fn pullback_of_fubini_study_point_is_frozen_matrix() {
        let r = BergmanPoint::identity(1, 1).unwrap();
        let pulled = pullback_point(&r, &unipotent_gamma(7, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(pulled.matrix()[(0, 1)].re, -7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pulled.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pulled.matrix()[(1, 1)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pullback_composes_along_the_group() {
        let r = random_walk_point(1, 2, 6, 0.25, 11).unwrap();
        let a = pullback_point(
            &pullback_point(&r, &unipotent_gamma(2, 1).unwrap()).unwrap(),
            &unipotent_gamma(3, 1).unwrap(),
        )
        .unwrap();
        let b = pullback_point(&r, &unipotent_gamma(5, 1).unwrap()).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-10);
    }

    #[test]
    fn separation_entry_examples() {
        let r = BergmanPoint::identity(1, 1).unwrap();
        assert_abs_diff_eq!(orbit_separation_entry(&r, 5).unwrap(), -5.0, epsilon = 1e-12);
        let r = random_walk_point(1, 2, 6, 0.2, 13).unwrap();
        let dim = r.dim();
        assert_abs_diff_eq!(
            orbit_separation_entry(&r, 0).unwrap(),
            r.matrix()[(dim - 2, dim - 1)].re,
            epsilon = 1e-15
        );
        // Consecutive gap is exactly the (N-1, N-1) diagonal entry.
        let gap = r.diagonal_entry(dim - 2);
        for m in -3i64..3 {
            let lo = orbit_separation_entry(&r, m).unwrap();
            let hi = orbit_separation_entry(&r, m + 1).unwrap();
            assert_abs_diff_eq!(lo - hi, gap, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_of_identity_pullback_is_identity() {
        let r = random_walk_point(1, 1, 5, 0.2, 15).unwrap();
        let jac = pullback_jacobian(&r, &unipotent_gamma(0, 1).unwrap(), FD_JACOBIAN_STEP).unwrap();
        let d = jac.nrows();
        assert!((jac - DMatrix::<f64>::identity(d, d)).norm() < 1e-8);
    }

    /// The unipotent action is affine with unit determinant in canonical
    /// coordinates — the parameter-space volume is carried unchanged along
    /// the orbit.
    #[test]
    fn unipotent_jacobian_is_unimodular() {
        let r = random_walk_point(1, 2, 5, 0.2, 17).unwrap();
        let jac = pullback_jacobian(&r, &unipotent_gamma(3, 1).unwrap(), FD_JACOBIAN_STEP).unwrap();
        assert_abs_diff_eq!(jac.determinant(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn identity_pullback_has_no_isometry_defect() {
        let r = BergmanPoint::identity(1, 1).unwrap();
        let q = QuadratureSpec::monte_carlo(2000, 19);
        let defect =
            isometry_defect(&r, &unipotent_gamma(0, 1).unwrap(), MetricKind::Calabi, &q).unwrap();
        assert!(defect < 1e-8, "identity defect {defect:e}");
    }

    #[test]
    fn unipotent_pullback_is_an_isometry_within_noise() {
        let r = BergmanPoint::identity(1, 1).unwrap();
        let q = QuadratureSpec::monte_carlo(20_000, 21);
        for kind in [MetricKind::Calabi, MetricKind::Mabuchi] {
            let defect =
                isometry_defect(&r, &unipotent_gamma(1, 1).unwrap(), kind, &q).unwrap();
            assert!(defect < 0.03, "{kind:?} defect {defect}");
        }
    }

    /// Negative control: dropping the Jacobian correction (J = I) must
    /// leave a visible defect — otherwise the isometry test would pass
    /// vacuously.
    #[test]
    fn omitting_the_jacobian_breaks_the_congruence() {
        let r = BergmanPoint::identity(1, 1).unwrap();
        let gamma = unipotent_gamma(1, 1).unwrap();
        let q = QuadratureSpec::monte_carlo(20_000, 23);
        let g1 = gram(&r, MetricKind::Calabi, &q).unwrap();
        let g2 = gram(&pullback_point(&r, &gamma).unwrap(), MetricKind::Calabi, &q).unwrap();
        let d = g1.dim();
        let defect = congruence_defect(&g1.entries, &g2.entries, &DMatrix::identity(d, d));
        assert!(defect > 0.05, "negative control too small: {defect}");
    }
}
