//! Projective space support: degree-`k` monomial bases on `CP^n`, chart
//! coordinates, exact monomial evaluation with derivatives, and quadrature
//! nodes for the Fubini-Study probability measure.
//!
//! The monomial basis is sorted ascending by an order that compares the
//! *last* exponent first: `a < b` iff `a_n < b_n`, or `a_n = b_n` and the
//! prefix is smaller (recursively). Under this order the largest basis
//! element is `Z_n^k` and the second-largest is `Z_{n-1} Z_n^{k-1}`, which
//! is what the automorphism-orbit machinery downstream relies on.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

/// Default cap on the section space dimension `N_k + 1`. Keeps basis
/// enumeration and downstream Gram assembly at desk scale.
pub const DIM_CAP: usize = 200;

/// Exponent vector of a degree-`k` monomial in the `n + 1` homogeneous
/// coordinates `Z_0, ..., Z_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::ShapeMismatch(
                "multi-index needs at least one exponent".into(),
            ));
        }
        Ok(Self { exponents })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Total degree, the sum of the exponents.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Strict order on equal-length exponent vectors: compare the last
/// coordinate first, then recurse on the prefix. Returns `a < b`.
pub fn lex_less(a: &MultiIndex, b: &MultiIndex) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "cannot order multi-indices of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.exponents.iter().rev().zip(b.exponents.iter().rev()) {
        if x != y {
            return Ok(x < y);
        }
    }
    Ok(false)
}

/// Dimension of the space of degree-`k` homogeneous polynomials in `n + 1`
/// variables, `C(n + k, k)`. Exact integer arithmetic; rejects `n = 0`,
/// `k = 0`, and results beyond `cap`.
pub fn section_space_dim_capped(n: usize, k: usize, cap: usize) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidDimension {
            n: n as i64,
            k: k as i64,
        });
    }
    // C(n + k, k) = prod_{j=1..k} (n + j) / j, exact at every step.
    let mut acc: u128 = 1;
    for j in 1..=k as u128 {
        acc = acc
            .checked_mul(n as u128 + j)
            .ok_or(Error::DimensionCapExceeded {
                dim: u128::MAX,
                cap,
            })?;
        acc /= j;
        if acc > 4 * cap as u128 + 4 {
            return Err(Error::DimensionCapExceeded { dim: acc, cap });
        }
    }
    if acc > cap as u128 {
        return Err(Error::DimensionCapExceeded { dim: acc, cap });
    }
    Ok(acc as usize)
}

/// `section_space_dim` with the default cap of 200.
pub fn section_space_dim(n: usize, k: usize) -> Result<usize> {
    section_space_dim_capped(n, k, DIM_CAP)
}

/// The ordered degree-`k` monomial basis on `CP^n`, sorted ascending by
/// [`lex_less`], with an O(1) exponent-to-position lookup.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    k: usize,
    indices: Vec<MultiIndex>,
    position: HashMap<Vec<u32>, usize>,
}

impl MonomialBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of basis monomials, `N_k + 1`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    /// Position of an exponent vector in the basis, if it belongs to it.
    pub fn position(&self, exponents: &[u32]) -> Option<usize> {
        self.position.get(exponents).copied()
    }
}

/// Enumerate and sort the degree-`k` monomial basis for `CP^n`.
pub fn build_basis(n: usize, k: usize) -> Result<MonomialBasis> {
    let expected = section_space_dim(n, k)?;
    let mut indices = Vec::with_capacity(expected);
    let mut current = vec![0u32; n + 1];
    enumerate_exponents(&mut indices, &mut current, 0, k as u32);
    debug_assert_eq!(indices.len(), expected);
    indices.sort_by(|a, b| {
        if lex_less(a, b).expect("equal lengths by construction") {
            std::cmp::Ordering::Less
        } else if a == b {
            std::cmp::Ordering::Equal
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let position = indices
        .iter()
        .enumerate()
        .map(|(i, idx)| (idx.exponents.to_vec(), i))
        .collect();
    Ok(MonomialBasis {
        n,
        k,
        indices,
        position,
    })
}

fn enumerate_exponents(
    out: &mut Vec<MultiIndex>,
    current: &mut Vec<u32>,
    slot: usize,
    remaining: u32,
) {
    if slot + 1 == current.len() {
        current[slot] = remaining;
        out.push(MultiIndex {
            exponents: current.clone(),
        });
        return;
    }
    for e in 0..=remaining {
        current[slot] = e;
        enumerate_exponents(out, current, slot + 1, remaining - e);
    }
    current[slot] = 0;
}

/// A point of `CP^n` by homogeneous coordinates (never the zero vector).
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPoint {
    z: CVec,
}

impl HomogeneousPoint {
    pub fn new(z: CVec) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::ShapeMismatch(
                "homogeneous point needs at least two coordinates".into(),
            ));
        }
        let norm = z.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidStructure(
                "homogeneous coordinates must be finite and not all zero".into(),
            ));
        }
        Ok(Self { z })
    }

    pub fn coords(&self) -> &CVec {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    /// Chart index `argmax_i |Z_i|`, ties broken by the smallest index.
    pub fn canonical_chart(&self) -> usize {
        let mut best = 0usize;
        let mut best_abs = self.z[0].norm();
        for i in 1..self.z.len() {
            let a = self.z[i].norm();
            if a > best_abs {
                best = i;
                best_abs = a;
            }
        }
        best
    }

    /// Affine coordinates in the canonical chart. All coordinates have
    /// modulus <= 1 by the argmax choice.
    pub fn to_chart(&self) -> ChartPoint {
        self.in_chart(self.canonical_chart())
            .expect("canonical chart coordinate is nonzero")
    }

    /// Affine coordinates in an explicitly chosen chart (`Z_i != 0`
    /// required). The canonical constructor is [`HomogeneousPoint::to_chart`];
    /// this variant exists for cross-chart consistency checks.
    pub fn in_chart(&self, chart: usize) -> Result<ChartPoint> {
        if chart >= self.z.len() {
            return Err(Error::ShapeMismatch(format!(
                "chart index {chart} out of range for CP^{}",
                self.n()
            )));
        }
        let pivot = self.z[chart];
        if pivot.norm() == 0.0 {
            return Err(Error::InvalidStructure(format!(
                "coordinate Z_{chart} vanishes; point is not in that chart"
            )));
        }
        let mut affine = CVec::zeros(self.n());
        let mut a = 0usize;
        for j in 0..self.z.len() {
            if j == chart {
                continue;
            }
            affine[a] = self.z[j] / pivot;
            a += 1;
        }
        Ok(ChartPoint { chart, affine })
    }
}

/// A point of `CP^n` in one affine chart: `affine[a] = Z_j / Z_{chart}`
/// where `j` runs over `0..=n` skipping `chart`, in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    chart: usize,
    affine: CVec,
}

impl ChartPoint {
    pub fn new(chart: usize, affine: CVec) -> Result<Self> {
        if affine.is_empty() {
            return Err(Error::ShapeMismatch("chart point needs n >= 1".into()));
        }
        if chart > affine.len() {
            return Err(Error::ShapeMismatch(format!(
                "chart index {chart} out of range for CP^{}",
                affine.len()
            )));
        }
        if affine.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidStructure(
                "affine coordinates must be finite".into(),
            ));
        }
        Ok(Self { chart, affine })
    }

    pub fn chart(&self) -> usize {
        self.chart
    }

    pub fn affine(&self) -> &CVec {
        &self.affine
    }

    pub fn n(&self) -> usize {
        self.affine.len()
    }

    /// Homogeneous index of affine slot `a`.
    pub fn homogeneous_slot(&self, a: usize) -> usize {
        if a < self.chart {
            a
        } else {
            a + 1
        }
    }

    /// Lift back to homogeneous coordinates with `Z_chart = 1`.
    pub fn to_homogeneous(&self) -> HomogeneousPoint {
        let mut z = CVec::zeros(self.n() + 1);
        z[self.chart] = C64::new(1.0, 0.0);
        for a in 0..self.n() {
            z[self.homogeneous_slot(a)] = self.affine[a];
        }
        HomogeneousPoint::new(z).expect("pivot coordinate is 1")
    }
}

/// How much of the derivative tower [`eval_monomials`] should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeLevel {
    /// Monomial values only.
    Value,
    /// Values and the holomorphic Jacobian.
    FirstOrder,
    /// Values, Jacobian, and per-monomial holomorphic Hessians.
    SecondOrder,
}

/// Values and (optionally) exact holomorphic derivatives of every basis
/// monomial at a chart point.
#[derive(Debug, Clone)]
pub struct MonomialEval {
    /// `v[i]` = product over affine coordinates of `w_a^{e_a}` for monomial `i`.
    pub values: CVec,
    /// `(N_k + 1) x n`: `jacobian[(i, a)] = d v_i / d w_a`.
    pub jacobian: Option<CMat>,
    /// Per-monomial `n x n` holomorphic Hessians `d^2 v_i / (d w_a d w_b)`.
    pub hessians: Option<Vec<CMat>>,
}

/// Evaluate every basis monomial at a chart point, with exact derivatives
/// up to the requested level. The exponent of the chart coordinate is
/// divided out, so `v_i` depends only on the affine exponents.
pub fn eval_monomials(
    basis: &MonomialBasis,
    p: &ChartPoint,
    level: DerivativeLevel,
) -> Result<MonomialEval> {
    if p.n() != basis.n() {
        return Err(Error::ShapeMismatch(format!(
            "chart point lives on CP^{} but the basis is for CP^{}",
            p.n(),
            basis.n()
        )));
    }
    let n = basis.n();
    let count = basis.len();
    let need_jac = level != DerivativeLevel::Value;
    let need_hess = level == DerivativeLevel::SecondOrder;

    let mut values = CVec::zeros(count);
    let mut jacobian = need_jac.then(|| CMat::zeros(count, n));
    let mut hessians = need_hess.then(|| vec![CMat::zeros(n, n); count]);

    // Per-coordinate power triples (w^e, e w^{e-1}, e(e-1) w^{e-2}) with the
    // 0^0 = 1 convention.
    let mut p0 = vec![C64::new(1.0, 0.0); n];
    let mut p1 = vec![C64::new(0.0, 0.0); n];
    let mut p2 = vec![C64::new(0.0, 0.0); n];

    for (i, midx) in basis.indices().iter().enumerate() {
        for a in 0..n {
            let e = midx.exponents()[p.homogeneous_slot(a)];
            let w = p.affine[a];
            let (q0, q1, q2) = power_triple(w, e);
            p0[a] = q0;
            p1[a] = q1;
            p2[a] = q2;
        }
        let mut v = C64::new(1.0, 0.0);
        for a in 0..n {
            v *= p0[a];
        }
        values[i] = v;

        if let Some(jac) = jacobian.as_mut() {
            for a in 0..n {
                let mut d = p1[a];
                if d != C64::new(0.0, 0.0) {
                    for b in 0..n {
                        if b != a {
                            d *= p0[b];
                        }
                    }
                }
                jac[(i, a)] = d;
            }
        }
        if let Some(hess) = hessians.as_mut() {
            let h = &mut hess[i];
            for a in 0..n {
                for b in a..n {
                    let mut d = if a == b { p2[a] } else { p1[a] * p1[b] };
                    if d != C64::new(0.0, 0.0) {
                        for c in 0..n {
                            if c != a && c != b {
                                d *= p0[c];
                            }
                        }
                    }
                    h[(a, b)] = d;
                    h[(b, a)] = d;
                }
            }
        }
    }

    Ok(MonomialEval {
        values,
        jacobian,
        hessians,
    })
}

fn power_triple(w: C64, e: u32) -> (C64, C64, C64) {
    match e {
        0 => (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        1 => (w, C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        _ => {
            let wm2 = w.powu(e - 2);
            let wm1 = wm2 * w;
            let w0 = wm1 * w;
            (
                w0,
                C64::new(e as f64, 0.0) * wm1,
                C64::new((e * (e - 1)) as f64, 0.0) * wm2,
            )
        }
    }
}

/// Quadrature node generator for the Fubini-Study probability measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    /// Normalized standard complex Gaussian vectors (seeded, reproducible).
    MonteCarlo,
    /// Halton sequence pushed through the same Gaussian transform.
    LowDiscrepancy,
    /// Midpoint tensor grid in uniformized polar coordinates; `n = 1` only.
    PolarGrid,
}

/// Deterministic quadrature request: node count, seed, and method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub sample_count: usize,
    pub seed: u64,
    pub method: QuadratureMethod,
}

impl QuadratureSpec {
    pub fn monte_carlo(sample_count: usize, seed: u64) -> Self {
        Self {
            sample_count,
            seed,
            method: QuadratureMethod::MonteCarlo,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidConfig(
                "sample_count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Draw Fubini-Study-distributed points on `CP^n`.
///
/// All three methods produce equal-weight nodes, so every downstream
/// estimator is a plain average over the returned points. `polar_grid`
/// rounds the count up to the nearest `m_r x m_theta` grid (midpoint rule
/// in coordinates that make the FS radial measure uniform), so the
/// returned sequence may be slightly longer than requested.
pub fn sample_fs(n: usize, spec: &QuadratureSpec) -> Result<Vec<HomogeneousPoint>> {
    if n == 0 {
        return Err(Error::InvalidDimension { n: 0, k: 1 });
    }
    spec.validate()?;
    match spec.method {
        QuadratureMethod::MonteCarlo => sample_gaussian(n, spec),
        QuadratureMethod::LowDiscrepancy => sample_halton(n, spec),
        QuadratureMethod::PolarGrid => sample_polar_grid(n, spec),
    }
}

fn sample_gaussian(n: usize, spec: &QuadratureSpec) -> Result<Vec<HomogeneousPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.sample_count);
    while out.len() < spec.sample_count {
        let mut z = CVec::zeros(n + 1);
        for i in 0..=n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z[i] = C64::new(re, im);
        }
        let norm = z.norm();
        if norm == 0.0 {
            continue; // measure-zero safeguard
        }
        z /= C64::new(norm, 0.0);
        out.push(HomogeneousPoint::new(z)?);
    }
    Ok(out)
}

const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn sample_halton(n: usize, spec: &QuadratureSpec) -> Result<Vec<HomogeneousPoint>> {
    let dims = 2 * (n + 1);
    if dims > HALTON_PRIMES.len() {
        return Err(Error::ShapeMismatch(format!(
            "low-discrepancy sampler supports n <= {}, got n = {n}",
            HALTON_PRIMES.len() / 2 - 1
        )));
    }
    // The seed only shifts the start index of the sequence.
    let offset = (spec.seed % 1_048_573) + 17;
    let mut out = Vec::with_capacity(spec.sample_count);
    let mut s = 0u64;
    while out.len() < spec.sample_count {
        let idx = offset + s;
        s += 1;
        let mut z = CVec::zeros(n + 1);
        for i in 0..=n {
            let u_re = radical_inverse(HALTON_PRIMES[2 * i], idx);
            let u_im = radical_inverse(HALTON_PRIMES[2 * i + 1], idx);
            z[i] = C64::new(inverse_normal_cdf(u_re), inverse_normal_cdf(u_im));
        }
        let norm = z.norm();
        if norm == 0.0 {
            continue;
        }
        z /= C64::new(norm, 0.0);
        out.push(HomogeneousPoint::new(z)?);
    }
    Ok(out)
}

fn radical_inverse(base: u64, mut index: u64) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut result = 0.0;
    while index > 0 {
        result += (index % base) as f64 * inv;
        index /= base;
        inv /= b;
    }
    result
}

/// Acklam's rational approximation to the standard normal inverse CDF
/// (relative error below 1.2e-9 over (0, 1)). Enough accuracy for
/// quadrature transforms; inputs are clamped away from {0, 1}.
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

fn sample_polar_grid(n: usize, spec: &QuadratureSpec) -> Result<Vec<HomogeneousPoint>> {
    if n != 1 {
        return Err(Error::UnsupportedQuadrature {
            method: "polar_grid",
            required: 1,
            n,
        });
    }
    // Near-square factorization covering the requested count.
    let m_r = (spec.sample_count as f64).sqrt().ceil() as usize;
    let m_t = spec.sample_count.div_ceil(m_r);
    let mut out = Vec::with_capacity(m_r * m_t);
    for i in 0..m_r {
        // t = |z|^2 / (1 + |z|^2) is uniform on [0, 1) under the FS measure,
        // so midpoints in t with equal weights are exact FS quadrature.
        let t = (i as f64 + 0.5) / m_r as f64;
        let r = (t / (1.0 - t)).sqrt();
        for j in 0..m_t {
            let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m_t as f64;
            let z = CVec::from_vec(vec![
                C64::new(1.0, 0.0),
                C64::from_polar(r, theta),
            ]);
            out.push(HomogeneousPoint::new(z)?);
        }
    }
    Ok(out)
}
