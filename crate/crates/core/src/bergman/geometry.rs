//! Pointwise Kahler quantities of a Bergman metric.
//!
//! With `v(w)` the monomial vector in an affine chart and `H = R^H R`, the
//! local potential is `phi_R = 1/(2 k pi) log(v^H H v)`. Everything here is
//! evaluated through the factor `R` (never through `H` directly):
//! `v^H H v = |R v|^2` and `v^H dH v = 2 Re <R v, dR v>`, which keeps all
//! quadratic forms positive by construction.
//!
//! Matrix convention: the returned metric `g` and all internal mixed
//! Hessians store `g[(a, b)] = d^2 phi / (dw_b dw_bar_a)`, i.e. the
//! holomorphic index is the column. Determinants, inverses and traces are
//! insensitive to the choice; finite-difference checks must conjugate.

use super::{BergmanPoint, HermitianForm, TangentParam};
use crate::error::{Error, Result};
use crate::projspace::{
    build_basis, eval_monomials, C64, CMat, CVec, ChartPoint, DerivativeLevel, HomogeneousPoint,
    MonomialBasis,
};
use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;
use std::f64::consts::PI;

/// Everything the pointwise formulas need at one `(R, p)` pair, computed
/// once: monomial values/Jacobian, the transformed section data, and the
/// Cholesky factor of the scale-free metric.
pub struct PointData {
    n: usize,
    k: usize,
    /// `|w|^2` of the affine coordinates in the evaluation chart.
    chart_norm_sqr: f64,
    v: CVec,
    /// Monomial Jacobian `W`, `(N_k + 1) x n`.
    w_jac: CMat,
    /// `R v`.
    rv: CVec,
    /// `T = R W`.
    t_mat: CMat,
    /// `Q = |R v|^2 > 0`.
    q: f64,
    /// `x = T^H (R v)`, i.e. `x_a = J_a^H H v`.
    x: CVec,
    /// Scale-free metric `G = A/Q - x x^H / Q^2` with `A = T^H T`.
    gc: CMat,
    chol: Cholesky<C64, Dyn>,
}

impl PointData {
    /// Evaluate the section data of `r` at a chart point. Fails only if the
    /// scale-free metric loses positive definiteness to roundoff, which is
    /// reported, never patched.
    pub fn prepare(r: &BergmanPoint, basis: &MonomialBasis, p: &ChartPoint) -> Result<Self> {
        if basis.n() != r.n() || basis.k() != r.k() {
            return Err(Error::ShapeMismatch(
                "basis does not match the Bergman point".into(),
            ));
        }
        if p.n() != r.n() {
            return Err(Error::ShapeMismatch(format!(
                "point lives on CP^{}, Bergman point on CP^{}",
                p.n(),
                r.n()
            )));
        }
        let ev = eval_monomials(basis, p, DerivativeLevel::FirstOrder)?;
        let v = ev.values;
        let w_jac = ev.jacobian.expect("first-order evaluation");
        let rv = r.matrix() * &v;
        let t_mat = r.matrix() * &w_jac;
        let q = rv.norm_squared();
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::EstimationFailure(format!(
                "degenerate section value |R v|^2 = {q}"
            )));
        }
        let x = t_mat.ad_mul(&rv);
        let a_mat = t_mat.ad_mul(&t_mat);
        let mut gc = a_mat.map(|z| z / q) - (&x * x.adjoint()).map(|z| z / (q * q));
        hermitize(&mut gc);
        let chol = Cholesky::new(gc.clone()).ok_or_else(|| {
            Error::EstimationFailure(
                "scale-free metric is not positive definite at this point".into(),
            )
        })?;
        Ok(Self {
            n: r.n(),
            k: r.k(),
            chart_norm_sqr: p.affine().norm_squared(),
            v,
            w_jac,
            rv,
            t_mat,
            q,
            x,
            gc,
            chol,
        })
    }

    fn scale(&self) -> f64 {
        1.0 / (2.0 * self.k as f64 * PI)
    }

    /// Local potential `1/(2 k pi) log |R v|^2`.
    pub fn potential(&self) -> f64 {
        self.scale() * self.q.ln()
    }

    /// Metric tensor `g = 1/(2 k pi) (A/Q - x x^H / Q^2)`, an `n x n`
    /// positive definite Hermitian matrix.
    pub fn metric(&self) -> CMat {
        let c = self.scale();
        self.gc.map(|z| z * c)
    }

    /// Determinant of the scale-free metric, from its Cholesky factor.
    pub fn det_scale_free(&self) -> f64 {
        let l = self.chol.l_dirty();
        let mut det_sqrt = 1.0;
        for i in 0..self.gc.nrows() {
            det_sqrt *= l[(i, i)].re;
        }
        det_sqrt * det_sqrt
    }

    /// Ratio of the metric volume density to the Fubini-Study volume
    /// density at this point: `k^{-n} det(G) (1 + |w|^2)^{n+1}`.
    pub fn density_ratio(&self) -> f64 {
        let fs_factor = (1.0 + self.chart_norm_sqr).powi(self.n as i32 + 1);
        self.det_scale_free() * fs_factor / (self.k as f64).powi(self.n as i32)
    }

    /// Variation of the potential along a tangent direction:
    /// `u = 1/(2 k pi) * v^H dH v / v^H H v` with `dH = dR^H R + R^H dR`.
    pub fn tangent_value(&self, d: &TangentParam) -> f64 {
        let dv = d.matrix() * &self.v;
        let p = 2.0 * self.rv.dotc(&dv).re;
        self.scale() * p / self.q
    }

    /// Metric Laplacian of the tangent function at this point, from the
    /// closed-form mixed Hessian of the rational expression `P/Q`.
    pub fn laplacian_value(&self, d: &TangentParam) -> f64 {
        let dv = d.matrix() * &self.v;
        let dw = d.matrix() * &self.w_jac;
        let p = 2.0 * self.rv.dotc(&dv).re;
        // y_a = J_a^H dH v; b_ab (after conjugation) = J_a^H dH J_b.
        let y = dw.ad_mul(&self.rv) + self.t_mat.ad_mul(&dv);
        let b_mat = dw.ad_mul(&self.t_mat) + self.t_mat.ad_mul(&dw);
        let q = self.q;
        let a_mat = self.gc.map(|z| z * q) + (&self.x * self.x.adjoint()).map(|z| z / q);
        let mut uc = b_mat.map(|z| z / q);
        uc -= (&y * self.x.adjoint() + &self.x * y.adjoint()).map(|z| z / (q * q));
        uc -= a_mat.map(|z| z * (p / (q * q)));
        uc += (&self.x * self.x.adjoint()).map(|z| z * (2.0 * p / (q * q * q)));
        // The 1/(2 k pi) scales of u and g cancel in g^{-1} Hess(u).
        let solved = self.chol.solve(&uc);
        solved.trace().re
    }
}

fn hermitize(m: &mut CMat) {
    let dim = m.nrows();
    for i in 0..dim {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * C64::new(0.5, 0.0);
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn chart_of(p: &HomogeneousPoint) -> ChartPoint {
    p.to_chart()
}

fn prepared(r: &BergmanPoint, p: &ChartPoint) -> Result<PointData> {
    let basis = build_basis(r.n(), r.k())?;
    PointData::prepare(r, &basis, p)
}

/// Local Kahler potential of `r` at `p`, evaluated in the canonical chart.
pub fn potential(r: &BergmanPoint, p: &HomogeneousPoint) -> Result<f64> {
    potential_in_chart(r, &chart_of(p))
}

/// Local Kahler potential in an explicit chart (chart gauges differ by a
/// pluriharmonic term, so curvature quantities are chart-independent).
pub fn potential_in_chart(r: &BergmanPoint, p: &ChartPoint) -> Result<f64> {
    Ok(prepared(r, p)?.potential())
}

/// Potential of an arbitrary Hermitian Gram form (not necessarily of unit
/// determinant): `1/(2 k pi) log(v^H H v)`. Used for gauge checks, where
/// `H` and `rho^2 Q^H Q H` must differ by the constant `1/(k pi) log rho`.
pub fn potential_of_form(h: &HermitianForm, k: usize, p: &ChartPoint) -> Result<f64> {
    let basis = build_basis(p.n(), k)?;
    if basis.len() != h.dim() {
        return Err(Error::ShapeMismatch(format!(
            "form dimension {} does not match basis size {}",
            h.dim(),
            basis.len()
        )));
    }
    let ev = eval_monomials(&basis, p, DerivativeLevel::Value)?;
    let q = ev.values.dotc(&(h.matrix() * &ev.values)).re;
    if !(q > 0.0) {
        return Err(Error::EstimationFailure(format!(
            "quadratic form evaluated to {q}, expected positive"
        )));
    }
    Ok(q.ln() / (2.0 * k as f64 * PI))
}

/// Metric tensor of `r` at `p` in the canonical chart; see the module docs
/// for the index convention.
pub fn metric_tensor(r: &BergmanPoint, p: &HomogeneousPoint) -> Result<CMat> {
    metric_tensor_in_chart(r, &chart_of(p))
}

pub fn metric_tensor_in_chart(r: &BergmanPoint, p: &ChartPoint) -> Result<CMat> {
    Ok(prepared(r, p)?.metric())
}

/// The global tangent function `u` of a direction `d` at the point `p`.
pub fn tangent_function(r: &BergmanPoint, d: &TangentParam, p: &HomogeneousPoint) -> Result<f64> {
    tangent_function_in_chart(r, d, &chart_of(p))
}

pub fn tangent_function_in_chart(
    r: &BergmanPoint,
    d: &TangentParam,
    p: &ChartPoint,
) -> Result<f64> {
    check_tangent_dim(r, d)?;
    Ok(prepared(r, p)?.tangent_value(d))
}

/// Metric Laplacian `g^{a bbar} d_a d_bbar u` of the tangent function of
/// `d` at `p`.
pub fn laplacian_of(r: &BergmanPoint, d: &TangentParam, p: &HomogeneousPoint) -> Result<f64> {
    laplacian_of_in_chart(r, d, &chart_of(p))
}

pub fn laplacian_of_in_chart(r: &BergmanPoint, d: &TangentParam, p: &ChartPoint) -> Result<f64> {
    check_tangent_dim(r, d)?;
    Ok(prepared(r, p)?.laplacian_value(d))
}

/// Pointwise ratio of the volume density of `r` to the Fubini-Study
/// volume density. Averages to exactly 1 over the FS probability measure,
/// for every `r` and `k`.
pub fn density_ratio(r: &BergmanPoint, p: &HomogeneousPoint) -> Result<f64> {
    density_ratio_in_chart(r, &chart_of(p))
}

pub fn density_ratio_in_chart(r: &BergmanPoint, p: &ChartPoint) -> Result<f64> {
    Ok(prepared(r, p)?.density_ratio())
}

fn check_tangent_dim(r: &BergmanPoint, d: &TangentParam) -> Result<()> {
    if d.dim() != r.dim() {
        return Err(Error::ShapeMismatch(format!(
            "tangent dimension {} does not match point dimension {}",
            d.dim(),
            r.dim()
        )));
    }
    Ok(())
}
