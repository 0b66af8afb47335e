//! Independent numerical oracles: finite differences, brute-force
//! enumeration, and a reference Gram-Schmidt factorization.
//!
//! Everything here deliberately avoids the closed-form implementations it
//! is used to check. The acceptance suite and the unit tests both consume
//! these; nothing in the computational modules calls into this file.

use crate::bergman::{retract, BergmanPoint, TangentParam};
use crate::error::Result;
use crate::projspace::{C64, CMat, CVec, ChartPoint};

/// Count degree-`k` exponent vectors over `n + 1` slots by direct
/// enumeration (no binomial formula).
pub fn brute_force_monomial_count(n: usize, k: usize) -> usize {
    fn walk(slot: usize, rem: u32, slots: usize) -> usize {
        if slot + 1 == slots {
            return 1;
        }
        (0..=rem).map(|e| walk(slot + 1, rem - e, slots)).sum()
    }
    walk(0, k as u32, n + 1)
}

/// Mixed complex Hessian `d^2 f / (dw_a dw_bar_b)` of a real-valued chart
/// function by central differences in the underlying real coordinates.
///
/// With `w_a = x_a + i y_a`, the Wirtinger combination is
/// `(1/4) [f_{x_a x_b} + f_{y_a y_b} + i (f_{x_a y_b} - f_{y_a x_b})]`.
pub fn fd_mixed_hessian<F>(f: F, p: &ChartPoint, h: f64) -> Result<CMat>
where
    F: Fn(&ChartPoint) -> Result<f64>,
{
    let n = p.n();
    let base = p.affine().clone();
    let eval = |coords: &CVec| -> Result<f64> {
        f(&ChartPoint::new(p.chart(), coords.clone())?)
    };
    // Real-coordinate second differences. Slot 2a is x_a, slot 2a+1 is y_a.
    let shift = |coords: &CVec, slot: usize, amount: f64| -> CVec {
        let mut c = coords.clone();
        let a = slot / 2;
        if slot % 2 == 0 {
            c[a] += C64::new(amount, 0.0);
        } else {
            c[a] += C64::new(0.0, amount);
        }
        c
    };
    let f0 = eval(&base)?;
    let second = |s: usize, t: usize| -> Result<f64> {
        if s == t {
            let fp = eval(&shift(&base, s, h))?;
            let fm = eval(&shift(&base, s, -h))?;
            Ok((fp - 2.0 * f0 + fm) / (h * h))
        } else {
            let fpp = eval(&shift(&shift(&base, s, h), t, h))?;
            let fpm = eval(&shift(&shift(&base, s, h), t, -h))?;
            let fmp = eval(&shift(&shift(&base, s, -h), t, h))?;
            let fmm = eval(&shift(&shift(&base, s, -h), t, -h))?;
            Ok((fpp - fpm - fmp + fmm) / (4.0 * h * h))
        }
    };
    let mut out = CMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let xx = second(2 * a, 2 * b)?;
            let yy = second(2 * a + 1, 2 * b + 1)?;
            let xy = second(2 * a, 2 * b + 1)?;
            let yx = second(2 * a + 1, 2 * b)?;
            out[(a, b)] = C64::new((xx + yy) / 4.0, (xy - yx) / 4.0);
        }
    }
    Ok(out)
}

/// Central difference of a scalar function of the Bergman point along the
/// determinant-preserving retraction `R(h) = normalize(R + h dR)`.
pub fn fd_retraction_derivative<G>(
    g: G,
    r: &BergmanPoint,
    d: &TangentParam,
    h: f64,
) -> Result<f64>
where
    G: Fn(&BergmanPoint) -> Result<f64>,
{
    let plus = g(&retract(r, d, h)?)?;
    let minus = g(&retract(r, d, -h)?)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Reference QR by modified Gram-Schmidt with the positive-diagonal
/// convention. Slower and less stable than a Householder factorization;
/// used only to cross-check well-conditioned cases.
pub fn gram_schmidt_qr(a: &CMat) -> (CMat, CMat) {
    let d = a.nrows();
    let mut q = a.clone();
    let mut r = CMat::zeros(d, d);
    for j in 0..d {
        for i in 0..j {
            let qi = q.column(i).clone_owned();
            let proj = qi.dotc(&q.column(j).clone_owned());
            r[(i, j)] = proj;
            let update = qi * proj;
            for t in 0..d {
                q[(t, j)] -= update[t];
            }
        }
        let norm = q.column(j).norm();
        r[(j, j)] = C64::new(norm, 0.0);
        for t in 0..d {
            q[(t, j)] /= C64::new(norm, 0.0);
        }
    }
    (q, r)
}
