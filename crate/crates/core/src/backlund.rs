//! Darboux dressing of the field by a kernel vector of the spatial problem,
//! together with the coefficient matching that locates a dressed field
//! inside the modulation family.

use crate::error::{DnlsError, Result};
use crate::evans::EigenPair;
use crate::grid::Grid;
use crate::lax::MatrixField;
use crate::C64;
use std::f64::consts::PI;

/// Result of one dressing step.
#[derive(Debug, Clone)]
pub struct BtOutput {
    /// Transformed field.
    pub field: Vec<C64>,
    /// First component of the pushed-forward kernel vector.
    pub vec1: Vec<C64>,
    /// Second component of the pushed-forward kernel vector.
    pub vec2: Vec<C64>,
}

/// Log-polar expansion weights of a vector in the two Jost directions.
#[derive(Debug, Clone, Copy)]
pub struct Coefficients {
    /// Log modulus of the coefficient on the left-normalized direction.
    pub a1: f64,
    /// Argument of the coefficient on the left-normalized direction.
    pub b1: f64,
    /// Log modulus of the coefficient on the right-normalized direction.
    pub a2: f64,
    /// Argument of the coefficient on the right-normalized direction.
    pub b2: f64,
    /// Relative residual of the fit in the row-scaled norm.
    pub fit_residual: f64,
}

impl Coefficients {
    /// Complex coefficient of the left-normalized direction.
    pub fn c1(&self) -> C64 {
        C64::from_polar(self.a1.exp(), self.b1)
    }

    /// Complex coefficient of the right-normalized direction.
    pub fn c2(&self) -> C64 {
        C64::from_polar(self.a2.exp(), self.b2)
    }
}

/// Translation and phase of a modulation-family member.
#[derive(Debug, Clone, Copy)]
pub struct ModulationPrediction {
    /// Spatial translation of the profile.
    pub shift: f64,
    /// Overall phase, wrapped into `(-pi, pi]`.
    pub phase: f64,
}

/// Applies the dressing transform at `z` using the kernel vector
/// `(phi1, phi2)` of the spatial problem for `q`.
///
/// The map is an involution: feeding the returned push-forward vector back
/// in recovers the original field. The push-forward solves the spatial
/// problem of the transformed field at the same `z` and grows like
/// `exp(eta |x|)` where the input decayed, so each point is evaluated in a
/// locally rescaled form that tolerates inputs near the underflow edge.
pub fn bt_forward(
    q: &[C64],
    phi1: &[C64],
    phi2: &[C64],
    grid: &Grid,
    z: C64,
) -> Result<BtOutput> {
    grid.check(q)?;
    grid.check(phi1)?;
    grid.check(phi2)?;
    let eta = (z * z).im;
    if eta == 0.0 {
        return Err(DnlsError::InvalidParameter(
            "dressing parameter must have Im(z^2) != 0".into(),
        ));
    }
    let gain = -4.0 * eta;
    let zb = z.conj();
    let n = grid.n();
    let mut field = Vec::with_capacity(n);
    let mut vec1 = Vec::with_capacity(n);
    let mut vec2 = Vec::with_capacity(n);
    for j in 0..n {
        let m = phi1[j].norm().max(phi2[j].norm());
        if m < 1e-300 {
            return Err(DnlsError::ZeroVector(j));
        }
        let u1 = phi1[j] / m;
        let u2 = phi2[j] / m;
        let d1 = z * u1.norm_sqr() + zb * u2.norm_sqr();
        let d2 = d1.conj();
        let ratio = d2 / d1;
        field.push(ratio * ratio * (-q[j] + gain * u1 * u2.conj() / d2));
        vec1.push(u2.conj() / (d1 * m));
        vec2.push(u1.conj() / (d2 * m));
    }
    Ok(BtOutput { field, vec1, vec2 })
}

/// Strips the bound state attached to `eig` from `q0` by dressing with its
/// normalized eigenvector.
///
/// The output field carries no eigenvalue near `eig.z` and is small exactly
/// when `q0` is a perturbed one-soliton profile at that eigenvalue.
pub fn bt_down(q0: &[C64], eig: &EigenPair, grid: &Grid) -> Result<BtOutput> {
    bt_forward(q0, &eig.phi1, &eig.phi2, grid, eig.z)
}

/// Rebuilds the one-soliton component on top of the stripped field `q1`
/// from the coefficient weights of its Jost expansion.
///
/// The kernel vector is the combination of the carrier-restored Jost
/// directions of `mu` selected by `coeffs`; the time slice is the one `mu`
/// was solved on.
pub fn bt_up(
    q1: &[C64],
    mu: &MatrixField,
    coeffs: &Coefficients,
    grid: &Grid,
    z: C64,
) -> Result<BtOutput> {
    let (v1, v2) = jost_combination(mu, grid, z, coeffs.c1(), coeffs.c2())?;
    bt_forward(q1, &v1, &v2, grid, z)
}

/// Kernel vector of the zero-field spatial problem at `(t, z)`, scaled per
/// point by its dominant exponential so neither component overflows.
///
/// Dressing the zero field with this vector produces the exact one-soliton
/// profile at time `t`.
pub fn vacuum_seed(grid: &Grid, t: f64, z: C64) -> (Vec<C64>, Vec<C64>) {
    let z2 = z * z;
    let z4 = z2 * z2;
    let i = C64::new(0.0, 1.0);
    let n = grid.n();
    let mut p1 = Vec::with_capacity(n);
    let mut p2 = Vec::with_capacity(n);
    for j in 0..n {
        let theta = z2 * grid.x(j) + 2.0 * z4 * t;
        let e1 = -i * theta;
        let e2 = i * theta;
        let m = e1.re.max(e2.re);
        p1.push((e1 - m).exp());
        p2.push((e2 - m).exp());
    }
    (p1, p2)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .fold(C64::new(0.0, 0.0), |s, v| s + v)
}

/// Converts complex expansion weights into log-polar coefficients.
///
/// A vanishing weight has no log modulus and means the vector lost one Jost
/// direction entirely, so it is reported as an error rather than mapped to
/// negative infinity.
pub fn coefficients_from_weights(c1: C64, c2: C64, fit_residual: f64) -> Result<Coefficients> {
    if c1.norm() == 0.0 {
        return Err(DnlsError::ZeroCoefficient { index: 1 });
    }
    if c2.norm() == 0.0 {
        return Err(DnlsError::ZeroCoefficient { index: 2 });
    }
    Ok(Coefficients {
        a1: c1.norm().ln(),
        b1: c1.arg(),
        a2: c2.norm().ln(),
        b2: c2.arg(),
        fit_residual,
    })
}

/// Expands `(phi1, phi2)` in the two carrier-restored Jost directions of
/// `mu` at `z` by weighted least squares.
///
/// All three vectors grow exponentially in some direction, so every grid
/// point contributes one row scaled by the inverse of its largest entry;
/// without that scaling the fit would see only the domain edges. The
/// returned residual is relative to the scaled target and is at round-off
/// level exactly when the vector lies in the span.
pub fn match_coefficients(
    phi1: &[C64],
    phi2: &[C64],
    mu: &MatrixField,
    grid: &Grid,
    z: C64,
) -> Result<Coefficients> {
    grid.check(phi1)?;
    grid.check(phi2)?;
    grid.check(&mu.m11)?;
    let iz2 = C64::new(0.0, 1.0) * z * z;
    let n = grid.n();
    let mut v1 = Vec::with_capacity(2 * n);
    let mut v2 = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(2 * n);
    for j in 0..n {
        let x = grid.x(j);
        let cp = (-iz2 * x).exp();
        let cm = (iz2 * x).exp();
        let bp = [cp * mu.m11[j], cp * mu.m21[j]];
        let bm = [cm * mu.m12[j], cm * mu.m22[j]];
        let ph = [phi1[j], phi2[j]];
        let scale = bp[0].norm().max(bp[1].norm())
            + bm[0].norm().max(bm[1].norm())
            + ph[0].norm().max(ph[1].norm());
        let w = if scale > 0.0 { 1.0 / scale } else { 0.0 };
        for r in 0..2 {
            v1.push(w * bp[r]);
            v2.push(w * bm[r]);
            y.push(w * ph[r]);
        }
    }
    let g11 = dot(&v1, &v1);
    let g12 = dot(&v1, &v2);
    let g21 = dot(&v2, &v1);
    let g22 = dot(&v2, &v2);
    let r1 = dot(&v1, &y);
    let r2 = dot(&v2, &y);
    let det = g11 * g22 - g12 * g21;
    if det.norm() == 0.0 {
        return Err(DnlsError::Invariant(
            "matching basis is degenerate".into(),
        ));
    }
    let c1 = (g22 * r1 - g12 * r2) / det;
    let c2 = (g11 * r2 - g21 * r1) / det;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..y.len() {
        num += (c1 * v1[j] + c2 * v2[j] - y[j]).norm_sqr();
        den += y[j].norm_sqr();
    }
    let fit_residual = if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    };
    coefficients_from_weights(c1, c2, fit_residual)
}

/// Linear combination `c1 b+ + c2 b-` of the carrier-restored Jost
/// directions of `mu` at `z`, on the grid.
pub fn jost_combination(
    mu: &MatrixField,
    grid: &Grid,
    z: C64,
    c1: C64,
    c2: C64,
) -> Result<(Vec<C64>, Vec<C64>)> {
    grid.check(&mu.m11)?;
    let iz2 = C64::new(0.0, 1.0) * z * z;
    let n = grid.n();
    let mut out1 = Vec::with_capacity(n);
    let mut out2 = Vec::with_capacity(n);
    for j in 0..n {
        let x = grid.x(j);
        let cp = c1 * (-iz2 * x).exp();
        let cm = c2 * (iz2 * x).exp();
        out1.push(cp * mu.m11[j] + cm * mu.m12[j]);
        out2.push(cp * mu.m21[j] + cm * mu.m22[j]);
    }
    Ok((out1, out2))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(b: f64) -> f64 {
    let tau = 2.0 * PI;
    let mut v = b % tau;
    if v > PI {
        v -= tau;
    } else if v <= -PI {
        v += tau;
    }
    v
}

/// Translation and phase of the modulation-family member selected by the
/// matching coefficients.
///
/// The coefficient log moduli fix the translation, their arguments fix the
/// phase up to the translation-induced carrier shift, and the phase is
/// wrapped into `(-pi, pi]`.
pub fn predict_modulation(coeffs: &Coefficients, z: C64) -> Result<ModulationPrediction> {
    let z2 = z * z;
    let (xi, eta) = (z2.re, z2.im);
    if eta == 0.0 {
        return Err(DnlsError::InvalidParameter(
            "modulation prediction needs Im(z^2) != 0".into(),
        ));
    }
    let shift = (coeffs.a1 - coeffs.a2) / (2.0 * eta);
    let phase = wrap_angle(coeffs.b1 - coeffs.b2 + 2.0 * xi * shift);
    Ok(ModulationPrediction { shift, phase })
}
