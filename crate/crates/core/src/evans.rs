//! Eigenvalue location for the spatial spectral problem by shooting from
//! both ends of the grid and matching at the origin.

use crate::error::{DnlsError, Result};
use crate::grid::{inner_product, Grid};
use crate::lax::fundamental_matrix;
use crate::spectral::upsample;
use crate::C64;

/// Outcome of the secant search for a discrete eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct EigenvalueResult {
    /// Located eigenvalue.
    pub z: C64,
    /// Secant iterations consumed.
    pub iterations: usize,
    /// Final mismatch determinant modulus.
    pub evans_abs: f64,
}

/// Eigenvalue together with its normalized decaying eigenvector.
#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Located eigenvalue.
    pub z: C64,
    /// First eigenvector component on the main grid.
    pub phi1: Vec<C64>,
    /// Second eigenvector component on the main grid.
    pub phi2: Vec<C64>,
    /// Secant iterations consumed.
    pub iterations: usize,
    /// Final mismatch determinant modulus.
    pub evans_abs: f64,
    /// Relative defect between the shooting halves at the matching point.
    pub matching_mismatch: f64,
}

/// Decaying solution assembled from the two shooting halves.
#[derive(Debug, Clone)]
pub struct Eigenvector {
    /// First component on the main grid.
    pub phi1: Vec<C64>,
    /// Second component on the main grid.
    pub phi2: Vec<C64>,
    /// Relative defect between the two halves at the matching point.
    pub matching_mismatch: f64,
}

fn check_finite(v: [C64; 2]) -> Result<()> {
    for c in v {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(DnlsError::Invariant(
                "shooting trajectory left the double-precision range".into(),
            ));
        }
    }
    Ok(())
}

/// Right-hand side for the left shot, carrier `exp(-i z^2 x)` removed.
fn rhs_left(q: C64, z: C64, p: [C64; 2]) -> [C64; 2] {
    let two_iz2 = C64::new(0.0, 2.0) * z * z;
    [z * q * p[1], -z * q.conj() * p[0] + two_iz2 * p[1]]
}

/// Right-hand side for the right shot, carrier `exp(i z^2 x)` removed.
fn rhs_right(q: C64, z: C64, p: [C64; 2]) -> [C64; 2] {
    let two_iz2 = C64::new(0.0, 2.0) * z * z;
    [-two_iz2 * p[0] + z * q * p[1], -z * q.conj() * p[0]]
}

fn rk4_step(
    f: impl Fn(C64, [C64; 2]) -> [C64; 2],
    qs: [C64; 3],
    v: [C64; 2],
    s: f64,
) -> [C64; 2] {
    let k1 = f(qs[0], v);
    let v2 = [v[0] + 0.5 * s * k1[0], v[1] + 0.5 * s * k1[1]];
    let k2 = f(qs[1], v2);
    let v3 = [v[0] + 0.5 * s * k2[0], v[1] + 0.5 * s * k2[1]];
    let k3 = f(qs[1], v3);
    let v4 = [v[0] + s * k3[0], v[1] + s * k3[1]];
    let k4 = f(qs[2], v4);
    [
        v[0] + s / 6.0 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
        v[1] + s / 6.0 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
    ]
}

/// Shoots both halves and returns the reduced endpoint vectors at `x = 0`,
/// optionally recording the trajectories (spacing `h/2`, left one ascending
/// from `-L/2`, right one descending from `+L/2`).
fn shoot(
    q: &[C64],
    grid: &Grid,
    z: C64,
    mut record: Option<(&mut Vec<[C64; 2]>, &mut Vec<[C64; 2]>)>,
) -> Result<([C64; 2], [C64; 2])> {
    grid.check(q)?;
    let n = grid.n();
    let q4 = upsample(q, 4);
    let n4 = 4 * n;
    let s = 0.5 * grid.h();

    let mut pl = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    if let Some((left, _)) = record.as_mut() {
        left.push(pl);
    }
    for k in 0..n {
        let j = 2 * k;
        let qs = [q4[j], q4[j + 1], q4[j + 2]];
        pl = rk4_step(|qq, v| rhs_left(qq, z, v), qs, pl, s);
        if let Some((left, _)) = record.as_mut() {
            left.push(pl);
        }
    }
    check_finite(pl)?;

    let mut pr = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    if let Some((_, right)) = record.as_mut() {
        right.push(pr);
    }
    for k in 0..n {
        let j = n4 - 2 * k;
        let qs = [q4[j % n4], q4[j - 1], q4[j - 2]];
        pr = rk4_step(|qq, v| rhs_right(qq, z, v), qs, pr, -s);
        if let Some((_, right)) = record.as_mut() {
            right.push(pr);
        }
    }
    check_finite(pr)?;
    Ok((pl, pr))
}

/// Mismatch determinant of the left and right decaying solutions at the
/// origin. Zeros in the open upper half of the `z^2` plane are discrete
/// eigenvalues; the zero field gives identically 1.
pub fn evans_function(q: &[C64], grid: &Grid, z: C64) -> Result<C64> {
    let (pl, pr) = shoot(q, grid, z, None)?;
    Ok(pl[0] * pr[1] - pr[0] * pl[1])
}

/// Secant refinement of an eigenvalue starting from `guess`.
///
/// Converges when either the mismatch modulus drops below `tol` or the
/// step shrinks below `1e-14`. A flat mismatch between the two current
/// iterates means the search cannot proceed (the zero field is the typical
/// cause); exhausting the iteration budget reports the last modulus seen.
pub fn secant_eigenvalue(
    q: &[C64],
    grid: &Grid,
    guess: C64,
    tol: f64,
) -> Result<EigenvalueResult> {
    if !guess.re.is_finite() || !guess.im.is_finite() {
        return Err(DnlsError::InvalidParameter(
            "eigenvalue guess must be finite".into(),
        ));
    }
    if !(tol >= 1e-12) {
        return Err(DnlsError::InvalidParameter(
            "eigenvalue tolerance must be at least 1e-12".into(),
        ));
    }
    let mut za = guess;
    let mut zb = guess * C64::new(1.0 + 1e-5, 0.0) + C64::new(0.0, 1e-5);
    let mut ea = evans_function(q, grid, za)?;
    let mut eb = evans_function(q, grid, zb)?;
    const MAX_ITER: usize = 50;
    for it in 0..MAX_ITER {
        if eb.norm() < tol {
            return Ok(EigenvalueResult {
                z: zb,
                iterations: it,
                evans_abs: eb.norm(),
            });
        }
        let denom = eb - ea;
        if denom.norm() == 0.0 {
            return Err(DnlsError::SecantStalled);
        }
        let step = eb * (zb - za) / denom;
        za = zb;
        ea = eb;
        zb -= step;
        eb = evans_function(q, grid, zb)?;
        if step.norm() < 1e-14 {
            return Ok(EigenvalueResult {
                z: zb,
                iterations: it + 1,
                evans_abs: eb.norm(),
            });
        }
    }
    Err(DnlsError::SecantBudget {
        iterations: MAX_ITER,
        last_abs: eb.norm(),
    })
}

/// Locates the discrete eigenvalue near `guess` and returns it together
/// with the matched, normalized decaying eigenvector.
///
/// A converged root with `Im z^2 <= 0` means the data left the region where
/// a localized eigenstate exists and is reported as an invariant failure.
pub fn find_eigenvalue(q: &[C64], grid: &Grid, guess: C64, tol: f64) -> Result<EigenPair> {
    let located = secant_eigenvalue(q, grid, guess, tol)?;
    if (located.z * located.z).im <= 0.0 {
        return Err(DnlsError::Invariant(format!(
            "eigenvalue search converged to {} with Im(z^2) <= 0",
            located.z
        )));
    }
    let vector = eigenvector(q, grid, located.z)?;
    let (phi1, phi2) = normalize_eigenvector(&vector.phi1, &vector.phi2, grid, located.z)?;
    Ok(EigenPair {
        z: located.z,
        phi1,
        phi2,
        iterations: located.iterations,
        evans_abs: located.evans_abs,
        matching_mismatch: vector.matching_mismatch,
    })
}

/// Assembles the decaying solution at an eigenvalue from the two shooting
/// trajectories, sampled on the main grid.
///
/// The right half is scaled onto the left half at the origin by least
/// squares; `matching_mismatch` is the relative defect left over, which is
/// at round-off level when `z` is an eigenvalue and O(1) otherwise.
pub fn eigenvector(q: &[C64], grid: &Grid, z: C64) -> Result<Eigenvector> {
    let n = grid.n();
    let mut traj_l: Vec<[C64; 2]> = Vec::with_capacity(n + 1);
    let mut traj_r: Vec<[C64; 2]> = Vec::with_capacity(n + 1);
    shoot(q, grid, z, Some((&mut traj_l, &mut traj_r)))?;
    traj_r.reverse();

    let iz2 = C64::new(0.0, 1.0) * z * z;
    let half = 0.5 * grid.h();
    // Restore the carriers; trajectory sample j sits at x = -L/2 + j h/2
    // on the left and x = j h/2 on the right.
    let phil: Vec<[C64; 2]> = traj_l
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let x = -0.5 * grid.length() + j as f64 * half;
            let c = (-iz2 * x).exp();
            [p[0] * c, p[1] * c]
        })
        .collect();
    let phir: Vec<[C64; 2]> = traj_r
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let x = j as f64 * half;
            let c = (iz2 * x).exp();
            [p[0] * c, p[1] * c]
        })
        .collect();

    let l0 = phil[n];
    let r0 = phir[0];
    let rr = r0[0].norm_sqr() + r0[1].norm_sqr();
    if rr == 0.0 {
        return Err(DnlsError::ZeroVector(0));
    }
    let scale = (l0[0] * r0[0].conj() + l0[1] * r0[1].conj()) / rr;
    let defect = ((l0[0] - scale * r0[0]).norm_sqr() + (l0[1] - scale * r0[1]).norm_sqr()).sqrt();
    let lnorm = (l0[0].norm_sqr() + l0[1].norm_sqr()).sqrt();
    let mismatch = if lnorm > 0.0 { defect / lnorm } else { defect };

    let mut phi1 = Vec::with_capacity(n);
    let mut phi2 = Vec::with_capacity(n);
    for k in 0..n / 2 {
        phi1.push(phil[2 * k][0]);
        phi2.push(phil[2 * k][1]);
    }
    for k in 0..n / 2 {
        phi1.push(scale * phir[2 * k][0]);
        phi2.push(scale * phir[2 * k][1]);
    }
    Ok(Eigenvector {
        phi1,
        phi2,
        matching_mismatch: mismatch,
    })
}

/// Rescales an eigenvector so its projection onto the analytic bound state
/// of the one-soliton background equals that bound state's squared norm.
/// This pins down the free complex factor left by the shooting assembly.
pub fn normalize_eigenvector(
    phi1: &[C64],
    phi2: &[C64],
    grid: &Grid,
    z: C64,
) -> Result<(Vec<C64>, Vec<C64>)> {
    grid.check(phi1)?;
    grid.check(phi2)?;
    let bound = fundamental_matrix(grid, z)?;
    let den = inner_product(phi1, &bound.m11, grid) + inner_product(phi2, &bound.m21, grid);
    if den.norm() == 0.0 {
        return Err(DnlsError::InvalidParameter(
            "eigenvector has no overlap with the bound state".into(),
        ));
    }
    let num = inner_product(&bound.m11, &bound.m11, grid)
        + inner_product(&bound.m21, &bound.m21, grid);
    let c = num / den;
    Ok((
        phi1.iter().map(|v| c * v).collect(),
        phi2.iter().map(|v| c * v).collect(),
    ))
}
