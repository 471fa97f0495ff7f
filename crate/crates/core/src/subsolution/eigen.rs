//! Closed-form largest eigenvalues of small symmetric matrices and the
//! algebraic inequality `½|w|²/ρ ≤ (d/2) λ_max[w⊗w/ρ − F − H]` for traceless
//! `F`, `H`.

use super::SubsolutionError;

/// Entrywise tolerance for accepting a dense matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest eigenvalue of a symmetric matrix in packed upper-triangular order
/// (`[a00, a01, a11]` for `d = 2`, `[a00, a01, a02, a11, a12, a22]` for `d = 3`).
#[inline]
pub fn lambda_max_packed(dim: usize, a: &[f64]) -> f64 {
    match dim {
        2 => {
            let (p, b, q) = (a[0], a[1], a[2]);
            0.5 * (p + q) + (0.5 * (p - q)).hypot(b)
        }
        3 => lambda_max3(a),
        _ => panic!("dimension must be 2 or 3"),
    }
}

// Trigonometric solution of the characteristic cubic on the shifted,
// normalized deviatoric matrix (Smith 1961).
fn lambda_max3(a: &[f64]) -> f64 {
    let (a00, a01, a02, a11, a12, a22) = (a[0], a[1], a[2], a[3], a[4], a[5]);
    let off = a01 * a01 + a02 * a02 + a12 * a12;
    let q = (a00 + a11 + a22) / 3.0;
    let (b00, b11, b22) = (a00 - q, a11 - q, a22 - q);
    let p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off;
    if p2 == 0.0 {
        return q;
    }
    if off == 0.0 {
        return a00.max(a11).max(a22);
    }
    let p = (p2 / 6.0).sqrt();
    let (c00, c11, c22) = (b00 / p, b11 / p, b22 / p);
    let (c01, c02, c12) = (a01 / p, a02 / p, a12 / p);
    let det = c00 * (c11 * c22 - c12 * c12) - c01 * (c01 * c22 - c12 * c02)
        + c02 * (c01 * c12 - c11 * c02);
    let r = (0.5 * det).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

/// Largest eigenvalue of a dense symmetric `d×d` matrix given row-wise.
pub fn lambda_max_sym(a: &[Vec<f64>]) -> Result<f64, SubsolutionError> {
    let d = a.len();
    if !(d == 2 || d == 3) || a.iter().any(|row| row.len() != d) {
        return Err(SubsolutionError::Matrix(format!(
            "expected a square 2×2 or 3×3 matrix, got {d} rows"
        )));
    }
    for i in 0..d {
        for j in i + 1..d {
            if (a[i][j] - a[j][i]).abs() > SYMMETRY_TOL {
                return Err(SubsolutionError::Matrix(format!(
                    "asymmetric entry ({i},{j}): {} vs {}",
                    a[i][j], a[j][i]
                )));
            }
        }
    }
    let mut packed = [0.0; 6];
    let mut c = 0;
    for i in 0..d {
        for j in i..d {
            packed[c] = 0.5 * (a[i][j] + a[j][i]);
            c += 1;
        }
    }
    Ok(lambda_max_packed(d, &packed[..c]))
}

/// Packed bracket `w⊗w/ρ − F − H`.
#[inline]
pub(crate) fn bracket(dim: usize, w: &[f64], rho: f64, f: &[f64], h: &[f64]) -> [f64; 6] {
    let mut out = [0.0; 6];
    let mut c = 0;
    for i in 0..dim {
        for j in i..dim {
            out[c] = w[i] * w[j] / rho - f[c] - h[c];
            c += 1;
        }
    }
    out
}

/// `(d/2) λ_max[w⊗w/ρ − F − H] − ½|w|²/ρ`; nonnegative whenever `F + H` is
/// traceless. `f` and `h` are packed.
pub fn relaxation_slack(w: &[f64], rho: f64, f: &[f64], h: &[f64]) -> f64 {
    let d = w.len();
    let b = bracket(d, w, rho, f, h);
    let kin = 0.5 * w.iter().map(|x| x * x).sum::<f64>() / rho;
    0.5 * d as f64 * lambda_max_packed(d, &b[..f.len()]) - kin
}

/// Whether the relaxation inequality holds up to `1e-12` relative to the
/// size of the inputs.
pub fn relaxation_inequality_check(w: &[f64], rho: f64, f: &[f64], h: &[f64]) -> bool {
    let scale = w.iter().map(|x| x * x).sum::<f64>() / rho
        + f.iter().chain(h).map(|x| x.abs()).sum::<f64>();
    relaxation_slack(w, rho, f, h) >= -1e-12 * scale.max(1.0)
}
