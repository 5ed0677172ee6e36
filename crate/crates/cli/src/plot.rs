//! Plot-ready CSV: eigenvalue loci of sampled Jacobians and the unit-circle
//! trace of the cone `δxᵀPδx ≤ 0` for planar storages.

use std::f64::consts::PI;
use std::fmt::Write;

use domcert_core::{eig_general, Matrix, SymMatrix};

const ARC_POINTS: usize = 181;

/// One row per eigenvalue: `sample,re,im`.
pub fn locus_csv(samples: &[Matrix<f64>]) -> anyhow::Result<String> {
    let mut out = String::from("sample,re,im\n");
    for (k, a) in samples.iter().enumerate() {
        for z in eig_general(a)?.eigenvalues {
            writeln!(out, "{k},{:.11e},{:.11e}", z.re, z.im).unwrap();
        }
    }
    Ok(out)
}

/// Arcs of the unit circle on which `V(θ) = [cos θ, sin θ] P [cos θ, sin θ]ᵀ ≤ 0`.
/// Arc endpoints are the exact zeros of `V`.
pub fn cone_arcs(p: &SymMatrix<f64>) -> anyhow::Result<Vec<Vec<(f64, f64)>>> {
    anyhow::ensure!(p.n() == 2, "cone boundary needs a 2x2 storage, got {}x{}", p.n(), p.n());
    // V(θ) = a + b cos 2θ + c sin 2θ
    let a = 0.5 * (p.get(0, 0) + p.get(1, 1));
    let b = 0.5 * (p.get(0, 0) - p.get(1, 1));
    let c = p.get(0, 1);
    let r = b.hypot(c);
    let tol = 1e-12 * (1.0 + p.as_matrix().max_abs());
    let sample = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        (0..ARC_POINTS)
            .map(|k| lo + (hi - lo) * k as f64 / (ARC_POINTS - 1) as f64)
            .map(|t| (t.cos(), t.sin()))
            .collect()
    };
    if a + r <= tol {
        return Ok(vec![sample(0.0, 2.0 * PI)]);
    }
    if a - r >= -tol || r <= tol {
        return Ok(Vec::new());
    }
    let phi = c.atan2(b);
    let alpha = (-a / r).clamp(-1.0, 1.0).acos();
    let lo = 0.5 * (phi + alpha);
    let hi = 0.5 * (phi + 2.0 * PI - alpha);
    Ok(vec![sample(lo, hi), sample(lo + PI, hi + PI)])
}

/// `arc,x,y` rows; empty body when `P` has no negative directions.
pub fn cone_csv(p: &SymMatrix<f64>) -> anyhow::Result<String> {
    let mut out = String::from("arc,x,y\n");
    for (k, arc) in cone_arcs(p)?.iter().enumerate() {
        for (x, y) in arc {
            writeln!(out, "{k},{x:.11e},{y:.11e}").unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[[f64; 2]; 2]) -> SymMatrix<f64> {
        SymMatrix::from_f64_rows(rows).unwrap()
    }

    #[test]
    fn definite_storages_give_empty_or_full_circle() {
        assert!(cone_arcs(&SymMatrix::identity(2)).unwrap().is_empty());
        let full = cone_arcs(&sym(&[[-1.0, 0.0], [0.0, -1.0]])).unwrap();
        assert_eq!(full.len(), 1);
        let (x0, y0) = full[0][0];
        let (x1, y1) = *full[0].last().unwrap();
        assert!((x0 - x1).abs() < 1e-12 && (y0 - y1).abs() < 1e-12);
    }

    #[test]
    fn arc_ends_are_zeros_and_interior_is_negative() {
        let p = sym(&[[-5.1987, 3.6260], [3.6260, 6.1987]]);
        let arcs = cone_arcs(&p).unwrap();
        assert_eq!(arcs.len(), 2);
        for arc in &arcs {
            for (k, &(x, y)) in arc.iter().enumerate() {
                let v = p.quad_form(&[x, y]);
                if k == 0 || k == arc.len() - 1 {
                    assert!(v.abs() < 1e-9, "endpoint value {v}");
                } else {
                    assert!(v < 0.0, "interior value {v}");
                }
            }
        }
    }

    #[test]
    fn indefinite_diagonal_storage_cone_is_around_the_first_axis() {
        let arcs = cone_arcs(&sym(&[[-1.0, 0.0], [0.0, 1.0]])).unwrap();
        let mid = arcs[0][ARC_POINTS / 2];
        assert!(mid.0.abs() > 0.99, "{mid:?}");
        assert!((arcs[0][0].0.abs() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn locus_lists_every_eigenvalue() {
        let a = Matrix::from_f64_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let csv = locus_csv(&[a.clone(), a]).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
    }

    #[test]
    fn cone_needs_planar_storage() {
        assert!(cone_csv(&SymMatrix::identity(3)).is_err());
    }
}
