use alloc::vec::Vec;

use num_complex::Complex64;

use super::two_atom::TwoAtomState;
use crate::error::{Error, Result};
use crate::math::sqrt;

const MAX_SWEEPS: usize = 60;
const ORTHOGONALITY_TOL: f64 = 1e-15;

/// Schmidt coefficients of the normalized kernel, in descending order.
///
/// These are the singular values of the matrix `Ψ(x_i, y_j) dx`, computed by
/// one-sided (Hestenes) Jacobi rotations on its columns. A single nonzero
/// coefficient means the state is a product.
pub fn schmidt_spectrum(state: &TwoAtomState) -> Result<Vec<f64>> {
    let kernel = state.kernel();
    let n = kernel.grid().len();
    let dx = kernel.grid().spacing();
    let frob = kernel.norm_sq();
    if !(frob > 0.0) || !frob.is_finite() {
        return Err(Error::NumericalDegeneracy("kernel is not normalizable".into()));
    }
    let scale = dx / sqrt(frob);
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|i| kernel.at(i, j) * scale).collect())
        .collect();
    // columns carrying less than this squared norm cannot change the spectrum
    let negligible = 1e-34;

    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum()).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            if norms[p] < negligible {
                continue;
            }
            for q in (p + 1)..n {
                if norms[q] < negligible {
                    continue;
                }
                let (alpha, beta) = (norms[p], norms[q]);
                let gamma: Complex64 = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let g = gamma.norm();
                if g <= ORTHOGONALITY_TOL * sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                // rephase column q so that <p|q> is real and positive
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (crate::math::abs(zeta) + sqrt(1.0 + zeta * zeta));
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let bq = *b * phase;
                    let ap = *a;
                    *a = ap * c - bq * s;
                    *b = ap * s + bq * c;
                }
                norms[p] = alpha - t * g;
                norms[q] = beta + t * g;
            }
        }
        // refresh accumulated norm updates
        for (nrm, c) in norms.iter_mut().zip(&cols) {
            *nrm = c.iter().map(|v| v.norm_sqr()).sum();
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = norms.into_iter().map(|v| sqrt(v.max(0.0))).collect();
    sv.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::{make_two_atom_gaussian, SpatialGrid};

    #[test]
    fn product_state_has_one_coefficient() {
        let g = SpatialGrid::centered(10.0, 64).unwrap();
        let s = make_two_atom_gaussian(1.5, 1.5, &g).unwrap();
        let sv = schmidt_spectrum(&s).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-12);
        assert!(sv[1] < 1e-6);
    }

    #[test]
    fn squares_sum_to_one() {
        let g = SpatialGrid::centered(16.0, 64).unwrap();
        let s = make_two_atom_gaussian(2.0, 1.0, &g).unwrap();
        let sv = schmidt_spectrum(&s).unwrap();
        let total: f64 = sv.iter().map(|v| v * v).sum();
        assert!((total - 1.0).abs() < 1e-8);
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    }
}
