//! Small dense helpers: symmetric eigenvalues and a basis of the
//! zero-sum hyperplane.

use nalgebra::DMatrix;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Unnormalised Helmert contrasts for `R^k`: row `j` (for `j = 1..k`) is
/// `(1, …, 1, -j, 0, …)` with `j` leading ones. Rows are mutually orthogonal,
/// orthogonal to the all-ones vector, and row `j` has squared norm `j(j+1)`.
pub fn helmert_contrasts(k: usize) -> Vec<Vec<f64>> {
    (1..k)
        .map(|j| {
            let mut v = vec![0.0; k];
            v[..j].fill(1.0);
            v[j] = -(j as f64);
            v
        })
        .collect()
}

/// Quadratic form `Bᵀ Q B` for the orthonormal Helmert basis `B` of the
/// zero-sum hyperplane. Norms are divided out after the products, so
/// dyadic inputs stay exact on the diagonal.
pub fn restrict_to_zero_sum(q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = q.len();
    let u = helmert_contrasts(k);
    let qu: Vec<Vec<f64>> = u
        .iter()
        .map(|v| (0..k).map(|r| (0..k).map(|c| q[r][c] * v[c]).sum()).collect())
        .collect();
    let norm2 = |j: usize| ((j + 1) * (j + 2)) as f64;
    (0..k - 1)
        .map(|a| {
            (0..k - 1)
                .map(|b| {
                    let raw: f64 = (0..k).map(|r| u[a][r] * qu[b][r]).sum();
                    if a == b {
                        raw / norm2(a)
                    } else {
                        raw / (norm2(a) * norm2(b)).sqrt()
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_and_two_by_two() {
        let e = symmetric_eigenvalues(&[vec![3.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(e, vec![-1.0, 3.0]);
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let e = symmetric_eigenvalues(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert_relative_eq!(e[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_and_determinant_preserved() {
        let a = vec![
            vec![4.0, 1.0, -2.0],
            vec![1.0, 2.0, 0.5],
            vec![-2.0, 0.5, 3.0],
        ];
        let e = symmetric_eigenvalues(&a);
        assert_relative_eq!(e.iter().sum::<f64>(), 9.0, epsilon = 1e-12);
        let det = 4.0 * (2.0 * 3.0 - 0.25) - 1.0 * (3.0 + 1.0) + (-2.0) * (0.5 + 4.0);
        assert_relative_eq!(e.iter().product::<f64>(), det, epsilon = 1e-11);
    }

    #[test]
    fn helmert_rows_are_orthogonal_contrasts() {
        let u = helmert_contrasts(5);
        assert_eq!(u.len(), 4);
        for (j, a) in u.iter().enumerate() {
            assert_eq!(a.iter().sum::<f64>(), 0.0);
            let n2: f64 = a.iter().map(|v| v * v).sum();
            assert_eq!(n2, ((j + 1) * (j + 2)) as f64);
            for b in &u[j + 1..] {
                assert_eq!(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>(), 0.0);
            }
        }
    }

    #[test]
    fn identity_restricts_to_identity() {
        let k = 4;
        let id: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        let r = restrict_to_zero_sum(&id);
        for (i, row) in r.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_relative_eq!(*v, f64::from(u8::from(i == j)), epsilon = 1e-15);
            }
        }
    }
}
