//! Dense linear-algebra helpers shared by the window models and the width
//! computations. Vectors are laid out point-major; a "block" is a run of
//! consecutive coordinates carrying the Euclidean fiber norm.

use nalgebra::DMatrix;

/// Relative singular-value threshold used for every rank or nullity.
pub const RANK_TOL: f64 = 1e-8;

/// Mixed norm: ℓ^p over blocks of Euclidean norms. `p = ∞` gives the max.
pub fn block_norm(x: &[f64], block: usize, p: f64) -> f64 {
    debug_assert!(block > 0 && x.len() % block == 0);
    let norms = x.chunks(block).map(|b| b.iter().map(|t| t * t).sum::<f64>().sqrt());
    if p.is_infinite() {
        norms.fold(0.0, f64::max)
    } else if p == 1.0 {
        norms.sum()
    } else if p == 2.0 {
        x.iter().map(|t| t * t).sum::<f64>().sqrt()
    } else {
        let norms: Vec<f64> = norms.collect();
        let top = norms.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return 0.0;
        }
        top * norms.iter().map(|n| (n / top).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `Σ_blocks ‖x_b‖^p` for finite `p`.
pub fn block_norm_pow(x: &[f64], block: usize, p: f64) -> f64 {
    x.chunks(block)
        .map(|b| b.iter().map(|t| t * t).sum::<f64>().sqrt().powf(p))
        .sum()
}

/// Conjugate exponent with `1 ↔ ∞`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Thin SVD `(U, σ, V)` with `σ` sorted descending.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> Svd {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Svd {
            u: DMatrix::zeros(r, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(c, 0),
        };
    }
    let s = to_faer(m).thin_svd().expect("SVD converges");
    let d = s.S().column_vector();
    let mut order: Vec<usize> = (0..d.nrows()).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let sigma = order.iter().map(|&i| d[i]).collect();
    let (fu, fv) = (s.U(), s.V());
    let u = DMatrix::from_fn(r, order.len(), |i, j| fu[(i, order[j])]);
    let v = DMatrix::from_fn(c, order.len(), |i, j| fv[(i, order[j])]);
    Svd { u, sigma, v }
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn sorted_desc(mut s: Vec<f64>) -> Vec<f64> {
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values of a complex matrix, descending.
pub fn complex_singular_values(m: &DMatrix<num_complex::Complex64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let f = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im));
    sorted_desc(f.singular_values().expect("SVD converges"))
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    sorted_desc(to_faer(m).singular_values().expect("SVD converges"))
}

/// Number of singular values above `RANK_TOL * σ_max`.
pub fn numerical_rank(sigma: &[f64]) -> usize {
    let top = sigma.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOL * top).count()
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    numerical_rank(&singular_values(m))
}

/// Orthonormal basis of the column space.
pub fn column_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let s = svd(m);
    let k = numerical_rank(&s.sigma);
    s.u.columns(0, k).into_owned()
}

/// Orthonormal basis of the null space, computed from a square zero-padded
/// SVD so that the full right singular basis is available.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 {
        return DMatrix::identity(c, c);
    }
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.rows_mut(0, r).copy_from(m);
        p
    } else {
        m.clone()
    };
    let s = svd(&padded);
    let top = s.sigma.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..s.sigma.len())
        .filter(|&i| top == 0.0 || s.sigma[i] <= RANK_TOL * top)
        .collect();
    DMatrix::from_fn(c, keep.len(), |i, j| s.v[(i, keep[j])])
}

/// Splits the nonzero pattern of `m` into connected row/column components.
/// Each component lists its rows and columns in increasing order; zero rows
/// and zero columns belong to no component.
pub fn components(m: &DMatrix<f64>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (r, c) = m.shape();
    let mut parent: Vec<usize> = (0..r + c).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut live = vec![false; r + c];
    for j in 0..c {
        for i in 0..r {
            if m[(i, j)] != 0.0 {
                live[i] = true;
                live[r + j] = true;
                let a = find(&mut parent, i);
                let b = find(&mut parent, r + j);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for x in 0..r + c {
        if !live[x] {
            continue;
        }
        let root = find(&mut parent, x);
        let entry = groups.entry(root).or_default();
        if x < r {
            entry.0.push(x);
        } else {
            entry.1.push(x - r);
        }
    }
    groups.into_values().collect()
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norms() {
        let x = [3.0, 4.0, 0.0, 1.0];
        assert_relative_eq!(block_norm(&x, 1, 1.0), 8.0);
        assert_relative_eq!(block_norm(&x, 2, 1.0), 6.0);
        assert_relative_eq!(block_norm(&x, 2, f64::INFINITY), 5.0);
        assert_relative_eq!(block_norm(&x, 1, 2.0), 26f64.sqrt());
        assert_relative_eq!(block_norm(&x, 1, 3.0), (27.0f64 + 64.0 + 1.0).cbrt());
        assert_eq!(conjugate(1.0), f64::INFINITY);
        assert_eq!(conjugate(2.0), 2.0);
        assert_relative_eq!(conjugate(3.0), 1.5);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&m);
        assert_eq!(n.ncols(), 2);
        assert!((&m * &n).norm() < 1e-12);
        assert!((n.transpose() * &n - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn svd_with_clustered_values() {
        // rows of an orthonormal basis of the sum-zero vectors in K^7
        let mut f = DMatrix::zeros(7, 6);
        for j in 0..6 {
            f[(j, j)] = 0.5;
            f[(j + 1, j)] = -0.5;
        }
        let q = column_basis(&f);
        let m = q.rows(0, 6).into_owned();
        let s = svd(&m);
        let back = &s.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.sigma.clone())) * s.v.transpose();
        assert!((back - &m).norm() < 1e-12);
        assert!(s.sigma[0] <= 1.0 + 1e-12);
        assert_relative_eq!(s.sigma[5], 7f64.sqrt().recip(), epsilon = 1e-12);
    }

    #[test]
    fn split_components() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 3.0]);
        let c = components(&m);
        assert_eq!(c, vec![(vec![0], vec![0]), (vec![1, 2], vec![2])]);
    }
}
