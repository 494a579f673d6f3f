//! Small fixed-size helpers shared by the covariance and solver modules.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};

pub type Mat2 = Matrix2<f64>;
pub type Mat4 = Matrix4<f64>;
pub type Vec4 = nalgebra::Vector4<f64>;

/// Symplectic form for the ordering (x_A, p_A, x_B, p_B).
pub fn omega() -> Mat4 {
    Mat4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

pub fn rotation(phi: f64) -> Mat2 {
    let (s, c) = phi.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Single-mode squeeze `diag(e^g, e^-g)`.
pub fn squeeze(gamma: f64) -> Mat2 {
    Mat2::new(gamma.exp(), 0.0, 0.0, (-gamma).exp())
}

pub fn direct_sum(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
    m
}

/// Sub-block on rows/cols `(i, j)` of a 4x4 matrix.
pub fn sub2(m: &Mat4, i: usize, j: usize) -> Mat2 {
    Mat2::new(m[(i, i)], m[(i, j)], m[(j, i)], m[(j, j)])
}

pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Smallest eigenvalue of a symmetric 4x4 matrix.
pub fn min_eigenvalue4(m: &Mat4) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

/// Eigen-angle of a symmetric 2x2 matrix: the angle of the eigenvector of
/// the larger eigenvalue, in `(-pi/2, pi/2]`.
pub fn principal_angle(m: &Mat2) -> f64 {
    0.5 * (2.0 * m[(0, 1)]).atan2(m[(0, 0)] - m[(1, 1)])
}

/// Inverse square root of a 2x2 symmetric positive matrix with unit determinant.
/// The result is itself symplectic.
pub fn inv_sqrt_unimodular(k: &Mat2) -> Mat2 {
    // For det K = 1, sqrt(K) = (K + I) / sqrt(tr K + 2) and K^-1 = adj(K).
    let adj = Mat2::new(k[(1, 1)], -k[(0, 1)], -k[(1, 0)], k[(0, 0)]);
    let t = k.trace();
    (adj + Mat2::identity()) / (t + 2.0).sqrt()
}

/// SVD of a 2x2 matrix with proper rotations: `m = U diag(s1, s2) W^T` where
/// `U`, `W` have determinant +1, `s1 >= |s2|` and `sign(s2) = sign(det m)`.
pub fn signed_svd2(m: &Mat2) -> (Mat2, f64, f64, Mat2) {
    let svd = m.svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut w = svd.v_t.expect("v_t requested").transpose();
    let (mut s1, mut s2) = (svd.singular_values[0], svd.singular_values[1]);
    if s1 < s2 {
        std::mem::swap(&mut s1, &mut s2);
        u.swap_columns(0, 1);
        w.swap_columns(0, 1);
    }
    if u.determinant() < 0.0 {
        u.column_mut(1).neg_mut();
        s2 = -s2;
    }
    if w.determinant() < 0.0 {
        w.column_mut(1).neg_mut();
        s2 = -s2;
    }
    (u, s1, s2, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_svd_reconstructs_with_rotations() {
        for m in [
            Mat2::new(0.3, -0.7, 0.2, 0.1),
            Mat2::new(0.3, 0.7, 0.2, -0.1),
            Mat2::new(0.0, 0.5, 0.4, 0.0),
            Mat2::new(1.0, 0.0, 0.0, -2.0),
        ] {
            let (u, s1, s2, w) = signed_svd2(&m);
            let back = u * Mat2::new(s1, 0.0, 0.0, s2) * w.transpose();
            assert!((back - m).abs().max() < 1e-14);
            assert!((u.determinant() - 1.0).abs() < 1e-14);
            assert!((w.determinant() - 1.0).abs() < 1e-14);
            assert!(s1 >= s2.abs());
            assert_eq!(s2 < 0.0, m.determinant() < 0.0);
        }
    }

    #[test]
    fn inverse_square_root_whitens() {
        let k = Mat2::new(2.0, 0.6, 0.6, 0.68);
        let k = k / k.determinant().sqrt();
        let l = inv_sqrt_unimodular(&k);
        let white = l * k * l.transpose();
        assert!((white - Mat2::identity()).abs().max() < 1e-14);
        assert!((l.determinant() - 1.0).abs() < 1e-14);
    }
}
