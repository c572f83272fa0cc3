//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};

use crate::Vec3;

pub fn centroid(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return Vec3::zeros();
    }
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// Covariance (unnormalized scatter) of a point set around its centroid.
pub fn scatter(points: &[Vec3]) -> Matrix3<f64> {
    let c = centroid(points);
    points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - c;
        acc + d * d.transpose()
    })
}

/// Eigen-decomposition of the scatter matrix, eigenpairs sorted by
/// descending eigenvalue.
pub fn principal_axes(points: &[Vec3]) -> [(f64, Vec3); 3] {
    let eig = SymmetricEigen::new(scatter(points));
    let mut pairs: Vec<(f64, Vec3)> = (0..3)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    [pairs[0], pairs[1], pairs[2]]
}

/// Best-fit plane normal (direction of least scatter) and the ratio of the
/// second to the first principal value, which is ~0 for collinear input.
pub fn plane_fit(points: &[Vec3]) -> (Vec3, f64) {
    let axes = principal_axes(points);
    let spread = if axes[0].0 > 0.0 {
        axes[1].0.max(0.0) / axes[0].0
    } else {
        0.0
    };
    (axes[2].1.normalize(), spread)
}

/// Any unit vector orthogonal to `n`, chosen deterministically.
pub fn orthogonal_unit(n: &Vec3) -> Vec3 {
    let pick = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    n.cross(&pick).normalize()
}

/// Rotation by `angle` radians about unit `axis` (Rodrigues).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Matrix3<f64> {
    let a = axis.normalize();
    let k = a.cross_matrix();
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Sorts singular triplets of a thin SVD by descending singular value.
/// Returns `(sigma, v_columns)` where `v_columns` is `ncols × r`.
pub fn sorted_right_singular(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(m.ncols(), order.len());
    for (col, &i) in order.iter().enumerate() {
        v.set_column(col, &v_t.row(i).transpose());
    }
    (sigma, v)
}
