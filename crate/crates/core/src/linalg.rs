//! Dense complex SVD. The decomposition runs in `faer`; inputs and outputs
//! stay in `nalgebra` types.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

fn to_faer(m: &DMatrix<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `M = U diag(s) V*` with `s` nonincreasing; returns `(s, U, V)`.
pub(crate) fn thin_svd(
    m: &DMatrix<Complex64>,
) -> Result<(Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>)> {
    let svd = to_faer(m)
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let p = s.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re).then(a.cmp(&b)));
    let sigma = order.iter().map(|&i| s[i].re).collect();
    let left = DMatrix::from_fn(u.nrows(), p, |r, c| u[(r, order[c])]);
    let right = DMatrix::from_fn(v.nrows(), p, |r, c| v[(r, order[c])]);
    Ok((sigma, left, right))
}

pub(crate) fn singular_values(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let s = to_faer(m)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    Ok(s)
}
