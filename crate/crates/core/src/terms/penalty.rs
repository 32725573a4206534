use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// The `(size − order) × size` matrix of `order`-th differences.
pub fn difference_matrix(size: usize, order: usize) -> Result<DMatrix<f64>> {
    if order < 1 || size <= order {
        return Err(Error::InvalidParameter(format!(
            "difference penalty needs size > order >= 1, got size {size}, order {order}"
        )));
    }
    let mut d = DMatrix::<f64>::identity(size, size);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        d = DMatrix::from_fn(rows, size, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    Ok(d)
}

/// `Dₖᵀ Dₖ`, rank `size − order`.
pub fn difference_penalty(size: usize, order: usize) -> Result<DMatrix<f64>> {
    let d = difference_matrix(size, order)?;
    Ok(d.transpose() * d)
}
