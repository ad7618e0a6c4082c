use nalgebra::{DMatrix, DVector};

use super::fit::COLLINEARITY_FLOOR;
use super::{Dataset, ModelIndex};
use crate::error::LinModelError;

/// SSE of `model` from a from-scratch Householder QR solve on the centered
/// original-scale columns. Shares nothing with [`FitState`](super::FitState)
/// beyond the dataset, so it serves as the reference for incremental updates.
pub fn sse_direct(data: &Dataset, model: &ModelIndex) -> Result<f64, LinModelError> {
    let cols: Vec<usize> = model.iter_ones().collect();
    let k = cols.len();
    let n = data.n();
    let yc = DVector::from_vec(data.centered_response());
    if k == 0 {
        return Ok(yc.norm_squared());
    }
    if k + 2 > n {
        return Err(LinModelError::TooManyColumns { k, max: n - 2 });
    }
    let mut x = DMatrix::zeros(n, k);
    for (c, &j) in cols.iter().enumerate() {
        x.set_column(c, &DVector::from_vec(data.centered_column(j)));
    }
    let norms: Vec<f64> = (0..k).map(|c| x.column(c).norm()).collect();
    let qr = x.clone().qr();
    let r = qr.r();
    let bad: Vec<String> = (0..k)
        .filter(|&c| !(r[(c, c)].powi(2) > COLLINEARITY_FLOOR * norms[c].powi(2)))
        .map(|c| data.names()[cols[c]].clone())
        .collect();
    if !bad.is_empty() {
        return Err(LinModelError::RankDeficient { columns: bad });
    }
    let qty = qr.q().transpose() * &yc;
    let beta = r
        .solve_upper_triangular(&qty)
        .expect("diagonal checked above");
    let resid = yc - x * beta;
    Ok(resid.norm_squared())
}
