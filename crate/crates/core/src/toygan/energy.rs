use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

// mean Euclidean distance over all column pairs; rows are summed in
// parallel and reduced in index order so the result does not depend on
// scheduling
fn mean_pair_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let dim = a.nrows();
    let row_sums: Vec<f64> = (0..a.ncols())
        .into_par_iter()
        .map(|i| {
            let ai = a.column(i);
            let mut s = 0.0;
            for j in 0..b.ncols() {
                let bj = b.column(j);
                let mut d2 = 0.0;
                for k in 0..dim {
                    let d = ai[k] - bj[k];
                    d2 += d * d;
                }
                s += d2.sqrt();
            }
            s
        })
        .collect();
    row_sums.iter().sum::<f64>() / (a.ncols() as f64 * b.ncols() as f64)
}

/// Energy distance `2E‖a−b‖ − E‖a−a′‖ − E‖b−b′‖` between two sample sets
/// stored as `dim × n` matrices. All pairs enter the averages (including
/// `a = a′`), so identical sets give exactly zero.
pub fn energy_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Err(Error::Empty("sample set"));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
            context: "energy distance samples",
        });
    }
    let cross = mean_pair_distance(a, b);
    let within_a = mean_pair_distance(a, a);
    let within_b = mean_pair_distance(b, b);
    Ok(2.0 * cross - within_a - within_b)
}
