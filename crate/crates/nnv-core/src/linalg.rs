//! Small dense helpers on top of `nalgebra`.

use nalgebra::DMatrix;

pub fn matvec(w: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.nrows()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, xj) in x.iter().enumerate() {
            s += w[(i, j)] * xj;
        }
        *o = s;
    }
    out
}

/// `W x + b`.
pub fn affine(w: &DMatrix<f64>, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = matvec(w, x);
    for (o, bi) in out.iter_mut().zip(b) {
        *o += bi;
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn pos(x: f64) -> f64 {
    x.max(0.0)
}

pub fn neg(x: f64) -> f64 {
    x.min(0.0)
}

pub fn mat_pos(w: &DMatrix<f64>) -> DMatrix<f64> {
    w.map(pos)
}

pub fn mat_neg(w: &DMatrix<f64>) -> DMatrix<f64> {
    w.map(neg)
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

pub fn row(w: &DMatrix<f64>, i: usize) -> Vec<f64> {
    (0..w.ncols()).map(|j| w[(i, j)]).collect()
}

pub fn inf_norm_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
