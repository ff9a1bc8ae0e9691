//! Dense kernels: Gram-Schmidt QR, triangular solves, hat diagonals,
//! thin SVD, centering, and small symmetric/general solves.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Relative tolerance used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Thin QR factors with `q` n x p and `r` p x p upper triangular.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: Array2<f64>,
    pub r: Array2<f64>,
}

/// Thin SVD truncated at the numerical rank.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Array2<f64>,
    pub d: Array1<f64>,
    pub v: Array2<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram-Schmidt with a second orthogonalization pass.
pub fn gram_schmidt_qr(x: ArrayView2<f64>) -> Result<QrFactors> {
    let (n, p) = x.dim();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut v: Vec<f64> = x.column(j).to_vec();
        let col_norm = dot(&v, &v).sqrt();
        for _pass in 0..2 {
            for (k, qk) in cols.iter().enumerate() {
                let c = dot(qk, &v);
                r[[k, j]] += c;
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if col_norm == 0.0 || norm < RANK_TOL * col_norm {
            return Err(Error::RankDeficient(j));
        }
        r[[j, j]] = norm;
        v.iter_mut().for_each(|vi| *vi /= norm);
        cols.push(v);
    }
    let q = Array2::from_shape_fn((n, p), |(i, j)| cols[j][i]);
    Ok(QrFactors { q, r })
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn back_solve(r: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let p = r.nrows();
    let mut x = b.to_owned();
    for i in (0..p).rev() {
        let d = r[[i, i]];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Singular(format!("zero diagonal at {i}")));
        }
        let mut s = x[i];
        for k in i + 1..p {
            s -= r[[i, k]] * x[k];
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_solve(l: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let p = l.nrows();
    let mut x = b.to_owned();
    for i in 0..p {
        let d = l[[i, i]];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Singular(format!("zero diagonal at {i}")));
        }
        let mut s = x[i];
        for k in 0..i {
            s -= l[[i, k]] * x[k];
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Inverse of an upper-triangular matrix.
pub fn upper_inverse(r: ArrayView2<f64>) -> Result<Array2<f64>> {
    let p = r.nrows();
    let mut inv = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut e = Array1::<f64>::zeros(p);
        e[j] = 1.0;
        let col = back_solve(r, e.view())?;
        inv.column_mut(j).assign(&col);
    }
    Ok(inv)
}

/// `(X'X)^{-1} = R^{-1} R^{-T}` from QR factors.
pub fn xtx_inverse(qr: &QrFactors) -> Result<Array2<f64>> {
    let ri = upper_inverse(qr.r.view())?;
    Ok(ri.dot(&ri.t()))
}

/// Squared row norms of Q.
pub fn hat_diagonals(qr: &QrFactors) -> Array1<f64> {
    qr.q.map_axis(Axis(1), |row| row.dot(&row))
}

/// Thin SVD. Singular values below `RANK_TOL * d1` are dropped.
pub fn thin_svd(x: ArrayView2<f64>) -> SvdFactors {
    let (n, p) = x.dim();
    let m = DMatrix::from_fn(n, p, |i, j| x[[i, j]]);
    let svd = m.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => unreachable!("factors were requested"),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let d1 = order
        .first()
        .map(|&k| svd.singular_values[k])
        .unwrap_or(0.0);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&k| d1 > 0.0 && svd.singular_values[k] > RANK_TOL * d1)
        .collect();
    let r = keep.len();
    SvdFactors {
        u: Array2::from_shape_fn((n, r), |(i, k)| u[(i, keep[k])]),
        d: Array1::from_shape_fn(r, |k| svd.singular_values[keep[k]]),
        v: Array2::from_shape_fn((p, r), |(j, k)| vt[(keep[k], j)]),
    }
}

/// Subtracts each column's mean.
pub fn center_columns(x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = x.to_owned();
    if x.nrows() == 0 {
        return out;
    }
    for mut col in out.columns_mut() {
        let m = col.mean().unwrap_or(0.0);
        col.mapv_inplace(|v| v - m);
    }
    out
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let p = a.nrows();
    let mut l = Array2::<f64>::zeros((p, p));
    let scale = (0..p).map(|i| a[[i, i]].abs()).fold(0.0, f64::max);
    for j in 0..p {
        let mut s = a[[j, j]];
        for k in 0..j {
            s -= l[[j, k]] * l[[j, k]];
        }
        if !(s > RANK_TOL * RANK_TOL * scale) {
            return Err(Error::Singular(format!(
                "matrix not positive definite at pivot {j}"
            )));
        }
        let d = s.sqrt();
        l[[j, j]] = d;
        for i in j + 1..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Solves `A x = b` for SPD `A`.
pub fn solve_spd(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let l = cholesky(a)?;
    let z = forward_solve(l.view(), b)?;
    back_solve(l.t(), z.view())
}

/// Inverse of an SPD matrix, symmetrized.
pub fn spd_inverse(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let l = cholesky(a)?;
    let p = a.nrows();
    let mut linv = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut e = Array1::<f64>::zeros(p);
        e[j] = 1.0;
        linv.column_mut(j).assign(&forward_solve(l.view(), e.view())?);
    }
    Ok(symmetrize(&linv.t().dot(&linv)))
}

/// Inverse of a general square matrix by Gauss-Jordan with partial pivoting.
pub fn inverse(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let p = a.nrows();
    let mut m = a.to_owned();
    let mut inv = Array2::<f64>::eye(p);
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for c in 0..p {
        let piv = (c..p)
            .max_by(|&i, &j| m[[i, c]].abs().total_cmp(&m[[j, c]].abs()))
            .unwrap_or(c);
        if !(m[[piv, c]].abs() > 1e-14 * scale) {
            return Err(Error::Singular(format!("no pivot in column {c}")));
        }
        if piv != c {
            for k in 0..p {
                m.swap([piv, k], [c, k]);
                inv.swap([piv, k], [c, k]);
            }
        }
        let d = m[[c, c]];
        for k in 0..p {
            m[[c, k]] /= d;
            inv[[c, k]] /= d;
        }
        for i in 0..p {
            if i == c {
                continue;
            }
            let f = m[[i, c]];
            if f == 0.0 {
                continue;
            }
            for k in 0..p {
                m[[i, k]] -= f * m[[c, k]];
                inv[[i, k]] -= f * inv[[c, k]];
            }
        }
    }
    Ok(inv)
}

/// `(A + A') / 2`.
pub fn symmetrize(a: &Array2<f64>) -> Array2<f64> {
    (a + &a.t()) * 0.5
}

/// `X' diag(w) X`.
pub fn weighted_gram(x: ArrayView2<f64>, w: ArrayView1<f64>) -> Array2<f64> {
    let xw = &x * &w.insert_axis(Axis(1));
    x.t().dot(&xw)
}

/// `A B A'` for a p x p sandwich.
pub fn sandwich(bread: &Array2<f64>, meat: &Array2<f64>) -> Array2<f64> {
    symmetrize(&bread.dot(meat).dot(&bread.t()))
}
