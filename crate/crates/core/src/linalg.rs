//! Dense symmetric positive-definite helpers over row-major `n × n` slices.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators keep the loop vectorizable
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// In-place lower Cholesky factor. The strict upper triangle is zeroed.
/// Returns `false` if the matrix is not numerically positive definite.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let (upto, after) = a.split_at_mut((j + 1) * n);
        let row_j = &mut upto[j * n..];
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0 && d.is_finite()) {
            return false;
        }
        let ljj = d.sqrt();
        row_j[j] = ljj;
        row_j[j + 1..].iter_mut().for_each(|v| *v = 0.0);
        let row_j = &row_j[..j];
        for row_i in after.chunks_exact_mut(n) {
            let s = row_i[j] - dot(&row_i[..j], row_j);
            row_i[j] = s / ljj;
        }
    }
    true
}

/// Solves `L z = b` in place.
pub(crate) fn forward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        b[i] = (b[i] - dot(row, &b[..i])) / l[i * n + i];
    }
}

/// Solves `Lᵀ z = b` in place.
pub(crate) fn backward_solve_transposed(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let zi = b[i] / l[i * n + i];
        b[i] = zi;
        let row = &l[i * n..i * n + i];
        for (bk, lik) in b[..i].iter_mut().zip(row) {
            *bk -= lik * zi;
        }
    }
}

/// `(L Lᵀ)⁻¹` as a full row-major matrix.
pub(crate) fn inverse_from_cholesky(l: &[f64], n: usize) -> Vec<f64> {
    // rows of U = L⁻ᵀ are the columns of L⁻¹
    let mut u = vec![0.0; n * n];
    for i in 0..n {
        let (_, rest) = u.split_at_mut(i * n);
        let z = &mut rest[..n];
        z[i] = 1.0 / l[i * n + i];
        for k in i + 1..n {
            let s = dot(&l[k * n + i..k * n + k], &z[i..k]);
            z[k] = -s / l[k * n + k];
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&u[i * n + j..(i + 1) * n], &u[j * n + j..(j + 1) * n]);
            inv[i * n + j] = v;
            inv[j * n + i] = v;
        }
    }
    inv
}
