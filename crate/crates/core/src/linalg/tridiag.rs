//! Lowest eigenpair of a real symmetric tridiagonal matrix by Sturm-sequence
//! bisection followed by inverse iteration from just below the eigenvalue.

/// Number of eigenvalues strictly less than `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Returns the lowest eigenvalue and its unit eigenvector.
pub fn lowest_eigenpair(diag: &[f64], off: &[f64]) -> (f64, Vec<f64>) {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 == n);
    // Gershgorin bracket.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);

    // T - s I is positive definite for s below the lowest eigenvalue.
    let gap = 1e-9 * scale;
    let s = lo - gap;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..4 {
        solve_shifted(diag, off, s, &mut x);
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    // Ground states of these operators are nodeless; fix the global sign.
    let sum: f64 = x.iter().sum();
    if sum < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    (lambda, x)
}

// Thomas algorithm for (T - sI) y = x, overwriting x.
fn solve_shifted(diag: &[f64], off: &[f64], s: f64, x: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0] - s;
    c[0] = if n > 1 { off[0] / d } else { 0.0 };
    x[0] /= d;
    for i in 1..n {
        d = diag[i] - s - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / d;
        }
        x[i] = (x[i] - off[i - 1] * x[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_laplacian_ground_state() {
        // -u'' on (0, 1) with Dirichlet ends; lowest eigenvalue 4 sin^2(pi h / 2) / h^2.
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let (lam, v) = lowest_eigenpair(&diag, &off);
        let exact = 4.0 * (std::f64::consts::PI * h / 2.0).sin().powi(2) / (h * h);
        assert!((lam - exact).abs() < 1e-9 * exact);
        for (i, vi) in v.iter().enumerate() {
            let s = (std::f64::consts::PI * (i as f64 + 1.0) * h).sin();
            assert!((vi - s * (2.0 * h).sqrt()).abs() < 1e-8);
        }
        assert_eq!(sturm_count(&diag, &off, lam + 1.0), 1);
    }
}
