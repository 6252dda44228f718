//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

/// Eigenvalues sorted by decreasing modulus.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));
    ev
}

/// Dominant eigenpair of a matrix with a positive power, by power iteration.
/// The vector is normalised to unit `l¹` norm with positive entries.
pub fn perron(m: &DMatrix<f64>, max_iter: usize, tol: f64) -> (f64, DVector<f64>) {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut value = 0.0;
    for _ in 0..max_iter {
        let w = m * &v;
        let s: f64 = w.iter().sum();
        let w = w / s;
        let diff = (&w - &v).amax();
        v = w;
        value = s;
        if diff <= tol {
            break;
        }
    }
    // Rayleigh-type refinement of the value from the converged vector.
    let w = m * &v;
    let s: f64 = w.iter().sum();
    if s.is_finite() && s > 0.0 {
        value = s;
    }
    (value, v)
}

/// Orthonormal basis of the column span of `m` via Gram–Schmidt with reorthogonalisation.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = m.shape();
    let mut q = DMatrix::<f64>::zeros(n, k);
    let mut cols = 0;
    for j in 0..k {
        let mut v = m.column(j).clone_owned();
        for _ in 0..2 {
            for i in 0..cols {
                let qi = q.column(i).clone_owned();
                let c = qi.dot(&v);
                v -= qi * c;
            }
        }
        let nv = v.norm();
        if nv > 1e-13 {
            q.set_column(cols, &(v / nv));
            cols += 1;
        }
    }
    q.columns(0, cols).clone_owned()
}

/// Orthonormal basis of `{x : c·x = 0}` for a nonzero vector `c`.
pub fn orthogonal_complement(c: &DVector<f64>) -> DMatrix<f64> {
    let n = c.len();
    let u = c / c.norm();
    let mut m = DMatrix::<f64>::zeros(n, n + 1);
    m.set_column(0, &u);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        m.set_column(j + 1, &e);
    }
    let q = orthonormalize(&m);
    q.columns(1, n - 1).clone_owned()
}

/// Dominant invariant subspace of dimension `k` by orthogonal iteration.
pub fn dominant_subspace(m: &DMatrix<f64>, k: usize, iters: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut q = DMatrix::<f64>::from_fn(n, k, |i, j| {
        // deterministic, generic start
        ((i * 7 + j * 13 + 1) as f64).sin() + if i == j { 1.0 } else { 0.0 }
    });
    q = orthonormalize(&q);
    for _ in 0..iters {
        let z = m * &q;
        let next = z.qr().q();
        let change = (&next * next.transpose() - &q * q.transpose()).amax();
        q = next;
        if change < 1e-15 {
            break;
        }
    }
    q
}

/// Largest principal-angle sine between the column spans of two orthonormal bases.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let pa = a * a.transpose();
    let pb = b * b.transpose();
    (pa - pb).norm().min(f64::MAX)
}

/// Least-squares solution of `a x = b` by SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-14).expect("svd solve with both factors")
}

/// Sup-norm of a vector.
pub fn sup(v: &DVector<f64>) -> f64 {
    v.amax()
}
