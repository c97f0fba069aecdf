//! Small dense linear algebra: LU solves, Householder least squares, real
//! eigenvalues via Hessenberg reduction and Francis double-shift QR.

use crate::error::{Error, Result};
use crate::scalar::{Dual, Real, Scalar};
use num_complex::Complex;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[T]>::to_vec)
            .collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(T::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve<S: Real>(a: &Mat<S>, b: &[S]) -> Result<Vec<S>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::Invalid("solve: dimension mismatch".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| {
                m[(i, k)]
                    .abs()
                    .partial_cmp(&m[(j, k)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if !(m[(p, k)].abs() > scale * S::epsilon() * S::lit(16.0)) {
            return Err(Error::Numeric("singular matrix".into()));
        }
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            if f != S::zero() {
                for j in k..n {
                    let v = m[(k, j)];
                    m[(i, j)] = m[(i, j)] - f * v;
                }
                let xk = x[k];
                x[i] = x[i] - f * xk;
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s = s - m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Ok(x)
}

/// Inverse of a square matrix (column-wise solves).
pub fn inverse<S: Real>(a: &Mat<S>) -> Result<Mat<S>> {
    let n = a.rows;
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![S::zero(); n];
        e[j] = S::one();
        let col = solve(a, &e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Minimum-norm-residual solution of `A x ≈ b` (rows ≥ cols) via Householder QR.
/// Rank-deficient columns are dropped (their component is set to zero).
pub fn least_squares<S: Real>(a: &Mat<S>, b: &[S]) -> Result<Vec<S>> {
    let (m, n) = (a.rows, a.cols);
    if m < n || b.len() != m {
        return Err(Error::Invalid("least_squares: need rows >= cols".into()));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let scale = a.max_abs().max(S::min_positive_value());
    for k in 0..n {
        let norm = (k..m)
            .fold(S::zero(), |s, i| s + r[(i, k)] * r[(i, k)])
            .sqrt();
        if norm <= scale * S::epsilon() {
            continue;
        }
        let alpha = if r[(k, k)] > S::zero() { -norm } else { norm };
        let mut v: Vec<S> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(S::zero(), |s, &x| s + x * x);
        if vnorm2 == S::zero() {
            continue;
        }
        for j in k..n {
            let dot = (k..m).fold(S::zero(), |s, i| s + v[i - k] * r[(i, j)]);
            let f = S::lit(2.0) * dot / vnorm2;
            for i in k..m {
                r[(i, j)] = r[(i, j)] - f * v[i - k];
            }
        }
        let dot = (k..m).fold(S::zero(), |s, i| s + v[i - k] * y[i]);
        let f = S::lit(2.0) * dot / vnorm2;
        for i in k..m {
            y[i] = y[i] - f * v[i - k];
        }
    }
    let tol = scale * S::epsilon() * S::lit(64.0) * S::int(m as i64);
    let mut x = vec![S::zero(); n];
    for k in (0..n).rev() {
        if r[(k, k)].abs() <= tol {
            continue;
        }
        let mut s = y[k];
        for j in k + 1..n {
            s = s - r[(k, j)] * x[j];
        }
        x[k] = s / r[(k, k)];
    }
    Ok(x)
}

/// Eigenvalues of a real square matrix, sorted by (real, imaginary) part.
///
/// `n = 1, 2` use closed forms; larger matrices (up to 8) are reduced to
/// Hessenberg form and iterated with Francis double shifts.
pub fn eigenvalues<T: Real>(a: &Mat<T>) -> Result<Vec<Complex<T>>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::Invalid("eigenvalues: matrix not square".into()));
    }
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("eigenvalues: non-finite entry".into()));
    }
    let mut ev = match n {
        0 => vec![],
        1 => vec![Complex::new(a[(0, 0)], T::zero())],
        2 => eig2(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]),
        3..=8 => hqr(hessenberg(a))?,
        _ => return Err(Error::Unsupported("eigenvalues: dimension above 8".into())),
    };
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(ev)
}

fn eig2<T: Real>(a: T, b: T, c: T, d: T) -> Vec<Complex<T>> {
    let half = T::lit(0.5);
    let m = (a + d) * half;
    // Discriminant written to avoid cancellation in (a-d)^2 + 4bc.
    let h = (a - d) * half;
    let disc = h * h + b * c;
    if disc >= T::zero() {
        let s = disc.sqrt();
        let big = if m >= T::zero() { m + s } else { m - s };
        let det = a * d - b * c;
        let small = if big != T::zero() { det / big } else { m - s };
        vec![Complex::new(big, T::zero()), Complex::new(small, T::zero())]
    } else {
        let s = (-disc).sqrt();
        vec![Complex::new(m, s), Complex::new(m, -s)]
    }
}

fn hessenberg<T: Real>(a: &Mat<T>) -> Mat<T> {
    let n = a.rows;
    let mut h = a.clone();
    for m in 1..n.saturating_sub(1) {
        let mut x = T::zero();
        let mut i = m;
        for j in m..n {
            if h[(j, m - 1)].abs() > x.abs() {
                x = h[(j, m - 1)];
                i = j;
            }
        }
        if i != m {
            for j in m - 1..n {
                let t = h[(i, j)];
                h[(i, j)] = h[(m, j)];
                h[(m, j)] = t;
            }
            for j in 0..n {
                let t = h[(j, i)];
                h[(j, i)] = h[(j, m)];
                h[(j, m)] = t;
            }
        }
        if x != T::zero() {
            for i in m + 1..n {
                let mut y = h[(i, m - 1)];
                if y != T::zero() {
                    y = y / x;
                    h[(i, m - 1)] = y;
                    for j in m..n {
                        let v = h[(m, j)];
                        h[(i, j)] = h[(i, j)] - y * v;
                    }
                    for j in 0..n {
                        let v = h[(j, i)];
                        h[(j, m)] = h[(j, m)] + y * v;
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..i - 1 {
            h[(i, j)] = T::zero();
        }
    }
    h
}

fn hqr<T: Real>(mut a: Mat<T>) -> Result<Vec<Complex<T>>> {
    let n = a.rows;
    let mut wr = vec![T::zero(); n];
    let mut wi = vec![T::zero(); n];
    let two = T::lit(2.0);
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm = anorm + a[(i, j)].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = T::zero();
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 1 {
                let lu = l as usize;
                let s = a[(lu - 1, lu - 1)].abs() + a[(lu, lu)].abs();
                let s = if s == T::zero() { anorm } else { s };
                if a[(lu, lu - 1)].abs() <= T::epsilon() * s {
                    a[(lu, lu - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            let x = a[(nu, nu)];
            if l == nn {
                wr[nu] = x + t;
                wi[nu] = T::zero();
                nn -= 1;
                break;
            }
            let y = a[(nu - 1, nu - 1)];
            let w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nn - 1 {
                let p = (y - x) / two;
                let q = p * p + w;
                let z = q.abs().sqrt();
                let xx = x + t;
                if q >= T::zero() {
                    let z = p + if p >= T::zero() { z } else { -z };
                    wr[nu - 1] = xx + z;
                    wr[nu] = if z != T::zero() { xx - w / z } else { xx + z };
                    wi[nu - 1] = T::zero();
                    wi[nu] = T::zero();
                } else {
                    wr[nu - 1] = xx + p;
                    wr[nu] = xx + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::NotConverged("QR iteration".into()));
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                t = t + x;
                for i in 0..=nu {
                    a[(i, i)] = a[(i, i)] - x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            let lu = l as usize;
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == lu {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= T::epsilon() * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[(i, i - 2)] = T::zero();
                if i != m + 2 {
                    a[(i, i - 3)] = T::zero();
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = T::zero();
                    if k + 1 != nu {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p = p / x;
                        q = q / x;
                        r = r / x;
                    }
                }
                let s0 = (p * p + q * q + r * r).sqrt();
                let s = if p >= T::zero() { s0 } else { -s0 };
                if s != T::zero() {
                    if k == m {
                        if l != m as isize {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p = p + s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q = q / p;
                    r = r / p;
                    for j in k..=nu {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k + 1 != nu {
                            pp = pp + r * a[(k + 2, j)];
                            a[(k + 2, j)] = a[(k + 2, j)] - pp * z;
                        }
                        a[(k + 1, j)] = a[(k + 1, j)] - pp * y;
                        a[(k, j)] = a[(k, j)] - pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in lu..=mmin {
                        let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k + 1 != nu {
                            pp = pp + z * a[(i, k + 2)];
                            a[(i, k + 2)] = a[(i, k + 2)] - pp * r;
                        }
                        a[(i, k + 1)] = a[(i, k + 1)] - pp * q;
                        a[(i, k)] = a[(i, k)] - pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex::new(re, im))
        .collect())
}

/// Exact Jacobian of `f: Rⁿ → Rᵐ` by forward-mode dual numbers.
pub fn jacobian_dual<T, F>(f: F, x: &[T]) -> Result<Mat<T>>
where
    T: Real,
    F: Fn(&[Dual<T>]) -> Result<Vec<Dual<T>>>,
{
    let n = x.len();
    let mut jac: Option<Mat<T>> = None;
    for j in 0..n {
        let xs: Vec<Dual<T>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i == j {
                    Dual::variable(v)
                } else {
                    Dual::constant(v)
                }
            })
            .collect();
        let out = f(&xs)?;
        let m = jac.get_or_insert_with(|| Mat::zeros(out.len(), n));
        for (i, o) in out.iter().enumerate() {
            m[(i, j)] = o.eps;
        }
    }
    jac.map_or_else(
        || Err(Error::Invalid("jacobian of a 0-dimensional map".into())),
        Ok,
    )
}

/// Central-difference Jacobian with step `h·max(1,|xⱼ|)`.
pub fn jacobian_fd<T, F>(f: F, x: &[T], h: T) -> Result<Mat<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let n = x.len();
    let mut jac: Option<Mat<T>> = None;
    for j in 0..n {
        let step = h * T::one().max(x[j].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        let m = jac.get_or_insert_with(|| Mat::zeros(fp.len(), n));
        for i in 0..fp.len() {
            m[(i, j)] = (fp[i] - fm[i]) / (step + step);
        }
    }
    jac.map_or_else(
        || Err(Error::Invalid("jacobian of a 0-dimensional map".into())),
        Ok,
    )
}

/// Euclidean norm.
pub fn norm<S: Real>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |s, &x| s + x * x).sqrt()
}

/// Lifts a base-type slice into a scalar type.
pub fn lift_vec<T: Real, S: Scalar<T>>(v: &[T]) -> Vec<S> {
    v.iter().map(|&x| S::lift(x)).collect()
}
