use num_complex::Complex;

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const QR_ITERS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of a real square matrix, sorted by real part then imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn real_parts(&self) -> Vec<T> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    /// Counts eigenvalues with real part above `band` and below `-band`.
    pub fn split(&self, band: T) -> (usize, usize) {
        let pos = self.eigenvalues.iter().filter(|z| z.re > band).count();
        let neg = self.eigenvalues.iter().filter(|z| z.re < -band).count();
        (pos, neg)
    }

    /// Largest distance from an eigenvalue to the nearest conjugate partner.
    pub fn conjugate_defect(&self) -> T {
        let mut worst = T::zero();
        for z in &self.eigenvalues {
            let best = self
                .eigenvalues
                .iter()
                .map(|w| (w - z.conj()).norm())
                .fold(T::infinity(), T::min);
            worst = worst.max(best);
        }
        worst
    }
}

/// Eigenvalues of a general real matrix by balancing, Householder reduction
/// to Hessenberg form and Francis double-shift QR.
pub fn eig_general<T: Scalar>(a: &Matrix<T>) -> Result<Spectrum<T>> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "eig_general needs a nonempty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("eig_general: non-finite matrix entry".into()));
    }
    let n = a.rows();
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let (re, im) = hqr(&mut h)?;
    let mut eigenvalues: Vec<Complex<T>> = re.into_iter().zip(im).map(|(r, i)| Complex::new(r, i)).collect();
    debug_assert_eq!(eigenvalues.len(), n);
    eigenvalues.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .expect("finite")
            .then(x.im.partial_cmp(&y.im).expect("finite"))
    });
    Ok(Spectrum { eigenvalues })
}

fn balance<T: Scalar>(a: &mut Matrix<T>) {
    let n = a.rows();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let mut g = r / radix;
            let mut f = T::one();
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                let g = T::one() / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

fn hessenberg<T: Scalar>(h: &mut Matrix<T>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![T::zero(); n];
    for m in 1..high {
        let scale: T = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
        for i in (m + 1)..=high {
            h[(i, m - 1)] = T::zero();
        }
    }
}

#[allow(clippy::many_single_char_names, unused_assignments)]
fn hqr<T: Scalar>(h: &mut Matrix<T>) -> Result<(Vec<T>, Vec<T>)> {
    let nn = h.rows();
    let mut d = vec![T::zero(); nn];
    let mut e = vec![T::zero(); nn];
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut exshift = T::zero();
    let (mut p, mut q, mut r, mut s, mut z) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let (mut w, mut x, mut y);

    let mut norm = T::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let max_total = QR_ITERS_PER_EIGENVALUE * nn;
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut n = nn as isize - 1;
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(l, l - 1)].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = T::zero();
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / two;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];
            if q >= T::zero() {
                z = if p >= T::zero() { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != T::zero() {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = T::zero();
                e[nu] = T::zero();
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];

            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) / two;
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / two + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;
            if total > max_total {
                return Err(Error::NoConvergence {
                    algorithm: "Francis QR",
                    iterations: total,
                });
            }

            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=nu {
                h[(i, i - 2)] = T::zero();
                if i > m + 2 {
                    h[(i, i - 3)] = T::zero();
                }
            }

            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s != T::zero() {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }
    Ok((d, e))
}
