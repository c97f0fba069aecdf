//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = (a + b) * half;
    let hl = (b - a) * half;
    let fc = f(center);
    let mut rk = fc * T::lit(WGK[7]);
    let mut rg = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = hl * T::lit(XGK[j]);
        let s = f(center - dx) + f(center + dx);
        rk = rk + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            rg = rg + T::lit(WG[j / 2]) * s;
        }
    }
    (rk * hl, ((rk - rg) * hl).abs())
}

/// Integrates `f` over `[a, b]` to absolute-or-relative tolerance `tol`.
/// Returns `(value, error_estimate)`.
pub fn integrate<T: Real>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    tol: T,
    max_intervals: usize,
) -> Result<(T, T)> {
    let mut segs = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total: T = segs.iter().fold(T::zero(), |s, x| s + x.2);
        let err: T = segs.iter().fold(T::zero(), |s, x| s + x.3);
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Numeric("non-finite integrand".into()));
        }
        if err <= tol * T::one().max(total.abs()) {
            return Ok((total, err));
        }
        if segs.len() >= max_intervals {
            return Err(Error::NotConverged(format!(
                "quadrature error {} above tolerance",
                err.as_f64()
            )));
        }
        let (imax, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| {
                x.1 .3
                    .partial_cmp(&y.1 .3)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let (lo, hi, _, _) = segs.swap_remove(imax);
        let mid = (lo + hi) * T::lit(0.5);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x: f64| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1e-14, 10).unwrap();
        assert!((v - (102.4 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory() {
        let (v, _) = integrate(
            |x: f64| (10.0 * x).sin(),
            0.0,
            std::f64::consts::PI,
            1e-13,
            200,
        )
        .unwrap();
        assert!(v.abs() < 1e-12);
    }
}
