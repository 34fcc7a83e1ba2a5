//! Complex dilogarithm and the B-function.
//!
//! `dilog` evaluates Li(z) = −∫₀ᶻ log(1−t) dt/t on the principal branch
//! (cut along [1,∞), on-cut inputs taken as limits from the upper side).
//! `bfunc` is B(z) = (1/π)(arg(z)·log|1−z| + Im Li(z)); it is odd under
//! conjugation, B(z̄) = −B(z), and enters every closed-form thermodynamic
//! quantity of the model.

use crate::error::{FvError, FvResult};
use crate::Complex;
use std::f64::consts::PI;

const PI2_6: f64 = PI * PI / 6.0;

/// Coefficients of the series Li(z) = Σ Bₙ uⁿ⁺¹/(n+1)! with u = −log(1−z),
/// for the powers u², u³, u⁵, u⁷, … (even Bernoulli numbers beyond B₁ vanish
/// on the missing powers). Enough terms for |u| ≲ 1.1 at f64 precision.
const LI2_COEFF: [f64; 12] = [
    -1.0 / 4.0,
    1.0 / 36.0,
    -1.0 / 3600.0,
    1.0 / 211_680.0,
    -1.0 / 10_886_400.0,
    1.0 / 526_901_760.0,
    -691.0 / (2730.0 * 6_227_020_800.0),
    7.0 / (6.0 * 1_307_674_368_000.0),
    -3617.0 / (510.0 * 355_687_428_096_000.0),
    43_867.0 / (798.0 * 1.216_451_004_088_32e17),
    -174_611.0 / (330.0 * 5.109_094_217_170_944e19),
    854_513.0 / (138.0 * 2.585_201_673_888_498e22),
];

/// Bernoulli series for Li(z) in the variable u = −log(1−z).
fn li2_series(u: Complex) -> Complex {
    let u2 = u * u;
    let mut sum = u + u2 * LI2_COEFF[0] + u2 * u * LI2_COEFF[1];
    let mut upow = u2 * u;
    for &c in &LI2_COEFF[2..] {
        upow *= u2;
        let term = upow * c;
        sum += term;
        if term.norm_sqr() <= 1.0e-64 * sum.norm_sqr() {
            break;
        }
    }
    sum
}

/// Map a signed-zero imaginary part to +0 so that real inputs on the cut
/// [1,∞) are evaluated as limits from the upper half-plane.
fn upper_limit(z: Complex) -> Complex {
    if z.im == 0.0 {
        Complex::new(z.re, 0.0)
    } else {
        z
    }
}

fn check_finite(z: Complex, what: &str) -> FvResult<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(FvError::InvalidArgument(format!(
            "{what}: non-finite input {z}"
        )))
    }
}

/// Principal-branch dilogarithm Li(z).
///
/// Relative accuracy is ~1e−15 away from the cut; inputs on [1,∞) are
/// evaluated as the limit from above. The argument is reduced into the
/// fast-convergence region by the inversion z → 1/z and reflection
/// z → 1−z functional equations.
pub fn dilog(z: Complex) -> FvResult<Complex> {
    check_finite(z, "dilog")?;
    let z = upper_limit(z);
    if z.re == 0.0 && z.im == 0.0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    if z.re == 1.0 && z.im == 0.0 {
        return Ok(Complex::new(PI2_6, 0.0));
    }

    let rz = z.re;
    let nz = z.norm_sqr();
    let one = Complex::new(1.0, 0.0);

    if rz <= 0.5 {
        if nz <= 1.0 {
            Ok(li2_series(-(one - z).ln()))
        } else {
            // inversion: Li(z) = −Li(1/z) − π²/6 − ½ log²(−z)
            let l = (-z).ln();
            Ok(-li2_series(-(one - z.inv()).ln()) - PI2_6 - 0.5 * l * l)
        }
    } else if nz <= 2.0 * rz {
        // |z−1| ≤ 1: reflection Li(z) = π²/6 − log z log(1−z) − Li(1−z),
        // and Li(1−z) by the series with u = −log(z).
        let lz = z.ln();
        let l1z = (one - z).ln();
        Ok(PI2_6 - lz * l1z - li2_series(-lz))
    } else {
        // Re z > ½ and |z−1| > 1 imply |z| > 1: invert; 1/z then lands in
        // the series region directly.
        let l = (-z).ln();
        Ok(-li2_series(-(one - z.inv()).ln()) - PI2_6 - 0.5 * l * l)
    }
}

/// B(z) = (1/π)(arg(z)·log|1−z| + Im Li(z)).
///
/// Errors on z ∈ {0, 1} where the expression is singular.
pub fn bfunc(z: Complex) -> FvResult<f64> {
    check_finite(z, "bfunc")?;
    let z = upper_limit(z);
    if (z.re == 0.0 && z.im == 0.0) || (z.re == 1.0 && z.im == 0.0) {
        return Err(FvError::SingularArgument(format!("bfunc at z = {z}")));
    }
    let log_abs_1mz = (Complex::new(1.0, 0.0) - z).norm().ln();
    Ok((z.arg() * log_abs_1mz + dilog(z)?.im) / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CATALAN: f64 = 0.915_965_594_177_219; // frozen from the quadrature oracle

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn dilog_at_zero_and_one() {
        assert_eq!(dilog(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let v = dilog(c(1.0, 0.0)).unwrap();
        assert!((v.re - PI2_6).abs() < 1e-15 && v.im == 0.0);
    }

    #[test]
    fn dilog_at_i_matches_catalan() {
        // Li(i) = −π²/48 + i·G
        let v = dilog(c(0.0, 1.0)).unwrap();
        assert!((v.re + PI * PI / 48.0).abs() < 1e-14, "re = {}", v.re);
        assert!((v.im - CATALAN).abs() < 1e-13, "im = {}", v.im);
    }

    #[test]
    fn dilog_known_real_values() {
        // Li(−1) = −π²/12, Li(½) = π²/12 − ½ log²2
        let a = dilog(c(-1.0, 0.0)).unwrap();
        assert!((a.re + PI * PI / 12.0).abs() < 1e-14 && a.im.abs() < 1e-15);
        let b = dilog(c(0.5, 0.0)).unwrap();
        let expect = PI * PI / 12.0 - 0.5 * std::f64::consts::LN_2.powi(2);
        assert!((b.re - expect).abs() < 1e-15 && b.im.abs() < 1e-15);
    }

    #[test]
    fn dilog_upper_cut_limit() {
        // Li(x + i0) has Im = π log x for x > 1.
        for &x in &[1.5, 2.0, 7.0, 100.0] {
            let v = dilog(c(x, 0.0)).unwrap();
            assert!(
                (v.im - PI * x.ln()).abs() < 1e-12 * (1.0 + v.im.abs()),
                "x = {x}, im = {}",
                v.im
            );
            // explicitly negative zero must take the same limit
            let v2 = dilog(c(x, -0.0)).unwrap();
            assert_eq!(v, v2);
        }
    }

    #[test]
    fn dilog_reflection_identity() {
        // Li(z) + Li(1−z) = π²/6 − log z log(1−z)
        let pts = [
            c(0.3, 0.4),
            c(-0.2, 0.7),
            c(0.9, 0.05),
            c(0.1, -0.6),
            c(-0.8, -0.3),
            c(0.45, 0.89),
        ];
        for &z in &pts {
            let lhs = dilog(z).unwrap() + dilog(c(1.0, 0.0) - z).unwrap();
            let rhs = Complex::new(PI2_6, 0.0) - z.ln() * (Complex::new(1.0, 0.0) - z).ln();
            assert!((lhs - rhs).norm() < 1e-10, "z = {z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn dilog_inversion_identity_large_arguments() {
        // Li(z) + Li(1/z) = −π²/6 − ½ log²(−z), off the cuts
        for &z in &[c(3.0, 4.0), c(-20.0, 5.0), c(1e5, 3e5), c(-1e6, 1.0)] {
            let lhs = dilog(z).unwrap() + dilog(z.inv()).unwrap();
            let l = (-z).ln();
            let rhs = -Complex::new(PI2_6, 0.0) - 0.5 * l * l;
            assert!(
                (lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()),
                "z = {z}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn dilog_rejects_non_finite() {
        assert!(dilog(c(f64::NAN, 0.0)).is_err());
        assert!(dilog(c(0.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn bfunc_on_unit_interval_is_zero() {
        for &x in &[0.1, 0.5, 0.9] {
            assert!(bfunc(c(x, 0.0)).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn bfunc_at_i() {
        // B(i) = (1/π)((π/2)·log √2 + G)
        let expect = (std::f64::consts::FRAC_PI_2 * 0.5 * std::f64::consts::LN_2 + CATALAN) / PI;
        let got = bfunc(c(0.0, 1.0)).unwrap();
        assert!((got - expect).abs() < 1e-13, "{got} vs {expect}");
    }

    #[test]
    fn bfunc_is_odd_under_conjugation() {
        let pts = [
            c(0.3, 0.4),
            c(-2.0, 1.5),
            c(10.0, 300.0),
            c(-900.0, 0.001),
            c(0.99, 1e-6),
        ];
        for &z in &pts {
            let a = bfunc(z).unwrap();
            let b = bfunc(z.conj()).unwrap();
            assert!(
                (a + b).abs() <= 1e-12 * (1.0 + a.abs()),
                "z = {z}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn bfunc_rejects_singular_points() {
        assert!(matches!(
            bfunc(c(0.0, 0.0)),
            Err(FvError::SingularArgument(_))
        ));
        assert!(matches!(
            bfunc(c(1.0, 0.0)),
            Err(FvError::SingularArgument(_))
        ));
    }
}
