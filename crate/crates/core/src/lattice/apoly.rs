//! Exact check of the bivariate symmetric-polynomial identity behind the
//! transfer-matrix commutation: in
//! Σ_k A_k ∏_{i<k}(1−A_i x) ∏_{i>k}(1−A_i y)
//! the coefficient of x^i y^j equals (−1)^{i+j} e_{i+j+1}(A).

use crate::error::{FvError, FvResult};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Coefficient table and residual of the identity check.
#[derive(Debug, Clone)]
pub struct ApolyReport {
    /// coefficient of x^i y^j, row-major in (i, j)
    pub coeffs: Vec<Vec<f64>>,
    /// expected (−1)^{i+j} e_{i+j+1}
    pub expected: Vec<Vec<f64>>,
    /// 0 when the exact rational comparison succeeds
    pub max_residual: f64,
    pub exact: bool,
}

fn to_rational(x: f64) -> FvResult<BigRational> {
    BigRational::from_float(x).ok_or_else(|| {
        FvError::InvalidArgument(format!("cannot represent {x} as a rational"))
    })
}

/// Polynomial in one variable with rational coefficients, constant term
/// first.
fn poly_mul_linear(poly: &mut Vec<BigRational>, a: &BigRational) {
    // multiply by (1 − a·x)
    let mut out = vec![BigRational::zero(); poly.len() + 1];
    for (k, c) in poly.iter().enumerate() {
        out[k] += c;
        out[k + 1] -= c * a;
    }
    *poly = out;
}

/// Elementary symmetric polynomials e_0, …, e_n of the inputs.
fn elementary_symmetric(a: &[BigRational]) -> Vec<BigRational> {
    let mut e = vec![BigRational::zero(); a.len() + 1];
    e[0] = BigRational::one();
    for (k, v) in a.iter().enumerate() {
        for i in (1..=k + 1).rev() {
            let add = &e[i - 1] * v;
            e[i] += add;
        }
    }
    e
}

/// Expand the polynomial exactly and compare every coefficient against
/// (−1)^{i+j} e_{i+j+1}(A). Inputs are dyadic (any f64), so the arithmetic
/// is exact and the residual is 0 on success.
pub fn apoly_check(a: &[f64], degree_cap: usize) -> FvResult<ApolyReport> {
    if a.is_empty() {
        return Err(FvError::InvalidArgument("empty coefficient list".into()));
    }
    if a.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(FvError::InvalidArgument(
            "inputs must be positive reals".into(),
        ));
    }
    let n = a.len() - 1;
    let ar: Vec<BigRational> = a.iter().map(|&v| to_rational(v)).collect::<FvResult<_>>()?;

    // prefix polynomials in x and suffix polynomials in y
    let mut prefix: Vec<Vec<BigRational>> = Vec::with_capacity(n + 1);
    let mut p = vec![BigRational::one()];
    for k in 0..=n {
        prefix.push(p.clone());
        if k < n {
            poly_mul_linear(&mut p, &ar[k]);
        }
    }
    let mut suffix: Vec<Vec<BigRational>> = vec![Vec::new(); n + 1];
    let mut sfx = vec![BigRational::one()];
    for k in (0..=n).rev() {
        suffix[k] = sfx.clone();
        if k > 0 {
            poly_mul_linear(&mut sfx, &ar[k]);
        }
    }

    let d = degree_cap.min(n);
    let mut coeffs =
        vec![vec![BigRational::zero(); d + 1]; d + 1];
    for k in 0..=n {
        for (i, ci) in prefix[k].iter().enumerate().take(d + 1) {
            for (j, cj) in suffix[k].iter().enumerate().take(d + 1) {
                let add = &ar[k] * ci * cj;
                coeffs[i][j] += add;
            }
        }
    }

    let e = elementary_symmetric(&ar);
    let mut exact = true;
    for i in 0..=d {
        for j in 0..=d {
            let order = i + j + 1;
            let want = if order <= n + 1 {
                let sign = if (i + j) % 2 == 0 {
                    BigInt::one()
                } else {
                    -BigInt::one()
                };
                &e[order] * BigRational::from_integer(sign)
            } else {
                BigRational::zero()
            };
            if coeffs[i][j] != want {
                exact = false;
            }
        }
    }

    let as_f64 = |v: &BigRational| -> f64 {
        let num = v.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
        let den = v.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
        num / den
    };
    let coeffs_f: Vec<Vec<f64>> = coeffs
        .iter()
        .map(|row| row.iter().map(as_f64).collect())
        .collect();
    let mut expected_f = vec![vec![0.0f64; d + 1]; d + 1];
    let mut max_residual = 0.0f64;
    for i in 0..=d {
        for j in 0..=d {
            let order = i + j + 1;
            let want = if order <= n + 1 {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * as_f64(&e[order])
            } else {
                0.0
            };
            expected_f[i][j] = want;
            max_residual = max_residual.max((coeffs_f[i][j] - want).abs());
        }
    }
    if exact {
        max_residual = 0.0;
    }
    Ok(ApolyReport {
        coeffs: coeffs_f,
        expected: expected_f,
        max_residual,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_two_hand_expansion() {
        // n = 1: (A₀+A₁) − A₀A₁x − A₀A₁y
        let rep = apoly_check(&[0.5, 0.75], 4).unwrap();
        assert!(rep.exact);
        assert!((rep.coeffs[0][0] - 1.25).abs() < 1e-15);
        assert!((rep.coeffs[1][0] + 0.375).abs() < 1e-15);
        assert!((rep.coeffs[0][1] + 0.375).abs() < 1e-15);
        assert_eq!(rep.coeffs[1][1], 0.0);
    }

    #[test]
    fn random_lengths_are_exact_and_symmetric() {
        let mut state = 1234567u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 20) & 0xfffff) as f64 / 1048576.0 + 0.05
        };
        for len in 2..=8 {
            let a: Vec<f64> = (0..len).map(|_| next()).collect();
            let rep = apoly_check(&a, 8).unwrap();
            assert!(rep.exact, "length {len} not exact");
            assert_eq!(rep.max_residual, 0.0);
            for i in 0..rep.coeffs.len() {
                for j in 0..rep.coeffs.len() {
                    assert_eq!(rep.coeffs[i][j], rep.coeffs[j][i], "x↔y symmetry");
                }
            }
            // coefficient of x⁰y⁰ is e₁ = ΣA
            let e1: f64 = a.iter().sum();
            assert!((rep.coeffs[0][0] - e1).abs() < 1e-12);
        }
    }
}
