//! The spectral curve and the global conformal coordinate u ∈ ℍ.
//!
//! Each point u of the upper half-plane assigns to column i the coordinate
//! w_i = u/(u+α_i²) and to row j the coordinate z_j = 1/(1+β_j²u); the pair
//! (w_i, z_j) satisfies the spectral-curve relation
//! 1 − z − w + (1−r²)zw = 0 with r = α_i β_j. The angle θ (arg u in the
//! small-r regime, 2π − arg u in the large-r regime) is shared by every
//! vertex of the fundamental domain and drives the slope parameterization.

use crate::error::{FvError, FvResult};
use crate::model::{FieldPoint, FundamentalDomain, Regime, SlopePoint};
use crate::special::bfunc;
use crate::thermo;
use crate::Complex;
use std::f64::consts::PI;

/// The bundle (u, {w_i}, {z_j}, θ, s, t, X, Y) at one point of ℍ.
#[derive(Debug, Clone)]
pub struct ConformalState {
    pub u: Complex,
    pub w: Vec<Complex>,
    pub z: Vec<Complex>,
    pub theta: f64,
    pub s: f64,
    pub t: f64,
    pub field: FieldPoint,
}

fn require_upper(u: Complex, what: &str) -> FvResult<()> {
    if !(u.re.is_finite() && u.im.is_finite()) {
        return Err(FvError::InvalidArgument(format!("{what}: u = {u}")));
    }
    if u.im <= 0.0 {
        return Err(FvError::Domain(format!(
            "{what}: u = {u} is not in the upper half-plane"
        )));
    }
    Ok(())
}

/// Solve the spectral curve 1 − z − w + (1−r²)zw = 0 for z given w.
pub fn solve_spectral(w: Complex, r: f64) -> FvResult<Complex> {
    if !(r > 0.0) || r == 1.0 || !r.is_finite() {
        return Err(FvError::InvalidArgument(format!(
            "spectral parameter r = {r} must be positive and ≠ 1"
        )));
    }
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(FvError::InvalidArgument(format!("w = {w}")));
    }
    let one = Complex::new(1.0, 0.0);
    let denom = one - (1.0 - r * r) * w;
    if denom.norm() <= 1e-14 * (1.0 + w.norm()) {
        return Err(FvError::SingularArgument(format!(
            "w = {w} is the pole of the spectral map for r = {r}"
        )));
    }
    Ok((one - w) / denom)
}

pub(crate) fn theta_of(u: Complex, regime: Regime) -> f64 {
    match regime {
        Regime::SmallR => u.arg(),
        Regime::LargeR => 2.0 * PI - u.arg(),
    }
}

pub(crate) fn w_of(u: Complex, alpha: f64) -> Complex {
    u / (u + alpha * alpha)
}

pub(crate) fn z_of(u: Complex, beta: f64) -> Complex {
    (Complex::new(1.0, 0.0) + beta * beta * u).inv()
}

/// Slopes (s, t) and the angle θ at u, without the field sums.
pub fn slopes_from_u(u: Complex, domain: &FundamentalDomain) -> FvResult<(f64, f64, f64)> {
    require_upper(u, "slopes_from_u")?;
    let theta = theta_of(u, domain.regime());
    let m1 = domain.m1() as f64;
    let m2 = domain.m2() as f64;
    let (s, t) = match domain.regime() {
        Regime::SmallR => {
            let s: f64 = domain.alphas().iter().map(|&a| w_of(u, a).arg()).sum();
            let t: f64 = domain
                .betas()
                .iter()
                .map(|&b| (Complex::new(1.0, 0.0) + b * b * u).arg())
                .sum();
            (s / (m1 * theta), t / (m2 * theta))
        }
        Regime::LargeR => {
            let s: f64 = domain
                .alphas()
                .iter()
                .map(|&a| PI - w_of(u, a).arg())
                .sum();
            let t: f64 = domain
                .betas()
                .iter()
                .map(|&b| PI - (Complex::new(1.0, 0.0) + b * b * u).arg())
                .sum();
            (s / (m1 * theta), t / (m2 * theta))
        }
    };
    Ok((s, t, theta))
}

/// Full conformal bundle at u: per-column w_i, per-row z_j, θ, slopes and
/// fields.
pub fn coords_from_u(u: Complex, domain: &FundamentalDomain) -> FvResult<ConformalState> {
    require_upper(u, "coords_from_u")?;
    let w: Vec<Complex> = domain.alphas().iter().map(|&a| w_of(u, a)).collect();
    let z: Vec<Complex> = domain.betas().iter().map(|&b| z_of(u, b)).collect();
    let (s, t, theta) = slopes_from_u(u, domain)?;
    let m1 = domain.m1() as f64;
    let m2 = domain.m2() as f64;
    let field = match domain.regime() {
        Regime::SmallR => {
            let x: f64 = z.iter().map(|&zj| bfunc(zj.conj()).unwrap_or(f64::NAN)).sum();
            let y: f64 = w.iter().map(|&wi| bfunc(wi).unwrap_or(f64::NAN)).sum();
            FieldPoint {
                x: -x / m2,
                y: -y / m1,
            }
        }
        Regime::LargeR => {
            let one = Complex::new(1.0, 0.0);
            let x: f64 = z
                .iter()
                .map(|&zj| bfunc(zj.conj()).unwrap_or(f64::NAN) - (zj * (one - zj)).norm().ln())
                .sum();
            let y: f64 = w
                .iter()
                .map(|&wi| bfunc(wi).unwrap_or(f64::NAN) - (wi * (one - wi)).norm().ln())
                .sum();
            FieldPoint {
                x: x / m2,
                y: y / m1,
            }
        }
    };
    if !field.x.is_finite() || !field.y.is_finite() {
        return Err(FvError::Convergence(format!(
            "field evaluation failed at u = {u}"
        )));
    }
    Ok(ConformalState {
        u,
        w,
        z,
        theta,
        s,
        t,
        field,
    })
}

/// Exact holomorphic/Wirtinger derivatives of the slope data at u.
///
/// sθ, tθ and θ are harmonic in u, so their ∂/∂u derivatives are
/// holomorphic and available in closed form; the Wirtinger derivatives of
/// s and t follow from the quotient rule.
#[derive(Debug, Clone, Copy)]
pub struct SlopeDerivatives {
    pub s: f64,
    pub t: f64,
    pub theta: f64,
    pub s_u: Complex,
    pub t_u: Complex,
    pub stheta_u: Complex,
    pub ttheta_u: Complex,
    pub theta_u: Complex,
}

pub fn slope_wirtinger(u: Complex, domain: &FundamentalDomain) -> FvResult<SlopeDerivatives> {
    let (s, t, theta) = slopes_from_u(u, domain)?;
    let m1 = domain.m1() as f64;
    let m2 = domain.m2() as f64;
    let half_over_i = Complex::new(0.0, -0.5); // 1/(2i)
    let mut stheta_u = Complex::new(0.0, 0.0);
    for &a in domain.alphas() {
        stheta_u += u.inv() - (u + a * a).inv();
    }
    stheta_u *= half_over_i / m1;
    let mut ttheta_u = Complex::new(0.0, 0.0);
    for &b in domain.betas() {
        let b2 = b * b;
        ttheta_u += b2 / (Complex::new(1.0, 0.0) + b2 * u);
    }
    ttheta_u *= half_over_i / m2;
    let mut theta_u = half_over_i * u.inv();
    if domain.regime() == Regime::LargeR {
        stheta_u = -stheta_u;
        ttheta_u = -ttheta_u;
        theta_u = -theta_u;
    }
    let s_u = (stheta_u - s * theta_u) / theta;
    let t_u = (ttheta_u - t * theta_u) / theta;
    Ok(SlopeDerivatives {
        s,
        t,
        theta,
        s_u,
        t_u,
        stheta_u,
        ttheta_u,
        theta_u,
    })
}

/// Result of the slope inversion (s, t) → u.
#[derive(Debug, Clone, Copy)]
pub struct Inversion {
    pub u: Complex,
    /// Target close to a boundary accumulation point; |u| left the trusted
    /// range and the result is a one-sided approximation.
    pub large_u: bool,
    pub iterations: usize,
}

fn newton_slopes(
    target: SlopePoint,
    domain: &FundamentalDomain,
    start: Complex,
    max_iter: usize,
) -> Option<(Complex, usize)> {
    let mut rho = start.norm().ln();
    let mut phi = start.arg().clamp(1e-12, PI - 1e-12);
    let mut best: Option<(f64, Complex, usize)> = None;
    let mut resid = f64::INFINITY;
    for it in 0..max_iter {
        let u = Complex::from_polar(rho.exp(), phi);
        let d = match slope_wirtinger(u, domain) {
            Ok(d) => d,
            Err(_) => return None,
        };
        let (fs, ft) = (d.s - target.s, d.t - target.t);
        resid = fs.abs() + ft.abs();
        if best.map_or(true, |(r, _, _)| resid < r) {
            best = Some((resid, u, it));
        }
        if resid < 1e-14 {
            return Some((u, it));
        }
        // d(s)/d(ξ₁, ξ₂) with u = exp(ξ₁ + iξ₂): du = u dξ₁, iu dξ₂
        let su_u = d.s_u * u;
        let tu_u = d.t_u * u;
        let j = [
            [2.0 * su_u.re, -2.0 * su_u.im],
            [2.0 * tu_u.re, -2.0 * tu_u.im],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let drho = -(j[1][1] * fs - j[0][1] * ft) / det;
        let dphi = -(-j[1][0] * fs + j[0][0] * ft) / det;
        // damped step with backtracking
        let mut lambda = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let nrho = rho + lambda * drho;
            let nphi = (phi + lambda * dphi).clamp(1e-12, PI - 1e-12);
            let nu = Complex::from_polar(nrho.exp(), nphi);
            if let Ok((ns, nt, _)) = slopes_from_u(nu, domain) {
                let nresid = (ns - target.s).abs() + (nt - target.t).abs();
                if nresid < resid {
                    rho = nrho;
                    phi = nphi;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // tolerate a looser exit when progress stalls at rounding level
    let _ = resid;
    let (r, u, it) = best?;
    if r < 1e-11 {
        Some((u, it))
    } else {
        None
    }
}

fn slope_grid_start(
    target: SlopePoint,
    domain: &FundamentalDomain,
    n_rho: usize,
    n_phi: usize,
) -> Complex {
    let scales = domain.u_scales();
    let lo = scales.first().unwrap() * 1e-6;
    let hi = scales.last().unwrap() * 1e6;
    let mut best = (f64::INFINITY, Complex::new(0.0, 1.0));
    for i in 0..n_rho {
        let rho = lo.ln() + (hi / lo).ln() * (i as f64 + 0.5) / n_rho as f64;
        for k in 0..n_phi {
            let phi = PI * (k as f64 + 0.5) / n_phi as f64;
            let u = Complex::from_polar(rho.exp(), phi);
            if let Ok((s, t, _)) = slopes_from_u(u, domain) {
                let d = (s - target.s).abs() + (t - target.t).abs();
                if d < best.0 {
                    best = (d, u);
                }
            }
        }
    }
    best.1
}

/// Invert the slope map: find the unique u ∈ ℍ with slopes (s, t).
///
/// The target must lie strictly inside the pure phase. A damped Newton
/// iteration on log-polar coordinates of u is seeded from a coarse grid,
/// with a finer grid search as fallback.
pub fn u_from_slopes(s: f64, t: f64, domain: &FundamentalDomain) -> FvResult<Inversion> {
    u_from_slopes_with_guess(s, t, domain, None)
}

/// Same as [`u_from_slopes`] but trying `guess` first; used by grid sweeps
/// that walk neighbouring targets.
pub fn u_from_slopes_with_guess(
    s: f64,
    t: f64,
    domain: &FundamentalDomain,
    guess: Option<Complex>,
) -> FvResult<Inversion> {
    let target = SlopePoint::new(s, t);
    if !thermo::in_pure_phase(domain, target, 0.0) {
        return Err(FvError::OutOfPhase { s, t });
    }
    let attempt = |start: Complex| newton_slopes(target, domain, start, 120);
    let solved = guess
        .and_then(attempt)
        .or_else(|| attempt(slope_grid_start(target, domain, 24, 24)))
        .or_else(|| attempt(slope_grid_start(target, domain, 128, 96)));
    match solved {
        Some((u, iterations)) => {
            let scales = domain.u_scales();
            let large_u = u.norm() > 1e8 * scales.last().unwrap()
                || u.norm() < 1e-8 * scales.first().unwrap()
                || u.arg() < 1e-9
                || u.arg() > PI - 1e-9;
            Ok(Inversion {
                u,
                large_u,
                iterations,
            })
        }
        None => Err(FvError::Convergence(format!(
            "slope inversion failed for (s, t) = ({s}, {t})"
        ))),
    }
}

/// Central-difference Wirtinger derivative with one Richardson level.
pub(crate) fn fd_wirtinger<F: Fn(Complex) -> FvResult<f64>>(
    f: F,
    u: Complex,
    h: f64,
) -> FvResult<Complex> {
    let dx = |h: f64| -> FvResult<f64> {
        Ok((f(u + Complex::new(h, 0.0))? - f(u - Complex::new(h, 0.0))?) / (2.0 * h))
    };
    let dy = |h: f64| -> FvResult<f64> {
        Ok((f(u + Complex::new(0.0, h))? - f(u - Complex::new(0.0, h))?) / (2.0 * h))
    };
    let fx = (4.0 * dx(0.5 * h)? - dx(h)?) / 3.0;
    let fy = (4.0 * dy(0.5 * h)? - dy(h)?) / 3.0;
    Ok(Complex::new(0.5 * fx, -0.5 * fy))
}

/// Residuals of the intrinsic-coordinate identities
/// |Y_u/s_u − iθ²/π| and |X_u/t_u + iθ²/π|, with all four Wirtinger
/// derivatives estimated by Richardson-extrapolated central differences.
pub fn wirtinger_check(u: Complex, domain: &FundamentalDomain) -> FvResult<(f64, f64)> {
    require_upper(u, "wirtinger_check")?;
    let h = 1e-5 * (1.0 + u.norm());
    if u.im <= 2.0 * h {
        return Err(FvError::Domain(format!(
            "u = {u} too close to the real axis for the difference stencil"
        )));
    }
    let theta = theta_of(u, domain.regime());
    let kappa = Complex::new(0.0, theta * theta / PI);
    let x_u = fd_wirtinger(|v| Ok(coords_from_u(v, domain)?.field.x), u, h)?;
    let y_u = fd_wirtinger(|v| Ok(coords_from_u(v, domain)?.field.y), u, h)?;
    let s_u = fd_wirtinger(|v| Ok(slopes_from_u(v, domain)?.0), u, h)?;
    let t_u = fd_wirtinger(|v| Ok(slopes_from_u(v, domain)?.1), u, h)?;
    Ok(((y_u / s_u - kappa).norm(), (x_u / t_u + kappa).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_domain() -> FundamentalDomain {
        FundamentalDomain::new(vec![0.2, 0.9], vec![0.2, 0.9]).unwrap()
    }

    fn large_domain() -> FundamentalDomain {
        FundamentalDomain::new(vec![2.0, 1.25], vec![2.0, 1.25]).unwrap()
    }

    #[test]
    fn spectral_solve_examples() {
        // w = 0 gives z = 1 for any r
        let z = solve_spectral(Complex::new(0.0, 0.0), 0.7).unwrap();
        assert!((z - Complex::new(1.0, 0.0)).norm() < 1e-15);
        // r = 0.5, w = i → z = 1.12 − 0.16i
        let z = solve_spectral(Complex::new(0.0, 1.0), 0.5).unwrap();
        assert!((z - Complex::new(1.12, -0.16)).norm() < 1e-15, "z = {z}");
    }

    #[test]
    fn spectral_relation_holds_on_random_inputs() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let w = Complex::new(4.0 * next() - 2.0, 4.0 * next() - 2.0);
            let r = 0.05 + 3.0 * next();
            if (r - 1.0).abs() < 1e-3 {
                continue;
            }
            if let Ok(z) = solve_spectral(w, r) {
                let p = Complex::new(1.0, 0.0) - z - w + (1.0 - r * r) * z * w;
                assert!(p.norm() <= 1e-13 * (1.0 + z.norm() * w.norm()), "P = {p}");
            }
        }
    }

    #[test]
    fn coords_satisfy_defining_relations() {
        for (domain, u) in [
            (small_domain(), Complex::new(0.3, 0.7)),
            (small_domain(), Complex::new(-0.2, 1.9)),
            (large_domain(), Complex::new(-1.0, 2.0)),
            (large_domain(), Complex::new(4.0, 0.01)),
        ] {
            let st = coords_from_u(u, &domain).unwrap();
            for (i, &a) in domain.alphas().iter().enumerate() {
                let lhs = a * a * st.w[i] / (Complex::new(1.0, 0.0) - st.w[i]);
                assert!((lhs - u).norm() <= 1e-12 * (1.0 + u.norm()));
                for (j, &b) in domain.betas().iter().enumerate() {
                    let r = a * b;
                    let p = Complex::new(1.0, 0.0) - st.z[j] - st.w[i]
                        + (1.0 - r * r) * st.z[j] * st.w[i];
                    assert!(p.norm() <= 1e-12, "residual {p} at ({i},{j})");
                }
            }
            for (j, &b) in domain.betas().iter().enumerate() {
                let lhs = (Complex::new(1.0, 0.0) - st.z[j]) / (b * b * st.z[j]);
                assert!((lhs - u).norm() <= 1e-12 * (1.0 + u.norm()));
            }
        }
    }

    #[test]
    fn simple_w_formula_at_i() {
        let d = FundamentalDomain::new(vec![1.0], vec![0.5]).unwrap();
        let st = coords_from_u(Complex::new(0.0, 1.0), &d).unwrap();
        assert!((st.w[0] - Complex::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn simply_periodic_slopes_match_w_form() {
        // m₁ = m₂ = 1, small r: s = arg(w)/arg(w/(1−w)), t likewise in z̄.
        let d = FundamentalDomain::new(vec![0.6], vec![0.7]).unwrap();
        for &u in &[Complex::new(0.4, 0.8), Complex::new(-0.1, 0.3)] {
            let st = coords_from_u(u, &d).unwrap();
            let w = st.w[0];
            let s_ref = w.arg() / (w / (Complex::new(1.0, 0.0) - w)).arg();
            let z = st.z[0].conj();
            let t_ref = z.arg() / (z / (Complex::new(1.0, 0.0) - z)).arg();
            assert!((st.s - s_ref).abs() < 1e-14);
            assert!((st.t - t_ref).abs() < 1e-14);
        }
    }

    #[test]
    fn slopes_stay_in_triangle() {
        for (domain, pts) in [
            (small_domain(), 120usize),
            (large_domain(), 120usize),
        ] {
            for k in 0..pts {
                let rho = (-4.0 + 8.0 * (k as f64) / pts as f64).exp();
                let phi = PI * ((k as f64 * 0.37).fract() * 0.98 + 0.01);
                let (s, t, _) = slopes_from_u(Complex::from_polar(rho, phi), &domain).unwrap();
                assert!(s > 0.0 && t > 0.0 && s + t < 1.0, "({s}, {t})");
            }
        }
    }

    #[test]
    fn round_trip_slopes_to_u() {
        for domain in [small_domain(), large_domain()] {
            let mut worst = 0.0f64;
            for k in 0..60 {
                let rho = (-2.5 + 5.0 * (k as f64) / 60.0).exp();
                let phi = PI * ((k as f64 * 0.618).fract() * 0.9 + 0.05);
                let u = Complex::from_polar(rho, phi);
                let (s, t, _) = slopes_from_u(u, &domain).unwrap();
                let inv = u_from_slopes(s, t, &domain).unwrap();
                worst = worst.max((inv.u - u).norm() / u.norm());
            }
            assert!(worst <= 1e-8, "worst relative round-trip error {worst}");
        }
    }

    #[test]
    fn out_of_phase_rejected() {
        let d = small_domain();
        // slightly above the coexistence curve at s = 0.45
        let t_curve = thermo::coexistence_t_at(&d, 0.45).unwrap();
        let res = u_from_slopes(0.45, t_curve + 1e-3, &d);
        assert!(matches!(res, Err(FvError::OutOfPhase { .. })));
    }

    #[test]
    fn large_r_midpoint_flags_large_u() {
        let d = large_domain();
        let inv = u_from_slopes(0.5 + 1e-10, 0.5 - 2e-10, &d);
        if let Ok(inv) = inv {
            assert!(inv.large_u, "|u| = {} should be flagged", inv.u.norm());
        }
        // the exact midpoint is on ∂𝒩 and must be rejected outright
        assert!(u_from_slopes(0.5, 0.5, &d).is_err());
    }

    #[test]
    fn wirtinger_residuals_small() {
        let d = small_domain();
        let (r1, r2) = wirtinger_check(Complex::new(0.3, 0.7), &d).unwrap();
        assert!(r1 <= 1e-5 && r2 <= 1e-5, "residuals ({r1}, {r2})");
        let d = large_domain();
        let (r1, r2) = wirtinger_check(Complex::new(-1.0, 2.0), &d).unwrap();
        assert!(r1 <= 1e-5 && r2 <= 1e-5, "residuals ({r1}, {r2})");
    }

    #[test]
    fn jacobian_is_orientation_reversing() {
        for domain in [small_domain(), large_domain()] {
            for i in 0..30 {
                for k in 0..30 {
                    let rho = (-3.0 + 6.0 * i as f64 / 29.0).exp();
                    let phi = PI * (0.02 + 0.96 * k as f64 / 29.0);
                    let u = Complex::from_polar(rho, phi);
                    let d = slope_wirtinger(u, &domain).unwrap();
                    // det ∂(s,t)/∂(Re u, Im u) = −4 Im(conj(s_u)·t_u)
                    let j = -4.0 * (d.s_u.conj() * d.t_u).im;
                    assert!(j < 0.0, "Jacobian {j} at u = {u}");
                }
            }
        }
    }

    #[test]
    fn coexistence_endpoint_limits() {
        // u = R + iε: R → 0⁺ gives (s,t) → (1,0); R → ∞ gives (0,1).
        let d = small_domain();
        let eps = 1e-9;
        let (s0, t0, _) = slopes_from_u(Complex::new(1e-7, eps * 1e-7), &d).unwrap();
        assert!((s0 - 1.0).abs() < 1e-3 && t0 < 1e-3, "({s0}, {t0})");
        let (s1, t1, _) = slopes_from_u(Complex::new(1e7, eps * 1e7), &d).unwrap();
        assert!(s1 < 1e-3 && (t1 - 1.0).abs() < 1e-3, "({s1}, {t1})");
    }
}
