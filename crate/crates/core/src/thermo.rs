//! Closed-form surface tension and free energy for general m₁×m₂ periodic
//! weights, the coexistence boundary, Legendre duality and the trivial
//! potential (Hessian) identity.
//!
//! In the pure phase the surface tension at slope (s, t) is the average over
//! the fundamental domain of simply periodic three-B-function terms
//! evaluated at (w_i, z_j)(u), where u solves the slope inversion. In the
//! small-r regime σ vanishes identically on the coexistence region between
//! the convex boundary curve and the line s + t = 1. The free energy is the
//! Legendre dual F(X,Y) = max_p (−σ(p) + sX + tY); on the frozen components
//! it is affine with exactly computable intercepts.

use crate::conformal::{self, ConformalState};
use crate::error::{FvError, FvResult};
use crate::model::{FieldPoint, FundamentalDomain, Regime, SlopePoint};
use crate::special::bfunc;
use crate::Complex;
use std::f64::consts::PI;

/// s(R) = (1/m₁) Σ α_i²/(R+α_i²) on the coexistence curve.
fn coexistence_s(domain: &FundamentalDomain, r_param: f64) -> f64 {
    let s: f64 = domain
        .alphas()
        .iter()
        .map(|&a| a * a / (r_param + a * a))
        .sum();
    s / domain.m1() as f64
}

/// t(R) = (1/m₂) Σ β_j²R/(1+β_j²R) on the coexistence curve.
fn coexistence_t(domain: &FundamentalDomain, r_param: f64) -> f64 {
    let t: f64 = domain
        .betas()
        .iter()
        .map(|&b| b * b * r_param / (1.0 + b * b * r_param))
        .sum();
    t / domain.m2() as f64
}

/// Point (s(R), t(R)) of the small-r coexistence boundary curve.
///
/// As R runs over (0, ∞) the curve connects (1, 0) to (0, 1). Large-r
/// domains have no coexistence phase and are rejected.
pub fn coexistence_boundary(domain: &FundamentalDomain, r_param: f64) -> FvResult<SlopePoint> {
    if domain.regime() != Regime::SmallR {
        return Err(FvError::Regime(
            "coexistence boundary exists only in the small-r regime".into(),
        ));
    }
    if !(r_param > 0.0) || !r_param.is_finite() {
        return Err(FvError::InvalidArgument(format!(
            "coexistence parameter R = {r_param} must be positive"
        )));
    }
    Ok(SlopePoint::new(
        coexistence_s(domain, r_param),
        coexistence_t(domain, r_param),
    ))
}

/// Height t of the coexistence curve above horizontal slope s, by inverting
/// the strictly monotone s(R).
pub fn coexistence_t_at(domain: &FundamentalDomain, s: f64) -> FvResult<f64> {
    if domain.regime() != Regime::SmallR {
        return Err(FvError::Regime(
            "coexistence boundary exists only in the small-r regime".into(),
        ));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(FvError::Domain(format!("s = {s} outside (0, 1)")));
    }
    // s(R) decreases from 1 to 0; bisect in log R.
    let scales = domain.u_scales();
    let mut lo = (scales.first().unwrap() * 1e-18).ln();
    let mut hi = (scales.last().unwrap() * 1e18).ln();
    debug_assert!(coexistence_s(domain, lo.exp()) > s);
    debug_assert!(coexistence_s(domain, hi.exp()) < s);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if coexistence_s(domain, mid.exp()) > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(coexistence_t(domain, (0.5 * (lo + hi)).exp()))
}

/// Strict membership in the pure phase, with all inequalities loosened by
/// `margin` (use 0 for the open region itself).
pub fn in_pure_phase(domain: &FundamentalDomain, p: SlopePoint, margin: f64) -> bool {
    if !(p.s > margin && p.t > margin && p.s + p.t < 1.0 - margin) {
        return false;
    }
    match domain.regime() {
        Regime::LargeR => true,
        Regime::SmallR => match coexistence_t_at(domain, p.s) {
            Ok(tc) => p.t < tc - margin,
            Err(_) => false,
        },
    }
}

/// Whether a small-r slope lies in the coexistence region (curve and the
/// s + t = 1 edge included).
pub fn in_coexistence(domain: &FundamentalDomain, p: SlopePoint) -> bool {
    if domain.regime() != Regime::SmallR || !p.in_triangle() {
        return false;
    }
    if !(p.s > 0.0 && p.s < 1.0 && p.t > 0.0) {
        // the only coexistence points on the legs are the two endpoints
        return (p.s == 1.0 && p.t == 0.0) || (p.s == 0.0 && p.t == 1.0);
    }
    match coexistence_t_at(domain, p.s) {
        Ok(tc) => p.t >= tc,
        Err(_) => false,
    }
}

/// Surface tension double sum evaluated from a conformal bundle.
pub fn sigma_from_state(state: &ConformalState, domain: &FundamentalDomain) -> f64 {
    let (s, t) = (state.s, state.t);
    let one = Complex::new(1.0, 0.0);
    let mut acc = 0.0;
    for (i, &a) in domain.alphas().iter().enumerate() {
        let wi = state.w[i];
        let b_w = bfunc(wi).unwrap_or(f64::NAN);
        let log_w = match domain.regime() {
            Regime::LargeR => (wi * (one - wi)).norm().ln(),
            Regime::SmallR => 0.0,
        };
        for (j, &b) in domain.betas().iter().enumerate() {
            let zj = state.z[j];
            let r2 = (a * b) * (a * b);
            // (1−w)/z = α²(1+β²u)/(u+α²) and (z+w−1)/w = (1−r²)z
            let a2 = (one - wi) / zj;
            let a3 = (1.0 - r2) * zj;
            let term = match domain.regime() {
                Regime::SmallR => {
                    (1.0 - s - t) * b_w
                        + (1.0 - s) * bfunc(a2).unwrap_or(f64::NAN)
                        + s * bfunc(a3).unwrap_or(f64::NAN)
                }
                Regime::LargeR => {
                    (1.0 - s - t) * (-b_w + log_w)
                        - (1.0 - s) * bfunc(a2).unwrap_or(f64::NAN)
                        - s * bfunc(a3).unwrap_or(f64::NAN)
                }
            };
            acc += term;
        }
    }
    acc / (domain.m1() * domain.m2()) as f64
}

/// Surface tension σ(s, t).
///
/// Small r: 0 on the coexistence region, the double sum on the pure phase.
/// Large r: the double sum on the interior of 𝒩. Boundary slopes are
/// evaluated as radial limits.
pub fn surface_tension(domain: &FundamentalDomain, p: SlopePoint) -> FvResult<f64> {
    surface_tension_with_guess(domain, p, None).map(|(v, _)| v)
}

/// Like [`surface_tension`], optionally seeded with a previous u (for grid
/// sweeps); returns the inversion point alongside when one was used.
pub fn surface_tension_with_guess(
    domain: &FundamentalDomain,
    p: SlopePoint,
    guess: Option<Complex>,
) -> FvResult<(f64, Option<Complex>)> {
    if !p.in_triangle() {
        return Err(FvError::Domain(format!(
            "slope ({}, {}) outside the slope triangle",
            p.s, p.t
        )));
    }
    if domain.regime() == Regime::SmallR && in_coexistence(domain, p) {
        return Ok((0.0, None));
    }
    let boundary_eps = 1e-9;
    if p.s <= boundary_eps || p.t <= boundary_eps || p.s + p.t >= 1.0 - boundary_eps {
        return Ok((sigma_boundary_radial(domain, p)?, None));
    }
    let inv = conformal::u_from_slopes_with_guess(p.s, p.t, domain, guess)?;
    let state = conformal::coords_from_u(inv.u, domain)?;
    Ok((sigma_from_state(&state, domain), Some(inv.u)))
}

/// Radial-limit estimate of σ at a boundary slope: evaluate at two pulled-in
/// points toward the centroid and extrapolate linearly.
pub fn sigma_boundary_radial(domain: &FundamentalDomain, p: SlopePoint) -> FvResult<f64> {
    let centroid = SlopePoint::new(0.25, 0.25);
    let dir = (centroid.s - p.s, centroid.t - p.t);
    let eval = |d: f64| -> FvResult<f64> {
        let q = SlopePoint::new(p.s + dir.0 * d, p.t + dir.1 * d);
        if domain.regime() == Regime::SmallR && in_coexistence(domain, q) {
            return Ok(0.0);
        }
        let inv = conformal::u_from_slopes(q.s, q.t, domain)?;
        let state = conformal::coords_from_u(inv.u, domain)?;
        Ok(sigma_from_state(&state, domain))
    };
    let (d1, d2) = (2e-3, 1e-3);
    let f1 = eval(d1)?;
    let f2 = eval(d2)?;
    Ok(f2 + (f2 - f1) * d2 / (d1 - d2))
}

/// Free energy and fields at a conformal point: ((X, Y), F) with
/// F = −σ + sX + tY assembled from the per-(i,j) closed forms.
pub fn free_energy_conformal(
    domain: &FundamentalDomain,
    u: Complex,
) -> FvResult<(FieldPoint, f64)> {
    let state = conformal::coords_from_u(u, domain)?;
    Ok((state.field, free_energy_from_state(&state, domain)))
}

/// Per-(i, j) closed-form free energy sum at an already-computed bundle.
pub fn free_energy_from_state(state: &ConformalState, domain: &FundamentalDomain) -> f64 {
    let s = state.s;
    let one = Complex::new(1.0, 0.0);
    let mut acc = 0.0;
    for (i, &a) in domain.alphas().iter().enumerate() {
        let wi = state.w[i];
        let b_w = bfunc(wi).unwrap_or(f64::NAN);
        let log_w = (wi * (one - wi)).norm().ln();
        for (j, &b) in domain.betas().iter().enumerate() {
            let zj = state.z[j];
            let r2 = (a * b) * (a * b);
            let a2 = (one - wi) / zj;
            let a3 = (1.0 - r2) * zj;
            let b_a2 = bfunc(a2).unwrap_or(f64::NAN);
            let b_a3 = bfunc(a3).unwrap_or(f64::NAN);
            let b_z = bfunc(zj).unwrap_or(f64::NAN);
            let term = match domain.regime() {
                Regime::SmallR => -(1.0 - s) * b_w - (1.0 - s) * b_a2 - s * b_a3 + s * b_z,
                Regime::LargeR => {
                    let log_z = (zj * (one - zj)).norm().ln();
                    (1.0 - s) * (b_w - log_w) + (1.0 - s) * b_a2 + s * b_a3
                        - s * (b_z + log_z)
                }
            };
            acc += term;
        }
    }
    acc / (domain.m1() * domain.m2()) as f64
}

/// Frozen and semi-frozen slope candidates with their exact surface-tension
/// boundary values.
///
/// The corners (1,0) and (0,1) carry σ = 0; the origin carries
/// −mean log|1−r²|; the semi-frozen slopes (k/m₁, 0) and (0, k/m₂) the
/// best-subset column/row fillings; the zig-zag slope (½,½) in the large-r
/// regime carries −mean log r.
pub fn frozen_candidates(domain: &FundamentalDomain) -> Vec<(SlopePoint, f64)> {
    let m1 = domain.m1();
    let m2 = domain.m2();
    let mm = (m1 * m2) as f64;
    let mut out = Vec::new();

    let empty_sum: f64 = domain
        .alphas()
        .iter()
        .flat_map(|&a| {
            domain
                .betas()
                .iter()
                .map(move |&b| (1.0 - (a * b) * (a * b)).abs().ln())
        })
        .sum();
    out.push((SlopePoint::new(0.0, 0.0), -empty_sum / mm));
    out.push((SlopePoint::new(1.0, 0.0), 0.0));
    out.push((SlopePoint::new(0.0, 1.0), 0.0));

    // filling k columns with vertical paths: empty weight lost on those
    // columns; choose the best subset
    let col_cost: Vec<f64> = (0..m1)
        .map(|i| {
            domain
                .betas()
                .iter()
                .map(|&b| (1.0 - (domain.alphas()[i] * b).powi(2)).abs().ln())
                .sum()
        })
        .collect();
    for k in 1..m1 {
        let best = best_remaining_sum(&col_cost, k);
        out.push((SlopePoint::new(k as f64 / m1 as f64, 0.0), -best / mm));
    }
    let row_cost: Vec<f64> = (0..m2)
        .map(|j| {
            domain
                .alphas()
                .iter()
                .map(|&a| (1.0 - (a * domain.betas()[j]).powi(2)).abs().ln())
                .sum()
        })
        .collect();
    for k in 1..m2 {
        let best = best_remaining_sum(&row_cost, k);
        out.push((SlopePoint::new(0.0, k as f64 / m2 as f64), -best / mm));
    }

    if domain.regime() == Regime::LargeR {
        let log_r: f64 = domain
            .alphas()
            .iter()
            .flat_map(|&a| domain.betas().iter().map(move |&b| (a * b).ln()))
            .sum();
        out.push((SlopePoint::new(0.5, 0.5), -log_r / mm));
    }
    out
}

/// Max over k-subsets R of Σ_{i∉R} cost_i (the retained empty-vertex mass
/// after filling k rows/columns).
fn best_remaining_sum(cost: &[f64], k: usize) -> f64 {
    let total: f64 = cost.iter().sum();
    // drop the k smallest-retention entries, i.e. remove the k with the
    // largest cost… we want to maximize the REMAINING sum, so remove the k
    // smallest costs.
    let mut sorted = cost.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    total - sorted[..k].iter().sum::<f64>()
}

/// Legendre-dual free energy F(X, Y) = max over 𝒩 of (−σ + sX + tY).
///
/// Inside the disordered region the max is located by Newton on the field
/// parameterization and agrees with [`free_energy_conformal`]; in frozen
/// regions the affine value at the frozen candidate slope is returned. A
/// slope-grid search with local refinement backs up the Newton route.
pub fn free_energy(domain: &FundamentalDomain, fields: FieldPoint) -> FvResult<f64> {
    if !fields.x.is_finite() || !fields.y.is_finite() {
        return Err(FvError::InvalidArgument("non-finite fields".into()));
    }
    let frozen = frozen_candidates(domain)
        .into_iter()
        .map(|(p, sig)| -sig + p.s * fields.x + p.t * fields.y)
        .fold(f64::NEG_INFINITY, f64::max);

    if let Ok(u) = crate::phase::u_from_fields(domain, fields) {
        let (_, f) = free_energy_conformal(domain, u)?;
        return Ok(f.max(frozen));
    }

    // grid + refinement fallback (σ convex, so refinement converges)
    let value = |p: SlopePoint, guess: Option<Complex>| -> Option<(f64, Option<Complex>)> {
        match surface_tension_with_guess(domain, p, guess) {
            Ok((sig, u)) => Some((-sig + p.s * fields.x + p.t * fields.y, u)),
            Err(_) => None,
        }
    };
    let mut best: (f64, SlopePoint) = (f64::NEG_INFINITY, SlopePoint::new(0.25, 0.25));
    let n = 200;
    for i in 1..n {
        let s = i as f64 / n as f64;
        let mut guess = None;
        for j in 1..(n - i) {
            let t = j as f64 / n as f64;
            if let Some((v, u)) = value(SlopePoint::new(s, t), guess) {
                guess = u;
                if v > best.0 {
                    best = (v, SlopePoint::new(s, t));
                }
            }
        }
    }
    let mut width = 2.0 / n as f64;
    for _ in 0..3 {
        let center = best.1;
        let m = 14;
        for i in 0..=m {
            for j in 0..=m {
                let p = SlopePoint::new(
                    center.s + width * (i as f64 / m as f64 - 0.5),
                    center.t + width * (j as f64 / m as f64 - 0.5),
                );
                if p.s > 0.0 && p.t > 0.0 && p.s + p.t < 1.0 {
                    if let Some((v, _)) = value(p, None) {
                        if v > best.0 {
                            best = (v, p);
                        }
                    }
                }
            }
        }
        width *= 0.15;
    }
    if best.0 > frozen {
        // polish through the conformal chart when the max is interior
        if let Ok(inv) = conformal::u_from_slopes(best.1.s, best.1.t, domain) {
            if let Ok(u) = crate::phase::u_from_fields_starting(domain, fields, Some(inv.u)) {
                let (_, f) = free_energy_conformal(domain, u)?;
                return Ok(f.max(frozen));
            }
        }
    }
    Ok(best.0.max(frozen))
}

/// Relative residual of the trivial-potential identity
/// |√det H_σ − θ²/π| / (θ²/π), with H_σ estimated by second central
/// differences of the surface tension around (s(u), t(u)).
pub fn hessian_identity(domain: &FundamentalDomain, u: Complex, step: f64) -> FvResult<f64> {
    let (s, t, theta) = conformal::slopes_from_u(u, domain)?;
    let h = step;
    // the whole stencil must stay well inside the pure phase
    for (ds, dt) in [
        (0.0, 0.0),
        (h, 0.0),
        (-h, 0.0),
        (0.0, h),
        (0.0, -h),
        (h, h),
        (h, -h),
        (-h, h),
        (-h, -h),
    ] {
        if !in_pure_phase(domain, SlopePoint::new(s + ds, t + dt), h * 0.1) {
            return Err(FvError::Stencil(format!(
                "stencil point ({}, {}) exits the pure phase",
                s + ds,
                t + dt
            )));
        }
    }
    let sig = |ds: f64, dt: f64| -> FvResult<f64> {
        surface_tension(domain, SlopePoint::new(s + ds, t + dt))
    };
    let c = sig(0.0, 0.0)?;
    let ss = (sig(h, 0.0)? - 2.0 * c + sig(-h, 0.0)?) / (h * h);
    let tt = (sig(0.0, h)? - 2.0 * c + sig(0.0, -h)?) / (h * h);
    let st = (sig(h, h)? - sig(h, -h)? - sig(-h, h)? + sig(-h, -h)?) / (4.0 * h * h);
    let det = ss * tt - st * st;
    if det <= 0.0 {
        return Err(FvError::Convergence(format!(
            "non-positive Hessian determinant {det} at u = {u}"
        )));
    }
    let target = theta * theta / PI;
    Ok((det.sqrt() - target).abs() / target)
}

/// Isotropy of the Hessian of σ in the intrinsic chart: relative spread of
/// the two eigenvalues of ∂²σ/∂(Re u, Im u)² (σ composed with the slope
/// map). Zero means exactly scalar.
pub fn hessian_isotropy(domain: &FundamentalDomain, u: Complex, step: f64) -> FvResult<f64> {
    let g = |du: Complex| -> FvResult<f64> {
        let (s, t, _) = conformal::slopes_from_u(u + du, domain)?;
        surface_tension(domain, SlopePoint::new(s, t))
    };
    let h = step * (1.0 + u.norm());
    let c = g(Complex::new(0.0, 0.0))?;
    let aa = (g(Complex::new(h, 0.0))? - 2.0 * c + g(Complex::new(-h, 0.0))?) / (h * h);
    let bb = (g(Complex::new(0.0, h))? - 2.0 * c + g(Complex::new(0.0, -h))?) / (h * h);
    let ab = (g(Complex::new(h, h))? - g(Complex::new(h, -h))? - g(Complex::new(-h, h))?
        + g(Complex::new(-h, -h))?)
        / (4.0 * h * h);
    // eigenvalues of [[aa, ab], [ab, bb]]
    let mean = 0.5 * (aa + bb);
    let disc = (0.25 * (aa - bb) * (aa - bb) + ab * ab).sqrt();
    let (l1, l2) = (mean + disc, mean - disc);
    Ok((l1 - l2).abs() / l1.abs().max(l2.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small2() -> FundamentalDomain {
        FundamentalDomain::new(vec![0.2, 0.9], vec![0.2, 0.9]).unwrap()
    }

    fn large2() -> FundamentalDomain {
        FundamentalDomain::new(vec![2.0, 1.25], vec![2.0, 1.25]).unwrap()
    }

    #[test]
    fn coexistence_value_at_r_one() {
        let p = coexistence_boundary(&small2(), 1.0).unwrap();
        assert!((p.s - 0.2429876753081173).abs() < 1e-12);
        assert!((p.t - 0.2429876753081173).abs() < 1e-12);
    }

    #[test]
    fn coexistence_endpoints() {
        let d = small2();
        let p0 = coexistence_boundary(&d, 1e-14).unwrap();
        assert!((p0.s - 1.0).abs() < 1e-10 && p0.t < 1e-10);
        let p1 = coexistence_boundary(&d, 1e14).unwrap();
        assert!(p1.s < 1e-10 && (p1.t - 1.0).abs() < 1e-10);
        assert!(coexistence_boundary(&large2(), 1.0).is_err());
    }

    #[test]
    fn coexistence_curve_is_convex() {
        let d = small2();
        let n = 200;
        let pts: Vec<SlopePoint> = (0..n)
            .map(|k| {
                let r = (-8.0 + 16.0 * k as f64 / (n - 1) as f64).exp();
                coexistence_boundary(&d, r).unwrap()
            })
            .collect();
        // t as a function of s: discrete second differences keep one sign
        let mut signs = 0;
        for w in pts.windows(3) {
            let (a, b, c) = (w[2], w[1], w[0]); // s increasing
            let slope1 = (b.t - a.t) / (b.s - a.s);
            let slope2 = (c.t - b.t) / (c.s - b.s);
            if slope2 < slope1 - 1e-12 {
                signs += 1;
            }
        }
        assert_eq!(signs, 0, "curve not convex");
    }

    #[test]
    fn sigma_zero_in_coexistence_region() {
        let d = small2();
        let v = surface_tension(&d, SlopePoint::new(0.45, 0.45)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sigma_positive_in_pure_phase_small_r() {
        let d = small2();
        for p in [
            SlopePoint::new(0.3, 0.1),
            SlopePoint::new(0.1, 0.3),
            SlopePoint::new(0.15, 0.15),
        ] {
            assert!(in_pure_phase(&d, p, 0.0));
            let v = surface_tension(&d, p).unwrap();
            assert!(v > 0.0, "σ({}, {}) = {v}", p.s, p.t);
        }
    }

    #[test]
    fn simply_periodic_sigma_matches_display() {
        // m₁ = m₂ = 1, r = 0.5: the double sum degenerates to
        // (1−s−t)B(w) + (1−s)B((1−w)/z) + sB((z+w−1)/w)
        let d = FundamentalDomain::new(vec![0.5], vec![1.0]).unwrap();
        for k in 0..20 {
            let u = Complex::from_polar(
                (-1.5 + 3.0 * k as f64 / 19.0).exp(),
                PI * (0.1 + 0.8 * ((k as f64 * 0.7).fract())),
            );
            let st = conformal::coords_from_u(u, &d).unwrap();
            if !in_pure_phase(&d, SlopePoint::new(st.s, st.t), 1e-6) {
                continue;
            }
            let (w, z) = (st.w[0], st.z[0]);
            let one = Complex::new(1.0, 0.0);
            let display = (1.0 - st.s - st.t) * bfunc(w).unwrap()
                + (1.0 - st.s) * bfunc((one - w) / z).unwrap()
                + st.s * bfunc((z + w - one) / w).unwrap();
            let sigma = surface_tension(&d, SlopePoint::new(st.s, st.t)).unwrap();
            assert!(
                (sigma - display).abs() < 1e-10,
                "u = {u}: {sigma} vs {display}"
            );
        }
    }

    #[test]
    fn row_column_exchange_symmetry() {
        // σ_{α,β}(s,t) = σ_{β,α}(t,s)
        let d1 = FundamentalDomain::new(vec![0.3, 0.7], vec![0.4, 0.55]).unwrap();
        let d2 = FundamentalDomain::new(vec![0.4, 0.55], vec![0.3, 0.7]).unwrap();
        for p in [SlopePoint::new(0.3, 0.2), SlopePoint::new(0.12, 0.4)] {
            if !in_pure_phase(&d1, p, 1e-6) {
                continue;
            }
            let a = surface_tension(&d1, p).unwrap();
            let b = surface_tension(&d2, SlopePoint::new(p.t, p.s)).unwrap();
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn legendre_duality_at_conformal_points() {
        for (domain, us) in [
            (
                small2(),
                vec![Complex::new(0.3, 0.7), Complex::new(-0.5, 0.4)],
            ),
            (
                large2(),
                vec![Complex::new(-1.0, 2.0), Complex::new(0.7, 1.1)],
            ),
        ] {
            for u in us {
                let st = conformal::coords_from_u(u, &domain).unwrap();
                let sigma = sigma_from_state(&st, &domain);
                let f = free_energy_from_state(&st, &domain);
                let gap = f + sigma - st.s * st.field.x - st.t * st.field.y;
                assert!(gap.abs() <= 1e-10, "duality gap {gap} at u = {u}");
            }
        }
    }

    #[test]
    fn five_term_identity_on_curve() {
        // B(w) + B((1−w)/z) + B(z) = B((z+w−1)/w) on P(z, w) = 0 — the
        // circle-of-four-points dilogarithm identity behind the row/column
        // symmetry. Exercised on both regimes.
        for (domain, u) in [
            (small2(), Complex::new(0.37, 0.81)),
            (large2(), Complex::new(-0.9, 1.3)),
        ] {
            let st = conformal::coords_from_u(u, &domain).unwrap();
            let one = Complex::new(1.0, 0.0);
            for (i, &_a) in domain.alphas().iter().enumerate() {
                for (j, &_b) in domain.betas().iter().enumerate() {
                    let (w, z) = (st.w[i], st.z[j]);
                    let lhs = bfunc(w).unwrap()
                        + bfunc((one - w) / z).unwrap()
                        + bfunc(z).unwrap();
                    let rhs = bfunc((z + w - one) / w).unwrap();
                    assert!((lhs - rhs).abs() < 1e-9, "({i},{j}): {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn hessian_identity_small_step() {
        let d = small2();
        let r = hessian_identity(&d, Complex::new(0.0, 1.0), 1e-4).unwrap();
        assert!(r <= 1e-3, "residual {r}");
        let d = large2();
        let r = hessian_identity(&d, Complex::new(-0.5, 1.5), 1e-4).unwrap();
        assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn hessian_isotropy_simply_periodic() {
        let d = FundamentalDomain::new(vec![0.5], vec![1.0]).unwrap();
        let spread = hessian_isotropy(&d, Complex::new(0.4, 0.9), 1e-4).unwrap();
        assert!(spread <= 1e-3, "eigenvalue spread {spread}");
    }

    #[test]
    fn frozen_limits_of_free_energy() {
        let d = small2();
        // X, Y → −∞: empty configuration dominates, F → mean log|1−r²|
        let f = free_energy(&d, FieldPoint { x: -30.0, y: -30.0 }).unwrap();
        let mean: f64 = d
            .alphas()
            .iter()
            .flat_map(|&a| {
                d.betas()
                    .iter()
                    .map(move |&b| (1.0 - (a * b) * (a * b)).abs().ln())
            })
            .sum::<f64>()
            / 4.0;
        assert!((f - (-30.0 * 0.0) - mean).abs() < 1e-9, "{f} vs {mean}");
        // very large X: all-vertical configuration, F − X → 0
        let f = free_energy(&d, FieldPoint { x: 40.0, y: 0.0 }).unwrap();
        assert!((f - 40.0).abs() < 1e-9, "F − X = {}", f - 40.0);
    }
}
