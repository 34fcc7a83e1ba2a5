//! Phase diagram in the magnetic-field plane: the amoeba-shaped disordered
//! region and the frozen/semi-frozen classification of field points.

use crate::conformal;
use crate::error::{FvError, FvResult};
use crate::model::{FieldPoint, FundamentalDomain, SlopePoint};
use crate::thermo;
use crate::Complex;
use std::f64::consts::PI;

/// Result of classifying a field point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    /// Inside the amoeba; `u` is the conformal point with these fields.
    Disordered { u: Complex },
    /// Gibbs measure concentrates on a periodic configuration of this slope.
    Frozen { slope: SlopePoint },
    /// Within tolerance of a phase boundary (tie between maximizers).
    Boundary { slope: SlopePoint },
}

/// Newton inversion of the field map (X(u), Y(u)) = `fields`.
///
/// The Jacobian uses the intrinsic-coordinate identities
/// X_u = −(i/π)θ²·t_u and Y_u = (i/π)θ²·s_u, which hold exactly.
pub fn u_from_fields(domain: &FundamentalDomain, fields: FieldPoint) -> FvResult<Complex> {
    u_from_fields_starting(domain, fields, None)
}

fn field_newton(
    domain: &FundamentalDomain,
    fields: FieldPoint,
    start: Complex,
) -> Option<Complex> {
    let mut rho = start.norm().ln();
    let mut phi = start.arg().clamp(1e-12, PI - 1e-12);
    for _ in 0..80 {
        let u = Complex::from_polar(rho.exp(), phi);
        let st = conformal::coords_from_u(u, domain).ok()?;
        let (fx, fy) = (st.field.x - fields.x, st.field.y - fields.y);
        let resid = fx.abs() + fy.abs();
        if resid < 1e-11 {
            return Some(u);
        }
        let d = conformal::slope_wirtinger(u, domain).ok()?;
        let kappa = Complex::new(0.0, d.theta * d.theta / PI);
        let x_u = -kappa * d.t_u;
        let y_u = kappa * d.s_u;
        let xu_u = x_u * u;
        let yu_u = y_u * u;
        let j = [
            [2.0 * xu_u.re, -2.0 * xu_u.im],
            [2.0 * yu_u.re, -2.0 * yu_u.im],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let drho = -(j[1][1] * fx - j[0][1] * fy) / det;
        let dphi = -(-j[1][0] * fx + j[0][0] * fy) / det;
        let mut lambda = 1.0f64;
        let mut moved = false;
        for _ in 0..40 {
            let nrho = rho + lambda * drho;
            let nphi = (phi + lambda * dphi).clamp(1e-12, PI - 1e-12);
            let nu = Complex::from_polar(nrho.exp(), nphi);
            if let Ok(st) = conformal::coords_from_u(nu, domain) {
                let nresid = (st.field.x - fields.x).abs() + (st.field.y - fields.y).abs();
                if nresid < resid {
                    rho = nrho;
                    phi = nphi;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            return None;
        }
    }
    None
}

/// As [`u_from_fields`], optionally seeded by a starting point.
pub fn u_from_fields_starting(
    domain: &FundamentalDomain,
    fields: FieldPoint,
    start: Option<Complex>,
) -> FvResult<Complex> {
    if let Some(s) = start {
        if let Some(u) = field_newton(domain, fields, s) {
            return Ok(u);
        }
    }
    // multi-start over a log-polar grid, best residuals first
    let scales = domain.u_scales();
    let lo = scales.first().unwrap() * 1e-5;
    let hi = scales.last().unwrap() * 1e5;
    let (n_rho, n_phi) = (28usize, 20usize);
    let mut starts: Vec<(f64, Complex)> = Vec::with_capacity(n_rho * n_phi);
    for i in 0..n_rho {
        let rho = lo.ln() + (hi / lo).ln() * (i as f64 + 0.5) / n_rho as f64;
        for k in 0..n_phi {
            let phi = PI * (k as f64 + 0.5) / n_phi as f64;
            let u = Complex::from_polar(rho.exp(), phi);
            if let Ok(st) = conformal::coords_from_u(u, domain) {
                let d = (st.field.x - fields.x).abs() + (st.field.y - fields.y).abs();
                starts.push((d, u));
            }
        }
    }
    starts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for &(_, s) in starts.iter().take(6) {
        if let Some(u) = field_newton(domain, fields, s) {
            return Ok(u);
        }
    }
    Err(FvError::Convergence(format!(
        "field inversion failed for (X, Y) = ({}, {})",
        fields.x, fields.y
    )))
}

/// Classify a field point as disordered, frozen (with its slope) or on a
/// phase boundary.
pub fn classify_phase(domain: &FundamentalDomain, fields: FieldPoint) -> FvResult<Phase> {
    if !fields.x.is_finite() || !fields.y.is_finite() {
        return Err(FvError::InvalidArgument("non-finite fields".into()));
    }
    let cands = thermo::frozen_candidates(domain);
    let mut best = (f64::NEG_INFINITY, SlopePoint::new(0.0, 0.0));
    let mut second = f64::NEG_INFINITY;
    for (p, sig) in cands {
        let v = -sig + p.s * fields.x + p.t * fields.y;
        if v > best.0 {
            second = best.0;
            best = (v, p);
        } else if v > second {
            second = v;
        }
    }
    let tie_tol = 1e-9 * (1.0 + fields.x.abs() + fields.y.abs());
    match u_from_fields(domain, fields) {
        Ok(u) => {
            let (_, f) = thermo::free_energy_conformal(domain, u)?;
            if f > best.0 + tie_tol {
                Ok(Phase::Disordered { u })
            } else {
                Ok(Phase::Boundary { slope: best.1 })
            }
        }
        Err(_) => {
            if best.0 - second <= tie_tol {
                Ok(Phase::Boundary { slope: best.1 })
            } else {
                Ok(Phase::Frozen { slope: best.1 })
            }
        }
    }
}

/// One traced sample of the amoeba boundary.
#[derive(Debug, Clone, Copy)]
pub struct AmoebaPoint {
    /// Real part of the trace parameter u = x + iε (ε extrapolated to 0).
    pub u_re: f64,
    pub fields: FieldPoint,
    /// |X| or |Y| exceeded the tentacle cap and was clamped.
    pub capped: bool,
    /// Index of the real-axis interval between accumulation points.
    pub interval: usize,
}

/// Field cap beyond which amoeba samples are truncated and flagged as
/// tentacle directions.
pub const TENTACLE_CAP: f64 = 30.0;

/// Accumulation points of the boundary trace on the real u axis:
/// 0 and the negatives −α_i², −1/β_j² (deduplicated).
pub fn real_axis_pinches(domain: &FundamentalDomain) -> Vec<f64> {
    let mut pts: Vec<f64> = domain
        .alphas()
        .iter()
        .map(|&a| -a * a)
        .chain(domain.betas().iter().map(|&b| -1.0 / (b * b)))
        .collect();
    pts.push(0.0);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    pts
}

/// Trace the amoeba boundary: (X, Y) along u = x + iε with x covering a
/// symmetric log-spaced net over ℝ accumulating at the pinch points, traced
/// at ε and ε/10 and extrapolated linearly to ε = 0.
pub fn amoeba_boundary(
    domain: &FundamentalDomain,
    epsilon: f64,
    n_samples: usize,
) -> FvResult<Vec<AmoebaPoint>> {
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(FvError::Parameter(format!(
            "epsilon = {epsilon} outside (0, 0.1]"
        )));
    }
    if n_samples < 100 {
        return Err(FvError::Parameter(format!(
            "n_samples = {n_samples} < 100"
        )));
    }
    let pinches = real_axis_pinches(domain);
    let k = pinches.len();
    let per_interval = (n_samples + k) / (k + 1);
    let span = 1e6 * domain.u_scales().last().unwrap();
    let mut out = Vec::new();
    for interval in 0..=k {
        let (a, b) = match interval {
            0 => (pinches[0] - span, pinches[0]),
            i if i == k => (pinches[k - 1], pinches[k - 1] + span),
            i => (pinches[i - 1], pinches[i]),
        };
        for j in 0..per_interval {
            // tanh net: dense near both interval ends
            let xi = 16.0 * ((j as f64 + 0.5) / per_interval as f64 - 0.5);
            let frac = 0.5 * (1.0 + xi.tanh());
            let x = a + (b - a) * frac;
            let f1 = match conformal::coords_from_u(Complex::new(x, epsilon), domain) {
                Ok(st) => st.field,
                Err(_) => continue,
            };
            let f2 = match conformal::coords_from_u(Complex::new(x, epsilon / 10.0), domain) {
                Ok(st) => st.field,
                Err(_) => continue,
            };
            // linear extrapolation through (ε, f1), (ε/10, f2)
            let fx = (10.0 * f2.x - f1.x) / 9.0;
            let fy = (10.0 * f2.y - f1.y) / 9.0;
            let capped = fx.abs() > TENTACLE_CAP || fy.abs() > TENTACLE_CAP;
            out.push(AmoebaPoint {
                u_re: x,
                fields: FieldPoint {
                    x: fx.clamp(-TENTACLE_CAP, TENTACLE_CAP),
                    y: fy.clamp(-TENTACLE_CAP, TENTACLE_CAP),
                },
                capped,
                interval,
            });
        }
    }
    Ok(out)
}

/// Count the tentacle pairs in a traced boundary: capped clusters flanking
/// each accumulation point (both interval ends sharing a pinch).
pub fn tentacle_pair_count(points: &[AmoebaPoint], n_intervals: usize) -> usize {
    // a pinch between interval i−1 and i is a tentacle pair if capped
    // samples appear on at least one flank; the two unbounded ends count as
    // one asymptote each
    let mut pairs = 0;
    for pinch in 1..n_intervals {
        let left = points
            .iter()
            .any(|p| p.interval == pinch - 1 && p.capped);
        let right = points.iter().any(|p| p.interval == pinch && p.capped);
        if left || right {
            pairs += 1;
        }
    }
    let far_left = points.iter().any(|p| p.interval == 0 && p.capped);
    let far_right = points
        .iter()
        .any(|p| p.interval == n_intervals - 1 && p.capped);
    pairs + far_left as usize + far_right as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Regime;

    fn small2() -> FundamentalDomain {
        FundamentalDomain::new(vec![0.2, 0.9], vec![0.2, 0.9]).unwrap()
    }

    fn large2() -> FundamentalDomain {
        FundamentalDomain::new(vec![2.0, 1.25], vec![2.0, 1.25]).unwrap()
    }

    #[test]
    fn deep_frozen_corner() {
        let d = small2();
        let ph = classify_phase(&d, FieldPoint { x: -10.0, y: -10.0 }).unwrap();
        match ph {
            Phase::Frozen { slope } => {
                assert_eq!((slope.s, slope.t), (0.0, 0.0));
            }
            other => panic!("expected frozen (0,0), got {other:?}"),
        }
    }

    #[test]
    fn large_r_zigzag_phase() {
        let d = large2();
        let ph = classify_phase(&d, FieldPoint { x: 9.0, y: 9.0 }).unwrap();
        match ph {
            Phase::Frozen { slope } => {
                assert_eq!((slope.s, slope.t), (0.5, 0.5));
            }
            other => panic!("expected frozen (1/2,1/2), got {other:?}"),
        }
    }

    #[test]
    fn disordered_at_conformal_image() {
        for (d, u) in [
            (small2(), Complex::new(0.3, 0.7)),
            (large2(), Complex::new(-1.0, 2.0)),
        ] {
            let st = conformal::coords_from_u(u, &d).unwrap();
            let ph = classify_phase(&d, st.field).unwrap();
            match ph {
                Phase::Disordered { u: v } => {
                    assert!((v - u).norm() <= 1e-6 * (1.0 + u.norm()), "{v} vs {u}");
                }
                other => panic!("expected disordered at {u}, got {other:?}"),
            }
        }
    }

    #[test]
    fn field_inversion_round_trip() {
        for (d, u) in [
            (small2(), Complex::new(0.15, 0.45)),
            (large2(), Complex::new(2.0, 3.0)),
        ] {
            let st = conformal::coords_from_u(u, &d).unwrap();
            let v = u_from_fields(&d, st.field).unwrap();
            assert!((v - u).norm() <= 1e-7 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn amoeba_symmetric_when_alpha_equals_beta() {
        let d = small2();
        let pts = amoeba_boundary(&d, 1e-2, 400).unwrap();
        // (X, Y) ↦ (Y, X) symmetry of the traced cloud: for each uncapped
        // point there is a mirror point nearby
        let uncapped: Vec<&AmoebaPoint> = pts.iter().filter(|p| !p.capped).collect();
        let mut worst = 0.0f64;
        for p in uncapped.iter().step_by(7) {
            let mirror = (p.fields.y, p.fields.x);
            let d2 = uncapped
                .iter()
                .map(|q| ((q.fields.x - mirror.0).powi(2) + (q.fields.y - mirror.1).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d2);
        }
        assert!(worst < 0.05, "mirror mismatch {worst}");
    }

    #[test]
    fn tentacle_pairs_match_distinct_scales() {
        let d = small2();
        assert_eq!(d.regime(), Regime::SmallR);
        let pts = amoeba_boundary(&d, 1e-2, 600).unwrap();
        let pinches = real_axis_pinches(&d);
        // distinct α² (2) + distinct β⁻² (2) + endpoint asymptotes (2)
        let expected = 2 + 2 + 2;
        assert_eq!(pinches.len() + 1, expected);
        assert_eq!(tentacle_pair_count(&pts, pinches.len() + 1), expected);
    }

    #[test]
    fn classification_flips_across_boundary() {
        // walk outward along a ray from inside the amoeba; classification
        // must flip from Disordered to Frozen exactly once (possibly via a
        // Boundary flag)
        let d = small2();
        let st = conformal::coords_from_u(Complex::new(0.3, 0.7), &d).unwrap();
        let mut phases = Vec::new();
        for k in 0..24 {
            let lam = k as f64 / 4.0;
            let f = FieldPoint {
                x: st.field.x - lam,
                y: st.field.y - lam,
            };
            let ph = classify_phase(&d, f).unwrap();
            phases.push(matches!(ph, Phase::Disordered { .. }));
        }
        assert!(phases[0]);
        assert!(!phases[23]);
        let flips = phases.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1, "phases: {phases:?}");
    }
}
