//! Darboux-integrable limit shapes: tangent-plane envelopes driven by
//! piecewise-constant harmonic boundary data G on ∂ℍ.
//!
//! For a harmonic G the surface (x(u), y(u), h(u)) is recovered from the
//! linear system Re/Im[s_u·x + t_u·y + (G/θ)_u] = 0, where s_u, t_u and
//! (G/θ)_u are exact Wirtinger derivatives (sθ, tθ, θ and G are harmonic, so
//! their ∂_u derivatives are holomorphic and in closed form). The height is
//! h = s·x + t·y + G/θ.

use crate::conformal::{self, SlopeDerivatives};
use crate::error::{FvError, FvResult};
use crate::model::{FundamentalDomain, Regime};
use crate::phase;
use crate::Complex;
use std::f64::consts::PI;

/// Piecewise-constant boundary values on ℝ and their bounded harmonic
/// extension to ℍ.
///
/// `values[k]` holds on the interval (breakpoints[k−1], breakpoints[k]),
/// with `values[0]` on (−∞, p₁) and `values.last()` on (p_K, ∞). The
/// extension is G(u) = v_K + Σ_k (v_{k−1} − v_k)·arg(u − p_k)/π and its
/// holomorphic derivative a sum of simple poles at the breakpoints.
#[derive(Debug, Clone)]
pub struct HarmonicBoundaryData {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// Closed-form tag for built-ins.
    pub name: Option<String>,
}

impl HarmonicBoundaryData {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> FvResult<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(FvError::InvalidArgument(format!(
                "need one more value ({}) than breakpoints ({})",
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FvError::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(FvError::InvalidArgument(
                "non-finite boundary data".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
            name: None,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Boundary value at a real point (undefined exactly at breakpoints,
    /// where the right limit is returned).
    pub fn eval_real(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&p| p <= x);
        self.values[k]
    }

    /// Bounded harmonic extension at u ∈ ℍ.
    pub fn eval(&self, u: Complex) -> f64 {
        let mut g = *self.values.last().unwrap();
        for (k, &p) in self.breakpoints.iter().enumerate() {
            let jump = self.values[k] - self.values[k + 1];
            g += jump * (u - p).arg() / PI;
        }
        g
    }

    /// Holomorphic derivative G_u = Σ_k Δ_k/(2πi(u − p_k)).
    pub fn deriv(&self, u: Complex) -> Complex {
        let mut d = Complex::new(0.0, 0.0);
        for (k, &p) in self.breakpoints.iter().enumerate() {
            let jump = self.values[k] - self.values[k + 1];
            d += jump / (u - p);
        }
        d * Complex::new(0.0, -0.5 / PI) // 1/(2πi)
    }
}

/// Built-in boundary data for the two semi-boxed plane-partition examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinShape {
    SemiBoxedLargeR,
    SemiBoxedSmallR,
}

impl std::str::FromStr for BuiltinShape {
    type Err = FvError;
    fn from_str(s: &str) -> FvResult<Self> {
        match s {
            "semi_boxed_large_r" => Ok(Self::SemiBoxedLargeR),
            "semi_boxed_small_r" => Ok(Self::SemiBoxedSmallR),
            other => Err(FvError::Parameter(format!(
                "unknown limit-shape example `{other}`"
            ))),
        }
    }
}

/// Construct the harmonic boundary data of a built-in example.
///
/// Large r: G = −π on (0, ∞) and 0 on (−∞, 0) — the zig-zag far facet has
/// tangent-plane intercept −½ at θ = 2π. Small r (2×2 weights): G = π on
/// (a, −α₁²), π/2 on (−α₁², −α₂²) with α₁ > α₂, and 0 elsewhere; the free
/// parameter a ranges over (−1/β_min², −α_max²).
pub fn builtin_g(
    shape: BuiltinShape,
    domain: &FundamentalDomain,
    a: Option<f64>,
) -> FvResult<HarmonicBoundaryData> {
    match shape {
        BuiltinShape::SemiBoxedLargeR => {
            if domain.regime() != Regime::LargeR {
                return Err(FvError::Regime(
                    "semi_boxed_large_r needs a large-r domain".into(),
                ));
            }
            let mut g = HarmonicBoundaryData::new(vec![0.0], vec![0.0, -PI])?;
            g.name = Some("semi_boxed_large_r".into());
            Ok(g)
        }
        BuiltinShape::SemiBoxedSmallR => {
            if domain.regime() != Regime::SmallR {
                return Err(FvError::Regime(
                    "semi_boxed_small_r needs a small-r domain".into(),
                ));
            }
            if domain.m1() != 2 || domain.m2() != 2 {
                return Err(FvError::Parameter(
                    "semi_boxed_small_r is defined for 2×2 fundamental domains".into(),
                ));
            }
            let a1 = domain.alphas().iter().cloned().fold(f64::MIN, f64::max);
            let a2 = domain.alphas().iter().cloned().fold(f64::MAX, f64::min);
            let bmin = domain.betas().iter().cloned().fold(f64::MAX, f64::min);
            if a1 == a2 {
                return Err(FvError::Parameter(
                    "semi_boxed_small_r needs distinct column weights".into(),
                ));
            }
            let lo = -1.0 / (bmin * bmin);
            let hi = -a1 * a1;
            let a = a.ok_or_else(|| {
                FvError::Parameter("semi_boxed_small_r needs the parameter a".into())
            })?;
            if !(a > lo && a < hi) {
                return Err(FvError::Parameter(format!(
                    "a = {a} outside the admissible interval ({lo}, {hi})"
                )));
            }
            let mut g = HarmonicBoundaryData::new(
                vec![a, -a1 * a1, -a2 * a2],
                vec![0.0, PI, 0.5 * PI, 0.0],
            )?;
            g.name = Some("semi_boxed_small_r".into());
            Ok(g)
        }
    }
}

/// One point of the tangent-plane envelope.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopePoint {
    pub u: Complex,
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub s: f64,
    pub t: f64,
}

fn envelope_from_derivs(
    u: Complex,
    d: &SlopeDerivatives,
    g: &HarmonicBoundaryData,
) -> FvResult<EnvelopePoint> {
    let g_val = g.eval(u);
    let g_u = g.deriv(u);
    let c = g_val / d.theta;
    let c_u = (g_u - c * d.theta_u) / d.theta;
    let m = [[d.s_u.re, d.t_u.re], [d.s_u.im, d.t_u.im]];
    let rhs = [-c_u.re, -c_u.im];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = d.s_u.norm().max(d.t_u.norm());
    if det.abs() <= 1e-12 * scale * scale {
        return Err(FvError::CriticalPoint { re: u.re, im: u.im });
    }
    let x = (rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det;
    let y = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    Ok(EnvelopePoint {
        u,
        x,
        y,
        h: d.s * x + d.t * y + c,
        s: d.s,
        t: d.t,
    })
}

/// Envelope point at u ∈ ℍ for harmonic data G over the given domain.
pub fn envelope_point(
    u: Complex,
    g: &HarmonicBoundaryData,
    domain: &FundamentalDomain,
) -> FvResult<EnvelopePoint> {
    let d = conformal::slope_wirtinger(u, domain)?;
    envelope_from_derivs(u, &d, g)
}

/// ℍ-sampling specification for envelope meshes: a polar grid, radii
/// geometric in [r_min, r_max], angles uniform in (0, π).
#[derive(Debug, Clone, Copy)]
pub struct MeshSpec {
    pub radial: usize,
    pub angular: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl MeshSpec {
    /// Default spec adapted to the domain's scale spread.
    pub fn for_domain(domain: &FundamentalDomain, radial: usize, angular: usize) -> Self {
        let scales = domain.u_scales();
        MeshSpec {
            radial,
            angular,
            r_min: scales.first().unwrap() * 1e-3,
            r_max: scales.last().unwrap() * 1e3,
        }
    }
}

/// A mesh sample: the envelope point, or the flag of a skipped degenerate
/// point.
#[derive(Debug, Clone)]
pub struct MeshSample {
    pub u: Complex,
    pub point: Option<EnvelopePoint>,
    pub flag: Option<String>,
}

/// Evaluate the envelope over a polar grid in ℍ, skipping degenerate points
/// with per-point flags.
pub fn limit_shape_mesh(
    g: &HarmonicBoundaryData,
    domain: &FundamentalDomain,
    spec: &MeshSpec,
) -> Vec<MeshSample> {
    let mut out = Vec::with_capacity(spec.radial * spec.angular);
    for i in 0..spec.radial {
        let f = (i as f64 + 0.5) / spec.radial as f64;
        let rho = spec.r_min * (spec.r_max / spec.r_min).powf(f);
        for k in 0..spec.angular {
            let phi = PI * (k as f64 + 0.5) / spec.angular as f64;
            let u = Complex::from_polar(rho, phi);
            match envelope_point(u, g, domain) {
                Ok(p) => out.push(MeshSample {
                    u,
                    point: Some(p),
                    flag: None,
                }),
                Err(e) => out.push(MeshSample {
                    u,
                    point: None,
                    flag: Some(e.to_string()),
                }),
            }
        }
    }
    out
}

/// Sampling control for the frozen-boundary trace.
#[derive(Debug, Clone, Copy)]
pub struct FrozenSampling {
    pub epsilon: f64,
    pub per_interval: usize,
}

impl Default for FrozenSampling {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            per_interval: 160,
        }
    }
}

/// One traced point of the frozen boundary (u = x₀ + iε, ε → 0).
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub u_re: f64,
    pub x: f64,
    pub y: f64,
    /// Interval index between consecutive breakpoints/pinch points; a change
    /// of interval marks a flagged gap in the polyline.
    pub interval: usize,
}

/// Real-axis special points of the trace: G breakpoints plus the conformal
/// pinch points 0, −α_i², −1/β_j².
pub fn boundary_special_points(g: &HarmonicBoundaryData, domain: &FundamentalDomain) -> Vec<f64> {
    let mut pts = phase::real_axis_pinches(domain);
    pts.extend_from_slice(g.breakpoints());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    pts
}

/// Trace the liquid-region boundary (x(u), y(u)) along u = x₀ + iε, with
/// gaps flagged at breakpoints of G and at pinch points.
pub fn frozen_boundary(
    g: &HarmonicBoundaryData,
    domain: &FundamentalDomain,
    sampling: FrozenSampling,
) -> Vec<BoundarySample> {
    let pts = boundary_special_points(g, domain);
    let k = pts.len();
    let span = 1e4 * domain.u_scales().last().unwrap();
    let mut out = Vec::new();
    for interval in 0..=k {
        let (a, b) = match interval {
            0 => (pts[0] - span, pts[0]),
            i if i == k => (pts[k - 1], pts[k - 1] + span),
            i => (pts[i - 1], pts[i]),
        };
        for j in 0..sampling.per_interval {
            let xi = 14.0 * ((j as f64 + 0.5) / sampling.per_interval as f64 - 0.5);
            let x0 = a + (b - a) * 0.5 * (1.0 + xi.tanh());
            if let Ok(p) = envelope_point(Complex::new(x0, sampling.epsilon), g, domain) {
                if p.x.is_finite() && p.y.is_finite() {
                    out.push(BoundarySample {
                        u_re: x0,
                        x: p.x,
                        y: p.y,
                        interval,
                    });
                }
            }
        }
    }
    out
}

/// Envelope limits at the special real points themselves (tangency
/// reporting): evaluated at u* + iε.
pub fn tangency_points(
    g: &HarmonicBoundaryData,
    domain: &FundamentalDomain,
    epsilon: f64,
) -> Vec<(f64, FvResult<EnvelopePoint>)> {
    boundary_special_points(g, domain)
        .into_iter()
        .map(|p| (p, envelope_point(Complex::new(p, epsilon), g, domain)))
        .collect()
}
