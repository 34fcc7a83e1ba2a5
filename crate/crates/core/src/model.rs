//! Model definition: periodic weights, regime classification, configuration
//! weights and height functions.
//!
//! A fundamental domain is a pair of positive weight sequences (α⃗, β⃗) with
//! the vertex parameter r at (x, y) given by α_{x mod m₁}·β_{y mod m₂}. The
//! products must be uniformly < 1 (small-r regime) or uniformly > 1 (large-r
//! regime); mixed or critical products are rejected at construction.
//!
//! Configurations are monotone nonintersecting lattice paths: North-going on
//! vertical edges, West-going on horizontal edges, vertex disjoint. At every
//! vertex the incident occupied edges form one of exactly five local
//! patterns. Corners carry weight r, empty vertices |1−r²|, pass-throughs 1,
//! and the magnetic field attaches e^X to each vertical and e^Y to each
//! horizontal edge.

use crate::error::{FvError, FvResult};
use serde::Deserialize;

/// Which side of the critical manifold the weights sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// All α_i β_j < 1.
    SmallR,
    /// All α_i β_j > 1.
    LargeR,
}

/// Periodic weight data (α⃗, β⃗) plus the regime flag.
#[derive(Debug, Clone)]
pub struct FundamentalDomain {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    regime: Regime,
}

impl FundamentalDomain {
    /// Build a domain from positive weight sequences, classifying the regime.
    ///
    /// Rejects non-positive or non-finite entries, any product equal to 1
    /// and products straddling 1.
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> FvResult<Self> {
        if alphas.is_empty() || betas.is_empty() {
            return Err(FvError::InvalidArgument(
                "alphas and betas must be nonempty".into(),
            ));
        }
        for (name, seq) in [("alphas", &alphas), ("betas", &betas)] {
            for (k, &v) in seq.iter().enumerate() {
                if !v.is_finite() || v <= 0.0 {
                    return Err(FvError::InvalidArgument(format!(
                        "{name}[{k}] = {v} is not a positive real"
                    )));
                }
            }
        }
        let mut lo: Option<(usize, usize, f64)> = None;
        let mut hi: Option<(usize, usize, f64)> = None;
        for (i, &a) in alphas.iter().enumerate() {
            for (j, &b) in betas.iter().enumerate() {
                let r = a * b;
                if r == 1.0 {
                    return Err(FvError::CriticalWeight { i, j });
                }
                if r < 1.0 {
                    lo = Some((i, j, r));
                } else {
                    hi = Some((i, j, r));
                }
            }
        }
        match (lo, hi) {
            (Some(_), None) => Ok(Self {
                alphas,
                betas,
                regime: Regime::SmallR,
            }),
            (None, Some(_)) => Ok(Self {
                alphas,
                betas,
                regime: Regime::LargeR,
            }),
            (Some((i0, j0, lo)), Some((i1, j1, hi))) => Err(FvError::MixedRegime {
                i0,
                j0,
                lo,
                i1,
                j1,
                hi,
            }),
            (None, None) => unreachable!(),
        }
    }

    /// Parse a structured config file with keys `alphas` and `betas`.
    /// The regime is auto-detected; malformed files produce a line-numbered
    /// parse error.
    pub fn from_config_str(text: &str) -> FvResult<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            alphas: Vec<f64>,
            betas: Vec<f64>,
        }
        let raw: Raw = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            FvError::Parse {
                line,
                msg: e.message().to_string(),
            }
        })?;
        Self::new(raw.alphas, raw.betas)
    }

    pub fn m1(&self) -> usize {
        self.alphas.len()
    }

    pub fn m2(&self) -> usize {
        self.betas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Column weight α_{x mod m₁} (x may be any integer).
    pub fn alpha_at(&self, x: i64) -> f64 {
        self.alphas[x.rem_euclid(self.m1() as i64) as usize]
    }

    /// Row weight β_{y mod m₂}.
    pub fn beta_at(&self, y: i64) -> f64 {
        self.betas[y.rem_euclid(self.m2() as i64) as usize]
    }

    /// Vertex parameter r at (x, y).
    pub fn r_at(&self, x: i64, y: i64) -> f64 {
        self.alpha_at(x) * self.beta_at(y)
    }

    /// Real-axis scales α_i² and 1/β_j² where the conformal map accumulates.
    pub fn u_scales(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .alphas
            .iter()
            .map(|a| a * a)
            .chain(self.betas.iter().map(|b| 1.0 / (b * b)))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// Magnetic field (X, Y): per-edge log-weights e^X on vertical edges and
/// e^Y on horizontal edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
}

impl FieldPoint {
    pub const ZERO: FieldPoint = FieldPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> FvResult<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(FvError::InvalidArgument(format!(
                "field ({x}, {y}) is not finite"
            )))
        }
    }
}

/// A slope (s, t) in the triangle 𝒩 with vertices (0,0), (1,0), (0,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePoint {
    pub s: f64,
    pub t: f64,
}

impl SlopePoint {
    pub fn new(s: f64, t: f64) -> Self {
        Self { s, t }
    }

    /// Membership in the closed slope triangle.
    pub fn in_triangle(&self) -> bool {
        self.s >= 0.0 && self.t >= 0.0 && self.s + self.t <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Torus,
    BoundedRegion,
}

/// One of the five admissible local patterns at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexPattern {
    /// No incident occupied edge; weight |1−r²|.
    Empty,
    /// Vertical pass-through; weight 1.
    Vertical,
    /// Horizontal pass-through; weight 1.
    Horizontal,
    /// Enter from the south, exit west; weight r.
    CornerSouthWest,
    /// Enter from the east, exit north; weight r.
    CornerEastNorth,
}

/// Edge-occupation map of an MNLP configuration on a torus or a bounded
/// rectangular patch.
///
/// `vertical(x, y)` is the edge from vertex (x, y) up to (x, y+1);
/// `horizontal(x, y)` the edge from (x, y) east to (x+1, y). A bounded patch
/// is a window onto a larger configuration: paths may enter and leave
/// through the rim, the five-vertex rule is enforced at interior vertices
/// (all four incident edges inside the window), and only those vertices
/// carry weights. The storage slots that would wrap (y = height−1 vertical,
/// x = width−1 horizontal) are unused on a bounded patch and must stay
/// empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnlpConfig {
    pub width: usize,
    pub height: usize,
    pub topology: Topology,
    vertical: Vec<bool>,
    horizontal: Vec<bool>,
}

impl MnlpConfig {
    pub fn empty(width: usize, height: usize, topology: Topology) -> Self {
        Self {
            width,
            height,
            topology,
            vertical: vec![false; width * height],
            horizontal: vec![false; width * height],
        }
    }

    fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        x + self.width * y
    }

    pub fn vertical(&self, x: usize, y: usize) -> bool {
        self.vertical[self.idx(x, y)]
    }

    pub fn horizontal(&self, x: usize, y: usize) -> bool {
        self.horizontal[self.idx(x, y)]
    }

    pub fn set_vertical(&mut self, x: usize, y: usize, occupied: bool) {
        let i = self.idx(x, y);
        self.vertical[i] = occupied;
    }

    pub fn set_horizontal(&mut self, x: usize, y: usize, occupied: bool) {
        let i = self.idx(x, y);
        self.horizontal[i] = occupied;
    }

    /// Incident occupied edges at vertex (x, y): (south, east, north, west).
    fn incidences(&self, x: usize, y: usize) -> (bool, bool, bool, bool) {
        let w = self.width;
        let h = self.height;
        let south = match self.topology {
            Topology::Torus => self.vertical(x, (y + h - 1) % h),
            Topology::BoundedRegion => y > 0 && self.vertical(x, y - 1),
        };
        let west = match self.topology {
            Topology::Torus => self.horizontal((x + w - 1) % w, y),
            Topology::BoundedRegion => x > 0 && self.horizontal(x - 1, y),
        };
        (south, self.horizontal(x, y), self.vertical(x, y), west)
    }

    /// Vertices whose four incident edges all lie inside the window.
    pub fn is_interior_vertex(&self, x: usize, y: usize) -> bool {
        match self.topology {
            Topology::Torus => true,
            Topology::BoundedRegion => {
                x >= 1 && x + 2 <= self.width && y >= 1 && y + 2 <= self.height
            }
        }
    }

    /// Classify the local pattern at a vertex, or fail if it is none of the
    /// five admissible ones.
    pub fn vertex_pattern(&self, x: usize, y: usize) -> FvResult<VertexPattern> {
        match self.incidences(x, y) {
            (false, false, false, false) => Ok(VertexPattern::Empty),
            (true, false, true, false) => Ok(VertexPattern::Vertical),
            (false, true, false, true) => Ok(VertexPattern::Horizontal),
            (true, false, false, true) => Ok(VertexPattern::CornerSouthWest),
            (false, true, true, false) => Ok(VertexPattern::CornerEastNorth),
            other => Err(FvError::InvalidConfiguration(format!(
                "vertex ({x}, {y}) has pattern (s,e,n,w) = {other:?}"
            ))),
        }
    }

    /// Check every interior vertex against the five-pattern rule (and, on a
    /// bounded region, that the unused wrap slots are empty).
    pub fn validate(&self) -> FvResult<()> {
        if self.topology == Topology::BoundedRegion {
            for x in 0..self.width {
                if self.vertical(x, self.height - 1) {
                    return Err(FvError::InvalidConfiguration(format!(
                        "bounded region has a wrap vertical edge at x = {x}"
                    )));
                }
            }
            for y in 0..self.height {
                if self.horizontal(self.width - 1, y) {
                    return Err(FvError::InvalidConfiguration(format!(
                        "bounded region has a wrap horizontal edge at y = {y}"
                    )));
                }
            }
        }
        for y in 0..self.height {
            for x in 0..self.width {
                if self.is_interior_vertex(x, y) {
                    self.vertex_pattern(x, y)?;
                }
            }
        }
        Ok(())
    }

    /// Total numbers (h₁, h₂) of occupied vertical and horizontal edges.
    pub fn edge_counts(&self) -> (usize, usize) {
        (
            self.vertical.iter().filter(|&&b| b).count(),
            self.horizontal.iter().filter(|&&b| b).count(),
        )
    }

    /// Torus winding numbers (H_x, H_y): occupied vertical edges crossed by
    /// a horizontal dual cycle and horizontal edges crossed by a vertical
    /// one. Conserved across rows/columns for valid configurations.
    pub fn windings(&self) -> (usize, usize) {
        let hx = (0..self.width).filter(|&x| self.vertical(x, 0)).count();
        let hy = (0..self.height).filter(|&y| self.horizontal(0, y)).count();
        (hx, hy)
    }
}

/// log of the configuration weight
/// e^{Xh₁+Yh₂} · ∏_{corners} r_v · ∏_{empty} |1−r_v²|.
pub fn log_config_weight(
    config: &MnlpConfig,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<f64> {
    config.validate()?;
    let mut log_w = 0.0;
    for y in 0..config.height {
        for x in 0..config.width {
            if !config.is_interior_vertex(x, y) {
                continue;
            }
            let r = domain.r_at(x as i64, y as i64);
            match config.vertex_pattern(x, y)? {
                VertexPattern::Empty => log_w += (1.0 - r * r).abs().ln(),
                VertexPattern::CornerSouthWest | VertexPattern::CornerEastNorth => {
                    log_w += r.ln();
                }
                VertexPattern::Vertical | VertexPattern::Horizontal => {}
            }
        }
    }
    let (h1, h2) = config.edge_counts();
    Ok(log_w + fields.x * h1 as f64 + fields.y * h2 as f64)
}

/// Configuration weight (strictly positive for valid configurations).
pub fn config_weight(
    config: &MnlpConfig,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<f64> {
    Ok(log_config_weight(config, domain, fields)?.exp())
}

/// Face heights derived from a configuration, anchored at face (0,0) = 0.
///
/// Faces are indexed by their lower-left vertex; crossing a path upwards or
/// to the right increments the height by 1. On a torus the heights are those
/// of the cut-open patch and `winding` holds the height change around the
/// two cycles.
#[derive(Debug, Clone)]
pub struct HeightField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<i64>,
    pub winding: Option<(usize, usize)>,
}

impl HeightField {
    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.values[x + self.width * y]
    }
}

/// Compute the face height function of a valid configuration.
pub fn height_function(config: &MnlpConfig) -> FvResult<HeightField> {
    config.validate()?;
    let (fw, fh) = match config.topology {
        Topology::Torus => (config.width, config.height),
        Topology::BoundedRegion => (config.width - 1, config.height - 1),
    };
    if fw == 0 || fh == 0 {
        return Err(FvError::InvalidArgument(
            "region too small to carry faces".into(),
        ));
    }
    let mut values = vec![0i64; fw * fh];
    // First column upward, then rows eastward.
    for y in 1..fh {
        // face (0,y) sits north of (0,y−1) across horizontal edge (0, y)
        values[fw * y] = values[fw * (y - 1)] + config.horizontal(0, y) as i64;
    }
    for y in 0..fh {
        for x in 1..fw {
            // face (x,y) east of (x−1,y) across vertical edge (x, y)
            values[x + fw * y] = values[x - 1 + fw * y] + config.vertical(x, y) as i64;
        }
    }
    // Path independence: re-check each face against the northward route.
    for y in 1..fh {
        for x in 1..fw {
            let via_north = values[x + fw * (y - 1)] + config.horizontal(x, y) as i64;
            if via_north != values[x + fw * y] {
                return Err(FvError::InvalidConfiguration(format!(
                    "height function inconsistent at face ({x}, {y})"
                )));
            }
        }
    }
    let winding = match config.topology {
        Topology::Torus => Some(config.windings()),
        Topology::BoundedRegion => None,
    };
    Ok(HeightField {
        width: fw,
        height: fh,
        values,
        winding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_classification_examples() {
        let d = FundamentalDomain::new(vec![2.0, 1.25], vec![2.0, 1.25]).unwrap();
        assert_eq!(d.regime(), Regime::LargeR);
        let d = FundamentalDomain::new(vec![0.2, 0.9], vec![0.2, 0.9]).unwrap();
        assert_eq!(d.regime(), Regime::SmallR);
        assert!(matches!(
            FundamentalDomain::new(vec![0.5, 2.0], vec![1.0]),
            Err(FvError::MixedRegime { .. })
        ));
        assert!(matches!(
            FundamentalDomain::new(vec![0.5], vec![2.0]),
            Err(FvError::CriticalWeight { .. })
        ));
        assert!(FundamentalDomain::new(vec![0.5], vec![3.0]).is_ok());
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(FundamentalDomain::new(vec![], vec![1.0]).is_err());
        assert!(FundamentalDomain::new(vec![-1.0], vec![0.5]).is_err());
        assert!(FundamentalDomain::new(vec![f64::NAN], vec![0.5]).is_err());
    }

    #[test]
    fn config_parsing() {
        let d = FundamentalDomain::from_config_str("alphas = [0.2, 0.9]\nbetas = [0.2, 0.9]\n")
            .unwrap();
        assert_eq!(d.m1(), 2);
        assert_eq!(d.regime(), Regime::SmallR);

        let err = FundamentalDomain::from_config_str("alphas = [0.2]\nbetas = [oops]\n");
        match err {
            Err(FvError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_config_weight() {
        // 2×2 torus, r = 0.5 everywhere: (1 − 0.25)⁴
        let d = FundamentalDomain::new(vec![0.5], vec![1.0]).unwrap();
        let cfg = MnlpConfig::empty(2, 2, Topology::Torus);
        let w = config_weight(&cfg, &d, FieldPoint::ZERO).unwrap();
        assert!((w - 0.31640625).abs() < 1e-15);
    }

    #[test]
    fn single_row_loop_weight() {
        // One full horizontal row on an N×N torus: e^{NY} times the empty
        // weights of the other rows.
        let n = 4;
        let d = FundamentalDomain::new(vec![0.3, 0.8], vec![0.5, 1.1]).unwrap();
        let mut cfg = MnlpConfig::empty(n, n, Topology::Torus);
        for x in 0..n {
            cfg.set_horizontal(x, 1, true);
        }
        let fields = FieldPoint { x: 0.25, y: -0.4 };
        let w = config_weight(&cfg, &d, fields).unwrap();
        let mut expect = (n as f64 * fields.y).exp();
        for y in 0..n {
            if y == 1 {
                continue;
            }
            for x in 0..n {
                let r = d.r_at(x as i64, y as i64);
                expect *= (1.0 - r * r).abs();
            }
        }
        assert!((w - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn crossing_pattern_rejected() {
        let mut cfg = MnlpConfig::empty(3, 3, Topology::Torus);
        // crossing at (1,1): south+east in, north+west out
        cfg.set_vertical(1, 0, true);
        cfg.set_vertical(1, 1, true);
        cfg.set_horizontal(1, 1, true);
        cfg.set_horizontal(0, 1, true);
        assert!(matches!(
            cfg.vertex_pattern(1, 1),
            Err(FvError::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn empty_heights_are_zero() {
        let cfg = MnlpConfig::empty(4, 4, Topology::BoundedRegion);
        let h = height_function(&cfg).unwrap();
        assert!(h.values.iter().all(|&v| v == 0));
        assert!(h.winding.is_none());
    }

    #[test]
    fn one_horizontal_path_splits_heights() {
        // A west-going path across the middle of a bounded window: heights 0
        // below the path and 1 above it. The path enters and leaves through
        // the rim.
        let w = 5;
        let h = 5;
        let mut cfg = MnlpConfig::empty(w, h, Topology::BoundedRegion);
        for x in 0..w - 1 {
            cfg.set_horizontal(x, 2, true);
        }
        cfg.validate().unwrap();
        let hf = height_function(&cfg).unwrap();
        for x in 0..w - 1 {
            assert_eq!(hf.get(x, 0), 0);
            assert_eq!(hf.get(x, 1), 0);
            assert_eq!(hf.get(x, 2), 1);
            assert_eq!(hf.get(x, 3), 1);
        }
    }

    #[test]
    fn torus_winding_counts() {
        let n = 4;
        let mut cfg = MnlpConfig::empty(n, n, Topology::Torus);
        for y in 0..n {
            cfg.set_vertical(2, y, true); // one winding vertical path
        }
        cfg.validate().unwrap();
        let hf = height_function(&cfg).unwrap();
        assert_eq!(hf.winding, Some((1, 0)));
    }
}
