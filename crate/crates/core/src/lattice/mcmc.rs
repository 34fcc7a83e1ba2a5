//! Metropolis sampling of height functions on bounded regions with fixed
//! boundary heights.
//!
//! States are integer face heights with increments in {0, 1} going east or
//! north and the five-vertex diagonal constraint h(f + (1,1)) − h(f) ≤ 1
//! (which excludes the crossing pattern). A move toggles one free face by
//! ±1; the acceptance ratio is the product of the ≤ 4 affected vertex
//! weights. Edge counts are fixed by the boundary data, so the magnetic
//! field drops out of the ratios on a fixed-boundary ensemble.

use crate::error::{FvError, FvResult};
use crate::model::{FundamentalDomain, MnlpConfig, Topology};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A set of faces of the square grid (face (x, y) has corners (x, y) and
/// (x+1, y+1)).
#[derive(Debug, Clone)]
pub struct Region {
    pub width: usize,
    pub height: usize,
    inside: Vec<bool>,
}

impl Region {
    pub fn rectangle(width: usize, height: usize) -> Self {
        Region {
            width,
            height,
            inside: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut inside = vec![false; width * height];
        for y in 0..height {
            for x in 0..width {
                inside[x + width * y] = f(x, y);
            }
        }
        Region {
            width,
            height,
            inside,
        }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.inside[x as usize + self.width * y as usize]
    }

    fn idx(&self, x: usize, y: usize) -> usize {
        x + self.width * y
    }

    pub fn face_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

/// The fixed-boundary height ensemble of a region with periodic vertex
/// weights.
#[derive(Debug, Clone)]
pub struct BoundedEnsemble {
    pub region: Region,
    pub domain: FundamentalDomain,
    fixed: Vec<bool>,
    boundary: Vec<i64>,
    free_faces: Vec<(usize, usize)>,
    /// log vertex weights by pattern class: per lattice vertex (x, y),
    /// log|1−r²| and log r
    log_empty: Vec<f64>,
    log_corner: Vec<f64>,
}

/// Which extremal surface to relax toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    Minimal,
    Maximal,
}

impl BoundedEnsemble {
    /// Build the ensemble. `boundary(x, y)` returns the pinned height of a
    /// face, `None` for free faces. Faces whose 8-neighborhood leaves the
    /// region are implicitly pinned and must carry boundary values.
    pub fn new(
        region: Region,
        domain: FundamentalDomain,
        boundary: impl Fn(usize, usize) -> Option<i64>,
    ) -> FvResult<Self> {
        let (w, h) = (region.width, region.height);
        let mut fixed = vec![false; w * h];
        let mut bvals = vec![0i64; w * h];
        let mut free_faces = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !region.contains(x as i64, y as i64) {
                    continue;
                }
                let rim = (-1i64..=1).any(|dy| {
                    (-1i64..=1).any(|dx| !region.contains(x as i64 + dx, y as i64 + dy))
                });
                match boundary(x, y) {
                    Some(v) => {
                        fixed[region.idx(x, y)] = true;
                        bvals[region.idx(x, y)] = v;
                    }
                    None if rim => {
                        return Err(FvError::InfeasibleBoundary(format!(
                            "face ({x}, {y}) touches the rim but has no pinned height"
                        )));
                    }
                    None => free_faces.push((x, y)),
                }
            }
        }
        // vertex weight tables: vertex (x, y) is the corner shared by faces
        // (x−1, y−1) … (x, y); weights are periodic in the vertex position
        let mut log_empty = vec![0.0; (w + 1) * (h + 1)];
        let mut log_corner = vec![0.0; (w + 1) * (h + 1)];
        for vy in 0..=h {
            for vx in 0..=w {
                let r = domain.r_at(vx as i64, vy as i64);
                log_empty[vx + (w + 1) * vy] = (1.0 - r * r).abs().ln();
                log_corner[vx + (w + 1) * vy] = r.ln();
            }
        }
        let ens = BoundedEnsemble {
            region,
            domain,
            fixed,
            boundary: bvals,
            free_faces,
            log_empty,
            log_corner,
        };
        // feasibility: both extremal surfaces must exist and respect pins
        let _ = ens.extremal_surface(Extremal::Maximal)?;
        let _ = ens.extremal_surface(Extremal::Minimal)?;
        Ok(ens)
    }

    pub fn free_face_count(&self) -> usize {
        self.free_faces.len()
    }

    /// Constraint arcs: upper bounds for the maximal surface, lower bounds
    /// for the minimal one, iterated to a fixpoint.
    pub fn extremal_surface(&self, which: Extremal) -> FvResult<Vec<i64>> {
        let (w, h) = (self.region.width, self.region.height);
        let big = 1i64 << 40;
        let mut hgt: Vec<i64> = (0..w * h)
            .map(|i| {
                if self.fixed[i] {
                    self.boundary[i]
                } else if which == Extremal::Maximal {
                    big
                } else {
                    -big
                }
            })
            .collect();
        let inside =
            |x: i64, y: i64| -> Option<usize> { self.region.contains(x, y).then(|| self.region.idx(x as usize, y as usize)) };
        for _round in 0..(w * h + 2) {
            let mut changed = false;
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    let Some(i) = inside(x, y) else { continue };
                    if self.fixed[i] {
                        continue;
                    }
                    let mut v = hgt[i];
                    // monotone increments and the diagonal cap
                    let arcs: [(i64, i64, i64); 6] = [
                        (1, 0, 0),   // h(f) ≤ h(E)
                        (0, 1, 0),   // h(f) ≤ h(N)
                        (-1, 0, 1),  // h(f) ≤ h(W) + 1
                        (0, -1, 1),  // h(f) ≤ h(S) + 1
                        (-1, -1, 1), // h(f) ≤ h(SW) + 1
                        (1, 1, 0),   // h(f) ≤ h(NE)
                    ];
                    for (dx, dy, c) in arcs {
                        if let Some(k) = inside(x + dx, y + dy) {
                            let bound = if which == Extremal::Maximal {
                                hgt[k] + c
                            } else {
                                hgt[k] - c
                            };
                            if which == Extremal::Maximal {
                                v = v.min(bound);
                            } else {
                                // mirrored arcs for lower bounds
                                v = v.max(match (dx, dy, c) {
                                    (1, 0, 0) => hgt[k] - 1,
                                    (0, 1, 0) => hgt[k] - 1,
                                    (-1, 0, 1) => hgt[k],
                                    (0, -1, 1) => hgt[k],
                                    (-1, -1, 1) => hgt[k],
                                    (1, 1, 0) => hgt[k] - 1,
                                    _ => unreachable!(),
                                });
                            }
                        }
                    }
                    if v != hgt[i] {
                        hgt[i] = v;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // validate every constraint, including those among fixed faces
        self.check_valid(&hgt)?;
        Ok(hgt)
    }

    /// Validate a full height assignment against all local constraints.
    pub fn check_valid(&self, hgt: &[i64]) -> FvResult<()> {
        let (w, h) = (self.region.width, self.region.height);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                if !self.region.contains(x, y) {
                    continue;
                }
                let i = self.region.idx(x as usize, y as usize);
                if hgt[i].abs() > 1 << 39 {
                    return Err(FvError::InfeasibleBoundary(format!(
                        "face ({x}, {y}) unconstrained"
                    )));
                }
                for (dx, dy, lo, hi) in
                    [(1i64, 0i64, 0i64, 1i64), (0, 1, 0, 1), (1, 1, 0, 1)]
                {
                    if self.region.contains(x + dx, y + dy) {
                        let k = self.region.idx((x + dx) as usize, (y + dy) as usize);
                        let d = hgt[k] - hgt[i];
                        if d < lo || d > hi {
                            return Err(FvError::InfeasibleBoundary(format!(
                                "increment {d} between faces ({x}, {y}) and ({}, {})",
                                x + dx,
                                y + dy
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn vertex_logw(&self, vx: usize, vy: usize, hgt: &[i64]) -> f64 {
        // corner vertex of the four faces (vx−1, vy−1), (vx, vy−1),
        // (vx−1, vy), (vx, vy) — all guaranteed in-region for affected
        // vertices of free faces
        let i = |x: usize, y: usize| self.region.idx(x, y);
        let sw = hgt[i(vx - 1, vy - 1)];
        let se = hgt[i(vx, vy - 1)];
        let nw = hgt[i(vx - 1, vy)];
        let ne = hgt[i(vx, vy)];
        let (sv, eh, nv, wh) = (se - sw, ne - se, ne - nw, nw - sw);
        match (sv, eh, nv, wh) {
            (0, 0, 0, 0) => self.log_empty[vx + (self.region.width + 1) * vy],
            (1, 0, 1, 0) | (0, 1, 0, 1) => 0.0,
            (1, 0, 0, 1) | (0, 1, 1, 0) => self.log_corner[vx + (self.region.width + 1) * vy],
            other => panic!("invalid vertex pattern {other:?} at ({vx}, {vy})"),
        }
    }

    /// Total log weight from the vertices interior to the region (the ones
    /// whose four faces are all present).
    pub fn log_weight(&self, hgt: &[i64]) -> f64 {
        let (w, h) = (self.region.width, self.region.height);
        let mut acc = 0.0;
        for vy in 1..h {
            for vx in 1..w {
                let all_in = [(0i64, 0i64), (-1, 0), (0, -1), (-1, -1)]
                    .iter()
                    .all(|&(dx, dy)| self.region.contains(vx as i64 + dx, vy as i64 + dy));
                if all_in {
                    acc += self.vertex_logw(vx, vy, hgt);
                }
            }
        }
        acc
    }

    /// Log of the Metropolis ratio for toggling face (x, y) by δ, or None
    /// when the move is invalid.
    pub fn toggle_logratio(&self, hgt: &[i64], x: usize, y: usize, delta: i64) -> Option<f64> {
        let i = self.region.idx(x, y);
        let nv = hgt[i] + delta;
        let (xi, yi) = (x as i64, y as i64);
        let at = |dx: i64, dy: i64| hgt[self.region.idx((xi + dx) as usize, (yi + dy) as usize)];
        // monotone constraints to the four axis neighbours
        if nv - at(-1, 0) < 0 || nv - at(-1, 0) > 1 || at(1, 0) - nv < 0 || at(1, 0) - nv > 1 {
            return None;
        }
        if nv - at(0, -1) < 0 || nv - at(0, -1) > 1 || at(0, 1) - nv < 0 || at(0, 1) - nv > 1 {
            return None;
        }
        // diagonal caps against SW and NE
        if nv - at(-1, -1) > 1 || at(1, 1) - nv > 1 {
            return None;
        }
        let mut old = 0.0;
        for (vx, vy) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
            old += self.vertex_logw(vx, vy, hgt);
        }
        let mut new = 0.0;
        let mut hgt_mut = hgt.to_vec();
        hgt_mut[i] = nv;
        for (vx, vy) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
            new += self.vertex_logw(vx, vy, &hgt_mut);
        }
        Some(new - old)
    }

    /// A fresh deterministic chain for this ensemble.
    pub fn sampler(&self, seed: u64, chain: u64, start: Vec<i64>) -> FvResult<Sampler<'_>> {
        self.check_valid(&start)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain);
        Ok(Sampler {
            ens: self,
            heights: start,
            rng,
            accepted: 0,
            proposed: 0,
        })
    }

    /// Exhaustively enumerate the ensemble (small regions only): heights of
    /// the free faces scanned with constraint propagation.
    pub fn enumerate(&self, cap: usize) -> FvResult<Vec<(Vec<i64>, f64)>> {
        let lo = self.extremal_surface(Extremal::Minimal)?;
        let hi = self.extremal_surface(Extremal::Maximal)?;
        let mut out: Vec<(Vec<i64>, f64)> = Vec::new();
        let mut cur = lo.clone();
        // scan order: the free faces, row-major
        fn dfs(
            ens: &BoundedEnsemble,
            k: usize,
            lo: &[i64],
            hi: &[i64],
            cur: &mut Vec<i64>,
            out: &mut Vec<(Vec<i64>, f64)>,
            cap: usize,
        ) -> FvResult<()> {
            if out.len() > cap {
                return Err(FvError::SizeLimit(format!(
                    "region ensemble exceeds {cap} states"
                )));
            }
            if k == ens.free_faces.len() {
                out.push((cur.clone(), ens.log_weight(cur)));
                return Ok(());
            }
            let (x, y) = ens.free_faces[k];
            let i = ens.region.idx(x, y);
            for v in lo[i]..=hi[i] {
                cur[i] = v;
                // constraints against already-assigned neighbours (free
                // faces before k are assigned; fixed faces always are)
                let ok = {
                    let (xi, yi) = (x as i64, y as i64);
                    let assigned = |dx: i64, dy: i64| -> Option<i64> {
                        if !ens.region.contains(xi + dx, yi + dy) {
                            return None;
                        }
                        let j = ens.region.idx((xi + dx) as usize, (yi + dy) as usize);
                        let is_fixed = ens.fixed[j];
                        let order = ens
                            .free_faces
                            .iter()
                            .position(|&f| f == ((xi + dx) as usize, (yi + dy) as usize));
                        if is_fixed || order.map(|p| p < k).unwrap_or(false) {
                            Some(cur[j])
                        } else {
                            None
                        }
                    };
                    let mut ok = true;
                    for (dx, dy, lo_d, hi_d) in [
                        (1i64, 0i64, 0i64, 1i64),
                        (-1, 0, -1, 0),
                        (0, 1, 0, 1),
                        (0, -1, -1, 0),
                        (1, 1, 0, 1),
                        (-1, -1, -1, 0),
                    ] {
                        if let Some(nv) = assigned(dx, dy) {
                            let d = nv - v;
                            if d < lo_d || d > hi_d {
                                ok = false;
                                break;
                            }
                        }
                    }
                    ok
                };
                if ok {
                    dfs(ens, k + 1, lo, hi, cur, out, cap)?;
                }
            }
            cur[i] = lo[i];
            Ok(())
        }
        dfs(self, 0, &lo, &hi, &mut cur, &mut out, cap)?;
        Ok(out)
    }
}

/// One Metropolis chain over an ensemble.
pub struct Sampler<'a> {
    ens: &'a BoundedEnsemble,
    pub heights: Vec<i64>,
    rng: ChaCha8Rng,
    pub accepted: u64,
    pub proposed: u64,
}

impl<'a> Sampler<'a> {
    /// One proposed single-face toggle.
    pub fn step(&mut self) {
        let nf = self.ens.free_faces.len();
        if nf == 0 {
            return;
        }
        let k = self.rng.gen_range(0..nf);
        let delta = if self.rng.gen::<bool>() { 1 } else { -1 };
        let (x, y) = self.ens.free_faces[k];
        self.proposed += 1;
        if let Some(logr) = self.ens.toggle_logratio(&self.heights, x, y, delta) {
            if logr >= 0.0 || self.rng.gen::<f64>().ln() < logr {
                self.heights[self.ens.region.idx(x, y)] += delta;
                self.accepted += 1;
            }
        }
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Pointwise mean and standard error over a set of height snapshots.
#[derive(Debug, Clone)]
pub struct HeightProfile {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl HeightProfile {
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        (self.mean[x + self.width * y], self.stderr[x + self.width * y])
    }
}

/// Aggregate snapshots (aligned to the region's face grid) into a profile.
pub fn empirical_height_profile(
    width: usize,
    height: usize,
    samples: &[Vec<i64>],
) -> FvResult<HeightProfile> {
    if samples.is_empty() {
        return Err(FvError::InvalidArgument("no samples".into()));
    }
    let n = samples.len();
    let mut mean = vec![0.0f64; width * height];
    let mut m2 = vec![0.0f64; width * height];
    for s in samples {
        for (i, &v) in s.iter().enumerate() {
            mean[i] += v as f64;
        }
    }
    for v in mean.iter_mut() {
        *v /= n as f64;
    }
    for s in samples {
        for (i, &v) in s.iter().enumerate() {
            let d = v as f64 - mean[i];
            m2[i] += d * d;
        }
    }
    let stderr = m2
        .iter()
        .map(|&v| {
            if n > 1 {
                (v / (n as f64 - 1.0) / n as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(HeightProfile {
        width,
        height,
        mean,
        stderr,
        samples: n,
    })
}

/// Sampling controls for the multi-chain driver.
#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub seed: u64,
    pub chains: usize,
    /// burn-in single-face updates per chain; 0 selects the
    /// 50·area·log(area) heuristic
    pub burn_in: u64,
    /// measurement updates per chain
    pub measure: u64,
    /// snapshots taken per chain during measurement
    pub snapshots: usize,
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        SamplerConfig {
            seed,
            chains: 10,
            burn_in: 0,
            measure: 0,
            snapshots: 16,
        }
    }

    fn resolved(&self, area: f64) -> (u64, u64) {
        let heuristic = (50.0 * area * area.ln()).ceil() as u64;
        let burn = if self.burn_in == 0 {
            heuristic
        } else {
            self.burn_in
        };
        let measure = if self.measure == 0 {
            heuristic / 2
        } else {
            self.measure
        };
        (burn, measure)
    }
}

/// Run independent chains (half started from the maximal surface, half from
/// the minimal one) and aggregate their snapshots.
pub fn sample_profile(
    ens: &BoundedEnsemble,
    config: &SamplerConfig,
) -> FvResult<HeightProfile> {
    let area = ens.free_face_count().max(2) as f64;
    let (burn, measure) = config.resolved(area);
    let hi = ens.extremal_surface(Extremal::Maximal)?;
    let lo = ens.extremal_surface(Extremal::Minimal)?;
    let per_chain: Vec<FvResult<Vec<Vec<i64>>>> = (0..config.chains as u64)
        .into_par_iter()
        .map(|chain| {
            let start = if chain % 2 == 0 { hi.clone() } else { lo.clone() };
            let mut s = ens.sampler(config.seed, chain, start)?;
            s.run(burn);
            let mut snaps = Vec::with_capacity(config.snapshots);
            let every = (measure / config.snapshots.max(1) as u64).max(1);
            for _ in 0..config.snapshots {
                s.run(every);
                snaps.push(s.heights.clone());
            }
            Ok(snaps)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_chain {
        all.extend(r?);
    }
    empirical_height_profile(ens.region.width, ens.region.height, &all)
}

/// Run a single chain and return its final state as an MNLP configuration.
pub fn mcmc_sample(
    ens: &BoundedEnsemble,
    sweeps: u64,
    seed: u64,
) -> FvResult<(MnlpConfig, Vec<i64>)> {
    let start = ens.extremal_surface(Extremal::Maximal)?;
    let mut s = ens.sampler(seed, 0, start)?;
    let area = ens.free_face_count().max(2) as f64;
    let steps = if sweeps == 0 {
        (50.0 * area * area.ln()).ceil() as u64
    } else {
        sweeps
    };
    s.run(steps);
    let cfg = heights_to_config(ens, &s.heights);
    Ok((cfg, s.heights))
}

/// Convert face heights into an edge configuration on the bounding window.
pub fn heights_to_config(ens: &BoundedEnsemble, hgt: &[i64]) -> MnlpConfig {
    let (w, h) = (ens.region.width, ens.region.height);
    let mut cfg = MnlpConfig::empty(w + 1, h + 1, Topology::BoundedRegion);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if ens.region.contains(x, y) {
                // vertical edge at vertex column x separates faces (x−1, y), (x, y)
                if ens.region.contains(x - 1, y) {
                    let d = hgt[ens.region.idx(x as usize, y as usize)]
                        - hgt[ens.region.idx((x - 1) as usize, y as usize)];
                    if d == 1 {
                        cfg.set_vertical(x as usize, y as usize, true);
                    }
                }
                if ens.region.contains(x, y - 1) {
                    let d = hgt[ens.region.idx(x as usize, y as usize)]
                        - hgt[ens.region.idx(x as usize, (y - 1) as usize)];
                    if d == 1 {
                        cfg.set_horizontal(x as usize, y as usize, true);
                    }
                }
            }
        }
    }
    cfg
}
