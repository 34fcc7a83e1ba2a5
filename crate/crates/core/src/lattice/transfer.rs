//! Row-to-row transfer matrices in fixed particle-number sectors, their
//! commutation check, and finite-size free energies on N×N tori.
//!
//! The basis of a sector is the set of n-element subsets of Z_N (occupied
//! vertical edges between consecutive rows). The torus partition function is
//! Σ_n tr(T_{β_{N−1}} ⋯ T_{β_0}) restricted to sector n. For larger N the
//! trace is evaluated in the momentum blocks of the shift by m₁, which
//! commutes with every T; blocks at momentum j and q−j are complex
//! conjugates, so only half of them are multiplied out.

use super::row::row_transitions;
use crate::error::{FvError, FvResult};
use crate::model::{FieldPoint, FundamentalDomain};
use crate::Complex;
use ndarray::Array2;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Dense transfer matrix of one row in a fixed sector. `data[to, from]`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub width: usize,
    pub n_particles: usize,
    pub beta: f64,
    pub basis: Vec<u32>,
    pub data: Array2<f64>,
}

/// All n-subsets of {0,…,width−1} as sorted bitmasks.
pub fn sector_basis(width: usize, n_particles: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << width) {
        if mask.count_ones() as usize == n_particles {
            out.push(mask);
        }
    }
    out
}

fn r_columns(domain: &FundamentalDomain, beta: f64, width: usize) -> Vec<f64> {
    (0..width)
        .map(|c| domain.alpha_at(c as i64) * beta)
        .collect()
}

/// Build the (vertical) transfer matrix of one row of weight β in the
/// sector with `n_particles` paths. Field factors attach when the
/// corresponding edge is laid down: e^Y per horizontal edge, e^X per top
/// vertical edge.
pub fn build_transfer_matrix(
    width: usize,
    n_particles: usize,
    beta: f64,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<TransferMatrix> {
    if width > 16 {
        return Err(FvError::SizeLimit(format!("width {width} > 16")));
    }
    if n_particles > width {
        return Err(FvError::InvalidArgument(format!(
            "{n_particles} particles on width {width}"
        )));
    }
    let basis = sector_basis(width, n_particles);
    let index: HashMap<u32, usize> = basis.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let dim = basis.len();
    let r_cols = r_columns(domain, beta, width);
    let ex = (fields.x * n_particles as f64).exp();
    let mut data = Array2::zeros((dim, dim));
    for (from, &bottom) in basis.iter().enumerate() {
        for tr in row_transitions(width, bottom, &r_cols, fields.y) {
            let to = index[&tr.top];
            data[[to, from]] += tr.weight * ex;
        }
    }
    Ok(TransferMatrix {
        width,
        n_particles,
        beta,
        basis,
        data,
    })
}

/// Max elementwise residual of T_{β₁}T_{β₂} − T_{β₂}T_{β₁}, relative to the
/// magnitude of the product.
pub fn check_commutation(
    width: usize,
    n_particles: usize,
    beta1: f64,
    beta2: f64,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<f64> {
    let t1 = build_transfer_matrix(width, n_particles, beta1, domain, fields)?;
    let t2 = build_transfer_matrix(width, n_particles, beta2, domain, fields)?;
    let a = t1.data.dot(&t2.data);
    let b = t2.data.dot(&t1.data);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let resid = a
        .iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(resid / scale)
}

/// Torus partition function by dense sector products (desk scale, N ≤ 8).
pub fn torus_partition_dense(
    n: usize,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<f64> {
    if n > 8 {
        return Err(FvError::SizeLimit(format!(
            "dense torus partition at N = {n}; use the momentum route"
        )));
    }
    if n % domain.m1() != 0 || n % domain.m2() != 0 {
        return Err(FvError::Domain(format!(
            "N = {n} must be a multiple of both periods"
        )));
    }
    let mut z = 0.0;
    for sector in 0..=n {
        let mats: Vec<TransferMatrix> = (0..n)
            .map(|y| {
                build_transfer_matrix(n, sector, domain.beta_at(y as i64), domain, fields)
            })
            .collect::<FvResult<_>>()?;
        let dim = mats[0].basis.len();
        let mut acc = Array2::<f64>::eye(dim);
        for m in &mats {
            acc = m.data.dot(&acc);
        }
        z += acc.diag().sum();
    }
    Ok(z)
}

/// Torus partition function with rows and columns exchanged (the 90°
/// rotation): same model with (α⃗, β⃗) swapped and (X, Y) swapped.
pub fn torus_partition_dense_columns(
    n: usize,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<f64> {
    let swapped = FundamentalDomain::new(domain.betas().to_vec(), domain.alphas().to_vec())?;
    torus_partition_dense(
        n,
        &swapped,
        FieldPoint {
            x: fields.y,
            y: fields.x,
        },
    )
}

// ---------------------------------------------------------------------------
// momentum-reduced traces
// ---------------------------------------------------------------------------

/// Complex dense matrix as two real parts with a running log-scale.
#[derive(Clone)]
struct CMat {
    re: Array2<f64>,
    im: Array2<f64>,
    log_scale: f64,
}

impl CMat {
    fn zeros(dim: usize) -> Self {
        CMat {
            re: Array2::zeros((dim, dim)),
            im: Array2::zeros((dim, dim)),
            log_scale: 0.0,
        }
    }

    /// Karatsuba-style complex product (3 real GEMMs), rescaled.
    fn mul(&self, other: &CMat) -> CMat {
        let p1 = self.re.dot(&other.re);
        let p2 = self.im.dot(&other.im);
        let p3 = (&self.re + &self.im).dot(&(&other.re + &other.im));
        let re = &p1 - &p2;
        let im = &p3 - &p1 - &p2;
        let mut out = CMat {
            re,
            im,
            log_scale: self.log_scale + other.log_scale,
        };
        out.rescale();
        out
    }

    fn rescale(&mut self) {
        let m = self
            .re
            .iter()
            .chain(self.im.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m > 0.0 && m.is_finite() {
            self.re.mapv_inplace(|v| v / m);
            self.im.mapv_inplace(|v| v / m);
            self.log_scale += m.ln();
        }
    }

    fn trace(&self) -> (Complex, f64) {
        (
            Complex::new(self.re.diag().sum(), self.im.diag().sum()),
            self.log_scale,
        )
    }

    /// tr(self · other) without forming the product.
    fn trace_dot(&self, other: &CMat) -> (Complex, f64) {
        let re = (&self.re * &other.re.t()).sum() - (&self.im * &other.im.t()).sum();
        let im = (&self.re * &other.im.t()).sum() + (&self.im * &other.re.t()).sum();
        (
            Complex::new(re, im),
            self.log_scale + other.log_scale,
        )
    }
}

/// tr(M^k) with the fewest products: M^(k/2) and M^(k−k/2) via memoized
/// binary powers, combined by a trace dot.
fn trace_power(m: &CMat, k: usize) -> (Complex, f64) {
    assert!(k >= 1);
    if k == 1 {
        return m.trace();
    }
    let mut pow_cache: Vec<CMat> = vec![m.clone()]; // M^(2^i)
    let power = |cache: &mut Vec<CMat>, mut e: usize| -> CMat {
        let mut acc: Option<CMat> = None;
        let mut bit = 0;
        while e > 0 {
            if bit >= cache.len() {
                let next = cache[bit - 1].mul(&cache[bit - 1]);
                cache.push(next);
            }
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => cache[bit].clone(),
                    Some(a) => a.mul(&cache[bit]),
                });
            }
            e >>= 1;
            bit += 1;
        }
        acc.unwrap()
    };
    let a = k / 2;
    let b = k - a;
    let ma = power(&mut pow_cache, a);
    if a == b {
        ma.trace_dot(&ma)
    } else {
        let mb = power(&mut pow_cache, b);
        ma.trace_dot(&mb)
    }
}

/// Orbit decomposition of one sector under the shift by m₁.
struct OrbitTable {
    /// canonical representative of each orbit
    reps: Vec<u32>,
    /// orbit length of each orbit
    lens: Vec<usize>,
    /// mask → (orbit index, shift e with mask = S^e rep)
    locate: HashMap<u32, (u32, u32)>,
}

fn rotate(mask: u32, by: usize, width: usize) -> u32 {
    let all = if width == 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    };
    ((mask << by) | (mask >> (width - by))) & all
}

fn orbit_table(width: usize, sector: usize, m1: usize) -> OrbitTable {
    let q = width / m1;
    let mut locate = HashMap::new();
    let mut reps = Vec::new();
    let mut lens = Vec::new();
    for mask in sector_basis(width, sector) {
        if locate.contains_key(&mask) {
            continue;
        }
        let idx = reps.len() as u32;
        let mut len = 0usize;
        let mut cur = mask;
        for e in 0..q {
            if e > 0 && cur == mask {
                break;
            }
            locate.insert(cur, (idx, e as u32));
            cur = rotate(cur, m1, width);
            len += 1;
        }
        debug_assert_eq!(rotate(mask, m1 * len, width), mask);
        reps.push(mask);
        lens.push(len);
    }
    OrbitTable { reps, lens, locate }
}

/// log of the torus partition function via momentum blocks.
pub fn torus_log_partition_momentum(
    n: usize,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<f64> {
    if n % domain.m1() != 0 || n % domain.m2() != 0 {
        return Err(FvError::Domain(format!(
            "N = {n} must be a multiple of both periods"
        )));
    }
    if n > 16 {
        return Err(FvError::SizeLimit(format!("momentum route at N = {n}")));
    }
    let m1 = domain.m1();
    let m2 = domain.m2();
    let q = n / m1;
    let k_power = n / m2;
    let mut sector_logz: Vec<f64> = Vec::new();
    for sector in 0..=n {
        let table = orbit_table(n, sector, m1);
        if table.reps.is_empty() {
            continue;
        }
        // transitions per row type (β value), filtered to representative tops
        let mut per_row: Vec<Vec<(u32, u32, u32, f64)>> = Vec::with_capacity(m2);
        for y in 0..m2 {
            let r_cols = r_columns(domain, domain.beta_at(y as i64), n);
            let mut entries = Vec::new();
            for (oi, (&rep, &len)) in table.reps.iter().zip(table.lens.iter()).enumerate() {
                let mut x = rep;
                for e in 0..len {
                    for tr in row_transitions(n, x, &r_cols, fields.y) {
                        let (zo, ze) = table.locate[&tr.top];
                        if ze == 0 {
                            entries.push((oi as u32, e as u32, zo, tr.weight));
                        }
                    }
                    x = rotate(x, m1, n);
                }
            }
            per_row.push(entries);
        }

        // momenta 0..=q/2 with conjugate doubling
        let momenta: Vec<usize> = (0..=q / 2).collect();
        let block_traces: Vec<(Complex, f64, f64)> = momenta
            .par_iter()
            .map(|&j| {
                // orbits allowed at momentum j: j·L ≡ 0 mod q
                let allowed: Vec<usize> = (0..table.reps.len())
                    .filter(|&o| (j * table.lens[o]) % q == 0)
                    .collect();
                if allowed.is_empty() {
                    return (Complex::new(0.0, 0.0), 0.0, 0.0);
                }
                let pos: HashMap<usize, usize> =
                    allowed.iter().enumerate().map(|(p, &o)| (o, p)).collect();
                let dim = allowed.len();
                // phases ω^{−j e}
                let phase: Vec<Complex> = (0..q)
                    .map(|e| Complex::from_polar(1.0, -2.0 * PI * (j * e) as f64 / q as f64))
                    .collect();
                // per-row blocks
                let blocks: Vec<CMat> = per_row
                    .iter()
                    .map(|entries| {
                        let mut b = CMat::zeros(dim);
                        for &(xo, e, zo, w) in entries {
                            let (xo, zo) = (xo as usize, zo as usize);
                            if (j * table.lens[xo]) % q != 0 {
                                continue;
                            }
                            let (Some(&px), Some(&pz)) = (pos.get(&xo), pos.get(&zo)) else {
                                continue;
                            };
                            let amp = (table.lens[zo] as f64 / table.lens[xo] as f64).sqrt()
                                * w
                                * phase[e as usize];
                            b.re[[pz, px]] += amp.re;
                            b.im[[pz, px]] += amp.im;
                        }
                        b.rescale();
                        b
                    })
                    .collect();
                // one vertical period, top row leftmost
                let mut period = blocks[m2 - 1].clone();
                for y in (0..m2 - 1).rev() {
                    period = period.mul(&blocks[y]);
                }
                let (tr, log_scale) = trace_power(&period, k_power);
                let mult = if j == 0 || (q % 2 == 0 && j == q / 2) {
                    1.0
                } else {
                    2.0
                };
                (tr, log_scale, mult)
            })
            .collect();

        // combine block traces in a common log scale
        let max_scale = block_traces
            .iter()
            .filter(|(tr, _, _)| tr.norm() > 0.0)
            .map(|&(_, s, _)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_scale == f64::NEG_INFINITY {
            continue;
        }
        let mut total = 0.0;
        for &(tr, s, mult) in &block_traces {
            // conjugate momentum contributes the conjugate trace
            total += mult * tr.re * (s - max_scale).exp();
        }
        if total <= 0.0 {
            // roundoff at negligible sectors
            continue;
        }
        let logz = total.ln() + max_scale + fields.x * (sector * n) as f64;
        sector_logz.push(logz);
    }
    if sector_logz.is_empty() {
        return Err(FvError::Convergence(
            "no sector contributed to the partition function".into(),
        ));
    }
    let m = sector_logz.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = sector_logz.iter().map(|l| (l - m).exp()).sum();
    Ok(m + sum.ln())
}

/// Finite-size free energy f_N = (1/N²) log Z_N.
pub fn finite_size_free_energy(
    n: usize,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<f64> {
    Ok(torus_log_partition_momentum(n, domain, fields)? / (n * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate::enumerate_torus;

    fn domain_small() -> FundamentalDomain {
        FundamentalDomain::new(vec![0.5, 0.3], vec![0.8, 0.6]).unwrap()
    }

    #[test]
    fn zero_particle_sector_entry() {
        // 1×1 matrix: empty row plus the full horizontal loop
        let d = FundamentalDomain::new(vec![0.5, 0.3], vec![0.8]).unwrap();
        let fields = FieldPoint { x: 0.2, y: -0.1 };
        let t = build_transfer_matrix(4, 0, 0.8, &d, fields).unwrap();
        assert_eq!(t.basis, vec![0]);
        let empty: f64 = (0..4)
            .map(|c| (1.0 - (d.alpha_at(c) * 0.8f64).powi(2)).abs())
            .product();
        let expect = empty + (4.0 * fields.y).exp();
        assert!((t.data[[0, 0]] - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn full_sector_entry() {
        let d = domain_small();
        let fields = FieldPoint { x: 0.3, y: 0.0 };
        let t = build_transfer_matrix(4, 4, 0.8, &d, fields).unwrap();
        assert_eq!(t.data.dim(), (1, 1));
        let expect = (4.0 * fields.x).exp();
        assert!((t.data[[0, 0]] - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn commutation_residual_tiny() {
        let d = domain_small();
        let fields = FieldPoint { x: 0.1, y: 0.2 };
        for sector in [1, 2, 3] {
            let r = check_commutation(6, sector, 0.77, 1.21 / 0.9, &d, fields).unwrap();
            assert!(r <= 1e-12, "sector {sector}: residual {r}");
        }
        // equal betas commute exactly
        let r = check_commutation(6, 2, 0.77, 0.77, &d, fields).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn enumeration_matches_dense_transfer() {
        let d = domain_small();
        let fields = FieldPoint { x: 0.15, y: -0.2 };
        for n in [2usize, 4] {
            let en = enumerate_torus(n, &d, fields).unwrap();
            let zt = torus_partition_dense(n, &d, fields).unwrap();
            let rel = (en.partition_function - zt).abs() / zt;
            assert!(rel <= 1e-12, "N = {n}: {rel}");
            let zc = torus_partition_dense_columns(n, &d, fields).unwrap();
            let rel = (en.partition_function - zc).abs() / zc;
            assert!(rel <= 1e-12, "columns N = {n}: {rel}");
        }
    }

    #[test]
    fn momentum_matches_dense() {
        let d = domain_small();
        let fields = FieldPoint { x: 0.3, y: 0.1 };
        for n in [2usize, 4, 6, 8] {
            let dense = torus_partition_dense(n, &d, fields).unwrap().ln();
            let momentum = torus_log_partition_momentum(n, &d, fields).unwrap();
            assert!(
                (dense - momentum).abs() <= 1e-10 * dense.abs().max(1.0),
                "N = {n}: {dense} vs {momentum}"
            );
        }
    }

    #[test]
    fn momentum_handles_period_one() {
        let d = FundamentalDomain::new(vec![2.0], vec![1.5]).unwrap();
        let fields = FieldPoint { x: -0.4, y: 0.2 };
        let dense = torus_partition_dense(6, &d, fields).unwrap().ln();
        let momentum = torus_log_partition_momentum(6, &d, fields).unwrap();
        assert!((dense - momentum).abs() <= 1e-10 * dense.abs().max(1.0));
    }
}
