//! Exhaustive enumeration of MNLP configurations on small N×N tori.

use super::row::{row_transitions, transition_count_matrix};
use crate::error::{FvError, FvResult};
use crate::model::{FieldPoint, FundamentalDomain, MnlpConfig, Topology};

/// Everything the enumeration produces for one torus.
#[derive(Debug, Clone)]
pub struct TorusEnumeration {
    pub configs: Vec<EnumeratedConfig>,
    pub partition_function: f64,
}

#[derive(Debug, Clone)]
pub struct EnumeratedConfig {
    pub config: MnlpConfig,
    pub weight: f64,
    pub winding: (usize, usize),
}

/// Cost guard: refuse enumerations whose exact configuration count exceeds
/// this.
pub const MAX_CONFIGS: f64 = 2.0e6;

fn count_configs(n: usize, r_rows: &[Vec<f64>]) -> f64 {
    // exact count via the per-row transition-count matrices
    let dim = 1usize << n;
    let mut acc: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for r_cols in r_rows {
        let m = transition_count_matrix(n, r_cols);
        let mut next = vec![vec![0.0f64; dim]; dim];
        for (i, row) in m.iter().enumerate() {
            for (k, &mik) in row.iter().enumerate() {
                if mik == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    next[i][j] += mik * acc[k][j];
                }
            }
        }
        acc = next;
    }
    (0..dim).map(|i| acc[i][i]).sum()
}

/// Enumerate every MNLP configuration on the N×N torus with its weight and
/// winding numbers, by driving the five-vertex row rules across all rows.
///
/// N must be a multiple of both periods; enumerations whose configuration
/// count exceeds the cost guard are rejected.
pub fn enumerate_torus(
    n: usize,
    domain: &FundamentalDomain,
    fields: FieldPoint,
) -> FvResult<TorusEnumeration> {
    if n == 0 || n > 16 {
        return Err(FvError::SizeLimit(format!("torus size {n}")));
    }
    if n % domain.m1() != 0 || n % domain.m2() != 0 {
        return Err(FvError::Domain(format!(
            "N = {n} must be a multiple of both periods ({}, {})",
            domain.m1(),
            domain.m2()
        )));
    }
    let r_rows: Vec<Vec<f64>> = (0..n)
        .map(|y| {
            (0..n)
                .map(|x| domain.r_at(x as i64, y as i64))
                .collect()
        })
        .collect();
    let count = count_configs(n, &r_rows);
    if !(count <= MAX_CONFIGS) {
        return Err(FvError::SizeLimit(format!(
            "torus size {n} has {count:.3e} configurations (guard {MAX_CONFIGS:.0e})"
        )));
    }

    fn dfs(
        n: usize,
        start: u32,
        row: usize,
        bottom: u32,
        r_rows: &[Vec<f64>],
        field_y: f64,
        tops: &mut Vec<u32>,
        hmasks: &mut Vec<u32>,
        weight: f64,
        sink: &mut impl FnMut(&[u32], &[u32], f64),
    ) {
        if row == n {
            if bottom == start {
                sink(tops, hmasks, weight);
            }
            return;
        }
        for tr in row_transitions(n, bottom, &r_rows[row], field_y) {
            tops.push(tr.top);
            hmasks.push(tr.hmask);
            dfs(
                n,
                start,
                row + 1,
                tr.top,
                r_rows,
                field_y,
                tops,
                hmasks,
                weight * tr.weight,
                sink,
            );
            tops.pop();
            hmasks.pop();
        }
    }

    let mut out = Vec::with_capacity(count as usize);
    let mut partition_function = 0.0;
    // start mask = vertical edges below row 0 (= above row N−1)
    for start in 0..(1u32 << n) {
        let mut tops = Vec::with_capacity(n);
        let mut hmasks = Vec::with_capacity(n);
        let mut sink = |tops: &[u32], hmasks: &[u32], wrow: f64| {
            let mut cfg = MnlpConfig::empty(n, n, Topology::Torus);
            for (y, (&top, &hm)) in tops.iter().zip(hmasks.iter()).enumerate() {
                for x in 0..n {
                    if top >> x & 1 == 1 {
                        cfg.set_vertical(x, y, true);
                    }
                    if hm >> x & 1 == 1 {
                        cfg.set_horizontal(x, y, true);
                    }
                }
            }
            let n_vertical: u32 = tops.iter().map(|t| t.count_ones()).sum();
            let weight = wrow * (fields.x * n_vertical as f64).exp();
            let winding = (
                start.count_ones() as usize,
                hmasks.iter().filter(|&&h| h & 1 == 1).count(),
            );
            partition_function += weight;
            out.push(EnumeratedConfig {
                config: cfg,
                weight,
                winding,
            });
        };
        dfs(
            n, start, 0, start, &r_rows, fields.y, &mut tops, &mut hmasks, 1.0, &mut sink,
        );
    }
    Ok(TorusEnumeration {
        configs: out,
        partition_function,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{config_weight, height_function};

    #[test]
    fn two_by_two_torus_counts_and_weights() {
        let domain = FundamentalDomain::new(vec![0.5], vec![0.8]).unwrap();
        let en = enumerate_torus(2, &domain, FieldPoint::ZERO).unwrap();
        // every config validates and its weight matches config_weight
        for ec in &en.configs {
            let w = config_weight(&ec.config, &domain, FieldPoint::ZERO).unwrap();
            assert!(
                (w - ec.weight).abs() <= 1e-13 * w.max(1.0),
                "{w} vs {}",
                ec.weight
            );
        }
        // the empty configuration appears with weight ∏|1−r²|
        let r2 = (0.5f64 * 0.8).powi(2);
        let empty_w = (1.0 - r2).powi(4);
        let found = en
            .configs
            .iter()
            .find(|ec| ec.config.edge_counts() == (0, 0))
            .unwrap();
        assert!((found.weight - empty_w).abs() < 1e-15);
        // windings bounded by monotone disjointness: Hx + Hy ≤ N … per
        // direction Hx, Hy ≤ N and nonnegative by construction
        for ec in &en.configs {
            let (hx, hy) = ec.winding;
            assert!(hx <= 2 && hy <= 2);
        }
    }

    #[test]
    fn winding_matches_height_function() {
        let domain = FundamentalDomain::new(vec![0.6, 0.9], vec![0.7, 1.1]).unwrap();
        let en = enumerate_torus(2, &domain, FieldPoint::ZERO).unwrap();
        for ec in &en.configs {
            let hf = height_function(&ec.config).unwrap();
            assert_eq!(hf.winding, Some(ec.winding));
        }
    }

    #[test]
    fn size_guard_fires() {
        let domain = FundamentalDomain::new(vec![0.5], vec![0.8]).unwrap();
        assert!(matches!(
            enumerate_torus(12, &domain, FieldPoint::ZERO),
            Err(FvError::SizeLimit(_))
        ));
    }
}
