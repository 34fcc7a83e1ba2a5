//! Single-row transition enumeration on a periodic row of width N.
//!
//! A row maps a bottom vertical-edge mask to a top mask while laying down
//! horizontal edges. Scanning columns left to right with the wrap gap
//! seeded, the vertex pattern is forced except at empty-bottom columns with
//! an unoccupied west gap, where the path may either stay absent or a new
//! westward run may turn north. Particle number is conserved; the empty
//! sector additionally carries the full horizontal loop.

/// One admissible row configuration above a fixed bottom mask.
#[derive(Debug, Clone, Copy)]
pub struct RowTransition {
    pub top: u32,
    pub hmask: u32,
    /// Product of vertex factors (corners r, empty |1−r²|) times the
    /// horizontal field e^{Y·#horizontal}. Vertical field factors for the
    /// top edges are NOT included here; attach e^{X·popcount(top)} at the
    /// caller when needed.
    pub weight: f64,
}

/// Enumerate all row transitions from `bottom`. `r_cols[c]` is the vertex
/// parameter at column c of this row.
pub fn row_transitions(
    width: usize,
    bottom: u32,
    r_cols: &[f64],
    field_y: f64,
) -> Vec<RowTransition> {
    debug_assert!(width <= 32 && r_cols.len() == width);
    let empty_w: Vec<f64> = r_cols.iter().map(|r| (1.0 - r * r).abs()).collect();
    let ey = field_y.exp();
    let mut out = Vec::new();
    // DFS stack: (column, gap west of this column, top so far, hmask so far,
    // weight so far)
    struct Frame {
        col: usize,
        h_prev: bool,
        top: u32,
        hmask: u32,
        weight: f64,
    }
    for seed in [false, true] {
        let mut stack = vec![Frame {
            col: 0,
            h_prev: seed,
            top: 0,
            hmask: 0,
            weight: 1.0,
        }];
        while let Some(f) = stack.pop() {
            if f.col == width {
                if f.h_prev == seed {
                    out.push(RowTransition {
                        top: f.top,
                        hmask: f.hmask,
                        weight: f.weight,
                    });
                }
                continue;
            }
            let c = f.col;
            let occupied_bottom = bottom >> c & 1 == 1;
            match (occupied_bottom, f.h_prev) {
                (true, false) => {
                    // vertical pass-through
                    stack.push(Frame {
                        col: c + 1,
                        h_prev: false,
                        top: f.top | 1 << c,
                        hmask: f.hmask,
                        weight: f.weight,
                    });
                }
                (true, true) => {
                    // corner: enter south, exit west
                    stack.push(Frame {
                        col: c + 1,
                        h_prev: false,
                        top: f.top,
                        hmask: f.hmask,
                        weight: f.weight * r_cols[c],
                    });
                }
                (false, true) => {
                    // horizontal pass-through; the east gap is laid down
                    stack.push(Frame {
                        col: c + 1,
                        h_prev: true,
                        top: f.top,
                        hmask: f.hmask | 1 << c,
                        weight: f.weight * ey,
                    });
                }
                (false, false) => {
                    // empty vertex …
                    stack.push(Frame {
                        col: c + 1,
                        h_prev: false,
                        top: f.top,
                        hmask: f.hmask,
                        weight: f.weight * empty_w[c],
                    });
                    // … or a run turns north here (corner: enter east)
                    stack.push(Frame {
                        col: c + 1,
                        h_prev: true,
                        top: f.top | 1 << c,
                        hmask: f.hmask | 1 << c,
                        weight: f.weight * r_cols[c] * ey,
                    });
                }
            }
        }
    }
    out
}

/// Count row transitions from every bottom mask, as a (2^w)² matrix used by
/// the enumeration cost guard. Entry [top][bottom].
pub fn transition_count_matrix(width: usize, r_cols: &[f64]) -> Vec<Vec<f64>> {
    let dim = 1usize << width;
    let mut m = vec![vec![0.0f64; dim]; dim];
    for bottom in 0..dim as u32 {
        for t in row_transitions(width, bottom, r_cols, 0.0) {
            m[t.top as usize][bottom as usize] += 1.0;
        }
    }
    m
}
