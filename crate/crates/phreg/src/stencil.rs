//! Finite-difference stencil weights on uniform grids.
//!
//! Weights come from Fornberg's recursion, which is exact for arbitrary
//! derivative order and arbitrary (also one-sided) point sets. Interior
//! rows use the shortest centered stencil of formal order two; rows too
//! close to an endpoint fall back to one-sided stencils of the same order.

/// Fornberg weights for the `order`-th derivative at `eval` given
/// integer point offsets (all in units of the grid spacing).
pub fn fd_weights(offsets: &[i64], eval: f64, order: usize) -> Vec<f64> {
    let s = offsets.len() - 1;
    assert!(s >= order, "need at least order+1 points");
    let alpha: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let mut c = vec![vec![0.0; order + 1]; s + 1];
    let mut c1 = 1.0;
    let mut c4 = alpha[0] - eval;
    c[0][0] = 1.0;
    for i in 1..=s {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = alpha[i] - eval;
        for j in 0..i {
            let c3 = alpha[i] - alpha[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[order]).collect()
}

/// A derivative stencil anchored on grid nodes: `weights[i]` multiplies the
/// value at node `start + i`, and the result approximates the `order`-th
/// derivative divided by `h^order`.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub start: usize,
    pub weights: Vec<f64>,
}

/// Stencil for the `order`-th derivative evaluated at node `node` of a grid
/// with `nodes` points: centered where it fits, one-sided of the same formal
/// order near the ends.
pub fn derivative_stencil(order: usize, node: usize, nodes: usize) -> Stencil {
    if order == 0 {
        return Stencil {
            start: node,
            weights: vec![1.0],
        };
    }
    let half = order.div_ceil(2);
    if node >= half && node + half < nodes {
        let offsets: Vec<i64> = (-(half as i64)..=half as i64).collect();
        Stencil {
            start: node - half,
            weights: fd_weights(&offsets, 0.0, order),
        }
    } else {
        // one-sided, order+2 points gives formal order two
        let npts = order + 2;
        assert!(nodes >= npts, "grid too coarse for one-sided stencil");
        let start = if node < half { 0 } else { nodes - npts };
        let offsets: Vec<i64> = (0..npts as i64).collect();
        Stencil {
            start,
            weights: fd_weights(&offsets, node as f64 - start as f64, order),
        }
    }
}

/// One-sided stencil for the `order`-th derivative at an endpoint
/// (`left = true` for the first node, otherwise the last node).
pub fn endpoint_stencil(order: usize, left: bool, nodes: usize) -> Stencil {
    let npts = if order == 0 { 1 } else { order + 2 };
    assert!(nodes >= npts, "grid too coarse for endpoint stencil");
    let offsets: Vec<i64> = (0..npts as i64).collect();
    if left {
        Stencil {
            start: 0,
            weights: fd_weights(&offsets, 0.0, order),
        }
    } else {
        Stencil {
            start: nodes - npts,
            weights: fd_weights(&offsets, (npts - 1) as f64, order),
        }
    }
}
