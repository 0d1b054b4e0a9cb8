//! Isotropic total variation with periodic boundary.
//!
//! Pixel `(r, c)` contributes `√((x[r,c] − x[r,c−1])² + (x[r,c] − x[r−1,c])²)`
//! with indices taken modulo the side.

fn side_of(n: usize) -> usize {
    let s = (n as f64).sqrt().round() as usize;
    assert_eq!(s * s, n, "TV needs a square image");
    s
}

#[inline]
fn neighbors(side: usize, r: usize, c: usize) -> (usize, usize, usize) {
    let p = r * side + c;
    let left = r * side + (c + side - 1) % side;
    let up = ((r + side - 1) % side) * side + c;
    (p, left, up)
}

pub fn tv_value(x: &[f64]) -> f64 {
    let side = side_of(x.len());
    let mut total = 0.0;
    for r in 0..side {
        for c in 0..side {
            let (p, l, u) = neighbors(side, r, c);
            let a = x[p] - x[l];
            let b = x[p] - x[u];
            total += a.hypot(b);
        }
    }
    total
}

/// A subgradient of [`tv_value`]; terms whose differences both vanish
/// contribute nothing.
pub fn tv_subgradient(x: &[f64]) -> Vec<f64> {
    let side = side_of(x.len());
    let mut g = vec![0.0; x.len()];
    for r in 0..side {
        for c in 0..side {
            let (p, l, u) = neighbors(side, r, c);
            let a = x[p] - x[l];
            let b = x[p] - x[u];
            let s = a.hypot(b);
            if s == 0.0 {
                continue;
            }
            let (a, b) = (a / s, b / s);
            g[p] += a + b;
            g[l] -= a;
            g[u] -= b;
        }
    }
    g
}

/// `‖tv_subgradient(x)‖ ≤ 3√n`: each term's gradient has squared norm at most
/// 3 and each pixel is touched by three terms.
pub fn tv_subgradient_bound(n: usize) -> f64 {
    3.0 * (n as f64).sqrt()
}
