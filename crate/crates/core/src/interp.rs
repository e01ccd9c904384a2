//! Bicubic (tensor 4-point Lagrange) interpolation on the slab grid.
//!
//! Periodic stencils in `x2`; in `x1` the stencil is shifted inward near the
//! walls, so no data outside `[0, L]` is ever invented.

use crate::grid::{Field, Grid};

/// Node offsets and weights for one interpolation point.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    rows: [usize; 4],
    cols: [usize; 4],
    w1: [f64; 4],
    w2: [f64; 4],
}

#[inline]
fn lagrange4(t: f64) -> [f64; 4] {
    let a = t;
    let b = t - 1.0;
    let c = t - 2.0;
    let d = t - 3.0;
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

impl Stencil {
    /// `x1` is clamped into `[0, L]`, `x2` is wrapped into `[0, L)`.
    pub fn new(grid: &Grid, x1: f64, x2: f64) -> Self {
        let last = grid.n1() - 1;
        let s1 = (x1 / grid.h1()).clamp(0.0, last as f64);
        let base1 = (s1.floor() as usize).min(last - 1);
        let start1 = base1.saturating_sub(1).min(last - 3);
        let w1 = lagrange4(s1 - start1 as f64);
        let rows = [start1, start1 + 1, start1 + 2, start1 + 3];

        let n2 = grid.n2();
        let mut s2 = (x2 / grid.h2()).rem_euclid(n2 as f64);
        if s2 >= n2 as f64 {
            s2 = 0.0;
        }
        let base2 = s2.floor() as usize;
        let w2 = lagrange4(s2 - base2 as f64 + 1.0);
        let start2 = base2 + n2 - 1;
        let cols = [
            start2 % n2,
            (start2 + 1) % n2,
            (start2 + 2) % n2,
            (start2 + 3) % n2,
        ];
        Self { rows, cols, w1, w2 }
    }

    #[inline]
    pub fn apply(&self, f: &Field) -> f64 {
        let n2 = f.grid().n2();
        let data = f.data();
        let mut acc = 0.0;
        for (r, w1) in self.rows.iter().zip(&self.w1) {
            let row = &data[r * n2..(r + 1) * n2];
            let s = self.w2[0] * row[self.cols[0]]
                + self.w2[1] * row[self.cols[1]]
                + self.w2[2] * row[self.cols[2]]
                + self.w2[3] * row[self.cols[3]];
            acc += w1 * s;
        }
        acc
    }
}

/// Bicubic value of `f` at `(x1, x2)`.
pub fn interpolate(f: &Field, x1: f64, x2: f64) -> f64 {
    Stencil::new(f.grid(), x1, x2).apply(f)
}
