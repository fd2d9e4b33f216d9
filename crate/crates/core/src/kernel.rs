//! Whole-grid ball kernels: clipped ball sums and ball dilation maxima.
//!
//! Ball sums use per-row prefix sums kept in double-double precision, so a
//! range sum stays accurate to a few ulps of its own magnitude even when the
//! row total is many orders larger. Maxima use the van Herk/Gil-Werman
//! running-max scheme, linear in the row length for any window width.

use rayon::prelude::*;

use crate::grid::{BallShape, GridBox};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Prefix sums of one row as unevaluated `hi + lo` pairs.
struct RowPrefix {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl RowPrefix {
    fn new(row: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(row.len() + 1);
        let mut lo = Vec::with_capacity(row.len() + 1);
        let (mut h, mut l) = (0.0, 0.0);
        hi.push(h);
        lo.push(l);
        for &v in row {
            let (s, e) = two_sum(h, v);
            let (s2, e2) = two_sum(s, l + e);
            h = s2;
            l = e2;
            hi.push(h);
            lo.push(l);
        }
        Self { hi, lo }
    }

    /// Sum of `row[a..=b]`.
    #[inline]
    fn range(&self, a: usize, b: usize) -> f64 {
        let (d, e) = two_sum(self.hi[b + 1], -self.hi[a]);
        d + (e + (self.lo[b + 1] - self.lo[a]))
    }
}

/// Sums of `values` over the clipped ball of the given shape, at every centre.
pub(crate) fn ball_sums(grid: &GridBox, values: &[f64], shape: &BallShape) -> Vec<f64> {
    let n = grid.cells_per_axis();
    let rows = if grid.dim() == 1 { 1 } else { n };
    let prefixes: Vec<RowPrefix> = (0..rows)
        .into_par_iter()
        .map(|j| RowPrefix::new(&values[j * n..(j + 1) * n]))
        .collect();
    let ni = n as isize;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let [ci, cj] = grid.coords(idx);
            let mut acc = 0.0;
            for &(dy, half) in shape.rows() {
                let j = cj as isize + dy;
                if j < 0 || j >= rows as isize {
                    continue;
                }
                let a = (ci as isize - half).max(0) as usize;
                let b = (ci as isize + half).min(ni - 1) as usize;
                acc += prefixes[j as usize].range(a, b);
            }
            acc
        })
        .collect()
}

/// Row prefixes of a field, for clipped ball sums at individual centres.
pub(crate) struct BallSummer<'a> {
    grid: &'a GridBox,
    prefixes: Vec<RowPrefix>,
}

impl<'a> BallSummer<'a> {
    pub(crate) fn new(grid: &'a GridBox, values: &[f64]) -> Self {
        let n = grid.cells_per_axis();
        let rows = if grid.dim() == 1 { 1 } else { n };
        let prefixes = (0..rows)
            .map(|j| RowPrefix::new(&values[j * n..(j + 1) * n]))
            .collect();
        Self { grid, prefixes }
    }

    /// Sum and member count of the clipped ball at `idx`.
    pub(crate) fn sum_count(&self, idx: usize, shape: &BallShape) -> (f64, usize) {
        let n = self.grid.cells_per_axis() as isize;
        let rows = self.prefixes.len() as isize;
        let [ci, cj] = self.grid.coords(idx);
        let (mut acc, mut count) = (0.0, 0);
        for &(dy, half) in shape.rows() {
            let j = cj as isize + dy;
            if j < 0 || j >= rows {
                continue;
            }
            let a = (ci as isize - half).max(0);
            let b = (ci as isize + half).min(n - 1);
            acc += self.prefixes[j as usize].range(a as usize, b as usize);
            count += (b - a + 1) as usize;
        }
        (acc, count)
    }
}

/// Member cells of the clipped ball at `idx`, row by row.
pub(crate) fn ball_members(grid: &GridBox, idx: usize, shape: &BallShape) -> Vec<usize> {
    let n = grid.cells_per_axis() as isize;
    let rows = if grid.dim() == 1 { 1 } else { n };
    let [ci, cj] = grid.coords(idx);
    let mut out = Vec::new();
    for &(dy, half) in shape.rows() {
        let j = cj as isize + dy;
        if j < 0 || j >= rows {
            continue;
        }
        let a = (ci as isize - half).max(0);
        let b = (ci as isize + half).min(n - 1);
        out.extend((a..=b).map(|i| (i + n * j) as usize));
    }
    out
}

/// Member counts of the clipped ball at every centre.
pub(crate) fn ball_counts(grid: &GridBox, shape: &BallShape) -> Vec<usize> {
    let n = grid.cells_per_axis() as isize;
    let rows = if grid.dim() == 1 { 1 } else { n };
    (0..grid.len())
        .map(|idx| {
            let [ci, cj] = grid.coords(idx);
            shape
                .rows()
                .iter()
                .filter(|(dy, _)| {
                    let j = cj as isize + dy;
                    j >= 0 && j < rows
                })
                .map(|&(_, half)| {
                    let a = (ci as isize - half).max(0);
                    let b = (ci as isize + half).min(n - 1);
                    (b - a + 1) as usize
                })
                .sum()
        })
        .collect()
}

/// Running maximum over the window `[i - half, i + half]` clipped to the row.
fn window_max(row: &[f64], half: usize) -> Vec<f64> {
    let len = row.len();
    if half == 0 {
        return row.to_vec();
    }
    let width = 2 * half + 1;
    // pad so that every window is a full `width` block span
    let padded_len = len + 2 * half;
    let blocks = padded_len.div_ceil(width);
    let total = blocks * width;
    let mut padded = vec![f64::NEG_INFINITY; total];
    padded[half..half + len].copy_from_slice(row);

    let mut fwd = vec![f64::NEG_INFINITY; total];
    let mut bwd = vec![f64::NEG_INFINITY; total];
    for b in 0..blocks {
        let start = b * width;
        let mut m = f64::NEG_INFINITY;
        for i in start..start + width {
            m = m.max(padded[i]);
            fwd[i] = m;
        }
        let mut m = f64::NEG_INFINITY;
        for i in (start..start + width).rev() {
            m = m.max(padded[i]);
            bwd[i] = m;
        }
    }
    // window for output i covers padded[i..i + width]
    (0..len).map(|i| bwd[i].max(fwd[i + width - 1])).collect()
}

/// `out[x] = max { a[c] : c in box, |x - c| < t }` for the given ball shape.
///
/// Entries equal to `-∞` mark centres that take no part in the maximum.
pub(crate) fn ball_dilate_max(grid: &GridBox, a: &[f64], shape: &BallShape) -> Vec<f64> {
    let n = grid.cells_per_axis();
    if grid.dim() == 1 {
        return window_max(a, shape.reach() as usize);
    }
    // row-wise window maxima for every distinct half-width in the shape
    let mut halves: Vec<usize> = shape.rows().iter().map(|&(_, h)| h as usize).collect();
    halves.sort_unstable();
    halves.dedup();
    let by_half: Vec<Vec<f64>> = halves
        .par_iter()
        .map(|&half| {
            let mut out = Vec::with_capacity(grid.len());
            for j in 0..n {
                out.extend(window_max(&a[j * n..(j + 1) * n], half));
            }
            out
        })
        .collect();
    let lookup = |half: usize| &by_half[halves.binary_search(&half).unwrap()];
    let ni = n as isize;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let [ci, cj] = grid.coords(idx);
            let mut m = f64::NEG_INFINITY;
            for &(dy, half) in shape.rows() {
                let j = cj as isize + dy;
                if j < 0 || j >= ni {
                    continue;
                }
                m = m.max(lookup(half as usize)[ci + n * j as usize]);
            }
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_max_matches_naive() {
        let row: Vec<f64> = (0..37).map(|i| ((i * 7919) % 31) as f64 - 10.0).collect();
        for half in 0..40 {
            let fast = window_max(&row, half);
            for (i, got) in fast.iter().enumerate() {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(row.len() - 1);
                let naive = row[lo..=hi]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(*got, naive, "half={half} i={i}");
            }
        }
    }

    #[test]
    fn compensated_range_survives_large_prefix() {
        let mut row = vec![1e12; 8];
        row.extend([1e-6, 2e-6, 3e-6]);
        let p = RowPrefix::new(&row);
        let s = p.range(8, 10);
        assert!((s - 6e-6).abs() < 1e-20, "{s}");
    }

    #[test]
    fn dilation_matches_naive_in_2d() {
        let g = GridBox::new(2, 1.0, 9).unwrap();
        let a: Vec<f64> = (0..g.len()).map(|i| ((i * 104729) % 97) as f64).collect();
        for &t in &[0.2, 0.45, 0.9, 3.0] {
            let shape = BallShape::new(&g, t);
            let fast = ball_dilate_max(&g, &a, &shape);
            for (x, got) in fast.iter().enumerate() {
                let naive = g
                    .ball(x, t)
                    .unwrap()
                    .members
                    .iter()
                    .map(|&c| a[c])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(*got, naive);
            }
        }
    }
}
