//! Brute-force reference implementations, coded from the definitions with
//! plain loops over cell centres and no shared kernels.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tentspace::{BallFamily, GridBox, GridFn, HalfSpaceFn, TLevels, Weight};

pub fn centre(g: &GridBox, idx: usize) -> [f64; 2] {
    let n = g.cells_per_axis();
    let h = 2.0 * g.half_width() / n as f64;
    let c = |i: usize| -g.half_width() + (i as f64 + 0.5) * h;
    if g.dim() == 1 {
        [c(idx), 0.0]
    } else {
        [c(idx % n), c(idx / n)]
    }
}

/// Cells whose centre lies strictly inside `B(centre(x), rho)`.
pub fn members(g: &GridBox, x: usize, rho: f64) -> Vec<usize> {
    let cx = centre(g, x);
    (0..g.len())
        .filter(|&y| {
            let cy = centre(g, y);
            let d2 = (cx[0] - cy[0]).powi(2) + (cx[1] - cy[1]).powi(2);
            d2 < rho * rho * (1.0 - 1e-9)
        })
        .collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c as f64
}

/// `(Σ_k Δ hⁿ t_k⁻ⁿ Σ_{y ∈ B(x, β t_k)} |F(y, t_k)|^r)^{1/r}`.
pub fn cone_oracle(f: &HalfSpaceFn, r: f64, beta: f64) -> Vec<f64> {
    let g = f.grid();
    let tl = f.tlevels();
    let k_count = tl.count();
    let n = g.dim() as i32;
    let h = 2.0 * g.half_width() / g.cells_per_axis() as f64;
    let ratio = tl.t_max() / tl.t_min();
    let delta = ratio.ln() / k_count as f64;
    (0..g.len())
        .map(|x| {
            let mut acc = 0.0;
            for k in 0..k_count {
                let t = tl.t_min() * ratio.powf((k as f64 + 0.5) / k_count as f64);
                let slice = f.slice(k);
                let s: f64 = members(g, x, beta * t)
                    .into_iter()
                    .map(|y| slice[y].abs().powf(r))
                    .sum();
                acc += delta * h.powi(n) / t.powi(n) * s;
            }
            acc.powf(1.0 / r)
        })
        .collect()
}

/// `sup` over family balls containing `x` of `⨍_B |f|`; 0 where no ball reaches.
pub fn maximal_oracle(f: &GridFn, family: &BallFamily) -> Vec<f64> {
    let g = f.grid();
    let mut out = vec![0.0f64; g.len()];
    for (c, t) in family.pairs() {
        let ball = members(g, c, t);
        let avg = mean(ball.iter().map(|&y| f.values()[y].abs()));
        for &y in &ball {
            out[y] = out[y].max(avg);
        }
    }
    out
}

/// `sup_B (⨍_B w)(⨍_B w^{1-p'})^{p-1}`, or `(⨍_B w) max_B w⁻¹` at `p = 1`.
pub fn ap_oracle(w: &Weight, p: f64, family: &BallFamily) -> f64 {
    let g = w.grid();
    let wv = w.values();
    family
        .pairs()
        .map(|(c, t)| {
            let ball = members(g, c, t);
            let a = mean(ball.iter().map(|&y| wv[y]));
            if p == 1.0 {
                a * ball.iter().map(|&y| 1.0 / wv[y]).fold(0.0, f64::max)
            } else {
                let e = 1.0 - p / (p - 1.0);
                a * mean(ball.iter().map(|&y| wv[y].powf(e))).powf(p - 1.0)
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// One seeded small instance for the oracle comparisons.
pub struct Instance {
    pub f: HalfSpaceFn,
    pub r: f64,
    pub beta: f64,
    pub w: Weight,
    pub p: f64,
    pub family: BallFamily,
}

pub fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(1..=2);
    let cells = rng.gen_range(2..=8);
    let l = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
    let grid = GridBox::new(dim, l, cells).unwrap();
    let h = grid.cell_width();
    let k = rng.gen_range(1..=4);
    let t_min = h * rng.gen_range(0.3..1.5);
    let tl = TLevels::new(t_min, t_min * rng.gen_range(1.5..20.0), k).unwrap();
    let values: Vec<f64> = (0..grid.len() * k)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(-2.0..2.0)
            }
        })
        .collect();
    let f = HalfSpaceFn::new(grid, tl, values).unwrap();
    let w = Weight::sampled(
        GridFn::new(
            grid,
            (0..grid.len()).map(|_| rng.gen_range(0.05..5.0)).collect(),
        )
        .unwrap(),
    )
    .unwrap();
    // half-integer multiples of h put some radii exactly on cell-centre ties
    let pairs: Vec<(usize, f64)> = (0..rng.gen_range(1..12))
        .map(|_| {
            let c = rng.gen_range(0..grid.len());
            let t = if rng.gen_bool(0.5) {
                0.5 * h * rng.gen_range(1..=2 * cells) as f64
            } else {
                h * rng.gen_range(0.3..cells as f64)
            };
            (c, t)
        })
        .collect();
    Instance {
        f,
        r: [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)],
        beta: [0.5, 1.0, 2.0][rng.gen_range(0..3)],
        w,
        p: [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)],
        family: BallFamily::from_pairs(grid, pairs, "random").unwrap(),
    }
}
