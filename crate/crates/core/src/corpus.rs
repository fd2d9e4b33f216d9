//! Seeded test functions defined in the continuum.
//!
//! Each probe is a parameter record drawn once from a seed and sampled at
//! cell centres (and level heights) afterwards, so the same probe can be
//! evaluated on every rung of a refinement ladder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{GridBox, GridFn, HalfSpaceFn, TLevels};

/// Deterministic generator for a named stream within a seed.
pub fn rng_for(seed: u64, stream: &str) -> ChaCha8Rng {
    let mut s = seed ^ 0x9e37_79b9_7f4a_7c15;
    for b in stream.bytes() {
        s = s.rotate_left(7) ^ u64::from(b);
        s = s.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(s)
}

fn dist(x: [f64; 2], c: [f64; 2], dim: usize) -> f64 {
    let dx = x[0] - c[0];
    let dy = if dim == 2 { x[1] - c[1] } else { 0.0 };
    (dx * dx + dy * dy).sqrt()
}

/// Base-space probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum BaseProbe {
    /// Union of balls `B(c_i, ρ_i)` with heights `a_i` (summed).
    Indicators {
        centres: Vec<[f64; 2]>,
        radii: Vec<f64>,
        heights: Vec<f64>,
    },
    /// `a (1 - |x - c|²/ρ²)²₊`.
    Bump {
        centre: [f64; 2],
        radius: f64,
        height: f64,
    },
}

impl BaseProbe {
    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        match self {
            BaseProbe::Indicators {
                centres,
                radii,
                heights,
            } => centres
                .iter()
                .zip(radii)
                .zip(heights)
                .filter(|((c, r), _)| dist(x, **c, dim) < **r)
                .map(|(_, a)| a)
                .sum(),
            BaseProbe::Bump {
                centre,
                radius,
                height,
            } => {
                let u = dist(x, *centre, dim) / radius;
                if u < 1.0 {
                    height * (1.0 - u * u).powi(2)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample(&self, grid: GridBox) -> Result<GridFn> {
        GridFn::from_fn(grid, |x| self.eval(x, grid.dim()))
    }
}

/// Half-space probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum HalfSpaceProbe {
    /// `f(y) · 1_{[a, b]}(t)`.
    Slab { base: BaseProbe, band: [f64; 2] },
    /// `1_{B(c, ρ)}(y) · 1_{[a, ρ]}(t)` with `a > 0`.
    CarlesonBox {
        centre: [f64; 2],
        radius: f64,
        floor: f64,
    },
    /// `f(y) · (t/t₀)^γ e^{-t/t₁}`, smooth in the height.
    Profile {
        base: BaseProbe,
        t0: f64,
        gamma: f64,
        t1: f64,
    },
}

impl HalfSpaceProbe {
    pub fn eval(&self, x: [f64; 2], t: f64, dim: usize) -> f64 {
        match self {
            HalfSpaceProbe::Slab { base, band } => {
                if t >= band[0] && t <= band[1] {
                    base.eval(x, dim)
                } else {
                    0.0
                }
            }
            HalfSpaceProbe::CarlesonBox {
                centre,
                radius,
                floor,
            } => {
                if dist(x, *centre, dim) < *radius && t >= *floor && t <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            HalfSpaceProbe::Profile {
                base,
                t0,
                gamma,
                t1,
            } => base.eval(x, dim) * (t / t0).powf(*gamma) * (-t / t1).exp(),
        }
    }

    pub fn sample(&self, grid: GridBox, tlevels: TLevels) -> Result<HalfSpaceFn> {
        HalfSpaceFn::from_fn(grid, tlevels, |x, t| self.eval(x, t, grid.dim()))
    }
}

/// Geometry shared by every probe of a corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusFrame {
    pub dim: usize,
    pub half_width: f64,
    pub t_min: f64,
    pub t_max: f64,
}

fn point(rng: &mut ChaCha8Rng, dim: usize, spread: f64) -> [f64; 2] {
    let x = rng.gen_range(-spread..spread);
    let y = if dim == 2 {
        rng.gen_range(-spread..spread)
    } else {
        0.0
    };
    [x, y]
}

fn random_base(rng: &mut ChaCha8Rng, frame: &CorpusFrame, centred: bool) -> BaseProbe {
    let l = frame.half_width;
    if rng.gen_bool(0.5) {
        let count = rng.gen_range(1..=3);
        let mut centres = Vec::with_capacity(count);
        let mut radii = Vec::with_capacity(count);
        let mut heights = Vec::with_capacity(count);
        for i in 0..count {
            centres.push(if centred && i == 0 {
                [0.0, 0.0]
            } else {
                point(rng, frame.dim, 0.6 * l)
            });
            radii.push(rng.gen_range(0.05 * l..0.3 * l));
            heights.push(rng.gen_range(0.5..2.0));
        }
        BaseProbe::Indicators {
            centres,
            radii,
            heights,
        }
    } else {
        BaseProbe::Bump {
            centre: if centred {
                [0.0, 0.0]
            } else {
                point(rng, frame.dim, 0.6 * l)
            },
            radius: rng.gen_range(0.05 * l..0.4 * l),
            height: rng.gen_range(0.5..2.0),
        }
    }
}

/// `count` base probes; every fourth one is centred at the origin.
pub fn base_probes(seed: u64, frame: &CorpusFrame, count: usize) -> Vec<BaseProbe> {
    let mut rng = rng_for(seed, "base");
    (0..count)
        .map(|i| random_base(&mut rng, frame, i % 4 == 0))
        .collect()
}

/// `count` non-negative half-space probes cycling through slabs, Carleson
/// boxes lifted off `t = 0`, and smooth height profiles.
pub fn halfspace_probes(seed: u64, frame: &CorpusFrame, count: usize) -> Vec<HalfSpaceProbe> {
    let mut rng = rng_for(seed, "halfspace");
    let (lo, hi) = (frame.t_min.ln(), frame.t_max.ln());
    (0..count)
        .map(|i| {
            let centred = i % 4 == 0;
            match i % 3 {
                0 => {
                    let span = hi - lo;
                    let a = rng.gen_range(lo..hi - 0.3 * span);
                    let b = rng.gen_range(a + 0.25 * span..hi);
                    HalfSpaceProbe::Slab {
                        base: random_base(&mut rng, frame, centred),
                        band: [a.exp(), b.exp()],
                    }
                }
                1 => {
                    let radius = rng.gen_range(0.1 * frame.half_width..0.4 * frame.half_width);
                    let floor = rng.gen_range(lo..0.5 * (lo + hi)).exp().min(0.5 * radius);
                    HalfSpaceProbe::CarlesonBox {
                        centre: if centred {
                            [0.0, 0.0]
                        } else {
                            point(&mut rng, frame.dim, 0.5 * frame.half_width)
                        },
                        radius,
                        floor,
                    }
                }
                _ => HalfSpaceProbe::Profile {
                    base: random_base(&mut rng, frame, centred),
                    t0: rng.gen_range(lo..hi).exp(),
                    gamma: rng.gen_range(0.0..2.0),
                    t1: rng.gen_range(lo..hi).exp(),
                },
            }
        })
        .collect()
}

/// Signed values uniform in `[-1, 1]`, one per cell and level.
pub fn random_halfspace(rng: &mut ChaCha8Rng, grid: GridBox, tlevels: TLevels) -> HalfSpaceFn {
    let values = (0..grid.len() * tlevels.count())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    HalfSpaceFn::new(grid, tlevels, values).expect("finite samples")
}

/// Positive weight samples `exp(u)` with `u` uniform in `[-1, 1]`.
pub fn random_weight_values(rng: &mut ChaCha8Rng, grid: GridBox) -> GridFn {
    let values = (0..grid.len())
        .map(|_| rng.gen_range(-1.0f64..1.0).exp())
        .collect();
    GridFn::new(grid, values).expect("finite samples")
}
