//! Cone functionals and (Lorentz) tent norms.
//!
//! The height variable is discretized by a midpoint rule in `ln t`: level
//! `t_k` carries weight `Δ` and `F` is constant on its band. In the default
//! [`ConeMode::Discrete`] mode
//!
//! ```text
//! 𝒜_r^β F(x)^r = Σ_k Δ t_k^{-n} Σ_{y ∈ B_d(x, β t_k)} |F(y, t_k)|^r hⁿ,
//! ```
//!
//! and ball membership is symmetric, so swapping the `x` and `y` sums turns
//! `‖𝒜_r F‖_{L^r(w)}^r` into the weighted slice sum computed by
//! [`fubini_identity_residual`] with `|B_d(y, t_k)| / t_kⁿ` in place of the
//! unit-ball volume.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::grid::{
    lorentz_quasinorm, lp_norm, same_grid, BallShape, GridBox, GridFn, HalfSpaceFn, LorentzIndex,
    TLevels,
};
use crate::kernel;
use crate::weights::{averaged_weight, Weight};

/// Normalization of a cone cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeMode {
    /// `t^{-n}` times the sum over the clipped ball.
    #[default]
    Discrete,
    /// `v_n βⁿ` times the discrete average over the clipped ball.
    Continuum,
}

/// Volume of the unit ball in dimension 1 or 2.
pub fn unit_ball_volume(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        std::f64::consts::PI
    }
}

/// Ball shapes and member counts for every level of a cone of aperture `β`.
#[derive(Debug, Clone)]
pub struct ConeQuadrature {
    grid: GridBox,
    tlevels: TLevels,
    beta: f64,
    shapes: Vec<BallShape>,
    counts: Vec<Vec<usize>>,
}

impl ConeQuadrature {
    pub fn new(grid: GridBox, tlevels: TLevels, beta: f64) -> Result<Self> {
        require_positive("beta", beta)?;
        let shapes: Vec<BallShape> = tlevels
            .levels()
            .iter()
            .map(|&t| BallShape::new(&grid, beta * t))
            .collect();
        let counts = shapes
            .par_iter()
            .map(|s| kernel::ball_counts(&grid, s))
            .collect();
        Ok(Self {
            grid,
            tlevels,
            beta,
            shapes,
            counts,
        })
    }

    pub fn grid(&self) -> &GridBox {
        &self.grid
    }

    pub fn tlevels(&self) -> &TLevels {
        &self.tlevels
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Cells of the cone cross-section over `x` at level `k`.
    pub fn members(&self, x: usize, k: usize) -> Vec<usize> {
        self.grid
            .ball(x, self.beta * self.tlevels.level(k))
            .map(|b| b.members)
            .unwrap_or_default()
    }

    /// `|B_d(x, β t_k)|`.
    pub fn measure(&self, x: usize, k: usize) -> f64 {
        self.counts[k][x] as f64 * self.grid.cell_volume()
    }

    /// `𝒜_r^β F` evaluated on every cell.
    pub fn apply(&self, big_f: &HalfSpaceFn, r: f64, mode: ConeMode) -> Result<GridFn> {
        require_positive("r", r)?;
        same_grid(&self.grid, big_f.grid())?;
        if big_f.tlevels() != &self.tlevels {
            return Err(Error::Shape("t-levels differ from the quadrature".into()));
        }
        let n = self.grid.dim() as i32;
        let delta = self.tlevels.log_step();
        let vol = self.grid.cell_volume();
        let continuum = unit_ball_volume(self.grid.dim()) * self.beta.powi(n);
        let per_level: Vec<Vec<f64>> = (0..self.tlevels.count())
            .into_par_iter()
            .map(|k| {
                let powered: Vec<f64> = big_f.slice(k).iter().map(|v| v.abs().powf(r)).collect();
                let sums = kernel::ball_sums(&self.grid, &powered, &self.shapes[k]);
                match mode {
                    ConeMode::Discrete => {
                        let c = delta * vol / self.tlevels.level(k).powi(n);
                        sums.into_iter().map(|s| c * s).collect()
                    }
                    ConeMode::Continuum => sums
                        .into_iter()
                        .zip(&self.counts[k])
                        .map(|(s, &m)| delta * continuum * s / m as f64)
                        .collect(),
                }
            })
            .collect();
        let mut acc = vec![0.0; self.grid.len()];
        for level in &per_level {
            for (a, v) in acc.iter_mut().zip(level) {
                *a += v;
            }
        }
        Ok(GridFn::from_vec_unchecked(
            self.grid,
            acc.into_iter().map(|a| a.powf(1.0 / r)).collect(),
        ))
    }
}

/// `𝒜_r^β F` in [`ConeMode::Discrete`].
pub fn cone_functional(big_f: &HalfSpaceFn, r: f64, beta: f64) -> Result<GridFn> {
    cone_functional_with(big_f, r, beta, ConeMode::Discrete)
}

pub fn cone_functional_with(
    big_f: &HalfSpaceFn,
    r: f64,
    beta: f64,
    mode: ConeMode,
) -> Result<GridFn> {
    require_positive("r", r)?;
    ConeQuadrature::new(*big_f.grid(), *big_f.tlevels(), beta)?.apply(big_f, r, mode)
}

/// `‖F‖_{𝒯_r^p(w)} = ‖𝒜_r F‖_{L^p(w)}`.
pub fn tent_norm(big_f: &HalfSpaceFn, r: f64, p: f64, w: &Weight) -> Result<f64> {
    require_positive("p", p)?;
    lp_norm(&cone_functional(big_f, r, 1.0)?, p, w)
}

/// `‖F‖_{𝒯_r^{p,s}(w)} = ‖𝒜_r F‖_{L^{p,s}(w)}`.
pub fn tent_lorentz_norm(
    big_f: &HalfSpaceFn,
    r: f64,
    p: f64,
    s: LorentzIndex,
    w: &Weight,
) -> Result<f64> {
    require_positive("p", p)?;
    lorentz_quasinorm(&cone_functional(big_f, r, 1.0)?, p, s, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FubiniResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
}

/// Both sides of `‖𝒜_r F‖_{L^r(w)}^r = Σ_k Δ Σ_y |F(y,t_k)|^r W_{t_k}(y) hⁿ |B_d(y,t_k)|/t_kⁿ`.
pub fn fubini_identity_residual(big_f: &HalfSpaceFn, r: f64, w: &Weight) -> Result<FubiniResidual> {
    let grid = *big_f.grid();
    same_grid(&grid, w.grid())?;
    let lhs = tent_norm(big_f, r, r, w)?.powf(r);
    let tl = big_f.tlevels();
    let n = grid.dim() as i32;
    let vol = grid.cell_volume();
    let per_level: Vec<f64> = (0..tl.count())
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let t = tl.level(k);
            let avg = averaged_weight(w, t)?;
            let counts = kernel::ball_counts(&grid, &BallShape::new(&grid, t));
            let s: f64 = big_f
                .slice(k)
                .iter()
                .zip(avg.values())
                .zip(&counts)
                .map(|((v, wt), &c)| v.abs().powf(r) * wt * (c as f64 * vol))
                .sum();
            Ok(tl.log_step() * vol * s / t.powi(n))
        })
        .collect::<Result<_>>()?;
    let rhs: f64 = per_level.iter().sum();
    let rel_error = if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.max(f64::MIN_POSITIVE)
    };
    Ok(FubiniResidual {
        lhs,
        rhs,
        rel_error,
    })
}

/// `‖𝒜_r^2 G‖_{L^1(w)} / ‖𝒜_r^1 G‖_{L^1(w)}`.
pub fn change_of_aperture_ratio(g: &HalfSpaceFn, r: f64, w: &Weight) -> Result<f64> {
    let den = lp_norm(&cone_functional(g, r, 1.0)?, 1.0, w)?;
    if den == 0.0 {
        return Err(Error::Degenerate(
            "aperture-1 cone functional vanishes".into(),
        ));
    }
    Ok(lp_norm(&cone_functional(g, r, 2.0)?, 1.0, w)? / den)
}
