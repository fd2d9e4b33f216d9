//! Parameterized numerical checks, each producing a [`CheckReport`].
//!
//! Inequalities with explicit constants are asserted directly. Inequalities
//! with unspecified constants are asserted as: finite, refinement stable
//! (relative drift below [`STABILITY_DRIFT`] per ladder step), and monotone
//! when tabulated against a weight constant within one weight family.

mod conclusions;
mod identities;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{halfspace_probes, CorpusFrame, HalfSpaceProbe};
use crate::error::{Error, Result};
use crate::grid::{GridBox, HalfSpaceFn, TLevels};
use crate::weights::{
    ainfty_constant, ap_constant, apq_constant, refinement_sweep, rh_constant, WeightClass,
    WeightConstants, WeightSpec,
};

pub use conclusions::*;
pub use identities::*;
pub use report::*;

/// Largest relative change of a measured constant between ladder rungs.
pub const STABILITY_DRIFT: f64 = 0.25;

/// Relative tolerance for exact floating-point comparisons.
pub const ROUNDING: f64 = 1e-12;

/// `p` grid used for `[w]_{A_∞}`.
pub const AINFTY_P_GRID: [f64; 6] = [1.25, 1.5, 2.0, 3.0, 5.0, 10.0];

/// One rung of a refinement ladder: `N` cells per axis and `K` levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Resolution {
    pub cells: usize,
    pub levels: usize,
}

impl From<(usize, usize)> for Resolution {
    fn from((cells, levels): (usize, usize)) -> Self {
        Self { cells, levels }
    }
}

impl From<Resolution> for (usize, usize) {
    fn from(r: Resolution) -> Self {
        (r.cells, r.levels)
    }
}

/// Default ladder `(128, 16) → (256, 32)`.
pub fn default_ladder() -> Vec<Resolution> {
    vec![(128, 16).into(), (256, 32).into()]
}

/// Box and height window shared by all resolutions of a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Frame {
    pub dim: usize,
    pub half_width: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Self {
            dim: 1,
            half_width: 4.0,
            t_min: 0.05,
            t_max: 1.0,
        }
    }
}

impl Frame {
    pub fn grid(&self, cells: usize) -> Result<GridBox> {
        GridBox::new(self.dim, self.half_width, cells)
    }

    pub fn at(&self, res: Resolution) -> Result<(GridBox, TLevels)> {
        Ok((
            self.grid(res.cells)?,
            TLevels::new(self.t_min, self.t_max, res.levels)?,
        ))
    }

    /// Checks that the box and height window are well formed.
    pub fn validate(&self) -> Result<()> {
        GridBox::new(self.dim, self.half_width, 2)?;
        TLevels::new(self.t_min, self.t_max, 1)?;
        Ok(())
    }

    pub fn corpus(&self) -> CorpusFrame {
        CorpusFrame {
            dim: self.dim,
            half_width: self.half_width,
            t_min: self.t_min,
            t_max: self.t_max,
        }
    }

    fn record(&self, params: &mut Params) {
        params.n = Some(self.dim);
        params.half_width = Some(Num(self.half_width));
        params.t_window = Some((Num(self.t_min), Num(self.t_max)));
    }
}

/// Seed and default refinement ladder for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub seed: u64,
    pub ladder: Vec<Resolution>,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            seed: 0,
            ladder: default_ladder(),
        }
    }
}

impl Context {
    pub fn new(seed: u64, ladder: Vec<Resolution>) -> Self {
        Self { seed, ladder }
    }

    fn ladder_or<'a>(&'a self, own: &'a Option<Vec<Resolution>>) -> Result<&'a [Resolution]> {
        let l = own.as_deref().unwrap_or(&self.ladder);
        if l.is_empty() {
            return Err(Error::param(
                "ladder",
                "must contain at least one resolution",
            ));
        }
        Ok(l)
    }
}

/// Rejects an explicitly empty ladder, a rung without cells or levels, and a
/// zero probe count.
fn validate_common(ladder: &Option<Vec<Resolution>>, probes: usize) -> Result<()> {
    if let Some(l) = ladder {
        if l.is_empty() {
            return Err(Error::param(
                "ladder",
                "must contain at least one resolution",
            ));
        }
        if l.iter().any(|r| r.cells == 0 || r.levels == 0) {
            return Err(Error::param("ladder", "cells and levels must be positive"));
        }
    }
    if probes == 0 {
        return Err(Error::param("probes", "must be positive"));
    }
    Ok(())
}

/// Largest relative change between successive entries.
pub fn drift(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Finite and drifting by less than [`STABILITY_DRIFT`] per rung.
pub fn is_stable(values: &[f64]) -> bool {
    !values.is_empty() && values.iter().all(|v| v.is_finite()) && drift(values) < STABILITY_DRIFT
}

/// Records a ladder of constants on a row and fails it unless stable.
fn assess_ladder(row: &mut Row, key: &str, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        row.set(&format!("{key}[{i}]"), *v);
    }
    row.set(&format!("{key}_drift"), drift(values));
    if !is_stable(values) {
        row.demote(Status::Fail);
        row.note(format!("{key} not refinement stable"));
    }
}

/// Non-decreasing when sorted by the first coordinate (equal `x` may differ).
pub fn is_monotone_compatible(points: &[(f64, f64)]) -> bool {
    let with_tol: Vec<(f64, f64, f64)> = points.iter().map(|&(x, y)| (x, y, 0.0)).collect();
    is_monotone_within(&with_tol)
}

/// Like [`is_monotone_compatible`], but a decrease from `(x_i, y_i)` to
/// `(x_j, y_j)` is tolerated when it is no larger than `max(tol_i, tol_j)`,
/// the resolution of the two measurements.
pub fn is_monotone_within(points: &[(f64, f64, f64)]) -> bool {
    points.iter().all(|&(xi, yi, ti)| {
        points.iter().all(|&(xj, yj, tj)| {
            xj <= xi * (1.0 + ROUNDING) || yj >= yi - ti.max(tj) - ROUNDING * yi.abs()
        })
    })
}

/// Weight constant of a class measured on the grids `N₀, 2N₀, 4N₀`, with the
/// divergence flag from [`refinement_sweep`].
pub fn weight_constant(
    spec: &WeightSpec,
    class: WeightClass,
    frame: &Frame,
    base_cells: usize,
) -> Result<WeightConstants> {
    let grids = [base_cells, 2 * base_cells, 4 * base_cells]
        .iter()
        .map(|&c| frame.grid(c))
        .collect::<Result<Vec<_>>>()?;
    refinement_sweep(spec, &grids, |w, fam| match class {
        WeightClass::Ap { p } => ap_constant(w, p, fam),
        WeightClass::A1 => ap_constant(w, 1.0, fam),
        WeightClass::AInfinity => ainfty_constant(w, fam, &AINFTY_P_GRID),
        WeightClass::ReverseHolder { s } => rh_constant(w, s, fam),
        WeightClass::ReverseHolderInfinity => rh_constant(w, f64::INFINITY, fam),
        WeightClass::Apq { p, q } => apq_constant(w, p, q, fam),
    })
}

fn class_label(class: &WeightClass) -> String {
    match class {
        WeightClass::Ap { p } => format!("A_{p}"),
        WeightClass::A1 => "A_1".into(),
        WeightClass::AInfinity => "A_inf".into(),
        WeightClass::ReverseHolder { s } => format!("RH_{s}"),
        WeightClass::ReverseHolderInfinity => "RH_inf".into(),
        WeightClass::Apq { p, q } => format!("A_{{{p},{q}}}"),
    }
}

/// Records a weight constant on a row; divergence flags the row.
fn record_weight_constant(row: &mut Row, c: &WeightConstants) {
    let label = class_label(&c.class);
    row.set(&format!("[w]_{label}"), c.value);
    if c.divergent {
        row.demote(Status::Divergent);
        row.note(format!(
            "[w]_{label} diverges under refinement: {:?}",
            c.refinement
        ));
    }
}

/// Maximum over probes of a ratio evaluated on one resolution; probes whose
/// ratio is `None` (zero denominator) are skipped.
fn probe_max(
    probes: &[HalfSpaceProbe],
    grid: GridBox,
    tl: TLevels,
    ratio: impl Fn(&HalfSpaceFn) -> Result<Option<f64>> + Sync,
) -> Result<(f64, usize)> {
    let values: Vec<Option<f64>> = probes
        .par_iter()
        .map(|p| ratio(&p.sample(grid, tl)?))
        .collect::<Result<_>>()?;
    let skipped = values.iter().filter(|v| v.is_none()).count();
    let best = values
        .into_iter()
        .flatten()
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::Degenerate(
            "every probe has a zero denominator".into(),
        ));
    }
    Ok((best, skipped))
}

/// `num / den`, or `None` when `den` vanishes.
fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn probes_for(frame: &Frame, seed: u64, count: usize) -> Vec<HalfSpaceProbe> {
    halfspace_probes(seed, &frame.corpus(), count)
}
