use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    record_weight_constant, weight_constant, CheckReport, Context, Frame, Num, Params, Row, Status,
    ROUNDING,
};
use crate::corpus::{base_probes, random_halfspace, random_weight_values, rng_for};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, BallShape, GridBox, GridFn, HalfSpaceFn, TLevels};
use crate::kernel::{ball_members, BallSummer};
use crate::operators::{maximal, maximal_opnorm_estimate};
use crate::tent::fubini_identity_residual;
use crate::weights::{
    ap_product_field, averaged_weight, rdf_iterate, BallFamily, Weight, WeightClass, WeightSpec,
};

/// Largest relative residual accepted by the Fubini check.
pub const FUBINI_TOLERANCE: f64 = 1e-10;

/// Weight given by descriptor, or seeded random samples `exp(U[-1, 1])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightSource {
    Spec(WeightSpec),
    Random,
}

impl FromStr for WeightSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "random" {
            Ok(WeightSource::Random)
        } else {
            s.parse().map(WeightSource::Spec)
        }
    }
}

impl TryFrom<String> for WeightSource {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WeightSource> for String {
    fn from(w: WeightSource) -> String {
        w.to_string()
    }
}

impl fmt::Display for WeightSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSource::Spec(s) => write!(f, "{s}"),
            WeightSource::Random => f.write_str("random"),
        }
    }
}

// ---------------------------------------------------------------- Fubini

/// Fubini residuals on explicit instances `(F, r, w)`.
pub fn check_fubini(instances: &[(HalfSpaceFn, f64, Weight)], seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "fubini",
        Params {
            seed,
            ..Params::default()
        },
    );
    let residuals: Vec<_> = instances
        .par_iter()
        .map(|(f, r, w)| fubini_identity_residual(f, *r, w))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, ((f, r, w), res)) in instances.iter().zip(&residuals).enumerate() {
        let mut row = Row::new(format!("instance {i}"))
            .value("n", f.grid().dim() as f64)
            .value("N", f.grid().cells_per_axis() as f64)
            .value("K", f.tlevels().count() as f64)
            .value("r", *r)
            .value("lhs", res.lhs)
            .value("rhs", res.rhs)
            .value("rel_error", res.rel_error);
        row.note(format!("weight {}", w.descriptor()));
        if !(res.rel_error <= FUBINI_TOLERANCE) {
            row.demote(Status::Fail);
        }
        worst = worst.max(res.rel_error);
        report.rows.push(row);
    }
    report.measure("instances", instances.len() as f64);
    report.measure("max_rel_error", worst);
    report.bound = Some(Num(FUBINI_TOLERANCE));
    Ok(report.finalized())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FubiniParams {
    #[serde(default = "fubini_frame")]
    pub frame: Frame,
    #[serde(default = "fubini_cells")]
    pub cells: usize,
    #[serde(default = "fubini_levels")]
    pub levels: usize,
    #[serde(default = "fubini_rs")]
    pub rs: Vec<f64>,
    #[serde(default = "fubini_instances")]
    pub instances: usize,
    #[serde(default = "random_weight")]
    pub weight: WeightSource,
}

fn fubini_frame() -> Frame {
    Frame {
        dim: 1,
        half_width: 1.0,
        t_min: 0.02,
        t_max: 1.0,
    }
}
fn fubini_cells() -> usize {
    64
}
fn fubini_levels() -> usize {
    16
}
fn fubini_rs() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}
fn fubini_instances() -> usize {
    3
}
fn random_weight() -> WeightSource {
    WeightSource::Random
}

impl Default for FubiniParams {
    fn default() -> Self {
        Self {
            frame: fubini_frame(),
            cells: fubini_cells(),
            levels: fubini_levels(),
            rs: fubini_rs(),
            instances: fubini_instances(),
            weight: random_weight(),
        }
    }
}

impl FubiniParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.grid(self.cells)?;
        TLevels::new(self.frame.t_min, self.frame.t_max, self.levels)?;
        if self.rs.is_empty() || self.rs.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::param("rs", "must be non-empty, positive and finite"));
        }
        Ok(())
    }
}

/// Seeded random signed `F` and weights; `r` cycles through `rs`.
pub fn run_fubini(params: &FubiniParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let grid = params.frame.grid(params.cells)?;
    let tl = TLevels::new(params.frame.t_min, params.frame.t_max, params.levels)?;
    let mut rng = rng_for(ctx.seed, "fubini");
    let mut instances = Vec::with_capacity(params.instances);
    for i in 0..params.instances {
        let f = random_halfspace(&mut rng, grid, tl);
        let w = match params.weight {
            WeightSource::Random => {
                Weight::sampled(random_weight_values(&mut rng, grid))?.with_descriptor("random")
            }
            WeightSource::Spec(s) => s.materialize(grid)?,
        };
        instances.push((f, params.rs[i % params.rs.len()], w));
    }
    let mut report = check_fubini(&instances, ctx.seed)?;
    params.frame.record(&mut report.params);
    report.params.resolutions = vec![(params.cells, params.levels)];
    report.params.weight = Some(params.weight.to_string());
    Ok(report)
}

// ---------------------------------------------------------------- averaging lemma

/// One `(x, s, t)` sample for the iterated-average inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverSample {
    pub x: usize,
    pub s: f64,
    pub t: f64,
}

/// Discretization slack factor `(1 + 2h/min(s,t))ⁿ`.
pub fn aver_slack(grid: &GridBox, s: f64, t: f64) -> f64 {
    (1.0 + 2.0 * grid.cell_width() / s.min(t)).powi(grid.dim() as i32)
}

/// Outcome of [`lemma_aver_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AverSummary {
    pub evaluated: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Largest `lhs / rhs`.
    pub max_ratio: f64,
    /// Largest `lhs / (2ⁿ σ rhs)`; at most 1 when every sample passes.
    pub max_normalized: f64,
    /// Largest slack factor `σ` among evaluated samples.
    pub max_slack: f64,
}

/// `⨍_{B(x,s)} ⨍_{B(y,t)} h` against `2ⁿ σ ⨍_{B(x,s+t)} h` on each sample.
pub fn lemma_aver_sweep(h: &GridFn, samples: &[AverSample]) -> Result<AverSummary> {
    let grid = *h.grid();
    let summer = BallSummer::new(&grid, h.values());
    let bound = 2f64.powi(grid.dim() as i32);
    let per_sample: Vec<Option<(f64, f64, f64)>> = samples
        .par_iter()
        .map(|smp| -> Result<Option<(f64, f64, f64)>> {
            crate::error::require_positive("s", smp.s)?;
            crate::error::require_positive("t", smp.t)?;
            let big = BallShape::new(&grid, smp.s + smp.t);
            if smp.x >= grid.len() || !grid.fits(smp.x, big.reach()) {
                return Ok(None);
            }
            let inner = BallShape::new(&grid, smp.t);
            let outer = BallShape::new(&grid, smp.s);
            let members = ball_members(&grid, smp.x, &outer);
            let lhs = members
                .iter()
                .map(|&y| {
                    let (sum, c) = summer.sum_count(y, &inner);
                    sum / c as f64
                })
                .sum::<f64>()
                / members.len() as f64;
            let (sum, c) = summer.sum_count(smp.x, &big);
            let rhs = sum / c as f64;
            Ok(Some((lhs, rhs, aver_slack(&grid, smp.s, smp.t))))
        })
        .collect::<Result<_>>()?;
    let mut out = AverSummary::default();
    for v in per_sample {
        let Some((lhs, rhs, slack)) = v else {
            out.skipped += 1;
            continue;
        };
        out.evaluated += 1;
        out.max_slack = out.max_slack.max(slack);
        if lhs == 0.0 {
            continue;
        }
        let ratio = lhs / rhs;
        out.max_ratio = out.max_ratio.max(ratio);
        let normalized = ratio / (bound * slack);
        out.max_normalized = out.max_normalized.max(normalized);
        if normalized > 1.0 + ROUNDING {
            out.violations += 1;
        }
    }
    Ok(out)
}

/// Iterated-average inequality on explicit samples of one function.
pub fn check_lemma_aver(h: &GridFn, samples: &[AverSample], seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "lemma_aver",
        Params {
            n: Some(h.grid().dim()),
            resolutions: vec![(h.grid().cells_per_axis(), 0)],
            seed,
            ..Params::default()
        },
    );
    let s = lemma_aver_sweep(h, samples)?;
    summarize_aver(&mut report, "", &s);
    report.bound = Some(Num(2f64.powi(h.grid().dim() as i32)));
    report.slack = Some(Num(s.max_slack - 1.0));
    if s.violations > 0 {
        report.demote(Status::Fail);
    }
    Ok(report.finalized())
}

fn summarize_aver(report: &mut CheckReport, suffix: &str, s: &AverSummary) {
    report.measure(&format!("evaluated{suffix}"), s.evaluated as f64);
    report.measure(&format!("skipped{suffix}"), s.skipped as f64);
    report.measure(&format!("violations{suffix}"), s.violations as f64);
    report.measure(&format!("max_ratio{suffix}"), s.max_ratio);
    report.measure(&format!("max_normalized{suffix}"), s.max_normalized);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaAverParams {
    #[serde(default)]
    pub frame: Frame,
    /// Cells per axis along the refinement ladder.
    pub cells: Vec<usize>,
    #[serde(default = "aver_samples")]
    pub samples: usize,
    #[serde(default = "aver_functions")]
    pub functions: usize,
    /// Range of `s` and `t`, as fractions of the half width.
    #[serde(default = "aver_radius_range")]
    pub radius_range: (f64, f64),
}

fn aver_samples() -> usize {
    1000
}
fn aver_functions() -> usize {
    20
}
fn aver_radius_range() -> (f64, f64) {
    (0.02, 0.3)
}

impl LemmaAverParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if self.cells.is_empty() || self.functions == 0 {
            return Err(Error::param(
                "cells",
                "need at least one resolution and one function",
            ));
        }
        for &c in &self.cells {
            self.frame.grid(c)?;
        }
        let (lo, hi) = self.radius_range;
        if !(lo > 0.0 && lo < hi && 2.0 * hi < 1.0) {
            return Err(Error::param("radius_range", "need 0 < lo < hi < 1/2"));
        }
        Ok(())
    }
}

/// Draws `samples` points `(x, s, t)` in the continuum with `B(x, s+t)` inside
/// the box, then evaluates them on every rung of `cells`.
///
/// Passes when every evaluated sample satisfies the inequality with slack and
/// the excess `max(max_ratio/2ⁿ - 1, 0)` does not grow along the ladder.
pub fn run_lemma_aver(params: &LemmaAverParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let frame = params.frame;
    let (lo, hi) = params.radius_range;
    let probes = base_probes(ctx.seed, &frame.corpus(), params.functions);
    let mut rng = rng_for(ctx.seed, "lemma_aver");
    let l = frame.half_width;
    let points: Vec<([f64; 2], f64, f64, usize)> = (0..params.samples)
        .map(|i| {
            let s = rng.gen_range(lo..hi) * l;
            let t = rng.gen_range(lo..hi) * l;
            let room = l - (s + t);
            let x = rng.gen_range(-room..room);
            let y = if frame.dim == 2 {
                rng.gen_range(-room..room)
            } else {
                0.0
            };
            ([x, y], s, t, i % params.functions)
        })
        .collect();

    let mut report = CheckReport::new(
        "lemma_aver",
        Params {
            seed: ctx.seed,
            ..Params::default()
        },
    );
    frame.record(&mut report.params);
    let bound = 2f64.powi(frame.dim as i32);
    let mut excesses = Vec::new();
    let mut worst_slack: f64 = 0.0;
    for (rung, &cells) in params.cells.iter().enumerate() {
        let grid = frame.grid(cells)?;
        report.params.resolutions.push((cells, 0));
        let mut total = AverSummary::default();
        for (fi, probe) in probes.iter().enumerate() {
            let h = probe.sample(grid)?;
            let samples: Vec<AverSample> = points
                .iter()
                .filter(|p| p.3 == fi)
                .map(|&(x, s, t, _)| AverSample {
                    x: grid.cell_of(x).expect("point inside the box"),
                    s,
                    t,
                })
                .collect();
            let s = lemma_aver_sweep(&h, &samples)?;
            total.evaluated += s.evaluated;
            total.skipped += s.skipped;
            total.violations += s.violations;
            total.max_ratio = total.max_ratio.max(s.max_ratio);
            total.max_normalized = total.max_normalized.max(s.max_normalized);
            total.max_slack = total.max_slack.max(s.max_slack);
        }
        let excess = (total.max_ratio / bound - 1.0).max(0.0);
        let mut row = Row::new(format!("N={cells}"))
            .value("N", cells as f64)
            .value("evaluated", total.evaluated as f64)
            .value("skipped", total.skipped as f64)
            .value("violations", total.violations as f64)
            .value("max_ratio", total.max_ratio)
            .value("max_normalized", total.max_normalized)
            .value("max_slack_factor", total.max_slack)
            .value("excess_over_2^n", excess);
        if total.violations > 0 {
            row.demote(Status::Fail);
        }
        if let Some(&prev) = excesses.last() {
            if excess > prev + ROUNDING {
                row.demote(Status::Fail);
                row.note("excess over 2^n grew under refinement");
            }
        }
        if total.skipped > 0 {
            row.note(format!(
                "{} samples skipped: enlarged ball clipped",
                total.skipped
            ));
        }
        excesses.push(excess);
        worst_slack = worst_slack.max(total.max_slack);
        if rung + 1 == params.cells.len() {
            summarize_aver(&mut report, "", &total);
        }
        report.rows.push(row);
    }
    report.bound = Some(Num(bound));
    report.slack = Some(Num(worst_slack - 1.0));
    Ok(report.finalized())
}

// ---------------------------------------------------------------- averaged weights

/// Per-ball comparison of `W_t` products on `B(x,s)` with `w` products on
/// `B(x,s+t)`, over dyadic `s` with `B(x, s+t)` unclipped.
///
/// Returns `(max normalized ratio, [W_t] over F_in, [w] over F_pad, balls)`
/// where the normalized ratio divides by `2^{np} (1 + slack)`.
pub fn averaged_weight_comparison(w: &Weight, p: f64, t: f64) -> Result<(f64, f64, f64, usize)> {
    let grid = *w.grid();
    let wt = averaged_weight(w, t)?;
    let n = grid.dim() as f64;
    let bound = 2f64.powf(n * p);
    let radii: Vec<f64> = grid
        .dyadic_radii()
        .into_iter()
        .filter(|&s| s + t < grid.half_width())
        .collect();
    let per_radius: Vec<(f64, f64, f64, usize)> = radii
        .par_iter()
        .map(|&s| -> Result<(f64, f64, f64, usize)> {
            let inner = ap_product_field(&wt, p, s)?;
            let outer = ap_product_field(w, p, s + t)?;
            let reach = BallShape::new(&grid, s + t).reach();
            let slack = aver_slack(&grid, s, t);
            let (mut worst, mut lhs, mut rhs, mut count) = (0.0f64, 0.0f64, 0.0f64, 0);
            for x in (0..grid.len()).filter(|&x| grid.fits(x, reach)) {
                let a = inner.get(x);
                let b = outer.get(x);
                worst = worst.max(a / (bound * slack * b));
                lhs = lhs.max(a);
                rhs = rhs.max(b);
                count += 1;
            }
            Ok((worst, lhs, rhs, count))
        })
        .collect::<Result<_>>()?;
    Ok(per_radius.into_iter().fold((0.0, 0.0, 0.0, 0), |acc, v| {
        (acc.0.max(v.0), acc.1.max(v.1), acc.2.max(v.2), acc.3 + v.3)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragedWeightParams {
    #[serde(default)]
    pub frame: Frame,
    pub weight: WeightSpec,
    pub p: f64,
    pub ts: Vec<f64>,
    /// Cells per axis; defaults to the suite ladder.
    #[serde(default)]
    pub cells: Option<Vec<usize>>,
}

impl AveragedWeightParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", "must be finite and >= 1"));
        }
        if self.ts.is_empty()
            || self
                .ts
                .iter()
                .any(|&t| !(t > 0.0 && t < self.frame.half_width))
        {
            return Err(Error::param("ts", "need heights in (0, L)"));
        }
        for &c in self.cells.iter().flatten() {
            self.frame.grid(c)?;
        }
        Ok(())
    }
}

/// `[W_t]_{A_p} ≤ 2^{np} [w]_{A_p}` per ball with slack, for each `t` and rung.
pub fn check_averaged_weight_class(
    params: &AveragedWeightParams,
    ctx: &Context,
) -> Result<CheckReport> {
    params.validate()?;
    let cells: Vec<usize> = match &params.cells {
        Some(c) => c.clone(),
        None => ctx.ladder.iter().map(|r| r.cells).collect(),
    };
    let mut report = CheckReport::new(
        "averaged_weight_class",
        Params {
            p: Some(Num(params.p)),
            weight: Some(params.weight.to_string()),
            family: Some("dyadic, B(x,s+t) unclipped".into()),
            seed: ctx.seed,
            ..Params::default()
        },
    );
    params.frame.record(&mut report.params);
    let bound = 2f64.powf(params.frame.dim as f64 * params.p);
    let mut worst: f64 = 0.0;
    for &n_cells in &cells {
        report.params.resolutions.push((n_cells, 0));
        let grid = params.frame.grid(n_cells)?;
        let w = params.weight.materialize(grid)?;
        for &t in &params.ts {
            let (normalized, wt_const, w_const, balls) =
                averaged_weight_comparison(&w, params.p, t)?;
            let mut row = Row::new(format!("N={n_cells} t={t}"))
                .value("N", n_cells as f64)
                .value("t", t)
                .value("max_normalized", normalized)
                .value("[W_t]_Ap", wt_const)
                .value("[w]_Ap_pad", w_const)
                .value("balls", balls as f64);
            if balls == 0 {
                row.demote(Status::Error);
                row.note("no ball B(x, s+t) fits in the box");
            } else if normalized > 1.0 + ROUNDING {
                row.demote(Status::Fail);
            }
            worst = worst.max(normalized);
            report.rows.push(row);
        }
    }
    report.measure("max_normalized", worst);
    report.bound = Some(Num(bound));
    Ok(report.finalized())
}

// ---------------------------------------------------------------- Rubio de Francia

/// Properties of the Rubio de Francia iterate for one `(h, w, p)`.
pub fn rdf_row(h: &GridFn, w: &Weight, p: f64, depth: usize) -> Result<Row> {
    let family = BallFamily::dyadic(*h.grid());
    // probes: the constant, h and its maximal iterates
    let mut probes = vec![GridFn::constant(*h.grid(), 1.0)];
    if !h.is_zero() {
        let mut g = h.clone();
        for _ in 0..=depth {
            probes.push(g.clone());
            g = maximal(&g, &family)?;
        }
    }
    let norm_bound = maximal_opnorm_estimate(w, p, &probes)?;
    let it = rdf_iterate(h, w, p, depth, norm_bound)?;
    let rh = &it.sum;
    let m_rh = maximal(rh, &family)?;
    let scale = 2.0 * norm_bound;

    let a_defect = rh
        .values()
        .iter()
        .zip(h.values())
        .map(|(r, h)| h - r)
        .fold(0.0, f64::max);
    let b_defect = m_rh
        .values()
        .iter()
        .zip(rh.values())
        .zip(it.tail.values())
        .map(|((m, r), tail)| m - scale * r - tail)
        .fold(0.0, f64::max);
    let norm_h = lp_norm(h, p, w)?;
    let norm_rh = lp_norm(rh, p, w)?;
    let c_bound = 2.0 * norm_h * (1.0 + it.tail_factor);

    let mut row = Row::new(format!("p={p} w={}", w.descriptor()))
        .value("p", p)
        .value("depth", depth as f64)
        .value("norm_bound", norm_bound)
        .value("a_max_defect", a_defect)
        .value("b_max_defect", b_defect)
        .value("b_max_tail", it.tail.max_value())
        .value("norm_h", norm_h)
        .value("norm_Rh", norm_rh)
        .value("c_bound", c_bound);
    if a_defect > 1e-10 {
        row.demote(Status::Fail);
        row.note("(a) R h >= h violated");
    }
    if b_defect > 1e-10 {
        row.demote(Status::Fail);
        row.note("(b) M(R h) <= 2B R h + tail violated");
    }
    if norm_rh > c_bound + 1e-10 {
        row.demote(Status::Fail);
        row.note("(c) norm bound violated");
    }
    Ok(row)
}

/// The three iterate properties for one `(h, w, p, depth)`.
pub fn check_rdf_properties(
    h: &GridFn,
    w: &Weight,
    p: f64,
    depth: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        "rdf_properties",
        Params {
            n: Some(h.grid().dim()),
            resolutions: vec![(h.grid().cells_per_axis(), 0)],
            p: Some(Num(p)),
            weight: Some(w.descriptor().to_string()),
            family: Some("dyadic".into()),
            seed,
            ..Params::default()
        },
    );
    report.rows.push(rdf_row(h, w, p, depth)?);
    report.slack = Some(Num(1e-10));
    Ok(report.finalized())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdfParams {
    #[serde(default)]
    pub frame: Frame,
    #[serde(default = "rdf_cells")]
    pub cells: usize,
    #[serde(default = "rdf_instances")]
    pub instances: usize,
    #[serde(default = "rdf_depth")]
    pub depth: usize,
    #[serde(default = "rdf_weights")]
    pub weights: Vec<WeightSpec>,
    #[serde(default = "rdf_ps")]
    pub ps: Vec<f64>,
}

fn rdf_cells() -> usize {
    512
}
fn rdf_instances() -> usize {
    20
}
fn rdf_depth() -> usize {
    14
}
fn rdf_weights() -> Vec<WeightSpec> {
    vec![
        WeightSpec::Const(1.0),
        WeightSpec::Power(0.5),
        WeightSpec::Power(-0.25),
        WeightSpec::Step(1.0, 4.0),
    ]
}
fn rdf_ps() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}

impl RdfParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.grid(self.cells)?;
        if self.weights.is_empty() || self.ps.is_empty() {
            return Err(Error::param("weights", "weights and ps must not be empty"));
        }
        if self.ps.iter().any(|&p| !(p > 1.0 && p.is_finite())) {
            return Err(Error::param("ps", "need 1 < p < inf"));
        }
        Ok(())
    }
}

/// Seeded `(h, w, p)` triples: `h` from the base corpus, `w` and `p` cycled.
pub fn run_rdf(params: &RdfParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let grid = params.frame.grid(params.cells)?;
    let probes = base_probes(ctx.seed, &params.frame.corpus(), params.instances);
    let rows: Vec<Row> = probes
        .par_iter()
        .enumerate()
        .map(|(i, probe)| {
            let h = probe.sample(grid)?;
            let w = params.weights[i % params.weights.len()].materialize(grid)?;
            let p = params.ps[(i / params.weights.len()) % params.ps.len()];
            let mut row = rdf_row(&h, &w, p, params.depth)?;
            row.label = format!("instance {i}: {}", row.label);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut report = CheckReport::new(
        "rdf_properties",
        Params {
            resolutions: vec![(params.cells, 0)],
            family: Some("dyadic".into()),
            seed: ctx.seed,
            ..Params::default()
        },
    );
    params.frame.record(&mut report.params);
    report.measure("instances", rows.len() as f64);
    report.rows = rows;
    report.slack = Some(Num(1e-10));
    Ok(report.finalized())
}

// ---------------------------------------------------------------- weight classes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightClassParams {
    #[serde(default)]
    pub frame: Frame,
    pub weight: WeightSpec,
    pub class: WeightClass,
    /// Coarsest grid of the three-rung sweep `N₀, 2N₀, 4N₀`.
    #[serde(default)]
    pub base_cells: Option<usize>,
}

impl WeightClassParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if self.base_cells == Some(0) {
            return Err(Error::param("base_cells", "must be positive"));
        }
        Ok(())
    }
}

/// Weight constant along a refinement sweep; `divergent` when flagged.
pub fn check_weight_class(params: &WeightClassParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let base = params
        .base_cells
        .unwrap_or(ctx.ladder.first().map_or(128, |r| r.cells));
    let c = weight_constant(&params.weight, params.class, &params.frame, base)?;
    let mut report = CheckReport::new(
        "weight_class",
        Params {
            resolutions: vec![(base, 0), (2 * base, 0), (4 * base, 0)],
            weight: Some(params.weight.to_string()),
            family: Some(c.family.clone()),
            seed: ctx.seed,
            ..Params::default()
        },
    );
    params.frame.record(&mut report.params);
    let mut row = Row::new(params.weight.to_string());
    for (i, v) in c.refinement.iter().enumerate() {
        row.set(&format!("value[{i}]"), *v);
    }
    record_weight_constant(&mut row, &c);
    if c.value.is_finite() && c.value < 1.0 - ROUNDING {
        row.demote(Status::Fail);
        row.note("class constant below 1");
    }
    report.measure("value", c.value);
    report.rows.push(row);
    Ok(report.finalized())
}
