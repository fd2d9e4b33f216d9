use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    assess_ladder, is_monotone_within, probe_max, probes_for, ratio, record_weight_constant,
    weight_constant, CheckReport, Context, Frame, Num, Params, Resolution, Row, Status, Trace,
    ROUNDING,
};
use crate::corpus::{base_probes, HalfSpaceProbe};
use crate::error::{Error, Result};
use crate::grid::{
    ball_averages, lorentz_quasinorm, lp_norm, GridBox, GridFn, HalfSpaceFn, LorentzIndex, TLevels,
};
use crate::operators::{
    extend_slicewise, offdiag_profile, riesz_potential, BaseOperator, DecayFit, OperatorFamily,
    StripGeometry,
};
use crate::tent::cone_functional;
use crate::weights::{Weight, WeightClass, WeightSpec};

fn default_probes() -> usize {
    20
}

fn maximal_family() -> OperatorFamily {
    OperatorFamily::Constant(BaseOperator::Maximal)
}

fn lorentz_index(s: f64) -> LorentzIndex {
    if s.is_infinite() {
        LorentzIndex::Infinity
    } else {
        LorentzIndex::Finite(s)
    }
}

/// `‖𝒜_r F‖` in `L^{p,s}(w)`, with `s = p` the plain `Lᵖ(w)` norm.
fn tent_quasinorm(f: &HalfSpaceFn, r: f64, p: f64, s: f64, w: &Weight) -> Result<f64> {
    let a = cone_functional(f, r, 1.0)?;
    if s == p {
        lp_norm(&a, p, w)
    } else {
        lorentz_quasinorm(&a, p, lorentz_index(s), w)
    }
}

/// Maxima over probes on every rung of the ladder.
fn ladder_max(
    frame: &Frame,
    ladder: &[Resolution],
    probes: &[HalfSpaceProbe],
    f: impl Fn(GridBox, TLevels, &HalfSpaceFn) -> Result<Option<f64>> + Sync,
) -> Result<Vec<f64>> {
    ladder
        .iter()
        .map(|&res| {
            let (grid, tl) = frame.at(res)?;
            Ok(probe_max(probes, grid, tl, |g| f(grid, tl, g))?.0)
        })
        .collect()
}

fn base_params(frame: &Frame, ladder: &[Resolution], seed: u64) -> Params {
    let mut p = Params {
        resolutions: ladder.iter().map(|&r| r.into()).collect(),
        seed,
        ..Params::default()
    };
    frame.record(&mut p);
    p
}

/// Resolution of a ladder of measurements: the change over its last rung.
fn ladder_tolerance(values: &[f64]) -> f64 {
    match values {
        [.., a, b] => (b - a).abs(),
        _ => 0.0,
    }
}

/// `(weight constant, measured constant, tolerance)`.
type TracePoint = (f64, f64, f64);

/// Checks a trace `(weight constant, measured constant, tolerance)` for
/// monotonicity and records it.
fn push_psi_trace(report: &mut CheckReport, name: String, x_label: &str, points: Vec<TracePoint>) {
    if points.len() >= 2 && !is_monotone_within(&points) {
        let mut row = Row::new(format!("{name}: monotone trace"));
        row.demote(Status::Fail);
        row.note("measured constant decreases while the weight constant increases");
        report.rows.push(row);
    }
    report.traces.push(Trace {
        name,
        x_label: x_label.to_string(),
        y_label: "measured constant".into(),
        log_y: false,
        points: points
            .into_iter()
            .map(|(x, y, _)| (Num(x), Num(y)))
            .collect(),
    });
}

// ---------------------------------------------------------------- maximal on tent spaces

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalStrongParams {
    #[serde(default)]
    pub frame: Frame,
    pub p: f64,
    pub r: f64,
    pub weight: WeightSpec,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub ladder: Option<Vec<Resolution>>,
}

impl MaximalStrongParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        super::validate_common(&self.ladder, self.probes)?;
        let (p, r) = (self.p, self.r);
        if !(p > 1.0 && r > 1.0) {
            return Err(Error::param("p", "p and r must exceed 1"));
        }
        Ok(())
    }
}

/// `max_G ‖𝓜G‖_{𝒯_r^p(w)} / ‖G‖_{𝒯_r^p(w)}`, finite and refinement stable.
pub fn check_maximal_tent_strong(
    params: &MaximalStrongParams,
    ctx: &Context,
) -> Result<CheckReport> {
    params.validate()?;
    let (p, r) = (params.p, params.r);
    let ladder = ctx.ladder_or(&params.ladder)?;
    let probes = probes_for(&params.frame, ctx.seed, params.probes);
    let values = ladder_max(&params.frame, ladder, &probes, |grid, _, g| {
        let w = params.weight.materialize(grid)?;
        let mg = extend_slicewise(&maximal_family(), g)?;
        Ok(ratio(
            tent_quasinorm(&mg, r, p, p, &w)?,
            tent_quasinorm(g, r, p, p, &w)?,
        ))
    })?;
    let mut report = CheckReport::new(
        "maximal_tent_strong",
        base_params(&params.frame, ladder, ctx.seed),
    );
    report.params.p = Some(Num(p));
    report.params.r = Some(Num(r));
    report.params.weight = Some(params.weight.to_string());
    report.params.operator = Some("maximal".into());
    let mut row = Row::new("constant");
    assess_ladder(&mut row, "C", &values);
    let wc = weight_constant(
        &params.weight,
        WeightClass::Ap { p },
        &params.frame,
        ladder[0].cells,
    )?;
    record_weight_constant(&mut row, &wc);
    report.measure("constant", *values.last().unwrap());
    report.measure("weight_constant", wc.value);
    report.rows.push(row);
    Ok(report.finalized())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalWeakParams {
    #[serde(default)]
    pub frame: Frame,
    pub r: f64,
    pub weight: WeightSpec,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Exponent just above 1 for the strong-type comparison.
    #[serde(default = "default_p_strong")]
    pub p_strong: f64,
    #[serde(default)]
    pub ladder: Option<Vec<Resolution>>,
}

fn default_p_strong() -> f64 {
    1.001
}

/// `(Σ_k Δ |F(·,t_k)|^r)^{1/r}`.
fn vertical_lr(f: &HalfSpaceFn, r: f64) -> GridFn {
    let tl = f.tlevels();
    let mut acc = vec![0.0; f.grid().len()];
    for k in 0..tl.count() {
        for (a, v) in acc.iter_mut().zip(f.slice(k)) {
            *a += tl.log_step() * v.abs().powf(r);
        }
    }
    GridFn::new(
        *f.grid(),
        acc.into_iter().map(|a| a.powf(1.0 / r)).collect(),
    )
    .expect("finite sums")
}

/// `G̃(x, t_k) = ⨍_{B(x,t_k)} |G(·, t_k)|`, or with `|G|^r` when `power = r`.
fn slice_averages(g: &HalfSpaceFn, power: f64) -> Result<HalfSpaceFn> {
    let tl = *g.tlevels();
    let slices = (0..tl.count())
        .map(|k| ball_averages(&g.slice_fn(k).map(|v| v.abs().powf(power)), tl.level(k)))
        .collect::<Result<Vec<_>>>()?;
    HalfSpaceFn::from_slices(tl, slices)
}

/// Per-probe quantities of the weak-type check.
#[derive(Debug, Clone, Copy, Default)]
struct WeakSample {
    weak: f64,
    strong_one: f64,
    strong_p: f64,
    aperture_weak: f64,
    aperture_strong: f64,
    fs_term: f64,
    jensen_gap: f64,
}

fn weak_sample(g: &HalfSpaceFn, r: f64, p_strong: f64, w: &Weight) -> Result<Option<WeakSample>> {
    let a_g = cone_functional(g, r, 1.0)?;
    let den_one = lp_norm(&a_g, 1.0, w)?;
    let den_p = lp_norm(&a_g, p_strong, w)?;
    if den_one == 0.0 || den_p == 0.0 {
        return Ok(None);
    }
    let a_mg = cone_functional(&extend_slicewise(&maximal_family(), g)?, r, 1.0)?;
    let a2 = cone_functional(g, r, 2.0)?;
    let tilde = slice_averages(g, 1.0)?;
    let fs = vertical_lr(&extend_slicewise(&maximal_family(), &tilde)?, r);
    let jensen_lhs = lp_norm(&vertical_lr(&tilde, r), 1.0, w)?;
    let jensen_rhs = lp_norm(
        &vertical_lr(&slice_averages(g, r)?.map(|v| v.powf(1.0 / r)), r),
        1.0,
        w,
    )?;
    Ok(Some(WeakSample {
        weak: lorentz_quasinorm(&a_mg, 1.0, LorentzIndex::Infinity, w)? / den_one,
        strong_one: lp_norm(&a_mg, 1.0, w)? / den_one,
        strong_p: lp_norm(&a_mg, p_strong, w)? / den_p,
        aperture_weak: lorentz_quasinorm(&a2, 1.0, LorentzIndex::Infinity, w)? / den_one,
        aperture_strong: lp_norm(&a2, 1.0, w)? / den_one,
        fs_term: lorentz_quasinorm(&fs, 1.0, LorentzIndex::Infinity, w)? / den_one,
        jensen_gap: jensen_lhs - jensen_rhs * (1.0 + ROUNDING),
    }))
}

impl MaximalWeakParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        super::validate_common(&self.ladder, self.probes)?;
        let r = self.r;
        if !(r > 1.0) {
            return Err(Error::param("r", "must exceed 1"));
        }
        if !(self.p_strong > 1.0) {
            return Err(Error::param("p_strong", "must exceed 1"));
        }
        Ok(())
    }
}

/// Weak-type `p = 1` constant of the maximal operator on tent spaces, with the
/// aperture-2 and Fefferman–Stein terms of its two-term bound.
pub fn check_maximal_tent_weak(params: &MaximalWeakParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let r = params.r;
    let ladder = ctx.ladder_or(&params.ladder)?;
    let probes = probes_for(&params.frame, ctx.seed, params.probes);
    let mut report = CheckReport::new(
        "maximal_tent_weak",
        base_params(&params.frame, ladder, ctx.seed),
    );
    report.params.p = Some(Num(1.0));
    report.params.r = Some(Num(r));
    report.params.s = Some("inf".into());
    report.params.weight = Some(params.weight.to_string());
    report.params.operator = Some("maximal".into());

    let mut weak = Vec::new();
    let mut strong_p = Vec::new();
    let mut rows = Vec::new();
    for &res in ladder {
        let (grid, tl) = params.frame.at(res)?;
        let w = params.weight.materialize(grid)?;
        let samples: Vec<Option<WeakSample>> = probes
            .par_iter()
            .map(|p| weak_sample(&p.sample(grid, tl)?, r, params.p_strong, &w))
            .collect::<Result<_>>()?;
        let samples: Vec<WeakSample> = samples.into_iter().flatten().collect();
        if samples.is_empty() {
            return Err(Error::Degenerate("every probe has a zero tent norm".into()));
        }
        let max_of =
            |f: fn(&WeakSample) -> f64| samples.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let c_weak = max_of(|s| s.weak);
        let c_strong_one = max_of(|s| s.strong_one);
        let c_strong_p = max_of(|s| s.strong_p);
        let mut row = Row::new(format!("N={} K={}", res.cells, res.levels))
            .value("C_weak", c_weak)
            .value("C_strong_p1", c_strong_one)
            .value("C_strong_p_strong", c_strong_p)
            .value("aperture2_weak", max_of(|s| s.aperture_weak))
            .value("aperture2_strong", max_of(|s| s.aperture_strong))
            .value("fefferman_stein_term", max_of(|s| s.fs_term))
            .value("jensen_max_gap", max_of(|s| s.jensen_gap));
        if samples
            .iter()
            .any(|s| s.weak > s.strong_one * (1.0 + ROUNDING))
        {
            row.demote(Status::Fail);
            row.note("weak-type ratio exceeds strong-type ratio on the same probe");
        }
        if c_weak > c_strong_p * (1.0 + ROUNDING) {
            row.demote(Status::Fail);
            row.note("weak constant exceeds the strong constant at p_strong");
        }
        if samples.iter().any(|s| s.jensen_gap > 0.0) {
            row.demote(Status::Fail);
            row.note("Jensen step of the Fefferman-Stein bound violated");
        }
        weak.push(c_weak);
        strong_p.push(c_strong_p);
        rows.push(row);
    }
    let mut summary = Row::new("constant");
    assess_ladder(&mut summary, "C_weak", &weak);
    assess_ladder(&mut summary, "C_strong_p_strong", &strong_p);
    let wc = weight_constant(
        &params.weight,
        WeightClass::A1,
        &params.frame,
        ladder[0].cells,
    )?;
    record_weight_constant(&mut summary, &wc);
    report.measure("constant", *weak.last().unwrap());
    report.measure("strong_constant", *strong_p.last().unwrap());
    report.measure("weight_constant", wc.value);
    report.rows = rows;
    report.rows.push(summary);
    Ok(report.finalized())
}

// ---------------------------------------------------------------- extrapolation

/// Operator applied slice by slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceOperator {
    Identity,
    Maximal,
    Hilbert,
}

impl SliceOperator {
    fn family(self) -> OperatorFamily {
        match self {
            SliceOperator::Identity => OperatorFamily::Identity,
            SliceOperator::Maximal => maximal_family(),
            SliceOperator::Hilbert => OperatorFamily::Constant(BaseOperator::Hilbert),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SliceOperator::Identity => "identity",
            SliceOperator::Maximal => "maximal",
            SliceOperator::Hilbert => "hilbert",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub p: f64,
    pub r: f64,
    pub weight: WeightSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolationParams {
    #[serde(default)]
    pub frame: Frame,
    pub operator: SliceOperator,
    pub p0: f64,
    pub w0s: Vec<WeightSpec>,
    pub targets: Vec<Target>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub ladder: Option<Vec<Resolution>>,
}

fn class_for(p: f64) -> WeightClass {
    if p == 1.0 {
        WeightClass::A1
    } else {
        WeightClass::Ap { p }
    }
}

impl ExtrapolationParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        super::validate_common(&self.ladder, self.probes)?;
        if !(self.p0 >= 1.0 && self.p0.is_finite()) {
            return Err(Error::param("p0", "must be finite and >= 1"));
        }
        if let Some(t) = self.targets.iter().find(|t| !(t.p > 1.0 && t.r > 1.0)) {
            return Err(Error::param(
                "targets",
                format!("p and r must exceed 1, got p={} r={}", t.p, t.r),
            ));
        }
        if self.operator == SliceOperator::Hilbert && self.frame.dim != 1 {
            return Err(Error::param(
                "operator",
                "hilbert needs a one-dimensional frame",
            ));
        }
        Ok(())
    }
}

/// Slice hypothesis evidence at `p₀` and tent-norm conclusions per target.
pub fn check_extrapolation(params: &ExtrapolationParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let ladder = ctx.ladder_or(&params.ladder)?;
    let fam = params.operator.family();
    let probes = probes_for(&params.frame, ctx.seed, params.probes);
    let mut report = CheckReport::new(
        "extrapolation",
        base_params(&params.frame, ladder, ctx.seed),
    );
    report.params.p0 = Some(Num(params.p0));
    report.params.operator = Some(params.operator.name().into());
    report.note(
        "restricted-range extrapolation with the full range (1, inf) reduces to this check; \
         operators with a genuinely restricted range are not exercised",
    );

    // stage 1: slice ratios at p0 on the finest rung
    let finest = *ladder.last().unwrap();
    let (grid, tl) = params.frame.at(finest)?;
    let mut hyp_points = Vec::new();
    for spec in &params.w0s {
        let w0 = spec.materialize(grid)?;
        let (c, _) = probe_max(&probes, grid, tl, |g| {
            let tg = extend_slicewise(&fam, g)?;
            let mut best: Option<f64> = None;
            for k in 0..tl.count() {
                let den = lp_norm(&g.slice_fn(k), params.p0, &w0)?;
                if let Some(v) = ratio(lp_norm(&tg.slice_fn(k), params.p0, &w0)?, den) {
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
            Ok(best)
        })?;
        let wc = weight_constant(spec, class_for(params.p0), &params.frame, ladder[0].cells)?;
        let mut row = Row::new(format!("hypothesis w0={spec}")).value("slice_constant", c);
        record_weight_constant(&mut row, &wc);
        if !c.is_finite() {
            row.demote(Status::Fail);
        }
        hyp_points.push((wc.value, c));
        report.rows.push(row);
    }
    report.traces.push(Trace {
        name: "hypothesis: slice constant vs [w0]".into(),
        x_label: format!("[w0]_A_{}", params.p0),
        y_label: "slice constant".into(),
        log_y: false,
        points: hyp_points
            .into_iter()
            .map(|(x, y)| (Num(x), Num(y)))
            .collect(),
    });

    // stage 2: tent-norm conclusions
    let mut groups: BTreeMap<(u64, u64), Vec<TracePoint>> = BTreeMap::new();
    for t in &params.targets {
        let values = ladder_max(&params.frame, ladder, &probes, |grid, _, g| {
            let w = t.weight.materialize(grid)?;
            let tg = extend_slicewise(&fam, g)?;
            Ok(ratio(
                tent_quasinorm(&tg, t.r, t.p, t.p, &w)?,
                tent_quasinorm(g, t.r, t.p, t.p, &w)?,
            ))
        })?;
        let mut row = Row::new(format!("target p={} r={} w={}", t.p, t.r, t.weight))
            .value("p", t.p)
            .value("r", t.r);
        assess_ladder(&mut row, "C", &values);
        let wc = weight_constant(
            &t.weight,
            WeightClass::Ap { p: t.p },
            &params.frame,
            ladder[0].cells,
        )?;
        record_weight_constant(&mut row, &wc);
        groups
            .entry((t.p.to_bits(), t.r.to_bits()))
            .or_default()
            .push((wc.value, *values.last().unwrap(), ladder_tolerance(&values)));
        report.rows.push(row);
    }
    for ((p, r), points) in groups {
        let (p, r) = (f64::from_bits(p), f64::from_bits(r));
        push_psi_trace(
            &mut report,
            format!("psi trace p={p} r={r}"),
            &format!("[w]_A_{p}"),
            points,
        );
    }
    Ok(report.finalized())
}

// ---------------------------------------------------------------- Coifman-Fefferman control

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoifmanFeffermanParams {
    #[serde(default)]
    pub frame: Frame,
    #[serde(default = "cf_ps")]
    pub ps: Vec<f64>,
    pub r: f64,
    /// Second Lorentz indices; `inf` selects the weak space.
    #[serde(default)]
    pub ss: Vec<f64>,
    pub weight: WeightSpec,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub ladder: Option<Vec<Resolution>>,
}

fn cf_ps() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

impl CoifmanFeffermanParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        super::validate_common(&self.ladder, self.probes)?;
        if self.frame.dim != 1 {
            return Err(Error::param(
                "frame.dim",
                "the Hilbert transform needs a one-dimensional frame",
            ));
        }
        if !(self.r > 0.0) || self.ps.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::param("ps", "p and r must be positive"));
        }
        if self.ss.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::param("ss", "s must be positive or inf"));
        }
        Ok(())
    }
}

/// `‖𝒯F‖ / ‖𝓜F‖` in `𝒯_r^p(w)` and `𝒯_r^{p,s}(w)` for the Hilbert transform.
pub fn check_coifman_fefferman_tent(
    params: &CoifmanFeffermanParams,
    ctx: &Context,
) -> Result<CheckReport> {
    params.validate()?;
    let ladder = ctx.ladder_or(&params.ladder)?;
    let probes = probes_for(&params.frame, ctx.seed, params.probes);
    let hilbert = OperatorFamily::Constant(BaseOperator::Hilbert);
    let mut report = CheckReport::new(
        "coifman_fefferman_tent",
        base_params(&params.frame, ladder, ctx.seed),
    );
    report.params.r = Some(Num(params.r));
    report.params.weight = Some(params.weight.to_string());
    report.params.operator = Some("hilbert".into());
    let wc = weight_constant(
        &params.weight,
        WeightClass::AInfinity,
        &params.frame,
        ladder[0].cells,
    )?;
    report.measure("weight_constant", wc.value);

    let mut combos: Vec<(f64, f64)> = Vec::new();
    for &p in &params.ps {
        combos.push((p, p));
        combos.extend(params.ss.iter().filter(|&&s| s != p).map(|&s| (p, s)));
    }
    for (p, s) in combos {
        let values = ladder_max(&params.frame, ladder, &probes, |grid, _, g| {
            let w = params.weight.materialize(grid)?;
            let tf = extend_slicewise(&hilbert, g)?;
            let mf = extend_slicewise(&maximal_family(), g)?;
            Ok(ratio(
                tent_quasinorm(&tf, params.r, p, s, &w)?,
                tent_quasinorm(&mf, params.r, p, s, &w)?,
            ))
        })?;
        let label = if s == p {
            format!("p={p}")
        } else {
            format!("p={p} s={s}")
        };
        let mut row = Row::new(label).value("p", p).value("s", s);
        assess_ladder(&mut row, "C", &values);
        record_weight_constant(&mut row, &wc);
        report.rows.push(row);
    }
    Ok(report.finalized())
}

// ---------------------------------------------------------------- fractional operators

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalParams {
    #[serde(default)]
    pub frame: Frame,
    pub alpha: f64,
    /// `(p, q)` with `1/p - 1/q = α/n`.
    pub pairs: Vec<(f64, f64)>,
    pub r: f64,
    pub weights: Vec<WeightSpec>,
    #[serde(default = "cf_ps")]
    pub control_ps: Vec<f64>,
    #[serde(default = "control_weights")]
    pub control_weights: Vec<WeightSpec>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub ladder: Option<Vec<Resolution>>,
}

fn control_weights() -> Vec<WeightSpec> {
    vec![WeightSpec::Const(1.0), WeightSpec::Power(0.5)]
}

impl FractionalParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        super::validate_common(&self.ladder, self.probes)?;
        let n = self.frame.dim as f64;
        let alpha = self.alpha;
        if !(alpha > 0.0 && alpha < n) {
            return Err(Error::param("alpha", format!("must lie in (0, {n})")));
        }
        for &(p, q) in &self.pairs {
            if !(p > 1.0 && p <= q && q.is_finite()) {
                return Err(Error::param(
                    "pairs",
                    format!("need 1 < p <= q < inf, got ({p}, {q})"),
                ));
            }
            if (1.0 / p - 1.0 / q - alpha / n).abs() > 1e-12 {
                return Err(Error::param(
                    "pairs",
                    format!("1/p - 1/q must equal alpha/n for ({p}, {q})"),
                ));
            }
        }
        if !(self.r > 0.0) {
            return Err(Error::param("r", "must be positive"));
        }
        Ok(())
    }
}

/// Base-space and tent-space `L^p(w^p) → L^q(w^q)` ratios of the fractional
/// integral, and its control by the fractional maximal operator.
pub fn check_fractional(params: &FractionalParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let (n, alpha) = (params.frame.dim as f64, params.alpha);
    let ladder = ctx.ladder_or(&params.ladder)?;
    let probes = probes_for(&params.frame, ctx.seed, params.probes);
    let base = base_probes(ctx.seed, &params.frame.corpus(), params.probes);
    let riesz = OperatorFamily::Constant(BaseOperator::Riesz { alpha });
    let frac_max = OperatorFamily::Constant(BaseOperator::FracMaximal { alpha });
    let mut report = CheckReport::new("fractional", base_params(&params.frame, ladder, ctx.seed));
    report.params.alpha = Some(Num(alpha));
    report.params.r = Some(Num(params.r));
    report.params.operator = Some(format!("riesz({alpha})"));
    report.measure("r_threshold", n / (n - alpha));

    for &(p, q) in &params.pairs {
        let mut base_trace = Vec::new();
        let mut tent_trace = Vec::new();
        for spec in &params.weights {
            // (1) base space
            let base_values: Vec<f64> = ladder
                .iter()
                .map(|&res| -> Result<f64> {
                    let grid = params.frame.grid(res.cells)?;
                    let w = spec.materialize(grid)?;
                    let (wp, wq) = (w.powf(p)?, w.powf(q)?);
                    let vals: Vec<Option<f64>> = base
                        .par_iter()
                        .map(|b| {
                            let f = b.sample(grid)?;
                            Ok(ratio(
                                lp_norm(&riesz_potential(&f, alpha)?, q, &wq)?,
                                lp_norm(&f, p, &wp)?,
                            ))
                        })
                        .collect::<Result<_>>()?;
                    Ok(vals.into_iter().flatten().fold(f64::NEG_INFINITY, f64::max))
                })
                .collect::<Result<_>>()?;
            // (2) tent space
            let tent_values = ladder_max(&params.frame, ladder, &probes, |grid, _, g| {
                let w = spec.materialize(grid)?;
                let ig = extend_slicewise(&riesz, g)?;
                Ok(ratio(
                    tent_quasinorm(&ig, params.r, q, q, &w.powf(q)?)?,
                    tent_quasinorm(g, params.r, p, p, &w.powf(p)?)?,
                ))
            })?;
            let mut row = Row::new(format!("p={p} q={q} w={spec}"))
                .value("p", p)
                .value("q", q);
            assess_ladder(&mut row, "C_base", &base_values);
            assess_ladder(&mut row, "C_tent", &tent_values);
            let wc = weight_constant(
                spec,
                WeightClass::Apq { p, q },
                &params.frame,
                ladder[0].cells,
            )?;
            record_weight_constant(&mut row, &wc);
            if row.status == Status::Divergent {
                row.note("weight outside the class: drift and trace are reported, not asserted");
            }
            base_trace.push((wc.value, *base_values.last().unwrap()));
            tent_trace.push((
                wc.value,
                *tent_values.last().unwrap(),
                ladder_tolerance(&tent_values),
            ));
            report.rows.push(row);
        }
        report.traces.push(Trace {
            name: format!("base constant p={p} q={q}"),
            x_label: format!("[w]_A_{{{p},{q}}}"),
            y_label: "measured constant".into(),
            log_y: false,
            points: base_trace
                .into_iter()
                .map(|(x, y)| (Num(x), Num(y)))
                .collect(),
        });
        push_psi_trace(
            &mut report,
            format!("psi trace p={p} q={q}"),
            &format!("[w]_A_{{{p},{q}}}"),
            tent_trace,
        );
    }

    // (3) fractional integral controlled by the fractional maximal operator
    for spec in &params.control_weights {
        let wc = weight_constant(spec, WeightClass::AInfinity, &params.frame, ladder[0].cells)?;
        for &p in &params.control_ps {
            let values = ladder_max(&params.frame, ladder, &probes, |grid, _, g| {
                let w = spec.materialize(grid)?;
                let ig = extend_slicewise(&riesz, g)?;
                let mg = extend_slicewise(&frac_max, g)?;
                Ok(ratio(
                    tent_quasinorm(&ig, params.r, p, p, &w)?,
                    tent_quasinorm(&mg, params.r, p, p, &w)?,
                ))
            })?;
            let mut row = Row::new(format!("control p={p} w={spec}")).value("p", p);
            assess_ladder(&mut row, "C", &values);
            record_weight_constant(&mut row, &wc);
            report.rows.push(row);
        }
    }
    Ok(report.finalized())
}

// ---------------------------------------------------------------- off-diagonal decay

/// Scale-dependent family probed for off-diagonal decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayFamily {
    Averaging,
    Heat,
    Identity,
}

impl DecayFamily {
    fn family(self) -> OperatorFamily {
        match self {
            DecayFamily::Averaging => OperatorFamily::Averaging,
            DecayFamily::Heat => OperatorFamily::Heat,
            DecayFamily::Identity => OperatorFamily::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffDiagTarget {
    pub p: f64,
    pub weight: WeightSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffDiagParams {
    #[serde(default)]
    pub frame: Frame,
    pub family: DecayFamily,
    pub r: f64,
    pub m_claim: f64,
    pub targets: Vec<OffDiagTarget>,
    #[serde(default = "default_d_over_t")]
    pub d_over_t: Vec<f64>,
    #[serde(default = "default_ts")]
    pub ts: Vec<f64>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub ladder: Option<Vec<Resolution>>,
}

fn default_d_over_t() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}
fn default_ts() -> Vec<f64> {
    vec![0.125, 0.25]
}

impl OffDiagParams {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        super::validate_common(&self.ladder, self.probes)?;
        let n = self.frame.dim as f64;
        let (r, m) = (self.r, self.m_claim);
        if !(r > 1.0 && r.is_finite()) {
            return Err(Error::param("r", "must be finite and exceed 1"));
        }
        if !(m > n / r) {
            return Err(Error::param(
                "m_claim",
                format!("must exceed n/r = {}", n / r),
            ));
        }
        if let Some(t) = self.targets.iter().find(|t| !(n / m < t.p)) {
            return Err(Error::param(
                "targets",
                format!("p = {} must exceed n/M = {}", t.p, n / m),
            ));
        }
        Ok(())
    }
}

/// Decay order on strips (stage 1), then tent-norm bounds of the slice-wise
/// extension at each target (stage 2).
pub fn check_offdiag_proposition(params: &OffDiagParams, ctx: &Context) -> Result<CheckReport> {
    params.validate()?;
    let (n, r, m) = (params.frame.dim as f64, params.r, params.m_claim);
    let ladder = ctx.ladder_or(&params.ladder)?;
    let fam = params.family.family();
    let mut report = CheckReport::new(
        "offdiag_proposition",
        base_params(&params.frame, ladder, ctx.seed),
    );
    report.params.r = Some(Num(r));
    report.params.m = Some(Num(m));
    report.params.operator = Some(fam.name());

    // stage 1
    let finest = *ladder.last().unwrap();
    let grid = params.frame.grid(finest.cells)?;
    let base: Vec<GridFn> = base_probes(ctx.seed, &params.frame.corpus(), params.probes)
        .iter()
        .map(|b| b.sample(grid))
        .collect::<Result<_>>()?;
    let mut geometry = Vec::new();
    for &t in &params.ts {
        geometry.push(StripGeometry { gap: 0.0, t });
        geometry.extend(
            params
                .d_over_t
                .iter()
                .map(|&k| StripGeometry { gap: k * t, t }),
        );
    }
    let profile = offdiag_profile(&fam, r, &base, &geometry)?;
    let zeros_beyond_t = profile
        .points
        .iter()
        .filter(|q| q.d >= q.t)
        .all(|q| q.ratio == 0.0)
        && profile.points.iter().any(|q| q.d >= q.t);
    let mut stage1 = Row::new("stage 1: off-diagonal decay");
    match profile.fit {
        DecayFit::Fitted { order, residual } => {
            stage1.set("M_fit", order);
            stage1.set("fit_residual", residual);
            report.measure("M_fit", order);
        }
        DecayFit::Unbounded => {
            stage1.set("M_fit", f64::INFINITY);
            report.measure("M_fit", f64::INFINITY);
        }
        DecayFit::Insufficient => stage1.note("too few positive ratios for a fit"),
    }
    let fitted_ok = matches!(profile.fit, DecayFit::Fitted { order, .. } if order >= m);
    let support_ok = params.family == DecayFamily::Averaging && zeros_beyond_t;
    if support_ok {
        stage1.note(
            "exact zeros for d >= t: averaging over balls of radius t cannot reach across the gap",
        );
    }
    report.traces.push(Trace {
        name: "off-diagonal ratio vs d/t".into(),
        x_label: "d/t".into(),
        y_label: "ratio".into(),
        log_y: true,
        points: profile
            .points
            .iter()
            .map(|q| (Num(q.d / q.t), Num(q.ratio)))
            .collect(),
    });
    let stage1_ok = fitted_ok || support_ok;
    if !stage1_ok {
        stage1.demote(Status::Fail);
        stage1.note("insufficient decay");
        if profile.fit == DecayFit::Unbounded {
            stage1.note("no positive off-diagonal ratios to fit the decay order");
        }
        report.rows.push(stage1);
        report.note("stage 2 skipped");
        return Ok(report.finalized());
    }
    report.rows.push(stage1);

    // stage 2
    let probes = probes_for(&params.frame, ctx.seed, params.probes);
    for t in &params.targets {
        let values = ladder_max(&params.frame, ladder, &probes, |grid, _, g| {
            let w = t.weight.materialize(grid)?;
            let tg = extend_slicewise(&fam, g)?;
            Ok(ratio(
                tent_quasinorm(&tg, r, t.p, t.p, &w)?,
                tent_quasinorm(g, r, t.p, t.p, &w)?,
            ))
        })?;
        let mut row = Row::new(format!("stage 2 p={} w={}", t.p, t.weight)).value("p", t.p);
        assess_ladder(&mut row, "C", &values);
        let class_p = t.p * m / n;
        if class_p >= 1.0 {
            let wc = weight_constant(
                &t.weight,
                class_for(class_p),
                &params.frame,
                ladder[0].cells,
            )?;
            record_weight_constant(&mut row, &wc);
        } else {
            row.note(format!(
                "class exponent pM/n = {class_p} below 1: membership not checked"
            ));
        }
        report.rows.push(row);
    }
    Ok(report.finalized())
}
