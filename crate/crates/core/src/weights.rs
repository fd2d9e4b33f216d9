//! Weights, Muckenhoupt / reverse Hölder / fractional class constants over
//! explicit ball families, averaged weights and the Rubio de Francia
//! iteration.
//!
//! Every class constant here is a maximum over a finite [`BallFamily`], so it
//! is a lower bound for the supremum over all balls. Inequalities between
//! constants are only meaningful when both sides use compatible families.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::grid::{ball_averages, same_grid, BallShape, GridBox, GridFn};
use crate::kernel;
use crate::operators::maximal;

/// Growth factor per grid doubling above which a constant counts as divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.25;

/// Parseable weight descriptor: `const:c`, `step:a:b` or `power:a`.
///
/// `step:a:b` is `a` where the first coordinate is negative and `b` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightSpec {
    Const(f64),
    Step(f64, f64),
    Power(f64),
}

impl WeightSpec {
    pub fn materialize(&self, grid: GridBox) -> Result<Weight> {
        match *self {
            WeightSpec::Const(c) => {
                require_positive("const", c)?;
                Ok(Weight {
                    kind: WeightKind::Sampled,
                    descriptor: self.to_string(),
                    values: GridFn::constant(grid, c),
                })
            }
            WeightSpec::Step(a, b) => {
                require_positive("step.left", a)?;
                require_positive("step.right", b)?;
                let values = GridFn::from_fn(grid, |x| if x[0] < 0.0 { a } else { b })?;
                Ok(Weight {
                    kind: WeightKind::Sampled,
                    descriptor: self.to_string(),
                    values,
                })
            }
            WeightSpec::Power(a) => power_weight(a, grid),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Const(c) => write!(f, "const:{c}"),
            WeightSpec::Step(a, b) => write!(f, "step:{a}:{b}"),
            WeightSpec::Power(a) => write!(f, "power:{a}"),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::param("weight", format!("`{s}`: {why}"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default();
        let nums: Vec<f64> = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("not a number")))
            .collect::<Result<_>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(bad("parameters must be finite"));
        }
        match (kind, nums.as_slice()) {
            ("const", [c]) if *c > 0.0 => Ok(WeightSpec::Const(*c)),
            ("step", [a, b]) if *a > 0.0 && *b > 0.0 => Ok(WeightSpec::Step(*a, *b)),
            ("power", [a]) => Ok(WeightSpec::Power(*a)),
            ("const" | "step", _) => Err(bad("values must be positive and correctly counted")),
            ("power", _) => Err(bad("expected one exponent")),
            _ => Err(bad("unknown weight kind")),
        }
    }
}

impl TryFrom<String> for WeightSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WeightSpec> for String {
    fn from(w: WeightSpec) -> String {
        w.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// `max(|x|, h/2)^a` at cell centres.
    ClosedFormPower(f64),
    Sampled,
}

/// Strictly positive sampled weight on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    kind: WeightKind,
    descriptor: String,
    values: GridFn,
}

impl Weight {
    pub fn unit(grid: GridBox) -> Self {
        Self {
            kind: WeightKind::Sampled,
            descriptor: "const:1".into(),
            values: GridFn::constant(grid, 1.0),
        }
    }

    pub fn sampled(values: GridFn) -> Result<Self> {
        if let Some(bad) = values.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::param(
                "weight",
                format!(
                    "must be strictly positive, cell {bad} has {}",
                    values.get(bad)
                ),
            ));
        }
        Ok(Self {
            kind: WeightKind::Sampled,
            descriptor: "sampled".into(),
            values,
        })
    }

    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = descriptor.into();
        self
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn grid(&self) -> &GridBox {
        self.values.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.values.values()
    }

    pub fn as_grid_fn(&self) -> &GridFn {
        &self.values
    }

    /// `w^e` as a sampled weight.
    pub fn powf(&self, e: f64) -> Result<Weight> {
        let kind = match self.kind {
            WeightKind::ClosedFormPower(a) => WeightKind::ClosedFormPower(a * e),
            WeightKind::Sampled => WeightKind::Sampled,
        };
        let values = GridFn::new(
            *self.grid(),
            self.values().iter().map(|v| v.powf(e)).collect(),
        )?;
        Ok(Self {
            kind,
            descriptor: format!("({})^{e}", self.descriptor),
            values,
        })
    }
}

/// Canonical power weight `max(|x|, h/2)^a`.
pub fn power_weight(a: f64, grid: GridBox) -> Result<Weight> {
    if !a.is_finite() {
        return Err(Error::param("a", format!("must be finite, got {a}")));
    }
    let floor = grid.cell_width() / 2.0;
    let values = GridFn::from_fn(grid, |x| {
        (x[0] * x[0] + x[1] * x[1]).sqrt().max(floor).powf(a)
    })?;
    Ok(Weight {
        kind: WeightKind::ClosedFormPower(a),
        descriptor: WeightSpec::Power(a).to_string(),
        values,
    })
}

/// `W_t(x)`: the average of `w` over `B_d(x, t)`.
pub fn averaged_weight(w: &Weight, t: f64) -> Result<Weight> {
    require_positive("t", t)?;
    let values = ball_averages(w.as_grid_fn(), t)?;
    Ok(Weight {
        kind: WeightKind::Sampled,
        descriptor: format!("avg[{}; t={t}]", w.descriptor),
        values,
    })
}

/// Finite list of balls `(centre cell, radius)` over which constants are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily {
    grid: GridBox,
    descriptor: String,
    // radius bits -> centre cells, in increasing radius order
    groups: BTreeMap<u64, Vec<usize>>,
    len: usize,
}

impl BallFamily {
    pub fn from_pairs(
        grid: GridBox,
        pairs: impl IntoIterator<Item = (usize, f64)>,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (c, t) in pairs {
            require_positive("radius", t)?;
            if c >= grid.len() {
                return Err(Error::param("center", format!("cell {c} outside the grid")));
            }
            groups.entry(t.to_bits()).or_default().push(c);
        }
        let mut len = 0;
        for centres in groups.values_mut() {
            centres.sort_unstable();
            centres.dedup();
            len += centres.len();
        }
        if len == 0 {
            return Err(Error::param("family", "must contain at least one ball"));
        }
        Ok(Self {
            grid,
            descriptor: descriptor.into(),
            groups,
            len,
        })
    }

    /// All cells times the dyadic radii `h, 2h, …, 2L`.
    pub fn dyadic(grid: GridBox) -> Self {
        let radii = grid.dyadic_radii();
        Self::with_radii(grid, &radii, "dyadic")
    }

    /// All cells times the given radii.
    pub fn with_radii(grid: GridBox, radii: &[f64], descriptor: impl Into<String>) -> Self {
        let all: Vec<usize> = (0..grid.len()).collect();
        let mut groups = BTreeMap::new();
        for &t in radii {
            assert!(t > 0.0, "radius must be positive");
            groups.insert(t.to_bits(), all.clone());
        }
        Self {
            grid,
            descriptor: descriptor.into(),
            len: all.len() * groups.len(),
            groups,
        }
    }

    /// Sub-family of the balls accepted by `keep`.
    pub fn filter(
        &self,
        descriptor: impl Into<String>,
        keep: impl Fn(usize, f64) -> bool,
    ) -> Result<Self> {
        let pairs: Vec<(usize, f64)> = self.pairs().filter(|&(c, t)| keep(c, t)).collect();
        Self::from_pairs(self.grid, pairs, descriptor)
    }

    pub fn grid(&self) -> &GridBox {
        &self.grid
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.groups
            .iter()
            .flat_map(|(&bits, cs)| cs.iter().map(move |&c| (c, f64::from_bits(bits))))
    }

    pub(crate) fn groups(&self) -> impl Iterator<Item = (f64, &[usize])> + '_ {
        self.groups
            .iter()
            .map(|(&bits, cs)| (f64::from_bits(bits), cs.as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum WeightClass {
    Ap { p: f64 },
    A1,
    AInfinity,
    ReverseHolder { s: f64 },
    ReverseHolderInfinity,
    Apq { p: f64, q: f64 },
}

/// Estimated class constant together with the family it was taken over.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightConstants {
    pub class: WeightClass,
    pub value: f64,
    pub divergent: bool,
    pub family: String,
    /// Ball attaining the maximum, `(centre, radius)`.
    pub witness: Option<(usize, f64)>,
    /// Estimates along a refinement ladder, when one was run.
    pub refinement: Vec<f64>,
}

enum Stat {
    Avg(Vec<f64>),
    Max(Vec<f64>),
}

/// Maximum over the family of `combine(stats on B)`, with its witness ball.
fn family_max(
    family: &BallFamily,
    stats: &[Stat],
    combine: impl Fn(&[f64]) -> f64 + Sync,
) -> (f64, Option<(usize, f64)>) {
    let grid = *family.grid();
    let groups: Vec<(f64, &[usize])> = family.groups().collect();
    let per_group: Vec<(f64, Option<(usize, f64)>)> = groups
        .par_iter()
        .map(|&(t, centres)| {
            let shape = BallShape::new(&grid, t);
            let counts = kernel::ball_counts(&grid, &shape);
            let fields: Vec<Vec<f64>> = stats
                .iter()
                .map(|s| match s {
                    Stat::Avg(v) => kernel::ball_sums(&grid, v, &shape)
                        .into_iter()
                        .zip(&counts)
                        .map(|(sum, &c)| sum / c as f64)
                        .collect(),
                    Stat::Max(v) => kernel::ball_dilate_max(&grid, v, &shape),
                })
                .collect();
            let mut best = f64::NEG_INFINITY;
            let mut witness = None;
            let mut buf = vec![0.0; fields.len()];
            for &c in centres {
                for (b, f) in buf.iter_mut().zip(&fields) {
                    *b = f[c];
                }
                let v = combine(&buf);
                if v > best {
                    best = v;
                    witness = Some((c, t));
                }
            }
            (best, witness)
        })
        .collect();
    per_group.into_iter().fold(
        (f64::NEG_INFINITY, None),
        |acc, g| if g.0 > acc.0 { g } else { acc },
    )
}

fn check_family(w: &Weight, family: &BallFamily) -> Result<()> {
    same_grid(w.grid(), family.grid())
}

/// `[w]_{A_p}` over the family; `p = 1` uses `(⨍_B w) max_B w⁻¹`.
pub fn ap_constant(w: &Weight, p: f64, family: &BallFamily) -> Result<WeightConstants> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param("p", format!("must be >= 1, got {p}")));
    }
    check_family(w, family)?;
    let wv = w.values().to_vec();
    let (value, witness, class) = if p == 1.0 {
        let inv: Vec<f64> = wv.iter().map(|v| 1.0 / v).collect();
        let (v, wit) = family_max(family, &[Stat::Avg(wv), Stat::Max(inv)], |s| s[0] * s[1]);
        (v, wit, WeightClass::A1)
    } else {
        let dual = 1.0 - p / (p - 1.0);
        let pw: Vec<f64> = wv.iter().map(|v| v.powf(dual)).collect();
        let (v, wit) = family_max(family, &[Stat::Avg(wv), Stat::Avg(pw)], |s| {
            s[0] * s[1].powf(p - 1.0)
        });
        (v, wit, WeightClass::Ap { p })
    };
    Ok(WeightConstants {
        class,
        value,
        divergent: !value.is_finite(),
        family: family.descriptor().to_string(),
        witness,
        refinement: Vec::new(),
    })
}

/// The defining `A_p` product on `B_d(x, t)` at every centre `x`.
pub fn ap_product_field(w: &Weight, p: f64, t: f64) -> Result<GridFn> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param("p", format!("must be >= 1, got {p}")));
    }
    require_positive("t", t)?;
    let grid = *w.grid();
    let shape = BallShape::new(&grid, t);
    let counts = kernel::ball_counts(&grid, &shape);
    let avg = |v: &[f64]| -> Vec<f64> {
        kernel::ball_sums(&grid, v, &shape)
            .into_iter()
            .zip(&counts)
            .map(|(s, &c)| s / c as f64)
            .collect()
    };
    let mean = avg(w.values());
    let values = if p == 1.0 {
        let inv: Vec<f64> = w.values().iter().map(|v| 1.0 / v).collect();
        let top = kernel::ball_dilate_max(&grid, &inv, &shape);
        mean.iter().zip(&top).map(|(a, b)| a * b).collect()
    } else {
        let dual = 1.0 - p / (p - 1.0);
        let pw: Vec<f64> = w.values().iter().map(|v| v.powf(dual)).collect();
        mean.iter()
            .zip(avg(&pw))
            .map(|(a, b)| a * b.powf(p - 1.0))
            .collect()
    };
    Ok(GridFn::from_vec_unchecked(grid, values))
}

/// `min_{p ∈ p_grid} [w]_{A_p}`.
pub fn ainfty_constant(w: &Weight, family: &BallFamily, p_grid: &[f64]) -> Result<WeightConstants> {
    if p_grid.is_empty() {
        return Err(Error::param("p_grid", "must not be empty"));
    }
    let mut best: Option<WeightConstants> = None;
    for &p in p_grid {
        let c = ap_constant(w, p, family)?;
        if best.as_ref().is_none_or(|b| c.value < b.value) {
            best = Some(c);
        }
    }
    let best = best.expect("non-empty grid");
    Ok(WeightConstants {
        class: WeightClass::AInfinity,
        ..best
    })
}

/// `[w]_{RH_s}`; `s = ∞` uses `max_B w / ⨍_B w`.
pub fn rh_constant(w: &Weight, s: f64, family: &BallFamily) -> Result<WeightConstants> {
    if !(s > 1.0) {
        return Err(Error::param(
            "s",
            format!("must be > 1 or infinite, got {s}"),
        ));
    }
    check_family(w, family)?;
    let wv = w.values().to_vec();
    let (value, witness, class) = if s.is_infinite() {
        let (v, wit) = family_max(family, &[Stat::Max(wv.clone()), Stat::Avg(wv)], |x| {
            x[0] / x[1]
        });
        (v, wit, WeightClass::ReverseHolderInfinity)
    } else {
        let ws: Vec<f64> = wv.iter().map(|v| v.powf(s)).collect();
        let (v, wit) = family_max(family, &[Stat::Avg(ws), Stat::Avg(wv)], |x| {
            x[0].powf(1.0 / s) / x[1]
        });
        (v, wit, WeightClass::ReverseHolder { s })
    };
    Ok(WeightConstants {
        class,
        value,
        divergent: !value.is_finite(),
        family: family.descriptor().to_string(),
        witness,
        refinement: Vec::new(),
    })
}

/// `[w]_{A_{p,q}} = sup_B (⨍_B w^q)(⨍_B w^{-p'})^{q/p'}`, finite `p > 1` only.
pub fn apq_constant(w: &Weight, p: f64, q: f64, family: &BallFamily) -> Result<WeightConstants> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::param(
            "p",
            format!("must be finite and > 1, got {p}"),
        ));
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::param(
            "q",
            format!("must be finite and >= 1, got {q}"),
        ));
    }
    check_family(w, family)?;
    let pp = p / (p - 1.0);
    let wq: Vec<f64> = w.values().iter().map(|v| v.powf(q)).collect();
    let wd: Vec<f64> = w.values().iter().map(|v| v.powf(-pp)).collect();
    let (value, witness) = family_max(family, &[Stat::Avg(wq), Stat::Avg(wd)], |x| {
        x[0] * x[1].powf(q / pp)
    });
    Ok(WeightConstants {
        class: WeightClass::Apq { p, q },
        value,
        divergent: !value.is_finite(),
        family: family.descriptor().to_string(),
        witness,
        refinement: Vec::new(),
    })
}

/// Runs `estimate` on each grid of a refinement ladder (dyadic families) and
/// flags divergence when the estimate grows by more than
/// [`DIVERGENCE_GROWTH`] on each of the last two doublings.
pub fn refinement_sweep(
    spec: &WeightSpec,
    grids: &[GridBox],
    estimate: impl Fn(&Weight, &BallFamily) -> Result<WeightConstants>,
) -> Result<WeightConstants> {
    if grids.is_empty() {
        return Err(Error::param("grids", "refinement ladder is empty"));
    }
    let mut values = Vec::with_capacity(grids.len());
    let mut last = None;
    for &g in grids {
        let w = spec.materialize(g)?;
        let c = estimate(&w, &BallFamily::dyadic(g))?;
        values.push(c.value);
        last = Some(c);
    }
    let mut out = last.expect("non-empty ladder");
    out.divergent = out.divergent || is_divergent(&values);
    out.refinement = values;
    Ok(out)
}

/// Divergence rule on a refinement sequence (successive grid doublings).
pub fn is_divergent(values: &[f64]) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return true;
    }
    values.len() >= 3
        && values
            .windows(2)
            .rev()
            .take(2)
            .all(|w| w[1] > DIVERGENCE_GROWTH * w[0])
}

/// Output of [`rdf_iterate`].
#[derive(Debug, Clone, PartialEq)]
pub struct RdfIterate {
    /// `R h = Σ_{k=0}^{depth} M^k h / (2B)^k`.
    pub sum: GridFn,
    /// `M^{depth+1} h / (2B)^{depth}`, the pointwise defect in `M(Rh) ≤ 2B·Rh`.
    pub tail: GridFn,
    /// `2^{-depth}`, the relative truncation of the geometric norm series.
    pub tail_factor: f64,
    pub norm_bound: f64,
    pub depth: usize,
}

/// Rubio de Francia iteration with the default dyadic family.
pub fn rdf_iterate(
    h: &GridFn,
    w: &Weight,
    p: f64,
    depth: usize,
    norm_bound: f64,
) -> Result<RdfIterate> {
    if depth < 1 {
        return Err(Error::param("depth", "must be >= 1"));
    }
    require_positive("norm_bound", norm_bound)?;
    if !(p > 1.0) {
        return Err(Error::param("p", format!("must be > 1, got {p}")));
    }
    same_grid(h.grid(), w.grid())?;
    if h.values().iter().any(|&v| v < 0.0) {
        return Err(Error::param("h", "must be non-negative"));
    }
    let family = BallFamily::dyadic(*h.grid());
    let scale = 2.0 * norm_bound;
    let mut term = h.clone();
    let mut sum = h.values().to_vec();
    for k in 1..=depth {
        term = maximal(&term, &family)?;
        let f = scale.powi(k as i32);
        for (s, v) in sum.iter_mut().zip(term.values()) {
            *s += v / f;
        }
    }
    let next = maximal(&term, &family)?;
    let tail = next.scale(1.0 / scale.powi(depth as i32));
    Ok(RdfIterate {
        sum: GridFn::new(*h.grid(), sum)?,
        tail,
        tail_factor: 0.5f64.powi(depth as i32),
        norm_bound,
        depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(l: f64, n: usize) -> GridBox {
        GridBox::new(1, l, n).unwrap()
    }

    fn step_weight(g: GridBox) -> Weight {
        WeightSpec::Step(1.0, 4.0).materialize(g).unwrap()
    }

    /// Balls centred on the origin cell of an odd grid, radii `(m + 1/2)h`.
    fn symmetric_family(g: GridBox) -> BallFamily {
        let c = g.len() / 2;
        let radii: Vec<f64> = (1..g.len() / 2)
            .map(|m| (m as f64 + 0.5) * g.cell_width())
            .collect();
        BallFamily::from_pairs(g, radii.into_iter().map(|t| (c, t)), "origin").unwrap()
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["const:1", "step:1:4", "power:0.5", "power:-1.5"] {
            let w: WeightSpec = s.parse().unwrap();
            assert_eq!(w.to_string(), s);
        }
        for bad in [
            "",
            "const",
            "const:-1",
            "step:1",
            "power:x",
            "tri:1",
            "power:NaN",
            "power:inf",
        ] {
            assert!(bad.parse::<WeightSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn unit_weight_constants_are_one() {
        let g = GridBox::new(2, 1.0, 16).unwrap();
        let fam = BallFamily::dyadic(g);
        let w = Weight::unit(g);
        for p in [1.0, 1.5, 2.0, 4.0] {
            assert!((ap_constant(&w, p, &fam).unwrap().value - 1.0).abs() < 1e-14);
        }
        assert!((rh_constant(&w, 2.0, &fam).unwrap().value - 1.0).abs() < 1e-14);
        assert!((rh_constant(&w, f64::INFINITY, &fam).unwrap().value - 1.0).abs() < 1e-14);
        assert!((apq_constant(&w, 1.5, 3.0, &fam).unwrap().value - 1.0).abs() < 1e-14);
        assert!((ainfty_constant(&w, &fam, &[1.5, 3.0]).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn step_weight_on_symmetric_balls() {
        // odd N puts a cell centre at the origin; the symmetric ball then has
        // m cells at weight 1, and m + 1 at weight 4 (the centre counts as x >= 0)
        let g = line(1.0, 2001);
        let w = step_weight(g);
        let fam = symmetric_family(g);
        let c = ap_constant(&w, 2.0, &fam).unwrap();
        // balanced halves give (5/2)(5/8) = 1.5625
        assert!((c.value - 1.5625).abs() < 2e-3, "{}", c.value);
        let rh = rh_constant(&w, 2.0, &fam).unwrap();
        assert!(
            (rh.value - (8.5f64).sqrt() / 2.5).abs() < 2e-3,
            "{}",
            rh.value
        );
    }

    #[test]
    fn ainfty_is_min_over_grid() {
        let g = line(1.0, 2001);
        let w = step_weight(g);
        let fam = symmetric_family(g);
        let a2 = ap_constant(&w, 2.0, &fam).unwrap().value;
        let ai = ainfty_constant(&w, &fam, &[1.5, 2.0, 3.0, 5.0]).unwrap();
        let each: Vec<f64> = [1.5, 2.0, 3.0, 5.0]
            .iter()
            .map(|&p| ap_constant(&w, p, &fam).unwrap().value)
            .collect();
        assert_eq!(ai.value, each.iter().copied().fold(f64::INFINITY, f64::min));
        assert!(ai.value <= a2);
        assert!(ainfty_constant(&w, &fam, &[]).is_err());
    }

    #[test]
    fn root_weight_origin_balls_tend_to_four_thirds() {
        let g = line(1.0, 4096);
        let w = power_weight(0.5, g).unwrap();
        let c = g.len() / 2;
        let fam = BallFamily::from_pairs(g, [(c, 0.5), (c, 0.9)], "origin").unwrap();
        let v = ap_constant(&w, 2.0, &fam).unwrap().value;
        assert!((v - 4.0 / 3.0).abs() < 0.01, "{v}");
        let full = ap_constant(&w, 2.0, &BallFamily::dyadic(g)).unwrap().value;
        assert!(full >= v);
    }

    #[test]
    fn apq_matches_ap_of_power() {
        let g = line(1.0, 256);
        let w = step_weight(g);
        let fam = BallFamily::dyadic(g);
        for p in [1.5, 2.0, 3.0] {
            let lhs = apq_constant(&w, p, p, &fam).unwrap().value;
            let rhs = ap_constant(&w.powf(p).unwrap(), p, &fam).unwrap().value;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{lhs} {rhs}");
        }
    }

    #[test]
    fn parameter_errors() {
        let g = line(1.0, 16);
        let fam = BallFamily::dyadic(g);
        let w = Weight::unit(g);
        assert!(ap_constant(&w, 0.5, &fam).is_err());
        assert!(rh_constant(&w, 1.0, &fam).is_err());
        assert!(apq_constant(&w, 1.0, 2.0, &fam).is_err());
        assert!(apq_constant(&w, f64::INFINITY, 2.0, &fam).is_err());
        assert!(averaged_weight(&w, 0.0).is_err());
        assert!(BallFamily::from_pairs(g, Vec::new(), "empty").is_err());
    }

    #[test]
    fn averaged_weight_examples() {
        let g = line(2.0, 4096);
        let w = Weight::unit(g);
        let wt = averaged_weight(&w, 0.3).unwrap();
        assert!(wt.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let w = power_weight(0.5, g).unwrap();
        let c = g.cell_of([1e-9, 0.0]).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let wt = averaged_weight(&w, t).unwrap();
            let want = 2.0 / 3.0 * t.sqrt();
            assert!(
                (wt.values()[c] - want).abs() < 4.0 * g.cell_width() / t,
                "t={t}"
            );
        }

        // odd grid: the centre cell sits at the origin
        let g = line(2.0, 4001);
        let wt = averaged_weight(&step_weight(g), 0.5).unwrap();
        assert!((wt.values()[g.len() / 2] - 2.5).abs() < 2e-3);
    }

    #[test]
    fn power_weight_divergence_is_flagged() {
        let ladder: Vec<GridBox> = [128, 256, 512].iter().map(|&n| line(1.0, n)).collect();
        let ap2 = |w: &Weight, f: &BallFamily| ap_constant(w, 2.0, f);
        let bad = refinement_sweep(&WeightSpec::Power(-1.5), &ladder, ap2).unwrap();
        assert!(bad.divergent, "{:?}", bad.refinement);
        let good = refinement_sweep(&WeightSpec::Power(0.5), &ladder, ap2).unwrap();
        assert!(!good.divergent, "{:?}", good.refinement);
        assert!(good.value.is_finite() && good.value >= 4.0 / 3.0 - 1e-3);
    }

    #[test]
    fn rdf_constant_input() {
        let g = line(1.0, 64);
        let w = Weight::unit(g);
        let h = GridFn::constant(g, 1.0);
        let r = rdf_iterate(&h, &w, 2.0, 10, 1.0).unwrap();
        let want = 2.0 - 0.5f64.powi(10);
        assert!(r.sum.values().iter().all(|v| (v - want).abs() < 1e-12));
        let z = rdf_iterate(&GridFn::zeros(g), &w, 2.0, 10, 1.0).unwrap();
        assert!(z.sum.is_zero());
        assert!(rdf_iterate(&h, &w, 2.0, 0, 1.0).is_err());
        assert!(rdf_iterate(&h, &w, 2.0, 3, 0.0).is_err());
    }
}
