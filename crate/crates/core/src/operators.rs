//! Base-space operators, their slice-wise extensions to the half-space and
//! off-diagonal decay profiling.
//!
//! The fractional integral and the Hilbert transform use unnormalized
//! kernels (`|x - y|^{α-n}` and `1/(x - y)`); every statement they take part
//! in is a scale-invariant inequality, so constants fold into the measured
//! ratios. Each output cell sums its inputs in increasing cell order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::grid::{ball_averages, lp_norm, same_grid, BallShape, GridBox, GridFn, HalfSpaceFn};
use crate::kernel;
use crate::weights::{BallFamily, Weight};

/// Safety factor applied to empirical maximal-operator norms.
pub const OPNORM_SAFETY: f64 = 2.0;

/// Ratios at or below this are treated as zero when fitting decay orders.
pub const DECAY_FIT_FLOOR: f64 = 1e-14;

fn check_alpha(alpha: f64, grid: &GridBox) -> Result<()> {
    let n = grid.dim() as f64;
    if alpha > 0.0 && alpha < n {
        Ok(())
    } else {
        Err(Error::param(
            "alpha",
            format!("must lie in (0, {n}), got {alpha}"),
        ))
    }
}

/// `max` over family balls containing each cell of `radius_factor(t) · ⨍_B |f|`.
fn sup_over_containing(
    f: &GridFn,
    family: &BallFamily,
    radius_factor: impl Fn(f64) -> f64 + Sync,
) -> Result<GridFn> {
    let grid = *f.grid();
    same_grid(&grid, family.grid())?;
    let abs = f.abs();
    let groups: Vec<(f64, &[usize])> = family.groups().collect();
    let per_radius: Vec<Vec<f64>> = groups
        .par_iter()
        .map(|&(t, centres)| {
            let shape = BallShape::new(&grid, t);
            let sums = kernel::ball_sums(&grid, abs.values(), &shape);
            let counts = kernel::ball_counts(&grid, &shape);
            let factor = radius_factor(t);
            let mut masked = vec![f64::NEG_INFINITY; grid.len()];
            for &c in centres {
                masked[c] = factor * (sums[c] / counts[c] as f64);
            }
            kernel::ball_dilate_max(&grid, &masked, &shape)
        })
        .collect();
    let mut out = vec![f64::NEG_INFINITY; grid.len()];
    for layer in &per_radius {
        for (o, &v) in out.iter_mut().zip(layer) {
            *o = o.max(v);
        }
    }
    // cells no family ball reaches
    for o in out.iter_mut() {
        if *o == f64::NEG_INFINITY {
            *o = 0.0;
        }
    }
    Ok(GridFn::from_vec_unchecked(grid, out))
}

/// Uncentred maximal function over a ball family.
pub fn maximal(f: &GridFn, family: &BallFamily) -> Result<GridFn> {
    sup_over_containing(f, family, |_| 1.0)
}

/// Fractional maximal function `sup_{x ∈ B} t^α ⨍_B |f|`.
pub fn frac_maximal(f: &GridFn, alpha: f64, family: &BallFamily) -> Result<GridFn> {
    check_alpha(alpha, f.grid())?;
    sup_over_containing(f, family, |t| t.powf(alpha))
}

/// `OPNORM_SAFETY · max_f ‖Mf‖_{L^p(w)} / ‖f‖_{L^p(w)}` over the probes.
pub fn maximal_opnorm_estimate(w: &Weight, p: f64, probes: &[GridFn]) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::param("probes", "must not be empty"));
    }
    if !(p > 1.0) {
        return Err(Error::param("p", format!("must be > 1, got {p}")));
    }
    let family = BallFamily::dyadic(*w.grid());
    let mut best: f64 = 0.0;
    for f in probes {
        let den = lp_norm(f, p, w)?;
        if den == 0.0 {
            return Err(Error::Degenerate("probe has zero norm".into()));
        }
        let num = lp_norm(&maximal(f, &family)?, p, w)?;
        best = best.max(num / den);
    }
    Ok(OPNORM_SAFETY * best)
}

/// `∫_0^{π/4} sec^α θ dθ` by composite Simpson; the integrand is smooth.
fn sec_power_integral(alpha: f64) -> f64 {
    let steps = 4096;
    let b = std::f64::consts::FRAC_PI_4;
    let h = b / steps as f64;
    let f = |x: f64| x.cos().powf(-alpha);
    let mut acc = f(0.0) + f(b);
    for i in 1..steps {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Kernel value `K(d)` for integer offset `d`, multiplied by the cell volume.
fn riesz_offset_kernel(grid: &GridBox, alpha: f64) -> impl Fn(i64, i64) -> f64 {
    let h = grid.cell_width();
    let n = grid.dim() as i32;
    let vol = grid.cell_volume();
    // exact ∫_cell |z|^{α-n} dz for the self cell
    let self_term = if n == 1 {
        2.0 * (h / 2.0).powf(alpha) / alpha
    } else {
        8.0 / alpha * (h / 2.0).powf(alpha) * sec_power_integral(alpha)
    };
    move |di: i64, dj: i64| {
        if di == 0 && dj == 0 {
            self_term
        } else {
            let d = ((di * di + dj * dj) as f64).sqrt() * h;
            d.powf(alpha - n as f64) * vol
        }
    }
}

/// Unnormalized fractional integral `I_α f(x) = Σ_y |x - y|^{α-n} f(y) hⁿ`.
///
/// The self cell uses the exact integral of the kernel over one cell.
/// Cost is quadratic in the number of cells.
pub fn riesz_potential(f: &GridFn, alpha: f64) -> Result<GridFn> {
    let grid = *f.grid();
    check_alpha(alpha, &grid)?;
    let n = grid.cells_per_axis() as i64;
    let kernel = riesz_offset_kernel(&grid, alpha);
    let out: Vec<f64> = if grid.dim() == 1 {
        let table: Vec<f64> = (-(n - 1)..n).map(|d| kernel(d, 0)).collect();
        (0..n)
            .into_par_iter()
            .map(|i| {
                f.values()
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| table[(i - j as i64 + n - 1) as usize] * v)
                    .sum()
            })
            .collect()
    } else {
        let side = (2 * n - 1) as usize;
        let mut table = vec![0.0; side * side];
        for dj in -(n - 1)..n {
            for di in -(n - 1)..n {
                table[(di + n - 1) as usize + side * (dj + n - 1) as usize] = kernel(di, dj);
            }
        }
        (0..grid.len())
            .into_par_iter()
            .map(|x| {
                let [xi, xj] = grid.coords(x);
                let mut acc = 0.0;
                for (y, &v) in f.values().iter().enumerate() {
                    let [yi, yj] = grid.coords(y);
                    let di = xi as i64 - yi as i64 + n - 1;
                    let dj = xj as i64 - yj as i64 + n - 1;
                    acc += table[di as usize + side * dj as usize] * v;
                }
                acc
            })
            .collect()
    };
    Ok(GridFn::from_vec_unchecked(grid, out))
}

/// Unnormalized discrete Hilbert transform `Hf(x_i) = Σ_{j≠i} f_j / (i - j)`.
///
/// This is `Σ_{y≠x} f(y) h / (x - y)`; the cell width cancels.
pub fn hilbert(f: &GridFn) -> Result<GridFn> {
    let grid = *f.grid();
    if grid.dim() != 1 {
        return Err(Error::param(
            "dim",
            "the Hilbert transform is one-dimensional",
        ));
    }
    let n = grid.len();
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            f.values()
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &v)| v / (i as f64 - j as f64))
                .sum()
        })
        .collect();
    Ok(GridFn::from_vec_unchecked(grid, out))
}

/// Row-normalized Gaussian smoothing along one axis.
fn heat_axis(grid: &GridBox, values: &[f64], t: f64, axis: usize) -> Vec<f64> {
    let n = grid.cells_per_axis();
    let h = grid.cell_width();
    let table: Vec<f64> = (0..n)
        .map(|d| {
            let z = d as f64 * h;
            (-(z * z) / (4.0 * t * t)).exp()
        })
        .collect();
    let mass: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| table[i.abs_diff(j)]).sum())
        .collect();
    let rows = if grid.dim() == 1 { 1 } else { n };
    let mut out = vec![0.0; values.len()];
    // a line is a fixed index along the other axis
    let at = |k: usize, other: usize| -> usize {
        if grid.dim() == 1 {
            k
        } else if axis == 0 {
            grid.index([k, other])
        } else {
            grid.index([other, k])
        }
    };
    let lines: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|other| {
            (0..n)
                .map(|i| {
                    let s: f64 = (0..n)
                        .map(|j| table[i.abs_diff(j)] * values[at(j, other)])
                        .sum();
                    s / mass[i]
                })
                .collect()
        })
        .collect();
    for (other, line) in lines.into_iter().enumerate() {
        for (k, v) in line.into_iter().enumerate() {
            out[at(k, other)] = v;
        }
    }
    out
}

/// Gaussian `g_t(z) ∝ exp(-|z|² / 4t²)` on cells, renormalized to unit mass
/// over the box at every output cell. Separable across axes.
pub fn heat(f: &GridFn, t: f64) -> Result<GridFn> {
    require_positive("t", t)?;
    let grid = *f.grid();
    let mut v = heat_axis(&grid, f.values(), t, 0);
    if grid.dim() == 2 {
        v = heat_axis(&grid, &v, t, 1);
    }
    Ok(GridFn::from_vec_unchecked(grid, v))
}

/// Scale-independent operator wrapped by [`OperatorFamily::Constant`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BaseOperator {
    /// Uncentred maximal function over the dyadic family.
    Maximal,
    FracMaximal {
        alpha: f64,
    },
    Hilbert,
    Riesz {
        alpha: f64,
    },
}

impl BaseOperator {
    pub fn is_linear(&self) -> bool {
        matches!(self, BaseOperator::Hilbert | BaseOperator::Riesz { .. })
    }

    pub fn apply(&self, f: &GridFn) -> Result<GridFn> {
        match *self {
            BaseOperator::Maximal => maximal(f, &BallFamily::dyadic(*f.grid())),
            BaseOperator::FracMaximal { alpha } => {
                frac_maximal(f, alpha, &BallFamily::dyadic(*f.grid()))
            }
            BaseOperator::Hilbert => hilbert(f),
            BaseOperator::Riesz { alpha } => riesz_potential(f, alpha),
        }
    }
}

/// Family `(T_t)_{t>0}` applied at scale `t` on each slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OperatorFamily {
    Averaging,
    Heat,
    Identity,
    Constant(BaseOperator),
}

impl OperatorFamily {
    pub fn is_linear(&self) -> bool {
        match self {
            OperatorFamily::Constant(op) => op.is_linear(),
            _ => true,
        }
    }

    pub fn name(&self) -> String {
        match self {
            OperatorFamily::Averaging => "averaging".into(),
            OperatorFamily::Heat => "heat".into(),
            OperatorFamily::Identity => "identity".into(),
            OperatorFamily::Constant(op) => match op {
                BaseOperator::Maximal => "maximal".into(),
                BaseOperator::FracMaximal { alpha } => format!("frac_maximal({alpha})"),
                BaseOperator::Hilbert => "hilbert".into(),
                BaseOperator::Riesz { alpha } => format!("riesz({alpha})"),
            },
        }
    }
}

/// `T_t f`.
pub fn family_apply(fam: &OperatorFamily, t: f64, f: &GridFn) -> Result<GridFn> {
    require_positive("t", t)?;
    match fam {
        OperatorFamily::Averaging => ball_averages(f, t),
        OperatorFamily::Heat => heat(f, t),
        OperatorFamily::Identity => Ok(f.clone()),
        OperatorFamily::Constant(op) => op.apply(f),
    }
}

/// `(x, t_k) ↦ T_{t_k}(F(·, t_k))(x)`.
pub fn extend_slicewise(fam: &OperatorFamily, big_f: &HalfSpaceFn) -> Result<HalfSpaceFn> {
    let levels = big_f.tlevels().levels();
    let slices: Vec<GridFn> = levels
        .par_iter()
        .enumerate()
        .map(|(k, &t)| family_apply(fam, t, &big_f.slice_fn(k)))
        .collect::<Result<_>>()?;
    HalfSpaceFn::from_slices(*big_f.tlevels(), slices)
}

/// Strip pair for off-diagonal probing.
///
/// With `gap > 0`, `F = {x₀ < -gap/2}` and `E = {x₀ > gap/2}`; with
/// `gap = 0` both are the whole box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGeometry {
    pub gap: f64,
    pub t: f64,
}

impl StripGeometry {
    fn masks(&self, grid: &GridBox) -> (Vec<bool>, Vec<bool>) {
        if self.gap == 0.0 {
            return (vec![true; grid.len()], vec![true; grid.len()]);
        }
        let e = (0..grid.len())
            .map(|i| grid.center(i)[0] > self.gap / 2.0)
            .collect();
        let f = (0..grid.len())
            .map(|i| grid.center(i)[0] < -self.gap / 2.0)
            .collect();
        (e, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffDiagPoint {
    pub t: f64,
    /// Realized distance between the nearest cell centres of `E` and `F`.
    pub d: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fit", rename_all = "snake_case")]
pub enum DecayFit {
    Fitted {
        order: f64,
        residual: f64,
    },
    /// No positive ratio at positive separation: decay faster than any order.
    Unbounded,
    /// Positive ratios exist but span fewer than two distinct `d/t`.
    Insufficient,
}

impl DecayFit {
    /// Fitted order, with `+∞` for [`DecayFit::Unbounded`].
    pub fn order(&self) -> Option<f64> {
        match *self {
            DecayFit::Fitted { order, .. } => Some(order),
            DecayFit::Unbounded => Some(f64::INFINITY),
            DecayFit::Insufficient => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffDiagProfile {
    pub r: f64,
    pub points: Vec<OffDiagPoint>,
    pub fit: DecayFit,
}

fn lr_unweighted(values: &[f64], r: f64) -> f64 {
    values
        .iter()
        .map(|v| v.abs().powf(r))
        .sum::<f64>()
        .powf(1.0 / r)
}

/// Least-squares slope of `ln ratio` against `-ln(1 + d/t)`.
fn fit_decay(points: &[OffDiagPoint]) -> DecayFit {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.ratio > DECAY_FIT_FLOOR)
        .map(|p| (-(1.0 + p.d / p.t).ln(), p.ratio.ln()))
        .collect();
    let separated_positive = points
        .iter()
        .any(|p| p.d > 0.0 && p.ratio > DECAY_FIT_FLOOR);
    if !separated_positive {
        return DecayFit::Unbounded;
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if usable.len() < 2 || sxx <= 1e-300 {
        return DecayFit::Insufficient;
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let residual = (usable
        .iter()
        .map(|p| (p.1 - intercept - order * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    DecayFit::Fitted { order, residual }
}

/// Off-diagonal ratios `max_f ‖1_E T_t(1_F f)‖_r / ‖1_F f‖_r` and decay fit.
pub fn offdiag_profile(
    fam: &OperatorFamily,
    r: f64,
    probes: &[GridFn],
    geometry: &[StripGeometry],
) -> Result<OffDiagProfile> {
    if !fam.is_linear() {
        return Err(Error::UnsupportedFamily(format!(
            "{} is sublinear; off-diagonal fitting needs a linear family",
            fam.name()
        )));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::param(
            "r",
            format!("must be finite and >= 1, got {r}"),
        ));
    }
    if probes.is_empty() {
        return Err(Error::param("probes", "must not be empty"));
    }
    let grid = *probes[0].grid();
    let points: Vec<OffDiagPoint> = geometry
        .par_iter()
        .map(|geo| -> Result<OffDiagPoint> {
            require_positive("t", geo.t)?;
            if !(geo.gap >= 0.0) {
                return Err(Error::param("gap", "must be >= 0"));
            }
            let (e, f) = geo.masks(&grid);
            let e_cells: Vec<usize> = (0..grid.len()).filter(|&i| e[i]).collect();
            let f_cells: Vec<usize> = (0..grid.len()).filter(|&i| f[i]).collect();
            if e_cells.is_empty() || f_cells.is_empty() {
                return Err(Error::Degenerate(format!(
                    "gap {} leaves an empty strip",
                    geo.gap
                )));
            }
            let d = if geo.gap == 0.0 {
                0.0
            } else {
                let fmax = f_cells.iter().map(|&i| grid.coords(i)[0]).max().unwrap();
                let emin = e_cells.iter().map(|&i| grid.coords(i)[0]).min().unwrap();
                (emin - fmax) as f64 * grid.cell_width()
            };
            let mut best: f64 = 0.0;
            let mut any = false;
            for probe in probes {
                same_grid(&grid, probe.grid())?;
                let local = probe.restrict(&f);
                let den = lr_unweighted(local.values(), r);
                if den == 0.0 {
                    continue;
                }
                any = true;
                let out = family_apply(fam, geo.t, &local)?.restrict(&e);
                best = best.max(lr_unweighted(out.values(), r) / den);
            }
            if !any {
                return Err(Error::Degenerate("every probe vanishes on F".into()));
            }
            Ok(OffDiagPoint {
                t: geo.t,
                d,
                ratio: best,
            })
        })
        .collect::<Result<_>>()?;
    let fit = fit_decay(&points);
    Ok(OffDiagProfile { r, points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(l: f64, n: usize) -> GridBox {
        GridBox::new(1, l, n).unwrap()
    }

    #[test]
    fn maximal_of_constant() {
        let g = GridBox::new(2, 1.0, 16).unwrap();
        let m = maximal(&GridFn::constant(g, 2.5), &BallFamily::dyadic(g)).unwrap();
        assert!(m.values().iter().all(|v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn maximal_of_interval_indicator() {
        // uncentred maximal function of 1_[0,1]: 1 inside, 1/x right, 1/(1-x) left
        let g = line(4.0, 2048);
        let f = GridFn::indicator(g, |x| (0.0..=1.0).contains(&x[0]));
        let radii: Vec<f64> = (1..=2048)
            .map(|k| k as f64 * g.cell_width() / 2.0)
            .collect();
        let fam = BallFamily::with_radii(g, &radii, "fine");
        let m = maximal(&f, &fam).unwrap();
        for &x in &[-2.5, -1.0, -0.3, 0.5, 1.5, 2.0, 3.0] {
            let want = if x < 0.0 {
                1.0 / (1.0 - x)
            } else if x <= 1.0 {
                1.0
            } else {
                1.0 / x
            };
            let got = m.get(g.cell_of([x, 0.0]).unwrap());
            assert!((got - want).abs() < 0.02, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn maximal_of_spike() {
        // the best containing ball spans the spike and x, so the average is about h/dist
        let g = line(4.0, 512);
        let h = g.cell_width();
        let spike = g.len() / 2;
        let mut v = vec![0.0; g.len()];
        v[spike] = 1.0;
        let f = GridFn::new(g, v).unwrap();
        let radii: Vec<f64> = (1..=1024).map(|k| k as f64 * h / 2.0).collect();
        let m = maximal(&f, &BallFamily::with_radii(g, &radii, "fine")).unwrap();
        for &k in &[20usize, 60, 150] {
            let x = spike + k;
            let dist = g.center_distance(x, spike);
            let want = h / dist;
            assert!(
                (m.get(x) - want).abs() < 0.1 * want,
                "k={k} got={} want={want}",
                m.get(x)
            );
        }
    }

    #[test]
    fn frac_maximal_examples() {
        let g = line(4.0, 1024);
        let f = GridFn::indicator(g, |x| (0.0..=1.0).contains(&x[0]));
        let fam = BallFamily::dyadic(g);
        let tiny = frac_maximal(&f, 1e-9, &fam).unwrap();
        let m = maximal(&f, &fam).unwrap();
        for (a, b) in tiny.values().iter().zip(m.values()) {
            assert!((a - b).abs() <= 1e-6 * b.max(1e-300));
        }
        assert!(frac_maximal(&GridFn::zeros(g), 0.5, &fam)
            .unwrap()
            .is_zero());
        assert!(frac_maximal(&f, 1.0, &fam).is_err());
        assert!(frac_maximal(&f, 0.0, &fam).is_err());

        // centred balls on the cell next to 0: max_t t^{1/2} min(t,1)/(2t) = 1/2
        let c = g.cell_of([1e-9, 0.0]).unwrap();
        let radii: Vec<f64> = (1..400).map(|k| k as f64 * 0.01).collect();
        let fam = BallFamily::from_pairs(g, radii.iter().map(|&t| (c, t)), "centred").unwrap();
        let v = frac_maximal(&f, 0.5, &fam).unwrap().get(c);
        assert!((v - 0.5).abs() < 0.01, "{v}");
    }

    #[test]
    fn riesz_far_field() {
        let g = line(4.0, 1024);
        let h = g.cell_width();
        let c = g.cell_of([1e-9, 0.0]).unwrap();
        let mut v = vec![0.0; g.len()];
        v[c] = 1.0;
        let out = riesz_potential(&GridFn::new(g, v).unwrap(), 0.5).unwrap();
        for &k in &[50usize, 200, 400] {
            let x = c + k;
            let d = g.center_distance(x, c);
            assert!((out.get(x) - h * d.powf(-0.5)).abs() < 1e-12);
        }
        assert!(riesz_potential(&GridFn::zeros(g), 0.5).unwrap().is_zero());
        assert!(riesz_potential(&GridFn::zeros(g), 1.5).is_err());
    }

    #[test]
    fn riesz_self_term_2d() {
        // sec^α integral against a closed form at α = 2: ∫ sec² = tan(π/4) = 1
        assert!((sec_power_integral(2.0) - 1.0).abs() < 1e-14);
        assert!((sec_power_integral(0.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let g = GridBox::new(2, 1.0, 6).unwrap();
        let out = riesz_potential(&GridFn::constant(g, 1.0), 1.0).unwrap();
        assert!(out.values().iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn hilbert_examples() {
        let g = line(4.0, 2048);
        assert!(hilbert(&GridFn::zeros(g)).unwrap().is_zero());
        let f = GridFn::indicator(g, |x| x[0].abs() <= 1.0);
        let hf = hilbert(&f).unwrap();
        let n = g.len();
        for i in 0..n {
            assert!((hf.get(i) + hf.get(n - 1 - i)).abs() < 1e-12);
        }
        let h = g.cell_width();
        for &x in &[1.5f64, 2.0, 3.0, -2.5] {
            let want = ((x + 1.0) / (x - 1.0)).abs().ln();
            let got = hf.get(g.cell_of([x, 0.0]).unwrap());
            assert!((got - want).abs() < 10.0 * h, "x={x} got={got} want={want}");
        }
        assert!(hilbert(&GridFn::zeros(GridBox::new(2, 1.0, 4).unwrap())).is_err());
    }

    #[test]
    fn family_apply_examples() {
        let g = GridBox::new(2, 1.0, 12).unwrap();
        let f = GridFn::from_fn(g, |x| x[0] - x[1] * x[1]).unwrap();
        assert_eq!(family_apply(&OperatorFamily::Identity, 0.3, &f).unwrap(), f);
        let c = GridFn::constant(g, 4.0);
        let a = family_apply(&OperatorFamily::Averaging, 0.3, &c).unwrap();
        assert!(a.values().iter().all(|v| (v - 4.0).abs() < 1e-14));
        let one = GridFn::constant(g, 1.0);
        let hh = family_apply(&OperatorFamily::Heat, 0.4, &one).unwrap();
        assert!(hh.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(family_apply(&OperatorFamily::Heat, 0.0, &one).is_err());
    }

    #[test]
    fn extend_slicewise_examples() {
        let g = line(2.0, 64);
        let tl = crate::grid::TLevels::new(0.1, 1.0, 4).unwrap();
        let z = HalfSpaceFn::zeros(g, tl);
        let out = extend_slicewise(&OperatorFamily::Constant(BaseOperator::Maximal), &z).unwrap();
        assert!(out.is_zero());
        let big_f = HalfSpaceFn::from_fn(g, tl, |x, _| (-x[0] * x[0]).exp()).unwrap();
        let out =
            extend_slicewise(&OperatorFamily::Constant(BaseOperator::Maximal), &big_f).unwrap();
        let m0 = maximal(&big_f.slice_fn(0), &BallFamily::dyadic(g)).unwrap();
        for k in 0..4 {
            assert_eq!(out.slice(k), m0.values());
        }
        let ones = HalfSpaceFn::from_fn(g, tl, |_, _| 1.0).unwrap();
        let out = extend_slicewise(&OperatorFamily::Averaging, &ones).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn offdiag_identity_and_averaging() {
        let g = line(4.0, 256);
        let probes = vec![GridFn::constant(g, 1.0)];
        let geo: Vec<StripGeometry> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&gap| StripGeometry { gap, t: 0.25 })
            .collect();
        let p = offdiag_profile(&OperatorFamily::Identity, 2.0, &probes, &geo).unwrap();
        assert_eq!(p.points[0].ratio, 1.0);
        assert!(p.points[1..].iter().all(|q| q.ratio == 0.0));
        assert_eq!(p.fit, DecayFit::Unbounded);
        assert_eq!(p.fit.order(), Some(f64::INFINITY));

        let p = offdiag_profile(&OperatorFamily::Averaging, 2.0, &probes, &geo).unwrap();
        assert!(p
            .points
            .iter()
            .filter(|q| q.d > q.t)
            .all(|q| q.ratio == 0.0));

        let maxfam = OperatorFamily::Constant(BaseOperator::Maximal);
        assert!(matches!(
            offdiag_profile(&maxfam, 2.0, &probes, &geo),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn offdiag_heat_decays_fast() {
        let g = line(4.0, 1024);
        let t = 0.25;
        let probes = vec![
            GridFn::constant(g, 1.0),
            GridFn::indicator(g, |x| x[0] > -2.5 && x[0] < -1.0),
        ];
        let geo: Vec<StripGeometry> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&k| StripGeometry { gap: k * t, t })
            .collect();
        let p = offdiag_profile(&OperatorFamily::Heat, 2.0, &probes, &geo).unwrap();
        match p.fit {
            DecayFit::Fitted { order, .. } => assert!(order >= 5.0, "{order}"),
            other => panic!("{other:?}"),
        }
    }
}
