//! The error-bound engine: single-spline interpolation bounds, knot-error
//! correction, Lipschitz and error division across layers, and their
//! composition into a distance-aware worst-case bound for a whole network.
//!
//! Queries run against a [`DarekQuery`] object that precomputes, per layer
//! and per input unit, the sorted images of the training abscissae together
//! with the divided knot errors and the Newton fit of each error stencil.
//! Building the object is a one-off linear pass; each query then costs one
//! forward pass plus a binary search per spline.

use crate::error::Error;
use crate::factorial;
use crate::kan::{Dataset, KanNetwork};
use crate::poly::{self, KnotSet, NewtonPoly, SamplePoints, KNOT_DEDUP_REL_TOL};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};

/// Absolute tolerance under which intermediate knot images are merged.
pub const IMAGE_MERGE_ABS_TOL: f64 = 1e-9;

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Worst-case interpolation error of the order-`order` Newton stencil at `x`:
/// `lk1 / (order+1)! * |prod (x - tau_i)|` over the stencil chosen by
/// segment search. Zero exactly at stencil knots, growing with the distance
/// from them.
pub fn interp_bound(knots: &KnotSet, x: f64, order: usize, lk1: f64) -> Result<f64, Error> {
    if knots.len() < order + 1 {
        return Err(Error::InsufficientKnots {
            required: order + 1,
            actual: knots.len(),
        });
    }
    let j = poly::locate_segment(knots, x, order);
    let ks = knots.as_slice();
    let mut product = 1.0;
    for &tau in &ks[j..=j + order] {
        product *= x - tau;
    }
    Ok(lk1 / factorial(order + 1) * product.abs())
}

/// Interpolation bound plus the magnitude of the Newton polynomial fitted to
/// the stencil's knot errors; the spline bound when the fit misses the knots.
pub fn knot_error_bound(
    knots: &KnotSet,
    knot_errors: &[f64],
    x: f64,
    order: usize,
    lk1: f64,
) -> Result<f64, Error> {
    if knot_errors.len() != knots.len() {
        return Err(Error::ShapeMismatch {
            context: "knot errors",
            expected: knots.len(),
            actual: knot_errors.len(),
        });
    }
    let base = interp_bound(knots, x, order, lk1)?;
    let j = poly::locate_segment(knots, x, order);
    let stencil = SamplePoints::from_slices(
        &knots.as_slice()[j..=j + order],
        &knot_errors[j..=j + order],
    )?;
    let error_poly = poly::newton_fit(&stencil);
    Ok(base + error_poly.eval(x).abs())
}

/// Equal division of a knot error between a layer and each of its `fan_in`
/// inputs: every part receives `|e_f| / (1 + fan_in * l1_h)`.
pub fn divide_errors(e_f: f64, fan_in: usize, l1_h: f64) -> f64 {
    assert!(fan_in >= 1, "fan-in starts at 1");
    assert!(l1_h >= 0.0, "Lipschitz constants are nonnegative");
    e_f.abs() / (1.0 + fan_in as f64 * l1_h)
}

/// Equal division of a network Lipschitz constant: each of `n_layers` layers
/// receives the `n_layers`-th root.
pub fn divide_lipschitz(l_f: f64, n_layers: usize) -> f64 {
    assert!(n_layers >= 1, "need at least one layer");
    assert!(l_f >= 0.0, "Lipschitz constants are nonnegative");
    if n_layers == 1 {
        l_f
    } else {
        l_f.powf(1.0 / n_layers as f64)
    }
}

/// Two-layer composition: `u_h + l1_h * sum(u_g)`.
pub fn two_layer_bound(u_h: f64, l1_h: f64, u_g: &[f64]) -> f64 {
    u_h + l1_h * u_g.iter().sum::<f64>()
}

/// L-layer composition: the final layer's summed bound plus every earlier
/// layer's summed bound amplified by the product of the later layers' 1st
/// order Lipschitz constants. Reduces to [`two_layer_bound`] for two layers.
pub fn multi_layer_bound(per_layer_u: &[Vec<f64>], per_layer_l1: &[f64]) -> f64 {
    assert_eq!(
        per_layer_u.len(),
        per_layer_l1.len(),
        "one Lipschitz constant per layer"
    );
    let n = per_layer_u.len();
    assert!(n >= 1, "need at least one layer");
    let mut total = per_layer_u[n - 1].iter().sum::<f64>();
    for l in 0..n - 1 {
        let mut mult = 1.0;
        for &l1 in &per_layer_l1[l + 1..n] {
            mult *= l1;
        }
        total += per_layer_u[l].iter().sum::<f64>() * mult;
    }
    total
}

/// Network-level Lipschitz constants and their equal division across layers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzBudget {
    l1_f: f64,
    lk1_f: f64,
    order: usize,
    n_layers: usize,
    per_layer_l1: Vec<f64>,
    per_layer_lk1: Vec<f64>,
}

impl LipschitzBudget {
    pub fn new(l1_f: f64, lk1_f: f64, order: usize, n_layers: usize) -> Self {
        let l1 = divide_lipschitz(l1_f, n_layers);
        let lk1 = divide_lipschitz(lk1_f, n_layers);
        Self {
            l1_f,
            lk1_f,
            order,
            n_layers,
            per_layer_l1: vec![l1; n_layers],
            per_layer_lk1: vec![lk1; n_layers],
        }
    }

    pub fn l1_f(&self) -> f64 {
        self.l1_f
    }

    pub fn lk1_f(&self) -> f64 {
        self.lk1_f
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn per_layer_l1(&self) -> &[f64] {
        &self.per_layer_l1
    }

    pub fn per_layer_lk1(&self) -> &[f64] {
        &self.per_layer_lk1
    }
}

/// Sorted knot images with divided errors for every spline reading one input
/// unit of one layer, or the conservative fallback when the images collapse.
#[derive(Debug, Clone)]
enum UnitTable {
    Regular {
        abscissae: KnotSet,
        errors: Vec<f64>,
        /// Newton fit of the stencil errors, one per segment.
        segment_polys: Vec<NewtonPoly>,
    },
    Degenerate {
        images: Vec<f64>,
        interp_fallback: f64,
        error_fallback: f64,
        label: String,
    },
}

#[derive(Debug, Clone)]
struct LayerTable {
    n_out: usize,
    lk1: f64,
    /// Product of the 1st-order constants of all later layers.
    multiplier: f64,
    units: Vec<UnitTable>,
}

/// Per-layer pieces of a bound query, in report form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerContribution {
    /// Summed worst-case interpolation terms of the layer's splines.
    pub interp_term: f64,
    /// Summed knot-error polynomial magnitudes of the layer's splines.
    pub knot_error_term: f64,
    /// Amplification applied to this layer by the layers above it.
    pub lipschitz_multiplier: f64,
}

/// Full account of one bound query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub x_star: Vec<f64>,
    pub prediction: f64,
    pub total_bound: f64,
    pub per_layer: Vec<LayerContribution>,
    /// Abscissae anchoring each layer's bound, per input unit.
    pub knot_images_used: Vec<Vec<Vec<f64>>>,
    /// Splines that fell back to the conservative constant bound.
    pub degenerate_fallbacks: Vec<String>,
}

impl BoundReport {
    pub fn lo(&self) -> f64 {
        self.prediction - self.total_bound
    }

    pub fn hi(&self) -> f64 {
        self.prediction + self.total_bound
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Segment-search instrumentation for one query.
#[derive(Debug, Clone, Default)]
pub struct QueryStats {
    /// `(comparisons, budget)` per spline table consulted, where budget is
    /// `ceil(log2(m)) + 1` for that table's knot count.
    pub per_spline: Vec<(u32, u32)>,
}

impl QueryStats {
    pub fn all_within_budget(&self) -> bool {
        self.per_spline.iter().all(|&(c, b)| c <= b)
    }

    pub fn max_comparisons(&self) -> u32 {
        self.per_spline.iter().map(|&(c, _)| c).max().unwrap_or(0)
    }
}

/// Immutable query object: a trained network plus the precomputed error
/// tables. Queries are pure reads and safe to run concurrently.
#[derive(Debug, Clone)]
pub struct DarekQuery {
    net: KanNetwork,
    budget: LipschitzBudget,
    layers: Vec<LayerTable>,
}

impl DarekQuery {
    /// Precomputes the query tables: signed knot errors of the trained net on
    /// `data`, their division across layers, the image of every training
    /// abscissa under the earlier layers, and the Newton fit of each error
    /// stencil.
    pub fn build(
        net: &KanNetwork,
        data: &Dataset,
        budget: &LipschitzBudget,
    ) -> Result<Self, Error> {
        if net.n_out() != 1 {
            return Err(Error::ShapeMismatch {
                context: "bounded network output width",
                expected: 1,
                actual: net.n_out(),
            });
        }
        if budget.n_layers != net.n_layers() {
            return Err(Error::ShapeMismatch {
                context: "budget layer count",
                expected: net.n_layers(),
                actual: budget.n_layers,
            });
        }
        let n_layers = net.n_layers();
        let order = budget.order;

        // signed knot errors e_f = y - f_hat and per-sample traces
        let mut errors_f = Vec::with_capacity(data.len());
        let mut traces = Vec::with_capacity(data.len());
        for (x, y) in data.inputs().iter().zip(data.targets()) {
            if y.len() != 1 {
                return Err(Error::ShapeMismatch {
                    context: "bounded target width",
                    expected: 1,
                    actual: y.len(),
                });
            }
            let (out, trace) = net.forward(x)?;
            errors_f.push(y[0] - out[0]);
            traces.push(trace);
        }

        // divide the knot error among layers, top down: each division splits
        // the remaining budget between a layer's splines and everything below
        let mut layer_errors: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
        let mut part = errors_f;
        for l in (0..n_layers).rev() {
            if l == 0 {
                layer_errors[0] = part.clone();
            } else {
                let fan_in = net.layers()[l].n_in();
                let l1 = budget.per_layer_l1[l];
                let divided: Vec<f64> = part
                    .iter()
                    .map(|&e| sign(e) * divide_errors(e, fan_in, l1))
                    .collect();
                layer_errors[l] = divided.clone();
                part = divided;
            }
        }

        let mut layers = Vec::with_capacity(n_layers);
        for (l, layer) in net.layers().iter().enumerate() {
            let mut multiplier = 1.0;
            for &l1 in &budget.per_layer_l1[l + 1..] {
                multiplier *= l1;
            }
            let weight = 1.0 / layer.n_in() as f64;
            let mut units = Vec::with_capacity(layer.n_in());
            for j in 0..layer.n_in() {
                let pairs: Vec<(f64, f64)> = traces
                    .iter()
                    .zip(&layer_errors[l])
                    .map(|(trace, &e)| (trace.values[l][j], e * weight))
                    .collect();
                units.push(build_unit_table(
                    pairs,
                    order,
                    budget.per_layer_lk1[l],
                    format!("layer {} input {}", l + 1, j + 1),
                )?);
            }
            layers.push(LayerTable {
                n_out: layer.n_out(),
                lk1: budget.per_layer_lk1[l],
                multiplier,
                units,
            });
        }

        Ok(Self {
            net: net.clone(),
            budget: budget.clone(),
            layers,
        })
    }

    pub fn net(&self) -> &KanNetwork {
        &self.net
    }

    pub fn budget(&self) -> &LipschitzBudget {
        &self.budget
    }

    /// Sorted knot images and the signed divided errors anchoring the bound
    /// of the splines that read input unit `j` of layer `l` (0-based).
    /// `None` when that unit fell back to the degenerate constant bound.
    pub fn knot_error_table(&self, layer: usize, input_unit: usize) -> Option<(&[f64], &[f64])> {
        match &self.layers[layer].units[input_unit] {
            UnitTable::Regular {
                abscissae, errors, ..
            } => Some((abscissae.as_slice(), errors)),
            UnitTable::Degenerate { .. } => None,
        }
    }

    /// Image abscissae of the unit regardless of degeneracy.
    pub fn knot_images(&self, layer: usize, input_unit: usize) -> Vec<f64> {
        match &self.layers[layer].units[input_unit] {
            UnitTable::Regular { abscissae, .. } => abscissae.as_slice().to_vec(),
            UnitTable::Degenerate { images, .. } => images.clone(),
        }
    }

    /// Labels of the units that use the degenerate fallback.
    pub fn degenerate_units(&self) -> Vec<String> {
        self.layers
            .iter()
            .flat_map(|layer| layer.units.iter())
            .filter_map(|unit| match unit {
                UnitTable::Degenerate { label, .. } => Some(label.clone()),
                UnitTable::Regular { .. } => None,
            })
            .collect()
    }

    /// Prediction and total worst-case bound at `x`, the lean query path.
    pub fn bound(&self, x: &[f64]) -> Result<(f64, f64), Error> {
        let (prediction, total, _, _) = self.evaluate(x, None)?;
        Ok((prediction, total))
    }

    /// Lean query with segment-search instrumentation.
    pub fn bound_with_stats(&self, x: &[f64]) -> Result<((f64, f64), QueryStats), Error> {
        let mut stats = QueryStats::default();
        let (prediction, total, _, _) = self.evaluate(x, Some(&mut stats))?;
        Ok(((prediction, total), stats))
    }

    /// Full report with per-layer terms and the image sets used.
    pub fn report(&self, x: &[f64]) -> Result<BoundReport, Error> {
        let (prediction, total_bound, per_layer, degenerate) = self.evaluate(x, None)?;
        let knot_images_used = self
            .layers
            .iter()
            .map(|layer| {
                layer
                    .units
                    .iter()
                    .map(|unit| match unit {
                        UnitTable::Regular { abscissae, .. } => abscissae.as_slice().to_vec(),
                        UnitTable::Degenerate { images, .. } => images.clone(),
                    })
                    .collect()
            })
            .collect();
        Ok(BoundReport {
            x_star: x.to_vec(),
            prediction,
            total_bound,
            per_layer,
            knot_images_used,
            degenerate_fallbacks: degenerate,
        })
    }

    fn evaluate(
        &self,
        x: &[f64],
        mut stats: Option<&mut QueryStats>,
    ) -> Result<(f64, f64, Vec<LayerContribution>, Vec<String>), Error> {
        let (out, trace) = self.net.forward(x)?;
        let order = self.budget.order;
        let mut per_layer_u = Vec::with_capacity(self.layers.len());
        let mut contributions = Vec::with_capacity(self.layers.len());
        let mut degenerate = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut interp_sum = 0.0;
            let mut knot_sum = 0.0;
            for (j, unit) in layer.units.iter().enumerate() {
                let value = trace.values[l][j];
                match unit {
                    UnitTable::Regular {
                        abscissae,
                        segment_polys,
                        ..
                    } => {
                        let (seg, comparisons) =
                            poly::locate_segment_counted(abscissae, value, order);
                        if let Some(s) = stats.as_deref_mut() {
                            let budget = (abscissae.len() as f64).log2().ceil() as u32 + 1;
                            s.per_spline.push((comparisons, budget));
                        }
                        let ks = abscissae.as_slice();
                        let mut product = 1.0;
                        for &tau in &ks[seg..=seg + order] {
                            product *= value - tau;
                        }
                        interp_sum += layer.lk1 / factorial(order + 1) * product.abs();
                        knot_sum += segment_polys[seg].eval(value).abs();
                    }
                    UnitTable::Degenerate {
                        interp_fallback,
                        error_fallback,
                        label,
                        ..
                    } => {
                        interp_sum += interp_fallback;
                        knot_sum += error_fallback;
                        degenerate.push(label.clone());
                    }
                }
            }
            let unit_value = interp_sum + knot_sum;
            per_layer_u.push(vec![unit_value; layer.n_out]);
            contributions.push(LayerContribution {
                interp_term: layer.n_out as f64 * interp_sum,
                knot_error_term: layer.n_out as f64 * knot_sum,
                lipschitz_multiplier: layer.multiplier,
            });
        }
        let total = multi_layer_bound(&per_layer_u, self.budget.per_layer_l1());
        Ok((out[0], total, contributions, degenerate))
    }
}

/// Sorts and merges the image/error pairs of one input unit and precomputes
/// its per-segment error polynomials; collapses to the flagged conservative
/// fallback when fewer than `order + 1` distinct images remain.
fn build_unit_table(
    mut pairs: Vec<(f64, f64)>,
    order: usize,
    lk1: f64,
    label: String,
) -> Result<UnitTable, Error> {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let span = pairs[pairs.len() - 1].0 - pairs[0].0;
    // merge tolerance: 1e-9 absolute, widened if the knot distinctness rule
    // needs more room on wide ranges
    let tol = IMAGE_MERGE_ABS_TOL.max(2.0 * KNOT_DEDUP_REL_TOL * span.abs().max(1.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (x, e) in pairs {
        match merged.last_mut() {
            Some((last_x, last_e)) if x - *last_x < tol => {
                if e.abs() > last_e.abs() {
                    *last_e = e;
                }
            }
            _ => merged.push((x, e)),
        }
    }
    if merged.len() < order + 1 {
        let images: Vec<f64> = merged.iter().map(|p| p.0).collect();
        let max_error = merged.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let range = images[images.len() - 1] - images[0];
        let interp_fallback =
            lk1 * (range / 2.0).powi(order as i32 + 1).abs() / factorial(order + 1);
        return Ok(UnitTable::Degenerate {
            images,
            interp_fallback,
            error_fallback: max_error,
            label,
        });
    }
    let abscissae = KnotSet::new(merged.iter().map(|p| p.0).collect())?;
    let errors: Vec<f64> = merged.iter().map(|p| p.1).collect();
    let mut segment_polys = Vec::with_capacity(merged.len() - order);
    for j in 0..merged.len() - order {
        let stencil = SamplePoints::from_slices(
            &abscissae.as_slice()[j..=j + order],
            &errors[j..=j + order],
        )?;
        segment_polys.push(poly::newton_fit(&stencil));
    }
    Ok(UnitTable::Regular {
        abscissae,
        errors,
        segment_polys,
    })
}

/// One-shot query: builds the tables and reports the bound at `x_star`.
/// Batch callers should build a [`DarekQuery`] once instead.
pub fn darek_query(
    net: &KanNetwork,
    data: &Dataset,
    budget: &LipschitzBudget,
    x_star: &[f64],
) -> Result<BoundReport, Error> {
    DarekQuery::build(net, data, budget)?.report(x_star)
}

/// Reads query points from CSV with a header of `x` (one dimension) or
/// `x0,x1,...`. Malformed rows are reported with their line number.
pub fn read_points_csv<R: Read>(input: R, dims: usize) -> Result<Vec<Vec<f64>>, Error> {
    let reader = BufReader::new(input);
    let mut points = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if idx == 0 {
            let cols = line.split(',').count();
            if cols != dims {
                return Err(Error::Malformed {
                    line: line_no,
                    message: format!("expected {dims} coordinate columns, found {cols}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dims {
            return Err(Error::Malformed {
                line: line_no,
                message: format!("expected {dims} fields, found {}", fields.len()),
            });
        }
        let mut row = Vec::with_capacity(dims);
        for field in fields {
            let value: f64 = field.trim().parse().map_err(|_| Error::Malformed {
                line: line_no,
                message: format!("not a number: {field:?}"),
            })?;
            row.push(value);
        }
        points.push(row);
    }
    Ok(points)
}

/// Evaluates the query at each point and writes CSV columns
/// `x..., prediction, bound, lo, hi`.
pub fn write_batch_csv<W: Write>(
    query: &DarekQuery,
    points: &[Vec<f64>],
    mut out: W,
) -> Result<(), Error> {
    let dims = query.net().n_in();
    if dims == 1 {
        write!(out, "x")?;
    } else {
        for d in 0..dims {
            if d > 0 {
                write!(out, ",")?;
            }
            write!(out, "x{d}")?;
        }
    }
    writeln!(out, ",prediction,bound,lo,hi")?;
    for point in points {
        let (prediction, bound) = query.bound(point)?;
        let coords: Vec<String> = point.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            coords.join(","),
            prediction,
            bound,
            prediction - bound,
            prediction + bound
        )?;
    }
    Ok(())
}
