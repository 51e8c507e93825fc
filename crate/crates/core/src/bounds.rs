//! Bounds on the input-output map of a feed-forward network over a box.
//!
//! Two methods are provided: interval bound propagation (IBP) for the
//! layerwise pre-activation intervals, and CROWN backward propagation of
//! linear envelopes, which yields `A_lo x + b_lo <= N(x) <= A_up x + b_up`
//! on the input box. The two inclusion functions built from these envelopes
//! are [`inclusion_g`] (envelopes frozen on a box, evaluated on any sub-box)
//! and [`inclusion_h`] (envelopes recomputed on the queried box).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ReachError, Result};
use crate::interval::{signed_split, IntervalBox, SignedMatrixSplit};
use crate::network::{matrix_to_rows, Activation, FeedForwardNetwork};

/// Pre-activation intervals for every affine layer, the output layer last.
#[derive(Debug, Clone, PartialEq)]
pub struct PreActivationBounds {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

impl PreActivationBounds {
    /// Interval of the network output (the last affine layer).
    pub fn output_box(&self) -> IntervalBox {
        IntervalBox::new(
            self.lower.last().cloned().unwrap_or_default(),
            self.upper.last().cloned().unwrap_or_default(),
        )
        .expect("IBP output bounds are ordered")
    }
}

/// Interval image of `W a + b` for `a` in `[lo, hi]`, accumulated left to right.
fn interval_affine(w: &DMatrix<f64>, b: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut out_lo = Vec::with_capacity(w.nrows());
    let mut out_hi = Vec::with_capacity(w.nrows());
    for r in 0..w.nrows() {
        let mut s_lo = 0.0;
        let mut s_hi = 0.0;
        for c in 0..w.ncols() {
            let v = w[(r, c)];
            if v >= 0.0 {
                s_lo += v * lo[c];
                s_hi += v * hi[c];
            } else {
                s_lo += v * hi[c];
                s_hi += v * lo[c];
            }
        }
        out_lo.push(s_lo + b[r]);
        out_hi.push(s_hi + b[r]);
    }
    (out_lo, out_hi)
}

fn check_input(net: &FeedForwardNetwork, input: &IntervalBox) -> Result<()> {
    if input.dim() != net.input_dim() {
        return Err(ReachError::DimensionMismatch {
            what: "input box",
            expected: net.input_dim(),
            got: input.dim(),
        });
    }
    Ok(())
}

/// Interval bound propagation through every layer.
pub fn ibp_bounds(net: &FeedForwardNetwork, input: &IntervalBox) -> Result<PreActivationBounds> {
    check_input(net, input)?;
    let mut lower = Vec::with_capacity(net.hidden_layers().len() + 1);
    let mut upper = Vec::with_capacity(net.hidden_layers().len() + 1);
    let mut lo = input.lower().to_vec();
    let mut hi = input.upper().to_vec();
    for layer in net.hidden_layers() {
        let (zl, zu) = interval_affine(&layer.weight, &layer.bias, &lo, &hi);
        lo = zl.iter().map(|v| layer.activation.apply(*v)).collect();
        hi = zu.iter().map(|v| layer.activation.apply(*v)).collect();
        lower.push(zl);
        upper.push(zu);
    }
    let (ol, ou) = interval_affine(net.out_weight(), net.out_bias(), &lo, &hi);
    lower.push(ol);
    upper.push(ou);
    Ok(PreActivationBounds { lower, upper })
}

/// ReLU relaxation in slope/offset form:
/// `alpha_l (z + beta_l) <= relu(z) <= alpha_u (z + beta_u)` on `[L, U]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluRelaxation {
    pub alpha_u: f64,
    pub beta_u: f64,
    pub alpha_l: f64,
    pub beta_l: f64,
}

/// Lower-slope rule for unstable ReLU neurons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReluLowerSlope {
    /// Slope 1 when `U >= |L|`, else 0.
    #[default]
    Adaptive,
    Zero,
    One,
}

pub fn relu_relaxation(l: f64, u: f64) -> Result<ReluRelaxation> {
    relu_relaxation_with(l, u, ReluLowerSlope::Adaptive)
}

pub fn relu_relaxation_with(l: f64, u: f64, rule: ReluLowerSlope) -> Result<ReluRelaxation> {
    if l > u || l.is_nan() || u.is_nan() {
        return Err(ReachError::InvalidArgument(format!(
            "relaxation interval [{l}, {u}] is not ordered"
        )));
    }
    if u <= 0.0 {
        return Ok(ReluRelaxation {
            alpha_u: 0.0,
            beta_u: 0.0,
            alpha_l: 0.0,
            beta_l: 0.0,
        });
    }
    if l >= 0.0 {
        return Ok(ReluRelaxation {
            alpha_u: 1.0,
            beta_u: 0.0,
            alpha_l: 1.0,
            beta_l: 0.0,
        });
    }
    let alpha_l = match rule {
        ReluLowerSlope::Adaptive => {
            if u >= -l {
                1.0
            } else {
                0.0
            }
        }
        ReluLowerSlope::Zero => 0.0,
        ReluLowerSlope::One => 1.0,
    };
    Ok(ReluRelaxation {
        alpha_u: u / (u - l),
        beta_u: -l,
        alpha_l,
        beta_l: 0.0,
    })
}

/// A line `slope * z + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    fn tangent(act: Activation, z: f64) -> Line {
        let slope = act.derivative(z);
        Line {
            slope,
            intercept: act.apply(z) - slope * z,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.slope * z + self.intercept
    }
}

/// Per-neuron linear relaxations of one hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRelaxation {
    pub upper: Vec<Line>,
    pub lower: Vec<Line>,
}

/// Source of the intermediate pre-activation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntermediateBounds {
    #[default]
    Ibp,
    Crown,
}

/// Relaxation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationMode {
    /// CROWN's per-activation linear relaxations.
    #[default]
    Linear,
    /// Flat lines at the activation's endpoint values; backward propagation
    /// then reduces to interval bound propagation.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CrownOptions {
    #[serde(default)]
    pub intermediate: IntermediateBounds,
    #[serde(default)]
    pub relaxation: RelaxationMode,
    #[serde(default)]
    pub relu_lower: ReluLowerSlope,
}

impl CrownOptions {
    pub fn with_intermediate(mut self, intermediate: IntermediateBounds) -> Self {
        self.intermediate = intermediate;
        self
    }

    pub fn with_relaxation(mut self, relaxation: RelaxationMode) -> Self {
        self.relaxation = relaxation;
        self
    }

    pub fn with_relu_lower(mut self, rule: ReluLowerSlope) -> Self {
        self.relu_lower = rule;
        self
    }
}

/// Upper line of a function that is convex on `z <= 0` and concave on `z >= 0`.
fn s_shaped_upper(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, l: f64, u: f64) -> Line {
    let tangent = |d: f64| Line {
        slope: df(d),
        intercept: f(d) - df(d) * d,
    };
    if l >= 0.0 {
        return tangent(0.5 * (l + u));
    }
    let chord_slope = (f(u) - f(l)) / (u - l);
    let chord = Line {
        slope: chord_slope,
        intercept: f(l) - chord_slope * l,
    };
    if u <= 0.0 || df(u) >= chord_slope {
        return chord;
    }
    // tangent at d in [0, u] passing through (l, f(l)); keep the side that
    // stays above the left endpoint
    let gap = |d: f64| f(d) + df(d) * (l - d) - f(l);
    if gap(0.0) >= 0.0 {
        return tangent(0.0);
    }
    let (mut lo, mut hi) = (0.0, u);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    tangent(hi)
}

fn s_shaped_relaxation(act: Activation, l: f64, u: f64) -> (Line, Line) {
    if l == u {
        let t = Line::tangent(act, l);
        return (t, t);
    }
    let f = move |z: f64| act.apply(z);
    let df = move |z: f64| act.derivative(z);
    let upper = s_shaped_upper(&f, &df, l, u);
    // lower line of f on [l, u] is the reflected upper line of z -> -f(-z) on [-u, -l]
    let g = move |z: f64| -act.apply(-z);
    let dg = move |z: f64| act.derivative(-z);
    let reflected = s_shaped_upper(&g, &dg, -u, -l);
    let lower = Line {
        slope: reflected.slope,
        intercept: -reflected.intercept,
    };
    (upper, lower)
}

/// Linear relaxations of one layer given its pre-activation intervals.
pub fn layer_relaxation(
    act: Activation,
    lower: &[f64],
    upper: &[f64],
    opts: &CrownOptions,
) -> Result<LayerRelaxation> {
    let mut up = Vec::with_capacity(lower.len());
    let mut lo = Vec::with_capacity(lower.len());
    for (&l, &u) in lower.iter().zip(upper) {
        if l > u || l.is_nan() || u.is_nan() {
            return Err(ReachError::InvalidArgument(format!(
                "pre-activation interval [{l}, {u}] is not ordered"
            )));
        }
        let (a, b) = match (opts.relaxation, act) {
            (RelaxationMode::Constant, _) => (
                Line {
                    slope: 0.0,
                    intercept: act.apply(u),
                },
                Line {
                    slope: 0.0,
                    intercept: act.apply(l),
                },
            ),
            (RelaxationMode::Linear, Activation::Relu) => {
                let r = relu_relaxation_with(l, u, opts.relu_lower)?;
                (
                    Line {
                        slope: r.alpha_u,
                        intercept: r.alpha_u * r.beta_u,
                    },
                    Line {
                        slope: r.alpha_l,
                        intercept: r.alpha_l * r.beta_l,
                    },
                )
            }
            (RelaxationMode::Linear, Activation::Identity) => {
                let id = Line {
                    slope: 1.0,
                    intercept: 0.0,
                };
                (id, id)
            }
            (RelaxationMode::Linear, Activation::Sigmoid | Activation::Tanh) => {
                s_shaped_relaxation(act, l, u)
            }
        };
        up.push(a);
        lo.push(b);
    }
    Ok(LayerRelaxation {
        upper: up,
        lower: lo,
    })
}

/// Backward substitution of `coef * a_{m-1} + bias` through hidden layers
/// `m-1, ..., 0`. `upper` selects the bounding direction. Returns the
/// coefficient on the network input and the accumulated offset.
fn backward(
    net: &FeedForwardNetwork,
    relax: &[LayerRelaxation],
    mut coef: DMatrix<f64>,
    mut bias: Vec<f64>,
    upper: bool,
) -> (DMatrix<f64>, Vec<f64>) {
    let layers = net.hidden_layers();
    for j in (0..relax.len()).rev() {
        let rel = &relax[j];
        let layer = &layers[j];
        for r in 0..coef.nrows() {
            let mut t = 0.0;
            for c in 0..coef.ncols() {
                let v = coef[(r, c)];
                let line = if (v >= 0.0) == upper {
                    rel.upper[c]
                } else {
                    rel.lower[c]
                };
                t += v * line.intercept;
                coef[(r, c)] = v * line.slope;
            }
            bias[r] += t;
            let mut s = 0.0;
            for c in 0..coef.ncols() {
                s += coef[(r, c)] * layer.bias[c];
            }
            bias[r] += s;
        }
        coef = &coef * &layer.weight;
    }
    (coef, bias)
}

/// Minimum (or maximum) of `coef x + bias` over a box, left to right.
fn concretize(coef: &DMatrix<f64>, bias: &[f64], b: &IntervalBox, upper: bool) -> Vec<f64> {
    (0..coef.nrows())
        .map(|r| {
            let mut s = 0.0;
            for c in 0..coef.ncols() {
                let v = coef[(r, c)];
                s += if (v >= 0.0) == upper {
                    v * b.upper()[c]
                } else {
                    v * b.lower()[c]
                };
            }
            s + bias[r]
        })
        .collect()
}

/// A-priori bound on the rounding error of an envelope whose sums were
/// reordered by backward substitution, for the map `coef a_m + bias` after
/// the first `m` hidden layers. Built from the absolute-value network
/// `a -> |W| a + |b|` on the largest input magnitudes, which dominates every
/// term summed along the way (relaxation slopes are in [0, 1]).
fn rounding_margin(
    net: &FeedForwardNetwork,
    m: usize,
    coef: &DMatrix<f64>,
    bias: &[f64],
    input: &IntervalBox,
) -> Vec<f64> {
    let mut a: Vec<f64> = input
        .lower()
        .iter()
        .zip(input.upper())
        .map(|(l, u)| l.abs().max(u.abs()))
        .collect();
    let mut terms = input.dim();
    let abs_affine = |w: &DMatrix<f64>, b: &[f64], a: &[f64]| -> Vec<f64> {
        (0..w.nrows())
            .map(|r| (0..w.ncols()).map(|c| w[(r, c)].abs() * a[c]).sum::<f64>() + b[r].abs())
            .collect()
    };
    for layer in &net.hidden_layers()[..m] {
        a = abs_affine(&layer.weight, &layer.bias, &a);
        if matches!(layer.activation, Activation::Sigmoid) {
            a.iter_mut().for_each(|v| *v = v.max(1.0));
        }
        terms += layer.weight.nrows();
    }
    // each layer contributes one dot product per sum, in the envelope and in
    // forward evaluation alike: error <= (length + 1) u |terms| per layer
    let gamma = 2.0 * (terms + m + 2) as f64 * f64::EPSILON;
    abs_affine(coef, bias, &a).into_iter().map(|v| gamma * v).collect()
}

fn widen(lower: &mut [f64], upper: &mut [f64], margin: &[f64]) {
    for ((l, u), e) in lower.iter_mut().zip(upper.iter_mut()).zip(margin) {
        *l -= e;
        *u += e;
    }
}

/// Intermediate bounds and relaxations for every hidden layer.
fn hidden_relaxations(
    net: &FeedForwardNetwork,
    input: &IntervalBox,
    opts: &CrownOptions,
) -> Result<Vec<LayerRelaxation>> {
    let layers = net.hidden_layers();
    match opts.intermediate {
        IntermediateBounds::Ibp => {
            let pre = ibp_bounds(net, input)?;
            layers
                .iter()
                .enumerate()
                .map(|(i, l)| layer_relaxation(l.activation, &pre.lower[i], &pre.upper[i], opts))
                .collect()
        }
        IntermediateBounds::Crown => {
            let mut relax: Vec<LayerRelaxation> = Vec::with_capacity(layers.len());
            for (m, layer) in layers.iter().enumerate() {
                let (lo, up) = if m == 0 {
                    interval_affine(&layer.weight, &layer.bias, input.lower(), input.upper())
                } else {
                    let (cu, bu) = backward(
                        net,
                        &relax,
                        layer.weight.clone(),
                        layer.bias.clone(),
                        true,
                    );
                    let (cl, bl) = backward(
                        net,
                        &relax,
                        layer.weight.clone(),
                        layer.bias.clone(),
                        false,
                    );
                    let mut lo = concretize(&cl, &bl, input, false);
                    let mut up = concretize(&cu, &bu, input, true);
                    if opts.relaxation == RelaxationMode::Linear {
                        widen(&mut lo, &mut up, &rounding_margin(net, m, &layer.weight, &layer.bias, input));
                    }
                    (lo, up)
                };
                relax.push(layer_relaxation(layer.activation, &lo, &up, opts)?);
            }
            Ok(relax)
        }
    }
}

/// Linear envelopes of a network on `valid_on`, with cached sign splits.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBounds {
    a_lower: DMatrix<f64>,
    b_lower: Vec<f64>,
    a_upper: DMatrix<f64>,
    b_upper: Vec<f64>,
    valid_on: IntervalBox,
    split_lower: SignedMatrixSplit,
    split_upper: SignedMatrixSplit,
}

impl LinearBounds {
    pub fn new(
        a_lower: DMatrix<f64>,
        b_lower: Vec<f64>,
        a_upper: DMatrix<f64>,
        b_upper: Vec<f64>,
        valid_on: IntervalBox,
    ) -> Result<Self> {
        let n = valid_on.dim();
        let p = b_lower.len();
        if a_lower.shape() != (p, n) || a_upper.shape() != (p, n) || b_upper.len() != p {
            return Err(ReachError::InvalidArgument(format!(
                "linear bound shapes disagree: A_lower {:?}, A_upper {:?}, b lengths {} and {}, input dim {n}",
                a_lower.shape(),
                a_upper.shape(),
                p,
                b_upper.len()
            )));
        }
        let split_lower = signed_split(&a_lower);
        let split_upper = signed_split(&a_upper);
        Ok(Self {
            a_lower,
            b_lower,
            a_upper,
            b_upper,
            valid_on,
            split_lower,
            split_upper,
        })
    }

    pub fn a_lower(&self) -> &DMatrix<f64> {
        &self.a_lower
    }

    pub fn b_lower(&self) -> &[f64] {
        &self.b_lower
    }

    pub fn a_upper(&self) -> &DMatrix<f64> {
        &self.a_upper
    }

    pub fn b_upper(&self) -> &[f64] {
        &self.b_upper
    }

    pub fn valid_on(&self) -> &IntervalBox {
        &self.valid_on
    }

    pub fn output_dim(&self) -> usize {
        self.b_lower.len()
    }

    /// Evaluation of both envelopes at `(eta, etahat)` without the
    /// containment check.
    pub(crate) fn eval(&self, eta: &[f64], etahat: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.output_dim();
        let mut lower = Vec::with_capacity(p);
        let mut upper = Vec::with_capacity(p);
        for r in 0..p {
            let mut sl = 0.0;
            let mut su = 0.0;
            for c in 0..eta.len() {
                sl += self.split_lower.plus[(r, c)] * eta[c]
                    + self.split_lower.minus[(r, c)] * etahat[c];
                su += self.split_upper.plus[(r, c)] * etahat[c]
                    + self.split_upper.minus[(r, c)] * eta[c];
            }
            lower.push(sl + self.b_lower[r]);
            upper.push(su + self.b_upper[r]);
        }
        (lower, upper)
    }

    /// Output box over the whole validity box.
    pub fn output_box(&self) -> IntervalBox {
        let (l, u) = self.eval(self.valid_on.lower(), self.valid_on.upper());
        IntervalBox::new(l, u).expect("envelopes are ordered on their box")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "valid_on": {"lower": self.valid_on.lower(), "upper": self.valid_on.upper()},
            "A_lower": matrix_to_rows(&self.a_lower),
            "b_lower": self.b_lower,
            "A_upper": matrix_to_rows(&self.a_upper),
            "b_upper": self.b_upper,
        })
    }
}

/// CROWN linear envelopes of `net` on `input`.
pub fn crown_bounds(
    net: &FeedForwardNetwork,
    input: &IntervalBox,
    opts: &CrownOptions,
) -> Result<LinearBounds> {
    check_input(net, input)?;
    let relax = hidden_relaxations(net, input, opts)?;
    let (a_upper, b_upper) = backward(
        net,
        &relax,
        net.out_weight().clone(),
        net.out_bias().to_vec(),
        true,
    );
    let (a_lower, b_lower) = backward(
        net,
        &relax,
        net.out_weight().clone(),
        net.out_bias().to_vec(),
        false,
    );
    let (mut b_lower, mut b_upper) = (b_lower, b_upper);
    // constant relaxations keep IBP's summation order, which rounding cannot break
    if opts.relaxation == RelaxationMode::Linear && !relax.is_empty() {
        let k = net.hidden_layers().len();
        let margin = rounding_margin(net, k, net.out_weight(), net.out_bias(), input);
        widen(&mut b_lower, &mut b_upper, &margin);
    }
    LinearBounds::new(a_lower, b_lower, a_upper, b_upper, input.clone())
}

fn check_sub_box(lb: &LinearBounds, eta: &[f64], etahat: &[f64]) -> Result<()> {
    let n = lb.valid_on.dim();
    if eta.len() != n || etahat.len() != n {
        return Err(ReachError::DimensionMismatch {
            what: "inclusion function argument",
            expected: n,
            got: eta.len().min(etahat.len()),
        });
    }
    for i in 0..n {
        if eta[i] > etahat[i] {
            return Err(ReachError::OrderingViolation {
                coord: i,
                lower: eta[i],
                upper: etahat[i],
            });
        }
        if eta[i] < lb.valid_on.lower()[i] || etahat[i] > lb.valid_on.upper()[i] {
            return Err(ReachError::InvalidArgument(format!(
                "sub-box coordinate {i} [{}, {}] is not inside the validity box [{}, {}]",
                eta[i],
                etahat[i],
                lb.valid_on.lower()[i],
                lb.valid_on.upper()[i]
            )));
        }
    }
    Ok(())
}

/// Inclusion function built from envelopes frozen on `lb.valid_on()`,
/// evaluated on the sub-box `[eta, etahat]`.
pub fn inclusion_g(lb: &LinearBounds, eta: &[f64], etahat: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_sub_box(lb, eta, etahat)?;
    Ok(lb.eval(eta, etahat))
}

/// Inclusion function that recomputes the envelopes on `[x, xhat]`.
pub fn inclusion_h(
    net: &FeedForwardNetwork,
    x: &[f64],
    xhat: &[f64],
    opts: &CrownOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = IntervalBox::new(x.to_vec(), xhat.to_vec())?;
    let lb = crown_bounds(net, &b, opts)?;
    Ok(lb.eval(x, xhat))
}
