//! Piecewise-exponential tangent envelopes.
//!
//! Given sorted nodes `s_1 < ... < s_m` inside the support of a log-concave
//! target, the hull `W(x) = min_i w_i(x)` of the tangent lines
//! `w_i(x) = V(s_i) + V'(s_i) (x - s_i)` dominates `V`. The proposal
//! `q(x) = exp(W(x))` is a sequence of exponential pieces whose areas are
//! known in closed form, so it can be normalized and sampled exactly.
//!
//! All areas are kept in log space.

use std::io::{self, Write};

use rand::distr::{Distribution, Open01};
use rand::Rng;

use crate::error::{Error, Result};
use crate::target::{LogConcaveTarget, Support};

/// Minimum absolute gap between two nodes.
pub const DEDUP_EPSILON: f64 = 1e-9;

/// Consecutive tangents whose slopes differ by less than this are parallel.
pub const SLOPE_EPSILON: f64 = 1e-12;

/// Below this `|slope * width|` a piece is integrated as a flat segment.
pub const FLAT_PIECE_THRESHOLD: f64 = 1e-12;

/// Numerically stable `log(sum(exp(xs)))`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Sorted, well-separated node abscissas.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    nodes: Vec<f64>,
}

impl SupportSet {
    /// Sorts `nodes` and checks they form a usable support set for `target`:
    /// at least two finite interior nodes, pairwise further apart than
    /// [`DEDUP_EPSILON`], with tangents that slope toward any unbounded tail.
    pub fn new<T>(mut nodes: Vec<f64>, target: &T) -> Result<Self>
    where
        T: LogConcaveTarget + ?Sized,
    {
        let support = target.support();
        if let Some(&bad) = nodes.iter().find(|&&x| !support.is_interior(x)) {
            return Err(Error::OutsideSupport {
                x: bad,
                lower: support.lower,
                upper: support.upper,
            });
        }
        nodes.sort_by(f64::total_cmp);
        let set = SupportSet { nodes };
        set.validate_spacing()?;
        check_proper(target, set.first(), set.last())?;
        Ok(set)
    }

    fn validate_spacing(&self) -> Result<()> {
        if self.nodes.len() < 2 {
            return Err(Error::InvalidSupportSet(format!(
                "need at least 2 nodes, got {}",
                self.nodes.len()
            )));
        }
        for w in self.nodes.windows(2) {
            if w[1] - w[0] <= DEDUP_EPSILON {
                return Err(Error::InvalidSupportSet(format!(
                    "nodes {} and {} are closer than {DEDUP_EPSILON}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index of the node closest to `x`. Ties go to the smaller node.
    pub fn closest(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&s| s < x);
        if i == 0 {
            return 0;
        }
        if i == self.nodes.len() {
            return i - 1;
        }
        if x - self.nodes[i - 1] <= self.nodes[i] - x {
            i - 1
        } else {
            i
        }
    }

    /// Inserts `x` in order. Returns `false` (and leaves the set untouched)
    /// when `x` is within [`DEDUP_EPSILON`] of an existing node.
    pub fn insert(&mut self, x: f64) -> bool {
        let i = self.nodes.partition_point(|&s| s < x);
        let too_close = |j: usize| {
            self.nodes
                .get(j)
                .is_some_and(|&s| (s - x).abs() <= DEDUP_EPSILON)
        };
        if too_close(i) || (i > 0 && too_close(i - 1)) {
            return false;
        }
        self.nodes.insert(i, x);
        true
    }

    /// Whether node `index` can become `x` with the set staying sorted and separated.
    pub fn can_replace(&self, index: usize, x: f64) -> bool {
        let lo_ok = index == 0 || x - self.nodes[index - 1] > DEDUP_EPSILON;
        let hi_ok = index + 1 == self.nodes.len() || self.nodes[index + 1] - x > DEDUP_EPSILON;
        lo_ok && hi_ok && x.is_finite()
    }

    /// The set with node `index` replaced by `x`, or `None` when the result
    /// would not stay sorted and separated.
    pub fn with_replaced(&self, index: usize, x: f64) -> Option<SupportSet> {
        if !self.can_replace(index, x) {
            return None;
        }
        let mut nodes = self.nodes.clone();
        nodes[index] = x;
        Some(SupportSet { nodes })
    }
}

/// A proper envelope needs the outermost tangents to slope toward unbounded tails.
fn check_proper<T>(target: &T, first: f64, last: f64) -> Result<()>
where
    T: LogConcaveTarget + ?Sized,
{
    let support = target.support();
    if support.lower == f64::NEG_INFINITY {
        let d = target.log_density_derivative(first);
        if !(d > 0.0) {
            return Err(Error::ImproperProposal(format!(
                "left tail unbounded but V'({first}) = {d} is not positive"
            )));
        }
    }
    if support.upper == f64::INFINITY {
        let d = target.log_density_derivative(last);
        if !(d < 0.0) {
            return Err(Error::ImproperProposal(format!(
                "right tail unbounded but V'({last}) = {d} is not negative"
            )));
        }
    }
    Ok(())
}

/// One exponential piece `exp(w(x))` on `(left, right]`, where `w` is the
/// tangent line through `(node, node_value)` with the given slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub node: f64,
    pub node_value: f64,
    pub slope: f64,
    pub left: f64,
    pub right: f64,
    pub log_area: f64,
    /// `1 - exp(-|slope| (right - left))`, reused by [`Piece::sample`].
    span: f64,
}

impl Piece {
    /// Piece for the line `log_offset + slope * x` on `(left, right]`.
    pub fn from_line(slope: f64, log_offset: f64, left: f64, right: f64) -> Result<Self> {
        Piece::new(0.0, log_offset, slope, left, right)
    }

    fn new(node: f64, node_value: f64, slope: f64, left: f64, right: f64) -> Result<Self> {
        if !(left < right) {
            return Err(Error::InvalidArgument(format!(
                "piece interval ({left}, {right}] is empty"
            )));
        }
        let (log_area, span) = line_area(node, node_value, slope, slope.abs().ln(), left, right)?;
        Ok(Piece {
            node,
            node_value,
            slope,
            left,
            right,
            log_area,
            span,
        })
    }

    /// Intercept `a` of the line `a + b x`.
    pub fn log_offset(&self) -> f64 {
        self.node_value - self.slope * self.node
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.node_value + self.slope * (x - self.node)
    }

    /// Inverse-CDF draw from the truncated exponential density on this
    /// piece; `u` must lie in the open unit interval.
    pub fn sample(&self, u: f64) -> Result<f64> {
        let (l, r, b) = (self.left, self.right, self.slope);
        let width = r - l;
        let x = if (b * width).abs() < FLAT_PIECE_THRESHOLD || b == 0.0 {
            if !width.is_finite() {
                return Err(Error::ImproperProposal(format!(
                    "flat piece on unbounded interval ({l}, {r}]"
                )));
            }
            l + u * width
        } else if b > 0.0 {
            if r == f64::INFINITY {
                return Err(Error::ImproperProposal(format!(
                    "increasing piece on ({l}, inf)"
                )));
            }
            // x = r + log(u + (1 - u) e^{-b w}) / b
            r + (-(1.0 - u) * self.span).ln_1p() / b
        } else {
            if l == f64::NEG_INFINITY {
                return Err(Error::ImproperProposal(format!(
                    "decreasing piece on (-inf, {r}]"
                )));
            }
            // x = l + log(1 - u (1 - e^{b w})) / b
            l + (-u * self.span).ln_1p() / b
        };
        // Keep the draw strictly inside the open left end.
        Ok(if x <= l { l.next_up().min(r) } else { x.min(r) })
    }
}

/// `log integral_{l}^{r} exp(v + b (x - s)) dx`.
fn log_line_area(s: f64, v: f64, b: f64, l: f64, r: f64) -> Result<f64> {
    line_area(s, v, b, b.abs().ln(), l, r).map(|(log_area, _)| log_area)
}

/// As [`log_line_area`] with `ln |b|` supplied, also returning the span
/// `1 - exp(-|b| (r - l))` (zero for a flat piece).
fn line_area(s: f64, v: f64, b: f64, log_abs_b: f64, l: f64, r: f64) -> Result<(f64, f64)> {
    let width = r - l;
    if (b * width).abs() < FLAT_PIECE_THRESHOLD || b == 0.0 {
        if !width.is_finite() {
            return Err(Error::ImproperProposal(format!(
                "flat tangent at {s} on unbounded interval ({l}, {r}]"
            )));
        }
        let mid = 0.5 * (l + r);
        return Ok((v + b * (mid - s) + width.ln(), 0.0));
    }
    let span = -(-b.abs() * width).exp_m1();
    if b > 0.0 {
        if r == f64::INFINITY {
            return Err(Error::ImproperProposal(format!(
                "tangent at {s} has slope {b} > 0 on a right-unbounded piece"
            )));
        }
        Ok((v + b * (r - s) + span.ln() - log_abs_b, span))
    } else {
        if l == f64::NEG_INFINITY {
            return Err(Error::ImproperProposal(format!(
                "tangent at {s} has slope {b} < 0 on a left-unbounded piece"
            )));
        }
        Ok((v + b * (l - s) + span.ln() - log_abs_b, span))
    }
}

/// A tangent line `value + slope * (x - node)` to `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub node: f64,
    pub value: f64,
    pub slope: f64,
    log_abs_slope: f64,
}

impl Tangent {
    pub fn new(node: f64, value: f64, slope: f64) -> Tangent {
        Tangent {
            node,
            value,
            slope,
            log_abs_slope: slope.abs().ln(),
        }
    }

    pub fn at<T>(target: &T, s: f64) -> Result<Tangent>
    where
        T: LogConcaveTarget + ?Sized,
    {
        let support = target.support();
        if !support.is_interior(s) {
            return Err(Error::OutsideSupport {
                x: s,
                lower: support.lower,
                upper: support.upper,
            });
        }
        let value = target.log_density(s);
        let slope = target.log_density_derivative(s);
        if !value.is_finite() || !slope.is_finite() {
            return Err(Error::InvalidSupportSet(format!(
                "non-finite tangent at node {s}: V = {value}, V' = {slope}"
            )));
        }
        Ok(Tangent::new(s, value, slope))
    }
}

/// Emits the pieces of the hull of `lines` from left to right. A tangent
/// identical to the previous kept one is dropped; a distinct parallel one is
/// an error. Pieces squeezed to zero width by breakpoint clamping are skipped.
fn hull_pieces(
    lines: &[Tangent],
    lower: f64,
    upper: f64,
    mut emit: impl FnMut(Piece),
) -> Result<()> {
    if lines.len() < 2 {
        return Err(Error::InvalidSupportSet(format!(
            "need at least 2 nodes, got {}",
            lines.len()
        )));
    }
    let first = lines[0];
    if lower == f64::NEG_INFINITY && !(first.slope > 0.0) {
        return Err(Error::ImproperProposal(format!(
            "left tail unbounded but V'({}) = {} is not positive",
            first.node, first.slope
        )));
    }
    let mut emit_piece = |t: Tangent, left: f64, right: f64| -> Result<()> {
        if right > left {
            let (log_area, span) =
                line_area(t.node, t.value, t.slope, t.log_abs_slope, left, right)?;
            emit(Piece {
                node: t.node,
                node_value: t.value,
                slope: t.slope,
                left,
                right,
                log_area,
                span,
            });
        }
        Ok(())
    };
    let mut current = first;
    let mut left = lower;
    for &next in &lines[1..] {
        let (s, v, b) = (current.node, current.value, current.slope);
        let (s2, v2, b2) = (next.node, next.value, next.slope);
        if (b - b2).abs() < SLOPE_EPSILON {
            let predicted = v + b * (s2 - s);
            if (predicted - v2).abs() <= SLOPE_EPSILON * (1.0 + v2.abs()) {
                continue;
            }
            return Err(Error::DegenerateNodes { left: s, right: s2 });
        }
        let e = s + (v2 - v - b2 * (s2 - s)) / (b - b2);
        let right = if e >= s && e <= s2 { e } else { 0.5 * (s + s2) };
        emit_piece(current, left, right)?;
        left = left.max(right);
        current = next;
    }
    if upper == f64::INFINITY && !(current.slope < 0.0) {
        return Err(Error::ImproperProposal(format!(
            "right tail unbounded but V'({}) = {} is not negative",
            current.node, current.slope
        )));
    }
    emit_piece(current, left, upper)
}

fn finite_normalizer(log_areas: &[f64]) -> Result<f64> {
    let log_normalizer = log_sum_exp(log_areas);
    if !log_normalizer.is_finite() {
        return Err(Error::ImproperProposal(format!(
            "envelope normalizer is not finite: {log_normalizer}"
        )));
    }
    Ok(log_normalizer)
}

/// Running normalized weights, with the last entry pinned to exactly one.
fn cumulative(log_areas: &[f64], log_normalizer: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = log_areas
        .iter()
        .map(|&la| {
            acc += (la - log_normalizer).exp();
            acc
        })
        .collect();
    if let Some(w) = out.last_mut() {
        *w = 1.0;
    }
    out
}

/// Inverse-CDF selection over nondecreasing cumulative weights ending at 1:
/// the smallest `j` with `cumulative[j] > u`, clamped to the last index.
pub fn select_index(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len().saturating_sub(1))
}

/// The proposal `q(x) = exp(W(x))` built from a support set.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pieces: Vec<Piece>,
    log_normalizer: f64,
    cumulative_weights: Vec<f64>,
    support: Support,
}

impl Envelope {
    pub fn build<T>(target: &T, nodes: &SupportSet) -> Result<Envelope>
    where
        T: LogConcaveTarget + ?Sized,
    {
        Envelope::from_sorted_nodes(target, nodes.nodes())
    }

    /// Builds from nodes already known to be sorted and separated.
    pub(crate) fn from_sorted_nodes<T>(target: &T, nodes: &[f64]) -> Result<Envelope>
    where
        T: LogConcaveTarget + ?Sized,
    {
        let lines = nodes
            .iter()
            .map(|&s| Tangent::at(target, s))
            .collect::<Result<Vec<_>>>()?;
        Envelope::from_tangents(&lines, target.support())
    }

    /// Builds the hull of tangents sorted by node.
    pub fn from_tangents(lines: &[Tangent], support: Support) -> Result<Envelope> {
        let mut pieces = Vec::with_capacity(lines.len());
        hull_pieces(lines, support.lower, support.upper, |p| pieces.push(p))?;
        let log_areas: Vec<f64> = pieces.iter().map(|p| p.log_area).collect();
        let log_normalizer = finite_normalizer(&log_areas)?;
        let cumulative_weights = cumulative(&log_areas, log_normalizer);
        Ok(Envelope {
            pieces,
            log_normalizer,
            cumulative_weights,
            support,
        })
    }

    /// `log c` of the hull of `lines` without materializing it; `areas` is
    /// scratch space. Agrees bit for bit with [`Envelope::from_tangents`].
    pub fn tangent_log_normalizer(
        lines: &[Tangent],
        support: Support,
        areas: &mut Vec<f64>,
    ) -> Result<f64> {
        Envelope::hull_log_area(lines, support.lower, support.upper, areas)
    }

    /// Log of the area under the hull of `lines` restricted to
    /// `(lower, upper]`. The piece log-areas are left in `areas`.
    pub fn hull_log_area(
        lines: &[Tangent],
        lower: f64,
        upper: f64,
        areas: &mut Vec<f64>,
    ) -> Result<f64> {
        areas.clear();
        hull_pieces(lines, lower, upper, |p| areas.push(p.log_area))?;
        finite_normalizer(areas)
    }

    /// An envelope from explicit pieces (contiguous, covering `support`).
    pub fn from_pieces(pieces: Vec<Piece>, support: Support) -> Result<Envelope> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("no pieces".into()));
        }
        if pieces[0].left != support.lower || pieces[pieces.len() - 1].right != support.upper {
            return Err(Error::InvalidArgument(
                "pieces do not cover the support".into(),
            ));
        }
        if pieces.windows(2).any(|w| w[0].right != w[1].left) {
            return Err(Error::InvalidArgument("pieces are not contiguous".into()));
        }
        let log_areas: Vec<f64> = pieces.iter().map(|p| p.log_area).collect();
        let log_normalizer = log_sum_exp(&log_areas);
        let cumulative_weights = cumulative(&log_areas, log_normalizer);
        Ok(Envelope {
            pieces,
            log_normalizer,
            cumulative_weights,
            support,
        })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// `log c`, with `c` the integral of the envelope.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Running sums of the normalized piece weights; the last entry is 1.
    pub fn cumulative_weights(&self) -> &[f64] {
        &self.cumulative_weights
    }

    /// Breakpoints `e_0 < e_1 < ... < e_m`, including the support ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        std::iter::once(self.pieces[0].left)
            .chain(self.pieces.iter().map(|p| p.right))
            .collect()
    }

    /// Index of the piece whose interval `(left, right]` holds `x`.
    pub fn piece_index(&self, x: f64) -> usize {
        let i = self.pieces.partition_point(|p| p.right < x);
        i.min(self.pieces.len() - 1)
    }

    /// `W(x)`, the log of the envelope.
    pub fn log_eval(&self, x: f64) -> Result<f64> {
        self.support.check(x)?;
        Ok(self.pieces[self.piece_index(x)].eval(x))
    }

    /// Smallest piece index whose cumulative weight exceeds `u`.
    pub fn select_piece(&self, u: f64) -> usize {
        select_index(&self.cumulative_weights, u)
    }

    /// Draws `x ~ q / c` along with the index of the piece it came from.
    pub fn sample_with_piece<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, f64)> {
        let j = self.select_piece(rng.random::<f64>());
        let u: f64 = Open01.sample(rng);
        Ok((j, self.pieces[j].sample(u)?))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.sample_with_piece(rng).map(|(_, x)| x)
    }

    /// Normalized envelope CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support.lower {
            return 0.0;
        }
        if x >= self.support.upper {
            return 1.0;
        }
        let j = self.piece_index(x);
        let below = if j == 0 {
            0.0
        } else {
            self.cumulative_weights[j - 1]
        };
        let p = &self.pieces[j];
        if x <= p.left {
            return below;
        }
        let partial = log_line_area(p.node, p.node_value, p.slope, p.left, x)
            .map(|la| (la - self.log_normalizer).exp())
            .unwrap_or(0.0);
        (below + partial).min(1.0)
    }

    /// Writes one `index,slope,log_offset,left,right,log_area` record per piece.
    pub fn dump<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for (i, p) in self.pieces.iter().enumerate() {
            writeln!(
                out,
                "{i},{},{},{},{},{}",
                p.slope,
                p.log_offset(),
                p.left,
                p.right,
                p.log_area
            )?;
        }
        Ok(())
    }
}
