//! Finite-alphabet distributions, channels, and information measures.
//!
//! All logarithms are base 2 and all rates are in bits/symbol. Values are
//! immutable after construction, so everything here is freely shareable
//! across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability validation (row sums, normalization).
pub const PROB_TOL: f64 = 1e-9;
/// Tolerance for algebraic identities (associativity, joint reconstruction).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Largest output alphabet a product channel may produce.
pub const MAX_PRODUCT_OUTPUTS: u128 = 1 << 24;

/// Probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProbVectorRaw")]
pub struct ProbVector {
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct ProbVectorRaw {
    probs: Vec<f64>,
}

impl TryFrom<ProbVectorRaw> for ProbVector {
    type Error = Error;
    fn try_from(raw: ProbVectorRaw) -> Result<Self> {
        ProbVector::new(raw.probs)
    }
}

fn validate_pmf(probs: &mut [f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    for &p in probs.iter() {
        if !p.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} outside [0, 1]"
            )));
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!(
            "entries sum to {sum}, expected 1"
        )));
    }
    // Tolerated roundoff is clamped so the stored entries are honest
    // probabilities.
    for p in probs.iter_mut() {
        *p = p.clamp(0.0, 1.0);
    }
    Ok(())
}

impl ProbVector {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        validate_pmf(&mut probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len >= 1);
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    /// Point mass on `index`.
    pub fn delta(len: usize, index: usize) -> Self {
        assert!(index < len);
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// Row-stochastic matrix from one finite alphabet to another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRaw")]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ChannelRaw {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ChannelRaw> for Channel {
    type Error = Error;
    fn try_from(raw: ChannelRaw) -> Result<Self> {
        Channel::new(raw.rows)
    }
}

impl Channel {
    pub fn new(mut rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDistribution("channel with no rows".into()));
        }
        let width = rows[0].len();
        for row in &mut rows {
            if row.len() != width {
                return Err(Error::DimensionMismatch(
                    "channel rows of unequal length".into(),
                ));
            }
            validate_pmf(row)?;
        }
        Ok(Self { rows })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            rows: (0..len)
                .map(|i| {
                    let mut r = vec![0.0; len];
                    r[i] = 1.0;
                    r
                })
                .collect(),
        }
    }

    /// Deterministic channel `y = map(x)`.
    pub fn deterministic(
        input_size: usize,
        output_size: usize,
        map: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(input_size);
        for x in 0..input_size {
            let y = map(x);
            if y >= output_size {
                return Err(Error::OutOfRange(format!(
                    "map({x}) = {y} outside output alphabet of size {output_size}"
                )));
            }
            let mut r = vec![0.0; output_size];
            r[y] = 1.0;
            rows.push(r);
        }
        Ok(Self { rows })
    }

    /// Channel whose every row equals `out`, making the output independent of
    /// the input.
    pub fn constant(input_size: usize, out: &ProbVector) -> Self {
        Self {
            rows: vec![out.probs().to_vec(); input_size],
        }
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Binary symmetric channel with crossover probability `p`.
///
/// Only the canonical range `p in [0, 0.5]` is accepted; a crossover in
/// `(0.5, 1]` describes the same channel with relabeled outputs and is
/// rejected to avoid ambiguity.
pub fn bsc(p: f64) -> Result<Channel> {
    if !p.is_finite() || !(0.0..=0.5).contains(&p) {
        return Err(Error::OutOfRange(format!(
            "bsc crossover {p} not in [0, 0.5]"
        )));
    }
    Channel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
}

/// Binary entropy in bits, with the convention `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("binary_entropy({p}) undefined")));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

pub(crate) fn entropy_slice(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    // Entries like 1 + 1e-16 from accumulated sums would otherwise produce a
    // negative entropy.
    h.max(0.0)
}

/// Shannon entropy in bits.
pub fn entropy(p: &ProbVector) -> f64 {
    entropy_slice(p.probs())
}

/// Output marginal of `input` pushed through `ch`.
pub fn push_forward(input: &ProbVector, ch: &Channel) -> Result<ProbVector> {
    if input.len() != ch.input_size() {
        return Err(Error::DimensionMismatch(format!(
            "input alphabet {} vs channel input {}",
            input.len(),
            ch.input_size()
        )));
    }
    let mut out = vec![0.0; ch.output_size()];
    for (x, &px) in input.probs().iter().enumerate() {
        for (y, &pyx) in ch.row(x).iter().enumerate() {
            out[y] += px * pyx;
        }
    }
    ProbVector::new(out)
}

/// Roundoff guard: mutual informations are nonnegative, and anything below
/// the algebraic tolerance is numerically indistinguishable from
/// independence, so it is reported as exactly zero.
pub(crate) fn clamp_mi(mi: f64) -> f64 {
    if mi < ALGEBRA_TOL {
        0.0
    } else {
        mi
    }
}

/// `I(input; output)` in bits, computed as `H(output) - sum_x P(x) H(row_x)`.
pub fn mutual_information(input: &ProbVector, ch: &Channel) -> Result<f64> {
    let out = push_forward(input, ch)?;
    let mut cond = 0.0;
    for (x, &px) in input.probs().iter().enumerate() {
        if px > 0.0 {
            cond += px * entropy_slice(ch.row(x));
        }
    }
    Ok(clamp_mi(entropy_slice(out.probs()) - cond))
}

/// Mutual information of a joint pmf given as a dense matrix `p[x][y]`.
pub fn mutual_information_from_joint(joint: &[Vec<f64>]) -> f64 {
    let nx = joint.len();
    let ny = if nx > 0 { joint[0].len() } else { 0 };
    let mut px = vec![0.0; nx];
    let mut py = vec![0.0; ny];
    for (x, row) in joint.iter().enumerate() {
        debug_assert_eq!(row.len(), ny);
        for (y, &p) in row.iter().enumerate() {
            px[x] += p;
            py[y] += p;
        }
    }
    let mut mi = 0.0;
    for (x, row) in joint.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (px[x] * py[y])).log2();
            }
        }
    }
    clamp_mi(mi)
}

/// Cascade `first: A -> B` with `second: B -> C` into `A -> C`.
pub fn compose(first: &Channel, second: &Channel) -> Result<Channel> {
    if first.output_size() != second.input_size() {
        return Err(Error::DimensionMismatch(format!(
            "compose: {} outputs vs {} inputs",
            first.output_size(),
            second.input_size()
        )));
    }
    let mut rows = vec![vec![0.0; second.output_size()]; first.input_size()];
    for a in 0..first.input_size() {
        for (b, &pab) in first.row(a).iter().enumerate() {
            if pab == 0.0 {
                continue;
            }
            for (c, &pbc) in second.row(b).iter().enumerate() {
                rows[a][c] += pab * pbc;
            }
        }
    }
    Channel::new(rows)
}

/// `k` independent uses of `ch` on the same input symbol.
///
/// The output alphabet is the k-fold Cartesian product in lexicographic
/// order with the first use most significant, so
/// `index = sum_j y_j * m^(k-1-j)`.
pub fn product_channel(ch: &Channel, k: usize) -> Result<Channel> {
    if k < 1 {
        return Err(Error::OutOfRange("product_channel needs k >= 1".into()));
    }
    let m = ch.output_size() as u128;
    if m.checked_pow(k as u32)
        .is_none_or(|n| n > MAX_PRODUCT_OUTPUTS)
    {
        return Err(Error::ResourceGuard(format!(
            "product channel output alphabet {}^{k} exceeds {}",
            ch.output_size(),
            MAX_PRODUCT_OUTPUTS
        )));
    }
    let mut rows = Vec::with_capacity(ch.input_size());
    for x in 0..ch.input_size() {
        let base = ch.row(x);
        let mut acc = vec![1.0];
        for _ in 0..k {
            let mut next = Vec::with_capacity(acc.len() * base.len());
            for &a in &acc {
                for &b in base {
                    next.push(a * b);
                }
            }
            acc = next;
        }
        rows.push(acc);
    }
    Channel::new(rows)
}

/// Result of reversing a channel around an input distribution.
#[derive(Debug, Clone)]
pub struct BayesInverse {
    pub output_marginal: ProbVector,
    /// `P(x | y)`, one row per output symbol.
    pub reverse: Channel,
    /// Output symbols with zero marginal probability; their reverse rows are
    /// uniform by convention.
    pub zero_mass_outputs: Vec<usize>,
}

/// Reverse `ch: X -> Y` around `input`, producing the output marginal and the
/// posterior channel `Y -> X`.
pub fn bayes_invert(input: &ProbVector, ch: &Channel) -> Result<BayesInverse> {
    let marginal = push_forward(input, ch)?;
    let nx = input.len();
    let mut rows = Vec::with_capacity(marginal.len());
    let mut zero_mass = Vec::new();
    for y in 0..marginal.len() {
        let py = marginal.get(y);
        if py == 0.0 {
            zero_mass.push(y);
            rows.push(vec![1.0 / nx as f64; nx]);
        } else {
            rows.push((0..nx).map(|x| input.get(x) * ch.prob(x, y) / py).collect());
        }
    }
    Ok(BayesInverse {
        output_marginal: marginal,
        reverse: Channel::new(rows)?,
        zero_mass_outputs: zero_mass,
    })
}
