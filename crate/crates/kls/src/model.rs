//! Hidden source measured through a one-input two-output broadcast channel,
//! with classification into the channel classes for which the rate regions
//! are tight.
//!
//! A model is the pair `(P_X, P_{X~Y|X})`. All marginal and conditional views
//! are derived at construction, including the reversed view that treats `X~`
//! as the channel input, which is what the classification tests and the rate
//! computations operate on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{entropy_slice, Channel, ProbVector, PROB_TOL};
use crate::rng::CounterRng;

/// Conditioning events rarer than this are skipped in conditional tests.
pub const EVENT_TOL: f64 = 1e-12;
/// An aux channel must beat this margin to certify a less-noisy violation.
pub const LESS_NOISY_TOL: f64 = 1e-9;
/// Cap on grid candidates enumerated per aux alphabet size.
const GRID_CANDIDATE_CAP: u128 = 200_000;

const STREAM_LESS_NOISY: u64 = 7;

/// Hidden source plus broadcast channel with cached derived views.
#[derive(Debug, Clone)]
pub struct SourceBcModel {
    px: ProbVector,
    /// `P(x~, y | x)` with pair index `x~ * |Y| + y`.
    bc: Channel,
    xtilde_size: usize,
    y_size: usize,
    /// Full joint `P(x, x~, y)`.
    joint: Vec<Vec<Vec<f64>>>,
    p_xtilde: ProbVector,
    /// `P(x, y | x~)` with pair index `x * |Y| + y`.
    reversed: Channel,
    p_x_given_xtilde: Channel,
    p_y_given_xtilde: Channel,
    p_xtilde_given_x: Channel,
    p_y_given_x: Channel,
}

impl SourceBcModel {
    /// Build from the general joint broadcast channel `P(x~, y | x)`.
    pub fn from_correlated_noise(
        px: ProbVector,
        bc: Channel,
        xtilde_size: usize,
        y_size: usize,
    ) -> Result<Self> {
        if bc.input_size() != px.len() {
            return Err(Error::DimensionMismatch(format!(
                "source alphabet {} vs channel input {}",
                px.len(),
                bc.input_size()
            )));
        }
        if xtilde_size * y_size != bc.output_size() {
            return Err(Error::DimensionMismatch(format!(
                "declared |X~| * |Y| = {} * {} does not match channel output {}",
                xtilde_size,
                y_size,
                bc.output_size()
            )));
        }

        let x_size = px.len();
        let mut joint = vec![vec![vec![0.0; y_size]; xtilde_size]; x_size];
        for x in 0..x_size {
            for xt in 0..xtilde_size {
                for y in 0..y_size {
                    joint[x][xt][y] = px.get(x) * bc.prob(x, xt * y_size + y);
                }
            }
        }

        let mut p_xtilde = vec![0.0; xtilde_size];
        for x in 0..x_size {
            for xt in 0..xtilde_size {
                for y in 0..y_size {
                    p_xtilde[xt] += joint[x][xt][y];
                }
            }
        }

        let mut reversed_rows = vec![vec![0.0; x_size * y_size]; xtilde_size];
        for (xt, row) in reversed_rows.iter_mut().enumerate() {
            if p_xtilde[xt] <= 0.0 {
                // Unreachable measurement symbol: any conditional is
                // consistent, use uniform.
                row.fill(1.0 / (x_size * y_size) as f64);
                continue;
            }
            for x in 0..x_size {
                for y in 0..y_size {
                    row[x * y_size + y] = joint[x][xt][y] / p_xtilde[xt];
                }
            }
        }
        let reversed = Channel::new(reversed_rows)?;

        let mut p_x_given_xtilde = vec![vec![0.0; x_size]; xtilde_size];
        let mut p_y_given_xtilde = vec![vec![0.0; y_size]; xtilde_size];
        for xt in 0..xtilde_size {
            for x in 0..x_size {
                for y in 0..y_size {
                    let p = reversed.prob(xt, x * y_size + y);
                    p_x_given_xtilde[xt][x] += p;
                    p_y_given_xtilde[xt][y] += p;
                }
            }
        }

        let mut p_xtilde_given_x = vec![vec![0.0; xtilde_size]; x_size];
        let mut p_y_given_x = vec![vec![0.0; y_size]; x_size];
        for x in 0..x_size {
            for xt in 0..xtilde_size {
                for y in 0..y_size {
                    let p = bc.prob(x, xt * y_size + y);
                    p_xtilde_given_x[x][xt] += p;
                    p_y_given_x[x][y] += p;
                }
            }
        }

        Ok(Self {
            px,
            bc,
            xtilde_size,
            y_size,
            joint,
            p_xtilde: ProbVector::new(p_xtilde)?,
            reversed,
            p_x_given_xtilde: Channel::new(p_x_given_xtilde)?,
            p_y_given_xtilde: Channel::new(p_y_given_xtilde)?,
            p_xtilde_given_x: Channel::new(p_xtilde_given_x)?,
            p_y_given_x: Channel::new(p_y_given_x)?,
        })
    }

    /// Build from conditionally independent encoder and decoder measurements:
    /// `P(x~, y | x) = enc(x~ | x) dec(y | x)`.
    pub fn from_separate_measurements(
        px: ProbVector,
        enc: &Channel,
        dec: &Channel,
    ) -> Result<Self> {
        if enc.input_size() != px.len() || dec.input_size() != px.len() {
            return Err(Error::DimensionMismatch(format!(
                "source alphabet {} vs encoder input {} / decoder input {}",
                px.len(),
                enc.input_size(),
                dec.input_size()
            )));
        }
        let xtilde_size = enc.output_size();
        let y_size = dec.output_size();
        let rows = (0..px.len())
            .map(|x| {
                let mut row = Vec::with_capacity(xtilde_size * y_size);
                for xt in 0..xtilde_size {
                    for y in 0..y_size {
                        row.push(enc.prob(x, xt) * dec.prob(x, y));
                    }
                }
                row
            })
            .collect();
        Self::from_correlated_noise(px, Channel::new(rows)?, xtilde_size, y_size)
    }

    pub fn x_size(&self) -> usize {
        self.px.len()
    }

    pub fn xtilde_size(&self) -> usize {
        self.xtilde_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn px(&self) -> &ProbVector {
        &self.px
    }

    pub fn bc(&self) -> &Channel {
        &self.bc
    }

    pub fn p_xtilde(&self) -> &ProbVector {
        &self.p_xtilde
    }

    pub fn reversed(&self) -> &Channel {
        &self.reversed
    }

    pub fn p_x_given_xtilde(&self) -> &Channel {
        &self.p_x_given_xtilde
    }

    pub fn p_y_given_xtilde(&self) -> &Channel {
        &self.p_y_given_xtilde
    }

    pub fn p_xtilde_given_x(&self) -> &Channel {
        &self.p_xtilde_given_x
    }

    pub fn p_y_given_x(&self) -> &Channel {
        &self.p_y_given_x
    }

    /// `P(x, x~, y)`.
    pub fn joint_prob(&self, x: usize, xt: usize, y: usize) -> f64 {
        self.joint[x][xt][y]
    }

    /// Test one of the two Markov-chain orientations by comparing exact
    /// conditional tables. Conditioning events below [`EVENT_TOL`] are
    /// skipped.
    pub fn test_markov_chain(&self, chain: MarkovChain) -> MarkovTest {
        let mut max_dev: f64 = 0.0;
        match chain {
            // X~ - Y - X: P(x | y, x~) == P(x | y)
            MarkovChain::XtildeYX => {
                let mut p_y = vec![0.0; self.y_size];
                let mut p_xy = vec![vec![0.0; self.y_size]; self.x_size()];
                let mut p_xty = vec![vec![0.0; self.y_size]; self.xtilde_size];
                for x in 0..self.x_size() {
                    for xt in 0..self.xtilde_size {
                        for y in 0..self.y_size {
                            let p = self.joint[x][xt][y];
                            p_y[y] += p;
                            p_xy[x][y] += p;
                            p_xty[xt][y] += p;
                        }
                    }
                }
                for xt in 0..self.xtilde_size {
                    for y in 0..self.y_size {
                        if p_xty[xt][y] < EVENT_TOL {
                            continue;
                        }
                        for x in 0..self.x_size() {
                            let lhs = self.joint[x][xt][y] / p_xty[xt][y];
                            let rhs = p_xy[x][y] / p_y[y];
                            max_dev = max_dev.max((lhs - rhs).abs());
                        }
                    }
                }
            }
            // X~ - X - Y: P(y | x, x~) == P(y | x)
            MarkovChain::XtildeXY => {
                for x in 0..self.x_size() {
                    for xt in 0..self.xtilde_size {
                        let p_xxt: f64 = self.joint[x][xt].iter().sum();
                        if p_xxt < EVENT_TOL {
                            continue;
                        }
                        for y in 0..self.y_size {
                            let lhs = self.joint[x][xt][y] / p_xxt;
                            let rhs = self.p_y_given_x.prob(x, y);
                            max_dev = max_dev.max((lhs - rhs).abs());
                        }
                    }
                }
            }
        }
        MarkovTest {
            holds: max_dev <= PROB_TOL,
            max_deviation: max_dev,
        }
    }

    /// True iff the encoder measurement copies the source exactly:
    /// `P(x~ = x | x) = 1` for every `x` with positive mass. Mismatched
    /// alphabet sizes return false rather than an error; a relabeling
    /// (permutation) of the source does not count.
    pub fn test_semi_deterministic(&self) -> bool {
        if self.xtilde_size != self.x_size() {
            return false;
        }
        (0..self.x_size())
            .all(|x| self.px.get(x) <= 0.0 || self.p_xtilde_given_x.prob(x, x) >= 1.0 - PROB_TOL)
    }

    /// Search for an aux channel violating the less-noisy ordering in the
    /// given direction.
    ///
    /// Candidates `P(u | x~)` are enumerated over simplex grids (rows with
    /// entries in multiples of `1 / grid_resolution`, for every aux alphabet
    /// size up to `|X~| + 2`, skipping sizes whose grid would exceed an
    /// internal cap) plus `random_samples` flat-simplex draws at the maximum
    /// aux size. A candidate beating [`LESS_NOISY_TOL`] certifies a "no" and
    /// is returned as a witness; otherwise the result is only evidence, never
    /// a proof, since the ordering quantifies over all aux channels.
    ///
    /// The search is deterministic given `(grid_resolution, random_samples,
    /// seed)`: candidates have a canonical order and the first violator wins.
    pub fn test_less_noisy(
        &self,
        direction: LessNoisyDirection,
        grid_resolution: usize,
        random_samples: usize,
        seed: u64,
    ) -> LessNoisyResult {
        let grid_resolution = grid_resolution.max(2);
        let max_u = self.xtilde_size + 2;

        let mut candidates: Vec<Vec<Vec<f64>>> = Vec::new();
        for u_size in 1..=max_u {
            let rows = compositions(grid_resolution, u_size);
            let count = (rows.len() as u128).checked_pow(self.xtilde_size as u32);
            if count.is_none_or(|c| c > GRID_CANDIDATE_CAP) {
                continue;
            }
            let total = rows.len().pow(self.xtilde_size as u32);
            for mut idx in 0..total {
                let mut aux_rows = Vec::with_capacity(self.xtilde_size);
                for _ in 0..self.xtilde_size {
                    aux_rows.push(rows[idx % rows.len()].clone());
                    idx /= rows.len();
                }
                candidates.push(aux_rows);
            }
        }
        let mut rng = CounterRng::new(seed, STREAM_LESS_NOISY);
        for _ in 0..random_samples {
            let aux_rows = (0..self.xtilde_size)
                .map(|_| rng.sample_simplex(max_u))
                .collect();
            candidates.push(aux_rows);
        }

        let violation = candidates
            .par_iter()
            .enumerate()
            .filter_map(|(i, aux_rows)| {
                let (mi_x, mi_y) = self.aux_mi_pair(aux_rows);
                let gap = match direction {
                    LessNoisyDirection::XOverY => mi_x - mi_y,
                    LessNoisyDirection::YOverX => mi_y - mi_x,
                };
                (gap < -LESS_NOISY_TOL).then_some((i, mi_x, mi_y, -gap))
            })
            .min_by_key(|&(i, ..)| i);

        match violation {
            Some((i, mi_with_x, mi_with_y, violation)) => LessNoisyResult {
                verdict: LessNoisyVerdict::CertifiedNo,
                witness: Some(LessNoisyWitness {
                    aux: Channel::new(candidates[i].clone()).expect("candidate rows are pmfs"),
                    mi_with_x,
                    mi_with_y,
                    violation,
                }),
            },
            None => LessNoisyResult {
                verdict: LessNoisyVerdict::EvidenceYes,
                witness: None,
            },
        }
    }

    /// `(I(U;X), I(U;Y))` for aux rows `P(u | x~)`.
    fn aux_mi_pair(&self, aux_rows: &[Vec<f64>]) -> (f64, f64) {
        let u_size = aux_rows[0].len();
        let mut j_ux = vec![vec![0.0; self.x_size()]; u_size];
        let mut j_uy = vec![vec![0.0; self.y_size]; u_size];
        for xt in 0..self.xtilde_size {
            let w_xt = self.p_xtilde.get(xt);
            if w_xt == 0.0 {
                continue;
            }
            for (u, &p_u_xt) in aux_rows[xt].iter().enumerate() {
                let w = w_xt * p_u_xt;
                if w == 0.0 {
                    continue;
                }
                for x in 0..self.x_size() {
                    j_ux[u][x] += w * self.p_x_given_xtilde.prob(xt, x);
                }
                for y in 0..self.y_size {
                    j_uy[u][y] += w * self.p_y_given_xtilde.prob(xt, y);
                }
            }
        }
        (
            crate::info::mutual_information_from_joint(&j_ux),
            crate::info::mutual_information_from_joint(&j_uy),
        )
    }

    /// Run every classification test and pick the applicable theorem.
    pub fn classify(&self, opts: &ClassifyOptions) -> ClassificationReport {
        let markov_xtilde_y_x = self.test_markov_chain(MarkovChain::XtildeYX);
        let markov_xtilde_x_y = self.test_markov_chain(MarkovChain::XtildeXY);
        let semi_deterministic = self.test_semi_deterministic();
        let less_noisy_x_over_y = self.test_less_noisy(
            LessNoisyDirection::XOverY,
            opts.grid_resolution,
            opts.random_samples,
            opts.seed,
        );
        let less_noisy_y_over_x = self.test_less_noisy(
            LessNoisyDirection::YOverX,
            opts.grid_resolution,
            opts.random_samples,
            opts.seed,
        );

        // Degraded toward Y implies Y is less noisy in that direction, so a
        // certified violation there contradicts the Markov test.
        debug_assert!(
            !(markov_xtilde_y_x.holds
                && less_noisy_y_over_x.verdict == LessNoisyVerdict::CertifiedNo),
            "X~-Y-X holds but a Y-over-X violation was certified"
        );
        let applicable_theorem = if markov_xtilde_y_x.holds {
            ApplicableTheorem::PdThm2
        } else if less_noisy_x_over_y.verdict == LessNoisyVerdict::EvidenceYes {
            ApplicableTheorem::LnCase1
        } else if less_noisy_y_over_x.verdict == LessNoisyVerdict::EvidenceYes {
            ApplicableTheorem::LnCase2
        } else {
            ApplicableTheorem::Unclassified
        };

        ClassificationReport {
            markov_xtilde_y_x,
            markov_xtilde_x_y,
            semi_deterministic,
            less_noisy_x_over_y,
            less_noisy_y_over_x,
            applicable_theorem,
        }
    }
}

/// All pmf rows of length `parts` with entries in multiples of `1/denom`.
fn compositions(denom: usize, parts: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; parts];
    fn rec(
        remaining: usize,
        pos: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<f64>>,
        denom: usize,
    ) {
        if pos == current.len() - 1 {
            current[pos] = remaining;
            out.push(current.iter().map(|&c| c as f64 / denom as f64).collect());
            return;
        }
        for c in 0..=remaining {
            current[pos] = c;
            rec(remaining - c, pos + 1, current, out, denom);
        }
    }
    rec(denom, 0, &mut current, &mut out, denom);
    out
}

/// The two Markov-chain orientations tested for physical degradedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkovChain {
    /// `X~ - Y - X`: decoder measurements are better than encoder's.
    XtildeYX,
    /// `X~ - X - Y`: the separate-measurement factorization.
    XtildeXY,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MarkovTest {
    pub holds: bool,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LessNoisyDirection {
    /// `I(U;X) >= I(U;Y)` for all aux channels.
    XOverY,
    /// `I(U;Y) >= I(U;X)` for all aux channels.
    YOverX,
}

/// Outcome of a less-noisy search. A violation is a certificate; absence of
/// one over the searched candidates is evidence only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LessNoisyVerdict {
    CertifiedNo,
    EvidenceYes,
}

#[derive(Debug, Clone, Serialize)]
pub struct LessNoisyWitness {
    /// The violating `P(u | x~)`.
    pub aux: Channel,
    pub mi_with_x: f64,
    pub mi_with_y: f64,
    /// How far the claimed inequality is exceeded, in bits.
    pub violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LessNoisyResult {
    pub verdict: LessNoisyVerdict,
    pub witness: Option<LessNoisyWitness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApplicableTheorem {
    #[serde(rename = "PD_Thm2")]
    PdThm2,
    #[serde(rename = "LN_Case1")]
    LnCase1,
    #[serde(rename = "LN_Case2")]
    LnCase2,
    #[serde(rename = "none")]
    Unclassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub markov_xtilde_y_x: MarkovTest,
    pub markov_xtilde_x_y: MarkovTest,
    pub semi_deterministic: bool,
    pub less_noisy_x_over_y: LessNoisyResult,
    pub less_noisy_y_over_x: LessNoisyResult,
    pub applicable_theorem: ApplicableTheorem,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub grid_resolution: usize,
    pub random_samples: usize,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            grid_resolution: 10,
            random_samples: 200,
            seed: 0,
        }
    }
}

/// On-disk model description: either the general joint broadcast channel or
/// separate encoder/decoder measurement channels.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ModelFile {
    Joint {
        px: Vec<f64>,
        bc_rows: Vec<Vec<f64>>,
        xtilde_size: usize,
        y_size: usize,
    },
    Separate {
        px: Vec<f64>,
        enc_rows: Vec<Vec<f64>>,
        dec_rows: Vec<Vec<f64>>,
    },
}

/// Parse a model from its JSON file format.
pub fn model_from_json(text: &str) -> Result<SourceBcModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    match file {
        ModelFile::Joint {
            px,
            bc_rows,
            xtilde_size,
            y_size,
        } => SourceBcModel::from_correlated_noise(
            ProbVector::new(px)?,
            Channel::new(bc_rows)?,
            xtilde_size,
            y_size,
        ),
        ModelFile::Separate {
            px,
            enc_rows,
            dec_rows,
        } => SourceBcModel::from_separate_measurements(
            ProbVector::new(px)?,
            &Channel::new(enc_rows)?,
            &Channel::new(dec_rows)?,
        ),
    }
}

/// `H(U | X~)` for aux rows `P(u | x~)` under the model's `X~` marginal.
pub fn aux_conditional_entropy(model: &SourceBcModel, aux: &Channel) -> Result<f64> {
    if aux.input_size() != model.xtilde_size() {
        return Err(Error::DimensionMismatch(format!(
            "aux input {} vs |X~| = {}",
            aux.input_size(),
            model.xtilde_size()
        )));
    }
    let mut h = 0.0;
    for xt in 0..model.xtilde_size() {
        let w = model.p_xtilde().get(xt);
        if w > 0.0 {
            h += w * entropy_slice(aux.row(xt));
        }
    }
    Ok(h)
}
