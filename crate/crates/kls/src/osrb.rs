//! Random-binning achievability scheme, run concretely at small blocklengths.
//!
//! Every length-`n` aux sequence `u^n` gets three random bin indices
//! `(S, W, C)`: the secret key, the helper data, and a public index. The
//! decoder recovers `u^n` from `(Y^n, W, C)` by maximum likelihood inside the
//! `(W, C)` bin, and the chosen-secret variant one-time-pads an embedded key
//! with the generated one. `evaluate_exact` measures the code's reliability,
//! secrecy, privacy, and uniformity by full enumeration; `evaluate_monte_carlo`
//! estimates reliability and key statistics by sampled protocol runs.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{entropy_slice, Channel};
use crate::model::{aux_conditional_entropy, SourceBcModel};
use crate::region::evaluate_aux;
use crate::rng::CounterRng;

const STREAM_BIN_S: u64 = 0;
const STREAM_BIN_W: u64 = 1;
const STREAM_BIN_C: u64 = 2;
const STREAM_ENCODER: u64 = 3;
const STREAM_CHANNEL: u64 = 4;
const STREAM_SOURCE: u64 = 5;

/// Largest sequence space a binning table may cover.
pub const MAX_BINNING_SEQUENCES: u128 = 1 << 24;
/// Largest sequence space exact evaluation accepts.
pub const MAX_EXACT_SEQUENCES: u128 = 1 << 12;
/// Cap on the enumeration work and table sizes of exact evaluation.
pub const MAX_EXACT_WORK: u128 = 1 << 26;

/// Index `sum_i u_i * alphabet^(n-1-i)`: first symbol most significant,
/// matching the product-channel output ordering.
pub fn sequence_index(symbols: &[usize], alphabet: usize) -> usize {
    let mut idx = 0;
    for &s in symbols {
        debug_assert!(s < alphabet);
        idx = idx * alphabet + s;
    }
    idx
}

/// Inverse of [`sequence_index`].
pub fn sequence_symbols(mut index: usize, n: usize, alphabet: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = index % alphabet;
        index /= alphabet;
    }
    out
}

/// Binning rates chosen from the working point, plus the margins of the two
/// conditions the construction needs: the Slepian-Wolf condition
/// `R_c + R_w > H(U|Y)` and the index-independence condition
/// `R_s + R_w + R_c < H(U)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Rates {
    pub rate_s: f64,
    pub rate_w: f64,
    pub rate_c: f64,
    pub sw_slack: f64,
    pub independence_slack: f64,
}

/// Rate selection for a model/aux working point:
///
/// ```text
/// R_s = I(U;Y) - 2e,   R_w = I(U;X~) - I(U;Y) + 2e,   R_c = H(U|X~) - e
/// ```
///
/// Fails if `epsilon` is so large that the key rate is non-positive. Both
/// slack margins equal `epsilon` by construction and are returned as
/// computed.
pub fn choose_rates(model: &SourceBcModel, aux: &Channel, epsilon: f64) -> Result<Rates> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::OutOfRange(format!("epsilon {epsilon} must be > 0")));
    }
    let point = evaluate_aux(model, aux)?;
    let h_u_given_xt = aux_conditional_entropy(model, aux)?;
    let h_u = h_u_given_xt + point.mi.mi_uxt;
    let h_u_given_y = h_u - point.mi.mi_uy;

    let rate_s = point.mi.mi_uy - 2.0 * epsilon;
    if rate_s <= 0.0 {
        return Err(Error::EpsilonTooLarge { rate_s });
    }
    let rate_w = point.mi.mi_uxt - point.mi.mi_uy + 2.0 * epsilon;
    let rate_c = h_u_given_xt - epsilon;
    Ok(Rates {
        rate_s,
        rate_w,
        rate_c,
        sw_slack: (rate_c + rate_w) - h_u_given_y,
        independence_slack: h_u - (rate_s + rate_w + rate_c),
    })
}

/// A concrete three-index random binning of all `u_size^n` sequences.
///
/// The mapping is a pure function of `(seed, sequence index)` through three
/// counter-based streams, so it is reproducible from the seed alone.
#[derive(Debug, Clone)]
pub struct BinningCode {
    n: usize,
    u_size: usize,
    seed: u64,
    rates: Rates,
    s_size: u32,
    w_size: u32,
    c_size: u32,
    bins: Vec<(u32, u32, u32)>,
}

fn index_size(n: usize, rate: f64) -> u32 {
    let size = (n as f64 * rate).exp2().round();
    size.max(1.0) as u32
}

/// Assign every `u^n` an independent uniform `(s, w, c)` triple. Index
/// alphabet sizes are `max(1, round(2^(n * rate)))`; the realized rates
/// `log2(size) / n` are reported alongside the requested ones.
pub fn build_binning(n: usize, u_size: usize, rates: &Rates, seed: u64) -> Result<BinningCode> {
    if n < 1 || u_size < 1 {
        return Err(Error::OutOfRange("need n >= 1 and u_size >= 1".into()));
    }
    let count = (u_size as u128)
        .checked_pow(n as u32)
        .filter(|&c| c <= MAX_BINNING_SEQUENCES)
        .ok_or_else(|| {
            Error::ResourceGuard(format!(
                "binning table {u_size}^{n} exceeds {MAX_BINNING_SEQUENCES} sequences"
            ))
        })? as usize;

    let s_size = index_size(n, rates.rate_s);
    let w_size = index_size(n, rates.rate_w);
    let c_size = index_size(n, rates.rate_c);
    let bins = (0..count)
        .map(|i| {
            let i = i as u64;
            (
                (crate::rng::keyed_u64(seed, STREAM_BIN_S, i) % s_size as u64) as u32,
                (crate::rng::keyed_u64(seed, STREAM_BIN_W, i) % w_size as u64) as u32,
                (crate::rng::keyed_u64(seed, STREAM_BIN_C, i) % c_size as u64) as u32,
            )
        })
        .collect();
    Ok(BinningCode {
        n,
        u_size,
        seed,
        rates: *rates,
        s_size,
        w_size,
        c_size,
        bins,
    })
}

impl BinningCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn requested_rates(&self) -> &Rates {
        &self.rates
    }

    /// `(|S|, |W|, |C|)`.
    pub fn index_sizes(&self) -> (u32, u32, u32) {
        (self.s_size, self.w_size, self.c_size)
    }

    /// `log2(size) / n` for each realized index alphabet.
    pub fn realized_rates(&self) -> (f64, f64, f64) {
        let n = self.n as f64;
        (
            (self.s_size as f64).log2() / n,
            (self.w_size as f64).log2() / n,
            (self.c_size as f64).log2() / n,
        )
    }

    pub fn num_sequences(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_of_index(&self, seq_index: usize) -> (u32, u32, u32) {
        self.bins[seq_index]
    }

    pub fn bin_of(&self, symbols: &[usize]) -> Result<(u32, u32, u32)> {
        if symbols.len() != self.n || symbols.iter().any(|&s| s >= self.u_size) {
            return Err(Error::DimensionMismatch(format!(
                "sequence of length {} over alphabet {} expected",
                self.n, self.u_size
            )));
        }
        Ok(self.bins[sequence_index(symbols, self.u_size)])
    }
}

/// Per-symbol tables for one (model, aux) working point.
struct AuxTables {
    p_u: Vec<f64>,
    j_ux: Vec<Vec<f64>>,
    j_uy: Vec<Vec<f64>>,
    p_y: Vec<f64>,
    /// `log2 P(u | y)`; `-inf` where the pair is impossible.
    log_post: Vec<Vec<f64>>,
}

fn aux_tables(model: &SourceBcModel, aux: &Channel) -> Result<AuxTables> {
    if aux.input_size() != model.xtilde_size() {
        return Err(Error::DimensionMismatch(format!(
            "aux input {} vs |X~| = {}",
            aux.input_size(),
            model.xtilde_size()
        )));
    }
    let u_size = aux.output_size();
    let mut p_u = vec![0.0; u_size];
    let mut j_ux = vec![vec![0.0; model.x_size()]; u_size];
    let mut j_uy = vec![vec![0.0; model.y_size()]; u_size];
    for xt in 0..model.xtilde_size() {
        let w_xt = model.p_xtilde().get(xt);
        if w_xt == 0.0 {
            continue;
        }
        for u in 0..u_size {
            let w = w_xt * aux.prob(xt, u);
            if w == 0.0 {
                continue;
            }
            p_u[u] += w;
            for x in 0..model.x_size() {
                j_ux[u][x] += w * model.p_x_given_xtilde().prob(xt, x);
            }
            for y in 0..model.y_size() {
                j_uy[u][y] += w * model.p_y_given_xtilde().prob(xt, y);
            }
        }
    }
    let mut p_y = vec![0.0; model.y_size()];
    for row in &j_uy {
        for (y, &p) in row.iter().enumerate() {
            p_y[y] += p;
        }
    }
    let log_post = (0..u_size)
        .map(|u| {
            (0..model.y_size())
                .map(|y| {
                    if p_y[y] > 0.0 && j_uy[u][y] > 0.0 {
                        (j_uy[u][y] / p_y[y]).log2()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        })
        .collect();
    Ok(AuxTables {
        p_u,
        j_ux,
        j_uy,
        p_y,
        log_post,
    })
}

/// Log-posterior score of sequence `seq_index` against `y_syms`.
fn score_sequence(
    mut seq_index: usize,
    n: usize,
    u_size: usize,
    y_syms: &[usize],
    log_post: &[Vec<f64>],
) -> f64 {
    let mut score = 0.0;
    for k in (0..n).rev() {
        score += log_post[seq_index % u_size][y_syms[k]];
        seq_index /= u_size;
    }
    score
}

/// Maximum-likelihood member of a candidate list (ascending sequence
/// indices); ties break to the smallest index.
fn best_candidate(
    members: impl IntoIterator<Item = usize>,
    n: usize,
    u_size: usize,
    y_syms: &[usize],
    log_post: &[Vec<f64>],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for idx in members {
        let score = score_sequence(idx, n, u_size, y_syms, log_post);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((idx, score));
        }
    }
    best.map(|(idx, _)| idx)
}

/// Member sequence indices of every `(w, c)` bin, ascending.
fn bin_groups(code: &BinningCode) -> Vec<Vec<u32>> {
    let mut groups = vec![Vec::new(); code.w_size as usize * code.c_size as usize];
    for (i, &(_, w, c)) in code.bins.iter().enumerate() {
        groups[w as usize * code.c_size as usize + c as usize].push(i as u32);
    }
    groups
}

#[derive(Debug, Clone)]
pub struct GsEncoding {
    pub u_seq: Vec<usize>,
    pub s: u32,
    pub w: u32,
    pub c: u32,
}

/// Generated-secret encoder: sample `u_i ~ P(U | x~_i)` memorylessly and read
/// the bin indices off the code.
pub fn encode_gs(
    code: &BinningCode,
    model: &SourceBcModel,
    aux: &Channel,
    xt_seq: &[usize],
    seed: u64,
) -> Result<GsEncoding> {
    if aux.input_size() != model.xtilde_size() || aux.output_size() != code.u_size {
        return Err(Error::DimensionMismatch(
            "aux channel does not match model/code alphabets".into(),
        ));
    }
    if xt_seq.len() != code.n || xt_seq.iter().any(|&s| s >= model.xtilde_size()) {
        return Err(Error::DimensionMismatch(format!(
            "x~ sequence of length {} over alphabet {} expected",
            code.n,
            model.xtilde_size()
        )));
    }
    let mut rng = CounterRng::new(seed, STREAM_ENCODER);
    let u_seq: Vec<usize> = xt_seq
        .iter()
        .map(|&xt| rng.sample_pmf(aux.row(xt)))
        .collect();
    let (s, w, c) = code.bin_of(&u_seq)?;
    Ok(GsEncoding { u_seq, s, w, c })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwDecoded {
    pub u_hat: Vec<usize>,
    pub s_hat: u32,
}

/// Slepian-Wolf decoder: maximum-likelihood sequence within the `(w, c)` bin
/// given side information `y_seq`. Ties break to the smallest sequence index;
/// an empty bin is a declared decoding failure (`None`).
pub fn decode_sw(
    code: &BinningCode,
    model: &SourceBcModel,
    aux: &Channel,
    y_seq: &[usize],
    w: u32,
    c: u32,
) -> Result<Option<SwDecoded>> {
    if w >= code.w_size || c >= code.c_size {
        return Err(Error::OutOfRange(format!(
            "bin indices ({w}, {c}) outside ({}, {})",
            code.w_size, code.c_size
        )));
    }
    if y_seq.len() != code.n || y_seq.iter().any(|&y| y >= model.y_size()) {
        return Err(Error::DimensionMismatch(format!(
            "y sequence of length {} over alphabet {} expected",
            code.n,
            model.y_size()
        )));
    }
    let tables = aux_tables(model, aux)?;
    let members = code
        .bins
        .iter()
        .enumerate()
        .filter(|&(_, &(_, bw, bc))| bw == w && bc == c)
        .map(|(i, _)| i);
    Ok(
        best_candidate(members, code.n, code.u_size, y_seq, &tables.log_post).map(|idx| {
            SwDecoded {
                u_hat: sequence_symbols(idx, code.n, code.u_size),
                s_hat: code.bins[idx].0,
            }
        }),
    )
}

#[derive(Debug, Clone)]
pub struct CsRun {
    /// Stored helper data: the padded key `s' + s mod |S|` and the GS helper.
    pub padded_key: u32,
    pub helper_w: u32,
    pub public_c: u32,
    /// Recovered embedded key; `None` on decoding failure.
    pub s_hat: Option<u32>,
    pub gs_key: u32,
    pub gs_key_hat: Option<u32>,
    pub y_seq: Vec<usize>,
}

/// Chosen-secret protocol round: run the GS encoder on `xt_seq`, one-time-pad
/// the embedded key, transmit `y^n` drawn from the model's decoder view, and
/// unpad after Slepian-Wolf decoding. The correctness event coincides with
/// the GS one: `s_hat == s_embedded` iff the generated key was recovered.
pub fn run_cs(
    code: &BinningCode,
    model: &SourceBcModel,
    aux: &Channel,
    s_embedded: u32,
    xt_seq: &[usize],
    seed: u64,
) -> Result<CsRun> {
    if s_embedded >= code.s_size {
        return Err(Error::OutOfRange(format!(
            "embedded key {s_embedded} outside |S| = {}",
            code.s_size
        )));
    }
    let gs = encode_gs(code, model, aux, xt_seq, seed)?;
    let mut rng = CounterRng::new(seed, STREAM_CHANNEL);
    let y_seq: Vec<usize> = xt_seq
        .iter()
        .map(|&xt| rng.sample_pmf(model.p_y_given_xtilde().row(xt)))
        .collect();
    let padded_key = (gs.s + s_embedded) % code.s_size;
    let decoded = decode_sw(code, model, aux, &y_seq, gs.w, gs.c)?;
    let gs_key_hat = decoded.as_ref().map(|d| d.s_hat);
    let s_hat = gs_key_hat.map(|sh| (padded_key + code.s_size - sh) % code.s_size);
    Ok(CsRun {
        padded_key,
        helper_w: gs.w,
        public_c: gs.c,
        s_hat,
        gs_key: gs.s,
        gs_key_hat,
        y_seq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Exact,
    MonteCarlo,
}

/// Evaluation of one binning against the achievability constraints:
/// reliability, strong secrecy, privacy, uniformity. Leakages are in total
/// bits (not per symbol). Monte-Carlo mode reports the mutual-information
/// fields as absent rather than biased plug-in estimates.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub n: usize,
    pub seed: u64,
    pub mode: EvalMode,
    pub trials: Option<u64>,
    pub s_size: u32,
    pub w_size: u32,
    pub c_size: u32,
    pub requested_rate_s: f64,
    pub requested_rate_w: f64,
    pub requested_rate_c: f64,
    pub realized_rate_s: f64,
    pub realized_rate_w: f64,
    pub realized_rate_c: f64,
    /// `Pr[S != S^]`.
    pub error_prob: f64,
    /// `I(S; W | C)` in bits.
    pub secrecy_leak: Option<f64>,
    /// `I(S; W)` in bits.
    pub secrecy_leak_unconditional: Option<f64>,
    /// `I(X^n; W | C)` in bits.
    pub privacy_leak: Option<f64>,
    /// `I(X^n; W)` in bits.
    pub privacy_leak_unconditional: Option<f64>,
    /// `H(S)` in bits.
    pub key_entropy: f64,
    /// `log2 |S| - H(S)`.
    pub uniformity_deficit: f64,
}

/// `I(A;B|C)` for a dense table laid out as `((a * nb) + b) * nc + c`.
fn conditional_mi_3d(p: &[f64], na: usize, nb: usize, nc: usize) -> f64 {
    let mut p_c = vec![0.0; nc];
    let mut p_ac = vec![0.0; na * nc];
    let mut p_bc = vec![0.0; nb * nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let v = p[(a * nb + b) * nc + c];
                p_c[c] += v;
                p_ac[a * nc + c] += v;
                p_bc[b * nc + c] += v;
            }
        }
    }
    let mut mi = 0.0;
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let v = p[(a * nb + b) * nc + c];
                if v > 0.0 {
                    mi += v * (v * p_c[c] / (p_ac[a * nc + c] * p_bc[b * nc + c])).log2();
                }
            }
        }
    }
    crate::info::clamp_mi(mi)
}

/// `I(A;B)` for the same layout, marginalizing `c`.
fn pairwise_mi_3d(p: &[f64], na: usize, nb: usize, nc: usize) -> f64 {
    let mut p_ab = vec![0.0; na * nb];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                p_ab[a * nb + b] += p[(a * nb + b) * nc + c];
            }
        }
    }
    let mut p_a = vec![0.0; na];
    let mut p_b = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            p_a[a] += p_ab[a * nb + b];
            p_b[b] += p_ab[a * nb + b];
        }
    }
    let mut mi = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let v = p_ab[a * nb + b];
            if v > 0.0 {
                mi += v * (v / (p_a[a] * p_b[b])).log2();
            }
        }
    }
    crate::info::clamp_mi(mi)
}

fn exact_guard(code: &BinningCode, model: &SourceBcModel) -> Result<()> {
    let nu = (code.u_size as u128).pow(code.n as u32);
    let nx = (model.x_size() as u128).checked_pow(code.n as u32);
    let ny = (model.y_size() as u128).checked_pow(code.n as u32);
    let wc = code.w_size as u128 * code.c_size as u128;
    let ok = nu <= MAX_EXACT_SEQUENCES
        && nx.is_some_and(|nx| nx * nu <= MAX_EXACT_WORK && nx * wc <= MAX_EXACT_WORK)
        && ny.is_some_and(|ny| ny * nu <= MAX_EXACT_WORK);
    if ok {
        Ok(())
    } else {
        Err(Error::ResourceGuard(format!(
            "exact evaluation infeasible for u_size^n = {}^{}, |X| = {}, |Y| = {}; \
             use monte_carlo mode",
            code.u_size,
            code.n,
            model.x_size(),
            model.y_size()
        )))
    }
}

/// Joint distribution `P(s, w, c)` of the bin indices of an i.i.d. `U^n`.
fn index_distribution(code: &BinningCode, p_u: &[f64]) -> Vec<f64> {
    let (s_size, w_size, c_size) = (
        code.s_size as usize,
        code.w_size as usize,
        code.c_size as usize,
    );
    let mut p_swc = vec![0.0; s_size * w_size * c_size];
    for (i, &(s, w, c)) in code.bins.iter().enumerate() {
        let mut prob = 1.0;
        let mut idx = i;
        for _ in 0..code.n {
            prob *= p_u[idx % code.u_size];
            idx /= code.u_size;
        }
        p_swc[(s as usize * w_size + w as usize) * c_size + c as usize] += prob;
    }
    p_swc
}

/// Exact decoding error probability `Pr[S != S^]` by enumerating `(u^n, y^n)`
/// pairs; parallel over `y^n` with a fixed summation order.
fn exact_error_prob(code: &BinningCode, tables: &AuxTables) -> f64 {
    let n = code.n;
    let u_size = code.u_size;
    let y_size = tables.p_y.len();
    let nu = code.bins.len();
    let ny = (y_size as u128).pow(n as u32) as usize;
    let groups = bin_groups(code);

    let partials: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|y_index| {
            let y_syms = sequence_symbols(y_index, n, y_size);
            if y_syms.iter().any(|&y| tables.p_y[y] == 0.0) {
                return 0.0;
            }
            // Decode once per occupied (w, c) bin, then charge every source
            // sequence its joint weight with this y^n.
            let decoded_s: Vec<Option<u32>> = groups
                .iter()
                .map(|members| {
                    best_candidate(
                        members.iter().map(|&m| m as usize),
                        n,
                        u_size,
                        &y_syms,
                        &tables.log_post,
                    )
                    .map(|idx| code.bins[idx].0)
                })
                .collect();
            let mut err = 0.0;
            for u_index in 0..nu {
                let (s, w, c) = code.bins[u_index];
                let mut weight = 1.0;
                let mut idx = u_index;
                for k in (0..n).rev() {
                    weight *= tables.j_uy[idx % u_size][y_syms[k]];
                    idx /= u_size;
                }
                if weight == 0.0 {
                    continue;
                }
                let group = w as usize * code.c_size as usize + c as usize;
                if decoded_s[group] != Some(s) {
                    err += weight;
                }
            }
            err
        })
        .collect();
    partials.iter().sum::<f64>().clamp(0.0, 1.0)
}

/// Exact evaluation of all constraint metrics by full enumeration.
pub fn evaluate_exact(
    code: &BinningCode,
    model: &SourceBcModel,
    aux: &Channel,
) -> Result<SimReport> {
    let tables = aux_tables(model, aux)?;
    if aux.output_size() != code.u_size {
        return Err(Error::DimensionMismatch(format!(
            "aux alphabet {} vs code alphabet {}",
            aux.output_size(),
            code.u_size
        )));
    }
    exact_guard(code, model)?;

    let (s_size, w_size, c_size) = (
        code.s_size as usize,
        code.w_size as usize,
        code.c_size as usize,
    );
    let p_swc = index_distribution(code, &tables.p_u);

    let secrecy_leak = conditional_mi_3d(&p_swc, s_size, w_size, c_size);
    let secrecy_leak_unconditional = pairwise_mi_3d(&p_swc, s_size, w_size, c_size);

    let mut p_s = vec![0.0; s_size];
    for s in 0..s_size {
        for w in 0..w_size {
            for c in 0..c_size {
                p_s[s] += p_swc[(s * w_size + w) * c_size + c];
            }
        }
    }
    let key_entropy = entropy_slice(&p_s);
    let uniformity_deficit = ((s_size as f64).log2() - key_entropy).max(0.0);

    // P(x^n, w, c) by expanding each source sequence's product measure over
    // x^n.
    let nx = (model.x_size() as u128).pow(code.n as u32) as usize;
    let mut p_xwc = vec![0.0; nx * w_size * c_size];
    for (u_index, &(_, w, c)) in code.bins.iter().enumerate() {
        let u_syms = sequence_symbols(u_index, code.n, code.u_size);
        let mut acc = vec![1.0];
        for &u in &u_syms {
            let row = &tables.j_ux[u];
            let mut next = Vec::with_capacity(acc.len() * row.len());
            for &a in &acc {
                for &b in row {
                    next.push(a * b);
                }
            }
            acc = next;
        }
        let offset = w as usize * c_size + c as usize;
        for (x_index, &v) in acc.iter().enumerate() {
            p_xwc[x_index * w_size * c_size + offset] += v;
        }
    }
    let privacy_leak = conditional_mi_3d(&p_xwc, nx, w_size, c_size);
    let privacy_leak_unconditional = pairwise_mi_3d(&p_xwc, nx, w_size, c_size);

    let error_prob = exact_error_prob(code, &tables);

    let (rr_s, rr_w, rr_c) = code.realized_rates();
    Ok(SimReport {
        n: code.n,
        seed: code.seed,
        mode: EvalMode::Exact,
        trials: None,
        s_size: code.s_size,
        w_size: code.w_size,
        c_size: code.c_size,
        requested_rate_s: code.rates.rate_s,
        requested_rate_w: code.rates.rate_w,
        requested_rate_c: code.rates.rate_c,
        realized_rate_s: rr_s,
        realized_rate_w: rr_w,
        realized_rate_c: rr_c,
        error_prob,
        secrecy_leak: Some(secrecy_leak),
        secrecy_leak_unconditional: Some(secrecy_leak_unconditional),
        privacy_leak: Some(privacy_leak),
        privacy_leak_unconditional: Some(privacy_leak_unconditional),
        key_entropy,
        uniformity_deficit,
    })
}

/// Exact chosen-secret metrics, derived from the same enumeration as the GS
/// ones plus the one-time-pad layer with a uniform embedded key.
#[derive(Debug, Clone, Serialize)]
pub struct CsExactReport {
    /// `Pr[S != S^]` with the embedded key averaged uniformly. Term-by-term
    /// equal to the GS error probability: the pad is a bijection.
    pub error_prob: f64,
    /// `I(S; S' + S | W', C')`: what the padded key index reveals about the
    /// embedded key given the rest of the stored helper data.
    pub pad_secrecy_leak: f64,
    /// `I(S'; C')` of the underlying GS code; the pad leak exceeds the GS
    /// uniformity deficit plus secrecy leak by exactly this much.
    pub gs_code_leak: f64,
}

pub fn evaluate_exact_cs(
    code: &BinningCode,
    model: &SourceBcModel,
    aux: &Channel,
) -> Result<CsExactReport> {
    let tables = aux_tables(model, aux)?;
    if aux.output_size() != code.u_size {
        return Err(Error::DimensionMismatch(format!(
            "aux alphabet {} vs code alphabet {}",
            aux.output_size(),
            code.u_size
        )));
    }
    exact_guard(code, model)?;
    let (s_size, w_size, c_size) = (
        code.s_size as usize,
        code.w_size as usize,
        code.c_size as usize,
    );
    if (s_size as u128) * (s_size as u128) * (w_size as u128) * (c_size as u128) > MAX_EXACT_WORK {
        return Err(Error::ResourceGuard("pad leakage table too large".into()));
    }

    // Error probability with the embedded key enumerated explicitly. For
    // every (u^n, y^n) the unpadding error count is |S| * 1{s'^ != s'}, so
    // the average reproduces the GS sum exactly.
    let n = code.n;
    let u_size = code.u_size;
    let y_size = tables.p_y.len();
    let ny = (y_size as u128).pow(n as u32) as usize;
    let groups = bin_groups(code);
    let partials: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|y_index| {
            let y_syms = sequence_symbols(y_index, n, y_size);
            if y_syms.iter().any(|&y| tables.p_y[y] == 0.0) {
                return 0.0;
            }
            let decoded_s: Vec<Option<u32>> = groups
                .iter()
                .map(|members| {
                    best_candidate(
                        members.iter().map(|&m| m as usize),
                        n,
                        u_size,
                        &y_syms,
                        &tables.log_post,
                    )
                    .map(|idx| code.bins[idx].0)
                })
                .collect();
            let mut err = 0.0;
            for (u_index, &(s_prime, w, c)) in code.bins.iter().enumerate() {
                let mut weight = 1.0;
                let mut idx = u_index;
                for k in (0..n).rev() {
                    weight *= tables.j_uy[idx % u_size][y_syms[k]];
                    idx /= u_size;
                }
                if weight == 0.0 {
                    continue;
                }
                let group = w as usize * code.c_size as usize + c as usize;
                let mut bad = 0u32;
                for s in 0..code.s_size {
                    let v = (s_prime + s) % code.s_size;
                    let s_hat = decoded_s[group].map(|sh| (v + code.s_size - sh) % code.s_size);
                    if s_hat != Some(s) {
                        bad += 1;
                    }
                }
                err += weight * f64::from(bad) / f64::from(code.s_size);
            }
            err
        })
        .collect();
    let error_prob = partials.iter().sum::<f64>().clamp(0.0, 1.0);

    // P(s, v, (w, c)) with v = s' + s and s uniform independent.
    let p_swc = index_distribution(code, &tables.p_u);
    let wc = w_size * c_size;
    let mut p_pad = vec![0.0; s_size * s_size * wc];
    for s in 0..s_size {
        for v in 0..s_size {
            let s_prime = (v + s_size - s) % s_size;
            for w in 0..w_size {
                for c in 0..c_size {
                    p_pad[(s * s_size + v) * wc + w * c_size + c] +=
                        p_swc[(s_prime * w_size + w) * c_size + c] / s_size as f64;
                }
            }
        }
    }
    let pad_secrecy_leak = conditional_mi_3d(&p_pad, s_size, s_size, wc);

    // I(S'; C') from the (s, c) marginal.
    let mut p_sc = vec![0.0; s_size * c_size];
    for s in 0..s_size {
        for w in 0..w_size {
            for c in 0..c_size {
                p_sc[s * c_size + c] += p_swc[(s * w_size + w) * c_size + c];
            }
        }
    }
    let gs_code_leak = pairwise_mi_3d(&p_sc, s_size, c_size, 1);

    Ok(CsExactReport {
        error_prob,
        pad_secrecy_leak,
        gs_code_leak,
    })
}

/// Monte-Carlo estimate over i.i.d. protocol runs. Estimates the error
/// probability and the key histogram; the mutual-information metrics are
/// deliberately absent because plug-in estimates over the helper alphabet
/// are badly biased at these sample sizes.
pub fn evaluate_monte_carlo(
    code: &BinningCode,
    model: &SourceBcModel,
    aux: &Channel,
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    if trials < 1 {
        return Err(Error::OutOfRange("trials must be >= 1".into()));
    }
    let tables = aux_tables(model, aux)?;
    if aux.output_size() != code.u_size {
        return Err(Error::DimensionMismatch(format!(
            "aux alphabet {} vs code alphabet {}",
            aux.output_size(),
            code.u_size
        )));
    }
    let groups = bin_groups(code);
    let n = code.n;

    let outcomes: Vec<(bool, u32)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let base = t * n as u64;
            let mut src = CounterRng::at(seed, STREAM_SOURCE, base);
            let mut enc = CounterRng::at(seed, STREAM_ENCODER, base);
            let mut ch = CounterRng::at(seed, STREAM_CHANNEL, base);
            let mut u_seq = Vec::with_capacity(n);
            let mut y_syms = Vec::with_capacity(n);
            for _ in 0..n {
                let xt = src.sample_pmf(model.p_xtilde().probs());
                u_seq.push(enc.sample_pmf(aux.row(xt)));
                y_syms.push(ch.sample_pmf(model.p_y_given_xtilde().row(xt)));
            }
            let u_index = sequence_index(&u_seq, code.u_size);
            let (s, w, c) = code.bins[u_index];
            let group = w as usize * code.c_size as usize + c as usize;
            let decoded = best_candidate(
                groups[group].iter().map(|&m| m as usize),
                n,
                code.u_size,
                &y_syms,
                &tables.log_post,
            );
            let err = decoded.map(|idx| code.bins[idx].0) != Some(s);
            (err, s)
        })
        .collect();

    let mut errors = 0u64;
    let mut histogram = vec![0u64; code.s_size as usize];
    for (err, s) in outcomes {
        errors += err as u64;
        histogram[s as usize] += 1;
    }
    let key_pmf: Vec<f64> = histogram
        .iter()
        .map(|&c| c as f64 / trials as f64)
        .collect();
    let key_entropy = entropy_slice(&key_pmf);

    let (rr_s, rr_w, rr_c) = code.realized_rates();
    Ok(SimReport {
        n,
        seed: code.seed,
        mode: EvalMode::MonteCarlo,
        trials: Some(trials),
        s_size: code.s_size,
        w_size: code.w_size,
        c_size: code.c_size,
        requested_rate_s: code.rates.rate_s,
        requested_rate_w: code.rates.rate_w,
        requested_rate_c: code.rates.rate_c,
        realized_rate_s: rr_s,
        realized_rate_w: rr_w,
        realized_rate_c: rr_c,
        error_prob: errors as f64 / trials as f64,
        secrecy_leak: None,
        secrecy_leak_unconditional: None,
        privacy_leak: None,
        privacy_leak_unconditional: None,
        key_entropy,
        uniformity_deficit: ((code.s_size as f64).log2() - key_entropy).max(0.0),
    })
}
