//! Achievable key-leakage-storage rate tuples and boundary curves for the
//! generated-secret (GS) and chosen-secret (CS) models.
//!
//! For a fixed aux channel `P(u | x~)` the extreme achievable tuple is
//!
//! ```text
//! R_s = I(U;Y)
//! R_l = max(0, I(U;X) - I(U;Y))
//! R_w = I(U;X~) - I(U;Y)      (GS)   /   I(U;X~)   (CS)
//! ```
//!
//! with `U - X~ - (X, Y)` a Markov chain. Boundary curves sweep the aux
//! channel, either over BSC crossovers (the symmetric-binary case the
//! worked example uses) or over a general simplex grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{bsc, mutual_information_from_joint, Channel, PROB_TOL};
use crate::model::SourceBcModel;
use crate::rng::CounterRng;

const STREAM_SWEEP: u64 = 6;
/// Cap on general-sweep grid size.
const SWEEP_GRID_CAP: u128 = 500_000;

/// Aux cardinality beyond `|X~| + 2` never enlarges the regions.
pub fn aux_cardinality_bound(model: &SourceBcModel) -> usize {
    model.xtilde_size() + 2
}

/// One achievable (secret-key, privacy-leakage, storage) triple in
/// bits/symbol, clamped at zero against roundoff.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateTuple {
    pub r_s: f64,
    pub r_l: f64,
    pub r_w: f64,
}

impl RateTuple {
    pub fn new(r_s: f64, r_l: f64, r_w: f64) -> Self {
        Self {
            r_s: r_s.max(0.0),
            r_l: r_l.max(0.0),
            r_w: r_w.max(0.0),
        }
    }

    /// Pareto dominance: at least as good in every coordinate and strictly
    /// better in one.
    pub fn dominates(&self, other: &RateTuple) -> bool {
        self.r_s >= other.r_s
            && self.r_l <= other.r_l
            && self.r_w <= other.r_w
            && (self.r_s > other.r_s || self.r_l < other.r_l || self.r_w < other.r_w)
    }
}

/// The three mutual informations behind a rate tuple.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct MiValues {
    pub mi_uy: f64,
    pub mi_ux: f64,
    pub mi_uxt: f64,
}

/// One evaluated aux channel on a boundary curve.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    /// Crossover of the BSC aux for BSC-parametrized sweeps.
    pub alpha: Option<f64>,
    /// The aux channel itself for general sweeps.
    pub aux: Option<Channel>,
    pub gs: RateTuple,
    pub cs: RateTuple,
    pub mi: MiValues,
}

/// A parametrized boundary curve for one model.
#[derive(Debug, Clone)]
pub struct RegionBoundary {
    /// Free-form model/scenario descriptor carried into reports.
    pub descriptor: String,
    pub points: Vec<BoundaryPoint>,
    pub pareto_filtered: bool,
}

/// Evaluate one aux channel `P(u | x~)` against a model: both model variants
/// plus the underlying mutual informations.
pub fn evaluate_aux(model: &SourceBcModel, aux: &Channel) -> Result<BoundaryPoint> {
    if aux.input_size() != model.xtilde_size() {
        return Err(Error::DimensionMismatch(format!(
            "aux input {} vs |X~| = {}",
            aux.input_size(),
            model.xtilde_size()
        )));
    }
    let u_size = aux.output_size();
    let mut j_uxt = vec![vec![0.0; model.xtilde_size()]; u_size];
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
            j_uxt[u][xt] += w;
            for x in 0..model.x_size() {
                j_ux[u][x] += w * model.p_x_given_xtilde().prob(xt, x);
            }
            for y in 0..model.y_size() {
                j_uy[u][y] += w * model.p_y_given_xtilde().prob(xt, y);
            }
        }
    }
    let mi = MiValues {
        mi_uy: mutual_information_from_joint(&j_uy),
        mi_ux: mutual_information_from_joint(&j_ux),
        mi_uxt: mutual_information_from_joint(&j_uxt),
    };
    // The leakage clamp is part of the formula; the storage clamp only
    // absorbs roundoff since I(U;X~) >= I(U;Y) by data processing.
    let r_l = (mi.mi_ux - mi.mi_uy).max(0.0);
    debug_assert!(mi.mi_uxt - mi.mi_uy >= -1e-9);
    let gs = RateTuple::new(mi.mi_uy, r_l, mi.mi_uxt - mi.mi_uy);
    let cs = RateTuple::new(mi.mi_uy, r_l, mi.mi_uxt);
    Ok(BoundaryPoint {
        alpha: None,
        aux: None,
        gs,
        cs,
        mi,
    })
}

/// GS-model extreme tuple for one aux channel, with its mutual informations.
pub fn rate_tuple_gs(model: &SourceBcModel, aux: &Channel) -> Result<(RateTuple, MiValues)> {
    let p = evaluate_aux(model, aux)?;
    Ok((p.gs, p.mi))
}

/// CS-model extreme tuple for one aux channel.
pub fn rate_tuple_cs(model: &SourceBcModel, aux: &Channel) -> Result<RateTuple> {
    Ok(evaluate_aux(model, aux)?.cs)
}

/// Sweep BSC aux channels `P(u | x~) = BSC(alpha)` over the given crossover
/// grid.
///
/// Requires binary `X~` with a uniform marginal: that is what makes the
/// forward BSC parametrization coincide with the reverse `P(x~ | u)` the
/// boundary is indexed by. Anything else must go through [`sweep_general`].
pub fn sweep_bsc(model: &SourceBcModel, alphas: &[f64]) -> Result<RegionBoundary> {
    if model.xtilde_size() != 2 {
        return Err(Error::InvalidArgument(format!(
            "sweep_bsc needs binary X~ (got |X~| = {}); use sweep_general",
            model.xtilde_size()
        )));
    }
    if (model.p_xtilde().get(0) - 0.5).abs() > PROB_TOL {
        return Err(Error::InvalidArgument(format!(
            "sweep_bsc needs a uniform X~ marginal (got P(0) = {}); use sweep_general",
            model.p_xtilde().get(0)
        )));
    }
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("empty alpha grid".into()));
    }
    for w in alphas.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(format!(
                "alpha grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }

    let points = alphas
        .par_iter()
        .map(|&alpha| {
            let aux = bsc(alpha)?;
            let mut point = evaluate_aux(model, &aux)?;
            point.alpha = Some(alpha);
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RegionBoundary {
        descriptor: String::new(),
        points,
        pareto_filtered: false,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GeneralSweepOptions {
    pub u_size: usize,
    pub grid_resolution: usize,
    pub random_samples: usize,
    pub seed: u64,
}

/// Sweep general aux channels of alphabet size `u_size` over a simplex grid
/// plus random samples, and keep the Pareto frontier of the GS tuples.
///
/// Deterministic given the options; points come out in `(-r_s, r_w)` order.
pub fn sweep_general(model: &SourceBcModel, opts: &GeneralSweepOptions) -> Result<RegionBoundary> {
    if opts.u_size < 1 {
        return Err(Error::InvalidArgument("u_size must be >= 1".into()));
    }
    if opts.u_size > aux_cardinality_bound(model) {
        return Err(Error::InvalidArgument(format!(
            "u_size {} exceeds the cardinality bound |X~| + 2 = {}",
            opts.u_size,
            aux_cardinality_bound(model)
        )));
    }
    let rows = simplex_grid(opts.grid_resolution.max(1), opts.u_size);
    let total = (rows.len() as u128)
        .checked_pow(model.xtilde_size() as u32)
        .filter(|&c| c <= SWEEP_GRID_CAP)
        .ok_or_else(|| {
            Error::ResourceGuard(format!(
                "general sweep grid of {}^{} aux channels exceeds {}",
                rows.len(),
                model.xtilde_size(),
                SWEEP_GRID_CAP
            ))
        })? as usize;

    let mut candidates: Vec<Vec<Vec<f64>>> = Vec::with_capacity(total + opts.random_samples);
    for mut idx in 0..total {
        let mut aux_rows = Vec::with_capacity(model.xtilde_size());
        for _ in 0..model.xtilde_size() {
            aux_rows.push(rows[idx % rows.len()].clone());
            idx /= rows.len();
        }
        candidates.push(aux_rows);
    }
    let mut rng = CounterRng::new(opts.seed, STREAM_SWEEP);
    for _ in 0..opts.random_samples {
        candidates.push(
            (0..model.xtilde_size())
                .map(|_| rng.sample_simplex(opts.u_size))
                .collect(),
        );
    }

    let mut points = candidates
        .into_par_iter()
        .map(|aux_rows| {
            let aux = Channel::new(aux_rows)?;
            let mut point = evaluate_aux(model, &aux)?;
            point.aux = Some(aux);
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;

    let keep = pareto_filter_indices(&points.iter().map(|p| p.gs).collect::<Vec<_>>());
    // Distinct aux channels often hit identical rate tuples (the whole u = 1
    // family collapses to the origin); the boundary keeps one representative.
    let mut filtered: Vec<BoundaryPoint> = Vec::with_capacity(keep.len());
    for i in keep {
        let p = &points[i];
        let duplicate = filtered
            .last()
            .is_some_and(|q: &BoundaryPoint| q.gs == p.gs && q.cs == p.cs);
        if !duplicate {
            filtered.push(p.clone());
        }
    }
    points = filtered;

    Ok(RegionBoundary {
        descriptor: String::new(),
        points,
        pareto_filtered: true,
    })
}

fn simplex_grid(denom: usize, parts: usize) -> Vec<Vec<f64>> {
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

/// Indices of the non-dominated points, ordered by `(-r_s, r_w)` with stable
/// ties.
fn pareto_filter_indices(points: &[RateTuple]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .r_s
            .partial_cmp(&points[a].r_s)
            .unwrap()
            .then(points[a].r_l.partial_cmp(&points[b].r_l).unwrap())
            .then(points[a].r_w.partial_cmp(&points[b].r_w).unwrap())
            .then(a.cmp(&b))
    });
    // In this order any dominator of a point precedes it, so checking against
    // already-retained points suffices.
    let mut retained: Vec<usize> = Vec::new();
    for &i in &order {
        if !retained.iter().any(|&j| points[j].dominates(&points[i])) {
            retained.push(i);
        }
    }
    retained.sort_by(|&a, &b| {
        points[b]
            .r_s
            .partial_cmp(&points[a].r_s)
            .unwrap()
            .then(points[a].r_w.partial_cmp(&points[b].r_w).unwrap())
            .then(a.cmp(&b))
    });
    retained
}

/// Drop dominated tuples; stable `(-r_s, r_w)` order.
pub fn pareto_filter(points: &[RateTuple]) -> Vec<RateTuple> {
    pareto_filter_indices(points)
        .into_iter()
        .map(|i| points[i])
        .collect()
}

/// Extremum of a relative comparison and the grid point achieving it.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ComparisonRow {
    pub alpha: f64,
    /// `(a.r_s - b.r_s) / a.r_s`; absent where `a.r_s == 0`.
    pub key_rate_deficit: Option<f64>,
    /// `(b.r_l - a.r_l) / a.r_l`; absent where `a.r_l == 0`.
    pub leakage_excess: Option<f64>,
}

/// Relative comparison of two boundaries at matched grid points.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub other: String,
    pub max_key_rate_deficit: Option<Extremum>,
    pub max_leakage_excess: Option<Extremum>,
    /// Grid points excluded from each maximum because the baseline rate is
    /// zero there.
    pub key_rate_deficit_excluded: Vec<f64>,
    pub leakage_excess_excluded: Vec<f64>,
    pub per_alpha: Vec<ComparisonRow>,
}

/// Compare boundary `b` against baseline `a` at matched alphas.
pub fn compare_boundaries(a: &RegionBoundary, b: &RegionBoundary) -> Result<ComparisonReport> {
    if a.points.len() != b.points.len() {
        return Err(Error::InvalidArgument(format!(
            "mismatched grids: {} vs {} points",
            a.points.len(),
            b.points.len()
        )));
    }
    let mut per_alpha = Vec::with_capacity(a.points.len());
    let mut max_deficit: Option<Extremum> = None;
    let mut max_excess: Option<Extremum> = None;
    let mut deficit_excluded = Vec::new();
    let mut excess_excluded = Vec::new();

    for (pa, pb) in a.points.iter().zip(&b.points) {
        let (alpha_a, alpha_b) = match (pa.alpha, pb.alpha) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                return Err(Error::InvalidArgument(
                    "compare_boundaries requires BSC-parametrized boundaries".into(),
                ))
            }
        };
        if (alpha_a - alpha_b).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mismatched grids: alpha {alpha_a} vs {alpha_b}"
            )));
        }

        let key_rate_deficit = if pa.gs.r_s > 0.0 {
            let d = (pa.gs.r_s - pb.gs.r_s) / pa.gs.r_s;
            if max_deficit.is_none_or(|m| d > m.value) {
                max_deficit = Some(Extremum {
                    value: d,
                    alpha: alpha_a,
                });
            }
            Some(d)
        } else {
            deficit_excluded.push(alpha_a);
            None
        };
        let leakage_excess = if pa.gs.r_l > 0.0 {
            let e = (pb.gs.r_l - pa.gs.r_l) / pa.gs.r_l;
            if max_excess.is_none_or(|m| e > m.value) {
                max_excess = Some(Extremum {
                    value: e,
                    alpha: alpha_a,
                });
            }
            Some(e)
        } else {
            excess_excluded.push(alpha_a);
            None
        };
        per_alpha.push(ComparisonRow {
            alpha: alpha_a,
            key_rate_deficit,
            leakage_excess,
        });
    }

    Ok(ComparisonReport {
        baseline: a.descriptor.clone(),
        other: b.descriptor.clone(),
        max_key_rate_deficit: max_deficit,
        max_leakage_excess: max_excess,
        key_rate_deficit_excluded: deficit_excluded,
        leakage_excess_excluded: excess_excluded,
        per_alpha,
    })
}

const CSV_HEADER: &str = "alpha,r_s,r_l,r_w_gs,r_w_cs,mi_uy,mi_ux,mi_uxt";

impl RegionBoundary {
    /// Render as CSV, one row per boundary point, floats with 12 significant
    /// digits. General-sweep points carry `NaN` in the alpha column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let alpha = p.alpha.unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}\n",
                alpha, p.gs.r_s, p.gs.r_l, p.gs.r_w, p.cs.r_w, p.mi.mi_uy, p.mi.mi_ux, p.mi.mi_uxt
            ));
        }
        out
    }

    /// Parse the CSV format emitted by [`RegionBoundary::to_csv`].
    pub fn from_csv(descriptor: &str, text: &str) -> Result<RegionBoundary> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "bad CSV header: {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut points = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("CSV line {}: {e}", lineno + 2)))?;
            if fields.len() != 8 {
                return Err(Error::InvalidArgument(format!(
                    "CSV line {}: expected 8 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            points.push(BoundaryPoint {
                alpha: (!fields[0].is_nan()).then_some(fields[0]),
                aux: None,
                gs: RateTuple {
                    r_s: fields[1],
                    r_l: fields[2],
                    r_w: fields[3],
                },
                cs: RateTuple {
                    r_s: fields[1],
                    r_l: fields[2],
                    r_w: fields[4],
                },
                mi: MiValues {
                    mi_uy: fields[5],
                    mi_ux: fields[6],
                    mi_uxt: fields[7],
                },
            });
        }
        Ok(RegionBoundary {
            descriptor: descriptor.to_string(),
            points,
            pareto_filtered: false,
        })
    }
}

/// Evenly spaced alpha grid over `[start, stop]`.
pub fn alpha_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 1 || stop < start || start < 0.0 || stop > 0.5 {
        return Err(Error::InvalidArgument(format!(
            "bad alpha grid: start {start}, stop {stop}, count {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}
