//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantities. Tolerances are pinned in the constants next
//! to each criterion.

#![allow(clippy::needless_range_loop)]

use std::time::Instant;

use kls::info::{bsc, product_channel, Channel, ProbVector};
use kls::model::{
    ApplicableTheorem, ClassifyOptions, LessNoisyDirection, LessNoisyVerdict, MarkovChain,
    SourceBcModel,
};
use kls::osrb::{
    build_binning, choose_rates, evaluate_exact, evaluate_exact_cs, sequence_symbols, Rates,
};
use kls::region::{
    alpha_grid, compare_boundaries, evaluate_aux, pareto_filter, sweep_bsc, RateTuple,
};
use kls::rng::CounterRng;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Uniform binary source, encoder BSC(0.05), decoder as given.
fn scenario_model(p_d: f64, measurements: usize) -> SourceBcModel {
    let dec = product_channel(&bsc(p_d).unwrap(), measurements).unwrap();
    SourceBcModel::from_separate_measurements(ProbVector::uniform(2), &bsc(0.05).unwrap(), &dec)
        .unwrap()
}

/// Criterion 1: the two-measurement scenario costs up to ~19% key rate and
/// ~80% extra leakage against the single clean measurement; four measurements
/// dominate it; three track it within 0.02 bits.
#[test]
fn criterion_1_figure_reproduction() {
    let start = Instant::now();
    let alphas = alpha_grid(0.0, 0.5, 101).unwrap();
    let one = sweep_bsc(&scenario_model(0.05, 1), &alphas).unwrap();
    let two = sweep_bsc(&scenario_model(0.15, 2), &alphas).unwrap();
    let three = sweep_bsc(&scenario_model(0.15, 3), &alphas).unwrap();
    let four = sweep_bsc(&scenario_model(0.15, 4), &alphas).unwrap();

    let cmp = compare_boundaries(&one, &two).unwrap();
    let max_deficit = cmp.max_key_rate_deficit.unwrap();
    let max_excess = cmp.max_leakage_excess.unwrap();
    let pass_a = (max_deficit.value - 0.19).abs() <= 0.03;
    report(
        "1a",
        pass_a,
        &format!(
            "max key-rate deficit {:.4} at alpha {:.3}, target 0.19 +- 0.03",
            max_deficit.value, max_deficit.alpha
        ),
    );

    let pass_b = (max_excess.value - 0.80).abs() <= 0.10;
    report(
        "1b",
        pass_b,
        &format!(
            "max leakage excess {:.4} at alpha {:.3}, target 0.80 +- 0.10",
            max_excess.value, max_excess.alpha
        ),
    );

    let mut worst_dominance_gap: f64 = 0.0;
    for (p1, p4) in one.points.iter().zip(&four.points) {
        worst_dominance_gap = worst_dominance_gap
            .max(p1.gs.r_s - p4.gs.r_s)
            .max(p4.gs.r_l - p1.gs.r_l)
            .max(p4.gs.r_w - p1.gs.r_w);
    }
    let pass_c = worst_dominance_gap <= 1e-6;
    report(
        "1c",
        pass_c,
        &format!("4x vs 1x worst dominance gap {worst_dominance_gap:.3e}, limit 1e-6"),
    );

    let mut worst_similarity_gap: f64 = 0.0;
    for (p1, p3) in one.points.iter().zip(&three.points) {
        worst_similarity_gap = worst_similarity_gap
            .max((p1.gs.r_s - p3.gs.r_s).abs())
            .max((p1.gs.r_l - p3.gs.r_l).abs())
            .max((p1.gs.r_w - p3.gs.r_w).abs());
    }
    let pass_d = worst_similarity_gap <= 0.02;
    report(
        "1d",
        pass_d,
        &format!("3x vs 1x max coordinate gap {worst_similarity_gap:.4}, limit 0.02"),
    );

    let elapsed = start.elapsed().as_secs_f64();
    let pass_time = elapsed < 10.0;
    report(
        "1-runtime",
        pass_time,
        &format!("{elapsed:.2} s, limit 10 s"),
    );
    assert!(pass_a && pass_b && pass_c && pass_d && pass_time);
}

/// Criterion 2: the alpha = 0 endpoint of the single-measurement sweep equals
/// an independent brute-force joint enumeration, and the closed form
/// 1 - H_b(0.05 conv 0.05).
#[test]
fn criterion_2_endpoint_oracle() {
    let start = Instant::now();

    // Oracle: enumerate the (x, x~, y) joint from scratch and compute
    // I(X~;Y) by its definition, without touching the library.
    let p_e = 0.05;
    let p_d = 0.05;
    let mut joint_xty = [[0.0f64; 2]; 2];
    for x in 0..2usize {
        for xt in 0..2usize {
            for y in 0..2usize {
                let p = 0.5
                    * if xt == x { 1.0 - p_e } else { p_e }
                    * if y == x { 1.0 - p_d } else { p_d };
                joint_xty[xt][y] += p;
            }
        }
    }
    let p_xt = [
        joint_xty[0][0] + joint_xty[0][1],
        joint_xty[1][0] + joint_xty[1][1],
    ];
    let p_y = [
        joint_xty[0][0] + joint_xty[1][0],
        joint_xty[0][1] + joint_xty[1][1],
    ];
    let mut oracle_rs = 0.0;
    for xt in 0..2 {
        for y in 0..2 {
            let p = joint_xty[xt][y];
            if p > 0.0 {
                oracle_rs += p * (p / (p_xt[xt] * p_y[y])).log2();
            }
        }
    }

    // Frozen independent evaluation of 1 - H_b(0.095).
    let frozen = 0.547_057_451_812_716_8;
    assert!((oracle_rs - frozen).abs() < 1e-12);

    let sweep = sweep_bsc(&scenario_model(0.05, 1), &[0.0]).unwrap();
    let got = sweep.points[0].gs.r_s;
    let gap = (got - oracle_rs).abs();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = gap <= 1e-9 && elapsed < 1.0;
    report(
        "2",
        pass,
        &format!("R_s {got:.12} vs oracle {oracle_rs:.12}, gap {gap:.2e}, {elapsed:.3} s"),
    );
    assert!(pass);
}

/// Criterion 3: rate-tuple algebra over 1000 random (model, aux) pairs.
#[test]
fn criterion_3_structural_identity() {
    let mut rng = CounterRng::new(2024, 30);
    let mut worst_cs_gap: f64 = 0.0;
    let mut worst_w_gap: f64 = 0.0;
    for _ in 0..1000 {
        let x_size = 2 + (rng.next_below(2) as usize);
        let xt_size = 2 + (rng.next_below(2) as usize);
        let y_size = 2 + (rng.next_below(2) as usize);
        let u_size = 1 + (rng.next_below(4) as usize);
        let px = ProbVector::new(rng.sample_simplex(x_size)).unwrap();
        let enc = Channel::new((0..x_size).map(|_| rng.sample_simplex(xt_size)).collect()).unwrap();
        let dec = Channel::new((0..x_size).map(|_| rng.sample_simplex(y_size)).collect()).unwrap();
        let model = SourceBcModel::from_separate_measurements(px, &enc, &dec).unwrap();
        let aux = Channel::new((0..xt_size).map(|_| rng.sample_simplex(u_size)).collect()).unwrap();
        let p = evaluate_aux(&model, &aux).unwrap();
        worst_cs_gap = worst_cs_gap.max((p.cs.r_w - p.gs.r_w - p.gs.r_s).abs());
        worst_w_gap = worst_w_gap.max((p.gs.r_w - (p.mi.mi_uxt - p.mi.mi_uy)).abs());
    }
    let pass = worst_cs_gap <= 1e-9 && worst_w_gap <= 1e-9;
    report(
        "3",
        pass,
        &format!(
            "1000 pairs: max |cs.r_w - gs.r_w - r_s| = {worst_cs_gap:.2e}, \
             max |gs.r_w - (I(U;X~) - I(U;Y))| = {worst_w_gap:.2e}, limit 1e-9"
        ),
    );
    assert!(pass);
}

/// Criterion 4: classification behaviors - the separate-measurement chain,
/// a decoder-better model, and a certified less-noisy violation.
#[test]
fn criterion_4_classification() {
    // (i) 500 random separate-measurement models satisfy X~ - X - Y.
    let mut rng = CounterRng::new(404, 40);
    let mut worst_dev: f64 = 0.0;
    for _ in 0..500 {
        let x_size = 2 + (rng.next_below(2) as usize);
        let xt_size = 2 + (rng.next_below(2) as usize);
        let y_size = 2 + (rng.next_below(2) as usize);
        let px = ProbVector::new(rng.sample_simplex(x_size)).unwrap();
        let enc = Channel::new((0..x_size).map(|_| rng.sample_simplex(xt_size)).collect()).unwrap();
        let dec = Channel::new((0..x_size).map(|_| rng.sample_simplex(y_size)).collect()).unwrap();
        let model = SourceBcModel::from_separate_measurements(px, &enc, &dec).unwrap();
        let t = model.test_markov_chain(MarkovChain::XtildeXY);
        assert!(t.holds);
        worst_dev = worst_dev.max(t.max_deviation);
    }
    let pass_i = worst_dev <= 1e-12;
    report(
        "4-markov",
        pass_i,
        &format!("500 separate models, max X~-X-Y deviation {worst_dev:.2e}, limit 1e-12"),
    );

    // (ii) Y copies X~, X is a noisy view of Y: physically degraded.
    let q = 0.1;
    let mut rows = vec![vec![0.0; 4]; 2];
    for x in 0..2usize {
        for y in 0..2usize {
            rows[x][y * 2 + y] = if x == y { 1.0 - q } else { q };
        }
    }
    let pd_model = SourceBcModel::from_correlated_noise(
        ProbVector::uniform(2),
        Channel::new(rows).unwrap(),
        2,
        2,
    )
    .unwrap();
    let class = pd_model.classify(&ClassifyOptions::default());
    let pass_ii = class.applicable_theorem == ApplicableTheorem::PdThm2;
    report(
        "4-degraded",
        pass_ii,
        &format!("got {:?}", class.applicable_theorem),
    );

    // (iii) Erasure-vs-BSC model: the grid search certifies that the BSC
    // side is not less noisy than the erasure side.
    let e = 0.3;
    let p = 0.15;
    let mut px = vec![0.0; 3];
    let mut joint = vec![vec![vec![0.0; 2]; 2]; 3]; // [x][xt][y]
    for xt in 0..2usize {
        for x in 0..3usize {
            for y in 0..2usize {
                let p_x_xt = match x {
                    2 => e,
                    _ if x == xt => 1.0 - e,
                    _ => 0.0,
                };
                let p_y_xt = if y == xt { 1.0 - p } else { p };
                joint[x][xt][y] = 0.5 * p_x_xt * p_y_xt;
                px[x] += joint[x][xt][y];
            }
        }
    }
    let bc_rows: Vec<Vec<f64>> = (0..3)
        .map(|x| {
            let mut row = vec![0.0; 4];
            for xt in 0..2 {
                for y in 0..2 {
                    row[xt * 2 + y] = joint[x][xt][y] / px[x];
                }
            }
            row
        })
        .collect();
    let erasure_model = SourceBcModel::from_correlated_noise(
        ProbVector::new(px).unwrap(),
        Channel::new(bc_rows).unwrap(),
        2,
        2,
    )
    .unwrap();
    let res = erasure_model.test_less_noisy(LessNoisyDirection::YOverX, 10, 200, 4);
    let pass_iii = res.verdict == LessNoisyVerdict::CertifiedNo
        && res.witness.as_ref().is_some_and(|w| w.violation > 1e-6);
    report(
        "4-witness",
        pass_iii,
        &res.witness
            .as_ref()
            .map(|w| {
                format!(
                    "certified_no with I(U;X) {:.4} > I(U;Y) {:.4}, violation {:.4}",
                    w.mi_with_x, w.mi_with_y, w.violation
                )
            })
            .unwrap_or_else(|| "no witness found".into()),
    );

    assert!(pass_i && pass_ii && pass_iii);
}

// ---------------------------------------------------------------------------
// Independent full-joint oracle for criterion 5, built from first principles:
// its own per-symbol joint, its own entropy/MI code, its own in-bin decoder.
// It shares only the bin table (data) with the implementation under test.
// ---------------------------------------------------------------------------

struct OsrbOracle {
    /// Per-symbol joint p[u][xt][x][y] for the working point.
    p4: Vec<Vec<Vec<Vec<f64>>>>,
}

impl OsrbOracle {
    /// px = Bern(1/2), encoder BSC(p_e), decoder BSC(p_d), aux BSC(alpha).
    fn working_point(p_e: f64, p_d: f64, alpha: f64) -> Self {
        let mut p4 = vec![vec![vec![vec![0.0; 2]; 2]; 2]; 2];
        for u in 0..2usize {
            for xt in 0..2usize {
                for x in 0..2usize {
                    for y in 0..2usize {
                        p4[u][xt][x][y] = 0.5
                            * if xt == x { 1.0 - p_e } else { p_e }
                            * if y == x { 1.0 - p_d } else { p_d }
                            * if u == xt { 1.0 - alpha } else { alpha };
                    }
                }
            }
        }
        Self { p4 }
    }

    fn p_u(&self) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (u, block) in self.p4.iter().enumerate() {
            out[u] = block.iter().flatten().flatten().sum();
        }
        out
    }

    fn j_uy(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for u in 0..2 {
            for xt in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        out[u][y] += self.p4[u][xt][x][y];
                    }
                }
            }
        }
        out
    }

    fn j_ux(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for u in 0..2 {
            for xt in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        out[u][x] += self.p4[u][xt][x][y];
                    }
                }
            }
        }
        out
    }
}

/// Entropy of a flat table, treated as one joint distribution.
fn oracle_entropy(table: &[f64]) -> f64 {
    table
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// I(A;B|C) via H(A,C) + H(B,C) - H(A,B,C) - H(C) on a dense (a, b, c) table.
fn oracle_cond_mi(p: &[f64], na: usize, nb: usize, nc: usize) -> f64 {
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
    (oracle_entropy(&p_ac) + oracle_entropy(&p_bc) - oracle_entropy(p) - oracle_entropy(&p_c))
        .max(0.0)
}

/// I(A;B) via H(A) + H(B) - H(A,B) after marginalizing c.
fn oracle_pair_mi(p: &[f64], na: usize, nb: usize, nc: usize) -> f64 {
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
    (oracle_entropy(&p_a) + oracle_entropy(&p_b) - oracle_entropy(&p_ab)).max(0.0)
}

/// Criterion 5: exact-mode metrics at n = 4 match the independent full-joint
/// brute force to 1e-9.
#[test]
fn criterion_5_osrb_exact_equivalence() {
    let start = Instant::now();
    let n = 4usize;
    let alpha = 0.1;
    let model = scenario_model(0.05, 1);
    let aux = bsc(alpha).unwrap();
    let rates = choose_rates(&model, &aux, 0.05).unwrap();
    let code = build_binning(n, 2, &rates, 1).unwrap();
    let got = evaluate_exact(&code, &model, &aux).unwrap();

    let oracle = OsrbOracle::working_point(0.05, 0.05, alpha);
    let p_u = oracle.p_u();
    let j_uy = oracle.j_uy();
    let j_ux = oracle.j_ux();
    let (s_size, w_size, c_size) = code.index_sizes();
    let (s_size, w_size, c_size) = (s_size as usize, w_size as usize, c_size as usize);
    let num_seq = 1usize << n;

    // P(s, w, c).
    let mut p_swc = vec![0.0; s_size * w_size * c_size];
    for i in 0..num_seq {
        let syms = sequence_symbols(i, n, 2);
        let prob: f64 = syms.iter().map(|&u| p_u[u]).product();
        let (s, w, c) = code.bin_of_index(i);
        p_swc[(s as usize * w_size + w as usize) * c_size + c as usize] += prob;
    }
    let want_secrecy = oracle_cond_mi(&p_swc, s_size, w_size, c_size);
    let want_secrecy_uncond = oracle_pair_mi(&p_swc, s_size, w_size, c_size);
    let mut p_s = vec![0.0; s_size];
    for s in 0..s_size {
        for w in 0..w_size {
            for c in 0..c_size {
                p_s[s] += p_swc[(s * w_size + w) * c_size + c];
            }
        }
    }
    let want_key_entropy = oracle_entropy(&p_s);
    let want_deficit = ((s_size as f64).log2() - want_key_entropy).max(0.0);

    // P(x^n, w, c) over all (u^n, x^n) pairs.
    let mut p_xwc = vec![0.0; num_seq * w_size * c_size];
    for i in 0..num_seq {
        let u_syms = sequence_symbols(i, n, 2);
        let (_, w, c) = code.bin_of_index(i);
        for xs in 0..num_seq {
            let x_syms = sequence_symbols(xs, n, 2);
            let prob: f64 = u_syms
                .iter()
                .zip(&x_syms)
                .map(|(&u, &x)| j_ux[u][x])
                .product();
            p_xwc[(xs * w_size + w as usize) * c_size + c as usize] += prob;
        }
    }
    let want_privacy = oracle_cond_mi(&p_xwc, num_seq, w_size, c_size);
    let want_privacy_uncond = oracle_pair_mi(&p_xwc, num_seq, w_size, c_size);

    // Exact error probability with the oracle's own in-bin decoder.
    let p_y = [j_uy[0][0] + j_uy[1][0], j_uy[0][1] + j_uy[1][1]];
    let mut want_error = 0.0;
    for ys in 0..num_seq {
        let y_syms = sequence_symbols(ys, n, 2);
        for i in 0..num_seq {
            let u_syms = sequence_symbols(i, n, 2);
            let weight: f64 = u_syms
                .iter()
                .zip(&y_syms)
                .map(|(&u, &y)| j_uy[u][y])
                .product();
            if weight == 0.0 {
                continue;
            }
            let (s, w, c) = code.bin_of_index(i);
            let mut best: Option<(usize, f64)> = None;
            for cand in 0..num_seq {
                let (_, cw, cc) = code.bin_of_index(cand);
                if (cw, cc) != (w, c) {
                    continue;
                }
                let cand_syms = sequence_symbols(cand, n, 2);
                let score: f64 = cand_syms
                    .iter()
                    .zip(&y_syms)
                    .map(|(&u, &y)| (j_uy[u][y] / p_y[y]).log2())
                    .sum();
                if best.is_none() || score > best.unwrap().1 {
                    best = Some((cand, score));
                }
            }
            let decoded_s = code.bin_of_index(best.unwrap().0).0;
            if decoded_s != s {
                want_error += weight;
            }
        }
    }

    let checks = [
        ("error_prob", got.error_prob, want_error),
        ("secrecy_leak", got.secrecy_leak.unwrap(), want_secrecy),
        (
            "secrecy_leak_uncond",
            got.secrecy_leak_unconditional.unwrap(),
            want_secrecy_uncond,
        ),
        ("privacy_leak", got.privacy_leak.unwrap(), want_privacy),
        (
            "privacy_leak_uncond",
            got.privacy_leak_unconditional.unwrap(),
            want_privacy_uncond,
        ),
        ("key_entropy", got.key_entropy, want_key_entropy),
        ("uniformity_deficit", got.uniformity_deficit, want_deficit),
    ];
    let mut worst: f64 = 0.0;
    for (name, got_v, want_v) in checks {
        let gap = (got_v - want_v).abs();
        worst = worst.max(gap);
        assert!(gap <= 1e-9, "{name}: got {got_v}, oracle {want_v}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = elapsed < 30.0;
    report(
        "5",
        pass,
        &format!("7 metrics within {worst:.2e} of the full-joint oracle, {elapsed:.2} s"),
    );
    assert!(pass);
}

/// Criterion 6: desk-scale substitutes for the asymptotic claims.
///
/// Measured sub-checks:
///   (i)  exact Pr[S != S^] non-increasing over n in {4, 6, 8} for >= 8/10 seeds
///   (ii) I(S;W|C)/n non-increasing over the same n for >= 8/10 seeds
///   (iii) H(S) >= log2|S| - 0.1 n at n = 8 for >= 8/10 seeds
///   (iv) GS and CS exact error probabilities identical on every seed
#[test]
fn criterion_6_osrb_trends() {
    let start = Instant::now();
    let model = scenario_model(0.05, 1);
    let aux = bsc(0.1).unwrap();
    let rates = choose_rates(&model, &aux, 0.05).unwrap();
    let ns = [4usize, 6, 8];
    let seeds: Vec<u64> = (1..=10).collect();

    let mut err_monotone = 0;
    let mut leak_monotone = 0;
    let mut uniform_ok = 0;
    let mut cs_equal = true;
    for &seed in &seeds {
        let mut errs = Vec::new();
        let mut leaks = Vec::new();
        for &n in &ns {
            let code = build_binning(n, 2, &rates, seed).unwrap();
            let rep = evaluate_exact(&code, &model, &aux).unwrap();
            let cs = evaluate_exact_cs(&code, &model, &aux).unwrap();
            if rep.error_prob != cs.error_prob {
                cs_equal = false;
            }
            if n == 8 {
                let bound = (rep.s_size as f64).log2() - 0.1 * n as f64;
                if rep.key_entropy >= bound {
                    uniform_ok += 1;
                }
            }
            errs.push(rep.error_prob);
            leaks.push(rep.secrecy_leak.unwrap() / n as f64);
        }
        let e_mono = errs[0] >= errs[1] && errs[1] >= errs[2];
        let l_mono = leaks[0] >= leaks[1] && leaks[1] >= leaks[2];
        err_monotone += e_mono as usize;
        leak_monotone += l_mono as usize;
        println!(
            "  seed {seed:2}: err {:.4} {:.4} {:.4} ({}) | leak/n {:.4} {:.4} {:.4} ({})",
            errs[0],
            errs[1],
            errs[2],
            if e_mono { "mono" } else { "not mono" },
            leaks[0],
            leaks[1],
            leaks[2],
            if l_mono { "mono" } else { "not mono" },
        );
    }

    let pass_i = err_monotone >= 8;
    let pass_ii = leak_monotone >= 8;
    let pass_iii = uniform_ok >= 8;
    let pass_iv = cs_equal;
    report(
        "6-error-trend",
        pass_i,
        &format!("{err_monotone}/10 seeds monotone, need >= 8"),
    );
    report(
        "6-leak-trend",
        pass_ii,
        &format!("{leak_monotone}/10 seeds monotone, need >= 8"),
    );
    report(
        "6-uniformity",
        pass_iii,
        &format!("{uniform_ok}/10 seeds with H(S) >= log2|S| - 0.8 at n = 8, need >= 8"),
    );
    report(
        "6-gs-cs-equal",
        pass_iv,
        "exact GS and CS error probabilities per seed",
    );
    let elapsed = start.elapsed().as_secs_f64();
    let pass_time = elapsed < 300.0;
    report(
        "6-runtime",
        pass_time,
        &format!("{elapsed:.1} s, limit 300 s"),
    );

    assert!(
        pass_i && pass_ii && pass_iii && pass_iv && pass_time,
        "trend sub-checks: error monotone {err_monotone}/10 (need 8), \
         leak monotone {leak_monotone}/10 (need 8), uniformity {uniform_ok}/10 (need 8), \
         GS/CS equality {cs_equal}"
    );
}

/// Criterion 7: the randomized invariant suites, 1000 deterministic cases
/// each.
#[test]
fn criterion_7_property_suites() {
    let cases = 1000;

    // Data processing over random chains.
    let mut rng = CounterRng::new(7001, 70);
    for _ in 0..cases {
        let u_size = 2 + rng.next_below(3) as usize;
        let mid = 2 + rng.next_below(3) as usize;
        let out = 2 + rng.next_below(3) as usize;
        let input = ProbVector::new(rng.sample_simplex(u_size)).unwrap();
        let first = Channel::new((0..u_size).map(|_| rng.sample_simplex(mid)).collect()).unwrap();
        let second = Channel::new((0..mid).map(|_| rng.sample_simplex(out)).collect()).unwrap();
        let direct = kls::info::mutual_information(&input, &first).unwrap();
        let through =
            kls::info::mutual_information(&input, &kls::info::compose(&first, &second).unwrap())
                .unwrap();
        assert!(through <= direct + 1e-9);
    }
    report("7-dpi", true, "1000 cases");

    // Normalization of produced channels.
    let mut rng = CounterRng::new(7002, 71);
    for _ in 0..cases {
        let a = Channel::new((0..3).map(|_| rng.sample_simplex(3)).collect()).unwrap();
        let b = Channel::new((0..3).map(|_| rng.sample_simplex(2)).collect()).unwrap();
        let input = ProbVector::new(rng.sample_simplex(3)).unwrap();
        for ch in [
            kls::info::compose(&a, &b).unwrap(),
            kls::info::product_channel(&b, 2).unwrap(),
            kls::info::bayes_invert(&input, &a).unwrap().reverse,
        ] {
            for x in 0..ch.input_size() {
                let sum: f64 = ch.row(x).iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9);
            }
        }
    }
    report("7-normalization", true, "1000 cases");

    // Compose associativity.
    let mut rng = CounterRng::new(7003, 72);
    for _ in 0..cases {
        let a = Channel::new((0..3).map(|_| rng.sample_simplex(4)).collect()).unwrap();
        let b = Channel::new((0..4).map(|_| rng.sample_simplex(2)).collect()).unwrap();
        let c = Channel::new((0..2).map(|_| rng.sample_simplex(3)).collect()).unwrap();
        let left = kls::info::compose(&kls::info::compose(&a, &b).unwrap(), &c).unwrap();
        let right = kls::info::compose(&a, &kls::info::compose(&b, &c).unwrap()).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert!((left.prob(x, y) - right.prob(x, y)).abs() <= 1e-12);
            }
        }
    }
    report("7-associativity", true, "1000 cases");

    // Bayes round trip.
    let mut rng = CounterRng::new(7004, 73);
    for _ in 0..cases {
        let input = ProbVector::new(rng.sample_simplex(3)).unwrap();
        let ch = Channel::new((0..3).map(|_| rng.sample_simplex(4)).collect()).unwrap();
        let inv = kls::info::bayes_invert(&input, &ch).unwrap();
        for x in 0..3 {
            for y in 0..4 {
                let forward = input.get(x) * ch.prob(x, y);
                let backward = inv.output_marginal.get(y) * inv.reverse.prob(y, x);
                assert!((forward - backward).abs() <= 1e-9);
            }
        }
    }
    report("7-bayes-round-trip", true, "1000 cases");

    // Pareto filter against the quadratic oracle.
    let mut rng = CounterRng::new(7005, 74);
    for _ in 0..cases {
        let len = 1 + rng.next_below(50) as usize;
        let quantize = rng.next_below(2) == 0;
        let tuples: Vec<RateTuple> = (0..len)
            .map(|_| {
                let q = |v: f64| if quantize { (v * 4.0).round() / 4.0 } else { v };
                RateTuple::new(q(rng.next_f64()), q(rng.next_f64()), q(rng.next_f64()))
            })
            .collect();
        let got = pareto_filter(&tuples);
        let want: Vec<RateTuple> = tuples
            .iter()
            .filter(|t| !tuples.iter().any(|o| o.dominates(t)))
            .copied()
            .collect();
        assert_eq!(got.len(), want.len());
        let key = |t: &RateTuple| (t.r_s, t.r_l, t.r_w);
        let mut a: Vec<_> = got.iter().map(key).collect();
        let mut b: Vec<_> = want.iter().map(key).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }
    report("7-pareto-oracle", true, "1000 cases");

    // Binning determinism.
    let mut rng = CounterRng::new(7006, 75);
    for _ in 0..cases {
        let n = 1 + rng.next_below(6) as usize;
        let u_size = 2 + rng.next_below(2) as usize;
        let rates = Rates {
            rate_s: rng.next_f64() * 1.5 - 0.25,
            rate_w: rng.next_f64() * 1.5 - 0.25,
            rate_c: rng.next_f64() * 1.5 - 0.25,
            sw_slack: 0.0,
            independence_slack: 0.0,
        };
        let seed = rng.next_u64();
        let a = build_binning(n, u_size, &rates, seed).unwrap();
        let b = build_binning(n, u_size, &rates, seed).unwrap();
        assert_eq!(a.index_sizes(), b.index_sizes());
        for i in 0..a.num_sequences() {
            assert_eq!(a.bin_of_index(i), b.bin_of_index(i));
        }
    }
    report("7-binning-determinism", true, "1000 cases");
}
