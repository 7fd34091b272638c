//! Closed-form probabilities and the table/curve generators.
//!
//! The formulas live here so the Monte Carlo machinery can be checked
//! against them (and vice versa): expected known bits, failure
//! probabilities, and the error-rate laws before and after coding.

use rayon::prelude::*;

use crate::attack_nn::{run_aks_attack, AksOutcome, AttackError};
use crate::code::CodeSpec;
use crate::gf2::binomial;
use crate::key::{run_rng, SimParams};
use crate::protocol::{align_dishonest_greedy, best_alignment_shift, build_mok, EccOptions};

fn binom_f(n: u32, k: u32) -> f64 {
    binomial(n as u64, k as u64) as f64
}

/// Expected FOK bits Alice keeps per query under `kN–N`: `N·p^k`.
pub fn expected_known(n: usize, k: u32, p: f64) -> f64 {
    n as f64 * p.powi(k as i32)
}

/// Probability that Alice keeps no FOK bit at all: `(1 − p^k)^N`.
pub fn failure_p0(n: usize, k: u32, p: f64) -> f64 {
    (1.0 - p.powi(k as i32)).powi(n as i32)
}

/// Failure probability after shift-adding `g` middle keys:
/// `1 − (1 − P₀)^g` (at least one middle key fully unknown).
pub fn failure_p0_g(n: usize, k: u32, p: f64, g: u32) -> f64 {
    1.0 - (1.0 - failure_p0(n, k, p)).powi(g as i32)
}

/// Probability that an odd number of the `g` trials hit, each with
/// probability `q`.
fn odd_hit(q: f64, g: u32) -> f64 {
    (1..=g)
        .step_by(2)
        .map(|t| binom_f(g, t) * q.powi(t as i32) * (1.0 - q).powi((g - t) as i32))
        .sum()
}

/// FOK bit error rate without error correction: odd errors among 7 pad bits.
pub fn p_e(e: f64) -> f64 {
    odd_hit(e, 7)
}

/// Per-group error rate with the \[7,4,3\] round: 3, 5, or 7 pad errors.
pub fn p_prime_e(e: f64) -> f64 {
    (3..=7)
        .step_by(2)
        .map(|t| binom_f(7, t) * e.powi(t as i32) * (1.0 - e).powi(7 - t as i32))
        .sum()
}

/// FOK bit error rate after shift-adding `g` coded middle keys: odd errors
/// among the `g` combined bits.
pub fn p_dprime_e(e: f64, g: u32) -> f64 {
    odd_hit(p_prime_e(e), g)
}

/// Probability an honest Alice keeps a coded key bit: all 7 pad bits known.
pub fn p1(p: f64) -> f64 {
    p.powi(7)
}

/// Probability a dishonest Alice claims a coded key bit: at least 4 of the
/// 7 pad bits known (the generous claim counting; ambiguity not deducted).
pub fn p2(p: f64) -> f64 {
    (4..=7)
        .map(|t| binom_f(7, t) * p.powi(t as i32) * (1.0 - p).powi(7 - t as i32))
        .sum()
}

/// Exact dishonest success probability for `spec`: the chance that the known
/// pad positions pin a unique codeword. Smaller than `p2` because some
/// patterns with `m` or more known bits remain ambiguous.
pub fn dishonest_success_exact(spec: &CodeSpec, p: f64) -> f64 {
    let n = spec.n();
    assert!(n <= 24, "pattern enumeration is exponential in n");
    let zero = &spec.codewords()[0];
    (0u32..1 << n)
        .filter_map(|mask| {
            // Ambiguity depends only on the pattern, so probe with the zero
            // codeword's values.
            let known: Vec<(usize, bool)> = (0..n)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| (i, zero.get(i)))
                .collect();
            match spec.erasure_decode(&known) {
                crate::code::Erasure::Unique(_) => {
                    let t = known.len() as i32;
                    Some(p.powi(t) * (1.0 - p).powi(n as i32 - t))
                }
                _ => None,
            }
        })
        .sum()
}

/// Analytic comparison of the plain `kN–N` method and the coded `gkN–N`
/// pipeline for one scenario. Monte Carlo fields are filled in only when a
/// simulation ran.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub params: SimParams,
    /// Expected coded-key bits for an honest Alice: `N·p₁`.
    pub n_bar_honest: f64,
    /// Expected claimed bits for a dishonest Alice: `N·p₂`.
    pub n_bar_dishonest: f64,
    /// `N ×` the exact unique-decode probability (see `dishonest_success_exact`).
    pub n_bar_dishonest_exact: f64,
    /// Error rate with no coding: `p_e`.
    pub error_rate_no_ec: f64,
    /// Per-middle-key error rate after coding: `p′_e`.
    pub error_rate_mok: f64,
    /// FOK error rate after shift-adding `g` middle keys: `p″_e`.
    pub error_rate_fok: f64,
    /// `P₀` for the plain method.
    pub failure_p0: f64,
    /// `P″₀` for the pipeline.
    pub failure_p0_g: f64,
    /// Mean death query amount, when an attack simulation ran.
    pub dqa_mean: Option<f64>,
    /// Mean surviving dishonest bits, when a pipeline simulation ran.
    pub n_a: Option<f64>,
}

/// Evaluates every closed form for one scenario.
pub fn scenario_report(params: &SimParams, spec: &CodeSpec) -> ScenarioReport {
    let k = params.k as u32;
    let g = params.g as u32;
    ScenarioReport {
        params: params.clone(),
        n_bar_honest: params.n as f64 * p1(params.p),
        n_bar_dishonest: params.n as f64 * p2(params.p),
        n_bar_dishonest_exact: params.n as f64 * dishonest_success_exact(spec, params.p),
        error_rate_no_ec: p_e(params.e),
        error_rate_mok: p_prime_e(params.e),
        error_rate_fok: p_dprime_e(params.e, g),
        failure_p0: failure_p0(params.n, k, params.p),
        failure_p0_g: failure_p0_g(params.n, k, params.p, g),
        dqa_mean: None,
        n_a: None,
    }
}

/// One row of the death-query table.
#[derive(Debug, Clone)]
pub struct Table1Row {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub n_bar: f64,
    pub dqa_mean: f64,
    pub dqa_sd: f64,
    pub runs: usize,
}

/// The scenario grid of the death-query table: `(N, k)` pairs crossed with
/// honest and USD-grade knowledge probabilities.
pub const TABLE1_CASES: [(usize, usize); 3] = [(225, 3), (1024, 4), (10_000, 6)];
pub const TABLE1_PS: [f64; 2] = [0.25, 0.29];

/// Monte Carlo death-query amounts for the given cases. Runs execute in
/// parallel with per-run derived seeds, so the output is independent of
/// thread scheduling.
pub fn table1_rows(
    cases: &[(usize, usize)],
    ps: &[f64],
    runs: usize,
    seed: u64,
) -> Result<Vec<Table1Row>, AttackError> {
    assert!(runs >= 1);
    let mut rows = Vec::new();
    for &(n, k) in cases {
        for &p in ps {
            let params = SimParams {
                n,
                k,
                p,
                e: 0.0,
                seed,
                ..SimParams::default()
            };
            let outcomes: Result<Vec<AksOutcome>, AttackError> = (0..runs as u64)
                .into_par_iter()
                .map(|run| run_aks_attack(&params, &mut run_rng(seed, run)))
                .collect();
            let dqas: Vec<f64> = outcomes?.iter().map(|o| o.dqa as f64).collect();
            let mean = dqas.iter().sum::<f64>() / runs as f64;
            let sd = if runs > 1 {
                (dqas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(Table1Row {
                n,
                k,
                p,
                n_bar: expected_known(n, k as u32, p),
                dqa_mean: mean,
                dqa_sd: sd,
                runs,
            });
        }
    }
    Ok(rows)
}

/// The full reference scenario grid.
pub fn table1(runs: usize, seed: u64) -> Result<Vec<Table1Row>, AttackError> {
    table1_rows(&TABLE1_CASES, &TABLE1_PS, runs, seed)
}

/// One row of the shift-addition survivor table.
#[derive(Debug, Clone)]
pub struct Table2Row {
    pub g: usize,
    pub n_a_mean: f64,
    pub runs: usize,
}

/// Mean dishonest survivors as `g` grows. Each run builds `g_max` middle
/// keys once and aligns them greedily, so `n_A` is nonincreasing in `g`
/// within every run (prefix survivors can only shrink), and so is the mean.
pub fn table2(params: &SimParams, g_max: usize, runs: usize, spec: &CodeSpec) -> Vec<Table2Row> {
    assert!(g_max >= 1 && runs >= 1);
    let per_run: Vec<Vec<usize>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(params.seed, run);
            let options = EccOptions::dishonest();
            let mut survivors = Vec::with_capacity(g_max);
            let mut mask: Option<crate::gf2::BitVec> = None;
            for _ in 0..g_max {
                let rok = generate_len(params, spec, &mut rng);
                let (mok, _) = build_mok(&rok, spec, &options, &mut rng);
                mask = Some(match mask {
                    None => mok.alice_known().clone(),
                    Some(m) => best_alignment_shift(&m, &mok).1,
                });
                survivors.push(mask.as_ref().unwrap().count_ones());
            }
            survivors
        })
        .collect();
    (0..g_max)
        .map(|gi| Table2Row {
            g: gi + 1,
            n_a_mean: per_run.iter().map(|s| s[gi] as f64).sum::<f64>() / runs as f64,
            runs,
        })
        .collect()
}

fn generate_len(
    params: &SimParams,
    spec: &CodeSpec,
    rng: &mut crate::key::SimRng,
) -> crate::key::TriStateKey {
    crate::key::generate_rok(spec.n() * params.n, params.p, params.e, rng)
}

/// Dishonest survivors for one concrete `g` (the `gkn_post_process` path);
/// exposed for spot checks against `table2`.
pub fn dishonest_survivors(params: &SimParams, spec: &CodeSpec, run: u64) -> usize {
    let mut rng = run_rng(params.seed, run);
    let options = EccOptions::dishonest();
    let moks: Vec<crate::key::TriStateKey> = (0..params.g)
        .map(|_| {
            build_mok(
                &generate_len(params, spec, &mut rng),
                spec,
                &options,
                &mut rng,
            )
            .0
        })
        .collect();
    let shifts = align_dishonest_greedy(&moks);
    crate::dilution::shift_add(&moks, &shifts).known_count()
}

/// Error-rate comparison curve: `(e, p_e, p″_e(e, g))` over the grid.
pub fn fig5_curves(e_grid: &[f64], g: u32) -> Vec<(f64, f64, f64)> {
    e_grid
        .iter()
        .map(|&e| (e, p_e(e), p_dprime_e(e, g)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn expected_known_table_values() {
        assert!(close(expected_known(225, 3, 0.25), 3.52, 0.01));
        assert!(close(expected_known(1024, 4, 0.25), 4.00, 0.01));
        assert!(close(expected_known(10_000, 6, 0.25), 2.44, 0.01));
        assert!(close(expected_known(225, 3, 0.29), 5.49, 0.01));
        assert!(close(expected_known(1024, 4, 0.29), 7.24, 0.01));
        assert!(close(expected_known(10_000, 6, 0.29), 5.95, 0.01));
        assert_eq!(expected_known(77, 0, 0.1), 77.0);
    }

    #[test]
    fn failure_probabilities() {
        assert!(close(failure_p0(100_000, 7, 0.25), 0.00223, 1e-4));
        assert_eq!(failure_p0(100, 3, 1.0), 0.0);
        assert_eq!(failure_p0(100, 3, 0.0), 1.0);
        assert!(close(failure_p0_g(100_000, 7, 0.25, 6), 0.0133, 5e-4));
        // g = 1 collapses to P₀ (up to the 1 − (1 − x) rounding).
        assert!(close(
            failure_p0_g(100_000, 7, 0.25, 1),
            failure_p0(100_000, 7, 0.25),
            1e-12
        ));
        assert_eq!(failure_p0_g(100, 3, 1.0, 4), 0.0);
    }

    #[test]
    fn error_rate_laws() {
        assert!(close(p_e(0.03), 0.1758, 1e-4));
        assert_eq!(p_e(0.0), 0.0);
        assert_eq!(p_prime_e(0.0), 0.0);
        assert_eq!(p_dprime_e(0.0, 6), 0.0);
        // Direct binomial sums, frozen: p′_e(0.03) ≈ 8.371e-4,
        // p″_e(0.03, 6) ≈ 5.0015e-3.
        assert!(close(p_prime_e(0.03), 8.371e-4, 1e-6));
        assert!(close(p_dprime_e(0.03, 6), 5.0015e-3, 1e-5));
    }

    #[test]
    fn p_e_decomposes_into_p_prime_plus_single_error_term() {
        for e in [0.0f64, 0.01, 0.05, 0.1, 0.25, 0.4, 0.5] {
            let single = 7.0 * e * (1.0 - e).powi(6);
            assert!(close(p_e(e), p_prime_e(e) + single, 1e-12), "e = {e}");
        }
    }

    #[test]
    fn error_rates_monotone_below_half() {
        let mut last_pe = 0.0;
        let mut last_ppe = 0.0;
        for i in 0..=50 {
            let e = i as f64 * 0.01;
            assert!(p_e(e) >= last_pe - 1e-12);
            assert!(p_prime_e(e) >= last_ppe - 1e-12);
            last_pe = p_e(e);
            last_ppe = p_prime_e(e);
        }
    }

    #[test]
    fn honest_and_dishonest_expectations() {
        assert!(close(100_000.0 * p1(0.25), 6.10, 0.01));
        assert!(close(100_000.0 * p2(0.25), 7055.66, 0.01));
        assert_eq!(p2(1.0), 1.0);
    }

    #[test]
    fn exact_dishonest_rate_accounts_for_ambiguity() {
        // Of the 35 four-known patterns, 7 stay ambiguous, so the exact rate
        // replaces C(7,4) = 35 by 28 in the t = 4 term:
        // (28·27 + 189 + 21 + 1)/16384 = 967/16384.
        let spec = CodeSpec::hamming_7_4();
        let exact = dishonest_success_exact(&spec, 0.25);
        assert!(close(exact, 967.0 / 16384.0, 1e-12));
        assert!(exact < p2(0.25));
    }

    #[test]
    fn fig5_shape() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.01).collect();
        let curves = fig5_curves(&grid, 6);
        assert_eq!(curves.len(), 51);
        assert_eq!(curves[0], (0.0, 0.0, 0.0));
        for &(e, pe, pde) in &curves {
            if e > 0.0 && e < 0.30 {
                assert!(pde < pe, "p″_e ≥ p_e at e = {e}");
            }
        }
    }

    #[test]
    fn scenario_report_values() {
        let params = SimParams {
            n: 100_000,
            k: 7,
            p: 0.25,
            e: 0.03,
            g: 6,
            ..SimParams::default()
        };
        let report = scenario_report(&params, &CodeSpec::hamming_7_4());
        assert!(close(report.n_bar_honest, 6.10, 0.01));
        assert!(close(report.n_bar_dishonest, 7055.66, 0.01));
        assert!(close(report.error_rate_no_ec, 0.1758, 1e-4));
        assert!(close(report.failure_p0, 0.002, 5e-4));
        assert!(close(report.failure_p0_g, 0.013, 5e-4));
        assert!(report.n_bar_dishonest_exact < report.n_bar_dishonest);
    }

    #[test]
    fn table1_small_smoke() {
        let rows = table1_rows(&[(64, 2)], &[0.25], 3, 5).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].dqa_mean >= 1.0);
        // Deterministic across invocations.
        let again = table1_rows(&[(64, 2)], &[0.25], 3, 5).unwrap();
        assert_eq!(rows[0].dqa_mean, again[0].dqa_mean);
    }

    #[test]
    fn table1_usd_attacker_dies_faster() {
        // Higher per-bit knowledge means fewer queries to drain the database.
        let rows = table1_rows(&[(225, 3)], &[0.25, 0.29], 5, 42).unwrap();
        assert!(rows[1].dqa_mean < rows[0].dqa_mean, "{rows:?}");
    }

    #[test]
    fn table2_small_smoke() {
        let params = SimParams {
            n: 300,
            k: 7,
            p: 0.25,
            seed: 11,
            ..SimParams::default()
        };
        let spec = CodeSpec::hamming_7_4();
        let rows = table2(&params, 3, 2, &spec);
        assert_eq!(rows.len(), 3);
        for pair in rows.windows(2) {
            assert!(pair[1].n_a_mean <= pair[0].n_a_mean);
        }
        // g = 1 survivors sit near N·p₂ under the claim counting.
        let expect = 300.0 * p2(0.25);
        assert!((rows[0].n_a_mean - expect).abs() < 4.0 * expect.sqrt() + 5.0);
    }
}
