//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Criteria marked slow are `#[ignore]`d and
//! meant for `cargo test --release -p qpq --test acceptance -- --ignored`.

use qpq::analysis::{
    expected_known, failure_p0, failure_p0_g, fig5_curves, p1, p2, p_dprime_e, p_e, p_prime_e,
    table1_rows, table2,
};
use qpq::attack_rm::run_rank_attack;
use qpq::code::CodeSpec;
use qpq::dilution::{dilute_kn_n, dilute_n_n};
use qpq::key::{generate_rok, run_rng, sim_rng, SimParams};
use qpq::protocol::{ecc_dilution_round, gkn_post_process, AliceOutcome, EccOptions};
use qpq::BitVec;

use rand::Rng;

fn pass(criterion: &str, detail: &str) {
    println!("criterion {criterion}: PASS - {detail}");
}

fn key_from(bob: &str, alice: &str) -> qpq::TriStateKey {
    format!("bob={bob}\nalice={alice}\n").parse().unwrap()
}

#[test]
fn c1_worked_example_regression() {
    // kN–N, N = 12, k = 2.
    let rok = key_from("011001000111001101011001", "?1??0????1??0????1???0??");
    let fok = dilute_kn_n(&rok, 12, 2);
    assert_eq!(fok.bob_string(), "010100011110");
    assert_eq!(fok.alice_string(), "?????????1??");
    assert_eq!(fok.known_count(), 1);

    // N–N, N = 12, k = 2.
    let rok = key_from("011001000111", "???00?0?????");
    let (fok, _) = dilute_n_n(&rok, 2);
    assert_eq!(fok.bob_string(), "101011001001");
    assert_eq!(fok.alice_string(), "???0????????");
    assert_eq!(fok.known_count(), 1);

    pass(
        "1",
        "12-bit dilution examples reproduce both published keys exactly",
    );
}

#[test]
fn c2_analytic_values() {
    let close = |value: f64, expect: f64, tol: f64| {
        assert!(
            (value - expect).abs() <= tol,
            "{value} not within {tol} of {expect}"
        );
    };
    // n̄ = N·p^k rows, 1% relative tolerance.
    for (n, k, p, expect) in [
        (225usize, 3u32, 0.25, 3.52),
        (1024, 4, 0.25, 4.00),
        (10_000, 6, 0.25, 2.44),
        (225, 3, 0.29, 5.49),
        (1024, 4, 0.29, 7.24),
        (10_000, 6, 0.29, 5.95),
    ] {
        close(expected_known(n, k, p), expect, 0.01 * expect);
    }
    close(p_e(0.03), 0.1758, 1e-4);
    close(failure_p0(100_000, 7, 0.25), 0.0022, 1e-4);
    close(failure_p0_g(100_000, 7, 0.25, 6), 0.0133, 5e-4);
    close(100_000.0 * p1(0.25), 6.10, 0.01);
    close(100_000.0 * p2(0.25), 7055.66, 0.01);
    pass(
        "2",
        "all closed-form table values land inside their tolerances",
    );
}

#[test]
fn c3_death_query_amounts() {
    let cases = [
        (225usize, 3usize, 0.25, 14.0, 24.0),
        (1024, 4, 0.25, 24.0, 37.0),
        (225, 3, 0.29, 11.0, 20.0),
    ];
    let mut details = Vec::new();
    for (n, k, p, lo, hi) in cases {
        let rows = table1_rows(&[(n, k)], &[p], 10, 42).unwrap();
        let mean = rows[0].dqa_mean;
        assert!(
            (lo..=hi).contains(&mean),
            "N={n} p={p}: mean DQA {mean} outside [{lo}, {hi}]"
        );
        details.push(format!("N={n},p={p}: {mean:.1}"));
    }
    pass(
        "3",
        &format!("mean DQA in band over 10 runs ({})", details.join("; ")),
    );
}

/// The N = 10^4 rows: reference means 53.4 and 40.0, ±25%. Minutes of runtime even in
/// release, hence tagged out of the default suite.
#[test]
#[ignore = "long-running: run with --release -- --ignored"]
fn c3_death_query_amounts_slow_n10000() {
    for (p, reference) in [(0.25, 53.4), (0.29, 40.0)] {
        let rows = table1_rows(&[(10_000, 6)], &[p], 10, 42).unwrap();
        let mean = rows[0].dqa_mean;
        let (lo, hi) = (0.75 * reference, 1.25 * reference);
        assert!(
            (lo..=hi).contains(&mean),
            "p={p}: mean DQA {mean} outside [{lo}, {hi}]"
        );
        pass(
            "3-slow",
            &format!("N=10^4 p={p}: mean DQA {mean:.1} within 25% of {reference}"),
        );
    }
}

#[test]
fn c4_rank_attack_property_suite() {
    let mut recovered_in_bound = 0;
    for instance in 0..100u64 {
        let mut setup = sim_rng(7000 + instance);
        let m = setup.random_range(2..=10usize);
        let k = setup.random_range(1..=m.min(4));
        let r = setup.random_range(1..=3usize);
        let max_n = qpq::gf2::binomial(m as u64, k as u64).min(64) as usize;
        let n = setup.random_range(1..=max_n);
        let p = setup.random_range(0.25..=1.0);
        let params = SimParams {
            n,
            k,
            p,
            e: 0.0,
            r,
            m,
            ..SimParams::default()
        };
        let db = BitVec::random(n, &mut setup);
        let out = run_rank_attack(&params, &db, &mut sim_rng(9000 + instance)).unwrap();
        assert_eq!(
            out.recovered, db,
            "instance {instance} (m={m},k={k},r={r},n={n})"
        );
        assert!(out.queries_used as usize <= out.basis_size);
        assert!(out.basis_size <= r * m);
        recovered_in_bound += 1;
    }
    assert_eq!(recovered_in_bound, 100);
    pass(
        "4",
        "100/100 random rM-N instances recovered bit-exactly within rank <= rM queries",
    );
}

#[test]
fn c5_code_exhaustives() {
    let code = CodeSpec::hamming_7_4();
    let published = [
        "0000000", "0001011", "0010110", "0011101", "0100111", "0101100", "0110001", "0111010",
        "1000101", "1001110", "1010011", "1011000", "1100010", "1101001", "1110100", "1111111",
    ];
    for (v, expect) in published.iter().enumerate() {
        let msg = BitVec::from_fn(4, |i| v >> (3 - i) & 1 == 1);
        assert_eq!(code.encode(&msg).to_string(), *expect);
    }

    // Minimum distance by an independent exhaustive weight scan.
    let min_weight = code
        .codewords()
        .iter()
        .filter(|cw| !cw.is_zero())
        .map(BitVec::count_ones)
        .min()
        .unwrap();
    assert_eq!(min_weight, 3);
    assert_eq!(code.min_distance(), 3);

    // All 16 codewords × (no flip + 7 flips) decode back.
    let mut cases = 0;
    for cw in code.codewords() {
        assert_eq!(code.decode_correct1(cw), (cw.clone(), 0));
        cases += 1;
        for pos in 0..7 {
            let mut word = cw.clone();
            word.set(pos, !word.get(pos));
            assert_eq!(code.decode_correct1(&word), (cw.clone(), 1));
            cases += 1;
        }
    }
    assert_eq!(cases, 128);

    let odd = code
        .codewords()
        .iter()
        .filter(|cw| code.codeword_parity(cw))
        .count();
    assert_eq!(odd, 8);
    pass(
        "5",
        "codeword table, distance 3, 128/128 decodes, balanced parity",
    );
}

#[test]
fn c6_error_law_convergence() {
    let e = 0.1;
    let samples = 100_000usize;
    let spec = CodeSpec::hamming_7_4();
    let three_sigma = |q: f64, n: usize| 3.0 * (q * (1.0 - q) / n as f64).sqrt();

    // No error correction: a FOK bit is the bare parity of 7 raw bits.
    let mut rng = sim_rng(601);
    let wrong = (0..samples)
        .filter(|_| {
            let rok = generate_rok(7, 1.0, e, &mut rng);
            let fok = dilute_kn_n(&rok, 1, 7);
            fok.alice_value().get(0) != fok.bob().get(0)
        })
        .count();
    let rate = wrong as f64 / samples as f64;
    let expect = p_e(e);
    assert!(
        (rate - expect).abs() < three_sigma(expect, samples),
        "no-EC rate {rate} vs {expect}"
    );

    // Coded rounds: honest Alice with full pad knowledge.
    let mut rng = sim_rng(602);
    let wrong = (0..samples)
        .filter(|_| {
            let group = generate_rok(7, 1.0, e, &mut rng);
            let record = ecc_dilution_round(&group, &spec, &EccOptions::honest(), &mut rng);
            record.alice_outcome != AliceOutcome::Known(record.bob_bit)
        })
        .count();
    let rate = wrong as f64 / samples as f64;
    let expect = p_prime_e(e);
    assert!(
        (rate - expect).abs() < three_sigma(expect, samples),
        "MOK rate {rate} vs {expect}"
    );

    // Full pipeline at g = 3: FOK bits through gkn_post_process.
    let runs = 100;
    let n = 1000;
    let params = SimParams {
        n,
        k: 7,
        p: 1.0,
        e,
        g: 3,
        ..SimParams::default()
    };
    let mut wrong = 0usize;
    for run in 0..runs as u64 {
        let mut rng = run_rng(603, run);
        let result = gkn_post_process(&params, &spec, &EccOptions::honest(), &mut rng);
        assert_eq!(result.fok.known_count(), n);
        wrong += (result.fok.alice_value() ^ result.fok.bob()).count_ones();
    }
    let rate = wrong as f64 / (runs * n) as f64;
    let expect = p_dprime_e(e, 3);
    assert!(
        (rate - expect).abs() < three_sigma(expect, runs * n),
        "FOK rate {rate} vs {expect}"
    );
    pass(
        "6",
        &format!("empirical rates within 3 sigma of p_e, p'_e, p''_e at e = {e}"),
    );
}

/// The survivor table at full scale (N = 10^5): minutes in a debug build, seconds in
/// release.
#[test]
#[ignore = "slow: run with --release -- --ignored"]
fn c7_table2_reproduction() {
    let params = SimParams {
        n: 100_000,
        k: 7,
        p: 0.25,
        seed: 99,
        ..SimParams::default()
    };
    let spec = CodeSpec::hamming_7_4();
    let rows = table2(&params, 6, 3, &spec);
    assert!(
        (6800.0..=7320.0).contains(&rows[0].n_a_mean),
        "g=1 mean {} outside [6800, 7320]",
        rows[0].n_a_mean
    );
    assert!(
        rows[5].n_a_mean <= 8.0,
        "g=6 mean {} above 8",
        rows[5].n_a_mean
    );
    for pair in rows.windows(2) {
        assert!(
            pair[1].n_a_mean <= pair[0].n_a_mean,
            "n_A not nonincreasing: {} then {}",
            pair[0].n_a_mean,
            pair[1].n_a_mean
        );
    }
    pass(
        "7",
        &format!(
            "dishonest survivors g=1..6: {}",
            rows.iter()
                .map(|r| format!("{:.1}", r.n_a_mean))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

#[test]
fn c8_coded_pipeline_wins_below_thirty_percent() {
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.01).collect();
    for (e, pe, pde) in fig5_curves(&grid, 6) {
        if e > 0.0 && e < 0.30 {
            assert!(
                pde < pe,
                "p''_e(e,6) = {pde} not below p_e = {pe} at e = {e}"
            );
        }
    }
    pass("8", "p''_e(e,6) < p_e(e) at every grid point in (0, 0.30)");
}

// Criterion 9 (CLI determinism) lives in the qpq-cli crate's acceptance
// tests, next to the binary it exercises.
