//! The three dilution methods that turn a raw oblivious key into a final one.
//!
//! Every FOK bit is the parity of `k` ROK bits; the methods differ in how the
//! parity groups are laid out and how often a ROK bit is reused. The reuse in
//! the `N–N` and `rM–N` variants is what leaks parity side information, so
//! `dilute_n_n` also returns the adjacent-pair relations Alice can read off,
//! and the `rM–N` construction is exposed in matrix form for the rank attack.

use crate::gf2::{binomial, nth_combination, BitVec, Gf2Matrix};
use crate::key::TriStateKey;

/// A parity Alice learns about two FOK positions: `fok_i ⊕ fok_j = parity`.
/// Values come from Alice's believed ROK bits, so with channel errors a
/// relation can be wrong; with `e = 0` it always matches Bob's true key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityRelation {
    pub i: usize,
    pub j: usize,
    pub parity: bool,
}

/// The original `kN–N` dilution: FOK bit `i` is the parity of the `k` ROK
/// bits `{i + j·n}`. Alice keeps a bit only when she knows all `k`
/// constituents. `rok` must have length `k·n`.
pub fn dilute_kn_n(rok: &TriStateKey, n: usize, k: usize) -> TriStateKey {
    assert_eq!(rok.len(), n * k, "kN–N needs a key of length k·n");
    let mut bob = BitVec::zeros(n);
    let mut known = BitVec::zeros(n);
    let mut value = BitVec::zeros(n);
    for i in 0..n {
        let mut b = false;
        let mut all = true;
        let mut v = false;
        for j in 0..k {
            let idx = i + j * n;
            b ^= rok.bob().get(idx);
            all &= rok.alice_known().get(idx);
            v ^= rok.alice_value().get(idx);
        }
        bob.set(i, b);
        if all {
            known.set(i, true);
            value.set(i, v);
        }
    }
    TriStateKey::new(bob, known, value)
}

/// The `N–N` dilution: FOK bit `i` is the parity of the sliding window
/// `rok[i..i+k]` (cyclic). Alongside the diluted key it returns the parity
/// relations Alice learns: whenever she knows `rok_i` and `rok_{i+k}` she
/// knows `fok_i ⊕ fok_{i+1}`, because consecutive windows differ in exactly
/// those two bits.
pub fn dilute_n_n(rok: &TriStateKey, k: usize) -> (TriStateKey, Vec<ParityRelation>) {
    let n = rok.len();
    assert!(k <= n, "window k = {k} exceeds key length {n}");
    let mut bob = BitVec::zeros(n);
    let mut known = BitVec::zeros(n);
    let mut value = BitVec::zeros(n);
    for i in 0..n {
        let mut b = false;
        let mut all = true;
        let mut v = false;
        for j in 0..k {
            let idx = (i + j) % n;
            b ^= rok.bob().get(idx);
            all &= rok.alice_known().get(idx);
            v ^= rok.alice_value().get(idx);
        }
        bob.set(i, b);
        if all {
            known.set(i, true);
            value.set(i, v);
        }
    }
    let mut relations = Vec::new();
    for i in 0..n {
        let other = (i + k) % n;
        if let (Some(a), Some(b)) = (rok.alice_bit(i), rok.alice_bit(other)) {
            relations.push(ParityRelation {
                i,
                j: (i + 1) % n,
                parity: a ^ b,
            });
        }
    }
    (TriStateKey::new(bob, known, value), relations)
}

/// The sub-key extension matrix `G(shift)` of the `rM–N` method: `n×m`, row
/// `t` is the `(t + shift) mod n`-th `k`-of-`m` combination in lexicographic
/// order. A shift only reorders the rows cyclically. Requires `n ≤ C(m,k)`.
pub fn build_extension_matrix(m: usize, k: usize, n: usize, shift: usize) -> Gf2Matrix {
    assert!(
        n as u128 <= binomial(m as u64, k as u64),
        "n = {n} exceeds C({m},{k})"
    );
    assert!(shift < n.max(1), "shift {shift} out of range 0..{n}");
    let rows = (0..n)
        .map(|t| nth_combination(m, k, ((t + shift) % n) as u128))
        .collect();
    Gf2Matrix::from_rows(rows)
}

/// Applies an extension matrix to a sub-key: output bit `t` is the parity of
/// the sub-key over row `t`'s support. Alice keeps bit `t` only when she
/// knows every support bit.
pub fn extend_subkey(sub: &TriStateKey, ext: &Gf2Matrix) -> TriStateKey {
    assert_eq!(
        sub.len(),
        ext.n_cols(),
        "sub-key length must match matrix columns"
    );
    let n = ext.n_rows();
    let mut bob = BitVec::zeros(n);
    let mut known = BitVec::zeros(n);
    let mut value = BitVec::zeros(n);
    for t in 0..n {
        let row = ext.row(t);
        bob.set(t, row.dot(sub.bob()));
        if row.ones().all(|i| sub.alice_known().get(i)) {
            known.set(t, true);
            value.set(t, row.dot(sub.alice_value()));
        }
    }
    TriStateKey::new(bob, known, value)
}

/// Shift-addition: XOR of the keys under per-key cyclic shifts. Output bit
/// `j` combines bit `(j + shifts[i]) mod len` of each key; Alice keeps `j`
/// only when she knows the shifted bit in every key.
pub fn shift_add(keys: &[TriStateKey], shifts: &[usize]) -> TriStateKey {
    assert!(!keys.is_empty(), "shift_add needs at least one key");
    assert_eq!(keys.len(), shifts.len(), "one shift per key");
    let n = keys[0].len();
    assert!(
        keys.iter().all(|k| k.len() == n),
        "keys must share one length"
    );
    let mut bob = BitVec::zeros(n);
    let mut known = BitVec::zeros(n);
    let mut value = BitVec::zeros(n);
    for j in 0..n {
        let mut b = false;
        let mut all = true;
        let mut v = false;
        for (key, &s) in keys.iter().zip(shifts) {
            let idx = (j + s) % n;
            b ^= key.bob().get(idx);
            all &= key.alice_known().get(idx);
            v ^= key.alice_value().get(idx);
        }
        bob.set(j, b);
        if all {
            known.set(j, true);
            value.set(j, v);
        }
    }
    TriStateKey::new(bob, known, value)
}

/// The full `rM–N` dilution: extend every sub-key by the lexicographic
/// `k`-of-`m` matrix, then shift-add with the given per-sub-key shifts.
/// Equivalent to XOR-accumulating `G(shifts[i])·sub_i` in matrix form.
pub fn dilute_rm_n(subs: &[TriStateKey], shifts: &[usize], k: usize, n: usize) -> TriStateKey {
    assert!(!subs.is_empty());
    let m = subs[0].len();
    assert!(
        subs.iter().all(|s| s.len() == m),
        "sub-keys must share one length"
    );
    let ext = build_extension_matrix(m, k, n, 0);
    let extended: Vec<TriStateKey> = subs.iter().map(|s| extend_subkey(s, &ext)).collect();
    shift_add(&extended, shifts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::{generate_rok, sim_rng, TriStateKey};

    fn key_from(bob: &str, alice: &str) -> TriStateKey {
        format!("bob={bob}\nalice={alice}\n").parse().unwrap()
    }

    #[test]
    fn kn_n_worked_example() {
        // 24-bit ROK, N = 12, k = 2; Alice knows 1-based 2,5,10,13,18,22.
        let rok = key_from("011001000111001101011001", "?1??0????1??0????1???0??");
        let fok = dilute_kn_n(&rok, 12, 2);
        assert_eq!(fok.bob_string(), "010100011110");
        // Knowledge drops from 6 bits to one: position 10 (1-based), value 1.
        assert_eq!(fok.alice_string(), "?????????1??");
    }

    #[test]
    fn kn_n_identity_when_k_is_one() {
        let rok = generate_rok(20, 0.5, 0.0, &mut sim_rng(5));
        assert_eq!(dilute_kn_n(&rok, 20, 1), rok);
    }

    #[test]
    fn n_n_worked_example() {
        // 12-bit ROK, k = 2; Alice knows 1-based 4, 5, 7 (values 0, 0, 0).
        let rok = key_from("011001000111", "???00?0?????");
        let (fok, relations) = dilute_n_n(&rok, 2);
        assert_eq!(fok.bob_string(), "101011001001");
        // Knowledge drops from 3 bits to one: position 4 (1-based), value 0.
        assert_eq!(fok.alice_string(), "???0????????");
        // She knows rok_4 and rok_6 (0-based), hence fok_4 ⊕ fok_5.
        assert_eq!(
            relations,
            vec![ParityRelation {
                i: 4,
                j: 5,
                parity: false
            }]
        );
    }

    #[test]
    fn n_n_relations_match_bobs_parities() {
        // Error-free: every emitted relation equals Bob's true FOK parity.
        let mut rng = sim_rng(17);
        for _ in 0..50 {
            let rok = generate_rok(24, 0.5, 0.0, &mut rng);
            for k in 1..=4 {
                let (fok, relations) = dilute_n_n(&rok, k);
                for rel in relations {
                    assert_eq!(
                        rel.parity,
                        fok.bob().get(rel.i) ^ fok.bob().get(rel.j),
                        "relation ({}, {}) wrong for k = {k}",
                        rel.i,
                        rel.j
                    );
                }
            }
        }
    }

    /// Naive triple-loop re-implementations used as oracles.
    mod oracle {
        use super::*;

        pub fn kn_n_bob(rok: &TriStateKey, n: usize, k: usize) -> Vec<bool> {
            (0..n)
                .map(|i| (0..k).fold(false, |acc, j| acc ^ rok.bob().get(i + j * n)))
                .collect()
        }

        pub fn n_n_bob(rok: &TriStateKey, k: usize) -> Vec<bool> {
            let n = rok.len();
            (0..n)
                .map(|i| (0..k).fold(false, |acc, j| acc ^ rok.bob().get((i + j) % n)))
                .collect()
        }

        pub fn shift_add_bob(keys: &[TriStateKey], shifts: &[usize]) -> Vec<bool> {
            let n = keys[0].len();
            (0..n)
                .map(|j| {
                    keys.iter()
                        .zip(shifts)
                        .fold(false, |acc, (key, &s)| acc ^ key.bob().get((j + s) % n))
                })
                .collect()
        }
    }

    #[test]
    fn dilutions_match_naive_oracles() {
        let mut rng = sim_rng(23);
        for trial in 0..40 {
            let k = 1 + trial % 4;
            let n = 8 + trial % 57;
            let rok = generate_rok(n * k, 0.4, 0.0, &mut rng);
            let fok = dilute_kn_n(&rok, n, k);
            assert_eq!(
                fok.bob().iter().collect::<Vec<_>>(),
                oracle::kn_n_bob(&rok, n, k)
            );

            let rok = generate_rok(n, 0.4, 0.0, &mut rng);
            let (fok, _) = dilute_n_n(&rok, k);
            assert_eq!(
                fok.bob().iter().collect::<Vec<_>>(),
                oracle::n_n_bob(&rok, k)
            );
        }
    }

    #[test]
    fn knowledge_soundness_after_dilution() {
        // e = 0: every bit Alice keeps equals Bob's.
        let mut rng = sim_rng(31);
        for _ in 0..30 {
            let rok = generate_rok(36, 0.6, 0.0, &mut rng);
            let (fok, _) = dilute_n_n(&rok, 3);
            for i in fok.known_positions().collect::<Vec<_>>() {
                assert_eq!(fok.alice_bit(i), Some(fok.bob().get(i)));
            }
        }
    }

    #[test]
    fn extension_matrix_examples() {
        let m = build_extension_matrix(3, 2, 3, 0);
        let rows: Vec<String> = m.rows().iter().map(|r| r.to_string()).collect();
        assert_eq!(rows, ["110", "101", "011"]);

        let m = build_extension_matrix(3, 2, 3, 1);
        let rows: Vec<String> = m.rows().iter().map(|r| r.to_string()).collect();
        assert_eq!(rows, ["101", "011", "110"]);

        let m = build_extension_matrix(7, 7, 1, 0);
        assert_eq!(m.row(0).to_string(), "1111111");
    }

    #[test]
    #[should_panic(expected = "exceeds C(4,2)")]
    fn extension_matrix_rejects_oversize_n() {
        build_extension_matrix(4, 2, 7, 0);
    }

    #[test]
    fn extend_subkey_examples() {
        let sub = TriStateKey::fully_known("000".parse().unwrap());
        let ext = build_extension_matrix(3, 2, 3, 0);
        let out = extend_subkey(&sub, &ext);
        assert_eq!(out.bob_string(), "000");
        assert_eq!(out.known_count(), 3);

        // Hand XOR over lexicographic pairs of 101: {0,1}→1, {0,2}→0, {1,2}→1.
        let sub = TriStateKey::fully_known("101".parse().unwrap());
        assert_eq!(extend_subkey(&sub, &ext).bob_string(), "101");

        // Alice short one bit of the sub-key: every pair touches it or not,
        // but with k = 3 windows over m = 3 the whole key is needed.
        let sub = key_from("101", "10?");
        let ext = build_extension_matrix(3, 3, 1, 0);
        assert_eq!(extend_subkey(&sub, &ext).known_count(), 0);
    }

    #[test]
    fn shift_add_examples() {
        let key = generate_rok(16, 0.5, 0.0, &mut sim_rng(41));
        assert_eq!(shift_add(std::slice::from_ref(&key), &[0]), key);

        let sum = shift_add(&[key.clone(), key.clone()], &[0, 0]);
        assert!(sum.bob().is_zero());
        assert_eq!(
            sum.known_positions().collect::<Vec<_>>(),
            key.known_positions().collect::<Vec<_>>()
        );
        assert!(sum.alice_value().is_zero());

        let mut rng = sim_rng(43);
        let keys: Vec<TriStateKey> = (0..3)
            .map(|_| generate_rok(16, 0.5, 0.0, &mut rng))
            .collect();
        let shifts = [3, 7, 12];
        let sum = shift_add(&keys, &shifts);
        assert_eq!(
            sum.bob().iter().collect::<Vec<_>>(),
            oracle::shift_add_bob(&keys, &shifts)
        );
    }

    #[test]
    fn rm_n_matches_matrix_form() {
        // Procedural dilution equals ⊕ᵢ G(sᵢ)·subᵢ bit for bit.
        let mut rng = sim_rng(47);
        for _ in 0..20 {
            let (r, m, k, n) = (2, 4, 2, 6);
            let subs: Vec<TriStateKey> = (0..r)
                .map(|_| generate_rok(m, 0.5, 0.0, &mut rng))
                .collect();
            let shifts = [1, 3];
            let fok = dilute_rm_n(&subs, &shifts, k, n);
            let mut expect = crate::gf2::BitVec::zeros(n);
            for (sub, &s) in subs.iter().zip(&shifts) {
                expect.xor_with(&build_extension_matrix(m, k, n, s).mul_vec(sub.bob()));
            }
            assert_eq!(fok.bob(), &expect);
        }
    }

    #[test]
    fn rm_n_trivial_cases() {
        // r = 1, m = k forces n = 1: the single FOK bit is the sub-key parity.
        let sub = TriStateKey::fully_known("1011".parse().unwrap());
        let fok = dilute_rm_n(std::slice::from_ref(&sub), &[0], 4, 1);
        assert_eq!(fok.bob().get(0), sub.bob().parity());

        // Alice knowing every sub-key bit knows the full FOK.
        let mut rng = sim_rng(53);
        let subs: Vec<TriStateKey> = (0..2)
            .map(|_| generate_rok(4, 1.0, 0.0, &mut rng))
            .collect();
        let fok = dilute_rm_n(&subs, &[2, 5], 2, 6);
        assert_eq!(fok.known_count(), 6);
    }

    #[test]
    fn stacked_rank_bounded_by_rm() {
        use rand::Rng;
        let mut rng = sim_rng(59);
        for _ in 0..10 {
            let (r, m, k) = (3, 5, 2);
            let n = 10;
            let blocks: Vec<Gf2Matrix> = (0..r)
                .map(|_| {
                    let s = (rng.random::<u64>() % n as u64) as usize;
                    build_extension_matrix(m, k, n, s)
                })
                .collect();
            let refs: Vec<&Gf2Matrix> = blocks.iter().collect();
            let stacked = Gf2Matrix::hconcat(&refs);
            assert!(stacked.rank() <= r * m);
        }
    }

    #[test]
    fn kn_n_expected_knowledge() {
        // Mean known FOK bits over 200 trials at N = 1024, k = 4, p = 0.25:
        // expectation 4.00, 3σ of the mean ≈ 0.43.
        let mut rng = sim_rng(61);
        let trials = 200;
        let total: usize = (0..trials)
            .map(|_| {
                let rok = generate_rok(4096, 0.25, 0.0, &mut rng);
                dilute_kn_n(&rok, 1024, 4).known_count()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 4.0).abs() < 0.43, "mean known bits {mean}");
    }
}
