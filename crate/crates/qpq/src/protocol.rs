//! End-to-end query rounds and the error-corrected `gkN–N` pipeline.
//!
//! The pipeline wraps each FOK bit in a coded exchange: Bob encodes a random
//! message, one-time-pads the codeword with seven raw key bits, and both
//! sides take a codeword parity as the key bit. An honest Alice decodes only
//! when she knows all seven pad bits, which corrects one channel error per
//! group; a dishonest Alice instead erasure-decodes from whatever pad bits
//! she has. Shift-adding `g` such middle keys shrinks the dishonest surplus
//! back down without hurting the honest failure probability.

use rand::Rng;

use crate::code::{CodeSpec, Erasure};
use crate::dilution::shift_add;
use crate::gf2::BitVec;
use crate::key::{generate_rok, SimParams, SimRng, TriStateKey};

/// Bob's database: one secret bit per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database(BitVec);

impl Database {
    pub fn new(items: BitVec) -> Self {
        Database(items)
    }

    pub fn random(n: usize, rng: &mut SimRng) -> Self {
        Database(BitVec::random(n, rng))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0.get(i)
    }

    pub fn bits(&self) -> &BitVec {
        &self.0
    }
}

/// Which parity becomes the key bit. Codeword parity needs a
/// balanced-parity code; message parity is random for any code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParitySource {
    #[default]
    Codeword,
    Message,
}

/// How the honest receiver treats a group beyond the code's guarantee.
///
/// The closed-form error laws (`p′_e`, `p″_e`) describe the bounded model:
/// one wrong pad bit is corrected, anything further passes through and the
/// parity keeps the raw odd/even residual. A receiver without side
/// information cannot detect the overflow on a perfect code — nearest-
/// codeword decoding miscorrects every 2-error group into a codeword at odd
/// distance 3, inflating the parity error rate to ≈ 21e²(1−e)⁵ at the
/// leading order. Both models are available; the bounded one is the default
/// the laws and tables are stated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correction {
    /// Correct exactly one wrong pad bit; pass multi-error groups through.
    #[default]
    SingleErrorOnly,
    /// Always decode to the nearest codeword, as a real receiver would.
    NearestCodeword,
}

/// Options for the coded dilution rounds.
#[derive(Debug, Clone, Default)]
pub struct EccOptions {
    /// Dishonest Alice gives up error correction and erasure-decodes from
    /// partial knowledge.
    pub dishonest: bool,
    pub parity: ParitySource,
    pub correction: Correction,
}

impl EccOptions {
    pub fn honest() -> Self {
        EccOptions::default()
    }

    pub fn dishonest() -> Self {
        EccOptions {
            dishonest: true,
            ..EccOptions::default()
        }
    }
}

/// Alice's result for one coded group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceOutcome {
    Known(bool),
    Unknown,
}

/// Full record of one coded dilution round.
#[derive(Debug, Clone)]
pub struct EccRoundRecord {
    pub group_index: usize,
    /// Bob's random message.
    pub message: BitVec,
    pub codeword: BitVec,
    /// Codeword one-time-padded with Bob's raw key bits for the group.
    pub ciphertext: BitVec,
    pub alice_outcome: AliceOutcome,
    /// Bob's key bit: the chosen parity of the codeword.
    pub bob_bit: bool,
    /// How many of the group's pad bits Alice knew.
    pub alice_known_bits: usize,
    /// Dishonest claim that was not pinned to a unique codeword; Alice
    /// committed to the first matching codeword and may be wrong.
    pub ambiguous_claim: bool,
    /// Distance the honest decoder corrected (0 or 1 normally; ≥2 channel
    /// errors decode to a wrong nearby codeword and this still reads 0 or 1).
    pub decode_distance: usize,
}

/// Audit dump of coded-round records, one CSV row per group. Alice's
/// outcome prints as `?` or her bit value.
pub fn records_to_csv(records: &[EccRoundRecord]) -> String {
    let mut text = String::from(
        "group_index,message,codeword,ciphertext,alice_outcome,bob_bit,\
         alice_known_bits,ambiguous_claim,decode_distance\n",
    );
    for r in records {
        let outcome = match r.alice_outcome {
            AliceOutcome::Unknown => "?".to_string(),
            AliceOutcome::Known(bit) => u8::from(bit).to_string(),
        };
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.group_index,
            r.message,
            r.codeword,
            r.ciphertext,
            outcome,
            u8::from(r.bob_bit),
            r.alice_known_bits,
            u8::from(r.ambiguous_claim),
            r.decode_distance
        ));
    }
    text
}

/// One-time pad of the database with the shifted FOK: item `i` is encrypted
/// with key bit `(i + s) mod N`.
pub fn encrypt_database(db: &Database, fok: &TriStateKey, s: usize) -> BitVec {
    let n = db.len();
    assert_eq!(fok.len(), n, "key and database lengths must match");
    assert!(s < n, "shift {s} out of range 0..{n}");
    BitVec::from_fn(n, |i| db.get(i) ^ fok.bob().get((i + s) % n))
}

/// One coded group: Bob pads a fresh codeword with the group's raw key bits;
/// Alice extracts the group's key bit if she can.
///
/// Honest: she needs all pad bits, decrypts, corrects up to one error, and
/// takes the parity. Dishonest: she erasure-decodes from her known
/// coordinates; with at least `m` of them she commits to a codeword even if
/// two candidates remain (first match), the generous claim counting that
/// drives the `n̄₂ = N·p₂` surplus. The record flags such ambiguous claims.
pub fn ecc_dilution_round(
    group: &TriStateKey,
    spec: &CodeSpec,
    options: &EccOptions,
    rng: &mut SimRng,
) -> EccRoundRecord {
    ecc_round_indexed(group, spec, options, rng, 0)
}

fn ecc_round_indexed(
    group: &TriStateKey,
    spec: &CodeSpec,
    options: &EccOptions,
    rng: &mut SimRng,
    group_index: usize,
) -> EccRoundRecord {
    assert_eq!(
        group.len(),
        spec.n(),
        "group length must match the code length"
    );
    let message = BitVec::random(spec.m(), rng);
    let codeword = spec.encode(&message);
    let ciphertext = &codeword ^ group.bob();
    let parity_of = |cw: &BitVec| match options.parity {
        ParitySource::Codeword => spec.codeword_parity(cw),
        ParitySource::Message => spec.message_parity(cw),
    };
    let bob_bit = parity_of(&codeword);
    let alice_known_bits = group.known_count();
    let mut ambiguous_claim = false;
    let mut decode_distance = 0;

    let alice_outcome = if options.dishonest {
        let known: Vec<(usize, bool)> = group
            .known_positions()
            .map(|i| (i, ciphertext.get(i) ^ group.alice_value().get(i)))
            .collect();
        if known.is_empty() {
            AliceOutcome::Unknown
        } else {
            match spec.erasure_decode(&known) {
                Erasure::Unique(cw) => AliceOutcome::Known(parity_of(&cw)),
                Erasure::Ambiguous if alice_known_bits >= spec.m() => {
                    // Enough coordinates to claim the bit the generous way
                    // (any m coordinates); commit to the first match.
                    ambiguous_claim = true;
                    let cw = spec
                        .codewords()
                        .iter()
                        .find(|cw| known.iter().all(|&(i, b)| cw.get(i) == b))
                        .expect("an ambiguous pattern has matching codewords");
                    AliceOutcome::Known(parity_of(cw))
                }
                Erasure::Ambiguous | Erasure::Inconsistent => AliceOutcome::Unknown,
            }
        }
    } else if alice_known_bits == spec.n() {
        let received = &ciphertext ^ group.alice_value();
        match options.correction {
            Correction::SingleErrorOnly => {
                let pad_errors = (group.alice_value() ^ group.bob()).count_ones();
                if pad_errors <= 1 {
                    // Within the guarantee the decode lands on Bob's codeword.
                    let (corrected, dist) = spec.decode_correct1(&received);
                    debug_assert_eq!(dist, pad_errors);
                    decode_distance = dist;
                    AliceOutcome::Known(parity_of(&corrected))
                } else {
                    AliceOutcome::Known(parity_of(&received))
                }
            }
            Correction::NearestCodeword => {
                let (corrected, dist) = spec.decode_correct1(&received);
                decode_distance = dist;
                AliceOutcome::Known(parity_of(&corrected))
            }
        }
    } else {
        AliceOutcome::Unknown
    };

    EccRoundRecord {
        group_index,
        message,
        codeword,
        ciphertext,
        alice_outcome,
        bob_bit,
        alice_known_bits,
        ambiguous_claim,
        decode_distance,
    }
}

/// Runs the coded dilution over a raw key of length `code.n() × N`, grouping
/// position `i` with its stride-`N` translates, and returns the middle
/// oblivious key plus the per-group records.
pub fn build_mok(
    rok: &TriStateKey,
    spec: &CodeSpec,
    options: &EccOptions,
    rng: &mut SimRng,
) -> (TriStateKey, Vec<EccRoundRecord>) {
    let span = spec.n();
    assert_eq!(
        rok.len() % span,
        0,
        "raw key length must be a multiple of the code length"
    );
    let n = rok.len() / span;
    let mut bob = BitVec::zeros(n);
    let mut known = BitVec::zeros(n);
    let mut value = BitVec::zeros(n);
    let mut records = Vec::with_capacity(n);
    let mut indices = vec![0usize; span];
    for i in 0..n {
        for (j, slot) in indices.iter_mut().enumerate() {
            *slot = i + j * n;
        }
        let group = rok.gather(&indices);
        let record = ecc_round_indexed(&group, spec, options, rng, i);
        bob.set(i, record.bob_bit);
        if let AliceOutcome::Known(bit) = record.alice_outcome {
            known.set(i, true);
            value.set(i, bit);
        }
        records.push(record);
    }
    (TriStateKey::new(bob, known, value), records)
}

/// Best alignment of `key`'s known positions against the current survivor
/// mask: the shift maximizing survivors, ties to the smallest shift.
/// Returns the shift and the shifted-known mask it induces.
pub fn best_alignment_shift(mask: &BitVec, key: &TriStateKey) -> (usize, BitVec) {
    let n = mask.len();
    assert_eq!(key.len(), n);
    // Doubled lookup absorbs the cyclic wrap; iterate the (usually much
    // smaller) survivor set per candidate shift.
    let mut doubled = vec![false; 2 * n];
    for pos in key.known_positions() {
        doubled[pos] = true;
        doubled[pos + n] = true;
    }
    let survivors: Vec<usize> = mask.ones().collect();
    let count_at = |s: usize| survivors.iter().filter(|&&j| doubled[j + s]).count();
    let mut best_shift = 0;
    let mut best_count = count_at(0);
    for s in 1..n {
        let count = count_at(s);
        if count > best_count {
            best_count = count;
            best_shift = s;
        }
    }
    let shifted = BitVec::from_fn(n, |j| mask.get(j) && doubled[j + best_shift]);
    (best_shift, shifted)
}

/// Greedy dishonest alignment: the first key is fixed at shift 0, every
/// later key takes the shift that keeps the most positions known in all
/// keys so far (ties to the smallest shift).
pub fn align_dishonest_greedy(moks: &[TriStateKey]) -> Vec<usize> {
    assert!(!moks.is_empty());
    let mut shifts = vec![0usize];
    let mut mask = moks[0].alice_known().clone();
    for key in &moks[1..] {
        let (s, new_mask) = best_alignment_shift(&mask, key);
        shifts.push(s);
        mask = new_mask;
    }
    shifts
}

/// Honest alignment: one known bit of every key is steered onto a common
/// random position; keys with no known bit take a random shift (the FOK is
/// then fully unknown, which is the failure event).
pub fn align_honest(moks: &[TriStateKey], rng: &mut SimRng) -> Vec<usize> {
    assert!(!moks.is_empty());
    let n = moks[0].len();
    let target = rng.random_range(0..n);
    moks.iter()
        .map(|key| match key.known_positions().next() {
            Some(q) => (q + n - target) % n,
            None => rng.random_range(0..n),
        })
        .collect()
}

/// Result of the full `gkN–N` post-processing.
#[derive(Debug, Clone)]
pub struct GknResult {
    pub fok: TriStateKey,
    pub moks: Vec<TriStateKey>,
    pub shifts: Vec<usize>,
}

/// The complete post-processing: `g` independently coded middle keys,
/// shift-added under Alice's alignment (honest or dishonest greedy).
pub fn gkn_post_process(
    params: &SimParams,
    spec: &CodeSpec,
    options: &EccOptions,
    rng: &mut SimRng,
) -> GknResult {
    params
        .validate_gkn_n()
        .expect("gkN–N parameters must validate");
    let moks: Vec<TriStateKey> = (0..params.g)
        .map(|_| {
            let rok = generate_rok(spec.n() * params.n, params.p, params.e, rng);
            build_mok(&rok, spec, options, rng).0
        })
        .collect();
    let shifts = if options.dishonest {
        align_dishonest_greedy(&moks)
    } else {
        align_honest(&moks, rng)
    };
    let fok = shift_add(&moks, &shifts);
    GknResult { fok, moks, shifts }
}

/// Outcome of one honest retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryOutcome {
    Retrieved(bool),
    /// Alice knew no FOK bit, so no shift lets her decrypt anything.
    Failed,
}

/// One full honest query: post-process, pick a known FOK bit, announce the
/// shift that lands it on the target item, and decrypt. The retrieved bit
/// can be wrong when channel errors survive the code.
pub fn run_honest_query(
    db: &Database,
    params: &SimParams,
    spec: &CodeSpec,
    target: usize,
    rng: &mut SimRng,
) -> QueryOutcome {
    assert!(target < db.len(), "target item out of range");
    assert_eq!(params.n, db.len());
    let result = gkn_post_process(params, spec, &EccOptions::honest(), rng);
    let Some(j) = result.fok.known_positions().next() else {
        return QueryOutcome::Failed;
    };
    let n = db.len();
    let s = (j + n - target) % n;
    let cipher = encrypt_database(db, &result.fok, s);
    QueryOutcome::Retrieved(cipher.get(target) ^ result.fok.alice_value().get(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::sim_rng;

    fn code() -> CodeSpec {
        CodeSpec::hamming_7_4()
    }

    #[test]
    fn encryption_examples() {
        let mut rng = sim_rng(139);
        let db = Database::random(16, &mut rng);
        let zeros = TriStateKey::fully_known(BitVec::zeros(16));
        assert_eq!(&encrypt_database(&db, &zeros, 3), db.bits());

        let self_key = TriStateKey::fully_known(db.bits().clone());
        assert!(encrypt_database(&db, &self_key, 0).is_zero());
    }

    #[test]
    fn known_shifted_bit_decrypts_the_target() {
        // Alice holding key bit j retrieves item i with s = j − i.
        let mut rng = sim_rng(149);
        let db = Database::random(16, &mut rng);
        let fok = generate_rok(16, 0.5, 0.0, &mut rng);
        for j in fok.known_positions().collect::<Vec<_>>() {
            for target in 0..16 {
                let s = (j + 16 - target) % 16;
                let cipher = encrypt_database(&db, &fok, s);
                assert_eq!(
                    cipher.get(target) ^ fok.alice_value().get(j),
                    db.get(target)
                );
            }
        }
    }

    #[test]
    fn honest_round_with_full_knowledge() {
        let mut rng = sim_rng(151);
        for _ in 0..20 {
            let group = generate_rok(7, 1.0, 0.0, &mut rng);
            let record = ecc_dilution_round(&group, &code(), &EccOptions::honest(), &mut rng);
            assert_eq!(record.alice_outcome, AliceOutcome::Known(record.bob_bit));
            assert_eq!(record.decode_distance, 0);
            assert_eq!(record.ciphertext, &record.codeword ^ group.bob());
        }
    }

    #[test]
    fn single_error_is_corrected() {
        // Exhaustive: any one wrong pad bit still yields Bob's bit.
        let mut rng = sim_rng(157);
        for flip in 0..7 {
            for _ in 0..10 {
                let clean = generate_rok(7, 1.0, 0.0, &mut rng);
                let mut value = clean.alice_value().clone();
                value.set(flip, !value.get(flip));
                let known = clean.alice_known().clone();
                let group = TriStateKey::new(clean.bob().clone(), known, value);
                let record = ecc_dilution_round(&group, &code(), &EccOptions::honest(), &mut rng);
                assert_eq!(record.alice_outcome, AliceOutcome::Known(record.bob_bit));
            }
        }
    }

    #[test]
    fn correction_models_follow_their_laws() {
        // Full-knowledge groups at e = 0.1. The bounded model errs exactly
        // when an odd number ≥ 3 of pad bits flip. Nearest-codeword decoding
        // also errs on every 2-error group (the miscorrection lands at odd
        // distance 3) and on the codeword-shaped patterns; with q = 1 − e its
        // exact law is 21e²q⁵ + 7e³q⁴ + 28e⁴q³ + 7e⁶q + e⁷.
        let e: f64 = 0.1;
        let q = 1.0 - e;
        let samples = 20_000;
        let rate_under = |correction: Correction, seed: u64| -> f64 {
            let options = EccOptions {
                correction,
                ..EccOptions::honest()
            };
            let mut rng = sim_rng(seed);
            let wrong = (0..samples)
                .filter(|_| {
                    let group = generate_rok(7, 1.0, e, &mut rng);
                    let record = ecc_dilution_round(&group, &code(), &options, &mut rng);
                    record.alice_outcome != AliceOutcome::Known(record.bob_bit)
                })
                .count();
            wrong as f64 / samples as f64
        };
        let three_sigma = |p: f64| 3.0 * (p * (1.0 - p) / samples as f64).sqrt();

        let bounded_law = 35.0 * e.powi(3) * q.powi(4) + 21.0 * e.powi(5) * q.powi(2) + e.powi(7);
        let bounded = rate_under(Correction::SingleErrorOnly, 197);
        assert!(
            (bounded - bounded_law).abs() < three_sigma(bounded_law),
            "bounded rate {bounded} vs law {bounded_law}"
        );

        let nearest_law = 21.0 * e.powi(2) * q.powi(5)
            + 7.0 * e.powi(3) * q.powi(4)
            + 28.0 * e.powi(4) * q.powi(3)
            + 7.0 * e.powi(6) * q
            + e.powi(7);
        let nearest = rate_under(Correction::NearestCodeword, 199);
        assert!(
            (nearest - nearest_law).abs() < three_sigma(nearest_law),
            "nearest rate {nearest} vs law {nearest_law}"
        );
    }

    #[test]
    fn honest_partial_knowledge_is_unknown() {
        let mut rng = sim_rng(163);
        let full = generate_rok(7, 1.0, 0.0, &mut rng);
        let known = BitVec::from_fn(7, |i| i != 3); // six of seven
        let group = TriStateKey::new(full.bob().clone(), known, full.alice_value().clone());
        let record = ecc_dilution_round(&group, &code(), &EccOptions::honest(), &mut rng);
        assert_eq!(record.alice_outcome, AliceOutcome::Unknown);
    }

    #[test]
    fn dishonest_claims_at_four_known_bits() {
        let mut rng = sim_rng(167);
        let full = generate_rok(7, 1.0, 0.0, &mut rng);
        let known4 = BitVec::from_fn(7, |i| i < 4);
        let group = TriStateKey::new(full.bob().clone(), known4, full.alice_value().clone());
        let record = ecc_dilution_round(&group, &code(), &EccOptions::dishonest(), &mut rng);
        assert!(matches!(record.alice_outcome, AliceOutcome::Known(_)));

        let known3 = BitVec::from_fn(7, |i| i < 3);
        let group = TriStateKey::new(full.bob().clone(), known3, full.alice_value().clone());
        let record = ecc_dilution_round(&group, &code(), &EccOptions::dishonest(), &mut rng);
        assert_eq!(record.alice_outcome, AliceOutcome::Unknown);
    }

    #[test]
    fn honest_known_count_at_scale() {
        // N = 10⁵, p = 0.25: honest Alice keeps ≈ N·p⁷ = 6.10 coded bits
        // (Poisson-scale 3σ band ≈ ±7.4).
        let mut rng = sim_rng(223);
        let rok = generate_rok(7 * 100_000, 0.25, 0.0, &mut rng);
        let (mok, _) = build_mok(&rok, &code(), &EccOptions::honest(), &mut rng);
        let count = mok.known_count() as f64;
        assert!((count - 6.10).abs() < 7.5, "honest known count {count}");
        // Everything she kept is correct with e = 0.
        for i in mok.known_positions().collect::<Vec<_>>() {
            assert_eq!(mok.alice_bit(i), Some(mok.bob().get(i)));
        }
    }

    #[test]
    fn dishonest_unique_claims_are_correct() {
        // Error-free unique erasure decodes always give Bob's bit.
        let mut rng = sim_rng(173);
        let mut uniques = 0;
        for _ in 0..300 {
            let group = generate_rok(7, 0.6, 0.0, &mut rng);
            let record = ecc_dilution_round(&group, &code(), &EccOptions::dishonest(), &mut rng);
            if let AliceOutcome::Known(bit) = record.alice_outcome {
                if !record.ambiguous_claim {
                    assert_eq!(bit, record.bob_bit);
                    uniques += 1;
                }
            }
        }
        assert!(uniques > 0);
    }

    #[test]
    fn mok_groups_use_stride_n() {
        // With exactly one fully-known stride group, only that MOK position
        // is known.
        let n = 5;
        let bob = BitVec::random(7 * n, &mut sim_rng(179));
        let known = BitVec::from_fn(7 * n, |idx| idx % n == 2);
        let value = BitVec::from_fn(7 * n, |idx| known.get(idx) && bob.get(idx));
        let rok = TriStateKey::new(bob, known, value);
        let (mok, records) = build_mok(&rok, &code(), &EccOptions::honest(), &mut sim_rng(181));
        assert_eq!(mok.len(), n);
        assert_eq!(mok.known_positions().collect::<Vec<_>>(), vec![2]);
        assert_eq!(mok.alice_bit(2), Some(mok.bob().get(2)));
        assert_eq!(records.len(), n);
        assert_eq!(records[2].alice_known_bits, 7);
    }

    #[test]
    fn full_knowledge_pipeline() {
        let params = SimParams {
            n: 40,
            k: 7,
            p: 1.0,
            g: 2,
            ..SimParams::default()
        };
        let mut rng = sim_rng(191);
        let result = gkn_post_process(&params, &code(), &EccOptions::honest(), &mut rng);
        assert_eq!(result.fok.known_count(), 40);
        assert_eq!(result.fok.alice_value(), result.fok.bob());

        let db = Database::random(40, &mut rng);
        for target in [0, 17, 39] {
            assert_eq!(
                run_honest_query(&db, &params, &code(), target, &mut rng),
                QueryOutcome::Retrieved(db.get(target))
            );
        }
    }

    #[test]
    fn disjoint_known_sets_survive_nothing() {
        // Two MOKs whose known sets are disjoint under every relative shift.
        let n = 4;
        let bob = BitVec::zeros(n);
        let known_one = BitVec::from_fn(n, |i| i == 0);
        let mok1 = TriStateKey::new(bob.clone(), known_one, BitVec::zeros(n));
        let mok2 = TriStateKey::new(bob.clone(), BitVec::zeros(n), BitVec::zeros(n));
        let shifts = align_dishonest_greedy(&[mok1.clone(), mok2.clone()]);
        let fok = shift_add(&[mok1, mok2], &shifts);
        assert_eq!(fok.known_count(), 0);
    }

    #[test]
    fn greedy_alignment_maximizes_overlap() {
        // Handmade keys where exactly one relative shift keeps 2 survivors.
        let n = 8;
        let mk = |positions: &[usize]| {
            let known = BitVec::from_fn(n, |i| positions.contains(&i));
            TriStateKey::new(BitVec::zeros(n), known, BitVec::zeros(n))
        };
        let a = mk(&[0, 3]);
        let b = mk(&[2, 5]); // shift 2 maps {2,5} onto {0,3}
        let (s, mask) = best_alignment_shift(a.alice_known(), &b);
        assert_eq!(s, 2);
        assert_eq!(mask.ones().collect::<Vec<_>>(), vec![0, 3]);

        let shifts = align_dishonest_greedy(&[a.clone(), b.clone()]);
        assert_eq!(shifts, vec![0, 2]);
        assert_eq!(shift_add(&[a, b], &shifts).known_count(), 2);
    }

    #[test]
    fn honest_query_follows_the_failure_and_error_laws() {
        // Reduced scale tuned so failures are common: N = 128, k = 7,
        // p = 0.5 gives N·p^k = 1 and P'_0 = (1 − p^k)^N ≈ 0.367.
        let params = SimParams {
            n: 128,
            k: 7,
            p: 0.5,
            e: 0.1,
            g: 2,
            ..SimParams::default()
        };
        let trials = 2000u64;
        let spec = code();
        let mut rng = sim_rng(977);
        let db = Database::random(params.n, &mut rng);
        let mut failed = 0usize;
        let mut wrong = 0usize;
        let mut retrieved = 0usize;
        for trial in 0..trials {
            let mut rng = crate::key::run_rng(7177, trial);
            let target = (trial as usize * 31) % params.n;
            match run_honest_query(&db, &params, &spec, target, &mut rng) {
                QueryOutcome::Failed => failed += 1,
                QueryOutcome::Retrieved(bit) => {
                    retrieved += 1;
                    if bit != db.get(target) {
                        wrong += 1;
                    }
                }
            }
        }
        let three_sigma = |p: f64, n: usize| 3.0 * (p * (1.0 - p) / n as f64).sqrt();

        let p0_g = crate::analysis::failure_p0_g(params.n, params.k as u32, params.p, 2);
        let failure_rate = failed as f64 / trials as f64;
        assert!(
            (failure_rate - p0_g).abs() < three_sigma(p0_g, trials as usize),
            "failure rate {failure_rate} vs P''_0 {p0_g}"
        );

        // Conditional on success, the retrieved bit errs at the pipeline's
        // combined rate.
        let pde = crate::analysis::p_dprime_e(params.e, 2);
        let error_rate = wrong as f64 / retrieved as f64;
        assert!(
            (error_rate - pde).abs() < three_sigma(pde, retrieved),
            "wrong-retrieval rate {error_rate} vs p''_e {pde}"
        );
    }

    #[test]
    fn records_dump_as_csv() {
        let mut rng = sim_rng(211);
        let rok = generate_rok(7 * 4, 0.6, 0.0, &mut rng);
        let (_, records) = build_mok(&rok, &code(), &EccOptions::dishonest(), &mut rng);
        let csv = records_to_csv(&records);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("group_index,message,codeword,ciphertext"));
        for (i, line) in lines[1..].iter().enumerate() {
            assert!(line.starts_with(&format!("{i},")));
            assert_eq!(line.split(',').count(), 9);
        }
    }

    #[test]
    fn honest_alignment_guarantees_a_bit() {
        let mut rng = sim_rng(193);
        for _ in 0..20 {
            let moks: Vec<TriStateKey> = (0..3)
                .map(|_| generate_rok(12, 0.4, 0.0, &mut rng))
                .collect();
            if moks.iter().any(|m| m.known_count() == 0) {
                continue;
            }
            let shifts = align_honest(&moks, &mut rng);
            let fok = shift_add(&moks, &shifts);
            assert!(fok.known_count() >= 1);
        }
    }
}
