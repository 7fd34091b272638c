//! The basis-reconstruction attack on the `rM–N` dilution.
//!
//! An `rM–N` FOK is a linear image of only `rM` raw key bits, so its bits
//! satisfy GF(2) relations Alice can compute from the public extension
//! matrices. She plans a row basis of the stacked matrix around a bit she
//! knows, then steers every later query so that a known bit lands on the
//! next basis position, converting each round's ciphertext into one
//! first-round FOK bit. Once the basis is valued, linear recombination
//! yields the whole first-round FOK and with it the whole database — after
//! at most `rank ≤ rM` queries.

use rand::Rng;

use crate::dilution::{build_extension_matrix, extend_subkey, shift_add};
use crate::gf2::{BitVec, Gf2Matrix};
use crate::key::{generate_rok, SimParams, SimRng, TriStateKey};

/// One query round as recorded for audit.
#[derive(Debug, Clone)]
pub struct QueryTranscript {
    /// 1-based query index.
    pub round: u32,
    /// The shift Alice announced for this round.
    pub announced_shift: usize,
    /// The full ciphertext Bob returned.
    pub ciphertext: BitVec,
    /// Positions (and values) Alice knows in this round's shifted FOK.
    pub known: Vec<(usize, bool)>,
}

/// A planned basis of the (shifted) first-round FOK.
#[derive(Debug, Clone)]
pub struct BasisPlan {
    /// Basis row indices γ₁…γ_T; the preferred known row comes first.
    pub gamma: Vec<usize>,
    /// Row `j` holds the coefficients expressing FOK bit `j` in the basis.
    pub lambda: Gf2Matrix,
}

/// Result of a full attack instance.
#[derive(Debug, Clone)]
pub struct RankOutcome {
    /// Alice's reconstruction of the database.
    pub recovered: BitVec,
    /// Queries actually issued, including the first.
    pub queries_used: u32,
    /// Rounds regenerated because Alice knew no FOK bit in them.
    pub retries: u32,
    /// Rank of the stacked matrix; the query-count bound.
    pub basis_size: usize,
    /// Equations that contradicted earlier ones (possible only with `e > 0`).
    pub inconsistencies: u32,
    pub transcripts: Vec<QueryTranscript>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankAttackError {
    #[error(transparent)]
    BadParams(#[from] crate::key::ParamError),
    #[error("database length {got} does not match N = {expected}")]
    DatabaseLength { got: usize, expected: usize },
    #[error("the preferred row {0} is zero and carries no information")]
    ZeroKnownRow(usize),
    #[error("round {round} still gave Alice no known bit after {attempts} key regenerations")]
    RetryCapExceeded { round: u32, attempts: u32 },
}

/// Query planning strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Harvest every known bit per round and skip basis targets already in
    /// the span of collected equations.
    #[default]
    Greedy,
    /// One basis target per query, exactly the constructive proof.
    Literal,
}

/// Horizontal concatenation of the per-sub-key extension matrices
/// `G(shifts[0]) … G(shifts[r−1])`: an `N × rM` matrix.
pub fn build_stacked_matrix(params: &SimParams, shifts: &[usize]) -> Gf2Matrix {
    assert_eq!(shifts.len(), params.r, "one shift per sub-key");
    let blocks: Vec<Gf2Matrix> = shifts
        .iter()
        .map(|&s| build_extension_matrix(params.m, params.k, params.n, s))
        .collect();
    let refs: Vec<&Gf2Matrix> = blocks.iter().collect();
    Gf2Matrix::hconcat(&refs)
}

/// Plans a basis of the row space of `gs` that contains `known_row`, plus
/// the coefficient table expressing every row in that basis.
pub fn plan_basis(gs: &Gf2Matrix, known_row: usize) -> Result<BasisPlan, RankAttackError> {
    if gs.row(known_row).is_zero() {
        return Err(RankAttackError::ZeroKnownRow(known_row));
    }
    Ok(plan_basis_preferring(gs, &[known_row]))
}

/// `plan_basis` generalized to any preference list (the attack prefers every
/// row Alice happens to know, which can only shorten the query phase).
pub fn plan_basis_preferring(gs: &Gf2Matrix, preferred: &[usize]) -> BasisPlan {
    let gamma = gs.max_independent_rows(preferred);
    let basis = Gf2Matrix::from_rows(gamma.iter().map(|&i| gs.row(i).clone()).collect());
    let lambda = Gf2Matrix::from_rows(
        gs.rows()
            .iter()
            .map(|row| {
                basis
                    .express_in_basis(row)
                    .expect("every row lies in the span of a maximal independent set")
            })
            .collect(),
    );
    BasisPlan { gamma, lambda }
}

/// Value-carrying elimination over row vectors: each inserted equation says
/// `row · unknowns = value`. Rows already in the span are checked for
/// consistency; new rows extend the span.
#[derive(Debug, Clone, Default)]
struct SpanSolver {
    pivots: Vec<(usize, BitVec, bool)>,
    inconsistencies: u32,
}

impl SpanSolver {
    fn insert(&mut self, row: &BitVec, value: bool) {
        let mut r = row.clone();
        let mut v = value;
        for (p, pr, pv) in &self.pivots {
            if r.get(*p) {
                r.xor_with(pr);
                v ^= pv;
            }
        }
        match r.first_one() {
            Some(p) => self.pivots.push((p, r, v)),
            None => {
                if v {
                    self.inconsistencies += 1;
                }
            }
        }
    }

    /// Value of `row · unknowns` when `row` lies in the collected span.
    fn eval(&self, row: &BitVec) -> Option<bool> {
        let mut r = row.clone();
        let mut v = false;
        for (p, pr, pv) in &self.pivots {
            if r.get(*p) {
                r.xor_with(pr);
                v ^= pv;
            }
        }
        r.is_zero().then_some(v)
    }

    /// Would `row` be evaluable if `extra` rows were also inserted?
    fn eval_with(&self, extra: &[&BitVec], row: &BitVec) -> bool {
        let mut probe = self.clone();
        for x in extra {
            probe.insert(x, false);
        }
        probe.eval(row).is_some()
    }
}

/// One generated round: the diluted key plus the dilution shifts Alice chose.
struct Round {
    fok: TriStateKey,
    dilution_shifts: Vec<usize>,
}

/// Generates sub-keys until Alice knows at least one extended bit in every
/// block, then aligns one known bit per block onto a common random position.
fn generate_round(
    params: &SimParams,
    ext: &Gf2Matrix,
    rng: &mut SimRng,
    round: u32,
    retries: &mut u32,
) -> Result<Round, RankAttackError> {
    const RETRY_CAP: u32 = 100_000;
    let n = params.n;
    let mut attempts = 0;
    loop {
        attempts += 1;
        if attempts > RETRY_CAP {
            return Err(RankAttackError::RetryCapExceeded {
                round,
                attempts: attempts - 1,
            });
        }
        let extended: Vec<TriStateKey> = (0..params.r)
            .map(|_| {
                let sub = generate_rok(params.m, params.p, params.e, rng);
                extend_subkey(&sub, ext)
            })
            .collect();
        let anchors: Option<Vec<usize>> = extended
            .iter()
            .map(|key| key.known_positions().next())
            .collect();
        let Some(anchors) = anchors else {
            *retries += 1;
            continue;
        };
        // Shift-addition reads key bit (j + s) mod n at output j, so putting
        // anchor q on the common target j* needs s = q − j*.
        let target = rng.random_range(0..n);
        let shifts: Vec<usize> = anchors.iter().map(|&q| (q + n - target) % n).collect();
        let fok = shift_add(&extended, &shifts);
        debug_assert!(fok.alice_known().get(target));
        return Ok(Round {
            fok,
            dilution_shifts: shifts,
        });
    }
}

/// Runs the basis-reconstruction attack against a hidden `database` and
/// returns the reconstruction (exact when `e = 0`) along with
/// the query count and transcripts.
pub fn run_rank_attack(
    params: &SimParams,
    database: &BitVec,
    rng: &mut SimRng,
) -> Result<RankOutcome, RankAttackError> {
    run_rank_attack_with(params, database, rng, Strategy::Greedy)
}

/// `run_rank_attack` with an explicit query strategy.
pub fn run_rank_attack_with(
    params: &SimParams,
    database: &BitVec,
    rng: &mut SimRng,
    strategy: Strategy,
) -> Result<RankOutcome, RankAttackError> {
    params.validate_rm_n()?;
    let n = params.n;
    if database.len() != n {
        return Err(RankAttackError::DatabaseLength {
            got: database.len(),
            expected: n,
        });
    }
    let ext = build_extension_matrix(params.m, params.k, n, 0);
    let mut retries = 0;
    let mut transcripts = Vec::new();

    // Round 1: honest query at a fresh shift; everything is then expressed in
    // the coordinates of this round's shifted FOK.
    let round1 = generate_round(params, &ext, rng, 1, &mut retries)?;
    let query_shift = rng.random_range(0..n);
    let shifted1 = round1.fok.cyclic_shift(query_shift);
    let cipher1 = database ^ shifted1.bob();
    let known1: Vec<(usize, bool)> = shifted1
        .known_positions()
        .map(|x| (x, shifted1.alice_value().get(x)))
        .collect();
    transcripts.push(QueryTranscript {
        round: 1,
        announced_shift: query_shift,
        ciphertext: cipher1.clone(),
        known: known1.clone(),
    });
    let mut queries_used = 1;

    // The shifted first-round system: row x of block i is the combination
    // feeding bit x of the shifted FOK.
    let shifted_dilution: Vec<usize> = round1
        .dilution_shifts
        .iter()
        .map(|&s| (s + query_shift) % n)
        .collect();
    let gs = build_stacked_matrix(params, &shifted_dilution);
    let preferred: Vec<usize> = known1.iter().map(|&(x, _)| x).collect();
    let plan = match strategy {
        Strategy::Greedy => plan_basis_preferring(&gs, &preferred),
        Strategy::Literal => plan_basis(&gs, preferred[0])?,
    };
    let t_total = plan.gamma.len();

    let mut solver = SpanSolver::default();
    match strategy {
        Strategy::Greedy => {
            for &(x, v) in &known1 {
                solver.insert(gs.row(x), v);
            }
        }
        Strategy::Literal => {
            let (x, v) = known1[0];
            solver.insert(gs.row(x), v);
        }
    }

    let mut gamma_values: Vec<Option<bool>> = vec![None; t_total];
    let refresh = |solver: &SpanSolver, gamma_values: &mut Vec<Option<bool>>| {
        for (t, slot) in gamma_values.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = solver.eval(gs.row(plan.gamma[t]));
            }
        }
    };
    refresh(&solver, &mut gamma_values);

    for t in 0..t_total {
        if gamma_values[t].is_some() {
            continue;
        }
        let target = plan.gamma[t];
        let round = generate_round(params, &ext, rng, queries_used + 1, &mut retries)?;
        let known_now: Vec<usize> = round.fok.known_positions().collect();

        // Announcing σ = ν − target lands known bit ν on position `target`
        // of the shifted key. Under the greedy strategy ν is chosen so the
        // whole harvested row set resolves as many later targets as possible.
        let nu = match strategy {
            Strategy::Literal => known_now[0],
            Strategy::Greedy => {
                let future: Vec<usize> = (t..t_total)
                    .filter(|&u| gamma_values[u].is_none())
                    .map(|u| plan.gamma[u])
                    .collect();
                *known_now
                    .iter()
                    .max_by_key(|&&nu| {
                        let sigma = (nu + n - target) % n;
                        let rows: Vec<&BitVec> = known_now
                            .iter()
                            .map(|&j| gs.row((j + n - sigma) % n))
                            .collect();
                        let resolved = future
                            .iter()
                            .filter(|&&g| solver.eval_with(&rows, gs.row(g)))
                            .count();
                        // Ties prefer the smallest ν.
                        (resolved, std::cmp::Reverse(nu))
                    })
                    .expect("round has at least one known bit")
            }
        };
        let sigma = (nu + n - target) % n;
        let shifted = round.fok.cyclic_shift(sigma);
        let cipher = database ^ shifted.bob();
        let known: Vec<(usize, bool)> = shifted
            .known_positions()
            .map(|x| (x, shifted.alice_value().get(x)))
            .collect();
        debug_assert!(known.iter().any(|&(x, _)| x == target));

        // Each known bit of this round converts into a first-round FOK bit:
        // fok1_x = C^t_x ⊕ C^1_x ⊕ fok_t(σ)_x.
        match strategy {
            Strategy::Greedy => {
                for &(x, v) in &known {
                    let value = cipher.get(x) ^ cipher1.get(x) ^ v;
                    solver.insert(gs.row(x), value);
                }
            }
            Strategy::Literal => {
                let v = shifted.alice_value().get(target);
                let value = cipher.get(target) ^ cipher1.get(target) ^ v;
                solver.insert(gs.row(target), value);
            }
        }
        queries_used += 1;
        transcripts.push(QueryTranscript {
            round: queries_used,
            announced_shift: sigma,
            ciphertext: cipher,
            known,
        });
        refresh(&solver, &mut gamma_values);
        debug_assert!(gamma_values[t].is_some());
    }

    // Recombine: every shifted-FOK bit is a λ-combination of the basis bits,
    // and the database is the first ciphertext decrypted with that key.
    let basis_bits = BitVec::from_fn(t_total, |t| gamma_values[t].expect("all targets resolved"));
    let fok1 = BitVec::from_fn(n, |j| {
        let coeffs = plan.lambda.row(j);
        (0..t_total).fold(false, |acc, t| acc ^ (coeffs.get(t) & basis_bits.get(t)))
    });
    let recovered = &cipher1 ^ &fok1;

    Ok(RankOutcome {
        recovered,
        queries_used,
        retries,
        basis_size: t_total,
        inconsistencies: solver.inconsistencies,
        transcripts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::sim_rng;

    fn params(r: usize, m: usize, k: usize, n: usize, p: f64) -> SimParams {
        SimParams {
            n,
            k,
            p,
            r,
            m,
            ..SimParams::default()
        }
    }

    #[test]
    fn stacked_matrix_examples() {
        // r = 1 reduces to the plain extension matrix.
        let p = params(1, 4, 2, 6, 0.25);
        let single = build_stacked_matrix(&p, &[2]);
        assert_eq!(single, build_extension_matrix(4, 2, 6, 2));

        // Hand-built concatenation for r = 2, M = 3, k = 2, shifts (0, 1).
        let p = params(2, 3, 2, 3, 0.25);
        let stacked = build_stacked_matrix(&p, &[0, 1]);
        let rows: Vec<String> = stacked.rows().iter().map(|r| r.to_string()).collect();
        assert_eq!(rows, ["110101", "101011", "011110"]);
        assert!(stacked.rank() <= 6);
    }

    #[test]
    fn plan_basis_identity() {
        let gs = Gf2Matrix::identity(5);
        let plan = plan_basis(&gs, 3).unwrap();
        assert_eq!(plan.gamma, vec![3, 0, 1, 2, 4]);
        // Lambda rows are unit vectors permuted to match the basis order.
        for j in 0..5 {
            let coeffs = plan.lambda.row(j);
            assert_eq!(coeffs.count_ones(), 1);
            let t = coeffs.first_one().unwrap();
            assert_eq!(plan.gamma[t], j);
        }
    }

    #[test]
    fn plan_basis_dependent_rows() {
        let gs = Gf2Matrix::from_rows(
            ["110", "011", "101"]
                .iter()
                .map(|s| s.parse().unwrap())
                .collect(),
        );
        let plan = plan_basis(&gs, 0).unwrap();
        assert_eq!(plan.gamma, vec![0, 1]);
        assert_eq!(plan.lambda.row(2).to_string(), "11");
    }

    #[test]
    fn plan_basis_rejects_zero_row() {
        let mut gs = Gf2Matrix::identity(3);
        gs.set_row(1, BitVec::zeros(3));
        assert!(matches!(
            plan_basis(&gs, 1),
            Err(RankAttackError::ZeroKnownRow(1))
        ));
    }

    #[test]
    fn lambda_recombination_reproduces_every_row() {
        let mut rng = sim_rng(107);
        for _ in 0..20 {
            let gs = Gf2Matrix::from_rows((0..12).map(|_| BitVec::random(6, &mut rng)).collect());
            let Some(row) = (0..12).find(|&i| !gs.row(i).is_zero()) else {
                continue;
            };
            let plan = plan_basis(&gs, row).unwrap();
            let basis =
                Gf2Matrix::from_rows(plan.gamma.iter().map(|&i| gs.row(i).clone()).collect());
            for j in 0..12 {
                assert_eq!(&basis.combine_rows(plan.lambda.row(j)), gs.row(j));
            }
        }
    }

    #[test]
    fn single_item_database() {
        // r = 1, M = k forces n = 1; one query recovers the one item.
        let p = params(1, 3, 3, 1, 0.6);
        let db: BitVec = "1".parse().unwrap();
        let out = run_rank_attack(&p, &db, &mut sim_rng(109)).unwrap();
        assert_eq!(out.recovered, db);
        assert_eq!(out.queries_used, 1);
    }

    #[test]
    fn full_knowledge_needs_one_query() {
        let p = params(2, 4, 2, 6, 1.0);
        let db = BitVec::random(6, &mut sim_rng(113));
        let out = run_rank_attack(&p, &db, &mut sim_rng(127)).unwrap();
        assert_eq!(out.recovered, db);
        assert_eq!(out.queries_used, 1);
        assert_eq!(out.retries, 0);
    }

    #[test]
    fn recovers_exactly_within_the_bound() {
        let p = params(2, 8, 3, 56, 0.4);
        let mut rng = sim_rng(131);
        let db = BitVec::random(56, &mut rng);
        let out = run_rank_attack(&p, &db, &mut rng).unwrap();
        assert_eq!(out.recovered, db);
        assert!(out.queries_used as usize <= out.basis_size);
        assert!(out.basis_size <= 16);
        assert_eq!(out.inconsistencies, 0);
    }

    #[test]
    fn transcripts_are_sound() {
        let p = params(2, 6, 2, 15, 0.35);
        let mut rng = sim_rng(137);
        let db = BitVec::random(15, &mut rng);
        let out = run_rank_attack(&p, &db, &mut rng).unwrap();
        assert_eq!(out.recovered, db);
        for tr in &out.transcripts {
            assert_eq!(tr.ciphertext.len(), 15);
            // With e = 0 Alice's known shifted-FOK values are true, so the
            // ciphertext XOR-verifies against the database at those spots.
            for &(x, v) in &tr.known {
                assert_eq!(tr.ciphertext.get(x) ^ v, db.get(x));
            }
        }
        assert_eq!(out.transcripts.len() as u32, out.queries_used);
    }

    #[test]
    fn greedy_never_needs_more_queries_than_literal() {
        for seed in 0..15 {
            let p = params(2, 6, 2, 15, 0.3);
            let db = BitVec::random(15, &mut sim_rng(seed));
            let greedy =
                run_rank_attack_with(&p, &db, &mut sim_rng(seed * 3 + 1), Strategy::Greedy)
                    .unwrap();
            let literal =
                run_rank_attack_with(&p, &db, &mut sim_rng(seed * 3 + 1), Strategy::Literal)
                    .unwrap();
            assert_eq!(greedy.recovered, db);
            assert_eq!(literal.recovered, db);
            assert!(greedy.queries_used <= literal.queries_used);
            // The literal strategy pays for every basis element.
            assert_eq!(literal.queries_used as usize, literal.basis_size);
        }
    }

    #[test]
    fn hundred_random_instances_recover_exactly() {
        // Exact-recovery property sweep at module scale; the acceptance suite
        // repeats this with its own parameters.
        let mut ok = 0;
        for seed in 0..25 {
            let mut rng = sim_rng(1000 + seed);
            let m = 3 + (seed as usize % 6); // 3..=8
            let k = 1 + (seed as usize % 3).min(m - 1);
            let r = 1 + (seed as usize % 3);
            let max_n = crate::gf2::binomial(m as u64, k as u64) as usize;
            let n = max_n.clamp(1, 20);
            let p = params(r, m, k, n, 0.3 + 0.1 * (seed % 4) as f64);
            let db = BitVec::random(n, &mut rng);
            let out = run_rank_attack(&p, &db, &mut rng).unwrap();
            assert_eq!(out.recovered, db, "seed {seed}");
            assert!(out.queries_used as usize <= out.basis_size);
            assert!(out.basis_size <= r * m);
            ok += 1;
        }
        assert_eq!(ok, 25);
    }
}
