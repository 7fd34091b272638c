//! The multi-query attack on the `N–N` dilution.
//!
//! Across queries Alice accumulates two kinds of facts about database items:
//! explicit values (from FOK bits she knows) and pairwise XORs (from the
//! parity relations the dilution leaks). A union-find with XOR edge weights
//! holds both: each component is either *lit* (every member explicitly known)
//! or an almost-known set whose members differ by known parities, so learning
//! any one member lights them all. The attacker picks each query's shift to
//! minimize the remaining unknown information `H`.

use rand::Rng;

use crate::dilution::{dilute_n_n, ParityRelation};
use crate::gf2::BitVec;
use crate::key::{generate_rok, SimParams, SimRng, TriStateKey};

/// Union-find over database items with XOR-parity edge weights.
///
/// For two items in one component the structure knows `value_i ⊕ value_j`;
/// a component becomes lit once any member's value is fixed. Contradictory
/// facts (possible only with channel errors) are counted, never fatal: the
/// first-lit value wins.
#[derive(Debug, Clone)]
pub struct ParityDsu {
    parent: Vec<u32>,
    /// Parity from a node to its parent.
    parity: Vec<bool>,
    /// Root-indexed component size.
    size: Vec<u32>,
    /// Root-indexed: component explicitly known.
    lit: Vec<bool>,
    /// Root-indexed, valid when lit: value of the root item.
    value: Vec<bool>,
    /// Root-indexed, valid when lit: lighting order, for first-lit-wins.
    lit_at: Vec<u32>,
    events: u32,
    conflicts: u64,
    unknown_singletons: usize,
    aks: usize,
    explicit: usize,
}

impl ParityDsu {
    pub fn new(n: usize) -> Self {
        ParityDsu {
            parent: (0..n as u32).collect(),
            parity: vec![false; n],
            size: vec![1; n],
            lit: vec![false; n],
            value: vec![false; n],
            lit_at: vec![0; n],
            events: 0,
            conflicts: 0,
            unknown_singletons: n,
            aks: 0,
            explicit: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root of `i`'s component and the parity from `i` to it. Compresses the
    /// path, rewriting each traversed parity to point at the root directly.
    pub fn find(&mut self, i: usize) -> (usize, bool) {
        let mut path = Vec::new();
        let mut node = i;
        while self.parent[node] as usize != node {
            path.push(node);
            node = self.parent[node] as usize;
        }
        let root = node;
        let mut acc = false;
        for &x in path.iter().rev() {
            acc ^= self.parity[x];
            self.parent[x] = root as u32;
            self.parity[x] = acc;
        }
        // After the loop `acc` is the parity from `i` itself to the root.
        (root, acc)
    }

    fn class_removed(&mut self, size: u32) {
        if size == 1 {
            self.unknown_singletons -= 1;
        } else {
            self.aks -= 1;
        }
    }

    /// Records `value_i ⊕ value_j = parity`.
    pub fn union(&mut self, i: usize, j: usize, rel_parity: bool) {
        let (ri, pi) = self.find(i);
        let (rj, pj) = self.find(j);
        if ri == rj {
            if pi ^ pj != rel_parity {
                self.conflicts += 1;
            }
            return;
        }
        // Parity between the two roots implied by the new edge.
        let q = pi ^ pj ^ rel_parity;
        let (keep, drop) = if self.size[ri] >= self.size[rj] {
            (ri, rj)
        } else {
            (rj, ri)
        };
        match (self.lit[keep], self.lit[drop]) {
            (false, false) => {
                self.class_removed(self.size[keep]);
                self.class_removed(self.size[drop]);
                self.aks += 1;
            }
            (true, false) => {
                self.class_removed(self.size[drop]);
                self.explicit += self.size[drop] as usize;
            }
            (false, true) => {
                self.class_removed(self.size[keep]);
                self.explicit += self.size[keep] as usize;
                self.lit[keep] = true;
                self.value[keep] = self.value[drop] ^ q;
                self.lit_at[keep] = self.lit_at[drop];
            }
            (true, true) => {
                if self.value[keep] ^ q != self.value[drop] {
                    self.conflicts += 1;
                }
                if self.lit_at[drop] < self.lit_at[keep] {
                    // First-lit component wins the disagreement.
                    self.value[keep] = self.value[drop] ^ q;
                    self.lit_at[keep] = self.lit_at[drop];
                }
            }
        }
        self.parent[drop] = keep as u32;
        self.parity[drop] = q;
        self.size[keep] += self.size[drop];
    }

    /// Fixes the value of item `i`, lighting its whole component.
    pub fn light(&mut self, i: usize, value: bool) {
        let (root, par) = self.find(i);
        if self.lit[root] {
            if self.value[root] ^ par != value {
                self.conflicts += 1;
            }
            return;
        }
        self.lit[root] = true;
        self.value[root] = value ^ par;
        self.lit_at[root] = self.events;
        self.events += 1;
        self.class_removed(self.size[root]);
        self.explicit += self.size[root] as usize;
    }

    pub fn is_lit(&mut self, i: usize) -> bool {
        let (root, _) = self.find(i);
        self.lit[root]
    }

    /// Value of item `i`, if its component is lit.
    pub fn item_value(&mut self, i: usize) -> Option<bool> {
        let (root, par) = self.find(i);
        self.lit[root].then(|| self.value[root] ^ par)
    }

    /// `value_i ⊕ value_j`, if the items share a component.
    pub fn xor_between(&mut self, i: usize, j: usize) -> Option<bool> {
        let (ri, pi) = self.find(i);
        let (rj, pj) = self.find(j);
        (ri == rj).then_some(pi ^ pj)
    }

    /// Unknown information: unlit singletons plus almost-known sets. Every
    /// unlit component hides exactly one bit of entropy.
    pub fn h(&self) -> usize {
        self.unknown_singletons + self.aks
    }

    pub fn unknown_singletons(&self) -> usize {
        self.unknown_singletons
    }

    pub fn aks_count(&self) -> usize {
        self.aks
    }

    /// Items in lit components.
    pub fn explicit_known(&self) -> usize {
        self.explicit
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }
}

/// Grid cell classification for rendering database state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    /// Explicitly known item.
    Known,
    /// Unknown item in no almost-known set.
    Unknown,
    /// Member of the almost-known set rooted at the given item.
    Aks(u32),
}

/// Alice's accumulated knowledge across queries, simulated against a fixed
/// ground-truth database. The database is held only to derive each query's
/// ciphertext (the simulation plays Bob's side too); the attacker-side
/// bookkeeping never reads it directly.
#[derive(Debug, Clone)]
pub struct AttackState {
    db: BitVec,
    dsu: ParityDsu,
    queries: u32,
}

impl AttackState {
    pub fn new(db: BitVec) -> Self {
        let dsu = ParityDsu::new(db.len());
        AttackState {
            db,
            dsu,
            queries: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.db.len()
    }

    pub fn queries(&self) -> u32 {
        self.queries
    }

    /// Remaining unknown information `H = n_u + n_aks`.
    pub fn h(&self) -> usize {
        self.dsu.h()
    }

    pub fn explicit_known(&self) -> usize {
        self.dsu.explicit_known()
    }

    pub fn aks_count(&self) -> usize {
        self.dsu.aks_count()
    }

    pub fn unknown_singletons(&self) -> usize {
        self.dsu.unknown_singletons()
    }

    pub fn conflicts(&self) -> u64 {
        self.dsu.conflicts()
    }

    pub fn dsu_mut(&mut self) -> &mut ParityDsu {
        &mut self.dsu
    }

    pub fn is_complete(&self) -> bool {
        self.dsu.explicit_known() == self.db.len()
    }

    /// Digests one query round: the FOK (with Alice's view), the parity
    /// relations the dilution leaked, and the announced shift `s`. Key
    /// position `x` encrypts item `(x − s) mod N`, so a known FOK bit lights
    /// that item with the decrypted value, and each relation becomes a parity
    /// edge between two items.
    pub fn absorb_query(&mut self, fok: &TriStateKey, relations: &[ParityRelation], s: usize) {
        let n = self.n();
        assert_eq!(fok.len(), n);
        assert!(s < n, "shift {s} out of range 0..{n}");
        self.queries += 1;
        let item_of = |pos: usize| (pos + n - s) % n;
        // Ciphertext bit for item i is db_i ⊕ fok_bob[(i + s) mod N].
        for rel in relations {
            let (ia, ib) = (item_of(rel.i), item_of(rel.j));
            let edge = self.db.get(ia)
                ^ self.db.get(ib)
                ^ fok.bob().get(rel.i)
                ^ fok.bob().get(rel.j)
                ^ rel.parity;
            self.dsu.union(ia, ib, edge);
        }
        for pos in fok.known_positions() {
            let item = item_of(pos);
            let cipher = self.db.get(item) ^ fok.bob().get(pos);
            let decrypted = cipher ^ fok.alice_value().get(pos);
            self.dsu.light(item, decrypted);
        }
    }

    /// The shift minimizing post-absorption `H`, ties to the smallest shift.
    ///
    /// Exhaustive over all `N` shifts, but evaluated incrementally: the base
    /// components are materialized once, and for each candidate shift only
    /// the touched components are merged in a small scratch union-find. The
    /// result equals what trial absorption would produce because absorption
    /// only merges touched components and lights those containing a known
    /// bit (the equivalence is pinned by a test against brute force).
    pub fn optimal_shift(&mut self, fok: &TriStateKey, relations: &[ParityRelation]) -> usize {
        self.optimal_shift_among(fok, relations, Shifts::All)
    }

    /// `optimal_shift` restricted to a candidate list (sampled search mode).
    pub fn optimal_shift_among(
        &mut self,
        fok: &TriStateKey,
        relations: &[ParityRelation],
        shifts: Shifts<'_>,
    ) -> usize {
        let n = self.n();
        assert_eq!(fok.len(), n);
        // Materialize roots with one compressing pass.
        let mut root_of = vec![0u32; n];
        for (i, slot) in root_of.iter_mut().enumerate() {
            *slot = self.dsu.find(i).0 as u32;
        }
        let knowns: Vec<usize> = fok.known_positions().collect();
        let lit = &self.dsu.lit;
        let mut scratch = ShiftScratch::new(n);
        let mut best: Option<(usize, usize)> = None; // (gain, shift)
        let mut consider = |s: usize, scratch: &mut ShiftScratch| {
            let gain = scratch.gain_for_shift(s, &root_of, lit, &knowns, relations);
            // Strict improvement keeps the smallest shift on ties.
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, s));
            }
        };
        match shifts {
            Shifts::All => {
                for s in 0..n {
                    consider(s, &mut scratch);
                }
            }
            Shifts::Candidates(list) => {
                assert!(!list.is_empty(), "candidate list must be nonempty");
                let mut sorted = list.to_vec();
                sorted.sort_unstable();
                sorted.dedup();
                for s in sorted {
                    assert!(s < n);
                    consider(s, &mut scratch);
                }
            }
        }
        best.expect("at least one candidate").1
    }

    /// Current classification of every item, row-major on a `width×height`
    /// grid. Almost-known sets are keyed by their root item, which is stable
    /// for a given state.
    pub fn snapshot_grid(&mut self, width: usize, height: usize) -> Vec<CellClass> {
        assert_eq!(width * height, self.n(), "grid must cover all items");
        (0..self.n())
            .map(|i| {
                let (root, _) = self.dsu.find(i);
                if self.dsu.lit[root] {
                    CellClass::Known
                } else if self.dsu.size[root] == 1 {
                    CellClass::Unknown
                } else {
                    CellClass::Aks(root as u32)
                }
            })
            .collect()
    }
}

/// Shift search space for `optimal_shift_among`.
#[derive(Debug, Clone, Copy)]
pub enum Shifts<'a> {
    All,
    Candidates(&'a [usize]),
}

/// Scratch union-find over the base roots touched by one candidate shift.
struct ShiftScratch {
    /// Base root → local node index, valid when stamped with current epoch.
    local_of_root: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    parent: Vec<u32>,
    unlit_count: Vec<u32>,
    has_light: Vec<bool>,
}

impl ShiftScratch {
    fn new(n: usize) -> Self {
        ShiftScratch {
            local_of_root: vec![0; n],
            stamp: vec![0; n],
            epoch: 0,
            parent: Vec::new(),
            unlit_count: Vec::new(),
            has_light: Vec::new(),
        }
    }

    fn local(&mut self, root: usize, lit: &[bool]) -> usize {
        if self.stamp[root] == self.epoch {
            return self.local_of_root[root] as usize;
        }
        let idx = self.parent.len();
        self.stamp[root] = self.epoch;
        self.local_of_root[root] = idx as u32;
        self.parent.push(idx as u32);
        self.unlit_count.push(u32::from(!lit[root]));
        self.has_light.push(lit[root]);
        idx
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let up = self.parent[x] as usize;
            self.parent[x] = self.parent[up];
            x = up;
        }
        x
    }

    /// How much `H` drops if the query is absorbed at shift `s`: every merged
    /// group of unlit components collapses to one, and groups containing a
    /// lit member or a lighting event leave none behind.
    fn gain_for_shift(
        &mut self,
        s: usize,
        root_of: &[u32],
        lit: &[bool],
        knowns: &[usize],
        relations: &[ParityRelation],
    ) -> usize {
        let n = root_of.len();
        self.epoch += 1;
        self.parent.clear();
        self.unlit_count.clear();
        self.has_light.clear();
        let item_of = |pos: usize| (pos + n - s) % n;
        for rel in relations {
            let ra = root_of[item_of(rel.i)] as usize;
            let rb = root_of[item_of(rel.j)] as usize;
            let (la, lb) = (self.local(ra, lit), self.local(rb, lit));
            let (fa, fb) = (self.find(la), self.find(lb));
            if fa != fb {
                self.parent[fb] = fa as u32;
                self.unlit_count[fa] += self.unlit_count[fb];
                self.has_light[fa] |= self.has_light[fb];
            }
        }
        for &pos in knowns {
            let r = root_of[item_of(pos)] as usize;
            let l = self.local(r, lit);
            let f = self.find(l);
            self.has_light[f] = true;
        }
        let mut gain = 0usize;
        for x in 0..self.parent.len() {
            if self.parent[x] as usize == x {
                let unlit = self.unlit_count[x] as usize;
                gain += if self.has_light[x] {
                    unlit
                } else {
                    unlit.saturating_sub(1)
                };
            }
        }
        gain
    }
}

/// One row of the per-query attack trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub n_q: u32,
    pub h: usize,
    pub explicit_known: usize,
    pub aks: usize,
    pub unknown_singletons: usize,
    pub conflicts: u64,
}

/// Result of a full attack run.
#[derive(Debug, Clone)]
pub struct AksOutcome {
    /// The death query amount: queries until the whole database is known.
    pub dqa: u32,
    pub trace: Vec<TraceRow>,
    pub conflicts: u64,
}

/// Attack run options. Defaults: relations on, exhaustive shift search.
#[derive(Debug, Clone, Default)]
pub struct AksOptions {
    /// Drop the leaked parity relations, leaving only kN–N-style knowledge.
    pub suppress_relations: bool,
    /// Evaluate only this many randomly drawn candidate shifts per query
    /// instead of all `N`. An approximation for very large `N`.
    pub sampled_shifts: Option<usize>,
}

/// The attack aborted.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttackError {
    #[error("no progress after {queries} queries (cap {cap})")]
    QueryCapExceeded { queries: u32, cap: u32 },
    #[error(transparent)]
    BadParams(#[from] crate::key::ParamError),
}

/// Runs the multi-query attack until every item is explicitly known and
/// returns the death query amount plus the per-query trace. The first
/// query's shift is drawn at random; every later shift is chosen optimally.
pub fn run_aks_attack(params: &SimParams, rng: &mut SimRng) -> Result<AksOutcome, AttackError> {
    run_aks_attack_observed(params, rng, &AksOptions::default(), |_, _| {})
}

/// `run_aks_attack` with options and a per-query observer (used by the CLI
/// to snapshot grid states mid-run).
pub fn run_aks_attack_observed(
    params: &SimParams,
    rng: &mut SimRng,
    options: &AksOptions,
    mut on_query: impl FnMut(u32, &mut AttackState),
) -> Result<AksOutcome, AttackError> {
    params.validate_n_n()?;
    let n = params.n;
    let db = BitVec::random(n, rng);
    let mut state = AttackState::new(db);
    // Safety cap: 100·N/n̄ queries, clamped to something sane when n̄ ≈ 0.
    let n_bar = params.n_bar();
    let cap = if n_bar > 0.0 {
        (100.0 * n as f64 / n_bar).ceil().min(1e6) as u32
    } else {
        n as u32
    };
    let mut trace = Vec::new();
    while !state.is_complete() {
        if state.queries() >= cap {
            return Err(AttackError::QueryCapExceeded {
                queries: state.queries(),
                cap,
            });
        }
        let rok = generate_rok(n, params.p, params.e, rng);
        let (fok, mut relations) = dilute_n_n(&rok, params.k);
        if options.suppress_relations {
            relations.clear();
        }
        let s = if state.queries() == 0 {
            rng.random_range(0..n)
        } else {
            match options.sampled_shifts {
                None => state.optimal_shift(&fok, &relations),
                Some(c) => {
                    let candidates: Vec<usize> =
                        (0..c.max(1)).map(|_| rng.random_range(0..n)).collect();
                    state.optimal_shift_among(&fok, &relations, Shifts::Candidates(&candidates))
                }
            }
        };
        let h_before = state.h();
        state.absorb_query(&fok, &relations, s);
        debug_assert!(state.h() <= h_before);
        trace.push(TraceRow {
            n_q: state.queries(),
            h: state.h(),
            explicit_known: state.explicit_known(),
            aks: state.aks_count(),
            unknown_singletons: state.unknown_singletons(),
            conflicts: state.conflicts(),
        });
        on_query(state.queries(), &mut state);
    }
    Ok(AksOutcome {
        dqa: state.queries(),
        trace,
        conflicts: state.conflicts(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::sim_rng;

    fn zero_db(n: usize) -> BitVec {
        BitVec::zeros(n)
    }

    fn known_at(n: usize, entries: &[(usize, bool)]) -> TriStateKey {
        let bob = BitVec::zeros(n);
        let known = BitVec::from_fn(n, |i| entries.iter().any(|&(p, _)| p == i));
        let value = BitVec::from_fn(n, |i| entries.iter().any(|&(p, v)| p == i && v));
        TriStateKey::new(bob, known, value)
    }

    #[test]
    fn one_known_bit_lights_one_item() {
        let mut state = AttackState::new(zero_db(8));
        let key = known_at(8, &[(3, false)]);
        state.absorb_query(&key, &[], 0);
        assert_eq!(state.explicit_known(), 1);
        assert_eq!(state.h(), 7);
    }

    #[test]
    fn chain_relations_light_together() {
        // Relations (0,1), (1,2) then lighting item 1 lights all three.
        let mut state = AttackState::new(zero_db(8));
        let rels = [
            ParityRelation {
                i: 0,
                j: 1,
                parity: false,
            },
            ParityRelation {
                i: 1,
                j: 2,
                parity: false,
            },
        ];
        state.absorb_query(&known_at(8, &[]), &rels, 0);
        assert_eq!(state.explicit_known(), 0);
        assert_eq!(state.aks_count(), 1);
        assert_eq!(state.h(), 6); // 5 singletons + 1 AKS

        state.absorb_query(&known_at(8, &[(1, false)]), &[], 0);
        assert_eq!(state.explicit_known(), 3);
        let dsu = state.dsu_mut();
        for i in 0..3 {
            assert_eq!(dsu.item_value(i), Some(false));
        }
    }

    #[test]
    fn two_aks_merge_into_one() {
        // {3,4} and {5,6,7} linked by a new (4,5) edge become one 5-member set.
        let mut state = AttackState::new(zero_db(10));
        let empty = known_at(10, &[]);
        let rels = [
            ParityRelation {
                i: 3,
                j: 4,
                parity: false,
            },
            ParityRelation {
                i: 5,
                j: 6,
                parity: false,
            },
            ParityRelation {
                i: 6,
                j: 7,
                parity: false,
            },
        ];
        state.absorb_query(&empty, &rels, 0);
        assert_eq!(state.aks_count(), 2);
        let link = [ParityRelation {
            i: 4,
            j: 5,
            parity: true,
        }];
        state.absorb_query(&empty, &link, 0);
        assert_eq!(state.aks_count(), 1);
        assert_eq!(state.h(), 5 + 1);
        assert_eq!(state.dsu_mut().xor_between(3, 7), Some(true));
    }

    #[test]
    fn dsu_parities_match_ground_truth() {
        // Random attack rounds against a random database: inside any
        // component the inferred XOR equals the true XOR of database bits,
        // and lit values equal the true bits (e = 0).
        let mut rng = sim_rng(71);
        for _ in 0..20 {
            let n = 32;
            let db = BitVec::random(n, &mut rng);
            let mut state = AttackState::new(db.clone());
            for q in 0..6 {
                let rok = generate_rok(n, 0.45, 0.0, &mut rng);
                let (fok, rels) = dilute_n_n(&rok, 2);
                state.absorb_query(&fok, &rels, (q * 7) % n);
            }
            let dsu = state.dsu_mut();
            for i in 0..n {
                if let Some(v) = dsu.item_value(i) {
                    assert_eq!(v, db.get(i), "lit value wrong at {i}");
                }
                for j in 0..n {
                    if let Some(x) = dsu.xor_between(i, j) {
                        assert_eq!(x, db.get(i) ^ db.get(j), "parity wrong for ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn conflicts_counted_not_fatal() {
        let mut state = AttackState::new(zero_db(4));
        let dsu = state.dsu_mut();
        dsu.union(0, 1, false);
        dsu.union(0, 1, true); // contradicts
        assert_eq!(dsu.conflicts(), 1);
        dsu.light(0, false);
        dsu.light(1, true); // contradicts the parity-0 edge
        assert_eq!(dsu.conflicts(), 2);
        assert_eq!(dsu.item_value(1), Some(false)); // first-lit value wins
    }

    /// Brute-force H for a shift: clone the state, absorb, read it back.
    fn h_by_trial(
        state: &AttackState,
        fok: &TriStateKey,
        rels: &[ParityRelation],
        s: usize,
    ) -> usize {
        let mut copy = state.clone();
        copy.absorb_query(fok, rels, s);
        copy.h()
    }

    #[test]
    fn optimal_shift_matches_trial_absorption() {
        let mut rng = sim_rng(73);
        for trial in 0..30 {
            let n = 16 + trial % 9;
            let db = BitVec::random(n, &mut rng);
            let mut state = AttackState::new(db);
            // Burn a couple of queries to build structure.
            for _ in 0..3 {
                let rok = generate_rok(n, 0.5, 0.0, &mut rng);
                let (fok, rels) = dilute_n_n(&rok, 2);
                let s = rng.random_range(0..n);
                state.absorb_query(&fok, &rels, s);
            }
            let rok = generate_rok(n, 0.5, 0.0, &mut rng);
            let (fok, rels) = dilute_n_n(&rok, 2);
            let fast = state.optimal_shift(&fok, &rels);
            let brute = (0..n)
                .min_by_key(|&s| (h_by_trial(&state, &fok, &rels, s), s))
                .unwrap();
            assert_eq!(
                (fast, h_by_trial(&state, &fok, &rels, fast)),
                (brute, h_by_trial(&state, &fok, &rels, brute)),
                "n = {n}"
            );
        }
    }

    #[test]
    fn optimal_shift_tie_breaks_low() {
        // Fully known state: every shift is equal, so the tie-break returns 0.
        let mut state = AttackState::new(zero_db(6));
        let everything: Vec<(usize, bool)> = (0..6).map(|i| (i, false)).collect();
        state.absorb_query(&known_at(6, &everything), &[], 0);
        assert!(state.is_complete());
        let key = known_at(6, &[(2, false)]);
        assert_eq!(state.optimal_shift(&key, &[]), 0);

        // Empty state: all shifts equivalent by translation symmetry.
        let mut fresh = AttackState::new(zero_db(6));
        assert_eq!(fresh.optimal_shift(&key, &[]), 0);
    }

    #[test]
    fn optimal_shift_prefers_joining_structure() {
        // N = 8 with an AKS {0,1,2}. A query carrying one known bit and one
        // relation can either spend both on fresh singletons or hook the
        // relation into the AKS while the known bit lights it; the latter
        // removes more components. Exhaustive trial absorption agrees.
        let mut state = AttackState::new(zero_db(8));
        let rels = [
            ParityRelation {
                i: 0,
                j: 1,
                parity: false,
            },
            ParityRelation {
                i: 1,
                j: 2,
                parity: false,
            },
        ];
        state.absorb_query(&known_at(8, &[]), &rels, 0);
        assert_eq!(state.h(), 6);

        // Known FOK bit at position 0, relation linking positions 2 and 3.
        let fok = known_at(8, &[(0, true)]);
        let query_rels = [ParityRelation {
            i: 2,
            j: 3,
            parity: false,
        }];
        let best = state.optimal_shift(&fok, &query_rels);
        let h_all: Vec<usize> = (0..8)
            .map(|s| h_by_trial(&state, &fok, &query_rels, s))
            .collect();
        assert_eq!(h_all[best], *h_all.iter().min().unwrap());
        // Shift 0 lights item 0 (whole AKS) and merges {2,3}: H = 6 - 2.
        assert_eq!(best, 0);
        assert_eq!(h_all[0], 4);
        // Shift 1 wastes the relation inside the AKS (items 1 and 2 already
        // share a component), so only the lighting counts: H = 6 - 1.
        assert_eq!(h_all[1], 5);
    }

    #[test]
    fn attack_terminates_instantly_with_full_knowledge() {
        let params = SimParams {
            n: 32,
            k: 2,
            p: 1.0,
            ..SimParams::default()
        };
        let out = run_aks_attack(&params, &mut sim_rng(79)).unwrap();
        assert_eq!(out.dqa, 1);
    }

    #[test]
    fn trace_h_never_increases() {
        let params = SimParams {
            n: 64,
            k: 2,
            p: 0.3,
            ..SimParams::default()
        };
        let out = run_aks_attack(&params, &mut sim_rng(83)).unwrap();
        assert!(out.dqa >= 1);
        for pair in out.trace.windows(2) {
            assert!(pair[1].h <= pair[0].h);
        }
        assert_eq!(out.trace.last().unwrap().explicit_known, 64);
    }

    #[test]
    fn relations_cut_the_query_count() {
        // kN–N-style knowledge alone (relations suppressed) needs far more
        // queries than the full attack on the same scenario.
        let params = SimParams {
            n: 225,
            k: 3,
            p: 0.25,
            ..SimParams::default()
        };
        let runs = 5;
        let mean = |suppress: bool| -> f64 {
            let total: u32 = (0..runs)
                .map(|run| {
                    let mut rng = crate::key::run_rng(97, run);
                    let options = AksOptions {
                        suppress_relations: suppress,
                        ..AksOptions::default()
                    };
                    run_aks_attack_observed(&params, &mut rng, &options, |_, _| {})
                        .unwrap()
                        .dqa
                })
                .sum();
            total as f64 / runs as f64
        };
        let with_relations = mean(false);
        let without = mean(true);
        assert!(
            with_relations < without / 2.0,
            "with {with_relations}, without {without}"
        );
    }

    #[test]
    fn sampled_shift_mode_runs() {
        let params = SimParams {
            n: 64,
            k: 2,
            p: 0.3,
            ..SimParams::default()
        };
        let options = AksOptions {
            sampled_shifts: Some(8),
            ..AksOptions::default()
        };
        let out = run_aks_attack_observed(&params, &mut sim_rng(101), &options, |_, _| {}).unwrap();
        assert!(out.dqa >= 1);
    }

    #[test]
    fn snapshot_classifies_cells() {
        let mut state = AttackState::new(zero_db(9));
        let grid = state.snapshot_grid(3, 3);
        assert!(grid.iter().all(|c| *c == CellClass::Unknown));

        let rels = [ParityRelation {
            i: 4,
            j: 5,
            parity: false,
        }];
        state.absorb_query(&known_at(9, &[]), &rels, 0);
        let grid = state.snapshot_grid(3, 3);
        let aks_cells = grid
            .iter()
            .filter(|c| matches!(c, CellClass::Aks(_)))
            .count();
        assert_eq!(aks_cells, 2);

        let everything: Vec<(usize, bool)> = (0..9).map(|i| (i, false)).collect();
        state.absorb_query(&known_at(9, &everything), &[], 0);
        let grid = state.snapshot_grid(3, 3);
        assert!(grid.iter().all(|c| *c == CellClass::Known));
    }
}
