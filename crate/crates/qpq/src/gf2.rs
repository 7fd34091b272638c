//! Bit vectors and dense matrices over GF(2).
//!
//! Everything in the lab ultimately reduces to XOR algebra: key strings,
//! codewords, extension matrices, and the rank arguments behind the basis
//! attack. Vectors are packed 64 bits to a block; bit 0 is the first
//! character when a vector is printed or parsed as a `'0'`/`'1'` string.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

const BLOCK_BITS: usize = 64;

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    blocks: Vec<u64>,
}

impl BitVec {
    /// All-zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            blocks: vec![0; len.div_ceil(BLOCK_BITS)],
        }
    }

    /// Builds a vector by evaluating `f` at every index.
    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut v = BitVec::zeros(len);
        for i in 0..len {
            if f(i) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_fn(bits.len(), |i| bits[i])
    }

    /// Uniformly random vector, one RNG draw per 64-bit block.
    pub fn random(len: usize, rng: &mut impl rand::Rng) -> Self {
        let mut v = BitVec::zeros(len);
        for b in v.blocks.iter_mut() {
            *b = rng.random();
        }
        v.mask_tail();
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range 0..{}", self.len);
        self.blocks[i / BLOCK_BITS] >> (i % BLOCK_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range 0..{}", self.len);
        let mask = 1u64 << (i % BLOCK_BITS);
        if bit {
            self.blocks[i / BLOCK_BITS] |= mask;
        } else {
            self.blocks[i / BLOCK_BITS] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Sum of all bits mod 2.
    pub fn parity(&self) -> bool {
        self.blocks.iter().fold(0u64, |acc, b| acc ^ b).count_ones() % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    /// Index of the first set bit, if any.
    pub fn first_one(&self) -> Option<usize> {
        for (bi, &b) in self.blocks.iter().enumerate() {
            if b != 0 {
                return Some(bi * BLOCK_BITS + b.trailing_zeros() as usize);
            }
        }
        None
    }

    /// In-place XOR. Lengths must match.
    pub fn xor_with(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of unequal-length vectors");
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a ^= b;
        }
    }

    /// Parity of the bitwise AND, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "dot of unequal-length vectors");
        self.blocks
            .iter()
            .zip(&other.blocks)
            .fold(0u64, |acc, (a, b)| acc ^ (a & b))
            .count_ones()
            % 2
            == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Concatenation, `self` first.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        BitVec::from_fn(self.len + other.len, |i| {
            if i < self.len {
                self.get(i)
            } else {
                other.get(i - self.len)
            }
        })
    }

    /// Lowercase hex of the underlying little-endian bytes (bit `8j+b` is bit
    /// `b` of byte `j`). Used for compact transcript logs.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.len.div_ceil(8) * 2);
        for byte_idx in 0..self.len.div_ceil(8) {
            let byte = (self.blocks[byte_idx / 8] >> (8 * (byte_idx % 8))) as u8;
            s.push_str(&format!("{byte:02x}"));
        }
        s
    }

    fn mask_tail(&mut self) {
        let used = self.len % BLOCK_BITS;
        if used != 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= (1u64 << used) - 1;
            }
        }
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// Error parsing a `'0'`/`'1'` string.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bit character {found:?} at position {at}")]
pub struct ParseBitsError {
    pub at: usize,
    pub found: char,
}

impl FromStr for BitVec {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut v = BitVec::zeros(s.chars().count());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                found => return Err(ParseBitsError { at: i, found }),
            }
        }
        Ok(v)
    }
}

impl BitXorAssign<&BitVec> for BitVec {
    fn bitxor_assign(&mut self, rhs: &BitVec) {
        self.xor_with(rhs);
    }
}

impl BitXor for &BitVec {
    type Output = BitVec;

    fn bitxor(self, rhs: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_with(rhs);
        out
    }
}

/// Outcome of solving `A·x = b` over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Unique(BitVec),
    /// Consistent but underdetermined: at least two solutions exist.
    Ambiguous,
    NoSolution,
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Gf2Matrix {
            cols,
            rows: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Gf2Matrix::zeros(n, n);
        for i in 0..n {
            m.rows[i].set(i, true);
        }
        m
    }

    pub fn from_rows(rows: Vec<BitVec>) -> Self {
        let cols = rows.first().map_or(0, BitVec::len);
        assert!(
            rows.iter().all(|r| r.len() == cols),
            "matrix rows must share one length"
        );
        Gf2Matrix { cols, rows }
    }

    /// Parses one `'0'`/`'1'` row per line; blank lines are skipped.
    pub fn parse_rows(text: &str) -> Result<Self, ParseBitsError> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(BitVec::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Gf2Matrix::from_rows(rows))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn set_row(&mut self, i: usize, row: BitVec) {
        assert_eq!(row.len(), self.cols);
        self.rows[i] = row;
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    /// Horizontal concatenation: rows are joined left to right.
    pub fn hconcat(parts: &[&Gf2Matrix]) -> Gf2Matrix {
        assert!(!parts.is_empty());
        let n_rows = parts[0].n_rows();
        assert!(parts.iter().all(|p| p.n_rows() == n_rows));
        let rows = (0..n_rows)
            .map(|r| {
                parts[1..]
                    .iter()
                    .fold(parts[0].row(r).clone(), |acc, p| acc.concat(p.row(r)))
            })
            .collect();
        Gf2Matrix::from_rows(rows)
    }

    /// `A·x` for a column vector `x` of length `cols`.
    pub fn mul_vec(&self, x: &BitVec) -> BitVec {
        assert_eq!(x.len(), self.cols);
        BitVec::from_fn(self.rows.len(), |r| self.rows[r].dot(x))
    }

    /// XOR of the rows selected by `coeffs` (that is, `coeffsᵀ·A`).
    pub fn combine_rows(&self, coeffs: &BitVec) -> BitVec {
        assert_eq!(coeffs.len(), self.rows.len());
        let mut out = BitVec::zeros(self.cols);
        for i in coeffs.ones() {
            out.xor_with(&self.rows[i]);
        }
        out
    }

    /// GF(2) row rank.
    pub fn rank(&self) -> usize {
        let mut elim = Eliminator::new();
        self.rows.iter().filter(|r| elim.insert(r)).count()
    }

    /// Greedy maximal independent row set. Rows listed in `preferred` are
    /// visited first (in the given order), then all remaining rows ascending,
    /// so any independent preferred rows are guaranteed members. The result
    /// has exactly `rank()` indices, in visit order.
    pub fn max_independent_rows(&self, preferred: &[usize]) -> Vec<usize> {
        let mut elim = Eliminator::new();
        let mut picked = Vec::new();
        let mut seen = vec![false; self.rows.len()];
        let order = preferred
            .iter()
            .copied()
            .inspect(|&i| assert!(i < self.rows.len(), "preferred row {i} out of range"))
            .chain(0..self.rows.len());
        for i in order {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            if elim.insert(&self.rows[i]) {
                picked.push(i);
            }
        }
        picked
    }

    /// Treats `self`'s rows as a basis and expresses `target` in it:
    /// returns `λ` with `⊕_t λ_t·row_t = target`, or `None` if `target`
    /// lies outside the row space. The coefficients are unique when the
    /// rows are independent.
    pub fn express_in_basis(&self, target: &BitVec) -> Option<BitVec> {
        assert_eq!(target.len(), self.cols);
        // Reduced rows carry the coefficient combination that produced them.
        let mut reduced: Vec<(usize, BitVec, BitVec)> = Vec::new();
        for (j, row) in self.rows.iter().enumerate() {
            let mut r = row.clone();
            let mut c = BitVec::zeros(self.rows.len());
            c.set(j, true);
            for (p, rr, cc) in &reduced {
                if r.get(*p) {
                    r.xor_with(rr);
                    c.xor_with(cc);
                }
            }
            if let Some(p) = r.first_one() {
                reduced.push((p, r, c));
            }
        }
        let mut t = target.clone();
        let mut coeffs = BitVec::zeros(self.rows.len());
        for (p, rr, cc) in &reduced {
            if t.get(*p) {
                t.xor_with(rr);
                coeffs.xor_with(cc);
            }
        }
        t.is_zero().then_some(coeffs)
    }

    /// Solves `A·x = b`. Distinguishes a unique solution from an
    /// underdetermined-but-consistent system and from an inconsistent one.
    pub fn solve(&self, b: &BitVec) -> Solution {
        assert_eq!(b.len(), self.rows.len(), "rhs length must match row count");
        let mut work: Vec<(BitVec, bool)> = self.rows.iter().cloned().zip(b.iter()).collect();
        let mut pivot_of_col: Vec<Option<usize>> = vec![None; self.cols];
        let mut next = 0;
        for (col, pivot_slot) in pivot_of_col.iter_mut().enumerate() {
            let Some(pivot) = (next..work.len()).find(|&r| work[r].0.get(col)) else {
                continue;
            };
            work.swap(next, pivot);
            let (lead, lead_rhs) = work[next].clone();
            for (r, (row, rhs)) in work.iter_mut().enumerate() {
                if r != next && row.get(col) {
                    row.xor_with(&lead);
                    *rhs ^= lead_rhs;
                }
            }
            *pivot_slot = Some(next);
            next += 1;
        }
        if work[next..].iter().any(|(row, rhs)| row.is_zero() && *rhs) {
            return Solution::NoSolution;
        }
        if pivot_of_col.iter().any(Option::is_none) {
            return Solution::Ambiguous;
        }
        let x = BitVec::from_fn(self.cols, |col| work[pivot_of_col[col].unwrap()].1);
        Solution::Unique(x)
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// Incremental row-reduction state shared by `rank` and basis selection.
struct Eliminator {
    pivots: Vec<(usize, BitVec)>,
}

impl Eliminator {
    fn new() -> Self {
        Eliminator { pivots: Vec::new() }
    }

    /// Reduces `row` against the pivots collected so far; keeps it and
    /// returns true iff it is independent of them.
    fn insert(&mut self, row: &BitVec) -> bool {
        let mut r = row.clone();
        for (p, pr) in &self.pivots {
            if r.get(*p) {
                r.xor_with(pr);
            }
        }
        match r.first_one() {
            Some(p) => {
                self.pivots.push((p, r));
                true
            }
            None => false,
        }
    }
}

/// Exact binomial coefficient. Panics on overflow past u128, which does not
/// occur for the desk-scale parameters this lab targets (m ≲ 100).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n - k + i) as u128 / i as u128;
    }
    acc
}

/// The `n`-th incidence vector of a `k`-of-`m` combination, in lexicographic
/// order of ascending position sets. Panics when `n ≥ C(m,k)`.
pub fn nth_combination(m: usize, k: usize, n: u128) -> BitVec {
    assert!(
        n < binomial(m as u64, k as u64),
        "combination index {n} out of range for C({m},{k})"
    );
    let mut v = BitVec::zeros(m);
    let mut n = n;
    let mut remaining = k;
    let mut pos = 0;
    while remaining > 0 {
        // Combinations whose smallest unplaced member is `pos`.
        let with_pos = binomial((m - pos - 1) as u64, (remaining - 1) as u64);
        if n < with_pos {
            v.set(pos, true);
            remaining -= 1;
        } else {
            n -= with_pos;
        }
        pos += 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    fn mat(rows: &[&str]) -> Gf2Matrix {
        Gf2Matrix::from_rows(rows.iter().map(|r| bv(r)).collect())
    }

    /// Independent rank oracle: textbook Gaussian elimination with full
    /// pivoting over a bool grid. Kept deliberately naive.
    #[allow(clippy::needless_range_loop)]
    fn rank_oracle(m: &Gf2Matrix) -> usize {
        let mut grid: Vec<Vec<bool>> = m.rows().iter().map(|r| r.iter().collect()).collect();
        let (rows, cols) = (m.n_rows(), m.n_cols());
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..rows).find(|&r| grid[r][c]) else {
                continue;
            };
            grid.swap(rank, p);
            for r in 0..rows {
                if r != rank && grid[r][c] {
                    for cc in 0..cols {
                        grid[r][cc] ^= grid[rank][cc];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    const GEN_7_4: [&str; 4] = ["1000101", "0100111", "0010110", "0001011"];

    #[test]
    fn rank_identity_and_zero() {
        assert_eq!(Gf2Matrix::identity(4).rank(), 4);
        assert_eq!(Gf2Matrix::zeros(3, 5).rank(), 0);
        assert_eq!(mat(&GEN_7_4).rank(), 4);
    }

    #[test]
    fn max_independent_rows_examples() {
        assert_eq!(
            Gf2Matrix::identity(3).max_independent_rows(&[2]),
            vec![2, 0, 1]
        );
        // Hand elimination: row 2 = row 0 ⊕ row 1.
        assert_eq!(
            mat(&["110", "011", "101"]).max_independent_rows(&[]),
            vec![0, 1]
        );
        assert_eq!(
            Gf2Matrix::zeros(3, 4).max_independent_rows(&[1]),
            Vec::<usize>::new()
        );
    }

    #[test]
    fn express_in_basis_examples() {
        let basis = mat(&["110", "011"]);
        assert_eq!(basis.express_in_basis(&bv("110")), Some(bv("10")));
        assert_eq!(basis.express_in_basis(&bv("101")), Some(bv("11")));
        // 111 = 110 ⊕ 011 ⊕ 010: not in the span of {110, 011}.
        assert_eq!(basis.express_in_basis(&bv("111")), None);

        // XOR-verified by hand: 100 ⊕ 011 = 111.
        let basis = mat(&["100", "011"]);
        assert_eq!(basis.express_in_basis(&bv("111")), Some(bv("11")));
    }

    #[test]
    fn solve_examples() {
        let id = Gf2Matrix::identity(5);
        let b = bv("10110");
        assert_eq!(id.solve(&b), Solution::Unique(b.clone()));

        assert_eq!(
            Gf2Matrix::zeros(3, 3).solve(&bv("010")),
            Solution::NoSolution
        );

        // Single equation x0 ⊕ x1 = 1: candidates 10 and 01 both solve it.
        assert_eq!(mat(&["11"]).solve(&bv("1")), Solution::Ambiguous);
    }

    #[test]
    fn solve_matches_exhaustive_enumeration() {
        // Every 3x3 system over a handful of seeds, checked against brute force.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let m = Gf2Matrix::from_rows((0..3).map(|_| BitVec::random(3, &mut rng)).collect());
            let b = BitVec::random(3, &mut rng);
            let solutions: Vec<BitVec> = (0..8u32)
                .map(|x| BitVec::from_fn(3, |i| x >> i & 1 == 1))
                .filter(|x| m.mul_vec(x) == b)
                .collect();
            match m.solve(&b) {
                Solution::Unique(x) => assert_eq!(solutions, vec![x]),
                Solution::Ambiguous => assert!(solutions.len() >= 2),
                Solution::NoSolution => assert!(solutions.is_empty()),
            }
        }
    }

    #[test]
    fn nth_combination_examples() {
        assert_eq!(nth_combination(3, 2, 0), bv("110"));
        assert_eq!(nth_combination(3, 2, 1), bv("101"));
        assert_eq!(nth_combination(3, 2, 2), bv("011"));
        assert_eq!(nth_combination(7, 7, 0), bv("1111111"));
        assert_eq!(nth_combination(4, 0, 0), bv("0000"));
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn nth_combination_rejects_bad_index() {
        nth_combination(3, 2, 3);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(7, 4), 35);
        assert_eq!(binomial(8, 3), 56);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(64, 32), 1832624140942590534);
    }

    #[test]
    fn hex_is_byte_oriented() {
        assert_eq!(bv("10000000").to_hex(), "01");
        assert_eq!(bv("0000000100000000").to_hex(), "8000");
        assert_eq!(bv("111").to_hex(), "07");
    }

    proptest! {
        #[test]
        fn rank_matches_oracle(rows in 1usize..=12, cols in 1usize..=12, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = Gf2Matrix::from_rows((0..rows).map(|_| BitVec::random(cols, &mut rng)).collect());
            prop_assert_eq!(m.rank(), rank_oracle(&m));
        }

        #[test]
        fn every_row_expressible_in_greedy_basis(rows in 1usize..=10, cols in 1usize..=10, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = Gf2Matrix::from_rows((0..rows).map(|_| BitVec::random(cols, &mut rng)).collect());
            let picked = m.max_independent_rows(&[]);
            prop_assert_eq!(picked.len(), m.rank());
            if picked.is_empty() {
                prop_assert!(m.rows().iter().all(BitVec::is_zero));
                return Ok(());
            }
            let basis = Gf2Matrix::from_rows(picked.iter().map(|&i| m.row(i).clone()).collect());
            for r in m.rows() {
                let coeffs = basis.express_in_basis(r).expect("row must lie in basis span");
                prop_assert_eq!(&basis.combine_rows(&coeffs), r);
            }
        }

        #[test]
        fn combinations_enumerate_in_order(m in 1usize..=9, k in 0usize..=9) {
            prop_assume!(k <= m);
            let total = binomial(m as u64, k as u64);
            let mut previous: Option<Vec<usize>> = None;
            let mut seen = std::collections::HashSet::new();
            for n in 0..total {
                let v = nth_combination(m, k, n);
                prop_assert_eq!(v.count_ones(), k);
                let positions: Vec<usize> = v.ones().collect();
                if let Some(prev) = &previous {
                    prop_assert!(prev < &positions, "combinations out of order at {}", n);
                }
                previous = Some(positions);
                prop_assert!(seen.insert(v.to_string()));
            }
            prop_assert_eq!(seen.len() as u128, total);
        }

        #[test]
        fn parity_is_linear(len in 1usize..=96, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = BitVec::random(len, &mut rng);
            let b = BitVec::random(len, &mut rng);
            prop_assert_eq!((&a ^ &b).parity(), a.parity() ^ b.parity());
        }

        #[test]
        fn display_parse_round_trip(len in 0usize..=90, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v = BitVec::random(len, &mut rng);
            prop_assert_eq!(v.to_string().parse::<BitVec>().unwrap(), v);
        }
    }
}
