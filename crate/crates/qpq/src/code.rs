//! Small binary linear block codes given by a systematic generator matrix,
//! specialized to the \[7,4,3\] code used by the error-corrected pipeline.
//!
//! Codes are small by design (messages up to 12 bits): the full codeword
//! table, the minimum distance, and the single-error syndrome table are all
//! precomputed exhaustively at construction.

use crate::gf2::{BitVec, Gf2Matrix, Solution};

/// A generator matrix that cannot back a `CodeSpec`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodeError {
    #[error("generator matrix must have fewer rows than columns")]
    BadShape,
    #[error("generator matrix is not in standard form [I | A]")]
    NotStandardForm,
    #[error("message length {0} exceeds the supported maximum of 12")]
    TooLarge(usize),
    #[error("could not parse generator row: {0}")]
    BadRow(#[from] crate::gf2::ParseBitsError),
}

/// Outcome of decoding from known coordinates only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Erasure {
    /// Exactly one codeword matches the known coordinates.
    Unique(BitVec),
    /// Two or more codewords match.
    Ambiguous,
    /// No codeword matches (possible only when known values are erroneous).
    Inconsistent,
}

/// An `[n, m, d]` binary linear code in systematic form.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    n: usize,
    m: usize,
    d: usize,
    gen: Gf2Matrix,
    check: Gf2Matrix,
    /// Syndrome (as little-endian integer) → flipped position, weight-1 only.
    syndrome_flip: Vec<Option<usize>>,
    /// All 2^m codewords, indexed so that message bit `i` is bit `i` of the index.
    codewords: Vec<BitVec>,
}

impl CodeSpec {
    /// Builds a code from a standard-form generator `[I | A]`, deriving the
    /// parity-check matrix `[Aᵀ | I]` and the decoding tables.
    pub fn new(gen: Gf2Matrix) -> Result<Self, CodeError> {
        let m = gen.n_rows();
        let n = gen.n_cols();
        if m == 0 || m >= n {
            return Err(CodeError::BadShape);
        }
        if m > 12 {
            return Err(CodeError::TooLarge(m));
        }
        for r in 0..m {
            for c in 0..m {
                if gen.get(r, c) != (r == c) {
                    return Err(CodeError::NotStandardForm);
                }
            }
        }
        let check = Gf2Matrix::from_rows(
            (0..n - m)
                .map(|r| BitVec::from_fn(n, |c| if c < m { gen.get(c, m + r) } else { c - m == r }))
                .collect(),
        );
        let codewords: Vec<BitVec> = (0..1usize << m)
            .map(|v| gen.combine_rows(&BitVec::from_fn(m, |i| v >> i & 1 == 1)))
            .collect();
        let d = codewords
            .iter()
            .skip(1)
            .map(BitVec::count_ones)
            .min()
            .expect("at least one nonzero codeword");
        let mut syndrome_flip = vec![None; 1 << (n - m)];
        for pos in 0..n {
            let e = BitVec::from_fn(n, |i| i == pos);
            syndrome_flip[syndrome_index(&check.mul_vec(&e))] = Some(pos);
        }
        Ok(CodeSpec {
            n,
            m,
            d,
            gen,
            check,
            syndrome_flip,
            codewords,
        })
    }

    /// One `'0'`/`'1'` generator row per line.
    pub fn from_generator_text(text: &str) -> Result<Self, CodeError> {
        CodeSpec::new(Gf2Matrix::parse_rows(text)?)
    }

    /// The \[7,4,3\] code with the generator used throughout the pipeline.
    pub fn hamming_7_4() -> Self {
        CodeSpec::from_generator_text(
            "1000101\n\
             0100111\n\
             0010110\n\
             0001011",
        )
        .expect("built-in generator is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn min_distance(&self) -> usize {
        self.d
    }

    pub fn generator(&self) -> &Gf2Matrix {
        &self.gen
    }

    pub fn parity_check(&self) -> &Gf2Matrix {
        &self.check
    }

    /// All codewords; index `v` encodes the message whose bit `i` is bit `i` of `v`.
    pub fn codewords(&self) -> &[BitVec] {
        &self.codewords
    }

    /// `msg · G`.
    pub fn encode(&self, msg: &BitVec) -> BitVec {
        assert_eq!(msg.len(), self.m, "message length must be {}", self.m);
        self.gen.combine_rows(msg)
    }

    /// Corrects up to one error by syndrome lookup; anything further from
    /// every codeword falls back to the nearest codeword by exhaustive
    /// search, smallest index first. Returns the chosen codeword and its
    /// distance from the input. Miscorrection on two or more errors is
    /// expected behavior.
    pub fn decode_correct1(&self, word: &BitVec) -> (BitVec, usize) {
        assert_eq!(word.len(), self.n);
        let syndrome = self.check.mul_vec(word);
        if syndrome.is_zero() {
            return (word.clone(), 0);
        }
        if self.d >= 3 {
            if let Some(pos) = self.syndrome_flip[syndrome_index(&syndrome)] {
                let mut cw = word.clone();
                cw.set(pos, !cw.get(pos));
                return (cw, 1);
            }
        }
        let nearest = self
            .codewords
            .iter()
            .min_by_key(|cw| distance(cw, word))
            .expect("codeword table is never empty");
        (nearest.clone(), distance(nearest, word))
    }

    /// Decodes from known coordinates alone by solving the restricted linear
    /// system over the message bits. `known` holds distinct `(position, bit)`
    /// pairs.
    pub fn erasure_decode(&self, known: &[(usize, bool)]) -> Erasure {
        if known.is_empty() {
            return Erasure::Ambiguous;
        }
        let mut seen = vec![false; self.n];
        for &(pos, _) in known {
            assert!(pos < self.n, "position {pos} out of range");
            assert!(!seen[pos], "duplicate known position {pos}");
            seen[pos] = true;
        }
        // Constraint rows: the generator column at each known position.
        let system = Gf2Matrix::from_rows(
            known
                .iter()
                .map(|&(pos, _)| BitVec::from_fn(self.m, |r| self.gen.get(r, pos)))
                .collect(),
        );
        let rhs = BitVec::from_fn(known.len(), |t| known[t].1);
        match system.solve(&rhs) {
            Solution::Unique(msg) => Erasure::Unique(self.encode(&msg)),
            Solution::Ambiguous => Erasure::Ambiguous,
            Solution::NoSolution => Erasure::Inconsistent,
        }
    }

    /// XOR of all codeword bits.
    pub fn codeword_parity(&self, cw: &BitVec) -> bool {
        assert_eq!(cw.len(), self.n);
        cw.parity()
    }

    /// XOR of the systematic message part (the first `m` bits).
    pub fn message_parity(&self, cw: &BitVec) -> bool {
        assert_eq!(cw.len(), self.n);
        (0..self.m).fold(false, |acc, i| acc ^ cw.get(i))
    }
}

fn syndrome_index(syndrome: &BitVec) -> usize {
    syndrome.ones().fold(0usize, |acc, i| acc | 1 << i)
}

fn distance(a: &BitVec, b: &BitVec) -> usize {
    (a ^ b).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 16 codewords as printed in the source description of the code,
    /// in message order 0000, 0001, …, 1111 (leftmost message bit first).
    const CODEWORDS: [&str; 16] = [
        "0000000", "0001011", "0010110", "0011101", "0100111", "0101100", "0110001", "0111010",
        "1000101", "1001110", "1010011", "1011000", "1100010", "1101001", "1110100", "1111111",
    ];

    fn msg(v: usize) -> BitVec {
        // The table above counts with the last message bit as the least
        // significant one.
        BitVec::from_fn(4, |i| v >> (3 - i) & 1 == 1)
    }

    #[test]
    fn encodes_the_published_table() {
        let code = CodeSpec::hamming_7_4();
        for (v, expect) in CODEWORDS.iter().enumerate() {
            assert_eq!(code.encode(&msg(v)).to_string(), *expect, "message {v:04b}");
        }
    }

    #[test]
    fn structure() {
        let code = CodeSpec::hamming_7_4();
        assert_eq!((code.n(), code.m()), (7, 4));
        assert_eq!(code.min_distance(), 3);
        // G·Hᵀ = 0.
        for g in code.generator().rows() {
            for h in code.parity_check().rows() {
                assert!(!g.dot(h));
            }
        }
    }

    #[test]
    fn corrects_every_single_error() {
        // All 16 codewords × (no flip + 7 single flips) = 128 cases.
        let code = CodeSpec::hamming_7_4();
        for cw in code.codewords() {
            assert_eq!(code.decode_correct1(cw), (cw.clone(), 0));
            for pos in 0..7 {
                let mut word = cw.clone();
                word.set(pos, !word.get(pos));
                assert_eq!(code.decode_correct1(&word), (cw.clone(), 1));
            }
        }
    }

    #[test]
    fn two_errors_miscorrect_to_a_neighbor() {
        let code = CodeSpec::hamming_7_4();
        let cw: BitVec = "0001011".parse().unwrap();
        let mut word = cw.clone();
        word.set(0, true);
        word.set(1, true);
        let (decoded, dist) = code.decode_correct1(&word);
        assert_ne!(decoded, cw);
        assert_eq!(dist, 1);
    }

    #[test]
    fn erasure_decoding_examples() {
        let code = CodeSpec::hamming_7_4();
        let cw: BitVec = "0001011".parse().unwrap();

        let all: Vec<(usize, bool)> = (0..7).map(|i| (i, cw.get(i))).collect();
        assert_eq!(code.erasure_decode(&all), Erasure::Unique(cw.clone()));

        // Three constraints cannot pin four message bits.
        assert_eq!(code.erasure_decode(&all[..3]), Erasure::Ambiguous);

        // Positions {0,1,2,3} of the zero codeword: brute force over the 16
        // codewords shows no other codeword vanishes there, so Unique.
        let known: Vec<(usize, bool)> = (0..4).map(|i| (i, false)).collect();
        let matching = code
            .codewords()
            .iter()
            .filter(|cw| known.iter().all(|&(i, b)| cw.get(i) == b))
            .count();
        assert_eq!(matching, 1);
        assert_eq!(
            code.erasure_decode(&known),
            Erasure::Unique("0000000".parse().unwrap())
        );
    }

    #[test]
    fn erasure_decoder_agrees_with_codeword_filtering() {
        let code = CodeSpec::hamming_7_4();
        // Every 4-known pattern of every codeword, cross-checked against
        // brute-force filtering of the codeword table.
        for cw in code.codewords() {
            for mask in 0u32..128 {
                if mask.count_ones() != 4 {
                    continue;
                }
                let known: Vec<(usize, bool)> = (0..7)
                    .filter(|&i| mask >> i & 1 == 1)
                    .map(|i| (i, cw.get(i)))
                    .collect();
                let matching: Vec<&BitVec> = code
                    .codewords()
                    .iter()
                    .filter(|c| known.iter().all(|&(i, b)| c.get(i) == b))
                    .collect();
                match code.erasure_decode(&known) {
                    Erasure::Unique(found) => assert_eq!(vec![&found], matching),
                    Erasure::Ambiguous => assert!(matching.len() >= 2),
                    Erasure::Inconsistent => unreachable!("true values are consistent"),
                }
            }
        }
    }

    #[test]
    fn exactly_seven_four_known_patterns_are_ambiguous() {
        // A 4-known pattern is ambiguous iff its 3 erased positions support a
        // weight-3 codeword; this code has exactly 7 of those.
        let code = CodeSpec::hamming_7_4();
        let zero: BitVec = "0000000".parse().unwrap();
        let ambiguous = (0u32..128)
            .filter(|mask| mask.count_ones() == 4)
            .filter(|mask| {
                let known: Vec<(usize, bool)> = (0..7)
                    .filter(|&i| mask >> i & 1 == 1)
                    .map(|i| (i, zero.get(i)))
                    .collect();
                code.erasure_decode(&known) == Erasure::Ambiguous
            })
            .count();
        assert_eq!(ambiguous, 7);
    }

    #[test]
    fn balanced_parity() {
        let code = CodeSpec::hamming_7_4();
        let odd = code
            .codewords()
            .iter()
            .filter(|cw| code.codeword_parity(cw))
            .count();
        assert_eq!(odd, 8);
    }

    #[test]
    fn parity_examples() {
        let code = CodeSpec::hamming_7_4();
        assert!(!code.codeword_parity(&"0000000".parse().unwrap()));
        assert!(code.codeword_parity(&"1111111".parse().unwrap()));

        assert!(!code.message_parity(&"0000000".parse().unwrap()));
        assert!(code.message_parity(&"0111010".parse().unwrap()));
        assert!(!code.message_parity(&"1111111".parse().unwrap()));
    }

    #[test]
    fn round_trip_all_messages() {
        let code = CodeSpec::hamming_7_4();
        for v in 0..16 {
            let cw = code.encode(&msg(v));
            assert_eq!(code.decode_correct1(&cw), (cw, 0));
        }
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(matches!(
            CodeSpec::from_generator_text("110\n011\n101"),
            Err(CodeError::BadShape)
        ));
        assert!(matches!(
            CodeSpec::from_generator_text("0100101\n1000111\n0010110\n0001011"),
            Err(CodeError::NotStandardForm)
        ));
    }
}
