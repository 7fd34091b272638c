//! The raw oblivious key and the two-party view of it.
//!
//! Under the protocol abstraction Bob knows every key bit, Alice knows each
//! bit independently with probability `p`, and each bit she does know is
//! flipped with probability `e` by channel noise. Photon-level physics is out
//! of scope; a key is just the triple of Bob's bits, Alice's knowledge mask,
//! and Alice's believed values.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};

use crate::gf2::BitVec;

/// Per-bit knowledge probability for an honest party in the underlying QKD scheme.
pub const P_HONEST: f64 = 0.25;
/// Alice's per-bit knowledge probability under individual USD measurement.
pub const P_USD: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

/// The named RNG used everywhere: seedable, portable, and fast.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Stream for a whole scenario.
pub fn sim_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Decorrelated per-run stream for Monte Carlo sweeps.
pub fn run_rng(seed: u64, run: u64) -> SimRng {
    SimRng::seed_from_u64(seed ^ run)
}

/// Scenario parameters. Not every field is meaningful for every method;
/// the per-method `validate_*` helpers check the relevant subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Database size (items), also the FOK length.
    pub n: usize,
    /// Dilution parameter: ROK bits per FOK bit.
    pub k: usize,
    /// Alice's per-bit knowledge probability.
    pub p: f64,
    /// Per-known-bit error probability.
    pub e: f64,
    /// Sub-key count (rM–N only).
    pub r: usize,
    /// Sub-key length (rM–N only).
    pub m: usize,
    /// MOK multiplicity (gkN–N only).
    pub g: usize,
    /// RNG seed.
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n: 12,
            k: 2,
            p: P_HONEST,
            e: 0.0,
            r: 1,
            m: 2,
            g: 1,
            seed: 0,
        }
    }
}

/// A parameter set that fails validation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("{name} = {value} is not a probability")]
    BadProbability { name: &'static str, value: f64 },
    #[error("{name} must be at least 1")]
    Zero { name: &'static str },
    #[error("k = {k} exceeds the key length n = {n}")]
    WindowTooWide { k: usize, n: usize },
    #[error("n = {n} exceeds C({m},{k}) = {max}")]
    TooManyCombinations {
        n: usize,
        m: usize,
        k: usize,
        max: u128,
    },
}

impl SimParams {
    fn check_probs(&self) -> Result<(), ParamError> {
        for (name, value) in [("p", self.p), ("e", self.e)] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(ParamError::BadProbability { name, value });
            }
        }
        Ok(())
    }

    fn check_positive(value: usize, name: &'static str) -> Result<(), ParamError> {
        if value == 0 {
            return Err(ParamError::Zero { name });
        }
        Ok(())
    }

    pub fn validate_kn_n(&self) -> Result<(), ParamError> {
        self.check_probs()?;
        Self::check_positive(self.n, "n")?;
        Self::check_positive(self.k, "k")
    }

    pub fn validate_n_n(&self) -> Result<(), ParamError> {
        self.validate_kn_n()?;
        if self.k > self.n {
            return Err(ParamError::WindowTooWide {
                k: self.k,
                n: self.n,
            });
        }
        Ok(())
    }

    pub fn validate_rm_n(&self) -> Result<(), ParamError> {
        self.check_probs()?;
        Self::check_positive(self.n, "n")?;
        Self::check_positive(self.k, "k")?;
        Self::check_positive(self.r, "r")?;
        Self::check_positive(self.m, "m")?;
        if self.k > self.m {
            return Err(ParamError::WindowTooWide {
                k: self.k,
                n: self.m,
            });
        }
        let max = crate::gf2::binomial(self.m as u64, self.k as u64);
        if self.n as u128 > max {
            return Err(ParamError::TooManyCombinations {
                n: self.n,
                m: self.m,
                k: self.k,
                max,
            });
        }
        Ok(())
    }

    pub fn validate_gkn_n(&self) -> Result<(), ParamError> {
        self.validate_kn_n()?;
        Self::check_positive(self.g, "g")
    }

    /// Expected FOK bits Alice keeps per query under kN–N dilution: `N·p^k`.
    pub fn n_bar(&self) -> f64 {
        self.n as f64 * self.p.powi(self.k as i32)
    }
}

/// An oblivious key as seen by both parties: Bob's true bits plus Alice's
/// knowledge mask and believed values. Where a bit is unknown to Alice its
/// stored value is canonically 0.
#[derive(Clone, PartialEq, Eq)]
pub struct TriStateKey {
    bob: BitVec,
    alice_known: BitVec,
    alice_value: BitVec,
}

impl TriStateKey {
    /// Normalizes `alice_value` to 0 on unknown positions.
    pub fn new(bob: BitVec, alice_known: BitVec, alice_value: BitVec) -> Self {
        assert_eq!(bob.len(), alice_known.len());
        assert_eq!(bob.len(), alice_value.len());
        let alice_value = BitVec::from_fn(bob.len(), |i| alice_known.get(i) && alice_value.get(i));
        TriStateKey {
            bob,
            alice_known,
            alice_value,
        }
    }

    /// A key fully known to both parties (Alice error-free).
    pub fn fully_known(bob: BitVec) -> Self {
        let known = BitVec::from_fn(bob.len(), |_| true);
        TriStateKey::new(bob.clone(), known, bob)
    }

    pub fn len(&self) -> usize {
        self.bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bob.is_empty()
    }

    pub fn bob(&self) -> &BitVec {
        &self.bob
    }

    pub fn alice_known(&self) -> &BitVec {
        &self.alice_known
    }

    pub fn alice_value(&self) -> &BitVec {
        &self.alice_value
    }

    /// Alice's view of one position.
    pub fn alice_bit(&self, i: usize) -> Option<bool> {
        self.alice_known.get(i).then(|| self.alice_value.get(i))
    }

    /// Number of positions Alice knows.
    pub fn known_count(&self) -> usize {
        self.alice_known.count_ones()
    }

    /// Ascending indices of the positions Alice knows.
    pub fn known_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.alice_known.ones()
    }

    /// Cyclic shift: position `i` of the output carries position
    /// `(i + s) mod len` of the input, in all three fields. With the
    /// protocol's announcement `s = j − i`, Alice's known bit `j` lands on
    /// item `i`.
    pub fn cyclic_shift(&self, s: usize) -> TriStateKey {
        let n = self.len();
        assert!(s < n.max(1), "shift {s} out of range 0..{n}");
        let at = |i: usize| (i + s) % n;
        TriStateKey {
            bob: BitVec::from_fn(n, |i| self.bob.get(at(i))),
            alice_known: BitVec::from_fn(n, |i| self.alice_known.get(at(i))),
            alice_value: BitVec::from_fn(n, |i| self.alice_value.get(at(i))),
        }
    }

    /// Pulls the listed positions into a new key, in order.
    pub fn gather(&self, indices: &[usize]) -> TriStateKey {
        TriStateKey {
            bob: BitVec::from_fn(indices.len(), |t| self.bob.get(indices[t])),
            alice_known: BitVec::from_fn(indices.len(), |t| self.alice_known.get(indices[t])),
            alice_value: BitVec::from_fn(indices.len(), |t| self.alice_value.get(indices[t])),
        }
    }

    /// Alice's side as a `'0'`/`'1'`/`'?'` string.
    pub fn alice_string(&self) -> String {
        (0..self.len())
            .map(|i| match self.alice_bit(i) {
                None => '?',
                Some(false) => '0',
                Some(true) => '1',
            })
            .collect()
    }

    /// Bob's side as a `'0'`/`'1'` string.
    pub fn bob_string(&self) -> String {
        self.bob.to_string()
    }

    /// The three raw field strings: Bob's bits, the knowledge mask, and
    /// Alice's (normalized) values.
    pub fn to_strings(&self) -> [String; 3] {
        [
            self.bob.to_string(),
            self.alice_known.to_string(),
            self.alice_value.to_string(),
        ]
    }
}

impl fmt::Debug for TriStateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TriStateKey(bob={}, alice={})",
            self.bob,
            self.alice_string()
        )
    }
}

impl fmt::Display for TriStateKey {
    /// The two-line key file format: `bob=…` then `alice=…`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bob={}", self.bob_string())?;
        writeln!(f, "alice={}", self.alice_string())
    }
}

/// Error parsing the two-line key file format.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyParseError {
    #[error("expected a `{0}=` line")]
    MissingLine(&'static str),
    #[error("bob and alice lines differ in length")]
    LengthMismatch,
    #[error("invalid character {0:?}")]
    BadChar(char),
}

impl FromStr for TriStateKey {
    type Err = KeyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let bob_line = lines
            .next()
            .and_then(|l| l.strip_prefix("bob="))
            .ok_or(KeyParseError::MissingLine("bob"))?;
        let alice_line = lines
            .next()
            .and_then(|l| l.strip_prefix("alice="))
            .ok_or(KeyParseError::MissingLine("alice"))?;
        if bob_line.chars().count() != alice_line.chars().count() {
            return Err(KeyParseError::LengthMismatch);
        }
        let bob: BitVec = bob_line
            .parse()
            .map_err(|e: crate::gf2::ParseBitsError| KeyParseError::BadChar(e.found))?;
        let n = bob.len();
        let mut known = BitVec::zeros(n);
        let mut value = BitVec::zeros(n);
        for (i, c) in alice_line.chars().enumerate() {
            match c {
                '?' => {}
                '0' => known.set(i, true),
                '1' => {
                    known.set(i, true);
                    value.set(i, true);
                }
                other => return Err(KeyParseError::BadChar(other)),
            }
        }
        Ok(TriStateKey::new(bob, known, value))
    }
}

/// Draws a raw oblivious key: Bob's bits i.i.d. uniform, each position known
/// to Alice independently with probability `p`, and each known value flipped
/// from Bob's with probability `e`. Deterministic for a given RNG state.
pub fn generate_rok(len: usize, p: f64, e: f64, rng: &mut SimRng) -> TriStateKey {
    let mut bob = BitVec::zeros(len);
    let mut known = BitVec::zeros(len);
    let mut value = BitVec::zeros(len);
    for i in 0..len {
        let bit = rng.random::<bool>();
        bob.set(i, bit);
        if rng.random::<f64>() < p {
            known.set(i, true);
            let flip = e > 0.0 && rng.random::<f64>() < e;
            value.set(i, bit ^ flip);
        }
    }
    TriStateKey {
        bob,
        alice_known: known,
        alice_value: value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_zero_knowledge() {
        let mut rng = sim_rng(1);
        let key = generate_rok(64, 1.0, 0.0, &mut rng);
        assert_eq!(key.known_count(), 64);
        assert_eq!(key.alice_value(), key.bob());

        let key = generate_rok(64, 0.0, 0.5, &mut rng);
        assert_eq!(key.known_count(), 0);
        assert!(key.alice_value().is_zero());
    }

    #[test]
    fn determinism() {
        let a = generate_rok(256, 0.25, 0.1, &mut sim_rng(42));
        let b = generate_rok(256, 0.25, 0.1, &mut sim_rng(42));
        assert_eq!(a, b);
    }

    #[test]
    fn known_fraction_within_three_sigma() {
        // Binomial band: 0.25 ± 3·√(0.25·0.75/1e5) ≈ ±0.0041.
        let key = generate_rok(100_000, 0.25, 0.0, &mut sim_rng(7));
        let frac = key.known_count() as f64 / 100_000.0;
        assert!((frac - 0.25).abs() < 0.0041, "known fraction {frac}");
    }

    #[test]
    fn errors_only_on_known_positions() {
        let key = generate_rok(10_000, 0.3, 0.4, &mut sim_rng(9));
        let mut wrong_known = 0;
        for i in 0..key.len() {
            match key.alice_bit(i) {
                Some(v) => {
                    if v != key.bob().get(i) {
                        wrong_known += 1;
                    }
                }
                // Canonical storage: unknown positions hold 0.
                None => assert!(!key.alice_value().get(i)),
            }
        }
        // Empirical error rate among known bits near e = 0.4
        // (3σ ≈ 3·√(0.4·0.6/3000) ≈ 0.027).
        let rate = wrong_known as f64 / key.known_count() as f64;
        assert!((rate - 0.4).abs() < 0.03, "error rate {rate}");
    }

    #[test]
    fn worked_example_rok_known_count() {
        // Worked 24-bit example: Alice knows 1-based positions
        // 2, 5, 10, 13, 18, 22 of a 24-bit ROK.
        let bob: BitVec = "011001000111001101011001".parse().unwrap();
        let known = BitVec::from_fn(24, |i| [1, 4, 9, 12, 17, 21].contains(&i));
        let value = BitVec::from_fn(24, |i| known.get(i) && bob.get(i));
        let key = TriStateKey::new(bob, known, value);
        assert_eq!(key.known_count(), 6);
    }

    #[test]
    fn cyclic_shift_examples() {
        let key = TriStateKey::fully_known("0110".parse().unwrap());
        assert_eq!(key.cyclic_shift(0), key);
        assert_eq!(key.cyclic_shift(1).bob_string(), "1100");
        // Composition: shifting by 3 then 1 completes the cycle.
        assert_eq!(key.cyclic_shift(3).cyclic_shift(1), key);
    }

    #[test]
    fn key_file_round_trip() {
        let key = generate_rok(40, 0.4, 0.2, &mut sim_rng(3));
        let parsed: TriStateKey = key.to_string().parse().unwrap();
        assert_eq!(parsed, key);
        assert_eq!(parsed.alice_string(), key.alice_string());
    }

    #[test]
    fn param_validation() {
        let mut params = SimParams {
            n: 7,
            k: 2,
            m: 4,
            r: 2,
            ..SimParams::default()
        };
        // C(4,2) = 6 < 7.
        assert!(matches!(
            params.validate_rm_n(),
            Err(ParamError::TooManyCombinations { .. })
        ));
        params.n = 6;
        assert!(params.validate_rm_n().is_ok());
        params.p = 1.5;
        assert!(matches!(
            params.validate_rm_n(),
            Err(ParamError::BadProbability { .. })
        ));
    }
}
