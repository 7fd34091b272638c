//! A simulation laboratory for the post-processing of oblivious keys in
//! QKD-based quantum private queries.
//!
//! The lab implements the three dilution methods that turn a raw oblivious
//! key into a final one (`kN–N`, `N–N`, `rM–N`), the two multi-query attacks
//! that break the reuse-heavy variants, and the error-corrected `gkN–N`
//! pipeline built on a \[7,4,3\] code, together with the closed-form
//! probability laws the simulations are checked against.
//!
//! Everything is deterministic under a seed: keys, attacks, tables, and the
//! CLI outputs built on top of them.
//!
//! ```
//! use qpq::dilution::dilute_kn_n;
//! use qpq::key::{generate_rok, sim_rng};
//!
//! let mut rng = sim_rng(7);
//! let rok = generate_rok(24, 0.25, 0.0, &mut rng);
//! let fok = dilute_kn_n(&rok, 12, 2);
//! assert_eq!(fok.len(), 12);
//! assert!(fok.known_count() <= rok.known_count());
//! ```

pub mod analysis;
pub mod attack_nn;
pub mod attack_rm;
pub mod code;
pub mod dilution;
pub mod gf2;
pub mod key;
pub mod protocol;

pub use code::CodeSpec;
pub use gf2::{BitVec, Gf2Matrix};
pub use key::{SimParams, SimRng, TriStateKey};
