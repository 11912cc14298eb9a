//! Exact simulation and auditing of private product computation over `F_p`
//! using a shared pair of entangled qudits.
//!
//! Alice holds `a`, Bob holds `b`, and Charlie should learn `ab` and nothing
//! else. The modules build up from field arithmetic to the full protocol:
//!
//! * [`field`]: `F_p`, exponents mod `p-1`, primitive roots, and the
//!   semidirect group acting on encodings.
//! * [`qudit`]: two-qudit state vectors, Bell-like states, `X`/`Z`
//!   operators, Bell measurement.
//! * [`encodings`]: encoding tables, compatibility predicates, the group
//!   actions, the private product family and the local-operator solver.
//! * [`protocol`]: the three parties as state machines over logged
//!   channels, plus the binary set-intersection and dot-product extensions.
//! * [`audit`]: exhaustive counting checks and chi-square tests.
//! * [`cli`]: the `private-product` command-line tool.

pub mod audit;
pub mod cli;
pub mod encodings;
pub mod field;
pub mod protocol;
pub mod qudit;

pub use encodings::{Encoding, EncodingId, LocalParams, PrivateProductFamily};
pub use field::{Fp, Prime, PrimitiveRoot};
pub use protocol::{ProtocolConfig, Transcript};
pub use qudit::{BellLabel, LocalOp, StateVec};
