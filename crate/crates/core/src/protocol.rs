//! The three-party private product protocol.
//!
//! Alice and Bob share `|φ00⟩` from a trusted source. Alice samples a family
//! member and describes it to Bob on the classical channel (or both derive
//! it from pre-shared randomness), each applies a local `X(x)Z(z)` chosen
//! from their own input only, and both qudits travel to Charlie, who
//! measures in the Bell basis and decodes the product of the label.
//!
//! Quantum transmission is simulated by handing over the symbolic label,
//! optionally shadowed by a numeric state vector that Charlie actually
//! measures.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::encodings::{systematic_params, Action, Base, EncodingId, Role};
use crate::field::{ExpElem, Fp, GroupElem, Prime, PrimitiveRoot};
use crate::qudit::{
    apply_pair, bell_measure, bell_state, BellLabel, LocalOp, QuditError, StateVec,
    MAX_NUMERIC_PRIME,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("channel {from} -> {to} does not exist for {kind} messages")]
    ForbiddenChannel {
        from: Party,
        to: Party,
        kind: &'static str,
    },
    #[error("{party} cannot {step} in its current state")]
    OutOfOrder { party: Party, step: &'static str },
    #[error("numeric measurement gave {measured} but the symbolic state is {expected}")]
    NumericMismatch {
        expected: BellLabel,
        measured: BellLabel,
    },
    #[error("parties disagree on the encoding: {alice} vs {bob}")]
    EncodingDisagreement { alice: EncodingId, bob: EncodingId },
    #[error(transparent)]
    Qudit(#[from] QuditError),
    #[error("this extension is only defined over F_2 (p = {0})")]
    NotBinary(u32),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("element {element} is outside the universe of size {universe}")]
    OutsideUniverse { element: usize, universe: usize },
}

/// How Bob learns the sampled encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChannelMode {
    #[serde(rename = "classical")]
    Classical,
    #[serde(rename = "shared")]
    SharedRandomness,
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelMode::Classical => "classical",
            ChannelMode::SharedRandomness => "shared",
        })
    }
}

/// The three cases of the family partition, sampled in proportion to size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Trit {
    /// `φ_{n,β}` with `β ≠ 0`.
    One,
    /// `ψ_{n,β}` with `β ≠ 0`.
    Two,
    /// `φ_{n,0} = ψ_{n,0}`.
    Three,
}

/// Encoding sampler. Anything other than `Uniform` is a test hook.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    Uniform,
    FixedTrit(Trit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProtocolConfig {
    alpha: PrimitiveRoot,
    mode: ChannelMode,
    numeric_check: bool,
    sampler: Sampler,
}

impl ProtocolConfig {
    pub fn new(alpha: PrimitiveRoot) -> Self {
        ProtocolConfig {
            alpha,
            mode: ChannelMode::Classical,
            numeric_check: false,
            sampler: Sampler::Uniform,
        }
    }

    /// Config using the smallest primitive root of `p`.
    pub fn for_prime(p: Prime) -> Self {
        Self::new(PrimitiveRoot::find(p))
    }

    pub fn with_mode(mut self, mode: ChannelMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_numeric_check(mut self, on: bool) -> Result<Self, ProtocolError> {
        if on && self.p().get() > MAX_NUMERIC_PRIME {
            return Err(QuditError::DimensionTooLarge(self.p().get()).into());
        }
        self.numeric_check = on;
        Ok(self)
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn p(&self) -> Prime {
        self.alpha.modulus()
    }

    pub fn alpha(&self) -> PrimitiveRoot {
        self.alpha
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    pub fn numeric_check(&self) -> bool {
        self.numeric_check
    }

    pub fn sampler(&self) -> Sampler {
        self.sampler
    }
}

/// `Pr[One] = Pr[Two] = (p-1)/(2p-1)`, `Pr[Three] = 1/(2p-1)`.
pub fn sample_trit<R: Rng + ?Sized>(rng: &mut R, p: Prime) -> Trit {
    let q = p.group_order();
    let u = rng.random_range(0..2 * q + 1);
    if u < q {
        Trit::One
    } else if u < 2 * q {
        Trit::Two
    } else {
        Trit::Three
    }
}

fn sample_in_case<R: Rng + ?Sized>(rng: &mut R, alpha: PrimitiveRoot, trit: Trit) -> EncodingId {
    let p = alpha.modulus();
    let base = if rng.random_bool(0.5) {
        Base::Eps0
    } else {
        Base::Eps0T
    };
    let n = ExpElem::new(rng.random_range(0..p.group_order()) as i64, p);
    let nonzero_beta = |rng: &mut R| p.elem(rng.random_range(1..p.get()) as i64);
    let (action, beta) = match trit {
        Trit::One => (Action::Phi, nonzero_beta(rng)),
        Trit::Two => (Action::Psi, nonzero_beta(rng)),
        Trit::Three => (Action::Phi, p.zero()),
    };
    EncodingId::new(base, action, GroupElem { n, beta })
}

/// Draws an id whose member is uniform over the family.
pub fn sample_encoding_id<R: Rng + ?Sized>(rng: &mut R, alpha: PrimitiveRoot) -> EncodingId {
    let trit = sample_trit(rng, alpha.modulus());
    sample_in_case(rng, alpha, trit)
}

fn sample_with<R: Rng + ?Sized>(rng: &mut R, cfg: &ProtocolConfig) -> EncodingId {
    match cfg.sampler {
        Sampler::Uniform => sample_encoding_id(rng, cfg.alpha),
        Sampler::FixedTrit(t) => sample_in_case(rng, cfg.alpha, t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
            Party::Charlie => "Charlie",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuditHalf {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Payload {
    /// Description of the sampled encoding.
    Encoding(EncodingId),
    /// Component order for the dot-product extension.
    Permutation(Vec<usize>),
    Qudit(QuditHalf),
}

impl Payload {
    pub fn is_classical(&self) -> bool {
        !matches!(self, Payload::Qudit(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Message {
    pub from: Party,
    pub to: Party,
    pub payload: Payload,
}

/// Ordered record of every message. Only Alice→Bob (classical) and
/// Alice/Bob→Charlie (quantum) routes exist; anything else is rejected.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChannelLog {
    messages: Vec<Message>,
}

impl ChannelLog {
    pub fn send(&mut self, from: Party, to: Party, payload: Payload) -> Result<(), ProtocolError> {
        let allowed = if payload.is_classical() {
            from == Party::Alice && to == Party::Bob
        } else {
            matches!(from, Party::Alice | Party::Bob) && to == Party::Charlie
        };
        if !allowed {
            return Err(ProtocolError::ForbiddenChannel {
                from,
                to,
                kind: if payload.is_classical() { "classical" } else { "quantum" },
            });
        }
        self.messages.push(Message { from, to, payload });
        Ok(())
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn classical(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(|m| m.payload.is_classical())
    }

    pub fn quantum(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(|m| !m.payload.is_classical())
    }
}

/// The shared two-qudit system as it moves between parties.
#[derive(Clone, Debug)]
struct EntangledPair {
    label: BellLabel,
    numeric: Option<StateVec>,
}

impl EntangledPair {
    fn prepare(p: Prime, numeric: bool) -> Result<Self, ProtocolError> {
        let label = BellLabel::new(p.zero(), p.zero());
        let numeric = if numeric {
            Some(bell_state(label)?)
        } else {
            None
        };
        Ok(EntangledPair { label, numeric })
    }

    fn apply(&mut self, role: Role, op: LocalOp) -> Result<(), ProtocolError> {
        let p = self.label.modulus();
        let id = LocalOp::identity(p);
        // Alice's X(x) shifts the label by +x, Bob's by -x
        self.label = match role {
            Role::Alice => BellLabel::new(self.label.a + op.x, self.label.b + op.z),
            Role::Bob => BellLabel::new(self.label.a - op.x, self.label.b + op.z),
        };
        if let Some(s) = &self.numeric {
            let (a, b) = match role {
                Role::Alice => (op, id),
                Role::Bob => (id, op),
            };
            self.numeric = Some(apply_pair(a, b, s)?);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum InputPartyState {
    Waiting,
    Encoding(EncodingId),
    Applied(EncodingId, LocalOp),
    Sent,
}

/// Alice or Bob: holds one input and one half of the pair.
#[derive(Debug)]
struct InputParty {
    role: Role,
    input: Fp,
    state: InputPartyState,
}

impl InputParty {
    fn new(role: Role, input: Fp) -> Self {
        InputParty {
            role,
            input,
            state: InputPartyState::Waiting,
        }
    }

    fn party(&self) -> Party {
        match self.role {
            Role::Alice => Party::Alice,
            Role::Bob => Party::Bob,
        }
    }

    fn out_of_order(&self, step: &'static str) -> ProtocolError {
        ProtocolError::OutOfOrder {
            party: self.party(),
            step,
        }
    }

    fn learn_encoding(&mut self, id: EncodingId) -> Result<(), ProtocolError> {
        match self.state {
            InputPartyState::Waiting => {
                self.state = InputPartyState::Encoding(id);
                Ok(())
            }
            _ => Err(self.out_of_order("learn the encoding")),
        }
    }

    /// The operator depends on nothing but this party's input and the id.
    fn apply(&mut self, alpha: PrimitiveRoot, pair: &mut EntangledPair) -> Result<LocalOp, ProtocolError> {
        let InputPartyState::Encoding(id) = self.state else {
            return Err(self.out_of_order("apply its operator"));
        };
        let op = systematic_params(alpha, id, self.role, self.input);
        pair.apply(self.role, op)?;
        self.state = InputPartyState::Applied(id, op);
        Ok(op)
    }

    fn send_qudit(&mut self, log: &mut ChannelLog) -> Result<(), ProtocolError> {
        let InputPartyState::Applied(..) = self.state else {
            return Err(self.out_of_order("send its qudit"));
        };
        let half = match self.role {
            Role::Alice => QuditHalf::First,
            Role::Bob => QuditHalf::Second,
        };
        log.send(self.party(), Party::Charlie, Payload::Qudit(half))?;
        self.state = InputPartyState::Sent;
        Ok(())
    }
}

/// Charlie: waits for both halves, then measures.
#[derive(Debug, Default)]
struct Charlie {
    first: bool,
    second: bool,
}

impl Charlie {
    fn receive(&mut self, log: &ChannelLog) {
        for m in log.quantum().filter(|m| m.to == Party::Charlie) {
            match m.payload {
                Payload::Qudit(QuditHalf::First) => self.first = true,
                Payload::Qudit(QuditHalf::Second) => self.second = true,
                _ => {}
            }
        }
    }

    fn measure<R: Rng + ?Sized>(&self, pair: &EntangledPair, rng: &mut R) -> Result<BellLabel, ProtocolError> {
        if !(self.first && self.second) {
            return Err(ProtocolError::OutOfOrder {
                party: Party::Charlie,
                step: "measure before both qudits arrive",
            });
        }
        let Some(state) = &pair.numeric else {
            return Ok(pair.label);
        };
        let measured = bell_measure(state, rng);
        if measured != pair.label {
            return Err(ProtocolError::NumericMismatch {
                expected: pair.label,
                measured,
            });
        }
        Ok(measured)
    }
}

/// One protocol run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub a: Fp,
    pub b: Fp,
    pub encoding_id: EncodingId,
    pub alice_op: LocalOp,
    pub bob_op: LocalOp,
    pub sent_label: BellLabel,
    pub measured_label: BellLabel,
    pub product: Fp,
    pub channel_log: ChannelLog,
}

#[derive(Serialize)]
struct OpRecord {
    x: u32,
    z: u32,
}

/// JSON form of a transcript, with the run's mode and seed.
#[derive(Serialize)]
pub struct TranscriptRecord {
    p: u32,
    a: u32,
    b: u32,
    encoding_id: EncodingId,
    alice_op: OpRecord,
    bob_op: OpRecord,
    sent_label: BellLabel,
    measured_label: BellLabel,
    product: u32,
    mode: ChannelMode,
    seed: u64,
}

impl Transcript {
    pub fn modulus(&self) -> Prime {
        self.a.modulus()
    }

    pub fn is_correct(&self) -> bool {
        self.product == self.a * self.b
    }

    pub fn record(&self, mode: ChannelMode, seed: u64) -> TranscriptRecord {
        let op = |o: LocalOp| OpRecord {
            x: o.x.value(),
            z: o.z.value(),
        };
        TranscriptRecord {
            p: self.modulus().get(),
            a: self.a.value(),
            b: self.b.value(),
            encoding_id: self.encoding_id,
            alice_op: op(self.alice_op),
            bob_op: op(self.bob_op),
            sent_label: self.sent_label,
            measured_label: self.measured_label,
            product: self.product.value(),
            mode,
            seed,
        }
    }

    pub fn to_json(&self, mode: ChannelMode, seed: u64) -> String {
        serde_json::to_string(&self.record(mode, seed)).expect("transcript serializes")
    }
}

fn run_session(
    a: Fp,
    b: Fp,
    cfg: &ProtocolConfig,
    shared_seed: u64,
    charlie_seed: u64,
    forced: Option<EncodingId>,
) -> Result<Transcript, ProtocolError> {
    let p = cfg.p();
    let mut log = ChannelLog::default();
    let mut pair = EntangledPair::prepare(p, cfg.numeric_check)?;
    let mut alice = InputParty::new(Role::Alice, a);
    let mut bob = InputParty::new(Role::Bob, b);

    let draw = |seed: u64| {
        forced.unwrap_or_else(|| sample_with(&mut ChaCha8Rng::seed_from_u64(seed), cfg))
    };
    let alice_id = draw(shared_seed);
    alice.learn_encoding(alice_id)?;
    match cfg.mode {
        ChannelMode::Classical => {
            log.send(Party::Alice, Party::Bob, Payload::Encoding(alice_id))?;
            bob.learn_encoding(alice_id)?;
        }
        ChannelMode::SharedRandomness => {
            let bob_id = draw(shared_seed);
            if bob_id != alice_id {
                return Err(ProtocolError::EncodingDisagreement {
                    alice: alice_id,
                    bob: bob_id,
                });
            }
            bob.learn_encoding(bob_id)?;
        }
    }

    let alice_op = alice.apply(cfg.alpha, &mut pair)?;
    let bob_op = bob.apply(cfg.alpha, &mut pair)?;
    let sent_label = pair.label;
    alice.send_qudit(&mut log)?;
    bob.send_qudit(&mut log)?;

    let mut charlie = Charlie::default();
    charlie.receive(&log);
    let measured_label = charlie.measure(&pair, &mut ChaCha8Rng::seed_from_u64(charlie_seed))?;

    Ok(Transcript {
        a,
        b,
        encoding_id: alice_id,
        alice_op,
        bob_op,
        sent_label,
        measured_label,
        product: measured_label.product(),
        channel_log: log,
    })
}

/// Runs the protocol on inputs `(a, b)`. Two words are drawn from `rng`:
/// the pre-shared seed the encoding is sampled from, and Charlie's
/// measurement seed.
pub fn run_protocol<R: Rng + ?Sized>(
    a: Fp,
    b: Fp,
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    let shared = rng.next_u64();
    let charlie = rng.next_u64();
    run_session(a, b, cfg, shared, charlie, None)
}

/// Like [`run_protocol`] but with a fixed encoding instead of sampling one.
/// Used to reproduce specific runs.
pub fn run_protocol_forced<R: Rng + ?Sized>(
    a: Fp,
    b: Fp,
    cfg: &ProtocolConfig,
    id: EncodingId,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    let shared = rng.next_u64();
    let charlie = rng.next_u64();
    run_session(a, b, cfg, shared, charlie, Some(id))
}

/// Master RNG for a seed, as used by the command-line tool.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn require_binary(cfg: &ProtocolConfig) -> Result<Prime, ProtocolError> {
    let p = cfg.p();
    if p.get() == 2 {
        Ok(p)
    } else {
        Err(ProtocolError::NotBinary(p.get()))
    }
}

#[derive(Clone, Debug)]
pub struct PsiOutcome {
    pub intersection: BTreeSet<usize>,
    /// One run per universe element, in element order.
    pub transcripts: Vec<Transcript>,
}

/// Set intersection over a universe `0..universe`, one binary product per
/// element.
pub fn psi_intersect<R: Rng + ?Sized>(
    universe: usize,
    set_a: &BTreeSet<usize>,
    set_b: &BTreeSet<usize>,
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<PsiOutcome, ProtocolError> {
    let p = require_binary(cfg)?;
    if let Some(&element) = set_a.iter().chain(set_b).find(|&&e| e >= universe) {
        return Err(ProtocolError::OutsideUniverse { element, universe });
    }
    let bit = |s: &BTreeSet<usize>, k: usize| p.elem(s.contains(&k) as i64);
    let transcripts = (0..universe)
        .map(|k| run_protocol(bit(set_a, k), bit(set_b, k), cfg, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let intersection = transcripts
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.product.is_zero())
        .map(|(k, _)| k)
        .collect();
    Ok(PsiOutcome {
        intersection,
        transcripts,
    })
}

#[derive(Clone, Debug)]
pub struct DotOutcome {
    pub value: usize,
    /// `permutation[k]` is the component sent in slot `k`.
    pub permutation: Vec<usize>,
    /// Labels in the order Charlie receives them.
    pub received: Vec<BellLabel>,
    /// Runs in slot order.
    pub transcripts: Vec<Transcript>,
    /// Outer classical traffic (the permutation).
    pub channel_log: ChannelLog,
}

/// Binary dot product: components are shuffled by a permutation Alice samples
/// and shares with Bob, so Charlie only sees how many slots decode to 1.
pub fn dot_product<R: Rng + ?Sized>(
    vec_a: &[bool],
    vec_b: &[bool],
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<DotOutcome, ProtocolError> {
    let p = require_binary(cfg)?;
    if vec_a.len() != vec_b.len() {
        return Err(ProtocolError::LengthMismatch(vec_a.len(), vec_b.len()));
    }
    let mut permutation: Vec<usize> = (0..vec_a.len()).collect();
    permutation.shuffle(rng);
    let mut channel_log = ChannelLog::default();
    channel_log.send(Party::Alice, Party::Bob, Payload::Permutation(permutation.clone()))?;
    let transcripts = permutation
        .iter()
        .map(|&k| run_protocol(p.elem(vec_a[k] as i64), p.elem(vec_b[k] as i64), cfg, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let received: Vec<_> = transcripts.iter().map(|t| t.measured_label).collect();
    let value = received.iter().filter(|l| !l.product().is_zero()).count();
    Ok(DotOutcome {
        value,
        permutation,
        received,
        transcripts,
        channel_log,
    })
}
