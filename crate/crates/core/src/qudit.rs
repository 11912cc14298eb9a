//! Two-qudit state-vector simulation: Bell-like states, the generalized
//! `X`/`Z` operators, phase-insensitive comparison and Bell-basis
//! measurement.
//!
//! Amplitudes are stored row-major over `(i, j) ∈ F_p²`, where `i` is the
//! first (Alice's) qudit and `j` the second (Bob's).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{same_modulus, FieldError, Fp, Prime};

/// Largest prime for which state vectors are materialized.
pub const MAX_NUMERIC_PRIME: u32 = 97;

/// Default tolerance for all floating-point comparisons.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuditError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("numeric simulation is limited to p <= {MAX_NUMERIC_PRIME}, got {0}")]
    DimensionTooLarge(u32),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("expected {expected} amplitudes, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// The pair `(a, b)` naming the Bell-like state `|φ_ab⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellLabel {
    pub a: Fp,
    pub b: Fp,
}

impl BellLabel {
    pub fn new(a: Fp, b: Fp) -> Self {
        BellLabel { a, b }
    }

    pub fn from_ints(a: i64, b: i64, p: Prime) -> Self {
        BellLabel {
            a: p.elem(a),
            b: p.elem(b),
        }
    }

    pub fn modulus(self) -> Prime {
        self.a.modulus()
    }

    /// The product value this label decodes to.
    pub fn product(self) -> Fp {
        self.a * self.b
    }

    pub fn pair(self) -> (u32, u32) {
        (self.a.value(), self.b.value())
    }

    /// Every label over `F_p²`, row-major.
    pub fn all(p: Prime) -> impl Iterator<Item = BellLabel> {
        p.elements()
            .flat_map(move |a| p.elements().map(move |b| BellLabel { a, b }))
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|φ{}{}⟩", self.a, self.b)
    }
}

impl Serialize for BellLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.a.value(), self.b.value()].serialize(s)
    }
}

/// The single-qudit operator `X(x)Z(z)`, acting as `|i⟩ ↦ ω^{z·i}|i + x⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LocalOp {
    pub x: Fp,
    pub z: Fp,
}

impl LocalOp {
    pub fn new(x: Fp, z: Fp) -> Self {
        LocalOp { x, z }
    }

    pub fn identity(p: Prime) -> Self {
        LocalOp {
            x: p.zero(),
            z: p.zero(),
        }
    }

    pub fn modulus(self) -> Prime {
        self.x.modulus()
    }

    fn check(self) -> Result<Prime, FieldError> {
        same_modulus(self.x.modulus(), self.z.modulus())?;
        Ok(self.x.modulus())
    }
}

impl fmt::Display for LocalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x.is_zero(), self.z.is_zero()) {
            (true, true) => write!(f, "I"),
            (false, true) => write!(f, "X({})", self.x),
            (true, false) => write!(f, "Z({})", self.z),
            (false, false) => write!(f, "X({})Z({})", self.x, self.z),
        }
    }
}

/// Label of the state obtained by applying `opA ⊗ opB` to `|φ00⟩`, up to
/// global phase: `(xA - xB, zA + zB)`.
pub fn reduce_to_label(x_a: Fp, z_a: Fp, x_b: Fp, z_b: Fp) -> BellLabel {
    BellLabel {
        a: x_a - x_b,
        b: z_a + z_b,
    }
}

/// Powers of the principal `p`-th root of unity, `ω^k` for `k ∈ 0..p`.
fn omega_table(p: Prime) -> Vec<Complex64> {
    let n = p.get() as f64;
    (0..p.get())
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n))
        .collect()
}

fn numeric_prime(p: Prime) -> Result<Prime, QuditError> {
    if p.get() > MAX_NUMERIC_PRIME {
        Err(QuditError::DimensionTooLarge(p.get()))
    } else {
        Ok(p)
    }
}

/// A normalized vector in `C^p ⊗ C^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec {
    p: Prime,
    amplitudes: Vec<Complex64>,
}

#[derive(Serialize)]
struct StateVecDump {
    p: u32,
    amplitudes: Vec<[f64; 2]>,
}

impl StateVec {
    /// Builds a state from raw amplitudes, rejecting non-unit norm.
    pub fn from_amplitudes(p: Prime, amplitudes: Vec<Complex64>) -> Result<Self, QuditError> {
        numeric_prime(p)?;
        let dim = (p.get() * p.get()) as usize;
        if amplitudes.len() != dim {
            return Err(QuditError::WrongLength {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        let s = StateVec { p, amplitudes };
        let norm = s.norm();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(QuditError::NotNormalized(norm));
        }
        Ok(s)
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: Fp, j: Fp) -> Complex64 {
        self.amplitudes[self.index(i.value(), j.value())]
    }

    #[inline]
    fn index(&self, i: u32, j: u32) -> usize {
        (i * self.p.get() + j) as usize
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVec) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Multiplies every amplitude by a unit-modulus scalar.
    pub fn with_global_phase(&self, phase: Complex64) -> StateVec {
        StateVec {
            p: self.p,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// JSON dump `{"p": .., "amplitudes": [[re, im], ...]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&StateVecDump {
            p: self.p.get(),
            amplitudes: self.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
        })
        .expect("state dump serializes")
    }
}

/// `|φ_ab⟩ = p^{-1/2} Σ_i ω^{b·i} |i + a⟩|i⟩`.
pub fn bell_state(label: BellLabel) -> Result<StateVec, QuditError> {
    same_modulus(label.a.modulus(), label.b.modulus())?;
    let p = numeric_prime(label.modulus())?;
    let omega = omega_table(p);
    let scale = 1.0 / (p.get() as f64).sqrt();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); (p.get() * p.get()) as usize];
    for i in p.elements() {
        let row = (i + label.a).value();
        let phase = omega[(label.b * i).value() as usize];
        amplitudes[(row * p.get() + i.value()) as usize] = phase * scale;
    }
    Ok(StateVec { p, amplitudes })
}

/// Applies `X(xA)Z(zA) ⊗ X(xB)Z(zB)`.
pub fn apply_pair(op_a: LocalOp, op_b: LocalOp, s: &StateVec) -> Result<StateVec, QuditError> {
    let p = s.p;
    same_modulus(op_a.check()?, p)?;
    same_modulus(op_b.check()?, p)?;
    let n = p.get();
    let omega = omega_table(p);
    let mut out = vec![Complex64::new(0.0, 0.0); s.amplitudes.len()];
    for i in p.elements() {
        for j in p.elements() {
            let amp = s.amplitudes[s.index(i.value(), j.value())];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let phase = omega[(op_a.z * i + op_b.z * j).value() as usize];
            let target = ((i + op_a.x).value() * n + (j + op_b.x).value()) as usize;
            out[target] += amp * phase;
        }
    }
    Ok(StateVec {
        p,
        amplitudes: out,
    })
}

/// True iff `|⟨s1|s2⟩| ≥ 1 - tol`.
pub fn equal_up_to_phase(s1: &StateVec, s2: &StateVec, tol: f64) -> bool {
    s1.p == s2.p && s1.inner(s2).norm() >= 1.0 - tol
}

/// Outcome probabilities `|⟨φ_ab|s⟩|²` in row-major label order.
pub fn bell_probabilities(s: &StateVec) -> Vec<(BellLabel, f64)> {
    BellLabel::all(s.p)
        .map(|l| {
            let basis = bell_state(l).expect("modulus already validated");
            (l, basis.inner(s).norm_sqr())
        })
        .collect()
}

/// Samples a Bell-basis measurement outcome.
pub fn bell_measure<R: Rng + ?Sized>(s: &StateVec, rng: &mut R) -> BellLabel {
    let probs = bell_probabilities(s);
    let total: f64 = probs.iter().map(|(_, q)| q).sum();
    let mut u = rng.random::<f64>() * total;
    for &(label, q) in &probs {
        if u < q {
            return label;
        }
        u -= q;
    }
    // floating-point slack lands on the last outcome with positive mass
    probs
        .iter()
        .rev()
        .find(|(_, q)| *q > 0.0)
        .map(|(l, _)| *l)
        .expect("normalized state has some outcome")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn op(x: i64, z: i64, q: Prime) -> LocalOp {
        LocalOp::new(q.elem(x), q.elem(z))
    }

    #[test]
    fn binary_bell_states_match_textbook_vectors() {
        let two = p(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi00 = bell_state(BellLabel::from_ints(0, 0, two)).unwrap();
        let expect00 =
            StateVec::from_amplitudes(two, vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
                .unwrap();
        assert!(phi00.inner(&expect00).norm() > 1.0 - TOLERANCE);
        for (x, y) in phi00.amplitudes().iter().zip(expect00.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
        // (|10⟩ - |01⟩)/√2: index (1,0) = 2 gets +, (0,1) = 1 gets -
        let phi11 = bell_state(BellLabel::from_ints(1, 1, two)).unwrap();
        let expect11 =
            [c(0.0, 0.0), c(-h, 0.0), c(h, 0.0), c(0.0, 0.0)];
        for (x, y) in phi11.amplitudes().iter().zip(expect11.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
        let three = p(3);
        let s = bell_state(BellLabel::from_ints(0, 0, three)).unwrap();
        let r = 1.0 / 3f64.sqrt();
        for i in 0..3u32 {
            for j in 0..3u32 {
                let want = if i == j { r } else { 0.0 };
                assert!((s.amplitudes()[(i * 3 + j) as usize] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        for q in [2, 3, 5] {
            let q = p(q);
            let states: Vec<_> = BellLabel::all(q).map(|l| bell_state(l).unwrap()).collect();
            for (x, sx) in states.iter().enumerate() {
                for (y, sy) in states.iter().enumerate() {
                    let ip = sx.inner(sy).norm();
                    if x == y {
                        assert!((ip - 1.0).abs() < TOLERANCE);
                    } else {
                        assert!(ip < TOLERANCE);
                    }
                }
            }
        }
    }

    #[test]
    fn apply_pair_reproduces_worked_examples() {
        let five = p(5);
        let phi00 = bell_state(BellLabel::from_ints(0, 0, five)).unwrap();
        let out = apply_pair(op(1, 0, five), op(0, 3, five), &phi00).unwrap();
        let phi13 = bell_state(BellLabel::from_ints(1, 3, five)).unwrap();
        assert!(equal_up_to_phase(&out, &phi13, TOLERANCE));
        let out = apply_pair(op(0, 2, five), op(0, 3, five), &phi00).unwrap();
        assert!(equal_up_to_phase(&out, &phi00, TOLERANCE));
    }

    #[test]
    fn identity_ops_are_exact() {
        let q = p(5);
        let s = bell_state(BellLabel::from_ints(2, 3, q)).unwrap();
        let id = LocalOp::identity(q);
        assert_eq!(apply_pair(id, id, &s).unwrap(), s);
    }

    #[test]
    fn apply_pair_rejects_mixed_moduli() {
        let s = bell_state(BellLabel::from_ints(0, 0, p(3))).unwrap();
        let err = apply_pair(op(1, 0, p(5)), LocalOp::identity(p(3)), &s);
        assert_eq!(err, Err(QuditError::Field(FieldError::ModulusMismatch(5, 3))));
    }

    #[test]
    fn apply_pair_preserves_norm() {
        for q in [2, 3, 5] {
            let q = p(q);
            let phi00 = bell_state(BellLabel::from_ints(0, 0, q)).unwrap();
            for xa in q.elements() {
                for za in q.elements() {
                    for xb in q.elements() {
                        for zb in q.elements() {
                            let s = apply_pair(LocalOp::new(xa, za), LocalOp::new(xb, zb), &phi00)
                                .unwrap();
                            assert!((s.norm() - 1.0).abs() < TOLERANCE);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn phase_comparison() {
        let q = p(3);
        let s = bell_state(BellLabel::from_ints(1, 2, q)).unwrap();
        assert!(equal_up_to_phase(&s, &s, TOLERANCE));
        assert!(equal_up_to_phase(&s, &s.with_global_phase(c(-1.0, 0.0)), TOLERANCE));
        let i = Complex64::from_polar(1.0, 0.7);
        assert!(equal_up_to_phase(&s, &s.with_global_phase(i), TOLERANCE));
        let two = p(2);
        let a = bell_state(BellLabel::from_ints(0, 0, two)).unwrap();
        let b = bell_state(BellLabel::from_ints(0, 1, two)).unwrap();
        assert!(!equal_up_to_phase(&a, &b, TOLERANCE));
    }

    #[test]
    fn measuring_a_basis_state_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = p(5);
        let s = bell_state(BellLabel::from_ints(1, 3, q)).unwrap();
        for _ in 0..50 {
            assert_eq!(bell_measure(&s, &mut rng), BellLabel::from_ints(1, 3, q));
        }
        let two = p(2);
        let s = bell_state(BellLabel::from_ints(1, 1, two))
            .unwrap()
            .with_global_phase(c(-1.0, 0.0));
        for _ in 0..50 {
            assert_eq!(bell_measure(&s, &mut rng), BellLabel::from_ints(1, 1, two));
        }
    }

    #[test]
    fn measuring_a_product_state_matches_inner_products() {
        let two = p(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // (|00⟩ + |01⟩)/√2
        let s = StateVec::from_amplitudes(
            two,
            vec![c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        // oracle: direct inner products with the textbook basis vectors
        let basis = [
            [h, 0.0, 0.0, h],
            [h, 0.0, 0.0, -h],
            [0.0, h, h, 0.0],
            [0.0, -h, h, 0.0],
        ];
        let amps = [h, h, 0.0, 0.0];
        let exact: Vec<f64> = basis
            .iter()
            .map(|v| v.iter().zip(&amps).map(|(x, y)| x * y).sum::<f64>().powi(2))
            .collect();
        for q in &exact {
            assert!((q - 0.25).abs() < 1e-12);
        }
        for ((_, q), e) in bell_probabilities(&s).iter().zip(&exact) {
            assert!((q - e).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            let l = bell_measure(&s, &mut rng);
            counts[(l.a.value() * 2 + l.b.value()) as usize] += 1;
        }
        for n in counts {
            assert!((n as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn reduce_to_label_examples() {
        let two = p(2);
        let e = |x| two.elem(x);
        assert_eq!(reduce_to_label(e(0), e(1), e(1), e(0)), BellLabel::from_ints(1, 1, two));
        assert_eq!(reduce_to_label(e(1), e(0), e(1), e(0)), BellLabel::from_ints(0, 0, two));
        assert_eq!(reduce_to_label(e(0), e(0), e(0), e(0)), BellLabel::from_ints(0, 0, two));
    }

    #[test]
    fn symbolic_and_numeric_paths_agree() {
        for q in [2, 3, 5] {
            let q = p(q);
            let phi00 = bell_state(BellLabel::from_ints(0, 0, q)).unwrap();
            for xa in q.elements() {
                for za in q.elements() {
                    for xb in q.elements() {
                        for zb in q.elements() {
                            let s = apply_pair(LocalOp::new(xa, za), LocalOp::new(xb, zb), &phi00)
                                .unwrap();
                            let l = bell_state(reduce_to_label(xa, za, xb, zb)).unwrap();
                            assert!(equal_up_to_phase(&s, &l, TOLERANCE));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn numeric_path_is_capped() {
        let big = p(101);
        assert_eq!(
            bell_state(BellLabel::from_ints(0, 0, big)),
            Err(QuditError::DimensionTooLarge(101))
        );
    }

    #[test]
    fn rejects_unnormalized_states() {
        let two = p(2);
        let err = StateVec::from_amplitudes(two, vec![c(1.0, 0.0); 4]);
        assert!(matches!(err, Err(QuditError::NotNormalized(_))));
    }

    #[test]
    fn json_dump_layout() {
        let two = p(2);
        let s = bell_state(BellLabel::from_ints(0, 0, two)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["p"], 2);
        assert_eq!(v["amplitudes"].as_array().unwrap().len(), 4);
        assert!((v["amplitudes"][3][0].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
}
