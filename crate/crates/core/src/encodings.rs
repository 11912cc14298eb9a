//! Encodings of input pairs as Bell labels, the predicates that make an
//! encoding usable for private products, the two group actions that
//! generate the family, and the solver from tables back to local operator
//! parameters.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{self, AuditReport};
use crate::field::{ExpElem, Fp, GroupElem, Prime, PrimitiveRoot, SemidirectGroup};
use crate::qudit::{reduce_to_label, BellLabel, LocalOp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("table has {got} entries, expected {expected}")]
    WrongSize { expected: usize, got: usize },
    #[error("entry ({0}, {1}) is outside F_p")]
    OutOfRange(u32, u32),
    #[error("table is not a bijection: label ({0}, {1}) appears twice")]
    NotBijective(u32, u32),
    #[error("encoding is not in the domain of {0}")]
    OutsideDomain(Action),
    #[error("modulus mismatch between encoding (p = {0}) and group (p = {1})")]
    ModulusMismatch(u32, u32),
    #[error("malformed encoding id {0:?}")]
    BadId(String),
    #[error("{0}")]
    Json(String),
}

/// `π(i, j) = i·j`.
pub fn product_map(i: Fp, j: Fp) -> Fp {
    i * j
}

/// A bijection `F_p² → F_p²`, stored densely in row-major `(i, j)` order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Encoding {
    p: Prime,
    table: Vec<(u32, u32)>,
}

impl Encoding {
    pub fn from_table(p: Prime, table: Vec<(u32, u32)>) -> Result<Self, EncodingError> {
        let n = p.get() as usize;
        if table.len() != n * n {
            return Err(EncodingError::WrongSize {
                expected: n * n,
                got: table.len(),
            });
        }
        let mut seen = vec![false; n * n];
        for &(a, b) in &table {
            if a >= p.get() || b >= p.get() {
                return Err(EncodingError::OutOfRange(a, b));
            }
            let slot = a as usize * n + b as usize;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(EncodingError::NotBijective(a, b));
            }
        }
        Ok(Encoding { p, table })
    }

    pub fn from_fn(p: Prime, f: impl Fn(Fp, Fp) -> BellLabel) -> Result<Self, EncodingError> {
        let table = p
            .elements()
            .flat_map(|i| p.elements().map(move |j| (i, j)))
            .map(|(i, j)| f(i, j).pair())
            .collect();
        Self::from_table(p, table)
    }

    /// `ε0(i, j) = (i, j)`.
    pub fn eps0(p: Prime) -> Self {
        Self::from_fn(p, BellLabel::new).expect("identity is a bijection")
    }

    /// `ε0ᵀ(i, j) = (j, i)`.
    pub fn eps0_t(p: Prime) -> Self {
        Self::from_fn(p, |i, j| BellLabel::new(j, i)).expect("transpose is a bijection")
    }

    /// Uniformly random bijection (Fisher-Yates over the table).
    pub fn random<R: Rng + ?Sized>(p: Prime, rng: &mut R) -> Self {
        let mut table: Vec<_> = (0..p.get())
            .flat_map(|a| (0..p.get()).map(move |b| (a, b)))
            .collect();
        table.shuffle(rng);
        Encoding { p, table }
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    pub fn table(&self) -> &[(u32, u32)] {
        &self.table
    }

    #[inline]
    fn at(&self, i: u32, j: u32) -> (u32, u32) {
        self.table[(i * self.p.get() + j) as usize]
    }

    pub fn apply(&self, i: Fp, j: Fp) -> BellLabel {
        let (a, b) = self.at(i.value(), j.value());
        BellLabel::from_ints(a as i64, b as i64, self.p)
    }

    /// All `((i, j), ε(i, j))` pairs, row-major.
    pub fn entries(&self) -> impl Iterator<Item = ((Fp, Fp), BellLabel)> + '_ {
        let p = self.p;
        p.elements()
            .flat_map(move |i| p.elements().map(move |j| (i, j)))
            .map(move |(i, j)| ((i, j), self.apply(i, j)))
    }

    /// Matrix of first label coordinates (the `x` system).
    pub fn shift_matrix(&self) -> CoordMatrix {
        CoordMatrix {
            p: self.p,
            entries: self.table.iter().map(|&(a, _)| a).collect(),
        }
    }

    /// Matrix of second label coordinates (the `z` system).
    pub fn phase_matrix(&self) -> CoordMatrix {
        CoordMatrix {
            p: self.p,
            entries: self.table.iter().map(|&(_, b)| b).collect(),
        }
    }

    /// `π(ε(i, j)) = ij` for every input pair.
    pub fn preserves_products(&self) -> bool {
        self.entries()
            .all(|((i, j), label)| product_map(label.a, label.b) == product_map(i, j))
    }

    /// `ε(i, j) + ε(i', j') = ε(i, j') + ε(i', j)` for every quadruple.
    pub fn satisfies_rectangle_rule(&self) -> bool {
        let n = self.p.get();
        let add = |x: (u32, u32), y: (u32, u32)| ((x.0 + y.0) % n, (x.1 + y.1) % n);
        (0..n).all(|i| {
            (0..n).all(|j| {
                (0..n).all(|i2| {
                    (0..n).all(|j2| {
                        add(self.at(i, j), self.at(i2, j2)) == add(self.at(i, j2), self.at(i2, j))
                    })
                })
            })
        })
    }

    pub fn is_product_compatible(&self) -> bool {
        self.preserves_products() && self.satisfies_rectangle_rule()
    }

    /// Product-compatible with translation-invariant differences along the
    /// zero column: `ε(i+δ, 0) - ε(i, 0)` independent of `i`.
    pub fn in_e1(&self) -> bool {
        self.is_product_compatible() && self.uniform_differences(|e, k| e.at(k, 0))
    }

    /// Mirror of [`Encoding::in_e1`] along the zero row: `ε(0, i+δ) - ε(0, i)`.
    pub fn in_e2(&self) -> bool {
        self.is_product_compatible() && self.uniform_differences(|e, k| e.at(0, k))
    }

    fn uniform_differences(&self, line: impl Fn(&Self, u32) -> (u32, u32)) -> bool {
        let n = self.p.get();
        let diff = |k: u32, d: u32| {
            let (a1, b1) = line(self, (k + d) % n);
            let (a0, b0) = line(self, k);
            ((a1 + n - a0) % n, (b1 + n - b0) % n)
        };
        (0..n).all(|d| (0..n).all(|i| (0..n).all(|j| diff(i, d) == diff(j, d))))
    }

    pub fn to_record(&self, id: Option<EncodingId>) -> EncodingRecord {
        EncodingRecord {
            p: self.p.get(),
            id: id.map(EncodingIdRecord::from),
            table: self.table.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

/// Serialized form of an encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingRecord {
    pub p: u32,
    pub id: Option<EncodingIdRecord>,
    pub table: Vec<[u32; 2]>,
}

impl EncodingRecord {
    pub fn from_json(s: &str) -> Result<Self, EncodingError> {
        serde_json::from_str(s).map_err(|e| EncodingError::Json(e.to_string()))
    }

    pub fn to_encoding(&self) -> Result<Encoding, EncodingError> {
        let p = Prime::new(self.p as u64).map_err(|e| EncodingError::Json(e.to_string()))?;
        Encoding::from_table(p, self.table.iter().map(|&[a, b]| (a, b)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    Eps0,
    Eps0T,
}

impl Base {
    pub fn encoding(self, p: Prime) -> Encoding {
        match self {
            Base::Eps0 => Encoding::eps0(p),
            Base::Eps0T => Encoding::eps0_t(p),
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Base::Eps0 => "eps0",
            Base::Eps0T => "eps0T",
        })
    }
}

impl FromStr for Base {
    type Err = EncodingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eps0" => Ok(Base::Eps0),
            "eps0T" => Ok(Base::Eps0T),
            _ => Err(EncodingError::BadId(s.to_string())),
        }
    }
}

/// Which group action generated an encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    /// Acts on the zero column, `E₁`.
    Phi,
    /// Acts on the zero row, `E₂`.
    Psi,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Phi => "phi",
            Action::Psi => "psi",
        })
    }
}

impl FromStr for Action {
    type Err = EncodingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phi" => Ok(Action::Phi),
            "psi" => Ok(Action::Psi),
            _ => Err(EncodingError::BadId(s.to_string())),
        }
    }
}

/// Compact orbit descriptor: a group element acting on a base encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EncodingId {
    pub base: Base,
    pub action: Action,
    pub n: ExpElem,
    pub beta: Fp,
}

impl EncodingId {
    pub fn new(base: Base, action: Action, g: GroupElem) -> Self {
        EncodingId {
            base,
            action,
            n: g.n,
            beta: g.beta,
        }
    }

    pub fn group_elem(self) -> GroupElem {
        GroupElem {
            n: self.n,
            beta: self.beta,
        }
    }

    pub fn modulus(self) -> Prime {
        self.beta.modulus()
    }

    /// Parses `base:action:n:beta`, e.g. `eps0:psi:3:2`.
    pub fn parse(s: &str, p: Prime) -> Result<Self, EncodingError> {
        let bad = || EncodingError::BadId(s.to_string());
        let parts: Vec<_> = s.split(':').collect();
        let [base, action, n, beta] = parts[..] else {
            return Err(bad());
        };
        let n: i64 = n.parse().map_err(|_| bad())?;
        let beta: i64 = beta.parse().map_err(|_| bad())?;
        Ok(EncodingId::new(
            base.parse()?,
            action.parse()?,
            GroupElem::new(n, beta, p),
        ))
    }

    /// Materializes the table this id names.
    pub fn expand(self, alpha: PrimitiveRoot) -> Encoding {
        let base = self.base.encoding(alpha.modulus());
        act_unchecked(alpha, self.action, self.group_elem(), &base)
    }
}

impl fmt::Display for EncodingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.base, self.action, self.n, self.beta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingIdRecord {
    pub base: String,
    pub action: String,
    pub n: u32,
    pub beta: u32,
}

impl From<EncodingId> for EncodingIdRecord {
    fn from(id: EncodingId) -> Self {
        EncodingIdRecord {
            base: id.base.to_string(),
            action: id.action.to_string(),
            n: id.n.value(),
            beta: id.beta.value(),
        }
    }
}

impl Serialize for EncodingId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        EncodingIdRecord::from(*self).serialize(s)
    }
}

fn act_unchecked(alpha: PrimitiveRoot, action: Action, g: GroupElem, e: &Encoding) -> Encoding {
    let up = alpha.pow_exp(g.n);
    let down = alpha.pow_exp(-g.n);
    Encoding::from_fn(e.p, |i, j| match action {
        Action::Phi if j.is_zero() => e.apply(up * i + g.beta, j),
        Action::Psi if i.is_zero() => e.apply(i, down * j + g.beta),
        _ => e.apply(up * i, down * j),
    })
    .expect("group actions permute the domain")
}

fn act(
    alpha: PrimitiveRoot,
    action: Action,
    g: GroupElem,
    e: &Encoding,
) -> Result<Encoding, EncodingError> {
    if e.p != alpha.modulus() || g.modulus() != alpha.modulus() {
        return Err(EncodingError::ModulusMismatch(e.p.get(), alpha.modulus().get()));
    }
    let in_domain = match action {
        Action::Phi => e.in_e1(),
        Action::Psi => e.in_e2(),
    };
    if !in_domain {
        return Err(EncodingError::OutsideDomain(action));
    }
    Ok(act_unchecked(alpha, action, g, e))
}

/// `φ_{n,β}(ε)(i, j) = ε(αⁿi + β, 0)` for `j = 0`, else `ε(αⁿi, α⁻ⁿj)`.
pub fn apply_phi(alpha: PrimitiveRoot, g: GroupElem, e: &Encoding) -> Result<Encoding, EncodingError> {
    act(alpha, Action::Phi, g, e)
}

/// `ψ_{n,β}(ε)(i, j) = ε(0, α⁻ⁿj + β)` for `i = 0`, else `ε(αⁿi, α⁻ⁿj)`.
pub fn apply_psi(alpha: PrimitiveRoot, g: GroupElem, e: &Encoding) -> Result<Encoding, EncodingError> {
    act(alpha, Action::Psi, g, e)
}

/// The orbit of `base` under one action, in group-element order. Duplicates
/// are kept, so `orbit(..).len()` is always `p(p-1)`.
pub fn orbit(alpha: PrimitiveRoot, action: Action, base: Base) -> Vec<Encoding> {
    let group = SemidirectGroup::new(alpha);
    let start = base.encoding(alpha.modulus());
    group
        .elements()
        .map(|g| act_unchecked(alpha, action, g, &start))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub h1_only: usize,
    pub h2_only: usize,
    pub intersection: usize,
}

/// The union of the four orbits `G₁ε0, G₁ε0ᵀ, G₂ε0, G₂ε0ᵀ`, deduplicated by
/// table.
#[derive(Clone, Debug)]
pub struct PrivateProductFamily {
    alpha: PrimitiveRoot,
    members: Vec<Encoding>,
    ids: Vec<Vec<EncodingId>>,
    index: HashMap<EncodingId, usize>,
}

impl PrivateProductFamily {
    pub fn build(alpha: PrimitiveRoot) -> Self {
        let p = alpha.modulus();
        let group = SemidirectGroup::new(alpha);
        let mut members = Vec::new();
        let mut ids: Vec<Vec<EncodingId>> = Vec::new();
        let mut index = HashMap::new();
        let mut by_table: HashMap<Encoding, usize> = HashMap::new();
        for base in [Base::Eps0, Base::Eps0T] {
            let start = base.encoding(p);
            for action in [Action::Phi, Action::Psi] {
                for g in group.elements() {
                    let id = EncodingId::new(base, action, g);
                    let e = act_unchecked(alpha, action, g, &start);
                    let slot = *by_table.entry(e.clone()).or_insert_with(|| {
                        members.push(e);
                        ids.push(Vec::new());
                        members.len() - 1
                    });
                    ids[slot].push(id);
                    index.insert(id, slot);
                }
            }
        }
        PrivateProductFamily {
            alpha,
            members,
            ids,
            index,
        }
    }

    pub fn modulus(&self) -> Prime {
        self.alpha.modulus()
    }

    pub fn alpha(&self) -> PrimitiveRoot {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Encoding] {
        &self.members
    }

    /// Every id producing member `k`, in generation order.
    pub fn ids_of(&self, k: usize) -> &[EncodingId] {
        &self.ids[k]
    }

    pub fn index_of(&self, id: &EncodingId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn member(&self, id: &EncodingId) -> Option<&Encoding> {
        self.index_of(id).map(|k| &self.members[k])
    }

    /// Every id in the index, sorted.
    pub fn all_ids(&self) -> Vec<EncodingId> {
        let mut v: Vec<_> = self.index.keys().copied().collect();
        v.sort();
        v
    }

    pub fn in_h1(&self, k: usize) -> bool {
        self.ids[k].iter().any(|id| id.action == Action::Phi)
    }

    pub fn in_h2(&self, k: usize) -> bool {
        self.ids[k].iter().any(|id| id.action == Action::Psi)
    }

    pub fn partition(&self) -> Partition {
        let mut part = Partition {
            h1_only: 0,
            h2_only: 0,
            intersection: 0,
        };
        for k in 0..self.len() {
            match (self.in_h1(k), self.in_h2(k)) {
                (true, true) => part.intersection += 1,
                (true, false) => part.h1_only += 1,
                (false, true) => part.h2_only += 1,
                (false, false) => unreachable!("every member has an id"),
            }
        }
        part
    }

    /// Checks the private-product-family conditions on the member tables.
    pub fn verify(&self) -> AuditReport {
        audit::check_def3(self.modulus(), &self.members)
    }

    pub fn export(&self) -> FamilyExport {
        FamilyExport {
            p: self.modulus().get(),
            alpha: self.alpha.get().value(),
            size: self.len(),
            partition: self.partition(),
            members: self
                .members
                .iter()
                .zip(&self.ids)
                .map(|(e, ids)| e.to_record(ids.first().copied()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyExport {
    pub p: u32,
    pub alpha: u32,
    pub size: usize,
    pub partition: Partition,
    pub members: Vec<EncodingRecord>,
}

/// A `p × p` matrix over `F_p`, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoordMatrix {
    p: Prime,
    entries: Vec<u32>,
}

/// Indices `(i, i', j, j')` with `m_ij + m_i'j' ≠ m_ij' + m_i'j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RectangleWitness {
    pub rows: [u32; 2],
    pub cols: [u32; 2],
}

/// How the row and column unknowns combine into a matrix entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// `m_ij = u_i - v_j`
    Difference,
    /// `m_ij = u_i + v_j`
    Sum,
}

impl CoordMatrix {
    pub fn new(p: Prime, entries: Vec<u32>) -> Self {
        assert_eq!(entries.len(), (p.get() * p.get()) as usize);
        CoordMatrix {
            p,
            entries: entries.into_iter().map(|v| v % p.get()).collect(),
        }
    }

    pub fn zero(p: Prime) -> Self {
        Self::new(p, vec![0; (p.get() * p.get()) as usize])
    }

    /// `R_i`: ones on row `i`.
    pub fn row_indicator(p: Prime, i: u32) -> Self {
        let n = p.get();
        Self::new(p, (0..n * n).map(|k| u32::from(k / n == i)).collect())
    }

    /// `C_i`: ones on column `i`.
    pub fn col_indicator(p: Prime, i: u32) -> Self {
        let n = p.get();
        Self::new(p, (0..n * n).map(|k| u32::from(k % n == i)).collect())
    }

    /// `m_ij = u_i ± v_j`.
    pub fn from_rows_cols(rows: &[Fp], cols: &[Fp], coupling: Coupling) -> Self {
        let p = rows[0].modulus();
        let entries = rows
            .iter()
            .flat_map(|&u| {
                cols.iter().map(move |&v| match coupling {
                    Coupling::Difference => (u - v).value(),
                    Coupling::Sum => (u + v).value(),
                })
            })
            .collect();
        Self::new(p, entries)
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, i: u32, j: u32) -> Fp {
        self.p.elem(self.entries[(i * self.p.get() + j) as usize] as i64)
    }

    pub fn add(&self, other: &CoordMatrix) -> CoordMatrix {
        let n = self.p.get();
        CoordMatrix {
            p: self.p,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (a + b) % n)
                .collect(),
        }
    }

    pub fn scale(&self, k: Fp) -> CoordMatrix {
        let n = self.p.get() as u64;
        CoordMatrix {
            p: self.p,
            entries: self
                .entries
                .iter()
                .map(|&a| (a as u64 * k.value() as u64 % n) as u32)
                .collect(),
        }
    }

    /// First quadruple violating the rectangle rule, scanning lexicographically.
    pub fn property_p_violation(&self) -> Option<RectangleWitness> {
        let n = self.p.get();
        let m = |i: u32, j: u32| self.entries[(i * n + j) as usize];
        for i in 0..n {
            for i2 in 0..n {
                for j in 0..n {
                    for j2 in 0..n {
                        if (m(i, j) + m(i2, j2)) % n != (m(i, j2) + m(i2, j)) % n {
                            return Some(RectangleWitness {
                                rows: [i, i2],
                                cols: [j, j2],
                            });
                        }
                    }
                }
            }
        }
        None
    }

    pub fn has_property_p(&self) -> bool {
        self.property_p_violation().is_none()
    }

    /// Solves `m_ij = u_i ± v_j` with `v_0 = 0`, or reports a violated quadruple.
    pub fn decompose(&self, coupling: Coupling) -> Result<(Vec<Fp>, Vec<Fp>), RectangleWitness> {
        let p = self.p;
        let rows: Vec<Fp> = p.elements().map(|i| self.get(i.value(), 0)).collect();
        let corner = self.get(0, 0);
        let cols: Vec<Fp> = p
            .elements()
            .map(|j| match coupling {
                Coupling::Difference => corner - self.get(0, j.value()),
                Coupling::Sum => self.get(0, j.value()) - corner,
            })
            .collect();
        if &Self::from_rows_cols(&rows, &cols, coupling) == self {
            Ok((rows, cols))
        } else {
            Err(self
                .property_p_violation()
                .expect("an unsolvable system violates the rectangle rule"))
        }
    }
}

/// Per-input operator parameters for both parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalParams {
    #[serde(serialize_with = "ser_prime")]
    pub p: Prime,
    #[serde(rename = "xA")]
    pub x_a: Vec<Fp>,
    #[serde(rename = "zA")]
    pub z_a: Vec<Fp>,
    #[serde(rename = "xB")]
    pub x_b: Vec<Fp>,
    #[serde(rename = "zB")]
    pub z_b: Vec<Fp>,
}

fn ser_prime<S: serde::Serializer>(p: &Prime, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u32(p.get())
}

impl LocalParams {
    pub fn from_ops(alice: &[LocalOp], bob: &[LocalOp]) -> Self {
        LocalParams {
            p: alice[0].modulus(),
            x_a: alice.iter().map(|o| o.x).collect(),
            z_a: alice.iter().map(|o| o.z).collect(),
            x_b: bob.iter().map(|o| o.x).collect(),
            z_b: bob.iter().map(|o| o.z).collect(),
        }
    }

    pub fn alice_op(&self, a: Fp) -> LocalOp {
        let k = a.value() as usize;
        LocalOp::new(self.x_a[k], self.z_a[k])
    }

    pub fn bob_op(&self, b: Fp) -> LocalOp {
        let k = b.value() as usize;
        LocalOp::new(self.x_b[k], self.z_b[k])
    }

    /// The label produced for input `(a, b)`.
    pub fn label(&self, a: Fp, b: Fp) -> BellLabel {
        let (oa, ob) = (self.alice_op(a), self.bob_op(b));
        reduce_to_label(oa.x, oa.z, ob.x, ob.z)
    }

    /// The encoding these operators realize, if it is a bijection.
    pub fn realize(&self) -> Result<Encoding, EncodingError> {
        Encoding::from_fn(self.p, |a, b| self.label(a, b))
    }
}

/// Which label coordinate has no local solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error, Serialize)]
#[error("no local operators realize this encoding: {coordinate:?} system violates the rectangle rule at rows {:?}, cols {:?}", witness.rows, witness.cols)]
pub struct NoSolution {
    pub coordinate: Coordinate,
    pub witness: RectangleWitness,
}

/// Local operator parameters realizing `e`, normalized so `x_0^B = z_0^B = 0`.
pub fn solve_local_params(e: &Encoding) -> Result<LocalParams, NoSolution> {
    let (x_a, x_b) = e
        .shift_matrix()
        .decompose(Coupling::Difference)
        .map_err(|witness| NoSolution {
            coordinate: Coordinate::X,
            witness,
        })?;
    let (z_a, z_b) = e
        .phase_matrix()
        .decompose(Coupling::Sum)
        .map_err(|witness| NoSolution {
            coordinate: Coordinate::Z,
            witness,
        })?;
    Ok(LocalParams {
        p: e.p,
        x_a,
        z_a,
        x_b,
        z_b,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alice,
    Bob,
}

/// Closed-form operator for one party's input under a family member.
///
/// For the transposed base, Bob's shift carries a minus sign: his `X(x)`
/// contributes `-x` to the label's first coordinate.
pub fn systematic_params(alpha: PrimitiveRoot, id: EncodingId, role: Role, input: Fp) -> LocalOp {
    let p = alpha.modulus();
    let zero = p.zero();
    let scaled_up = alpha.pow_exp(id.n) * input;
    let scaled_down = alpha.pow_exp(-id.n) * input;
    let if_zero = |v: Fp| if input.is_zero() { v } else { zero };
    match (id.base, id.action, role) {
        (Base::Eps0, Action::Phi, Role::Alice) => LocalOp::new(scaled_up, zero),
        (Base::Eps0, Action::Phi, Role::Bob) => LocalOp::new(if_zero(-id.beta), scaled_down),
        (Base::Eps0, Action::Psi, Role::Alice) => LocalOp::new(scaled_up, if_zero(id.beta)),
        (Base::Eps0, Action::Psi, Role::Bob) => LocalOp::new(zero, scaled_down),
        (Base::Eps0T, Action::Phi, Role::Alice) => LocalOp::new(zero, scaled_up),
        (Base::Eps0T, Action::Phi, Role::Bob) => LocalOp::new(-scaled_down, if_zero(id.beta)),
        (Base::Eps0T, Action::Psi, Role::Alice) => LocalOp::new(if_zero(id.beta), scaled_up),
        (Base::Eps0T, Action::Psi, Role::Bob) => LocalOp::new(-scaled_down, zero),
    }
}

/// Full operator tables for a family member.
pub fn systematic_local_params(alpha: PrimitiveRoot, id: EncodingId) -> LocalParams {
    let p = alpha.modulus();
    let alice: Vec<_> = p
        .elements()
        .map(|a| systematic_params(alpha, id, Role::Alice, a))
        .collect();
    let bob: Vec<_> = p
        .elements()
        .map(|b| systematic_params(alpha, id, Role::Bob, b))
        .collect();
    LocalParams::from_ops(&alice, &bob)
}

/// The three operator tables of the minimal binary family. Index 0 is `a`
/// or `b` equal to 0, index 1 is 1.
pub fn binary_minimal_operators() -> [LocalParams; 3] {
    let two = Prime::new(2).expect("2 is prime");
    let i = LocalOp::identity(two);
    let x = LocalOp::new(two.one(), two.zero());
    let z = LocalOp::new(two.zero(), two.one());
    [
        LocalParams::from_ops(&[i, x], &[i, z]),
        LocalParams::from_ops(&[i, z], &[z, x]),
        LocalParams::from_ops(&[x, z], &[i, x]),
    ]
}

/// The minimal binary private product family, as label tables.
pub fn binary_minimal_family() -> Vec<Encoding> {
    binary_minimal_operators()
        .iter()
        .map(|ops| ops.realize().expect("binary operator tables are bijective"))
        .collect()
}
