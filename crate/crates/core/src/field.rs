//! Arithmetic in `F_p` and `Z_{p-1}`, primitive roots, and the semidirect
//! product group `Z_{p-1} ⋉ F_p` that acts on encodings.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} exceeds the supported bound 2^16")]
    TooLarge(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("{alpha} is not a primitive element modulo {p}")]
    NotPrimitive { alpha: u32, p: u32 },
}

/// A prime modulus, validated by trial division.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u32);

impl Prime {
    pub const MAX: u64 = 1 << 16;

    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p > Self::MAX {
            return Err(FieldError::TooLarge(p));
        }
        if p < 2 || (2..).take_while(|d| d * d <= p).any(|d| p.is_multiple_of(d)) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Prime(p as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Order of the multiplicative group, i.e. the modulus of exponents.
    #[inline]
    pub fn group_order(self) -> u32 {
        self.0 - 1
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(self, v: i64) -> Fp {
        Fp {
            value: v.rem_euclid(self.0 as i64) as u32,
            p: self,
        }
    }

    pub fn zero(self) -> Fp {
        self.elem(0)
    }

    pub fn one(self) -> Fp {
        self.elem(1)
    }

    /// All field elements in increasing order.
    pub fn elements(self) -> impl Iterator<Item = Fp> + Clone {
        (0..self.0).map(move |v| Fp { value: v, p: self })
    }

    /// All exponents `0..p-1`.
    pub fn exponents(self) -> impl Iterator<Item = ExpElem> + Clone {
        (0..self.group_order()).map(move |v| ExpElem {
            value: v,
            order: self.group_order(),
        })
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of `F_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fp {
    value: u32,
    p: Prime,
}

impl Fp {
    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Prime {
        self.p
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn pow(self, mut e: u64) -> Fp {
        let m = self.p.0 as u64;
        let mut base = self.value as u64;
        let mut acc = 1 % m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        Fp {
            value: acc as u32,
            p: self.p,
        }
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(self) -> Option<Fp> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(self.p.0 as u64 - 2))
        }
    }

    /// Smallest `k >= 1` with `self^k = 1`; `None` for zero.
    pub fn multiplicative_order(self) -> Option<u32> {
        if self.is_zero() {
            return None;
        }
        let one = self.p.one();
        let mut acc = self;
        let mut k = 1;
        while acc != one {
            acc = acc * self;
            k += 1;
        }
        Some(k)
    }

    pub fn checked_add(self, rhs: Fp) -> Result<Fp, FieldError> {
        same_modulus(self.p, rhs.p)?;
        Ok(self + rhs)
    }

    pub fn checked_mul(self, rhs: Fp) -> Result<Fp, FieldError> {
        same_modulus(self.p, rhs.p)?;
        Ok(self * rhs)
    }
}

pub(crate) fn same_modulus(a: Prime, b: Prime) -> Result<(), FieldError> {
    if a == b {
        Ok(())
    } else {
        Err(FieldError::ModulusMismatch(a.0, b.0))
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for Fp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.value)
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "modulus mismatch");
        let m = self.p.0 as u64;
        Fp {
            value: ((self.value as u64 + rhs.value as u64) % m) as u32,
            p: self.p,
        }
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        self + (-rhs)
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp {
            value: (self.p.0 - self.value) % self.p.0,
            p: self.p,
        }
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "modulus mismatch");
        let m = self.p.0 as u64;
        Fp {
            value: ((self.value as u64 * rhs.value as u64) % m) as u32,
            p: self.p,
        }
    }
}

/// An element of the additive group `Z_{p-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExpElem {
    value: u32,
    order: u32,
}

impl ExpElem {
    /// Exponent `n mod (p-1)`; negative values are accepted.
    pub fn new(n: i64, p: Prime) -> Self {
        let order = p.group_order();
        ExpElem {
            value: n.rem_euclid(order as i64) as u32,
            order,
        }
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn order(self) -> u32 {
        self.order
    }
}

impl Add for ExpElem {
    type Output = ExpElem;
    fn add(self, rhs: ExpElem) -> ExpElem {
        assert_eq!(self.order, rhs.order, "exponent modulus mismatch");
        ExpElem {
            value: ((self.value as u64 + rhs.value as u64) % self.order as u64) as u32,
            order: self.order,
        }
    }
}

impl Neg for ExpElem {
    type Output = ExpElem;
    fn neg(self) -> ExpElem {
        ExpElem {
            value: (self.order - self.value) % self.order,
            order: self.order,
        }
    }
}

impl fmt::Display for ExpElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for ExpElem {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.value)
    }
}

/// A generator of `F_p^*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimitiveRoot {
    alpha: Fp,
}

impl PrimitiveRoot {
    /// The smallest positive generator of `F_p^*`. For `p = 2` this is 1.
    pub fn find(p: Prime) -> Self {
        let order = p.group_order() as u64;
        let factors = prime_factors(order);
        let alpha = (1..p.get())
            .map(|g| p.elem(g as i64))
            .find(|g| factors.iter().all(|&q| g.pow(order / q) != p.one()))
            .expect("every prime field has a primitive element");
        PrimitiveRoot { alpha }
    }

    pub fn new(alpha: Fp) -> Result<Self, FieldError> {
        if alpha.multiplicative_order() == Some(alpha.modulus().group_order()) {
            Ok(PrimitiveRoot { alpha })
        } else {
            Err(FieldError::NotPrimitive {
                alpha: alpha.value(),
                p: alpha.modulus().get(),
            })
        }
    }

    #[inline]
    pub fn get(self) -> Fp {
        self.alpha
    }

    #[inline]
    pub fn modulus(self) -> Prime {
        self.alpha.modulus()
    }

    /// `alpha^n`, with `n` reduced mod `p-1` first (negative `n` allowed).
    pub fn pow(self, n: i64) -> Fp {
        let e = ExpElem::new(n, self.modulus());
        self.alpha.pow(e.value() as u64)
    }

    pub fn pow_exp(self, n: ExpElem) -> Fp {
        self.alpha.pow(n.value() as u64)
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// An element `(n, β)` of `Z_{p-1} ⋉ F_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElem {
    pub n: ExpElem,
    pub beta: Fp,
}

impl GroupElem {
    pub fn new(n: i64, beta: i64, p: Prime) -> Self {
        GroupElem {
            n: ExpElem::new(n, p),
            beta: p.elem(beta),
        }
    }

    pub fn modulus(self) -> Prime {
        self.beta.modulus()
    }
}

impl fmt::Display for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.beta)
    }
}

/// The semidirect product with composition
/// `(n, β) ∘ (n', β') = (n + n', α^{n'} β + β')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemidirectGroup {
    alpha: PrimitiveRoot,
}

impl SemidirectGroup {
    pub fn new(alpha: PrimitiveRoot) -> Self {
        SemidirectGroup { alpha }
    }

    pub fn alpha(&self) -> PrimitiveRoot {
        self.alpha
    }

    pub fn modulus(&self) -> Prime {
        self.alpha.modulus()
    }

    pub fn identity(&self) -> GroupElem {
        GroupElem::new(0, 0, self.modulus())
    }

    /// Number of elements, `p(p-1)`.
    pub fn order(&self) -> usize {
        let p = self.modulus();
        p.get() as usize * p.group_order() as usize
    }

    /// Elements ordered by `n`, then `β`.
    pub fn elements(&self) -> impl Iterator<Item = GroupElem> + '_ {
        let p = self.modulus();
        p.exponents()
            .flat_map(move |n| p.elements().map(move |beta| GroupElem { n, beta }))
    }

    pub fn compose(&self, g: GroupElem, h: GroupElem) -> Result<GroupElem, FieldError> {
        same_modulus(g.modulus(), self.modulus())?;
        same_modulus(h.modulus(), self.modulus())?;
        Ok(GroupElem {
            n: g.n + h.n,
            beta: self.alpha.pow_exp(h.n) * g.beta + h.beta,
        })
    }

    /// Composition under which `ψ` is a left action: the same construction
    /// over `α⁻¹`, i.e. `(n + n', α^{-n'} β + β')`.
    pub fn compose_psi(&self, g: GroupElem, h: GroupElem) -> Result<GroupElem, FieldError> {
        same_modulus(g.modulus(), self.modulus())?;
        same_modulus(h.modulus(), self.modulus())?;
        Ok(GroupElem {
            n: g.n + h.n,
            beta: self.alpha.pow_exp(-h.n) * g.beta + h.beta,
        })
    }

    /// `(n, β)^{-1} = (-n, -α^{-n} β)`.
    pub fn inverse(&self, g: GroupElem) -> GroupElem {
        GroupElem {
            n: -g.n,
            beta: -(self.alpha.pow_exp(-g.n) * g.beta),
        }
    }
}
