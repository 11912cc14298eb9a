//! Exhaustive and statistical checks of the privacy guarantees.
//!
//! Every exact check here works from encoding tables alone and uses integer
//! or rational arithmetic. Families are passed as slices so that
//! sub-families and multisets (duplicated members) can be audited too.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::encodings::{product_map, Encoding, PrivateProductFamily};
use crate::field::{Fp, Prime};
use crate::protocol::{run_protocol, ProtocolConfig, ProtocolError};
use crate::qudit::BellLabel;

/// Significance level for every statistical test.
pub const SIGNIFICANCE: f64 = 0.01;

/// Number of members `ε` with `ε(i, j) = target`, for every `(i, j)` in the
/// fiber of `target`'s product.
pub fn preimage_counts(p: Prime, members: &[Encoding], target: BellLabel) -> BTreeMap<(u32, u32), usize> {
    let v = target.product();
    fiber(p, v)
        .map(|(i, j)| {
            let n = members.iter().filter(|e| e.apply(i, j) == target).count();
            ((i.value(), j.value()), n)
        })
        .collect()
}

/// `{(i, j) : ij = v}`, row-major.
pub fn fiber(p: Prime, v: Fp) -> impl Iterator<Item = (Fp, Fp)> + Clone {
    p.elements()
        .flat_map(move |i| p.elements().map(move |j| (i, j)))
        .filter(move |&(i, j)| product_map(i, j) == v)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetAudit {
    pub target: BellLabel,
    pub counts: BTreeMap<(u32, u32), usize>,
    /// The common positive count over the fiber, if there is one.
    pub c: Option<usize>,
}

impl Serialize for TargetAudit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Counts<'a>(&'a BTreeMap<(u32, u32), usize>);
        impl Serialize for Counts<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.len()))?;
                for (&(i, j), &n) in self.0 {
                    seq.serialize_element(&([i, j], n))?;
                }
                seq.end()
            }
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            target: BellLabel,
            counts: Counts<'a>,
            c: Option<usize>,
        }
        Repr {
            target: self.target,
            counts: Counts(&self.counts),
            c: self.c,
        }
        .serialize(s)
    }
}

/// Common constant per product class; `None` when targets disagree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassConstants {
    pub zero: Option<usize>,
    pub nonzero: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    #[serde(serialize_with = "ser_prime")]
    pub p: Prime,
    pub family_size: usize,
    pub per_target: Vec<TargetAudit>,
    pub class_constants: ClassConstants,
    pub passed: bool,
}

fn ser_prime<S: Serializer>(p: &Prime, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u32(p.get())
}

impl AuditReport {
    pub fn target(&self, target: BellLabel) -> Option<&TargetAudit> {
        self.per_target.iter().find(|t| t.target == target)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn common_value(mut it: impl Iterator<Item = usize>) -> Option<usize> {
    let first = it.next()?;
    it.all(|v| v == first).then_some(first)
}

/// Checks that every target has a constant positive preimage count over its
/// fiber, and reports constants per target and per product class.
pub fn check_def3(p: Prime, members: &[Encoding]) -> AuditReport {
    let per_target: Vec<TargetAudit> = BellLabel::all(p)
        .map(|target| {
            let counts = preimage_counts(p, members, target);
            let c = common_value(counts.values().copied()).filter(|&c| c > 0);
            TargetAudit { target, counts, c }
        })
        .collect();
    let class = |zero: bool| {
        let cs: Vec<_> = per_target
            .iter()
            .filter(|t| t.target.product().is_zero() == zero)
            .map(|t| t.c)
            .collect();
        if cs.iter().all(Option::is_some) {
            common_value(cs.into_iter().flatten())
        } else {
            None
        }
    };
    let class_constants = ClassConstants {
        zero: class(true),
        nonzero: class(false),
    };
    let passed = per_target.iter().all(|t| t.c.is_some());
    AuditReport {
        p,
        family_size: members.len(),
        per_target,
        class_constants,
        passed,
    }
}

/// Exact output distribution for one input pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistTable {
    pub input: (Fp, Fp),
    pub distribution: BTreeMap<BellLabel, Ratio<u64>>,
}

/// Distribution of `ε(i, j)` for `ε` uniform over `members`.
pub fn output_distribution(members: &[Encoding], input: (Fp, Fp)) -> DistTable {
    let total = members.len() as u64;
    let mut counts: BTreeMap<BellLabel, u64> = BTreeMap::new();
    for e in members {
        *counts.entry(e.apply(input.0, input.1)).or_default() += 1;
    }
    DistTable {
        input,
        distribution: counts
            .into_iter()
            .map(|(l, n)| (l, Ratio::new(n, total)))
            .collect(),
    }
}

/// True iff all inputs with equal product induce identical output
/// distributions.
pub fn privacy_equivalence(p: Prime, members: &[Encoding]) -> bool {
    p.elements().all(|v| {
        let mut tables = fiber(p, v).map(|input| output_distribution(members, input).distribution);
        let first = tables.next().expect("fibers are nonempty");
        tables.all(|t| t == first)
    })
}

/// Exact label distribution given product `v`, inputs uniform over its fiber.
pub fn conditional_distribution(p: Prime, members: &[Encoding], v: Fp) -> BTreeMap<BellLabel, Ratio<u64>> {
    let inputs: Vec<_> = fiber(p, v).collect();
    let weight = Ratio::new(1, inputs.len() as u64);
    let mut out: BTreeMap<BellLabel, Ratio<u64>> = BTreeMap::new();
    for input in inputs {
        for (l, q) in output_distribution(members, input).distribution {
            *out.entry(l).or_insert_with(|| Ratio::from_integer(0)) += q * weight;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub threshold: f64,
    pub passed: bool,
}

/// Pearson goodness-of-fit of observed counts against exact probabilities.
/// Observations on zero-probability categories make the statistic infinite.
pub fn chi_square<K: Ord>(
    observed: &BTreeMap<K, u64>,
    expected: &BTreeMap<K, Ratio<u64>>,
    significance: f64,
) -> ChiSquareResult {
    let n: u64 = observed.values().sum();
    let mut statistic = 0.0;
    for (k, &o) in observed {
        if o > 0 && !expected.contains_key(k) {
            statistic = f64::INFINITY;
        }
    }
    let support: Vec<_> = expected.iter().filter(|(_, q)| *q.numer() > 0).collect();
    for (k, q) in &support {
        let e = n as f64 * (*q.numer() as f64 / *q.denom() as f64);
        let o = observed.get(k).copied().unwrap_or(0) as f64;
        statistic += (o - e).powi(2) / e;
    }
    let df = support.len().saturating_sub(1);
    let threshold = if df == 0 {
        0.0
    } else {
        ChiSquared::new(df as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(1.0 - significance)
    };
    ChiSquareResult {
        statistic,
        degrees_of_freedom: df,
        threshold,
        passed: statistic <= threshold,
    }
}

/// Runs the full protocol `n_runs` times on inputs drawn uniformly from the
/// fiber of `v`, and tests the measured labels against the exact
/// distribution of the uniform family.
pub fn empirical_chi_square<R: Rng + ?Sized>(
    n_runs: usize,
    cfg: &ProtocolConfig,
    rng: &mut R,
    v: Fp,
) -> Result<ChiSquareResult, ProtocolError> {
    let inputs: Vec<_> = fiber(cfg.p(), v).collect();
    chi_square_over(n_runs, cfg, rng, v, |rng| {
        *inputs.choose(rng).expect("fibers are nonempty")
    })
}

/// Same test with the inputs pinned to `(a, b)`. Privacy requires Charlie's
/// view to match the class distribution for every single input, which is a
/// stronger statement than matching it on average over the fiber.
pub fn empirical_chi_square_at<R: Rng + ?Sized>(
    n_runs: usize,
    cfg: &ProtocolConfig,
    rng: &mut R,
    a: Fp,
    b: Fp,
) -> Result<ChiSquareResult, ProtocolError> {
    chi_square_over(n_runs, cfg, rng, a * b, |_| (a, b))
}

fn chi_square_over<R: Rng + ?Sized>(
    n_runs: usize,
    cfg: &ProtocolConfig,
    rng: &mut R,
    v: Fp,
    mut draw: impl FnMut(&mut R) -> (Fp, Fp),
) -> Result<ChiSquareResult, ProtocolError> {
    let family = PrivateProductFamily::build(cfg.alpha());
    let expected = conditional_distribution(cfg.p(), family.members(), v);
    let mut observed: BTreeMap<BellLabel, u64> = BTreeMap::new();
    for _ in 0..n_runs {
        let (a, b) = draw(rng);
        let t = run_protocol(a, b, cfg, rng)?;
        *observed.entry(t.measured_label).or_default() += 1;
    }
    Ok(chi_square(&observed, &expected, SIGNIFICANCE))
}
