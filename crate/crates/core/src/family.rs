//! Set families, weight functions and the membership predicates built on them.
//!
//! A [`SetFamily`] is a finite list of blocks over integer-labelled elements.
//! The ground set is the union of the blocks. A [`WeightFunction`] assigns an
//! exact rational to each element; it lies in `S` when every block sums to one
//! and in `S0` when every block sums to at most one. `P` and `P0` are the 0/1
//! valued members of those sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u64);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for ElementId {
    fn from(label: u64) -> Self {
        ElementId(label)
    }
}

/// One-based block index. Indices survive normalization, so they need not be
/// contiguous.
pub type BlockIndex = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub index: BlockIndex,
    pub members: Vec<ElementId>,
}

impl Block {
    pub fn contains(&self, g: ElementId) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_subset_of(&self, other: &Block) -> bool {
        self.members.iter().all(|g| other.contains(*g))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("block {0} is empty")]
    EmptyBlock(BlockIndex),
    #[error("block {second} duplicates block {first}")]
    DuplicateBlock { first: BlockIndex, second: BlockIndex },
    #[error("block index {0} is used twice")]
    DuplicateBlockIndex(BlockIndex),
    #[error("element {0} is not in the ground set")]
    UnknownElement(ElementId),
    #[error("element {0} of the declared ground set belongs to no block")]
    UncoveredElement(ElementId),
    #[error("unknown block index {0}")]
    UnknownBlock(BlockIndex),
    #[error("not a member of S: {0}")]
    NotInS(MembershipViolation),
    #[error("blocks {cover:?} do not cover element {missing}")]
    NotACover { cover: Vec<BlockIndex>, missing: ElementId },
}

/// The first reason a weight function fails to lie in `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MembershipViolation {
    Negative { element: ElementId, value: Rational },
    BlockSum { block: BlockIndex, sum: Rational },
}

impl fmt::Display for MembershipViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MembershipViolation::Negative { element, value } => {
                write!(f, "element {} has negative value {}", element, format_rational(value))
            }
            MembershipViolation::BlockSum { block, sum } => {
                write!(f, "block {} sums to {}", block, format_rational(sum))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetFamily {
    ground: Vec<ElementId>,
    blocks: Vec<Block>,
    membership: BTreeMap<ElementId, Vec<BlockIndex>>,
}

impl SetFamily {
    /// Builds a family from unindexed blocks; indices are assigned 1, 2, ...
    pub fn build<B, I, T>(blocks: B) -> Result<Self, FamilyError>
    where
        B: IntoIterator<Item = I>,
        I: IntoIterator<Item = T>,
        T: Into<ElementId>,
    {
        let indexed = blocks
            .into_iter()
            .enumerate()
            .map(|(i, b)| (i + 1, b.into_iter().map(Into::into).collect::<Vec<_>>()))
            .collect::<Vec<_>>();
        Self::from_indexed(indexed)
    }

    /// Builds a family from explicitly indexed blocks.
    pub fn from_indexed(blocks: Vec<(BlockIndex, Vec<ElementId>)>) -> Result<Self, FamilyError> {
        let mut canonical: Vec<Block> = Vec::with_capacity(blocks.len());
        let mut seen_index = BTreeSet::new();
        for (index, members) in blocks {
            if !seen_index.insert(index) {
                return Err(FamilyError::DuplicateBlockIndex(index));
            }
            let members: BTreeSet<ElementId> = members.into_iter().collect();
            if members.is_empty() {
                return Err(FamilyError::EmptyBlock(index));
            }
            canonical.push(Block { index, members: members.into_iter().collect() });
        }
        canonical.sort_by_key(|b| b.index);
        let mut by_members: BTreeMap<&[ElementId], BlockIndex> = BTreeMap::new();
        for b in &canonical {
            if let Some(&first) = by_members.get(b.members.as_slice()) {
                return Err(FamilyError::DuplicateBlock { first, second: b.index });
            }
            by_members.insert(&b.members, b.index);
        }
        let mut membership: BTreeMap<ElementId, Vec<BlockIndex>> = BTreeMap::new();
        for b in &canonical {
            for &g in &b.members {
                membership.entry(g).or_default().push(b.index);
            }
        }
        let ground = membership.keys().copied().collect();
        Ok(SetFamily { ground, blocks: canonical, membership })
    }

    /// Builds a family and checks it against a declared ground set.
    pub fn with_ground(
        ground: &[ElementId],
        blocks: Vec<(BlockIndex, Vec<ElementId>)>,
    ) -> Result<Self, FamilyError> {
        let family = Self::from_indexed(blocks)?;
        for g in ground {
            if !family.contains(*g) {
                return Err(FamilyError::UncoveredElement(*g));
            }
        }
        Ok(family)
    }

    pub fn ground(&self) -> &[ElementId] {
        &self.ground
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, index: BlockIndex) -> Option<&Block> {
        self.blocks
            .binary_search_by_key(&index, |b| b.index)
            .ok()
            .map(|pos| &self.blocks[pos])
    }

    pub fn block_indices(&self) -> impl Iterator<Item = BlockIndex> + '_ {
        self.blocks.iter().map(|b| b.index)
    }

    pub fn contains(&self, g: ElementId) -> bool {
        self.membership.contains_key(&g)
    }

    /// `Γ(g)`: indices of the blocks containing `g`, ascending.
    pub fn gamma(&self, g: ElementId) -> Option<&[BlockIndex]> {
        self.membership.get(&g).map(Vec::as_slice)
    }

    /// Multiplicity `κ(g)`.
    pub fn multiplicity(&self, g: ElementId) -> Result<usize, FamilyError> {
        self.gamma(g).map(<[_]>::len).ok_or(FamilyError::UnknownElement(g))
    }

    /// `κ(Ω)`, the largest multiplicity (0 for an empty family).
    pub fn kappa_max(&self) -> usize {
        self.membership.values().map(Vec::len).max().unwrap_or(0)
    }

    /// `κ` over a subset of the ground set; unknown elements count as zero.
    pub fn kappa_of(&self, subset: &BTreeSet<ElementId>) -> usize {
        subset
            .iter()
            .filter_map(|g| self.gamma(*g))
            .map(<[_]>::len)
            .max()
            .unwrap_or(0)
    }

    pub fn max_label(&self) -> Option<ElementId> {
        self.ground.last().copied()
    }

    /// Two elements share a block.
    pub fn adjacent(&self, a: ElementId, b: ElementId) -> bool {
        a != b && !self.shared_blocks(a, b).is_empty()
    }

    pub fn shared_blocks(&self, a: ElementId, b: ElementId) -> Vec<BlockIndex> {
        match (self.gamma(a), self.gamma(b)) {
            (Some(ga), Some(gb)) => ga.iter().filter(|k| gb.contains(k)).copied().collect(),
            _ => Vec::new(),
        }
    }

    pub fn block_sum(&self, w: &WeightFunction, index: BlockIndex) -> Option<Rational> {
        self.block(index).map(|b| b.members.iter().map(|g| w.get(*g)).sum())
    }

    /// Restricts to the blocks meeting `subset`, with members intersected.
    pub fn restrict_blocks(&self, subset: &BTreeSet<ElementId>) -> Vec<(BlockIndex, Vec<ElementId>)> {
        self.blocks
            .iter()
            .filter_map(|b| {
                let members: Vec<ElementId> =
                    b.members.iter().copied().filter(|g| subset.contains(g)).collect();
                (!members.is_empty()).then_some((b.index, members))
            })
            .collect()
    }
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let m: Vec<String> = b.members.iter().map(ToString::to_string).collect();
                format!("{}:{{{}}}", b.index, m.join(","))
            })
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Nonnegative (in the intended use) rational function on the ground set.
/// Absent elements are zero; zeros are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightFunction {
    values: BTreeMap<ElementId, Rational>,
}

impl WeightFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, G>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (G, Rational)>,
        G: Into<ElementId>,
    {
        let mut w = Self::new();
        for (g, v) in pairs {
            w.set(g.into(), v);
        }
        w
    }

    /// Same value on every listed element.
    pub fn constant<I, G>(elements: I, value: Rational) -> Self
    where
        I: IntoIterator<Item = G>,
        G: Into<ElementId>,
    {
        Self::from_pairs(elements.into_iter().map(|g| (g, value.clone())))
    }

    pub fn get(&self, g: ElementId) -> Rational {
        self.values.get(&g).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn get_ref(&self, g: ElementId) -> Option<&Rational> {
        self.values.get(&g)
    }

    pub fn set(&mut self, g: ElementId, value: Rational) {
        if value.is_zero() {
            self.values.remove(&g);
        } else {
            self.values.insert(g, value);
        }
    }

    pub fn add_at(&mut self, g: ElementId, delta: &Rational) {
        let v = self.get(g) + delta;
        self.set(g, v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementId, &Rational)> {
        self.values.iter().map(|(g, v)| (*g, v))
    }

    pub fn support(&self) -> BTreeSet<ElementId> {
        self.values.keys().copied().collect()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.values().all(|v| !v.is_negative())
    }

    pub fn is_zero_one(&self) -> bool {
        self.values.values().all(One::is_one)
    }

    pub fn total(&self) -> Rational {
        self.values.values().sum()
    }

    pub fn add(&self, other: &WeightFunction) -> WeightFunction {
        let mut out = self.clone();
        for (g, v) in other.iter() {
            out.add_at(g, v);
        }
        out
    }

    pub fn sub(&self, other: &WeightFunction) -> WeightFunction {
        let mut out = self.clone();
        for (g, v) in other.iter() {
            out.add_at(g, &-v);
        }
        out
    }

    pub fn scale(&self, factor: &Rational) -> WeightFunction {
        WeightFunction::from_pairs(self.iter().map(|(g, v)| (g, v * factor)))
    }

    /// Values restricted to `subset`.
    pub fn restrict(&self, subset: &BTreeSet<ElementId>) -> WeightFunction {
        WeightFunction::from_pairs(
            self.iter().filter(|(g, _)| subset.contains(g)).map(|(g, v)| (g, v.clone())),
        )
    }

    pub fn max_abs(&self) -> Rational {
        self.values.values().map(Signed::abs).max().unwrap_or_else(Rational::zero)
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.iter().map(|(g, v)| format!("{}: {}", g, format_rational(v))).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipReport {
    pub block_sums: BTreeMap<BlockIndex, Rational>,
    pub in_s: bool,
    pub in_s0: bool,
    pub in_p: bool,
    pub in_p0: bool,
    /// First failure of the `S` condition, if any.
    pub violation: Option<MembershipViolation>,
}

/// Per-block sums and the `S`/`S0`/`P`/`P0` flags for `w`.
pub fn classify_membership(
    family: &SetFamily,
    w: &WeightFunction,
) -> Result<MembershipReport, FamilyError> {
    for (g, _) in w.iter() {
        if !family.contains(g) {
            return Err(FamilyError::UnknownElement(g));
        }
    }
    let block_sums: BTreeMap<BlockIndex, Rational> = family
        .blocks()
        .iter()
        .map(|b| (b.index, b.members.iter().map(|g| w.get(*g)).sum()))
        .collect();
    let negative = w.iter().find(|(_, v)| v.is_negative());
    let one = Rational::one();
    let zero_one = w.is_zero_one();
    let (in_s, in_s0) = if negative.is_some() {
        (false, false)
    } else {
        (block_sums.values().all(|s| *s == one), block_sums.values().all(|s| *s <= one))
    };
    let violation = match negative {
        Some((element, value)) => {
            Some(MembershipViolation::Negative { element, value: value.clone() })
        }
        None => block_sums
            .iter()
            .find(|(_, s)| **s != one)
            .map(|(k, s)| MembershipViolation::BlockSum { block: *k, sum: s.clone() }),
    };
    Ok(MembershipReport {
        block_sums,
        in_s,
        in_s0,
        in_p: in_s && zero_one,
        in_p0: in_s0 && zero_one,
        violation,
    })
}

/// Fails with `NotInS` unless `w` lies in `S`.
pub fn require_in_s(family: &SetFamily, w: &WeightFunction) -> Result<MembershipReport, FamilyError> {
    let report = classify_membership(family, w)?;
    if report.in_s {
        Ok(report)
    } else {
        Err(FamilyError::NotInS(report.violation.clone().expect("violation recorded")))
    }
}

/// Both sides of the block-count identity for a member of `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountingIdentity {
    pub block_count: usize,
    /// `Σ_g κ(g) w(g)`.
    pub weighted_sum: Rational,
    /// `κ(Ω) Σ_g w(g)`, an upper bound for `weighted_sum`.
    pub bound: Rational,
}

impl CountingIdentity {
    pub fn holds(&self) -> bool {
        Rational::from_integer(self.block_count.into()) == self.weighted_sum
            && self.weighted_sum <= self.bound
    }
}

pub fn counting_identity(
    family: &SetFamily,
    w: &WeightFunction,
) -> Result<CountingIdentity, FamilyError> {
    require_in_s(family, w)?;
    let weighted_sum: Rational = w
        .iter()
        .map(|(g, v)| v * Rational::from_integer(family.multiplicity(g).unwrap_or(0).into()))
        .sum();
    let bound = Rational::from_integer(family.kappa_max().into()) * w.total();
    Ok(CountingIdentity { block_count: family.block_count(), weighted_sum, bound })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmptinessVerdict {
    /// `#Γ > m κ(Ω)`, so no function can have all block sums equal to one.
    CertifiedEmpty { block_count: usize, cover_size: usize, kappa: usize },
    Inconclusive { block_count: usize, cover_size: usize, kappa: usize },
}

impl EmptinessVerdict {
    pub fn is_certified_empty(&self) -> bool {
        matches!(self, EmptinessVerdict::CertifiedEmpty { .. })
    }
}

/// Counting test for emptiness of `S` given blocks that cover the ground set.
pub fn emptiness_test(
    family: &SetFamily,
    cover: &BTreeSet<BlockIndex>,
) -> Result<EmptinessVerdict, FamilyError> {
    let mut covered = BTreeSet::new();
    for &k in cover {
        let block = family.block(k).ok_or(FamilyError::UnknownBlock(k))?;
        covered.extend(block.members.iter().copied());
    }
    if let Some(missing) = family.ground().iter().find(|g| !covered.contains(g)) {
        return Err(FamilyError::NotACover { cover: cover.iter().copied().collect(), missing: *missing });
    }
    let block_count = family.block_count();
    let cover_size = cover.len();
    let kappa = family.kappa_max();
    Ok(if block_count > cover_size * kappa {
        EmptinessVerdict::CertifiedEmpty { block_count, cover_size, kappa }
    } else {
        EmptinessVerdict::Inconclusive { block_count, cover_size, kappa }
    })
}

/// One containment step of [`normalize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovalStep {
    pub removed_block: BlockIndex,
    pub contained_block: BlockIndex,
    pub removed_elements: Vec<ElementId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalizationLog {
    pub steps: Vec<RemovalStep>,
    /// Surviving blocks that lost every element. Their presence means `S` of
    /// the original family is empty; they are dropped from the result.
    pub emptied_blocks: Vec<BlockIndex>,
}

impl NormalizationLog {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty() && self.emptied_blocks.is_empty()
    }

    pub fn removed_blocks(&self) -> Vec<BlockIndex> {
        self.steps.iter().map(|s| s.removed_block).collect()
    }

    pub fn removed_elements(&self) -> BTreeSet<ElementId> {
        self.steps.iter().flat_map(|s| s.removed_elements.iter().copied()).collect()
    }

    /// The original family had no member of `S`.
    pub fn infeasible(&self) -> bool {
        !self.emptied_blocks.is_empty()
    }
}

/// Repeatedly removes a block `Ω_j` that contains another block `Ω_k`,
/// together with every element of `Ω_j \ Ω_k` (those are forced to zero in
/// every member of `S`). Indices of surviving blocks are preserved.
pub fn normalize(family: &SetFamily) -> (SetFamily, NormalizationLog) {
    let mut blocks: Vec<Block> = family.blocks().to_vec();
    let mut log = NormalizationLog::default();
    loop {
        let pair = blocks.iter().enumerate().find_map(|(ik, bk)| {
            blocks
                .iter()
                .enumerate()
                .find(|(ij, bj)| *ij != ik && bk.is_subset_of(bj))
                .map(|(ij, _)| (ik, ij))
        });
        let Some((ik, ij)) = pair else { break };
        let contained = blocks[ik].clone();
        let removed = blocks.remove(ij);
        let forced_zero: Vec<ElementId> =
            removed.members.iter().copied().filter(|g| !contained.contains(*g)).collect();
        for b in blocks.iter_mut() {
            b.members.retain(|g| !forced_zero.contains(g));
        }
        let (kept, emptied): (Vec<Block>, Vec<Block>) =
            blocks.into_iter().partition(|b| !b.is_empty());
        blocks = kept;
        log.emptied_blocks.extend(emptied.iter().map(|b| b.index));
        log.steps.push(RemovalStep {
            removed_block: removed.index,
            contained_block: contained.index,
            removed_elements: forced_zero,
        });
    }
    let indexed = blocks.into_iter().map(|b| (b.index, b.members)).collect();
    let reduced = SetFamily::from_indexed(indexed).expect("normalization keeps blocks distinct and nonempty");
    (reduced, log)
}

/// The family with one fresh slack element appended to each block whose sum
/// is only required to be at most one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Saturation {
    pub family: SetFamily,
    pub slack: BTreeMap<BlockIndex, ElementId>,
}

impl Saturation {
    /// `w'`: `w` plus `1 - Σ_{Ω_k} w` on each slack element.
    pub fn extend(&self, original: &SetFamily, w: &WeightFunction) -> WeightFunction {
        let mut out = w.clone();
        for (&k, &s) in &self.slack {
            let sum = original.block_sum(w, k).expect("slack block exists");
            out.set(s, Rational::one() - sum);
        }
        out
    }

    /// Drops the slack coordinates.
    pub fn truncate(&self, w: &WeightFunction) -> WeightFunction {
        let slack: BTreeSet<ElementId> = self.slack.values().copied().collect();
        WeightFunction::from_pairs(
            w.iter().filter(|(g, _)| !slack.contains(g)).map(|(g, v)| (g, v.clone())),
        )
    }
}

/// Turns "sum at most one" blocks into equality blocks by adding a private
/// slack element to each block outside `equality`. Slack labels continue past
/// the largest existing label, in block order.
pub fn saturate(family: &SetFamily, equality: &BTreeSet<BlockIndex>) -> Saturation {
    let mut next = family.max_label().map_or(0, |g| g.0 + 1);
    let mut slack = BTreeMap::new();
    let mut blocks = Vec::with_capacity(family.block_count());
    for b in family.blocks() {
        let mut members = b.members.clone();
        if !equality.contains(&b.index) {
            let s = ElementId(next);
            next += 1;
            members.push(s);
            slack.insert(b.index, s);
        }
        blocks.push((b.index, members));
    }
    let family = SetFamily::from_indexed(blocks).expect("slack elements keep blocks distinct");
    Saturation { family, slack }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum A1Check {
    Ok,
    /// Lexicographically first pair with `Γ(g) = Γ(h)`.
    Violated(ElementId, ElementId),
}

/// Whether `g ↦ Γ(g)` is injective on `subset`.
pub fn check_a1(family: &SetFamily, subset: &BTreeSet<ElementId>) -> Result<A1Check, FamilyError> {
    let mut first_with: BTreeMap<&[BlockIndex], ElementId> = BTreeMap::new();
    let mut best: Option<(ElementId, ElementId)> = None;
    for &g in subset {
        let gamma = family.gamma(g).ok_or(FamilyError::UnknownElement(g))?;
        match first_with.get(gamma) {
            Some(&h) => {
                let pair = (h, g);
                if best.is_none_or(|b| pair < b) {
                    best = Some(pair);
                }
            }
            None => {
                first_with.insert(gamma, g);
            }
        }
    }
    Ok(best.map_or(A1Check::Ok, |(g, h)| A1Check::Violated(g, h)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct A2Report {
    pub m: usize,
    /// The first `m` blocks (in index order) cover the ground set.
    pub covered_by_first_m: bool,
    /// Blocks past the first `m` that lie in the union of the other blocks.
    pub contained_blocks: Vec<BlockIndex>,
    /// Only blocks up to a finite horizon were examined.
    pub horizon_limited: bool,
}

impl A2Report {
    pub fn ok(&self) -> bool {
        self.covered_by_first_m || self.contained_blocks.is_empty()
    }
}

/// Checks the covering-or-non-containment condition for a finite family.
/// For a finite family the union of all other blocks is the largest finite
/// union, so the containment test is exhaustive.
pub fn check_a2(family: &SetFamily, m: usize) -> A2Report {
    let blocks = family.blocks();
    let first_m: BTreeSet<ElementId> =
        blocks.iter().take(m).flat_map(|b| b.members.iter().copied()).collect();
    let covered_by_first_m = family.ground().iter().all(|g| first_m.contains(g));
    let contained_blocks = blocks
        .iter()
        .enumerate()
        .skip(m)
        .filter(|(pos, b)| {
            b.members.iter().all(|g| {
                family.gamma(*g).is_some_and(|gamma| gamma.iter().any(|k| *k != blocks[*pos].index))
            })
        })
        .map(|(_, b)| b.index)
        .collect();
    A2Report { m, covered_by_first_m, contained_blocks, horizon_limited: false }
}
