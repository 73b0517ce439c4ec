//! Greedy extension of partial solutions on lazily generated infinite
//! families.
//!
//! A [`FamilyGenerator`] describes an infinite list of blocks. Everything is
//! computed inside a finite horizon: only blocks with index up to the horizon
//! are saturated, and infinite blocks are cut to a window of labels.
//! [`extend_tn`] takes a valid truncation on `G_n` (the union of the first
//! `n` blocks) and saturates the remaining blocks one fresh element at a time.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::family::{saturate, BlockIndex, ElementId, SetFamily, WeightFunction};
use crate::oracle::{decompose, is_vertex, OracleError, OracleOptions};
use crate::rational::{abs, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtensionError {
    #[error("no eligible element for block {block} within horizon {horizon}")]
    HorizonExhausted { block: BlockIndex, horizon: usize },
    #[error("generator is inconsistent: {0}")]
    GeneratorInconsistent(String),
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("horizon {horizon} must exceed n = {n}")]
    HorizonTooSmall { n: usize, horizon: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A deterministic, possibly infinite list of blocks indexed from 1.
pub trait FamilyGenerator: Sync {
    fn name(&self) -> String;

    /// Members of block `k`, sorted. Infinite blocks are cut to the labels
    /// visible at `horizon`. `None` past the last block of a finite family.
    fn block_at(&self, k: BlockIndex, horizon: usize) -> Option<Vec<ElementId>>;

    /// Indices of all blocks containing `g`, sorted. Always finite.
    fn gamma_of(&self, g: ElementId) -> Vec<BlockIndex>;

    /// `None` for infinite families.
    fn block_count(&self) -> Option<usize> {
        None
    }

    fn block_is_finite(&self, _k: BlockIndex) -> bool {
        true
    }

    /// Whether no block is contained in a finite union of other blocks.
    fn claims_a22(&self) -> bool;
}

/// `Ω_k = {k, k+1}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PathGenerator;

impl FamilyGenerator for PathGenerator {
    fn name(&self) -> String {
        "path".into()
    }

    fn block_at(&self, k: BlockIndex, _horizon: usize) -> Option<Vec<ElementId>> {
        (k >= 1).then(|| vec![ElementId(k as u64), ElementId(k as u64 + 1)])
    }

    fn gamma_of(&self, g: ElementId) -> Vec<BlockIndex> {
        let g = g.0 as usize;
        match g {
            0 => vec![],
            1 => vec![1],
            _ => vec![g - 1, g],
        }
    }

    fn claims_a22(&self) -> bool {
        false
    }
}

/// Pairwise disjoint blocks with `#Ω_k = k`, labelled consecutively.
#[derive(Clone, Copy, Debug, Default)]
pub struct DisjointGrowingGenerator;

fn triangular(k: u64) -> u64 {
    k * (k + 1) / 2
}

impl FamilyGenerator for DisjointGrowingGenerator {
    fn name(&self) -> String {
        "disjoint-growing".into()
    }

    fn block_at(&self, k: BlockIndex, _horizon: usize) -> Option<Vec<ElementId>> {
        let k = k as u64;
        (k >= 1).then(|| (triangular(k - 1) + 1..=triangular(k)).map(ElementId).collect())
    }

    fn gamma_of(&self, g: ElementId) -> Vec<BlockIndex> {
        if g.0 == 0 {
            return vec![];
        }
        let mut k = 1;
        while triangular(k) < g.0 {
            k += 1;
        }
        vec![k as usize]
    }

    fn claims_a22(&self) -> bool {
        true
    }
}

/// Rows and columns of an infinite matrix. Row `i` is block `2i - 1`,
/// column `j` is block `2j`, and cell `(i, j)` carries the Cantor label of
/// `(i - 1, j - 1)` plus one.
#[derive(Clone, Copy, Debug, Default)]
pub struct GridGenerator;

impl GridGenerator {
    pub fn label(i: u64, j: u64) -> ElementId {
        let (a, b) = (i - 1, j - 1);
        ElementId((a + b) * (a + b + 1) / 2 + b + 1)
    }

    pub fn cell(g: ElementId) -> (u64, u64) {
        let z = g.0 - 1;
        let mut s = 0;
        while (s + 1) * (s + 2) / 2 <= z {
            s += 1;
        }
        let b = z - s * (s + 1) / 2;
        (s - b + 1, b + 1)
    }
}

impl FamilyGenerator for GridGenerator {
    fn name(&self) -> String {
        "grid".into()
    }

    fn block_at(&self, k: BlockIndex, horizon: usize) -> Option<Vec<ElementId>> {
        if k == 0 {
            return None;
        }
        let h = horizon.max(1) as u64;
        let mut members: Vec<ElementId> = if k % 2 == 1 {
            let i = k.div_ceil(2) as u64;
            (1..=h).map(|j| Self::label(i, j)).collect()
        } else {
            let j = (k / 2) as u64;
            (1..=h).map(|i| Self::label(i, j)).collect()
        };
        members.sort();
        Some(members)
    }

    fn gamma_of(&self, g: ElementId) -> Vec<BlockIndex> {
        if g.0 == 0 {
            return vec![];
        }
        let (i, j) = Self::cell(g);
        let mut gamma = vec![(2 * i - 1) as usize, (2 * j) as usize];
        gamma.sort();
        gamma
    }

    fn block_is_finite(&self, _k: BlockIndex) -> bool {
        false
    }

    fn claims_a22(&self) -> bool {
        true
    }
}

/// A finite family seen as a generator that runs out of blocks. Block
/// indices must be `1..=N`.
#[derive(Clone, Debug)]
pub struct FiniteGenerator {
    family: SetFamily,
}

impl FiniteGenerator {
    pub fn new(family: SetFamily) -> Result<Self, ExtensionError> {
        let contiguous = family.block_indices().eq(1..=family.block_count());
        if !contiguous {
            return Err(ExtensionError::GeneratorInconsistent("block indices must be 1..=N".into()));
        }
        Ok(FiniteGenerator { family })
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }
}

impl FamilyGenerator for FiniteGenerator {
    fn name(&self) -> String {
        "finite".into()
    }

    fn block_at(&self, k: BlockIndex, _horizon: usize) -> Option<Vec<ElementId>> {
        self.family.block(k).map(|b| b.members.clone())
    }

    fn gamma_of(&self, g: ElementId) -> Vec<BlockIndex> {
        self.family.gamma(g).map(<[_]>::to_vec).unwrap_or_default()
    }

    fn block_count(&self) -> Option<usize> {
        Some(self.family.block_count())
    }

    fn claims_a22(&self) -> bool {
        crate::family::check_a2(&self.family, 0).contained_blocks.is_empty()
    }
}

/// Looks up a built-in infinite generator.
pub fn generator_by_name(name: &str) -> Option<Box<dyn FamilyGenerator>> {
    match name {
        "path" => Some(Box::new(PathGenerator)),
        "disjoint-growing" => Some(Box::new(DisjointGrowingGenerator)),
        "grid" => Some(Box::new(GridGenerator)),
        _ => None,
    }
}

fn last_block(generator: &dyn FamilyGenerator, horizon: usize) -> usize {
    generator.block_count().map_or(horizon, |c| c.min(horizon))
}

/// `Σ_{g ∈ Ω_k} w(g)`, computed from the support of `w`.
fn block_sums(generator: &dyn FamilyGenerator, w: &WeightFunction) -> BTreeMap<BlockIndex, Rational> {
    let mut sums = BTreeMap::new();
    for (g, v) in w.iter() {
        for k in generator.gamma_of(g) {
            *sums.entry(k).or_insert_with(Rational::zero) += v;
        }
    }
    sums
}

fn sum_at(sums: &BTreeMap<BlockIndex, Rational>, k: BlockIndex) -> Rational {
    sums.get(&k).cloned().unwrap_or_else(Rational::zero)
}

/// A nonnegative function on `G_n` with sum one on the first `n` blocks and
/// at most one on every later block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub n: usize,
    /// `G_n` inside the horizon window.
    pub ground: BTreeSet<ElementId>,
    pub w: WeightFunction,
}

impl Truncation {
    pub fn new(
        generator: &dyn FamilyGenerator,
        n: usize,
        w: WeightFunction,
        horizon: usize,
    ) -> Result<Self, ExtensionError> {
        let invalid = |m: String| Err(ExtensionError::InvalidTruncation(m));
        if n == 0 {
            return invalid("n must be positive".into());
        }
        let mut ground = BTreeSet::new();
        for k in 1..=n {
            let block = generator.block_at(k, horizon).ok_or_else(|| {
                ExtensionError::InvalidTruncation(format!("the family has fewer than {n} blocks"))
            })?;
            ground.extend(block);
        }
        if let Some((g, _)) = w.iter().find(|(g, _)| !ground.contains(g)) {
            return invalid(format!("element {g} lies outside G_{n}"));
        }
        if let Some((g, v)) = w.iter().find(|(_, v)| v.is_negative()) {
            return invalid(format!("element {g} has negative value {v}"));
        }
        let sums = block_sums(generator, &w);
        let one = Rational::one();
        for k in 1..=n {
            let s = sum_at(&sums, k);
            if s != one {
                return invalid(format!("block {k} sums to {s}"));
            }
        }
        if let Some((k, s)) = sums.iter().find(|(_, s)| **s > one) {
            return invalid(format!("block {k} sums to {s}"));
        }
        Ok(Truncation { n, ground, w })
    }
}

/// `δ_j = Σ_{Ω_j ∩ G_n} w` for `j = n+1 ..= horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailSums {
    pub first_index: usize,
    pub values: Vec<Rational>,
    /// Largest block index meeting the support; every later value is 0.
    pub support_reach: usize,
}

pub fn tail_sums(generator: &dyn FamilyGenerator, trunc: &Truncation, horizon: usize) -> TailSums {
    let sums = block_sums(generator, &trunc.w);
    let support_reach = sums.keys().copied().max().unwrap_or(0);
    let values: Vec<Rational> = (trunc.n + 1..=horizon).map(|j| sum_at(&sums, j)).collect();
    assert!(
        values.iter().zip(trunc.n + 1..).all(|(v, j)| j <= support_reach || v.is_zero()),
        "tail sums must vanish past the blocks meeting the support"
    );
    TailSums { first_index: trunc.n + 1, values, support_reach }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionStep {
    pub element: ElementId,
    pub block: BlockIndex,
    #[serde(with = "crate::rational::serde_text")]
    pub delta: Rational,
    #[serde(with = "crate::rational::serde_text")]
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionResult {
    pub generator: String,
    pub n: usize,
    pub horizon: usize,
    /// `T_0 w`: the truncation extended by zero.
    pub base: WeightFunction,
    pub extended: WeightFunction,
    pub steps: Vec<ExtensionStep>,
    pub chi_prime: WeightFunction,
    pub chi_double_prime: WeightFunction,
    /// Blocks with sum exactly one at the end.
    pub saturated: BTreeSet<BlockIndex>,
    /// Every block up to the horizon was saturated.
    pub complete: bool,
}

/// Splits the chosen elements into two classes, each meeting every block at
/// most once: an element goes to the first class unless its blocks meet
/// those of an earlier element, in which case it takes the other class.
fn split_chosen(generator: &dyn FamilyGenerator, chosen: &[ElementId]) -> (WeightFunction, WeightFunction) {
    let gammas: Vec<BTreeSet<BlockIndex>> =
        chosen.iter().map(|g| generator.gamma_of(*g).into_iter().collect()).collect();
    let mut first_class: Vec<bool> = Vec::with_capacity(chosen.len());
    for j in 0..chosen.len() {
        let earlier = (0..j).find(|&i| !gammas[i].is_disjoint(&gammas[j]));
        first_class.push(earlier.is_none_or(|i| !first_class[i]));
    }
    let pick = |want: bool| {
        WeightFunction::from_pairs(
            chosen.iter().zip(&first_class).filter(|(_, c)| **c == want).map(|(g, _)| (*g, Rational::one())),
        )
    };
    (pick(true), pick(false))
}

/// Saturates every block up to `horizon`, one fresh element per block.
///
/// At each step `k` is the least block whose sum is below one and `δ` its
/// current sum. The chosen element is the least label `g ∈ Ω_k` that lies in
/// no saturated block, whose other blocks avoid every block touched so far,
/// and whose other blocks have sum below `δ` (sum zero when `δ = 0`). It
/// receives `1 - δ`.
pub fn extend_tn(
    generator: &dyn FamilyGenerator,
    trunc: &Truncation,
    horizon: usize,
) -> Result<ExtensionResult, ExtensionError> {
    if horizon <= trunc.n {
        return Err(ExtensionError::HorizonTooSmall { n: trunc.n, horizon });
    }
    let one = Rational::one();
    let mut w = trunc.w.clone();
    let mut sums = block_sums(generator, &w);
    let mut saturated: BTreeSet<BlockIndex> =
        sums.iter().filter(|(_, s)| **s == one).map(|(k, _)| *k).collect();
    let mut touched = saturated.clone();
    let mut steps = Vec::new();
    let last = last_block(generator, horizon);
    while let Some(k) = (1..=last).find(|k| !saturated.contains(k)) {
        let delta = sum_at(&sums, k);
        let members = generator
            .block_at(k, horizon)
            .ok_or_else(|| ExtensionError::GeneratorInconsistent(format!("block {k} is missing")))?;
        let mut chosen = None;
        for g in members {
            let gamma = generator.gamma_of(g);
            if !gamma.contains(&k) {
                return Err(ExtensionError::GeneratorInconsistent(format!(
                    "element {g} is listed in block {k} but its blocks are {gamma:?}"
                )));
            }
            if gamma.iter().any(|i| saturated.contains(i)) {
                continue;
            }
            let eligible = gamma.iter().filter(|i| **i != k).all(|i| {
                let s = sum_at(&sums, *i);
                !touched.contains(i) && if delta.is_zero() { s.is_zero() } else { s < delta }
            });
            if eligible {
                chosen = Some((g, gamma));
                break;
            }
        }
        let Some((g, gamma)) = chosen else {
            return Err(ExtensionError::HorizonExhausted { block: k, horizon });
        };
        let value = &one - &delta;
        w.set(g, value.clone());
        for i in &gamma {
            let s = sums.entry(*i).or_insert_with(Rational::zero);
            *s += &value;
            if *s == one {
                saturated.insert(*i);
            }
        }
        touched.extend(gamma);
        steps.push(ExtensionStep { element: g, block: k, delta, value });
    }
    let chosen: Vec<ElementId> = steps.iter().map(|s| s.element).collect();
    let (chi_prime, chi_double_prime) = split_chosen(generator, &chosen);
    let complete = (1..=last).all(|k| saturated.contains(&k));
    Ok(ExtensionResult {
        generator: generator.name(),
        n: trunc.n,
        horizon,
        base: trunc.w.clone(),
        extended: w,
        steps,
        chi_prime,
        chi_double_prime,
        saturated,
        complete,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtensionReport {
    /// Every block up to the horizon is saturated.
    pub c1: bool,
    /// Replaying the steps changes one fresh element each time and
    /// reproduces the result.
    pub c2: bool,
    /// Sums are at most one everywhere explored and exactly one on the
    /// saturated blocks.
    pub c3: bool,
    /// Each chosen element shares blocks with at most one earlier one.
    pub c4: bool,
    /// `0 ≤ extended - base ≤ χ' + χ''`.
    pub domination: bool,
    /// `χ'` and `χ''` are 0/1 and meet every block at most once.
    pub chi_in_p0: bool,
    /// `Some` when the truncation is a vertex of its finite polytope: whether
    /// the extension is a vertex of the explored sub-family.
    pub vertex_shadow: Option<bool>,
    pub violations: Vec<String>,
}

impl ExtensionReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Block members visible at `horizon`, summed with `w`.
fn window_sum(generator: &dyn FamilyGenerator, k: BlockIndex, horizon: usize, w: &WeightFunction) -> Rational {
    generator.block_at(k, horizon).unwrap_or_default().iter().map(|g| w.get(*g)).sum()
}

/// The finite polytope on `elements`: blocks in `equalities` must sum to one,
/// every other block meeting `elements` to at most one. Restricted blocks
/// that repeat an earlier one are dropped. Returns the saturated family.
fn local_polytope(
    generator: &dyn FamilyGenerator,
    elements: &BTreeSet<ElementId>,
    equalities: &BTreeSet<BlockIndex>,
) -> Result<(SetFamily, crate::family::Saturation), ExtensionError> {
    let mut restricted: BTreeMap<BlockIndex, Vec<ElementId>> = BTreeMap::new();
    for g in elements {
        for k in generator.gamma_of(*g) {
            restricted.entry(k).or_default().push(*g);
        }
    }
    let mut order: Vec<BlockIndex> = restricted.keys().copied().collect();
    order.sort_by_key(|k| (!equalities.contains(k), *k));
    let mut seen = BTreeSet::new();
    let mut blocks = Vec::new();
    let mut kept_equalities = BTreeSet::new();
    for k in order {
        let mut members = restricted.remove(&k).expect("listed above");
        members.sort();
        if seen.insert(members.clone()) {
            if equalities.contains(&k) {
                kept_equalities.insert(k);
            }
            blocks.push((k, members));
        }
    }
    blocks.sort();
    let family = SetFamily::from_indexed(blocks)
        .map_err(|e| ExtensionError::GeneratorInconsistent(e.to_string()))?;
    let saturation = saturate(&family, &kept_equalities);
    Ok((family, saturation))
}

/// Whether `w` is a vertex of the polytope described by [`local_polytope`].
fn local_vertex(
    generator: &dyn FamilyGenerator,
    elements: &BTreeSet<ElementId>,
    equalities: &BTreeSet<BlockIndex>,
    w: &WeightFunction,
) -> Result<bool, ExtensionError> {
    let (family, saturation) = local_polytope(generator, elements, equalities)?;
    Ok(is_vertex(&saturation.family, &saturation.extend(&family, w))?)
}

/// Re-checks an extension result from scratch.
pub fn verify_extension(
    result: &ExtensionResult,
    generator: &dyn FamilyGenerator,
    trunc: &Truncation,
) -> ExtensionReport {
    let mut report = ExtensionReport::default();
    let mut violations = Vec::new();
    let one = Rational::one();
    let horizon = result.horizon;
    let last = last_block(generator, horizon);

    report.c1 = result.complete && (1..=last).all(|k| result.saturated.contains(&k));
    if !report.c1 {
        violations.push("c1: some block up to the horizon is not saturated".to_string());
    }

    let mut replay = trunc.w.clone();
    let mut c2 = true;
    for (j, step) in result.steps.iter().enumerate() {
        let least = (1..=last).find(|k| window_sum(generator, *k, horizon, &replay) != one);
        if least != Some(step.block) {
            c2 = false;
            violations.push(format!("c2: step {j} works on block {} but the least open block is {least:?}", step.block));
        }
        let fresh = !trunc.ground.contains(&step.element) && replay.get(step.element).is_zero();
        let in_block = generator.block_at(step.block, horizon).is_some_and(|b| b.contains(&step.element));
        let expected = &one - window_sum(generator, step.block, horizon, &replay);
        if !fresh || !in_block || step.value != expected {
            c2 = false;
            violations.push(format!("c2: step {j} sets element {} inconsistently", step.element));
        }
        replay.set(step.element, step.value.clone());
    }
    if replay != result.extended {
        c2 = false;
        violations.push("c2: replayed steps do not reproduce the extension".to_string());
    }
    report.c2 = c2;

    let sums = block_sums(generator, &result.extended);
    let mut c3 = true;
    for k in (1..=last).chain(sums.keys().copied()) {
        let s = sum_at(&sums, k);
        if s > one || (result.saturated.contains(&k) && s != one) {
            c3 = false;
            violations.push(format!("c3: block {k} sums to {s}"));
        }
    }
    report.c3 = c3;

    let gammas: Vec<BTreeSet<BlockIndex>> =
        result.steps.iter().map(|s| generator.gamma_of(s.element).into_iter().collect()).collect();
    report.c4 = true;
    for j in 0..gammas.len() {
        let meets = (0..j).filter(|&i| !gammas[i].is_disjoint(&gammas[j])).count();
        if meets > 1 {
            report.c4 = false;
            violations.push(format!("c4: element {} meets {meets} earlier elements", result.steps[j].element));
        }
    }

    let diff = result.extended.sub(&result.base);
    let cover = result.chi_prime.add(&result.chi_double_prime);
    let mut explored: BTreeSet<ElementId> = diff.support();
    explored.extend(cover.support());
    report.domination = explored.iter().all(|g| {
        let d = diff.get(*g);
        !d.is_negative() && d <= cover.get(*g)
    });
    if !report.domination {
        violations.push("domination: extended - base is not bounded by chi' + chi''".to_string());
    }

    report.chi_in_p0 = [&result.chi_prime, &result.chi_double_prime].iter().all(|chi| {
        chi.is_zero_one() && block_sums(generator, chi).values().all(|s| *s <= one)
    });
    if !report.chi_in_p0 {
        violations.push("chi' or chi'' meets a block twice".to_string());
    }

    let first_blocks: BTreeSet<BlockIndex> = (1..=trunc.n).collect();
    report.vertex_shadow = match local_vertex(generator, &trunc.ground, &first_blocks, &trunc.w) {
        Ok(true) => {
            let mut elements = trunc.ground.clone();
            elements.extend(result.steps.iter().map(|s| s.element));
            match local_vertex(generator, &elements, &result.saturated, &result.extended) {
                Ok(v) => Some(v),
                Err(e) => {
                    violations.push(format!("vertex shadow: {e}"));
                    Some(false)
                }
            }
        }
        Ok(false) => None,
        Err(e) => {
            violations.push(format!("vertex shadow: {e}"));
            None
        }
    };
    if report.vertex_shadow == Some(false) {
        violations.push("vertex shadow: the extension of a vertex is not a vertex".to_string());
    }

    report.violations = violations;
    report
}

/// One vertex of the truncated polytope and its extension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproximationTerm {
    pub coefficient: Rational,
    pub vertex: WeightFunction,
    pub extended: WeightFunction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approximation {
    pub n: usize,
    pub horizon: usize,
    pub terms: Vec<ApproximationTerm>,
    /// `Σ αⱼ T_n(vⱼ)`.
    pub combined: WeightFunction,
    /// `Σ_{Ω_k} |w_full - combined|` for each block up to the horizon.
    pub block_discrepancy: BTreeMap<BlockIndex, Rational>,
    /// `|w_full - combined|` on `G_n`.
    pub element_discrepancy: BTreeMap<ElementId, Rational>,
}

impl Approximation {
    pub fn max_block_discrepancy(&self, up_to: BlockIndex) -> Rational {
        self.block_discrepancy.range(..=up_to).map(|(_, d)| d.clone()).max().unwrap_or_else(Rational::zero)
    }

    pub fn max_element_discrepancy(&self) -> Rational {
        self.element_discrepancy.values().cloned().max().unwrap_or_else(Rational::zero)
    }
}

/// Restricts `w_full` to `G_n`, writes it as a convex combination of vertices
/// of the truncated polytope, extends every vertex and compares the
/// recombined extension with `w_full` up to the horizon.
pub fn approximate_by_extremes(
    generator: &dyn FamilyGenerator,
    w_full: &WeightFunction,
    n: usize,
    horizon: usize,
    options: &OracleOptions,
) -> Result<Approximation, ExtensionError> {
    let mut ground = BTreeSet::new();
    for k in 1..=n {
        ground.extend(generator.block_at(k, horizon).ok_or_else(|| {
            ExtensionError::InvalidTruncation(format!("the family has fewer than {n} blocks"))
        })?);
    }
    let restricted = w_full.restrict(&ground);
    let trunc = Truncation::new(generator, n, restricted.clone(), horizon)?;
    let equalities: BTreeSet<BlockIndex> = (1..=n).collect();
    let (family, saturation) = local_polytope(generator, &trunc.ground, &equalities)?;
    let lifted = saturation.extend(&family, &trunc.w);
    let decomposition = decompose(&saturation.family, &lifted, options)?;
    let mut terms = Vec::with_capacity(decomposition.terms.len());
    let mut combined = WeightFunction::new();
    for (coefficient, vertex) in decomposition.terms {
        let vertex = saturation.truncate(&vertex);
        let vt = Truncation::new(generator, n, vertex.clone(), horizon)?;
        let extended = extend_tn(generator, &vt, horizon)?.extended;
        combined = combined.add(&extended.scale(&coefficient));
        terms.push(ApproximationTerm { coefficient, vertex, extended });
    }
    let gap = w_full.sub(&combined);
    let block_discrepancy = (1..=last_block(generator, horizon))
        .map(|k| {
            let members = generator.block_at(k, horizon).unwrap_or_default();
            (k, members.iter().map(|g| abs(&gap.get(*g))).sum())
        })
        .collect();
    let element_discrepancy = trunc.ground.iter().map(|g| (*g, abs(&gap.get(*g)))).collect();
    Ok(Approximation { n, horizon, terms, combined, block_discrepancy, element_discrepancy })
}

/// Finite-horizon view of the covering-or-non-containment condition for a
/// generator: coverage by the first `m` blocks is tested on the visible
/// window, and a finite block past `m` counts as contained when each of its
/// members lies in some other block. Infinite blocks are never reported.
pub fn check_a2_horizon(generator: &dyn FamilyGenerator, m: usize, horizon: usize) -> crate::family::A2Report {
    let last = last_block(generator, horizon);
    let first_m: BTreeSet<ElementId> =
        (1..=m.min(last)).flat_map(|k| generator.block_at(k, horizon).unwrap_or_default()).collect();
    let covered_by_first_m = (m + 1..=last)
        .all(|k| generator.block_at(k, horizon).unwrap_or_default().iter().all(|g| first_m.contains(g)));
    let contained_blocks = (m + 1..=last)
        .filter(|k| generator.block_is_finite(*k))
        .filter(|k| {
            generator
                .block_at(*k, horizon)
                .unwrap_or_default()
                .iter()
                .all(|g| generator.gamma_of(*g).iter().any(|i| i != k))
        })
        .collect();
    crate::family::A2Report {
        m,
        covered_by_first_m,
        contained_blocks,
        horizon_limited: generator.block_count().is_none_or(|c| c > horizon),
    }
}

/// A random 0/1 truncation: each of the first `n` blocks that is still empty
/// receives one element whose blocks are all empty. `None` when the greedy
/// choice gets stuck.
pub fn random_zero_one_truncation<R: Rng>(
    generator: &dyn FamilyGenerator,
    n: usize,
    horizon: usize,
    rng: &mut R,
) -> Option<Truncation> {
    let mut w = WeightFunction::new();
    let mut sums = BTreeMap::new();
    for k in 1..=n {
        if !sum_at(&sums, k).is_zero() {
            continue;
        }
        let members = generator.block_at(k, horizon)?;
        let free: Vec<ElementId> = members
            .into_iter()
            .filter(|g| generator.gamma_of(*g).iter().all(|i| sum_at(&sums, *i).is_zero()))
            .collect();
        let g = *free.choose(rng)?;
        w.set(g, Rational::one());
        for i in generator.gamma_of(g) {
            *sums.entry(i).or_insert_with(Rational::zero) += Rational::one();
        }
    }
    Truncation::new(generator, n, w, horizon).ok()
}
