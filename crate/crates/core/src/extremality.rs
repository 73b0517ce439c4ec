//! Extreme-point classification for families of multiplicity at most two,
//! and explicit midpoint witnesses for non-extreme points.
//!
//! For such families a member `w` of `S` is extreme exactly when every
//! connected component of its support is either a single vertex carrying 1 or
//! an odd primitive cycle carrying 1/2 throughout. Every other point gets a
//! witness pair `w⁺ ≠ w⁻` in `S` with `w = (w⁺ + w⁻)/2`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::family::{
    check_a1, classify_membership, require_in_s, A1Check, BlockIndex, ElementId, FamilyError, SetFamily,
    WeightFunction,
};
use crate::graph::{
    build_graph, find_primitive_cycles, is_primitive, shortest_primitive_path, AssociatedGraph, GraphError,
    Parity, Path,
};
use crate::linalg::{kernel, Matrix};
use crate::rational::{distance_to_bounds, half, is_half, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtremalityError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("construction preconditions violated: {0}")]
    ConditionsViolated(String),
    #[error("block {block} meets BFS layer {layer} in more than one vertex")]
    UnexpectedMultipleEntryVertex { block: BlockIndex, layer: usize },
    #[error("support component contains the even primitive cycle {0:?}")]
    EvenCyclePresent(Vec<ElementId>),
    #[error("constructed witness is invalid: {0}")]
    InvalidWitness(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AttachmentCase {
    /// The attachment vertex has no support neighbours off the cycle's blocks.
    Isolated,
    /// The attachment vertex roots a cycle-free region.
    Tree,
    /// The region behind the attachment vertex holds a second odd cycle.
    SecondCycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Construction {
    TwoColoring,
    TreePropagation,
    CycleAttachment(AttachmentCase),
    /// Fallback when no cycle attachment applies: a null-space direction of
    /// the support columns.
    KernelDirection,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub w_plus: WeightFunction,
    pub w_minus: WeightFunction,
    /// Step size actually used.
    pub epsilon: Rational,
    pub construction: Construction,
    /// Admissible bound the step was derived from.
    pub slack: Rational,
}

impl Witness {
    /// Both functions lie in `S`, differ, and average to `w`.
    pub fn check(&self, family: &SetFamily, w: &WeightFunction) -> Result<(), ExtremalityError> {
        let invalid = |m: String| Err(ExtremalityError::InvalidWitness(m));
        if self.w_plus == self.w_minus {
            return invalid("w_plus equals w_minus".into());
        }
        if self.w_plus.add(&self.w_minus) != w.scale(&Rational::from_integer(2.into())) {
            return invalid("midpoint differs from w".into());
        }
        for (name, f) in [("w_plus", &self.w_plus), ("w_minus", &self.w_minus)] {
            let r = classify_membership(family, f).map_err(|e| ExtremalityError::InvalidWitness(e.to_string()))?;
            if !r.in_s {
                return invalid(format!("{name} not in S: {}", r.violation.map(|v| v.to_string()).unwrap_or_default()));
            }
        }
        Ok(())
    }

    /// `w⁺ - w`.
    pub fn direction(&self, w: &WeightFunction) -> WeightFunction {
        self.w_plus.sub(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    IsolatedVertexOne,
    OddPrimitiveCycleHalf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtremalityVerdict {
    Extreme { components: Vec<(BTreeSet<ElementId>, ComponentKind)> },
    NotExtreme { witness: Box<Witness> },
    Unsupported { reason: String },
}

impl ExtremalityVerdict {
    pub fn is_extreme(&self) -> bool {
        matches!(self, ExtremalityVerdict::Extreme { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ExtremalityVerdict::NotExtreme { witness } => Some(witness),
            _ => None,
        }
    }
}

/// `ŵ`: the smallest distance of `w` to the bounds 0 and 1 over `set`.
pub fn slack_over<'a>(w: &WeightFunction, set: impl IntoIterator<Item = &'a ElementId>) -> Rational {
    set.into_iter()
        .map(|g| distance_to_bounds(&w.get(*g)))
        .min()
        .unwrap_or_else(Rational::one)
}

pub fn support_graph(family: &SetFamily, w: &WeightFunction) -> AssociatedGraph {
    build_graph(family).induced_subgraph(&w.support()).expect("support lies in the ground set")
}

/// Returns the cycle order when `component` is exactly one primitive cycle.
fn as_primitive_cycle(family: &SetFamily, sub: &AssociatedGraph) -> Option<Path> {
    let verts = sub.vertices();
    if verts.len() < 3 || verts.iter().any(|g| sub.degree(*g) != 2) {
        return None;
    }
    let start = *verts.iter().next()?;
    let mut order = vec![start];
    let mut prev = start;
    let mut cur = sub.neighbors(start).next()?;
    while cur != start {
        order.push(cur);
        let next = sub.neighbors(cur).find(|h| *h != prev)?;
        prev = cur;
        cur = next;
    }
    if order.len() != verts.len() {
        return None;
    }
    let path = Path::cycle(order).canonical_cycle();
    (is_primitive(family, &path) == Ok(true)).then_some(path)
}

/// Classifies `w ∈ S` as extreme or not. Families with multiplicity above
/// two are reported as unsupported.
pub fn classify_extreme(family: &SetFamily, w: &WeightFunction) -> Result<ExtremalityVerdict, ExtremalityError> {
    require_in_s(family, w)?;
    let kappa = family.kappa_max();
    if kappa > 2 {
        return Ok(ExtremalityVerdict::Unsupported {
            reason: format!("multiplicity {kappa} exceeds 2"),
        });
    }
    let support = w.support();
    if let Some(b) = family.blocks().iter().find(|b| b.members.iter().all(|g| !support.contains(g))) {
        return Err(ExtremalityError::ConditionsViolated(format!("block {} misses the support", b.index)));
    }
    let sg = support_graph(family, w);
    let mut components = Vec::new();
    for comp in sg.connected_components() {
        if comp.len() == 1 {
            let g = *comp.iter().next().expect("singleton");
            if w.get(g).is_one() {
                components.push((comp, ComponentKind::IsolatedVertexOne));
                continue;
            }
        } else {
            let sub = sg.induced_subgraph(&comp).expect("subset");
            if let Some(c) = as_primitive_cycle(family, &sub) {
                if c.is_odd() && comp.iter().all(|g| is_half(&w.get(*g))) {
                    components.push((comp, ComponentKind::OddPrimitiveCycleHalf));
                    continue;
                }
            }
        }
        let witness = witness_for_component(family, w, &sg, &comp)?;
        return Ok(ExtremalityVerdict::NotExtreme { witness: Box::new(witness) });
    }
    Ok(ExtremalityVerdict::Extreme { components })
}

fn witness_for_component(
    family: &SetFamily,
    w: &WeightFunction,
    sg: &AssociatedGraph,
    comp: &BTreeSet<ElementId>,
) -> Result<Witness, ExtremalityError> {
    if comp.len() < 2 {
        return Err(ExtremalityError::ConditionsViolated(
            "isolated support vertex with value below 1".into(),
        ));
    }
    if let A1Check::Violated(g, h) = check_a1(family, comp)? {
        return witness_two_coloring(family, w, &[g, h].into());
    }
    let sub = sg.induced_subgraph(comp).expect("subset");
    let cycles = find_primitive_cycles(&sub, family, Parity::Any);
    if let Some(even) = cycles.iter().find(|c| !c.is_odd()) {
        return witness_two_coloring(family, w, &even.vertex_set());
    }
    if cycles.is_empty() {
        return witness_tree_propagation(family, w, comp);
    }
    // Several odd cycles may share a block, and then no region behind an
    // attachment is closed. Try every candidate before giving up.
    let mut first_err = None;
    for cycle in &cycles {
        let blocks: BTreeSet<BlockIndex> = cycle_blocks(family, cycle)?.into_iter().collect();
        let attachments = comp
            .iter()
            .filter(|g| !cycle.vertices.contains(g))
            .filter(|g| family.gamma(**g).is_some_and(|gamma| gamma.iter().any(|k| blocks.contains(k))));
        for &g0 in attachments {
            match witness_cycle_attachment(family, w, cycle, g0) {
                Ok(wit) => return Ok(wit),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
    }
    witness_kernel_direction(family, w, comp).map_err(|e| first_err.unwrap_or(e))
}

/// Moves `w` along a null-space vector of the block incidence matrix
/// restricted to `component`.
pub fn witness_kernel_direction(
    family: &SetFamily,
    w: &WeightFunction,
    component: &BTreeSet<ElementId>,
) -> Result<Witness, ExtremalityError> {
    require_in_s(family, w)?;
    if component.iter().any(|g| w.get(*g).is_zero()) {
        return Err(ExtremalityError::ConditionsViolated("component leaves the support".into()));
    }
    let cols: Vec<ElementId> = component.iter().copied().collect();
    let matrix: Matrix = family
        .blocks()
        .iter()
        .map(|b| {
            cols.iter()
                .map(|g| if b.contains(*g) { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect();
    let Some(d) = kernel(&matrix, cols.len()).into_iter().next() else {
        return Err(ExtremalityError::ConditionsViolated("support columns are independent".into()));
    };
    let slack = cols
        .iter()
        .zip(&d)
        .filter(|(_, x)| !x.is_zero())
        .map(|(g, x)| w.get(*g) / x.abs())
        .min()
        .expect("nonzero kernel vector");
    let eps = &slack / Rational::from_integer(2.into());
    let delta = WeightFunction::from_pairs(cols.iter().zip(&d).map(|(g, x)| (*g, x * &eps)));
    finish(family, w, &delta, eps, slack, Construction::KernelDirection)
}

/// The unique block holding each cycle edge `(c[i], c[i+1])`.
fn cycle_blocks(family: &SetFamily, cycle: &Path) -> Result<Vec<BlockIndex>, ExtremalityError> {
    let v = &cycle.vertices;
    let n = v.len();
    (0..n)
        .map(|i| {
            let shared = family.shared_blocks(v[i], v[(i + 1) % n]);
            match shared.as_slice() {
                [k] => Ok(*k),
                _ => Err(ExtremalityError::ConditionsViolated(format!(
                    "edge {}-{} lies in {} blocks",
                    v[i],
                    v[(i + 1) % n],
                    shared.len()
                ))),
            }
        })
        .collect()
}

fn finish(
    family: &SetFamily,
    w: &WeightFunction,
    delta: &WeightFunction,
    epsilon: Rational,
    slack: Rational,
    construction: Construction,
) -> Result<Witness, ExtremalityError> {
    let witness = Witness { w_plus: w.add(delta), w_minus: w.sub(delta), epsilon, construction, slack };
    witness.check(family, w)?;
    Ok(witness)
}

/// Moves mass `±ŵ` between the two colour classes of a subgraph that meets
/// every block in zero or two vertices and has no odd cycle.
pub fn witness_two_coloring(
    family: &SetFamily,
    w: &WeightFunction,
    subgraph: &BTreeSet<ElementId>,
) -> Result<Witness, ExtremalityError> {
    require_in_s(family, w)?;
    let cond = |m: String| Err(ExtremalityError::ConditionsViolated(m));
    if subgraph.is_empty() {
        return cond("empty subgraph".into());
    }
    if let Some(g) = subgraph.iter().find(|g| w.get(**g).is_zero()) {
        return cond(format!("element {g} is outside the support"));
    }
    for b in family.blocks() {
        let n = b.members.iter().filter(|g| subgraph.contains(g)).count();
        if n != 0 && n != 2 {
            return cond(format!("block {} meets the subgraph in {n} vertices", b.index));
        }
    }
    let sub = build_graph(family).induced_subgraph(subgraph)?;
    let mut colour: BTreeMap<ElementId, bool> = BTreeMap::new();
    for comp in sub.connected_components() {
        let root = *comp.iter().next().expect("nonempty");
        colour.insert(root, true);
        let mut stack = vec![root];
        while let Some(g) = stack.pop() {
            let c = colour[&g];
            for h in sub.neighbors(g) {
                match colour.get(&h) {
                    Some(&d) if d == c => return cond("subgraph contains an odd primitive cycle".into()),
                    Some(_) => {}
                    None => {
                        colour.insert(h, !c);
                        stack.push(h);
                    }
                }
            }
        }
    }
    let eps = slack_over(w, subgraph);
    if eps.is_zero() {
        return cond("subgraph touches the bounds 0 or 1".into());
    }
    let delta = WeightFunction::from_pairs(
        colour.iter().map(|(g, plus)| (*g, if *plus { eps.clone() } else { -eps.clone() })),
    );
    finish(family, w, &delta, eps.clone(), eps, Construction::TwoColoring)
}

/// Signed multiplicative factors spreading a relative change `root_factor`
/// at `root` through a cycle-free region so that every block keeps its sum.
/// Blocks in `excluded` are ignored.
fn tree_factors(
    family: &SetFamily,
    w: &WeightFunction,
    region: &BTreeSet<ElementId>,
    root: ElementId,
    root_factor: &Rational,
    excluded: &BTreeSet<BlockIndex>,
) -> Result<BTreeMap<ElementId, Rational>, ExtremalityError> {
    let sub = build_graph(family).induced_subgraph(region)?;
    let dist = sub.distances_from(root);
    if dist.len() != region.len() {
        return Err(ExtremalityError::ConditionsViolated("region is not connected".into()));
    }
    let mut blocks: Vec<(usize, BlockIndex, ElementId, Vec<ElementId>)> = Vec::new();
    for b in family.blocks().iter().filter(|b| !excluded.contains(&b.index)) {
        let members: Vec<ElementId> = b.members.iter().copied().filter(|g| region.contains(g)).collect();
        if members.is_empty() {
            continue;
        }
        let layer = members.iter().map(|g| dist[g]).min().expect("nonempty");
        let (entries, children): (Vec<ElementId>, Vec<ElementId>) =
            members.into_iter().partition(|g| dist[g] == layer);
        if entries.len() != 1 {
            return Err(ExtremalityError::UnexpectedMultipleEntryVertex { block: b.index, layer });
        }
        if children.is_empty() {
            return Err(ExtremalityError::ConditionsViolated(format!(
                "block {} meets the region only in {}",
                b.index, entries[0]
            )));
        }
        blocks.push((layer, b.index, entries[0], children));
    }
    blocks.sort();
    let mut factor = BTreeMap::from([(root, root_factor.clone())]);
    for (layer, index, entry, children) in blocks {
        let fe = factor.get(&entry).cloned().ok_or(ExtremalityError::UnexpectedMultipleEntryVertex {
            block: index,
            layer,
        })?;
        let we = w.get(entry);
        let fc = -(fe * &we) / (Rational::one() - &we);
        for c in children {
            if factor.insert(c, fc.clone()).is_some_and(|old| old != fc) {
                return Err(ExtremalityError::UnexpectedMultipleEntryVertex { block: index, layer: layer + 1 });
            }
        }
    }
    Ok(factor)
}

/// `min{1/2, (1 - w(g0)) / (2 w(g0))}`.
fn root_bound(w0: &Rational) -> Rational {
    let b = (Rational::one() - w0) / (Rational::from_integer(2.into()) * w0);
    b.min(half())
}

/// Multiplicative perturbation of a cycle-free support component rooted at
/// its smallest label, with alternating signs from one BFS layer to the next.
pub fn witness_tree_propagation(
    family: &SetFamily,
    w: &WeightFunction,
    component: &BTreeSet<ElementId>,
) -> Result<Witness, ExtremalityError> {
    require_in_s(family, w)?;
    let cond = |m: &str| Err(ExtremalityError::ConditionsViolated(m.into()));
    if component.len() < 2 {
        return cond("component has fewer than two vertices");
    }
    if component.iter().any(|g| w.get(*g).is_zero()) {
        return cond("component leaves the support");
    }
    if family.kappa_of(component) > 2 {
        return cond("multiplicity exceeds 2 on the component");
    }
    let sub = build_graph(family).induced_subgraph(component)?;
    if !find_primitive_cycles(&sub, family, Parity::Any).is_empty() {
        return cond("component contains a primitive cycle");
    }
    let g0 = *component.iter().next().expect("nonempty");
    let eps0 = root_bound(&w.get(g0));
    let eps = &eps0 / Rational::from_integer(2.into());
    let factors = tree_factors(family, w, component, g0, &eps, &BTreeSet::new())?;
    let delta = WeightFunction::from_pairs(factors.iter().map(|(g, f)| (*g, f * w.get(*g))));
    let witness = finish(family, w, &delta, eps, eps0, Construction::TreePropagation)?;
    let two = Rational::from_integer(2.into());
    for g in component {
        let bound = &two * w.get(*g);
        for f in [&witness.w_plus, &witness.w_minus] {
            if f.get(*g).is_negative() || f.get(*g) > bound {
                return Err(ExtremalityError::InvalidWitness(format!("value at {g} leaves [0, 2w]")));
            }
        }
    }
    Ok(witness)
}

/// Perturbation around an odd primitive cycle that has a further support
/// vertex `attachment` in one of its blocks.
pub fn witness_cycle_attachment(
    family: &SetFamily,
    w: &WeightFunction,
    cycle: &Path,
    attachment: ElementId,
) -> Result<Witness, ExtremalityError> {
    require_in_s(family, w)?;
    let cond = |m: String| Err(ExtremalityError::ConditionsViolated(m));
    let support = w.support();
    if !cycle.is_cycle || !cycle.is_odd() || is_primitive(family, cycle) != Ok(true) {
        return cond("not an odd primitive cycle".into());
    }
    if cycle.vertices.iter().any(|g| !support.contains(g)) {
        return cond("cycle leaves the support".into());
    }
    if !support.contains(&attachment) || cycle.vertices.contains(&attachment) {
        return cond(format!("attachment {attachment} must be a support vertex off the cycle"));
    }
    let sg = support_graph(family, w);
    let comp = sg
        .connected_components()
        .into_iter()
        .find(|c| c.contains(&attachment))
        .expect("attachment in support");
    if family.kappa_of(&comp) > 2 {
        return cond("multiplicity exceeds 2 on the component".into());
    }
    let comp_graph = sg.induced_subgraph(&comp)?;
    if let Some(even) = find_primitive_cycles(&comp_graph, family, Parity::Even).into_iter().next() {
        return Err(ExtremalityError::EvenCyclePresent(even.vertices));
    }

    let blocks = cycle_blocks(family, cycle)?;
    let gamma0 = family.gamma(attachment).expect("ground element");
    let hits: Vec<usize> = (0..blocks.len()).filter(|i| gamma0.contains(&blocks[*i])).collect();
    let &[pos] = hits.as_slice() else {
        return cond(format!("attachment lies in {} cycle blocks", hits.len()));
    };
    let k1 = blocks[pos];
    let l = cycle.len();
    // g1, g2 span the attachment's cycle block.
    let gs: Vec<ElementId> = (0..l).map(|i| cycle.vertices[(pos + i) % l]).collect();

    let cycle_block_set: BTreeSet<BlockIndex> = blocks.iter().copied().collect();
    let g_gamma: BTreeSet<ElementId> = cycle_block_set
        .iter()
        .flat_map(|k| family.block(*k).expect("block").members.iter().copied())
        .filter(|g| support.contains(g))
        .collect();
    let mut behind: BTreeSet<ElementId> = comp.iter().copied().filter(|g| !g_gamma.contains(g)).collect();
    behind.insert(attachment);
    let region = sg
        .induced_subgraph(&behind)?
        .connected_components()
        .into_iter()
        .find(|c| c.contains(&attachment))
        .expect("attachment in region");

    let mut core: Vec<ElementId> = vec![attachment];
    core.extend(&gs);
    let eps1 = slack_over(w, &core);
    let two = Rational::from_integer(2.into());

    // Additive cycle pattern with unit amplitude at the attachment.
    let cycle_pattern = |amp: &Rational| -> WeightFunction {
        let half_amp = amp / &two;
        let mut d = WeightFunction::new();
        d.set(attachment, amp.clone());
        d.set(gs[0], -half_amp.clone());
        for (i, g) in gs.iter().enumerate().skip(1) {
            // 1-based index i+1: sign (-1)^i
            let s = if i % 2 == 0 { half_amp.clone() } else { -half_amp.clone() };
            d.set(*g, s);
        }
        d
    };

    if region.len() == 1 {
        let others = gamma0.iter().filter(|k| **k != k1).any(|k| {
            family.block(*k).expect("block").members.iter().any(|g| *g != attachment && support.contains(g))
        });
        if others {
            return cond("attachment has support neighbours in the cycle region outside its block".into());
        }
        let eps = &eps1 / &two;
        let delta = cycle_pattern(&eps);
        return finish(family, w, &delta, eps, eps1, Construction::CycleAttachment(AttachmentCase::Isolated));
    }

    let region_graph = sg.induced_subgraph(&region)?;
    let odd_behind = find_primitive_cycles(&region_graph, family, Parity::Odd);
    if odd_behind.is_empty() {
        let w0 = w.get(attachment);
        let eps0 = root_bound(&w0);
        let bound = eps0.clone().min(eps1.clone());
        let eps = &bound / &two;
        let factors = tree_factors(family, w, &region, attachment, &eps, &[k1].into())?;
        let mut delta = cycle_pattern(&(&eps * &w0));
        for (g, f) in &factors {
            if *g != attachment {
                delta.set(*g, f * w.get(*g));
            }
        }
        return finish(family, w, &delta, eps, bound, Construction::CycleAttachment(AttachmentCase::Tree));
    }

    let far = &odd_behind[0];
    let dist = region_graph.distances_from(attachment);
    let target = *far
        .vertices
        .iter()
        .min_by_key(|g| (dist.get(g).copied().unwrap_or(usize::MAX), **g))
        .expect("nonempty");
    let link = shortest_primitive_path(&region_graph, family, attachment, target)
        .ok_or_else(|| ExtremalityError::ConditionsViolated("second cycle unreachable".into()))?;
    let interior: Vec<ElementId> = link.vertices[1..link.len() - 1].to_vec();
    let m = interior.len();
    let before = *interior.last().unwrap_or(&attachment);
    let n = far.len();
    let at = far.vertices.iter().position(|g| *g == target).expect("target on cycle");
    let fwd = far.vertices[(at + 1) % n];
    let forward = !family.shared_blocks(before, target).iter().all(|k| {
        !family.block(*k).expect("block").contains(fwd)
    });
    let far_order: Vec<ElementId> = (0..n)
        .map(|i| if forward { far.vertices[(at + i) % n] } else { far.vertices[(at + n - i) % n] })
        .collect();

    let mut all: Vec<ElementId> = core.clone();
    all.extend(&interior);
    all.extend(&far_order);
    let eps2 = slack_over(w, &all);
    let eps = &eps2 / &two;
    let half_eps = &eps / &two;
    let sign = |p: usize, v: &Rational| if p.is_multiple_of(2) { v.clone() } else { -v.clone() };
    let mut delta = cycle_pattern(&eps);
    for (i, g) in interior.iter().enumerate() {
        delta.set(*g, sign(i + 1, &eps));
    }
    delta.set(far_order[0], sign(m + 1, &half_eps));
    for (i, g) in far_order.iter().enumerate().skip(1) {
        // 1-based index i+1: sign (-1)^(m+i)
        delta.set(*g, sign(m + i, &half_eps));
    }
    finish(family, w, &delta, eps, eps2, Construction::CycleAttachment(AttachmentCase::SecondCycle))
}
