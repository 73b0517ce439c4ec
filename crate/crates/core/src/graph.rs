//! The graph joining elements that share a block, with path and cycle tools.
//!
//! A path is *simple* when each of its vertices is adjacent to at most two
//! other vertices of the path, and *primitive* when in addition no block
//! holds more than two of its vertices. Cycles are stored without repeating
//! the first vertex.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::family::{BlockIndex, ElementId, SetFamily};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("path is not simple")]
    NotSimple,
    #[error("not a cycle with distinct, consecutively adjacent vertices")]
    NotSimpleCycle,
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(ElementId),
    #[error("cycle decomposition property {property} failed: {detail}")]
    InternalPropertyViolation { property: u8, detail: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociatedGraph {
    vertices: BTreeSet<ElementId>,
    adjacency: BTreeMap<ElementId, BTreeSet<ElementId>>,
    edge_labels: BTreeMap<(ElementId, ElementId), Vec<BlockIndex>>,
}

fn edge_key(a: ElementId, b: ElementId) -> (ElementId, ElementId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn build_graph(family: &SetFamily) -> AssociatedGraph {
    let vertices: BTreeSet<ElementId> = family.ground().iter().copied().collect();
    let mut adjacency: BTreeMap<ElementId, BTreeSet<ElementId>> =
        vertices.iter().map(|g| (*g, BTreeSet::new())).collect();
    let mut edge_labels: BTreeMap<(ElementId, ElementId), Vec<BlockIndex>> = BTreeMap::new();
    for b in family.blocks() {
        for (i, &x) in b.members.iter().enumerate() {
            for &y in &b.members[i + 1..] {
                adjacency.get_mut(&x).expect("vertex").insert(y);
                adjacency.get_mut(&y).expect("vertex").insert(x);
                edge_labels.entry((x, y)).or_default().push(b.index);
            }
        }
    }
    AssociatedGraph { vertices, adjacency, edge_labels }
}

impl AssociatedGraph {
    pub fn vertices(&self) -> &BTreeSet<ElementId> {
        &self.vertices
    }

    pub fn contains(&self, g: ElementId) -> bool {
        self.vertices.contains(&g)
    }

    pub fn neighbors(&self, g: ElementId) -> impl Iterator<Item = ElementId> + '_ {
        self.adjacency.get(&g).into_iter().flatten().copied()
    }

    pub fn degree(&self, g: ElementId) -> usize {
        self.adjacency.get(&g).map_or(0, BTreeSet::len)
    }

    pub fn adjacent(&self, a: ElementId, b: ElementId) -> bool {
        self.adjacency.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn edge_labels(&self, a: ElementId, b: ElementId) -> Option<&[BlockIndex]> {
        self.edge_labels.get(&edge_key(a, b)).map(Vec::as_slice)
    }

    pub fn edges(&self) -> impl Iterator<Item = (ElementId, ElementId, &[BlockIndex])> {
        self.edge_labels.iter().map(|((a, b), l)| (*a, *b, l.as_slice()))
    }

    pub fn edge_count(&self) -> usize {
        self.edge_labels.len()
    }

    /// Subgraph on `subset` keeping every edge of this graph between its vertices.
    pub fn induced_subgraph(&self, subset: &BTreeSet<ElementId>) -> Result<AssociatedGraph, GraphError> {
        if let Some(g) = subset.iter().find(|g| !self.contains(**g)) {
            return Err(GraphError::UnknownVertex(*g));
        }
        let adjacency = subset
            .iter()
            .map(|g| {
                let n = self.adjacency[g].iter().copied().filter(|h| subset.contains(h)).collect();
                (*g, n)
            })
            .collect();
        let edge_labels = self
            .edge_labels
            .iter()
            .filter(|((a, b), _)| subset.contains(a) && subset.contains(b))
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        Ok(AssociatedGraph { vertices: subset.clone(), adjacency, edge_labels })
    }

    /// Components ordered by their smallest label.
    pub fn connected_components(&self) -> Vec<BTreeSet<ElementId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &self.vertices {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(g) = queue.pop_front() {
                for h in self.neighbors(g) {
                    if seen.insert(h) {
                        comp.insert(h);
                        queue.push_back(h);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// BFS distances from `source`.
    pub fn distances_from(&self, source: ElementId) -> BTreeMap<ElementId, usize> {
        let mut dist = BTreeMap::from([(source, 0)]);
        let mut queue = VecDeque::from([source]);
        while let Some(g) = queue.pop_front() {
            let d = dist[&g];
            for h in self.neighbors(g) {
                dist.entry(h).or_insert_with(|| {
                    queue.push_back(h);
                    d + 1
                });
            }
        }
        dist
    }

    /// One `g h : k1,k2` line per edge.
    pub fn edge_list_dump(&self) -> String {
        let mut out = String::new();
        for (a, b, labels) in self.edges() {
            let l: Vec<String> = labels.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{} {} : {}", a, b, l.join(","));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Path {
    pub vertices: Vec<ElementId>,
    pub is_cycle: bool,
}

impl Path {
    pub fn open(vertices: Vec<ElementId>) -> Self {
        Path { vertices, is_cycle: false }
    }

    pub fn cycle(vertices: Vec<ElementId>) -> Self {
        Path { vertices, is_cycle: true }
    }

    pub fn from_labels(labels: &[u64], is_cycle: bool) -> Self {
        Path { vertices: labels.iter().map(|&g| ElementId(g)).collect(), is_cycle }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        match (self.is_cycle, self.vertices.len()) {
            (_, 0) => 0,
            (true, n) => n,
            (false, n) => n - 1,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.vertices.len() % 2 == 1
    }

    pub fn vertex_set(&self) -> BTreeSet<ElementId> {
        self.vertices.iter().copied().collect()
    }

    /// Edges as ordered pairs `(min, max)`, including the closing edge of a cycle.
    pub fn edges(&self) -> Vec<(ElementId, ElementId)> {
        let n = self.vertices.len();
        let mut out: Vec<_> = self.vertices.windows(2).map(|w| edge_key(w[0], w[1])).collect();
        if self.is_cycle && n >= 3 {
            out.push(edge_key(self.vertices[n - 1], self.vertices[0]));
        }
        out
    }

    /// Rotation and reflection giving the smallest label first and the
    /// smaller of its two neighbours second.
    pub fn canonical_cycle(&self) -> Path {
        let n = self.vertices.len();
        if !self.is_cycle || n < 3 {
            return self.clone();
        }
        let (pos, _) = self.vertices.iter().enumerate().min_by_key(|(_, g)| **g).expect("nonempty");
        let fwd: Vec<ElementId> = (0..n).map(|i| self.vertices[(pos + i) % n]).collect();
        let bwd: Vec<ElementId> = (0..n).map(|i| self.vertices[(pos + n - i) % n]).collect();
        Path::cycle(if fwd[1] <= bwd[1] { fwd } else { bwd })
    }
}

/// Consecutive vertices are adjacent, vertices are distinct, and each vertex
/// has at most two neighbours on the path.
pub fn is_simple(family: &SetFamily, path: &Path) -> bool {
    let v = &path.vertices;
    let n = v.len();
    if n == 0 || v.iter().collect::<BTreeSet<_>>().len() != n {
        return false;
    }
    if path.is_cycle && n < 3 {
        return false;
    }
    if v.iter().any(|g| !family.contains(*g)) {
        return false;
    }
    if v.windows(2).any(|w| !family.adjacent(w[0], w[1])) {
        return false;
    }
    if path.is_cycle && !family.adjacent(v[n - 1], v[0]) {
        return false;
    }
    v.iter().all(|&g| v.iter().filter(|&&h| family.adjacent(g, h)).count() <= 2)
}

fn blocks_within_limit(family: &SetFamily, vertices: &[ElementId], limit: usize) -> bool {
    let mut counts: BTreeMap<BlockIndex, usize> = BTreeMap::new();
    for g in vertices {
        for &k in family.gamma(*g).unwrap_or(&[]) {
            let c = counts.entry(k).or_default();
            *c += 1;
            if *c > limit {
                return false;
            }
        }
    }
    true
}

/// No block contains more than two vertices of the (simple) path.
pub fn is_primitive(family: &SetFamily, path: &Path) -> Result<bool, GraphError> {
    if !is_simple(family, path) {
        return Err(GraphError::NotSimple);
    }
    Ok(blocks_within_limit(family, &path.vertices, 2))
}

/// Lexicographically smallest among the shortest paths from `from` to `to`.
/// Shortest paths have no shortcuts, so the result is primitive.
pub fn shortest_primitive_path(
    graph: &AssociatedGraph,
    family: &SetFamily,
    from: ElementId,
    to: ElementId,
) -> Option<Path> {
    if from == to || !graph.contains(from) || !graph.contains(to) {
        return None;
    }
    let dist = graph.distances_from(to);
    let mut d = *dist.get(&from)?;
    let mut path = vec![from];
    let mut cur = from;
    while d > 0 {
        cur = graph
            .neighbors(cur)
            .find(|h| dist.get(h) == Some(&(d - 1)))
            .expect("BFS predecessor exists");
        path.push(cur);
        d -= 1;
    }
    let path = Path::open(path);
    debug_assert_eq!(is_primitive(family, &path), Ok(true));
    Some(path)
}

/// Every primitive path from `from` to `to`, in lexicographic order.
pub fn enumerate_primitive_paths(
    graph: &AssociatedGraph,
    family: &SetFamily,
    from: ElementId,
    to: ElementId,
) -> Vec<Path> {
    let mut out = Vec::new();
    if from == to || !graph.contains(from) || !graph.contains(to) {
        return out;
    }
    let mut path = vec![from];
    primitive_path_dfs(graph, family, to, &mut path, &mut out);
    out.sort();
    out
}

fn primitive_path_dfs(
    graph: &AssociatedGraph,
    family: &SetFamily,
    to: ElementId,
    path: &mut Vec<ElementId>,
    out: &mut Vec<Path>,
) {
    let last = *path.last().expect("nonempty");
    let first = path[0];
    for v in graph.neighbors(last) {
        if path.contains(&v) {
            continue;
        }
        let interior = if path.len() >= 2 { &path[1..path.len() - 1] } else { &[][..] };
        if interior.iter().any(|p| graph.adjacent(*p, v)) {
            continue;
        }
        if path.len() >= 2 && graph.adjacent(first, v) && v != to {
            continue;
        }
        path.push(v);
        if blocks_within_limit(family, path, 2) {
            if v == to {
                out.push(Path::open(path.clone()));
            } else {
                primitive_path_dfs(graph, family, to, path, out);
            }
        }
        path.pop();
    }
}

/// Exactly one primitive path joins every pair of vertices of `component`.
pub fn unique_primitive_paths(
    graph: &AssociatedGraph,
    family: &SetFamily,
    component: &BTreeSet<ElementId>,
) -> bool {
    let sub = match graph.induced_subgraph(component) {
        Ok(s) => s,
        Err(_) => return false,
    };
    let v: Vec<ElementId> = component.iter().copied().collect();
    v.iter().enumerate().all(|(i, &a)| {
        v[i + 1..].iter().all(|&b| enumerate_primitive_paths(&sub, family, a, b).len() == 1)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Any,
    Odd,
    Even,
}

impl Parity {
    fn accepts(self, len: usize) -> bool {
        match self {
            Parity::Any => true,
            Parity::Odd => len % 2 == 1,
            Parity::Even => len.is_multiple_of(2),
        }
    }
}

/// All primitive cycles in canonical form, sorted by length then labels.
pub fn find_primitive_cycles(graph: &AssociatedGraph, family: &SetFamily, parity: Parity) -> Vec<Path> {
    enumerate_induced_cycles(graph, Some(family), parity)
}

/// All simple (chordless) cycles in canonical form, sorted by length then labels.
pub fn find_simple_cycles(graph: &AssociatedGraph) -> Vec<Path> {
    enumerate_induced_cycles(graph, None, Parity::Any)
}

fn enumerate_induced_cycles(
    graph: &AssociatedGraph,
    family: Option<&SetFamily>,
    parity: Parity,
) -> Vec<Path> {
    let starts: Vec<ElementId> = graph.vertices().iter().copied().collect();
    let mut out: Vec<Path> = starts
        .par_iter()
        .flat_map_iter(|&s| {
            let mut found = Vec::new();
            let mut path = vec![s];
            cycle_dfs(graph, family, &mut path, &mut found);
            found
        })
        .filter(|c| parity.accepts(c.len()))
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.vertices.cmp(&b.vertices)));
    out
}

fn cycle_dfs(
    graph: &AssociatedGraph,
    family: Option<&SetFamily>,
    path: &mut Vec<ElementId>,
    out: &mut Vec<Path>,
) {
    let s = path[0];
    let last = *path.last().expect("nonempty");
    for v in graph.neighbors(last) {
        if v <= s || path.contains(&v) {
            continue;
        }
        let interior = if path.len() >= 2 { &path[1..path.len() - 1] } else { &[][..] };
        if interior.iter().any(|p| graph.adjacent(*p, v)) {
            continue;
        }
        path.push(v);
        let ok = family.is_none_or(|f| blocks_within_limit(f, path, 2));
        if ok {
            let closes = path.len() >= 3 && graph.adjacent(s, v);
            if closes {
                if path[1] < v {
                    out.push(Path::cycle(path.clone()));
                }
            } else {
                cycle_dfs(graph, family, path, out);
            }
        }
        path.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleDecomposition {
    pub cycles: Vec<Path>,
    /// Edge shared by `cycles[i]` and `cycles[i + 1]`.
    pub shared_edges: Vec<(ElementId, ElementId)>,
}

fn is_closed_walk(graph: &AssociatedGraph, cycle: &Path) -> bool {
    let v = &cycle.vertices;
    let n = v.len();
    cycle.is_cycle
        && n >= 3
        && v.iter().collect::<BTreeSet<_>>().len() == n
        && v.iter().all(|g| graph.contains(*g))
        && (0..n).all(|i| graph.adjacent(v[i], v[(i + 1) % n]))
}

/// Splits a cycle with distinct vertices into a chain of smaller cycles by
/// repeatedly cutting off the shortest cycle through the current first edge
/// that uses a single shortcut. Chordless input comes back unchanged.
///
/// The chain properties are checked before returning. They cannot always be
/// met when the input has chords; that case is reported as
/// `InternalPropertyViolation`.
pub fn decompose_cycle(
    graph: &AssociatedGraph,
    family: &SetFamily,
    cycle: &Path,
) -> Result<CycleDecomposition, GraphError> {
    if !is_closed_walk(graph, cycle) {
        return Err(GraphError::NotSimpleCycle);
    }
    let mut current = cycle.vertices.clone();
    let mut cycles = Vec::new();
    let mut shared_edges = Vec::new();
    loop {
        let m = current.len();
        let mut best: Option<(Vec<ElementId>, usize, usize)> = None;
        for j in 1..m {
            for l in j + 1..=m {
                let (gj, gl) = (current[j], current[l % m]);
                if !graph.adjacent(gj, gl) {
                    continue;
                }
                let mut cand: Vec<ElementId> = current[..=j].to_vec();
                cand.extend_from_slice(&current[l.min(m)..]);
                if cand.len() < 3 {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((b, _, _)) => (cand.len(), &cand) < (b.len(), b),
                };
                if better {
                    best = Some((cand, j, l));
                }
            }
        }
        let (piece, j, l) = best.expect("the cycle itself is a candidate");
        if l == j + 1 {
            cycles.push(Path::cycle(piece));
            break;
        }
        let gl = current[l % m];
        let mut rest = vec![gl];
        rest.extend_from_slice(&current[j..l]);
        shared_edges.push(edge_key(current[j], gl));
        cycles.push(Path::cycle(piece));
        current = rest;
    }
    let decomposition = CycleDecomposition { cycles, shared_edges };
    verify_cycle_decomposition(family, cycle, &decomposition)?;
    Ok(decomposition)
}

fn violation(property: u8, detail: String) -> GraphError {
    GraphError::InternalPropertyViolation { property, detail }
}

/// Checks the four chain properties of a cycle decomposition.
pub fn verify_cycle_decomposition(
    family: &SetFamily,
    input: &Path,
    d: &CycleDecomposition,
) -> Result<(), GraphError> {
    for c in &d.cycles {
        let primitive = is_primitive(family, c) == Ok(true);
        let block_triangle = c.len() == 3
            && family.blocks().iter().any(|b| c.vertices.iter().all(|g| b.contains(*g)));
        if !primitive && !block_triangle {
            return Err(violation(1, format!("piece {:?} is neither primitive nor a block triangle", c.vertices)));
        }
    }
    let union: BTreeSet<ElementId> = d.cycles.iter().flat_map(|c| c.vertices.iter().copied()).collect();
    if union != input.vertex_set() {
        return Err(violation(2, "vertex union differs from the input".into()));
    }
    for (i, pair) in d.cycles.windows(2).enumerate() {
        let common: BTreeSet<ElementId> = pair[0].vertex_set().intersection(&pair[1].vertex_set()).copied().collect();
        let e0: BTreeSet<_> = pair[0].edges().into_iter().collect();
        let shared: Vec<_> = pair[1].edges().into_iter().filter(|e| e0.contains(e)).collect();
        if common.len() != 2 || shared.len() != 1 {
            return Err(violation(
                3,
                format!("pieces {} and {} share {} vertices and {} edges", i, i + 1, common.len(), shared.len()),
            ));
        }
    }
    for i in 0..d.cycles.len() {
        for k in i + 2..d.cycles.len() {
            let common = d.cycles[i].vertex_set().intersection(&d.cycles[k].vertex_set()).count();
            if common > 1 {
                return Err(violation(4, format!("pieces {} and {} share {} vertices", i, k, common)));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bipartition {
    pub plus: BTreeSet<BlockIndex>,
    pub minus: BTreeSet<BlockIndex>,
}

/// Two-colours the blocks so that blocks sharing an element get opposite
/// sides. Requires multiplicity at most two and no odd primitive cycle.
pub fn bipartition(family: &SetFamily) -> Option<Bipartition> {
    if family.kappa_max() > 2 {
        return None;
    }
    let graph = build_graph(family);
    if !find_primitive_cycles(&graph, family, Parity::Odd).is_empty() {
        return None;
    }
    let mut side: BTreeMap<BlockIndex, bool> = BTreeMap::new();
    for start in family.block_indices() {
        if side.contains_key(&start) {
            continue;
        }
        side.insert(start, true);
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            let s = side[&k];
            let block = family.block(k).expect("block");
            for g in &block.members {
                for &other in family.gamma(*g).expect("member") {
                    if other == k {
                        continue;
                    }
                    match side.get(&other) {
                        Some(&t) if t == s => return None,
                        Some(_) => {}
                        None => {
                            side.insert(other, !s);
                            queue.push_back(other);
                        }
                    }
                }
            }
        }
    }
    let plus: BTreeSet<BlockIndex> = side.iter().filter(|(_, s)| **s).map(|(k, _)| *k).collect();
    let minus: BTreeSet<BlockIndex> = side.iter().filter(|(_, s)| !**s).map(|(k, _)| *k).collect();
    for group in [&plus, &minus] {
        let members: Vec<&BlockIndex> = group.iter().collect();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                let ba = family.block(**a).expect("block");
                let bb = family.block(**b).expect("block");
                assert!(ba.members.iter().all(|g| !bb.contains(*g)), "same-side blocks intersect");
            }
        }
    }
    Some(Bipartition { plus, minus })
}
