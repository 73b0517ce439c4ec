//! Fixtures and brute-force reference routines shared by the integration
//! tests. Nothing here calls the vertex oracle or the classifier.

#![allow(dead_code)]

use std::collections::BTreeSet;

use blockstoch::graph::Path;
use blockstoch::linalg::solve_unique;
use blockstoch::{classify_membership, ElementId, SetFamily, WeightFunction};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

pub fn w(pairs: &[(u64, Q)]) -> WeightFunction {
    WeightFunction::from_pairs(pairs.iter().map(|(g, v)| (*g, v.clone())))
}

/// Rows then columns of an `m × m` matrix; cell `(i, j)` is `i·m + j + 1`.
pub fn square(m: u64) -> SetFamily {
    let label = |i: u64, j: u64| i * m + j + 1;
    let rows = (0..m).map(|i| (0..m).map(|j| label(i, j)).collect::<Vec<_>>());
    let cols = (0..m).map(|j| (0..m).map(|i| label(i, j)).collect::<Vec<_>>());
    SetFamily::build(rows.chain(cols).collect::<Vec<_>>()).unwrap()
}

/// `Ω_i = {i, i+1}` with indices taken cyclically.
pub fn odd_cycle(n: u64) -> SetFamily {
    SetFamily::build((1..=n).map(|i| vec![i, i % n + 1]).collect::<Vec<_>>()).unwrap()
}

/// A triangle of pair blocks next to a separate pair block.
pub fn triangle_and_pair() -> SetFamily {
    SetFamily::build(vec![vec![2u64, 3], vec![1, 3], vec![1, 2], vec![4, 5]]).unwrap()
}

/// Two rows and three columns: more blocks than a square allows.
pub fn two_by_three() -> SetFamily {
    SetFamily::build(vec![vec![1u64, 2, 3], vec![4, 5, 6], vec![1, 4], vec![2, 5], vec![3, 6]]).unwrap()
}

/// Pairwise disjoint blocks of sizes `1..=k`, labelled consecutively.
pub fn disjoint_blocks(k: u64) -> SetFamily {
    let mut next = 1;
    let mut blocks = Vec::new();
    for size in 1..=k {
        blocks.push((next..next + size).collect::<Vec<_>>());
        next += size;
    }
    SetFamily::build(blocks).unwrap()
}

pub fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut next = p.clone();
            next.insert(pos, m - 1);
            out.push(next);
        }
    }
    out.sort();
    out
}

/// Every 0/1 member of `S`, by trying all subsets of the ground set.
pub fn brute_force_p(family: &SetFamily) -> BTreeSet<WeightFunction> {
    let ground = family.ground();
    assert!(ground.len() <= 20);
    (0u32..1 << ground.len())
        .map(|mask| {
            WeightFunction::from_pairs(
                ground.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, g)| (*g, Q::one())),
            )
        })
        .filter(|f| classify_membership(family, f).unwrap().in_p)
        .collect()
}

/// Vertices by plain subset enumeration: every support whose columns admit a
/// unique, strictly positive solution of the block equations.
pub fn brute_force_vertices(family: &SetFamily) -> BTreeSet<WeightFunction> {
    let ground = family.ground();
    assert!(ground.len() <= 16);
    let ones = vec![Q::one(); family.block_count()];
    let mut out = BTreeSet::new();
    for mask in 1u32..1 << ground.len() {
        let support: Vec<ElementId> =
            ground.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, g)| *g).collect();
        if support.len() > family.block_count() {
            continue;
        }
        let a: Vec<Vec<Q>> = family
            .blocks()
            .iter()
            .map(|b| support.iter().map(|g| if b.contains(*g) { Q::one() } else { Q::zero() }).collect())
            .collect();
        if let Some(x) = solve_unique(&a, &ones) {
            if x.iter().all(Signed::is_positive) {
                out.insert(WeightFunction::from_pairs(support.into_iter().zip(x)));
            }
        }
    }
    out
}

/// The midpoint conditions checked from scratch.
pub fn valid_midpoint(family: &SetFamily, w: &WeightFunction, plus: &WeightFunction, minus: &WeightFunction) -> bool {
    let two = Q::from_integer(2.into());
    let in_s = |f: &WeightFunction| {
        f.iter().all(|(_, v)| !v.is_negative())
            && family.blocks().iter().all(|b| b.members.iter().map(|g| f.get(*g)).sum::<Q>().is_one())
    };
    plus != minus
        && family.ground().iter().all(|g| plus.get(*g) + minus.get(*g) == &two * w.get(*g))
        && in_s(plus)
        && in_s(minus)
}

fn cycle_edges(c: &[ElementId]) -> BTreeSet<(ElementId, ElementId)> {
    (0..c.len())
        .map(|i| {
            let (a, b) = (c[i], c[(i + 1) % c.len()]);
            (a.min(b), a.max(b))
        })
        .collect()
}

/// The four chain properties of a cycle decomposition, checked directly.
pub fn chain_properties(family: &SetFamily, input: &Path, pieces: &[Path]) -> Result<(), String> {
    let adjacent = |a: ElementId, b: ElementId| family.blocks().iter().any(|k| k.contains(a) && k.contains(b));
    for (i, p) in pieces.iter().enumerate() {
        let v = &p.vertices;
        let simple = v.iter().all(|a| v.iter().filter(|b| *b != a && adjacent(*a, **b)).count() <= 2);
        let spread = family.blocks().iter().all(|k| v.iter().filter(|g| k.contains(**g)).count() <= 2);
        let triangle = v.len() == 3 && family.blocks().iter().any(|k| v.iter().all(|g| k.contains(*g)));
        if !(simple && spread) && !triangle {
            return Err(format!("(1) piece {i} {v:?}"));
        }
    }
    let union: BTreeSet<ElementId> = pieces.iter().flat_map(|p| p.vertices.iter().copied()).collect();
    let expected: BTreeSet<ElementId> = input.vertices.iter().copied().collect();
    if union != expected {
        return Err("(2) vertex sets differ".into());
    }
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let a: BTreeSet<ElementId> = pieces[i].vertices.iter().copied().collect();
            let b: BTreeSet<ElementId> = pieces[j].vertices.iter().copied().collect();
            let common = a.intersection(&b).count();
            if j == i + 1 {
                let shared_edges =
                    cycle_edges(&pieces[i].vertices).intersection(&cycle_edges(&pieces[j].vertices)).count();
                if common != 2 || shared_edges != 1 {
                    return Err(format!("(3) pieces {i},{j} share {common} vertices and {shared_edges} edges"));
                }
            } else if common > 1 {
                return Err(format!("(4) pieces {i},{j} share {common} vertices"));
            }
        }
    }
    Ok(())
}

/// All cycles with distinct vertices in the associated graph, each listed
/// once, up to `max_len` vertices.
pub fn all_vertex_distinct_cycles(family: &SetFamily, max_len: usize) -> Vec<Path> {
    let ground = family.ground().to_vec();
    let adjacent = |a: ElementId, b: ElementId| a != b && family.blocks().iter().any(|k| k.contains(a) && k.contains(b));
    let mut out = Vec::new();
    fn extend(
        path: &mut Vec<ElementId>,
        ground: &[ElementId],
        max_len: usize,
        adjacent: &dyn Fn(ElementId, ElementId) -> bool,
        out: &mut Vec<Path>,
    ) {
        let start = path[0];
        let last = *path.last().unwrap();
        if path.len() >= 3 && adjacent(last, start) && path[1] < last {
            out.push(Path::cycle(path.clone()));
        }
        if path.len() == max_len {
            return;
        }
        for &g in ground {
            if g > start && !path.contains(&g) && adjacent(last, g) {
                path.push(g);
                extend(path, ground, max_len, adjacent, out);
                path.pop();
            }
        }
    }
    for &s in &ground {
        extend(&mut vec![s], &ground, max_len, &adjacent, &mut out);
    }
    out
}
