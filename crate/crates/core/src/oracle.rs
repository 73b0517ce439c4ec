//! Exact vertex oracle for the polytope `{w ≥ 0 : every block sums to 1}`.
//!
//! Vertices are basic feasible solutions: a point is a vertex exactly when
//! the block-incidence columns of its support are linearly independent.
//! Enumeration walks column subsets in increasing order and prunes as soon
//! as a column depends on the ones already chosen.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::extremality::{classify_extreme, ExtremalityError, ExtremalityVerdict};
use crate::family::{require_in_s, ElementId, FamilyError, SetFamily, WeightFunction};
use crate::linalg::{kernel, rank, solve_unique, EchelonBasis, Matrix};
use crate::rational::{abs, half, int, Rational};

pub const DEFAULT_BUDGET: usize = 1 << 20;
pub const DEFAULT_MAX_DEPTH: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Extremality(#[from] ExtremalityError),
    #[error("instance too large: more than {budget} candidate supports")]
    InstanceTooLarge { budget: usize },
    #[error("decomposition exceeded depth {0}")]
    DepthExceeded(usize),
    #[error("oracle and classifier disagree: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    /// Cap on the number of independent candidate supports visited.
    pub budget: usize,
    pub max_depth: usize,
    pub parallel: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { budget: DEFAULT_BUDGET, max_depth: DEFAULT_MAX_DEPTH, parallel: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    /// Sorted by the weight-function order.
    pub vertices: Vec<WeightFunction>,
    /// The block system has no nonnegative solution at all.
    pub infeasible: bool,
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, w: &WeightFunction) -> bool {
        self.vertices.binary_search(w).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    /// Positive coefficients, sorted by vertex.
    pub terms: Vec<(Rational, WeightFunction)>,
}

impl Decomposition {
    pub fn reconstruct(&self) -> WeightFunction {
        self.terms.iter().fold(WeightFunction::new(), |acc, (c, v)| acc.add(&v.scale(c)))
    }

    pub fn coefficient_sum(&self) -> Rational {
        self.terms.iter().map(|(c, _)| c.clone()).sum()
    }

    /// Checks positivity, unit sum, exact reconstruction and vertexhood.
    pub fn check(&self, family: &SetFamily, w: &WeightFunction) -> Result<(), String> {
        if self.terms.iter().any(|(c, _)| !c.is_positive()) {
            return Err("non-positive coefficient".into());
        }
        if !self.coefficient_sum().is_one() {
            return Err(format!("coefficients sum to {}", self.coefficient_sum()));
        }
        if self.reconstruct() != *w {
            return Err("combination does not reconstruct the input".into());
        }
        for (_, v) in &self.terms {
            match is_vertex(family, v) {
                Ok(true) => {}
                Ok(false) => return Err(format!("term {v} is not a vertex")),
                Err(e) => return Err(e.to_string()),
            }
        }
        Ok(())
    }
}

/// Block-incidence column of `g`, one entry per block in block order.
fn column(family: &SetFamily, g: ElementId) -> Vec<Rational> {
    family
        .blocks()
        .iter()
        .map(|b| if b.contains(g) { Rational::one() } else { Rational::zero() })
        .collect()
}

fn columns_matrix(family: &SetFamily, elements: &[ElementId]) -> Matrix {
    family
        .blocks()
        .iter()
        .map(|b| elements.iter().map(|g| if b.contains(*g) { Rational::one() } else { Rational::zero() }).collect())
        .collect()
}

struct Search<'a> {
    ground: &'a [ElementId],
    columns: Vec<Vec<Rational>>,
    family: &'a SetFamily,
    ones: Vec<Rational>,
    visited: AtomicUsize,
    exhausted: AtomicBool,
    budget: usize,
}

impl Search<'_> {
    fn dfs(&self, basis: &EchelonBasis, chosen: &mut Vec<usize>, next: usize, out: &mut Vec<WeightFunction>) {
        for c in next..self.columns.len() {
            if self.exhausted.load(Ordering::Relaxed) {
                return;
            }
            let Some(extended) = basis.extended(&self.columns[c]) else { continue };
            if self.visited.fetch_add(1, Ordering::Relaxed) >= self.budget {
                self.exhausted.store(true, Ordering::Relaxed);
                return;
            }
            chosen.push(c);
            if extended.spans(&self.ones) {
                if let Some(w) = self.positive_solution(chosen) {
                    out.push(w);
                }
            }
            self.dfs(&extended, chosen, c + 1, out);
            chosen.pop();
        }
    }

    fn positive_solution(&self, chosen: &[usize]) -> Option<WeightFunction> {
        let elements: Vec<ElementId> = chosen.iter().map(|&c| self.ground[c]).collect();
        let x = solve_unique(&columns_matrix(self.family, &elements), &self.ones)?;
        x.iter()
            .all(Signed::is_positive)
            .then(|| WeightFunction::from_pairs(elements.into_iter().zip(x)))
    }
}

/// All vertices of `S`, exactly. The search visits every linearly independent
/// subset of element columns; an independent subset yields a vertex when the
/// all-ones vector has a strictly positive representation on it.
pub fn enumerate_vertices(family: &SetFamily, options: &OracleOptions) -> Result<VertexSet, OracleError> {
    let ground = family.ground();
    let search = Search {
        ground,
        columns: ground.iter().map(|g| column(family, *g)).collect(),
        family,
        ones: vec![Rational::one(); family.block_count()],
        visited: AtomicUsize::new(0),
        exhausted: AtomicBool::new(false),
        budget: options.budget,
    };
    let root = EchelonBasis::new();
    let branch = |first: usize| {
        let mut out = Vec::new();
        if let Some(basis) = root.extended(&search.columns[first]) {
            if search.visited.fetch_add(1, Ordering::Relaxed) >= search.budget {
                search.exhausted.store(true, Ordering::Relaxed);
                return out;
            }
            let mut chosen = vec![first];
            if basis.spans(&search.ones) {
                if let Some(w) = search.positive_solution(&chosen) {
                    out.push(w);
                }
            }
            search.dfs(&basis, &mut chosen, first + 1, &mut out);
        }
        out
    };
    let mut vertices: Vec<WeightFunction> = if options.parallel {
        (0..ground.len()).into_par_iter().flat_map_iter(branch).collect()
    } else {
        (0..ground.len()).flat_map(branch).collect()
    };
    if search.exhausted.load(Ordering::Relaxed) {
        return Err(OracleError::InstanceTooLarge { budget: options.budget });
    }
    vertices.sort();
    vertices.dedup();
    let infeasible = vertices.is_empty();
    Ok(VertexSet { vertices, infeasible })
}

/// Whether the system has any nonnegative solution.
pub fn is_feasible(family: &SetFamily, options: &OracleOptions) -> Result<bool, OracleError> {
    Ok(!enumerate_vertices(family, options)?.infeasible)
}

/// Whether `w ∈ S` is a vertex: its support columns are independent.
pub fn is_vertex(family: &SetFamily, w: &WeightFunction) -> Result<bool, OracleError> {
    require_in_s(family, w)?;
    let support: Vec<ElementId> = w.support().into_iter().collect();
    Ok(rank(&columns_matrix(family, &support)) == support.len())
}

/// A nonzero direction `d` with `w ± t d ∈ S` for small `t > 0`, or `None`
/// when `w` is a vertex.
fn feasible_direction(family: &SetFamily, w: &WeightFunction) -> Result<Option<WeightFunction>, OracleError> {
    let support: Vec<ElementId> = w.support().into_iter().collect();
    let vertex = rank(&columns_matrix(family, &support)) == support.len();
    if family.kappa_max() <= 2 {
        return match classify_extreme(family, w)? {
            ExtremalityVerdict::NotExtreme { witness } if !vertex => Ok(Some(witness.direction(w))),
            ExtremalityVerdict::Extreme { .. } if vertex => Ok(None),
            verdict => Err(OracleError::Inconsistent(format!(
                "rank test says vertex={vertex}, classifier says extreme={} for {w}",
                verdict.is_extreme()
            ))),
        };
    }
    if vertex {
        return Ok(None);
    }
    let k = kernel(&columns_matrix(family, &support), support.len());
    let d = k.first().expect("dependent columns have a kernel");
    Ok(Some(WeightFunction::from_pairs(support.iter().copied().zip(d.iter().cloned()))))
}

/// Largest `t` with `w + t d ≥ 0`.
fn max_step(w: &WeightFunction, d: &WeightFunction) -> Rational {
    d.iter()
        .filter(|(_, v)| v.is_negative())
        .map(|(g, v)| w.get(g) / -v)
        .min()
        .expect("a feasible direction has a negative coordinate")
}

struct Walk<'a> {
    family: &'a SetFamily,
    max_depth: usize,
    memo: HashMap<WeightFunction, BTreeMap<WeightFunction, Rational>>,
}

impl Walk<'_> {
    fn run(&mut self, w: &WeightFunction, depth: usize) -> Result<BTreeMap<WeightFunction, Rational>, OracleError> {
        if let Some(hit) = self.memo.get(w) {
            return Ok(hit.clone());
        }
        if depth > self.max_depth {
            return Err(OracleError::DepthExceeded(self.max_depth));
        }
        let result = match feasible_direction(self.family, w)? {
            None => BTreeMap::from([(w.clone(), Rational::one())]),
            Some(d) => {
                let t_plus = max_step(w, &d);
                let t_minus = max_step(w, &d.scale(&-Rational::one()));
                let p = w.add(&d.scale(&t_plus));
                let q = w.sub(&d.scale(&t_minus));
                let total = &t_plus + &t_minus;
                let lp = &t_minus / &total;
                let lq = &t_plus / &total;
                let mut merged = BTreeMap::new();
                for (lambda, end) in [(lp, p), (lq, q)] {
                    for (v, c) in self.run(&end, depth + 1)? {
                        *merged.entry(v).or_insert_with(Rational::zero) += &lambda * c;
                    }
                }
                merged
            }
        };
        self.memo.insert(w.clone(), result.clone());
        Ok(result)
    }
}

/// Removes terms until the vertices are affinely independent, keeping the
/// combination exact.
fn caratheodory_reduce(mut terms: Vec<(Rational, WeightFunction)>, coords: &[ElementId]) -> Vec<(Rational, WeightFunction)> {
    loop {
        let n = terms.len();
        let mut m: Matrix = coords
            .iter()
            .map(|g| terms.iter().map(|(_, v)| v.get(*g)).collect())
            .collect();
        m.push(vec![Rational::one(); n]);
        let ker = kernel(&m, n);
        let Some(mut mu) = ker.into_iter().next() else { return terms };
        if !mu.iter().any(Signed::is_positive) {
            mu.iter_mut().for_each(|x| *x = -x.clone());
        }
        let theta = terms
            .iter()
            .zip(&mu)
            .filter(|(_, m)| m.is_positive())
            .map(|((c, _), m)| c / m)
            .min()
            .expect("kernel vector has a positive entry");
        terms = terms
            .into_iter()
            .zip(&mu)
            .map(|((c, v), m)| (c - &theta * m, v))
            .filter(|(c, _)| c.is_positive())
            .collect();
    }
}

/// Writes `w ∈ S` as a convex combination of vertices by walking to both
/// ends of a feasible line through each non-vertex point.
pub fn decompose(family: &SetFamily, w: &WeightFunction, options: &OracleOptions) -> Result<Decomposition, OracleError> {
    require_in_s(family, w)?;
    let mut walk = Walk { family, max_depth: options.max_depth, memo: HashMap::new() };
    let merged = walk.run(w, 0)?;
    let terms: Vec<(Rational, WeightFunction)> = merged.into_iter().map(|(v, c)| (c, v)).collect();
    let mut terms = caratheodory_reduce(terms, family.ground());
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(Decomposition { terms })
}

/// `‖w‖_S`: the largest block sum of `|w|`.
pub fn sup_block_norm(family: &SetFamily, w: &WeightFunction) -> Rational {
    family
        .blocks()
        .iter()
        .map(|b| b.members.iter().map(|g| abs(&w.get(*g))).sum::<Rational>())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// The largest number of nonzero entries of `w` in a single block.
pub fn support_width(family: &SetFamily, w: &WeightFunction) -> usize {
    family
        .blocks()
        .iter()
        .map(|b| b.members.iter().filter(|g| !w.get(**g).is_zero()).count())
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrossValidation {
    pub vertices: usize,
    pub vertices_confirmed: usize,
    /// Vertices whose values all lie in {0, 1/2, 1}.
    pub half_integral: usize,
    pub interior_samples: usize,
    pub interior_confirmed: usize,
    pub discrepancies: Vec<String>,
}

impl CrossValidation {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// A random strict convex combination of at least two distinct vertices.
pub fn random_mixture<R: Rng>(vertices: &[WeightFunction], rng: &mut R) -> Option<WeightFunction> {
    if vertices.len() < 2 {
        return None;
    }
    let k = rng.gen_range(2..=vertices.len().min(4));
    let picked: Vec<&WeightFunction> = vertices.choose_multiple(rng, k).collect();
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=9)).collect();
    let total = int(weights.iter().sum());
    Some(
        picked
            .iter()
            .zip(&weights)
            .fold(WeightFunction::new(), |acc, (v, c)| acc.add(&v.scale(&(int(*c) / &total)))),
    )
}

/// Differential test of the classifier against the rank oracle on one
/// family of multiplicity at most two.
pub fn cross_validate(
    family: &SetFamily,
    seed: u64,
    samples: usize,
    options: &OracleOptions,
) -> Result<CrossValidation, OracleError> {
    let set = enumerate_vertices(family, options)?;
    let mut report = CrossValidation { vertices: set.len(), ..Default::default() };
    let allowed = [Rational::zero(), half(), Rational::one()];
    for v in &set.vertices {
        match classify_extreme(family, v) {
            Ok(verdict) if verdict.is_extreme() => report.vertices_confirmed += 1,
            Ok(_) => report.discrepancies.push(format!("vertex {v} classified as not extreme")),
            Err(e) => report.discrepancies.push(format!("vertex {v}: {e}")),
        }
        if v.iter().all(|(_, x)| allowed.contains(x)) {
            report.half_integral += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let Some(w) = random_mixture(&set.vertices, &mut rng) else { break };
        report.interior_samples += 1;
        match classify_extreme(family, &w) {
            Ok(ExtremalityVerdict::NotExtreme { witness }) => match witness.check(family, &w) {
                Ok(()) => report.interior_confirmed += 1,
                Err(e) => report.discrepancies.push(format!("mixture {w}: {e}")),
            },
            Ok(_) => report.discrepancies.push(format!("mixture {w} classified as extreme")),
            Err(e) => report.discrepancies.push(format!("mixture {w}: {e}")),
        }
    }
    Ok(report)
}
