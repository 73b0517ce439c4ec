//! Seeded random families for fuzzing and differential tests.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::family::{ElementId, SetFamily, WeightFunction};
use crate::oracle::{enumerate_vertices, random_mixture, OracleError, OracleOptions};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedInstance {
    pub family: SetFamily,
    /// A point of `S`, present exactly when the family is feasible.
    pub weights: Option<WeightFunction>,
    pub infeasible: bool,
}

/// A random family on labels `1..=elements` with at most `blocks` distinct
/// blocks and every multiplicity at most `kappa_max`. Every label is covered
/// when `blocks > 0`. Duplicate blocks are dropped, so fewer blocks may come
/// back.
pub fn random_family<R: Rng>(elements: usize, blocks: usize, kappa_max: usize, rng: &mut R) -> SetFamily {
    assert!(kappa_max >= 1, "kappa_max must be at least 1");
    let mut sets: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); blocks];
    let mut load = vec![0usize; elements + 1];
    if blocks > 0 {
        let mut order: Vec<u64> = (1..=elements as u64).collect();
        order.shuffle(rng);
        for g in order {
            sets[rng.gen_range(0..blocks)].insert(g);
            load[g as usize] = 1;
        }
    }
    for set in sets.iter_mut().filter(|s| s.is_empty()) {
        let free: Vec<u64> = (1..=elements as u64).filter(|g| load[*g as usize] < kappa_max).collect();
        if let Some(&g) = free.choose(rng) {
            set.insert(g);
            load[g as usize] += 1;
        }
    }
    for g in 1..=elements as u64 {
        while load[g as usize] < kappa_max && rng.gen_bool(0.5) {
            let open: Vec<usize> = (0..blocks).filter(|b| !sets[*b].is_empty() && !sets[*b].contains(&g)).collect();
            let Some(&b) = open.choose(rng) else { break };
            sets[b].insert(g);
            load[g as usize] += 1;
        }
    }
    let mut seen = BTreeSet::new();
    let kept: Vec<Vec<ElementId>> = sets
        .into_iter()
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .map(|s| s.into_iter().map(ElementId).collect())
        .collect();
    SetFamily::build(kept).expect("blocks are distinct and nonempty")
}

/// Deterministic under `seed`. Feasible families come with a random convex
/// combination of their vertices.
pub fn gen_random(
    elements: usize,
    blocks: usize,
    kappa_max: usize,
    seed: u64,
    options: &OracleOptions,
) -> Result<GeneratedInstance, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = random_family(elements, blocks, kappa_max, &mut rng);
    let vertices = enumerate_vertices(&family, options)?;
    if vertices.infeasible {
        return Ok(GeneratedInstance { family, weights: None, infeasible: true });
    }
    let weights = random_mixture(&vertices.vertices, &mut rng).unwrap_or_else(|| vertices.vertices[0].clone());
    Ok(GeneratedInstance { family, weights: Some(weights), infeasible: false })
}
