//! Worked examples with their known answers.

use std::collections::BTreeSet;

use blockstoch::instance::{path_json, weights_json};
use blockstoch::rational::{abs, format_rational, ratio};
use blockstoch::{
    build_graph, check_a1, enumerate_primitive_paths, enumerate_vertices, find_primitive_cycles, sup_block_norm,
    support_width, A1Check, ElementId, OracleOptions, Parity, SetFamily, WeightFunction,
};
use serde_json::{json, Value};

use crate::Failure;

pub const NAMES: [&str; 5] = ["ex1.1", "ex1.2", "ex2.5", "rem2.10", "rem3.7"];

struct Report {
    checks: Vec<Value>,
    ok: bool,
}

impl Report {
    fn new() -> Self {
        Report { checks: Vec::new(), ok: true }
    }

    fn expect(&mut self, check: &str, expected: Value, computed: Value) {
        let matches = expected == computed;
        self.ok &= matches;
        self.checks.push(json!({ "check": check, "expected": expected, "computed": computed, "match": matches }));
    }
}

fn family(blocks: Vec<Vec<u64>>) -> SetFamily {
    SetFamily::build(blocks).expect("demo families are well formed")
}

fn ids(v: &[u64]) -> BTreeSet<ElementId> {
    v.iter().map(|g| ElementId(*g)).collect()
}

pub fn run(name: &str, opts: &OracleOptions) -> Result<(Value, bool), Failure> {
    let mut r = Report::new();
    let description = match name {
        "ex1.1" => {
            // Rows {1,2,3},{4,5,6},{7,8,9} and columns: doubly stochastic 3×3
            // matrices, whose vertices are the six permutation matrices.
            let f = family(vec![
                vec![1, 2, 3],
                vec![4, 5, 6],
                vec![7, 8, 9],
                vec![1, 4, 7],
                vec![2, 5, 8],
                vec![3, 6, 9],
            ]);
            let set = enumerate_vertices(&f, opts)?;
            r.expect("vertex count", json!(6), json!(set.len()));
            let permutations = set.vertices.iter().all(|v| v.is_zero_one() && v.support_len() == 3);
            r.expect("every vertex is a permutation matrix", json!(true), json!(permutations));
            "3x3 doubly stochastic matrices"
        }
        "ex1.2" => {
            // Odd cycle of pair blocks: P is empty and S is the single constant 1/2.
            let f = family(vec![vec![1, 2], vec![2, 3], vec![3, 1]]);
            let set = enumerate_vertices(&f, opts)?;
            let half = WeightFunction::constant(1..=3u64, ratio(1, 2));
            r.expect("vertices", json!([weights_json(&half)]), json!(set.vertices.iter().map(weights_json).collect::<Vec<_>>()));
            let zero_one = set.vertices.iter().filter(|v| v.is_zero_one()).count();
            r.expect("0/1 vertices", json!(0), json!(zero_one));
            "odd cycle with n = 3"
        }
        "ex2.5" => {
            // Blocks {g0, gk, gk+1}, k = 1..=m, with label i for g_i.
            let fan = |m: u64| family((1..=m).map(|k| vec![0, k, k + 1]).collect());
            let f = fan(3);
            let g = build_graph(&f);
            r.expect("primitive cycles (m = 3)", json!(0), json!(find_primitive_cycles(&g, &f, Parity::Any).len()));
            r.expect("kappa(g0) (m = 3)", json!(3), json!(f.multiplicity(ElementId(0))?));
            let paths = enumerate_primitive_paths(&g, &f, ElementId(1), ElementId(4));
            let shown: Vec<Value> = paths.iter().map(path_json).collect();
            let expected = [vec![1u64, 0, 4], vec![1, 2, 3, 4]];
            let found: Vec<Vec<u64>> = paths.iter().map(|p| p.vertices.iter().map(|v| v.0).collect()).collect();
            r.expect(
                "primitive paths g1 to g4 include both routes",
                json!(true),
                json!(expected.iter().all(|e| found.contains(e))),
            );
            r.checks.push(json!({ "paths_g1_g4": shown }));
            let f2 = fan(2);
            let a1 = match check_a1(&f2, &ids(&[0, 1, 2, 3]))? {
                A1Check::Ok => json!(null),
                A1Check::Violated(a, b) => json!([a.0, b.0]),
            };
            r.expect("injectivity fails (m = 2)", json!([0, 2]), a1);
            "fan of triangles sharing g0"
        }
        "rem2.10" => {
            // Triangle {2,3},{1,3},{1,2} beside the pair {4,5}.
            let f = family(vec![vec![2, 3], vec![1, 3], vec![1, 2], vec![4, 5]]);
            let sub = ids(&[4, 5]);
            let balanced = f.blocks().iter().all(|b| {
                let hit = sub.iter().filter(|g| b.contains(**g)).count();
                hit == 0 || hit == 2
            });
            r.expect("{4,5} meets each block in 0 or 2 elements", json!(true), json!(balanced));
            let g = build_graph(&f);
            let induced = g.induced_subgraph(&sub).expect("subset of the ground set");
            r.expect(
                "odd primitive cycles inside {4,5}",
                json!(0),
                json!(find_primitive_cycles(&induced, &f, Parity::Odd).len()),
            );
            let set = enumerate_vertices(&f, opts)?;
            let zero_one = set.vertices.iter().filter(|v| v.is_zero_one()).count();
            r.expect("0/1 points (so {4,5} is no difference of two)", json!(0), json!(zero_one));
            r.expect("vertex count", json!(2), json!(set.len()));
            "balanced subgraph that is not a difference support"
        }
        "rem3.7" => {
            // Disjoint blocks of sizes 1..=5 and the uniform point w0.
            let k_max = 5u64;
            let mut next = 1;
            let mut blocks = Vec::new();
            for size in 1..=k_max {
                blocks.push((next..next + size).collect::<Vec<_>>());
                next += size;
            }
            let f = family(blocks);
            let w0 = WeightFunction::from_pairs(
                f.blocks().iter().flat_map(|b| b.members.iter().map(move |g| (*g, ratio(1, b.len() as i64)))),
            );
            let corner = WeightFunction::from_pairs(f.blocks().iter().map(|b| (b.members[0], ratio(1, 1))));
            r.expect("norm of w0", json!("1"), json!(format_rational(&sup_block_norm(&f, &w0))));
            r.expect("width of w0", json!(k_max), json!(support_width(&f, &w0)));
            r.expect("width of a P element", json!(1), json!(support_width(&f, &corner)));
            let per_block: Vec<String> = f
                .blocks()
                .iter()
                .map(|b| {
                    let d = b.members.iter().map(|g| abs(&(w0.get(*g) - corner.get(*g)))).sum();
                    format_rational(&d)
                })
                .collect();
            let expected: Vec<String> =
                (1..=k_max as i64).map(|k| format_rational(&ratio(2 * (k - 1), k))).collect();
            r.expect("block distances to w0", json!(expected), json!(per_block));
            r.expect(
                "norm of w0 - P element",
                json!("8/5"),
                json!(format_rational(&sup_block_norm(&f, &w0.sub(&corner)))),
            );
            "disjoint blocks of growing size"
        }
        other => return Err(Failure::new(crate::INVALID_INPUT, format!("unknown demo `{other}`"))),
    };
    let ok = r.ok;
    Ok((json!({ "demo": name, "description": description, "checks": r.checks, "reproduced": ok }), ok))
}
