//! JSON instance files and report documents.
//!
//! An instance is an object with `blocks` (a list of label lists), an
//! optional `ground` list and optional `weights` mapping labels to exact
//! rationals. Weights are strings such as `"1/2"` or JSON integers; JSON
//! floats are rejected. Reports render every rational as a `p/q` string and
//! list elements and blocks in ascending order.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::extension::{Approximation, ExtensionReport, ExtensionResult};
use crate::extremality::{ExtremalityVerdict, Witness};
use crate::family::{
    A1Check, A2Report, CountingIdentity, ElementId, FamilyError, MembershipReport, SetFamily, WeightFunction,
};
use crate::graph::{CycleDecomposition, Path};
use crate::oracle::{CrossValidation, Decomposition, VertexSet};
use crate::rational::{format_rational, parse_rational, ParseRationalError, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("invalid instance: {0}")]
    Schema(String),
    #[error("weight of element {label}: {source}")]
    Weight { label: String, source: ParseRationalError },
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub family: SetFamily,
    pub weights: Option<WeightFunction>,
}

fn schema<T>(message: impl Into<String>) -> Result<T, InstanceError> {
    Err(InstanceError::Schema(message.into()))
}

fn label(value: &Value, context: &str) -> Result<ElementId, InstanceError> {
    match value.as_u64() {
        Some(g) => Ok(ElementId(g)),
        None => schema(format!("{context}: expected a nonnegative integer label, found {value}")),
    }
}

fn weight(label_text: &str, value: &Value) -> Result<Rational, InstanceError> {
    let text = match value {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        Value::Number(n) => {
            return Err(InstanceError::Weight {
                label: label_text.to_string(),
                source: ParseRationalError::Decimal(n.to_string()),
            })
        }
        other => return schema(format!("weight of element {label_text} must be a string or integer, found {other}")),
    };
    parse_rational(&text).map_err(|source| InstanceError::Weight { label: label_text.to_string(), source })
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| InstanceError::Json(e.to_string()))?;
    let Value::Object(obj) = doc else { return schema("top level must be an object") };
    for key in obj.keys() {
        if !matches!(key.as_str(), "ground" | "blocks" | "weights" | "infeasible") {
            return schema(format!("unknown field `{key}`"));
        }
    }
    // Informational flag written by the generator.
    if !matches!(obj.get("infeasible"), None | Some(Value::Bool(_))) {
        return schema("field `infeasible` must be a boolean");
    }
    let Some(Value::Array(raw_blocks)) = obj.get("blocks") else {
        return schema("field `blocks` must be a list of lists");
    };
    let mut blocks = Vec::with_capacity(raw_blocks.len());
    for (i, b) in raw_blocks.iter().enumerate() {
        let Value::Array(members) = b else { return schema(format!("block {} must be a list", i + 1)) };
        let members = members
            .iter()
            .map(|g| label(g, &format!("block {}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push((i + 1, members));
    }
    let family = match obj.get("ground") {
        None | Some(Value::Null) => SetFamily::from_indexed(blocks)?,
        Some(Value::Array(ground)) => {
            let ground = ground.iter().map(|g| label(g, "ground")).collect::<Result<BTreeSet<_>, _>>()?;
            SetFamily::with_ground(&ground.into_iter().collect::<Vec<_>>(), blocks)?
        }
        Some(_) => return schema("field `ground` must be a list"),
    };
    let weights = match obj.get("weights") {
        None | Some(Value::Null) => None,
        Some(Value::Object(map)) => {
            let mut w = WeightFunction::new();
            for (k, v) in map {
                let g = k
                    .parse::<u64>()
                    .map(ElementId)
                    .or_else(|_| schema(format!("weight key `{k}` is not an integer label")))?;
                if !family.contains(g) {
                    return Err(FamilyError::UnknownElement(g).into());
                }
                w.set(g, weight(k, v)?);
            }
            Some(w)
        }
        Some(_) => return schema("field `weights` must be an object"),
    };
    Ok(Instance { family, weights })
}

pub fn rational_json(value: &Rational) -> Value {
    Value::String(format_rational(value))
}

/// `{"label": "p/q", ...}` over the nonzero entries, in label order.
pub fn weights_json(w: &WeightFunction) -> Value {
    Value::Object(w.iter().map(|(g, v)| (g.0.to_string(), rational_json(v))).collect())
}

pub fn instance_json(family: &SetFamily, weights: Option<&WeightFunction>) -> Value {
    let mut obj = Map::new();
    obj.insert("ground".into(), json!(family.ground().iter().map(|g| g.0).collect::<Vec<_>>()));
    obj.insert(
        "blocks".into(),
        json!(family.blocks().iter().map(|b| b.members.iter().map(|g| g.0).collect::<Vec<_>>()).collect::<Vec<_>>()),
    );
    if let Some(w) = weights {
        obj.insert("weights".into(), weights_json(w));
    }
    Value::Object(obj)
}

fn labels(set: impl IntoIterator<Item = ElementId>) -> Value {
    json!(set.into_iter().map(|g| g.0).collect::<Vec<_>>())
}

pub fn path_json(path: &Path) -> Value {
    json!({ "vertices": labels(path.vertices.iter().copied()), "cycle": path.is_cycle })
}

pub fn membership_json(report: &MembershipReport) -> Value {
    json!({
        "block_sums": Value::Object(report.block_sums.iter().map(|(k, s)| (k.to_string(), rational_json(s))).collect()),
        "in_S": report.in_s,
        "in_S0": report.in_s0,
        "in_P": report.in_p,
        "in_P0": report.in_p0,
        "violation": report.violation.as_ref().map(|v| v.to_string()),
    })
}

pub fn a1_json(check: &A1Check) -> Value {
    match check {
        A1Check::Ok => json!({ "holds": true }),
        A1Check::Violated(g, h) => json!({ "holds": false, "pair": [g.0, h.0] }),
    }
}

pub fn a2_json(report: &A2Report) -> Value {
    json!({
        "holds": report.ok(),
        "m": report.m,
        "covered_by_first_m": report.covered_by_first_m,
        "contained_blocks": report.contained_blocks,
        "horizon_limited": report.horizon_limited,
    })
}

pub fn counting_json(identity: &CountingIdentity) -> Value {
    json!({
        "holds": identity.holds(),
        "block_count": identity.block_count,
        "weighted_sum": rational_json(&identity.weighted_sum),
        "bound": rational_json(&identity.bound),
    })
}

pub fn witness_json(witness: &Witness) -> Value {
    json!({
        "construction": format!("{:?}", witness.construction),
        "epsilon": rational_json(&witness.epsilon),
        "slack": rational_json(&witness.slack),
        "w_plus": weights_json(&witness.w_plus),
        "w_minus": weights_json(&witness.w_minus),
    })
}

pub fn verdict_json(verdict: &ExtremalityVerdict) -> Value {
    match verdict {
        ExtremalityVerdict::Extreme { components } => json!({
            "verdict": "Extreme",
            "components": components
                .iter()
                .map(|(c, kind)| json!({ "elements": labels(c.iter().copied()), "kind": format!("{kind:?}") }))
                .collect::<Vec<_>>(),
        }),
        ExtremalityVerdict::NotExtreme { witness } => json!({
            "verdict": "NotExtreme",
            "witness": witness_json(witness),
        }),
        ExtremalityVerdict::Unsupported { reason } => json!({ "verdict": "Unsupported", "reason": reason }),
    }
}

pub fn vertex_set_json(set: &VertexSet) -> Value {
    json!({
        "count": set.len(),
        "infeasible": set.infeasible,
        "vertices": set.vertices.iter().map(weights_json).collect::<Vec<_>>(),
    })
}

pub fn decomposition_json(d: &Decomposition) -> Value {
    json!({
        "terms": d
            .terms
            .iter()
            .map(|(c, v)| json!({ "coefficient": rational_json(c), "vertex": weights_json(v) }))
            .collect::<Vec<_>>(),
    })
}

pub fn cycle_decomposition_json(d: &CycleDecomposition) -> Value {
    json!({
        "cycles": d.cycles.iter().map(path_json).collect::<Vec<_>>(),
        "shared_edges": d.shared_edges.iter().map(|(a, b)| [a.0, b.0]).collect::<Vec<_>>(),
    })
}

pub fn cross_validation_json(r: &CrossValidation) -> Value {
    json!({
        "passed": r.passed(),
        "vertices": r.vertices,
        "vertices_confirmed": r.vertices_confirmed,
        "half_integral": r.half_integral,
        "interior_samples": r.interior_samples,
        "interior_confirmed": r.interior_confirmed,
        "discrepancies": r.discrepancies,
    })
}

pub fn extension_json(r: &ExtensionResult, report: Option<&ExtensionReport>) -> Value {
    let mut obj = Map::new();
    obj.insert("generator".into(), json!(r.generator));
    obj.insert("n".into(), json!(r.n));
    obj.insert("horizon".into(), json!(r.horizon));
    obj.insert("complete".into(), json!(r.complete));
    obj.insert("extended".into(), weights_json(&r.extended));
    obj.insert("steps".into(), serde_json::to_value(&r.steps).expect("steps serialize"));
    obj.insert("chi_prime".into(), labels(r.chi_prime.support()));
    obj.insert("chi_double_prime".into(), labels(r.chi_double_prime.support()));
    obj.insert("saturated".into(), json!(r.saturated));
    if let Some(rep) = report {
        obj.insert(
            "verification".into(),
            json!({
                "c1": rep.c1,
                "c2": rep.c2,
                "c3": rep.c3,
                "c4": rep.c4,
                "domination": rep.domination,
                "chi_in_P0": rep.chi_in_p0,
                "vertex_shadow": rep.vertex_shadow,
                "violations": rep.violations,
            }),
        );
    }
    Value::Object(obj)
}

pub fn approximation_json(a: &Approximation) -> Value {
    json!({
        "n": a.n,
        "horizon": a.horizon,
        "terms": a
            .terms
            .iter()
            .map(|t| json!({
                "coefficient": rational_json(&t.coefficient),
                "vertex": weights_json(&t.vertex),
                "extended": weights_json(&t.extended),
            }))
            .collect::<Vec<_>>(),
        "block_discrepancy": Value::Object(
            a.block_discrepancy.iter().map(|(k, d)| (k.to_string(), rational_json(d))).collect()
        ),
        "max_element_discrepancy": rational_json(&a.max_element_discrepancy()),
    })
}

/// Pretty-printed document with a trailing newline.
pub fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{half, int};

    #[test]
    fn parses_blocks_and_weights() {
        let inst = parse_instance(r#"{"blocks": [[1,2],[2,3],[3,1]], "weights": {"1": "1/2", "2": "1/2", "3": "2/4"}}"#)
            .unwrap();
        assert_eq!(inst.family.block_count(), 3);
        assert_eq!(inst.weights.unwrap(), WeightFunction::constant([1u64, 2, 3], half()));
    }

    #[test]
    fn integer_weights_are_accepted() {
        let inst = parse_instance(r#"{"blocks": [[1,2]], "weights": {"1": 1, "2": 0}}"#).unwrap();
        assert_eq!(inst.weights.unwrap().get(ElementId(1)), int(1));
    }

    #[test]
    fn float_weights_are_rejected() {
        let err = parse_instance(r#"{"blocks": [[1,2]], "weights": {"1": 0.5, "2": "1/2"}}"#).unwrap_err();
        assert!(matches!(err, InstanceError::Weight { source: ParseRationalError::Decimal(_), .. }));
        let err = parse_instance(r#"{"blocks": [[1,2]], "weights": {"1": "0.5"}}"#).unwrap_err();
        assert!(matches!(err, InstanceError::Weight { .. }));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse_instance("[1]"), Err(InstanceError::Schema(_))));
        assert!(matches!(parse_instance(r#"{"blocks": [[1,-2]]}"#), Err(InstanceError::Schema(_))));
        assert!(matches!(parse_instance(r#"{"blocks": [[1]], "extra": 1}"#), Err(InstanceError::Schema(_))));
        assert!(matches!(parse_instance("{"), Err(InstanceError::Json(_))));
        assert!(matches!(
            parse_instance(r#"{"blocks": [[1]], "weights": {"7": 1}}"#),
            Err(InstanceError::Family(FamilyError::UnknownElement(ElementId(7))))
        ));
    }

    #[test]
    fn round_trip_through_json() {
        let f = SetFamily::build(vec![vec![1u64, 2], vec![2, 10]]).unwrap();
        let w = WeightFunction::from_pairs([(1u64, int(1)), (10u64, int(1))]);
        let text = render(&instance_json(&f, Some(&w)));
        let back = parse_instance(&text).unwrap();
        assert_eq!(back.family, f);
        assert_eq!(back.weights.unwrap(), w);
        let spread = WeightFunction::from_pairs([(2u64, int(1)), (10u64, int(1))]);
        let keys: Vec<String> = match weights_json(&spread) {
            Value::Object(m) => m.keys().cloned().collect(),
            _ => unreachable!(),
        };
        assert_eq!(keys, vec!["2", "10"]);
    }
}
