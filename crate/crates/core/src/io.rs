//! Canonical JSON for instances, distributions and the various results.
//! Objects are emitted with sorted keys and rationals as `"p/q"` strings.

use serde_json::{json, Map, Value};

use crate::allocator::{RunLog, TreeVerification};
use crate::bvn::MatchingLottery;
use crate::eating::{EatingTrace, FractionalAllocation};
use crate::envy::CycleLottery;
use crate::error::{Error, Result};
use crate::fairness::{AllocationDistribution, FairnessReport};
use crate::itemset::ItemSet;
use crate::model::{Allocation, Instance, Valuation, ValuationClass};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::twoagents::{Frontier, Partition2};

/// Pretty-printed JSON; keys come out sorted because `serde_json` maps are
/// ordered.
pub fn to_canonical_string(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("values always serialize")
}

fn r(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

fn rs(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(r).collect())
}

fn set(s: &ItemSet) -> Value {
    json!(s.to_vec())
}

fn serialized<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

pub fn valuation_to_json(v: &Valuation, m: usize) -> Value {
    match v {
        Valuation::Additive { values } => json!({"type": "additive", "values": rs(values)}),
        Valuation::UnitDemand { values } => json!({"type": "unit_demand", "values": rs(values)}),
        Valuation::BudgetAdditive { values, cap } => {
            json!({"type": "budget_additive", "values": rs(values), "cap": r(cap)})
        }
        Valuation::Table { domain, entries } => {
            let mut map = Map::new();
            for (mask, e) in entries.iter().enumerate() {
                if let Some(x) = e {
                    map.insert(mask.to_string(), r(x));
                }
            }
            let mut obj = json!({"type": "table", "entries": Value::Object(map)});
            if *domain != m {
                obj["domain"] = json!(domain);
            }
            obj
        }
    }
}

pub fn instance_to_json(instance: &Instance) -> Value {
    json!({
        "n": instance.n(),
        "m": instance.m(),
        "class": instance.class().as_str(),
        "valuations": instance.valuations().iter().map(|v| valuation_to_json(v, instance.m())).collect::<Vec<_>>(),
    })
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Json(format!("missing field {key:?}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| Error::Json(format!("{what} must be a non-negative integer")))
}

fn as_rational(v: &Value, what: &str) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => parse_rational(&n.to_string()),
        _ => Err(Error::Json(format!("{what} must be a rational string like \"p/q\""))),
    }
}

fn as_rationals(v: &Value, what: &str) -> Result<Vec<Rational>> {
    v.as_array()
        .ok_or_else(|| Error::Json(format!("{what} must be an array")))?
        .iter()
        .map(|x| as_rational(x, what))
        .collect()
}

fn as_set(v: &Value, what: &str) -> Result<ItemSet> {
    let items = v.as_array().ok_or_else(|| Error::Json(format!("{what} must be an array of items")))?;
    let mut s = ItemSet::new();
    for x in items {
        if !s.insert(as_usize(x, what)?) {
            return Err(Error::Json(format!("{what} lists an item twice")));
        }
    }
    Ok(s)
}

pub fn valuation_from_json(v: &Value, m: usize) -> Result<Valuation> {
    let kind = field(v, "type")?.as_str().ok_or_else(|| Error::Json("valuation type must be a string".into()))?;
    match kind {
        "additive" => Ok(Valuation::Additive { values: as_rationals(field(v, "values")?, "values")? }),
        "unit_demand" => Ok(Valuation::UnitDemand { values: as_rationals(field(v, "values")?, "values")? }),
        "budget_additive" => Ok(Valuation::BudgetAdditive {
            values: as_rationals(field(v, "values")?, "values")?,
            cap: as_rational(field(v, "cap")?, "cap")?,
        }),
        "table" => {
            let domain = match v.get("domain") {
                Some(d) => as_usize(d, "domain")?,
                None => m,
            };
            let entries = field(v, "entries")?
                .as_object()
                .ok_or_else(|| Error::Json("table entries must be an object".into()))?;
            let mut pairs = Vec::with_capacity(entries.len());
            for (key, x) in entries {
                let mask: u64 =
                    key.parse().map_err(|_| Error::Json(format!("table key {key:?} is not a bitmask integer")))?;
                pairs.push((mask, as_rational(x, "table entry")?));
            }
            Valuation::table(domain, pairs)
        }
        other => Err(Error::Json(format!("unknown valuation type {other:?}"))),
    }
}

pub fn instance_from_json(v: &Value) -> Result<Instance> {
    let n = as_usize(field(v, "n")?, "n")?;
    let m = as_usize(field(v, "m")?, "m")?;
    let class = ValuationClass::parse(
        field(v, "class")?.as_str().ok_or_else(|| Error::Json("class must be a string".into()))?,
    )?;
    let vals = field(v, "valuations")?.as_array().ok_or_else(|| Error::Json("valuations must be an array".into()))?;
    if vals.len() != n {
        return Err(Error::MalformedInstance(format!("n = {n} but {} valuations given", vals.len())));
    }
    let valuations = vals.iter().map(|x| valuation_from_json(x, m)).collect::<Result<Vec<_>>>()?;
    Instance::new(m, valuations, class)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    instance_from_json(&serde_json::from_str(text)?)
}

pub fn allocation_to_json(a: &Allocation) -> Value {
    json!({
        "bundles": a.bundles().iter().map(set).collect::<Vec<_>>(),
        "unallocated": set(a.unallocated()),
    })
}

pub fn allocation_from_json(v: &Value, m: usize) -> Result<Allocation> {
    let bundles = field(v, "bundles")?
        .as_array()
        .ok_or_else(|| Error::Json("bundles must be an array".into()))?
        .iter()
        .map(|b| as_set(b, "bundle"))
        .collect::<Result<Vec<_>>>()?;
    let a = Allocation::from_bundles(bundles, m)?;
    if let Some(u) = v.get("unallocated") {
        if &as_set(u, "unallocated")? != a.unallocated() {
            return Err(Error::Json("unallocated items do not match the bundles".into()));
        }
    }
    Ok(a)
}

pub fn distribution_to_json(d: &AllocationDistribution) -> Value {
    let support: Vec<Value> = d
        .support()
        .iter()
        .map(|(p, a)| {
            let mut entry = allocation_to_json(a);
            entry["p"] = r(p);
            entry
        })
        .collect();
    json!({ "support": support })
}

pub fn distribution_from_json(v: &Value, m: usize) -> Result<AllocationDistribution> {
    let support = field(v, "support")?.as_array().ok_or_else(|| Error::Json("support must be an array".into()))?;
    let entries = support
        .iter()
        .map(|e| Ok((as_rational(field(e, "p")?, "p")?, allocation_from_json(e, m)?)))
        .collect::<Result<Vec<_>>>()?;
    AllocationDistribution::new(entries)
}

pub fn parse_distribution(text: &str, m: usize) -> Result<AllocationDistribution> {
    distribution_from_json(&serde_json::from_str(text)?, m)
}

pub fn report_to_json(report: &FairnessReport) -> Value {
    serialized(report)
}

pub fn lottery_to_json(lottery: &MatchingLottery) -> Value {
    distribution_to_json(&lottery.to_distribution())
}

pub fn fractional_to_json(z: &FractionalAllocation) -> Value {
    Value::Array(z.rows().iter().map(|row| rs(row)).collect())
}

pub fn cycle_lottery_to_json(c: &CycleLottery) -> Value {
    let stationary: Map<String, Value> = c.stationary.iter().map(|(k, p)| (k.to_string(), r(p))).collect();
    json!({
        "cycles": c.cycles.iter().map(|(p, cyc)| json!({"p": r(p), "cycle": cyc})).collect::<Vec<_>>(),
        "stationary": Value::Object(stationary),
        "flow": c.flow.iter().map(|(&(i, j), w)| json!({"arc": [i, j], "mass": r(w)})).collect::<Vec<_>>(),
    })
}

pub fn trace_to_json(trace: &EatingTrace) -> Value {
    serialized(trace)
}

pub fn run_log_to_json(log: &RunLog) -> Value {
    serialized(log)
}

pub fn verification_to_json(v: &TreeVerification) -> Value {
    Value::Object(
        v.checks
            .iter()
            .map(|c| (c.name.to_string(), json!({"passed": c.passed, "witness": c.witness})))
            .collect(),
    )
}

pub fn partition_to_json(instance: &Instance, p: &Partition2) -> Value {
    json!({
        "owner": p.owner,
        "parts": [set(&p.parts.0), set(&p.parts.1)],
        "values": [r(&instance.value(p.owner, &p.parts.0)), r(&instance.value(p.owner, &p.parts.1))],
        "gap": r(&p.gap(instance)),
        "efx_ratio": p.efx_ratio(instance).to_string(),
    })
}

pub fn frontier_to_json(f: &Frontier) -> Value {
    json!({
        "best_alpha": f.best_alpha.to_string(),
        "exact": f.exact,
        "candidates": f.candidates,
        "witness": f.witness.as_ref().map(distribution_to_json),
    })
}
