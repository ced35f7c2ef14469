//! JSON density specs: `{"family": "<name>", "params": {...}, "support": [lo, hi]}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DensityModel, Family, SupportInterval};
use crate::error::{CccdError, Result};

/// Serialisable description of a [`DensityModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub support: [f64; 2],
}

impl DensitySpec {
    pub(crate) fn from_model(m: &DensityModel) -> Self {
        let mut params = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            params.insert(k.to_string(), v);
        };
        match m.family() {
            Family::ShrunkUniform { delta }
            | Family::GapUniform { delta }
            | Family::TwoStep { delta }
            | Family::ThreeStep { delta }
            | Family::PieceQuadratic { delta } => put("delta", delta),
            Family::Linear { a } | Family::GeneralLinear { a } => put("a", a),
            Family::TruncatedNormal { mu, sigma } => {
                put("mu", mu);
                put("sigma", sigma);
            }
            Family::QPower { q } => put("q", q),
            Family::Beta { nu1, nu2 } => {
                put("nu1", nu1);
                put("nu2", nu2);
            }
            Family::Uniform | Family::ArcSine | Family::AbsSine | Family::SquareCdf => {}
        }
        let s = m.support();
        DensitySpec {
            family: m.name().to_string(),
            params,
            support: [s.lo, s.hi],
        }
    }
}

fn err(field: impl Into<String>, reason: impl Into<String>) -> CccdError {
    CccdError::Spec {
        field: field.into(),
        reason: reason.into(),
    }
}

fn param_names(family: &str) -> Option<&'static [&'static str]> {
    Some(match family {
        "uniform" | "arcsine" | "abs-sine" | "square-cdf" => &[],
        "shrunk-uniform" | "gap-uniform" | "two-step" | "three-step" | "piece-quadratic" => &["delta"],
        "linear" | "general-linear" => &["a"],
        "truncated-normal" => &["mu", "sigma"],
        "q-power" => &["q"],
        "beta" => &["nu1", "nu2"],
        _ => return None,
    })
}

pub(super) fn parse(text: &str) -> Result<DensityModel> {
    let v: Value = serde_json::from_str(text).map_err(|e| err("<root>", format!("not valid JSON: {e}")))?;
    from_value(&v)
}

/// Builds a model from an already parsed JSON value.
pub fn from_value(v: &Value) -> Result<DensityModel> {
    let obj = v.as_object().ok_or_else(|| err("<root>", "expected a JSON object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "family" | "params" | "support") {
            return Err(err(key.clone(), "unknown field"));
        }
    }
    let family = obj
        .get("family")
        .ok_or_else(|| err("family", "missing"))?
        .as_str()
        .ok_or_else(|| err("family", "expected a string"))?;
    let names = param_names(family).ok_or_else(|| err("family", format!("unknown family `{family}`")))?;

    let mut params = BTreeMap::new();
    if let Some(p) = obj.get("params") {
        let p = p.as_object().ok_or_else(|| err("params", "expected an object"))?;
        for (k, val) in p {
            if !names.contains(&k.as_str()) {
                return Err(err(format!("params.{k}"), format!("not a parameter of `{family}`")));
            }
            let x = val.as_f64().ok_or_else(|| err(format!("params.{k}"), "expected a number"))?;
            params.insert(k.as_str(), x);
        }
    }
    let get = |k: &'static str| -> Result<f64> { params.get(k).copied().ok_or_else(|| err(format!("params.{k}"), "missing")) };

    let support = match obj.get("support") {
        None => None,
        Some(s) => {
            let arr = s.as_array().filter(|a| a.len() == 2).ok_or_else(|| err("support", "expected [lo, hi]"))?;
            let lo = arr[0].as_f64().ok_or_else(|| err("support[0]", "expected a number"))?;
            let hi = arr[1].as_f64().ok_or_else(|| err("support[1]", "expected a number"))?;
            Some(SupportInterval::new(lo, hi).map_err(|e| err("support", e.to_string()))?)
        }
    };

    let fam = match family {
        "uniform" => Family::Uniform,
        "shrunk-uniform" => Family::ShrunkUniform { delta: get("delta")? },
        "gap-uniform" => Family::GapUniform { delta: get("delta")? },
        "two-step" => Family::TwoStep { delta: get("delta")? },
        "three-step" => Family::ThreeStep { delta: get("delta")? },
        "linear" => Family::Linear { a: get("a")? },
        "general-linear" => Family::GeneralLinear { a: get("a")? },
        "truncated-normal" => Family::TruncatedNormal {
            mu: get("mu")?,
            sigma: get("sigma")?,
        },
        "q-power" => Family::QPower { q: get("q")? },
        "piece-quadratic" => Family::PieceQuadratic { delta: get("delta")? },
        "arcsine" => Family::ArcSine,
        "abs-sine" => Family::AbsSine,
        "beta" => Family::Beta {
            nu1: get("nu1")?,
            nu2: get("nu2")?,
        },
        "square-cdf" => Family::SquareCdf,
        _ => unreachable!("family names checked above"),
    };
    let support = match (fam, support) {
        (Family::GeneralLinear { .. }, None) => return Err(err("support", "required for general-linear")),
        (_, Some(s)) => s,
        (_, None) => SupportInterval::UNIT,
    };
    DensityModel::on_support(fam, support).map_err(|e| match e {
        CccdError::InvalidParameter { name, reason } => {
            let field = if name == "support" || name == "family" { name.to_string() } else { format!("params.{name}") };
            err(field, reason)
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(text: &str) -> String {
        match DensityModel::from_json(text).unwrap_err() {
            CccdError::Spec { field, .. } => field,
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn round_trip() {
        let m = DensityModel::from_json(r#"{"family":"beta","params":{"nu1":4,"nu2":1}}"#).unwrap();
        assert_eq!(m.family(), Family::Beta { nu1: 4.0, nu2: 1.0 });
        let text = serde_json::to_string(&m.to_spec()).unwrap();
        assert_eq!(DensityModel::from_json(&text).unwrap(), m);
        let g = DensityModel::from_json(r#"{"family":"general-linear","params":{"a":0.5},"support":[1,3]}"#).unwrap();
        assert_eq!(g.support(), SupportInterval { lo: 1.0, hi: 3.0 });
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("[1]"), "<root>");
        assert_eq!(field_of(r#"{"params":{}}"#), "family");
        assert_eq!(field_of(r#"{"family":"cauchy"}"#), "family");
        assert_eq!(field_of(r#"{"family":"linear"}"#), "params.a");
        assert_eq!(field_of(r#"{"family":"linear","params":{"a":"x"}}"#), "params.a");
        assert_eq!(field_of(r#"{"family":"linear","params":{"a":3}}"#), "params.a");
        assert_eq!(field_of(r#"{"family":"linear","params":{"a":1,"b":2}}"#), "params.b");
        assert_eq!(field_of(r#"{"family":"uniform","support":[0]}"#), "support");
        assert_eq!(field_of(r#"{"family":"uniform","support":[0,2]}"#), "support");
        assert_eq!(field_of(r#"{"family":"general-linear","params":{"a":1}}"#), "support");
        assert_eq!(field_of(r#"{"family":"uniform","extra":1}"#), "extra");
    }
}
