use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::ast::mask;
use crate::frontend::Design;

/// Per-cycle inputs and golden outputs. The clock is implicit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stimulus {
    pub cycles: Vec<StimulusCycle>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StimulusCycle {
    pub inputs: BTreeMap<String, u64>,
    pub expected_outputs: BTreeMap<String, u64>,
}

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("stimulus JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cycle {cycle}: `{signal}` has unparsable value {text:?}")]
    BadValue {
        cycle: usize,
        signal: String,
        text: String,
    },
    #[error("cycle {cycle}: missing value for input `{signal}`")]
    MissingInput { cycle: usize, signal: String },
    #[error("cycle {cycle}: missing expected value for output `{signal}`")]
    MissingExpected { cycle: usize, signal: String },
    #[error("cycle {cycle}: `{signal}` is not a {role} of the design")]
    UnknownSignal {
        cycle: usize,
        signal: String,
        role: &'static str,
    },
    #[error("cycle {cycle}: value {value} does not fit the {width}-bit signal `{signal}`")]
    TooWide {
        cycle: usize,
        signal: String,
        value: u64,
        width: u32,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStimulus {
    cycles: Vec<RawCycle>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCycle {
    inputs: BTreeMap<String, String>,
    expected_outputs: BTreeMap<String, String>,
}

/// Parses `0b…`, `0x…` or decimal text; `_` separators are allowed.
pub fn parse_value(text: &str) -> Option<u64> {
    let t = text.trim().replace('_', "");
    let (digits, radix) = if let Some(r) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        (r, 2)
    } else if let Some(r) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        (r, 16)
    } else {
        (t.as_str(), 10)
    };
    if digits.is_empty() {
        return None;
    }
    u64::from_str_radix(digits, radix).ok()
}

fn parse_map(
    cycle: usize,
    raw: BTreeMap<String, String>,
) -> Result<BTreeMap<String, u64>, StimulusError> {
    raw.into_iter()
        .map(|(signal, text)| match parse_value(&text) {
            Some(v) => Ok((signal, v)),
            None => Err(StimulusError::BadValue {
                cycle,
                signal,
                text,
            }),
        })
        .collect()
}

impl Stimulus {
    pub fn from_json(text: &str) -> Result<Self, StimulusError> {
        let raw: RawStimulus = serde_json::from_str(text)?;
        let cycles = raw
            .cycles
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                Ok(StimulusCycle {
                    inputs: parse_map(i, c.inputs)?,
                    expected_outputs: parse_map(i, c.expected_outputs)?,
                })
            })
            .collect::<Result<_, StimulusError>>()?;
        Ok(Self { cycles })
    }

    /// Canonical pretty JSON with decimal values and sorted keys.
    pub fn to_json(&self) -> String {
        let raw = RawStimulus {
            cycles: self
                .cycles
                .iter()
                .map(|c| RawCycle {
                    inputs: c
                        .inputs
                        .iter()
                        .map(|(k, v)| (k.clone(), v.to_string()))
                        .collect(),
                    expected_outputs: c
                        .expected_outputs
                        .iter()
                        .map(|(k, v)| (k.clone(), v.to_string()))
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("stimulus serializes");
        s.push('\n');
        s
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Checks coverage and widths against `design`. A value for the clock
    /// is tolerated and ignored.
    pub fn check(&self, design: &Design) -> Result<(), StimulusError> {
        let clocks = design.clocks();
        for (cycle, c) in self.cycles.iter().enumerate() {
            for sig in design
                .inputs()
                .filter(|s| !clocks.contains(s.name.as_str()))
            {
                if !c.inputs.contains_key(&sig.name) {
                    return Err(StimulusError::MissingInput {
                        cycle,
                        signal: sig.name.clone(),
                    });
                }
            }
            for sig in design.outputs() {
                if !c.expected_outputs.contains_key(&sig.name) {
                    return Err(StimulusError::MissingExpected {
                        cycle,
                        signal: sig.name.clone(),
                    });
                }
            }
            let ins: Vec<_> = design.inputs().collect();
            let outs: Vec<_> = design.outputs().collect();
            for (map, decls, role) in [
                (&c.inputs, &ins, "input"),
                (&c.expected_outputs, &outs, "output"),
            ] {
                for (name, &value) in map {
                    let Some(decl) = decls.iter().find(|d| &d.name == name) else {
                        return Err(StimulusError::UnknownSignal {
                            cycle,
                            signal: name.clone(),
                            role,
                        });
                    };
                    if value & !mask(decl.width()) != 0 {
                        return Err(StimulusError::TooWide {
                            cycle,
                            signal: name.clone(),
                            value,
                            width: decl.width(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    #[test]
    fn value_formats() {
        assert_eq!(parse_value("0b1010"), Some(10));
        assert_eq!(parse_value("0xff"), Some(255));
        assert_eq!(parse_value("42"), Some(42));
        assert_eq!(parse_value("0b1_0"), Some(2));
        assert_eq!(parse_value("0x"), None);
        assert_eq!(parse_value("z"), None);
    }

    #[test]
    fn parses_and_checks() {
        let d =
            parse_source("module m(input [1:0] a, output y); assign y = a[0]; endmodule").unwrap();
        let s = Stimulus::from_json(
            r#"{"cycles":[{"inputs":{"a":"0b11"},"expected_outputs":{"y":"1"}}]}"#,
        )
        .unwrap();
        assert_eq!(s.cycles[0].inputs["a"], 3);
        s.check(&d).unwrap();

        let wide = Stimulus::from_json(
            r#"{"cycles":[{"inputs":{"a":"4"},"expected_outputs":{"y":"1"}}]}"#,
        )
        .unwrap();
        assert!(matches!(
            wide.check(&d),
            Err(StimulusError::TooWide { width: 2, .. })
        ));
        let missing =
            Stimulus::from_json(r#"{"cycles":[{"inputs":{},"expected_outputs":{"y":"1"}}]}"#)
                .unwrap();
        assert!(matches!(
            missing.check(&d),
            Err(StimulusError::MissingInput { .. })
        ));
        let no_exp =
            Stimulus::from_json(r#"{"cycles":[{"inputs":{"a":"1"},"expected_outputs":{}}]}"#)
                .unwrap();
        assert!(matches!(
            no_exp.check(&d),
            Err(StimulusError::MissingExpected { .. })
        ));
    }

    #[test]
    fn key_order_is_irrelevant() {
        let a = Stimulus::from_json(
            r#"{"cycles":[{"inputs":{"x":"1","y":"0"},"expected_outputs":{"o":"1"}}]}"#,
        )
        .unwrap();
        let b = Stimulus::from_json(
            r#"{"cycles":[{"expected_outputs":{"o":"0x1"},"inputs":{"y":"0","x":"1"}}]}"#,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(Stimulus::from_json(&a.to_json()).unwrap(), a);
    }
}
