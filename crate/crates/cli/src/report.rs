//! The machine-readable report emitted by every subcommand.
//!
//! Exact numbers are strings `p/q` and expressions use the shared grammar,
//! so reports are lossless and diff-friendly. Field order is fixed by the
//! struct layout and all maps are sorted, which makes byte-identical output
//! for identical inputs.

use serde::Serialize;
use std::collections::BTreeMap;

pub const SCHEMA: &str = "hyperq.report/1";

#[derive(Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<Item>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, PartialEq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Pass,
    Fail,
}

#[derive(Serialize)]
pub struct Item {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    /// Nonzero difference expression when a check fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

impl Report {
    pub fn new(command: &str, curve: Option<String>) -> Report {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            curve,
            status: Status::Ok,
            items: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn value(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.items.push(Item {
            name: name.into(),
            value: Some(value.into()),
            pass: None,
            witness: None,
            seconds: None,
        });
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, witness: Option<String>) {
        self.items.push(Item {
            name: name.into(),
            value: None,
            pass: Some(pass),
            witness: if pass { None } else { witness },
            seconds: None,
        });
        if !pass {
            self.status = Status::Fail;
        } else if !matches!(self.status, Status::Fail) {
            self.status = Status::Pass;
        }
    }

    pub fn finish(mut self) -> (String, i32) {
        if self.items.iter().all(|i| i.pass.is_none()) {
            self.status = Status::Ok;
        }
        let code = match self.status {
            Status::Fail => 1,
            _ => 0,
        };
        let body = serde_json::to_string_pretty(&self).expect("report serializes");
        (body, code)
    }
}
