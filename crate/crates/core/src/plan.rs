//! Solution plans: present actions with instantiated parameters and integer
//! start/end times, plus the goal-variable bindings.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanValue {
    Int(i64),
    Object(String),
}

impl fmt::Display for PlanValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanValue::Int(i) => write!(f, "{i}"),
            PlanValue::Object(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: String,
    #[serde(default = "default_index")]
    pub index: u32,
    pub params: Vec<String>,
    pub start: i64,
    pub end: i64,
}

fn default_index() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    /// Present steps sorted by (start time, action name, instance index).
    pub steps: Vec<PlanStep>,
    /// Values of the initial chronicle's free variables, by label.
    pub goal_bindings: BTreeMap<String, PlanValue>,
    /// The depth at which the plan was found.
    #[serde(default)]
    pub depth: u32,
}

impl Plan {
    pub fn empty(depth: u32) -> Self {
        Plan { steps: Vec::new(), goal_bindings: BTreeMap::new(), depth }
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] {}(", self.start, self.end, self.action)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(p)?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            writeln!(f, "(empty plan)")?;
        }
        for step in &self.steps {
            writeln!(f, "{step}")?;
        }
        if !self.goal_bindings.is_empty() {
            write!(f, "goal bindings:")?;
            for (label, value) in &self.goal_bindings {
                write!(f, " {label} = {value}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
