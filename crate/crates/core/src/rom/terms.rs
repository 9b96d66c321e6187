use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which left-hand-side terms are evaluated on the sampled element set.
/// Unselected terms are summed over the full mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TermSelection {
    pub inertial: bool,
    pub damping: bool,
    pub internal: bool,
}

impl Default for TermSelection {
    fn default() -> Self {
        Self::ALL
    }
}

impl TermSelection {
    pub const ALL: Self = Self {
        inertial: true,
        damping: true,
        internal: true,
    };
    pub const INTERNAL: Self = Self {
        inertial: false,
        damping: false,
        internal: true,
    };
    pub const NONE: Self = Self {
        inertial: false,
        damping: false,
        internal: false,
    };

    pub fn complement(self) -> Self {
        Self {
            inertial: !self.inertial,
            damping: !self.damping,
            internal: !self.internal,
        }
    }

    pub fn is_empty(self) -> bool {
        !(self.inertial || self.damping || self.internal)
    }
}

impl fmt::Display for TermSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.inertial, "inertial"),
            (self.damping, "damping"),
            (self.internal, "internal"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

impl FromStr for TermSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => return Ok(Self::ALL),
            "none" => return Ok(Self::NONE),
            _ => {}
        }
        let mut out = Self::NONE;
        for name in s.split(',').map(str::trim) {
            match name {
                "inertial" => out.inertial = true,
                "damping" => out.damping = true,
                "internal" => out.internal = true,
                other => return Err(Error::Format(format!("unknown term `{other}`"))),
            }
        }
        Ok(out)
    }
}

impl TryFrom<String> for TermSelection {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TermSelection> for String {
    fn from(t: TermSelection) -> Self {
        t.to_string()
    }
}
