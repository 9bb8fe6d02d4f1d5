//! JSON documents for spaces and the functions living on them.
//!
//! Floats are written in shortest round-trip form and parsed with full
//! precision, so every document reads back bit-exactly.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::space::{Grid, MeasuredFunction, Part, PartiteSpace, Signature};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub name: String,
    pub signature: Signature,
    /// Row-major values, last coordinate fastest.
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub signed: bool,
}

/// On-disk form of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub parts: Vec<Part>,
    pub functions: Vec<FunctionDoc>,
}

/// A space with named functions on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub space: Arc<PartiteSpace>,
    pub functions: Vec<(String, MeasuredFunction)>,
}

impl Instance {
    pub fn new(space: Arc<PartiteSpace>) -> Self {
        Instance { space, functions: Vec::new() }
    }

    /// Adds a function, re-homing it onto this instance's space.
    pub fn with(mut self, name: impl Into<String>, f: &MeasuredFunction) -> Result<Self> {
        let f = if Arc::ptr_eq(f.space(), &self.space) { f.clone() } else { f.with_space(self.space.clone())? };
        self.functions.push((name.into(), f));
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&MeasuredFunction> {
        self.functions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| invalid!("no function named {name:?}"))
    }

    /// The named function, or the only one if `name` is `None`.
    pub fn pick(&self, name: Option<&str>) -> Result<&MeasuredFunction> {
        match name {
            Some(n) => self.get(n),
            None => match self.functions.as_slice() {
                [(_, f)] => Ok(f),
                [] => Err(invalid!("instance holds no functions")),
                _ => Err(invalid!("instance holds several functions; name one")),
            },
        }
    }

    pub fn from_doc(doc: InstanceDoc) -> Result<Self> {
        let space = PartiteSpace::new(doc.parts)?;
        let functions = doc
            .functions
            .into_iter()
            .map(|fd| {
                let grid = Grid::new(space.clone(), fd.signature)?;
                let f = if fd.signed {
                    MeasuredFunction::new_signed(grid, fd.values)?
                } else {
                    MeasuredFunction::new(grid, fd.values)?
                };
                Ok((fd.name, f))
            })
            .collect::<Result<_>>()?;
        Ok(Instance { space, functions })
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            parts: self.space.parts().to_vec(),
            functions: self
                .functions
                .iter()
                .map(|(name, f)| FunctionDoc {
                    name: name.clone(),
                    signature: f.signature().clone(),
                    values: f.values().to_vec(),
                    signed: f.is_signed(),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Instance::from_doc(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
