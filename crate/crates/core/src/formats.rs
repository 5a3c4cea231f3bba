//! JSON spec files and dumps.
//!
//! A system spec carries a `"family"` key:
//! `{"family":"larson_wogen","prefix":[…],"tail":{…},"n_max":N}` or
//! `{"family":"explicit","side":[…],"f_entries":[[n,k,v],…],"bandwidth":b}`.
//! A graph spec has `{"left":[…],"right":[…],"edges":[[l,r,lhat],…]}`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::decide::SystemFamily;
use crate::error::Result;
use crate::graph::{BNetwork, BipartiteGraph, VertexId};
use crate::system::{make_larson_wogen, BandSystem, LarsonWogenRows, Side};
use crate::weights::{WeightSequenceSpec, WeightTail};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("spec does not parse: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LarsonWogenSpec {
    #[serde(default)]
    pub prefix: Vec<f64>,
    pub tail: WeightTail,
    /// Truncation for finite pipelines.
    #[serde(default)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitSpec {
    pub side: Vec<Side>,
    /// `<f_n, e_k> = v`; unit diagonals are implied, `fstar` follows by skew symmetry.
    pub f_entries: Vec<(usize, usize, f64)>,
    pub bandwidth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub left: Vec<VertexId>,
    pub right: Vec<VertexId>,
    pub edges: Vec<(VertexId, VertexId, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecFile {
    LarsonWogen(LarsonWogenSpec),
    Explicit(ExplicitSpec),
    Graph(GraphSpec),
}

impl SpecFile {
    pub fn parse(text: &str) -> std::result::Result<Self, SpecError> {
        let value: Value = serde_json::from_str(text)?;
        match value.get("family") {
            Some(Value::String(family)) => match family.as_str() {
                "larson_wogen" => Ok(Self::LarsonWogen(serde_json::from_value(value)?)),
                "explicit" => Ok(Self::Explicit(serde_json::from_value(value)?)),
                other => Err(SpecError::UnsupportedFamily(other.to_owned())),
            },
            Some(other) => Err(SpecError::UnsupportedFamily(other.to_string())),
            None if value.get("edges").is_some() => Ok(Self::Graph(serde_json::from_value(value)?)),
            None => Err(SpecError::UnsupportedFamily("no \"family\" or \"edges\" key".to_owned())),
        }
    }

    /// Input to the decider.
    pub fn family(&self) -> Result<SystemFamily> {
        Ok(match self {
            Self::LarsonWogen(spec) => {
                let weights = spec.weights();
                LarsonWogenRows::new(weights.clone())?;
                SystemFamily::LarsonWogen(weights)
            }
            Self::Explicit(spec) => SystemFamily::Explicit(spec.system()?),
            Self::Graph(spec) => SystemFamily::Graph(spec.graph()?),
        })
    }

    /// Finite system, truncated at the spec's `n_max` or else `default_n_max`.
    /// Graph specs have none.
    pub fn system(&self, default_n_max: usize) -> Result<Option<BandSystem<f64>>> {
        match self {
            Self::LarsonWogen(spec) => {
                let n_max = spec.n_max.unwrap_or(default_n_max);
                Ok(Some(make_larson_wogen(&spec.weights(), n_max)?))
            }
            Self::Explicit(spec) => Ok(Some(spec.system()?)),
            Self::Graph(_) => Ok(None),
        }
    }
}

impl LarsonWogenSpec {
    pub fn weights(&self) -> WeightSequenceSpec {
        WeightSequenceSpec::with_prefix(self.prefix.clone(), self.tail.clone())
    }
}

impl ExplicitSpec {
    pub fn system(&self) -> Result<BandSystem<f64>> {
        BandSystem::from_f_entries(self.side.clone(), self.bandwidth, &self.f_entries)
    }
}

impl GraphSpec {
    pub fn graph(&self) -> Result<BipartiteGraph<f64>> {
        let left: BTreeSet<_> = self.left.iter().copied().collect();
        let right: BTreeSet<_> = self.right.iter().copied().collect();
        let bound = left.iter().chain(&right).copied().max().unwrap_or(0);
        BipartiteGraph::new(left, right, self.edges.clone(), bound)
    }

    pub fn from_graph(graph: &BipartiteGraph<f64>) -> Self {
        Self {
            left: graph.left().iter().copied().collect(),
            right: graph.right().iter().copied().collect(),
            edges: graph.edges().map(|(l, r, w)| (l, r, *w)).collect(),
        }
    }
}

/// Network dump: the graph spec plus the terminal ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDump {
    #[serde(flatten)]
    pub graph: GraphSpec,
    pub source: VertexId,
    pub sink: VertexId,
}

impl NetworkDump {
    pub fn new(net: &BNetwork<f64>) -> Self {
        Self { graph: GraphSpec::from_graph(net.graph()), source: net.source(), sink: net.sink() }
    }
}
