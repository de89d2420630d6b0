//! Versioned JSON reports shared by the sweeps and the command line.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::degrees::DegreeVector;
use crate::embeddings::PrimeProfile;
use crate::rational::{format_q, Q};

pub const SCHEMA_VERSION: &str = "1";

/// One witness against a checked property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<DegreeVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<DegreeVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub face: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<String>,
    pub clause: String,
    #[serde(skip)]
    key: Vec<Q>,
}

impl Counterexample {
    pub fn new(clause: impl Into<String>) -> Self {
        Self { h: None, d: None, face: None, beta: None, lhs: None, clause: clause.into(), key: Vec::new() }
    }

    pub fn with_h(mut self, h: &DegreeVector) -> Self {
        self.key.extend_from_slice(h.values());
        self.h = Some(h.clone());
        self
    }

    pub fn with_d(mut self, d: &DegreeVector) -> Self {
        self.key.extend_from_slice(d.values());
        self.d = Some(d.clone());
        self
    }

    pub fn with_face(mut self, face: String) -> Self {
        self.face = Some(face);
        self
    }

    pub fn with_beta(mut self, profile: &PrimeProfile, beta: usize) -> Self {
        self.key.push(Q::from_integer(beta as i128));
        self.beta = Some(profile.format_index(beta));
        self
    }

    pub fn with_lhs(mut self, lhs: Q) -> Self {
        self.lhs = Some(format_q(&lhs));
        self
    }

    fn sort_key(&self) -> (&[Q], &Option<String>, &String) {
        (&self.key, &self.face, &self.clause)
    }
}

impl PartialOrd for Counterexample {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Counterexample {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// Outcome of a region-level check over a profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionReport {
    pub schema: &'static str,
    pub region: String,
    pub profile: PrimeProfile,
    pub denominator: Option<u64>,
    pub pass: bool,
    pub counts: BTreeMap<String, u64>,
    pub counterexamples_total: u64,
    pub counterexamples: Vec<Counterexample>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RegionReport {
    /// Sorts the witnesses and keeps the first `limit` (at least one).
    pub fn new(
        region: impl Into<String>,
        profile: PrimeProfile,
        denominator: Option<u64>,
        mut counterexamples: Vec<Counterexample>,
        limit: usize,
    ) -> Self {
        counterexamples.sort();
        let total = counterexamples.len() as u64;
        counterexamples.truncate(limit.max(1));
        Self {
            schema: SCHEMA_VERSION,
            region: region.into(),
            profile,
            denominator,
            pass: total == 0,
            counts: BTreeMap::new(),
            counterexamples_total: total,
            counterexamples,
            notes: Vec::new(),
        }
    }

    pub fn count(mut self, name: &str, value: u64) -> Self {
        self.counts.insert(name.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}
