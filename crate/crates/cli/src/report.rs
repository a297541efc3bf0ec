//! Report records, the anchor registry and JSON emission.

use std::fmt::Write as _;

use hgroupoid_core::approx::{RateReport, Verdict};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Every record names the mathematical statement it exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Anchor {
    StructureConstants,
    BLeviIdentity,
    HeisenbergNormalForm,
    ModelFieldLimit,
    TangentGroupLaw,
    FiberClassification,
    HPreservation,
    QuadraticVanishing,
    GradedExpansion,
    TangentMapHomomorphism,
    GroupoidAxioms,
    GroupoidChart,
    ContinuityCondition,
    CompositionLimit,
    ChartTransition,
    FunctorIntertwining,
    ChartSubmersion,
}

impl Anchor {
    pub const ALL: [Anchor; 17] = [
        Anchor::StructureConstants,
        Anchor::BLeviIdentity,
        Anchor::HeisenbergNormalForm,
        Anchor::ModelFieldLimit,
        Anchor::TangentGroupLaw,
        Anchor::FiberClassification,
        Anchor::HPreservation,
        Anchor::QuadraticVanishing,
        Anchor::GradedExpansion,
        Anchor::TangentMapHomomorphism,
        Anchor::GroupoidAxioms,
        Anchor::GroupoidChart,
        Anchor::ContinuityCondition,
        Anchor::CompositionLimit,
        Anchor::ChartTransition,
        Anchor::FunctorIntertwining,
        Anchor::ChartSubmersion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Anchor::StructureConstants => "levi-form/structure-constants",
            Anchor::BLeviIdentity => "privileged-coordinates/levi-from-b",
            Anchor::HeisenbergNormalForm => "heisenberg-coordinates/model-fields",
            Anchor::ModelFieldLimit => "model-field/dilation-limit",
            Anchor::TangentGroupLaw => "tangent-group/law",
            Anchor::FiberClassification => "tangent-group/fiber-structure",
            Anchor::HPreservation => "heisenberg-diffeomorphism/definition",
            Anchor::QuadraticVanishing => "heisenberg-diffeomorphism/no-quadratic-horizontal-terms",
            Anchor::GradedExpansion => "heisenberg-diffeomorphism/graded-expansion",
            Anchor::TangentMapHomomorphism => "tangent-map/fiberwise-isomorphism",
            Anchor::GroupoidAxioms => "groupoid/axioms",
            Anchor::GroupoidChart => "groupoid/chart",
            Anchor::ContinuityCondition => "groupoid/continuity-condition",
            Anchor::CompositionLimit => "groupoid/composition-in-coordinates",
            Anchor::ChartTransition => "groupoid/chart-transition",
            Anchor::FunctorIntertwining => "groupoid/functoriality",
            Anchor::ChartSubmersion => "groupoid/range-source-submersions",
        }
    }

    pub fn registry() -> impl Iterator<Item = &'static str> {
        Self::ALL.iter().map(|a| a.as_str())
    }
}

/// Measured outcome of one check.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub values: Value,
    pub residuals: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub verdict: Verdict,
}

impl Outcome {
    pub fn new(values: Value, verdict: Verdict) -> Self {
        Outcome {
            values,
            residuals: Vec::new(),
            slope: None,
            verdict,
        }
    }

    pub fn with_rate(mut self, rate: &RateReport) -> Self {
        self.residuals = rate.residuals.clone();
        self.slope = rate.slope;
        self
    }

    /// A check whose computation itself failed.
    pub fn error(message: impl Into<String>) -> Self {
        Outcome::new(
            serde_json::json!({ "error": message.into() }),
            Verdict::Fail,
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub id: String,
    pub anchor: &'static str,
    pub inputs_digest: String,
    pub values: Value,
    pub residuals: Vec<[f64; 2]>,
    pub slope: Option<f64>,
    pub verdict: String,
}

impl Record {
    pub fn new(id: String, anchor: Anchor, inputs: &Value, outcome: Outcome) -> Self {
        Record {
            id,
            anchor: anchor.as_str(),
            inputs_digest: digest(inputs),
            values: outcome.values,
            residuals: outcome.residuals.iter().map(|&(t, r)| [t, r]).collect(),
            slope: outcome.slope,
            verdict: outcome.verdict.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

/// Hex SHA-256 of the canonical (key-sorted) JSON encoding.
pub fn digest(value: &Value) -> String {
    let bytes = serde_json::to_vec(value).expect("JSON values always serialize");
    let hash = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in hash.iter() {
        write!(out, "{b:02x}").expect("writing to a String cannot fail");
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub flagged: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub manifest: String,
    pub suite: String,
    pub seed: Option<u64>,
    pub jet_order: u32,
    pub records: Vec<Record>,
    pub summary: Summary,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
}

impl Report {
    pub fn new(
        manifest: String,
        suite: String,
        seed: Option<u64>,
        jet_order: u32,
        mut records: Vec<Record>,
    ) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let mut summary = Summary {
            total: records.len(),
            ..Summary::default()
        };
        for r in &records {
            match r.verdict.as_str() {
                "pass" => summary.pass += 1,
                "flagged" => summary.flagged += 1,
                _ => summary.fail += 1,
            }
        }
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Report {
            manifest,
            suite,
            seed,
            jet_order,
            records,
            summary,
            timestamp,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.pass == self.summary.total
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// One line per record followed by the counts.
    pub fn human_summary(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let slope = r
                .slope
                .map(|s| format!("  slope {s:.3}"))
                .unwrap_or_default();
            writeln!(out, "{:<8}{}{}", r.verdict, r.id, slope).unwrap();
        }
        let s = &self.summary;
        writeln!(
            out,
            "{}: {} checks, {} pass, {} fail, {} flagged",
            self.manifest, s.total, s.pass, s.fail, s.flagged
        )
        .unwrap();
        out
    }
}
