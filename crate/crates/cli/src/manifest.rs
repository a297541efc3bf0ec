//! Manifest schema and validation into core objects.

use std::collections::{BTreeMap, BTreeSet};

use hgroupoid_core::approx::{TGrid, SLOPE_TOL};
use hgroupoid_core::groupoid::{GroupoidChart, HeisenbergDiffeo};
use hgroupoid_core::sampling::DEFAULT_POINTS_PER_AXIS;
use hgroupoid_core::{DomainBox, HFrame, Jet, PolyMap, VectorField};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `[coefficient, exponent vector]` pairs.
pub type Polynomial = Vec<(f64, Vec<u8>)>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// `d + 1`.
    pub dimension: usize,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub diffeos: Vec<DiffeoSpec>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub config: ConfigSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub name: String,
    pub domain: BoxSpec,
    /// `frame[j][i]` is the `d_i` coefficient of `X_j`.
    pub frame: Vec<Vec<Polynomial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_levi: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_type: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffeoSpec {
    pub name: String,
    pub source: String,
    pub target: String,
    pub components: Vec<Polynomial>,
    /// The map is expected to fail the quadratic-vanishing check.
    #[serde(default)]
    pub negative_control: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub name: String,
    /// Restricts the metric to one chart; all charts of matching rank otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<String>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    #[serde(default = "default_jet_order")]
    pub jet_order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default = "default_points_per_axis")]
    pub points_per_axis: usize,
    #[serde(default = "default_random_trials")]
    pub random_trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ConfigSpec {
    fn default() -> Self {
        ConfigSpec {
            jet_order: default_jet_order(),
            t_grid: None,
            points_per_axis: default_points_per_axis(),
            random_trials: default_random_trials(),
            seed: None,
            tolerances: BTreeMap::new(),
        }
    }
}

fn default_jet_order() -> u32 {
    hgroupoid_core::jets::DEFAULT_ORDER
}

fn default_points_per_axis() -> usize {
    DEFAULT_POINTS_PER_AXIS
}

fn default_random_trials() -> usize {
    1000
}

pub const MAX_JET_ORDER: u32 = 6;

/// Named tolerances, overridable from the manifest or `--tol NAME=VALUE`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Levi matrix against its declared value.
    pub levi: f64,
    /// `L = b^t - b`.
    pub b_levi: f64,
    /// Pushed frame against the model-field formula, coefficientwise.
    pub normal_form: f64,
    /// Group-law identities.
    pub group: f64,
    /// Adapted-frame relations.
    pub relation: f64,
    /// Quadratic horizontal coefficients of a diffeomorphism.
    pub coefficient: f64,
    /// Fiberwise homomorphism and functor residuals.
    pub homomorphism: f64,
    pub h_preservation: f64,
    /// Groupoid axioms and chart round trips.
    pub groupoid: f64,
    /// Final residual accepted by the continuity check.
    pub continuity: f64,
    pub slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            levi: 1e-12,
            b_levi: 1e-10,
            normal_form: 1e-10,
            group: 1e-12,
            relation: 1e-8,
            coefficient: 1e-10,
            homomorphism: 1e-10,
            h_preservation: 1e-10,
            groupoid: 1e-10,
            continuity: 1e-9,
            slope: SLOPE_TOL,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 11] = [
        "levi",
        "b_levi",
        "normal_form",
        "group",
        "relation",
        "coefficient",
        "homomorphism",
        "h_preservation",
        "groupoid",
        "continuity",
        "slope",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "levi" => &mut self.levi,
            "b_levi" => &mut self.b_levi,
            "normal_form" => &mut self.normal_form,
            "group" => &mut self.group,
            "relation" => &mut self.relation,
            "coefficient" => &mut self.coefficient,
            "homomorphism" => &mut self.homomorphism,
            "h_preservation" => &mut self.h_preservation,
            "groupoid" => &mut self.groupoid,
            "continuity" => &mut self.continuity,
            "slope" => &mut self.slope,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!(
                "tolerance {name} must be positive and finite, got {value}"
            ));
        }
        let slot = self.slot(name).ok_or_else(|| {
            format!(
                "unknown tolerance {name:?}; known: {}",
                Self::NAMES.join(", ")
            )
        })?;
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub jet_order: u32,
    pub grid: TGrid,
    pub points_per_axis: usize,
    pub random_trials: usize,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
}

pub struct Chart {
    pub spec: ChartSpec,
    pub chart: GroupoidChart,
    pub expected_levi: Option<DMatrix<f64>>,
}

impl Chart {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn frame(&self) -> &HFrame {
        self.chart.frame()
    }
}

pub struct Diffeo {
    pub spec: DiffeoSpec,
    pub source: usize,
    pub target: usize,
    pub map: HeisenbergDiffeo,
}

pub struct Metric {
    pub spec: MetricSpec,
    pub matrix: DMatrix<f64>,
}

/// A manifest whose polynomials, boxes and references all check out.
pub struct Validated {
    pub manifest: Manifest,
    pub charts: Vec<Chart>,
    pub diffeos: Vec<Diffeo>,
    pub metrics: Vec<Metric>,
    pub config: Config,
}

impl Validated {
    pub fn chart_index(&self, name: &str) -> Option<usize> {
        self.charts.iter().position(|c| c.name() == name)
    }

    /// Metrics applicable to chart `index`.
    pub fn metrics_for(&self, index: usize) -> impl Iterator<Item = &Metric> {
        let d = self.manifest.dimension - 1;
        let name = self.charts[index].name().to_string();
        self.metrics.iter().filter(move |m| {
            m.matrix.nrows() == d && m.spec.chart.as_deref().is_none_or(|c| c == name)
        })
    }
}

pub fn parse(text: &str) -> Result<Manifest, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Validation {
        location: location.into(),
        message: message.into(),
    }
}

fn build_jet(poly: &Polynomial, dim: usize, order: u32, location: &str) -> Result<Jet, CliError> {
    for (t, (coef, exps)) in poly.iter().enumerate() {
        let at = format!("{location}[{t}]");
        if exps.len() != dim {
            return Err(invalid(
                at,
                format!("exponent vector has length {}, expected {dim}", exps.len()),
            ));
        }
        if !coef.is_finite() {
            return Err(invalid(at, format!("coefficient {coef} is not finite")));
        }
        let degree: u32 = exps.iter().map(|&p| p as u32).sum();
        if degree > order {
            return Err(invalid(
                at,
                format!("monomial of degree {degree} exceeds jet order {order}"),
            ));
        }
    }
    Jet::from_terms(
        dim,
        order,
        &vec![0.0; dim],
        poly.iter().map(|(c, e)| (*c, e.as_slice())),
    )
    .map_err(|e| invalid(location, e.to_string()))
}

fn square_matrix(rows: &[Vec<f64>], d: usize, location: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(invalid(location, format!("expected a {d}x{d} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(location, "matrix entries must be finite"));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn validate_config(spec: &ConfigSpec, jet_order: u32) -> Result<Config, CliError> {
    if !(2..=MAX_JET_ORDER).contains(&jet_order) {
        return Err(invalid(
            "config.jet_order",
            format!("jet order must lie in 2..={MAX_JET_ORDER}, got {jet_order}"),
        ));
    }
    let grid = match &spec.t_grid {
        None => TGrid::default(),
        Some(ts) => {
            if ts.len() < hgroupoid_core::approx::MIN_FIT_POINTS {
                return Err(invalid(
                    "config.t_grid",
                    "a rate fit needs at least 4 scales",
                ));
            }
            if ts.iter().any(|&t| t > 1.0) {
                return Err(invalid("config.t_grid", "scales must not exceed 1"));
            }
            TGrid::new(ts.clone()).map_err(|e| invalid("config.t_grid", e.to_string()))?
        }
    };
    if spec.points_per_axis < 2 {
        return Err(invalid(
            "config.points_per_axis",
            "need at least 2 points per axis",
        ));
    }
    if spec.random_trials == 0 {
        return Err(invalid("config.random_trials", "need at least one trial"));
    }
    let mut tolerances = Tolerances::default();
    for (name, value) in &spec.tolerances {
        tolerances
            .set(name, *value)
            .map_err(|m| invalid(format!("config.tolerances.{name}"), m))?;
    }
    Ok(Config {
        jet_order,
        grid,
        points_per_axis: spec.points_per_axis,
        random_trials: spec.random_trials,
        seed: spec.seed,
        tolerances,
    })
}

/// Checks every invariant of the schema and builds the core objects.
/// `jet_order` overrides the manifest's value.
pub fn validate(manifest: Manifest, jet_order: Option<u32>) -> Result<Validated, CliError> {
    let dim = manifest.dimension;
    if dim < 3 {
        return Err(invalid(
            "dimension",
            format!("dimension must be at least 3, got {dim}"),
        ));
    }
    let d = dim - 1;
    let config = validate_config(
        &manifest.config,
        jet_order.unwrap_or(manifest.config.jet_order),
    )?;
    let order = config.jet_order;
    if manifest.charts.is_empty() {
        return Err(invalid("charts", "at least one chart is required"));
    }

    let mut names = BTreeSet::new();
    let mut charts = Vec::with_capacity(manifest.charts.len());
    for (i, spec) in manifest.charts.iter().enumerate() {
        let at = format!("charts[{i}]");
        if !names.insert(spec.name.as_str()) {
            return Err(invalid(
                format!("{at}.name"),
                format!("duplicate chart name {:?}", spec.name),
            ));
        }
        let (lo, hi) = (&spec.domain.lo, &spec.domain.hi);
        if lo.len() != dim || hi.len() != dim {
            return Err(invalid(
                format!("{at}.domain"),
                format!("box bounds need {dim} entries"),
            ));
        }
        let domain = DomainBox::new(lo.clone(), hi.clone())
            .map_err(|e| invalid(format!("{at}.domain"), e.to_string()))?;
        if spec.frame.len() != dim {
            return Err(invalid(
                format!("{at}.frame"),
                format!("an H-frame has {dim} fields, got {}", spec.frame.len()),
            ));
        }
        let mut fields = Vec::with_capacity(dim);
        for (j, comps) in spec.frame.iter().enumerate() {
            if comps.len() != dim {
                return Err(invalid(
                    format!("{at}.frame[{j}]"),
                    format!("a field has {dim} components, got {}", comps.len()),
                ));
            }
            let jets = comps
                .iter()
                .enumerate()
                .map(|(k, p)| build_jet(p, dim, order, &format!("{at}.frame[{j}][{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            fields.push(
                VectorField::from_components(jets)
                    .map_err(|e| invalid(format!("{at}.frame[{j}]"), e.to_string()))?,
            );
        }
        let frame = HFrame::new(fields, domain.clone())
            .map_err(|e| invalid(format!("{at}.frame"), e.to_string()))?;
        frame
            .checked_frame_matrix(&domain.center())
            .map_err(|e| invalid(format!("{at}.frame"), e.to_string()))?;
        let expected_levi = match &spec.expected_levi {
            None => None,
            Some(rows) => {
                let m = square_matrix(rows, d, &format!("{at}.expected_levi"))?;
                if (&m + m.transpose()).amax() > 0.0 {
                    return Err(invalid(
                        format!("{at}.expected_levi"),
                        "matrix must be antisymmetric",
                    ));
                }
                Some(m)
            }
        };
        charts.push(Chart {
            spec: spec.clone(),
            chart: GroupoidChart::new(spec.name.clone(), frame),
            expected_levi,
        });
    }

    let mut diffeo_names = BTreeSet::new();
    let mut diffeos = Vec::with_capacity(manifest.diffeos.len());
    for (i, spec) in manifest.diffeos.iter().enumerate() {
        let at = format!("diffeos[{i}]");
        if !diffeo_names.insert(spec.name.as_str()) {
            return Err(invalid(
                format!("{at}.name"),
                format!("duplicate diffeo name {:?}", spec.name),
            ));
        }
        let find = |name: &str, field: &str| {
            charts
                .iter()
                .position(|c| c.name() == name)
                .ok_or_else(|| invalid(format!("{at}.{field}"), format!("unknown chart {name:?}")))
        };
        let source = find(&spec.source, "source")?;
        let target = find(&spec.target, "target")?;
        if spec.components.len() != dim {
            return Err(invalid(
                format!("{at}.components"),
                format!(
                    "a map needs {dim} components, got {}",
                    spec.components.len()
                ),
            ));
        }
        let jets = spec
            .components
            .iter()
            .enumerate()
            .map(|(k, p)| build_jet(p, dim, order, &format!("{at}.components[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let map =
            PolyMap::new(jets).map_err(|e| invalid(format!("{at}.components"), e.to_string()))?;
        diffeos.push(Diffeo {
            spec: spec.clone(),
            source,
            target,
            map: HeisenbergDiffeo::new(spec.name.clone(), map),
        });
    }

    let mut metrics = Vec::with_capacity(manifest.metrics.len());
    for (i, spec) in manifest.metrics.iter().enumerate() {
        let at = format!("metrics[{i}]");
        if let Some(c) = &spec.chart {
            if !charts.iter().any(|ch| ch.name() == c) {
                return Err(invalid(
                    format!("{at}.chart"),
                    format!("unknown chart {c:?}"),
                ));
            }
        }
        let m = square_matrix(&spec.matrix, d, &format!("{at}.matrix"))?;
        if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
            return Err(invalid(format!("{at}.matrix"), "metric must be symmetric"));
        }
        let min_eig = m.clone().symmetric_eigenvalues().min();
        if min_eig.is_nan() || min_eig <= 0.0 {
            return Err(invalid(
                format!("{at}.matrix"),
                format!("metric must be positive definite (smallest eigenvalue {min_eig:.3e})"),
            ));
        }
        metrics.push(Metric {
            spec: spec.clone(),
            matrix: m,
        });
    }

    Ok(Validated {
        manifest,
        charts,
        diffeos,
        metrics,
        config,
    })
}
