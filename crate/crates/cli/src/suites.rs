//! Check planning and execution.
//!
//! Every check draws from its own generator, seeded from the run seed and a
//! stream derived from the check id, and builds its own groupoid charts.
//! Checks therefore never share mutable state, and the sorted report is
//! independent of scheduling.

use std::fmt;
use std::str::FromStr;

use hgroupoid_core::approx::{diffeo_expansion_check, tangent_map_h, Verdict};
use hgroupoid_core::coords::{
    b_matrix, dilation_limit_check, heisenberg_map, model_field, normal_form_check,
};
use hgroupoid_core::fields::pushforward_preserves_h;
use hgroupoid_core::group::{classify_fiber, dilate, graded_shear_transport, GradedShear};
use hgroupoid_core::groupoid::{
    composition_limit_check, continuity_check, continuity_check_across, functor_chart_residual,
    functor_phi_h, jacobian_spot_check, transition_rate, GroupoidChart, GroupoidElement,
    UnitElement,
};
use hgroupoid_core::sampling::{sample_points, DEFAULT_GRID_CAP};
use hgroupoid_core::{DomainBox, Error, GroupElement, HFrame, TangentGroup};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::manifest::{Chart, Config, Diffeo, Validated};
use crate::report::{Anchor, Outcome, Record};

type CoreResult<T> = hgroupoid_core::Result<T>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Levi,
    Coords,
    Group,
    Classify,
    Diffeo,
    Groupoid,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = [
        "levi", "coords", "group", "classify", "diffeo", "groupoid", "all",
    ];

    fn includes(self, part: Suite) -> bool {
        self == Suite::All || self == part
    }

    /// Suites that draw random samples and so need a seed.
    pub fn randomized(self) -> bool {
        !matches!(self, Suite::Levi | Suite::Coords)
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "levi" => Suite::Levi,
            "coords" => Suite::Coords,
            "group" => Suite::Group,
            "classify" => Suite::Classify,
            "diffeo" => Suite::Diffeo,
            "groupoid" => Suite::Groupoid,
            "all" => Suite::All,
            _ => {
                return Err(format!(
                    "unknown suite {s:?}; known: {}",
                    Suite::NAMES.join(", ")
                ))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [
            Suite::Levi,
            Suite::Coords,
            Suite::Group,
            Suite::Classify,
            Suite::Diffeo,
            Suite::Groupoid,
            Suite::All,
        ]
        .iter()
        .position(|s| s == self)
        .expect("every suite is listed");
        f.write_str(Suite::NAMES[i])
    }
}

type Task<'a> = Box<dyn Fn(&mut ChaCha8Rng) -> CoreResult<Outcome> + Send + Sync + 'a>;

struct Check<'a> {
    id: String,
    anchor: Anchor,
    inputs: Value,
    task: Task<'a>,
}

/// Generator of check `id`: the run seed selects the key, the id the stream.
pub fn check_rng(seed: u64, id: &str) -> ChaCha8Rng {
    let hash = Sha256::digest(id.as_bytes());
    let mut stream = [0u8; 8];
    stream.copy_from_slice(&hash[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from_le_bytes(stream));
    rng
}

/// Runs every check of `suite` in parallel; records come back sorted by id.
pub fn run_suite(v: &Validated, suite: Suite) -> Result<Vec<Record>, CliError> {
    let seed = match (v.config.seed, suite.randomized()) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => {
            return Err(CliError::Validation {
                location: "config.seed".into(),
                message: format!(
                    "suite {suite} draws random samples; set config.seed or pass --seed"
                ),
            })
        }
    };
    let plan = Planner::new(v, seed).plan(suite);
    let mut records: Vec<Record> = plan
        .par_iter()
        .map(|c| {
            let mut rng = check_rng(seed, &c.id);
            let outcome = (c.task)(&mut rng).unwrap_or_else(|e| Outcome::error(e.to_string()));
            Record::new(c.id.clone(), c.anchor, &c.inputs, outcome)
        })
        .collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

fn rows(m: &DMatrix<f64>) -> Value {
    json!(m
        .row_iter()
        .map(|r| r.iter().copied().collect::<Vec<f64>>())
        .collect::<Vec<_>>())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn uniform_in(rng: &mut ChaCha8Rng, domain: &DomainBox) -> Vec<f64> {
    domain
        .lo()
        .iter()
        .zip(domain.hi())
        .map(|(a, b)| rng.random_range(*a..*b))
        .collect()
}

fn element(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> CoreResult<GroupElement> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-r..r)).collect();
    GroupElement::from_slice(&v)
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    m.transpose() * &m + DMatrix::identity(d, d) * 0.5
}

/// Base points of pointwise checks: the box center, then the corners of the
/// quarter box (quasi-random when there are too many).
fn base_points(domain: &DomainBox) -> Vec<Vec<f64>> {
    let mut pts = vec![domain.center()];
    pts.extend(sample_points(&domain.shrunk(0.25), 2, 8));
    pts
}

/// Points of the model group on which sup norms are taken.
fn model_samples(dim: usize) -> Vec<Vec<f64>> {
    sample_points(&DomainBox::cube(dim, 1.0), 3, 32)
}

fn fresh(chart: &Chart) -> GroupoidChart {
    chart.chart.clone()
}

struct Planner<'a> {
    v: &'a Validated,
    cfg: &'a Config,
    seed: u64,
    config_json: Value,
    checks: Vec<Check<'a>>,
}

impl<'a> Planner<'a> {
    fn new(v: &'a Validated, seed: u64) -> Self {
        let cfg = &v.config;
        let config_json = json!({
            "jet_order": cfg.jet_order,
            "t_grid": cfg.grid.values(),
            "points_per_axis": cfg.points_per_axis,
            "random_trials": cfg.random_trials,
            "seed": cfg.seed,
            "tolerances": cfg.tolerances,
        });
        Planner {
            v,
            cfg,
            seed,
            config_json,
            checks: Vec::new(),
        }
    }

    fn push(
        &mut self,
        id: String,
        anchor: Anchor,
        charts: &[usize],
        diffeo: Option<usize>,
        task: impl Fn(&mut ChaCha8Rng) -> CoreResult<Outcome> + Send + Sync + 'a,
    ) {
        let inputs = json!({
            "id": id,
            "charts": charts.iter().map(|&i| &self.v.charts[i].spec).collect::<Vec<_>>(),
            "diffeo": diffeo.map(|i| &self.v.diffeos[i].spec),
            "config": self.config_json,
        });
        self.checks.push(Check {
            id,
            anchor,
            inputs,
            task: Box::new(task),
        });
    }

    fn plan(mut self, suite: Suite) -> Vec<Check<'a>> {
        let (v, cfg) = (self.v, self.cfg);
        for (ci, chart) in v.charts.iter().enumerate() {
            let name = chart.name();
            if suite.includes(Suite::Levi) {
                self.push(
                    format!("levi/{name}"),
                    Anchor::StructureConstants,
                    &[ci],
                    None,
                    move |_| levi(chart, cfg),
                );
            }
            if suite.includes(Suite::Coords) {
                self.plan_coords(ci);
            }
            if suite.includes(Suite::Group) {
                self.push(
                    format!("group/{name}/law"),
                    Anchor::TangentGroupLaw,
                    &[ci],
                    None,
                    move |rng| group_law(chart, cfg, rng),
                );
                self.push(
                    format!("group/{name}/normalizing-shear"),
                    Anchor::TangentGroupLaw,
                    &[ci],
                    None,
                    move |rng| normalizing_shear(chart, cfg, rng),
                );
            }
            if suite.includes(Suite::Classify) {
                self.plan_classify(ci);
            }
            if suite.includes(Suite::Groupoid) {
                self.plan_groupoid_chart(ci);
            }
        }
        for (di, diffeo) in v.diffeos.iter().enumerate() {
            if suite.includes(Suite::Diffeo) {
                self.plan_diffeo(di, diffeo);
            }
            if suite.includes(Suite::Groupoid) && !diffeo.spec.negative_control {
                self.plan_groupoid_diffeo(di, diffeo);
            }
        }
        self.checks
    }

    fn plan_coords(&mut self, ci: usize) {
        let (chart, cfg) = (&self.v.charts[ci], self.cfg);
        let name = chart.name();
        self.push(
            format!("coords/{name}/b-levi"),
            Anchor::BLeviIdentity,
            &[ci],
            None,
            move |_| b_levi(chart, cfg),
        );
        self.push(
            format!("coords/{name}/normal-form"),
            Anchor::HeisenbergNormalForm,
            &[ci],
            None,
            move |_| normal_form(chart, cfg),
        );
        for j in 0..chart.frame().dim() {
            self.push(
                format!("coords/{name}/dilation-limit/X{j}"),
                Anchor::ModelFieldLimit,
                &[ci],
                None,
                move |_| dilation_limit(chart, cfg, j),
            );
        }
    }

    fn plan_classify(&mut self, ci: usize) {
        let (v, cfg) = (self.v, self.cfg);
        let chart = &v.charts[ci];
        let name = chart.name();
        let d = chart.frame().d();
        let mut metrics = vec![("identity".to_string(), DMatrix::identity(d, d))];
        metrics.extend(
            v.metrics_for(ci)
                .map(|m| (m.spec.name.clone(), m.matrix.clone())),
        );
        let mut rng = check_rng(self.seed, &format!("classify/{name}/random-spd"));
        metrics.push(("random-spd".to_string(), random_spd(&mut rng, d)));
        for (metric, g) in metrics.clone() {
            self.push(
                format!("classify/{name}/metric/{metric}"),
                Anchor::FiberClassification,
                &[ci],
                None,
                move |_| classify_with(chart, cfg, &g),
            );
        }
        self.push(
            format!("classify/{name}/metric-independence"),
            Anchor::FiberClassification,
            &[ci],
            None,
            move |_| metric_independence(chart, &metrics),
        );
        self.push(
            format!("classify/{name}/samples"),
            Anchor::FiberClassification,
            &[ci],
            None,
            move |_| type_over_samples(chart, cfg),
        );
    }

    fn plan_groupoid_chart(&mut self, ci: usize) {
        let (chart, cfg) = (&self.v.charts[ci], self.cfg);
        let name = chart.name();
        self.push(
            format!("groupoid/{name}/axioms"),
            Anchor::GroupoidAxioms,
            &[ci],
            None,
            move |rng| groupoid_axioms(chart, cfg, rng),
        );
        self.push(
            format!("groupoid/{name}/round-trip"),
            Anchor::GroupoidChart,
            &[ci],
            None,
            move |rng| round_trip(chart, cfg, rng),
        );
        self.push(
            format!("groupoid/{name}/continuity"),
            Anchor::ContinuityCondition,
            &[ci],
            None,
            move |_| continuity(chart, cfg),
        );
        self.push(
            format!("groupoid/{name}/jacobian"),
            Anchor::ChartSubmersion,
            &[ci],
            None,
            move |rng| jacobian(chart, rng),
        );
        for k in 0..COMPOSITION_SAMPLES {
            self.push(
                format!("groupoid/{name}/composition-limit/{k}"),
                Anchor::CompositionLimit,
                &[ci],
                None,
                move |rng| composition_limit(chart, cfg, k, rng),
            );
        }
    }

    fn plan_diffeo(&mut self, di: usize, diffeo: &'a Diffeo) {
        let (v, cfg) = (self.v, self.cfg);
        let (src, dst) = (&v.charts[diffeo.source], &v.charts[diffeo.target]);
        let charts = [diffeo.source, diffeo.target];
        let name = &diffeo.spec.name;
        self.push(
            format!("diffeo/{name}/h-preservation"),
            Anchor::HPreservation,
            &charts,
            Some(di),
            move |_| h_preservation(diffeo, src, dst, cfg),
        );
        if diffeo.spec.negative_control {
            self.push(
                format!("diffeo/{name}/negative-control"),
                Anchor::QuadraticVanishing,
                &charts,
                Some(di),
                move |_| negative_control(diffeo, src, dst, cfg),
            );
            return;
        }
        for (k, m) in base_points(src.frame().domain()).into_iter().enumerate() {
            self.push(
                format!("diffeo/{name}/expansion/{k}"),
                Anchor::GradedExpansion,
                &charts,
                Some(di),
                move |_| expansion(diffeo, src, dst, cfg, &m),
            );
        }
        self.push(
            format!("diffeo/{name}/homomorphism"),
            Anchor::TangentMapHomomorphism,
            &charts,
            Some(di),
            move |rng| homomorphism(diffeo, src, dst, cfg, rng),
        );
    }

    fn plan_groupoid_diffeo(&mut self, di: usize, diffeo: &'a Diffeo) {
        let (v, cfg) = (self.v, self.cfg);
        let (src, dst) = (&v.charts[diffeo.source], &v.charts[diffeo.target]);
        let charts = [diffeo.source, diffeo.target];
        let name = &diffeo.spec.name;
        for (k, m) in base_points(src.frame().domain())
            .into_iter()
            .take(3)
            .enumerate()
        {
            self.push(
                format!("groupoid/{name}/transition/{k}"),
                Anchor::ChartTransition,
                &charts,
                Some(di),
                move |rng| transition(diffeo, src, dst, cfg, &m, rng),
            );
        }
        self.push(
            format!("groupoid/{name}/functor"),
            Anchor::FunctorIntertwining,
            &charts,
            Some(di),
            move |rng| functor(diffeo, src, dst, cfg, rng),
        );
        self.push(
            format!("groupoid/{name}/chart-independence"),
            Anchor::ContinuityCondition,
            &charts,
            Some(di),
            move |_| chart_independence(diffeo, src, dst, cfg),
        );
    }
}

fn interior_samples(frame: &HFrame, cfg: &Config) -> Vec<Vec<f64>> {
    sample_points(
        &frame.domain().shrunk(0.5),
        cfg.points_per_axis,
        DEFAULT_GRID_CAP,
    )
}

fn levi(chart: &Chart, cfg: &Config) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let center = frame.domain().center();
    let l0 = frame.levi_matrix(&center)?;
    let samples = interior_samples(frame, cfg);
    let mut variation: f64 = 0.0;
    let mut deviation = chart
        .expected_levi
        .as_ref()
        .map(|e| (l0.matrix() - e).amax());
    for p in &samples {
        let l = frame.levi_matrix(p)?;
        variation = variation.max((l.matrix() - l0.matrix()).amax());
        if let (Some(dev), Some(e)) = (deviation.as_mut(), chart.expected_levi.as_ref()) {
            *dev = dev.max((l.matrix() - e).amax());
        }
    }
    let verdict = deviation.map_or(Verdict::Pass, |dev| {
        Verdict::from_bool(dev < cfg.tolerances.levi)
    });
    Ok(Outcome::new(
        json!({
            "center": center,
            "levi_at_center": rows(l0.matrix()),
            "expected": chart.expected_levi.as_ref().map(rows),
            "max_deviation": deviation,
            "variation_over_samples": variation,
            "samples": samples.len() + 1,
        }),
        verdict,
    ))
}

fn b_levi(chart: &Chart, cfg: &Config) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let samples = interior_samples(frame, cfg);
    let mut worst: f64 = 0.0;
    for p in &samples {
        let b = b_matrix(frame, p)?;
        let l = frame.levi_matrix(p)?;
        worst = worst.max((l.matrix() - (b.transpose() - &b)).amax());
    }
    Ok(Outcome::new(
        json!({ "max_residual": worst, "samples": samples.len() }),
        Verdict::from_bool(worst < cfg.tolerances.b_levi),
    ))
}

fn normal_form(chart: &Chart, cfg: &Config) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let samples = sample_points(&frame.domain().shrunk(0.5), cfg.points_per_axis.min(3), 32);
    let (mut shear, mut leading, mut bl): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for p in &samples {
        let nf = normal_form_check(frame, &heisenberg_map(frame, p)?)?;
        shear = shear.max(nf.shear_pushforward);
        leading = leading.max(nf.leading_part);
        bl = bl.max(nf.b_levi);
    }
    let tol = cfg.tolerances.normal_form;
    Ok(Outcome::new(
        json!({
            "shear_pushforward": shear,
            "leading_part": leading,
            "b_levi": bl,
            "samples": samples.len(),
        }),
        Verdict::from_bool(shear < tol && leading < tol),
    ))
}

fn dilation_limit(chart: &Chart, cfg: &Config, j: usize) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let center = frame.domain().center();
    let field = frame.field(j);
    let model = model_field(field, frame, &center)?;
    let rate = dilation_limit_check(
        field,
        frame,
        &center,
        &cfg.grid,
        &model_samples(frame.dim()),
        cfg.tolerances.slope,
    )?;
    let verdict = if model.borderline {
        rate.verdict.and(Verdict::Flagged)
    } else {
        rate.verdict
    };
    Ok(Outcome::new(
        json!({
            "weight": model.weight,
            "model_constant": model.constant.as_slice(),
            "borderline": model.borderline,
            "max_residual": rate.max_residual(),
        }),
        verdict,
    )
    .with_rate(&rate))
}

fn group_law(chart: &Chart, cfg: &Config, rng: &mut ChaCha8Rng) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let l = frame.levi_matrix(&frame.domain().center())?;
    let g = TangentGroup::new(l);
    let dim = g.dim();
    let e = g.identity();
    let (mut assoc, mut ident, mut inv, mut dil, mut comm): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..cfg.random_trials {
        let x = element(rng, dim, 1.0)?;
        let y = element(rng, dim, 1.0)?;
        let z = element(rng, dim, 1.0)?;
        let xy = g.mul(&x, &y)?;
        assoc = assoc.max(g.mul(&xy, &z)?.max_diff(&g.mul(&x, &g.mul(&y, &z)?)?));
        ident = ident
            .max(g.mul(&x, &e)?.max_diff(&x))
            .max(g.mul(&e, &x)?.max_diff(&x));
        let xi = g.inv(&x)?;
        inv = inv
            .max(g.mul(&x, &xi)?.max_diff(&e))
            .max(g.mul(&xi, &x)?.max_diff(&e));
        for t in DILATIONS {
            dil = dil.max(xy.dilate(t).max_diff(&g.mul(&x.dilate(t), &y.dilate(t))?));
        }
        let c = g.commutator(&x, &y)?;
        let form = g.structure_constants().form(x.horizontal(), y.horizontal());
        comm = comm
            .max((c.x0() - form).abs())
            .max(c.horizontal().iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let worst = assoc.max(ident).max(inv).max(dil).max(comm);
    Ok(Outcome::new(
        json!({
            "trials": cfg.random_trials,
            "associativity": assoc,
            "identity": ident,
            "inverse": inv,
            "dilation": dil,
            "dilation_factors": DILATIONS,
            "commutator": comm,
        }),
        Verdict::from_bool(worst < cfg.tolerances.group),
    ))
}

const DILATIONS: [f64; 4] = [-1.0, 0.5, 2.0, 10.0];

fn normalizing_shear(chart: &Chart, cfg: &Config, rng: &mut ChaCha8Rng) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let b = b_matrix(frame, &frame.domain().center())?;
    let shear = GradedShear::normalizing(&b);
    let transport = graded_shear_transport(&shear, &b, cfg.random_trials, rng)?;
    let antisym = (&transport.b + transport.b.transpose()).amax();
    let tol = cfg.tolerances.homomorphism;
    Ok(Outcome::new(
        json!({
            "b": rows(&b),
            "shear": rows(shear.c()),
            "transported_b": rows(&transport.b),
            "homomorphism_residual": transport.residual,
            "symmetric_part": antisym,
        }),
        Verdict::from_bool(transport.residual < tol && antisym < tol),
    ))
}

fn classify_with(chart: &Chart, cfg: &Config, g: &DMatrix<f64>) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let l = frame.levi_matrix(&frame.domain().center())?;
    let c = classify_fiber(&l, g)?;
    let group_type = c.group_type.to_string();
    let type_ok = chart
        .spec
        .expected_type
        .as_ref()
        .is_none_or(|t| *t == group_type);
    let mut verdict = Verdict::from_bool(type_ok && c.relation_residual < cfg.tolerances.relation);
    if c.near_threshold {
        verdict = verdict.and(Verdict::Flagged);
    }
    Ok(Outcome::new(
        json!({
            "type": group_type,
            "expected_type": chart.spec.expected_type,
            "rank": c.rank(),
            "metric": rows(g),
            "singular_values": c.singular_values,
            "near_threshold": c.near_threshold,
            "relation_residual": c.relation_residual,
            "adapted_frame": rows(&c.adapted_frame),
        }),
        verdict,
    ))
}

fn metric_independence(chart: &Chart, metrics: &[(String, DMatrix<f64>)]) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let l = frame.levi_matrix(&frame.domain().center())?;
    let mut types = serde_json::Map::new();
    let mut distinct = Vec::new();
    for (name, g) in metrics {
        let t = classify_fiber(&l, g)?.group_type.to_string();
        if !distinct.contains(&t) {
            distinct.push(t.clone());
        }
        types.insert(name.clone(), json!(t));
    }
    Ok(Outcome::new(
        json!({ "types": types }),
        Verdict::from_bool(distinct.len() == 1),
    ))
}

/// Types over interior samples. Rank may legitimately vary, so only a
/// declared type is enforced.
fn type_over_samples(chart: &Chart, cfg: &Config) -> CoreResult<Outcome> {
    let frame = chart.frame();
    let samples = interior_samples(frame, cfg);
    let id = DMatrix::identity(frame.d(), frame.d());
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for p in &samples {
        let t = classify_fiber(&frame.levi_matrix(p)?, &id)?
            .group_type
            .to_string();
        *counts.entry(t).or_default() += 1;
    }
    let ok = match &chart.spec.expected_type {
        Some(t) => counts.len() == 1 && counts.contains_key(t),
        None => true,
    };
    Ok(Outcome::new(
        json!({ "types": counts, "samples": samples.len() }),
        Verdict::from_bool(ok),
    ))
}

/// Source samples of the quarter box whose images land in the target box.
fn mapped_samples(
    diffeo: &Diffeo,
    src: &Chart,
    dst: &Chart,
    cfg: &Config,
) -> (Vec<Vec<f64>>, usize) {
    let all = sample_points(
        &src.frame().domain().shrunk(0.25),
        cfg.points_per_axis,
        DEFAULT_GRID_CAP,
    );
    let total = all.len();
    let kept: Vec<_> = all
        .into_iter()
        .filter(|x| dst.frame().domain().contains(&diffeo.map.apply(x)))
        .collect();
    let skipped = total - kept.len();
    (kept, skipped)
}

fn h_preservation(diffeo: &Diffeo, src: &Chart, dst: &Chart, cfg: &Config) -> CoreResult<Outcome> {
    let (samples, skipped) = mapped_samples(diffeo, src, dst, cfg);
    let h = pushforward_preserves_h(&diffeo.map.map, src.frame(), dst.frame(), &samples)?;
    let preserved = h.passes(cfg.tolerances.h_preservation);
    let negative = diffeo.spec.negative_control;
    Ok(Outcome::new(
        json!({
            "max_residual": h.max_residual,
            "samples": samples.len(),
            "skipped_outside_target": skipped,
            "negative_control": negative,
            "preserved": preserved,
        }),
        Verdict::from_bool(preserved != negative),
    ))
}

/// A negative control passes when the quadratic-vanishing check rejects it.
fn negative_control(
    diffeo: &Diffeo,
    src: &Chart,
    dst: &Chart,
    cfg: &Config,
) -> CoreResult<Outcome> {
    let m = src.frame().domain().center();
    let tol = cfg.tolerances.coefficient;
    let result = diffeo_expansion_check(
        &diffeo.map.map,
        src.frame(),
        dst.frame(),
        &m,
        &model_samples(src.frame().dim()),
        &cfg.grid,
        cfg.tolerances.slope,
        tol,
    );
    let (values, detected) = match result {
        Ok(check) => (
            json!({ "c": rows(&check.c), "c_max": check.c_max, "rejected_by": "quadratic-coefficients" }),
            check.c_max >= tol,
        ),
        Err(e @ Error::NotHeisenberg { .. }) => (
            json!({ "rejected_by": "h-preservation", "error": e.to_string() }),
            true,
        ),
        Err(e) => return Err(e),
    };
    Ok(Outcome::new(values, Verdict::from_bool(detected)))
}

fn expansion(
    diffeo: &Diffeo,
    src: &Chart,
    dst: &Chart,
    cfg: &Config,
    m: &[f64],
) -> CoreResult<Outcome> {
    let check = diffeo_expansion_check(
        &diffeo.map.map,
        src.frame(),
        dst.frame(),
        m,
        &model_samples(src.frame().dim()),
        &cfg.grid,
        cfg.tolerances.slope,
        cfg.tolerances.coefficient,
    )?;
    Ok(Outcome::new(
        json!({
            "base_point": m,
            "image": check.tangent.image,
            "a00": check.tangent.a00,
            "a_par": rows(&check.tangent.a_par),
            "c": rows(&check.c),
            "c_max": check.c_max,
            "quadratic_verdict": check.quadratic_verdict.to_string(),
            "max_residual": check.rate.max_residual(),
        }),
        check.verdict(),
    )
    .with_rate(&check.rate))
}

const HOMOMORPHISM_PAIRS: usize = 50;

fn homomorphism(
    diffeo: &Diffeo,
    src: &Chart,
    dst: &Chart,
    cfg: &Config,
    rng: &mut ChaCha8Rng,
) -> CoreResult<Outcome> {
    let dim = src.frame().dim();
    let (mut levi_res, mut pair_res): (f64, f64) = (0.0, 0.0);
    let points = base_points(src.frame().domain());
    for m in &points {
        let tm = tangent_map_h(&diffeo.map.map, src.frame(), dst.frame(), m)?;
        let l_src = src.frame().levi_matrix(m)?;
        let l_dst = dst.frame().levi_matrix(&tm.image)?;
        let pulled = tm.a_par.transpose() * l_dst.matrix() * &tm.a_par;
        levi_res = levi_res.max((pulled - l_src.matrix() * tm.a00).amax());
        let (g_src, g_dst) = (TangentGroup::new(l_src), TangentGroup::new(l_dst));
        for _ in 0..HOMOMORPHISM_PAIRS {
            let (x, y) = (element(rng, dim, 1.0)?, element(rng, dim, 1.0)?);
            let lhs = tm.apply(g_src.mul(&x, &y)?.as_slice());
            let tx = GroupElement::from_slice(&tm.apply(x.as_slice()))?;
            let ty = GroupElement::from_slice(&tm.apply(y.as_slice()))?;
            pair_res = pair_res.max(max_diff(&lhs, g_dst.mul(&tx, &ty)?.as_slice()));
        }
    }
    Ok(Outcome::new(
        json!({
            "levi_pullback": levi_res,
            "product": pair_res,
            "base_points": points.len(),
            "pairs_per_point": HOMOMORPHISM_PAIRS,
        }),
        Verdict::from_bool(levi_res.max(pair_res) < cfg.tolerances.homomorphism),
    ))
}

fn unit_of(u: &UnitElement) -> CoreResult<GroupoidElement> {
    GroupoidElement::unit(&u.m, u.t)
}

/// A composable triple, interior with probability 1/2.
fn triple(rng: &mut ChaCha8Rng, domain: &DomainBox) -> CoreResult<[GroupoidElement; 3]> {
    let dim = domain.dim();
    if rng.random_bool(0.5) {
        let t = rng.random_range(0.01..2.0);
        let pts: Vec<Vec<f64>> = (0..4).map(|_| uniform_in(rng, domain)).collect();
        Ok([
            GroupoidElement::interior(pts[0].clone(), pts[1].clone(), t)?,
            GroupoidElement::interior(pts[1].clone(), pts[2].clone(), t)?,
            GroupoidElement::interior(pts[2].clone(), pts[3].clone(), t)?,
        ])
    } else {
        let p = uniform_in(rng, domain);
        Ok([
            GroupoidElement::boundary(p.clone(), element(rng, dim, 1.0)?)?,
            GroupoidElement::boundary(p.clone(), element(rng, dim, 1.0)?)?,
            GroupoidElement::boundary(p, element(rng, dim, 1.0)?)?,
        ])
    }
}

fn groupoid_axioms(chart: &Chart, cfg: &Config, rng: &mut ChaCha8Rng) -> CoreResult<Outcome> {
    let gc = fresh(chart);
    let domain = chart.frame().domain().shrunk(0.5);
    let mut worst = [0.0f64; 5];
    for _ in 0..cfg.random_trials {
        let [a, b, c] = triple(rng, &domain)?;
        let ab = gc.compose(&a, &b)?;
        worst[0] = worst[0]
            .max(ab.source().distance(&b.source()))
            .max(ab.range().distance(&a.range()));
        for u in [a.range(), a.source()] {
            let unit = unit_of(&u)?;
            worst[1] = worst[1]
                .max(unit.range().distance(&u))
                .max(unit.source().distance(&u));
        }
        worst[2] = worst[2]
            .max(gc.compose(&a, &unit_of(&a.source())?)?.distance(&a))
            .max(gc.compose(&unit_of(&a.range())?, &a)?.distance(&a));
        let left = gc.compose(&ab, &c)?;
        let right = gc.compose(&a, &gc.compose(&b, &c)?)?;
        worst[3] = worst[3].max(left.distance(&right));
        let inv = gc.inverse(&a)?;
        worst[4] = worst[4]
            .max(gc.compose(&a, &inv)?.distance(&unit_of(&a.range())?))
            .max(gc.compose(&inv, &a)?.distance(&unit_of(&a.source())?));
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::new(
        json!({
            "tuples": cfg.random_trials,
            "range_source_of_product": worst[0],
            "units": worst[1],
            "unit_laws": worst[2],
            "associativity": worst[3],
            "inverses": worst[4],
        }),
        Verdict::from_bool(max < cfg.tolerances.groupoid),
    ))
}

fn round_trip(chart: &Chart, cfg: &Config, rng: &mut ChaCha8Rng) -> CoreResult<Outcome> {
    let gc = fresh(chart);
    let domain = chart.frame().domain().shrunk(0.5);
    let count = (cfg.random_trials / 5).max(20);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (x, v, t, e) = chart_element(&gc, rng, &domain)?;
        let (x2, v2, t2) = gc.gamma_inv(&e)?;
        worst = worst
            .max(max_diff(&x, &x2))
            .max(v.max_diff(&v2))
            .max((t - t2).abs());
    }
    Ok(Outcome::new(
        json!({ "samples": count, "max_residual": worst }),
        Verdict::from_bool(worst < cfg.tolerances.groupoid),
    ))
}

const MAX_DRAWS: usize = 100;

/// `gamma(x, X, t)` for random arguments, redrawn until the element lies in
/// the chart, i.e. until `eps_x^{-1}(t.X)` stays inside the box.
fn chart_element(
    gc: &GroupoidChart,
    rng: &mut ChaCha8Rng,
    domain: &DomainBox,
) -> CoreResult<(Vec<f64>, GroupElement, f64, GroupoidElement)> {
    for _ in 0..MAX_DRAWS {
        let x = uniform_in(rng, domain);
        let v = element(rng, gc.dim(), 1.0)?;
        let t = if rng.random_bool(0.2) {
            0.0
        } else {
            rng.random_range(0.05..0.5)
        };
        match gc.gamma(&x, &v, t) {
            Ok(e) => return Ok((x, v, t, e)),
            Err(Error::OutOfDomain { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidArgument(format!(
        "no chart element found in {MAX_DRAWS} draws"
    )))
}

/// A fiber target with nonzero transverse part, so that Euclidean scaling
/// visibly diverges.
fn continuity_target(dim: usize) -> CoreResult<GroupElement> {
    let v: Vec<f64> = (0..dim)
        .map(|i| {
            if i == 0 {
                1.0
            } else if i % 2 == 1 {
                0.5
            } else {
                -0.5
            }
        })
        .collect();
    GroupElement::from_slice(&v)
}

/// `(q_t, v_t, t)` along the grid.
type Sequence = Vec<(Vec<f64>, Vec<f64>, f64)>;

fn constructed_sequence(
    gc: &GroupoidChart,
    cfg: &Config,
    p: &[f64],
    target: &GroupElement,
) -> CoreResult<Sequence> {
    let eps = gc.eps(p)?;
    Ok(cfg
        .grid
        .values()
        .iter()
        .map(|&t| (p.to_vec(), eps.apply_inv(&dilate(t, target.as_slice())), t))
        .collect())
}

fn continuity(chart: &Chart, cfg: &Config) -> CoreResult<Outcome> {
    let gc = fresh(chart);
    let p = chart.frame().domain().center();
    let target = continuity_target(gc.dim())?;
    let (tol, slope_tol) = (cfg.tolerances.continuity, cfg.tolerances.slope);
    let seq = constructed_sequence(&gc, cfg, &p, &target)?;
    let constructed = continuity_check(&gc, &seq, &p, &target, tol, slope_tol)?;
    let constant: Vec<_> = cfg
        .grid
        .values()
        .iter()
        .map(|&t| (p.clone(), p.clone(), t))
        .collect();
    let unit = continuity_check(
        &gc,
        &constant,
        &p,
        &GroupElement::identity(gc.dim()),
        tol,
        slope_tol,
    )?;
    let eps = gc.eps(&p)?;
    let euclid: Vec<_> = cfg
        .grid
        .values()
        .iter()
        .map(|&t| {
            let scaled: Vec<f64> = target.as_slice().iter().map(|v| t * v).collect();
            (p.clone(), eps.apply_inv(&scaled), t)
        })
        .collect();
    let euclidean = continuity_check(&gc, &euclid, &p, &target, tol, slope_tol)?;
    let ok =
        constructed.verdict.is_pass() && unit.verdict.is_pass() && !euclidean.verdict.is_pass();
    let mut out = Outcome::new(
        json!({
            "base_point": p,
            "target": target.as_slice(),
            "constructed": { "verdict": constructed.verdict.to_string(), "slope": constructed.slope },
            "constant": { "verdict": unit.verdict.to_string(), "slope": unit.slope },
            "euclidean_scaling": {
                "verdict": euclidean.verdict.to_string(),
                "slope": euclidean.slope,
                "residuals": euclidean.residuals.iter().map(|r| [r.0, r.1]).collect::<Vec<_>>(),
            },
        }),
        Verdict::from_bool(ok),
    );
    out.residuals = constructed.residuals;
    out.slope = constructed.slope;
    Ok(out)
}

const JACOBIAN_SPOTS: usize = 20;
const SUBMERSION_FLOOR: f64 = 1e-6;

fn jacobian(chart: &Chart, rng: &mut ChaCha8Rng) -> CoreResult<Outcome> {
    let gc = fresh(chart);
    let domain = chart.frame().domain().shrunk(0.5);
    let dim = gc.dim();
    let (mut min_source, mut range_dev) = (f64::INFINITY, 0.0f64);
    for k in 0..JACOBIAN_SPOTS {
        let x = uniform_in(rng, &domain);
        let v = element(rng, dim, 1.0)?;
        let t = if k % 4 == 0 {
            0.0
        } else {
            rng.random_range(0.01..1.0)
        };
        let spot = jacobian_spot_check(&gc, &x, &v, t)?;
        min_source = min_source.min(spot.source_det.abs());
        range_dev = range_dev.max((spot.range_det - 1.0).abs());
    }
    Ok(Outcome::new(
        json!({
            "spots": JACOBIAN_SPOTS,
            "min_normalized_source_det": min_source,
            "range_det_deviation": range_dev,
            "floor": SUBMERSION_FLOOR,
        }),
        Verdict::from_bool(min_source > SUBMERSION_FLOOR && range_dev < 1e-12),
    ))
}

const COMPOSITION_SAMPLES: usize = 4;

/// Sample 0 is the box center with `X = e_1`, `Y = e_{1+d/2}`; the others
/// are random.
fn composition_limit(
    chart: &Chart,
    cfg: &Config,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> CoreResult<Outcome> {
    let gc = fresh(chart);
    let dim = gc.dim();
    let (x, v, w) = if k == 0 {
        let mut v = vec![0.0; dim];
        let mut w = vec![0.0; dim];
        v[1] = 1.0;
        w[1 + (dim - 1) / 2] = 1.0;
        (
            chart.frame().domain().center(),
            GroupElement::from_slice(&v)?,
            GroupElement::from_slice(&w)?,
        )
    } else {
        (
            uniform_in(rng, &chart.frame().domain().shrunk(0.5)),
            element(rng, dim, 1.0)?,
            element(rng, dim, 1.0)?,
        )
    };
    let cl = composition_limit_check(&gc, &x, &v, &w, &cfg.grid, cfg.tolerances.slope)?;
    Ok(Outcome::new(
        json!({
            "base_point": x,
            "x": v.as_slice(),
            "y": w.as_slice(),
            "limit": cl.limit.as_slice(),
            "exact": cl.rate.is_exact(),
            "privileged_limit": cl.privileged_limit.as_slice(),
            "privileged_slope": cl.privileged_rate.slope,
            "privileged_verdict": cl.privileged_rate.verdict.to_string(),
        }),
        cl.verdict(),
    )
    .with_rate(&cl.rate))
}

fn transition(
    diffeo: &Diffeo,
    src: &Chart,
    dst: &Chart,
    cfg: &Config,
    m: &[f64],
    rng: &mut ChaCha8Rng,
) -> CoreResult<Outcome> {
    let (gs, gd) = (fresh(src), fresh(dst));
    let v = element(rng, gs.dim(), 1.0)?;
    let rate = transition_rate(
        &gs,
        &gd,
        &diffeo.map,
        m,
        &v,
        &cfg.grid,
        cfg.tolerances.slope,
    )?;
    Ok(Outcome::new(
        json!({ "base_point": m, "x": v.as_slice(), "max_residual": rate.max_residual() }),
        rate.verdict,
    )
    .with_rate(&rate))
}

fn functor(
    diffeo: &Diffeo,
    src: &Chart,
    dst: &Chart,
    cfg: &Config,
    rng: &mut ChaCha8Rng,
) -> CoreResult<Outcome> {
    let (gs, gd) = (fresh(src), fresh(dst));
    let phi = &diffeo.map;
    let domain = src.frame().domain().shrunk(0.25);
    let image_unit = |u: &UnitElement| UnitElement {
        m: phi.apply(&u.m),
        t: u.t,
    };
    let count = (cfg.random_trials / 10).max(20);
    let (mut ends, mut products, mut inverses, mut charts): (f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0);
    for _ in 0..count {
        let [a, b, _] = triple(rng, &domain)?;
        let fa = functor_phi_h(&gs, &gd, phi, &a)?;
        let fb = functor_phi_h(&gs, &gd, phi, &b)?;
        ends = ends
            .max(fa.range().distance(&image_unit(&a.range())))
            .max(fa.source().distance(&image_unit(&a.source())));
        let f_ab = functor_phi_h(&gs, &gd, phi, &gs.compose(&a, &b)?)?;
        products = products.max(f_ab.distance(&gd.compose(&fa, &fb)?));
        let f_inv = functor_phi_h(&gs, &gd, phi, &gs.inverse(&a)?)?;
        inverses = inverses.max(f_inv.distance(&gd.inverse(&fa)?));

        let x = uniform_in(rng, &domain);
        let v = element(rng, gs.dim(), 1.0)?;
        let t = if rng.random_bool(0.25) {
            0.0
        } else {
            rng.random_range(0.05..0.5)
        };
        charts = charts.max(functor_chart_residual(&gs, &gd, phi, &x, &v, t)?);
    }
    let worst = ends.max(products).max(inverses).max(charts);
    Ok(Outcome::new(
        json!({
            "samples": count,
            "range_source": ends,
            "composition": products,
            "inverse": inverses,
            "chart_transition": charts,
        }),
        Verdict::from_bool(worst < cfg.tolerances.homomorphism),
    ))
}

fn chart_independence(
    diffeo: &Diffeo,
    src: &Chart,
    dst: &Chart,
    cfg: &Config,
) -> CoreResult<Outcome> {
    let (gs, gd) = (fresh(src), fresh(dst));
    let p = src.frame().domain().center();
    let target = continuity_target(gs.dim())?;
    let seq = constructed_sequence(&gs, cfg, &p, &target)?;
    let (here, there) = continuity_check_across(
        &gs,
        &gd,
        &diffeo.map,
        &seq,
        &p,
        &target,
        cfg.tolerances.continuity,
        cfg.tolerances.slope,
    )?;
    let mut out = Outcome::new(
        json!({
            "source_verdict": here.verdict.to_string(),
            "source_slope": here.slope,
            "target_verdict": there.verdict.to_string(),
        }),
        here.verdict.and(there.verdict),
    );
    out.residuals = there.residuals;
    out.slope = there.slope;
    Ok(out)
}
