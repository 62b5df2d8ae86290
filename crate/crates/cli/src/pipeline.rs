//! The checks behind each subcommand.

use std::time::Instant;

use lhskit_core::dynamics::{
    build_cylinder, expansion_check, orbit_census, step_halving_ratio, Flow, OrbitCensus, K_MAX,
};
use lhskit_core::lhs::{
    check_axioms, contact_sign, deformation_at, normal_change, stabham_scan, DeformationVerdict,
    GridSpec, LHStructure, NormalChangeReport,
};
use lhskit_core::obstructions::{admissible_surface, verdict_table, SurfaceDescriptor};
use lhskit_core::par::{self, Exec};
use lhskit_core::report::{CheckRecord, Relation, VerificationReport, Worst};
use lhskit_core::suspension::{build_with, classification_csv, SuspensionDomain};
use serde_json::json;

use crate::config::{Config, Model};
use crate::output::Table;
use crate::CliError;

/// Bounds on the step-halving error ratio of a fourth-order scheme.
pub const HALVING_RATIO: (f64, f64) = (12.0, 20.0);
const ROUND_OFF: f64 = 1e-13;

/// Loaded structure plus the run settings.
pub struct Context {
    pub config: Config,
    pub grid: GridSpec,
    pub structure: LHStructure,
    pub model: Model,
    /// Constant value `dβ(C, ζ)` must take, when known.
    pub expected: Option<f64>,
    /// The structure is a built-in with no normal change applied.
    pub pristine: bool,
    setup: Vec<CheckRecord>,
}

/// Records of one stage and an optional table for CSV output.
#[derive(Default)]
pub struct Stage {
    pub records: Vec<CheckRecord>,
    pub table: Option<Table>,
}

impl Stage {
    fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }
}

impl Context {
    pub fn new(config: Config, exec: Exec) -> Result<Self, CliError> {
        let grid = config.grid().with_exec(exec);
        let base = config.build_base()?;
        let mut ctx = Context {
            grid,
            structure: base.structure,
            pristine: !matches!(base.model, Model::Expressions),
            model: base.model,
            expected: base.expected,
            setup: Vec::new(),
            config,
        };
        if let Some((g, xi, sign)) = ctx.config.normal_change_exprs(ctx.structure.chart())? {
            ctx.pristine = false;
            ctx.expected = ctx.config.expect_dbeta_c_zeta;
            match normal_change(&ctx.structure, &g, &xi, sign, &ctx.grid) {
                Ok(nc) => {
                    ctx.setup.push(normal_change_record(&nc.report, ctx.config.tolerances.normal_change));
                    ctx.structure = nc.structure;
                }
                Err(e) => ctx.setup.push(CheckRecord::failed("normal_change", &e)),
            }
        }
        Ok(ctx)
    }

    /// Records from loading the structure; a failure here stops every stage.
    pub fn setup_records(&self) -> &[CheckRecord] {
        &self.setup
    }

    pub fn setup_ok(&self) -> bool {
        self.setup.iter().all(|r| r.pass)
    }

    /// Unmodified torus-bundle built-in: orbits and cylinders apply.
    pub fn is_torus_bundle(&self) -> bool {
        self.torus_matrix().is_some()
    }

    fn torus_matrix(&self) -> Option<[[i64; 2]; 2]> {
        match (&self.model, self.pristine) {
            (Model::Torus(tb), true) => Some(tb.matrix),
            _ => None,
        }
    }

    /// Default flow start point: inside the chart, away from coordinate
    /// singularities.
    fn default_x0(&self) -> Vec<f64> {
        match &self.model {
            Model::Torus(_) => vec![0.2, 0.6, 1.4],
            Model::McDuff(_) => vec![0.0, 1.0, 0.0],
            Model::Contactisation if self.structure.dim() == 3 => vec![0.3, 0.5, 0.2],
            _ => (0..self.structure.dim())
                .map(|i| {
                    let (lo, hi) = self.structure.chart().sample_range(i);
                    0.5 * (lo + hi)
                })
                .collect(),
        }
    }
}

fn normal_change_record(r: &NormalChangeReport, tol: f64) -> CheckRecord {
    let mut rec = CheckRecord::from_worst(
        "normal_change_identity",
        &Worst {
            relation: Relation::AtMost,
            value: r.identity_residual,
            point: r.identity_worst_point.clone(),
            samples: r.samples,
        },
        tol,
    );
    rec.detail = Some(json!(r));
    rec
}

fn record_or<T>(id: &str, r: lhskit_core::Result<T>, stage: &mut Stage) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            stage.push(CheckRecord::failed(id, &e));
            None
        }
    }
}

fn bounded(id: &str, value: f64, bound: f64, samples: usize) -> CheckRecord {
    CheckRecord::from_worst(
        id,
        &Worst {
            relation: Relation::AtMost,
            value,
            point: None,
            samples,
        },
        bound,
    )
}

/// Axioms, the deformation-type equivalence, the value of `dβ(C, ζ)`,
/// contact signs of `η ± tβ` and, for the McDuff model, its frame relations.
pub fn verify(ctx: &Context) -> Stage {
    let mut st = Stage::default();
    let s = &ctx.structure;
    let tol = &ctx.config.tolerances;
    let grid = &ctx.grid;
    if let Some(rep) = record_or("axioms", check_axioms(s, grid, tol.axioms), &mut st) {
        st.records.extend(rep.checks);
    }
    let scan = grid.points(s.chart()).and_then(|points| {
        let values = par::try_map(grid.exec, &points, |p| deformation_at(s, p))?;
        Ok((points, values))
    });
    if let Some((points, values)) = record_or("deformation_equivalence", scan, &mut st) {
        let verdict = DeformationVerdict::from_samples(&points, &values);
        let mut rec = CheckRecord::flag("deformation_equivalence", verdict.agreement, verdict.samples);
        rec.worst_residual = verdict.disagreements as f64;
        rec.worst_point = Some(verdict.worst_point.clone());
        st.push(rec.with_detail(json!(verdict)));
        if let Some(e) = ctx.expected {
            let mut w = Worst::max();
            for (p, v) in points.iter().zip(&values) {
                w.push((v.dbeta_c_zeta - e).abs(), p);
            }
            st.push(
                CheckRecord::from_worst("dbeta_c_zeta_identity", &w, tol.identity)
                    .with_detail(json!({ "expected": e })),
            );
        }
    }
    let signs = (|| {
        Ok((
            contact_sign(s, 0.01, grid)?,
            contact_sign(s, -0.01, grid)?,
            contact_sign(s, 0.0, grid)?,
        ))
    })();
    if let Some((plus, minus, zero)) = record_or("contact_signs", signs, &mut st) {
        let opposite = matches!(
            (plus.uniform_sign, minus.uniform_sign),
            (Some(1), Some(-1)) | (Some(-1), Some(1))
        );
        st.push(
            CheckRecord::flag("contact_signs_opposite", opposite, plus.samples + minus.samples)
                .with_detail(json!({ "plus": plus, "minus": minus })),
        );
        st.push(
            bounded("contact_sign_zero", zero.raw_max_abs, tol.contact_zero, zero.samples)
                .with_detail(json!(zero)),
        );
    }
    if let (Model::McDuff(m), true) = (&ctx.model, ctx.pristine) {
        if let Some(rep) = record_or("mcduff_audit", m.audit(grid), &mut st) {
            st.records.extend(rep.checks);
        }
    }
    st
}

fn suspension(ctx: &Context) -> lhskit_core::Result<SuspensionDomain> {
    build_with(&ctx.structure, ctx.config.epsilon, &ctx.grid)
}

/// Suspension domain: non-degeneracy, the normal form of its Liouville
/// field along `M`, and the boundary contact signs.
pub fn suspend(ctx: &Context) -> Stage {
    let mut st = Stage::default();
    let tol = &ctx.config.tolerances;
    let grid = &ctx.grid;
    let Some(d) = record_or("suspension_build", suspension(ctx), &mut st) else {
        return st;
    };
    st.push(CheckRecord::flag("suspension_build", true, 1).with_detail(json!({
        "epsilon": d.epsilon(),
        "halvings": d.halvings,
        "min_pfaffian_ratio": d.min_pfaffian_ratio,
    })));
    if let Some(rep) = record_or("suspension_normal_form", d.classification_check(grid), &mut st) {
        let n = rep.checks.len();
        st.push(bounded("suspension_restriction", rep.max_restriction_residual, tol.axioms, n));
        st.push(bounded("suspension_normal_form_slope", rep.max_slope_error, tol.normal_form, n));
        st.push(
            CheckRecord::flag("suspension_repelling_agrees", rep.agrees_with_deformation, n).with_detail(
                json!({
                    "repelling": rep.repelling,
                    "repelling_formula": rep.repelling_formula,
                    "f_min": rep.f_min,
                    "f_max": rep.f_max,
                }),
            ),
        );
        st.table = Some(Table::raw(classification_csv(ctx.structure.chart().names(), &rep.checks)));
    }
    let identity = grid.points(ctx.structure.chart()).and_then(|points| {
        let eps = d.epsilon();
        let xs: Vec<Vec<f64>> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut x = p.clone();
                x.push(eps * ((i % 5) as f64 - 2.0) / 2.0);
                x
            })
            .collect();
        let r = par::try_map(grid.exec, &xs, |x| d.liouville_residual(x))?;
        let mut w = Worst::max();
        for (x, v) in xs.iter().zip(r) {
            w.push(v, x);
        }
        Ok(w)
    });
    if let Some(w) = record_or("suspension_liouville_identity", identity, &mut st) {
        st.push(CheckRecord::from_worst("suspension_liouville_identity", &w, tol.axioms));
    }
    if let Some((plus, minus)) = record_or("boundary_contact_signs", d.boundary_contact_signs(grid), &mut st) {
        let opposite = matches!(
            (plus.uniform_sign, minus.uniform_sign),
            (Some(1), Some(-1)) | (Some(-1), Some(1))
        );
        st.push(
            CheckRecord::flag("boundary_contact_signs", opposite, plus.samples + minus.samples)
                .with_detail(json!({ "plus": plus, "minus": minus })),
        );
    }
    st
}

/// Expansion law `(φ^τ)^* η = e^τ η` and the convergence order of RK4.
pub fn flow(ctx: &Context) -> Stage {
    let mut st = Stage::default();
    let f = &ctx.config.flow;
    let tol = &ctx.config.tolerances;
    let s = &ctx.structure;
    let x0 = f.x0.clone().unwrap_or_else(|| ctx.default_x0());
    if x0.len() != s.dim() {
        st.push(CheckRecord::failed(
            "flow_start",
            &format!("start point has {} coordinates, chart has {}", x0.len(), s.dim()),
        ));
        return st;
    }
    if let Some(r) = record_or("expansion", expansion_check(s, &x0, f.tau, f.step), &mut st) {
        let point = Some(r.point.clone());
        let mut a = bounded("expansion_eta", r.eta_residual, tol.expansion, 1);
        a.worst_point = point.clone();
        let mut b = bounded("expansion_deta", r.deta_residual, tol.expansion, 1);
        b.worst_point = point;
        st.push(a.with_detail(json!({ "tau": r.tau, "step": r.step })));
        st.push(b);
    }
    let halving = step_halving_ratio(s, &x0, f.tau, f.halving_step);
    if let Some((coarse, fine, ratio)) = record_or("rk4_step_halving", halving, &mut st) {
        let (lo, hi) = HALVING_RATIO;
        let mut rec = CheckRecord::flag("rk4_step_halving", (lo..=hi).contains(&ratio), 1);
        if !(coarse > ROUND_OFF) {
            rec.error = Some("integration error at round-off level: the start point is (nearly) stationary".into());
        }
        rec.worst_residual = ratio;
        rec.bound = lo;
        rec.relation = Relation::AtLeast;
        st.push(rec.with_detail(json!({
            "range": [lo, hi],
            "step": f.halving_step,
            "error_coarse": coarse,
            "error_fine": fine,
        })));
    }
    let field = s.liouville_field();
    let tr = Flow::liouville(&field, s).integrate(&x0, f.tau, f.step, false);
    if let Some(tr) = record_or("trajectory", tr, &mut st) {
        let last = tr.times.len() - 1;
        let rows = f.csv_rows.min(tr.times.len());
        let mut idx: Vec<usize> = (0..rows).map(|i| i * last / (rows - 1).max(1)).collect();
        idx.dedup();
        let mut header = vec!["time".to_string()];
        header.extend(s.chart().names().iter().cloned());
        let body = idx
            .iter()
            .map(|&i| std::iter::once(tr.times[i]).chain(tr.states[i].iter().copied()).collect())
            .collect();
        st.table = Some(Table::numeric(header, body));
    }
    st
}

fn census_for(ctx: &Context, id: &str, k_max: usize, st: &mut Stage) -> Option<OrbitCensus> {
    let Some(a) = ctx.torus_matrix() else {
        st.push(CheckRecord::failed(
            id,
            &"periodic orbits are only enumerated for the torus_bundle built-in without a normal change",
        ));
        return None;
    };
    record_or(id, orbit_census(a, k_max, ctx.grid.exec), st)
}

/// Periodic orbits of the suspension flow against the algebraic count.
pub fn orbits(ctx: &Context, k_max: Option<usize>) -> Stage {
    let mut st = Stage::default();
    let k_max = k_max.unwrap_or(ctx.config.orbits.k_max);
    if !(1..=K_MAX).contains(&k_max) {
        st.push(CheckRecord::failed("orbit_census", &format!("k_max must lie in 1..={K_MAX}")));
        return st;
    }
    let Some(c) = census_for(ctx, "orbit_census", k_max, &mut st) else {
        return st;
    };
    let tol = ctx.config.tolerances.newton;
    for row in &c.rows {
        let ok = row.matched && row.algebraic == row.enumerated as u64 && row.algebraic == row.refined as u64;
        let rec = bounded(&format!("orbit_census_k{}", row.k), row.max_residual, tol, row.refined)
            .and(ok)
            .with_detail(json!(row));
        st.push(rec);
    }
    let orbits: Vec<_> = c
        .orbits
        .iter()
        .map(|o| json!({ "k": o.k, "point": o.point, "residual": o.residual }))
        .collect();
    if let Some(last) = st.records.last_mut() {
        if let Some(serde_json::Value::Object(m)) = last.detail.as_mut() {
            m.insert("orbits".into(), json!(orbits));
        }
    }
    let header = ["k", "algebraic", "enumerated", "refined", "max_residual", "matched"];
    let rows = c
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.algebraic.to_string(),
                r.enumerated.to_string(),
                r.refined.to_string(),
                crate::output::float(r.max_residual),
                r.matched.to_string(),
            ]
        })
        .collect();
    st.table = Some(Table::new(header.iter().map(|s| s.to_string()).collect(), rows));
    st
}

/// Exact Lagrangian cylinder over the period-one orbit and its Legendrian
/// boundary circles.
pub fn lagrangian(ctx: &Context) -> Stage {
    let mut st = Stage::default();
    let tol = ctx.config.tolerances.cylinder;
    let Some(c) = census_for(ctx, "lagrangian_cylinder", 1, &mut st) else {
        return st;
    };
    let Some(d) = record_or("lagrangian_cylinder", suspension(ctx), &mut st) else {
        return st;
    };
    let width = ctx.config.lagrangian.epsilon.unwrap_or(d.epsilon());
    for orbit in &c.orbits {
        let Some(cyl) = record_or(
            "lagrangian_cylinder",
            build_cylinder(&d, orbit, width, ctx.grid.exec),
            &mut st,
        ) else {
            continue;
        };
        let samples = cyl.curve_samples * cyl.s_samples;
        let mut rec = bounded(
            "lagrangian_cylinder_exact",
            cyl.flow_residual.max(cyl.s_residual),
            tol,
            samples,
        );
        rec.worst_point = Some(cyl.worst_point.clone());
        st.push(rec.with_detail(json!(cyl)));
        st.push(bounded("legendrian_boundary_plus", cyl.boundary_residual[0], tol, cyl.curve_samples));
        st.push(bounded("legendrian_boundary_minus", cyl.boundary_residual[1], tol, cyl.curve_samples));
    }
    st
}

/// Exactness of `(ι_ζ dβ + (n−1)β) ∧ dη^(n−1)` on the closed quotient.
pub fn integral(ctx: &Context) -> Stage {
    let mut st = Stage::default();
    let tol = &ctx.config.tolerances;
    let Some(r) = record_or("stabham", stabham_scan(&ctx.structure, &ctx.grid), &mut st) else {
        return st;
    };
    st.push(bounded("stabham_integral", r.integral.abs(), tol.integral, r.samples).with_detail(json!(r)));
    st.push(
        CheckRecord::flag("stabham_excess_vanishes_somewhere", r.contains_zero, r.samples)
            .with_detail(json!({ "excess_min": r.excess_min, "excess_max": r.excess_max })),
    );
    st.push(bounded("stabham_deck_invariance", r.deck_residual, tol.axioms, r.samples));
    if ctx.pristine {
        st.push(bounded("stabham_integrand_vanishes", r.integrand_sup, tol.identity, r.samples));
    }
    st
}

/// Surface query for `obstruct`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceQuery {
    One(SurfaceDescriptor),
    Table(u32),
}

pub fn parse_surface(text: &str) -> Result<SurfaceDescriptor, CliError> {
    let bad = |m: String| CliError::config("--surface", m);
    let num = |s: &str| s.parse::<u32>().map_err(|_| bad(format!("'{s}' is not a count")));
    let d = match text {
        "sphere" => Ok(SurfaceDescriptor::orientable(0)),
        "torus" => Ok(SurfaceDescriptor::orientable(1)),
        "klein" | "klein_bottle" => SurfaceDescriptor::non_orientable(2),
        "rp2" => SurfaceDescriptor::non_orientable(1),
        _ => {
            if let Some(g) = text.strip_prefix("genus:").or_else(|| text.strip_prefix("genus-")) {
                Ok(SurfaceDescriptor::orientable(num(g)?))
            } else if let Some(m) = text.strip_prefix("crosscaps:").or_else(|| text.strip_prefix("crosscaps-")) {
                SurfaceDescriptor::non_orientable(num(m)?)
            } else {
                return Err(bad(format!(
                    "unknown surface '{text}' (sphere, torus, klein, rp2, genus:N, crosscaps:N)"
                )));
            }
        }
    };
    d.map_err(|e| bad(e.to_string()))
}

/// Admissibility of one surface, or the whole verdict table.
pub fn obstruct(query: &SurfaceQuery, mod4: bool) -> Stage {
    let mut st = Stage::default();
    let header: Vec<String> = ["surface", "euler_characteristic", "admissible", "label", "reasons"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let row = |v: &lhskit_core::obstructions::AdmissibilityVerdict| {
        vec![
            v.surface.to_string(),
            v.euler_characteristic.to_string(),
            v.admissible.to_string(),
            v.label.as_str().to_string(),
            v.reasons.iter().map(|r| r.id()).collect::<Vec<_>>().join(";"),
        ]
    };
    match query {
        SurfaceQuery::One(d) => {
            let v = admissible_surface(*d, mod4);
            st.push(
                CheckRecord::flag("admissible_surface", v.admissible, 1)
                    .with_detail(json!({ "mod4_filter": mod4, "verdict": v })),
            );
            st.table = Some(Table::new(header, vec![row(&v)]));
        }
        SurfaceQuery::Table(max) => {
            let table = verdict_table(*max, mod4);
            st.push(
                CheckRecord::flag("obstruction_table", true, table.len())
                    .with_detail(json!({ "mod4_filter": mod4, "verdicts": table })),
            );
            st.table = Some(Table::new(header, table.iter().map(row).collect()));
        }
    }
    st
}

/// Run `f`, stamping the stage time on its records when asked.
pub fn timed(timings: bool, f: impl FnOnce() -> Stage) -> Stage {
    let start = Instant::now();
    let mut st = f();
    if timings {
        let ms = start.elapsed().as_secs_f64() * 1e3;
        for r in &mut st.records {
            r.wall_time_ms = Some(ms);
        }
    }
    st
}

/// Fold stages into a report carrying the seed and the normalised config.
pub fn assemble(config: Option<&Config>, seed: Option<u64>, stages: Vec<Stage>) -> VerificationReport {
    let mut rep = VerificationReport::new();
    rep.seed = seed;
    rep.config = config.map(|c| serde_json::to_value(c).expect("config serialises"));
    for st in stages {
        for r in st.records {
            rep.push(r);
        }
    }
    rep
}
