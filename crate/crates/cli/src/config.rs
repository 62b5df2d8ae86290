//! JSON run configuration.

use std::path::Path;

use lhskit_core::builtins::{
    contactisation, contactisation_pdq, mcduff_model, torus_bundle, McDuffModel, TorusBundle,
    CAT_MAP,
};
use lhskit_core::calculus::{Chart, CoordKind, DifferentialForm, VectorField};
use lhskit_core::expr::Expr;
use lhskit_core::lhs::{DeckMap, GridSpec, LHStructure};
use lhskit_core::suspension::Epsilon;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub structure: StructureSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub epsilon: Epsilon,
    /// Overrides `grid.seed` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Expected constant value of `dβ(C, ζ)`; built-ins supply their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_dbeta_c_zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_change: Option<NormalChangeSpec>,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default)]
    pub orbits: OrbitSpec,
    #[serde(default)]
    pub lagrangian: LagrangianSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureSpec {
    TorusBundle {
        #[serde(default = "cat_map")]
        matrix: [[i64; 2]; 2],
    },
    Mcduff {},
    Contactisation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<ContactBase>,
    },
    Expressions(ExpressionStructure),
}

fn cat_map() -> [[i64; 2]; 2] {
    CAT_MAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactBase {
    pub chart: Vec<CoordSpec>,
    pub lambda: Vec<String>,
    pub z_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionStructure {
    pub chart: Vec<CoordSpec>,
    pub eta: Vec<String>,
    pub beta: Vec<String>,
    /// Half of `dim + 1`; inferred from the chart when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotient: Option<QuotientSpec>,
}

/// One coordinate: exactly one of `period` and `range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

/// Deck map `(θ, t) ↦ (L θ, scale·t)` naming its coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotientSpec {
    pub linear: [[i64; 2]; 2],
    pub scale: f64,
    pub periodic: [String; 2],
    pub fiber: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalChangeSpec {
    #[serde(default = "zero_string")]
    pub g: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<String>>,
    #[serde(default = "plus_one")]
    pub sign: i8,
}

fn zero_string() -> String {
    "0".into()
}

fn plus_one() -> i8 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub axioms: f64,
    pub identity: f64,
    pub normal_change: f64,
    pub normal_form: f64,
    pub expansion: f64,
    pub newton: f64,
    pub cylinder: f64,
    pub integral: f64,
    pub contact_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            axioms: 1e-9,
            identity: 1e-9,
            normal_change: 1e-6,
            normal_form: 1e-4,
            expansion: 1e-6,
            newton: 1e-10,
            cylinder: 1e-8,
            integral: 1e-6,
            contact_zero: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub tau: f64,
    pub step: f64,
    /// Coarse step for the step-halving order test.
    pub halving_step: f64,
    /// Trajectory rows written in CSV mode.
    pub csv_rows: usize,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec {
            x0: None,
            tau: 1.0,
            step: 1e-3,
            halving_step: 0.1,
            csv_rows: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSpec {
    pub k_max: usize,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        OrbitSpec { k_max: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LagrangianSpec {
    /// Cylinder half-width; the collar width when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            structure: StructureSpec::TorusBundle { matrix: CAT_MAP },
            grid: GridSpec::default(),
            tolerances: Tolerances::default(),
            epsilon: Epsilon::default(),
            seed: None,
            expect_dbeta_c_zeta: None,
            normal_change: None,
            flow: FlowSpec::default(),
            orbits: OrbitSpec::default(),
            lagrangian: LagrangianSpec::default(),
        }
    }
}

/// Which built-in, if any, a structure came from.
#[derive(Debug, Clone)]
pub enum Model {
    Torus(Box<TorusBundle>),
    McDuff(Box<McDuffModel>),
    Contactisation,
    Expressions,
}

/// Structure before any normal change.
#[derive(Debug, Clone)]
pub struct BaseStructure {
    pub structure: LHStructure,
    pub model: Model,
    pub expected: Option<f64>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path.is_empty() { "$".into() } else { path }, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading {}", path.display()),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Checks serde cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if g.samples_per_coord < 2 && g.random_samples == 0 {
            return Err(CliError::config("grid", "grid has no sample points"));
        }
        for (name, v) in [
            ("tolerances.axioms", self.tolerances.axioms),
            ("tolerances.identity", self.tolerances.identity),
            ("tolerances.normal_change", self.tolerances.normal_change),
            ("tolerances.normal_form", self.tolerances.normal_form),
            ("tolerances.expansion", self.tolerances.expansion),
            ("tolerances.newton", self.tolerances.newton),
            ("tolerances.cylinder", self.tolerances.cylinder),
            ("tolerances.integral", self.tolerances.integral),
            ("tolerances.contact_zero", self.tolerances.contact_zero),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::config(name, format!("tolerance must be positive, got {v}")));
            }
        }
        if let Epsilon::Value(e) = self.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(CliError::config("epsilon", format!("epsilon must be positive, got {e}")));
            }
        }
        let f = &self.flow;
        if !(f.tau.is_finite() && f.tau >= 0.0) {
            return Err(CliError::config("flow.tau", "tau must be finite and non-negative"));
        }
        if !(f.step > 0.0 && f.halving_step > 0.0) {
            return Err(CliError::config("flow.step", "steps must be positive"));
        }
        if f.csv_rows < 2 {
            return Err(CliError::config("flow.csv_rows", "need at least two rows"));
        }
        if self.orbits.k_max == 0 {
            return Err(CliError::config("orbits.k_max", "k_max must be at least 1"));
        }
        if let Some(nc) = &self.normal_change {
            if nc.sign != 1 && nc.sign != -1 {
                return Err(CliError::config("normal_change.sign", "sign must be 1 or -1"));
            }
        }
        Ok(())
    }

    /// Sampling grid with the seed override applied.
    pub fn grid(&self) -> GridSpec {
        let mut g = self.grid.clone();
        if let Some(seed) = self.seed {
            g.seed = seed;
        }
        g
    }

    pub fn build_base(&self) -> Result<BaseStructure, CliError> {
        let err = |path: &str, e: &dyn std::fmt::Display| CliError::config(path, e);
        match &self.structure {
            StructureSpec::TorusBundle { matrix } => {
                let tb = torus_bundle(*matrix).map_err(|e| err("structure.torus_bundle.matrix", &e))?;
                Ok(BaseStructure {
                    structure: tb.structure.clone(),
                    model: Model::Torus(Box::new(tb)),
                    expected: Some(1.0),
                })
            }
            StructureSpec::Mcduff {} => {
                let m = mcduff_model().map_err(|e| err("structure.mcduff", &e))?;
                Ok(BaseStructure {
                    structure: m.structure.clone(),
                    model: Model::McDuff(Box::new(m)),
                    expected: Some(1.0),
                })
            }
            StructureSpec::Contactisation { base } => {
                let structure = match base {
                    None => contactisation_pdq(),
                    Some(b) => {
                        let chart = build_chart(&b.chart, "structure.contactisation.base.chart")?;
                        let lambda = one_form(&chart, &b.lambda, "structure.contactisation.base.lambda")?;
                        contactisation(&chart, &lambda, (b.z_range[0], b.z_range[1]))
                    }
                }
                .map_err(|e| err("structure.contactisation", &e))?;
                // (λ + dz, dz) up to the chart ordering: dβ = 0
                Ok(BaseStructure {
                    structure,
                    model: Model::Contactisation,
                    expected: Some(0.0),
                })
            }
            StructureSpec::Expressions(x) => {
                let p = "structure.expressions";
                let chart = build_chart(&x.chart, &format!("{p}.chart"))?;
                let dim = chart.dim();
                if dim % 2 == 0 {
                    return Err(CliError::config(format!("{p}.chart"), "chart dimension must be odd"));
                }
                let n = x.n.unwrap_or(dim.div_ceil(2));
                let eta = one_form(&chart, &x.eta, &format!("{p}.eta"))?;
                let beta = one_form(&chart, &x.beta, &format!("{p}.beta"))?;
                let quotient = match &x.quotient {
                    None => None,
                    Some(q) => {
                        let idx = |name: &str, path: &str| {
                            chart
                                .index_of(name)
                                .ok_or_else(|| CliError::config(path, format!("unknown coordinate '{name}'")))
                        };
                        let qp = format!("{p}.quotient");
                        let periodic = [
                            idx(&q.periodic[0], &format!("{qp}.periodic[0]"))?,
                            idx(&q.periodic[1], &format!("{qp}.periodic[1]"))?,
                        ];
                        let fiber = idx(&q.fiber, &format!("{qp}.fiber"))?;
                        Some(DeckMap::new(q.linear, q.scale, periodic, fiber).map_err(|e| err(&qp, &e))?)
                    }
                };
                let structure =
                    LHStructure::new(chart, eta, beta, n, quotient).map_err(|e| err(p, &e))?;
                Ok(BaseStructure {
                    structure,
                    model: Model::Expressions,
                    expected: self.expect_dbeta_c_zeta,
                })
            }
        }
    }

    /// Parsed normal-change data on a chart.
    pub fn normal_change_exprs(&self, chart: &Chart) -> Result<Option<(Expr, VectorField, i8)>, CliError> {
        let Some(nc) = &self.normal_change else {
            return Ok(None);
        };
        let g = chart
            .parse(&nc.g)
            .map_err(|e| CliError::config("normal_change.g", e))?;
        let xi = match &nc.xi {
            None => VectorField::zero(chart.dim()),
            Some(parts) => {
                if parts.len() != chart.dim() {
                    return Err(CliError::config(
                        "normal_change.xi",
                        format!("expected {} components, got {}", chart.dim(), parts.len()),
                    ));
                }
                let comps = parts
                    .iter()
                    .enumerate()
                    .map(|(i, s)| chart.parse(s).map_err(|e| CliError::config(format!("normal_change.xi[{i}]"), e)))
                    .collect::<Result<Vec<_>, _>>()?;
                VectorField::new(comps)
            }
        };
        Ok(Some((g, xi, nc.sign)))
    }
}

fn build_chart(coords: &[CoordSpec], path: &str) -> Result<Chart, CliError> {
    let mut out = Vec::with_capacity(coords.len());
    for (i, c) in coords.iter().enumerate() {
        let kind = match (c.period, c.range) {
            (Some(period), None) => CoordKind::Periodic { period },
            (None, Some([lo, hi])) => CoordKind::Bounded { lo, hi },
            _ => {
                return Err(CliError::config(
                    format!("{path}[{i}]"),
                    "give exactly one of 'period' and 'range'",
                ))
            }
        };
        out.push((c.name.clone(), kind));
    }
    Chart::new(out).map_err(|e| CliError::config(path, e))
}

fn one_form(chart: &Chart, parts: &[String], path: &str) -> Result<DifferentialForm, CliError> {
    if parts.len() != chart.dim() {
        return Err(CliError::config(
            path,
            format!("expected {} components, got {}", chart.dim(), parts.len()),
        ));
    }
    let comps = parts
        .iter()
        .enumerate()
        .map(|(i, s)| chart.parse(s).map_err(|e| CliError::config(format!("{path}[{i}]"), e)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DifferentialForm::one_form(comps))
}
