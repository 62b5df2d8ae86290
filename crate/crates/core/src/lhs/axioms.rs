use serde_json::json;

use super::{GridSpec, LHStructure};
use crate::calculus::{kernel_vector, RANK_CUTOFF};
use crate::error::Result;
use crate::par;
use crate::report::{CheckRecord, VerificationReport, Worst};

/// Smallest accepted `|β(k)| / ‖β‖` for a unit kernel vector `k` of `dη`.
pub const TRANSVERSALITY_MIN: f64 = 1e-6;

struct AxiomSample {
    corank_gap: f64,
    rank_margin: f64,
    eta_on_kernel: f64,
    beta_on_kernel: f64,
    canonical: [f64; 4],
    canonical_ok: bool,
}

fn sample(s: &LHStructure, p: &[f64]) -> Result<AxiomSample> {
    let d = s.at(p)?;
    let omega = d.deta.to_matrix()?;
    let (k, smallest, second) = kernel_vector(&omega);
    let k: Vec<f64> = k.iter().copied().collect();
    let eta_on_kernel = d.eta.apply_vectors(&[&k])?.abs();
    let beta_norm = d.beta.components().iter().map(|x| x * x).sum::<f64>().sqrt();
    let beta_on_kernel = if beta_norm > 0.0 {
        d.beta.apply_vectors(&[&k])?.abs() / beta_norm
    } else {
        0.0
    };
    let (canonical, canonical_ok) = match d.canonical() {
        Ok(c) => (d.canonical_residuals(&c)?, true),
        Err(_) => ([f64::INFINITY; 4], false),
    };
    Ok(AxiomSample {
        corank_gap: smallest,
        rank_margin: second,
        eta_on_kernel,
        beta_on_kernel,
        canonical,
        canonical_ok,
    })
}

/// Check the three defining axioms on the grid:
/// (1) `dη` has rank `2n-2`, (2) `ker dη ⊂ ker η`, (3) `ker dη ⋔ ker β`,
/// plus the residuals of the canonical-field solves and, when there is a
/// quotient, deck invariance of `η` and `β`.
pub fn check_axioms(s: &LHStructure, grid: &GridSpec, tol: f64) -> Result<VerificationReport> {
    let points = grid.points(s.chart())?;
    let samples = par::try_map(grid.exec, &points, |p| sample(s, p))?;

    let mut corank = Worst::max();
    let mut margin = Worst::min();
    let mut eta_k = Worst::max();
    let mut beta_k = Worst::min();
    let mut canon = Worst::max();
    let mut solved = 0usize;
    for (p, a) in points.iter().zip(&samples) {
        corank.push(a.corank_gap, p);
        margin.push(a.rank_margin, p);
        eta_k.push(a.eta_on_kernel, p);
        beta_k.push(a.beta_on_kernel, p);
        canon.push(a.canonical.iter().cloned().fold(0.0, f64::max), p);
        solved += a.canonical_ok as usize;
    }

    let mut report = VerificationReport::new();
    report.push(
        CheckRecord::from_worst("axiom1_rank", &corank, tol)
            .and(margin.value > RANK_CUTOFF)
            .with_detail(json!({ "min_rank_margin": margin.value, "rank_cutoff": RANK_CUTOFF })),
    );
    report.push(CheckRecord::from_worst("axiom2_kernel_in_ker_eta", &eta_k, tol));
    report.push(CheckRecord::from_worst("axiom3_transverse", &beta_k, TRANSVERSALITY_MIN));
    report.push(
        CheckRecord::from_worst("canonical_residuals", &canon, 1e-10)
            .with_detail(json!({ "solved": solved })),
    );
    if s.quotient().is_some() {
        let deck = s.deck_residual(&points)?;
        report.push(CheckRecord::from_worst("deck_invariance", &deck, tol.max(1e-10)));
    }
    Ok(report)
}
