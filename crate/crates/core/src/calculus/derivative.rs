use super::form::{mask_indices, DifferentialForm, Form, FormValue};
use crate::error::{Error, Result};
use crate::expr::Expr;

fn check_degree(f: &DifferentialForm) -> Result<()> {
    if f.degree() >= f.dim() {
        return Err(Error::Degree(format!(
            "d of a {}-form on dimension {}",
            f.degree(),
            f.dim()
        )));
    }
    Ok(())
}

/// `d(Σ f_I dx^I) = Σ_j ∂_j f_I dx^j ∧ dx^I`, with coefficients differentiated
/// symbolically so the result can be differentiated again.
pub fn exterior_derivative(f: &DifferentialForm) -> Result<DifferentialForm> {
    check_degree(f)?;
    let dim = f.dim();
    let shape = Form::<Expr>::zero(dim, f.degree() + 1)?;
    let mut acc: Vec<Expr> = shape.coeffs().to_vec();
    let out_masks = shape.masks();
    for (mask, coeff) in f.masks().iter().zip(f.coeffs()) {
        if coeff.is_zero() {
            continue;
        }
        for j in 0..dim {
            if mask & (1 << j) != 0 {
                continue;
            }
            let partial = coeff.derivative(j);
            if partial.is_zero() {
                continue;
            }
            let target = mask | (1 << j);
            let p = out_masks.iter().position(|m| *m == target).unwrap();
            let negative = (mask & ((1u32 << j) - 1)).count_ones() % 2 == 1;
            acc[p] = if negative {
                acc[p].clone() - partial
            } else {
                acc[p].clone() + partial
            };
        }
    }
    Form::from_coeffs(dim, f.degree() + 1, acc)
}

/// Value of `df` at a point computed from first-order jets of the
/// coefficients of `f`. Independent of [`exterior_derivative`].
pub fn exterior_derivative_at(f: &DifferentialForm, point: &[f64]) -> Result<FormValue> {
    check_degree(f)?;
    let dim = f.dim();
    let mut out = FormValue::zero(dim, f.degree() + 1)?;
    for (mask, coeff) in f.masks().iter().zip(f.coeffs()) {
        if coeff.is_zero() {
            continue;
        }
        let jet = coeff.eval_jet(point).map_err(|e| Error::eval(point, e))?;
        for j in 0..dim {
            if mask & (1 << j) != 0 {
                continue;
            }
            let mut idx = mask_indices(*mask);
            let negative = idx.iter().filter(|&&i| i < j).count() % 2 == 1;
            idx.push(j);
            idx.sort_unstable();
            let current = out.get(&idx);
            let term = if negative { -jet.partials[j] } else { jet.partials[j] };
            out.set(&idx, current + term);
        }
    }
    Ok(out)
}
