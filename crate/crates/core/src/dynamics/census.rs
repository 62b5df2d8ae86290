use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Flow;
use crate::builtins::{check_hyperbolic, torus_bundle, TorusBundle};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

type M2 = [[i64; 2]; 2];

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 30;
const MATCH_TOL: f64 = 1e-6;
const SEED_PERTURBATION: f64 = 1e-3;
/// Largest `k` accepted by the census.
pub const K_MAX: usize = 12;

fn overflow() -> Error {
    Error::InvalidInput("integer overflow in census arithmetic".into())
}

fn mul(a: M2, b: M2) -> Result<M2> {
    let mut c = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = 0i64;
            for k in 0..2 {
                s = a[i][k]
                    .checked_mul(b[k][j])
                    .and_then(|p| s.checked_add(p))
                    .ok_or_else(overflow)?;
            }
            c[i][j] = s;
        }
    }
    Ok(c)
}

fn transpose(a: M2) -> M2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// `(Aᵀ)^k`, the k-th return map `θ ↦ Aᵀθ` of the section `{t = 1}`.
pub fn return_matrix(a: M2, k: usize) -> Result<M2> {
    let r = transpose(a);
    let mut p = [[1, 0], [0, 1]];
    for _ in 0..k {
        p = mul(p, r)?;
    }
    Ok(p)
}

fn minus_identity(m: M2) -> Result<M2> {
    Ok([
        [m[0][0].checked_sub(1).ok_or_else(overflow)?, m[0][1]],
        [m[1][0], m[1][1].checked_sub(1).ok_or_else(overflow)?],
    ])
}

/// `|det(A^k − I)| = |tr(A^k) − 2|` for `A ∈ SL₂(ℤ)`.
pub fn algebraic_count(a: M2, k: usize) -> Result<u64> {
    check_hyperbolic(a)?;
    let p = return_matrix(a, k)?;
    let tr = p[0][0].checked_add(p[1][1]).ok_or_else(overflow)?;
    Ok((tr - 2).unsigned_abs())
}

/// `U M V = diag(d1, d2)` with `U, V` unimodular and `d1 | d2`, `d_i ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Smith {
    pub u: M2,
    pub v: M2,
    pub d: [i64; 2],
}

pub fn smith_normal_form(m: M2) -> Result<Smith> {
    let mut a = m;
    let mut u = [[1i64, 0], [0, 1]];
    let mut v = [[1i64, 0], [0, 1]];
    let row_op = |x: &mut M2, dst: usize, src: usize, q: i64| -> Result<()> {
        for c in 0..2 {
            x[dst][c] = x[src][c]
                .checked_mul(q)
                .and_then(|p| x[dst][c].checked_sub(p))
                .ok_or_else(overflow)?;
        }
        Ok(())
    };
    let col_op = |x: &mut M2, dst: usize, src: usize, q: i64| -> Result<()> {
        for r in 0..2 {
            x[r][dst] = x[r][src]
                .checked_mul(q)
                .and_then(|p| x[r][dst].checked_sub(p))
                .ok_or_else(overflow)?;
        }
        Ok(())
    };
    let swap_rows = |x: &mut M2| x.swap(0, 1);
    let swap_cols = |x: &mut M2| {
        for r in x.iter_mut() {
            r.swap(0, 1);
        }
    };
    loop {
        // pivot: smallest nonzero entry to (0, 0)
        let mut best: Option<(usize, usize)> = None;
        for i in 0..2 {
            for j in 0..2 {
                if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        if pi == 1 {
            swap_rows(&mut a);
            swap_rows(&mut u);
        }
        if pj == 1 {
            swap_cols(&mut a);
            swap_cols(&mut v);
        }
        let p = a[0][0];
        let q_row = a[1][0] / p;
        row_op(&mut a, 1, 0, q_row)?;
        row_op(&mut u, 1, 0, q_row)?;
        let q_col = a[0][1] / p;
        col_op(&mut a, 1, 0, q_col)?;
        col_op(&mut v, 1, 0, q_col)?;
        if a[1][0] != 0 || a[0][1] != 0 {
            continue;
        }
        if a[1][1] % p != 0 {
            // bring a[1][1] into the first row and repeat
            for c in 0..2 {
                a[0][c] = a[0][c].checked_add(a[1][c]).ok_or_else(overflow)?;
                u[0][c] = u[0][c].checked_add(u[1][c]).ok_or_else(overflow)?;
            }
            continue;
        }
        break;
    }
    for i in 0..2 {
        if a[i][i] < 0 {
            a[i][i] = -a[i][i];
            u[i][0] = -u[i][0];
            u[i][1] = -u[i][1];
        }
    }
    Ok(Smith {
        u,
        v,
        d: [a[0][0], a[1][1]],
    })
}

/// Exact point of `(ℚ/ℤ)²` with a common denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub num: [i64; 2],
    pub den: i64,
}

impl Rational {
    pub fn to_f64(self) -> [f64; 2] {
        [
            self.num[0] as f64 / self.den as f64,
            self.num[1] as f64 / self.den as f64,
        ]
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Solutions of `(R^k − I) θ ≡ 0 mod 1` for the return matrix `R = Aᵀ`,
/// enumerated from the Smith normal form and sorted.
pub fn rational_fixed_points(a: M2, k: usize) -> Result<Vec<Rational>> {
    check_hyperbolic(a)?;
    let m = minus_identity(return_matrix(a, k)?)?;
    let snf = smith_normal_form(m)?;
    let [d1, d2] = snf.d;
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidInput("return map has a non-isolated fixed set".into()));
    }
    let ratio = d2 / d1;
    let mut out = Vec::with_capacity((d1 * d2) as usize);
    // θ = V (a/d1, b/d2) with common denominator d2
    for x in 0..d1 {
        for y in 0..d2 {
            let phi = [x.checked_mul(ratio).ok_or_else(overflow)?, y];
            let mut num = [0i64; 2];
            for (i, n) in num.iter_mut().enumerate() {
                let s = snf.v[i][0]
                    .checked_mul(phi[0])
                    .and_then(|p| snf.v[i][1].checked_mul(phi[1]).and_then(|q| p.checked_add(q)))
                    .ok_or_else(overflow)?;
                *n = s.rem_euclid(d2);
            }
            let g = gcd(gcd(num[0], num[1]), d2);
            out.push(Rational {
                num: [num[0] / g, num[1] / g],
                den: d2 / g,
            });
        }
    }
    out.sort_by(|p, q| {
        let (a, b) = (p.to_f64(), q.to_f64());
        a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
    });
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub k: usize,
    /// Base point `(θ₁, θ₂, 1)` on the section.
    pub point: Vec<f64>,
    pub period: f64,
    pub residual: f64,
    pub rational: Option<Rational>,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub k: usize,
    pub algebraic: u64,
    pub enumerated: usize,
    pub refined: usize,
    pub max_residual: f64,
    /// Refined points and enumerated points are in bijection.
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCensus {
    pub matrix: M2,
    pub rows: Vec<CensusRow>,
    pub orbits: Vec<PeriodicOrbit>,
}

impl OrbitCensus {
    pub fn counts(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.refined as u64).collect()
    }

    pub fn consistent(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.matched && r.algebraic as usize == r.refined && r.algebraic as usize == r.enumerated)
    }
}

fn wrap_half(x: f64) -> f64 {
    x - x.round()
}

fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrap_half(x - y).abs())
        .fold(0.0, f64::max)
}

/// `k`-th return map of the section `{t = 1}` by the integrated Liouville
/// flow, with its `θ`-Jacobian.
fn return_map(tb: &TorusBundle, theta: [f64; 2], k: usize) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let s = &tb.structure;
    let field = s.liouville_field();
    let flow = Flow::liouville(&field, s);
    let tau = k as f64 * tb.nu();
    let step = tb.nu() / 64.0;
    let traj = flow.integrate(&[theta[0], theta[1], 1.0], tau, step, true)?;
    let mut x = traj.last_state().to_vec();
    let mut j = traj.last_jacobian().expect("variational run").clone();
    // snap to the nearest copy of the section
    let deck = s.quotient().expect("torus bundles have a quotient");
    if x[2] > deck.scale().sqrt() {
        deck.apply_inverse(&mut x);
        let m: DMatrix<f64> = deck.as_linear_map(3).matrix.try_inverse().expect("invertible");
        j = m * j;
    }
    Ok((
        [x[0].rem_euclid(1.0), x[1].rem_euclid(1.0)],
        [[j[(0, 0)], j[(0, 1)]], [j[(1, 0)], j[(1, 1)]]],
    ))
}

fn newton(tb: &TorusBundle, seed: [f64; 2], k: usize) -> Result<PeriodicOrbit> {
    let mut theta = seed;
    for it in 0..=NEWTON_MAX_ITER {
        let (p, j) = return_map(tb, theta, k)?;
        let r = [wrap_half(p[0] - theta[0]), wrap_half(p[1] - theta[1])];
        let res = r[0].abs().max(r[1].abs());
        if res <= NEWTON_TOL {
            return Ok(PeriodicOrbit {
                k,
                point: vec![theta[0].rem_euclid(1.0), theta[1].rem_euclid(1.0), 1.0],
                period: k as f64 * tb.nu(),
                residual: res,
                rational: None,
                newton_iterations: it,
            });
        }
        let m = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-14 || it == NEWTON_MAX_ITER {
            break;
        }
        let dx = [
            (m[1][1] * r[0] - m[0][1] * r[1]) / det,
            (-m[1][0] * r[0] + m[0][0] * r[1]) / det,
        ];
        theta = [(theta[0] - dx[0]).rem_euclid(1.0), (theta[1] - dx[1]).rem_euclid(1.0)];
    }
    Err(Error::NewtonDivergence {
        seed: vec![seed[0], seed[1], 1.0],
    })
}

/// Periodic points of the return map for `k = 1..=k_max`: exact count,
/// exact enumeration, and Newton refinement on the integrated flow from
/// perturbed rational seeds.
pub fn orbit_census(a: M2, k_max: usize, exec: Exec) -> Result<OrbitCensus> {
    check_hyperbolic(a)?;
    if k_max == 0 || k_max > K_MAX {
        return Err(Error::InvalidInput(format!("k_max must be in 1..={K_MAX}")));
    }
    let tb = torus_bundle(a)?;
    let mut rows = Vec::new();
    let mut orbits = Vec::new();
    for k in 1..=k_max {
        let algebraic = algebraic_count(a, k)?;
        let exact = rational_fixed_points(a, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let seeds: Vec<[f64; 2]> = exact
            .iter()
            .map(|q| {
                let f = q.to_f64();
                [
                    (f[0] + rng.gen_range(-SEED_PERTURBATION..SEED_PERTURBATION)).rem_euclid(1.0),
                    (f[1] + rng.gen_range(-SEED_PERTURBATION..SEED_PERTURBATION)).rem_euclid(1.0),
                ]
            })
            .collect();
        let refined = par::try_map(exec, &seeds, |s| newton(&tb, *s, k))?;
        let mut used = vec![false; exact.len()];
        let mut matched = true;
        let mut max_residual: f64 = 0.0;
        let mut found = Vec::new();
        for mut o in refined {
            max_residual = max_residual.max(o.residual);
            let hit = exact
                .iter()
                .position(|q| torus_distance(&q.to_f64(), &o.point[..2]) < MATCH_TOL);
            match hit {
                Some(i) if !used[i] => {
                    used[i] = true;
                    o.rational = Some(exact[i]);
                }
                _ => matched = false,
            }
            found.push(o);
        }
        matched &= used.iter().all(|u| *u);
        found.sort_by_key(|x| x.rational);
        rows.push(CensusRow {
            k,
            algebraic,
            enumerated: exact.len(),
            refined: found.len(),
            max_residual,
            matched,
        });
        orbits.extend(found);
    }
    Ok(OrbitCensus {
        matrix: a,
        rows,
        orbits,
    })
}

/// `k,theta1,theta2,t,period,residual,p1,p2,q` rows with a header.
pub fn orbits_csv(c: &OrbitCensus) -> String {
    let mut out = String::from("k,theta1,theta2,t,period,residual,p1,p2,q\n");
    for o in &c.orbits {
        let (p1, p2, q) = match o.rational {
            Some(r) => (r.num[0].to_string(), r.num[1].to_string(), r.den.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{p1},{p2},{q}\n",
            o.k, o.point[0], o.point[1], o.point[2], o.period, o.residual
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::CAT_MAP;

    /// Count `(x, y) ∈ [0, D)²` with `M (x, y) ≡ 0 mod D`, `D = |det M|`.
    fn brute_force(m: M2) -> u64 {
        let d = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
        let mut n = 0;
        for x in 0..d {
            for y in 0..d {
                if (m[0][0] * x + m[0][1] * y) % d == 0 && (m[1][0] * x + m[1][1] * y) % d == 0 {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn counts_for_cat_map() {
        for (k, want) in [(1, 1), (2, 5), (3, 16), (4, 45)] {
            assert_eq!(algebraic_count(CAT_MAP, k).unwrap(), want);
            let m = minus_identity(return_matrix(CAT_MAP, k).unwrap()).unwrap();
            assert_eq!(brute_force(m), want);
            assert_eq!(rational_fixed_points(CAT_MAP, k).unwrap().len() as u64, want);
        }
    }

    #[test]
    fn smith_form_is_diagonal_and_divisible() {
        for m in [[[1, 1], [1, 0]], [[4, 6], [6, 4]], [[2, 4], [6, 8]], [[0, 3], [5, 0]], [[12, 18], [8, 6]]] {
            let s = smith_normal_form(m).unwrap();
            let prod = mul(mul(s.u, m).unwrap(), s.v).unwrap();
            assert_eq!(prod, [[s.d[0], 0], [0, s.d[1]]], "{m:?}");
            assert!(s.d[0] >= 0 && s.d[1] >= 0);
            if s.d[0] != 0 {
                assert_eq!(s.d[1] % s.d[0], 0);
            }
            for w in [s.u, s.v] {
                assert_eq!((w[0][0] * w[1][1] - w[0][1] * w[1][0]).abs(), 1);
            }
        }
    }

    #[test]
    fn enumerated_points_are_fixed() {
        for a in [CAT_MAP, [[3, 1], [2, 1]], [[1, 2], [1, 3]]] {
            for k in 1..=3 {
                let r = return_matrix(a, k).unwrap();
                let pts = rational_fixed_points(a, k).unwrap();
                assert_eq!(pts.len() as u64, algebraic_count(a, k).unwrap());
                for p in &pts {
                    for (i, row) in r.iter().enumerate() {
                        let v = row[0] * p.num[0] + row[1] * p.num[1] - p.num[i];
                        assert_eq!(v.rem_euclid(p.den), 0, "{p:?}");
                    }
                }
                assert!(pts.contains(&Rational { num: [0, 0], den: 1 }));
            }
        }
    }

    #[test]
    fn parabolic_rejected() {
        assert!(matches!(
            orbit_census([[1, 1], [0, 1]], 2, Exec::Sequential),
            Err(Error::NotHyperbolic { trace: 2 })
        ));
    }

    #[test]
    fn census_small() {
        let c = orbit_census(CAT_MAP, 2, Exec::Sequential).unwrap();
        assert_eq!(c.counts(), vec![1, 5]);
        assert!(c.consistent());
        assert!(torus_distance(&c.orbits[0].point[..2], &[0.0, 0.0]) < 1e-10);
    }
}
