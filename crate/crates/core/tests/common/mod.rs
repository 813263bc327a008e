//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use gpcid_core::basis::PolynomialFamily;

/// `E[x^k]` under the probability weight of `family`.
pub fn weight_moment(family: PolynomialFamily, k: u32) -> f64 {
    match family {
        PolynomialFamily::Hermite => {
            if k % 2 == 1 {
                0.0
            } else {
                (1..k).step_by(2).map(|j| j as f64).product()
            }
        }
        PolynomialFamily::Legendre => {
            if k % 2 == 1 {
                0.0
            } else {
                1.0 / (k as f64 + 1.0)
            }
        }
        PolynomialFamily::Laguerre { alpha } => (1..=k).map(|j| alpha + j as f64).product(),
        PolynomialFamily::Jacobi { alpha, beta } => {
            // integrating d/dx[(1-x)^(α+1) (1+x)^(β+1) x^k] over [-1, 1] gives
            // μ_{k+1} = ((β-α) μ_k + k μ_{k-1}) / (α+β+2+k)
            let (mut prev, mut cur) = (0.0, 1.0);
            for j in 0..k {
                let next = ((beta - alpha) * cur + j as f64 * prev) / (alpha + beta + 2.0 + j as f64);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

pub fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Polynomial as monomial coefficients, lowest degree first.
pub type Poly = Vec<f64>;

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn expectation(family: PolynomialFamily, p: &Poly) -> f64 {
    p.iter().enumerate().map(|(k, c)| c * weight_moment(family, k as u32)).sum()
}

pub fn poly_eval(p: &Poly, x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Orthonormal polynomials of degree `0..=d` by Gram–Schmidt on monomials
/// against the closed-form weight moments (adequate for small `d`).
pub fn orthonormal_polys(family: PolynomialFamily, d: usize) -> Vec<Poly> {
    let mut basis: Vec<Poly> = Vec::new();
    for k in 0..=d {
        let mut p = vec![0.0; k + 1];
        p[k] = 1.0;
        for q in &basis {
            let proj = expectation(family, &poly_mul(&p, q));
            for (i, c) in q.iter().enumerate() {
                p[i] -= proj * c;
            }
        }
        let norm = expectation(family, &poly_mul(&p, &p)).sqrt();
        basis.push(p.into_iter().map(|c| c / norm).collect());
    }
    basis
}

/// All multi-indices of total degree ≤ d, degree ascending, lexicographically
/// descending within a degree.
pub fn graded_indices(n: usize, d: usize) -> Vec<Vec<u32>> {
    let mut all = Vec::new();
    for total in 0..=d as u32 {
        let mut level = Vec::new();
        fixed_sum(n, total, &mut Vec::new(), &mut level);
        level.sort_by(|a, b| b.cmp(a));
        all.extend(level);
    }
    all
}

/// Recursive enumeration of every index with `n` slots summing to `m`.
pub fn fixed_sum(n: usize, m: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == n {
        prefix.push(m);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for v in 0..=m {
        prefix.push(v);
        fixed_sum(n, m - v, prefix, out);
        prefix.pop();
    }
}

/// `E[(Σ c_i ψ_i)^m]` as the m-fold nested sum of coefficient products times
/// multivariate inner products, each a product of univariate expectations.
pub fn naive_moment(families: &[PolynomialFamily], d: usize, coeffs: &[f64], m: u32) -> f64 {
    let idx = graded_indices(families.len(), d);
    assert_eq!(idx.len(), coeffs.len());
    let polys: Vec<Vec<Poly>> = families.iter().map(|&f| orthonormal_polys(f, d)).collect();
    let p = idx.len();
    let mut tuple = vec![0usize; m as usize];
    let mut total = 0.0;
    loop {
        let c: f64 = tuple.iter().map(|&i| coeffs[i]).product();
        if c != 0.0 {
            let mut inner = 1.0;
            for (k, &fam) in families.iter().enumerate() {
                let mut prod: Poly = vec![1.0];
                for &i in &tuple {
                    prod = poly_mul(&prod, &polys[k][idx[i][k] as usize]);
                }
                inner *= expectation(fam, &prod);
            }
            total += c * inner;
        }
        // odometer over p^m tuples
        let mut pos = 0;
        loop {
            if pos == tuple.len() {
                return total;
            }
            tuple[pos] += 1;
            if tuple[pos] < p {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// Adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// `erf` by its Maclaurin series for |x| ≤ 3 and a continued fraction
/// for `erfc` beyond.
pub fn erf(x: f64) -> f64 {
    if x.abs() <= 3.0 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x * x / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        let s = x.signum();
        s * (1.0 - erfc_cf(x.abs()))
    }
}

/// Continued fraction `erfc(x) = exp(-x²)/√π · 1/(x + 1/2/(x + 1/(x + 3/2/(x + …))))`.
pub fn erfc_cf(x: f64) -> f64 {
    let mut f = 0.0;
    for k in (1..200).rev() {
        f = (k as f64 / 2.0) / (x + f);
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / (x + f)
}

pub fn normal_cdf(z: f64) -> f64 {
    if z < -3.0 {
        0.5 * erfc_cf(-z / std::f64::consts::SQRT_2)
    } else {
        0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
    }
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Dense two-phase simplex with Bland's rule for
/// `min cᵀx  s.t.  A_ub x ≤ b_ub,  A_eq x = b_eq,  x ≥ 0`, with `b ≥ 0`.
pub fn linprog(c: &[f64], a_ub: &[Vec<f64>], b_ub: &[f64], a_eq: &[Vec<f64>], b_eq: &[f64]) -> f64 {
    let n = c.len();
    let (mu, me) = (a_ub.len(), a_eq.len());
    let rows = mu + me;
    // columns: x (n), slacks (mu), artificials (me), rhs
    let cols = n + mu + me;
    let mut t = vec![vec![0.0; cols + 1]; rows];
    let mut basis = vec![0usize; rows];
    for i in 0..mu {
        t[i][..n].copy_from_slice(&a_ub[i]);
        t[i][n + i] = 1.0;
        t[i][cols] = b_ub[i];
        basis[i] = n + i;
    }
    for i in 0..me {
        t[mu + i][..n].copy_from_slice(&a_eq[i]);
        t[mu + i][n + mu + i] = 1.0;
        t[mu + i][cols] = b_eq[i];
        basis[mu + i] = n + mu + i;
    }
    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, enter: usize| {
        let piv = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = t[r].clone();
        for i in 0..rows {
            if i != r && t[i][enter] != 0.0 {
                let f = t[i][enter];
                for (v, p) in t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        basis[r] = enter;
    };
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| {
        loop {
            let reduced: Vec<f64> = (0..allowed)
                .map(|j| cost[j] - (0..rows).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>())
                .collect();
            let Some(enter) = (0..allowed).find(|&j| reduced[j] < -1e-12) else { return };
            let mut leave = None;
            let mut best = f64::INFINITY;
            for i in 0..rows {
                if t[i][enter] > 1e-12 {
                    let ratio = t[i][cols] / t[i][enter];
                    if ratio < best - 1e-15 || (ratio <= best + 1e-15 && leave.is_some_and(|l: usize| basis[i] < basis[l])) {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let r = leave.expect("linear program is unbounded");
            pivot(t, basis, r, enter);
        }
    };
    let mut phase1 = vec![0.0; cols];
    for j in n + mu..cols {
        phase1[j] = 1.0;
    }
    run(&mut t, &mut basis, &phase1, cols);
    let infeasibility: f64 = (0..rows).filter(|&i| basis[i] >= n + mu).map(|i| t[i][cols]).sum();
    assert!(infeasibility < 1e-9, "linear program is infeasible");
    // drive zero-level artificials out of the basis; rows with no candidate are redundant
    for r in 0..rows {
        if basis[r] >= n + mu {
            if let Some(enter) = (0..n + mu).find(|&j| t[r][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, enter);
            }
        }
    }
    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, n + mu);
    (0..rows).filter(|&i| basis[i] < n).map(|i| c[basis[i]] * t[i][cols]).sum()
}

/// Transportation-problem EMD between weighted point sets.
pub fn emd_lp(p: &[(f64, f64)], q: &[(f64, f64)]) -> f64 {
    let (n, m) = (p.len(), q.len());
    let c: Vec<f64> = (0..n * m).map(|k| (p[k / m].0 - q[k % m].0).abs()).collect();
    let mut a_ub = Vec::new();
    let mut b_ub = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; n * m];
        for j in 0..m {
            row[i * m + j] = 1.0;
        }
        a_ub.push(row);
        b_ub.push(p[i].1);
    }
    for j in 0..m {
        let mut row = vec![0.0; n * m];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        a_ub.push(row);
        b_ub.push(q[j].1);
    }
    let flow = p.iter().map(|x| x.1).sum::<f64>().min(q.iter().map(|x| x.1).sum());
    let cost = linprog(&c, &a_ub, &b_ub, &[vec![1.0; n * m]], &[flow]);
    cost / flow
}
