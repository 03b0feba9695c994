//! The Hecke module: the action of `T_{w_κ}` on the `a` basis, the
//! normalised operators `T̂_κ = v^{-ℓ(κ)}(T_{w_κ}+1)` on the `â` basis,
//! the image vectors `a^κ_λ`, and relation checks.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use crate::extblock::{BlockError, ExtBlock, TypeCode};
use crate::laurent::LaurentPoly;

/// A finitely supported map from parameters to Laurent polynomials.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ModuleVector {
    entries: BTreeMap<usize, LaurentPoly>,
}

impl ModuleVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(gamma: usize) -> Self {
        let mut v = Self::zero();
        v.add_term(gamma, &LaurentPoly::one());
        v
    }

    pub fn from_entries(it: impl IntoIterator<Item = (usize, LaurentPoly)>) -> Self {
        let mut v = Self::zero();
        for (g, p) in it {
            v.add_term(g, &p);
        }
        v
    }

    pub fn get(&self, gamma: usize) -> LaurentPoly {
        self.entries.get(&gamma).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, gamma: usize, p: &LaurentPoly) {
        if p.is_zero() {
            return;
        }
        let e = self.entries.entry(gamma).or_default();
        *e += p;
        if e.is_zero() {
            self.entries.remove(&gamma);
        }
    }

    pub fn add_scaled(&mut self, other: &ModuleVector, c: &LaurentPoly) {
        for (g, p) in &other.entries {
            self.add_term(*g, &(p * c));
        }
    }

    pub fn scale(&self, c: &LaurentPoly) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn sub(&self, other: &ModuleVector) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &LaurentPoly::constant(-1));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &LaurentPoly)> {
        self.entries.iter().map(|(g, p)| (*g, p))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }
}

impl fmt::Debug for ModuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(g, p)| format!("({p})a{g}"))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

fn u_pow(k: u32) -> LaurentPoly {
    LaurentPoly::v_pow(2 * k as i64)
}

fn c(n: i64) -> LaurentPoly {
    LaurentPoly::constant(n)
}

/// `T_{w_κ}(a_γ)` as a list of terms.
pub fn t_on_basis(block: &ExtBlock, kappa: usize, gamma: usize) -> Vec<(usize, LaurentPoly)> {
    use TypeCode::*;
    let t = block.type_of(gamma, kappa);
    let k = t.kappa_length();
    let uk = u_pow(k);
    let u = u_pow(1);
    let x = block.cross(gamma, kappa);
    let cay = block.cayley(gamma, kappa);
    let signed = |lam: usize| -> LaurentPoly {
        c(block
            .epsilon(gamma, lam, kappa)
            .expect("Cayley partners carry an arrow") as i64)
    };
    match t {
        T1Cp | T2Cp | T3Cp => vec![(x, c(1))],
        T1Cm | T2Cm | T3Cm => vec![(gamma, &uk - c(1)), (x, uk)],
        T1i1 | T2i11 => vec![(x, c(1)), (cay[0], c(1))],
        T1i2f | T2i22 | T2i12 => {
            let mut out = vec![(gamma, c(1))];
            out.extend(cay.iter().map(|&l| (l, signed(l))));
            out
        }
        T1i2s | T1rn | T2rn | T3rn => vec![(gamma, c(-1))],
        T1ic | T2ic | T3ic | T1r1s => vec![(gamma, uk)],
        T1r1f | T2r11 | T2r21 => {
            let mut out = vec![(gamma, &uk - c(2))];
            out.extend(cay.iter().map(|&l| (l, (&uk - c(1)) * signed(l))));
            out
        }
        T1r2 | T2r22 => vec![(gamma, &uk - c(1)), (x, c(-1)), (cay[0], &uk - c(1))],
        T2Ci | T3Ci | T3i => vec![(gamma, u.clone()), (cay[0], &u + c(1))],
        T2Cr | T3Cr | T3r => vec![(gamma, &uk - &u - c(1)), (cay[0], &uk - &u)],
    }
}

/// `T̂_κ(â_γ)`, obtained from [`t_on_basis`] by the change of normalisation
/// `â_γ = v^{-ℓ(γ)} a_γ`.
pub fn t_hat_on_basis(block: &ExtBlock, kappa: usize, gamma: usize) -> Vec<(usize, LaurentPoly)> {
    let k = block.kappa_length(kappa) as i64;
    let lg = block.length(gamma) as i64;
    let mut acc = ModuleVector::basis(gamma);
    for (d, p) in t_on_basis(block, kappa, gamma) {
        acc.add_term(d, &p);
    }
    acc.iter()
        .map(|(d, p)| (d, p.shift(block.length(d) as i64 - k - lg)))
        .collect()
}

fn apply_with(vec: &ModuleVector, f: impl Fn(usize) -> Vec<(usize, LaurentPoly)>) -> ModuleVector {
    let mut out = ModuleVector::zero();
    for (g, coef) in vec.iter() {
        for (d, p) in f(g) {
            out.add_term(d, &(coef * &p));
        }
    }
    out
}

/// Apply `T_{w_κ}` to a vector written in the `a` basis.
pub fn apply_t(block: &ExtBlock, kappa: usize, vec: &ModuleVector) -> ModuleVector {
    apply_with(vec, |g| t_on_basis(block, kappa, g))
}

/// Apply `T̂_κ` to a vector written in the `â` basis.
pub fn apply_t_hat(block: &ExtBlock, kappa: usize, vec: &ModuleVector) -> ModuleVector {
    apply_with(vec, |g| t_hat_on_basis(block, kappa, g))
}

/// `a^κ_λ = â_λ + v^{ℓ(λ')-ℓ(λ)} Σ ε(λ,λ') â_{λ'}` over the κ-arrows `λ -> λ'`.
pub fn a_kappa(block: &ExtBlock, lambda: usize, kappa: usize) -> Result<ModuleVector, BlockError> {
    let targets = block.kappa_arrow_targets(lambda, kappa)?;
    let mut v = ModuleVector::basis(lambda);
    for l in targets {
        let e = block.epsilon(lambda, l, kappa)? as i64;
        let shift = block.length(l) as i64 - block.length(lambda) as i64;
        v.add_term(l, &LaurentPoly::monomial(e, shift));
    }
    Ok(v)
}

/// Write a vector in the image of `T̂_κ` in the basis `{a^κ_δ : κ ∈ τ(δ)}`.
///
/// The coefficient of `a^κ_δ` is the `â_δ` coefficient, since every other
/// term of `a^κ_δ` sits on an ascent. Returns the leftover (zero exactly
/// when the vector lies in the span) alongside the coefficients.
pub fn expand_in_image_basis(
    block: &ExtBlock,
    kappa: usize,
    vec: &ModuleVector,
) -> (BTreeMap<usize, LaurentPoly>, ModuleVector) {
    let mut coeffs = BTreeMap::new();
    let mut rest = vec.clone();
    for (d, p) in vec.iter() {
        if block.is_descent(d, kappa) {
            let a = a_kappa(block, d, kappa).expect("descent");
            rest.add_scaled(&a, &-p);
            coeffs.insert(d, p.clone());
        }
    }
    (coeffs, rest)
}

/// A dense square matrix of Laurent polynomials, acting on column vectors.
#[derive(Clone, PartialEq, Eq)]
pub struct OperatorMatrix {
    rows: Vec<Vec<LaurentPoly>>,
}

impl OperatorMatrix {
    pub fn zero(n: usize) -> Self {
        Self {
            rows: vec![vec![LaurentPoly::zero(); n]; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.rows[i][i] = LaurentPoly::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<LaurentPoly>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self { rows }
    }

    /// Matrix whose column `γ` is `f(γ)`.
    pub fn from_columns(n: usize, f: impl Fn(usize) -> Vec<(usize, LaurentPoly)>) -> Self {
        let mut m = Self::zero(n);
        for g in 0..n {
            for (d, p) in f(g) {
                m.rows[d][g] += &p;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.rows[i][j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim();
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                if self.rows[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !other.rows[k][j].is_zero() {
                        let p = &self.rows[i][k] * &other.rows[k][j];
                        out.rows[i][j] += &p;
                    }
                }
            }
        }
        out
    }

    pub fn add_scaled_identity(&self, c: &LaurentPoly) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.rows[i][i] += c;
        }
        out
    }

    pub fn trace(&self) -> LaurentPoly {
        (0..self.dim()).map(|i| self.rows[i][i].clone()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|p| p.is_zero())
    }

    /// First column (by index) that is not zero.
    pub fn first_nonzero_column(&self) -> Option<usize> {
        (0..self.dim()).find(|&j| (0..self.dim()).any(|i| !self.rows[i][j].is_zero()))
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|p| p.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Matrix of `T_{w_κ}` in the `a` basis.
pub fn t_matrix(block: &ExtBlock, kappa: usize) -> OperatorMatrix {
    OperatorMatrix::from_columns(block.size(), |g| t_on_basis(block, kappa, g))
}

/// Matrix of `T̂_κ` in the `â` basis.
pub fn t_hat_matrix(block: &ExtBlock, kappa: usize) -> OperatorMatrix {
    OperatorMatrix::from_columns(block.size(), |g| t_hat_on_basis(block, kappa, g))
}

/// Coefficients `c_0, ..., c_n` of `det(x I - A)`, lowest degree first,
/// by the Faddeev-LeVerrier recurrence (exact: every division is by an
/// integer that divides the trace).
pub fn charpoly(a: &OperatorMatrix) -> Vec<LaurentPoly> {
    let n = a.dim();
    let mut cs = vec![LaurentPoly::zero(); n + 1];
    cs[n] = LaurentPoly::one();
    let mut m = OperatorMatrix::zero(n);
    for k in 1..=n {
        m = a.mul(&m).add_scaled_identity(&cs[n - k + 1]);
        let tr = a.mul(&m).trace();
        cs[n - k] = (-tr)
            .div_exact(&BigInt::from(k))
            .expect("Faddeev-LeVerrier division is exact over Z");
    }
    cs
}

/// Coefficients of `Π (x - r)` over the given roots, lowest degree first.
pub fn poly_from_roots(roots: &[LaurentPoly]) -> Vec<LaurentPoly> {
    let mut cs = vec![LaurentPoly::one()];
    for r in roots {
        let mut next = vec![LaurentPoly::zero(); cs.len() + 1];
        for (i, ci) in cs.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= &(ci * r);
        }
        cs = next;
    }
    cs
}

/// Whether the characteristic polynomial of `a` is `Π (x - r)`.
pub fn has_eigenvalues(a: &OperatorMatrix, roots: &[LaurentPoly]) -> bool {
    charpoly(a) == poly_from_roots(roots)
}

/// Local matrix of `T` on the extended `1i2f` configuration (one imaginary
/// parameter and its two Cayley transforms), with `q = v^2`.
pub fn local_matrix_1i2f() -> OperatorMatrix {
    let q = u_pow(1);
    let qm1 = &q - c(1);
    OperatorMatrix::from_rows(vec![
        vec![c(1), qm1.clone(), qm1.clone()],
        vec![c(1), qm1.clone(), c(-1)],
        vec![c(1), c(-1), qm1],
    ])
}

/// Local matrix of `T` on the extended `1i1` configuration (two imaginary
/// parameters sharing one Cayley transform), with `q = v^2`.
pub fn local_matrix_1i1() -> OperatorMatrix {
    let q = u_pow(1);
    let qm1 = &q - c(1);
    OperatorMatrix::from_rows(vec![
        vec![c(0), c(1), qm1.clone()],
        vec![c(1), c(0), qm1],
        vec![c(1), c(1), &q - c(2)],
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuadraticReport {
    pub kappa: usize,
    pub passed: bool,
    /// First basis vector on which the relation fails.
    pub failing_parameter: Option<usize>,
}

/// Check `(T+1)(T-u^{ℓ(κ)}) = 0` on every basis vector.
pub fn check_quadratic(block: &ExtBlock, kappa: usize) -> QuadraticReport {
    let uk = u_pow(block.kappa_length(kappa));
    let one_minus_uk = c(1) - &uk;
    let neg_uk = -&uk;
    let failing = (0..block.size()).find(|&g| {
        let e = ModuleVector::basis(g);
        let t1 = apply_t(block, kappa, &e);
        let mut r = apply_t(block, kappa, &t1);
        r.add_scaled(&t1, &one_minus_uk);
        r.add_scaled(&e, &neg_uk);
        !r.is_zero()
    });
    QuadraticReport {
        kappa,
        passed: failing.is_none(),
        failing_parameter: failing,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BraidReport {
    pub kappas: (usize, usize),
    /// Order of `κ1 κ2`; 0 stands for infinity.
    pub order: u32,
    /// `false` when the order is infinite and there is nothing to check.
    pub checked: bool,
    pub passed: bool,
    pub failing_parameter: Option<usize>,
}

/// Check that the alternating products `T1 T2 T1 ...` and `T2 T1 T2 ...`
/// with `m(κ1,κ2)` factors agree.
pub fn check_braid(block: &ExtBlock, kappa1: usize, kappa2: usize) -> BraidReport {
    let m = block.coxeter_order(kappa1, kappa2);
    if m == 0 || kappa1 == kappa2 {
        return BraidReport {
            kappas: (kappa1, kappa2),
            order: m,
            checked: false,
            passed: true,
            failing_parameter: None,
        };
    }
    let word = |first: usize, second: usize, e: &ModuleVector| {
        let mut x = e.clone();
        // rightmost factor acts first; the leftmost is `first`
        for i in (0..m).rev() {
            let k = if i % 2 == 0 { first } else { second };
            x = apply_t(block, k, &x);
        }
        x
    };
    let failing = (0..block.size()).find(|&g| {
        let e = ModuleVector::basis(g);
        word(kappa1, kappa2, &e) != word(kappa2, kappa1, &e)
    });
    BraidReport {
        kappas: (kappa1, kappa2),
        order: m,
        checked: true,
        passed: failing.is_none(),
        failing_parameter: failing,
    }
}

/// All quadratic checks, and braid checks for every pair `κ1 < κ2`.
pub fn check_all(block: &ExtBlock, braid: bool) -> (Vec<QuadraticReport>, Vec<BraidReport>) {
    let quad = (0..block.kappa_count())
        .map(|k| check_quadratic(block, k))
        .collect();
    let mut br = vec![];
    if braid {
        for k1 in 0..block.kappa_count() {
            for k2 in k1 + 1..block.kappa_count() {
                br.push(check_braid(block, k1, k2));
            }
        }
    }
    (quad, br)
}
