//! Exact Laurent polynomials in `v` over the integers.
//!
//! The variable `u` (also written `q`) is `v^2`; it only shows up when
//! rendering or when a caller explicitly asks for a `u`-form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaurentError {
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("odd exponent v^{0} has no u = v^2 form")]
    OddExponent(i64),
    #[error("cannot parse polynomial {0:?}")]
    Parse(String),
}

/// Sign in `1 + q^k` versus `1 - q^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlusMinus {
    Plus,
    Minus,
}

impl PlusMinus {
    fn as_int(self) -> BigInt {
        match self {
            PlusMinus::Plus => BigInt::one(),
            PlusMinus::Minus => -BigInt::one(),
        }
    }
}

/// Sparse map from exponent of `v` to a nonzero coefficient.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, BigInt>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, 0)
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::monomial(c, 0)
    }

    /// `c * v^e`.
    pub fn monomial(c: impl Into<BigInt>, e: i64) -> Self {
        let c = c.into();
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(e, c);
        }
        Self { coeffs }
    }

    /// `v^e`.
    pub fn v_pow(e: i64) -> Self {
        Self::monomial(1, e)
    }

    /// `v^k + v^-k`; for `k = 0` this is `2`.
    pub fn v_plus_vinv(k: i64) -> Self {
        Self::v_pow(k) + Self::v_pow(-k)
    }

    /// `v^k - v^-k`.
    pub fn v_minus_vinv(k: i64) -> Self {
        Self::v_pow(k) - Self::v_pow(-k)
    }

    pub fn from_terms<I, C>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, &c.into());
        }
        p
    }

    /// A polynomial in `u = v^2`, given by its coefficients from `u^0` upward.
    pub fn from_u_coeffs<C: Into<BigInt> + Clone>(cs: &[C]) -> Self {
        Self::from_terms(
            cs.iter()
                .enumerate()
                .map(|(i, c)| (2 * i as i64, c.clone())),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs.get(&0).is_some_and(|c| c.is_one())
    }

    /// Number of nonzero terms.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// Terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, k: i64) -> BigInt {
        self.coeffs.get(&k).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, e: i64, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(e).or_default();
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|(e, x)| (*e, x * c)).collect(),
        }
    }

    pub fn scale_i64(&self, c: i64) -> Self {
        self.scale(&BigInt::from(c))
    }

    /// Divide every coefficient by `d`, or `None` if some coefficient is not
    /// a multiple of `d`.
    pub fn div_exact(&self, d: &BigInt) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let mut coeffs = BTreeMap::new();
        for (e, c) in &self.coeffs {
            if !(c % d).is_zero() {
                return None;
            }
            coeffs.insert(*e, c / d);
        }
        Some(Self { coeffs })
    }

    /// `self / d` when the quotient is a Laurent polynomial with integer
    /// coefficients.
    pub fn div_exact_poly(&self, d: &LaurentPoly) -> Option<Self> {
        let (dtop, dlead) = d.coeffs.iter().next_back().map(|(e, c)| (*e, c.clone()))?;
        let dlow = d.min_exp()?;
        let floor = self.min_exp().unwrap_or(0) - dlow;
        let mut rem = self.clone();
        let mut q = BTreeMap::new();
        while let Some((&top, c)) = rem.coeffs.iter().next_back() {
            let e = top - dtop;
            if e < floor || !(c % &dlead).is_zero() {
                return None;
            }
            let c = c / &dlead;
            rem -= &(&LaurentPoly::monomial(c.clone(), e) * d);
            q.insert(e, c);
        }
        Some(Self { coeffs: q })
    }

    /// Multiply by `v^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(e, c)| (e + k, c.clone()))
                .collect(),
        }
    }

    /// `v -> v^-1`.
    pub fn bar(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(e, c)| (-e, c.clone())).collect(),
        }
    }

    pub fn is_self_dual(&self) -> bool {
        *self == self.bar()
    }

    /// `(f+, f-)` with `f+` carrying the exponents `>= 0` and `f-` the rest.
    pub fn split_plus_minus(&self) -> (Self, Self) {
        let mut plus = Self::zero();
        let mut minus = Self::zero();
        for (e, c) in &self.coeffs {
            if *e >= 0 {
                plus.coeffs.insert(*e, c.clone());
            } else {
                minus.coeffs.insert(*e, c.clone());
            }
        }
        (plus, minus)
    }

    /// Keep only the terms whose exponent satisfies `keep`.
    pub fn filter_exps(&self, keep: impl Fn(i64) -> bool) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| keep(**e))
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    /// Render with `u = v^2`. Fails on any odd exponent.
    pub fn to_u_string(&self) -> Result<String, LaurentError> {
        let mut halved = Vec::with_capacity(self.coeffs.len());
        for (e, c) in &self.coeffs {
            if e.rem_euclid(2) != 0 {
                return Err(LaurentError::OddExponent(*e));
            }
            halved.push((e / 2, c));
        }
        Ok(render(halved.into_iter(), "u"))
    }

    /// Parse the `u`-form rendering back into a polynomial in `v`.
    pub fn parse_u(s: &str) -> Result<Self, LaurentError> {
        let p = parse_in(s, 'u')?;
        Ok(Self {
            coeffs: p.coeffs.into_iter().map(|(e, c)| (2 * e, c)).collect(),
        })
    }
}

fn render<'a>(terms: impl Iterator<Item = (i64, &'a BigInt)>, var: &str) -> String {
    let mut out = String::new();
    for (e, c) in terms {
        let mut t = String::new();
        if e == 0 {
            t.push_str(&c.to_string());
        } else {
            if c.is_one() {
            } else if *c == -BigInt::one() {
                t.push('-');
            } else {
                t.push_str(&c.to_string());
            }
            t.push_str(var);
            if e != 1 {
                t.push('^');
                t.push_str(&e.to_string());
            }
        }
        if !out.is_empty() && !t.starts_with('-') {
            out.push('+');
        }
        out.push_str(&t);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn parse_in(s: &str, var: char) -> Result<LaurentPoly, LaurentError> {
    let err = || LaurentError::Parse(s.to_string());
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(err());
    }
    // Split into signed terms; a '-' right after '^' belongs to the exponent.
    let mut terms = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = compact.chars().collect();
    for (i, ch) in chars.iter().enumerate() {
        if (*ch == '+' || *ch == '-') && i > 0 && chars[i - 1] != '^' {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(*ch);
    }
    terms.push(cur);
    let mut p = LaurentPoly::zero();
    for t in terms {
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(&t)),
        };
        if body.is_empty() {
            return Err(err());
        }
        let (coef, exp) = match body.find(var) {
            None => (body.parse::<BigInt>().map_err(|_| err())?, 0),
            Some(pos) => {
                let cpart = &body[..pos];
                let c = if cpart.is_empty() {
                    BigInt::one()
                } else {
                    cpart.parse::<BigInt>().map_err(|_| err())?
                };
                let rest = &body[pos + var.len_utf8()..];
                let e = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^')
                        .ok_or_else(err)?
                        .parse::<i64>()
                        .map_err(|_| err())?
                };
                (c, e)
            }
        };
        p.add_term(exp, &if neg { -coef } else { coef });
    }
    Ok(p)
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self.terms(), "v"))
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPoly({self})")
    }
}

impl FromStr for LaurentPoly {
    type Err = LaurentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_in(s, 'v')
    }
}

impl From<i64> for LaurentPoly {
    fn from(c: i64) -> Self {
        Self::constant(c)
    }
}

impl From<BigInt> for LaurentPoly {
    fn from(c: BigInt) -> Self {
        Self::constant(c)
    }
}

impl AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.coeffs {
            self.add_term(*e, c);
        }
    }
}

impl AddAssign for LaurentPoly {
    fn add_assign(&mut self, rhs: LaurentPoly) {
        *self += &rhs;
    }
}

impl SubAssign<&LaurentPoly> for LaurentPoly {
    fn sub_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.coeffs {
            self.add_term(*e, &-c);
        }
    }
}

impl SubAssign for LaurentPoly {
    fn sub_assign(&mut self, rhs: LaurentPoly) {
        *self -= &rhs;
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}

impl Mul<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &rhs.coeffs {
                out.add_term(e1 + e2, &(c1 * c2));
            }
        }
        out
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $assign:ident) => {
        impl $tr<&LaurentPoly> for &LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: &LaurentPoly) -> LaurentPoly {
                let mut out = self.clone();
                out.$assign(rhs);
                out
            }
        }
    };
}

forward_binop!(Add, add, add_assign);
forward_binop!(Sub, sub, sub_assign);

macro_rules! owned_variants {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: &LaurentPoly) -> LaurentPoly {
                (&self).$m(rhs)
            }
        }
        impl $tr<LaurentPoly> for &LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                self.$m(&rhs)
            }
        }
    };
}

owned_variants!(Add, add);
owned_variants!(Sub, sub);
owned_variants!(Mul, mul);

impl std::iter::Sum for LaurentPoly {
    fn sum<I: Iterator<Item = LaurentPoly>>(iter: I) -> Self {
        let mut acc = LaurentPoly::zero();
        for p in iter {
            acc += &p;
        }
        acc
    }
}

/// Recover `f` in `v^-1 Z[v^-2]` from `g = (v+v^-1) f`, trusting only the
/// coefficients of `g` at exponents `<= max_known_exp`.
///
/// Reading `b_0, b_1, ...` from the lowest exponent of `g` upward, the
/// coefficients of `f` from its lowest term upward are
/// `c_k = (-1)^k sum_{j<=k} (-1)^j b_j`. `max_known_exp` must be at least
/// `-2`, otherwise the top of `f` is not determined.
pub fn solve_times_v_plus_vinv(
    g: &LaurentPoly,
    max_known_exp: i64,
) -> Result<LaurentPoly, LaurentError> {
    if max_known_exp < -2 {
        return Err(LaurentError::NoSolution(format!(
            "coefficients only known through v^{max_known_exp}; need v^-2"
        )));
    }
    let known = g.filter_exps(|e| e <= max_known_exp);
    let f = match known.filter_exps(|e| e < 0).min_exp() {
        None => LaurentPoly::zero(),
        Some(low) => {
            if low.rem_euclid(2) != 0 {
                return Err(LaurentError::NoSolution(format!(
                    "odd exponent v^{low} in a product with v^-1 Z[v^-2]"
                )));
            }
            let n = -low / 2;
            let mut f = LaurentPoly::zero();
            let mut c = BigInt::zero();
            for k in 0..n {
                // c_k = b_k - c_{k-1}
                let b = known.coeff(low + 2 * k);
                c = b - c;
                f.add_term(low + 2 * k + 1, &c);
            }
            f
        }
    };
    let back = &LaurentPoly::v_plus_vinv(1) * &f;
    if back.filter_exps(|e| e <= max_known_exp) != known {
        return Err(LaurentError::NoSolution(format!(
            "{g} is not (v+v^-1) times an element of v^-1 Z[v^-2] below v^{}",
            max_known_exp + 1
        )));
    }
    Ok(f)
}

/// Recover a polynomial `f(q)` (`q = v^2`) from `g = (1 ± q^k) f`, where
/// the top `unknown_top` coefficients of `g` (counted from its highest
/// `q`-power) are not trusted.
pub fn solve_times_one_pm_qk(
    g: &LaurentPoly,
    k: u32,
    sign: PlusMinus,
    unknown_top: usize,
) -> Result<LaurentPoly, LaurentError> {
    check_q_polynomial(g)?;
    let Some(top) = g.max_exp() else {
        return Ok(LaurentPoly::zero());
    };
    let deg_g = top / 2;
    let deg_f = deg_g - k as i64;
    solve_times_one_pm_qk_with_degree(g, k, sign, deg_f, deg_g - unknown_top as i64)
}

/// As [`solve_times_one_pm_qk`] with the degree of `f` and the last trusted
/// `q`-degree of `g` given explicitly. Use this when the untrusted top
/// coefficients of `g` may have been left out altogether.
pub fn solve_times_one_pm_qk_with_degree(
    g: &LaurentPoly,
    k: u32,
    sign: PlusMinus,
    deg_f: i64,
    known_max_q: i64,
) -> Result<LaurentPoly, LaurentError> {
    check_q_polynomial(g)?;
    if k == 0 {
        return Err(LaurentError::NoSolution("k must be positive".into()));
    }
    let s = sign.as_int();
    let k = k as i64;
    let mut fc: Vec<BigInt> = Vec::new();
    for i in 0..=deg_f.max(-1) {
        if i > known_max_q {
            return Err(LaurentError::NoSolution(format!(
                "coefficient q^{i} of f needs an untrusted coefficient of g"
            )));
        }
        let mut c = g.coeff(2 * i);
        if i >= k {
            c -= &s * &fc[(i - k) as usize];
        }
        fc.push(c);
    }
    let f = LaurentPoly::from_terms(fc.into_iter().enumerate().map(|(i, c)| (2 * i as i64, c)));
    let factor = LaurentPoly::one() + LaurentPoly::monomial(s, 2 * k);
    let back = &factor * &f;
    let trusted = |e: i64| e <= 2 * known_max_q;
    if back.filter_exps(trusted) != g.filter_exps(trusted) {
        return Err(LaurentError::NoSolution(format!(
            "{g} is not (1{}q^{k}) times a polynomial of degree {deg_f}",
            if sign == PlusMinus::Plus { "+" } else { "-" }
        )));
    }
    Ok(f)
}

fn check_q_polynomial(g: &LaurentPoly) -> Result<(), LaurentError> {
    for (e, _) in g.terms() {
        if e < 0 || e % 2 != 0 {
            return Err(LaurentError::NoSolution(format!(
                "v^{e} is not a power of q = v^2"
            )));
        }
    }
    Ok(())
}

/// True when every coefficient is nonnegative.
pub fn has_nonnegative_coeffs(p: &LaurentPoly) -> bool {
    p.terms().all(|(_, c)| !c.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(p("v+1") + p("-1"), p("v"));
        assert_eq!(p("v^2-3") + LaurentPoly::zero(), p("v^2-3"));
        assert_eq!(p("v-v^-1") + p("v+v^-1"), p("2v"));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(p("v+v^-1") * p("v-v^-1"), p("v^2-v^-2"));
        assert_eq!(p("3v^-2+v") * LaurentPoly::one(), p("3v^-2+v"));
        assert_eq!(p("v+1") * p("v-1"), p("v^2-1"));
    }

    #[test]
    fn poly_division_examples() {
        assert_eq!(
            p("v^2-v^-2").div_exact_poly(&p("v+v^-1")),
            Some(p("v-v^-1"))
        );
        assert_eq!(p("v^2").div_exact_poly(&p("v+v^-1")), None);
        assert_eq!(p("2v").div_exact_poly(&p("2")), Some(p("v")));
        assert_eq!(p("v").div_exact_poly(&p("2")), None);
        assert_eq!(p("1").div_exact_poly(&LaurentPoly::zero()), None);
    }

    #[test]
    fn bar_examples() {
        assert_eq!(p("v^2+3v^-1").bar(), p("v^-2+3v"));
        assert!(p("v+v^-1").is_self_dual());
        assert_eq!(LaurentPoly::zero().bar(), LaurentPoly::zero());
    }

    #[test]
    fn split_examples() {
        assert_eq!(p("v^2+2+v^-1").split_plus_minus(), (p("v^2+2"), p("v^-1")));
        assert_eq!(
            p("v^-3").split_plus_minus(),
            (LaurentPoly::zero(), p("v^-3"))
        );
        assert_eq!(p("5").split_plus_minus(), (p("5"), LaurentPoly::zero()));
    }

    #[test]
    fn coeff_examples() {
        assert_eq!(p("v^-1+2v^-3").coeff(-3), BigInt::from(2));
        assert_eq!(LaurentPoly::zero().coeff(7), BigInt::zero());
        assert_eq!(p("v+v^-1").coeff(0), BigInt::zero());
    }

    #[test]
    fn rendering() {
        assert_eq!(p("2v^-1+v^-3").to_string(), "v^-3+2v^-1");
        assert_eq!(p("-v+1-v^2").to_string(), "1-v-v^2");
        assert_eq!(LaurentPoly::zero().to_string(), "0");
        assert_eq!(p("v^2+1").to_u_string().unwrap(), "1+u");
        assert_eq!(p("v^4-v^2").to_u_string().unwrap(), "-u+u^2");
        assert_eq!(p("v^-1").to_u_string(), Err(LaurentError::OddExponent(-1)));
        assert_eq!(LaurentPoly::parse_u("1+u").unwrap(), p("1+v^2"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("".parse::<LaurentPoly>().is_err());
        assert!("v^".parse::<LaurentPoly>().is_err());
        assert!("2x".parse::<LaurentPoly>().is_err());
        assert!("+".parse::<LaurentPoly>().is_err());
    }

    #[test]
    fn big_coefficients_stay_exact() {
        let x = p("v+1");
        let mut acc = LaurentPoly::one();
        for _ in 0..80 {
            acc = &acc * &x;
        }
        // central binomial coefficient C(80,40) exceeds 64 bits
        let c = acc.coeff(40);
        assert_eq!(c.to_string(), "107507208733336176461620");
    }

    // Forward-multiply oracle for the (v+v^-1) solver.
    #[test]
    fn solve_v_plus_vinv_examples() {
        let g = p("1+v^-2");
        assert_eq!(
            solve_times_v_plus_vinv(&g.filter_exps(|e| e < 0), -1).unwrap(),
            p("v^-1")
        );
        let f = p("2v^-1+v^-3");
        let g = &LaurentPoly::v_plus_vinv(1) * &f;
        assert_eq!(g, p("2+3v^-2+v^-4"));
        assert_eq!(
            solve_times_v_plus_vinv(&g.filter_exps(|e| e < 0), -1).unwrap(),
            f
        );
        assert_eq!(solve_times_v_plus_vinv(&g, 0).unwrap(), f);
        assert_eq!(
            solve_times_v_plus_vinv(&LaurentPoly::zero(), -1).unwrap(),
            LaurentPoly::zero()
        );
    }

    #[test]
    fn solve_v_plus_vinv_rejects_bad_input() {
        assert!(solve_times_v_plus_vinv(&p("v^-3"), -1).is_err());
        // constant term known and inconsistent
        assert!(solve_times_v_plus_vinv(&p("5+v^-2"), 0).is_err());
        assert!(solve_times_v_plus_vinv(&p("v^-2"), -3).is_err());
    }

    #[test]
    fn solve_one_pm_qk_examples() {
        let g = p("1+3v^2+2v^4");
        assert_eq!(
            solve_times_one_pm_qk(&g, 1, PlusMinus::Plus, 1).unwrap(),
            p("1+2v^2")
        );
        assert_eq!(
            solve_times_one_pm_qk(&LaurentPoly::zero(), 2, PlusMinus::Minus, 2).unwrap(),
            LaurentPoly::zero()
        );
        assert_eq!(
            solve_times_one_pm_qk(&p("1-v^4"), 2, PlusMinus::Minus, 2).unwrap(),
            p("1")
        );
    }

    #[test]
    fn solve_one_pm_qk_detects_inconsistency() {
        // (1+q^2) f with deg f = 1 forces the q^2 coefficient to equal f_0
        assert!(solve_times_one_pm_qk(&p("1+2v^4+v^6"), 2, PlusMinus::Plus, 1).is_err());
        assert!(solve_times_one_pm_qk(&p("v^-2"), 1, PlusMinus::Plus, 0).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec((-8i64..=8, -6i64..=6), 0..7).prop_map(LaurentPoly::from_terms)
    }

    fn arb_vinv_odd() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec(-9i64..=9, 0..8).prop_map(|cs| {
            LaurentPoly::from_terms(
                cs.into_iter()
                    .enumerate()
                    .map(|(i, c)| (-(2 * i as i64) - 1, c)),
            )
        })
    }

    proptest! {
        #[test]
        fn bar_is_multiplicative_involution(f in arb_poly(), g in arb_poly()) {
            prop_assert_eq!((&f * &g).bar(), &f.bar() * &g.bar());
            prop_assert_eq!(f.bar().bar(), f);
        }

        #[test]
        fn split_recomposes(f in arb_poly()) {
            let (plus, minus) = f.split_plus_minus();
            prop_assert!(plus.terms().all(|(e, _)| e >= 0));
            prop_assert!(minus.terms().all(|(e, _)| e < 0));
            prop_assert_eq!(&plus + &minus, f);
        }

        #[test]
        fn ring_axioms(f in arb_poly(), g in arb_poly(), h in arb_poly()) {
            prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
            prop_assert_eq!(&f * &g, &g * &f);
            prop_assert_eq!(&(&f - &g) + &g, f.clone());
        }

        #[test]
        fn poly_division_inverts_product(f in arb_poly(), g in arb_poly()) {
            prop_assume!(!g.is_zero());
            prop_assert_eq!((&f * &g).div_exact_poly(&g), Some(f));
        }

        #[test]
        fn render_parse_roundtrip(f in arb_poly()) {
            prop_assert_eq!(f.to_string().parse::<LaurentPoly>().unwrap(), f);
        }

        #[test]
        fn v_plus_vinv_roundtrip(f in arb_vinv_odd()) {
            let g = (&LaurentPoly::v_plus_vinv(1) * &f).filter_exps(|e| e < 0);
            prop_assert_eq!(solve_times_v_plus_vinv(&g, -1).unwrap(), f);
        }

        #[test]
        fn one_pm_qk_roundtrip(cs in proptest::collection::vec(-9i64..=9, 1..8),
                               k in 1u32..=3, plus in any::<bool>()) {
            let f = LaurentPoly::from_u_coeffs(&cs);
            let sign = if plus { PlusMinus::Plus } else { PlusMinus::Minus };
            let s = if plus { 1 } else { -1 };
            let g = &(LaurentPoly::one() + LaurentPoly::monomial(s, 2 * k as i64)) * &f;
            let deg_f = cs.len() as i64 - 1;
            let deg_g = deg_f + k as i64;
            // delete the top k coefficients entirely
            let g_low = g.filter_exps(|e| e <= 2 * (deg_g - k as i64));
            let got = solve_times_one_pm_qk_with_degree(&g_low, k, sign, deg_f, deg_g - k as i64).unwrap();
            prop_assert_eq!(got, f);
        }
    }
}
