//! The recursion engine: μ values, the decomposition coefficients
//! `m_κ(γ,λ)`, the correction sum `U`, the easy/direct/new recursions, the
//! stratified driver, the `u`-form, W-graphs and verification.
//!
//! Every recursion used here is an instance of one identity. For
//! `κ ∉ τ(λ)` and any `γ`,
//!
//! ```text
//!   Σ_{δ : κ ∈ τ(δ)} P(γ,δ) m_κ(δ,λ)  =  coefficient of â_γ in T̂_κ Ĉ_λ
//! ```
//!
//! The direct recursion reads it with `λ` a κ-arrow target of the column
//! being filled, the new recursion with `λ` the column itself. In both the
//! unknown `P(γ,μ)` enters affinely, so the engine evaluates the residual at
//! a few probe values and solves the resulting integer linear system.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::extblock::{BlockError, BlockOrder, ExtBlock, TypeCode};
use crate::hecke::{self, ModuleVector};
use crate::laurent::LaurentPoly;

/// `m0 + m1 (v+v^-1) + m2 (v^2+v^-2)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct MCoeff {
    #[serde(serialize_with = "ser_big")]
    pub m0: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub m1: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub m2: BigInt,
}

fn ser_big<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl MCoeff {
    pub fn new(m0: impl Into<BigInt>, m1: impl Into<BigInt>, m2: impl Into<BigInt>) -> Self {
        Self {
            m0: m0.into(),
            m1: m1.into(),
            m2: m2.into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.m0.is_zero() && self.m1.is_zero() && self.m2.is_zero()
    }

    pub fn to_poly(&self) -> LaurentPoly {
        let mut p = LaurentPoly::constant(self.m0.clone());
        p += &LaurentPoly::v_plus_vinv(1).scale(&self.m1);
        p += &LaurentPoly::v_plus_vinv(2).scale(&self.m2);
        p
    }
}

impl fmt::Display for MCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

/// How an entry was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum Route {
    Diagonal,
    /// `ℓ(γ) >= ℓ(δ)`, `γ != δ`.
    Length,
    /// `γ` is not below `δ` in the block order.
    Order,
    Easy {
        kappa: usize,
    },
    Direct {
        kappa: usize,
        lambda: usize,
    },
    New {
        kappa: usize,
    },
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Route::Diagonal => write!(f, "diagonal"),
            Route::Length => write!(f, "length"),
            Route::Order => write!(f, "order"),
            Route::Easy { kappa } => write!(f, "easy(k{kappa})"),
            Route::Direct { kappa, lambda } => write!(f, "direct(k{kappa},via {lambda})"),
            Route::New { kappa } => write!(f, "new(k{kappa})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    Pending,
    Known {
        poly: LaurentPoly,
        route: Route,
        /// Other routes that produced the same value.
        confirmed_by: Vec<Route>,
    },
    Unresolved {
        reason: String,
    },
}

/// The table of `P(γ,δ)`, indexed `[γ][δ]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyTable {
    lengths: Vec<u32>,
    entries: Vec<Vec<Entry>>,
}

impl PolyTable {
    /// Diagonal and length-forced zeros filled in, everything else pending.
    pub fn new(block: &ExtBlock) -> Self {
        let n = block.size();
        let lengths = block.lengths().to_vec();
        let entries = (0..n)
            .map(|g| {
                (0..n)
                    .map(|d| {
                        if g == d {
                            Entry::Known {
                                poly: LaurentPoly::one(),
                                route: Route::Diagonal,
                                confirmed_by: vec![],
                            }
                        } else if lengths[g] >= lengths[d] {
                            Entry::Known {
                                poly: LaurentPoly::zero(),
                                route: Route::Length,
                                confirmed_by: vec![],
                            }
                        } else {
                            Entry::Pending
                        }
                    })
                    .collect()
            })
            .collect();
        Self { lengths, entries }
    }

    pub fn size(&self) -> usize {
        self.lengths.len()
    }

    pub fn entry(&self, gamma: usize, delta: usize) -> &Entry {
        &self.entries[gamma][delta]
    }

    pub fn get(&self, gamma: usize, delta: usize) -> Option<&LaurentPoly> {
        match &self.entries[gamma][delta] {
            Entry::Known { poly, .. } => Some(poly),
            _ => None,
        }
    }

    pub fn set(&mut self, gamma: usize, delta: usize, poly: LaurentPoly, route: Route) {
        self.entries[gamma][delta] = Entry::Known {
            poly,
            route,
            confirmed_by: vec![],
        };
    }

    fn set_entry(&mut self, gamma: usize, delta: usize, e: Entry) {
        self.entries[gamma][delta] = e;
    }

    /// Whether every entry of column `delta` is known.
    pub fn column_complete(&self, delta: usize) -> bool {
        (0..self.size()).all(|g| self.get(g, delta).is_some())
    }

    pub fn unresolved(&self) -> Vec<(usize, usize, String)> {
        let mut out = vec![];
        for g in 0..self.size() {
            for d in 0..self.size() {
                if let Entry::Unresolved { reason } = &self.entries[g][d] {
                    out.push((g, d, reason.clone()));
                }
            }
        }
        out
    }

    /// Known nonzero off-diagonal entries, by `(δ, γ)`.
    pub fn nonzero_offdiagonal(&self) -> Vec<(usize, usize, &LaurentPoly)> {
        let mut out = vec![];
        for d in 0..self.size() {
            for g in 0..self.size() {
                if g != d {
                    if let Some(p) = self.get(g, d) {
                        if !p.is_zero() {
                            out.push((g, d, p));
                        }
                    }
                }
            }
        }
        out
    }

    /// `Ĉ_δ = Σ P(γ,δ) â_γ`, if the column is complete.
    pub fn c_hat(&self, delta: usize) -> Option<ModuleVector> {
        let mut v = ModuleVector::zero();
        for g in 0..self.size() {
            v.add_term(g, self.get(g, delta)?);
        }
        Some(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("P({gamma},{delta}) is not available")]
pub struct Missing {
    pub gamma: usize,
    pub delta: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KlvError {
    #[error(transparent)]
    Missing(#[from] Missing),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("routes disagree on P({gamma},{delta}): {first} gives {first_value}, {second} gives {second_value}")]
    RouteConflict {
        gamma: usize,
        delta: usize,
        first: Route,
        first_value: LaurentPoly,
        second: Route,
        second_value: LaurentPoly,
    },
    #[error("{route} has no solution for P({gamma},{delta}): {detail}")]
    Inconsistent {
        gamma: usize,
        delta: usize,
        route: Route,
        detail: String,
    },
    #[error("P({gamma},{delta}) = {poly} has the wrong exponents for a u-polynomial")]
    Parity {
        gamma: usize,
        delta: usize,
        poly: LaurentPoly,
    },
}

/// Result of one recursion that may fail to pin the value down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Value(LaurentPoly),
    Unresolved(String),
}

// ---------------------------------------------------------------------------
// Engine

/// Per-block data shared by all evaluations.
struct Engine<'a> {
    block: &'a ExtBlock,
    order: BlockOrder,
    /// descents[κ]: parameters with κ ∈ τ, sorted by (length, id).
    descents: Vec<Vec<usize>>,
    /// t_hat_rows[κ][γ]: the pairs (ν, c) with c the â_γ coefficient of T̂_κ â_ν.
    t_hat_rows: Vec<Vec<Vec<(usize, LaurentPoly)>>>,
    m_cache: RefCell<HashMap<(usize, usize, usize), MCoeff>>,
}

impl<'a> Engine<'a> {
    fn new(block: &'a ExtBlock) -> Self {
        let n = block.size();
        let by_len = block.by_length();
        let descents = (0..block.kappa_count())
            .map(|k| {
                by_len
                    .iter()
                    .copied()
                    .filter(|&g| block.is_descent(g, k))
                    .collect()
            })
            .collect();
        let t_hat_rows = (0..block.kappa_count())
            .map(|k| {
                let mut rows: Vec<Vec<(usize, LaurentPoly)>> = vec![vec![]; n];
                for nu in 0..n {
                    for (g, c) in hecke::t_hat_on_basis(block, k, nu) {
                        rows[g].push((nu, c));
                    }
                }
                rows
            })
            .collect();
        Self {
            block,
            order: BlockOrder::new(block),
            descents,
            t_hat_rows,
            m_cache: RefCell::new(HashMap::new()),
        }
    }

    fn ctx<'b>(&'b self, table: &'b PolyTable) -> Ctx<'b, 'a> {
        Ctx {
            eng: self,
            table,
            probe: None,
            touched: Cell::new(false),
        }
    }
}

/// A view of the table, optionally with one entry replaced by a trial value.
struct Ctx<'b, 'a> {
    eng: &'b Engine<'a>,
    table: &'b PolyTable,
    probe: Option<(usize, usize, LaurentPoly)>,
    touched: Cell<bool>,
}

impl Ctx<'_, '_> {
    fn block(&self) -> &ExtBlock {
        self.eng.block
    }

    fn p(&self, g: usize, d: usize) -> Result<LaurentPoly, Missing> {
        if let Some((pg, pd, val)) = &self.probe {
            if *pg == g && *pd == d {
                self.touched.set(true);
                return Ok(val.clone());
            }
        }
        self.table
            .get(g, d)
            .cloned()
            .ok_or(Missing { gamma: g, delta: d })
    }

    /// Whether `P(g,d)` is zero without consulting pending entries.
    fn known_zero(&self, g: usize, d: usize) -> bool {
        g != d && self.block().length(g) >= self.block().length(d)
    }

    fn mu(&self, k: i64, g: usize, d: usize) -> Result<BigInt, Missing> {
        if g == d || self.known_zero(g, d) {
            return Ok(BigInt::zero());
        }
        Ok(self.p(g, d)?.coeff(-k))
    }

    fn m(&self, kappa: usize, g: usize, l: usize) -> Result<MCoeff, Missing> {
        if let Some(m) = self.eng.m_cache.borrow().get(&(kappa, g, l)) {
            return Ok(m.clone());
        }
        let saved = self.touched.replace(false);
        let r = self.m_uncached(kappa, g, l);
        let used_probe = self.touched.get();
        self.touched.set(saved || used_probe);
        if let Ok(m) = &r {
            if !used_probe {
                self.eng
                    .m_cache
                    .borrow_mut()
                    .insert((kappa, g, l), m.clone());
            }
        }
        r
    }

    fn m_uncached(&self, kappa: usize, g: usize, l: usize) -> Result<MCoeff, Missing> {
        use TypeCode::*;
        let b = self.block();
        debug_assert!(b.is_descent(g, kappa) && !b.is_descent(l, kappa));
        if b.has_arrow(g, l, kappa) {
            return Ok(if b.defect(g, kappa) == 1 {
                MCoeff::new(0, 1, 0)
            } else {
                MCoeff::new(b.epsilon(g, l, kappa).expect("arrow"), 0, 0)
            });
        }
        let k = b.kappa_length(kappa);
        let lg = b.length(g) as i64;
        let ll = b.length(l) as i64;
        let odd = (ll - lg).rem_euclid(2) == 1;
        let between: Vec<usize> = self.eng.descents[kappa]
            .iter()
            .copied()
            .filter(|&d| {
                let ld = b.length(d) as i64;
                lg < ld && ld < ll
            })
            .collect();
        let sum11 = |this: &Self| -> Result<BigInt, Missing> {
            let mut s = BigInt::zero();
            for &d in &between {
                let a = this.mu(1, g, d)?;
                if a.is_zero() {
                    continue;
                }
                s += a * this.mu(1, d, l)?;
            }
            Ok(s)
        };
        let up = |this: &Self, types: &[TypeCode]| -> Result<BigInt, Missing> {
            let tl = b.type_of(l, kappa);
            if types.contains(&tl) {
                this.mu(1, g, b.cayley(l, kappa)[0])
            } else {
                Ok(BigInt::zero())
            }
        };
        let down = |this: &Self, types: &[TypeCode]| -> Result<BigInt, Missing> {
            let tg = b.type_of(g, kappa);
            if types.contains(&tg) {
                this.mu(1, b.cayley(g, kappa)[0], l)
            } else {
                Ok(BigInt::zero())
            }
        };
        Ok(match k {
            1 => MCoeff::new(self.mu(1, g, l)?, 0, 0),
            2 if odd => MCoeff::new(0, self.mu(1, g, l)?, 0),
            2 => {
                let m0 =
                    self.mu(2, g, l)? - sum11(self)? - up(self, &[T2Ci])? + down(self, &[T2Cr])?;
                MCoeff::new(m0, 0, 0)
            }
            _ if !odd => MCoeff::new(0, self.mu(2, g, l)? - sum11(self)?, 0),
            _ => {
                let mut triple = BigInt::zero();
                let mut cross = BigInt::zero();
                for &d in &between {
                    let a1 = self.mu(1, g, d)?;
                    let a2 = self.mu(2, g, d)?;
                    if a1.is_zero() && a2.is_zero() {
                        continue;
                    }
                    cross += &a1 * self.mu(2, d, l)? + &a2 * self.mu(1, d, l)?;
                    if a1.is_zero() {
                        continue;
                    }
                    for &f in &between {
                        if b.length(f) <= b.length(d) {
                            continue;
                        }
                        let c = self.mu(1, d, f)?;
                        if c.is_zero() {
                            continue;
                        }
                        triple += &a1 * c * self.mu(1, f, l)?;
                    }
                }
                let m0 = self.mu(3, g, l)? + triple - cross - up(self, &[T3Ci, T3i])?
                    + down(self, &[T3Cr, T3r])?;
                MCoeff::new(m0, 0, self.mu(1, g, l)?)
            }
        })
    }

    /// Coefficient of `â_γ` in `T̂_κ Ĉ_λ`.
    fn image_coefficient(&self, kappa: usize, g: usize, l: usize) -> Result<LaurentPoly, Missing> {
        let mut acc = LaurentPoly::zero();
        for (nu, c) in &self.eng.t_hat_rows[kappa][g] {
            if self.known_zero(*nu, l) {
                continue;
            }
            acc += &(c * &self.p(*nu, l)?);
        }
        Ok(acc)
    }

    /// The descents that can carry a nonzero `m_κ(δ,λ)`, given `ℓ(δ) >= ℓ(γ)`.
    fn candidates(&self, kappa: usize, g: usize, l: usize) -> Vec<usize> {
        let b = self.block();
        let top = b.length(l) as i64 + b.kappa_length(kappa) as i64 - 2;
        self.eng.descents[kappa]
            .iter()
            .copied()
            .filter(|&d| {
                b.length(d) >= b.length(g)
                    && ((b.length(d) as i64) <= top || b.has_arrow(d, l, kappa))
            })
            .collect()
    }

    /// `Σ_δ P(γ,δ) m_κ(δ,λ)` restricted by `keep`.
    fn weighted_sum(
        &self,
        kappa: usize,
        g: usize,
        l: usize,
        keep: impl Fn(usize) -> bool,
    ) -> Result<LaurentPoly, Missing> {
        let mut acc = LaurentPoly::zero();
        for d in self.candidates(kappa, g, l) {
            if !keep(d) {
                continue;
            }
            let p = match self.p(g, d) {
                Ok(p) if p.is_zero() => continue,
                Ok(p) => Some(p),
                Err(e) => {
                    // a pending P only matters if its weight is nonzero
                    if self.m(kappa, d, l)?.is_zero() {
                        continue;
                    }
                    return Err(e);
                }
            };
            let m = self.m(kappa, d, l)?;
            if m.is_zero() {
                continue;
            }
            acc += &(p.expect("set above") * m.to_poly());
        }
        Ok(acc)
    }

    /// Left side minus right side of the basic identity at `(γ, λ)`.
    fn identity_residual(&self, kappa: usize, g: usize, l: usize) -> Result<LaurentPoly, Missing> {
        let lhs = self.weighted_sum(kappa, g, l, |_| true)?;
        Ok(lhs - self.image_coefficient(kappa, g, l)?)
    }

    fn u_term(&self, kappa: usize, g: usize, l: usize) -> Result<LaurentPoly, Missing> {
        let b = self.block();
        self.weighted_sum(kappa, g, l, |d| !b.has_arrow(d, l, kappa))
    }

    fn easy(&self, kappa: usize, g: usize, mu: usize) -> Result<LaurentPoly, Missing> {
        let b = self.block();
        let shift = -(b.kappa_length(kappa) as i64) + b.defect(g, kappa) as i64;
        let mut acc = LaurentPoly::zero();
        for s in b.kappa_arrow_sources(g, kappa) {
            let e = b.epsilon(s, g, kappa).expect("arrow") as i64;
            if self.known_zero(s, mu) {
                continue;
            }
            acc += &self.p(s, mu)?.scale_i64(e);
        }
        Ok(acc.shift(shift))
    }

    fn kappa_less(&self, kappa: usize, g: usize, l: usize) -> Result<bool, Missing> {
        let b = self.block();
        if self.eng.order.lt(g, l) {
            return Ok(true);
        }
        if b.defect(g, kappa) == 1 && !self.mu(1, b.cayley(g, kappa)[0], l)?.is_zero() {
            return Ok(true);
        }
        if b.defect(l, kappa) == 1 && !self.mu(1, g, b.cayley(l, kappa)[0])?.is_zero() {
            return Ok(true);
        }
        Ok(false)
    }
}

enum Solved {
    Value(LaurentPoly),
    Underdetermined,
    Inconsistent(String),
}

/// Solve `residual(P) = 0` for `P = P(γ,μ)` in the span of
/// `v^e`, `ℓ(γ)-ℓ(μ) <= e <= -1`, `e ≡ ℓ(γ)-ℓ(μ) (mod 2)`.
fn solve_entry(
    eng: &Engine,
    table: &PolyTable,
    g: usize,
    mu: usize,
    residual: impl Fn(&Ctx) -> Result<LaurentPoly, Missing>,
) -> Result<Solved, Missing> {
    let b = eng.block;
    let lo = b.length(g) as i64 - b.length(mu) as i64;
    let exps: Vec<i64> = (lo..0).step_by(2).collect();
    let eval = |p: LaurentPoly| -> Result<(LaurentPoly, bool), Missing> {
        let mut ctx = eng.ctx(table);
        ctx.probe = Some((g, mu, p));
        let r = residual(&ctx)?;
        Ok((r, ctx.touched.get()))
    };
    let (r0, touched) = eval(LaurentPoly::zero())?;
    if !touched {
        return Ok(if r0.is_zero() {
            Solved::Underdetermined
        } else {
            Solved::Inconsistent(format!("residual {r0} does not involve the unknown"))
        });
    }
    let mut cols = Vec::with_capacity(exps.len());
    for &e in &exps {
        let (r, _) = eval(LaurentPoly::v_pow(e))?;
        cols.push(r - &r0);
    }
    let sol = match solve_linear(&cols, &-r0) {
        LinearSolution::Unique(x) => x,
        LinearSolution::Underdetermined => return Ok(Solved::Underdetermined),
        LinearSolution::Inconsistent => {
            return Ok(Solved::Inconsistent("linear system has no solution".into()))
        }
        LinearSolution::NonIntegral => {
            return Ok(Solved::Inconsistent("solution is not integral".into()))
        }
    };
    let p = LaurentPoly::from_terms(exps.iter().copied().zip(sol));
    let (check, _) = eval(p.clone())?;
    if !check.is_zero() {
        return Ok(Solved::Inconsistent(format!(
            "residual at the solution is {check} (not affine in the unknown)"
        )));
    }
    Ok(Solved::Value(p))
}

enum LinearSolution {
    Unique(Vec<BigInt>),
    Underdetermined,
    Inconsistent,
    NonIntegral,
}

/// Solve `Σ x_j cols[j] = rhs` coefficientwise, exactly over the rationals.
fn solve_linear(cols: &[LaurentPoly], rhs: &LaurentPoly) -> LinearSolution {
    let n = cols.len();
    let mut rows_exp: Vec<i64> = cols
        .iter()
        .chain(std::iter::once(rhs))
        .flat_map(|p| p.terms().map(|(e, _)| e).collect::<Vec<_>>())
        .collect();
    rows_exp.sort();
    rows_exp.dedup();
    let mut a: Vec<Vec<BigRational>> = rows_exp
        .iter()
        .map(|&e| {
            let mut row: Vec<BigRational> = cols
                .iter()
                .map(|c| BigRational::from_integer(c.coeff(e)))
                .collect();
            row.push(BigRational::from_integer(rhs.coeff(e)));
            row
        })
        .collect();
    let mut pivots = vec![];
    let mut r = 0;
    for c in 0..n {
        let Some(piv) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, piv);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..=n {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if a[r..].iter().any(|row| !row[n].is_zero()) {
        return LinearSolution::Inconsistent;
    }
    if pivots.len() < n {
        return LinearSolution::Underdetermined;
    }
    let mut x = vec![BigInt::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        let v = &a[i][n];
        if !v.is_integer() {
            return LinearSolution::NonIntegral;
        }
        x[c] = v.to_integer();
    }
    LinearSolution::Unique(x)
}

// ---------------------------------------------------------------------------
// Public single-step operations

/// The coefficient of `v^{-k}` in `P(γ,λ)`.
pub fn mu(table: &PolyTable, k: u32, gamma: usize, lambda: usize) -> Result<BigInt, KlvError> {
    if gamma == lambda {
        return Ok(BigInt::zero());
    }
    Ok(table
        .get(gamma, lambda)
        .ok_or(Missing {
            gamma,
            delta: lambda,
        })?
        .coeff(-(k as i64)))
}

fn require_pair(block: &ExtBlock, kappa: usize, g: usize, l: usize) -> Result<(), KlvError> {
    if !block.is_descent(g, kappa) {
        return Err(BlockError::NotDescent { gamma: g, kappa }.into());
    }
    if block.is_descent(l, kappa) {
        return Err(KlvError::NotApplicable(format!(
            "kappa {kappa} is a descent for {l}"
        )));
    }
    Ok(())
}

/// `m_κ(γ,λ)` for `κ ∈ τ(γ)`, `κ ∉ τ(λ)`.
pub fn m_coeff(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    lambda: usize,
) -> Result<MCoeff, KlvError> {
    require_pair(block, kappa, gamma, lambda)?;
    let eng = Engine::new(block);
    Ok(eng.ctx(table).m(kappa, gamma, lambda)?)
}

pub fn kappa_less(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    lambda: usize,
) -> Result<bool, KlvError> {
    require_pair(block, kappa, gamma, lambda)?;
    let eng = Engine::new(block);
    Ok(eng.ctx(table).kappa_less(kappa, gamma, lambda)?)
}

/// `U(γ,λ) = Σ P(γ,δ) m_κ(δ,λ)` over the `δ` that are κ-less than `λ`.
pub fn u_term(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    lambda: usize,
) -> Result<LaurentPoly, KlvError> {
    if block.is_descent(lambda, kappa) {
        return Err(KlvError::NotApplicable(format!(
            "kappa {kappa} is a descent for {lambda}"
        )));
    }
    let eng = Engine::new(block);
    Ok(eng.ctx(table).u_term(kappa, gamma, lambda)?)
}

/// `P(γ,μ) = v^{-ℓ(κ)+d} Σ ε(γ',γ) P(γ',μ)` over the κ-arrows `γ' -> γ`.
pub fn easy_recursion(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    mu: usize,
) -> Result<LaurentPoly, KlvError> {
    if block.is_descent(gamma, kappa) || !block.is_descent(mu, kappa) {
        return Err(KlvError::NotApplicable(format!(
            "easy recursion needs kappa {kappa} to be an ascent for {gamma} and a descent for {mu}"
        )));
    }
    let eng = Engine::new(block);
    Ok(eng.ctx(table).easy(kappa, gamma, mu)?)
}

const DIRECT_TYPES: [TypeCode; 8] = [
    TypeCode::T1Cm,
    TypeCode::T1r1f,
    TypeCode::T2Cm,
    TypeCode::T2r11,
    TypeCode::T3Cm,
    TypeCode::T2Cr,
    TypeCode::T3Cr,
    TypeCode::T3r,
];

/// `P(γ,μ)` for `κ ∈ τ(γ) ∩ τ(μ)` from the decomposition of `T̂_κ Ĉ_λ`,
/// `μ -> λ` a κ-arrow. Entries of column `μ` longer than `γ` must already
/// be in the table.
pub fn direct_recursion(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    mu: usize,
) -> Result<LaurentPoly, KlvError> {
    let tm = block.type_of(mu, kappa);
    if !block.is_descent(gamma, kappa) || !DIRECT_TYPES.contains(&tm) {
        return Err(KlvError::NotApplicable(format!(
            "direct recursion needs kappa {kappa} a descent for {gamma} and type of {mu} in the direct list, found {tm}"
        )));
    }
    if gamma == mu {
        return Ok(LaurentPoly::one());
    }
    if block.length(gamma) >= block.length(mu) {
        return Ok(LaurentPoly::zero());
    }
    let eng = Engine::new(block);
    let lambda = block.kappa_arrow_targets(mu, kappa)?[0];
    match solve_entry(&eng, table, gamma, mu, |c| {
        c.identity_residual(kappa, gamma, lambda)
    })? {
        Solved::Value(p) => Ok(p),
        Solved::Underdetermined => Err(KlvError::NotApplicable(
            "the relation does not determine the entry".into(),
        )),
        Solved::Inconsistent(detail) => Err(KlvError::Inconsistent {
            gamma,
            delta: mu,
            route: Route::Direct { kappa, lambda },
            detail,
        }),
    }
}

/// `P(γ,λ)` from the decomposition of `T̂_κ Ĉ_λ` when `κ` is an ascent of
/// `λ` with no κ-arrow into it (types 1i2s, 1rn, 2rn, 3rn).
pub fn new_recursion(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    lambda: usize,
) -> Result<Outcome, KlvError> {
    if !block.type_of(lambda, kappa).is_arrowless_ascent() {
        return Err(KlvError::NotApplicable(format!(
            "new recursion needs type 1i2s, 1rn, 2rn or 3rn for {lambda}, found {}",
            block.type_of(lambda, kappa)
        )));
    }
    if gamma == lambda || block.length(gamma) >= block.length(lambda) {
        return Ok(Outcome::Value(if gamma == lambda {
            LaurentPoly::one()
        } else {
            LaurentPoly::zero()
        }));
    }
    let eng = Engine::new(block);
    let solved = solve_entry(&eng, table, gamma, lambda, |c| {
        c.identity_residual(kappa, gamma, lambda)
    });
    Ok(match solved {
        Err(m) => Outcome::Unresolved(format!("needs {m}")),
        Ok(Solved::Value(p)) => Outcome::Value(p),
        Ok(Solved::Underdetermined) => {
            Outcome::Unresolved("the relation does not determine the entry".into())
        }
        Ok(Solved::Inconsistent(detail)) => {
            return Err(KlvError::Inconsistent {
                gamma,
                delta: lambda,
                route: Route::New { kappa },
                detail,
            })
        }
    })
}

// ---------------------------------------------------------------------------
// Driver

enum Attempt {
    Done(LaurentPoly, Route, Vec<Route>),
    Blocked(String),
}

fn try_entry(eng: &Engine, table: &PolyTable, g: usize, mu: usize) -> Result<Attempt, KlvError> {
    let b = eng.block;
    let mut found: Option<(LaurentPoly, Route, Vec<Route>)> = None;
    let mut blocked: Vec<String> = vec![];
    let mut record = |val: LaurentPoly, route: Route| -> Result<(), KlvError> {
        match &mut found {
            None => found = Some((val, route, vec![])),
            Some((v, r, others)) => {
                if *v != val {
                    return Err(KlvError::RouteConflict {
                        gamma: g,
                        delta: mu,
                        first: r.clone(),
                        first_value: v.clone(),
                        second: route,
                        second_value: val,
                    });
                }
                others.push(route);
            }
        }
        Ok(())
    };

    let ctx = eng.ctx(table);
    if !eng.order.leq(g, mu) {
        record(LaurentPoly::zero(), Route::Order)?;
    }
    for k in 0..b.kappa_count() {
        if b.is_descent(mu, k) && !b.is_descent(g, k) {
            match ctx.easy(k, g, mu) {
                Ok(v) => record(v, Route::Easy { kappa: k })?,
                Err(m) => blocked.push(format!("easy(k{k}) needs {m}")),
            }
        }
    }
    let mut solved = |route: Route, lam: usize, k: usize| -> Result<(), KlvError> {
        match solve_entry(eng, table, g, mu, |c| c.identity_residual(k, g, lam)) {
            Err(m) => blocked.push(format!("{route} needs {m}")),
            Ok(Solved::Value(v)) => record(v, route)?,
            Ok(Solved::Underdetermined) => blocked.push(format!("{route} is underdetermined")),
            Ok(Solved::Inconsistent(detail)) => {
                return Err(KlvError::Inconsistent {
                    gamma: g,
                    delta: mu,
                    route,
                    detail,
                })
            }
        }
        Ok(())
    };
    for k in 0..b.kappa_count() {
        if b.is_descent(mu, k) && b.is_descent(g, k) {
            for lam in b.kappa_arrow_targets(mu, k)? {
                solved(
                    Route::Direct {
                        kappa: k,
                        lambda: lam,
                    },
                    lam,
                    k,
                )?;
            }
        }
    }
    for k in 0..b.kappa_count() {
        if b.type_of(mu, k).is_arrowless_ascent() {
            solved(Route::New { kappa: k }, mu, k)?;
        }
    }
    Ok(match found {
        Some((v, r, others)) => Attempt::Done(v, r, others),
        None if blocked.is_empty() => Attempt::Blocked("no recursion applies".into()),
        None => Attempt::Blocked(blocked.join("; ")),
    })
}

/// Fill the whole table, column strata by increasing length.
///
/// Within a stratum the entries are retried until no more progress is made;
/// what is left is reported as unresolved. Every applicable route is
/// evaluated and all of them must agree.
pub fn compute_all(block: &ExtBlock) -> Result<PolyTable, KlvError> {
    let eng = Engine::new(block);
    let mut table = PolyTable::new(block);
    let order = block.by_length();
    let mut i = 0;
    while i < order.len() {
        let len = block.length(order[i]);
        let stratum: Vec<usize> = order[i..]
            .iter()
            .copied()
            .take_while(|&d| block.length(d) == len)
            .collect();
        i += stratum.len();
        let mut rows: Vec<usize> = (0..block.size()).collect();
        rows.sort_by_key(|&g| (std::cmp::Reverse(block.length(g)), g));
        let mut pending: Vec<(usize, usize)> = stratum
            .iter()
            .flat_map(|&mu| {
                rows.iter()
                    .copied()
                    .filter(move |&g| block.length(g) < len)
                    .map(move |g| (g, mu))
            })
            .collect();
        let mut reasons: BTreeMap<(usize, usize), String> = BTreeMap::new();
        loop {
            let mut progress = false;
            let mut still = vec![];
            for (g, mu) in pending {
                match try_entry(&eng, &table, g, mu)? {
                    Attempt::Done(v, route, confirmed_by) => {
                        table.set_entry(
                            g,
                            mu,
                            Entry::Known {
                                poly: v,
                                route,
                                confirmed_by,
                            },
                        );
                        progress = true;
                    }
                    Attempt::Blocked(why) => {
                        reasons.insert((g, mu), why);
                        still.push((g, mu));
                    }
                }
            }
            pending = still;
            if !progress || pending.is_empty() {
                break;
            }
        }
        for (g, mu) in pending {
            let reason = reasons.remove(&(g, mu)).unwrap_or_default();
            table.set_entry(g, mu, Entry::Unresolved { reason });
        }
    }
    Ok(table)
}

/// `P^σ(γ,δ)` as a polynomial in `u = v^2`, returned in the variable `v`
/// (only even exponents occur).
pub fn to_classical(
    block: &ExtBlock,
    table: &PolyTable,
    gamma: usize,
    delta: usize,
) -> Result<LaurentPoly, KlvError> {
    let p = table.get(gamma, delta).ok_or(Missing { gamma, delta })?;
    let shifted = p.shift(block.length(delta) as i64 - block.length(gamma) as i64);
    if shifted.terms().any(|(e, _)| e < 0 || e % 2 != 0) {
        return Err(KlvError::Parity {
            gamma,
            delta,
            poly: p.clone(),
        });
    }
    Ok(shifted)
}

// ---------------------------------------------------------------------------
// W-graph

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WEdge {
    pub to: usize,
    /// `μ_{-1}` of the pair (lower, higher), 0 if only arrows join them.
    pub mu: String,
    /// Generators `κ` for which there is a κ-arrow between the two.
    pub arrow: Vec<usize>,
    pub kind: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WVertex {
    pub id: usize,
    pub length: u32,
    pub tau: Vec<usize>,
    pub edges: Vec<WEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WGraph {
    pub vertices: Vec<WVertex>,
}

impl WGraph {
    pub fn edge_count(&self) -> usize {
        self.vertices.iter().map(|v| v.edges.len()).sum::<usize>() / 2
    }
}

/// Edges join `γ`, `δ` when `μ_{-1}` of the pair is nonzero or a κ-arrow
/// links them. Pairs whose entry is unresolved contribute arrows only.
pub fn wgraph(block: &ExtBlock, table: &PolyTable) -> WGraph {
    let n = block.size();
    let mut edges: BTreeMap<(usize, usize), (BigInt, Vec<usize>)> = BTreeMap::new();
    for d in 0..n {
        for g in 0..n {
            if block.length(g) < block.length(d) {
                if let Some(p) = table.get(g, d) {
                    let m = p.coeff(-1);
                    if !m.is_zero() {
                        edges.entry((g, d)).or_default().0 = m;
                    }
                }
            }
        }
    }
    for g in 0..n {
        for k in block.tau(g) {
            for l in block.kappa_arrow_targets(g, k).expect("descent") {
                let key = (g.min(l), g.max(l));
                let e = edges.entry(key).or_default();
                if !e.1.contains(&k) {
                    e.1.push(k);
                }
            }
        }
    }
    let mut vertices: Vec<WVertex> = (0..n)
        .map(|g| WVertex {
            id: g,
            length: block.length(g),
            tau: block.tau(g).into_iter().collect(),
            edges: vec![],
        })
        .collect();
    for ((a, b), (m, arrows)) in edges {
        let kind = match (m.is_zero(), arrows.is_empty()) {
            (false, true) => "mu",
            (true, false) => "arrow",
            _ => "mu+arrow",
        };
        for (x, y) in [(a, b), (b, a)] {
            vertices[x].edges.push(WEdge {
                to: y,
                mu: m.to_string(),
                arrow: arrows.clone(),
                kind,
            });
        }
    }
    for v in &mut vertices {
        v.edges.sort_by_key(|e| e.to);
    }
    WGraph { vertices }
}

// ---------------------------------------------------------------------------
// Verification

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CheckSummary {
    pub checked: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, msg: String) {
        self.failures.push(msg);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    /// `T̂_κ Ĉ_λ = (v^k+v^-k) Ĉ_λ` for `κ ∈ τ(λ)`.
    pub eigen: CheckSummary,
    /// `T̂_κ Ĉ_λ = Σ m_κ(γ,λ) Ĉ_γ` for `κ ∉ τ(λ)`.
    pub decomposition: CheckSummary,
    /// Degree, parity, diagonal and support of every entry.
    pub entries: CheckSummary,
    /// `m_κ(γ,λ) != 0` only for κ-arrows and κ-less pairs.
    pub nonvanishing: CheckSummary,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.eigen.passed()
            && self.decomposition.passed()
            && self.entries.passed()
            && self.nonvanishing.passed()
    }
}

/// Degree, parity, diagonal and support conditions on every known entry.
pub fn check_entries(block: &ExtBlock, table: &PolyTable) -> CheckSummary {
    let order = BlockOrder::new(block);
    let mut s = CheckSummary::default();
    for d in 0..block.size() {
        for g in 0..block.size() {
            let Some(p) = table.get(g, d) else {
                s.skipped += 1;
                continue;
            };
            s.checked += 1;
            if g == d {
                if !p.is_one() {
                    s.fail(format!("P({g},{g}) = {p}, expected 1"));
                }
                continue;
            }
            if p.is_zero() {
                continue;
            }
            let diff = block.length(g) as i64 - block.length(d) as i64;
            let (lo, hi) = (p.min_exp().unwrap(), p.max_exp().unwrap());
            if hi > -1 || lo < diff {
                s.fail(format!(
                    "P({g},{d}) = {p} has exponents outside [{diff}, -1]"
                ));
            }
            if p.terms().any(|(e, _)| (e - diff).rem_euclid(2) != 0) {
                s.fail(format!("P({g},{d}) = {p} has the wrong parity"));
            }
            if !order.lt(g, d) {
                s.fail(format!(
                    "P({g},{d}) = {p} is nonzero but {g} is not below {d}"
                ));
            }
        }
    }
    s
}

/// Run every check that the known part of the table allows.
pub fn verify(block: &ExtBlock, table: &PolyTable) -> VerifyReport {
    let eng = Engine::new(block);
    let ctx = eng.ctx(table);
    let mut rep = VerifyReport {
        entries: check_entries(block, table),
        ..Default::default()
    };
    let n = block.size();
    let chats: Vec<Option<ModuleVector>> = (0..n).map(|d| table.c_hat(d)).collect();
    for l in 0..n {
        for k in 0..block.kappa_count() {
            let Some(c) = &chats[l] else {
                rep.eigen.skipped += 1;
                continue;
            };
            let image = hecke::apply_t_hat(block, k, c);
            if block.is_descent(l, k) {
                rep.eigen.checked += 1;
                let want = c.scale(&LaurentPoly::v_plus_vinv(block.kappa_length(k) as i64));
                if image != want {
                    rep.eigen.fail(format!(
                        "T̂_{k} Ĉ_{l} is not (v^{0}+v^-{0}) Ĉ_{l}",
                        block.kappa_length(k)
                    ));
                }
                continue;
            }
            // decomposition against m_κ
            let mut rhs = ModuleVector::zero();
            let mut ok = true;
            for &g in &eng.descents[k] {
                match ctx.m(k, g, l) {
                    Ok(m) if m.is_zero() => {}
                    Ok(m) => match &chats[g] {
                        Some(cg) => rhs.add_scaled(cg, &m.to_poly()),
                        None => ok = false,
                    },
                    Err(_) => ok = false,
                }
            }
            if !ok {
                rep.decomposition.skipped += 1;
                continue;
            }
            rep.decomposition.checked += 1;
            if image != rhs {
                let diff = image.sub(&rhs);
                rep.decomposition
                    .fail(format!("T̂_{k} Ĉ_{l} differs from Σ m Ĉ by {diff:?}"));
            }
            for &g in &eng.descents[k] {
                let Ok(m) = ctx.m(k, g, l) else { continue };
                if m.is_zero() {
                    continue;
                }
                rep.nonvanishing.checked += 1;
                let arrow = block.has_arrow(g, l, k);
                match ctx.kappa_less(k, g, l) {
                    Ok(less) if arrow || less => {}
                    Ok(_) => rep.nonvanishing.fail(format!(
                        "m_{k}({g},{l}) = {m} but {g} is neither an arrow source nor kappa-less"
                    )),
                    Err(_) => rep.nonvanishing.skipped += 1,
                }
            }
        }
    }
    rep
}

/// Largest absolute coefficient in the table (for reporting).
pub fn max_coefficient(table: &PolyTable) -> BigInt {
    let mut best = BigInt::zero();
    for (_, _, p) in table.nonzero_offdiagonal() {
        for (_, c) in p.terms() {
            if c.abs() > best {
                best = c.abs();
            }
        }
    }
    best
}

/// Whether every nonzero entry has nonnegative coefficients.
pub fn all_coefficients_nonnegative(table: &PolyTable) -> bool {
    table
        .nonzero_offdiagonal()
        .iter()
        .all(|(_, _, p)| p.terms().all(|(_, c)| !c.is_negative()))
}

/// Coefficient of `â_γ` in `T̂_κ Ĉ_λ`, from the matrix of `T̂_κ`.
pub fn image_coefficient(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    lambda: usize,
) -> Result<LaurentPoly, KlvError> {
    let eng = Engine::new(block);
    Ok(eng.ctx(table).image_coefficient(kappa, gamma, lambda)?)
}

/// The coefficient of `a^κ_γ` in `T̂_κ Ĉ_λ` written out case by case from
/// the type of `κ` at `γ` (`κ ∈ τ(γ)`, `κ ∉ τ(λ)`).
pub fn image_coefficient_by_type(
    block: &ExtBlock,
    table: &PolyTable,
    kappa: usize,
    gamma: usize,
    lambda: usize,
) -> Result<LaurentPoly, KlvError> {
    use TypeCode::*;
    require_pair(block, kappa, gamma, lambda)?;
    let p = |x: usize| -> Result<LaurentPoly, KlvError> {
        Ok(table.get(x, lambda).cloned().ok_or(Missing {
            gamma: x,
            delta: lambda,
        })?)
    };
    let k = block.kappa_length(kappa) as i64;
    let vk = LaurentPoly::v_pow(k);
    let vmk = LaurentPoly::v_pow(-k);
    let x = block.cross(gamma, kappa);
    let cay = block.cayley(gamma, kappa);
    let pg = p(gamma)?;
    Ok(match block.type_of(gamma, kappa) {
        T1Cm | T2Cm | T3Cm => &vk * &pg + p(x)?,
        T1ic | T2ic | T3ic | T1r1s => (&vk + &vmk) * &pg,
        T2Cr | T3Cr | T3r => {
            LaurentPoly::v_minus_vinv(k - 1).shift(1) * &pg
                + LaurentPoly::v_plus_vinv(1) * p(cay[0])?
        }
        T1r1f | T2r11 => (&vk - &vmk) * &pg + p(cay[0])? + p(cay[1])?,
        T1r2 | T2r22 => &vk * &pg - &vmk * p(x)? + p(cay[0])?,
        T2r21 => {
            let mut acc = LaurentPoly::v_minus_vinv(2) * &pg;
            for &l in cay {
                acc += &p(l)?.scale_i64(block.epsilon(gamma, l, kappa)? as i64);
            }
            acc
        }
        t => unreachable!("{t} is an ascent"),
    })
}
