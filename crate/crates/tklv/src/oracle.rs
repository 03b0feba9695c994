//! An independent computation of the polynomial table straight from the
//! module action, with no recursion formulas.
//!
//! The bar involution `D` is the semilinear map with `D T̂_κ = T̂_κ D` and
//! `D(â_y) ∈ â_y + Σ_{ℓ(z)<ℓ(y)} Z[v,v^-1] â_z`. Its columns are built by
//! length: a column reached by some `T̂_κ â_x` follows by division, the rest
//! come from solving the commutation relations together with `D² = 1`.
//! The canonical basis is then the unique self-dual `Ĉ_y` with
//! off-diagonal coefficients in `v^-1 Z[v^-1]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::extblock::{ExtBlock, TypeCode};
use crate::hecke::{self, ModuleVector};
use crate::klv::PolyTable;
use crate::laurent::LaurentPoly;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("parameter {gamma} has type {code} for generator {kappa}, which the classical table does not cover")]
    NotClassical {
        gamma: usize,
        kappa: usize,
        code: TypeCode,
    },
}

/// The matrices of `T̂_κ` in the `â` basis, stored by column.
#[derive(Debug, Clone)]
pub struct HatOperators {
    pub lengths: Vec<u32>,
    /// `columns[κ][x]` lists `(w, c)` with `T̂_κ â_x = Σ c â_w`.
    pub columns: Vec<Vec<Vec<(usize, LaurentPoly)>>>,
}

impl HatOperators {
    pub fn from_block(block: &ExtBlock) -> Self {
        Self {
            lengths: block.lengths().to_vec(),
            columns: (0..block.kappa_count())
                .map(|k| {
                    (0..block.size())
                        .map(|x| hecke::t_hat_on_basis(block, k, x))
                        .collect()
                })
                .collect(),
        }
    }

    /// The classical action, from its own table, for blocks whose generators
    /// all have length 1 and whose types are untwisted.
    pub fn classical(block: &ExtBlock) -> Result<Self, OracleError> {
        use TypeCode::*;
        let u = LaurentPoly::v_pow(2);
        let one = LaurentPoly::one();
        let um1 = &u - &one;
        let mut columns = vec![];
        for k in 0..block.kappa_count() {
            let mut cols = vec![];
            for x in 0..block.size() {
                let code = block.type_of(x, k);
                let cross = block.cross(x, k);
                let cay = block.cayley(x, k);
                // (T + 1) a_x
                let plus_one: Vec<(usize, LaurentPoly)> = match code {
                    T1Cp => vec![(x, one.clone()), (cross, one.clone())],
                    T1Cm => vec![(x, u.clone()), (cross, u.clone())],
                    T1i1 => vec![
                        (x, one.clone()),
                        (cross, one.clone()),
                        (cay[0], one.clone()),
                    ],
                    T1i2f => vec![
                        (x, LaurentPoly::constant(2)),
                        (cay[0], one.clone()),
                        (cay[1], one.clone()),
                    ],
                    T1i2s | T1rn => vec![],
                    T1ic | T1r1s => vec![(x, &u + &one)],
                    T1r1f => vec![
                        (x, um1.clone()),
                        (cay[0], um1.clone()),
                        (cay[1], um1.clone()),
                    ],
                    T1r2 => vec![(x, u.clone()), (cross, -&one), (cay[0], um1.clone())],
                    code => {
                        return Err(OracleError::NotClassical {
                            gamma: x,
                            kappa: k,
                            code,
                        })
                    }
                };
                let mut v = ModuleVector::zero();
                for (d, c) in plus_one {
                    let e = block.length(d) as i64 - block.length(x) as i64 - 1;
                    v.add_term(d, &c.shift(e));
                }
                cols.push(v.iter().map(|(d, c)| (d, c.clone())).collect());
            }
            columns.push(cols);
        }
        Ok(Self {
            lengths: block.lengths().to_vec(),
            columns,
        })
    }

    pub fn size(&self) -> usize {
        self.lengths.len()
    }

    fn apply(&self, k: usize, v: &ModuleVector) -> ModuleVector {
        let mut out = ModuleVector::zero();
        for (x, c) in v.iter() {
            for (w, t) in &self.columns[k][x] {
                out.add_term(*w, &(c * t));
            }
        }
        out
    }
}

/// Columns of `D` and of the canonical basis, `None` where undetermined.
#[derive(Debug, Clone)]
pub struct OracleTable {
    pub bar: Vec<Option<ModuleVector>>,
    pub canonical: Vec<Option<ModuleVector>>,
    pub notes: Vec<String>,
}

impl OracleTable {
    pub fn get(&self, gamma: usize, delta: usize) -> Option<LaurentPoly> {
        self.canonical[delta].as_ref().map(|c| c.get(gamma))
    }
}

/// `Σ_w bar(T̂[w,x]) D(â_w) - T̂ D(â_x)`, or `None` if a column is missing.
fn commutator(
    ops: &HatOperators,
    bar: &[Option<ModuleVector>],
    k: usize,
    x: usize,
) -> Option<ModuleVector> {
    let mut lhs = ModuleVector::zero();
    for (w, c) in &ops.columns[k][x] {
        lhs.add_scaled(bar[*w].as_ref()?, &c.bar());
    }
    Some(lhs.sub(&ops.apply(k, bar[x].as_ref()?)))
}

/// `D(D(â_y)) - â_y`.
fn square_defect(bar: &[Option<ModuleVector>], y: usize) -> Option<ModuleVector> {
    let col = bar[y].as_ref()?;
    let mut acc = ModuleVector::zero();
    for (w, c) in col.iter() {
        acc.add_scaled(bar[w].as_ref()?, &c.bar());
    }
    Some(acc.sub(&ModuleVector::basis(y)))
}

/// Try to get `D(â_y)` from a relation `T̂_κ â_x ∋ c â_y`.
fn column_by_division(
    ops: &HatOperators,
    bar: &[Option<ModuleVector>],
    y: usize,
) -> Option<ModuleVector> {
    for k in 0..ops.columns.len() {
        for x in 0..ops.size() {
            if ops.lengths[x] >= ops.lengths[y] {
                continue;
            }
            let Some((_, cy)) = ops.columns[k][x].iter().find(|(w, _)| *w == y) else {
                continue;
            };
            let Some(rx) = &bar[x] else { continue };
            let mut acc = ops.apply(k, rx);
            let mut ok = true;
            for (w, c) in &ops.columns[k][x] {
                if *w == y {
                    continue;
                }
                match &bar[*w] {
                    Some(rw) => acc = acc.sub(&rw.scale(&c.bar())),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let d = cy.bar();
            let col: Option<Vec<(usize, LaurentPoly)>> = acc
                .iter()
                .map(|(z, c)| c.div_exact_poly(&d).map(|q| (z, q)))
                .collect();
            if let Some(col) = col {
                return Some(ModuleVector::from_entries(col));
            }
        }
    }
    None
}

const PRIME: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn reduce(c: &BigInt) -> u64 {
    let p = BigInt::from(PRIME);
    let m = ((c % &p) + &p) % &p;
    m.to_u64().expect("reduced")
}

fn lift(x: u64) -> BigInt {
    if x > PRIME / 2 {
        BigInt::from(x) - BigInt::from(PRIME)
    } else {
        BigInt::from(x)
    }
}

/// Flatten a list of equation vectors into coordinates `(eq, z, exp) -> c`.
fn flatten(eqs: &[ModuleVector]) -> BTreeMap<(usize, usize, i64), BigInt> {
    let mut out = BTreeMap::new();
    for (i, v) in eqs.iter().enumerate() {
        for (z, p) in v.iter() {
            for (e, c) in p.terms() {
                out.insert((i, z, e), c.clone());
            }
        }
    }
    out
}

const MAX_UNKNOWNS: usize = 3000;

/// Solve for the columns in `ys` from the commutation relations and
/// `D² = 1`. Returns the filled columns on success.
fn solve_stratum(
    ops: &HatOperators,
    bar: &[Option<ModuleVector>],
    ys: &[usize],
) -> Result<Vec<ModuleVector>, String> {
    let n = ops.size();
    let mut unknowns: Vec<(usize, usize, i64)> = vec![];
    for &y in ys {
        for z in 0..n {
            let d = ops.lengths[y] as i64 - ops.lengths[z] as i64;
            if d > 0 {
                unknowns.extend((-d..=d).map(|e| (y, z, e)));
            }
        }
    }
    if unknowns.len() > MAX_UNKNOWNS {
        return Err(format!(
            "{} unknowns is beyond the solver limit",
            unknowns.len()
        ));
    }
    let build = |vals: &[BigInt]| -> Vec<Option<ModuleVector>> {
        let mut b = bar.to_vec();
        for &y in ys {
            b[y] = Some(ModuleVector::basis(y));
        }
        for ((y, z, e), c) in unknowns.iter().zip(vals) {
            if !c.is_zero() {
                b[*y]
                    .as_mut()
                    .unwrap()
                    .add_term(*z, &LaurentPoly::monomial(c.clone(), *e));
            }
        }
        b
    };
    let equations = |b: &[Option<ModuleVector>]| -> Vec<ModuleVector> {
        let mut eqs = vec![];
        for k in 0..ops.columns.len() {
            for x in 0..n {
                let involved =
                    ys.contains(&x) || ops.columns[k][x].iter().any(|(w, _)| ys.contains(w));
                if involved {
                    if let Some(e) = commutator(ops, b, k, x) {
                        eqs.push(e);
                    }
                }
            }
        }
        for &y in ys {
            if let Some(e) = square_defect(b, y) {
                eqs.push(e);
            }
        }
        eqs
    };
    let zero = vec![BigInt::zero(); unknowns.len()];
    let base = flatten(&equations(&build(&zero)));
    let mut cols: Vec<BTreeMap<(usize, usize, i64), BigInt>> = vec![];
    for j in 0..unknowns.len() {
        let mut v = zero.clone();
        v[j] = BigInt::from(1);
        let mut c = flatten(&equations(&build(&v)));
        for (key, b0) in &base {
            let e = c.entry(*key).or_default();
            *e -= b0;
        }
        c.retain(|_, x| !x.is_zero());
        cols.push(c);
    }
    // rows of [A | -b] mod p
    let mut keys: Vec<(usize, usize, i64)> = base.keys().copied().collect();
    for c in &cols {
        keys.extend(c.keys().copied());
    }
    keys.sort();
    keys.dedup();
    let nu = unknowns.len();
    let mut pivots: Vec<(usize, Vec<u64>)> = vec![];
    for key in &keys {
        let mut row: Vec<u64> = cols
            .iter()
            .map(|c| c.get(key).map(reduce).unwrap_or(0))
            .collect();
        row.push(reduce(&-base.get(key).cloned().unwrap_or_default()));
        for (pc, prow) in &pivots {
            let f = row[*pc];
            if f != 0 {
                for (r, p) in row.iter_mut().zip(prow) {
                    *r = (*r + PRIME - mulmod(f, *p)) % PRIME;
                }
            }
        }
        let Some(pc) = (0..nu).find(|&i| row[i] != 0) else {
            if row[nu] != 0 {
                return Err("the relations are inconsistent".into());
            }
            continue;
        };
        let inv = powmod(row[pc], PRIME - 2);
        for r in row.iter_mut() {
            *r = mulmod(*r, inv);
        }
        for (_, prow) in pivots.iter_mut() {
            let f = prow[pc];
            if f != 0 {
                for (r, p) in prow.iter_mut().zip(&row) {
                    *r = (*r + PRIME - mulmod(f, *p)) % PRIME;
                }
            }
        }
        pivots.push((pc, row));
    }
    if pivots.len() < nu {
        return Err(format!(
            "the relations leave {} of {nu} unknowns free",
            nu - pivots.len()
        ));
    }
    let mut vals = zero;
    for (pc, row) in &pivots {
        vals[*pc] = lift(row[nu]);
    }
    let b = build(&vals);
    if equations(&b).iter().any(|e| !e.is_zero()) {
        return Err("the modular solution does not lift".into());
    }
    Ok(ys.iter().map(|&y| b[y].clone().unwrap()).collect())
}

/// Build `D` column by column, then the canonical basis.
pub fn bar_oracle(ops: &HatOperators) -> OracleTable {
    let n = ops.size();
    let mut notes = vec![];
    let mut bar: Vec<Option<ModuleVector>> = vec![None; n];
    let mut by_len: Vec<usize> = (0..n).collect();
    by_len.sort_by_key(|&y| (ops.lengths[y], y));
    let mut i = 0;
    while i < n {
        let len = ops.lengths[by_len[i]];
        let stratum: Vec<usize> = by_len[i..]
            .iter()
            .copied()
            .take_while(|&y| ops.lengths[y] == len)
            .collect();
        i += stratum.len();
        let mut open: Vec<usize> = vec![];
        for &y in &stratum {
            if len == ops.lengths[by_len[0]] {
                bar[y] = Some(ModuleVector::basis(y));
            } else {
                open.push(y);
            }
        }
        loop {
            let before = open.len();
            open.retain(|&y| match column_by_division(ops, &bar, y) {
                Some(c) => {
                    bar[y] = Some(c);
                    false
                }
                None => true,
            });
            if open.is_empty() || open.len() == before {
                break;
            }
        }
        if !open.is_empty() {
            match solve_stratum(ops, &bar, &open) {
                Ok(cols) => {
                    for (y, c) in open.iter().zip(cols) {
                        bar[*y] = Some(c);
                    }
                }
                Err(why) => notes.push(format!("columns {open:?} of D undetermined: {why}")),
            }
        }
    }
    for k in 0..ops.columns.len() {
        for x in 0..n {
            if let Some(e) = commutator(ops, &bar, k, x) {
                if !e.is_zero() {
                    notes.push(format!("D does not commute with T̂_{k} on â_{x}"));
                }
            }
        }
    }
    for y in 0..n {
        if let Some(e) = square_defect(&bar, y) {
            if !e.is_zero() {
                notes.push(format!("D² ≠ 1 on â_{y}"));
            }
        }
    }
    let canonical = (0..n)
        .map(|y| canonical_column(ops, &bar, y, &mut notes))
        .collect();
    OracleTable {
        bar,
        canonical,
        notes,
    }
}

fn canonical_column(
    ops: &HatOperators,
    bar: &[Option<ModuleVector>],
    y: usize,
    notes: &mut Vec<String>,
) -> Option<ModuleVector> {
    let n = ops.size();
    let mut rows: Vec<usize> = (0..n)
        .filter(|&z| ops.lengths[z] < ops.lengths[y])
        .collect();
    rows.sort_by_key(|&z| (std::cmp::Reverse(ops.lengths[z]), z));
    let mut col = ModuleVector::basis(y);
    for z in rows {
        // P(z,y) - bar P(z,y) = Σ_{w ≠ z} R(z,w) bar P(w,y)
        let mut rhs = LaurentPoly::zero();
        for (w, p) in col.iter() {
            let r = bar[w].as_ref()?.get(z);
            rhs += &(&r * &p.bar());
        }
        let (plus, minus) = rhs.split_plus_minus();
        if plus != -minus.bar() {
            notes.push(format!("no self-dual solution for P({z},{y}): {rhs}"));
            return None;
        }
        col.add_term(z, &minus);
    }
    let dual = {
        let mut acc = ModuleVector::zero();
        for (w, p) in col.iter() {
            acc.add_scaled(bar[w].as_ref()?, &p.bar());
        }
        acc
    };
    if dual != col {
        notes.push(format!("column {y} is not self-dual"));
        return None;
    }
    Some(col)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub gamma: usize,
    pub delta: usize,
    pub engine: String,
    pub oracle: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub compared: usize,
    /// Entries known to one side only.
    pub skipped: usize,
    pub mismatches: Vec<Mismatch>,
    pub notes: Vec<String>,
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        self.mismatches.is_empty() && self.notes.is_empty()
    }
}

pub fn compare(table: &PolyTable, oracle: &OracleTable) -> Comparison {
    let mut c = Comparison {
        notes: oracle.notes.clone(),
        ..Default::default()
    };
    let n = table.size();
    for d in 0..n {
        for g in 0..n {
            match (table.get(g, d), oracle.get(g, d)) {
                (Some(a), Some(b)) => {
                    c.compared += 1;
                    if *a != b {
                        c.mismatches.push(Mismatch {
                            gamma: g,
                            delta: d,
                            engine: a.to_string(),
                            oracle: b.to_string(),
                        });
                    }
                }
                _ => c.skipped += 1,
            }
        }
    }
    c
}

/// Run the oracle on the block's own action and compare.
pub fn check_block(block: &ExtBlock, table: &PolyTable) -> Comparison {
    compare(table, &bar_oracle(&HatOperators::from_block(block)))
}
