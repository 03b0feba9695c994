//! Extended blocks: parameters, lengths, per-generator type codes, cross
//! actions, Cayley links and the ordered pairs used by the `2i12`/`2r21`
//! cases.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The 30 ways a generator `κ` can sit relative to a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TypeCode {
    T1Cp,
    T1Cm,
    T1i1,
    T1i2f,
    T1i2s,
    T1ic,
    T1r1f,
    T1r1s,
    T1r2,
    T1rn,
    T2Cp,
    T2Cm,
    T2Ci,
    T2Cr,
    T2i11,
    T2i12,
    T2i22,
    T2r22,
    T2r21,
    T2r11,
    T2rn,
    T2ic,
    T3Cp,
    T3Cm,
    T3Ci,
    T3Cr,
    T3i,
    T3r,
    T3rn,
    T3ic,
}

use TypeCode::*;

impl TypeCode {
    pub const ALL: [TypeCode; 30] = [
        T1Cp, T1Cm, T1i1, T1i2f, T1i2s, T1ic, T1r1f, T1r1s, T1r2, T1rn, T2Cp, T2Cm, T2Ci, T2Cr,
        T2i11, T2i12, T2i22, T2r22, T2r21, T2r11, T2rn, T2ic, T3Cp, T3Cm, T3Ci, T3Cr, T3i, T3r,
        T3rn, T3ic,
    ];

    pub fn code(self) -> &'static str {
        match self {
            T1Cp => "1C+",
            T1Cm => "1C-",
            T1i1 => "1i1",
            T1i2f => "1i2f",
            T1i2s => "1i2s",
            T1ic => "1ic",
            T1r1f => "1r1f",
            T1r1s => "1r1s",
            T1r2 => "1r2",
            T1rn => "1rn",
            T2Cp => "2C+",
            T2Cm => "2C-",
            T2Ci => "2Ci",
            T2Cr => "2Cr",
            T2i11 => "2i11",
            T2i12 => "2i12",
            T2i22 => "2i22",
            T2r22 => "2r22",
            T2r21 => "2r21",
            T2r11 => "2r11",
            T2rn => "2rn",
            T2ic => "2ic",
            T3Cp => "3C+",
            T3Cm => "3C-",
            T3Ci => "3Ci",
            T3Cr => "3Cr",
            T3i => "3i",
            T3r => "3r",
            T3rn => "3rn",
            T3ic => "3ic",
        }
    }

    /// Length of the generator, read off the leading digit.
    pub fn kappa_length(self) -> u32 {
        match self.code().as_bytes()[0] {
            b'1' => 1,
            b'2' => 2,
            _ => 3,
        }
    }

    pub fn is_descent(self) -> bool {
        matches!(
            self,
            T1Cm | T1ic
                | T1r1f
                | T1r1s
                | T1r2
                | T2Cm
                | T2Cr
                | T2r22
                | T2r21
                | T2r11
                | T2ic
                | T3Cm
                | T3Cr
                | T3r
                | T3ic
        )
    }

    pub fn is_ascent(self) -> bool {
        !self.is_descent()
    }

    /// How many Cayley transforms the type has (0, 1 or 2).
    pub fn cayley_count(self) -> usize {
        match self {
            T1i1 | T1r2 | T2Ci | T2Cr | T2i11 | T2r22 | T3Ci | T3Cr | T3i | T3r => 1,
            T1i2f | T1r1f | T2i12 | T2r21 | T2i22 | T2r11 => 2,
            _ => 0,
        }
    }

    /// Whether the cross action of `w_κ` moves the parameter.
    pub fn cross_moves(self) -> bool {
        matches!(
            self,
            T1Cp | T1Cm | T2Cp | T2Cm | T3Cp | T3Cm | T1i1 | T2i11 | T1r2 | T2r22
        )
    }

    /// Change of length under the cross action.
    pub fn cross_length_change(self) -> i64 {
        let k = self.kappa_length() as i64;
        match self {
            T1Cp | T2Cp | T3Cp => k,
            T1Cm | T2Cm | T3Cm => -k,
            _ => 0,
        }
    }

    /// Type of the cross image.
    pub fn cross_partner_type(self) -> TypeCode {
        match self {
            T1Cp => T1Cm,
            T1Cm => T1Cp,
            T2Cp => T2Cm,
            T2Cm => T2Cp,
            T3Cp => T3Cm,
            T3Cm => T3Cp,
            t => t,
        }
    }

    /// Type found at the other end of a Cayley link.
    pub fn cayley_partner_type(self) -> Option<TypeCode> {
        Some(match self {
            T1i1 => T1r1f,
            T1r1f => T1i1,
            T1i2f => T1r2,
            T1r2 => T1i2f,
            T2Ci => T2Cr,
            T2Cr => T2Ci,
            T2i11 => T2r11,
            T2r11 => T2i11,
            T2i12 => T2r21,
            T2r21 => T2i12,
            T2i22 => T2r22,
            T2r22 => T2i22,
            T3Ci => T3Cr,
            T3Cr => T3Ci,
            T3i => T3r,
            T3r => T3i,
            _ => return None,
        })
    }

    /// 1 for the six types whose Cayley transform changes length by
    /// `ℓ(κ) - 1`, otherwise 0.
    pub fn defect(self) -> u32 {
        matches!(self, T2Ci | T3Ci | T3i | T2Cr | T3Cr | T3r) as u32
    }

    /// `+1`, `0` or `-1` for descents; `None` for ascents.
    pub fn zeta(self) -> Option<i32> {
        if !self.is_descent() {
            return None;
        }
        Some(match self {
            T1ic | T2ic | T3ic | T1r1s => 1,
            T1Cm | T2Cm | T3Cm => 0,
            _ => -1,
        })
    }

    /// Ascent types that have no κ-arrow coming into them.
    pub fn is_arrowless_ascent(self) -> bool {
        matches!(self, T1i2s | T1rn | T2rn | T3rn)
    }

    pub fn needs_pair_slot(self) -> bool {
        matches!(self, T2i12 | T2r21)
    }
}

impl fmt::Display for TypeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown type code {0:?}")]
pub struct UnknownTypeCode(pub String);

impl FromStr for TypeCode {
    type Err = UnknownTypeCode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TypeCode::ALL
            .iter()
            .copied()
            .find(|t| t.code() == s)
            .ok_or_else(|| UnknownTypeCode(s.to_string()))
    }
}

impl TryFrom<String> for TypeCode {
    type Error = UnknownTypeCode;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TypeCode> for String {
    fn from(t: TypeCode) -> String {
        t.code().to_string()
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawKappa {
    pub id: usize,
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawKappaData {
    #[serde(rename = "type")]
    pub type_code: String,
    pub cross: usize,
    #[serde(default)]
    pub cayley: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_slot: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParameter {
    pub id: usize,
    pub length: u32,
    pub kappa_data: Vec<RawKappaData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderedPair {
    pub kappa: usize,
    pub source_pair: [usize; 2],
    pub target_pair: [usize; 2],
}

/// The block file exactly as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBlock {
    pub name: String,
    pub kappas: Vec<RawKappa>,
    pub folded_coxeter: Vec<Vec<u32>>,
    pub parameters: Vec<RawParameter>,
    #[serde(default)]
    pub ordered_pairs: Vec<OrderedPair>,
}

// ---------------------------------------------------------------------------
// Validated model

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KappaDescriptor {
    pub type_code: TypeCode,
    pub cross: usize,
    pub cayley: Vec<usize>,
    pub pair_slot: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtBlock {
    name: String,
    kappa_lengths: Vec<u32>,
    coxeter: Vec<Vec<u32>>,
    lengths: Vec<u32>,
    data: Vec<Vec<KappaDescriptor>>,
    ordered_pairs: Vec<OrderedPair>,
    warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{}", location(.parameter, .kappa), .message)]
pub struct ValidationError {
    pub parameter: Option<usize>,
    pub kappa: Option<usize>,
    pub message: String,
}

fn location(p: &Option<usize>, k: &Option<usize>) -> String {
    match (p, k) {
        (Some(p), Some(k)) => format!("parameter {p}, kappa {k}: "),
        (Some(p), None) => format!("parameter {p}: "),
        (None, Some(k)) => format!("kappa {k}: "),
        (None, None) => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed block file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid block: {0}")]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("kappa {kappa} is not a descent for parameter {gamma}")]
    NotDescent { gamma: usize, kappa: usize },
    #[error("no kappa-arrow between parameters {gamma} and {lambda} through kappa {kappa}")]
    NotAdjacent {
        gamma: usize,
        lambda: usize,
        kappa: usize,
    },
}

fn verr(p: Option<usize>, k: Option<usize>, msg: impl Into<String>) -> ValidationError {
    ValidationError {
        parameter: p,
        kappa: k,
        message: msg.into(),
    }
}

impl ExtBlock {
    pub fn from_json_str(s: &str) -> Result<Self, LoadError> {
        let raw: RawBlock = serde_json::from_str(s)?;
        Ok(validate(raw)?)
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_raw(&self) -> RawBlock {
        RawBlock {
            name: self.name.clone(),
            kappas: self
                .kappa_lengths
                .iter()
                .enumerate()
                .map(|(id, &length)| RawKappa { id, length })
                .collect(),
            folded_coxeter: self.coxeter.clone(),
            parameters: (0..self.size())
                .map(|g| RawParameter {
                    id: g,
                    length: self.lengths[g],
                    kappa_data: self.data[g]
                        .iter()
                        .map(|d| RawKappaData {
                            type_code: d.type_code.code().to_string(),
                            cross: d.cross,
                            cayley: d.cayley.clone(),
                            pair_slot: d.pair_slot,
                        })
                        .collect(),
                })
                .collect(),
            ordered_pairs: self.ordered_pairs.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("block serialises")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of parameters.
    pub fn size(&self) -> usize {
        self.lengths.len()
    }

    pub fn kappa_count(&self) -> usize {
        self.kappa_lengths.len()
    }

    pub fn kappa_length(&self, kappa: usize) -> u32 {
        self.kappa_lengths[kappa]
    }

    pub fn length(&self, gamma: usize) -> u32 {
        self.lengths[gamma]
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn coxeter_order(&self, k1: usize, k2: usize) -> u32 {
        self.coxeter[k1][k2]
    }

    pub fn folded_coxeter(&self) -> &[Vec<u32>] {
        &self.coxeter
    }

    pub fn ordered_pairs(&self) -> &[OrderedPair] {
        &self.ordered_pairs
    }

    /// Non-fatal findings from validation.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn descriptor(&self, gamma: usize, kappa: usize) -> &KappaDescriptor {
        &self.data[gamma][kappa]
    }

    pub fn type_of(&self, gamma: usize, kappa: usize) -> TypeCode {
        self.data[gamma][kappa].type_code
    }

    pub fn cross(&self, gamma: usize, kappa: usize) -> usize {
        self.data[gamma][kappa].cross
    }

    /// Cayley transforms: upward for ascents, downward for descents.
    pub fn cayley(&self, gamma: usize, kappa: usize) -> &[usize] {
        &self.data[gamma][kappa].cayley
    }

    pub fn pair_slot(&self, gamma: usize, kappa: usize) -> Option<u8> {
        self.data[gamma][kappa].pair_slot
    }

    pub fn is_descent(&self, gamma: usize, kappa: usize) -> bool {
        self.type_of(gamma, kappa).is_descent()
    }

    /// The generators that are descents for `gamma`, in increasing order.
    pub fn tau(&self, gamma: usize) -> BTreeSet<usize> {
        (0..self.kappa_count())
            .filter(|&k| self.is_descent(gamma, k))
            .collect()
    }

    pub fn defect(&self, gamma: usize, kappa: usize) -> u32 {
        self.type_of(gamma, kappa).defect()
    }

    pub fn zeta(&self, gamma: usize, kappa: usize) -> Result<i32, BlockError> {
        self.type_of(gamma, kappa)
            .zeta()
            .ok_or(BlockError::NotDescent { gamma, kappa })
    }

    /// Ascent-side parameters reached by κ-arrows out of the descent `gamma`.
    pub fn kappa_arrow_targets(
        &self,
        gamma: usize,
        kappa: usize,
    ) -> Result<Vec<usize>, BlockError> {
        let t = self.type_of(gamma, kappa);
        if !t.is_descent() {
            return Err(BlockError::NotDescent { gamma, kappa });
        }
        Ok(match t {
            T1Cm | T2Cm | T3Cm => vec![self.cross(gamma, kappa)],
            T1ic | T2ic | T3ic | T1r1s => vec![],
            _ => self.cayley(gamma, kappa).to_vec(),
        })
    }

    /// Descents `γ'` with a κ-arrow `γ' -> lambda`; empty when `lambda` is a
    /// descent.
    pub fn kappa_arrow_sources(&self, lambda: usize, kappa: usize) -> Vec<usize> {
        let t = self.type_of(lambda, kappa);
        match t {
            T1Cp | T2Cp | T3Cp => vec![self.cross(lambda, kappa)],
            _ if t.is_descent() || t.is_arrowless_ascent() => vec![],
            _ => self.cayley(lambda, kappa).to_vec(),
        }
    }

    /// Whether there is a κ-arrow `gamma -> lambda`.
    pub fn has_arrow(&self, gamma: usize, lambda: usize, kappa: usize) -> bool {
        self.is_descent(gamma, kappa)
            && !self.is_descent(lambda, kappa)
            && self.kappa_arrow_sources(lambda, kappa).contains(&gamma)
    }

    /// The sign attached to a κ-arrow between `gamma` and `lambda` (either
    /// direction): `-1` exactly when one end is `2r21`, the other `2i12`, and
    /// both sit in slot 2 of their ordered pairs.
    pub fn epsilon(&self, gamma: usize, lambda: usize, kappa: usize) -> Result<i32, BlockError> {
        if !self.has_arrow(gamma, lambda, kappa) && !self.has_arrow(lambda, gamma, kappa) {
            return Err(BlockError::NotAdjacent {
                gamma,
                lambda,
                kappa,
            });
        }
        let types = [self.type_of(gamma, kappa), self.type_of(lambda, kappa)];
        let paired = types.contains(&T2r21) && types.contains(&T2i12);
        let slot2 =
            self.pair_slot(gamma, kappa) == Some(2) && self.pair_slot(lambda, kappa) == Some(2);
        Ok(if paired && slot2 { -1 } else { 1 })
    }

    /// Parameters linked to `gamma` through κ by the cross action or a
    /// Cayley transform.
    pub fn neighbours(&self, gamma: usize, kappa: usize) -> Vec<usize> {
        let mut out = vec![];
        let c = self.cross(gamma, kappa);
        if c != gamma {
            out.push(c);
        }
        out.extend_from_slice(self.cayley(gamma, kappa));
        out
    }

    /// Whether every generator has length 1 and no `1i2s`/`1r1s` type occurs.
    pub fn is_trivially_twisted(&self) -> bool {
        self.kappa_lengths.iter().all(|&k| k == 1)
            && self
                .data
                .iter()
                .flatten()
                .all(|d| !matches!(d.type_code, T1i2s | T1r1s))
    }

    /// Parameter ids sorted by (length, id).
    pub fn by_length(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.size()).collect();
        ids.sort_by_key(|&g| (self.lengths[g], g));
        ids
    }
}

/// Check every structural invariant and build the block.
pub fn validate(raw: RawBlock) -> Result<ExtBlock, ValidationError> {
    let nk = raw.kappas.len();
    let n = raw.parameters.len();
    for (i, k) in raw.kappas.iter().enumerate() {
        if k.id != i {
            return Err(verr(
                None,
                Some(i),
                format!("kappa ids must be 0..{nk} in order, found {}", k.id),
            ));
        }
        if !(1..=3).contains(&k.length) {
            return Err(verr(
                None,
                Some(i),
                format!("kappa length must be 1, 2 or 3, found {}", k.length),
            ));
        }
    }
    if raw.folded_coxeter.len() != nk || raw.folded_coxeter.iter().any(|r| r.len() != nk) {
        return Err(verr(
            None,
            None,
            format!("folded_coxeter must be a {nk}x{nk} matrix"),
        ));
    }
    for i in 0..nk {
        for j in 0..nk {
            let m = raw.folded_coxeter[i][j];
            if m != raw.folded_coxeter[j][i] {
                return Err(verr(
                    None,
                    Some(i),
                    format!("folded_coxeter is not symmetric at ({i},{j})"),
                ));
            }
            if i == j && m != 1 {
                return Err(verr(None, Some(i), "folded_coxeter diagonal must be 1"));
            }
            if i != j && m == 1 {
                return Err(verr(
                    None,
                    Some(i),
                    format!("folded_coxeter order at ({i},{j}) must be >= 2 or 0 for infinity"),
                ));
            }
        }
    }

    let mut lengths = Vec::with_capacity(n);
    let mut data: Vec<Vec<KappaDescriptor>> = Vec::with_capacity(n);
    for (g, p) in raw.parameters.iter().enumerate() {
        if p.id != g {
            return Err(verr(
                Some(g),
                None,
                format!("parameter ids must be 0..{n} in order, found {}", p.id),
            ));
        }
        if p.kappa_data.len() != nk {
            return Err(verr(
                Some(g),
                None,
                format!(
                    "kappa_data has {} entries, expected {nk}",
                    p.kappa_data.len()
                ),
            ));
        }
        lengths.push(p.length);
        let mut row = Vec::with_capacity(nk);
        for (k, d) in p.kappa_data.iter().enumerate() {
            let t: TypeCode = d
                .type_code
                .parse()
                .map_err(|e: UnknownTypeCode| verr(Some(g), Some(k), e.to_string()))?;
            if t.kappa_length() != raw.kappas[k].length {
                return Err(verr(
                    Some(g),
                    Some(k),
                    format!(
                        "type {t} needs a kappa of length {}, kappa has length {}",
                        t.kappa_length(),
                        raw.kappas[k].length
                    ),
                ));
            }
            if d.cross >= n {
                return Err(verr(
                    Some(g),
                    Some(k),
                    format!("cross image {} out of range", d.cross),
                ));
            }
            if let Some(&bad) = d.cayley.iter().find(|&&c| c >= n) {
                return Err(verr(
                    Some(g),
                    Some(k),
                    format!("Cayley target {bad} out of range"),
                ));
            }
            if d.cayley.len() != t.cayley_count() {
                return Err(verr(
                    Some(g),
                    Some(k),
                    format!(
                        "type {t} has {} Cayley targets, found {}",
                        t.cayley_count(),
                        d.cayley.len()
                    ),
                ));
            }
            if d.cayley.len() == 2 && d.cayley[0] == d.cayley[1] {
                return Err(verr(
                    Some(g),
                    Some(k),
                    "the two Cayley targets must be distinct",
                ));
            }
            match (t.needs_pair_slot(), d.pair_slot) {
                (true, Some(1 | 2)) | (false, None) => {}
                (true, Some(s)) => {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        format!("pair_slot must be 1 or 2, found {s}"),
                    ))
                }
                (true, None) => {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        format!("type {t} requires a pair_slot"),
                    ))
                }
                (false, Some(_)) => {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        format!("type {t} must not carry a pair_slot"),
                    ))
                }
            }
            row.push(KappaDescriptor {
                type_code: t,
                cross: d.cross,
                cayley: d.cayley.clone(),
                pair_slot: d.pair_slot,
            });
        }
        data.push(row);
    }

    for g in 0..n {
        for k in 0..nk {
            let d = &data[g][k];
            let t = d.type_code;
            let c = d.cross;
            // cross action
            if data[c][k].cross != g {
                return Err(verr(
                    Some(g),
                    Some(k),
                    format!(
                        "cross action is not an involution: {g} -> {c} -> {}",
                        data[c][k].cross
                    ),
                ));
            }
            if t.cross_moves() != (c != g) {
                return Err(verr(
                    Some(g),
                    Some(k),
                    if t.cross_moves() {
                        format!("type {t} requires the cross action to move the parameter")
                    } else {
                        format!("type {t} requires the parameter to be its own cross image")
                    },
                ));
            }
            if c != g {
                let want = t.cross_partner_type();
                if data[c][k].type_code != want {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        format!(
                            "cross image {c} has type {}, expected {want}",
                            data[c][k].type_code
                        ),
                    ));
                }
                let dl = lengths[c] as i64 - lengths[g] as i64;
                if dl != t.cross_length_change() {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        format!(
                            "cross image {c} changes length by {dl}, expected {}",
                            t.cross_length_change()
                        ),
                    ));
                }
            }
            // Cayley links
            for &l in &d.cayley {
                let want = t
                    .cayley_partner_type()
                    .expect("types with Cayley targets have partners");
                let lt = data[l][k].type_code;
                if lt != want {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        format!("Cayley target {l} has type {lt}, expected {want}"),
                    ));
                }
                if !data[l][k].cayley.contains(&g) {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        format!("Cayley link to {l} is not symmetric"),
                    ));
                }
                let (hi, lo) = if t.is_descent() { (g, l) } else { (l, g) };
                let drop = lengths[hi] as i64 - lengths[lo] as i64;
                let expected = (t.kappa_length() - t.defect()) as i64;
                if drop != expected {
                    return Err(verr(Some(g), Some(k), format!("length drop across the Cayley link {hi} -> {lo} is {drop}, expected {expected}")));
                }
            }
            // shape of the local configuration
            match t {
                T1r1f | T2r11 | T1i2f | T2i22 => {
                    let (a, b) = (d.cayley[0], d.cayley[1]);
                    if data[a][k].cross != b {
                        return Err(verr(
                            Some(g),
                            Some(k),
                            format!(
                                "Cayley targets {a} and {b} must be exchanged by the cross action"
                            ),
                        ));
                    }
                }
                T1r2 | T2r22 | T1i1 | T2i11 => {
                    let partner = d.cross;
                    if data[partner][k].cayley != d.cayley {
                        return Err(verr(
                            Some(g),
                            Some(k),
                            format!("cross partner {partner} must share the Cayley target"),
                        ));
                    }
                }
                T2i12 | T2r21 => {
                    let (a, b) = (d.cayley[0], d.cayley[1]);
                    let mut mine: Vec<usize> = data[a][k].cayley.clone();
                    let mut theirs: Vec<usize> = data[b][k].cayley.clone();
                    mine.sort();
                    theirs.sort();
                    if mine != theirs {
                        return Err(verr(
                            Some(g),
                            Some(k),
                            format!("Cayley targets {a} and {b} must have the same Cayley pair"),
                        ));
                    }
                }
                _ => {}
            }
        }
    }

    // ordered pairs
    let mut source_seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut target_seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, op) in raw.ordered_pairs.iter().enumerate() {
        let k = op.kappa;
        if k >= nk {
            return Err(verr(
                None,
                None,
                format!("ordered pair {i} refers to kappa {k}, out of range"),
            ));
        }
        let [a, b] = op.source_pair;
        let [c, e] = op.target_pair;
        if [a, b, c, e].iter().any(|&x| x >= n) {
            return Err(verr(
                None,
                Some(k),
                format!("ordered pair {i} refers to a parameter out of range"),
            ));
        }
        if a == b || c == e {
            return Err(verr(
                None,
                Some(k),
                format!("ordered pair {i} repeats a parameter"),
            ));
        }
        for (slot, &p) in [a, b].iter().enumerate() {
            if data[p][k].type_code != T2i12 {
                return Err(verr(
                    Some(p),
                    Some(k),
                    format!("ordered pair {i}: source parameter must have type 2i12"),
                ));
            }
            if data[p][k].pair_slot != Some(slot as u8 + 1) {
                return Err(verr(
                    Some(p),
                    Some(k),
                    format!(
                        "ordered pair {i}: pair_slot disagrees with position {}",
                        slot + 1
                    ),
                ));
            }
            let mut cay = data[p][k].cayley.clone();
            cay.sort();
            let mut want = vec![c, e];
            want.sort();
            if cay != want {
                return Err(verr(
                    Some(p),
                    Some(k),
                    format!("ordered pair {i}: Cayley targets are not the target pair"),
                ));
            }
            if source_seen.insert((p, k), i).is_some() {
                return Err(verr(
                    Some(p),
                    Some(k),
                    "2i12 parameter appears in more than one ordered pair",
                ));
            }
        }
        for (slot, &p) in [c, e].iter().enumerate() {
            if data[p][k].type_code != T2r21 {
                return Err(verr(
                    Some(p),
                    Some(k),
                    format!("ordered pair {i}: target parameter must have type 2r21"),
                ));
            }
            if data[p][k].pair_slot != Some(slot as u8 + 1) {
                return Err(verr(
                    Some(p),
                    Some(k),
                    format!(
                        "ordered pair {i}: pair_slot disagrees with position {}",
                        slot + 1
                    ),
                ));
            }
            if target_seen.insert((p, k), i).is_some() {
                return Err(verr(
                    Some(p),
                    Some(k),
                    "2r21 parameter appears in more than one ordered pair",
                ));
            }
        }
    }
    for g in 0..n {
        for k in 0..nk {
            match data[g][k].type_code {
                T2i12 if !source_seen.contains_key(&(g, k)) => {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        "2i12 parameter has no ordered_pairs entry",
                    ));
                }
                T2r21 if !target_seen.contains_key(&(g, k)) => {
                    return Err(verr(
                        Some(g),
                        Some(k),
                        "2r21 parameter has no ordered_pairs entry",
                    ));
                }
                _ => {}
            }
        }
    }

    let warnings = pair_order_warnings(&raw.ordered_pairs);
    Ok(ExtBlock {
        name: raw.name,
        kappa_lengths: raw.kappas.iter().map(|k| k.length).collect(),
        coxeter: raw.folded_coxeter,
        lengths,
        data,
        ordered_pairs: raw.ordered_pairs,
        warnings,
    })
}

/// The same two parameters ordered one way for one generator and the other
/// way for another generator is allowed, but usually a labelling slip.
fn pair_order_warnings(pairs: &[OrderedPair]) -> Vec<String> {
    let mut seen: BTreeMap<(usize, usize), ([usize; 2], usize)> = BTreeMap::new();
    let mut out = vec![];
    for op in pairs {
        for pair in [op.source_pair, op.target_pair] {
            let key = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            match seen.get(&key) {
                Some((prev, k)) if *prev != pair => out.push(format!(
                    "parameters {} and {} are ordered ({},{}) for kappa {} but ({},{}) for kappa {}",
                    key.0, key.1, prev[0], prev[1], k, pair[0], pair[1], op.kappa
                )),
                Some(_) => {}
                None => {
                    seen.insert(key, (pair, op.kappa));
                }
            }
        }
    }
    out
}

/// Partial order used for support checks: `γ <= δ` when `γ` can be reached
/// from `δ` by going down a κ-arrow and then moving along κ-neighbours,
/// repeatedly, without reaching length `ℓ(δ)`.
#[derive(Debug, Clone)]
pub struct BlockOrder {
    below: Vec<BTreeSet<usize>>,
}

impl BlockOrder {
    pub fn new(block: &ExtBlock) -> Self {
        let n = block.size();
        let mut below: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for d in block.by_length() {
            let ld = block.length(d);
            let mut set = BTreeSet::from([d]);
            for k in block.tau(d) {
                for l in block.kappa_arrow_targets(d, k).expect("descent") {
                    for &g in &below[l] {
                        set.insert(g);
                        for x in block.neighbours(g, k) {
                            if block.length(x) < ld {
                                set.insert(x);
                            }
                        }
                    }
                }
            }
            // close under the down-sets of everything collected
            let extra: Vec<usize> = set.iter().copied().filter(|&g| g != d).collect();
            for g in extra {
                set.extend(below[g].iter().copied());
            }
            below[d] = set;
        }
        Self { below }
    }

    pub fn leq(&self, gamma: usize, delta: usize) -> bool {
        self.below[delta].contains(&gamma)
    }

    pub fn lt(&self, gamma: usize, delta: usize) -> bool {
        gamma != delta && self.leq(gamma, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn b1_json() -> &'static str {
        r#"{
          "name": "B1",
          "kappas": [{"id": 0, "length": 1}],
          "folded_coxeter": [[1]],
          "parameters": [
            {"id": 0, "length": 0, "kappa_data": [{"type": "1i1", "cross": 1, "cayley": [2]}]},
            {"id": 1, "length": 0, "kappa_data": [{"type": "1i1", "cross": 0, "cayley": [2]}]},
            {"id": 2, "length": 1, "kappa_data": [{"type": "1r1f", "cross": 2, "cayley": [0, 1]}]}
          ]
        }"#
    }

    fn quartet_json(order_src: [usize; 2], order_tgt: [usize; 2]) -> String {
        let slot = |p: usize, pair: [usize; 2]| if pair[0] == p { 1 } else { 2 };
        format!(
            r#"{{
          "name": "quartet",
          "kappas": [{{"id": 0, "length": 2}}],
          "folded_coxeter": [[1]],
          "parameters": [
            {{"id": 0, "length": 0, "kappa_data": [{{"type": "2i12", "cross": 0, "cayley": [2, 3], "pair_slot": {}}}]}},
            {{"id": 1, "length": 0, "kappa_data": [{{"type": "2i12", "cross": 1, "cayley": [2, 3], "pair_slot": {}}}]}},
            {{"id": 2, "length": 2, "kappa_data": [{{"type": "2r21", "cross": 2, "cayley": [0, 1], "pair_slot": {}}}]}},
            {{"id": 3, "length": 2, "kappa_data": [{{"type": "2r21", "cross": 3, "cayley": [0, 1], "pair_slot": {}}}]}}
          ],
          "ordered_pairs": [{{"kappa": 0, "source_pair": [{}, {}], "target_pair": [{}, {}]}}]
        }}"#,
            slot(0, order_src),
            slot(1, order_src),
            slot(2, order_tgt),
            slot(3, order_tgt),
            order_src[0],
            order_src[1],
            order_tgt[0],
            order_tgt[1]
        )
    }

    fn b1() -> ExtBlock {
        ExtBlock::from_json_str(b1_json()).unwrap()
    }

    #[test]
    fn type_table_shape() {
        assert_eq!(TypeCode::ALL.len(), 30);
        let descents = TypeCode::ALL.iter().filter(|t| t.is_descent()).count();
        assert_eq!(descents, 15);
        assert!(T1i2s.is_ascent());
        assert!(T1r1s.is_descent());
        for t in TypeCode::ALL {
            assert_eq!(t.code().parse::<TypeCode>().unwrap(), t);
            if let Some(p) = t.cayley_partner_type() {
                assert_eq!(p.cayley_partner_type(), Some(t));
                assert_ne!(p.is_descent(), t.is_descent());
                assert_eq!(p.defect(), t.defect());
                assert!(t.cayley_count() > 0);
            } else {
                assert_eq!(t.cayley_count(), 0);
            }
            assert_eq!(t.zeta().is_some(), t.is_descent());
            assert_eq!(t.cross_partner_type().cross_partner_type(), t);
        }
        assert_eq!(TypeCode::ALL.iter().filter(|t| t.defect() == 1).count(), 6);
    }

    #[test]
    fn cayley_counts_match_table() {
        let zero = [
            "1C+", "1C-", "1rn", "1ic", "1i2s", "1r1s", "2C+", "2C-", "2rn", "2ic", "3C+", "3C-",
            "3rn", "3ic",
        ];
        let one = [
            "1i1", "1r2", "2Ci", "2Cr", "2i11", "2r22", "3Ci", "3Cr", "3i", "3r",
        ];
        let two = ["1i2f", "1r1f", "2i12", "2r21", "2i22", "2r11"];
        for (codes, n) in [(&zero[..], 0), (&one[..], 1), (&two[..], 2)] {
            for c in codes {
                assert_eq!(c.parse::<TypeCode>().unwrap().cayley_count(), n, "{c}");
            }
        }
    }

    #[test]
    fn b1_is_accepted() {
        let b = b1();
        assert_eq!(b.size(), 3);
        assert!(b.warnings().is_empty());
        assert_eq!(b.tau(2), BTreeSet::from([0]));
        assert!(b.tau(0).is_empty());
        assert_eq!(b.kappa_arrow_targets(2, 0).unwrap(), vec![0, 1]);
        assert_eq!(b.kappa_arrow_sources(0, 0), vec![2]);
        assert!(b.is_trivially_twisted());
    }

    #[test]
    fn b1_with_wrong_length_is_rejected() {
        let bad = b1_json().replace(r#""id": 2, "length": 1"#, r#""id": 2, "length": 2"#);
        let err = ExtBlock::from_json_str(&bad).unwrap_err();
        assert!(err.to_string().contains("length drop"), "{err}");
    }

    #[test]
    fn missing_ordered_pair_is_rejected() {
        let j = quartet_json([0, 1], [2, 3]);
        let mut raw: RawBlock = serde_json::from_str(&j).unwrap();
        raw.ordered_pairs.clear();
        let err = validate(raw).unwrap_err();
        assert!(err.message.contains("no ordered_pairs entry"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = b1_json().replace(r#""name": "B1","#, r#""name": "B1", "colour": 3,"#);
        assert!(matches!(
            ExtBlock::from_json_str(&bad),
            Err(LoadError::Json(_))
        ));
    }

    #[test]
    fn other_structural_errors() {
        let cases = [
            (
                b1_json().replace(
                    r#""cross": 1, "cayley": [2]"#,
                    r#""cross": 0, "cayley": [2]"#,
                ),
                "cross action",
            ),
            (
                b1_json().replace(r#""type": "1r1f""#, r#""type": "1r2""#),
                "Cayley",
            ),
            (
                b1_json().replace(r#""type": "1r1f""#, r#""type": "2r11""#),
                "length",
            ),
            (
                b1_json().replace(r#""type": "1r1f""#, r#""type": "1zz""#),
                "unknown type code",
            ),
            (
                b1_json().replace(r#""cayley": [0, 1]"#, r#""cayley": [0, 0]"#),
                "distinct",
            ),
            (
                b1_json().replace(r#""cayley": [0, 1]"#, r#""cayley": [0, 1], "pair_slot": 1"#),
                "pair_slot",
            ),
        ];
        for (json, needle) in cases {
            let err = ExtBlock::from_json_str(&json).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
    }

    #[test]
    fn epsilon_signs() {
        let b = ExtBlock::from_json_str(&quartet_json([0, 1], [2, 3])).unwrap();
        // γ in the 2r21 pair, λ in the 2i12 pair
        assert_eq!(b.epsilon(3, 1, 0).unwrap(), -1);
        assert_eq!(b.epsilon(2, 1, 0).unwrap(), 1);
        assert_eq!(b.epsilon(3, 0, 0).unwrap(), 1);
        assert_eq!(b.epsilon(2, 0, 0).unwrap(), 1);
        // symmetric in its two arguments
        assert_eq!(b.epsilon(1, 3, 0).unwrap(), -1);
        assert_eq!(
            b.epsilon(0, 1, 0),
            Err(BlockError::NotAdjacent {
                gamma: 0,
                lambda: 1,
                kappa: 0
            })
        );
        let b = b1();
        assert_eq!(b.epsilon(2, 0, 0).unwrap(), 1);
    }

    #[test]
    fn zeta_values() {
        assert_eq!(T1r1s.zeta(), Some(1));
        assert_eq!(T2Cm.zeta(), Some(0));
        assert_eq!(T2r22.zeta(), Some(-1));
        assert_eq!(T1ic.zeta(), Some(1));
        assert_eq!(T1i1.zeta(), None);
        assert_eq!(
            b1().zeta(0, 0),
            Err(BlockError::NotDescent { gamma: 0, kappa: 0 })
        );
    }

    #[test]
    fn arrow_targets_by_type() {
        let b = b1();
        assert_eq!(
            b.kappa_arrow_targets(0, 0),
            Err(BlockError::NotDescent { gamma: 0, kappa: 0 })
        );
        let q = ExtBlock::from_json_str(&quartet_json([1, 0], [3, 2])).unwrap();
        assert_eq!(q.kappa_arrow_targets(2, 0).unwrap(), vec![0, 1]);
        assert_eq!(q.pair_slot(1, 0), Some(1));
        assert_eq!(q.epsilon(2, 0, 0).unwrap(), -1);
    }

    #[test]
    fn raw_roundtrip() {
        let b = b1();
        let again = validate(b.to_raw()).unwrap();
        assert_eq!(again, b);
        let text = b.to_json_pretty();
        assert_eq!(ExtBlock::from_json_str(&text).unwrap(), b);
    }

    #[test]
    fn block_order_b1() {
        let b = b1();
        let o = BlockOrder::new(&b);
        assert!(o.lt(0, 2) && o.lt(1, 2));
        assert!(!o.leq(0, 1) && !o.leq(2, 0));
    }

    #[test]
    fn inconsistent_pair_orders_warn() {
        let pairs = [
            OrderedPair {
                kappa: 0,
                source_pair: [0, 1],
                target_pair: [2, 3],
            },
            OrderedPair {
                kappa: 1,
                source_pair: [1, 0],
                target_pair: [4, 5],
            },
        ];
        assert_eq!(pair_order_warnings(&pairs).len(), 1);
    }
}
