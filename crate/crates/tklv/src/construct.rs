//! Ready-made blocks: regular blocks of finite Weyl groups with arbitrary
//! generator lengths (which covers the quasi-split foldings), and products.

use std::collections::HashMap;

use thiserror::Error;

use crate::extblock::{
    validate, ExtBlock, OrderedPair, RawBlock, RawKappa, RawKappaData, RawParameter,
    ValidationError,
};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("unknown Cartan type {0:?}")]
    UnknownType(String),
    #[error("the group generated by this Cartan matrix has more than {0} elements")]
    TooLarge(usize),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Cartan matrix of a finite type such as `A3`, `B2`, `C3`, `D4`, `G2`.
pub fn cartan_matrix(kind: &str) -> Result<Vec<Vec<i64>>, ConstructError> {
    let bad = || ConstructError::UnknownType(kind.to_string());
    let (letter, rank) = kind.split_at(1);
    let n: usize = rank.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    let mut c = vec![vec![0i64; n]; n];
    for i in 0..n {
        c[i][i] = 2;
    }
    let chain = |c: &mut Vec<Vec<i64>>, upto: usize| {
        for i in 0..upto.saturating_sub(1) {
            c[i][i + 1] = -1;
            c[i + 1][i] = -1;
        }
    };
    match letter {
        "A" => chain(&mut c, n),
        "B" | "C" if n >= 2 => {
            chain(&mut c, n);
            let (a, b) = if letter == "B" { (-2, -1) } else { (-1, -2) };
            c[n - 2][n - 1] = a;
            c[n - 1][n - 2] = b;
        }
        "D" if n >= 4 => {
            chain(&mut c, n - 1);
            c[n - 3][n - 1] = -1;
            c[n - 1][n - 3] = -1;
        }
        "G" if n == 2 => {
            c[0][1] = -1;
            c[1][0] = -3;
        }
        _ => return Err(bad()),
    }
    Ok(c)
}

fn coxeter_from_cartan(c: &[Vec<i64>]) -> Vec<Vec<u32>> {
    let n = c.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return 1;
                    }
                    match c[i][j] * c[j][i] {
                        0 => 2,
                        1 => 3,
                        2 => 4,
                        3 => 6,
                        _ => 0,
                    }
                })
                .collect()
        })
        .collect()
}

const MAX_ELEMENTS: usize = 20_000;

/// The regular block of the Weyl group of `cartan`, generator `i` carrying
/// length `kappa_lengths[i]`.
///
/// Parameters are the group elements ordered by length. Every generator is
/// of type `kC+` or `kC-` and acts by left multiplication.
pub fn weyl_regular(
    name: &str,
    cartan: &[Vec<i64>],
    kappa_lengths: &[u32],
) -> Result<ExtBlock, ConstructError> {
    let r = cartan.len();
    if kappa_lengths.len() != r || cartan.iter().any(|row| row.len() != r) {
        return Err(ConstructError::Shape(
            "Cartan matrix and length list disagree in size".into(),
        ));
    }
    // elements are identified with their image of ρ in fundamental weight coordinates
    let reflect =
        |w: &[i64], s: usize| -> Vec<i64> { (0..r).map(|k| w[k] - w[s] * cartan[s][k]).collect() };
    let mut elems: Vec<Vec<i64>> = vec![vec![1; r]];
    let mut len: Vec<u32> = vec![0];
    let mut index: HashMap<Vec<i64>, usize> = HashMap::from([(elems[0].clone(), 0)]);
    let mut head = 0;
    while head < elems.len() {
        for s in 0..r {
            if elems[head][s] > 0 {
                let w = reflect(&elems[head], s);
                if !index.contains_key(&w) {
                    if elems.len() >= MAX_ELEMENTS {
                        return Err(ConstructError::TooLarge(MAX_ELEMENTS));
                    }
                    index.insert(w.clone(), elems.len());
                    elems.push(w);
                    len.push(len[head] + kappa_lengths[s]);
                }
            }
        }
        head += 1;
    }
    let mut order: Vec<usize> = (0..elems.len()).collect();
    order.sort_by_key(|&i| (len[i], i));
    let mut new_id = vec![0; elems.len()];
    for (pos, &i) in order.iter().enumerate() {
        new_id[i] = pos;
    }
    let parameters = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| RawParameter {
            id: pos,
            length: len[i],
            kappa_data: (0..r)
                .map(|s| {
                    let sign = if elems[i][s] > 0 { "+" } else { "-" };
                    RawKappaData {
                        type_code: format!("{}C{sign}", kappa_lengths[s]),
                        cross: new_id[index[&reflect(&elems[i], s)]],
                        cayley: vec![],
                        pair_slot: None,
                    }
                })
                .collect(),
        })
        .collect();
    let raw = RawBlock {
        name: name.to_string(),
        kappas: kappa_lengths
            .iter()
            .enumerate()
            .map(|(id, &length)| RawKappa { id, length })
            .collect(),
        folded_coxeter: coxeter_from_cartan(cartan),
        parameters,
        ordered_pairs: vec![],
    };
    Ok(validate(raw)?)
}

/// Regular block of a finite Weyl group, all generators of length 1.
pub fn coxeter_regular(kind: &str) -> Result<ExtBlock, ConstructError> {
    let c = cartan_matrix(kind)?;
    let lengths = vec![1; c.len()];
    weyl_regular(&format!("regular {kind}"), &c, &lengths)
}

/// Regular block of the fixed-point group of a diagram automorphism.
///
/// Supported: `A2`, `A3`, `A4`, `A5`, `D4` (triality is not).
pub fn twisted_regular(kind: &str) -> Result<ExtBlock, ConstructError> {
    let (folded, lengths): (&str, Vec<u32>) = match kind {
        "A2" => ("A1", vec![3]),
        "A3" => ("B2", vec![2, 1]),
        "A4" => ("B2", vec![2, 3]),
        "A5" => ("B3", vec![2, 2, 1]),
        "D4" => ("B3", vec![1, 1, 2]),
        _ => return Err(ConstructError::UnknownType(kind.to_string())),
    };
    weyl_regular(
        &format!("twisted regular {kind}"),
        &cartan_matrix(folded)?,
        &lengths,
    )
}

/// The product block: parameters are pairs, generators are the disjoint
/// union, lengths add. Parameter `(i, j)` gets id `i * |b| + j`.
pub fn product(a: &ExtBlock, b: &ExtBlock) -> Result<ExtBlock, ConstructError> {
    let (na, nb) = (a.size(), b.size());
    let (ka, kb) = (a.kappa_count(), b.kappa_count());
    let id = |i: usize, j: usize| i * nb + j;
    let ra = a.to_raw();
    let rb = b.to_raw();
    let mut kappas = ra.kappas.clone();
    kappas.extend(rb.kappas.iter().map(|k| RawKappa {
        id: k.id + ka,
        length: k.length,
    }));
    let mut folded = vec![vec![2u32; ka + kb]; ka + kb];
    for i in 0..ka {
        for j in 0..ka {
            folded[i][j] = ra.folded_coxeter[i][j];
        }
    }
    for i in 0..kb {
        for j in 0..kb {
            folded[ka + i][ka + j] = rb.folded_coxeter[i][j];
        }
    }
    let mut parameters = Vec::with_capacity(na * nb);
    for i in 0..na {
        for j in 0..nb {
            let mut kd: Vec<RawKappaData> = ra.parameters[i]
                .kappa_data
                .iter()
                .map(|d| RawKappaData {
                    type_code: d.type_code.clone(),
                    cross: id(d.cross, j),
                    cayley: d.cayley.iter().map(|&c| id(c, j)).collect(),
                    pair_slot: d.pair_slot,
                })
                .collect();
            kd.extend(rb.parameters[j].kappa_data.iter().map(|d| RawKappaData {
                type_code: d.type_code.clone(),
                cross: id(i, d.cross),
                cayley: d.cayley.iter().map(|&c| id(i, c)).collect(),
                pair_slot: d.pair_slot,
            }));
            parameters.push(RawParameter {
                id: id(i, j),
                length: a.length(i) + b.length(j),
                kappa_data: kd,
            });
        }
    }
    let mut ordered_pairs = vec![];
    for p in &ra.ordered_pairs {
        for j in 0..nb {
            ordered_pairs.push(OrderedPair {
                kappa: p.kappa,
                source_pair: p.source_pair.map(|x| id(x, j)),
                target_pair: p.target_pair.map(|x| id(x, j)),
            });
        }
    }
    for p in &rb.ordered_pairs {
        for i in 0..na {
            ordered_pairs.push(OrderedPair {
                kappa: p.kappa + ka,
                source_pair: p.source_pair.map(|x| id(i, x)),
                target_pair: p.target_pair.map(|x| id(i, x)),
            });
        }
    }
    let raw = RawBlock {
        name: format!("{} x {}", a.name(), b.name()),
        kappas,
        folded_coxeter: folded,
        parameters,
        ordered_pairs,
    };
    Ok(validate(raw)?)
}
