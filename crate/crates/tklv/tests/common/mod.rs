#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tklv::extblock::{validate, OrderedPair, RawBlock, RawKappa, RawKappaData, RawParameter};
use tklv::{construct, ExtBlock, LaurentPoly};

pub const FIXTURES: &[&str] = &[
    "b1",
    "b2",
    "b3",
    "b4",
    "a3_twisted",
    "pgl2",
    "quartet",
    "split_2i22",
    "pair_2i11",
    "cayley_3i",
    "cayley_3ci",
    "compact_ns",
    "twisted_regular_a3",
];

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> ExtBlock {
    ExtBlock::from_json_file(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn all_fixtures() -> Vec<ExtBlock> {
    FIXTURES.iter().map(|n| fixture(n)).collect()
}

/// Fixtures plus a few products and regular blocks.
pub fn extended_corpus() -> Vec<ExtBlock> {
    let p = |a: &ExtBlock, b: &ExtBlock| construct::product(a, b).unwrap();
    let mut out = all_fixtures();
    out.push(p(&fixture("pgl2"), &fixture("pgl2")));
    out.push(p(&fixture("quartet"), &fixture("b1")));
    out.push(p(&fixture("a3_twisted"), &fixture("b3")));
    out.push(p(&fixture("split_2i22"), &fixture("cayley_3i")));
    out.push(p(&fixture("compact_ns"), &fixture("pair_2i11")));
    for k in ["A2", "B2", "G2"] {
        out.push(construct::coxeter_regular(k).unwrap());
    }
    out.push(construct::twisted_regular("A2").unwrap());
    out.push(construct::twisted_regular("A4").unwrap());
    out
}

pub fn p(s: &str) -> LaurentPoly {
    s.parse().unwrap()
}

// ---------------------------------------------------------------------------
// Random blocks with valid local structure

struct Slot {
    offset: u32,
    code: &'static str,
}

/// Local configurations for one generator: the anchor sits at offset 0.
fn configurations(k: u32) -> Vec<Vec<Slot>> {
    let s = |offset, code| Slot { offset, code };
    match k {
        1 => vec![
            vec![s(0, "1C+"), s(1, "1C-")],
            vec![s(0, "1i1"), s(0, "1i1"), s(1, "1r1f")],
            vec![s(0, "1i2f"), s(1, "1r2"), s(1, "1r2")],
        ],
        2 => vec![
            vec![s(0, "2C+"), s(2, "2C-")],
            vec![s(0, "2Ci"), s(1, "2Cr")],
            vec![s(0, "2i11"), s(0, "2i11"), s(2, "2r11")],
            vec![s(0, "2i22"), s(2, "2r22"), s(2, "2r22")],
            vec![s(0, "2i12"), s(0, "2i12"), s(2, "2r21"), s(2, "2r21")],
        ],
        _ => vec![
            vec![s(0, "3C+"), s(3, "3C-")],
            vec![s(0, "3Ci"), s(2, "3Cr")],
            vec![s(0, "3i"), s(2, "3r")],
        ],
    }
}

fn singletons(k: u32) -> &'static [&'static str] {
    match k {
        1 => &["1i2s", "1ic", "1r1s", "1rn"],
        2 => &["2rn", "2ic"],
        _ => &["3rn", "3ic"],
    }
}

fn data(code: &str, cross: usize, cayley: Vec<usize>, slot: Option<u8>) -> RawKappaData {
    RawKappaData {
        type_code: code.to_string(),
        cross,
        cayley,
        pair_slot: slot,
    }
}

/// A block whose data for each generator is a random partition of the
/// parameters into local configurations. Such blocks need not come from a
/// group, but every local relation holds; generator pairs get `m = ∞`.
pub fn random_block(rng: &mut ChaCha8Rng, max_params: usize) -> ExtBlock {
    random_block_with(rng, max_params, 3)
}

/// As [`random_block`], with at most `max_kappas` generators.
pub fn random_block_with(rng: &mut ChaCha8Rng, max_params: usize, max_kappas: usize) -> ExtBlock {
    let n = rng.random_range(1..=max_params);
    let nk = rng.random_range(1..=max_kappas);
    let klen: Vec<u32> = (0..nk).map(|_| rng.random_range(1..=3)).collect();
    let lengths: Vec<u32> = (0..n).map(|_| rng.random_range(0..=4)).collect();
    let mut kd: Vec<Vec<Option<RawKappaData>>> = vec![vec![None; nk]; n];
    let mut pairs = vec![];
    for (k, &kl) in klen.iter().enumerate() {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut free: Vec<bool> = vec![true; n];
        for &a in &order {
            if !free[a] {
                continue;
            }
            let mut confs = configurations(kl);
            confs.shuffle(rng);
            let mut placed = false;
            for conf in confs {
                // pick distinct free parameters at the right lengths
                let mut chosen = vec![a];
                let mut ok = true;
                for slot in &conf[1..] {
                    let want = lengths[a] + slot.offset;
                    let cand: Vec<usize> = (0..n)
                        .filter(|&x| free[x] && !chosen.contains(&x) && lengths[x] == want)
                        .collect();
                    match cand.choose(rng) {
                        Some(&x) => chosen.push(x),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                for &x in &chosen {
                    free[x] = false;
                }
                let c = &chosen;
                let entries: Vec<(usize, RawKappaData)> = match conf.len() {
                    2 if conf[0].code.ends_with("C+") => vec![
                        (c[0], data(conf[0].code, c[1], vec![], None)),
                        (c[1], data(conf[1].code, c[0], vec![], None)),
                    ],
                    2 => vec![
                        (c[0], data(conf[0].code, c[0], vec![c[1]], None)),
                        (c[1], data(conf[1].code, c[1], vec![c[0]], None)),
                    ],
                    3 if conf[1].offset == 0 => vec![
                        (c[0], data(conf[0].code, c[1], vec![c[2]], None)),
                        (c[1], data(conf[1].code, c[0], vec![c[2]], None)),
                        (c[2], data(conf[2].code, c[2], vec![c[0], c[1]], None)),
                    ],
                    3 => vec![
                        (c[0], data(conf[0].code, c[0], vec![c[1], c[2]], None)),
                        (c[1], data(conf[1].code, c[2], vec![c[0]], None)),
                        (c[2], data(conf[2].code, c[1], vec![c[0]], None)),
                    ],
                    _ => {
                        let src = if rng.random_bool(0.5) {
                            [c[0], c[1]]
                        } else {
                            [c[1], c[0]]
                        };
                        let tgt = if rng.random_bool(0.5) {
                            [c[2], c[3]]
                        } else {
                            [c[3], c[2]]
                        };
                        pairs.push(OrderedPair {
                            kappa: k,
                            source_pair: src,
                            target_pair: tgt,
                        });
                        let slot =
                            |x: usize, pair: [usize; 2]| Some(if pair[0] == x { 1 } else { 2 });
                        vec![
                            (
                                c[0],
                                data(conf[0].code, c[0], vec![c[2], c[3]], slot(c[0], src)),
                            ),
                            (
                                c[1],
                                data(conf[1].code, c[1], vec![c[2], c[3]], slot(c[1], src)),
                            ),
                            (
                                c[2],
                                data(conf[2].code, c[2], vec![c[0], c[1]], slot(c[2], tgt)),
                            ),
                            (
                                c[3],
                                data(conf[3].code, c[3], vec![c[0], c[1]], slot(c[3], tgt)),
                            ),
                        ]
                    }
                };
                for (x, d) in entries {
                    kd[x][k] = Some(d);
                }
                placed = true;
                break;
            }
            if !placed {
                free[a] = false;
                let code = singletons(kl).choose(rng).unwrap();
                kd[a][k] = Some(data(code, a, vec![], None));
            }
        }
    }
    let raw = RawBlock {
        name: "random".into(),
        kappas: klen
            .iter()
            .enumerate()
            .map(|(id, &length)| RawKappa { id, length })
            .collect(),
        folded_coxeter: (0..nk)
            .map(|i| (0..nk).map(|j| if i == j { 1 } else { 0 }).collect())
            .collect(),
        parameters: (0..n)
            .map(|i| RawParameter {
                id: i,
                length: lengths[i],
                kappa_data: kd[i].iter().map(|d| d.clone().unwrap()).collect(),
            })
            .collect(),
        ordered_pairs: pairs,
    };
    validate(raw).expect("generated block is valid")
}

// ---------------------------------------------------------------------------
// Kazhdan-Lusztig polynomials of a Weyl group, from the group itself

/// Polynomials in `u`, as coefficient vectors.
type UPoly = Vec<i64>;

fn padd(a: &mut UPoly, b: &[i64], shift: usize, scale: i64) {
    if a.len() < b.len() + shift {
        a.resize(b.len() + shift, 0);
    }
    for (i, c) in b.iter().enumerate() {
        a[i + shift] += scale * c;
    }
}

fn trim(mut a: UPoly) -> UPoly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

/// Elements of the Weyl group as words, with their classical KL polynomials
/// `P[x][w]`, by the left-multiplication recursion.
pub struct WeylKl {
    pub words: Vec<Vec<usize>>,
    pub lengths: Vec<usize>,
    pub p: Vec<Vec<UPoly>>,
}

pub fn weyl_kl(cartan: &[Vec<i64>]) -> WeylKl {
    let r = cartan.len();
    let act = |w: &[i64], s: usize| -> Vec<i64> {
        let mut out = w.to_vec();
        for k in 0..r {
            out[k] -= w[s] * cartan[s][k];
        }
        out
    };
    let mut pts = vec![vec![1i64; r]];
    let mut words: Vec<Vec<usize>> = vec![vec![]];
    let mut idx: HashMap<Vec<i64>, usize> = HashMap::from([(pts[0].clone(), 0)]);
    let mut i = 0;
    while i < pts.len() {
        for s in 0..r {
            let q = act(&pts[i], s);
            if !idx.contains_key(&q) {
                idx.insert(q.clone(), pts.len());
                let mut w = vec![s];
                w.extend(&words[i]);
                words.push(w);
                pts.push(q);
            }
        }
        i += 1;
    }
    let n = pts.len();
    let lengths: Vec<usize> = words.iter().map(|w| w.len()).collect();
    let left = |x: usize, s: usize| idx[&act(&pts[x], s)];
    let is_desc = |x: usize, s: usize| pts[x][s] < 0;
    let mut p: Vec<Vec<UPoly>> = vec![vec![vec![]; n]; n];
    p[0][0] = vec![1];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&w| lengths[w]);
    let mu = |p: &Vec<Vec<UPoly>>, z: usize, v: usize| -> i64 {
        let d = lengths[v] as i64 - lengths[z] as i64;
        if d <= 0 || d % 2 == 0 {
            return 0;
        }
        p[z][v].get(((d - 1) / 2) as usize).copied().unwrap_or(0)
    };
    for &w in order.iter().skip(1) {
        let s = words[w][0];
        let v = left(w, s);
        for x in 0..n {
            let mut acc: UPoly = vec![];
            let sx = left(x, s);
            // c = 1 when sx < x
            if is_desc(x, s) {
                padd(&mut acc, &p[sx][v], 0, 1);
                padd(&mut acc, &p[x][v], 1, 1);
            } else {
                padd(&mut acc, &p[sx][v], 1, 1);
                padd(&mut acc, &p[x][v], 0, 1);
            }
            for z in 0..n {
                if lengths[z] < lengths[v] && is_desc(z, s) {
                    let m = mu(&p, z, v);
                    if m != 0 {
                        let sh = (lengths[w] - lengths[z]) / 2;
                        padd(&mut acc, &p[x][z], sh, -m);
                    }
                }
            }
            p[x][w] = trim(acc);
        }
    }
    WeylKl { words, lengths, p }
}

/// Map each group element to the block parameter reached by its word.
pub fn element_to_parameter(block: &ExtBlock, kl: &WeylKl) -> Vec<usize> {
    kl.words
        .iter()
        .map(|w| {
            let mut g = 0;
            for &s in w.iter().rev() {
                g = block.cross(g, s);
            }
            g
        })
        .collect()
}

pub fn upoly_to_laurent(a: &UPoly) -> LaurentPoly {
    LaurentPoly::from_u_coeffs(a)
}
