//! Slow reference implementations used to check the fast ones.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use d2s_core::embedder::HashedTfidfEmbedder;

fn prf(overlap: usize, cand: usize, reference: usize) -> [f64; 3] {
    let p = if cand == 0 { 0.0 } else { overlap as f64 / cand as f64 };
    let r = if reference == 0 { 0.0 } else { overlap as f64 / reference as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    [p, r, f]
}

/// Clipped overlap by repeatedly removing matched n-grams from a list.
pub fn ngram_overlap(cand: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let grams = |s: &[String]| -> Vec<Vec<String>> {
        if s.len() < n { Vec::new() } else { (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect() }
    };
    let c = grams(cand);
    let mut pool = grams(reference);
    let r_len = pool.len();
    let mut hits = 0;
    for g in &c {
        if let Some(pos) = pool.iter().position(|x| x == g) {
            pool.remove(pos);
            hits += 1;
        }
    }
    (hits, c.len(), r_len)
}

fn is_subsequence(needle: &[&String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == *x))
}

/// LCS by enumerating every subsequence of the shorter input.
pub fn lcs_by_subsets(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "subset oracle is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let ones = mask.count_ones() as usize;
        if ones <= best {
            continue;
        }
        let pick: Vec<&String> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| &short[i]).collect();
        if is_subsequence(&pick, long) {
            best = ones;
        }
    }
    best
}

/// `[r1 p r f, r2 p r f, rl p r f]`.
pub fn rouge_oracle(cand: &[String], reference: &[String]) -> [f64; 9] {
    let (o1, c1, r1) = ngram_overlap(cand, reference, 1);
    let (o2, c2, r2) = ngram_overlap(cand, reference, 2);
    let l = lcs_by_subsets(cand, reference);
    let a = prf(o1, c1, r1);
    let b = prf(o2, c2, r2);
    let c = prf(l, cand.len(), reference.len());
    [a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]]
}

/// Memoized recursion over (i, j) with insert/delete 1 and substitute 2.
pub fn indel_sub2_distance(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + if a[i] == b[j] { 0 } else { 2 };
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn levenshtein_ratio_oracle(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    (total - indel_sub2_distance(&a, &b)) as f64 / total as f64
}

fn plain_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Scores every snippet, sorts the whole list, keeps `k`.
pub fn brute_force_top_k(text: &[Vec<f64>], kw: &[Vec<f64>], q: &[f64], alpha: f64, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = (0..text.len())
        .map(|i| (alpha * plain_dot(q, &text[i]) + (1.0 - alpha) * plain_dot(q, &kw[i]), i))
        .collect();
    all.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Argsort of one score column, descending, ties by index.
pub fn argsort_by(vecs: &[Vec<f64>], q: &[f64], k: usize) -> Vec<usize> {
    brute_force_top_k(vecs, vecs, q, 1.0, k)
}

/// Indices whose dotted label extends `labels[root]`, read off the strings alone.
pub fn descendants_by_label(labels: &[String], root: usize) -> BTreeSet<usize> {
    let prefix = format!("{}.", labels[root]);
    (0..labels.len()).filter(|&i| labels[i].starts_with(&prefix)).collect()
}

/// Central finite differences of `f` at `x`.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `n` title/content pairs where titles and contents use disjoint words, so
/// an untrained encoder cannot match them. Every word hashes to its own
/// bucket so a linear map can. Needs `2 * n <= dim`.
pub fn separable_pairs(embedder: &HashedTfidfEmbedder, n: usize) -> Vec<(String, String)> {
    let mut used = BTreeSet::new();
    let mut fresh = |prefix: &str| -> String {
        let mut i = 0usize;
        loop {
            let w = format!("{prefix}{i}");
            if used.insert(embedder.bucket(&w)) {
                return w;
            }
            i += 1;
        }
    };
    let mut out = Vec::new();
    for _ in 0..n {
        let t = fresh("title");
        let c = fresh("body");
        out.push((t, c));
    }
    out
}

/// (ranking, relevant, k, expected), each worked out by hand.
pub fn precision_cases() -> Vec<(Vec<u32>, Vec<u32>, usize, f64)> {
    vec![
        (vec![1, 2, 3, 4, 5], vec![1], 1, 1.0),
        (vec![1, 2, 3, 4, 5], vec![2], 1, 0.0),
        (vec![1, 2, 3, 4, 5], vec![2], 3, 1.0 / 3.0),
        (vec![1, 2, 3, 4, 5], vec![2, 3], 3, 2.0 / 3.0),
        (vec![1, 2, 3, 4, 5], vec![1, 2, 3], 3, 1.0),
        (vec![1, 2, 3, 4, 5], vec![5], 5, 0.2),
        (vec![1, 2, 3, 4, 5], vec![4, 5], 3, 0.0),
        (vec![1, 2, 3, 4, 5], vec![1, 3, 5], 5, 0.6),
        (vec![1, 2, 3, 4, 5], vec![], 5, 0.0),
        (vec![1, 2], vec![1, 2], 5, 0.4),
        (vec![1, 2], vec![2], 3, 1.0 / 3.0),
        (vec![], vec![1], 1, 0.0),
        (vec![3], vec![3], 1, 1.0),
        (vec![3], vec![3], 3, 1.0 / 3.0),
        (vec![9, 8, 7], vec![7, 8, 9], 1, 1.0),
        (vec![9, 8, 7], vec![7], 1, 0.0),
        (vec![9, 8, 7], vec![7], 3, 1.0 / 3.0),
        (vec![1, 2, 3, 4, 5, 6], vec![6], 5, 0.0),
        (vec![1, 2, 3, 4, 5, 6], vec![2, 4, 6], 5, 0.4),
        (vec![4, 1], vec![1, 7], 1, 0.0),
    ]
}
