//! Dense linear algebra over the binary field.
//!
//! Rows are plain `Vec<bool>` slices. Codes handled here are small (tens of
//! qubits) so clarity wins over bit packing; hot enumeration loops convert to
//! `u64` masks through [`to_mask`].

/// Parity of the overlap between two equal-length rows.
pub fn dot(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).fold(false, |acc, (&x, &y)| acc ^ (x & y))
}

pub fn xor_into(dst: &mut [bool], src: &[bool]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

pub fn weight(a: &[bool]) -> usize {
    a.iter().filter(|&&b| b).count()
}

pub fn support(a: &[bool]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

pub fn from_support(n: usize, support: &[usize]) -> Vec<bool> {
    let mut row = vec![false; n];
    for &i in support {
        row[i] = true;
    }
    row
}

/// Packs a row of at most 64 entries into a bit mask (bit `i` = entry `i`).
pub fn to_mask(a: &[bool]) -> u64 {
    debug_assert!(a.len() <= 64);
    a.iter()
        .enumerate()
        .fold(0u64, |m, (i, &b)| if b { m | (1 << i) } else { m })
}

/// Reduced row-echelon form with pivots ordered left to right.
///
/// Returns the nonzero reduced rows and their pivot columns. Zero rows produced
/// by dependent inputs are dropped, so `rows.len() - result.len()` is the rank
/// deficiency.
pub fn rref(rows: &[Vec<bool>]) -> (Vec<Vec<bool>>, Vec<usize>) {
    let mut m: Vec<Vec<bool>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c]) else {
            continue;
        };
        m.swap(r, p);
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[c] {
                xor_into(row, &pivot_row);
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(rows: &[Vec<bool>]) -> usize {
    rref(rows).0.len()
}

/// Reduces `v` against rows already in reduced echelon form, clearing every
/// pivot column. The result is zero iff `v` lies in the row space.
pub fn reduce(v: &[bool], echelon: &[Vec<bool>], pivots: &[usize]) -> Vec<bool> {
    let mut out = v.to_vec();
    for (row, &p) in echelon.iter().zip(pivots) {
        if out[p] {
            xor_into(&mut out, row);
        }
    }
    out
}

pub fn in_span(v: &[bool], rows: &[Vec<bool>]) -> bool {
    let (e, p) = rref(rows);
    !reduce(v, &e, &p).iter().any(|&b| b)
}

/// Every element of the row space, by brute force over all subsets.
/// Only meant for small generator sets (tests and oracles).
pub fn span_elements(rows: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = rows.first().map_or(0, Vec::len);
    assert!(rows.len() < 24, "span enumeration is exponential");
    (0u32..(1 << rows.len()))
        .map(|mask| {
            let mut acc = vec![false; n];
            for (i, row) in rows.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    xor_into(&mut acc, row);
                }
            }
            acc
        })
        .collect()
}

/// Binomial coefficient as f64 (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Iterator over all `n`-bit masks of a fixed popcount in increasing order
/// (Gosper's hack).
pub struct FixedWeight {
    next: Option<u64>,
    limit: u64,
}

impl FixedWeight {
    pub fn new(n: usize, w: usize) -> Self {
        assert!(n < 64);
        let limit = 1u64 << n;
        let next = if w > n {
            None
        } else if w == 0 {
            Some(0)
        } else {
            Some((1u64 << w) - 1)
        };
        Self { next, limit }
    }
}

impl Iterator for FixedWeight {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < self.limit).then_some(nxt)
        };
        Some(cur)
    }
}
