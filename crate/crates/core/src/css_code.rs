//! CSS stabilizer tables, their standard form, and parity evaluation of
//! transversal measurement records.
//!
//! A table stores the X-type and Z-type stabilizer generators as separate
//! binary blocks together with the logical operator supports. Qubits are
//! indexed from 0 internally; the text format and reports use the same column
//! order, so column `i` is printed qubit `i + 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("unknown builtin code `{0}`")]
    UnknownCode(String),
    #[error("measurement record has length {got}, code has n = {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

/// Binary description of an `[[n, k, d]]` CSS code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerTable {
    n: usize,
    k: usize,
    d: usize,
    x_rows: Vec<Vec<bool>>,
    z_rows: Vec<Vec<bool>>,
    logical_x: Vec<Vec<bool>>,
    logical_z: Vec<Vec<bool>>,
}

impl StabilizerTable {
    /// Builds a table and checks every structural invariant: row lengths,
    /// `m_X + m_Z = n - k`, commutation, symplectic pairing of the logicals,
    /// and linear independence of the generators.
    pub fn new(
        n: usize,
        k: usize,
        d: usize,
        x_rows: Vec<Vec<bool>>,
        z_rows: Vec<Vec<bool>>,
        logical_x: Vec<Vec<bool>>,
        logical_z: Vec<Vec<bool>>,
    ) -> Result<Self, CodeError> {
        let bad = |m: String| Err(CodeError::InvalidCode(m));
        for (name, block) in [
            ("X stabilizer", &x_rows),
            ("Z stabilizer", &z_rows),
            ("logical X", &logical_x),
            ("logical Z", &logical_z),
        ] {
            if let Some(r) = block.iter().find(|r| r.len() != n) {
                return bad(format!("{name} row has length {}, expected {n}", r.len()));
            }
        }
        if k > n || x_rows.len() + z_rows.len() != n - k {
            return bad(format!(
                "m_X + m_Z = {} but n - k = {}",
                x_rows.len() + z_rows.len(),
                n.saturating_sub(k)
            ));
        }
        if logical_x.len() != k || logical_z.len() != k {
            return bad(format!(
                "expected {k} logical X and Z operators, got {} and {}",
                logical_x.len(),
                logical_z.len()
            ));
        }
        for (i, x) in x_rows.iter().enumerate() {
            for (j, z) in z_rows.iter().enumerate() {
                if gf2::dot(x, z) {
                    return bad(format!("X row {i} anticommutes with Z row {j}"));
                }
            }
            for (j, z) in logical_z.iter().enumerate() {
                if gf2::dot(x, z) {
                    return bad(format!("X row {i} anticommutes with logical Z {j}"));
                }
            }
        }
        for (i, x) in logical_x.iter().enumerate() {
            for (j, z) in z_rows.iter().enumerate() {
                if gf2::dot(x, z) {
                    return bad(format!("logical X {i} anticommutes with Z row {j}"));
                }
            }
            for (j, z) in logical_z.iter().enumerate() {
                if gf2::dot(x, z) != (i == j) {
                    return bad(format!("logical X {i} / logical Z {j} pairing is wrong"));
                }
            }
        }
        if gf2::rank(&x_rows) != x_rows.len() {
            return bad("X stabilizer rows are linearly dependent".into());
        }
        if gf2::rank(&z_rows) != z_rows.len() {
            return bad("Z stabilizer rows are linearly dependent".into());
        }
        Ok(Self {
            n,
            k,
            d,
            x_rows,
            z_rows,
            logical_x,
            logical_z,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn m_x(&self) -> usize {
        self.x_rows.len()
    }
    pub fn m_z(&self) -> usize {
        self.z_rows.len()
    }
    pub fn x_rows(&self) -> &[Vec<bool>] {
        &self.x_rows
    }
    pub fn z_rows(&self) -> &[Vec<bool>] {
        &self.z_rows
    }
    pub fn logical_x(&self) -> &[Vec<bool>] {
        &self.logical_x
    }
    pub fn logical_z(&self) -> &[Vec<bool>] {
        &self.logical_z
    }

    /// Stabilizer rows and logical operators acting in `basis`.
    pub fn checks(&self, basis: Basis) -> (&[Vec<bool>], &[Vec<bool>]) {
        match basis {
            Basis::X => (&self.x_rows, &self.logical_x),
            Basis::Z => (&self.z_rows, &self.logical_z),
        }
    }

    /// Row-equivalent table in standard form.
    ///
    /// Both generator blocks are put in reduced row-echelon form independently
    /// (pivots left to right), and each logical operator is reduced modulo the
    /// stabilizers of its own type so that it vanishes on that block's pivot
    /// columns. Stabilizer groups and logical cosets are unchanged.
    pub fn standard_form(&self) -> Result<Self, CodeError> {
        let (xs, xp) = gf2::rref(&self.x_rows);
        let (zs, zp) = gf2::rref(&self.z_rows);
        if xs.len() != self.x_rows.len() || zs.len() != self.z_rows.len() {
            return Err(CodeError::InvalidCode(
                "stabilizer rows are linearly dependent".into(),
            ));
        }
        let lx = self
            .logical_x
            .iter()
            .map(|l| gf2::reduce(l, &xs, &xp))
            .collect();
        let lz = self
            .logical_z
            .iter()
            .map(|l| gf2::reduce(l, &zs, &zp))
            .collect();
        Self::new(self.n, self.k, self.d, xs, zs, lx, lz)
    }

    pub fn is_standard_form(&self) -> bool {
        self.standard_form().is_ok_and(|s| &s == self)
    }

    /// Pivot column of each X generator (valid for standard-form tables).
    pub fn x_pivots(&self) -> Vec<usize> {
        gf2::rref(&self.x_rows).1
    }

    /// Triorthogonality of the X generator matrix together with the logical X
    /// rows: all pairwise and triple overlaps even, stabilizer rows of even
    /// weight and logical rows of odd weight. Such codes support a transversal
    /// T up to a Clifford correction.
    pub fn is_triorthogonal(&self) -> bool {
        let rows: Vec<&Vec<bool>> = self.x_rows.iter().chain(&self.logical_x).collect();
        let and = |a: &[bool], b: &[bool]| -> Vec<bool> {
            a.iter().zip(b).map(|(&x, &y)| x & y).collect()
        };
        for (i, a) in rows.iter().enumerate() {
            let odd = gf2::weight(a) % 2 == 1;
            if odd != (i >= self.x_rows.len()) {
                return false;
            }
            for (j, b) in rows.iter().enumerate().skip(i + 1) {
                let ab = and(a, b);
                if gf2::weight(&ab) % 2 == 1 {
                    return false;
                }
                for c in rows.iter().skip(j + 1) {
                    if gf2::weight(&and(&ab, c)) % 2 == 1 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Whether transversal S maps the code to itself: X generators of weight
    /// divisible by four with even pairwise overlaps, logical X of odd weight.
    pub fn supports_transversal_s(&self) -> bool {
        let doubly_even = self.x_rows.iter().all(|r| gf2::weight(r) % 4 == 0);
        let pairwise = self.x_rows.iter().enumerate().all(|(i, a)| {
            self.x_rows[i + 1..].iter().all(|b| {
                a.iter().zip(b).filter(|(&x, &y)| x && y).count() % 2 == 0
            })
        });
        let odd_logical = self.logical_x.iter().all(|r| gf2::weight(r) % 2 == 1);
        doubly_even && pairwise && odd_logical
    }

    /// Parses the line format: header `n k d`, then `%`-separated sections of
    /// X rows, Z rows, logical X and logical Z, each row a string over `IXZ`.
    pub fn from_text(text: &str) -> Result<Self, CodeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(CodeError::Parse {
            line: 1,
            msg: "missing `n k d` header".into(),
        })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| CodeError::Parse {
                line: hline,
                msg: format!("bad header: {e}"),
            })?;
        let [n, k, d] = nums[..] else {
            return Err(CodeError::Parse {
                line: hline,
                msg: "header must be `n k d`".into(),
            });
        };
        let mut sections: [Vec<Vec<bool>>; 4] = Default::default();
        let mut sec = 0;
        for (line, l) in lines {
            if l == "%" {
                sec += 1;
                if sec > 3 {
                    return Err(CodeError::Parse {
                        line,
                        msg: "too many `%` sections".into(),
                    });
                }
                continue;
            }
            let want = if sec % 2 == 0 { 'X' } else { 'Z' };
            if l.chars().count() != n {
                return Err(CodeError::Parse {
                    line,
                    msg: format!("row has {} symbols, expected {n}", l.chars().count()),
                });
            }
            let mut row = Vec::with_capacity(n);
            for c in l.chars() {
                match c {
                    'I' | '_' | '.' => row.push(false),
                    c if c == want => row.push(true),
                    'X' | 'Z' => {
                        return Err(CodeError::Parse {
                            line,
                            msg: format!("non-CSS row: `{c}` in a {want}-type section"),
                        })
                    }
                    other => {
                        return Err(CodeError::Parse {
                            line,
                            msg: format!("unexpected symbol `{other}`"),
                        })
                    }
                }
            }
            sections[sec].push(row);
        }
        if sec != 3 {
            return Err(CodeError::Parse {
                line: text.lines().count(),
                msg: format!("expected 4 sections, found {}", sec + 1),
            });
        }
        let [xs, zs, lx, lz] = sections;
        Self::new(n, k, d, xs, zs, lx, lz)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for StabilizerTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.n, self.k, self.d)?;
        let blocks = [
            (&self.x_rows, 'X'),
            (&self.z_rows, 'Z'),
            (&self.logical_x, 'X'),
            (&self.logical_z, 'Z'),
        ];
        for (i, (rows, p)) in blocks.iter().enumerate() {
            if i > 0 {
                writeln!(f, "%")?;
            }
            for r in rows.iter() {
                let s: String = r.iter().map(|&b| if b { *p } else { 'I' }).collect();
                writeln!(f, "{s}")?;
            }
        }
        Ok(())
    }
}

/// Transversal measurement outcomes `b_1..b_n` in one basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub bits: Vec<bool>,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parities {
    pub syndrome: Vec<bool>,
    pub logical: Vec<bool>,
}

/// Stabilizer and logical parities of a transversal measurement. An X-basis
/// record is checked against the X generators and logical X supports.
pub fn evaluate_parities(
    table: &StabilizerTable,
    rec: &MeasurementRecord,
) -> Result<Parities, CodeError> {
    if rec.bits.len() != table.n {
        return Err(CodeError::LengthMismatch {
            expected: table.n,
            got: rec.bits.len(),
        });
    }
    let (checks, logicals) = table.checks(rec.basis);
    Ok(Parities {
        syndrome: checks.iter().map(|r| gf2::dot(r, &rec.bits)).collect(),
        logical: logicals.iter().map(|r| gf2::dot(r, &rec.bits)).collect(),
    })
}

/// Names accepted by [`builtin_code`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuiltinCode {
    Steane7,
    ReedMuller15,
    RotatedSurface(usize),
}

impl FromStr for BuiltinCode {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, CodeError> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "steane7" | "steane" => return Ok(Self::Steane7),
            "reed_muller15" | "rm15" | "15to1" => return Ok(Self::ReedMuller15),
            _ => {}
        }
        let dist = t
            .strip_prefix("rotated_surface")
            .map(|r| r.trim_start_matches([':', '(']).trim_end_matches(')'))
            .and_then(|r| r.parse::<usize>().ok());
        match dist {
            Some(d) if d >= 2 => Ok(Self::RotatedSurface(d)),
            _ => Err(CodeError::UnknownCode(s.to_string())),
        }
    }
}

impl fmt::Display for BuiltinCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Steane7 => write!(f, "steane7"),
            Self::ReedMuller15 => write!(f, "reed_muller15"),
            Self::RotatedSurface(d) => write!(f, "rotated_surface({d})"),
        }
    }
}

/// The `[[15,1,3]]` punctured Reed-Muller table in standard form. Columns
/// 1-4 are the X pivots (the qubits initialised in |+> by the encoder).
pub const REED_MULLER15_TABLE: &str = "\
15 1 3
XIIIXXIXXIXIXIX
IXIIXIXXIXXIIXX
IIXIIXXXIIIXXXX
IIIXIIIIXXXXXXX
%
ZIIIIIIZIIZIZII
IZIIIIIZIIZIIZI
IIZIIIIZIIIIZZI
IIIZIIIIIIZIZZI
IIIIZIIZIIZIIIZ
IIIIIZIZIIIIZIZ
IIIIIIZZIIIIIZZ
IIIIIIIIZIZIZIZ
IIIIIIIIIZZIIZZ
IIIIIIIIIIIZZZZ
%
IIIIXXXIXXIXIIX
%
IIIIIIIZIIZIZZZ
";

/// Looks up a builtin code by name and returns it in standard form.
pub fn builtin_code(name: &str) -> Result<StabilizerTable, CodeError> {
    builtin(name.parse()?)
}

pub fn builtin(code: BuiltinCode) -> Result<StabilizerTable, CodeError> {
    match code {
        BuiltinCode::Steane7 => hamming_css(3, 3).standard_form(),
        BuiltinCode::ReedMuller15 => StabilizerTable::from_text(REED_MULLER15_TABLE),
        BuiltinCode::RotatedSurface(d) => rotated_surface(d)?.standard_form(),
    }
}

/// Columns of the length-`2^r - 1` simplex code ordered with the unit vectors
/// first, then the remaining nonzero vectors ascending.
fn simplex_columns(r: usize) -> Vec<u32> {
    let mut cols: Vec<u32> = (0..r).map(|i| 1 << i).collect();
    cols.extend((1u32..(1 << r)).filter(|v| !v.is_power_of_two()));
    cols
}

/// Steane-type code: X and Z generators are both the `r`-row simplex matrix.
fn hamming_css(r: usize, d: usize) -> StabilizerTable {
    let cols = simplex_columns(r);
    let n = cols.len();
    let rows: Vec<Vec<bool>> = (0..r)
        .map(|i| cols.iter().map(|c| c >> i & 1 == 1).collect())
        .collect();
    StabilizerTable::new(
        n,
        1,
        d,
        rows.clone(),
        rows,
        vec![vec![true; n]],
        vec![vec![true; n]],
    )
    .expect("Hamming CSS construction is valid")
}

/// Quantum Reed-Muller `[[15,1,3]]` from first principles: qubits are the
/// nonzero vectors of GF(2)^4, X generators are the four coordinate
/// functions (weight 8), Z generators add the six pairwise products
/// (weight 4), and both logicals are the all-ones vector.
pub fn reed_muller15_construction() -> StabilizerTable {
    let cols = simplex_columns(4);
    let coord = |i: usize| -> Vec<bool> { cols.iter().map(|c| c >> i & 1 == 1).collect() };
    let x_rows: Vec<Vec<bool>> = (0..4).map(coord).collect();
    let mut z_rows = x_rows.clone();
    for i in 0..4 {
        for j in i + 1..4 {
            z_rows.push(cols.iter().map(|c| c >> i & 1 == 1 && c >> j & 1 == 1).collect());
        }
    }
    StabilizerTable::new(
        15,
        1,
        3,
        x_rows,
        z_rows,
        vec![vec![true; 15]],
        vec![vec![true; 15]],
    )
    .expect("Reed-Muller construction is valid")
}

/// Rotated surface code on a `d x d` patch. Data qubit `(r, c)` has index
/// `r * d + c`. Plaquette `(i, j)` with `0 <= i, j <= d` touches the data
/// qubits at its four corners; bulk plaquettes alternate type by parity,
/// weight-2 X plaquettes sit on the top and bottom edges and weight-2 Z
/// plaquettes on the left and right edges. Logical X runs down column 0 and
/// logical Z along row 0.
pub fn rotated_surface(d: usize) -> Result<StabilizerTable, CodeError> {
    if d < 2 {
        return Err(CodeError::InvalidCode(format!("surface distance {d} < 2")));
    }
    let n = d * d;
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for i in 0..=d {
        for j in 0..=d {
            let mut sup = Vec::new();
            for (r, c) in [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)] {
                // corners are offset by one: plaquette (i, j) spans rows i-1..i
                if (1..=d).contains(&r) && (1..=d).contains(&c) {
                    sup.push((r - 1) * d + (c - 1));
                }
            }
            let is_x = (i + j) % 2 == 0;
            let top_bottom = i == 0 || i == d;
            let left_right = j == 0 || j == d;
            let keep = match sup.len() {
                4 => true,
                2 => (is_x && top_bottom && !left_right) || (!is_x && left_right && !top_bottom),
                _ => false,
            };
            if keep {
                let row = gf2::from_support(n, &sup);
                if is_x {
                    xs.push(row);
                } else {
                    zs.push(row);
                }
            }
        }
    }
    let lx = gf2::from_support(n, &(0..d).map(|r| r * d).collect::<Vec<_>>());
    let lz = gf2::from_support(n, &(0..d).collect::<Vec<_>>());
    StabilizerTable::new(n, 1, d, xs, zs, vec![lx], vec![lz])
}
