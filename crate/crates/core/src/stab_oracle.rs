//! Clifford tableau simulator and exhaustive error-pattern enumeration.
//!
//! This is a verification oracle: encoding circuits, pipelined schedules and
//! lowered logical programs are replayed here and compared by stabilizer
//! membership. The tableau follows Aaronson and Gottesman, with rows
//! `0..q` the destabilizers and rows `q..2q` the stabilizers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::css_code::{Basis, StabilizerTable};
use crate::gf2::{self, FixedWeight};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("qubit {qubit} out of range for a {width}-qubit tableau")]
    OutOfRange { qubit: usize, width: usize },
    #[error("two-qubit gate needs distinct targets, got {0} twice")]
    RepeatedTarget(usize),
    #[error("pauli has length {got}, tableau has {expected} qubits")]
    PauliLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Cx(usize, usize),
    Cz(usize, usize),
    X(usize),
    Z(usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(a) | Gate::S(a) | Gate::X(a) | Gate::Z(a) => vec![a],
            Gate::Cx(a, b) | Gate::Cz(a, b) => vec![a, b],
        }
    }
}

/// Hermitian Pauli operator with a sign. `neg = true` means a leading minus.
/// Qubit `i` carries X if `x[i]`, Z if `z[i]`, and Y if both.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pauli {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    pub neg: bool,
}

impl Pauli {
    pub fn identity(q: usize) -> Self {
        Self {
            x: vec![false; q],
            z: vec![false; q],
            neg: false,
        }
    }

    pub fn from_parts(x: Vec<bool>, z: Vec<bool>) -> Self {
        assert_eq!(x.len(), z.len());
        Self { x, z, neg: false }
    }

    pub fn x_on(q: usize, support: &[usize]) -> Self {
        Self::from_parts(gf2::from_support(q, support), vec![false; q])
    }

    pub fn z_on(q: usize, support: &[usize]) -> Self {
        Self::from_parts(vec![false; q], gf2::from_support(q, support))
    }

    /// Single-qubit `+Y` on `qubit`.
    pub fn y_on(q: usize, qubit: usize) -> Self {
        let s = gf2::from_support(q, &[qubit]);
        Self::from_parts(s.clone(), s)
    }

    pub fn negated(mut self) -> Self {
        self.neg = !self.neg;
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn commutes_with(&self, other: &Pauli) -> bool {
        !(gf2::dot(&self.x, &other.z) ^ gf2::dot(&self.z, &other.x))
    }

    /// Embeds a row over `n` qubits into a larger register at `offset`.
    pub fn embed(&self, q: usize, offset: usize) -> Self {
        let mut out = Self::identity(q);
        out.x[offset..offset + self.len()].copy_from_slice(&self.x);
        out.z[offset..offset + self.len()].copy_from_slice(&self.z);
        out.neg = self.neg;
        out
    }
}

/// Stabilizer tableau of a `q`-qubit pure state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tableau {
    q: usize,
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    r: Vec<bool>,
}

/// Exponent of i (mod 4) picked up when multiplying single-qubit Paulis
/// `(x1,z1) * (x2,z2)`.
fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 as i32 - x2 as i32,
        (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
        (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
    }
}

/// In-place product `(hx,hz,hr) <- (ix,iz,ir) * (hx,hz,hr)` of Hermitian
/// Paulis that commute.
fn mul_into(hx: &mut [bool], hz: &mut [bool], hr: &mut bool, ix: &[bool], iz: &[bool], ir: bool) {
    let mut phase = 2 * (*hr as i32) + 2 * (ir as i32);
    for j in 0..hx.len() {
        phase += g(ix[j], iz[j], hx[j], hz[j]);
        hx[j] ^= ix[j];
        hz[j] ^= iz[j];
    }
    debug_assert!(phase.rem_euclid(2) == 0, "product of anticommuting rows");
    *hr = phase.rem_euclid(4) == 2;
}

impl Tableau {
    /// The all-zero state `|0...0>`.
    pub fn new(q: usize) -> Self {
        let mut x = vec![vec![false; q]; 2 * q];
        let mut z = vec![vec![false; q]; 2 * q];
        for i in 0..q {
            x[i][i] = true;
            z[q + i][i] = true;
        }
        Self {
            q,
            x,
            z,
            r: vec![false; 2 * q],
        }
    }

    pub fn qubits(&self) -> usize {
        self.q
    }

    fn check(&self, a: usize) -> Result<(), OracleError> {
        if a >= self.q {
            Err(OracleError::OutOfRange {
                qubit: a,
                width: self.q,
            })
        } else {
            Ok(())
        }
    }

    pub fn apply(&mut self, gate: Gate) -> Result<(), OracleError> {
        for a in gate.qubits() {
            self.check(a)?;
        }
        match gate {
            Gate::H(a) => {
                for i in 0..2 * self.q {
                    self.r[i] ^= self.x[i][a] & self.z[i][a];
                    let t = self.x[i][a];
                    self.x[i][a] = self.z[i][a];
                    self.z[i][a] = t;
                }
            }
            Gate::S(a) => {
                for i in 0..2 * self.q {
                    self.r[i] ^= self.x[i][a] & self.z[i][a];
                    self.z[i][a] ^= self.x[i][a];
                }
            }
            Gate::Cx(a, b) => {
                if a == b {
                    return Err(OracleError::RepeatedTarget(a));
                }
                for i in 0..2 * self.q {
                    let (xa, za, xb, zb) = (self.x[i][a], self.z[i][a], self.x[i][b], self.z[i][b]);
                    self.r[i] ^= xa & zb & !(xb ^ za);
                    self.x[i][b] ^= xa;
                    self.z[i][a] ^= zb;
                }
            }
            Gate::Cz(a, b) => {
                if a == b {
                    return Err(OracleError::RepeatedTarget(a));
                }
                self.apply(Gate::H(b))?;
                self.apply(Gate::Cx(a, b))?;
                self.apply(Gate::H(b))?;
            }
            Gate::X(a) => {
                for i in 0..2 * self.q {
                    self.r[i] ^= self.z[i][a];
                }
            }
            Gate::Z(a) => {
                for i in 0..2 * self.q {
                    self.r[i] ^= self.x[i][a];
                }
            }
        }
        Ok(())
    }

    pub fn apply_all(&mut self, gates: &[Gate]) -> Result<(), OracleError> {
        gates.iter().try_for_each(|&g| self.apply(g))
    }

    /// Applies the Pauli `p` as a gate (sign ignored).
    pub fn apply_pauli(&mut self, p: &Pauli) -> Result<(), OracleError> {
        if p.len() != self.q {
            return Err(OracleError::PauliLength {
                expected: self.q,
                got: p.len(),
            });
        }
        for i in 0..2 * self.q {
            // anticommuting rows flip sign
            self.r[i] ^= gf2::dot(&self.x[i], &p.z) ^ gf2::dot(&self.z[i], &p.x);
        }
        Ok(())
    }

    fn row_anticommutes(&self, i: usize, p: &Pauli) -> bool {
        gf2::dot(&self.x[i], &p.z) ^ gf2::dot(&self.z[i], &p.x)
    }

    /// Product of the stabilizers whose destabilizers anticommute with `p`.
    /// Equals `p` up to sign whenever `p` commutes with the whole group.
    fn stabilizer_product(&self, p: &Pauli) -> Pauli {
        let mut acc = Pauli::identity(self.q);
        for i in 0..self.q {
            if self.row_anticommutes(i, p) {
                let s = self.q + i;
                mul_into(&mut acc.x, &mut acc.z, &mut acc.neg, &self.x[s], &self.z[s], self.r[s]);
            }
        }
        acc
    }

    /// Whether `+p` (or `-p` if `p.neg`) belongs to the stabilizer group.
    pub fn stabilizes(&self, p: &Pauli) -> bool {
        if p.len() != self.q {
            return false;
        }
        if (self.q..2 * self.q).any(|i| self.row_anticommutes(i, p)) {
            return false;
        }
        let prod = self.stabilizer_product(p);
        prod.x == p.x && prod.z == p.z && prod.neg == p.neg
    }

    /// Expectation sign of `p` if deterministic: `Some(false)` for `+1`,
    /// `Some(true)` for `-1`, `None` if `p` anticommutes with the state.
    pub fn expectation(&self, p: &Pauli) -> Option<bool> {
        if p.len() != self.q || (self.q..2 * self.q).any(|i| self.row_anticommutes(i, p)) {
            return None;
        }
        let prod = self.stabilizer_product(p);
        Some(prod.neg ^ p.neg)
    }

    /// Single-qubit measurement. A deterministic outcome is returned as is;
    /// a random one is projected onto `forced`. Returns `(outcome, random)`,
    /// outcome `true` meaning eigenvalue `-1`.
    pub fn measure(&mut self, a: usize, basis: Basis, forced: bool) -> Result<(bool, bool), OracleError> {
        self.check(a)?;
        if basis == Basis::X {
            self.apply(Gate::H(a))?;
            let out = self.measure(a, Basis::Z, forced);
            self.apply(Gate::H(a))?;
            return out;
        }
        let q = self.q;
        let Some(p) = (q..2 * q).find(|&i| self.x[i][a]) else {
            let zp = Pauli::z_on(q, &[a]);
            let neg = self.stabilizer_product(&zp).neg;
            return Ok((neg, false));
        };
        let (px, pz, pr) = (self.x[p].clone(), self.z[p].clone(), self.r[p]);
        for i in 0..2 * q {
            if i != p && self.x[i][a] {
                let (mut hx, mut hz, mut hr) = (self.x[i].clone(), self.z[i].clone(), self.r[i]);
                // destabilizer rows may anticommute with row p; phase is
                // irrelevant for them, so use the raw xor there
                if i < q && (gf2::dot(&hx, &pz) ^ gf2::dot(&hz, &px)) {
                    gf2::xor_into(&mut hx, &px);
                    gf2::xor_into(&mut hz, &pz);
                } else {
                    mul_into(&mut hx, &mut hz, &mut hr, &px, &pz, pr);
                }
                self.x[i] = hx;
                self.z[i] = hz;
                self.r[i] = hr;
            }
        }
        self.x[p - q] = px;
        self.z[p - q] = pz;
        self.r[p - q] = pr;
        self.x[p] = vec![false; q];
        self.z[p] = gf2::from_support(q, &[a]);
        self.r[p] = forced;
        Ok((forced, true))
    }

    /// Resets qubit `a` to `|0>` (measure, then flip if needed).
    pub fn reset(&mut self, a: usize) -> Result<(), OracleError> {
        let (out, _) = self.measure(a, Basis::Z, false)?;
        if out {
            self.apply(Gate::X(a))?;
        }
        Ok(())
    }

    /// Checks the symplectic pattern: destabilizer `i` anticommutes only
    /// with stabilizer `i`, and all other pairs commute.
    pub fn is_valid(&self) -> bool {
        let q = self.q;
        let anti = |i: usize, j: usize| {
            gf2::dot(&self.x[i], &self.z[j]) ^ gf2::dot(&self.z[i], &self.x[j])
        };
        for i in 0..2 * q {
            for j in i + 1..2 * q {
                let expect = i < q && j == i + q;
                if anti(i, j) != expect {
                    return false;
                }
            }
        }
        true
    }

    /// Stabilizer generators as signed Paulis.
    pub fn stabilizers(&self) -> Vec<Pauli> {
        (self.q..2 * self.q)
            .map(|i| Pauli {
                x: self.x[i].clone(),
                z: self.z[i].clone(),
                neg: self.r[i],
            })
            .collect()
    }
}

/// A Z-error pattern on the `n` transversal locations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPattern {
    pub support: Vec<bool>,
    pub weight: usize,
}

impl ErrorPattern {
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let support: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        Self {
            weight: mask.count_ones() as usize,
            support,
        }
    }
}

/// X-check masks and logical-X masks of a code, for fast parity tests.
pub(crate) struct CheckMasks {
    pub checks: Vec<u64>,
    pub logicals: Vec<u64>,
}

impl CheckMasks {
    pub fn new(table: &StabilizerTable) -> Self {
        assert!(table.n() < 64, "mask enumeration supports n < 64");
        Self {
            checks: table.x_rows().iter().map(|r| gf2::to_mask(r)).collect(),
            logicals: table.logical_x().iter().map(|r| gf2::to_mask(r)).collect(),
        }
    }

    pub fn syndrome(&self, e: u64) -> u64 {
        self.checks
            .iter()
            .enumerate()
            .fold(0, |s, (i, &c)| s | (((c & e).count_ones() as u64 & 1) << i))
    }

    pub fn flips_logical(&self, e: u64) -> bool {
        self.logicals.iter().any(|&l| (l & e).count_ones() % 2 == 1)
    }
}

/// Every Z-error pattern of weight at most `max_weight` that the X checks do
/// not detect, ordered by weight then by mask, with a flag telling whether it
/// flips a logical X parity. The work is `sum_w C(n, w)` pattern tests.
pub fn enumerate_undetected(table: &StabilizerTable, max_weight: usize) -> Vec<(ErrorPattern, bool)> {
    let n = table.n();
    let masks = CheckMasks::new(table);
    let mut out = Vec::new();
    for w in 1..=max_weight.min(n) {
        for e in FixedWeight::new(n, w) {
            if masks.syndrome(e) == 0 {
                out.push((ErrorPattern::from_mask(n, e), masks.flips_logical(e)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::css_code::builtin_code;
    use proptest::prelude::*;

    #[test]
    fn hadamard_gives_plus() {
        let mut t = Tableau::new(1);
        t.apply(Gate::H(0)).unwrap();
        assert_eq!(t.expectation(&Pauli::x_on(1, &[0])), Some(false));
        assert!(t.stabilizes(&Pauli::x_on(1, &[0])));
    }

    #[test]
    fn cx_conjugation() {
        let mut t = Tableau::new(2);
        t.apply(Gate::Cx(0, 1)).unwrap();
        assert!(t.stabilizes(&Pauli::z_on(2, &[0])));
        assert!(t.stabilizes(&Pauli::z_on(2, &[0, 1])));
        let mut u = Tableau::new(2);
        u.apply_all(&[Gate::H(0), Gate::Cx(0, 1)]).unwrap();
        assert!(u.stabilizes(&Pauli::x_on(2, &[0, 1])));
        assert!(!u.stabilizes(&Pauli::z_on(2, &[0])));
    }

    #[test]
    fn fresh_state_membership() {
        let t = Tableau::new(3);
        assert!(t.stabilizes(&Pauli::z_on(3, &[0])));
        assert!(!t.stabilizes(&Pauli::x_on(3, &[0])));
        assert!(!t.stabilizes(&Pauli::z_on(3, &[0]).negated()));
    }

    #[test]
    fn signs_track_paulis() {
        let mut t = Tableau::new(1);
        t.apply(Gate::X(0)).unwrap();
        assert!(t.stabilizes(&Pauli::z_on(1, &[0]).negated()));
        t.apply_all(&[Gate::X(0), Gate::H(0), Gate::S(0)]).unwrap();
        assert!(t.stabilizes(&Pauli::y_on(1, 0)));
        t.apply(Gate::Z(0)).unwrap();
        assert!(t.stabilizes(&Pauli::y_on(1, 0).negated()));
    }

    #[test]
    fn out_of_range_and_repeated_targets() {
        let mut t = Tableau::new(2);
        assert_eq!(
            t.apply(Gate::H(2)),
            Err(OracleError::OutOfRange { qubit: 2, width: 2 })
        );
        assert_eq!(t.apply(Gate::Cx(1, 1)), Err(OracleError::RepeatedTarget(1)));
    }

    #[test]
    fn forced_measurement_projects() {
        let mut t = Tableau::new(2);
        t.apply_all(&[Gate::H(0), Gate::Cx(0, 1)]).unwrap();
        let (out, random) = t.measure(0, Basis::Z, true).unwrap();
        assert!(out && random);
        assert!(t.stabilizes(&Pauli::z_on(2, &[1]).negated()));
        let (again, random) = t.measure(1, Basis::Z, false).unwrap();
        assert!(again && !random);
        assert!(t.is_valid());
    }

    #[test]
    fn x_basis_measurement() {
        let mut t = Tableau::new(1);
        let (_, random) = t.measure(0, Basis::X, true).unwrap();
        assert!(random);
        assert!(t.stabilizes(&Pauli::x_on(1, &[0]).negated()));
    }

    #[test]
    fn reed_muller_low_weight_patterns() {
        let t = builtin_code("reed_muller15").unwrap();
        assert!(enumerate_undetected(&t, 0).is_empty());
        assert!(enumerate_undetected(&t, 2).is_empty());
        let w3 = enumerate_undetected(&t, 3);
        assert_eq!(w3.len(), 35);
        assert!(w3.iter().all(|(e, logical)| *logical && e.weight == 3));
    }

    #[test]
    fn steane_weight_three() {
        let t = builtin_code("steane7").unwrap();
        let w3 = enumerate_undetected(&t, 3);
        assert_eq!(w3.len(), 7);
        assert!(w3.iter().all(|(_, l)| *l));
    }

    #[test]
    fn no_logical_below_distance() {
        for name in ["steane7", "reed_muller15", "rotated_surface(3)", "rotated_surface(5)"] {
            let t = builtin_code(name).unwrap();
            let found = enumerate_undetected(&t, t.d() - 1);
            assert!(found.iter().all(|(_, l)| !l), "{name}");
        }
    }

    #[test]
    fn enumeration_is_prefix_monotone() {
        let t = builtin_code("reed_muller15").unwrap();
        let a = enumerate_undetected(&t, 3);
        let b = enumerate_undetected(&t, 4);
        assert_eq!(&b[..a.len()], &a[..]);
        assert!(b.len() > a.len());
    }

    fn arb_gate(q: usize) -> impl Strategy<Value = Gate> {
        (0..6u8, 0..q, 1..q).prop_map(move |(k, a, off)| {
            let b = (a + off) % q;
            match k {
                0 => Gate::H(a),
                1 => Gate::S(a),
                2 => Gate::Cx(a, b),
                3 => Gate::Cz(a, b),
                4 => Gate::X(a),
                _ => Gate::Z(a),
            }
        })
    }

    proptest! {
        #[test]
        fn gates_preserve_symplectic_form(
            gates in (2usize..=16).prop_flat_map(|q| (Just(q), prop::collection::vec(arb_gate(q), 100)))
        ) {
            let (q, gates) = gates;
            let mut t = Tableau::new(q);
            for g in gates {
                t.apply(g).unwrap();
                prop_assert!(t.is_valid());
            }
            for s in t.stabilizers() {
                prop_assert!(t.stabilizes(&s));
                prop_assert!(!t.stabilizes(&s.clone().negated()));
            }
        }

        #[test]
        fn generator_products_are_stabilized(
            gates in prop::collection::vec(arb_gate(6), 40),
            pick in prop::collection::vec(any::<bool>(), 6)
        ) {
            let mut t = Tableau::new(6);
            t.apply_all(&gates).unwrap();
            let stabs = t.stabilizers();
            let mut acc = Pauli::identity(6);
            for (s, &take) in stabs.iter().zip(&pick) {
                if take {
                    mul_into(&mut acc.x, &mut acc.z, &mut acc.neg, &s.x, &s.z, s.neg);
                }
            }
            prop_assert!(t.stabilizes(&acc));
        }
    }
}
