//! Distillation circuits built from CSS tables: flat encoder, the pipelined
//! feed/buffer rearrangement, and exact acceptance / output-error analysis.
//!
//! Register layout: auxiliary qubits occupy `0..k`, code qubit `i` sits at
//! `k + i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::css_code::{Basis, StabilizerTable};
use crate::gf2::{self, FixedWeight};
use crate::stab_oracle::{CheckMasks, Gate, Pauli, Tableau};

#[derive(Debug, Error, PartialEq)]
pub enum DistillError {
    #[error("code table is not in standard form")]
    NotStandardForm,
    #[error("gate {gate} is not supported transversally by this code")]
    Unsupported { gate: TargetGate },
    #[error("code has no X stabilizers; nothing to distill")]
    NoXChecks,
    #[error("error rate {0} outside [0, 0.5]")]
    BadRate(f64),
    #[error("exhaustive analysis limited to n <= {max}, got n = {n}; pass a truncation weight")]
    TooLarge { n: usize, max: usize },
    #[error("cannot parse `{0}`")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetGate {
    T,
    S,
    Bell,
}

impl fmt::Display for TargetGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TargetGate::T => "T",
            TargetGate::S => "S",
            TargetGate::Bell => "Bell",
        };
        f.write_str(s)
    }
}

impl FromStr for TargetGate {
    type Err = DistillError;
    fn from_str(s: &str) -> Result<Self, DistillError> {
        match s.to_ascii_lowercase().as_str() {
            "t" => Ok(Self::T),
            "s" => Ok(Self::S),
            "bell" | "identity" | "id" => Ok(Self::Bell),
            _ => Err(DistillError::Parse(s.into())),
        }
    }
}

/// Classical postprocessing of the transversal X-basis record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Postprocess {
    /// Reject on any nonzero syndrome.
    Detection,
    /// Correct syndromes whose minimum-weight coset leader has weight `<= t`,
    /// reject the rest.
    Correction(usize),
}

impl FromStr for Postprocess {
    type Err = DistillError;
    fn from_str(s: &str) -> Result<Self, DistillError> {
        let s = s.trim().to_ascii_lowercase();
        if s == "detect" || s == "detection" {
            return Ok(Self::Detection);
        }
        s.strip_prefix("correct:")
            .or_else(|| s.strip_prefix("correction:"))
            .and_then(|t| t.parse().ok())
            .map(Self::Correction)
            .ok_or(DistillError::Parse(s))
    }
}

/// One control fanning out to every other qubit in the support of a row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiCx {
    pub control: usize,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillationCircuit {
    pub width: usize,
    pub n: usize,
    pub k: usize,
    pub target_gate: TargetGate,
    /// Qubits initialised in `|+>`: the auxiliaries and the X pivots.
    pub plus_qubits: Vec<usize>,
    /// One layer per X generator, then one per logical X.
    pub prep_layers: Vec<MultiCx>,
    /// Label of the noisy gate on each code qubit (empty for Bell).
    pub transversal_layer: Vec<String>,
    pub measurement_basis: Basis,
    pub postprocess: Postprocess,
    #[serde(skip)]
    code: Option<StabilizerTable>,
}

impl DistillationCircuit {
    pub fn prep_depth(&self) -> usize {
        self.prep_layers.len()
    }

    pub fn code(&self) -> &StabilizerTable {
        self.code.as_ref().expect("circuit built from a table")
    }

    /// Clifford gates of the flat encoder.
    pub fn prep_gates(&self) -> Vec<Gate> {
        let mut gates: Vec<Gate> = self.plus_qubits.iter().map(|&q| Gate::H(q)).collect();
        for layer in &self.prep_layers {
            gates.extend(layer.targets.iter().map(|&t| Gate::Cx(layer.control, t)));
        }
        gates
    }

    /// Flat order including the transversal layer when it is Clifford.
    pub fn flat_gates(&self) -> Vec<Gate> {
        let mut gates = self.prep_gates();
        if self.target_gate == TargetGate::S {
            gates.extend((0..self.n).map(|i| Gate::S(self.k + i)));
        }
        gates
    }

    /// Stabilizers the prepared state must have: every code generator on the
    /// code register plus `X_a Xbar_j` and `Z_a Zbar_j` for each auxiliary.
    pub fn expected_stabilizers(&self) -> Vec<Pauli> {
        let code = self.code();
        let w = self.width;
        let mut out = Vec::new();
        for r in code.x_rows() {
            out.push(Pauli::from_parts(r.clone(), vec![false; self.n]).embed(w, self.k));
        }
        for r in code.z_rows() {
            out.push(Pauli::from_parts(vec![false; self.n], r.clone()).embed(w, self.k));
        }
        for j in 0..self.k {
            let mut xp = Pauli::from_parts(code.logical_x()[j].clone(), vec![false; self.n]).embed(w, self.k);
            xp.x[j] = true;
            let mut zp = Pauli::from_parts(vec![false; self.n], code.logical_z()[j].clone()).embed(w, self.k);
            zp.z[j] = true;
            out.push(xp);
            out.push(zp);
        }
        out
    }

    /// Runs the encoder on the oracle and checks every expected stabilizer.
    pub fn verify_prep(&self) -> bool {
        let mut t = Tableau::new(self.width);
        t.apply_all(&self.prep_gates()).expect("gates in range");
        self.expected_stabilizers().iter().all(|p| t.stabilizes(p))
    }
}

/// Builds the flat distillation circuit for `code` in standard form.
pub fn build_circuit(
    code: &StabilizerTable,
    gate: TargetGate,
    postprocess: Postprocess,
) -> Result<DistillationCircuit, DistillError> {
    if !code.is_standard_form() {
        return Err(DistillError::NotStandardForm);
    }
    if code.m_x() == 0 {
        return Err(DistillError::NoXChecks);
    }
    let ok = match gate {
        TargetGate::T => code.is_triorthogonal(),
        TargetGate::S => code.supports_transversal_s(),
        TargetGate::Bell => true,
    };
    if !ok {
        return Err(DistillError::Unsupported { gate });
    }
    let (n, k) = (code.n(), code.k());
    let pivots = code.x_pivots();
    let mut plus_qubits: Vec<usize> = (0..k).collect();
    plus_qubits.extend(pivots.iter().map(|p| k + p));
    let mut prep_layers = Vec::new();
    for (row, &p) in code.x_rows().iter().zip(&pivots) {
        prep_layers.push(MultiCx {
            control: k + p,
            targets: gf2::support(row).into_iter().filter(|&i| i != p).map(|i| k + i).collect(),
        });
    }
    for (j, lx) in code.logical_x().iter().enumerate() {
        prep_layers.push(MultiCx {
            control: j,
            targets: gf2::support(lx).into_iter().map(|i| k + i).collect(),
        });
    }
    let label = match gate {
        TargetGate::T => Some("T"),
        TargetGate::S => Some("S"),
        TargetGate::Bell => None,
    };
    Ok(DistillationCircuit {
        width: n + k,
        n,
        k,
        target_gate: gate,
        plus_qubits,
        prep_layers,
        transversal_layer: label.map_or(vec![], |l| vec![l.to_string(); n]),
        measurement_basis: Basis::X,
        postprocess,
        code: Some(code.clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum PipelineEvent {
    FeedInit { qubit: usize },
    BufferCx { feed: usize, buffer_index: usize },
    Advance { qubit: usize },
    MeasureTransversal { qubit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelinedSchedule {
    /// Register qubit held by each buffer cell: auxiliaries, then X pivots.
    pub buffer: Vec<usize>,
    pub buffer_size: usize,
    pub feed: Vec<usize>,
    pub feed_count: usize,
    pub steps: Vec<PipelineEvent>,
    pub routing_rounds: usize,
    pub transversal_s: bool,
}

impl PipelinedSchedule {
    /// Clifford gate order realised by the pipeline (measurements omitted so
    /// the final tableau can be compared with the flat order).
    pub fn gates(&self) -> Vec<Gate> {
        let mut g: Vec<Gate> = self.buffer.iter().map(|&q| Gate::H(q)).collect();
        for ev in &self.steps {
            match *ev {
                PipelineEvent::BufferCx { feed, buffer_index } => {
                    g.push(Gate::Cx(self.buffer[buffer_index], feed))
                }
                PipelineEvent::MeasureTransversal { qubit } if self.transversal_s => {
                    g.push(Gate::S(qubit))
                }
                _ => {}
            }
        }
        g
    }
}

/// Rearranges the flat circuit into feed cells streaming past a stationary
/// buffer. Each feed qubit is initialised, receives one CX from every
/// buffer cell whose row covers it, advances, and is measured; the buffer's
/// code qubits are measured last.
pub fn pipeline(circ: &DistillationCircuit) -> PipelinedSchedule {
    let k = circ.k;
    let buffer: Vec<usize> = circ.prep_layers.iter().map(|l| l.control).collect();
    // logical layers come last in prep_layers; reorder so auxiliaries lead
    let m_x = buffer.len() - k;
    let buffer: Vec<usize> = buffer[m_x..].iter().chain(&buffer[..m_x]).copied().collect();
    let layer_of = |q: usize| circ.prep_layers.iter().find(|l| l.control == q).unwrap();
    let feed: Vec<usize> = (k..k + circ.n).filter(|q| !buffer.contains(q)).collect();
    let mut steps = Vec::new();
    for &f in &feed {
        steps.push(PipelineEvent::FeedInit { qubit: f });
        for (b, &bq) in buffer.iter().enumerate() {
            if layer_of(bq).targets.contains(&f) {
                steps.push(PipelineEvent::BufferCx { feed: f, buffer_index: b });
            }
        }
        steps.push(PipelineEvent::Advance { qubit: f });
        steps.push(PipelineEvent::MeasureTransversal { qubit: f });
    }
    for &bq in &buffer {
        if bq >= k {
            steps.push(PipelineEvent::MeasureTransversal { qubit: bq });
        }
    }
    PipelinedSchedule {
        buffer_size: buffer.len(),
        feed_count: feed.len(),
        buffer,
        feed,
        steps,
        routing_rounds: circ.n + circ.k,
        transversal_s: circ.target_gate == TargetGate::S,
    }
}

/// Replays the flat and pipelined orders on the oracle and compares the
/// resulting tableaux exactly.
pub fn pipeline_equivalent(circ: &DistillationCircuit, sched: &PipelinedSchedule) -> bool {
    let mut a = Tableau::new(circ.width);
    let mut b = Tableau::new(circ.width);
    a.apply_all(&circ.flat_gates()).is_ok() && b.apply_all(&sched.gates()).is_ok() && a == b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillationAnalysis {
    pub accept_prob: f64,
    pub out_error: f64,
    pub leading_coeff: f64,
    pub leading_power: usize,
    /// Probability mass of patterns above the enumeration cutoff; zero when
    /// the enumeration was exhaustive.
    pub remainder_bound: f64,
    pub max_weight: usize,
}

/// Largest `n` analysed exhaustively without an explicit cutoff.
pub const EXHAUSTIVE_LIMIT: usize = 24;

fn weight_prob(n: usize, w: usize, p: f64) -> f64 {
    p.powi(w as i32) * (1.0 - p).powi((n - w) as i32)
}

/// Exhaustive analysis (all `2^n` patterns).
pub fn analyze(code: &StabilizerTable, p: f64, mode: Postprocess) -> Result<DistillationAnalysis, DistillError> {
    analyze_truncated(code, p, mode, None)
}

/// Acceptance and output error under independent Z flips of probability `p`
/// at each transversal location. With `max_weight = Some(W)` only patterns of
/// weight `<= W` are enumerated and the neglected mass is reported.
pub fn analyze_truncated(
    code: &StabilizerTable,
    p: f64,
    mode: Postprocess,
    max_weight: Option<usize>,
) -> Result<DistillationAnalysis, DistillError> {
    if !(0.0..=0.5).contains(&p) || p.is_nan() {
        return Err(DistillError::BadRate(p));
    }
    let n = code.n();
    let top = match max_weight {
        Some(w) => w.min(n),
        None if n > EXHAUSTIVE_LIMIT => {
            return Err(DistillError::TooLarge {
                n,
                max: EXHAUSTIVE_LIMIT,
            })
        }
        None => n,
    };
    let masks = CheckMasks::new(code);
    let t = match mode {
        Postprocess::Detection => 0,
        Postprocess::Correction(t) => t,
    };
    // minimum-weight coset leaders of weight <= t; first hit wins, so ties go
    // to the lowest mask
    let mut leaders: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
    for w in 0..=t.min(n) {
        for e in FixedWeight::new(n, w) {
            leaders.entry(masks.syndrome(e)).or_insert(e);
        }
    }
    let mut accepted = vec![0u64; top + 1];
    let mut failed = vec![0u64; top + 1];
    for w in 0..=top {
        for e in FixedWeight::new(n, w) {
            if let Some(&l) = leaders.get(&masks.syndrome(e)) {
                accepted[w] += 1;
                if masks.flips_logical(e ^ l) {
                    failed[w] += 1;
                }
            }
        }
    }
    let accept: f64 = (0..=top).map(|w| accepted[w] as f64 * weight_prob(n, w, p)).sum();
    let bad: f64 = (0..=top).map(|w| failed[w] as f64 * weight_prob(n, w, p)).sum();
    let covered: f64 = (0..=top).map(|w| gf2::binomial(n, w) * weight_prob(n, w, p)).sum();
    let (leading_power, leading_coeff) = (0..=top)
        .find(|&w| failed[w] > 0)
        .map_or((0, 0.0), |w| (w, failed[w] as f64));
    Ok(DistillationAnalysis {
        accept_prob: accept,
        out_error: if accept > 0.0 { bad / accept } else { 0.0 },
        leading_coeff,
        leading_power,
        remainder_bound: (1.0 - covered).max(0.0),
        max_weight: top,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::css_code::builtin_code;

    fn circ(name: &str, g: TargetGate) -> DistillationCircuit {
        build_circuit(&builtin_code(name).unwrap(), g, Postprocess::Detection).unwrap()
    }

    #[test]
    fn reed_muller_t_circuit_shape() {
        let c = circ("reed_muller15", TargetGate::T);
        assert_eq!((c.width, c.prep_depth()), (16, 5));
        assert_eq!(c.transversal_layer.len(), 15);
        assert!(c.transversal_layer.iter().all(|l| l == "T"));
        assert_eq!(c.measurement_basis, Basis::X);
        assert!(c.verify_prep());
    }

    #[test]
    fn steane_bell_circuit() {
        let c = circ("steane7", TargetGate::Bell);
        assert_eq!((c.width, c.prep_depth()), (8, 4));
        assert!(c.transversal_layer.is_empty());
        assert!(c.verify_prep());
    }

    #[test]
    fn layers_follow_rows() {
        let code = builtin_code("reed_muller15").unwrap();
        let c = circ("reed_muller15", TargetGate::T);
        for (layer, row) in c.prep_layers.iter().zip(code.x_rows()) {
            let mut sup: Vec<usize> = layer.targets.iter().map(|t| t - 1).collect();
            sup.push(layer.control - 1);
            sup.sort();
            assert_eq!(sup, gf2::support(row));
        }
    }

    #[test]
    fn unsupported_pairs_rejected() {
        let steane = builtin_code("steane7").unwrap();
        assert_eq!(
            build_circuit(&steane, TargetGate::T, Postprocess::Detection).unwrap_err(),
            DistillError::Unsupported { gate: TargetGate::T }
        );
        let raw = crate::css_code::reed_muller15_construction();
        assert_eq!(
            build_circuit(&raw, TargetGate::T, Postprocess::Detection).unwrap_err(),
            DistillError::NotStandardForm
        );
    }

    #[test]
    fn pipeline_shapes() {
        let s = pipeline(&circ("reed_muller15", TargetGate::T));
        assert_eq!((s.buffer_size, s.feed_count, s.routing_rounds), (5, 11, 16));
        let s = pipeline(&circ("steane7", TargetGate::S));
        assert_eq!((s.buffer_size, s.feed_count, s.routing_rounds), (4, 4, 8));
    }

    #[test]
    fn pipeline_matches_flat() {
        for (name, g) in [
            ("reed_muller15", TargetGate::T),
            ("steane7", TargetGate::S),
            ("steane7", TargetGate::Bell),
            ("rotated_surface(3)", TargetGate::Bell),
        ] {
            let c = circ(name, g);
            assert!(pipeline_equivalent(&c, &pipeline(&c)), "{name}");
        }
    }

    #[test]
    fn pipeline_audit() {
        let c = circ("reed_muller15", TargetGate::T);
        let s = pipeline(&c);
        for &f in &s.feed {
            let inits = s.steps.iter().filter(|e| **e == PipelineEvent::FeedInit { qubit: f }).count();
            let meas = s
                .steps
                .iter()
                .filter(|e| **e == PipelineEvent::MeasureTransversal { qubit: f })
                .count();
            assert_eq!((inits, meas), (1, 1));
        }
        let cx = s.steps.iter().filter(|e| matches!(e, PipelineEvent::BufferCx { .. })).count();
        let flat: usize = c.prep_layers.iter().map(|l| l.targets.len()).sum();
        assert_eq!(cx, flat);
    }

    #[test]
    fn reed_muller_detection_leading_term() {
        let code = builtin_code("reed_muller15").unwrap();
        let a = analyze(&code, 1e-4, Postprocess::Detection).unwrap();
        assert_eq!((a.leading_power, a.leading_coeff), (3, 35.0));
        assert!((a.out_error / 3.5e-11 - 1.0).abs() < 0.01, "{}", a.out_error);
        assert_eq!(a.remainder_bound, 0.0);
    }

    #[test]
    fn reed_muller_correction() {
        let code = builtin_code("reed_muller15").unwrap();
        let a = analyze(&code, 1e-3, Postprocess::Correction(1)).unwrap();
        assert_eq!((a.leading_power, a.leading_coeff), (2, 105.0));
        assert!((a.accept_prob - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rate() {
        for name in ["steane7", "reed_muller15"] {
            let a = analyze(&builtin_code(name).unwrap(), 0.0, Postprocess::Detection).unwrap();
            assert_eq!((a.accept_prob, a.out_error), (1.0, 0.0));
        }
    }

    #[test]
    fn bad_rate_and_size() {
        let code = builtin_code("steane7").unwrap();
        assert_eq!(
            analyze(&code, 0.6, Postprocess::Detection).unwrap_err(),
            DistillError::BadRate(0.6)
        );
        let big = builtin_code("rotated_surface(5)").unwrap();
        assert!(matches!(
            analyze(&big, 0.01, Postprocess::Detection),
            Err(DistillError::TooLarge { .. })
        ));
        let tr = analyze_truncated(&big, 0.001, Postprocess::Detection, Some(4)).unwrap();
        assert!(tr.remainder_bound > 0.0 && tr.remainder_bound < 1e-6);
    }

    #[test]
    fn truncation_bounds_hold() {
        let code = builtin_code("reed_muller15").unwrap();
        let full = analyze(&code, 0.05, Postprocess::Detection).unwrap();
        let tr = analyze_truncated(&code, 0.05, Postprocess::Detection, Some(5)).unwrap();
        assert!(tr.accept_prob <= full.accept_prob);
        assert!(full.accept_prob <= tr.accept_prob + tr.remainder_bound + 1e-15);
    }

    #[test]
    fn postprocess_parsing() {
        assert_eq!("detect".parse::<Postprocess>().unwrap(), Postprocess::Detection);
        assert_eq!("correct:1".parse::<Postprocess>().unwrap(), Postprocess::Correction(1));
        assert!("correct:x".parse::<Postprocess>().is_err());
        assert_eq!("bell".parse::<TargetGate>().unwrap(), TargetGate::Bell);
    }

    #[test]
    fn first_order_expansion() {
        let code = builtin_code("reed_muller15").unwrap();
        for p in [1e-5, 1e-4, 1e-3] {
            let a = analyze(&code, p, Postprocess::Detection).unwrap();
            let lead = a.leading_coeff * p.powi(3);
            assert!((a.out_error - lead).abs() <= 200.0 * p.powi(4), "p={p}");
        }
    }

    #[test]
    fn acceptance_monotone() {
        let code = builtin_code("reed_muller15").unwrap();
        let mut last = 1.0;
        for i in 0..=100 {
            let a = analyze(&code, i as f64 * 1e-3, Postprocess::Detection).unwrap();
            assert!(a.accept_prob <= last + 1e-15);
            last = a.accept_prob;
        }
    }
}
