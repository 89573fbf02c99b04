use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CompileError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CircuitGate {
    H(usize),
    S(usize),
    T(usize),
    Cx(usize, usize),
    Mx(usize),
    Mz(usize),
    /// CX across modules through a Bell pair.
    RemoteCx(usize, usize),
}

impl CircuitGate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CircuitGate::H(q) | CircuitGate::S(q) | CircuitGate::T(q) | CircuitGate::Mx(q) | CircuitGate::Mz(q) => {
                vec![q]
            }
            CircuitGate::Cx(a, b) | CircuitGate::RemoteCx(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for CircuitGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CircuitGate::H(q) => write!(f, "H {q}"),
            CircuitGate::S(q) => write!(f, "S {q}"),
            CircuitGate::T(q) => write!(f, "T {q}"),
            CircuitGate::Cx(a, b) => write!(f, "CX {a} {b}"),
            CircuitGate::Mx(q) => write!(f, "MX {q}"),
            CircuitGate::Mz(q) => write!(f, "MZ {q}"),
            CircuitGate::RemoteCx(a, b) => write!(f, "RCX {a} {b}"),
        }
    }
}

/// A validated circuit. Depth and T count are always recomputed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogicalCircuit {
    width: usize,
    gates: Vec<CircuitGate>,
    layer_of: Vec<usize>,
    depth: usize,
    t_count: usize,
}

impl LogicalCircuit {
    pub fn new(width: usize, gates: Vec<CircuitGate>) -> Result<Self, CompileError> {
        for (i, g) in gates.iter().enumerate() {
            let qs = g.qubits();
            if let Some(&q) = qs.iter().find(|&&q| q >= width) {
                return Err(CompileError::QubitOutOfRange { line: i + 1, qubit: q, width });
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(CompileError::Parse { line: i + 1, msg: format!("`{g}` uses one qubit twice") });
            }
        }
        // ASAP layering: a gate goes one layer after the latest gate on any
        // of its qubits; T gates on distinct qubits share layers freely
        let mut front = vec![0usize; width];
        let mut layer_of = Vec::with_capacity(gates.len());
        for g in &gates {
            let qs = g.qubits();
            let l = qs.iter().map(|&q| front[q]).max().unwrap_or(0);
            for q in qs {
                front[q] = l + 1;
            }
            layer_of.push(l);
        }
        let depth = front.iter().copied().max().unwrap_or(0);
        let t_count = gates.iter().filter(|g| matches!(g, CircuitGate::T(_))).count();
        Ok(Self { width, gates, layer_of, depth, t_count })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[CircuitGate] {
        &self.gates
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn t_count(&self) -> usize {
        self.t_count
    }

    pub fn layer_of(&self, gate: usize) -> usize {
        self.layer_of[gate]
    }

    /// Gate indices grouped by ASAP layer, in program order within a layer.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.depth];
        for (i, &l) in self.layer_of.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn shape(&self) -> CircuitShape {
        CircuitShape { width: self.width, depth: self.depth as u64, t_count: self.t_count as u64 }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.width);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }
}

/// Parses one gate per line. `#` starts a comment. An optional
/// `qubits W` line fixes the width; otherwise it is one past the largest
/// index used.
pub fn parse_circuit(text: &str) -> Result<LogicalCircuit, CompileError> {
    let mut declared: Option<usize> = None;
    let mut gates = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        let err = |msg: String| CompileError::Parse { line, msg };
        let idx = |k: usize| -> Result<usize, CompileError> {
            toks.get(k)
                .ok_or_else(|| err(format!("missing operand in `{l}`")))?
                .parse()
                .map_err(|_| err(format!("bad qubit index in `{l}`")))
        };
        let name = toks[0].to_ascii_uppercase();
        let arity = match name.as_str() {
            "QUBITS" | "H" | "S" | "T" | "MX" | "MZ" | "M" => 1,
            "CX" | "CNOT" | "RCX" => 2,
            _ => return Err(err(format!("unknown gate `{}`", toks[0]))),
        };
        if toks.len() != arity + 1 {
            return Err(err(format!("`{}` takes {arity} operand(s)", toks[0])));
        }
        let g = match name.as_str() {
            "QUBITS" => {
                if declared.is_some() || !gates.is_empty() {
                    return Err(err("`qubits` must come first and only once".into()));
                }
                declared = Some(idx(1)?);
                continue;
            }
            "H" => CircuitGate::H(idx(1)?),
            "S" => CircuitGate::S(idx(1)?),
            "T" => CircuitGate::T(idx(1)?),
            "MX" => CircuitGate::Mx(idx(1)?),
            "MZ" | "M" => CircuitGate::Mz(idx(1)?),
            "RCX" => CircuitGate::RemoteCx(idx(1)?, idx(2)?),
            _ => CircuitGate::Cx(idx(1)?, idx(2)?),
        };
        gates.push(g);
        lines.push(line);
    }
    let width = declared.unwrap_or_else(|| gates.iter().flat_map(|g| g.qubits()).max().map_or(0, |m| m + 1));
    LogicalCircuit::new(width, gates).map_err(|e| match e {
        CompileError::QubitOutOfRange { line, qubit, width } => {
            CompileError::QubitOutOfRange { line: lines[line - 1], qubit, width }
        }
        CompileError::Parse { line, msg } => CompileError::Parse { line: lines[line - 1], msg },
        e => e,
    })
}

/// Width, depth and T count without the gate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitShape {
    pub width: usize,
    pub depth: u64,
    pub t_count: u64,
}

/// Synthetic workload: `t_count` T gates spread `t_per_layer` to a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub width: usize,
    pub t_count: u64,
    pub t_per_layer: u64,
}

impl Workload {
    pub fn shape(&self) -> CircuitShape {
        CircuitShape {
            width: self.width,
            depth: self.t_count.div_ceil(self.t_per_layer.max(1)),
            t_count: self.t_count,
        }
    }

    /// T demand of each layer in order.
    pub fn layer_t(&self) -> impl Iterator<Item = u64> + '_ {
        let per = self.t_per_layer.max(1);
        let depth = self.shape().depth;
        (0..depth).map(move |l| per.min(self.t_count - l * per))
    }
}

fn parse_count(key: &str, v: &str) -> Result<u64, String> {
    let x: f64 = v.parse().map_err(|_| format!("bad value `{v}` for {key}"))?;
    if !(x >= 0.0) || x.fract() != 0.0 || x > 1e18 {
        return Err(format!("{key} must be a non-negative integer, got `{v}`"));
    }
    Ok(x as u64)
}

impl FromStr for Workload {
    type Err = String;

    /// `W=100 tcount=1e8 tperlayer=5`, separated by spaces or commas.
    fn from_str(s: &str) -> Result<Self, String> {
        let (mut w, mut t, mut tpl) = (None, None, None);
        for kv in s.split([' ', ',']).filter(|x| !x.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
            match k.to_ascii_lowercase().as_str() {
                "w" | "width" => w = Some(parse_count(k, v)? as usize),
                "tcount" | "t_count" => t = Some(parse_count(k, v)?),
                "tperlayer" | "t_per_layer" => tpl = Some(parse_count(k, v)?),
                _ => return Err(format!("unknown workload key `{k}`")),
            }
        }
        let t_per_layer = tpl.unwrap_or(1);
        if t_per_layer == 0 {
            return Err("tperlayer must be positive".into());
        }
        Ok(Workload {
            width: w.ok_or("missing W")?,
            t_count: t.ok_or("missing tcount")?,
            t_per_layer,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_circuit() {
        let c = parse_circuit("H 0\nCX 0 1\nT 1\nMZ 1").unwrap();
        assert_eq!((c.width(), c.t_count(), c.depth()), (2, 1, 4));
        assert_eq!(c.layers(), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn empty_and_comments() {
        let c = parse_circuit("").unwrap();
        assert_eq!((c.width(), c.depth()), (0, 0));
        let c = parse_circuit("# header\nqubits 4\n\nh 0 # trailing\nt 3\n").unwrap();
        assert_eq!((c.width(), c.depth(), c.t_count()), (4, 1, 1));
    }

    #[test]
    fn parallel_gates_share_layers() {
        let c = parse_circuit("T 0\nT 1\nT 2\nCX 0 1\nS 2").unwrap();
        assert_eq!(c.depth(), 2);
        assert_eq!(c.layers()[0], vec![0, 1, 2]);
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(
            parse_circuit("H 0\n\nFOO 1").unwrap_err(),
            CompileError::Parse { line: 3, msg: "unknown gate `FOO`".into() }
        );
        assert!(matches!(
            parse_circuit("qubits 2\nH 0\n# c\nCX 0 5"),
            Err(CompileError::QubitOutOfRange { line: 4, qubit: 5, width: 2 })
        ));
        assert!(matches!(parse_circuit("CX 1 1"), Err(CompileError::Parse { line: 1, .. })));
        assert!(matches!(parse_circuit("H"), Err(CompileError::Parse { line: 1, .. })));
    }

    #[test]
    fn text_round_trip() {
        let c = parse_circuit("H 0\nCX 0 2\nRCX 1 2\nMX 0\nS 1").unwrap();
        assert_eq!(parse_circuit(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn synthetic_workload() {
        let w: Workload = "W=100 tcount=1e8 tperlayer=5".parse().unwrap();
        assert_eq!(w.shape(), CircuitShape { width: 100, depth: 20_000_000, t_count: 100_000_000 });
        let w: Workload = "W=3,tcount=7,tperlayer=3".parse().unwrap();
        assert_eq!(w.layer_t().collect::<Vec<_>>(), vec![3, 3, 1]);
        assert!("W=3 tcount=1.5".parse::<Workload>().is_err());
        assert!("W=3 tcount=4 tperlayer=0".parse::<Workload>().is_err());
    }
}
