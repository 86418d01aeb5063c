//! Circuit ensemble: grid geometry, brickwork layout, Haar-random gate
//! sampling and circuit construction.
//!
//! The distribution is parameterized by (geometry, depth, gate distribution,
//! master seed). Each gate slot draws from its own derived RNG stream, so a
//! circuit is a pure function of the spec and can be sampled slot-by-slot in
//! any order.

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::rng::{derive_stream_seed, Xoshiro256StarStar};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

const UNITARITY_TOL: f64 = 1e-12;

// tags separating gate substreams sharing a (layer, index) pair
const STREAM_TAG_TWO_QUBIT: u64 = 0;
const STREAM_TAG_SINGLE_QUBIT: u64 = 1;

/// Rectangular qubit grid. Site (r, c) is 1-based and maps to linear index
/// (r-1)*cols + (c-1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridGeometry {
    rows: usize,
    cols: usize,
}

impl GridGeometry {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGeometry(format!(
                "rows and cols must be >= 1, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_qubits(&self) -> usize {
        self.rows * self.cols
    }

    /// Linear index of 1-based (row, col).
    pub fn index(&self, row: usize, col: usize) -> Result<usize> {
        if row < 1 || row > self.rows || col < 1 || col > self.cols {
            return Err(Error::InvalidGeometry(format!(
                "site ({row},{col}) outside {}x{} grid",
                self.rows, self.cols
            )));
        }
        Ok((row - 1) * self.cols + (col - 1))
    }

    /// 1-based (row, col) of a linear index.
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.cols + 1, index % self.cols + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleQubitGate(pub [[C64; 2]; 2]);

#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitGate(pub [[C64; 4]; 4]);

fn max_residual<const N: usize>(m: &[[C64; N]; N]) -> f64 {
    // max-entry norm of M^dag M - I
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..N {
                acc += m[k][i].conj() * m[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

fn matmul<const N: usize>(a: &[[C64; N]; N], b: &[[C64; N]; N]) -> [[C64; N]; N] {
    let mut out = [[C64::new(0.0, 0.0); N]; N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..N {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn dagger<const N: usize>(m: &[[C64; N]; N]) -> [[C64; N]; N] {
    let mut out = [[C64::new(0.0, 0.0); N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = m[j][i].conj();
        }
    }
    out
}

impl SingleQubitGate {
    pub fn identity() -> Self {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        Self([[o, z], [z, o]])
    }

    pub fn dagger(&self) -> Self {
        Self(dagger(&self.0))
    }

    pub fn unitarity_residual(&self) -> f64 {
        max_residual(&self.0)
    }
}

impl TwoQubitGate {
    pub fn identity() -> Self {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = C64::new(1.0, 0.0);
        }
        Self(m)
    }

    pub fn swap() -> Self {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        // basis index = 2*bit_a + bit_b
        Self([
            [o, z, z, z],
            [z, z, o, z],
            [z, o, z, z],
            [z, z, z, o],
        ])
    }

    pub fn dagger(&self) -> Self {
        Self(dagger(&self.0))
    }

    pub fn unitarity_residual(&self) -> f64 {
        max_residual(&self.0)
    }

    /// Matrix product self * rhs (rhs acts first).
    pub fn compose(&self, rhs: &TwoQubitGate) -> TwoQubitGate {
        TwoQubitGate(matmul(&self.0, &rhs.0))
    }

    /// Tensor product with the gate basis convention index = 2*bit_a + bit_b:
    /// `a` acts on the high bit, `b` on the low bit.
    pub fn kron(a: &SingleQubitGate, b: &SingleQubitGate) -> TwoQubitGate {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for ia in 0..2 {
            for ib in 0..2 {
                for ja in 0..2 {
                    for jb in 0..2 {
                        m[2 * ia + ib][2 * ja + jb] = a.0[ia][ja] * b.0[ib][jb];
                    }
                }
            }
        }
        TwoQubitGate(m)
    }
}

/// Haar-random unitary via complex Ginibre + QR. Modified Gram-Schmidt with
/// one re-orthogonalization pass; the resulting R has a positive real
/// diagonal, which fixes the phase ambiguity and yields the Haar measure.
fn haar_unitary<const N: usize>(rng: &mut Xoshiro256StarStar) -> [[C64; N]; N] {
    let mut g = [[C64::new(0.0, 0.0); N]; N];
    for row in g.iter_mut() {
        for entry in row.iter_mut() {
            *entry = rng.next_complex_normal();
        }
    }
    // orthonormalize columns
    let mut q = [[C64::new(0.0, 0.0); N]; N];
    for j in 0..N {
        let mut v = [C64::new(0.0, 0.0); N];
        for i in 0..N {
            v[i] = g[i][j];
        }
        for _pass in 0..2 {
            for prev in 0..j {
                let mut r = C64::new(0.0, 0.0);
                for i in 0..N {
                    r += q[i][prev].conj() * v[i];
                }
                for i in 0..N {
                    v[i] -= r * q[i][prev];
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..N {
            q[i][j] = v[i] / norm;
        }
    }
    q
}

pub fn sample_haar_two_qubit_gate(rng: &mut Xoshiro256StarStar) -> TwoQubitGate {
    TwoQubitGate(haar_unitary::<4>(rng))
}

pub fn sample_haar_single_qubit_gate(rng: &mut Xoshiro256StarStar) -> SingleQubitGate {
    SingleQubitGate(haar_unitary::<2>(rng))
}

/// One brickwork phase; the cycle is [HEven, VEven, HOdd, VOdd].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrickworkPhase {
    HorizontalEven,
    VerticalEven,
    HorizontalOdd,
    VerticalOdd,
}

impl BrickworkPhase {
    pub fn for_layer(layer: usize) -> Self {
        match layer % 4 {
            0 => BrickworkPhase::HorizontalEven,
            1 => BrickworkPhase::VerticalEven,
            2 => BrickworkPhase::HorizontalOdd,
            _ => BrickworkPhase::VerticalOdd,
        }
    }
}

/// Site pairs coupled by one layer of the given phase. Open boundaries; the
/// list may be empty.
pub fn layer_pattern(geometry: &GridGeometry, phase: BrickworkPhase) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let (rows, cols) = (geometry.rows(), geometry.cols());
    match phase {
        BrickworkPhase::HorizontalEven | BrickworkPhase::HorizontalOdd => {
            let start = if phase == BrickworkPhase::HorizontalEven { 1 } else { 2 };
            for r in 1..=rows {
                let mut c = start;
                while c + 1 <= cols {
                    pairs.push((
                        geometry.index(r, c).unwrap(),
                        geometry.index(r, c + 1).unwrap(),
                    ));
                    c += 2;
                }
            }
        }
        BrickworkPhase::VerticalEven | BrickworkPhase::VerticalOdd => {
            let start = if phase == BrickworkPhase::VerticalEven { 1 } else { 2 };
            for c in 1..=cols {
                let mut r = start;
                while r + 1 <= rows {
                    pairs.push((
                        geometry.index(r, c).unwrap(),
                        geometry.index(r + 1, c).unwrap(),
                    ));
                    r += 2;
                }
            }
        }
    }
    pairs
}

/// The first `depth` layer patterns of the brickwork cycle.
pub fn brickwork_layout(geometry: &GridGeometry, depth: usize) -> Vec<Vec<(usize, usize)>> {
    (0..depth)
        .map(|t| layer_pattern(geometry, BrickworkPhase::for_layer(t)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerOp {
    Single { q: usize, u: SingleQubitGate },
    Two { a: usize, b: usize, u: TwoQubitGate },
}

impl LayerOp {
    fn sites(&self) -> Vec<usize> {
        match self {
            LayerOp::Single { q, .. } => vec![*q],
            LayerOp::Two { a, b, .. } => vec![*a, *b],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Layer {
    pub ops: Vec<LayerOp>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub geometry: GridGeometry,
    pub layers: Vec<Layer>,
    pub seed: u64,
    pub ensemble: String,
}

impl Circuit {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.geometry.n_qubits()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.ops.len()).sum()
    }

    /// Checks structural invariants: sites in range, unitary gates, and no
    /// site touched twice within a layer.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        for (t, layer) in self.layers.iter().enumerate() {
            let mut seen = vec![false; n];
            for op in &layer.ops {
                for site in op.sites() {
                    if site >= n {
                        return Err(Error::SiteOutOfRange { site, n });
                    }
                    if seen[site] {
                        return Err(Error::InvalidSpec(format!(
                            "layer {t}: site {site} appears in more than one op"
                        )));
                    }
                    seen[site] = true;
                }
                let residual = match op {
                    LayerOp::Single { u, .. } => u.unitarity_residual(),
                    LayerOp::Two { a, b, u } => {
                        if a == b {
                            return Err(Error::InvalidSpec(format!(
                                "layer {t}: two-qubit op on identical sites {a}"
                            )));
                        }
                        u.unitarity_residual()
                    }
                };
                if residual > UNITARITY_TOL {
                    return Err(Error::InvalidSpec(format!(
                        "layer {t}: gate unitarity residual {residual:.3e} exceeds {UNITARITY_TOL:.0e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateDistribution {
    /// Independent Haar-random U(4) per slot.
    HaarTwoQubit,
    /// Fixed entangler at every slot, preceded by independent Haar-random
    /// single-qubit gates on every qubit of the layer.
    FixedEntangler { entangler: TwoQubitGate },
}

impl GateDistribution {
    pub fn label(&self) -> &'static str {
        match self {
            GateDistribution::HaarTwoQubit => "haar-2q",
            GateDistribution::FixedEntangler { .. } => "fixed-entangler",
        }
    }
}

/// Full description of the circuit distribution plus the operator pair it is
/// probed with.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub geometry: GridGeometry,
    pub depth: usize,
    pub distribution: GateDistribution,
    pub butterfly: PauliString,
    pub measurement: PauliString,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn new(
        geometry: GridGeometry,
        depth: usize,
        distribution: GateDistribution,
        butterfly: PauliString,
        measurement: PauliString,
        master_seed: u64,
    ) -> Result<Self> {
        if butterfly.is_empty() {
            return Err(Error::InvalidSpec("butterfly operator is empty".into()));
        }
        if measurement.is_empty() {
            return Err(Error::InvalidSpec("measurement operator is empty".into()));
        }
        if !measurement.is_z_type() {
            return Err(Error::InvalidSpec(
                "measurement operator must be Z-type so it fixes |0..0>".into(),
            ));
        }
        let n = geometry.n_qubits();
        butterfly.check_in_range(n)?;
        measurement.check_in_range(n)?;
        if let GateDistribution::FixedEntangler { entangler } = &distribution {
            let r = entangler.unitarity_residual();
            if r > UNITARITY_TOL {
                return Err(Error::InvalidSpec(format!(
                    "entangler unitarity residual {r:.3e} exceeds {UNITARITY_TOL:.0e}"
                )));
            }
        }
        Ok(Self {
            geometry,
            depth,
            distribution,
            butterfly,
            measurement,
            master_seed,
        })
    }
}

/// Samples one circuit instance with an explicit seed (the spec's master seed
/// is ignored; the harness derives per-instance seeds).
pub fn sample_circuit_with_seed(spec: &EnsembleSpec, seed: u64) -> Circuit {
    let layout = brickwork_layout(&spec.geometry, spec.depth);
    let n = spec.geometry.n_qubits();
    let layers = layout
        .iter()
        .enumerate()
        .map(|(t, pattern)| {
            let mut ops = Vec::new();
            match &spec.distribution {
                GateDistribution::HaarTwoQubit => {
                    for (slot, &(a, b)) in pattern.iter().enumerate() {
                        let s = derive_stream_seed(
                            seed,
                            &[t as u64, slot as u64, STREAM_TAG_TWO_QUBIT],
                        );
                        let mut rng = Xoshiro256StarStar::from_seed(s);
                        ops.push(LayerOp::Two {
                            a,
                            b,
                            u: sample_haar_two_qubit_gate(&mut rng),
                        });
                    }
                }
                GateDistribution::FixedEntangler { entangler } => {
                    // one Haar U(2) per qubit per layer; qubits inside a slot
                    // get theirs folded into the entangler, leftover qubits
                    // keep standalone single-qubit ops
                    let singles: Vec<SingleQubitGate> = (0..n)
                        .map(|q| {
                            let s = derive_stream_seed(
                                seed,
                                &[t as u64, q as u64, STREAM_TAG_SINGLE_QUBIT],
                            );
                            let mut rng = Xoshiro256StarStar::from_seed(s);
                            sample_haar_single_qubit_gate(&mut rng)
                        })
                        .collect();
                    let mut in_slot = vec![false; n];
                    for &(a, b) in pattern {
                        in_slot[a] = true;
                        in_slot[b] = true;
                    }
                    for (q, used) in in_slot.iter().enumerate() {
                        if !used {
                            ops.push(LayerOp::Single {
                                q,
                                u: singles[q].clone(),
                            });
                        }
                    }
                    for &(a, b) in pattern {
                        let u = entangler.compose(&TwoQubitGate::kron(&singles[a], &singles[b]));
                        ops.push(LayerOp::Two { a, b, u });
                    }
                }
            }
            Layer { ops }
        })
        .collect();
    Circuit {
        geometry: spec.geometry,
        layers,
        seed,
        ensemble: spec.distribution.label().to_string(),
    }
}

/// Samples the circuit addressed by the spec's own master seed.
pub fn sample_circuit(spec: &EnsembleSpec) -> Circuit {
    sample_circuit_with_seed(spec, spec.master_seed)
}

// ---------------------------------------------------------------------------
// JSON serialization (versioned wire format)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    version: u32,
    rows: usize,
    cols: usize,
    seed: u64,
    ensemble: String,
    layers: Vec<LayerJson>,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    ops: Vec<OpJson>,
}

#[derive(Serialize, Deserialize)]
struct OpJson {
    q: Vec<usize>,
    u: Vec<Vec<[f64; 2]>>,
}

impl Circuit {
    pub fn to_json(&self) -> Result<String> {
        let layers = self
            .layers
            .iter()
            .map(|layer| LayerJson {
                ops: layer
                    .ops
                    .iter()
                    .map(|op| match op {
                        LayerOp::Single { q, u } => OpJson {
                            q: vec![*q],
                            u: u.0
                                .iter()
                                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                                .collect(),
                        },
                        LayerOp::Two { a, b, u } => OpJson {
                            q: vec![*a, *b],
                            u: u.0
                                .iter()
                                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                                .collect(),
                        },
                    })
                    .collect(),
            })
            .collect();
        let doc = CircuitJson {
            version: 1,
            rows: self.geometry.rows(),
            cols: self.geometry.cols(),
            seed: self.seed,
            ensemble: self.ensemble.clone(),
            layers,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CircuitJson = serde_json::from_str(text)?;
        if doc.version != 1 {
            return Err(Error::Parse(format!(
                "unsupported circuit format version {}",
                doc.version
            )));
        }
        let geometry = GridGeometry::new(doc.rows, doc.cols)?;
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (t, layer) in doc.layers.into_iter().enumerate() {
            let mut ops = Vec::with_capacity(layer.ops.len());
            for op in layer.ops {
                let dim = 1usize << op.q.len();
                if op.u.len() != dim || op.u.iter().any(|row| row.len() != dim) {
                    return Err(Error::Parse(format!(
                        "layer {t}: op on {:?} has a malformed {}x{} matrix",
                        op.q, dim, dim
                    )));
                }
                let entry = |i: usize, j: usize| C64::new(op.u[i][j][0], op.u[i][j][1]);
                match op.q.as_slice() {
                    [q] => {
                        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
                        for (i, row) in m.iter_mut().enumerate() {
                            for (j, e) in row.iter_mut().enumerate() {
                                *e = entry(i, j);
                            }
                        }
                        ops.push(LayerOp::Single {
                            q: *q,
                            u: SingleQubitGate(m),
                        });
                    }
                    [a, b] => {
                        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
                        for (i, row) in m.iter_mut().enumerate() {
                            for (j, e) in row.iter_mut().enumerate() {
                                *e = entry(i, j);
                            }
                        }
                        ops.push(LayerOp::Two {
                            a: *a,
                            b: *b,
                            u: TwoQubitGate(m),
                        });
                    }
                    other => {
                        return Err(Error::Parse(format!(
                            "layer {t}: op arity {} not supported",
                            other.len()
                        )))
                    }
                }
            }
            layers.push(Layer { ops });
        }
        let circuit = Circuit {
            geometry,
            layers,
            seed: doc.seed,
            ensemble: doc.ensemble,
        };
        circuit.validate()?;
        Ok(circuit)
    }
}

/// Expected gate count of one layer under the brickwork rule.
pub fn expected_layer_gate_count(geometry: &GridGeometry, phase: BrickworkPhase) -> usize {
    let (rows, cols) = (geometry.rows(), geometry.cols());
    match phase {
        BrickworkPhase::HorizontalEven => rows * (cols / 2),
        BrickworkPhase::HorizontalOdd => rows * (cols.saturating_sub(1) / 2),
        BrickworkPhase::VerticalEven => cols * (rows / 2),
        BrickworkPhase::VerticalOdd => cols * (rows.saturating_sub(1) / 2),
    }
}
