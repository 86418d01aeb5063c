//! Dense statevector engine.
//!
//! Basis convention: qubit q corresponds to bit q of the basis-state integer
//! (little-endian), and a two-qubit gate on (a, b) uses gate basis index
//! 2*bit_a + bit_b. All file formats and kernels share this convention.

use crate::ensemble::{Circuit, LayerOp, SingleQubitGate, TwoQubitGate, C64};
use crate::error::{Error, Result};
use crate::pauli::{PauliLetter, PauliString};
use std::io::{Read, Write};

/// Default memory guard: 2^26 complex doubles = 1 GiB.
pub const DEFAULT_MAX_QUBITS: usize = 26;

/// Effective qubit limit: `OTOC_MAX_QUBITS` env override or the default.
pub fn max_qubits() -> usize {
    std::env::var("OTOC_MAX_QUBITS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

fn guard(n: usize, limit: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidSpec("state needs at least one qubit".into()));
    }
    if n > limit {
        let gib = (1u128 << n) as f64 * 16.0 / (1u64 << 30) as f64;
        return Err(Error::QubitGuard { n, limit, gib });
    }
    Ok(())
}

impl StateVector {
    /// |0..0> on `n` qubits, subject to the memory guard.
    pub fn zero_state(n: usize) -> Result<Self> {
        Self::zero_state_with_limit(n, max_qubits())
    }

    pub fn zero_state_with_limit(n: usize, limit: usize) -> Result<Self> {
        Self::basis_state_with_limit(n, 0, limit)
    }

    /// Computational basis state |basis> on `n` qubits.
    pub fn basis_state(n: usize, basis: u64) -> Result<Self> {
        Self::basis_state_with_limit(n, basis, max_qubits())
    }

    pub fn basis_state_with_limit(n: usize, basis: u64, limit: usize) -> Result<Self> {
        guard(n, limit)?;
        if basis >> n != 0 {
            return Err(Error::InvalidSpec(format!(
                "basis state {basis} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[basis as usize] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        pairwise_sum_f64(&self.amps, |z| z.norm_sqr())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n {
            Err(Error::SiteOutOfRange { site, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn apply_single_qubit_gate(&mut self, u: &SingleQubitGate, site: usize) -> Result<()> {
        self.check_site(site)?;
        let m = 1usize << site;
        let dim = self.amps.len();
        let groups = dim >> 1;
        for g in 0..groups {
            let s = insert_zero_bit(g, site);
            let a0 = self.amps[s];
            let a1 = self.amps[s | m];
            self.amps[s] = u.0[0][0] * a0 + u.0[0][1] * a1;
            self.amps[s | m] = u.0[1][0] * a0 + u.0[1][1] * a1;
        }
        Ok(())
    }

    pub fn apply_two_qubit_gate(&mut self, gate: &TwoQubitGate, a: usize, b: usize) -> Result<()> {
        self.check_site(a)?;
        self.check_site(b)?;
        if a == b {
            return Err(Error::InvalidSpec(format!(
                "two-qubit gate needs distinct sites, got {a} twice"
            )));
        }
        let ma = 1usize << a;
        let mb = 1usize << b;
        // gate index 2*bit_a + bit_b
        let offs = [0, mb, ma, ma | mb];
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let groups = self.amps.len() >> 2;
        for g in 0..groups {
            let s = insert_zero_bit(insert_zero_bit(g, lo), hi);
            let v = [
                self.amps[s],
                self.amps[s | offs[1]],
                self.amps[s | offs[2]],
                self.amps[s | offs[3]],
            ];
            for (i, &off) in offs.iter().enumerate() {
                let row = &gate.0[i];
                self.amps[s | off] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
        Ok(())
    }

    /// Applies a Pauli string: X flips the site bit, Z multiplies by
    /// (-1)^bit, Y contributes i per site on top of flip and sign.
    pub fn apply_pauli_string(&mut self, p: &PauliString) -> Result<()> {
        let mut flip = 0usize;
        let mut sign_mask = 0usize; // Z and Y sites
        let mut y_count = 0u32;
        for (site, letter) in p.iter() {
            self.check_site(site)?;
            let bit = 1usize << site;
            match letter {
                PauliLetter::X => flip |= bit,
                PauliLetter::Y => {
                    flip |= bit;
                    sign_mask |= bit;
                    y_count += 1;
                }
                PauliLetter::Z => sign_mask |= bit,
            }
        }
        // global i^{#Y}; per-state sign (-1)^{popcount(s & sign_mask)}
        let global = match y_count % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        let dim = self.amps.len();
        if flip == 0 {
            for s in 0..dim {
                let sign = if (s & sign_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                self.amps[s] *= global * sign;
            }
        } else {
            let pivot = flip & flip.wrapping_neg(); // lowest set bit
            for s in 0..dim {
                if s & pivot != 0 {
                    continue;
                }
                let t = s ^ flip;
                let ph_s = if (s & sign_mask).count_ones() % 2 == 0 { global } else { -global };
                let ph_t = if (t & sign_mask).count_ones() % 2 == 0 { global } else { -global };
                let (vs, vt) = (self.amps[s], self.amps[t]);
                self.amps[t] = ph_s * vs;
                self.amps[s] = ph_t * vt;
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit, direction: Direction) -> Result<()> {
        if circuit.n_qubits() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "circuit acts on {} qubits, state has {}",
                circuit.n_qubits(),
                self.n
            )));
        }
        match direction {
            Direction::Forward => {
                for layer in &circuit.layers {
                    for op in &layer.ops {
                        self.apply_layer_op(op, false)?;
                    }
                }
            }
            Direction::Inverse => {
                for layer in circuit.layers.iter().rev() {
                    for op in layer.ops.iter().rev() {
                        self.apply_layer_op(op, true)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_layer_op(&mut self, op: &LayerOp, dagger: bool) -> Result<()> {
        match op {
            LayerOp::Single { q, u } => {
                if dagger {
                    self.apply_single_qubit_gate(&u.dagger(), *q)
                } else {
                    self.apply_single_qubit_gate(u, *q)
                }
            }
            LayerOp::Two { a, b, u } => {
                if dagger {
                    self.apply_two_qubit_gate(&u.dagger(), *a, *b)
                } else {
                    self.apply_two_qubit_gate(u, *a, *b)
                }
            }
        }
    }

    /// <self|other>, conjugate-linear in self. Fixed-shape pairwise
    /// reduction, so the result is independent of execution environment.
    pub fn inner_product(&self, other: &StateVector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "inner product between {} and {} qubits",
                self.n, other.n
            )));
        }
        Ok(pairwise_sum_c64(&self.amps, &other.amps))
    }

    /// <psi|P|psi>. Asserts the imaginary residue is below 1e-10.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        let mut tmp = self.clone();
        tmp.apply_pauli_string(p)?;
        let v = self.inner_product(&tmp)?;
        if v.im.abs() >= 1e-10 {
            return Err(Error::InvalidSpec(format!(
                "Pauli expectation has imaginary residue {:.3e}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// Debug dump: 8-byte little-endian qubit count, then 2^n (re, im)
    /// little-endian double pairs.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for z in &self.amps {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let n = u64::from_le_bytes(header) as usize;
        guard(n, max_qubits())?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut buf = [0u8; 16];
        for _ in 0..(1usize << n) {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            amps.push(C64::new(re, im));
        }
        Ok(Self { n, amps })
    }
}

/// Inserts a zero bit at `pos`, shifting higher bits up.
#[inline]
fn insert_zero_bit(x: usize, pos: usize) -> usize {
    let low = x & ((1usize << pos) - 1);
    ((x >> pos) << (pos + 1)) | low
}

fn pairwise_sum_f64(xs: &[C64], f: impl Fn(&C64) -> f64 + Copy) -> f64 {
    fn go(xs: &[C64], f: impl Fn(&C64) -> f64 + Copy) -> f64 {
        if xs.len() <= 64 {
            xs.iter().map(f).sum()
        } else {
            let (a, b) = xs.split_at(xs.len() / 2);
            go(a, f) + go(b, f)
        }
    }
    go(xs, f)
}

fn pairwise_sum_c64(a: &[C64], b: &[C64]) -> C64 {
    fn go(a: &[C64], b: &[C64]) -> C64 {
        if a.len() <= 64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.conj() * y)
                .fold(C64::new(0.0, 0.0), |acc, z| acc + z)
        } else {
            let mid = a.len() / 2;
            go(&a[..mid], &b[..mid]) + go(&a[mid..], &b[mid..])
        }
    }
    go(a, b)
}

// ---------------------------------------------------------------------------
// Dense-matrix oracle for small n
// ---------------------------------------------------------------------------

/// Row-major dense complex matrix; verification oracle for small systems.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = self.data[i * d + k];
                for j in 0..d {
                    out[i * d + j] += aik * rhs.data[k * d + j];
                }
            }
        }
        DenseMatrix { dim: d, data: out }
    }

    pub fn pow(&self, e: usize) -> DenseMatrix {
        let mut out = DenseMatrix::identity(self.dim);
        for _ in 0..e {
            out = out.matmul(self);
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let d = self.dim;
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| self.data[i * d + j] * v[j])
                    .fold(C64::new(0.0, 0.0), |a, z| a + z)
            })
            .collect()
    }

    pub fn dagger(&self) -> DenseMatrix {
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.data[j * d + i].conj();
            }
        }
        DenseMatrix { dim: d, data: out }
    }

    /// max-entry norm of M^dag M - I.
    pub fn unitarity_residual(&self) -> f64 {
        let p = self.dagger().matmul(self);
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.data[i * d + j] - target).norm());
            }
        }
        worst
    }
}

/// Full 2^n x 2^n matrix of a circuit, column by column. Oracle only; capped
/// at n = 10.
pub fn dense_unitary(circuit: &Circuit) -> Result<DenseMatrix> {
    let n = circuit.n_qubits();
    if n > 10 {
        return Err(Error::Unsupported(format!(
            "dense_unitary is capped at 10 qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for col in 0..dim {
        let mut state = StateVector::basis_state_with_limit(n, col as u64, 10)?;
        state.apply_circuit(circuit, Direction::Forward)?;
        for (row, &amp) in state.amplitudes().iter().enumerate() {
            data[row * dim + col] = amp;
        }
    }
    Ok(DenseMatrix { dim, data })
}

/// Dense matrix of a Pauli string on n qubits (oracle helper).
pub fn dense_pauli(p: &PauliString, n: usize) -> Result<DenseMatrix> {
    if n > 10 {
        return Err(Error::Unsupported(format!(
            "dense_pauli is capped at 10 qubits, got {n}"
        )));
    }
    p.check_in_range(n)?;
    let dim = 1usize << n;
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for col in 0..dim {
        // P|col> = phase * |col ^ flip>
        let mut row = col;
        let mut phase = C64::new(1.0, 0.0);
        for (site, letter) in p.iter() {
            let bit = (col >> site) & 1;
            match letter {
                PauliLetter::X => row ^= 1 << site,
                PauliLetter::Y => {
                    row ^= 1 << site;
                    phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                }
                PauliLetter::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        data[row * dim + col] = phase;
    }
    Ok(DenseMatrix { dim, data })
}
