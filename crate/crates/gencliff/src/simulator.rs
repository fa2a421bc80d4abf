//! Classical simulation of normaliser circuits by backward observable
//! propagation.
//!
//! A circuit over a group G applies verified (projective) normaliser gates of
//! G (single wire) and G⊗G (wire pairs) to a product input state. The final
//! single-wire expectation ⟨ψ|C†AC|ψ⟩ is evaluated by conjugating the
//! observable backward through the circuit: each gate contributes one table
//! lookup g ↦ (c, g′) with gate⁻¹·g·gate = c·g′, so the whole propagation is
//! linear in the gate count, and the final value is a product of per-wire
//! quadratic forms — everything exact.
//!
//! Mid-circuit measurements (non-adaptive by construction: the circuit format
//! has no branching) are rewritten into unitary form by adjoining an ancilla
//! wire and an entangling copy gate, preserving all later expectations.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::cyclotomic::{CRational, Cyclo};
use crate::group::{GroupError, MatrixGroup};
use crate::matrix::{gates, CMatrix};
use crate::normaliser::canonical_scalar_decomposition;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("gate is not a (projective) normaliser of the target group")]
    NotANormaliser,
    #[error("observable is not an element of the group")]
    ObservableNotInGroup,
    #[error("group must act irreducibly")]
    NotIrreducible,
    #[error("group elements must be unitary")]
    NotUnitaryGroup,
    #[error("no verified entangling gate implements the measurement dilation")]
    NoDilationGate,
    #[error("invalid circuit: {0}")]
    BadCircuit(String),
}

// ---------------------------------------------------------------------------
// conjugation tables
// ---------------------------------------------------------------------------

/// Exact lookup g ↦ (c, g′) with gate·g·gate⁻¹ = c·g′ for every element of
/// the domain group, phases canonicalised to 0 ≤ arg < 2π/s.
pub struct ConjTable {
    pub map: Vec<(Cyclo, u32)>,
}

/// Build the conjugation table of `gate` against `domain` (the group itself
/// for single-wire gates, its tensor square for two-wire gates). Fails with
/// [`SimError::NotANormaliser`] when any conjugate leaves the group up to
/// phase.
pub fn conjugation_table(gate: &CMatrix, domain: &Arc<MatrixGroup>) -> Result<ConjTable, SimError> {
    if gate.dim() != domain.dim() {
        return Err(SimError::BadCircuit(format!(
            "gate dimension {} does not match group dimension {}",
            gate.dim(),
            domain.dim()
        )));
    }
    let inv = gate.inverse().map_err(|_| SimError::NotANormaliser)?;
    let mut map = Vec::with_capacity(domain.len());
    for g in 0..domain.len() as u32 {
        let conj = gate.mul(domain.element(g)).mul(&inv);
        let (c, idx) =
            canonical_scalar_decomposition(domain, &conj).ok_or(SimError::NotANormaliser)?;
        if !c.norm_sq().is_one() {
            return Err(SimError::NotANormaliser);
        }
        map.push((c, idx));
    }
    Ok(ConjTable { map })
}

impl ConjTable {
    /// The inverse-direction table: if gate·g·gate⁻¹ = c·g′ then
    /// gate⁻¹·g′·gate = c⁻¹·g.
    fn backward(&self, domain: &MatrixGroup) -> ConjTable {
        let mut map = vec![(Cyclo::one(), 0u32); self.map.len()];
        for (g, (c, g_img)) in self.map.iter().enumerate() {
            let c_inv = c.inv().expect("unit phases are invertible");
            let (c_canon, g_canon) = recanonicalise(domain, c_inv, g as u32);
            map[*g_img as usize] = (c_canon, g_canon);
        }
        ConjTable { map }
    }
}

/// Fold a (phase, element) pair so the phase argument lands in [0, 2π/s).
fn recanonicalise(domain: &MatrixGroup, c: Cyclo, g: u32) -> (Cyclo, u32) {
    if c.is_one() {
        return (c, g);
    }
    let s = domain.scalar_order();
    let (ord, exp) = c.as_root_of_unity().expect("phases are roots of unity");
    let j = (exp as u64 * s as u64 / ord as u64) as u32;
    if j == 0 {
        return (c, g);
    }
    let f = c.mul(&Cyclo::root_of_unity(s, -(j as i64)));
    let zs_j = (0..domain.len() as u32)
        .find(|&i| domain.scalar_phase_of(i) == Some(&Cyclo::root_of_unity(s, j as i64)))
        .expect("central phases are group elements");
    (f, domain.mul(zs_j, g))
}

// ---------------------------------------------------------------------------
// circuits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateWires {
    One(usize),
    Two(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Gate {
    pub matrix: CMatrix,
    pub wires: GateWires,
}

/// A mid-circuit computational-basis measurement marker; the wire is measured
/// after `after_gate` gates have been applied. Non-adaptive: nothing in the
/// format can depend on its outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub wire: usize,
    pub after_gate: usize,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub group: Arc<MatrixGroup>,
    pub n_wires: usize,
    /// One normalised state vector per wire (product input).
    pub input: Vec<Vec<Cyclo>>,
    pub gates: Vec<Gate>,
    pub measurements: Vec<Measurement>,
}

impl Circuit {
    pub fn new(
        group: Arc<MatrixGroup>,
        input: Vec<Vec<Cyclo>>,
    ) -> Result<Circuit, SimError> {
        let d = group.dim();
        for (w, v) in input.iter().enumerate() {
            if v.len() != d {
                return Err(SimError::BadCircuit(format!(
                    "input state on wire {w} has length {} but the qudit dimension is {d}",
                    v.len()
                )));
            }
            let norm: Cyclo = v.iter().fold(Cyclo::zero(), |acc, a| acc.add(&a.norm_sq()));
            if !norm.is_one() {
                return Err(SimError::BadCircuit(format!(
                    "input state on wire {w} is not normalised (|ψ|² = {norm})"
                )));
            }
        }
        Ok(Circuit {
            group,
            n_wires: input.len(),
            input,
            gates: Vec::new(),
            measurements: Vec::new(),
        })
    }

    pub fn push_gate(&mut self, matrix: CMatrix, wires: GateWires) -> Result<(), SimError> {
        let d = self.group.dim();
        match wires {
            GateWires::One(w) => {
                if w >= self.n_wires {
                    return Err(SimError::BadCircuit(format!("wire {w} out of range")));
                }
                if matrix.dim() != d {
                    return Err(SimError::BadCircuit("single-wire gate has wrong dimension".into()));
                }
            }
            GateWires::Two(a, b) => {
                if a >= self.n_wires || b >= self.n_wires || a == b {
                    return Err(SimError::BadCircuit(format!("bad wire pair ({a}, {b})")));
                }
                if matrix.dim() != d * d {
                    return Err(SimError::BadCircuit("two-wire gate has wrong dimension".into()));
                }
            }
        }
        self.gates.push(Gate { matrix, wires });
        Ok(())
    }

    pub fn mark_measurement(&mut self, wire: usize) -> Result<(), SimError> {
        if wire >= self.n_wires {
            return Err(SimError::BadCircuit(format!("wire {wire} out of range")));
        }
        self.measurements.push(Measurement { wire, after_gate: self.gates.len() });
        Ok(())
    }
}

/// Backward-propagated observable: a global phase times a product of one
/// group element per wire.
#[derive(Debug, Clone)]
pub struct Observable {
    pub phase: Cyclo,
    pub factors: Vec<u32>,
}

// ---------------------------------------------------------------------------
// the simulator
// ---------------------------------------------------------------------------

enum CompiledAction {
    /// backward table over G, wire
    One(Arc<ConjTable>, usize),
    /// backward table over G⊗G, wires
    Two(Arc<ConjTable>, usize, usize),
}

pub struct CompiledCircuit {
    group: Arc<MatrixGroup>,
    square: Option<Arc<MatrixGroup>>,
    input: Vec<Vec<Cyclo>>,
    n_wires: usize,
    /// actions in reverse gate order, ready for backward propagation
    backward: Vec<CompiledAction>,
}

/// Verifies gates (by building their conjugation tables) and compiles the
/// circuit for propagation. Tables are memoised per distinct gate matrix.
pub struct Simulator {
    group: Arc<MatrixGroup>,
    square: Option<Arc<MatrixGroup>>,
    tables_one: HashMap<String, Arc<ConjTable>>,
    tables_two: HashMap<String, Arc<ConjTable>>,
    max_order: usize,
}

impl Simulator {
    pub fn new(group: Arc<MatrixGroup>, max_order: usize) -> Simulator {
        Simulator { group, square: None, tables_one: HashMap::new(), tables_two: HashMap::new(), max_order }
    }

    pub fn group(&self) -> &Arc<MatrixGroup> {
        &self.group
    }

    fn square(&mut self) -> Result<Arc<MatrixGroup>, SimError> {
        if self.square.is_none() {
            self.square = Some(self.group.tensor_square(self.max_order)?);
        }
        Ok(self.square.clone().unwrap())
    }

    /// Backward table for a single-wire gate, memoised.
    pub fn table_one(&mut self, matrix: &CMatrix) -> Result<Arc<ConjTable>, SimError> {
        let key = matrix.canonical_key();
        if let Some(t) = self.tables_one.get(&key) {
            return Ok(t.clone());
        }
        let forward = conjugation_table(matrix, &self.group)?;
        let table = Arc::new(forward.backward(&self.group));
        self.tables_one.insert(key, table.clone());
        Ok(table)
    }

    /// Backward table for a two-wire gate against G⊗G, memoised.
    pub fn table_two(&mut self, matrix: &CMatrix) -> Result<Arc<ConjTable>, SimError> {
        let key = matrix.canonical_key();
        if let Some(t) = self.tables_two.get(&key) {
            return Ok(t.clone());
        }
        let square = self.square()?;
        let forward = conjugation_table(matrix, &square)?;
        let table = Arc::new(forward.backward(&square));
        self.tables_two.insert(key, table.clone());
        Ok(table)
    }

    pub fn compile(&mut self, circuit: &Circuit) -> Result<CompiledCircuit, SimError> {
        if !circuit.measurements.is_empty() {
            return Err(SimError::BadCircuit(
                "compile the output of dilate_measurements, or drop the markers".into(),
            ));
        }
        let mut backward = Vec::with_capacity(circuit.gates.len());
        for gate in circuit.gates.iter().rev() {
            match gate.wires {
                GateWires::One(w) => backward.push(CompiledAction::One(self.table_one(&gate.matrix)?, w)),
                GateWires::Two(a, b) => {
                    backward.push(CompiledAction::Two(self.table_two(&gate.matrix)?, a, b))
                }
            }
        }
        Ok(CompiledCircuit {
            group: self.group.clone(),
            square: self.square.clone(),
            input: circuit.input.clone(),
            n_wires: circuit.n_wires,
            backward,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExpectationReport {
    /// phase·Π⟨aₖ|g_{iₖ}|aₖ⟩, exact.
    pub value: Cyclo,
    /// The observable evaluated was Hermitian (value is exactly real).
    pub hermitian: bool,
    /// Set when the value is complex and no Hermitian wrapper was requested.
    pub complex_flag: bool,
    /// (p₀, p₁) when the observable is Hermitian with ±1 eigenvalues.
    pub outcome_probabilities: Option<(Cyclo, Cyclo)>,
    pub gate_lookups: u64,
}

impl CompiledCircuit {
    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn gate_count(&self) -> usize {
        self.backward.len()
    }

    /// Conjugate the observable through the whole circuit: O ↦ C†OC.
    pub fn propagate(&self, observable: &Observable) -> (Observable, u64) {
        let mut phase = observable.phase.clone();
        let mut factors = observable.factors.clone();
        let mut lookups = 0u64;
        for action in &self.backward {
            lookups += 1;
            match action {
                CompiledAction::One(table, w) => {
                    let (c, g) = &table.map[factors[*w] as usize];
                    if !c.is_one() {
                        phase = phase.mul(c);
                    }
                    factors[*w] = *g;
                }
                CompiledAction::Two(table, a, b) => {
                    let square = self.square.as_ref().expect("two-wire actions imply a square");
                    let meta = square.tensor_meta().expect("square carries tensor metadata");
                    let n = meta.factor.len();
                    let pair = meta.pair_index[(factors[*a] as usize) * n + factors[*b] as usize];
                    let (c, img) = &table.map[pair as usize];
                    if !c.is_one() {
                        phase = phase.mul(c);
                    }
                    let (fa, fb) = meta.decomp[*img as usize];
                    factors[*a] = fa;
                    factors[*b] = fb;
                }
            }
        }
        (Observable { phase, factors }, lookups)
    }

    /// Expectation of a single-wire observable in the output state.
    /// With `hermitize`, evaluates A + A† instead of A.
    pub fn expectation(
        &self,
        wire: usize,
        observable: &CMatrix,
        hermitize: bool,
    ) -> Result<ExpectationReport, SimError> {
        if wire >= self.n_wires {
            return Err(SimError::BadCircuit(format!("wire {wire} out of range")));
        }
        let idx = self.group.find(observable).ok_or(SimError::ObservableNotInGroup)?;
        let id = self.group.identity_index();
        let start = Observable {
            phase: Cyclo::one(),
            factors: (0..self.n_wires).map(|w| if w == wire { idx } else { id }).collect(),
        };
        let (prop, lookups) = self.propagate(&start);
        let mut value = prop.phase.clone();
        for (w, &f) in prop.factors.iter().enumerate() {
            value = value.mul(&quadratic_form(&self.input[w], self.group.element(f)));
        }
        let input_hermitian = observable == &observable.conj_transpose();
        let (value, hermitian, complex_flag) = if hermitize {
            (value.add(&value.conj()), true, false)
        } else if input_hermitian {
            debug_assert!(value.is_real());
            (value, true, false)
        } else {
            let complex = !value.is_real();
            (value, false, complex)
        };
        let involution = observable.mul(observable).is_identity();
        let outcome_probabilities = if hermitian && !hermitize && involution {
            let half = CRational::new(1.into(), 2.into());
            let p0 = Cyclo::one().add(&value).scale(&half);
            let p1 = Cyclo::one().sub(&value).scale(&half);
            Some((p0, p1))
        } else {
            None
        };
        Ok(ExpectationReport { value, hermitian, complex_flag, outcome_probabilities, gate_lookups: lookups })
    }
}

/// ⟨a|M|a⟩, exact.
fn quadratic_form(a: &[Cyclo], m: &CMatrix) -> Cyclo {
    let mut acc = Cyclo::zero();
    for i in 0..a.len() {
        if a[i].is_zero() {
            continue;
        }
        let bra = a[i].conj();
        for j in 0..a.len() {
            if m[(i, j)].is_zero() || a[j].is_zero() {
                continue;
            }
            acc = acc.add(&bra.mul(&m[(i, j)]).mul(&a[j]));
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// measurement dilation
// ---------------------------------------------------------------------------

/// Rewrite every measurement marker into an entangling copy gate on a fresh
/// ancilla wire, leaving all later expectations unchanged. The copy gate must
/// be a verified normaliser of G⊗G satisfying V(|i⟩⊗|a⟩) = |i⟩⊗|bᵢ⟩ with
/// orthogonal ⟨bᵢ|bⱼ⟩ for some ancilla state |a⟩.
pub fn dilate_measurements(sim: &mut Simulator, circuit: &Circuit) -> Result<Circuit, SimError> {
    if circuit.measurements.is_empty() {
        return Ok(circuit.clone());
    }
    let (copy_gate, ancilla_state) = find_dilation_gate(sim)?;
    let mut out = Circuit {
        group: circuit.group.clone(),
        n_wires: circuit.n_wires,
        input: circuit.input.clone(),
        gates: circuit.gates.clone(),
        measurements: Vec::new(),
    };
    // insert later markers first so earlier positions stay valid
    let mut markers = circuit.measurements.clone();
    markers.sort_by_key(|m| std::cmp::Reverse(m.after_gate));
    for marker in markers {
        let ancilla = out.n_wires;
        out.n_wires += 1;
        out.input.push(ancilla_state.clone());
        out.gates.insert(
            marker.after_gate,
            Gate { matrix: copy_gate.clone(), wires: GateWires::Two(marker.wire, ancilla) },
        );
    }
    Ok(out)
}

fn find_dilation_gate(sim: &mut Simulator) -> Result<(CMatrix, Vec<Cyclo>), SimError> {
    let d = sim.group.dim();
    if d != 2 {
        return Err(SimError::NoDilationGate);
    }
    let plus = {
        let r = crate::cyclotomic::parse_cyclo("1/2*w8^1 + 1/2*w8^7").unwrap();
        vec![r.clone(), r]
    };
    let zero = vec![Cyclo::one(), Cyclo::zero()];
    let one = vec![Cyclo::zero(), Cyclo::one()];
    let candidates = [
        (gates::cnot(), zero),
        (gates::cz(), plus),
        (gates::cnot(), one),
    ];
    for (gate, anc) in candidates {
        if sim.table_two(&gate).is_err() {
            continue;
        }
        if decoheres(&gate, &anc, d) {
            return Ok((gate, anc));
        }
    }
    Err(SimError::NoDilationGate)
}

/// V(|i⟩⊗|a⟩) must equal |i⟩⊗|bᵢ⟩ with pairwise orthogonal bᵢ.
fn decoheres(gate: &CMatrix, ancilla: &[Cyclo], d: usize) -> bool {
    let mut records: Vec<Vec<Cyclo>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut input = vec![Cyclo::zero(); d * d];
        for (k, a) in ancilla.iter().enumerate() {
            input[i * d + k] = a.clone();
        }
        let out = gate.apply(&input);
        // must be supported on the |i⟩⊗· block only
        for row in 0..d {
            for k in 0..d {
                if row != i && !out[row * d + k].is_zero() {
                    return false;
                }
            }
        }
        records.push((0..d).map(|k| out[i * d + k].clone()).collect());
    }
    for i in 0..d {
        for j in 0..i {
            let mut dot = Cyclo::zero();
            for k in 0..d {
                dot = dot.add(&records[i][k].conj().mul(&records[j][k]));
            }
            if !dot.is_zero() {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// generalised teleportation
// ---------------------------------------------------------------------------

/// Rank-1 POVM {Aᵢ = (d²/|G|)·|aᵢ⟩⟨aᵢ|/d} built from the maximally entangled
/// pair and the group elements; Σᵢ Aᵢ = I_{d²} exactly by Schur's lemma.
pub struct TeleportationPovm {
    pub group: Arc<MatrixGroup>,
    /// Unnormalised vectors ãᵢ = (Uᵢ†⊗I)·Σ|jj⟩; the true |aᵢ⟩ carries 1/√d.
    pub vectors: Vec<Vec<Cyclo>>,
    /// Aᵢ = weight·ãᵢãᵢ†, with weight = d/|G| absorbing the 1/d normalisation.
    pub elements: Vec<CMatrix>,
    pub weight: CRational,
}

pub fn build_teleportation_povm(group: &Arc<MatrixGroup>) -> Result<TeleportationPovm, SimError> {
    if !group.is_irreducible() {
        return Err(SimError::NotIrreducible);
    }
    let d = group.dim();
    for m in group.elements() {
        if !m.is_unitary() {
            return Err(SimError::NotUnitaryGroup);
        }
    }
    let weight = CRational::new((d as i64).into(), (group.len() as i64).into());
    let mut vectors = Vec::with_capacity(group.len());
    let mut elements = Vec::with_capacity(group.len());
    for u in group.elements() {
        // ã[(k,j)] = (U†)_{k,j} = conj(U_{j,k})
        let mut v = vec![Cyclo::zero(); d * d];
        for k in 0..d {
            for j in 0..d {
                v[k * d + j] = u[(j, k)].conj();
            }
        }
        let mut a = CMatrix::zero(d * d);
        for r in 0..d * d {
            for c in 0..d * d {
                a[(r, c)] = v[r].mul(&v[c].conj()).scale(&weight);
            }
        }
        vectors.push(v);
        elements.push(a);
    }
    // completeness: Σ Aᵢ = I exactly
    let mut sum = CMatrix::zero(d * d);
    for a in &elements {
        sum = sum.add(a);
    }
    assert!(sum.is_identity(), "POVM completeness must hold exactly");
    Ok(TeleportationPovm { group: group.clone(), vectors, elements, weight })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TeleportationOutcome {
    /// Exact outcome probability (equals 1/|G| for every outcome).
    pub probability: String,
    /// Bob's conditional state matches Uᵢ|α⟩ up to a global phase, exactly.
    pub state_matches: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TeleportationReport {
    pub group_order: usize,
    pub outcomes: Vec<TeleportationOutcome>,
    pub all_match: bool,
    pub uniform_probability: bool,
}

/// Run the teleportation protocol exactly on a test state: for every outcome
/// Aᵢ, the post-measurement state must factor as |ãᵢ⟩⊗Uᵢ|α⟩ and occur with
/// probability exactly 1/|G|.
pub fn verify_teleportation(
    povm: &TeleportationPovm,
    alpha: &[Cyclo],
) -> Result<TeleportationReport, SimError> {
    let d = povm.group.dim();
    if alpha.len() != d {
        return Err(SimError::BadCircuit("test state has the wrong dimension".into()));
    }
    let norm: Cyclo = alpha.iter().fold(Cyclo::zero(), |acc, a| acc.add(&a.norm_sq()));
    if !norm.is_one() {
        return Err(SimError::BadCircuit("test state must be normalised".into()));
    }
    // |Ψ⟩ = |α⟩₁ ⊗ Σ_j |jj⟩₂₃, indexed (w1, w2, w3)
    let dd = d * d;
    let mut psi = vec![Cyclo::zero(); d * dd];
    for i in 0..d {
        for j in 0..d {
            psi[i * dd + j * d + j] = alpha[i].clone();
        }
    }
    let expected_prob = CRational::new(1.into(), (povm.group.len() as i64).into());
    let mut outcomes = Vec::with_capacity(povm.elements.len());
    let mut all_match = true;
    let mut uniform = true;
    for (i, a) in povm.elements.iter().enumerate() {
        // w = (Aᵢ ⊗ I)|Ψ⟩, applying Aᵢ to wires 1–2
        let mut w = vec![Cyclo::zero(); d * dd];
        for r1 in 0..d {
            for r2 in 0..d {
                for k in 0..d {
                    let mut acc = Cyclo::zero();
                    for c1 in 0..d {
                        for c2 in 0..d {
                            let a_entry = &a[(r1 * d + r2, c1 * d + c2)];
                            if a_entry.is_zero() {
                                continue;
                            }
                            let p = &psi[c1 * dd + c2 * d + k];
                            if p.is_zero() {
                                continue;
                            }
                            acc = acc.add(&a_entry.mul(p));
                        }
                    }
                    w[r1 * dd + r2 * d + k] = acc;
                }
            }
        }
        // independent computation of Bob's expected state
        let bob = povm.group.element(i as u32).apply(alpha);
        // w must be proportional to ãᵢ ⊗ bob
        let mut target = vec![Cyclo::zero(); d * dd];
        for r in 0..dd {
            for k in 0..d {
                target[(r / d) * dd + (r % d) * d + k] = povm.vectors[i][r].mul(&bob[k]);
            }
        }
        let state_matches = proportional(&w, &target);
        all_match &= state_matches;
        // probability ⟨Ψ|Aᵢ|Ψ⟩ / ⟨Ψ|Ψ⟩ with ⟨Ψ|Ψ⟩ = d exactly
        let mut num = Cyclo::zero();
        for (p, ww) in psi.iter().zip(&w) {
            if !p.is_zero() && !ww.is_zero() {
                num = num.add(&p.conj().mul(ww));
            }
        }
        let prob = num.scale(&CRational::new(1.into(), (d as i64).into()));
        let is_uniform = prob == Cyclo::from_rational(expected_prob.clone());
        uniform &= is_uniform;
        outcomes.push(TeleportationOutcome {
            probability: prob.to_string(),
            state_matches,
        });
    }
    Ok(TeleportationReport {
        group_order: povm.group.len(),
        outcomes,
        all_match,
        uniform_probability: uniform,
    })
}

/// v = c·w for some nonzero scalar c (exact, both nonzero).
fn proportional(v: &[Cyclo], w: &[Cyclo]) -> bool {
    let lead = w.iter().position(|e| !e.is_zero());
    let Some(lead) = lead else {
        return v.iter().all(Cyclo::is_zero);
    };
    if v[lead].is_zero() {
        return false;
    }
    let c = v[lead].div(&w[lead]).expect("nonzero leading entry");
    v.iter().zip(w).all(|(a, b)| *a == b.mul(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gates::*;

    fn c(s: &str) -> Cyclo {
        crate::cyclotomic::parse_cyclo(s).unwrap()
    }

    fn pauli() -> Arc<MatrixGroup> {
        MatrixGroup::close(
            vec![pauli_x(), pauli_z(), CMatrix::scalar(2, c("w4^1"))],
            100,
        )
        .unwrap()
    }

    fn zero_state() -> Vec<Cyclo> {
        vec![Cyclo::one(), Cyclo::zero()]
    }

    #[test]
    fn conjugation_table_hadamard_swaps_x_and_z() {
        let g = pauli();
        let table = conjugation_table(&hadamard(), &g).unwrap();
        let x = g.find(&pauli_x()).unwrap();
        let z = g.find(&pauli_z()).unwrap();
        assert_eq!(table.map[z as usize], (Cyclo::one(), x));
        assert_eq!(table.map[x as usize], (Cyclo::one(), z));
    }

    #[test]
    fn conjugation_table_cz_on_pauli_square() {
        let g = pauli();
        let square = g.tensor_square(10_000).unwrap();
        let table = conjugation_table(&cz(), &square).unwrap();
        let x_i = g.find(&pauli_x()).unwrap();
        let id = g.identity_index();
        let meta = square.tensor_meta().unwrap();
        let from = meta.pair_index[(x_i as usize) * g.len() + id as usize];
        let (phase, to) = &table.map[from as usize];
        assert!(phase.is_one());
        let expect = pauli_x().tensor(&pauli_z());
        assert_eq!(square.element(*to), &expect);
    }

    #[test]
    fn phase_gate_table_needs_projective_phases_on_real_pauli() {
        let g = MatrixGroup::close(vec![pauli_x(), pauli_z()], 100).unwrap();
        let table = conjugation_table(&phase_gate(), &g).unwrap();
        let x = g.find(&pauli_x()).unwrap();
        let (phase, img) = &table.map[x as usize];
        // PXP† = iXZ: a nontrivial unit phase times a group element
        assert!(!phase.is_one());
        assert!(phase.norm_sq().is_one());
        let rebuilt = g.element(*img).scale(phase);
        let expect = phase_gate().mul(&pauli_x()).mul(&phase_gate().conj_transpose());
        assert_eq!(rebuilt, expect);
    }

    #[test]
    fn table_rejects_non_normalisers() {
        let g = MatrixGroup::close(vec![pauli_x(), z_root(2)], 1000).unwrap();
        // H does not normalise ⟨X, Z^{1/2}⟩, even projectively
        assert!(matches!(
            conjugation_table(&hadamard(), &g),
            Err(SimError::NotANormaliser)
        ));
        // the octant phase gate diag(1, ζ8) is not a Pauli normaliser
        let s_gate = z_root(4);
        assert!(matches!(
            conjugation_table(&s_gate, &pauli()),
            Err(SimError::NotANormaliser)
        ));
    }

    #[test]
    fn empty_circuit_preserves_observables() {
        let g = pauli();
        let circuit = Circuit::new(g.clone(), vec![zero_state()]).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let compiled = sim.compile(&circuit).unwrap();
        let obs = Observable {
            phase: Cyclo::one(),
            factors: vec![g.find(&pauli_z()).unwrap()],
        };
        let (out, lookups) = compiled.propagate(&obs);
        assert_eq!(lookups, 0);
        assert!(out.phase.is_one());
        assert_eq!(out.factors, obs.factors);
    }

    #[test]
    fn hadamard_turns_z_into_x() {
        let g = pauli();
        let mut circuit = Circuit::new(g.clone(), vec![zero_state()]).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let compiled = sim.compile(&circuit).unwrap();
        let report = compiled.expectation(0, &pauli_z(), false).unwrap();
        // ⟨0|H Z H|0⟩ = ⟨0|X|0⟩ = 0
        assert!(report.value.is_zero());
        assert!(report.hermitian);
        let (p0, p1) = report.outcome_probabilities.unwrap();
        assert_eq!(p0, c("1/2"));
        assert_eq!(p1, c("1/2"));
    }

    #[test]
    fn bell_circuit_expectations_match_dense_values() {
        // H on both wires then CZ prepares a maximally entangled state
        let g = pauli();
        let mut circuit = Circuit::new(g.clone(), vec![zero_state(), zero_state()]).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(1)).unwrap();
        circuit.push_gate(cz(), GateWires::Two(0, 1)).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let compiled = sim.compile(&circuit).unwrap();
        for obs in [pauli_z(), pauli_x()] {
            let report = compiled.expectation(0, &obs, false).unwrap();
            assert!(
                report.value.is_zero(),
                "maximally entangled state has vanishing single-wire expectations"
            );
        }
        // the backward-propagated Z₀ picks up a genuine two-wire correlation
        let z0 = Observable {
            phase: Cyclo::one(),
            factors: vec![g.find(&pauli_z()).unwrap(), g.identity_index()],
        };
        let (prop, _) = compiled.propagate(&z0);
        let id = g.identity_index();
        assert_ne!(prop.factors[1], id, "CZ entangles the observable across wires");
    }

    #[test]
    fn identity_circuit_z_expectation_is_one() {
        let g = pauli();
        let circuit = Circuit::new(g.clone(), vec![zero_state()]).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let compiled = sim.compile(&circuit).unwrap();
        let report = compiled.expectation(0, &pauli_z(), false).unwrap();
        assert!(report.value.is_one());
        let (p0, p1) = report.outcome_probabilities.unwrap();
        assert!(p0.is_one() && p1.is_zero());
    }

    #[test]
    fn non_hermitian_observable_is_flagged_or_hermitized() {
        let g = pauli();
        let circuit = Circuit::new(g.clone(), vec![zero_state()]).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let compiled = sim.compile(&circuit).unwrap();
        let a = pauli_x().mul(&pauli_z()); // XZ is not Hermitian
        let plain = compiled.expectation(0, &a, false).unwrap();
        assert!(!plain.hermitian);
        let wrapped = compiled.expectation(0, &a, true).unwrap();
        assert!(wrapped.hermitian);
        assert!(wrapped.value.is_real());
        // ⟨0|(XZ + (XZ)†)|0⟩ = 0
        assert!(wrapped.value.is_zero());
    }

    #[test]
    fn hermitian_observables_propagate_to_hermitian_operators() {
        let g = pauli();
        let mut circuit = Circuit::new(g.clone(), vec![zero_state(), zero_state()]).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        circuit.push_gate(phase_gate(), GateWires::One(1)).unwrap();
        circuit.push_gate(cz(), GateWires::Two(0, 1)).unwrap();
        circuit.push_gate(phase_gate(), GateWires::One(0)).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let compiled = sim.compile(&circuit).unwrap();
        for obs in [pauli_z(), pauli_x()] {
            let start = Observable {
                phase: Cyclo::one(),
                factors: vec![g.find(&obs).unwrap(), g.identity_index()],
            };
            let (prop, _) = compiled.propagate(&start);
            // rebuild the dense operator and check Hermiticity exactly
            let dense = g
                .element(prop.factors[0])
                .tensor(g.element(prop.factors[1]))
                .scale(&prop.phase);
            assert_eq!(dense, dense.conj_transpose());
        }
    }

    #[test]
    fn dilation_replaces_markers_and_preserves_expectations() {
        let g = pauli();
        let mut circuit = Circuit::new(g.clone(), vec![zero_state()]).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        circuit.mark_measurement(0).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let dilated = dilate_measurements(&mut sim, &circuit).unwrap();
        assert_eq!(dilated.n_wires, 2);
        assert_eq!(dilated.gates.len(), 3);
        assert!(dilated.measurements.is_empty());
        let compiled = sim.compile(&dilated).unwrap();
        let report = compiled.expectation(0, &pauli_z(), false).unwrap();
        // measure→H on |+⟩ decoheres to the maximal mixture: ⟨Z⟩ = 0
        assert!(report.value.is_zero());
        // dense check: |0⟩ →H |+⟩ →measure mixture {|0⟩,|1⟩} →H {|+⟩,|−⟩}: ⟨Z⟩ = 0
    }

    #[test]
    fn dilation_matches_decoherence_oracle() {
        // mid-circuit measurement as explicit decoherence: the expectation after
        // the dilated circuit must equal Σ_k ⟨ψ|P_k G₂† O G₂ P_k|ψ⟩ exactly
        let g = pauli();
        let alpha = vec![c("3/5"), c("w8^1 * 4/5")];
        let mut circuit = Circuit::new(g.clone(), vec![alpha.clone()]).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        circuit.mark_measurement(0).unwrap();
        circuit.push_gate(phase_gate(), GateWires::One(0)).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let dilated = dilate_measurements(&mut sim, &circuit).unwrap();
        let compiled = sim.compile(&dilated).unwrap();
        let fast = compiled.expectation(0, &pauli_z(), false).unwrap();

        // dense oracle with explicit projection onto each outcome
        let pre = hadamard().apply(&alpha);
        let post_gates = |v: &[Cyclo]| hadamard().apply(&phase_gate().apply(v));
        let mut expect = Cyclo::zero();
        for k in 0..2 {
            let mut projected = vec![Cyclo::zero(), Cyclo::zero()];
            projected[k] = pre[k].clone();
            let out = post_gates(&projected);
            let mut term = Cyclo::zero();
            for (i, amp) in out.iter().enumerate() {
                let sign = if i == 0 { Cyclo::one() } else { c("-1") };
                term = term.add(&amp.conj().mul(amp).mul(&sign));
            }
            expect = expect.add(&term);
        }
        assert_eq!(fast.value, expect, "dilation must preserve expectations exactly");
    }

    #[test]
    fn dilation_without_markers_is_identity() {
        let g = pauli();
        let mut circuit = Circuit::new(g.clone(), vec![zero_state()]).unwrap();
        circuit.push_gate(hadamard(), GateWires::One(0)).unwrap();
        let mut sim = Simulator::new(g.clone(), 10_000);
        let dilated = dilate_measurements(&mut sim, &circuit).unwrap();
        assert_eq!(dilated.gates.len(), circuit.gates.len());
        assert_eq!(dilated.n_wires, circuit.n_wires);
    }

    #[test]
    fn gm_family_dilation_uses_cz() {
        // CNOT does not normalise G₂⊗G₂ but CZ with a |+⟩ ancilla does
        let g2 = MatrixGroup::close(vec![pauli_x(), z_root(2)], 1000).unwrap();
        let mut sim = Simulator::new(g2.clone(), 10_000);
        assert!(sim.table_two(&cnot()).is_err());
        let mut circuit = Circuit::new(g2.clone(), vec![zero_state()]).unwrap();
        circuit.mark_measurement(0).unwrap();
        let dilated = dilate_measurements(&mut sim, &circuit).unwrap();
        assert_eq!(dilated.gates.len(), 1);
        assert_eq!(dilated.gates[0].matrix, cz());
    }

    #[test]
    fn povm_completeness_and_teleportation() {
        let g = pauli();
        let povm = build_teleportation_povm(&g).unwrap();
        assert_eq!(povm.elements.len(), 16);
        let report = verify_teleportation(&povm, &zero_state()).unwrap();
        assert!(report.all_match);
        assert!(report.uniform_probability);
        // a non-basis exact state: (3/5, 4/5)
        let alpha = vec![c("3/5"), c("4/5")];
        let report = verify_teleportation(&povm, &alpha).unwrap();
        assert!(report.all_match && report.uniform_probability);
    }

    #[test]
    fn povm_rejects_bad_groups() {
        let trivial = MatrixGroup::close(vec![CMatrix::identity(2)], 10).unwrap();
        assert!(matches!(
            build_teleportation_povm(&trivial),
            Err(SimError::NotIrreducible)
        ));
        let grow = CMatrix::from_rows(vec![
            vec![c("1"), c("1")],
            vec![c("0"), c("1")],
        ]);
        // parabolic element: infinite group, closure already fails upstream
        assert!(MatrixGroup::close(vec![grow], 100).is_err());
    }

    #[test]
    fn gm_povm_uniform() {
        let g2 = MatrixGroup::close(vec![pauli_x(), z_root(2)], 1000).unwrap();
        let povm = build_teleportation_povm(&g2).unwrap();
        assert_eq!(povm.elements.len(), 32);
        let report = verify_teleportation(&povm, &[Cyclo::zero(), Cyclo::one()]).unwrap();
        assert!(report.all_match && report.uniform_probability);
    }
}
