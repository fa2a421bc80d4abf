//! The bundled catalog of finite U(2) matrix groups and the classification
//! pipeline over it.
//!
//! Fixed entries cover the exceptional base groups (tetrahedral, octahedral,
//! dodecahedral) through explicit irreducible representations of their
//! covering groups, stored as exact cyclotomic data. The infinite dihedral
//! families come as parameterised constructors. Each entry records the
//! expected classification verdict so the whole table doubles as a regression
//! gate: `run_u2_classification` recomputes every verdict from scratch and
//! fails loudly on any disagreement.

use std::sync::Arc;

use thiserror::Error;

use crate::cyclotomic::{gcd, parse_cyclo, Cyclo};
use crate::group::{GroupError, MatrixGroup};
use crate::matrix::{gates, CMatrix};
use crate::normaliser::{
    canonical_phase_class_values, classify_entangling, compute_phase_functions, NormaliserError,
    SearchOptions,
};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Normaliser(#[from] NormaliserError),
    #[error("unknown catalog entry: {0}")]
    UnknownEntry(String),
    #[error("base group of order {0} not recognised in dimension {1}")]
    UnrecognizedBaseGroup(usize, usize),
    #[error("classification verdict mismatch for {0:?}")]
    VerdictMismatch(Vec<String>),
}

/// One group in the catalog, with its expected classification data.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    /// Small-group library label (order, index), when the group is one of the
    /// fixed exceptional entries.
    pub gap_id: Option<(u32, u32)>,
    /// Central quotient family this entry belongs to.
    pub base_group: &'static str,
    pub generators: Vec<CMatrix>,
    pub expected_order: usize,
    pub expected_entangling: bool,
    /// Expected canonical phase-value classes of Φ(G); empty = not asserted.
    pub expected_phase_values: Vec<Cyclo>,
}

fn c(s: &str) -> Cyclo {
    parse_cyclo(s).expect("catalog literals parse")
}

fn w(n: u32, k: i64) -> Cyclo {
    Cyclo::root_of_unity(n, k)
}

/// 1/√2 = (ω₈ + ω₈⁻¹)/2, exact.
fn inv_sqrt2() -> Cyclo {
    c("1/2*w8^1 + 1/2*w8^7")
}

fn mat2(e00: Cyclo, e01: Cyclo, e10: Cyclo, e11: Cyclo) -> CMatrix {
    CMatrix::from_rows(vec![vec![e00, e01], vec![e10, e11]])
}

/// Σ coeff·ω₁₅^k with integer coefficients.
fn omega15_sum(terms: &[(i64, i64)]) -> Cyclo {
    let mut acc = Cyclo::zero();
    for &(coeff, k) in terms {
        acc = acc.add(&w(15, k).scale(&crate::cyclotomic::CRational::from_integer(coeff.into())));
    }
    acc
}

// -- fixed entries -----------------------------------------------------------

fn tetrahedral_1() -> CatalogEntry {
    let r = inv_sqrt2();
    CatalogEntry {
        name: "tetrahedral-M1".into(),
        gap_id: Some((24, 3)),
        base_group: "tetrahedral",
        generators: vec![
            mat2(
                r.mul(&w(8, 1)),
                r.mul(&w(8, 1)),
                r.mul(&w(8, 3)),
                r.mul(&w(8, 7)),
            ),
            mat2(c("-w4^1"), c("0"), c("0"), c("w4^1")),
        ],
        expected_order: 24,
        expected_entangling: false,
        expected_phase_values: vec![w(1, 0), w(3, 1), w(3, 2)],
    }
}

fn tetrahedral_2() -> CatalogEntry {
    let r = inv_sqrt2();
    CatalogEntry {
        name: "tetrahedral-M2".into(),
        gap_id: Some((24, 3)),
        base_group: "tetrahedral",
        generators: vec![
            mat2(
                r.mul(&w(24, 11)),
                r.mul(&w(24, 11)),
                r.mul(&w(24, 17)),
                r.mul(&w(24, 5)),
            ),
            mat2(c("-w4^1"), c("0"), c("0"), c("w4^1")),
        ],
        expected_order: 24,
        expected_entangling: false,
        expected_phase_values: vec![w(1, 0), w(3, 1), w(3, 2)],
    }
}

fn tetrahedral_3() -> CatalogEntry {
    let r = inv_sqrt2();
    CatalogEntry {
        name: "tetrahedral-M3".into(),
        gap_id: Some((24, 3)),
        base_group: "tetrahedral",
        generators: vec![
            mat2(
                r.mul(&w(24, 19)),
                r.mul(&w(24, 19)),
                r.mul(&w(24, 1)),
                r.mul(&w(24, 13)),
            ),
            mat2(c("-w4^1"), c("0"), c("0"), c("w4^1")),
        ],
        expected_order: 24,
        expected_entangling: false,
        expected_phase_values: vec![w(1, 0), w(3, 1), w(3, 2)],
    }
}

/// The unique 2-dimensional irreducible of the ω₃-phase extension of the
/// binary tetrahedral group.
fn tetrahedral_extension() -> CatalogEntry {
    let r = inv_sqrt2();
    CatalogEntry {
        name: "tetrahedral-ext-72-25".into(),
        gap_id: Some((72, 25)),
        base_group: "tetrahedral",
        generators: vec![
            mat2(
                r.mul(&w(24, 11)),
                r.mul(&w(24, 11)),
                r.mul(&w(24, 17)),
                r.mul(&w(24, 5)),
            ),
            mat2(w(12, 1), c("0"), c("0"), w(12, 7)),
        ],
        expected_order: 72,
        expected_entangling: false,
        expected_phase_values: vec![],
    }
}

fn octahedral() -> CatalogEntry {
    let r = inv_sqrt2();
    CatalogEntry {
        name: "octahedral-48-29".into(),
        gap_id: Some((48, 29)),
        base_group: "octahedral",
        generators: vec![
            mat2(
                r.clone(),
                r.mul(&c("-w4^1")),
                r.mul(&c("w4^1")),
                r.neg(),
            ),
            mat2(
                r.mul(&w(8, 3)),
                r.mul(&w(8, 7)),
                r.mul(&w(8, 5)),
                r.mul(&w(8, 5)),
            ),
        ],
        expected_order: 48,
        expected_entangling: false,
        expected_phase_values: vec![w(1, 0), w(4, 1)],
    }
}

/// The unique faithful 2-dimensional irreducible of the ζ₄-phase extension of
/// the binary octahedral group.
fn octahedral_extension() -> CatalogEntry {
    let r = inv_sqrt2();
    CatalogEntry {
        name: "octahedral-96-192".into(),
        gap_id: Some((96, 192)),
        base_group: "octahedral",
        generators: vec![
            mat2(
                r.clone(),
                r.mul(&c("-w4^1")),
                r.mul(&c("w4^1")),
                r.neg(),
            ),
            mat2(
                r.mul(&w(8, 1)),
                r.mul(&w(8, 5)),
                r.mul(&w(8, 3)),
                r.mul(&w(8, 3)),
            ),
        ],
        expected_order: 96,
        expected_entangling: false,
        expected_phase_values: vec![],
    }
}

/// First of the two inequivalent 2-dimensional irreducibles of the binary
/// icosahedral group, as a general-linear (non-unitary) representation.
fn dodecahedral_1() -> CatalogEntry {
    CatalogEntry {
        name: "dodecahedral-120-5-rep1".into(),
        gap_id: Some((120, 5)),
        base_group: "dodecahedral",
        generators: vec![
            mat2(
                omega15_sum(&[(1, 1), (-1, 2), (1, 4), (-1, 8), (-1, 11), (-1, 14)]),
                omega15_sum(&[(-2, 1), (-2, 4), (-1, 7), (-1, 13)]),
                omega15_sum(&[(-1, 11), (-1, 14)]),
                omega15_sum(&[(-1, 1), (-1, 4), (-1, 7), (1, 11), (-1, 13), (1, 14)]),
            ),
            mat2(
                omega15_sum(&[(-1, 1), (1, 2), (-1, 4), (1, 8), (1, 11), (1, 14)]),
                omega15_sum(&[(1, 1), (1, 4)]),
                omega15_sum(&[(1, 2), (1, 8), (2, 11), (2, 14)]),
                omega15_sum(&[(1, 1), (1, 4), (1, 7), (-1, 11), (1, 13), (-1, 14)]),
            ),
        ],
        expected_order: 120,
        expected_entangling: false,
        expected_phase_values: vec![w(1, 0)],
    }
}

/// Second inequivalent 2-dimensional irreducible of the binary icosahedral
/// group, carrying an overall 1/2 factor.
fn dodecahedral_2() -> CatalogEntry {
    let half = |m: CMatrix| gates::scaled(&m, 1, 2);
    CatalogEntry {
        name: "dodecahedral-120-5-rep2".into(),
        gap_id: Some((120, 5)),
        base_group: "dodecahedral",
        generators: vec![
            half(mat2(
                omega15_sum(&[(-2, 1), (-2, 4), (-1, 7), (-1, 11), (-1, 13), (-1, 14)]),
                omega15_sum(&[(2, 2), (1, 7), (2, 8), (1, 11), (1, 13), (1, 14)]),
                omega15_sum(&[(-1, 7), (1, 11), (-1, 13), (1, 14)]),
                omega15_sum(&[(1, 7), (-1, 11), (1, 13), (-1, 14)]),
            )),
            half(mat2(
                omega15_sum(&[(1, 1), (1, 2), (1, 4), (1, 7), (1, 8), (2, 11), (1, 13), (2, 14)]),
                omega15_sum(&[(1, 1), (-1, 2), (1, 4), (1, 7), (-1, 8), (1, 13)]),
                omega15_sum(&[(1, 1), (-1, 2), (1, 4), (1, 7), (-1, 8), (1, 13)]),
                omega15_sum(&[(1, 1), (-1, 2), (1, 4), (-1, 7), (-1, 8), (-1, 13)]),
            )),
        ],
        expected_order: 120,
        expected_entangling: false,
        expected_phase_values: vec![w(1, 0)],
    }
}

// -- parameterised families ---------------------------------------------------

/// The r-th faithful irreducible of the dihedral group of order 2n (n odd):
/// ρ_r(a) = diag(ω_n^r, ω_n^{-r}), ρ_r(b) = X. Requires gcd(r, n) = 1.
pub fn dihedral_odd(n: u32, r: u32) -> CatalogEntry {
    assert!(n >= 3 && n % 2 == 1, "odd dihedral requires odd n ≥ 3");
    assert_eq!(gcd(r, n), 1, "faithful representations need gcd(r, n) = 1");
    let name = if r == 1 {
        format!("dihedral-odd({n})")
    } else {
        format!("dihedral-odd({n},{r})")
    };
    CatalogEntry {
        name,
        gap_id: None,
        base_group: "dihedral",
        generators: vec![
            mat2(w(n, r as i64), c("0"), c("0"), w(n, -(r as i64))),
            gates::pauli_x(),
        ],
        expected_order: 2 * n as usize,
        expected_entangling: false,
        expected_phase_values: vec![w(1, 0), c("-1")],
    }
}

/// The sign extension ⟨diag(ω_{2n}, ω_{2n}^{-1}), X⟩ of the odd dihedral
/// representation, a dihedral group of order 4n.
pub fn dihedral_odd_extension(n: u32) -> CatalogEntry {
    assert!(n >= 3 && n % 2 == 1);
    CatalogEntry {
        name: format!("dihedral-odd-ext({n})"),
        gap_id: None,
        base_group: "dihedral",
        generators: vec![
            mat2(w(2 * n, 1), c("0"), c("0"), w(2 * n, -1)),
            gates::pauli_x(),
        ],
        expected_order: 4 * n as usize,
        expected_entangling: false,
        expected_phase_values: vec![],
    }
}

/// G_m = ⟨X, Z^{1/m}⟩ with Z^{1/m} = diag(1, ω_{2m}); order 8m².
pub fn gm(m: u32) -> CatalogEntry {
    assert!(m >= 1);
    CatalogEntry {
        name: format!("Gm({m})"),
        gap_id: None,
        base_group: "dihedral",
        generators: vec![gates::pauli_x(), gates::z_root(m)],
        expected_order: 8 * (m as usize) * (m as usize),
        expected_entangling: true,
        expected_phase_values: vec![],
    }
}

/// The r-th faithful irreducible of the binary dihedral group of order 4n:
/// ρ_r(a) = diag(ω_{2n}^r, ω_{2n}^{-r}), ρ_r(b) = [[0, (−1)^r], [1, 0]].
/// Requires gcd(r, 2n) = 1.
pub fn binary_dihedral(n: u32, r: u32) -> CatalogEntry {
    assert!(n >= 1);
    assert_eq!(gcd(r, 2 * n), 1, "faithful representations need gcd(r, 2n) = 1");
    let b01 = if r.is_multiple_of(2) { c("1") } else { c("-1") };
    CatalogEntry {
        name: format!("binary-dihedral({n},{r})"),
        gap_id: None,
        base_group: "dihedral",
        generators: vec![
            mat2(w(2 * n, r as i64), c("0"), c("0"), w(2 * n, -(r as i64))),
            mat2(c("0"), b01, c("1"), c("0")),
        ],
        expected_order: 4 * n as usize,
        expected_entangling: n.is_multiple_of(2),
        expected_phase_values: vec![],
    }
}

/// The fixed exceptional entries.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        tetrahedral_1(),
        tetrahedral_2(),
        tetrahedral_3(),
        tetrahedral_extension(),
        octahedral(),
        octahedral_extension(),
        dodecahedral_1(),
        dodecahedral_2(),
    ]
}

/// Resolve a catalog name, including family constructors like
/// `dihedral-odd(5)`, `dihedral-odd(5,2)`, `dihedral-odd-ext(3)`,
/// `binary-dihedral(4,1)`, `Gm(2)`.
pub fn resolve_entry(name: &str) -> Result<CatalogEntry, CatalogError> {
    if let Some(e) = catalog_entries().into_iter().find(|e| e.name == name) {
        return Ok(e);
    }
    let parse_args = |s: &str| -> Option<Vec<u32>> {
        let open = s.find('(')?;
        let close = s.rfind(')')?;
        s[open + 1..close]
            .split(',')
            .map(|p| p.trim().parse().ok())
            .collect()
    };
    if let Some(args) = parse_args(name) {
        let head = &name[..name.find('(').unwrap()];
        match (head, args.as_slice()) {
            ("Gm", [m]) if *m >= 1 => return Ok(gm(*m)),
            ("dihedral-odd", [n]) if *n >= 3 && n % 2 == 1 => return Ok(dihedral_odd(*n, 1)),
            ("dihedral-odd", [n, r]) if *n >= 3 && n % 2 == 1 && gcd(*r, *n) == 1 => {
                return Ok(dihedral_odd(*n, *r))
            }
            ("dihedral-odd-ext", [n]) if *n >= 3 && n % 2 == 1 => {
                return Ok(dihedral_odd_extension(*n))
            }
            ("binary-dihedral", [n, r]) if *n >= 1 && gcd(*r, 2 * n) == 1 => {
                return Ok(binary_dihedral(*n, *r))
            }
            _ => {}
        }
    }
    Err(CatalogError::UnknownEntry(name.to_string()))
}

/// Close a catalog entry into its matrix group.
pub fn build_group(entry: &CatalogEntry, max_order: usize) -> Result<Arc<MatrixGroup>, CatalogError> {
    Ok(MatrixGroup::close(entry.generators.clone(), max_order)?)
}

// -- base-group recognition ----------------------------------------------------

/// Order of the Schur multiplier of the dihedral group of order 2n.
pub fn schur_multiplier_dihedral(n: u32) -> u32 {
    assert!(n >= 1);
    gcd(2, n)
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BaseGroupInfo {
    pub quotient_order: usize,
    pub family: String,
}

/// The central quotient G/Z(G) identified by order and element-order
/// statistics (for 2-dimensional groups).
pub fn base_group_of(group: &Arc<MatrixGroup>) -> Result<BaseGroupInfo, CatalogError> {
    let s = group.scalar_order() as usize;
    let q = group.len() / s;
    if group.dim() != 2 {
        return Err(CatalogError::UnrecognizedBaseGroup(q, group.dim()));
    }
    // order of each class modulo scalars: least k with gᵏ scalar
    let mut stats: std::collections::BTreeMap<u32, usize> = Default::default();
    let mut seen = std::collections::HashSet::new();
    for i in 0..group.len() as u32 {
        let key = group.element(i).projective_normal_form().canonical_key();
        if !seen.insert(key) {
            continue;
        }
        let mut acc = i;
        let mut k = 1u32;
        while group.scalar_phase_of(acc).is_none() {
            acc = group.mul(acc, i);
            k += 1;
        }
        *stats.entry(k).or_default() += 1;
    }
    debug_assert_eq!(stats.values().sum::<usize>(), q);
    let count = |k: u32| stats.get(&k).copied().unwrap_or(0);
    let family = if q == 12 && count(2) == 3 && count(3) == 8 {
        "tetrahedral".to_string()
    } else if q == 24 && count(2) == 9 && count(3) == 8 && count(4) == 6 {
        "octahedral".to_string()
    } else if q == 60 && count(2) == 15 && count(3) == 20 && count(5) == 24 {
        "dodecahedral".to_string()
    } else if q.is_multiple_of(2) && {
        let k = (q / 2) as u32;
        // dihedral of order 2k: k reflections (+ the half-turn when k is even)
        let expected_involutions = k as usize + if k.is_multiple_of(2) { 1 } else { 0 };
        (count(2) == expected_involutions && stats.keys().all(|&o| o == 2 || k.is_multiple_of(o)))
            || q == 2 // degenerate
    } {
        format!("dihedral of order {q}")
    } else if stats.keys().max().copied().unwrap_or(1) as usize == q {
        format!("cyclic of order {q}")
    } else {
        return Err(CatalogError::UnrecognizedBaseGroup(q, 2));
    };
    Ok(BaseGroupInfo { quotient_order: q, family })
}

// -- the classification pipeline ------------------------------------------------

#[derive(Debug, Clone)]
pub struct ClassificationConfig {
    /// Odd dihedral orders to sample.
    pub odd_dihedral_n: Vec<u32>,
    /// G_m exponents to sample.
    pub gm_m: Vec<u32>,
    /// When set, restrict the run to these entry names.
    pub only_entries: Option<Vec<String>>,
    pub options: SearchOptions,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig {
            odd_dihedral_n: vec![3, 5, 7],
            gm_m: vec![1, 2, 3, 4],
            only_entries: None,
            options: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ClassificationRow {
    pub name: String,
    pub gap_id: Option<(u32, u32)>,
    pub order: usize,
    pub base_group: String,
    pub phase_values: Vec<String>,
    pub phase_values_match: Option<bool>,
    pub expected_entangling: bool,
    pub entangling: bool,
    pub verdict_match: bool,
    pub normalisers_found: usize,
    pub entangling_found: usize,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ClassificationTable {
    pub rows: Vec<ClassificationRow>,
    pub all_match: bool,
}

/// Every entry in the classification set: fixed exceptional entries plus the
/// sampled dihedral families.
pub fn classification_entries(config: &ClassificationConfig) -> Vec<CatalogEntry> {
    let mut entries = catalog_entries();
    for &n in &config.odd_dihedral_n {
        entries.push(dihedral_odd(n, 1));
    }
    for &m in &config.gm_m {
        entries.push(gm(m));
    }
    if let Some(only) = &config.only_entries {
        entries.retain(|e| only.iter().any(|n| n == &e.name));
    }
    entries
}

/// Classify one entry: build, compute Φ classes, classify the tensor square.
pub fn classify_entry(
    entry: &CatalogEntry,
    options: &SearchOptions,
) -> Result<ClassificationRow, CatalogError> {
    let started = std::time::Instant::now();
    let group = build_group(entry, options.max_order)?;
    let base = base_group_of(&group)
        .map(|b| b.family)
        .unwrap_or_else(|_| "unrecognised".to_string());
    let tuples = compute_phase_functions(&group)?;
    let phase_values = canonical_phase_class_values(&group, &tuples);
    let phase_values_match = if entry.expected_phase_values.is_empty() {
        None
    } else {
        let mut expected = entry.expected_phase_values.clone();
        expected.sort_by_key(Cyclo::canonical_key);
        let mut got = phase_values.clone();
        got.sort_by_key(Cyclo::canonical_key);
        Some(expected == got)
    };
    let report = classify_entangling(&group, options)?;
    let entangling = report.any_entangling();
    Ok(ClassificationRow {
        name: entry.name.clone(),
        gap_id: entry.gap_id,
        order: group.len(),
        base_group: base,
        phase_values: phase_values.iter().map(Cyclo::to_string).collect(),
        phase_values_match,
        expected_entangling: entry.expected_entangling,
        entangling,
        verdict_match: entangling == entry.expected_entangling,
        normalisers_found: report.found.len(),
        entangling_found: report
            .found
            .iter()
            .filter(|f| f.entangling == Some(true))
            .count(),
        elapsed_ms: started.elapsed().as_millis(),
    })
}

/// The flagship regression: classify the whole catalog and compare against the
/// expected verdicts. Errors with the mismatching entry names if any verdict
/// (or asserted phase range) disagrees.
pub fn run_u2_classification(config: &ClassificationConfig) -> Result<ClassificationTable, CatalogError> {
    let entries = classification_entries(config);
    let mut rows = Vec::with_capacity(entries.len());
    for entry in &entries {
        rows.push(classify_entry(entry, &config.options)?);
    }
    let mismatched: Vec<String> = rows
        .iter()
        .filter(|r| !r.verdict_match || r.phase_values_match == Some(false))
        .map(|r| r.name.clone())
        .collect();
    let table = ClassificationTable { all_match: mismatched.is_empty(), rows };
    if !mismatched.is_empty() {
        return Err(CatalogError::VerdictMismatch(mismatched));
    }
    Ok(table)
}
