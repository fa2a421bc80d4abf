//! Finite matrix groups over cyclotomic scalars.
//!
//! A [`MatrixGroup`] owns the full (exact) element list plus an index layer
//! that makes group arithmetic cheap: each element carries a modular
//! fingerprint — its entries mapped through ℚ(ζ_N) → F_p for two independent
//! primes p ≡ 1 mod N — and a hash table maps fingerprints back to element
//! indices. Fingerprinting is a ring homomorphism, so products can be computed
//! and located without touching big-rational arithmetic. Injectivity of the
//! fingerprint table over the element set is checked exactly while the table
//! is built (a collision triggers a rebuild with fresh primes), which makes
//! index-level multiplication exact, not probabilistic.
//!
//! Element indices are assigned by sorting canonical keys, so identical groups
//! built along different paths expose identical indexing.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::{Complex, DMatrix};
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::cyclotomic::{lcm, CRational, Cyclo};
use crate::matrix::CMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("closure exceeded the element budget of {0}")]
    ClosureBudgetExceeded(usize),
    #[error("generator {0} is singular")]
    SingularGenerator(usize),
    #[error("no generators supplied")]
    EmptyGenerators,
    #[error("generators have mixed dimensions")]
    DimensionMismatch,
    #[error("matrix is not a member of the group")]
    NotAMember,
    #[error("centre contains a non-scalar element")]
    NonScalarCentre,
    #[error("unitarisation residual {0} exceeds tolerance {1}")]
    ToleranceNotMet(f64, f64),
    #[error("extension phase is not a root of unity: {0}")]
    InvalidPhase(String),
    #[error("working conductor {0} exceeds the configured cap {1}")]
    ConductorCapExceeded(u32, u32),
}

// ---------------------------------------------------------------------------
// modular fingerprints
// ---------------------------------------------------------------------------

const MAX_DIM: usize = 4;
const FP_PRIMES: usize = 2;

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    // deterministic Miller–Rabin for u64 with the standard witness set
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime p ≡ 1 (mod n) with p ≥ start.
fn prime_one_mod(n: u64, start: u64) -> u64 {
    let mut p = (start / n) * n + 1;
    if p < start {
        p += n;
    }
    loop {
        if p > 2 && is_prime_u64(p) {
            return p;
        }
        p += n;
    }
}

/// An element of exact multiplicative order n in F_p (requires n | p−1).
fn root_of_order(n: u64, p: u64) -> u64 {
    debug_assert_eq!((p - 1) % n, 0);
    let cofactor = (p - 1) / n;
    // prime factors of n
    let mut factors = Vec::new();
    let mut rem = n;
    let mut q = 2;
    while q * q <= rem {
        if rem.is_multiple_of(q) {
            factors.push(q);
            while rem.is_multiple_of(q) {
                rem /= q;
            }
        }
        q += 1;
    }
    if rem > 1 {
        factors.push(rem);
    }
    let mut x = 2u64;
    loop {
        let z = powmod(x, cofactor, p);
        if z != 0 && powmod(z, n, p) == 1 && factors.iter().all(|&f| powmod(z, n / f, p) != 1) {
            return z;
        }
        x += 1;
    }
}

/// Fingerprint of a matrix: entries pushed through ℚ(ζ_N) → F_p, per prime.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct MatPrint {
    vals: [[u64; MAX_DIM * MAX_DIM]; FP_PRIMES],
}

struct FingerprintCtx {
    conductor: u32,
    primes: [u64; FP_PRIMES],
    /// zeta_pow[i][k] = ζ^k image in F_{p_i}
    zeta_pow: [Vec<u64>; FP_PRIMES],
}

impl FingerprintCtx {
    fn new(conductor: u32, attempt: u64) -> Self {
        let n = conductor.max(1) as u64;
        let base = 1u64 << 61;
        let p0 = prime_one_mod(n, base + attempt * (1 << 58));
        let p1 = prime_one_mod(n, p0 + 1);
        let primes = [p0, p1];
        let zeta_pow = [Self::build_pows(n, p0), Self::build_pows(n, p1)];
        FingerprintCtx { conductor: conductor.max(1), primes, zeta_pow }
    }

    fn build_pows(n: u64, p: u64) -> Vec<u64> {
        let z = if n == 1 { 1 } else { root_of_order(n, p) };
        let mut pows = Vec::with_capacity(n as usize);
        let mut acc = 1u64;
        for _ in 0..n {
            pows.push(acc);
            acc = mulmod(acc, z, p);
        }
        pows
    }

    /// None when a coefficient denominator vanishes mod p (retry with new primes).
    fn embed_scalar(&self, c: &Cyclo, which: usize) -> Option<u64> {
        let p = self.primes[which];
        let scale = self.conductor / c.conductor().max(1);
        let mut acc = 0u64;
        for (k, coeff) in c.terms() {
            let num = bigint_mod(coeff.numer(), p);
            let den = bigint_mod(coeff.denom(), p);
            if den == 0 {
                return None;
            }
            let den_inv = powmod(den, p - 2, p);
            let val = mulmod(num, den_inv, p);
            let zk = self.zeta_pow[which][((k * scale) % self.conductor.max(1)) as usize];
            acc = (acc + mulmod(val, zk, p)) % p;
        }
        Some(acc)
    }

    fn embed(&self, m: &CMatrix) -> Option<MatPrint> {
        let d = m.dim();
        debug_assert!(d <= MAX_DIM);
        let mut vals = [[0u64; MAX_DIM * MAX_DIM]; FP_PRIMES];
        for which in 0..FP_PRIMES {
            for i in 0..d {
                for j in 0..d {
                    vals[which][i * MAX_DIM + j] = self.embed_scalar(&m[(i, j)], which)?;
                }
            }
        }
        Some(MatPrint { vals })
    }

    fn mul_prints(&self, a: &MatPrint, b: &MatPrint, d: usize) -> MatPrint {
        let mut vals = [[0u64; MAX_DIM * MAX_DIM]; FP_PRIMES];
        for which in 0..FP_PRIMES {
            let p = self.primes[which];
            for i in 0..d {
                for k in 0..d {
                    let a_ik = a.vals[which][i * MAX_DIM + k];
                    if a_ik == 0 {
                        continue;
                    }
                    for j in 0..d {
                        let cur = &mut vals[which][i * MAX_DIM + j];
                        *cur = (*cur + mulmod(a_ik, b.vals[which][k * MAX_DIM + j], p)) % p;
                    }
                }
            }
        }
        MatPrint { vals }
    }
}

fn bigint_mod(i: &num_bigint::BigInt, p: u64) -> u64 {
    let m = num_bigint::BigInt::from(p);
    let r = ((i % &m) + &m) % &m;
    r.to_u64().expect("residue fits u64")
}

// ---------------------------------------------------------------------------
// the group itself
// ---------------------------------------------------------------------------

/// Numeric images of the group elements together with the conjugating matrix.
pub type UnitarizedGroup = (Vec<DMatrix<Complex<f64>>>, DMatrix<Complex<f64>>);

/// Metadata linking a tensor-square group back to its factor group.
pub struct TensorMeta {
    pub factor: Arc<MatrixGroup>,
    /// pair_index[i * |factor| + j] = index of gᵢ⊗gⱼ
    pub pair_index: Vec<u32>,
    /// one chosen factorisation per element
    pub decomp: Vec<(u32, u32)>,
}

/// Metadata linking a central phase extension back to its base group.
pub struct ExtMeta {
    pub base: Arc<MatrixGroup>,
    /// element = phase · base_element
    pub decomp: Vec<(Cyclo, u32)>,
}

impl std::fmt::Debug for MatrixGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatrixGroup(dim={}, order={})", self.dim, self.elements.len())
    }
}

pub struct MatrixGroup {
    dim: usize,
    elements: Vec<CMatrix>,
    generators: Vec<u32>,
    identity: u32,
    inv: Vec<u32>,
    orders: Vec<u32>,
    traces: Vec<Cyclo>,
    charpoly_keys: Vec<Arc<str>>,
    charpoly_buckets: HashMap<Arc<str>, Vec<u32>>,
    /// scalar phase when the element is c·I
    scalar_phase: Vec<Option<Cyclo>>,
    /// indices of scalar elements; their phases form μ_s
    scalar_elements: Vec<u32>,
    /// order of the scalar subgroup and its minimal-argument generator ζ_s
    s: u32,
    min_phase: Cyclo,
    /// all elements commuting with every generator
    centre: Vec<u32>,
    centre_is_scalar: bool,
    irreducible: bool,
    ctx: Arc<FingerprintCtx>,
    prints: Vec<MatPrint>,
    index: HashMap<MatPrint, u32>,
    /// mulcols[t][i] = index of elementᵢ · generator_t
    mulcols: Vec<Vec<u32>>,
    tensor_meta: Option<TensorMeta>,
    ext_meta: Option<ExtMeta>,
    projective_index: OnceLock<HashMap<String, Vec<u32>>>,
}

struct RawGroup {
    dim: usize,
    elements: Vec<CMatrix>,
    generators: Vec<u32>,
    mulcols: Vec<Vec<u32>>,
    inv: Vec<u32>,
    identity: u32,
    tensor_meta: Option<TensorMeta>,
    ext_meta: Option<ExtMeta>,
}

impl MatrixGroup {
    // -- construction -------------------------------------------------------

    /// Breadth-first product closure of the generating set.
    pub fn close(generators: Vec<CMatrix>, max_order: usize) -> Result<Arc<MatrixGroup>, GroupError> {
        if generators.is_empty() {
            return Err(GroupError::EmptyGenerators);
        }
        let dim = generators[0].dim();
        if generators.iter().any(|g| g.dim() != dim) {
            return Err(GroupError::DimensionMismatch);
        }
        assert!(dim <= MAX_DIM, "dimensions above {MAX_DIM} are unsupported");
        for (i, g) in generators.iter().enumerate() {
            if g.det().is_zero() {
                return Err(GroupError::SingularGenerator(i));
            }
        }
        // the working conductor is fixed by the generators: products never
        // leave the compositum of their entry fields
        let mut conductor = 1u32;
        for g in &generators {
            for e in g.entries() {
                conductor = lcm(conductor, e.conductor());
            }
        }
        let cap = crate::cyclotomic::conductor_cap();
        if conductor > cap {
            return Err(GroupError::ConductorCapExceeded(conductor, cap));
        }
        // drop exact duplicate generators, keep order
        let mut gens: Vec<CMatrix> = Vec::new();
        for g in generators {
            if !gens.contains(&g) {
                gens.push(g);
            }
        }

        'rebuild: for attempt in 0.. {
            let ctx = Arc::new(FingerprintCtx::new(conductor, attempt));
            let mut elements: Vec<CMatrix> = Vec::new();
            let mut prints: Vec<MatPrint> = Vec::new();
            let mut index: HashMap<MatPrint, u32> = HashMap::new();
            let mut parents: Vec<(u32, u32)> = Vec::new(); // (parent, generator)
            let mut mulcols: Vec<Vec<u32>> = vec![Vec::new(); gens.len()];

            let insert = |m: CMatrix,
                              elements: &mut Vec<CMatrix>,
                              prints: &mut Vec<MatPrint>,
                              index: &mut HashMap<MatPrint, u32>|
             -> Result<(u32, bool), ()> {
                let Some(pr) = ctx.embed(&m) else { return Err(()) };
                if let Some(&i) = index.get(&pr) {
                    if elements[i as usize] != m {
                        return Err(()); // fingerprint collision: rebuild
                    }
                    return Ok((i, false));
                }
                let i = elements.len() as u32;
                elements.push(m);
                prints.push(pr);
                index.insert(pr, i);
                Ok((i, true))
            };

            let id = CMatrix::identity(dim);
            let Ok((id_idx, _)) = insert(id, &mut elements, &mut prints, &mut index) else {
                continue 'rebuild;
            };
            parents.push((0, 0));
            let mut queue: Vec<u32> = vec![id_idx];
            let mut head = 0usize;
            while head < queue.len() {
                let cur = queue[head];
                head += 1;
                let cur_matrix = elements[cur as usize].clone();
                for (t, g) in gens.iter().enumerate() {
                    let product = cur_matrix.mul(g);
                    let Ok((idx, new)) = insert(product, &mut elements, &mut prints, &mut index)
                    else {
                        continue 'rebuild;
                    };
                    mulcols[t].push(idx);
                    debug_assert_eq!(mulcols[t].len() - 1, cur as usize);
                    if new {
                        parents.push((cur, t as u32));
                        queue.push(idx);
                        if elements.len() > max_order {
                            return Err(GroupError::ClosureBudgetExceeded(max_order));
                        }
                    }
                }
            }

            // generator indices
            let mut gen_idxs = Vec::with_capacity(gens.len());
            for g in &gens {
                let Some(pr) = ctx.embed(g) else { continue 'rebuild };
                gen_idxs.push(*index.get(&pr).expect("generator is in its own closure"));
            }

            // inverses along the spanning tree: (parent·g)⁻¹ = g⁻¹·parent⁻¹
            let mut gen_inv_idx = Vec::with_capacity(gens.len());
            for g in &gens {
                let gi = g.inverse().expect("generator invertibility was checked");
                let Some(pr) = ctx.embed(&gi) else { continue 'rebuild };
                gen_inv_idx.push(*index.get(&pr).expect("inverse stays in the closure"));
            }
            let dim_local = dim;
            let mul_fast = |a: u32, b: u32, prints: &[MatPrint], index: &HashMap<MatPrint, u32>| -> u32 {
                let pr = ctx.mul_prints(&prints[a as usize], &prints[b as usize], dim_local);
                *index.get(&pr).expect("closed under multiplication")
            };
            let mut inv = vec![u32::MAX; elements.len()];
            inv[id_idx as usize] = id_idx;
            for &e in queue.iter().skip(1) {
                let (parent, t) = parents[e as usize];
                inv[e as usize] = mul_fast(gen_inv_idx[t as usize], inv[parent as usize], &prints, &index);
            }

            let raw = RawGroup {
                dim,
                elements,
                generators: gen_idxs,
                mulcols,
                inv,
                identity: id_idx,
                tensor_meta: None,
                ext_meta: None,
            };
            return Ok(Arc::new(Self::finalise(raw, ctx, prints, index)));
        }
        unreachable!()
    }

    /// Shared post-processing: deterministic ordering, orders, traces,
    /// characteristic polynomials, centre, irreducibility.
    fn finalise(
        raw: RawGroup,
        ctx: Arc<FingerprintCtx>,
        prints: Vec<MatPrint>,
        _old_index: HashMap<MatPrint, u32>,
    ) -> MatrixGroup {
        let n = raw.elements.len();
        // deterministic indexing: sort by canonical key
        let mut order_perm: Vec<u32> = (0..n as u32).collect();
        let keys: Vec<String> = raw.elements.iter().map(|m| m.canonical_key()).collect();
        order_perm.sort_by(|&a, &b| keys[a as usize].cmp(&keys[b as usize]));
        let mut new_of_old = vec![0u32; n];
        for (new, &old) in order_perm.iter().enumerate() {
            new_of_old[old as usize] = new as u32;
        }
        let remap = |v: u32| new_of_old[v as usize];

        let mut elements = vec![CMatrix::zero(raw.dim); n];
        let mut new_prints = vec![prints[0]; n];
        for (old, m) in raw.elements.into_iter().enumerate() {
            elements[new_of_old[old] as usize] = m;
            new_prints[new_of_old[old] as usize] = prints[old];
        }
        let mut index = HashMap::with_capacity(n);
        for (i, pr) in new_prints.iter().enumerate() {
            index.insert(*pr, i as u32);
        }
        let generators: Vec<u32> = raw.generators.iter().map(|&g| remap(g)).collect();
        let identity = remap(raw.identity);
        let mut inv = vec![0u32; n];
        for old in 0..n {
            inv[new_of_old[old] as usize] = remap(raw.inv[old]);
        }
        let mut mulcols = Vec::with_capacity(raw.mulcols.len());
        for col in raw.mulcols {
            let mut newcol = vec![0u32; n];
            for (old, &target) in col.iter().enumerate() {
                newcol[new_of_old[old] as usize] = remap(target);
            }
            mulcols.push(newcol);
        }
        let tensor_meta = raw.tensor_meta.map(|m| TensorMeta {
            factor: m.factor,
            pair_index: m.pair_index.iter().map(|&v| remap(v)).collect(),
            decomp: {
                let mut d = vec![(0u32, 0u32); n];
                for (old, pair) in m.decomp.into_iter().enumerate() {
                    d[new_of_old[old] as usize] = pair;
                }
                d
            },
        });
        let ext_meta = raw.ext_meta.map(|m| ExtMeta {
            base: m.base,
            decomp: {
                let mut d = vec![(Cyclo::zero(), 0u32); n];
                for (old, pair) in m.decomp.into_iter().enumerate() {
                    d[new_of_old[old] as usize] = pair;
                }
                d
            },
        });

        let mul = |a: u32, b: u32| -> u32 {
            let pr = ctx.mul_prints(&new_prints[a as usize], &new_prints[b as usize], raw.dim);
            *index.get(&pr).expect("closed under multiplication")
        };

        // element orders via index chains
        let mut orders = vec![0u32; n];
        for i in 0..n as u32 {
            let mut acc = i;
            let mut k = 1u32;
            while acc != identity {
                acc = mul(acc, i);
                k += 1;
                assert!(k as usize <= n + 1, "order exceeds group size");
            }
            orders[i as usize] = k;
        }

        // traces and characteristic polynomials from power-sum traces
        let traces: Vec<Cyclo> = elements.iter().map(|m| m.trace()).collect();
        let mut charpoly_keys: Vec<Arc<str>> = Vec::with_capacity(n);
        let mut charpoly_buckets: HashMap<Arc<str>, Vec<u32>> = HashMap::new();
        for i in 0..n as u32 {
            let d = raw.dim;
            let mut power_traces = Vec::with_capacity(d);
            let mut acc = i;
            for _ in 0..d {
                power_traces.push(traces[acc as usize].clone());
                acc = mul(acc, i);
            }
            let elem_sym = newton_elementary(&power_traces);
            let key_str = elem_sym
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";");
            let key: Arc<str> = match charpoly_buckets.get_key_value(key_str.as_str()) {
                Some((k, _)) => k.clone(),
                None => Arc::from(key_str.as_str()),
            };
            charpoly_buckets.entry(key.clone()).or_default().push(i);
            charpoly_keys.push(key);
        }

        // scalar elements
        let mut scalar_phase = Vec::with_capacity(n);
        let mut scalar_elements = Vec::new();
        for (i, m) in elements.iter().enumerate() {
            let sc = m.as_scalar();
            if sc.is_some() {
                scalar_elements.push(i as u32);
            }
            scalar_phase.push(sc);
        }
        let s = scalar_elements.len() as u32;
        let min_phase = Cyclo::root_of_unity(s, 1);
        // consistency: the scalar subgroup must be exactly μ_s
        debug_assert!(scalar_elements.iter().all(|&i| {
            scalar_phase[i as usize]
                .as_ref()
                .map(|c| c.pow(s as i64).map(|p| p.is_one()).unwrap_or(false))
                .unwrap_or(false)
        }));

        // centre: commutes with every generator
        let mut centre = Vec::new();
        for i in 0..n as u32 {
            if generators.iter().all(|&g| mul(i, g) == mul(g, i)) {
                centre.push(i);
            }
        }
        let centre_is_scalar = centre.iter().all(|&i| scalar_phase[i as usize].is_some());

        // exact character-norm irreducibility: (1/|G|) Σ tr(g)·conj(tr g) = 1
        let mut char_norm = Cyclo::zero();
        for t in &traces {
            char_norm = char_norm.add(&t.norm_sq());
        }
        let irreducible = char_norm
            .scale(&CRational::new(1.into(), (n as i64).into()))
            .is_one();

        MatrixGroup {
            dim: raw.dim,
            elements,
            generators,
            identity,
            inv,
            orders,
            traces,
            charpoly_keys,
            charpoly_buckets,
            scalar_phase,
            scalar_elements,
            s,
            min_phase,
            centre,
            centre_is_scalar,
            irreducible,
            ctx,
            prints: new_prints,
            index,
            mulcols,
            tensor_meta,
            ext_meta,
            projective_index: OnceLock::new(),
        }
    }

    /// The tensor square {g₁⊗g₂}, generated by {g⊗I, I⊗g}.
    pub fn tensor_square(self: &Arc<Self>, max_order: usize) -> Result<Arc<MatrixGroup>, GroupError> {
        let n = self.len();
        let dim = self.dim * self.dim;
        assert!(dim <= MAX_DIM, "tensor square dimension exceeds supported bound");
        let ctx = self.ctx.clone();
        let mut elements: Vec<CMatrix> = Vec::new();
        let mut prints: Vec<MatPrint> = Vec::new();
        let mut index: HashMap<MatPrint, u32> = HashMap::new();
        let mut decomp: Vec<(u32, u32)> = Vec::new();
        let mut pair_index = vec![0u32; n * n];
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                // fingerprint of the product is the Kronecker product of prints
                let pr = kron_print(&self.prints[i as usize], &self.prints[j as usize], self.dim, &ctx);
                let idx = match index.get(&pr) {
                    Some(&idx) => {
                        debug_assert_eq!(
                            elements[idx as usize],
                            self.elements[i as usize].tensor(&self.elements[j as usize])
                        );
                        idx
                    }
                    None => {
                        let m = self.elements[i as usize].tensor(&self.elements[j as usize]);
                        let idx = elements.len() as u32;
                        if elements.len() >= max_order {
                            return Err(GroupError::ClosureBudgetExceeded(max_order));
                        }
                        elements.push(m);
                        prints.push(pr);
                        index.insert(pr, idx);
                        decomp.push((i, j));
                        idx
                    }
                };
                pair_index[(i as usize) * n + j as usize] = idx;
            }
        }
        // generators: g⊗I then I⊗g, in the factor group's generator order
        let mut generators = Vec::new();
        let mut mulcols = Vec::new();
        for &g in &self.generators {
            generators.push(pair_index[(g as usize) * n + self.identity as usize]);
        }
        for &g in &self.generators {
            generators.push(pair_index[(self.identity as usize) * n + g as usize]);
        }
        for &g in self.generators.iter() {
            let mut col = vec![0u32; elements.len()];
            for (e, &(a, b)) in decomp.iter().enumerate() {
                col[e] = pair_index[(self.mul(a, g) as usize) * n + b as usize];
            }
            mulcols.push(col);
        }
        for &g in self.generators.iter() {
            let mut col = vec![0u32; elements.len()];
            for (e, &(a, b)) in decomp.iter().enumerate() {
                col[e] = pair_index[(a as usize) * n + self.mul(b, g) as usize];
            }
            mulcols.push(col);
        }
        let mut inv = vec![0u32; elements.len()];
        for (e, &(a, b)) in decomp.iter().enumerate() {
            inv[e] = pair_index[(self.inv[a as usize] as usize) * n + self.inv[b as usize] as usize];
        }
        let identity = pair_index[(self.identity as usize) * n + self.identity as usize];
        let raw = RawGroup {
            dim,
            elements,
            generators,
            mulcols,
            inv,
            identity,
            tensor_meta: Some(TensorMeta { factor: self.clone(), pair_index, decomp }),
            ext_meta: None,
        };
        let g = Self::finalise(raw, ctx, prints, index);
        if self.irreducible {
            // the centre of the square is the paired scalar set, hence again μ_s
            debug_assert!(g.centre_is_scalar);
            debug_assert_eq!(g.s, self.s);
        }
        Ok(Arc::new(g))
    }

    /// Extend by central phases: ⟨{φI}, G⟩. Phases must be roots of unity.
    pub fn phase_extension(
        self: &Arc<Self>,
        phases: &[Cyclo],
        max_order: usize,
    ) -> Result<Arc<MatrixGroup>, GroupError> {
        let mut s_ext = self.s;
        for phi in phases {
            let Some((ord, _)) = phi.as_root_of_unity() else {
                return Err(GroupError::InvalidPhase(phi.to_string()));
            };
            s_ext = lcm(s_ext, ord);
        }
        if s_ext == self.s {
            return Ok(self.clone());
        }
        let cap = crate::cyclotomic::conductor_cap();
        let new_conductor = lcm(
            self.ctx.conductor,
            Cyclo::root_of_unity(s_ext, 1).conductor(),
        );
        if new_conductor > cap {
            return Err(GroupError::ConductorCapExceeded(new_conductor, cap));
        }
        let copies = (s_ext / self.s) as usize;
        let n = self.len();
        if copies * n > max_order {
            return Err(GroupError::ClosureBudgetExceeded(max_order));
        }

        'rebuild: for attempt in 0.. {
            let ctx = Arc::new(FingerprintCtx::new(new_conductor, attempt));
            let mut elements = Vec::with_capacity(copies * n);
            let mut prints = Vec::with_capacity(copies * n);
            let mut index = HashMap::with_capacity(copies * n);
            let mut decomp = Vec::with_capacity(copies * n);
            // index layout: e * n + g  for element ζ_{s_ext}^e · g
            for e in 0..copies {
                let phase = Cyclo::root_of_unity(s_ext, e as i64);
                for g in 0..n {
                    let m = if e == 0 {
                        self.elements[g].clone()
                    } else {
                        self.elements[g].scale(&phase)
                    };
                    let Some(pr) = ctx.embed(&m) else { continue 'rebuild };
                    if index.insert(pr, (e * n + g) as u32).is_some() {
                        continue 'rebuild; // collision
                    }
                    elements.push(m);
                    prints.push(pr);
                    decomp.push((phase.clone(), g as u32));
                }
            }
            // generators: those of G, plus ζ_{s_ext}·I (at layout slot e=1, g=identity)
            let mut generators: Vec<u32> = self.generators.clone();
            generators.push(n as u32 + self.identity);
            let mut mulcols = Vec::new();
            for &g in &self.generators {
                let mut col = vec![0u32; copies * n];
                for e in 0..copies {
                    for x in 0..n {
                        col[e * n + x] = (e * n) as u32 + self.mul(x as u32, g);
                    }
                }
                mulcols.push(col);
            }
            {
                // multiply by ζ_{s_ext}I: bump e; on wrap, fold ζ_s into the base element
                let zs_idx = self
                    .scalar_index_of(&Cyclo::root_of_unity(self.s, 1))
                    .expect("ζ_s I is a group element");
                let mut col = vec![0u32; copies * n];
                for e in 0..copies {
                    for x in 0..n {
                        col[e * n + x] = if e + 1 < copies {
                            ((e + 1) * n + x) as u32
                        } else {
                            self.mul(x as u32, zs_idx)
                        };
                    }
                }
                mulcols.push(col);
            }
            let mut inv = vec![0u32; copies * n];
            for e in 0..copies {
                let inv_phase = Cyclo::root_of_unity(s_ext, -(e as i64));
                for x in 0..n {
                    let target = self.elements[self.inv[x] as usize].scale(&inv_phase);
                    let Some(pr) = ctx.embed(&target) else { continue 'rebuild };
                    inv[e * n + x] = *index.get(&pr).expect("inverse stays in extension");
                }
            }
            let raw = RawGroup {
                dim: self.dim,
                elements,
                generators,
                mulcols,
                inv,
                identity: self.identity,
                tensor_meta: None,
                ext_meta: Some(ExtMeta { base: self.clone(), decomp }),
            };
            return Ok(Arc::new(Self::finalise(raw, ctx, prints, index)));
        }
        unreachable!()
    }

    fn scalar_index_of(&self, phase: &Cyclo) -> Option<u32> {
        self.scalar_elements
            .iter()
            .copied()
            .find(|&i| self.scalar_phase[i as usize].as_ref() == Some(phase))
    }

    // -- accessors -----------------------------------------------------------

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty() // groups always contain the identity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, i: u32) -> &CMatrix {
        &self.elements[i as usize]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn generator_indices(&self) -> &[u32] {
        &self.generators
    }

    pub fn identity_index(&self) -> u32 {
        self.identity
    }

    pub fn inverse_index(&self, i: u32) -> u32 {
        self.inv[i as usize]
    }

    pub fn order_of(&self, i: u32) -> u32 {
        self.orders[i as usize]
    }

    pub fn trace_of(&self, i: u32) -> &Cyclo {
        &self.traces[i as usize]
    }

    /// All elements of the given order, in canonical index order.
    pub fn elements_of_order(&self, order: u32) -> Vec<u32> {
        (0..self.len() as u32).filter(|&i| self.orders[i as usize] == order).collect()
    }

    /// (Comm(U), NComm(U)): elements commuting / not commuting with element i.
    /// Built on demand; the two sets partition the group.
    pub fn comm_sets(&self, i: u32) -> (Vec<u32>, Vec<u32>) {
        let mut comm = Vec::new();
        let mut ncomm = Vec::new();
        for j in 0..self.len() as u32 {
            if self.commute(i, j) {
                comm.push(j);
            } else {
                ncomm.push(j);
            }
        }
        (comm, ncomm)
    }

    pub fn charpoly_key_of(&self, i: u32) -> &Arc<str> {
        &self.charpoly_keys[i as usize]
    }

    pub fn charpoly_class(&self, key: &Arc<str>) -> &[u32] {
        self.charpoly_buckets
            .get(key)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn scalar_phase_of(&self, i: u32) -> Option<&Cyclo> {
        self.scalar_phase[i as usize].as_ref()
    }

    /// Indices of the scalar elements (the subgroup μ_s·I).
    pub fn scalar_element_indices(&self) -> &[u32] {
        &self.scalar_elements
    }

    /// Index of the scalar element with the given phase, when present.
    pub fn scalar_with_phase(&self, phase: &Cyclo) -> Option<u32> {
        self.scalar_elements
            .iter()
            .copied()
            .find(|&i| self.scalar_phase[i as usize].as_ref() == Some(phase))
    }

    /// Whether N·g·N⁻¹ lands inside the group for every element g, checked
    /// through the collision-verified fingerprint table (falls back to exact
    /// arithmetic if the candidate cannot be fingerprinted).
    pub fn conjugation_stays_inside(&self, n: &CMatrix, n_inv: &CMatrix) -> bool {
        match (self.ctx.embed(n), self.ctx.embed(n_inv)) {
            (Some(pn), Some(pni)) => (0..self.len()).all(|g| {
                let left = self.ctx.mul_prints(&pn, &self.prints[g], self.dim);
                let full = self.ctx.mul_prints(&left, &pni, self.dim);
                self.index.contains_key(&full)
            }),
            _ => (0..self.len() as u32).all(|g| {
                let conj = n.mul(self.element(g)).mul(n_inv);
                self.find(&conj).is_some()
            }),
        }
    }

    pub fn scalar_order(&self) -> u32 {
        self.s
    }

    pub fn minimal_central_phase(&self) -> &Cyclo {
        &self.min_phase
    }

    pub fn centre_indices(&self) -> &[u32] {
        &self.centre
    }

    pub fn centre_is_scalar(&self) -> bool {
        self.centre_is_scalar
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn tensor_meta(&self) -> Option<&TensorMeta> {
        self.tensor_meta.as_ref()
    }

    pub fn ext_meta(&self) -> Option<&ExtMeta> {
        self.ext_meta.as_ref()
    }

    /// Index-level product, exact (fingerprint table injectivity is verified
    /// at construction).
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let pr = self
            .ctx
            .mul_prints(&self.prints[a as usize], &self.prints[b as usize], self.dim);
        *self.index.get(&pr).expect("closed under multiplication")
    }

    pub fn commute(&self, a: u32, b: u32) -> bool {
        self.mul(a, b) == self.mul(b, a)
    }

    /// Conjugation a ↦ g·a·g⁻¹ on indices.
    pub fn conj_by(&self, g: u32, a: u32) -> u32 {
        self.mul(self.mul(g, a), self.inv[g as usize])
    }

    /// Membership lookup: fingerprint first, exact confirmation second.
    pub fn find(&self, m: &CMatrix) -> Option<u32> {
        if m.dim() != self.dim {
            return None;
        }
        let pr = self.ctx.embed(m)?;
        let &i = self.index.get(&pr)?;
        (self.elements[i as usize] == *m).then_some(i)
    }

    /// Map canonical projective keys to the member elements sharing them.
    pub fn projective_index(&self) -> &HashMap<String, Vec<u32>> {
        self.projective_index.get_or_init(|| {
            let mut map: HashMap<String, Vec<u32>> = HashMap::new();
            for (i, m) in self.elements.iter().enumerate() {
                map.entry(m.projective_normal_form().canonical_key())
                    .or_default()
                    .push(i as u32);
            }
            map
        })
    }

    /// Decompose `m = c · g` with g a member and c a scalar; returns (c, g index).
    pub fn decompose_scalar_multiple(&self, m: &CMatrix) -> Option<(Cyclo, u32)> {
        let key = m.projective_normal_form().canonical_key();
        let candidates = self.projective_index().get(&key)?;
        for &i in candidates {
            if let Some(c) = m.scalar_multiple_of(&self.elements[i as usize]) {
                return Some((c, i));
            }
        }
        None
    }

    /// Least k ≥ 1 with mᵏ = I, for a member matrix.
    pub fn element_order(&self, m: &CMatrix) -> Result<u32, GroupError> {
        let i = self.find(m).ok_or(GroupError::NotAMember)?;
        Ok(self.orders[i as usize])
    }

    /// The centre as matrices, plus the scalar subgroup order s.
    /// Errors when a central element is non-scalar (possible only for
    /// reducible groups; reported rather than silently accepted).
    pub fn compute_centre(&self) -> Result<(Vec<CMatrix>, u32), GroupError> {
        if !self.centre_is_scalar {
            return Err(GroupError::NonScalarCentre);
        }
        Ok((
            self.centre.iter().map(|&i| self.elements[i as usize].clone()).collect(),
            self.s,
        ))
    }

    /// Greedy reduction of the stored generator list: drop any generator the
    /// others already generate. Deterministic; not guaranteed minimum-size.
    pub fn reduced_generators(&self) -> Vec<u32> {
        let mut kept: Vec<usize> = (0..self.generators.len()).collect();
        for drop_pos in (0..self.generators.len()).rev() {
            if kept.len() == 1 {
                break;
            }
            let trial: Vec<usize> = kept.iter().copied().filter(|&k| k != drop_pos).collect();
            if trial.len() == kept.len() {
                continue;
            }
            if self.generates_all(&trial) {
                kept = trial;
            }
        }
        kept.into_iter().map(|k| self.generators[k]).collect()
    }

    fn generates_all(&self, gen_positions: &[usize]) -> bool {
        // in-group BFS on indices through the mulcols
        let mut seen = vec![false; self.len()];
        seen[self.identity as usize] = true;
        let mut queue = vec![self.identity];
        let mut head = 0;
        let mut count = 1usize;
        while head < queue.len() {
            let cur = queue[head];
            head += 1;
            for &t in gen_positions {
                let next = self.mulcols[t][cur as usize];
                if !seen[next as usize] {
                    seen[next as usize] = true;
                    count += 1;
                    queue.push(next);
                }
            }
        }
        count == self.len()
    }

    pub fn mulcol(&self, gen_pos: usize) -> &[u32] {
        &self.mulcols[gen_pos]
    }

    /// Numeric unitarisation: E with E·g·E⁻¹ unitary for every element.
    /// Exact pipelines never need this; it serves display and cross-checks.
    pub fn unitarize(&self, tol: f64) -> Result<UnitarizedGroup, GroupError> {
        let d = self.dim;
        let to_na = |m: &CMatrix| {
            DMatrix::from_fn(d, d, |i, j| {
                let (re, im) = m[(i, j)].to_complex();
                Complex::new(re, im)
            })
        };
        let mut sum = DMatrix::<Complex<f64>>::zeros(d, d);
        for m in &self.elements {
            let g = to_na(m);
            sum += g.adjoint() * g;
        }
        sum /= Complex::new(self.len() as f64, 0.0);
        let eig = nalgebra::SymmetricEigen::new(sum);
        let mut sqrt_vals = DMatrix::<Complex<f64>>::zeros(d, d);
        let mut inv_sqrt_vals = DMatrix::<Complex<f64>>::zeros(d, d);
        for i in 0..d {
            let lambda = eig.eigenvalues[i].max(0.0);
            sqrt_vals[(i, i)] = Complex::new(lambda.sqrt(), 0.0);
            inv_sqrt_vals[(i, i)] = Complex::new(1.0 / lambda.sqrt(), 0.0);
        }
        let v = &eig.eigenvectors;
        let e = v * sqrt_vals * v.adjoint();
        let e_inv = v * inv_sqrt_vals * v.adjoint();
        let mut out = Vec::with_capacity(self.len());
        let mut worst = 0.0f64;
        for m in &self.elements {
            let u = &e * to_na(m) * &e_inv;
            let residual = (&u * u.adjoint() - DMatrix::<Complex<f64>>::identity(d, d))
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            worst = worst.max(residual);
            out.push(u);
        }
        if worst > tol {
            return Err(GroupError::ToleranceNotMet(worst, tol));
        }
        Ok((out, e))
    }
}

fn kron_print(a: &MatPrint, b: &MatPrint, d: usize, _ctx: &FingerprintCtx) -> MatPrint {
    let dd = d * d;
    debug_assert!(dd <= MAX_DIM * MAX_DIM);
    let mut vals = [[0u64; MAX_DIM * MAX_DIM]; FP_PRIMES];
    for which in 0..FP_PRIMES {
        let p = _ctx.primes[which];
        for i in 0..d {
            for j in 0..d {
                let a_ij = a.vals[which][i * MAX_DIM + j];
                for k in 0..d {
                    for l in 0..d {
                        let b_kl = b.vals[which][k * MAX_DIM + l];
                        vals[which][(i * d + k) * MAX_DIM + (j * d + l)] = mulmod(a_ij, b_kl, p);
                    }
                }
            }
        }
    }
    MatPrint { vals }
}

/// Elementary symmetric functions of the eigenvalues (i.e. the characteristic
/// polynomial coefficients up to sign) from power-sum traces, via Newton's
/// identities. Input: [tr M, tr M², …, tr M^d].
fn newton_elementary(power_traces: &[Cyclo]) -> Vec<Cyclo> {
    let d = power_traces.len();
    let mut e = vec![Cyclo::one()]; // e_0
    for k in 1..=d {
        let mut acc = Cyclo::zero();
        for i in 1..=k {
            let term = e[k - i].mul(&power_traces[i - 1]);
            acc = if i % 2 == 1 { acc.add(&term) } else { acc.sub(&term) };
        }
        e.push(acc.scale(&CRational::new(1.into(), (k as i64).into())));
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gates::*;
    use crate::matrix::CMatrix;

    fn c(s: &str) -> Cyclo {
        crate::cyclotomic::parse_cyclo(s).unwrap()
    }

    /// Independent closure oracle: multiply all pairs until fixpoint.
    fn closure_oracle(gens: &[CMatrix]) -> Vec<CMatrix> {
        let dim = gens[0].dim();
        let mut set: Vec<CMatrix> = vec![CMatrix::identity(dim)];
        for g in gens {
            if !set.contains(g) {
                set.push(g.clone());
            }
        }
        loop {
            let mut added = false;
            let snapshot = set.clone();
            for a in &snapshot {
                for b in &snapshot {
                    let p = a.mul(b);
                    if !set.contains(&p) {
                        set.push(p);
                        added = true;
                    }
                }
            }
            if !added {
                return set;
            }
        }
    }

    fn pauli() -> Arc<MatrixGroup> {
        MatrixGroup::close(
            vec![pauli_x(), pauli_z(), CMatrix::scalar(2, c("w4^1"))],
            100,
        )
        .unwrap()
    }

    fn real_pauli() -> Arc<MatrixGroup> {
        MatrixGroup::close(vec![pauli_x(), pauli_z()], 100).unwrap()
    }

    #[test]
    fn closure_orders_match_oracle() {
        assert_eq!(real_pauli().len(), 8);
        assert_eq!(closure_oracle(&[pauli_x(), pauli_z()]).len(), 8);
        assert_eq!(pauli().len(), 16);
        assert_eq!(
            closure_oracle(&[pauli_x(), pauli_z(), CMatrix::scalar(2, c("w4^1"))]).len(),
            16
        );
        let trivial = MatrixGroup::close(vec![CMatrix::identity(2)], 10).unwrap();
        assert_eq!(trivial.len(), 1);
    }

    #[test]
    fn closure_is_idempotent_and_group_axioms_hold() {
        let g = real_pauli();
        let reclosed = MatrixGroup::close(g.elements().to_vec(), 100).unwrap();
        assert_eq!(reclosed.len(), g.len());
        // exhaustive product/inverse membership for this small group
        for a in 0..g.len() as u32 {
            let inv = g.element(g.inverse_index(a)).clone();
            assert!(g.element(a).mul(&inv).is_identity());
            for b in 0..g.len() as u32 {
                let p = g.element(a).mul(g.element(b));
                let idx = g.find(&p).expect("closed under products");
                assert_eq!(idx, g.mul(a, b), "index oracle must agree with exact product");
            }
        }
    }

    #[test]
    fn budget_and_singular_errors() {
        let grow = CMatrix::from_rows(vec![
            vec![c("2"), c("0")],
            vec![c("0"), c("1")],
        ]);
        assert_eq!(
            MatrixGroup::close(vec![grow], 50).unwrap_err(),
            GroupError::ClosureBudgetExceeded(50)
        );
        let sing = CMatrix::from_rows(vec![
            vec![c("1"), c("1")],
            vec![c("1"), c("1")],
        ]);
        assert_eq!(
            MatrixGroup::close(vec![sing], 50).unwrap_err(),
            GroupError::SingularGenerator(0)
        );
    }

    #[test]
    fn conductor_cap_is_enforced_at_closure() {
        // each generator is fine alone; their compositum exceeds the cap
        let a = CMatrix::from_rows(vec![
            vec![c("1"), c("0")],
            vec![c("0"), Cyclo::root_of_unity(4096, 1)],
        ]);
        let b = CMatrix::from_rows(vec![
            vec![c("1"), c("0")],
            vec![c("0"), c("w3^1")],
        ]);
        assert!(matches!(
            MatrixGroup::close(vec![a, b], 1_000_000),
            Err(GroupError::ConductorCapExceeded(12288, _))
        ));
    }

    #[test]
    fn element_orders() {
        let g = pauli();
        assert_eq!(g.element_order(&pauli_x()).unwrap(), 2);
        assert_eq!(g.element_order(&CMatrix::scalar(2, c("w4^1"))).unwrap(), 4);
        assert_eq!(g.element_order(&hadamard()), Err(GroupError::NotAMember));
        for m in [2u32, 3, 5] {
            let zr = z_root(m);
            let gm = MatrixGroup::close(vec![pauli_x(), zr.clone()], 1000).unwrap();
            assert_eq!(gm.element_order(&zr).unwrap(), 2 * m);
        }
    }

    #[test]
    fn centres() {
        let g = pauli();
        let (centre, s) = g.compute_centre().unwrap();
        assert_eq!(centre.len(), 4);
        assert_eq!(s, 4);
        assert_eq!(g.minimal_central_phase(), &c("w4^1"));

        let (centre, s) = real_pauli().compute_centre().unwrap();
        assert_eq!(centre.len(), 2);
        assert_eq!(s, 2);

        let trivial = MatrixGroup::close(vec![CMatrix::identity(2)], 10).unwrap();
        let (centre, s) = trivial.compute_centre().unwrap();
        assert_eq!((centre.len(), s), (1, 1));

        // reducible diagonal group: centre is the whole group, non-scalar
        let zgroup = MatrixGroup::close(vec![pauli_z()], 10).unwrap();
        assert_eq!(zgroup.compute_centre(), Err(GroupError::NonScalarCentre));
    }

    #[test]
    fn irreducibility() {
        assert!(pauli().is_irreducible());
        assert!(!MatrixGroup::close(vec![pauli_z()], 10).unwrap().is_irreducible());
        let g = MatrixGroup::close(vec![pauli_x(), z_root(3)], 1000).unwrap();
        assert!(g.is_irreducible());
    }

    #[test]
    fn tensor_squares() {
        let g = pauli();
        let t = g.tensor_square(10_000).unwrap();
        assert_eq!(t.len(), 64);
        assert_eq!(t.scalar_order(), 4);
        assert!(t.centre_is_scalar());

        let r = real_pauli().tensor_square(10_000).unwrap();
        assert_eq!(r.len(), 32);

        let trivial = MatrixGroup::close(vec![CMatrix::identity(2)], 10).unwrap();
        let tt = trivial.tensor_square(10).unwrap();
        assert_eq!(tt.len(), 1);
        assert_eq!(tt.dim(), 4);
    }

    #[test]
    fn tensor_square_matches_direct_closure() {
        let g = real_pauli();
        let t = g.tensor_square(10_000).unwrap();
        let direct = closure_oracle(&[
            pauli_x().tensor(&CMatrix::identity(2)),
            pauli_z().tensor(&CMatrix::identity(2)),
            CMatrix::identity(2).tensor(&pauli_x()),
            CMatrix::identity(2).tensor(&pauli_z()),
        ]);
        assert_eq!(t.len(), direct.len());
        for m in &direct {
            assert!(t.find(m).is_some());
        }
    }

    #[test]
    fn phase_extension_adds_scalars() {
        let g = real_pauli();
        let ext = g.phase_extension(&[c("w4^1")], 100).unwrap();
        assert_eq!(ext.len(), 16);
        assert_eq!(ext.scalar_order(), 4);
        // extending by an existing phase is the identity operation
        let same = g.phase_extension(&[c("-1")], 100).unwrap();
        assert_eq!(same.len(), 8);
        // every element decomposes as phase · base element
        let meta = ext.ext_meta().unwrap();
        for (i, (phase, base)) in meta.decomp.iter().enumerate() {
            let rebuilt = meta.base.element(*base).scale(phase);
            assert_eq!(&rebuilt, ext.element(i as u32));
        }
    }

    #[test]
    fn comm_and_conj_consistency() {
        let g = pauli();
        for a in 0..g.len() as u32 {
            for b in 0..g.len() as u32 {
                assert_eq!(g.commute(a, b), g.commute(b, a));
                let conj = g.conj_by(a, b);
                let exact = g
                    .element(a)
                    .mul(g.element(b))
                    .mul(&g.element(a).inverse().unwrap());
                assert_eq!(g.element(conj), &exact);
            }
        }
    }

    #[test]
    fn charpoly_classes_refine_orders() {
        let g = pauli();
        for i in 0..g.len() as u32 {
            let class = g.charpoly_class(g.charpoly_key_of(i));
            assert!(class.contains(&i));
            for &j in class {
                // similar matrices share trace and determinant
                assert_eq!(g.trace_of(i), g.trace_of(j));
            }
        }
    }

    #[test]
    fn reduced_generators_still_generate() {
        let redundant = MatrixGroup::close(
            vec![pauli_x(), pauli_z(), pauli_x().mul(&pauli_z())],
            100,
        )
        .unwrap();
        let reduced = redundant.reduced_generators();
        assert!(reduced.len() < 3);
        let regen = MatrixGroup::close(
            reduced.iter().map(|&i| redundant.element(i).clone()).collect(),
            100,
        )
        .unwrap();
        assert_eq!(regen.len(), redundant.len());
    }

    #[test]
    fn unitarize_unitary_group_is_identity_conjugation() {
        let g = pauli();
        let (_, e) = g.unitarize(1e-12).unwrap();
        // E must be proportional to I for an already-unitary group
        let scale = e[(0, 0)];
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { scale } else { Complex::new(0.0, 0.0) };
                assert!((e[(i, j)] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn unitarize_recovers_conjugated_pauli() {
        let conj = CMatrix::from_rows(vec![
            vec![c("1"), c("0")],
            vec![c("0"), c("2")],
        ]);
        let conj_inv = conj.inverse().unwrap();
        let gens: Vec<CMatrix> = [pauli_x(), pauli_z()]
            .iter()
            .map(|g| conj.mul(g).mul(&conj_inv))
            .collect();
        let g = MatrixGroup::close(gens, 100).unwrap();
        assert_eq!(g.len(), 8);
        assert!(g.unitarize(1e-10).is_ok());
    }

    #[test]
    fn order_and_comm_indices_are_consistent() {
        let g = pauli();
        for k in [1u32, 2, 4] {
            for &i in &g.elements_of_order(k) {
                assert_eq!(g.order_of(i), k);
            }
        }
        let total: usize = [1u32, 2, 4].iter().map(|&k| g.elements_of_order(k).len()).sum();
        assert_eq!(total, g.len());
        for i in 0..g.len() as u32 {
            let (comm, ncomm) = g.comm_sets(i);
            assert_eq!(comm.len() + ncomm.len(), g.len());
            for &j in &comm {
                assert!(g.comm_sets(j).0.contains(&i), "commutation is symmetric");
            }
        }
    }

    #[test]
    fn deterministic_indexing_across_builds() {
        let a = MatrixGroup::close(vec![pauli_x(), pauli_z()], 100).unwrap();
        let b = MatrixGroup::close(vec![pauli_z(), pauli_x()], 100).unwrap();
        assert_eq!(a.len(), b.len());
        for i in 0..a.len() as u32 {
            assert_eq!(a.element(i), b.element(i), "element order must be canonical");
        }
    }
}
