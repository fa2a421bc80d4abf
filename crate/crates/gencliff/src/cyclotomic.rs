//! Exact arithmetic in cyclotomic fields ℚ(ζ_N).
//!
//! Every scalar in this crate is a [`Cyclo`]: a ℚ-linear combination of roots
//! of unity, stored in a canonical basis at the minimal possible conductor.
//! Canonicality means structural equality coincides with field equality, which
//! is what makes the exact group-membership tests downstream trustworthy.
//!
//! The basis is the tensor-style one: write N = ∏ qᵢ as prime powers qᵢ = pᵢ^aᵢ;
//! an exponent k (for the monomial ζ_N^k) is a basis exponent when each CRT
//! digit eᵢ = k·(N/qᵢ)⁻¹ mod qᵢ lies in [0, φ(qᵢ)). Out-of-range digits are
//! rewritten with Φ_q(ζ_q) = 0, one prime power at a time. Conductors are kept
//! minimal (1 or ≢ 2 mod 4) by explicit descent after every operation.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational scalar: arbitrary-precision, always reduced, positive denominator.
pub type CRational = BigRational;

/// Default ceiling on working conductors. Closure of a pathological input could
/// otherwise blow conductors up without bound; everything in the bundled catalog
/// fits comfortably below this.
pub const DEFAULT_CONDUCTOR_CAP: u32 = 7920;

static CONDUCTOR_CAP: AtomicU32 = AtomicU32::new(DEFAULT_CONDUCTOR_CAP);

/// Current working-conductor ceiling.
pub fn conductor_cap() -> u32 {
    CONDUCTOR_CAP.load(Ordering::Relaxed)
}

/// Adjust the working-conductor ceiling (process-wide).
pub fn set_conductor_cap(cap: u32) {
    CONDUCTOR_CAP.store(cap.max(1), Ordering::Relaxed);
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycloError {
    #[error("division by zero in cyclotomic field")]
    DivisionByZero,
    #[error("conductor {0} exceeds the configured cap {1}")]
    ConductorCapExceeded(u32, u32),
}

/// Per-conductor structure: prime-power factorisation and the rewrite rules
/// that put arbitrary exponents into the canonical basis.
struct ConductorInfo {
    n: u32,
    /// (p, a, q = p^a, m = n/q, inv = m⁻¹ mod q, phi = φ(q))
    factors: Vec<(u32, u32, u32, u32, u32, u32)>,
    #[cfg_attr(not(test), allow(dead_code))]
    totient: u32,
    /// Lazily filled decomposition of ζ_n^k into signed basis monomials.
    reduce: Vec<OnceLock<(i8, Box<[u32]>)>>,
}

fn mod_inv(a: u32, m: u32) -> u32 {
    // extended Euclid; gcd(a, m) = 1 is a caller invariant
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (m as i64, a as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1);
    t.rem_euclid(m as i64) as u32
}

impl ConductorInfo {
    fn new(n: u32) -> Self {
        assert!(n >= 1, "conductor must be positive");
        assert!(
            n == 1 || n % 4 != 2,
            "internal conductors are 1 or not ≡ 2 mod 4 (got {n})"
        );
        let mut factors = Vec::new();
        let mut rem = n;
        let mut p = 2u32;
        while p * p <= rem {
            if rem.is_multiple_of(p) {
                let mut a = 0;
                let mut q = 1;
                while rem.is_multiple_of(p) {
                    rem /= p;
                    a += 1;
                    q *= p;
                }
                factors.push((p, a, q));
            }
            p += 1;
        }
        if rem > 1 {
            factors.push((rem, 1, rem));
        }
        let mut totient = 1u32;
        let factors: Vec<_> = factors
            .into_iter()
            .map(|(p, a, q)| {
                let m = n / q;
                let inv = mod_inv(m % q, q);
                let phi = q / p * (p - 1);
                totient *= phi;
                (p, a, q, m, inv, phi)
            })
            .collect();
        let reduce = (0..n).map(|_| OnceLock::new()).collect();
        ConductorInfo { n, factors, totient, reduce }
    }

    /// CRT digit of exponent k at factor index i.
    fn digit(&self, k: u32, i: usize) -> u32 {
        let (_, _, q, _, inv, _) = self.factors[i];
        ((k % q) as u64 * inv as u64 % q as u64) as u32
    }

    fn is_basis_exponent(&self, k: u32) -> bool {
        (0..self.factors.len()).all(|i| self.digit(k, i) < self.factors[i].5)
    }

    /// ζ_n^k as a signed sum of basis monomials.
    fn decompose(&self, k: u32) -> &(i8, Box<[u32]>) {
        let k = k % self.n.max(1);
        self.reduce[k as usize].get_or_init(|| {
            let mut sign = 1i8;
            // exponent contributions: fixed part + per-rewritten-factor alternatives
            let mut fixed = 0u64;
            let mut alts: Vec<Vec<u64>> = Vec::new();
            for (i, &(p, _, q, m, _, phi)) in self.factors.iter().enumerate() {
                let e = self.digit(k, i);
                if e < phi {
                    fixed = (fixed + e as u64 * m as u64) % self.n as u64;
                } else {
                    sign = -sign;
                    let step = q / p; // p^{a-1}
                    let r = e - phi;
                    let choices = (0..p - 1)
                        .map(|t| ((r + t * step) as u64 * m as u64) % self.n as u64)
                        .collect();
                    alts.push(choices);
                }
            }
            let mut exps = vec![fixed];
            for choices in &alts {
                let mut next = Vec::with_capacity(exps.len() * choices.len());
                for &base in &exps {
                    for &c in choices {
                        next.push((base + c) % self.n as u64);
                    }
                }
                exps = next;
            }
            let mut out: Vec<u32> = exps.into_iter().map(|e| e as u32).collect();
            out.sort_unstable();
            debug_assert!(out.iter().all(|&e| self.is_basis_exponent(e)));
            (sign, out.into_boxed_slice())
        })
    }
}

fn conductor_info(n: u32) -> Arc<ConductorInfo> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<ConductorInfo>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n).or_insert_with(|| Arc::new(ConductorInfo::new(n))).clone()
}

fn check_cap(n: u32) {
    let cap = conductor_cap();
    assert!(
        n <= cap,
        "working conductor {n} exceeds the configured cap {cap}; \
         raise it with cyclotomic::set_conductor_cap if this is intentional"
    );
}

/// An element of a cyclotomic field, canonical and immutable.
///
/// `terms` maps basis exponents to nonzero rational coefficients, sorted by
/// exponent. `conductor` is minimal: 1, or an integer ≢ 2 mod 4.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyclo {
    conductor: u32,
    terms: Vec<(u32, CRational)>,
}

impl Cyclo {
    pub fn zero() -> Self {
        Cyclo { conductor: 1, terms: Vec::new() }
    }

    pub fn one() -> Self {
        Cyclo::from_rational(CRational::one())
    }

    pub fn from_rational(r: CRational) -> Self {
        if r.is_zero() {
            Cyclo::zero()
        } else {
            Cyclo { conductor: 1, terms: vec![(0, r)] }
        }
    }

    pub fn from_integer(i: i64) -> Self {
        Cyclo::from_rational(CRational::from_integer(BigInt::from(i)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Cyclo::from_rational(CRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// ζ_n^k = e^{2πik/n}, canonicalised.
    pub fn root_of_unity(n: u32, k: i64) -> Self {
        assert!(n >= 1, "order of a root of unity must be positive");
        check_cap(n);
        let k = (k.rem_euclid(n as i64)) as u32;
        if k == 0 {
            return Cyclo::one();
        }
        let g = gcd(n, k);
        let mut n = n / g;
        let mut k = k / g;
        let mut negate = false;
        if n % 4 == 2 {
            // ζ_{2m}^k with m odd and k odd: −ζ_m^{(k+m)/2}
            let m = n / 2;
            debug_assert!(k % 2 == 1);
            negate = !negate;
            k = ((k + m) / 2) % m.max(1);
            n = m;
        }
        if n == 1 {
            let one = CRational::one();
            return Cyclo::from_rational(if negate { -one } else { one });
        }
        let info = conductor_info(n);
        let (sign, exps) = info.decompose(k);
        let coeff = if (*sign < 0) != negate {
            -CRational::one()
        } else {
            CRational::one()
        };
        let terms = exps.iter().map(|&e| (e, coeff.clone())).collect();
        Cyclo { conductor: n, terms }.descended()
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    pub fn terms(&self) -> &[(u32, CRational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.is_rational() && self.terms.len() == 1 && self.terms[0].1.is_one()
    }

    pub fn is_rational(&self) -> bool {
        self.conductor == 1
    }

    /// The value as a rational number, when it is one.
    pub fn as_rational(&self) -> Option<CRational> {
        if !self.is_rational() {
            return None;
        }
        Some(self.terms.first().map(|(_, c)| c.clone()).unwrap_or_else(CRational::zero))
    }

    /// Rebuild from raw (exponent, coefficient) pairs at conductor `n`,
    /// reducing to the canonical basis and minimal conductor.
    fn assemble(n: u32, raw: impl IntoIterator<Item = (u32, CRational)>) -> Self {
        let info = conductor_info(n);
        let mut acc: HashMap<u32, CRational> = HashMap::new();
        for (k, c) in raw {
            if c.is_zero() {
                continue;
            }
            let (sign, exps) = info.decompose(k);
            let signed = if *sign < 0 { -c } else { c };
            for &e in exps.iter() {
                let slot = acc.entry(e).or_insert_with(CRational::zero);
                *slot += &signed;
            }
        }
        let mut terms: Vec<(u32, CRational)> =
            acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by_key(|&(e, _)| e);
        Cyclo { conductor: n, terms }.descended()
    }

    /// Reduce the conductor to the minimum; assumes terms are already in basis form.
    fn descended(mut self) -> Self {
        if self.terms.is_empty() {
            self.conductor = 1;
            return self;
        }
        'outer: loop {
            if self.conductor == 1 {
                return self;
            }
            let info = conductor_info(self.conductor);
            for (i, &(p, a, _, _, _, _)) in info.factors.iter().enumerate() {
                let can_drop = if p == 2 && a == 2 {
                    // dropping 4 entirely: the ζ_4 digit must vanish
                    self.terms.iter().all(|&(k, _)| info.digit(k, i) == 0)
                } else if a == 1 {
                    self.terms.iter().all(|&(k, _)| info.digit(k, i) == 0)
                } else {
                    self.terms.iter().all(|&(k, _)| info.digit(k, i).is_multiple_of(p))
                };
                if can_drop {
                    let divisor = if p == 2 && a == 2 { 4 } else { p };
                    self.rescale_exponents(divisor);
                    continue 'outer;
                }
            }
            return self;
        }
    }

    fn rescale_exponents(&mut self, divisor: u32) {
        self.conductor /= divisor;
        for (k, _) in self.terms.iter_mut() {
            debug_assert_eq!(*k % divisor, 0);
            *k /= divisor;
        }
        debug_assert!(self.conductor == 1 || self.conductor % 4 != 2);
    }

    /// Lift to conductor `n` (a multiple of the current one). Basis monomials
    /// map to basis monomials, so no re-reduction is needed.
    fn lifted_terms(&self, n: u32) -> Vec<(u32, CRational)> {
        debug_assert_eq!(n % self.conductor, 0);
        let scale = n / self.conductor;
        self.terms.iter().map(|(k, c)| (k * scale, c.clone())).collect()
    }

    fn common_conductor(a: &Cyclo, b: &Cyclo) -> u32 {
        let l = lcm(a.conductor, b.conductor);
        check_cap(l);
        l
    }

    pub fn add(&self, other: &Cyclo) -> Cyclo {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let n = Cyclo::common_conductor(self, other);
        let mut raw = self.lifted_terms(n);
        raw.extend(other.lifted_terms(n));
        Cyclo::assemble(n, raw)
    }

    pub fn sub(&self, other: &Cyclo) -> Cyclo {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Cyclo {
        Cyclo {
            conductor: self.conductor,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Cyclo) -> Cyclo {
        if self.is_zero() || other.is_zero() {
            return Cyclo::zero();
        }
        // rational fast paths keep closure arithmetic cheap
        if let Some(r) = self.as_rational() {
            return other.scale(&r);
        }
        if let Some(r) = other.as_rational() {
            return self.scale(&r);
        }
        let n = Cyclo::common_conductor(self, other);
        let a = self.lifted_terms(n);
        let b = other.lifted_terms(n);
        let mut raw = Vec::with_capacity(a.len() * b.len());
        for (ka, ca) in &a {
            for (kb, cb) in &b {
                raw.push(((ka + kb) % n, ca * cb));
            }
        }
        Cyclo::assemble(n, raw)
    }

    pub fn scale(&self, r: &CRational) -> Cyclo {
        if r.is_zero() {
            return Cyclo::zero();
        }
        Cyclo {
            conductor: self.conductor,
            terms: self.terms.iter().map(|(k, c)| (*k, c * r)).collect(),
        }
    }

    /// Galois automorphism ζ_N ↦ ζ_N^t, for t coprime to the conductor.
    pub fn galois(&self, t: u32) -> Cyclo {
        let n = self.conductor;
        if n == 1 {
            return self.clone();
        }
        debug_assert_eq!(gcd(n, t % n), 1);
        let raw: Vec<_> = self
            .terms
            .iter()
            .map(|(k, c)| ((*k as u64 * t as u64 % n as u64) as u32, c.clone()))
            .collect();
        Cyclo::assemble(n, raw)
    }

    /// Complex conjugation: ζ ↦ ζ⁻¹.
    pub fn conj(&self) -> Cyclo {
        let n = self.conductor;
        if n == 1 {
            return self.clone();
        }
        self.galois(n - 1)
    }

    pub fn is_real(&self) -> bool {
        *self == self.conj()
    }

    /// Exact multiplicative inverse.
    pub fn inv(&self) -> Result<Cyclo, CycloError> {
        if self.is_zero() {
            return Err(CycloError::DivisionByZero);
        }
        if let Some(r) = self.as_rational() {
            return Ok(Cyclo::from_rational(r.recip()));
        }
        if self.terms.len() == 1 {
            // monomial fast path: (c·ζ^k)⁻¹ = (1/c)·ζ^{-k}
            let (k, c) = &self.terms[0];
            let n = self.conductor;
            let root = Cyclo::root_of_unity(n, -(*k as i64));
            return Ok(root.scale(&c.recip()));
        }
        // norm method: a · ∏_{σ≠id} σ(a) ∈ ℚ
        let n = self.conductor;
        let mut partial = Cyclo::one();
        for t in 2..n {
            if gcd(t, n) == 1 {
                partial = partial.mul(&self.galois(t));
            }
        }
        let norm = self.mul(&partial);
        let norm_rat = norm
            .as_rational()
            .expect("field norm of a cyclotomic must be rational");
        debug_assert!(!norm_rat.is_zero());
        Ok(partial.scale(&norm_rat.recip()))
    }

    pub fn div(&self, other: &Cyclo) -> Result<Cyclo, CycloError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Cyclo, CycloError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Cyclo::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// |self|² = self·conj(self), always real.
    pub fn norm_sq(&self) -> Cyclo {
        self.mul(&self.conj())
    }

    /// Floating-point approximation (re, im). Error is bounded by
    /// #terms · max|coeff| · a few ulps — see the module tests.
    pub fn to_complex(&self) -> (f64, f64) {
        let n = self.conductor as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in &self.terms {
            let x = rational_to_f64(c);
            let theta = 2.0 * std::f64::consts::PI * (*k as f64) / n;
            re += x * theta.cos();
            im += x * theta.sin();
        }
        (re, im)
    }

    /// If this value is a root of unity, return (order, exponent) with the
    /// value equal to ζ_order^exponent.
    pub fn as_root_of_unity(&self) -> Option<(u32, u32)> {
        if self.is_zero() {
            return None;
        }
        let n = self.conductor;
        // roots of unity inside ℚ(ζ_n): μ_n for even n, μ_2n for odd n
        let cap = if n % 2 == 1 { 2 * n } else { n };
        if !self.pow(cap as i64).ok()?.is_one() {
            return None;
        }
        let mut order = cap;
        for d in divisors(cap) {
            if self.pow(d as i64).ok().map(|p| p.is_one()).unwrap_or(false) {
                order = d;
                break;
            }
        }
        for j in 0..order {
            if *self == Cyclo::root_of_unity(order, j as i64) {
                return Some((order, j));
            }
        }
        unreachable!("value of finite multiplicative order must be a power of ζ_order");
    }

    /// Deterministic byte key of the canonical form.
    pub fn canonical_key(&self) -> String {
        format!("{self}")
    }
}

fn rational_to_f64(r: &CRational) -> f64 {
    let num = bigint_to_f64(r.numer());
    let den = bigint_to_f64(r.denom());
    num / den
}

fn bigint_to_f64(i: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    i.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn gcd(a: u32, b: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn lcm(a: u32, b: u32) -> u32 {
    let g = gcd(a, b);
    let l = (a as u64 / g as u64) * b as u64;
    assert!(l <= u32::MAX as u64, "conductor lcm overflow");
    l as u32
}

pub(crate) fn divisors(n: u32) -> Vec<u32> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

impl fmt::Display for Cyclo {
    /// Canonical literal form, e.g. `1/2*w24^11 + 1/2*w24^17`, `-1`, `w4^1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if *k == 0 {
                write_rational(f, &mag)?;
            } else if mag.is_one() {
                write!(f, "w{}^{}", self.conductor, k)?;
            } else {
                write_rational(f, &mag)?;
                write!(f, "*w{}^{}", self.conductor, k)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo({self})")
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &CRational) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycloParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected character {0:?} at byte {1}")]
    UnexpectedChar(char, usize),
    #[error("invalid number at byte {0}")]
    InvalidNumber(usize),
    #[error("zero denominator at byte {0}")]
    ZeroDenominator(usize),
    #[error("root order must be positive at byte {0}")]
    ZeroOrder(usize),
    #[error("conductor {0} exceeds the configured cap {1}")]
    ConductorTooLarge(u32, u32),
    #[error("trailing input at byte {0}")]
    TrailingInput(usize),
    #[error("expression nesting too deep")]
    TooDeep,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    depth: u32,
}

const MAX_PARSE_DEPTH: u32 = 64;

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser { bytes: s.as_bytes(), pos: 0, depth: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn expr(&mut self) -> Result<Cyclo, CycloParseError> {
        let mut acc = self.term()?;
        while let Some(b) = self.peek() {
            match b {
                b'+' => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                b'-' => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Cyclo, CycloParseError> {
        let mut acc = self.factor()?;
        while let Some(b'*') = self.peek() {
            self.bump();
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Cyclo, CycloParseError> {
        self.depth += 1;
        if self.depth > MAX_PARSE_DEPTH {
            return Err(CycloParseError::TooDeep);
        }
        let out = self.factor_inner();
        self.depth -= 1;
        out
    }

    fn factor_inner(&mut self) -> Result<Cyclo, CycloParseError> {
        match self.peek() {
            None => Err(CycloParseError::UnexpectedEnd),
            Some(b'-') => {
                self.bump();
                Ok(self.factor()?.neg())
            }
            Some(b'+') => {
                self.bump();
                self.factor()
            }
            Some(b'(') => {
                self.bump();
                let inner = self.expr()?;
                match self.peek() {
                    Some(b')') => {
                        self.bump();
                        Ok(inner)
                    }
                    Some(c) => Err(CycloParseError::UnexpectedChar(c as char, self.pos)),
                    None => Err(CycloParseError::UnexpectedEnd),
                }
            }
            Some(b'w') => {
                self.bump();
                let start = self.pos;
                let order64 = self.uint()?;
                if order64 == 0 {
                    return Err(CycloParseError::ZeroOrder(start));
                }
                let cap = conductor_cap();
                if order64 > cap as u64 {
                    return Err(CycloParseError::ConductorTooLarge(
                        order64.min(u32::MAX as u64) as u32,
                        cap,
                    ));
                }
                let order = order64 as u32;
                let exp = if let Some(b'^') = self.peek() {
                    self.bump();
                    self.sint()?
                } else {
                    1
                };
                Ok(Cyclo::root_of_unity(order, exp))
            }
            Some(b) if b.is_ascii_digit() => {
                let num = self.bigint()?;
                if let Some(b'/') = self.peek() {
                    self.bump();
                    let dstart = self.pos;
                    let den = self.bigint()?;
                    if den.is_zero() {
                        return Err(CycloParseError::ZeroDenominator(dstart));
                    }
                    Ok(Cyclo::from_rational(CRational::new(num, den)))
                } else {
                    Ok(Cyclo::from_rational(CRational::from_integer(num)))
                }
            }
            Some(c) => Err(CycloParseError::UnexpectedChar(c as char, self.pos)),
        }
    }

    fn uint(&mut self) -> Result<u64, CycloParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start || self.pos - start > 18 {
            return Err(CycloParseError::InvalidNumber(start));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(CycloParseError::InvalidNumber(start))
    }

    fn sint(&mut self) -> Result<i64, CycloParseError> {
        let neg = matches!(self.peek(), Some(b'-'));
        if neg || matches!(self.peek(), Some(b'+')) {
            self.bump();
        }
        let u = self.uint()?;
        Ok(if neg { -(u as i64) } else { u as i64 })
    }

    fn bigint(&mut self) -> Result<BigInt, CycloParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start || self.pos - start > 4096 {
            return Err(CycloParseError::InvalidNumber(start));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(CycloParseError::InvalidNumber(start))
    }
}

/// Parse the literal syntax: `w{N}^{k}` for ζ_N^k, rationals as `p/q`, sums
/// with `+`/`-`, products with `*`. Round-trips with [`Cyclo`]'s `Display`.
pub fn parse_cyclo(s: &str) -> Result<Cyclo, CycloParseError> {
    let mut p = Parser::new(s);
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(CycloParseError::TrailingInput(p.pos));
    }
    Ok(v)
}

impl std::str::FromStr for Cyclo {
    type Err = CycloParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_cyclo(s)
    }
}

// ---------------------------------------------------------------------------
