//! Arithmetic over the finite field used by every coding operation.
//!
//! Two families are supported:
//!
//! * prime fields GF(p) for primes `p < 2^16`, using modular arithmetic;
//! * binary extension fields GF(2^m) for `m ∈ {1, 4, 8, 16}` with fixed
//!   reduction polynomials. Addition is XOR. For `m ≤ 8` multiplication goes
//!   through log/antilog tables built at construction time, for `m = 16` it is
//!   a carry-less multiply followed by reduction.
//!
//! Elements are plain [`Elem`] values holding the canonical representative in
//! `[0, q)`. The hot paths on [`Field`] assume their inputs are in range; the
//! checked [`FieldElement`] wrapper validates range and field membership for
//! callers that want errors instead.

use std::fmt;
use std::sync::Arc;

use crate::error::{usage, Error, Result};

/// Canonical representative of a field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Elem(pub u16);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.0 as u32
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// x+1, x^4+x+1, x^8+x^4+x^3+x+1, x^16+x^12+x^3+x+1.
const POLY_M1: u32 = 0b11;
const POLY_M4: u32 = 0x13;
const POLY_M8: u32 = 0x11B;
const POLY_M16: u32 = 0x1100B;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Prime,
    /// GF(2^degree) reduced modulo `poly` (bit i is the coefficient of x^i).
    BinaryExtension {
        degree: u32,
        poly: u32,
    },
}

/// Order and construction of a finite field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    order: u32,
    kind: FieldKind,
}

impl FieldSpec {
    pub fn prime(p: u32) -> Result<Self> {
        if !(2..1 << 16).contains(&p) {
            return Err(usage(format!("prime field order {p} must lie in [2, 65536)")));
        }
        if !is_prime(p) {
            return Err(usage(format!("{p} is not prime")));
        }
        Ok(FieldSpec {
            order: p,
            kind: FieldKind::Prime,
        })
    }

    pub fn binary(degree: u32) -> Result<Self> {
        let poly = match degree {
            1 => POLY_M1,
            4 => POLY_M4,
            8 => POLY_M8,
            16 => POLY_M16,
            _ => {
                return Err(usage(format!(
                    "binary extension degree {degree} unsupported (use 1, 4, 8 or 16)"
                )))
            }
        };
        Ok(FieldSpec {
            order: 1 << degree,
            kind: FieldKind::BinaryExtension { degree, poly },
        })
    }

    pub fn gf256() -> Self {
        FieldSpec::binary(8).expect("degree 8 is supported")
    }

    /// Parses `gf256`, `gf2^8`, `gf16`, `gf2`, `gf65536` or `prime:<p>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(p) = s.strip_prefix("prime:") {
            let p: u32 = p
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad prime field order in {s:?}")))?;
            return FieldSpec::prime(p);
        }
        if let Some(m) = s.strip_prefix("gf2^") {
            let m: u32 = m.parse().map_err(|_| usage(format!("bad extension degree in {s:?}")))?;
            return FieldSpec::binary(m);
        }
        match s {
            "gf2" => FieldSpec::binary(1),
            "gf16" => FieldSpec::binary(4),
            "gf256" => FieldSpec::binary(8),
            "gf65536" => FieldSpec::binary(16),
            _ => Err(usage(format!(
                "unknown field {s:?} (expected gf256, gf2^m or prime:<p>)"
            ))),
        }
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.kind, FieldKind::BinaryExtension { .. })
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FieldKind::Prime => write!(f, "prime:{}", self.order),
            FieldKind::BinaryExtension { degree: 8, .. } => write!(f, "gf256"),
            FieldKind::BinaryExtension { degree, .. } => write!(f, "gf2^{degree}"),
        }
    }
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Debug)]
struct LogTables {
    log: Vec<u16>,
    /// exp[i] = g^i, doubled so `exp[log a + log b]` needs no reduction.
    exp: Vec<u16>,
}

/// A finite field with its precomputed tables. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Field {
    spec: FieldSpec,
    tables: Option<Arc<LogTables>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Self {
        let tables = match spec.kind {
            FieldKind::BinaryExtension { degree, poly } if degree <= 8 => Some(Arc::new(build_tables(degree, poly))),
            _ => None,
        };
        Field { spec, tables }
    }

    pub fn gf256() -> Self {
        Field::new(FieldSpec::gf256())
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.spec.order
    }

    /// Validates a raw value as an element of this field.
    pub fn elem(&self, value: u32) -> Result<Elem> {
        if value >= self.spec.order {
            return Err(usage(format!(
                "{value} is not an element of {} (order {})",
                self.spec, self.spec.order
            )));
        }
        Ok(Elem(value as u16))
    }

    pub fn contains(&self, e: Elem) -> bool {
        (e.0 as u32) < self.spec.order
    }

    /// Checked element bound to this field.
    pub fn element(&self, value: u32) -> Result<FieldElement<'_>> {
        Ok(FieldElement {
            field: self,
            value: self.elem(value)?,
        })
    }

    /// Nonzero elements `1..q` in canonical order.
    pub fn nonzero(&self) -> impl Iterator<Item = Elem> {
        (1..self.spec.order).map(|v| Elem(v as u16))
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        match self.spec.kind {
            FieldKind::BinaryExtension { .. } => Elem(a.0 ^ b.0),
            FieldKind::Prime => {
                let s = a.0 as u32 + b.0 as u32;
                let p = self.spec.order;
                Elem(if s >= p { s - p } else { s } as u16)
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        match self.spec.kind {
            FieldKind::BinaryExtension { .. } => a,
            FieldKind::Prime => {
                if a.0 == 0 {
                    a
                } else {
                    Elem((self.spec.order - a.0 as u32) as u16)
                }
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a.0 == 0 || b.0 == 0 {
            return Elem::ZERO;
        }
        match (&self.tables, self.spec.kind) {
            (Some(t), _) => Elem(t.exp[t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize]),
            (None, FieldKind::Prime) => Elem(((a.0 as u32 * b.0 as u32) % self.spec.order) as u16),
            (None, FieldKind::BinaryExtension { degree, poly }) => {
                Elem(clmul_reduce(a.0 as u32, b.0 as u32, degree, poly) as u16)
            }
        }
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        Ok(match &self.tables {
            Some(t) => {
                let n = self.spec.order as usize - 1;
                let l = t.log[a.0 as usize] as usize;
                Elem(t.exp[(n - l) % n])
            }
            // Fermat: a^(q-2) for every finite field.
            None => self.pow(a, self.spec.order as u64 - 2),
        })
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `acc[k] += coeff * src[k]` for every position.
    pub fn axpy(&self, acc: &mut [Elem], coeff: Elem, src: &[Elem]) {
        if coeff.is_zero() {
            return;
        }
        for (a, &s) in acc.iter_mut().zip(src) {
            *a = self.add(*a, self.mul(coeff, s));
        }
    }

    /// Element-wise sum `acc += src`.
    pub fn add_assign(&self, acc: &mut [Elem], src: &[Elem]) {
        for (a, &s) in acc.iter_mut().zip(src) {
            *a = self.add(*a, s);
        }
    }

    /// Element-wise difference `acc -= src`.
    pub fn sub_assign(&self, acc: &mut [Elem], src: &[Elem]) {
        for (a, &s) in acc.iter_mut().zip(src) {
            *a = self.sub(*a, s);
        }
    }
}

fn clmul_reduce(a: u32, b: u32, degree: u32, poly: u32) -> u32 {
    let mut product: u64 = 0;
    for i in 0..degree {
        if (b >> i) & 1 == 1 {
            product ^= (a as u64) << i;
        }
    }
    for bit in (degree..2 * degree).rev() {
        if (product >> bit) & 1 == 1 {
            product ^= (poly as u64) << (bit - degree);
        }
    }
    product as u32
}

fn build_tables(degree: u32, poly: u32) -> LogTables {
    let q = 1usize << degree;
    let n = q - 1;
    let generator = (2..q as u32)
        .chain(std::iter::once(1))
        .find(|&g| multiplicative_order(g, degree, poly) == n)
        .expect("the multiplicative group of a finite field is cyclic");
    let mut exp = vec![0u16; 2 * n.max(1)];
    let mut log = vec![0u16; q];
    let mut x = 1u32;
    for i in 0..n {
        exp[i] = x as u16;
        exp[i + n] = x as u16;
        log[x as usize] = i as u16;
        x = clmul_reduce(x, generator, degree, poly);
    }
    LogTables { log, exp }
}

fn multiplicative_order(g: u32, degree: u32, poly: u32) -> usize {
    let mut x = g;
    let mut k = 1;
    while x != 1 {
        x = clmul_reduce(x, g, degree, poly);
        k += 1;
        if k > 1 << degree {
            return 0;
        }
    }
    k
}

/// An element carrying a reference to its field; operations reject operands
/// from a different field.
#[derive(Debug, Clone, Copy)]
pub struct FieldElement<'f> {
    field: &'f Field,
    value: Elem,
}

impl<'f> FieldElement<'f> {
    pub fn value(&self) -> Elem {
        self.value
    }

    pub fn field(&self) -> &'f Field {
        self.field
    }

    fn same_field(&self, other: &FieldElement<'_>) -> Result<()> {
        if self.field.spec != other.field.spec {
            return Err(usage(format!(
                "mixed-field operands: {} and {}",
                self.field.spec, other.field.spec
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement<'_>) -> Result<FieldElement<'f>> {
        self.same_field(other)?;
        Ok(FieldElement {
            field: self.field,
            value: self.field.add(self.value, other.value),
        })
    }

    pub fn mul(&self, other: &FieldElement<'_>) -> Result<FieldElement<'f>> {
        self.same_field(other)?;
        Ok(FieldElement {
            field: self.field,
            value: self.field.mul(self.value, other.value),
        })
    }

    pub fn inv(&self) -> Result<FieldElement<'f>> {
        Ok(FieldElement {
            field: self.field,
            value: self.field.inv(self.value)?,
        })
    }
}

impl PartialEq for FieldElement<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.field.spec == other.field.spec && self.value == other.value
    }
}
