//! Permutation-pair private keys that turn two public sets into per-client
//! decoding rows, and the brute-force guessing cost of such a row.
//!
//! Every client holds a position permutation over `{0..n}` and a value
//! permutation over the nonzero field elements. The base station publishes a
//! set of `r` distinct positions and a set of `r` distinct nonzero values;
//! client `i` places value `Π_Q^i(z_j)` at position `Π_N^i(y_j)`. Positions are
//! 0-based in code.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{usage, Error, Result};
use crate::galois::{Elem, Field};

/// A client's private key: one bijection on positions, one on nonzero values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationPair {
    /// `positions[y]` is the image of position `y`.
    positions: Vec<usize>,
    /// `values[z - 1]` is the image of the nonzero element `z`.
    values: Vec<Elem>,
}

impl PermutationPair {
    pub fn identity(n: usize, field: &Field) -> Self {
        PermutationPair {
            positions: (0..n).collect(),
            values: field.nonzero().collect(),
        }
    }

    pub fn from_parts(positions: Vec<usize>, values: Vec<Elem>, field: &Field) -> Result<Self> {
        let pair = PermutationPair { positions, values };
        if !pair.is_bijection(field) {
            return Err(usage("permutation pair is not a pair of bijections"));
        }
        Ok(pair)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, y: usize) -> usize {
        self.positions[y]
    }

    pub fn value(&self, z: Elem) -> Elem {
        self.values[z.0 as usize - 1]
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn values(&self) -> &[Elem] {
        &self.values
    }

    /// Both maps are bijections: their sorted images equal their domains.
    pub fn is_bijection(&self, field: &Field) -> bool {
        let mut pos = self.positions.clone();
        pos.sort_unstable();
        let mut vals = self.values.clone();
        vals.sort_unstable();
        pos.iter().copied().eq(0..self.positions.len()) && vals.iter().copied().eq(field.nonzero())
    }
}

/// The public location and value sets `(Y_r, Z_r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKeySets {
    pub positions: Vec<usize>,
    pub values: Vec<Elem>,
}

impl PublicKeySets {
    pub fn rate(&self) -> usize {
        self.positions.len()
    }
}

/// Draws a uniformly random permutation pair.
pub fn gen_permutations<R: Rng + ?Sized>(n: usize, field: &Field, rng: &mut R) -> Result<PermutationPair> {
    if n == 0 {
        return Err(usage("need at least one client"));
    }
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(rng);
    let mut values: Vec<Elem> = field.nonzero().collect();
    values.shuffle(rng);
    Ok(PermutationPair { positions, values })
}

/// Draws `r` distinct positions from `0..n` and `r` distinct nonzero values.
pub fn gen_public_sets<R: Rng + ?Sized>(n: usize, r: usize, field: &Field, rng: &mut R) -> Result<PublicKeySets> {
    let nonzero = field.order() as usize - 1;
    if r > n || r > nonzero {
        return Err(usage(format!("rate r={r} exceeds min(n={n}, q-1={nonzero})")));
    }
    let positions = index::sample(rng, n, r).into_vec();
    let values = index::sample(rng, nonzero, r)
        .into_iter()
        .map(|v| Elem(v as u16 + 1))
        .collect();
    Ok(PublicKeySets { positions, values })
}

/// Row of the decoding matrix assigned by the base station:
/// `row[Π_N(y_j)] = Π_Q(z_j)`.
pub fn derive_row(keys: &PermutationPair, public: &PublicKeySets, n: usize) -> Vec<Elem> {
    let mut row = vec![Elem::ZERO; n];
    for (&y, &z) in public.positions.iter().zip(&public.values) {
        row[keys.position(y)] = keys.value(z);
    }
    row
}

/// Client-side reconstruction of its own decoding row from the public sets.
pub fn decrypt_row(keys: &PermutationPair, public: &PublicKeySets, n: usize) -> Vec<Elem> {
    let mut coefficients: Vec<(usize, Elem)> = public
        .positions
        .iter()
        .zip(&public.values)
        .map(|(&y, &z)| (keys.position(y), keys.value(z)))
        .collect();
    coefficients.sort_unstable_by_key(|&(pos, _)| pos);
    let mut row = Vec::with_capacity(n);
    let mut next = coefficients.into_iter().peekable();
    for pos in 0..n {
        match next.peek() {
            Some(&(p, v)) if p == pos => {
                row.push(v);
                next.next();
            }
            _ => row.push(Elem::ZERO),
        }
    }
    row
}

fn factorial(k: u64) -> BigUint {
    (2..=k).fold(BigUint::one(), |acc, i| acc * i)
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Average number of brute-force trials an eavesdropping client needs to
/// guess another client's decoding row: `(min{(q-1)^r, (q-1)!·n!} + 1) / 2`.
///
/// Exact. Refuses `q ≤ 2`, where the guessing argument is not defined.
pub fn brute_force_cost(q: u64, r: u64, n: u64) -> Result<BigRational> {
    if q <= 2 {
        return Err(Error::Unsupported(format!(
            "brute-force cost is defined for q > 2 (got q={q})"
        )));
    }
    let ln_coeff = r as f64 * ((q - 1) as f64).ln();
    let ln_perm = ln_factorial(q - 1) + ln_factorial(n);
    // Only materialise the factorial branch when it can be the minimum.
    let keys = if ln_coeff + 1.0 < ln_perm {
        BigUint::from(q - 1).pow(r as u32)
    } else if ln_perm + 1.0 < ln_coeff {
        factorial(q - 1) * factorial(n)
    } else {
        let coeff = BigUint::from(q - 1).pow(r as u32);
        let perm = factorial(q - 1) * factorial(n);
        coeff.min(perm)
    };
    Ok(BigRational::new((keys + 1u32).into(), BigUint::from(2u32).into()))
}

/// Scientific-notation rendering of a large positive rational.
pub fn approx_decimal(value: &BigRational) -> String {
    if let Some(f) = value.to_f64().filter(|f| f.is_finite() && *f < 1e15) {
        return format!("{f}");
    }
    let int = value.to_integer();
    let digits = int.to_string();
    let exp = digits.len() - 1;
    let mantissa = format!("{}.{}", &digits[..1], &digits[1..digits.len().min(7)]);
    format!("{mantissa}e{exp}")
}
