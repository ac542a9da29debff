//! Blind, partial linear coding of per-client messages.
//!
//! The base station holds a sparse invertible decoding matrix `A` (row `i`
//! belongs to client `i` and has exactly `r` nonzeros) and solves
//! `X = A·P` for the coded packets `P`. Client `i` recovers its message as
//! `x_i = A_i·P`, touching only the `r` packets in its support.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{parse_err, usage, Error, Result};
use crate::galois::{Elem, Field, FieldSpec};
use crate::keyshare::{self, PermutationPair, PublicKeySets};

/// Public-set resamples before the generator starts replacing client keys.
pub const PUBLIC_SET_RETRIES: usize = 100;
/// Key resamples allowed per row while repairing a singular matrix.
pub const KEY_RETRIES_PER_ROW: usize = 10_000;

pub const DEFAULT_MESSAGE_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub owner: usize,
    pub payload: Vec<Elem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: usize,
    pub payload: Vec<Elem>,
}

/// The `n × n` decoding matrix with its per-row supports.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingMatrix {
    field: Field,
    rate: usize,
    rows: Vec<Vec<Elem>>,
    supports: Vec<Vec<usize>>,
}

impl DecodingMatrix {
    /// Validates shape, uniform row weight and invertibility.
    pub fn from_rows(field: Field, rows: Vec<Vec<Elem>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(usage("decoding matrix needs at least one row"));
        }
        if let Some(bad) = rows.iter().position(|row| row.len() != n) {
            return Err(usage(format!(
                "row {bad} has length {} (expected {n})",
                rows[bad].len()
            )));
        }
        if rows.iter().flatten().any(|&e| !field.contains(e)) {
            return Err(usage("matrix entry outside the field"));
        }
        let supports: Vec<Vec<usize>> = rows
            .iter()
            .map(|row| (0..n).filter(|&j| !row[j].is_zero()).collect())
            .collect();
        let rate = supports[0].len();
        if supports.iter().any(|s| s.len() != rate) {
            return Err(usage("rows have different numbers of nonzero entries"));
        }
        if rank(&field, &rows) != n {
            return Err(usage("decoding matrix is singular"));
        }
        Ok(DecodingMatrix {
            field,
            rate,
            rows,
            supports,
        })
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![Elem::ZERO; n];
                row[i] = Elem::ONE;
                row
            })
            .collect();
        DecodingMatrix::from_rows(field, rows).expect("identity is invertible")
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rate(&self) -> usize {
        self.rate
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<Elem>] {
        &self.rows
    }

    /// Packet ids client `i` needs (`I_i`, ascending).
    pub fn support(&self, i: usize) -> &[usize] {
        &self.supports[i]
    }
}

/// A generated matrix together with the key material that produced it.
#[derive(Debug, Clone)]
pub struct KeyedMatrix {
    pub matrix: DecodingMatrix,
    pub keys: Vec<PermutationPair>,
    pub public: PublicKeySets,
}

/// Fresh keys for `n` clients followed by [`generate_matrix`].
pub fn generate_instance<R: Rng + ?Sized>(n: usize, r: usize, field: &Field, rng: &mut R) -> Result<KeyedMatrix> {
    check_rate(n, r, field)?;
    let keys = (0..n)
        .map(|_| keyshare::gen_permutations(n, field, rng))
        .collect::<Result<Vec<_>>>()?;
    generate_matrix(n, r, field, keys, rng)
}

fn check_rate(n: usize, r: usize, field: &Field) -> Result<()> {
    let nonzero = field.order() as usize - 1;
    if n == 0 || r == 0 || r > n || r > nonzero {
        return Err(usage(format!(
            "rate r={r} must satisfy 1 <= r <= min(n={n}, q-1={nonzero})"
        )));
    }
    Ok(())
}

/// Builds an invertible decoding matrix whose row `i` is the row client `i`
/// derives from its keys and the public sets.
///
/// Singular draws are handled by resampling the public sets; if that keeps
/// failing, rows are admitted one at a time and a client whose row is
/// dependent on the earlier ones gets a fresh permutation pair.
pub fn generate_matrix<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    field: &Field,
    mut keys: Vec<PermutationPair>,
    rng: &mut R,
) -> Result<KeyedMatrix> {
    check_rate(n, r, field)?;
    if keys.len() != n || keys.iter().any(|k| k.n() != n) {
        return Err(usage("need one permutation pair over n positions per client"));
    }
    let mut attempts = 0;
    let mut public = keyshare::gen_public_sets(n, r, field, rng)?;
    for retry in 0..PUBLIC_SET_RETRIES {
        if retry > 0 {
            public = keyshare::gen_public_sets(n, r, field, rng)?;
        }
        attempts += 1;
        let rows: Vec<Vec<Elem>> = keys.iter().map(|k| keyshare::derive_row(k, &public, n)).collect();
        if rank(field, &rows) == n {
            let matrix = DecodingMatrix::from_rows(field.clone(), rows)?;
            return Ok(KeyedMatrix { matrix, keys, public });
        }
    }

    let mut basis = Echelon::new(field.clone(), n);
    let mut rows = Vec::with_capacity(n);
    for key in keys.iter_mut() {
        let mut tries = 0;
        loop {
            let row = keyshare::derive_row(key, &public, n);
            attempts += 1;
            if basis.insert(&row) {
                rows.push(row);
                break;
            }
            tries += 1;
            if tries >= KEY_RETRIES_PER_ROW {
                return Err(Error::GenerationFailure { attempts });
            }
            *key = keyshare::gen_permutations(n, field, rng)?;
        }
    }
    let matrix = DecodingMatrix::from_rows(field.clone(), rows)?;
    Ok(KeyedMatrix { matrix, keys, public })
}

/// Rank over the field by Gaussian elimination.
pub fn rank(field: &Field, rows: &[Vec<Elem>]) -> usize {
    let width = rows.first().map_or(0, Vec::len);
    let mut basis = Echelon::new(field.clone(), width);
    rows.iter().filter(|row| basis.insert(row)).count()
}

/// Incrementally maintained row-echelon basis.
struct Echelon {
    field: Field,
    /// (pivot column, row normalised so the pivot is 1)
    rows: Vec<(usize, Vec<Elem>)>,
    width: usize,
}

impl Echelon {
    fn new(field: Field, width: usize) -> Self {
        Echelon {
            field,
            rows: Vec::new(),
            width,
        }
    }

    /// Adds `row` if it is independent of the basis; returns whether it was.
    fn insert(&mut self, row: &[Elem]) -> bool {
        let f = &self.field;
        let mut v = row.to_vec();
        for (pivot, basis_row) in &self.rows {
            let c = v[*pivot];
            if !c.is_zero() {
                f.axpy(&mut v, f.neg(c), basis_row);
            }
        }
        let Some(pivot) = (0..self.width).find(|&j| !v[j].is_zero()) else {
            return false;
        };
        let inv = f.inv(v[pivot]).expect("pivot is nonzero");
        for e in v.iter_mut() {
            *e = f.mul(*e, inv);
        }
        // Keep earlier rows reduced against the new pivot so later
        // reductions stay a single pass.
        for (_, basis_row) in self.rows.iter_mut() {
            let c = basis_row[pivot];
            if !c.is_zero() {
                f.axpy(basis_row, f.neg(c), &v);
            }
        }
        self.rows.push((pivot, v));
        true
    }
}

/// Solves `A·P = X` for the coded packets.
///
/// One Gauss-Jordan pass over the augmented matrix `[A | X]` handles all
/// payload coordinates at once.
pub fn encode(matrix: &DecodingMatrix, messages: &[Message]) -> Result<Vec<Packet>> {
    let n = matrix.n();
    let f = matrix.field();
    if messages.len() != n {
        return Err(usage(format!("{} messages for {n} clients", messages.len())));
    }
    let m_len = messages[0].payload.len();
    if messages.iter().any(|m| m.payload.len() != m_len) {
        return Err(usage("messages have different lengths"));
    }
    let mut by_owner: Vec<Option<&Message>> = vec![None; n];
    for m in messages {
        if m.owner >= n || by_owner[m.owner].replace(m).is_some() {
            return Err(usage(format!("bad or duplicate message owner {}", m.owner)));
        }
    }
    let mut aug: Vec<Vec<Elem>> = (0..n)
        .map(|i| {
            let mut row = matrix.row(i).to_vec();
            row.extend_from_slice(&by_owner[i].expect("every owner present").payload);
            row
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .find(|&i| !aug[i][col].is_zero())
            .ok_or_else(|| usage("decoding matrix is singular"))?;
        aug.swap(col, pivot);
        let inv = f.inv(aug[col][col])?;
        for e in aug[col].iter_mut() {
            *e = f.mul(*e, inv);
        }
        let pivot_row = aug[col].clone();
        for (i, row) in aug.iter_mut().enumerate() {
            if i != col && !row[col].is_zero() {
                let c = f.neg(row[col]);
                f.axpy(row, c, &pivot_row);
            }
        }
    }
    Ok(aug
        .into_iter()
        .enumerate()
        .map(|(id, row)| Packet {
            id,
            payload: row[n..].to_vec(),
        })
        .collect())
}

/// Anything that can hand out packet payloads by id.
pub trait PacketLookup {
    fn payload(&self, id: usize) -> Option<&[Elem]>;
}

impl PacketLookup for HashMap<usize, Packet> {
    fn payload(&self, id: usize) -> Option<&[Elem]> {
        self.get(&id).map(|p| p.payload.as_slice())
    }
}

impl PacketLookup for BTreeMap<usize, Packet> {
    fn payload(&self, id: usize) -> Option<&[Elem]> {
        self.get(&id).map(|p| p.payload.as_slice())
    }
}

impl PacketLookup for [Option<Vec<Elem>>] {
    fn payload(&self, id: usize) -> Option<&[Elem]> {
        self.get(id).and_then(|p| p.as_deref())
    }
}

impl PacketLookup for [Packet] {
    fn payload(&self, id: usize) -> Option<&[Elem]> {
        self.get(id).filter(|p| p.id == id).map(|p| p.payload.as_slice())
    }
}

/// `x_i = Σ_{j ∈ I_i} A_i[j]·p_j`, coordinate-wise.
pub fn decode_client<L: PacketLookup + ?Sized>(matrix: &DecodingMatrix, client: usize, have: &L) -> Result<Message> {
    let support = matrix.support(client);
    let missing: Vec<usize> = support.iter().copied().filter(|&j| have.payload(j).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::NotYetDecodable { client, missing });
    }
    let f = matrix.field();
    let row = matrix.row(client);
    let m_len = have.payload(support[0]).map_or(0, <[Elem]>::len);
    let mut payload = vec![Elem::ZERO; m_len];
    for &j in support {
        let p = have.payload(j).expect("checked above");
        if p.len() != m_len {
            return Err(usage("packets have different lengths"));
        }
        f.axpy(&mut payload, row[j], p);
    }
    Ok(Message { owner: client, payload })
}

/// Uniformly random messages of `m_len` elements.
pub fn random_messages<R: Rng + ?Sized>(n: usize, m_len: usize, field: &Field, rng: &mut R) -> Vec<Message> {
    let q = field.order();
    (0..n)
        .map(|owner| Message {
            owner,
            payload: (0..m_len).map(|_| Elem(rng.gen_range(0..q) as u16)).collect(),
        })
        .collect()
}

/// Everything needed to replay an encoding: parameters, matrix and packets.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub seed: u64,
    pub matrix: DecodingMatrix,
    pub packets: Vec<Packet>,
}

impl Instance {
    pub fn m_len(&self) -> usize {
        self.packets.first().map_or(0, |p| p.payload.len())
    }

    /// Line-oriented text form. Indices in `row`/`packet` lines are 1-based.
    ///
    /// ```text
    /// # securecast instance
    /// n 2
    /// r 1
    /// field prime:5
    /// seed 7
    /// m_len 1
    /// row 1 2 0
    /// row 2 0 3
    /// packet 1 2
    /// packet 2 2
    /// ```
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let m = &self.matrix;
        let _ = writeln!(out, "# securecast instance");
        let _ = writeln!(out, "n {}", m.n());
        let _ = writeln!(out, "r {}", m.rate());
        let _ = writeln!(out, "field {}", m.field().spec());
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "m_len {}", self.m_len());
        for (i, row) in m.rows().iter().enumerate() {
            let _ = write!(out, "row {}", i + 1);
            for e in row {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
        for p in &self.packets {
            let _ = write!(out, "packet {}", p.id + 1);
            for e in &p.payload {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form produced by [`Instance::dump`], validating every
    /// structural invariant (dimensions, field range, row weight, invertibility).
    pub fn parse(text: &str) -> Result<Instance> {
        let mut n = None;
        let mut r = None;
        let mut field = None;
        let mut seed = None;
        let mut m_len = None;
        let mut rows: BTreeMap<usize, (usize, Vec<u32>)> = BTreeMap::new();
        let mut packets: BTreeMap<usize, (usize, Vec<u32>)> = BTreeMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("line is not empty");
            let num = |s: Option<&str>| -> Result<u64> {
                s.ok_or_else(|| parse_err(lineno, "missing value"))?
                    .parse::<u64>()
                    .map_err(|_| parse_err(lineno, "expected a nonnegative integer"))
            };
            match key {
                "n" | "r" | "seed" | "m_len" => {
                    let v = num(parts.next())?;
                    if parts.next().is_some() {
                        return Err(parse_err(lineno, "trailing tokens"));
                    }
                    let slot = match key {
                        "n" => &mut n,
                        "r" => &mut r,
                        "seed" => &mut seed,
                        _ => &mut m_len,
                    };
                    if slot.replace(v).is_some() {
                        return Err(parse_err(lineno, format!("duplicate {key}")));
                    }
                }
                "field" => {
                    let spec =
                        FieldSpec::parse(parts.next().unwrap_or("")).map_err(|e| parse_err(lineno, e.to_string()))?;
                    if field.replace(spec).is_some() {
                        return Err(parse_err(lineno, "duplicate field"));
                    }
                }
                "row" | "packet" => {
                    let index = num(parts.next())? as usize;
                    if index == 0 {
                        return Err(parse_err(lineno, "indices are 1-based"));
                    }
                    let values = parts
                        .map(|t| {
                            t.parse::<u32>()
                                .map_err(|_| parse_err(lineno, format!("bad element {t:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let target = if key == "row" { &mut rows } else { &mut packets };
                    if target.insert(index - 1, (lineno, values)).is_some() {
                        return Err(parse_err(lineno, format!("duplicate {key} {index}")));
                    }
                }
                other => return Err(parse_err(lineno, format!("unknown key {other:?}"))),
            }
        }

        let missing = |what: &str| parse_err(0, format!("missing {what}"));
        let n = n.ok_or_else(|| missing("n"))? as usize;
        let r = r.ok_or_else(|| missing("r"))? as usize;
        let spec = field.ok_or_else(|| missing("field"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;
        let m_len = m_len.ok_or_else(|| missing("m_len"))? as usize;
        if n == 0 || n > 4096 {
            return Err(parse_err(0, format!("n={n} out of range")));
        }
        if m_len > 1 << 20 {
            return Err(parse_err(0, format!("m_len={m_len} out of range")));
        }
        let field = Field::new(spec);
        let to_elems = |lineno: usize, values: Vec<u32>, len: usize| -> Result<Vec<Elem>> {
            if values.len() != len {
                return Err(parse_err(
                    lineno,
                    format!("expected {len} elements, got {}", values.len()),
                ));
            }
            values
                .into_iter()
                .map(|v| field.elem(v).map_err(|e| parse_err(lineno, e.to_string())))
                .collect()
        };
        if rows.len() != n || rows.keys().next_back() != Some(&(n - 1)) {
            return Err(parse_err(0, format!("expected rows 1..={n}")));
        }
        if packets.len() != n || packets.keys().next_back() != Some(&(n - 1)) {
            return Err(parse_err(0, format!("expected packets 1..={n}")));
        }
        let mut matrix_rows = Vec::with_capacity(n);
        for (_, (lineno, values)) in rows {
            let row = to_elems(lineno, values, n)?;
            if row.iter().filter(|e| !e.is_zero()).count() != r {
                return Err(parse_err(lineno, format!("row does not have exactly r={r} nonzeros")));
            }
            matrix_rows.push(row);
        }
        let matrix = DecodingMatrix::from_rows(field.clone(), matrix_rows).map_err(|e| parse_err(0, e.to_string()))?;
        let packets = packets
            .into_iter()
            .map(|(id, (lineno, values))| {
                Ok(Packet {
                    id,
                    payload: to_elems(lineno, values, m_len)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance { seed, matrix, packets })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f5() -> Field {
        Field::new(FieldSpec::prime(5).unwrap())
    }

    /// Independent product `A·P` via explicit loops.
    fn matvec(f: &Field, m: &DecodingMatrix, packets: &[Packet]) -> Vec<Vec<Elem>> {
        (0..m.n())
            .map(|i| {
                let len = packets[0].payload.len();
                (0..len)
                    .map(|k| {
                        (0..m.n()).fold(Elem::ZERO, |acc, j| {
                            f.add(acc, f.mul(m.row(i)[j], packets[j].payload[k]))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_client_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let km = generate_instance(1, 1, &Field::gf256(), &mut rng).unwrap();
        assert_eq!(km.matrix.n(), 1);
        assert!(!km.matrix.row(0)[0].is_zero());
    }

    #[test]
    fn full_rate_matrix_is_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Field::new(FieldSpec::prime(7).unwrap());
        for _ in 0..20 {
            let km = generate_instance(4, 4, &f, &mut rng).unwrap();
            assert_eq!(rank(&f, km.matrix.rows()), 4);
            for i in 0..4 {
                let mut vals: Vec<Elem> = km.matrix.row(i).to_vec();
                assert!(vals.iter().all(|v| !v.is_zero()));
                vals.sort();
                vals.dedup();
                assert_eq!(vals.len(), 4);
            }
        }
    }

    #[test]
    fn every_nonzero_value_per_row_is_singular() {
        // With r = n = q - 1 each row sums to zero, so no key choice helps.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            generate_instance(4, 4, &f5(), &mut rng),
            Err(Error::GenerationFailure { .. })
        ));
    }

    #[test]
    fn rate_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = f5();
        assert!(matches!(generate_instance(6, 5, &f, &mut rng), Err(Error::Usage(_))));
        assert!(matches!(generate_instance(4, 0, &f, &mut rng), Err(Error::Usage(_))));
        assert!(matches!(
            generate_instance(3, 4, &Field::gf256(), &mut rng),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn low_rate_forces_key_repair() {
        // With r = 1 every row is a scaled unit vector; a random key set is
        // almost never a permutation, so the row-by-row repair path runs.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = Field::gf256();
        let km = generate_instance(32, 1, &f, &mut rng).unwrap();
        assert_eq!(rank(&f, km.matrix.rows()), 32);
        for (i, key) in km.keys.iter().enumerate() {
            assert_eq!(keyshare::derive_row(key, &km.public, 32), km.matrix.row(i));
        }
    }

    #[test]
    fn encode_identity_is_passthrough() {
        let f = Field::gf256();
        let m = DecodingMatrix::identity(f.clone(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let msgs = random_messages(3, 4, &f, &mut rng);
        let packets = encode(&m, &msgs).unwrap();
        for (p, x) in packets.iter().zip(&msgs) {
            assert_eq!(p.payload, x.payload);
        }
    }

    #[test]
    fn encode_diagonal_gf5() {
        let f = f5();
        let m = DecodingMatrix::from_rows(f.clone(), vec![vec![Elem(2), Elem(0)], vec![Elem(0), Elem(3)]]).unwrap();
        let msgs = vec![
            Message {
                owner: 0,
                payload: vec![Elem(4)],
            },
            Message {
                owner: 1,
                payload: vec![Elem(1)],
            },
        ];
        let p = encode(&m, &msgs).unwrap();
        assert_eq!(p[0].payload, vec![Elem(2)]);
        assert_eq!(p[1].payload, vec![Elem(2)]);
    }

    #[test]
    fn encode_dimension_mismatch() {
        let f = f5();
        let m = DecodingMatrix::identity(f.clone(), 2);
        let one = vec![Message {
            owner: 0,
            payload: vec![Elem(1)],
        }];
        assert!(encode(&m, &one).is_err());
        let ragged = vec![
            Message {
                owner: 0,
                payload: vec![Elem(1)],
            },
            Message {
                owner: 1,
                payload: vec![Elem(1), Elem(2)],
            },
        ];
        assert!(encode(&m, &ragged).is_err());
    }

    #[test]
    fn random_instance_reproduces_messages() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = Field::gf256();
        let km = generate_instance(8, 3, &f, &mut rng).unwrap();
        let msgs = random_messages(8, 16, &f, &mut rng);
        let packets = encode(&km.matrix, &msgs).unwrap();
        let back = matvec(&f, &km.matrix, &packets);
        for (x, y) in msgs.iter().zip(back) {
            assert_eq!(x.payload, y);
        }
        for (i, msg) in msgs.iter().enumerate() {
            assert_eq!(&decode_client(&km.matrix, i, packets.as_slice()).unwrap(), msg);
        }
    }

    #[test]
    fn decode_single_coefficient_returns_packet() {
        let f = f5();
        let m = DecodingMatrix::identity(f, 2);
        let mut have = HashMap::new();
        have.insert(
            1,
            Packet {
                id: 1,
                payload: vec![Elem(3), Elem(4)],
            },
        );
        assert_eq!(decode_client(&m, 1, &have).unwrap().payload, vec![Elem(3), Elem(4)]);
        assert!(matches!(
            decode_client(&m, 0, &have),
            Err(Error::NotYetDecodable { client: 0, .. })
        ));
    }

    #[test]
    fn intro_shape_needs_other_three_packets() {
        // alpha_jj = 0 and every other coefficient nonzero.
        let f = Field::new(FieldSpec::prime(7).unwrap());
        let rows: Vec<Vec<Elem>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { Elem(0) } else { Elem(1) }).collect())
            .collect();
        let m = DecodingMatrix::from_rows(f.clone(), rows).unwrap();
        for i in 0..4 {
            assert_eq!(m.support(i), (0..4).filter(|&j| j != i).collect::<Vec<_>>().as_slice());
        }
        let msgs: Vec<Message> = (0..4)
            .map(|i| Message {
                owner: i,
                payload: vec![Elem(i as u16 + 1)],
            })
            .collect();
        let packets = encode(&m, &msgs).unwrap();
        let mut have: BTreeMap<usize, Packet> = packets
            .iter()
            .filter(|p| p.id != 0)
            .map(|p| (p.id, p.clone()))
            .collect();
        assert_eq!(decode_client(&m, 0, &have).unwrap(), msgs[0]);
        have.remove(&2);
        assert!(decode_client(&m, 0, &have).is_err());
    }

    #[test]
    fn partiality_exact_support_needed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = Field::gf256();
        let km = generate_instance(10, 4, &f, &mut rng).unwrap();
        let msgs = random_messages(10, 8, &f, &mut rng);
        let packets = encode(&km.matrix, &msgs).unwrap();
        for (i, msg) in msgs.iter().enumerate() {
            let support = km.matrix.support(i);
            let mut have: HashMap<usize, Packet> = support.iter().map(|&j| (j, packets[j].clone())).collect();
            assert_eq!(&decode_client(&km.matrix, i, &have).unwrap(), msg);
            for &j in support {
                let p = have.remove(&j).unwrap();
                match decode_client(&km.matrix, i, &have) {
                    Err(Error::NotYetDecodable { missing, .. }) => assert_eq!(missing, vec![j]),
                    other => panic!("expected not-yet-decodable, got {other:?}"),
                }
                have.insert(j, p);
            }
        }
    }

    #[test]
    fn instance_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = Field::new(FieldSpec::prime(257).unwrap());
        let km = generate_instance(5, 2, &f, &mut rng).unwrap();
        let msgs = random_messages(5, 3, &f, &mut rng);
        let packets = encode(&km.matrix, &msgs).unwrap();
        let inst = Instance {
            seed: 8,
            matrix: km.matrix,
            packets,
        };
        let text = inst.dump();
        assert_eq!(Instance::parse(&text).unwrap(), inst);
    }

    #[test]
    fn instance_parse_errors() {
        let good = "n 2\nr 1\nfield prime:5\nseed 7\nm_len 1\nrow 1 2 0\nrow 2 0 3\npacket 1 2\npacket 2 2\n";
        let inst = Instance::parse(good).unwrap();
        assert_eq!(inst.matrix.row(0), &[Elem(2), Elem(0)]);
        let cases = [
            good.replace("row 2 0 3", "row 2 0 5"),
            good.replace("row 2 0 3", "row 2 3 0"),
            good.replace("row 2 0 3", "row 2 1 3"),
            good.replace("packet 2 2\n", ""),
            good.replace("n 2", "n x"),
            good.replace("seed 7\n", ""),
            good.replace("row 1 2 0", "row 0 2 0"),
            format!("{good}bogus 1\n"),
            format!("{good}n 2\n"),
        ];
        for c in &cases {
            assert!(matches!(Instance::parse(c), Err(Error::Parse { .. })), "{c}");
        }
    }
}
