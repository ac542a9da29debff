//! Packet recovery driven by the base station.
//!
//! Each round the base station builds the global IDNC graph, picks a greedy
//! weighted clique and broadcasts the field sum of its packets. In the basic
//! variant only targeted clients listen; in the modified variant every client
//! that can decode something new from the combination listens.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{deliver_round, ChannelParams, ClientState, PayloadBook, Transmitter};
use crate::error::{parse_err, usage, Error, Result};
use crate::idnc::{build_global, compute_weights, Vertex};

pub const DEFAULT_ROUND_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Basic,
    Modified,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Basic => "basic",
            Variant::Modified => "modified",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Variant::Basic),
            "modified" => Ok(Variant::Modified),
            other => Err(usage(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryOptions {
    pub round_cap: usize,
    pub keep_transcript: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            round_cap: DEFAULT_ROUND_CAP,
            keep_transcript: true,
        }
    }
}

/// A packet handed to a client by one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Credit {
    pub client: usize,
    pub packet: usize,
    /// The packet was in the client's Wants set (otherwise it was merely lacked).
    pub wanted: bool,
}

/// One recovery transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub transmitter: Transmitter,
    /// Packets summed into the transmission, ascending.
    pub packets: Vec<usize>,
    /// Clique vertices, ascending.
    pub targets: Vec<Vertex>,
    /// Clients with their radio on, ascending.
    pub listeners: Vec<usize>,
    /// Listeners whose copy was not erased, ascending.
    pub receivers: Vec<usize>,
    pub credited: Vec<Credit>,
}

impl RoundRecord {
    /// Vertices deleted from the graph by this round.
    pub fn removed(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.credited.iter().filter(|c| c.wanted).map(|c| Vertex {
            client: c.client,
            packet: c.packet,
        })
    }

    pub fn removed_count(&self) -> usize {
        self.credited.iter().filter(|c| c.wanted).count()
    }
}

fn write_list<T>(f: &mut fmt::Formatter<'_>, items: &[T], each: impl Fn(&T) -> String) -> fmt::Result {
    if items.is_empty() {
        return f.write_str("-");
    }
    let parts: Vec<String> = items.iter().map(each).collect();
    f.write_str(&parts.join(","))
}

impl fmt::Display for RoundRecord {
    /// `t=.. tx=bs|cK packets=.. targets=c:p,.. listeners=.. receivers=.. credited=c:p[*],..`
    /// with 1-based ids, `-` for an empty list and `*` marking a credit outside the Wants set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} tx=", self.round)?;
        match self.transmitter {
            Transmitter::BaseStation => f.write_str("bs")?,
            Transmitter::Client(c) => write!(f, "c{}", c + 1)?,
        }
        f.write_str(" packets=")?;
        write_list(f, &self.packets, |j| (j + 1).to_string())?;
        f.write_str(" targets=")?;
        write_list(f, &self.targets, |v| format!("{}:{}", v.client + 1, v.packet + 1))?;
        f.write_str(" listeners=")?;
        write_list(f, &self.listeners, |c| (c + 1).to_string())?;
        f.write_str(" receivers=")?;
        write_list(f, &self.receivers, |c| (c + 1).to_string())?;
        f.write_str(" credited=")?;
        write_list(f, &self.credited, |c| {
            format!("{}:{}{}", c.client + 1, c.packet + 1, if c.wanted { "" } else { "*" })
        })
    }
}

fn parse_id(tok: &str, line: usize) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(0) | Err(_) => Err(parse_err(line, format!("invalid 1-based id `{tok}`"))),
        Ok(v) => Ok(v - 1),
    }
}

fn parse_items<T>(value: &str, line: usize, each: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if value == "-" {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(each)
        .collect::<Result<Vec<T>>>()
        .map_err(|e| match e {
            Error::Parse { message, .. } => parse_err(line, message),
            other => other,
        })
}

fn parse_pair(tok: &str, line: usize) -> Result<(usize, usize)> {
    let (c, p) = tok
        .split_once(':')
        .ok_or_else(|| parse_err(line, format!("expected client:packet, got `{tok}`")))?;
    Ok((parse_id(c, line)?, parse_id(p, line)?))
}

impl FromStr for RoundRecord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_record(s, 1)
    }
}

fn parse_record(s: &str, line: usize) -> Result<RoundRecord> {
    const KEYS: [&str; 7] = ["t", "tx", "packets", "targets", "listeners", "receivers", "credited"];
    let fields: Vec<&str> = s.split_whitespace().collect();
    if fields.len() != KEYS.len() {
        return Err(parse_err(line, format!("expected {} fields", KEYS.len())));
    }
    let mut values = [""; 7];
    for (slot, (field, key)) in values.iter_mut().zip(fields.iter().zip(KEYS)) {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected key=value, got `{field}`")))?;
        if k != key {
            return Err(parse_err(line, format!("expected key `{key}`, got `{k}`")));
        }
        *slot = v;
    }
    let round = values[0]
        .parse::<usize>()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| parse_err(line, "round must be a positive integer"))?;
    let transmitter = match values[1] {
        "bs" => Transmitter::BaseStation,
        other => match other.strip_prefix('c') {
            Some(id) => Transmitter::Client(parse_id(id, line)?),
            None => return Err(parse_err(line, format!("unknown transmitter `{other}`"))),
        },
    };
    let packets = parse_items(values[2], line, |t| parse_id(t, line))?;
    let targets = parse_items(values[3], line, |t| {
        parse_pair(t, line).map(|(client, packet)| Vertex { client, packet })
    })?;
    let listeners = parse_items(values[4], line, |t| parse_id(t, line))?;
    let receivers = parse_items(values[5], line, |t| parse_id(t, line))?;
    let credited = parse_items(values[6], line, |t| {
        let (body, wanted) = match t.strip_suffix('*') {
            Some(b) => (b, false),
            None => (t, true),
        };
        parse_pair(body, line).map(|(client, packet)| Credit { client, packet, wanted })
    })?;
    Ok(RoundRecord {
        round,
        transmitter,
        packets,
        targets,
        listeners,
        receivers,
        credited,
    })
}

/// One record per line.
pub fn format_transcript(records: &[RoundRecord]) -> String {
    records.iter().map(|r| format!("{r}\n")).collect()
}

/// Parses a transcript; blank lines and `#` comments are skipped. Round
/// indices must be 1, 2, 3, ... in order.
pub fn parse_transcript(text: &str) -> Result<Vec<RoundRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rec = parse_record(line, idx + 1)?;
        if rec.round != out.len() + 1 {
            return Err(parse_err(
                idx + 1,
                format!("expected round {}, got {}", out.len() + 1, rec.round),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Checks a round against the states it was applied to: every credited client
/// listened, received, and had exactly one unknown among the combined
/// packets, which is the packet credited. The transmitter must hold every
/// combined packet, and targets must lie in the listener set.
pub fn audit_round(record: &RoundRecord, pre: &[ClientState]) -> Result<()> {
    let fail = |client: usize, reason: String| Error::Audit {
        round: record.round,
        client,
        reason,
    };
    let state = |c: usize| pre.iter().find(|s| s.id == c);
    if let Transmitter::Client(u) = record.transmitter {
        let s = state(u).ok_or_else(|| fail(u, "unknown transmitter".into()))?;
        if let Some(&j) = record.packets.iter().find(|&&j| !s.holds(j)) {
            return Err(fail(u, format!("transmitter lacks packet {}", j + 1)));
        }
    }
    for t in &record.targets {
        if !record.packets.contains(&t.packet) {
            return Err(fail(t.client, "target packet not in combination".into()));
        }
        if !record.listeners.contains(&t.client) {
            return Err(fail(t.client, "target not listening".into()));
        }
    }
    for &r in &record.receivers {
        if !record.listeners.contains(&r) {
            return Err(fail(r, "receiver was not listening".into()));
        }
        if record.transmitter == Transmitter::Client(r) {
            return Err(fail(r, "transmitter received its own packet".into()));
        }
    }
    for credit in &record.credited {
        let c = credit.client;
        if !record.receivers.contains(&c) {
            return Err(fail(c, "credited without reception".into()));
        }
        let s = state(c).ok_or_else(|| fail(c, "unknown client".into()))?;
        let unknown: Vec<usize> = record.packets.iter().copied().filter(|&j| !s.holds(j)).collect();
        if unknown.len() != 1 {
            return Err(fail(c, format!("{} unknown packets in combination", unknown.len())));
        }
        if unknown[0] != credit.packet {
            return Err(fail(
                c,
                format!(
                    "credited packet {} is not the unknown {}",
                    credit.packet + 1,
                    unknown[0] + 1
                ),
            ));
        }
        if credit.wanted != s.wants().contains(credit.packet) {
            return Err(fail(c, "wanted flag disagrees with the Wants set".into()));
        }
    }
    Ok(())
}

/// Outcome of one centralized recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralMetrics {
    pub n_packets: usize,
    /// Recovery transmissions T.
    pub transmissions: usize,
    /// Final listen counts per client (including the initial broadcast).
    pub listens: Vec<u64>,
    /// Empty when transcripts are disabled.
    pub transcript: Vec<RoundRecord>,
    /// Vertices removed per round.
    pub removals: Vec<usize>,
}

impl CentralMetrics {
    /// `n / (n + T)`.
    pub fn throughput_ratio(&self) -> f64 {
        if self.n_packets == 0 {
            return 1.0;
        }
        self.n_packets as f64 / (self.n_packets + self.transmissions) as f64
    }

    pub fn mean_listens(&self) -> f64 {
        if self.listens.is_empty() {
            return 0.0;
        }
        self.listens.iter().sum::<u64>() as f64 / self.listens.len() as f64
    }
}

/// The unique packet of `packets` that `state` does not hold.
fn sole_unknown(state: &ClientState, packets: &[usize]) -> Option<usize> {
    let mut unknown = packets.iter().copied().filter(|&j| !state.holds(j));
    let first = unknown.next()?;
    unknown.next().is_none().then_some(first)
}

/// Applies a recorded round: credited clients move their packet into Γ, all
/// listeners are charged one listen, and payload buffers decode for real.
pub(crate) fn commit_round(
    record: &RoundRecord,
    states: &mut [ClientState],
    mut book: Option<&mut PayloadBook>,
) -> Result<()> {
    let combo = match book.as_deref() {
        Some(b) => Some(b.combine(record.transmitter, &record.packets)?),
        None => None,
    };
    for s in states.iter_mut() {
        if record.listeners.binary_search(&s.id).is_ok() {
            s.listen_count += 1;
        }
    }
    for credit in &record.credited {
        let s = states
            .iter_mut()
            .find(|s| s.id == credit.client)
            .expect("credited client present");
        s.receive(credit.packet);
        if let (Some(b), Some(c)) = (book.as_deref_mut(), combo.as_ref()) {
            b.absorb(credit.client, credit.packet, &record.packets, c)?;
        }
    }
    Ok(())
}

/// Runs recovery until every client's Wants set is empty. `states` must be
/// sorted by client id.
pub fn run_central<R: Rng + ?Sized>(
    states: &mut [ClientState],
    params: &ChannelParams,
    variant: Variant,
    rng: &mut R,
    mut book: Option<&mut PayloadBook>,
    opts: &RecoveryOptions,
) -> Result<CentralMetrics> {
    let n_packets = states.first().map_or(0, ClientState::n_packets);
    let everyone: Vec<usize> = states.iter().map(|s| s.id).collect();
    let mut transcript = Vec::new();
    let mut removals = Vec::new();
    let mut round = 0;
    while states.iter().any(|s| !s.is_decoded()) {
        // With every copy erased no round can make progress.
        if round >= opts.round_cap || params.p >= 1.0 {
            return Err(Error::RoundCap { rounds: opts.round_cap });
        }
        round += 1;
        let graph = build_global(states);
        let weights = compute_weights(&graph, states);
        let clique = graph.greedy_clique(&weights);
        let listeners: Vec<usize> = match variant {
            Variant::Basic => {
                let mut l: Vec<usize> = clique.vertices.iter().map(|v| v.client).collect();
                l.sort_unstable();
                l
            }
            Variant::Modified => states
                .iter()
                .filter(|s| sole_unknown(s, &clique.packets).is_some())
                .map(|s| s.id)
                .collect(),
        };
        let receivers = deliver_round(
            Transmitter::BaseStation,
            &everyone,
            |c| listeners.binary_search(&c).is_ok(),
            params.p,
            rng,
        );
        let credited = receivers
            .iter()
            .map(|&c| {
                let s = states.iter().find(|s| s.id == c).expect("receiver present");
                let packet = sole_unknown(s, &clique.packets).expect("listeners have one unknown");
                Credit {
                    client: c,
                    packet,
                    wanted: s.wants().contains(packet),
                }
            })
            .collect();
        let record = RoundRecord {
            round,
            transmitter: Transmitter::BaseStation,
            packets: clique.packets,
            targets: clique.vertices,
            listeners,
            receivers,
            credited,
        };
        audit_round(&record, states)?;
        commit_round(&record, states, book.as_deref_mut())?;
        removals.push(record.removed_count());
        if opts.keep_transcript {
            transcript.push(record);
        }
    }
    Ok(CentralMetrics {
        n_packets,
        transmissions: round,
        listens: states.iter().map(|s| s.listen_count).collect(),
        transcript,
        removals,
    })
}
