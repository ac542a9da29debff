//! Seeded Monte-Carlo experiments: configuration, per-trial pipelines,
//! parallel sweeps, theory comparison and CSV output.

use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{predict_central, predict_coop, AnalysisTrace, PredictorMode, PredictorParams};
use crate::central::{run_central, CentralMetrics, RecoveryOptions, Variant};
use crate::channel::{
    build_status, initial_broadcast_centralized, initial_broadcast_cooperative, states_from_supports, BroadcastOutcome,
    ChannelParams, ClientState, Cluster, PayloadBook,
};
use crate::codec::{
    decode_client, encode, generate_instance, random_messages, DecodingMatrix, Message, DEFAULT_MESSAGE_LEN,
};
use crate::coop::{run_coop, CoopMetrics};
use crate::error::{usage, Error, Result};
use crate::galois::{Field, FieldSpec};

/// Upper bound on `m_len` accepted from configuration.
pub const MAX_MESSAGE_LEN: usize = 1 << 16;
/// Upper bound on `n` accepted from configuration.
pub const MAX_CLIENTS: usize = 2048;

/// Seed of trial `trial` in cell `cell`: ChaCha keyed by the base seed, one
/// stream per cell, one 64-bit word per trial. Independent of evaluation order.
pub fn trial_seed(base: u64, cell: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(cell);
    rng.set_word_pos(u128::from(trial) * 2);
    rng.next_u64()
}

/// Clients of the introductory instance: four clients, four packets; client
/// `i` holds every packet except `i + 1 (mod 4)` and needs every packet except `i`.
pub fn intro_states() -> Vec<ClientState> {
    let supports: Vec<Vec<usize>> = (0..4).map(|i| (0..4).filter(|&j| j != i).collect()).collect();
    let has = (0..4)
        .map(|i| {
            let mut s = fixedbitset::FixedBitSet::with_capacity(4);
            for j in (0..4).filter(|&j| j != (i + 3) % 4) {
                s.insert(j);
            }
            s
        })
        .collect();
    states_from_supports(4, &supports, &BroadcastOutcome::from_has(has)).expect("intro instance is valid")
}

/// `(T, T_c)` of the introductory instance with lossless recovery.
pub fn demo_intro() -> Result<(usize, usize)> {
    let lossless = ChannelParams::new(0.0, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let opts = RecoveryOptions::default();
    let mut states = intro_states();
    let central = run_central(&mut states, &lossless, Variant::Basic, &mut rng, None, &opts)?;
    let mut states = intro_states();
    let cluster = Cluster::first(4)?;
    let coop = run_coop(&mut states, &cluster, &lossless, &mut rng, None, &opts)?;
    Ok((central.transmissions, coop.transmissions))
}

/// Parameters of one centralized trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralTrialSpec {
    pub n: usize,
    pub r: usize,
    pub field: FieldSpec,
    pub m_len: usize,
    pub p: f64,
    pub variant: Variant,
}

/// Parameters of one cooperative trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopTrialSpec {
    pub n: usize,
    pub r: usize,
    pub field: FieldSpec,
    pub m_len: usize,
    pub p: f64,
    pub p_prime: f64,
    pub cluster_size: usize,
}

/// Encoded instance ready for the broadcast phase.
struct Encoded {
    field: Field,
    matrix: DecodingMatrix,
    messages: Vec<Message>,
    packets: Vec<crate::codec::Packet>,
}

fn encode_instance<R: rand::Rng + ?Sized>(
    n: usize,
    r: usize,
    spec: FieldSpec,
    m_len: usize,
    rng: &mut R,
) -> Result<Encoded> {
    let field = Field::new(spec);
    let keyed = generate_instance(n, r, &field, rng)?;
    let messages = random_messages(n, m_len, &field, rng);
    let packets = encode(&keyed.matrix, &messages)?;
    Ok(Encoded {
        field,
        matrix: keyed.matrix,
        messages,
        packets,
    })
}

/// Every listed client must decode its own message from its buffer.
fn verify_decoding(enc: &Encoded, book: &PayloadBook, clients: &[usize], rounds: usize) -> Result<()> {
    for &i in clients {
        let got = decode_client(&enc.matrix, i, book.buffer(i))?;
        if got != enc.messages[i] {
            return Err(Error::Audit {
                round: rounds,
                client: i,
                reason: "decoded message differs from the original".into(),
            });
        }
    }
    Ok(())
}

/// Instance generation, broadcast, recovery and decode check for one seed.
pub fn run_central_trial(spec: &CentralTrialSpec, seed: u64, opts: &RecoveryOptions) -> Result<CentralMetrics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = encode_instance(spec.n, spec.r, spec.field, spec.m_len, &mut rng)?;
    let params = ChannelParams::downlink(spec.p)?;
    let broadcast = initial_broadcast_centralized(spec.n, spec.n, &params, &mut rng);
    let (_, mut states) = build_status(&enc.matrix, &broadcast)?;
    let mut book = PayloadBook::new(enc.field.clone(), enc.packets.clone(), &broadcast.has);
    let metrics = run_central(&mut states, &params, spec.variant, &mut rng, Some(&mut book), opts)?;
    let everyone: Vec<usize> = (0..spec.n).collect();
    verify_decoding(&enc, &book, &everyone, metrics.transmissions)?;
    Ok(metrics)
}

/// Outcome of one cooperative trial.
#[derive(Debug, Clone, PartialEq)]
pub struct CoopTrial {
    pub metrics: CoopMetrics,
    /// Base-station repeats beyond the first `n` broadcasts.
    pub seed_retx: usize,
}

/// One cluster made of clients `0..cluster_size`.
pub fn run_coop_trial(spec: &CoopTrialSpec, seed: u64, opts: &RecoveryOptions) -> Result<CoopTrial> {
    if spec.cluster_size == 0 || spec.cluster_size > spec.n {
        return Err(usage("cluster size must lie in 1..=n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = encode_instance(spec.n, spec.r, spec.field, spec.m_len, &mut rng)?;
    let params = ChannelParams::new(spec.p, spec.p_prime)?;
    let cluster = Cluster::first(spec.cluster_size)?;
    let broadcast = initial_broadcast_cooperative(spec.n, spec.n, &cluster, &params, &mut rng)?;
    let (_, mut states) = build_status(&enc.matrix, &broadcast)?;
    let mut book = PayloadBook::new(enc.field.clone(), enc.packets.clone(), &broadcast.has);
    let metrics = run_coop(&mut states, &cluster, &params, &mut rng, Some(&mut book), opts)?;
    verify_decoding(&enc, &book, cluster.members(), metrics.transmissions)?;
    Ok(CoopTrial {
        metrics,
        seed_retx: broadcast.transmissions - spec.n,
    })
}

/// All `n` clients split into consecutive clusters of `cluster_size` (the last
/// one possibly smaller), each seeded and recovered independently. Returns the
/// per-cluster outcomes.
pub fn run_coop_partition_trial(spec: &CoopTrialSpec, seed: u64, opts: &RecoveryOptions) -> Result<Vec<CoopTrial>> {
    if spec.cluster_size == 0 || spec.cluster_size > spec.n {
        return Err(usage("cluster size must lie in 1..=n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = encode_instance(spec.n, spec.r, spec.field, spec.m_len, &mut rng)?;
    let params = ChannelParams::new(spec.p, spec.p_prime)?;
    let ids: Vec<usize> = (0..spec.n).collect();
    let mut out = Vec::new();
    for chunk in ids.chunks(spec.cluster_size) {
        let cluster = Cluster::new(chunk.to_vec())?;
        let broadcast = initial_broadcast_cooperative(spec.n, spec.n, &cluster, &params, &mut rng)?;
        let (_, mut states) = build_status(&enc.matrix, &broadcast)?;
        let mut book = PayloadBook::new(enc.field.clone(), enc.packets.clone(), &broadcast.has);
        let metrics = run_coop(&mut states, &cluster, &params, &mut rng, Some(&mut book), opts)?;
        verify_decoding(&enc, &book, cluster.members(), metrics.transmissions)?;
        out.push(CoopTrial {
            metrics,
            seed_retx: broadcast.transmissions - spec.n,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scenario {
    #[default]
    Central,
    Coop,
    Predict,
    Demo,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(Scenario::Central),
            "coop" => Ok(Scenario::Coop),
            "predict" => Ok(Scenario::Predict),
            "demo" => Ok(Scenario::Demo),
            other => Err(usage(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub r: Vec<usize>,
    pub field: FieldSpec,
    pub m_len: usize,
    pub p: Vec<f64>,
    pub p_prime: f64,
    pub cluster_size: usize,
    pub variants: Vec<Variant>,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub mode: PredictorMode,
    /// Adds the predicted transmission count to sweep summaries.
    pub with_predictor: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Central,
            n: 20,
            r: vec![10],
            field: FieldSpec::gf256(),
            m_len: DEFAULT_MESSAGE_LEN,
            p: vec![0.3],
            p_prime: 0.05,
            cluster_size: 8,
            variants: vec![Variant::Basic],
            trials: 1000,
            seed: 42,
            output: None,
            mode: PredictorMode::Corrected,
            with_predictor: false,
        }
    }
}

/// A scalar or list in configuration files.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
    Text(String),
}

/// Raw configuration as written in a TOML file; every key optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub scenario: Option<String>,
    pub n: Option<usize>,
    #[serde(default, deserialize_with = "de_usize_list")]
    pub r: Option<Vec<usize>>,
    pub field: Option<String>,
    pub m_len: Option<usize>,
    #[serde(default, deserialize_with = "de_f64_list")]
    pub p: Option<Vec<f64>>,
    pub p_prime: Option<f64>,
    pub cluster_size: Option<usize>,
    pub variant: Option<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub mode: Option<String>,
    pub with_predictor: Option<bool>,
}

fn de_usize_list<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<usize>>, D::Error> {
    match OneOrMany::<usize>::deserialize(d)? {
        OneOrMany::One(v) => Ok(Some(vec![v])),
        OneOrMany::Many(v) => Ok(Some(v)),
        OneOrMany::Text(s) => parse_usize_list(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

fn de_f64_list<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    match OneOrMany::<f64>::deserialize(d)? {
        OneOrMany::One(v) => Ok(Some(vec![v])),
        OneOrMany::Many(v) => Ok(Some(v)),
        OneOrMany::Text(s) => parse_f64_list(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

/// `"5"`, `"1,4,9"` or an inclusive range `"1-20"`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('-') {
        let lo: usize = a.trim().parse().map_err(|_| usage(format!("bad range start `{a}`")))?;
        let hi: usize = b.trim().parse().map_err(|_| usage(format!("bad range end `{b}`")))?;
        if lo > hi || hi - lo > MAX_CLIENTS {
            return Err(usage(format!("bad range `{s}`")));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| usage(format!("bad integer `{t}`"))))
        .collect()
}

/// `"0.3"` or `"0.1,0.2,0.3"`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| usage(format!("bad number `{t}`"))))
        .collect()
}

fn parse_variants(s: &str) -> Result<Vec<Variant>> {
    match s {
        "both" => Ok(vec![Variant::Basic, Variant::Modified]),
        other => Ok(vec![other.parse()?]),
    }
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |span| text[..span.start.min(text.len())].matches('\n').count() + 1);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    /// Keys set in `other` win.
    pub fn merge(self, other: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            scenario: other.scenario.or(self.scenario),
            n: other.n.or(self.n),
            r: other.r.or(self.r),
            field: other.field.or(self.field),
            m_len: other.m_len.or(self.m_len),
            p: other.p.or(self.p),
            p_prime: other.p_prime.or(self.p_prime),
            cluster_size: other.cluster_size.or(self.cluster_size),
            variant: other.variant.or(self.variant),
            trials: other.trials.or(self.trials),
            seed: other.seed.or(self.seed),
            output: other.output.or(self.output),
            mode: other.mode.or(self.mode),
            with_predictor: other.with_predictor.or(self.with_predictor),
        }
    }

    /// Applies the overrides to the defaults and validates the result.
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let d = ExperimentConfig::default();
        let cfg = ExperimentConfig {
            scenario: self
                .scenario
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or(d.scenario),
            n: self.n.unwrap_or(d.n),
            r: self.r.unwrap_or(d.r),
            field: self
                .field
                .as_deref()
                .map(FieldSpec::parse)
                .transpose()?
                .unwrap_or(d.field),
            m_len: self.m_len.unwrap_or(d.m_len),
            p: self.p.unwrap_or(d.p),
            p_prime: self.p_prime.unwrap_or(d.p_prime),
            cluster_size: self.cluster_size.unwrap_or(d.cluster_size),
            variants: self
                .variant
                .as_deref()
                .map(parse_variants)
                .transpose()?
                .unwrap_or(d.variants),
            trials: self.trials.unwrap_or(d.trials),
            seed: self.seed.unwrap_or(d.seed),
            output: self.output.or(d.output),
            mode: self.mode.as_deref().map(str::parse).transpose()?.unwrap_or(d.mode),
            with_predictor: self.with_predictor.unwrap_or(d.with_predictor),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        ConfigOverrides::from_toml(text)?.resolve()
    }

    /// Checks every parameter constraint before any trial runs.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_CLIENTS {
            return Err(usage(format!("n must lie in 1..={MAX_CLIENTS}")));
        }
        if self.r.is_empty() || self.p.is_empty() || self.variants.is_empty() {
            return Err(usage("r, p and variant lists must be nonempty"));
        }
        let q = self.field.order() as usize;
        if let Some(&r) = self.r.iter().find(|&&r| r == 0 || r > self.n || r > q - 1) {
            return Err(usage(format!("r={r} must satisfy 1 <= r <= min(n, q-1)")));
        }
        if let Some(&p) = self.p.iter().find(|&&p| !(0.0..1.0).contains(&p)) {
            return Err(usage(format!("p={p} must lie in [0, 1)")));
        }
        if !(0.0..1.0).contains(&self.p_prime) {
            return Err(usage(format!("p_prime={} must lie in [0, 1)", self.p_prime)));
        }
        if self.m_len == 0 || self.m_len > MAX_MESSAGE_LEN {
            return Err(usage(format!("m_len must lie in 1..={MAX_MESSAGE_LEN}")));
        }
        if self.trials == 0 {
            return Err(usage("trials must be positive"));
        }
        match self.scenario {
            Scenario::Coop if self.cluster_size == 0 || self.cluster_size > self.n => {
                return Err(usage("cluster_size must lie in 1..=n"));
            }
            Scenario::Predict if self.n < 2 => return Err(usage("predictors need n >= 2")),
            _ => {}
        }
        if self.with_predictor && self.scenario == Scenario::Coop && self.cluster_size < 3 {
            return Err(usage("the cooperative predictor needs cluster_size >= 3"));
        }
        Ok(())
    }

    fn trial_central(&self, r: usize, p: f64, variant: Variant) -> CentralTrialSpec {
        CentralTrialSpec {
            n: self.n,
            r,
            field: self.field,
            m_len: self.m_len,
            p,
            variant,
        }
    }

    fn trial_coop(&self, r: usize, p: f64) -> CoopTrialSpec {
        CoopTrialSpec {
            n: self.n,
            r,
            field: self.field,
            m_len: self.m_len,
            p,
            p_prime: self.p_prime,
            cluster_size: self.cluster_size,
        }
    }

    /// `(cell index, r, p)` in p-major order.
    fn cells(&self) -> Vec<(u64, usize, f64)> {
        let mut out = Vec::new();
        for (pi, &p) in self.p.iter().enumerate() {
            for (ri, &r) in self.r.iter().enumerate() {
                out.push(((pi * self.r.len() + ri) as u64, r, p));
            }
        }
        out
    }
}

/// One centralized trial as a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralRow {
    pub scenario: &'static str,
    pub n: usize,
    pub r: usize,
    pub q: u32,
    pub p: f64,
    pub variant: String,
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "T")]
    pub t: usize,
    pub throughput_ratio: f64,
    pub mean_listens: f64,
}

/// One cooperative trial as a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoopRow {
    pub scenario: &'static str,
    pub n: usize,
    pub r: usize,
    pub q: u32,
    pub p: f64,
    pub p_prime: f64,
    pub cluster: usize,
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "Tc")]
    pub tc: usize,
    #[serde(rename = "Uc")]
    pub uc: f64,
    /// Empty when `Tc = 0`.
    pub gain: Option<f64>,
    pub seed_retx: usize,
}

/// Aggregate over the trials of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub scenario: &'static str,
    pub n: usize,
    pub r: usize,
    pub q: u32,
    pub p: f64,
    pub p_prime: Option<f64>,
    pub cluster: Option<usize>,
    pub variant: Option<String>,
    pub trials: usize,
    pub mean_t: Option<f64>,
    pub std_t: Option<f64>,
    pub mean_throughput: Option<f64>,
    pub mean_gain: Option<f64>,
    pub mean_listens: Option<f64>,
    pub predicted_t: Option<usize>,
    /// Set when a trial failed; the cell then has no trial rows.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub central: Vec<CentralRow>,
    pub coop: Vec<CoopRow>,
    pub cells: Vec<CellSummary>,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| mean_std(&v).0)
}

/// Runs every cell of the configuration. Trials run in parallel; rows come
/// out in (cell, variant, trial) order regardless of scheduling.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let opts = RecoveryOptions {
        keep_transcript: false,
        ..RecoveryOptions::default()
    };
    let q = config.field.order();
    let mut result = SweepResult::default();
    match config.scenario {
        Scenario::Central => {
            for (cell, r, p) in config.cells() {
                let predicted = if config.with_predictor && config.n >= 2 {
                    Some(
                        predict_central(&PredictorParams::central(config.n, r, p).with_mode(config.mode))?
                            .transmissions(),
                    )
                } else {
                    None
                };
                for &variant in &config.variants {
                    let spec = config.trial_central(r, p, variant);
                    let outcomes: Vec<Result<(u64, CentralMetrics)>> = (0..config.trials)
                        .into_par_iter()
                        .map(|trial| {
                            let seed = trial_seed(config.seed, cell, trial as u64);
                            run_central_trial(&spec, seed, &opts).map(|m| (seed, m))
                        })
                        .collect();
                    let base = CellSummary {
                        scenario: "central",
                        n: config.n,
                        r,
                        q,
                        p,
                        p_prime: None,
                        cluster: None,
                        variant: Some(variant.to_string()),
                        trials: config.trials,
                        mean_t: None,
                        std_t: None,
                        mean_throughput: None,
                        mean_gain: None,
                        mean_listens: None,
                        predicted_t: predicted,
                        error: None,
                    };
                    match outcomes.into_iter().collect::<Result<Vec<_>>>() {
                        Err(e) => result.cells.push(CellSummary {
                            error: Some(e.to_string()),
                            ..base
                        }),
                        Ok(trials) => {
                            let rows: Vec<CentralRow> = trials
                                .iter()
                                .enumerate()
                                .map(|(trial, (seed, m))| CentralRow {
                                    scenario: "central",
                                    n: config.n,
                                    r,
                                    q,
                                    p,
                                    variant: variant.to_string(),
                                    trial,
                                    seed: *seed,
                                    t: m.transmissions,
                                    throughput_ratio: m.throughput_ratio(),
                                    mean_listens: m.mean_listens(),
                                })
                                .collect();
                            result.cells.push(summarize_central(base, &rows));
                            result.central.extend(rows);
                        }
                    }
                }
            }
        }
        Scenario::Coop => {
            for (cell, r, p) in config.cells() {
                let predicted = if config.with_predictor {
                    let params = PredictorParams::coop(config.n, r, p, config.p_prime, config.cluster_size);
                    Some(predict_coop(&params.with_mode(config.mode))?.transmissions())
                } else {
                    None
                };
                let spec = config.trial_coop(r, p);
                let outcomes: Vec<Result<(u64, CoopTrial)>> = (0..config.trials)
                    .into_par_iter()
                    .map(|trial| {
                        let seed = trial_seed(config.seed, cell, trial as u64);
                        run_coop_trial(&spec, seed, &opts).map(|t| (seed, t))
                    })
                    .collect();
                let base = CellSummary {
                    scenario: "coop",
                    n: config.n,
                    r,
                    q,
                    p,
                    p_prime: Some(config.p_prime),
                    cluster: Some(config.cluster_size),
                    variant: None,
                    trials: config.trials,
                    mean_t: None,
                    std_t: None,
                    mean_throughput: None,
                    mean_gain: None,
                    mean_listens: None,
                    predicted_t: predicted,
                    error: None,
                };
                match outcomes.into_iter().collect::<Result<Vec<_>>>() {
                    Err(e) => result.cells.push(CellSummary {
                        error: Some(e.to_string()),
                        ..base
                    }),
                    Ok(trials) => {
                        let rows: Vec<CoopRow> = trials
                            .iter()
                            .enumerate()
                            .map(|(trial, (seed, t))| CoopRow {
                                scenario: "coop",
                                n: config.n,
                                r,
                                q,
                                p,
                                p_prime: config.p_prime,
                                cluster: config.cluster_size,
                                trial,
                                seed: *seed,
                                tc: t.metrics.transmissions,
                                uc: t.metrics.uncoded,
                                gain: t.metrics.gain(),
                                seed_retx: t.seed_retx,
                            })
                            .collect();
                        result.cells.push(summarize_coop(base, &rows));
                        result.coop.extend(rows);
                    }
                }
            }
        }
        Scenario::Predict | Scenario::Demo => {
            return Err(usage("sweeps run the central or coop scenario"));
        }
    }
    Ok(result)
}

/// Aggregates recomputed from per-trial rows.
pub fn summarize_central(base: CellSummary, rows: &[CentralRow]) -> CellSummary {
    let t: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
    let (mean, std) = mean_std(&t);
    CellSummary {
        mean_t: Some(mean),
        std_t: Some(std),
        mean_throughput: mean_of(rows.iter().map(|r| r.throughput_ratio)),
        mean_listens: mean_of(rows.iter().map(|r| r.mean_listens)),
        ..base
    }
}

pub fn summarize_coop(base: CellSummary, rows: &[CoopRow]) -> CellSummary {
    let t: Vec<f64> = rows.iter().map(|r| r.tc as f64).collect();
    let (mean, std) = mean_std(&t);
    CellSummary {
        mean_t: Some(mean),
        std_t: Some(std),
        mean_gain: mean_of(rows.iter().filter_map(|r| r.gain)),
        ..base
    }
}

fn write_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub const CENTRAL_HEADER: [&str; 11] = [
    "scenario",
    "n",
    "r",
    "q",
    "p",
    "variant",
    "trial",
    "seed",
    "T",
    "throughput_ratio",
    "mean_listens",
];
pub const COOP_HEADER: [&str; 13] = [
    "scenario",
    "n",
    "r",
    "q",
    "p",
    "p_prime",
    "cluster",
    "trial",
    "seed",
    "Tc",
    "Uc",
    "gain",
    "seed_retx",
];
pub const SUMMARY_HEADER: [&str; 16] = [
    "scenario",
    "n",
    "r",
    "q",
    "p",
    "p_prime",
    "cluster",
    "variant",
    "trials",
    "mean_T",
    "std_T",
    "mean_throughput",
    "mean_gain",
    "mean_listens",
    "predicted_T",
    "error",
];
pub const PREDICT_HEADER: [&str; 6] = ["t", "N_t", "p_hat", "pi", "clique_est", "removal"];
pub const COMPARE_HEADER: [&str; 5] = [
    "t",
    "sim_mean_removed",
    "sim_active_fraction",
    "predicted_removal",
    "predicted_N_t",
];

pub fn central_csv(rows: &[CentralRow]) -> Result<String> {
    write_csv(rows, &CENTRAL_HEADER)
}

pub fn coop_csv(rows: &[CoopRow]) -> Result<String> {
    write_csv(rows, &COOP_HEADER)
}

pub fn summary_csv(rows: &[CellSummary]) -> Result<String> {
    write_csv(rows, &SUMMARY_HEADER)
}

#[derive(Serialize)]
struct PredictRow {
    t: usize,
    n_t: f64,
    p_hat: f64,
    pi: f64,
    clique_est: f64,
    removal: f64,
}

pub fn predict_csv(trace: &AnalysisTrace) -> Result<String> {
    let rows: Vec<PredictRow> = trace
        .rows
        .iter()
        .map(|r| PredictRow {
            t: r.t,
            n_t: r.n_t,
            p_hat: r.p_hat,
            pi: r.pi,
            clique_est: r.clique_est,
            removal: r.removal,
        })
        .collect();
    write_csv(&rows, &PREDICT_HEADER)
}

/// Per-round simulated versus predicted removals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub t: usize,
    /// Mean vertices removed in round `t` (trials already finished count as 0).
    pub sim_mean_removed: f64,
    /// Fraction of trials still running at round `t`.
    pub sim_active_fraction: f64,
    pub predicted_removal: Option<f64>,
    pub predicted_n_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub trace: AnalysisTrace,
    /// Per-trial total transmissions.
    pub sim_totals: Vec<usize>,
    /// Mean initial vertex count in simulation.
    pub sim_mean_n0: f64,
}

impl Comparison {
    pub fn sim_mean_total(&self) -> f64 {
        mean_std(&self.sim_totals.iter().map(|&t| t as f64).collect::<Vec<_>>()).0
    }

    pub fn predicted_total(&self) -> usize {
        self.trace.transmissions()
    }

    pub fn csv(&self) -> Result<String> {
        write_csv(&self.rows, &COMPARE_HEADER)
    }
}

fn comparison(trace: AnalysisTrace, removals: Vec<Vec<f64>>, sim_mean_n0: f64) -> Comparison {
    let trials = removals.len().max(1) as f64;
    let horizon = removals.iter().map(Vec::len).max().unwrap_or(0).max(trace.rows.len());
    let rows = (0..horizon)
        .map(|t| {
            let active = removals.iter().filter(|r| r.len() > t).count() as f64;
            let sum: f64 = removals.iter().filter_map(|r| r.get(t)).sum();
            ComparisonRow {
                t,
                sim_mean_removed: sum / trials,
                sim_active_fraction: active / trials,
                predicted_removal: trace.rows.get(t).map(|r| r.removal),
                predicted_n_t: trace.rows.get(t).map(|r| r.n_t),
            }
        })
        .collect();
    let sim_totals = removals.iter().map(Vec::len).collect();
    Comparison {
        rows,
        trace,
        sim_totals,
        sim_mean_n0,
    }
}

/// Simulated removals per round against the predictor, for the first `r`
/// and `p` of the configuration. Centralized runs use the basic variant; the
/// cooperative side partitions all `n` clients into clusters and sums their
/// rounds in parallel (round t of the network = round t of every cluster).
pub fn compare_theory(config: &ExperimentConfig) -> Result<Comparison> {
    config.validate()?;
    let (r, p) = (config.r[0], config.p[0]);
    let opts = RecoveryOptions {
        keep_transcript: false,
        ..RecoveryOptions::default()
    };
    match config.scenario {
        Scenario::Central => {
            let trace = predict_central(&PredictorParams::central(config.n, r, p).with_mode(config.mode))?;
            let spec = config.trial_central(r, p, Variant::Basic);
            let runs: Vec<CentralMetrics> = (0..config.trials)
                .into_par_iter()
                .map(|trial| run_central_trial(&spec, trial_seed(config.seed, 0, trial as u64), &opts))
                .collect::<Result<_>>()?;
            let n0 = mean_std(
                &runs
                    .iter()
                    .map(|m| m.removals.iter().sum::<usize>() as f64)
                    .collect::<Vec<_>>(),
            )
            .0;
            let removals = runs
                .into_iter()
                .map(|m| m.removals.into_iter().map(|x| x as f64).collect())
                .collect();
            Ok(comparison(trace, removals, n0))
        }
        Scenario::Coop => {
            let params = PredictorParams::coop(config.n, r, p, config.p_prime, config.cluster_size);
            let trace = predict_coop(&params.with_mode(config.mode))?;
            let spec = config.trial_coop(r, p);
            let runs: Vec<Vec<CoopTrial>> = (0..config.trials)
                .into_par_iter()
                .map(|trial| run_coop_partition_trial(&spec, trial_seed(config.seed, 0, trial as u64), &opts))
                .collect::<Result<_>>()?;
            let mut n0 = Vec::new();
            let removals = runs
                .into_iter()
                .map(|clusters| {
                    n0.push(clusters.iter().flat_map(|c| &c.metrics.removals).sum::<usize>() as f64);
                    // Total transmissions across clusters, each contributing its removals in order.
                    clusters
                        .iter()
                        .flat_map(|c| c.metrics.removals.iter().map(|&x| x as f64))
                        .collect()
                })
                .collect();
            Ok(comparison(trace, removals, mean_std(&n0).0))
        }
        Scenario::Predict | Scenario::Demo => Err(usage("comparison runs the central or coop scenario")),
    }
}
