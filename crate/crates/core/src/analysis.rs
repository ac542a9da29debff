//! Iterative predictors for the number of recovery transmissions.
//!
//! Both predictors model the IDNC graph as a random graph with `N_t` vertices
//! and edge probability `π`, remove an expected largest clique of size
//! `2 ln N / ln(1/π)` per round (thinned by the link erasure probability) and
//! update the residual loss estimate `p̂` as vertices disappear.

use std::fmt;
use std::str::FromStr;

use crate::error::{usage, Error, Result};

/// Bounds keeping `π` strictly inside (0, 1).
pub const PI_EPSILON: f64 = 1e-9;
/// Rounds removing fewer vertices than this stop the iteration.
pub const STALL_REMOVAL: f64 = 1e-6;

/// How `p̂` is updated between rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictorMode {
    /// `p̂(t+1) = p̂(t) − (N_t − N_{t+1}) / (n r)`: the loss estimate shrinks.
    #[default]
    Corrected,
    /// `p̂(t+1) = p̂(t) − (N_{t+1} − N_t) / (n r)` exactly as printed.
    PaperLiteral,
}

impl fmt::Display for PredictorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictorMode::Corrected => "corrected",
            PredictorMode::PaperLiteral => "paper-literal",
        })
    }
}

impl FromStr for PredictorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(PredictorMode::Corrected),
            "paper-literal" => Ok(PredictorMode::PaperLiteral),
            other => Err(usage(format!("unknown predictor mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams {
    pub n: usize,
    pub r: usize,
    pub p: f64,
    /// Client-to-client erasure probability (cooperative only).
    pub p_prime: f64,
    /// Cluster size (cooperative only).
    pub cluster_size: usize,
    pub mode: PredictorMode,
}

impl PredictorParams {
    pub fn central(n: usize, r: usize, p: f64) -> Self {
        PredictorParams {
            n,
            r,
            p,
            p_prime: 0.0,
            cluster_size: 0,
            mode: PredictorMode::Corrected,
        }
    }

    pub fn coop(n: usize, r: usize, p: f64, p_prime: f64, cluster_size: usize) -> Self {
        PredictorParams {
            n,
            r,
            p,
            p_prime,
            cluster_size,
            mode: PredictorMode::Corrected,
        }
    }

    pub fn with_mode(self, mode: PredictorMode) -> Self {
        PredictorParams { mode, ..self }
    }
}

/// State at the start of round `t` and what the round removes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub n_t: f64,
    pub p_hat: f64,
    pub pi: f64,
    pub clique_est: f64,
    pub removal: f64,
    /// `π` fell outside `[ε, 1 − ε]` and was clamped.
    pub pi_clamped: bool,
    /// `p̂` left `[0, 1]` after this round and was clamped.
    pub p_hat_clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisTrace {
    pub rows: Vec<TraceRow>,
    /// Vertex count left when the iteration stopped.
    pub residual: f64,
    /// The iteration stopped on the stall guard.
    pub stalled: bool,
}

impl AnalysisTrace {
    /// Predicted number of transmissions.
    pub fn transmissions(&self) -> usize {
        self.rows.len()
    }

    pub fn csv_header() -> &'static str {
        "t,N_t,p_hat,pi,clique_est,removal"
    }
}

/// `2 ln N / ln(1/π)`, the typical clique number of `G(N, π)`.
pub fn clique_size_estimate(n: f64, pi: f64) -> Result<f64> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::Domain(format!("edge probability {pi} outside (0, 1)")));
    }
    if n <= 1.0 {
        return Ok(1.0);
    }
    Ok(2.0 * n.ln() / (1.0 / pi).ln())
}

/// Marginal loss probability of one member after repeat-until-someone-holds
/// seeding of a cluster of `c` clients: `1 − (1−p)/(1−p^c)`.
pub fn p_eff(p: f64, c: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("p_eff undefined for p={p}")));
    }
    if c == 0 {
        return Err(Error::Domain("cluster size must be positive".into()));
    }
    Ok(1.0 - (1.0 - p) / (1.0 - p.powi(c as i32)))
}

fn iterate(
    n0: f64,
    p_hat0: f64,
    nr: f64,
    link_loss: f64,
    mode: PredictorMode,
    pi_of: impl Fn(f64) -> f64,
) -> Result<AnalysisTrace> {
    let mut rows = Vec::new();
    let mut n_t = n0;
    let mut p_hat = p_hat0;
    let mut stalled = false;
    while n_t > 1.0 {
        let raw = pi_of(p_hat);
        let pi = raw.clamp(PI_EPSILON, 1.0 - PI_EPSILON);
        let clique_est = clique_size_estimate(n_t, pi)?.clamp(1.0, n_t);
        let removal = (1.0 - link_loss) * clique_est;
        if removal < STALL_REMOVAL {
            stalled = true;
            break;
        }
        let next = n_t - removal;
        let delta = match mode {
            PredictorMode::Corrected => n_t - next,
            PredictorMode::PaperLiteral => next - n_t,
        };
        let updated = p_hat - delta / nr;
        let clamped = updated.clamp(0.0, 1.0);
        rows.push(TraceRow {
            t: rows.len(),
            n_t,
            p_hat,
            pi,
            clique_est,
            removal,
            pi_clamped: pi != raw,
            p_hat_clamped: clamped != updated,
        });
        p_hat = clamped;
        n_t = next;
    }
    Ok(AnalysisTrace {
        rows,
        residual: n_t,
        stalled,
    })
}

fn check_common(params: &PredictorParams) -> Result<()> {
    if params.n < 1 || params.r < 1 || params.r > params.n {
        return Err(Error::Domain(format!(
            "need 1 <= r <= n, got n={} r={}",
            params.n, params.r
        )));
    }
    for (name, v) in [("p", params.p), ("p_prime", params.p_prime)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Domain(format!("{name}={v} outside [0, 1)")));
        }
    }
    Ok(())
}

/// Centralized recovery: `N_0 = n r p`, `π = ((n−1)/n)·[(1−p̂)² + p̂²]`.
pub fn predict_central(params: &PredictorParams) -> Result<AnalysisTrace> {
    check_common(params)?;
    if params.n < 2 {
        return Err(Error::Domain("need at least two clients".into()));
    }
    let n = params.n as f64;
    let nr = n * params.r as f64;
    let scale = (n - 1.0) / n;
    iterate(nr * params.p, params.p, nr, params.p, params.mode, |q| {
        scale * ((1.0 - q).powi(2) + q * q)
    })
}

/// Cooperative recovery: `N_0 = n r p_eff`,
/// `π_u = ((C−2)(C−1)/C²)·[(1−p̂)⁴ + (1−p̂)·p̂²]`, thinned by `1 − p′`.
pub fn predict_coop(params: &PredictorParams) -> Result<AnalysisTrace> {
    check_common(params)?;
    let c = params.cluster_size;
    if c < 3 {
        return Err(Error::Domain(format!(
            "cluster size {c} < 3 makes the edge probability vanish"
        )));
    }
    let nr = (params.n * params.r) as f64;
    let pe = p_eff(params.p, c)?;
    let cf = c as f64;
    let scale = (cf - 2.0) * (cf - 1.0) / (cf * cf);
    iterate(nr * pe, pe, nr, params.p_prime, params.mode, |q| {
        scale * ((1.0 - q).powi(4) + (1.0 - q) * q * q)
    })
}
