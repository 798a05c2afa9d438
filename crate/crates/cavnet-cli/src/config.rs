//! Run configuration: defaults, config-file parsing, flag merging, and
//! construction of the network objects a run needs.

use std::fs;
use std::path::Path;

use cavnet::dynamics::solve_riccati;
use cavnet::gaussian::CovarianceMatrix;
use cavnet::networks::{
    build_ideal, build_ideal_cascade, build_realistic, build_realistic_cascade,
    ideal_uncontrolled, reduce_cavity_covariance, CavityKind, CavityParams, DetectorParams,
    NetworkParams,
};
use cavnet::slh::DriftDiffusion;
use nalgebra::{DMatrix, DVector};

use crate::{CliError, CommonOpts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Ideal,
    Realistic,
}

impl NetworkKind {
    /// State dimension: 4 cavity quadratures, plus the detector coordinate
    /// for the realistic network.
    pub fn dim(self) -> usize {
        match self {
            NetworkKind::Ideal => 4,
            NetworkKind::Realistic => 5,
        }
    }
}

/// Where the feedback coefficient vector comes from.
#[derive(Debug, Clone)]
pub enum FeedbackSpec {
    /// Solve the feedback-design Riccati equation for the ideal pairing.
    Design,
    /// Explicit coefficients over (q1, p1, q2, p2).
    Explicit([f64; 4]),
}

/// How the initial covariance is chosen.
#[derive(Debug, Clone)]
pub enum V0Spec {
    /// Cavities start at `c * I`; the detector coordinate (realistic) at 0.
    Scalar(f64),
    /// Full row-major matrix (16 or 25 entries).
    Explicit(Vec<f64>),
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub network: NetworkKind,
    pub cavity1: CavityKind,
    pub cavity2: CavityKind,
    pub m: f64,
    pub kappa: f64,
    pub gain: f64,
    pub f: FeedbackSpec,
    pub alpha: f64,
    pub tau: f64,
    pub a4: f64,
    pub v0: V0Spec,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: NetworkKind::Ideal,
            cavity1: CavityKind::Dispersive,
            cavity2: CavityKind::Damped,
            m: 0.2,
            kappa: 1.0,
            gain: 0.0,
            f: FeedbackSpec::Design,
            alpha: 1.0,
            tau: 0.01,
            a4: 0.01,
            v0: V0Spec::Scalar(2.0),
            t_end: 20.0,
            dt: 1e-3,
            stride: 10,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_network(s: &str) -> Result<NetworkKind, CliError> {
    match s {
        "ideal" => Ok(NetworkKind::Ideal),
        "realistic" => Ok(NetworkKind::Realistic),
        other => Err(usage(format!(
            "unknown network kind '{other}' (expected ideal or realistic)"
        ))),
    }
}

fn parse_cavity(s: &str) -> Result<CavityKind, CliError> {
    match s {
        "dispersive" => Ok(CavityKind::Dispersive),
        "damped" => Ok(CavityKind::Damped),
        other => Err(usage(format!(
            "unknown cavity kind '{other}' (expected dispersive or damped)"
        ))),
    }
}

fn parse_float(key: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("cannot parse '{s}' as a number for {key}")))
}

fn parse_float_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|piece| parse_float(key, piece))
        .collect()
}

fn parse_feedback(s: &str) -> Result<FeedbackSpec, CliError> {
    let t = s.trim();
    if t == "design" {
        return Ok(FeedbackSpec::Design);
    }
    let vals = parse_float_list("f", t)?;
    if vals.len() != 4 {
        return Err(usage(format!(
            "feedback vector needs 4 entries (q1, p1, q2, p2), got {}",
            vals.len()
        )));
    }
    Ok(FeedbackSpec::Explicit([vals[0], vals[1], vals[2], vals[3]]))
}

fn parse_v0(s: &str) -> Result<V0Spec, CliError> {
    let t = s.trim();
    if !t.contains(',') {
        return Ok(V0Spec::Scalar(parse_float("v0", t)?));
    }
    let vals = parse_float_list("v0", t)?;
    if vals.len() != 16 && vals.len() != 25 {
        return Err(usage(format!(
            "explicit v0 needs 16 (ideal) or 25 (realistic) entries, got {}",
            vals.len()
        )));
    }
    Ok(V0Spec::Explicit(vals))
}

impl RunConfig {
    /// Builds the configuration: defaults, then the config file (if any),
    /// then command-line flags.
    pub fn from_opts(opts: &CommonOpts) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &opts.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_flags(opts)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!(
                    "{}:{}: expected 'key = value', got '{line}'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn set_key(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "network" => self.network = parse_network(value)?,
            "cavity1" => self.cavity1 = parse_cavity(value)?,
            "cavity2" => self.cavity2 = parse_cavity(value)?,
            "m" => self.m = parse_float(key, value)?,
            "kappa" => self.kappa = parse_float(key, value)?,
            "gain" => self.gain = parse_float(key, value)?,
            "f" => self.f = parse_feedback(value)?,
            "alpha" => self.alpha = parse_float(key, value)?,
            "tau" => self.tau = parse_float(key, value)?,
            "a4" => self.a4 = parse_float(key, value)?,
            "v0" => self.v0 = parse_v0(value)?,
            "t_end" => self.t_end = parse_float(key, value)?,
            "dt" => self.dt = parse_float(key, value)?,
            "stride" => {
                self.stride = value
                    .parse::<usize>()
                    .map_err(|_| usage(format!("cannot parse '{value}' as stride")))?
            }
            other => return Err(usage(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    fn apply_flags(&mut self, opts: &CommonOpts) -> Result<(), CliError> {
        if let Some(v) = &opts.network {
            self.network = parse_network(v)?;
        }
        if let Some(v) = &opts.cavity1 {
            self.cavity1 = parse_cavity(v)?;
        }
        if let Some(v) = &opts.cavity2 {
            self.cavity2 = parse_cavity(v)?;
        }
        if let Some(v) = opts.m {
            self.m = v;
        }
        if let Some(v) = opts.kappa {
            self.kappa = v;
        }
        if let Some(v) = opts.gain {
            self.gain = v;
        }
        if let Some(v) = &opts.f {
            self.f = parse_feedback(v)?;
        }
        if let Some(v) = opts.alpha {
            self.alpha = v;
        }
        if let Some(v) = opts.tau {
            self.tau = v;
        }
        if let Some(v) = opts.a4 {
            self.a4 = v;
        }
        if let Some(v) = &opts.v0 {
            self.v0 = parse_v0(v)?;
        }
        if let Some(v) = opts.t_end {
            self.t_end = v;
        }
        if let Some(v) = opts.dt {
            self.dt = v;
        }
        if let Some(v) = opts.stride {
            self.stride = v;
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("m", self.m),
            ("kappa", self.kappa),
            ("gain", self.gain),
            ("alpha", self.alpha),
            ("tau", self.tau),
            ("a4", self.a4),
            ("t_end", self.t_end),
            ("dt", self.dt),
        ] {
            if !v.is_finite() {
                return Err(usage(format!("{name} must be finite, got {v}")));
            }
        }
        if self.dt <= 0.0 {
            return Err(usage(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_end < 0.0 {
            return Err(usage(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(usage(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.stride == 0 {
            return Err(usage("stride must be at least 1"));
        }
        Ok(())
    }

    pub fn cavity1_params(&self) -> CavityParams {
        CavityParams::new(self.cavity1, self.m, self.kappa)
    }

    pub fn cavity2_params(&self) -> CavityParams {
        CavityParams::new(self.cavity2, self.m, self.kappa)
    }

    pub fn detector(&self) -> DetectorParams {
        DetectorParams::low_pass(self.tau, self.a4)
    }

    /// The feedback coefficient vector, running the Riccati design on the
    /// ideal pairing when the source is `design`.
    pub fn resolve_feedback(&self) -> Result<DVector<f64>, CliError> {
        match &self.f {
            FeedbackSpec::Explicit(v) => Ok(DVector::from_row_slice(v)),
            FeedbackSpec::Design => {
                let probe = NetworkParams::ideal(
                    self.cavity1_params(),
                    self.cavity2_params(),
                    0.0,
                    DVector::zeros(4),
                );
                let (base, ell) = ideal_uncontrolled(&probe)?;
                let sol = solve_riccati(&base.a, &base.d, &ell)?;
                Ok(sol.f_bar)
            }
        }
    }

    /// Network parameters with the feedback vector resolved.
    pub fn network_params(&self) -> Result<NetworkParams, CliError> {
        let f = self.resolve_feedback()?;
        Ok(match self.network {
            NetworkKind::Ideal => {
                NetworkParams::ideal(self.cavity1_params(), self.cavity2_params(), self.gain, f)
            }
            NetworkKind::Realistic => NetworkParams::realistic(
                self.cavity1_params(),
                self.cavity2_params(),
                self.gain,
                f,
                self.alpha,
                self.detector(),
            ),
        })
    }

    /// Drift and diffusion of the configured network (closed-form route).
    pub fn build(&self) -> Result<DriftDiffusion, CliError> {
        let p = self.network_params()?;
        Ok(match self.network {
            NetworkKind::Ideal => build_ideal(&p)?,
            NetworkKind::Realistic => build_realistic(&p)?,
        })
    }

    /// Builds the network along both routes and returns the elementwise gaps
    /// `(max |dA|, max |dD|)`.
    pub fn dual_gaps(&self) -> Result<(f64, f64), CliError> {
        let p = self.network_params()?;
        let (closed, cascade) = match self.network {
            NetworkKind::Ideal => (build_ideal(&p)?, build_ideal_cascade(&p)?),
            NetworkKind::Realistic => (build_realistic(&p)?, build_realistic_cascade(&p)?),
        };
        Ok((
            (&closed.a - &cascade.a).abs().max(),
            (&closed.d - &cascade.d).abs().max(),
        ))
    }

    /// The initial covariance, validated for shape, symmetry, and physicality
    /// of the cavity block.
    pub fn initial_covariance(&self) -> Result<DMatrix<f64>, CliError> {
        let n = self.network.dim();
        let v = match &self.v0 {
            V0Spec::Scalar(c) => {
                let mut v = DMatrix::identity(n, n) * *c;
                if n == 5 {
                    v[(4, 4)] = 0.0;
                }
                v
            }
            V0Spec::Explicit(vals) => {
                if vals.len() != n * n {
                    return Err(usage(format!(
                        "v0 has {} entries but the {} network needs {}",
                        vals.len(),
                        if n == 4 { "ideal" } else { "realistic" },
                        n * n
                    )));
                }
                let v = DMatrix::from_row_slice(n, n, vals);
                let worst = (&v - v.transpose()).abs().max();
                if worst > 1e-10 {
                    return Err(usage(format!(
                        "v0 must be symmetric (worst asymmetry {worst:e})"
                    )));
                }
                v
            }
        };
        let block = reduce_cavity_covariance(&v)?;
        let cv = CovarianceMatrix::new(block)
            .map_err(|e| usage(format!("invalid v0: {e}")))?;
        if !cv.is_physical(cavnet::gaussian::PHYSICALITY_TOL) {
            return Err(usage(
                "v0 is unphysical: the cavity block violates the uncertainty bound",
            ));
        }
        Ok(v)
    }
}
