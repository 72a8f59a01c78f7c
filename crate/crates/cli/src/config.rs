//! Run configuration: command-line flags over an optional key=value config
//! file, with all resolved values echoed for reproducibility.

use std::path::PathBuf;

use qkdrate::states::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub q_point: Option<f64>,
    pub q_range: Option<(f64, f64, f64)>,
    pub flip: Option<f64>,
    pub optimize_q: bool,
    pub alpha: f64,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

/// Raw option values prior to resolution; file values fill holes left by
/// the command line.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    pub protocol: Option<String>,
    pub q_point: Option<f64>,
    pub q_range: Option<String>,
    pub flip: Option<f64>,
    pub optimize_q: bool,
    pub alpha: Option<f64>,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl RawConfig {
    /// Fill unset fields from `key=value` lines; `#` starts a comment.
    pub fn merge_file(&mut self, path: &std::path::Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| ConfigError(format!("line {}: bad {what}: {value}", lineno + 1));
            match key {
                "protocol" => {
                    if self.protocol.is_none() {
                        self.protocol = Some(value.to_string());
                    }
                }
                "Q" | "q-point" => {
                    if self.q_point.is_none() {
                        self.q_point = Some(value.parse().map_err(|_| bad("Q"))?);
                    }
                }
                "Q-range" => {
                    if self.q_range.is_none() {
                        self.q_range = Some(value.to_string());
                    }
                }
                "q" => {
                    if self.flip.is_none() {
                        self.flip = Some(value.parse().map_err(|_| bad("q"))?);
                    }
                }
                "optimize-q" => {
                    if !self.optimize_q {
                        self.optimize_q = value.parse().map_err(|_| bad("optimize-q"))?;
                    }
                }
                "alpha" => {
                    if self.alpha.is_none() {
                        self.alpha = Some(value.parse().map_err(|_| bad("alpha"))?);
                    }
                }
                "n" => {
                    if self.n.is_none() {
                        self.n = Some(value.parse().map_err(|_| bad("n"))?);
                    }
                }
                "eps" => {
                    if self.eps.is_none() {
                        self.eps = Some(value.parse().map_err(|_| bad("eps"))?);
                    }
                }
                "seed" => {
                    if self.seed.is_none() {
                        self.seed = Some(value.parse().map_err(|_| bad("seed"))?);
                    }
                }
                "out" => {
                    if self.out.is_none() {
                        self.out = Some(PathBuf::from(value));
                    }
                }
                "format" => {
                    if self.format.is_none() {
                        self.format = Some(value.to_string());
                    }
                }
                other => {
                    return Err(ConfigError(format!(
                        "line {}: unknown key {other}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        let protocol = match self.protocol.as_deref() {
            None | Some("six-state") => Protocol::SixState,
            Some("bb84") => Protocol::Bb84,
            Some("b92") => Protocol::B92,
            Some(other) => return Err(ConfigError(format!("unknown protocol {other}"))),
        };
        let q_range = match self.q_range {
            None => None,
            Some(spec) => Some(parse_range(&spec)?),
        };
        if let Some(q) = self.q_point {
            if !(0.0..0.5).contains(&q) {
                return Err(ConfigError(format!("Q = {q} out of [0, 0.5)")));
            }
        }
        if let Some(f) = self.flip {
            if !(0.0..=0.5).contains(&f) {
                return Err(ConfigError(format!("q = {f} out of [0, 0.5]")));
            }
        }
        let eps = self.eps.unwrap_or(1e-6);
        if !(0.0 < eps && eps < 1.0) {
            return Err(ConfigError(format!("eps = {eps} out of (0, 1)")));
        }
        let alpha = self.alpha.unwrap_or(0.38);
        let format = match self.format.as_deref() {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(ConfigError(format!("unknown format {other}"))),
        };
        let threads = std::env::var("QKD_KEYRATE_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&t| t > 0)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
        Ok(RunConfig {
            protocol,
            q_point: self.q_point,
            q_range,
            flip: self.flip,
            optimize_q: self.optimize_q,
            alpha,
            n: self.n.unwrap_or(1000),
            eps,
            seed: self.seed.unwrap_or(1),
            out: self.out,
            format,
            threads,
        })
    }
}

/// Parse "start:stop:step", endpoints inclusive within 1e-12.
fn parse_range(spec: &str) -> Result<(f64, f64, f64), ConfigError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(ConfigError(format!("range {spec} must be start:stop:step")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| ConfigError(format!("bad range component {p}")))
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || stop < start {
        return Err(ConfigError(format!(
            "range {spec} needs stop >= start and step > 0"
        )));
    }
    Ok((start, stop, step))
}

/// Materialize the grid points of a range, endpoints inclusive.
pub fn range_points((start, stop, step): (f64, f64, f64)) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let x = start + step * i as f64;
        if x > stop + 1e-12 {
            break;
        }
        out.push(x);
        i += 1;
    }
    out
}

/// Echo of every resolved value, for the run log.
pub fn describe(cmd: &str, cfg: &RunConfig) -> String {
    let fmt = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    format!(
        "command={cmd} protocol={} Q={:?} Q-range={:?} q={:?} optimize-q={} alpha={} n={} eps={} seed={} format={fmt} threads={}",
        cfg.protocol.name(),
        cfg.q_point,
        cfg.q_range,
        cfg.flip,
        cfg.optimize_q,
        cfg.alpha,
        cfg.n,
        cfg.eps,
        cfg.seed,
        cfg.threads
    )
}
