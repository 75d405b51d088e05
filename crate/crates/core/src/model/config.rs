use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relaxation technique applied to every quadratic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// One McCormick envelope per term, no binaries.
    McCormick,
    Nmdt,
    /// NMDT with the sawtooth epigraph cuts on square terms.
    TNmdt,
    DNmdt,
    /// D-NMDT with the sawtooth epigraph cuts on square terms.
    TdNmdt,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::McCormick,
        Method::Nmdt,
        Method::TNmdt,
        Method::DNmdt,
        Method::TdNmdt,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            Method::McCormick => "mc",
            Method::Nmdt => "nmdt",
            Method::TNmdt => "tnmdt",
            Method::DNmdt => "dnmdt",
            Method::TdNmdt => "tdnmdt",
        }
    }

    pub fn is_tightened(&self) -> bool {
        matches!(self, Method::TNmdt | Method::TdNmdt)
    }

    pub fn discretizes(&self) -> bool {
        !matches!(self, Method::McCormick)
    }

    /// Whether both factors of a product are discretized.
    pub fn is_double(&self) -> bool {
        matches!(self, Method::DNmdt | Method::TdNmdt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "mccormick" => Ok(Method::McCormick),
            "nmdt" => Ok(Method::Nmdt),
            "tnmdt" | "t-nmdt" => Ok(Method::TNmdt),
            "dnmdt" | "d-nmdt" => Ok(Method::DNmdt),
            "tdnmdt" | "t-d-nmdt" => Ok(Method::TdNmdt),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// `max(2, ceil(1.5 L))`.
pub fn default_tight_depth(depth: u32) -> u32 {
    (3 * depth).div_ceil(2).max(2)
}

/// Method selector plus depth `L`, tightening depth `L1` and blend `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxConfig {
    pub method: Method,
    pub depth: u32,
    /// Explicit `L1`; `None` selects [`default_tight_depth`].
    pub tight_depth: Option<u32>,
    pub lambda: f64,
}

impl RelaxConfig {
    pub fn new(method: Method, depth: u32) -> Self {
        RelaxConfig {
            method,
            depth,
            tight_depth: None,
            lambda: 0.5,
        }
    }

    pub fn with_tight_depth(mut self, l1: u32) -> Self {
        self.tight_depth = Some(l1);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// The effective `L1`.
    pub fn l1(&self) -> u32 {
        self.tight_depth
            .unwrap_or_else(|| default_tight_depth(self.depth))
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.discretizes() && self.depth < 1 {
            return Err(Error::Config(format!(
                "depth L must be at least 1 for {}",
                self.method
            )));
        }
        if let Some(l1) = self.tight_depth {
            if l1 < self.depth {
                return Err(Error::Config(format!(
                    "tightening depth L1 = {l1} is below L = {}",
                    self.depth
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!(
                "lambda = {} is outside [0, 1]",
                self.lambda
            )));
        }
        Ok(())
    }
}
