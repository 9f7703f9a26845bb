use std::fmt;
use std::str::FromStr;

use super::domain::QpDomain;
use crate::error::{invalid, Error, Result};

pub const BLOCKS_PER_RFA: usize = 3;

/// How (or whether) the network is told the QP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// QP attention after the first convolution of every residual block.
    Qpam,
    /// QP supplied as a constant extra input plane.
    QpMap,
    /// No QP information.
    Plain,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Qpam => "qpam",
            Variant::QpMap => "qp_map",
            Variant::Plain => "plain",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpam" => Ok(Variant::Qpam),
            "qp_map" | "qpmap" => Ok(Variant::QpMap),
            "plain" => Ok(Variant::Plain),
            other => Err(invalid!("unknown network variant {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    pub channels: usize,
    pub rfa_count: usize,
    pub variant: Variant,
    pub qp_domain: QpDomain,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            channels: 64,
            rfa_count: 6,
            variant: Variant::Qpam,
            qp_domain: QpDomain::default(),
        }
    }
}

impl NetworkConfig {
    pub fn new(channels: usize, rfa_count: usize, variant: Variant, qp_domain: QpDomain) -> Result<Self> {
        let c = NetworkConfig {
            channels,
            rfa_count,
            variant,
            qp_domain,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.rfa_count == 0 {
            return Err(invalid!(
                "channels and rfa_count must be ≥ 1 (got {} and {})",
                self.channels,
                self.rfa_count
            ));
        }
        Ok(())
    }

    /// Luma, plus the QP plane for the QP-map variant.
    pub fn input_channels(&self) -> usize {
        match self.variant {
            Variant::QpMap => 2,
            _ => 1,
        }
    }

    /// Receptive-field radius in pixels: every 3×3 convolution adds one.
    pub fn receptive_radius(&self) -> usize {
        2 + 2 * BLOCKS_PER_RFA * self.rfa_count
    }
}
