use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// Two-valued label with a fixed canonical order, shared by the evaluation
/// code.
pub trait BinaryLabel: Copy + Eq + fmt::Debug {
    /// Canonical order; `ALL[0]` wins majority ties.
    const ALL: [Self; 2];

    fn index(self) -> usize;

    fn name(self) -> &'static str;
}

/// Gold label of a statute-case pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntailmentLabel {
    Entailment,
    Contradiction,
}

impl EntailmentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Entailment => "entailment",
            Self::Contradiction => "contradiction",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Self::Entailment => Self::Contradiction,
            Self::Contradiction => Self::Entailment,
        }
    }
}

impl FromStr for EntailmentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entailment" => Ok(Self::Entailment),
            "contradiction" => Ok(Self::Contradiction),
            other => Err(Error::UnknownLabel(other.into())),
        }
    }
}

impl fmt::Display for EntailmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl BinaryLabel for EntailmentLabel {
    const ALL: [Self; 2] = [Self::Entailment, Self::Contradiction];

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        self.as_str()
    }
}

/// Whether two statute-case pairs share their entailment label.
/// Serialized as `1` (analogy) / `0` (not analogy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnalogyLabel {
    NotAnalogy,
    Analogy,
}

impl AnalogyLabel {
    pub fn as_bit(self) -> u8 {
        match self {
            Self::NotAnalogy => 0,
            Self::Analogy => 1,
        }
    }

    pub fn from_bit(bit: u64) -> Result<Self> {
        match bit {
            0 => Ok(Self::NotAnalogy),
            1 => Ok(Self::Analogy),
            other => Err(Error::UnknownLabel(alloc::format!("{other}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Self::NotAnalogy => Self::Analogy,
            Self::Analogy => Self::NotAnalogy,
        }
    }
}

impl fmt::Display for AnalogyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl BinaryLabel for AnalogyLabel {
    const ALL: [Self; 2] = [Self::NotAnalogy, Self::Analogy];

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            Self::NotAnalogy => "not_analogy",
            Self::Analogy => "analogy",
        }
    }
}
