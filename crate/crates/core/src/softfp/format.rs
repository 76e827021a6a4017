use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::softfp::ExactReal;

/// How round-to-nearest resolves an exact tie.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ties {
    /// Ties go to the even significand (IEEE 754 default).
    #[default]
    Even,
    /// Ties go away from zero.
    Away,
}

impl fmt::Display for Ties {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ties::Even => f.write_str("even"),
            Ties::Away => f.write_str("away"),
        }
    }
}

/// A binary floating-point format: `p` significand bits (hidden bit
/// counted), the quantum exponent of the smallest subnormal, and the largest
/// binade exponent. The tie rule travels with the format so that every
/// operation on its numbers rounds the same way.
///
/// The smallest positive subnormal is `λ = 2^e_min_q`; values of magnitude
/// `2^(e_max + 1)` and above overflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Format {
    p: u32,
    e_min_q: i32,
    e_max: i32,
    ties: Ties,
}

impl Format {
    /// Largest supported precision. Exact fma products of two significands
    /// must fit the kernel's 256-bit accumulator with guard room.
    pub const MAX_PRECISION: u32 = 120;

    pub fn new(p: u32, e_min_q: i32, e_max: i32) -> Result<Self> {
        if p < 4 || p > Self::MAX_PRECISION {
            return Err(Error::InvalidFormat(format!(
                "precision {p} outside 4..={}",
                Self::MAX_PRECISION
            )));
        }
        if (e_max as i64) < e_min_q as i64 + p as i64 {
            return Err(Error::InvalidFormat(format!(
                "e_max {e_max} leaves no normal binade above e_min_q {e_min_q}"
            )));
        }
        Ok(Format { p, e_min_q, e_max, ties: Ties::Even })
    }

    pub const fn single() -> Self {
        Format { p: 24, e_min_q: -149, e_max: 127, ties: Ties::Even }
    }

    pub const fn double() -> Self {
        Format { p: 53, e_min_q: -1074, e_max: 1023, ties: Ties::Even }
    }

    pub const fn double_extended() -> Self {
        Format { p: 64, e_min_q: -16445, e_max: 16383, ties: Ties::Even }
    }

    pub const fn quad() -> Self {
        Format { p: 113, e_min_q: -16494, e_max: 16383, ties: Ties::Even }
    }

    /// The four IEEE-style presets, narrowest first.
    pub fn presets() -> [Format; 4] {
        [Self::single(), Self::double(), Self::double_extended(), Self::quad()]
    }

    /// Looks up a preset by name (`single`, `double`, `double-extended` or
    /// `extended`, `quad`).
    pub fn preset(name: &str) -> Option<Format> {
        match name.to_ascii_lowercase().as_str() {
            "single" | "binary32" => Some(Self::single()),
            "double" | "binary64" => Some(Self::double()),
            "double-extended" | "extended" | "double_extended" => Some(Self::double_extended()),
            "quad" | "binary128" => Some(Self::quad()),
            _ => None,
        }
    }

    /// Name of the preset this format matches, ignoring the tie rule.
    pub fn preset_name(&self) -> Option<&'static str> {
        let plain = self.with_ties(Ties::Even);
        if plain == Self::single() {
            Some("single")
        } else if plain == Self::double() {
            Some("double")
        } else if plain == Self::double_extended() {
            Some("double-extended")
        } else if plain == Self::quad() {
            Some("quad")
        } else {
            None
        }
    }

    pub const fn with_ties(mut self, ties: Ties) -> Self {
        self.ties = ties;
        self
    }

    pub const fn p(&self) -> u32 {
        self.p
    }

    pub const fn e_min_q(&self) -> i32 {
        self.e_min_q
    }

    pub const fn e_max(&self) -> i32 {
        self.e_max
    }

    pub const fn ties(&self) -> Ties {
        self.ties
    }

    /// Binade exponent of the smallest normal number, `2^(e_min_q + p - 1)`.
    pub const fn min_normal_exp(&self) -> i64 {
        self.e_min_q as i64 + self.p as i64 - 1
    }

    /// The smallest positive subnormal.
    pub fn lambda(&self) -> ExactReal {
        ExactReal::pow2(self.e_min_q as i64)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.preset_name() {
            Some(name) => f.write_str(name)?,
            None => write!(f, "binary(p={}, e_min_q={}, e_max={})", self.p, self.e_min_q, self.e_max)?,
        }
        if self.ties == Ties::Away {
            f.write_str(" [ties away]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_by_name() {
        for fmt in Format::presets() {
            let name = fmt.preset_name().unwrap();
            assert_eq!(Format::preset(name), Some(fmt));
        }
        assert_eq!(Format::preset("extended"), Some(Format::double_extended()));
        assert_eq!(Format::preset("half"), None);
    }

    #[test]
    fn rejects_tiny_precision() {
        assert!(Format::new(3, -20, 20).is_err());
        assert!(Format::new(121, -2000, 2000).is_err());
        assert!(Format::new(8, -20, -14).is_err());
        assert!(Format::new(8, -20, 20).is_ok());
    }

    #[test]
    fn lambda_is_smallest_subnormal() {
        assert_eq!(Format::double().lambda(), ExactReal::pow2(-1074));
        assert_eq!(Format::double().min_normal_exp(), -1022);
        assert_eq!(Format::single().min_normal_exp(), -126);
    }
}
