//! Two-state bit vectors up to 128 bits wide.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Widest vector the internal evaluator handles.
pub const MAX_WIDTH: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitVector {
    width: u32,
    bits: u128,
    /// Bits that are known (0/1). Only input stimulus may carry unknown bits;
    /// the evaluator rejects them rather than propagating X.
    known: u128,
}

pub(crate) fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

impl BitVector {
    /// Builds a fully-known vector, truncating `bits` to `width`.
    ///
    /// Panics if `width` is 0 or exceeds [`MAX_WIDTH`].
    pub fn new(width: u32, bits: u128) -> Self {
        assert!(
            (1..=MAX_WIDTH).contains(&width),
            "bit vector width {width} out of range"
        );
        let m = mask(width);
        BitVector {
            width,
            bits: bits & m,
            known: m,
        }
    }

    pub fn with_unknown(width: u32, bits: u128, known: u128) -> Self {
        let mut v = BitVector::new(width, bits);
        v.known = known & mask(width);
        v.bits &= v.known;
        v
    }

    pub fn zero(width: u32) -> Self {
        BitVector::new(width, 0)
    }

    pub fn from_bool(b: bool) -> Self {
        BitVector::new(1, b as u128)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn known_mask(&self) -> u128 {
        self.known
    }

    pub fn is_fully_known(&self) -> bool {
        self.known == mask(self.width)
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn bit(&self, i: u32) -> bool {
        i < self.width && (self.bits >> i) & 1 == 1
    }

    /// Zero-extends or truncates to `width`.
    pub fn resize(&self, width: u32) -> Self {
        BitVector::new(width, self.bits)
    }

    /// Sign-extends (from the current top bit) or truncates to `width`.
    pub fn sign_resize(&self, width: u32) -> Self {
        BitVector::new(width, sign_extend(self.bits, self.width, width))
    }

    /// Interprets the vector as two's complement.
    pub fn as_signed(&self) -> i128 {
        sign_extend(self.bits, self.width, 128) as i128
    }

    /// Parses a Verilog-style literal (`4'hF`, `8'b1010_0101`, `'d3`, `42`,
    /// `0x1f`). A bare decimal gets the smallest width that holds it.
    pub fn parse_literal(text: &str) -> Result<BitVector, String> {
        let t = text.trim();
        if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            let v =
                u128::from_str_radix(&hex.replace('_', ""), 16).map_err(|e| format!("bad hex literal `{t}`: {e}"))?;
            return Ok(BitVector::new(min_width(v), v));
        }
        match parse_based(t)? {
            Some(lit) => {
                if lit.known != mask(lit.width) {
                    return Ok(BitVector::with_unknown(lit.width, lit.bits, lit.known));
                }
                Ok(BitVector::new(lit.width, lit.bits))
            }
            None => {
                let v: u128 = t
                    .replace('_', "")
                    .parse()
                    .map_err(|e| format!("bad literal `{t}`: {e}"))?;
                Ok(BitVector::new(min_width(v), v))
            }
        }
    }
}

pub(crate) fn min_width(v: u128) -> u32 {
    (128 - v.leading_zeros()).max(1)
}

pub(crate) fn sign_extend(bits: u128, from: u32, to: u32) -> u128 {
    let from = from.clamp(1, 128);
    let v = bits & mask(from);
    let extended = if from < 128 && (v >> (from - 1)) & 1 == 1 {
        v | !mask(from)
    } else {
        v
    };
    extended & mask(to)
}

/// A based Verilog literal after digit decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BasedLiteral {
    pub width: u32,
    pub sized: bool,
    pub signed: bool,
    pub bits: u128,
    /// 1 where the digit was 0/1, 0 where it was x, z or `?`.
    pub known: u128,
}

/// Decodes `[size]'[s]<base><digits>`. Returns `Ok(None)` for text without
/// a base marker.
pub(crate) fn parse_based(text: &str) -> Result<Option<BasedLiteral>, String> {
    let Some(tick) = text.find('\'') else {
        return Ok(None);
    };
    let size_text: String = text[..tick]
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .collect();
    let (sized, width) = if size_text.is_empty() {
        (false, 32)
    } else {
        let w: u32 = size_text.parse().map_err(|_| format!("bad literal size in `{text}`"))?;
        if w == 0 {
            return Err(format!("zero-width literal `{text}`"));
        }
        if w > MAX_WIDTH {
            return Err(format!("literal `{text}` wider than {MAX_WIDTH} bits"));
        }
        (true, w)
    };
    let mut rest = text[tick + 1..].trim_start();
    let mut signed = false;
    if let Some(r) = rest.strip_prefix(['s', 'S']) {
        signed = true;
        rest = r;
    }
    let mut chars = rest.chars();
    let base = chars.next().ok_or_else(|| format!("missing base in `{text}`"))?;
    let (radix, bits_per_digit) = match base.to_ascii_lowercase() {
        'b' => (2u32, 1u32),
        'o' => (8, 3),
        'h' => (16, 4),
        'd' => (10, 0),
        other => return Err(format!("unknown base `{other}` in `{text}`")),
    };
    let digits: String = chars
        .as_str()
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .collect();
    if digits.is_empty() {
        return Err(format!("missing digits in `{text}`"));
    }
    let mut bits: u128 = 0;
    let mut known: u128 = 0;
    if radix == 10 {
        if digits.chars().all(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Ok(Some(BasedLiteral {
                width,
                sized,
                signed,
                bits: 0,
                known: 0,
            }));
        }
        bits = digits
            .parse::<u128>()
            .map_err(|_| format!("bad decimal digits in `{text}`"))?;
        known = u128::MAX;
    } else {
        let mut total_bits = 0u32;
        for c in digits.chars() {
            let (d, k) = match c {
                'x' | 'X' | 'z' | 'Z' | '?' => (0u128, 0u128),
                _ => {
                    let d = c
                        .to_digit(radix)
                        .ok_or_else(|| format!("bad digit `{c}` in `{text}`"))?;
                    (d as u128, mask(bits_per_digit))
                }
            };
            total_bits += bits_per_digit;
            if total_bits > 128 + bits_per_digit {
                return Err(format!("literal `{text}` too wide"));
            }
            bits = (bits << bits_per_digit) | d;
            known = (known << bits_per_digit) | k;
        }
        // Leading x/z extend through the full width.
        let first = digits.chars().next().unwrap();
        if matches!(first, 'x' | 'X' | 'z' | 'Z' | '?') && total_bits < width {
            known &= mask(total_bits);
        } else if total_bits < width {
            known |= !mask(total_bits);
        }
    }
    let m = mask(width);
    Ok(Some(BasedLiteral {
        width,
        sized,
        signed,
        bits: bits & m,
        known: known & m,
    }))
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_fully_known() {
            write!(f, "{}'h{:x}", self.width, self.bits)
        } else {
            let s: String = (0..self.width)
                .rev()
                .map(|i| {
                    if (self.known >> i) & 1 == 0 {
                        'x'
                    } else if (self.bits >> i) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            write!(f, "{}'b{}", self.width, s)
        }
    }
}

impl FromStr for BitVector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BitVector::parse_literal(s)
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(u64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(n) => Ok(BitVector::new(min_width(n as u128), n as u128)),
            Repr::Text(t) => BitVector::parse_literal(&t).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_forms() {
        assert_eq!(BitVector::parse_literal("4'hF").unwrap(), BitVector::new(4, 15));
        assert_eq!(
            BitVector::parse_literal("8'b1010_0101").unwrap(),
            BitVector::new(8, 0xa5)
        );
        assert_eq!(BitVector::parse_literal("'d3").unwrap(), BitVector::new(32, 3));
        assert_eq!(BitVector::parse_literal("42").unwrap(), BitVector::new(6, 42));
        assert_eq!(BitVector::parse_literal("0x1f").unwrap(), BitVector::new(5, 31));
        assert_eq!(BitVector::parse_literal("0").unwrap(), BitVector::new(1, 0));
    }

    #[test]
    fn unknown_digits_clear_known_mask() {
        let v = BitVector::parse_literal("4'b1x0z").unwrap();
        assert!(!v.is_fully_known());
        assert_eq!(v.known_mask(), 0b1010);
        let all_x = BitVector::parse_literal("8'hx").unwrap();
        assert_eq!(all_x.known_mask(), 0);
    }

    #[test]
    fn truncation_and_sign() {
        let v = BitVector::new(4, 0x1f);
        assert_eq!(v.bits(), 0xf);
        assert_eq!(v.as_signed(), -1);
        assert_eq!(BitVector::new(4, 0b1000).sign_resize(8).bits(), 0xf8);
        assert_eq!(BitVector::new(4, 0b0111).sign_resize(8).bits(), 0x07);
        assert_eq!(BitVector::new(128, u128::MAX).as_signed(), -1);
    }

    #[test]
    fn display_round_trips() {
        for v in [
            BitVector::new(1, 1),
            BitVector::new(13, 0x1abc),
            BitVector::new(128, u128::MAX - 5),
            BitVector::with_unknown(4, 0b1001, 0b1101),
        ] {
            let text = v.to_string();
            assert_eq!(BitVector::parse_literal(&text).unwrap(), v, "{text}");
        }
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let v: BitVector = serde_json::from_str("5").unwrap();
        assert_eq!(v.bits(), 5);
        let v: BitVector = serde_json::from_str("\"8'hff\"").unwrap();
        assert_eq!(v, BitVector::new(8, 255));
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"8'hff\"");
    }
}
