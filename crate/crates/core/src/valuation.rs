use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational, used for all valuations.
pub type Rat = Ratio<i64>;

/// Extended valuation: an exact rational or +infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtVal {
    Finite(Rat),
    Infinity,
}

impl ExtVal {
    pub fn rat(num: i64, den: i64) -> Self {
        ExtVal::Finite(Rat::new(num, den))
    }

    pub fn int(v: i64) -> Self {
        ExtVal::Finite(Rat::from_integer(v))
    }

    pub fn zero() -> Self {
        ExtVal::int(0)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtVal::Infinity)
    }

    pub fn finite(&self) -> Option<Rat> {
        match self {
            ExtVal::Finite(r) => Some(*r),
            ExtVal::Infinity => None,
        }
    }

    pub fn scale(&self, c: i64) -> ExtVal {
        match self {
            ExtVal::Finite(r) => ExtVal::Finite(*r * Rat::from_integer(c)),
            ExtVal::Infinity => ExtVal::Infinity,
        }
    }
}

impl PartialOrd for ExtVal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtVal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtVal::Infinity, ExtVal::Infinity) => Ordering::Equal,
            (ExtVal::Infinity, _) => Ordering::Greater,
            (_, ExtVal::Infinity) => Ordering::Less,
            (ExtVal::Finite(a), ExtVal::Finite(b)) => a.cmp(b),
        }
    }
}

impl Add for ExtVal {
    type Output = ExtVal;

    fn add(self, rhs: ExtVal) -> ExtVal {
        match (self, rhs) {
            (ExtVal::Finite(a), ExtVal::Finite(b)) => ExtVal::Finite(a + b),
            _ => ExtVal::Infinity,
        }
    }
}

impl fmt::Display for ExtVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtVal::Infinity => write!(f, "inf"),
            ExtVal::Finite(r) => {
                if r.denom().is_one_like() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

trait IsOneLike {
    fn is_one_like(&self) -> bool;
}
impl IsOneLike for i64 {
    fn is_one_like(&self) -> bool {
        *self == 1
    }
}

impl Serialize for ExtVal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtVal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        parse_ext_val(&raw).map_err(serde::de::Error::custom)
    }
}

/// Parses "inf", "a" or "a/b".
pub fn parse_ext_val(s: &str) -> Result<ExtVal> {
    let s = s.trim();
    if s == "inf" || s == "+inf" {
        return Ok(ExtVal::Infinity);
    }
    let parse_i64 = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}")))
    };
    match s.split_once('/') {
        None => Ok(ExtVal::int(parse_i64(s)?)),
        Some((n, d)) => {
            let den = parse_i64(d)?;
            if den == 0 {
                return Err(Error::Parse("zero denominator".into()));
            }
            Ok(ExtVal::rat(parse_i64(n)?, den))
        }
    }
}

/// Minimum of a slice together with a uniqueness indicator.
pub fn vmin(vals: &[ExtVal]) -> (ExtVal, bool) {
    let mut best = ExtVal::Infinity;
    let mut count = 0usize;
    for v in vals {
        match v.cmp(&best) {
            Ordering::Less => {
                best = *v;
                count = 1;
            }
            Ordering::Equal => {
                if !v.is_infinite() {
                    count += 1;
                }
            }
            Ordering::Greater => {}
        }
    }
    (best, count <= 1)
}

/// Normalised order along the cyclotomic tower: ord at level n is
/// p^{n-1}(p-1) times ord_p.
pub fn eps_order(w: ExtVal, p: u64, n: u32) -> ExtVal {
    let d = (p as i64).pow(n - 1) * (p as i64 - 1);
    w.scale(d)
}

/// 2x2 matrix of extended valuations with per-entry exactness flags.
///
/// A set flag means the entry is an exact valuation; a cleared flag only
/// guarantees a lower bound (a tie occurred somewhere in its history).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValMatrix {
    pub entries: [[ExtVal; 2]; 2],
    pub exact: [[bool; 2]; 2],
}

impl ValMatrix {
    pub fn exact_entries(entries: [[ExtVal; 2]; 2]) -> Self {
        ValMatrix { entries, exact: [[true; 2]; 2] }
    }

    pub fn identity() -> Self {
        ValMatrix::exact_entries([
            [ExtVal::zero(), ExtVal::Infinity],
            [ExtVal::Infinity, ExtVal::zero()],
        ])
    }

    /// Min-plus product. An output flag is set only when the minimising term
    /// is unique and both of its factors were exact.
    pub fn trop_mul(&self, rhs: &ValMatrix) -> ValMatrix {
        let mut out = ValMatrix::exact_entries([[ExtVal::Infinity; 2]; 2]);
        for i in 0..2 {
            for j in 0..2 {
                let t0 = self.entries[i][0] + rhs.entries[0][j];
                let t1 = self.entries[i][1] + rhs.entries[1][j];
                let (m, unique) = vmin(&[t0, t1]);
                let src_exact = if m.is_infinite() {
                    // all terms infinite: exact iff every contributing pair was
                    self.exact[i][0] && rhs.exact[0][j] && self.exact[i][1] && rhs.exact[1][j]
                } else if t0 <= t1 {
                    self.exact[i][0] && rhs.exact[0][j]
                } else {
                    self.exact[i][1] && rhs.exact[1][j]
                };
                out.entries[i][j] = m;
                out.exact[i][j] = (unique || m.is_infinite()) && src_exact;
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> [ExtVal; 2] {
        self.entries[i]
    }
}

impl fmt::Display for ValMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.entries[0][0], self.entries[0][1], self.entries[1][0], self.entries[1][1]
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_addition() {
        assert!(ExtVal::rat(1, 3) < ExtVal::rat(2, 5));
        assert!(ExtVal::Infinity > ExtVal::int(1_000_000));
        assert_eq!(ExtVal::rat(1, 3) + ExtVal::rat(1, 6), ExtVal::rat(1, 2));
        assert_eq!(ExtVal::rat(1, 3) + ExtVal::Infinity, ExtVal::Infinity);
    }

    #[test]
    fn vmin_reports_ties() {
        let (m, unique) = vmin(&[ExtVal::rat(1, 2), ExtVal::rat(2, 4)]);
        assert_eq!(m, ExtVal::rat(1, 2));
        assert!(!unique);
        let (m, unique) = vmin(&[ExtVal::rat(1, 2), ExtVal::rat(2, 3)]);
        assert_eq!(m, ExtVal::rat(1, 2));
        assert!(unique);
        let (m, unique) = vmin(&[ExtVal::Infinity, ExtVal::Infinity]);
        assert_eq!(m, ExtVal::Infinity);
        assert!(unique);
    }

    #[test]
    fn eps_order_scaling() {
        assert_eq!(eps_order(ExtVal::rat(2, 5), 5, 2), ExtVal::int(8));
        assert_eq!(eps_order(ExtVal::rat(2, 25), 5, 3), ExtVal::int(8));
        assert_eq!(eps_order(ExtVal::Infinity, 5, 3), ExtVal::Infinity);
    }

    #[test]
    fn trop_identity_is_neutral() {
        let a = ValMatrix::exact_entries([
            [ExtVal::rat(1, 3), ExtVal::int(0)],
            [ExtVal::rat(7, 2), ExtVal::Infinity],
        ]);
        assert_eq!(a.trop_mul(&ValMatrix::identity()), a);
        assert_eq!(ValMatrix::identity().trop_mul(&a), a);
    }

    #[test]
    fn trop_mul_flags_ties() {
        let a = ValMatrix::exact_entries([
            [ExtVal::int(1), ExtVal::int(0)],
            [ExtVal::Infinity, ExtVal::Infinity],
        ]);
        let b = ValMatrix::exact_entries([
            [ExtVal::int(0), ExtVal::int(2)],
            [ExtVal::int(1), ExtVal::Infinity],
        ]);
        let c = a.trop_mul(&b);
        // entry (0,0): min(1+0, 0+1) tied at 1
        assert_eq!(c.entries[0][0], ExtVal::int(1));
        assert!(!c.exact[0][0]);
        // entry (0,1): min(1+2, 0+inf) = 3 unique
        assert_eq!(c.entries[0][1], ExtVal::int(3));
        assert!(c.exact[0][1]);
        // second row stays infinite and exact
        assert_eq!(c.entries[1][0], ExtVal::Infinity);
        assert!(c.exact[1][0]);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["inf", "3", "-2", "7/5"] {
            assert_eq!(parse_ext_val(s).unwrap().to_string(), s);
        }
        assert!(parse_ext_val("1/0").is_err());
    }
}
