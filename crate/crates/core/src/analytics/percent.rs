use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A non-negative percentage stored as a scaled integer, so printing is
/// exact. `scaled / 10^decimals` is the value in percent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Percent {
    pub scaled: u64,
    pub decimals: u8,
}

impl Percent {
    /// `100 * num / den` rounded half-up to `decimals` places. `None` when
    /// `den` is zero.
    pub fn ratio(num: u64, den: u64, decimals: u8) -> Option<Percent> {
        if den == 0 {
            return None;
        }
        let scale = 10u128.pow(u32::from(decimals));
        let twice = 2 * 100 * u128::from(num) * scale;
        let den = u128::from(den);
        let scaled = (twice + den) / (2 * den);
        Some(Percent {
            scaled: u64::try_from(scaled).ok()?,
            decimals,
        })
    }

    fn cmp_value(&self, other: &Percent) -> Ordering {
        let d = self.decimals.max(other.decimals);
        let a = u128::from(self.scaled) * 10u128.pow(u32::from(d - self.decimals));
        let b = u128::from(other.scaled) * 10u128.pow(u32::from(d - other.decimals));
        a.cmp(&b)
    }
}

impl PartialOrd for Percent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Percent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other).then(self.decimals.cmp(&other.decimals))
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.decimals == 0 {
            return write!(f, "{}", self.scaled);
        }
        let scale = 10u64.pow(u32::from(self.decimals));
        write!(
            f,
            "{}.{:0width$}",
            self.scaled / scale,
            self.scaled % scale,
            width = usize::from(self.decimals)
        )
    }
}

impl FromStr for Percent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad percent {s:?}");
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty()
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || (s.contains('.') && frac.is_empty())
        {
            return Err(bad());
        }
        let decimals = u8::try_from(frac.len()).map_err(|_| bad())?;
        let scaled = format!("{int}{frac}").parse().map_err(|_| bad())?;
        Ok(Percent { scaled, decimals })
    }
}

impl Serialize for Percent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
