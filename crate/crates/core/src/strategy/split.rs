use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Training fraction `num/den` in (0, 1), kept rational so that `⌊f·n⌋` is
/// exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fraction {
    num: u32,
    den: u32,
}

impl Fraction {
    pub const ONE_THIRD: Fraction = Fraction { num: 1, den: 3 };
    pub const ONE_HALF: Fraction = Fraction { num: 1, den: 2 };
    pub const TWO_THIRDS: Fraction = Fraction { num: 2, den: 3 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || num >= den {
            return Err(Error::InvalidParameter(format!(
                "fraction {num}/{den} must lie strictly between 0 and 1"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// `⌊f·n⌋`.
    pub fn part(self, n: usize) -> usize {
        n * self.num as usize / self.den as usize
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse fraction '{s}'"));
        let (a, b) = s.split_once('/').ok_or_else(bad)?;
        Fraction::new(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// Random partition of `0..n` into a selection part and an estimation part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    /// Sorted case indices used for model selection.
    pub selection: Vec<usize>,
    /// Sorted complement, used for estimation.
    pub estimation: Vec<usize>,
    pub fraction: Fraction,
}

pub fn split_data(n: usize, fraction: Fraction, rng: &mut RandomStream) -> Result<SplitPlan> {
    let m = fraction.part(n);
    if m == 0 || m == n {
        return Err(Error::InvalidSplit(format!(
            "fraction {fraction} of {n} cases leaves an empty part"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut selection = order[..m].to_vec();
    let mut estimation = order[m..].to_vec();
    selection.sort_unstable();
    estimation.sort_unstable();
    Ok(SplitPlan {
        selection,
        estimation,
        fraction,
    })
}
