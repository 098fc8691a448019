//! Group-parameter selection for an IGC + GC block.
//!
//! Per-location cost of a 3×3 IGC (`g1` groups, `M → L`) followed by a 1×1
//! GC (`g2` groups, `L → N`) is `A·L·M/g1 + N·L/g2`, which is also the
//! block's weight count. The block has a full channel receptive field iff
//! `g1·g2 <= L`; the minimiser enumerates every feasible divisor pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block channel counts and IGC kernel area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostQuery {
    pub m: usize,
    pub l: usize,
    pub n: usize,
    pub area: usize,
}

impl CostQuery {
    /// 3×3 IGC (`A = 9`).
    pub fn new(m: usize, l: usize, n: usize) -> Self {
        Self { m, l, n, area: 9 }
    }

    pub fn with_area(mut self, area: usize) -> Self {
        self.area = area;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.l == 0 || self.n == 0 || self.area == 0 {
            return Err(Error::Domain(format!("M, L, N and A must all be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// Checks every constraint on `(g1, g2)`, including `g1·g2 <= L`.
    pub fn check(&self, g1: usize, g2: usize) -> Result<()> {
        self.check_groups(g1, g2)?;
        if g1 * g2 > self.l {
            return Err(Error::Domain(format!(
                "g1*g2 = {} exceeds L = {}",
                g1 * g2,
                self.l
            )));
        }
        Ok(())
    }

    fn check_groups(&self, g1: usize, g2: usize) -> Result<()> {
        self.validate()?;
        if g1 == 0 || self.m % g1 != 0 || self.l % g1 != 0 {
            return Err(Error::Domain(format!(
                "g1 = {g1} must divide M = {} and L = {}",
                self.m, self.l
            )));
        }
        if g2 == 0 || self.l % g2 != 0 || self.n % g2 != 0 {
            return Err(Error::Domain(format!(
                "g2 = {g2} must divide L = {} and N = {}",
                self.l, self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostResult {
    pub g1: usize,
    pub g2: usize,
    pub cost: u64,
}

fn raw_cost(q: &CostQuery, g1: usize, g2: usize) -> u64 {
    let (m, l, n, a) = (q.m as u64, q.l as u64, q.n as u64, q.area as u64);
    a * l * m / g1 as u64 + n * l / g2 as u64
}

/// `A·L·M/g1 + N·L/g2`. Fails if `(g1, g2)` violates any constraint.
pub fn cost(q: &CostQuery, g1: usize, g2: usize) -> Result<u64> {
    q.check(g1, g2)?;
    Ok(raw_cost(q, g1, g2))
}

/// Ascending divisors of `x`.
pub fn divisors(x: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= x {
        if x % d == 0 {
            small.push(d);
            if d * d != x {
                large.push(x / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Picks the cheapest pair; ties go to the lexicographically smallest
/// `(g1, g2)`, which is the first one seen in ascending enumeration.
fn best_of(q: &CostQuery, pairs: impl Iterator<Item = (usize, usize)>) -> Option<CostResult> {
    pairs
        .map(|(g1, g2)| CostResult {
            g1,
            g2,
            cost: raw_cost(q, g1, g2),
        })
        .fold(None, |best: Option<CostResult>, r| match best {
            Some(b) if b.cost <= r.cost => Some(b),
            _ => Some(r),
        })
}

/// Exhaustive minimisation over all feasible `(g1, g2)`.
pub fn minimize_cost(q: &CostQuery) -> Result<CostResult> {
    q.validate()?;
    let g1s = divisors(gcd(q.m, q.l));
    let g2s = divisors(gcd(q.l, q.n));
    let pairs = g1s
        .iter()
        .flat_map(|&g1| g2s.iter().map(move |&g2| (g1, g2)))
        .filter(|&(g1, g2)| g1 * g2 <= q.l);
    best_of(q, pairs).ok_or_else(|| Error::Domain(format!("no feasible (g1, g2) for {q:?}")))
}

/// Minimises over `g1` alone with `g2` held at `g2_fixed`.
pub fn fixed_g2_policy(q: &CostQuery, g2_fixed: usize) -> Result<CostResult> {
    q.check_groups(1, g2_fixed)?;
    let pairs = divisors(gcd(q.m, q.l))
        .into_iter()
        .filter(|&g1| g1 * g2_fixed <= q.l)
        .map(|g1| (g1, g2_fixed));
    best_of(q, pairs)
        .ok_or_else(|| Error::Domain(format!("no feasible g1 with g2 = {g2_fixed} for {q:?}")))
}

/// The `(M, L, N)` rows of the reference minimisation table, all with `A = 9`.
pub const TABLE1_ROWS: [(usize, usize, usize); 10] = [
    (32, 32, 64),
    (64, 64, 64),
    (64, 64, 128),
    (128, 128, 128),
    (128, 128, 256),
    (256, 256, 256),
    (256, 256, 512),
    (512, 512, 512),
    (512, 512, 1024),
    (1024, 1024, 1024),
];

/// [`minimize_cost`] over each `(M, L, N)` with `A = 9`.
pub fn table1(rows: &[(usize, usize, usize)]) -> Result<Vec<CostResult>> {
    rows.iter()
        .map(|&(m, l, n)| minimize_cost(&CostQuery::new(m, l, n)))
        .collect()
}
