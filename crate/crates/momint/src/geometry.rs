//! Interval unions, point location, and translation tilings.
//!
//! The base set is Ω = (α₁,β₁) ∪ … ∪ (αₙ,βₙ) with strictly interleaving
//! rational endpoints. Translation sets Γ = {g₁,…,g_m} + pℤ are periodic
//! with exact rational offsets. Whether {Ω + γ : γ ∈ Γ} tiles the line is
//! a measure-zero-sensitive predicate, so everything here runs in exact
//! arithmetic: the verdict comes from a sweep line over the rational
//! endpoints folded into one period, never from floating point.

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{pairs_from_rats, rat_mod, rat_to_f64, rats_from_pairs, Rat, RatPair};

/// A finite union of disjoint open intervals with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalUnion {
    endpoints: Vec<Rat>,
}

/// Where a point sits relative to Ω.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// Strictly inside the i-th interval (0-based).
    Interior(usize),
    /// Equal to an endpoint.
    Boundary(EndpointId),
    Outside,
}

/// Identifies one of the 2n endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndpointId {
    pub interval: usize,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Alpha,
    Beta,
}

impl IntervalUnion {
    /// Validates strict interleaving α₁ < β₁ < α₂ < … < αₙ < βₙ.
    pub fn new(endpoints: Vec<Rat>) -> Result<Self> {
        if endpoints.is_empty() || !endpoints.len().is_multiple_of(2) {
            return Err(Error::InvalidIntervalUnion(format!(
                "need a positive even number of endpoints, got {}",
                endpoints.len()
            )));
        }
        for w in endpoints.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidIntervalUnion(format!(
                    "endpoints must be strictly increasing, found {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { endpoints })
    }

    /// Convenience constructor from integer pairs, one `(num, den)` per endpoint.
    pub fn from_pairs(pairs: &[(i64, i64)]) -> Result<Self> {
        let endpoints = pairs
            .iter()
            .map(|&(n, d)| {
                if d == 0 {
                    Err(Error::InvalidIntervalUnion(format!(
                        "endpoint [{n}, {d}] has a zero denominator"
                    )))
                } else {
                    Ok(crate::exact::rat(n, d))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(endpoints)
    }

    /// The unit interval (0,1).
    pub fn unit() -> Self {
        Self::from_pairs(&[(0, 1), (1, 1)]).expect("static data")
    }

    pub fn n(&self) -> usize {
        self.endpoints.len() / 2
    }

    pub fn alpha(&self, i: usize) -> &Rat {
        &self.endpoints[2 * i]
    }

    pub fn beta(&self, i: usize) -> &Rat {
        &self.endpoints[2 * i + 1]
    }

    pub fn length(&self, i: usize) -> Rat {
        self.beta(i) - self.alpha(i)
    }

    pub fn endpoints(&self) -> &[Rat] {
        &self.endpoints
    }

    /// Σ (βᵢ − αᵢ), exact.
    pub fn total_measure(&self) -> Rat {
        (0..self.n()).map(|i| self.length(i)).sum()
    }

    pub fn alphas_f64(&self) -> Vec<f64> {
        (0..self.n()).map(|i| rat_to_f64(self.alpha(i))).collect()
    }

    pub fn betas_f64(&self) -> Vec<f64> {
        (0..self.n()).map(|i| rat_to_f64(self.beta(i))).collect()
    }

    pub fn lengths_f64(&self) -> Vec<f64> {
        (0..self.n()).map(|i| rat_to_f64(&self.length(i))).collect()
    }

    pub fn measure_f64(&self) -> f64 {
        rat_to_f64(&self.total_measure())
    }

    pub fn max_length_f64(&self) -> f64 {
        self.lengths_f64().into_iter().fold(f64::MIN, f64::max)
    }

    pub fn min_length_f64(&self) -> f64 {
        self.lengths_f64().into_iter().fold(f64::MAX, f64::min)
    }

    /// Exact point location.
    pub fn locate(&self, x: &Rat) -> Location {
        for i in 0..self.n() {
            if x == self.alpha(i) {
                return Location::Boundary(EndpointId {
                    interval: i,
                    side: Side::Alpha,
                });
            }
            if x == self.beta(i) {
                return Location::Boundary(EndpointId {
                    interval: i,
                    side: Side::Beta,
                });
            }
            if x > self.alpha(i) && x < self.beta(i) {
                return Location::Interior(i);
            }
        }
        Location::Outside
    }

    /// Interval index containing a float point, or `None` when the point is
    /// outside or within `eps` of an endpoint.
    pub fn interval_of_f64(&self, x: f64, eps: f64) -> Option<usize> {
        for i in 0..self.n() {
            let a = rat_to_f64(self.alpha(i));
            let b = rat_to_f64(self.beta(i));
            if x > a + eps && x < b - eps {
                return Some(i);
            }
        }
        None
    }

    /// Translate every endpoint by `c`.
    pub fn translate(&self, c: &Rat) -> Self {
        Self {
            endpoints: self.endpoints.iter().map(|e| e + c).collect(),
        }
    }

    pub fn to_pairs(&self) -> Result<Vec<RatPair>> {
        pairs_from_rats(&self.endpoints)
    }

    pub fn from_rat_pairs(pairs: &[RatPair]) -> Result<Self> {
        Self::new(rats_from_pairs(pairs)?)
    }
}

/// Periodic translation set Γ = {g₁,…,g_m} + pℤ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationSet {
    offsets: Vec<Rat>,
    period: Rat,
}

impl TranslationSet {
    /// Offsets must be strictly increasing and lie in `[0, p)`.
    pub fn new(offsets: Vec<Rat>, period: Rat) -> Result<Self> {
        if !period.is_positive() {
            return Err(Error::InvalidTranslationSet(format!(
                "period must be positive, got {period}"
            )));
        }
        if offsets.is_empty() {
            return Err(Error::InvalidTranslationSet(
                "need at least one offset".into(),
            ));
        }
        for g in &offsets {
            if g.is_negative() || g >= &period {
                return Err(Error::InvalidTranslationSet(format!(
                    "offset {g} is outside [0, {period})"
                )));
            }
        }
        for w in offsets.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidTranslationSet(format!(
                    "offsets must be strictly increasing, found {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { offsets, period })
    }

    pub fn from_pairs(offsets: &[(i64, i64)], period: (i64, i64)) -> Result<Self> {
        let offs = offsets
            .iter()
            .map(|&(n, d)| crate::exact::rat(n, d))
            .collect();
        Self::new(offs, crate::exact::rat(period.0, period.1))
    }

    pub fn offsets(&self) -> &[Rat] {
        &self.offsets
    }

    pub fn period(&self) -> &Rat {
        &self.period
    }

    pub fn m(&self) -> usize {
        self.offsets.len()
    }

    /// Replace Γ by Γ + c, folding offsets back into `[0, p)`.
    pub fn translate(&self, c: &Rat) -> Self {
        let mut offsets: Vec<Rat> = self
            .offsets
            .iter()
            .map(|g| rat_mod(&(g + c), &self.period))
            .collect();
        offsets.sort();
        Self {
            offsets,
            period: self.period.clone(),
        }
    }
}

/// One defect found by the tiling sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TilingDefect {
    /// m·|Ω| ≠ p, so the translates cannot tile one period.
    MeasureMismatch { covered: Rat, period: Rat },
    /// An open sub-interval of `[0, p)` covered with multiplicity ≠ 1.
    Coverage { lo: Rat, hi: Rat, multiplicity: u64 },
}

/// Outcome of [`tiles_by`]. `tiles` is true exactly when the defect list is
/// empty.
#[derive(Debug, Clone)]
pub struct TilingReport {
    pub tiles: bool,
    pub defects: Vec<TilingDefect>,
}

/// Decide whether {Ω + γ : γ ∈ Γ} tiles the line, up to measure zero.
///
/// The translates are folded modulo the period p and swept over `[0, p)`;
/// tiling holds iff the coverage function is identically 1 on every open
/// piece between consecutive fold points. The necessary measure condition
/// m·|Ω| = p is checked first and reported as a defect on its own.
pub fn tiles_by(omega: &IntervalUnion, gamma: &TranslationSet) -> TilingReport {
    let p = gamma.period().clone();
    let covered = Rat::from_integer((gamma.m() as i64).into()) * omega.total_measure();
    let mut defects = Vec::new();
    if covered != p {
        defects.push(TilingDefect::MeasureMismatch {
            covered: covered.clone(),
            period: p.clone(),
        });
    }

    // Fold each translated interval into [0, p). A piece that straddles the
    // period boundary splits in two; a piece longer than p contributes whole
    // turns of uniform extra coverage.
    let mut events: Vec<(Rat, i64)> = Vec::new();
    let mut base_cover: i64 = 0;
    for g in gamma.offsets() {
        for i in 0..omega.n() {
            let len = omega.length(i);
            let turns = (&len / &p).floor();
            base_cover += turns.to_integer().to_i64().unwrap_or(i64::MAX);
            let rem = &len - &turns * &p;
            if rem.is_zero() {
                continue;
            }
            let start = rat_mod(&(omega.alpha(i) + g), &p);
            let end = &start + &rem;
            if end <= p {
                events.push((start, 1));
                events.push((end, -1));
            } else {
                events.push((start, 1));
                events.push((p.clone(), -1));
                events.push((Rat::zero(), 1));
                events.push((&end - &p, -1));
            }
        }
    }
    events.push((Rat::zero(), 0));
    events.push((p.clone(), 0));
    events.sort_by(|a, b| a.0.cmp(&b.0));

    let mut mult = base_cover;
    let mut pos = Rat::zero();
    let mut k = 0;
    while k < events.len() {
        let x = events[k].0.clone();
        if x > pos && mult != 1 {
            defects.push(TilingDefect::Coverage {
                lo: pos.clone(),
                hi: x.clone(),
                multiplicity: mult.max(0) as u64,
            });
        }
        while k < events.len() && events[k].0 == x {
            mult += events[k].1;
            k += 1;
        }
        pos = x;
    }

    TilingReport {
        tiles: defects.is_empty(),
        defects,
    }
}

// ---------------------------------------------------------------------------
// JSON wire formats
// ---------------------------------------------------------------------------

/// JSON form of Ω: a flat, even-length array of `[num, den]` pairs.
#[derive(Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OmegaJson(pub Vec<RatPair>);

impl OmegaJson {
    pub fn load(&self) -> Result<IntervalUnion> {
        IntervalUnion::from_rat_pairs(&self.0)
    }

    pub fn save(omega: &IntervalUnion) -> Result<Self> {
        Ok(Self(omega.to_pairs()?))
    }
}

/// JSON form of Γ: `{"offsets": [[num,den],...], "period": [num,den]}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaJson {
    pub offsets: Vec<RatPair>,
    pub period: RatPair,
}

impl GammaJson {
    pub fn load(&self) -> Result<TranslationSet> {
        TranslationSet::new(rats_from_pairs(&self.offsets)?, self.period.to_rat()?)
    }

    pub fn save(gamma: &TranslationSet) -> Result<Self> {
        Ok(Self {
            offsets: pairs_from_rats(gamma.offsets())?,
            period: RatPair::from_rat(gamma.period())?,
        })
    }
}
