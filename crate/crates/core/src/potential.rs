//! Periodic background, single-site potential, and disorder
//! configurations.
//!
//! Single sites are sums of compactly supported smooth exponential
//! bumps on the unit cell C0 = [-1/2, 1/2]^d, so the sign decomposition
//! f = f+ + f- has exactly disjoint supports when the bumps do.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the deduplicated configuration count.
pub const ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("bump {index} (center {center:?}, radius {radius}) touches the boundary of C0")]
    BumpOutsideCell {
        index: usize,
        center: Vec<f64>,
        radius: f64,
    },
    #[error("single site needs at least one bump")]
    EmptySpec,
    #[error("dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("bump center has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bump radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("disorder bounds require omega_minus < omega_plus, got [{0}, {1}]")]
    BadBounds(f64, f64),
    #[error("value {0} outside the disorder bounds [{1}, {2}]")]
    ValueOutOfBounds(f64, f64, f64),
    #[error("alphabet must be nonempty and contain both bounds")]
    BadAlphabet,
    #[error("period/box must be at least 1 per axis")]
    BadPeriod,
    #[error("configuration count {count} exceeds the cap {cap}")]
    ExplosionGuard { count: usize, cap: usize },
    #[error("values length {got} does not match the period cell size {expected}")]
    ValueCountMismatch { expected: usize, got: usize },
}

/// One signed smooth bump: amplitude · exp(-1/(1 - (|x-center|/radius)^2)),
/// zero outside the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum::<f64>()
            / (self.radius * self.radius);
        if r2 >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - r2)).exp()
        }
    }
}

/// Compactly supported indefinite-sign single site on C0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleSite {
    dimension: usize,
    bumps: Vec<Bump>,
}

/// Sum of smooth bumps; validates that every bump support stays
/// strictly inside C0.
pub fn build_single_site(bumps: Vec<Bump>, dimension: usize) -> Result<SingleSite, PotentialError> {
    if !(1..=2).contains(&dimension) {
        return Err(PotentialError::BadDimension(dimension));
    }
    if bumps.is_empty() {
        return Err(PotentialError::EmptySpec);
    }
    for (index, b) in bumps.iter().enumerate() {
        if b.center.len() != dimension {
            return Err(PotentialError::DimensionMismatch {
                expected: dimension,
                got: b.center.len(),
            });
        }
        if !(b.radius > 0.0) {
            return Err(PotentialError::BadRadius(b.radius));
        }
        let inside = b.center.iter().all(|c| c.abs() + b.radius < 0.5);
        if !inside {
            return Err(PotentialError::BumpOutsideCell {
                index,
                center: b.center.clone(),
                radius: b.radius,
            });
        }
    }
    Ok(SingleSite { dimension, bumps })
}

impl SingleSite {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    /// f(x); zero outside the bump supports, in particular outside C0.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        self.bumps.iter().map(|b| b.eval(x)).sum()
    }

    /// f+ = max(f, 0)
    pub fn eval_plus(&self, x: &[f64]) -> f64 {
        self.eval(x).max(0.0)
    }

    /// f- = min(f, 0)
    pub fn eval_minus(&self, x: &[f64]) -> f64 {
        self.eval(x).min(0.0)
    }

    /// Smallest distance from any bump support to the boundary of C0.
    pub fn boundary_clearance(&self) -> f64 {
        self.bumps
            .iter()
            .flat_map(|b| b.center.iter().map(move |c| 0.5 - (c.abs() + b.radius)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Negate every amplitude (f -> -f).
    pub fn negated(&self) -> SingleSite {
        SingleSite {
            dimension: self.dimension,
            bumps: self
                .bumps
                .iter()
                .map(|b| Bump {
                    center: b.center.clone(),
                    radius: b.radius,
                    amplitude: -b.amplitude,
                })
                .collect(),
        }
    }

    /// Midpoint-rule integral over C0. The integrand is smooth and
    /// vanishes to all orders at the support edge, so this converges
    /// super-algebraically in `samples_per_axis`.
    pub fn integral(&self, samples_per_axis: usize) -> f64 {
        let n = samples_per_axis;
        let h = 1.0 / n as f64;
        let total = n.pow(self.dimension as u32);
        let mut sum = 0.0;
        for flat in 0..total {
            let mut x = vec![0.0; self.dimension];
            let mut rem = flat;
            for a in 0..self.dimension {
                let j = rem % n;
                rem /= n;
                x[a] = -0.5 + (j as f64 + 0.5) * h;
            }
            sum += self.eval(&x);
        }
        sum * h.powi(self.dimension as i32)
    }

    /// Sign of f over a sampling grid: Some(1) if f >= 0 everywhere,
    /// Some(-1) if f <= 0 everywhere, None if indefinite.
    pub fn fixed_sign(&self, samples_per_axis: usize) -> Option<i8> {
        let n = samples_per_axis;
        let h = 1.0 / n as f64;
        let total = n.pow(self.dimension as u32);
        let (mut has_pos, mut has_neg) = (false, false);
        for flat in 0..total {
            let mut x = vec![0.0; self.dimension];
            let mut rem = flat;
            for a in 0..self.dimension {
                let j = rem % n;
                rem /= n;
                x[a] = -0.5 + (j as f64 + 0.5) * h;
            }
            let v = self.eval(&x);
            if v > 0.0 {
                has_pos = true;
            }
            if v < 0.0 {
                has_neg = true;
            }
        }
        match (has_pos, has_neg) {
            (true, true) => None,
            (_, true) => Some(-1),
            _ => Some(1),
        }
    }
}

/// One trigonometric term of the periodic background:
/// amplitude · cos(2π k·x) or amplitude · sin(2π k·x) with integer k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub harmonics: Vec<i32>,
    #[serde(default)]
    pub sine: bool,
}

/// Z^d-periodic bounded background potential given as a trigonometric
/// polynomial; exactly periodic by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBackground {
    dimension: usize,
    offset: f64,
    terms: Vec<TrigTerm>,
}

impl PeriodicBackground {
    pub fn new(
        dimension: usize,
        offset: f64,
        terms: Vec<TrigTerm>,
    ) -> Result<Self, PotentialError> {
        if !(1..=2).contains(&dimension) {
            return Err(PotentialError::BadDimension(dimension));
        }
        for t in &terms {
            if t.harmonics.len() != dimension {
                return Err(PotentialError::DimensionMismatch {
                    expected: dimension,
                    got: t.harmonics.len(),
                });
            }
        }
        Ok(Self {
            dimension,
            offset,
            terms,
        })
    }

    pub fn zero(dimension: usize) -> Self {
        Self {
            dimension,
            offset: 0.0,
            terms: vec![],
        }
    }

    /// w · cos(2π x_0), the default desk-scale background in d=1.
    pub fn cosine(dimension: usize, amplitude: f64) -> Self {
        let mut harmonics = vec![0; dimension];
        harmonics[0] = 1;
        Self {
            dimension,
            offset: 0.0,
            terms: vec![TrigTerm {
                amplitude,
                harmonics,
                sine: false,
            }],
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        let mut v = self.offset;
        for t in &self.terms {
            let phase: f64 = 2.0
                * std::f64::consts::PI
                * t.harmonics
                    .iter()
                    .zip(x)
                    .map(|(k, xi)| *k as f64 * xi)
                    .sum::<f64>();
            v += t.amplitude * if t.sine { phase.sin() } else { phase.cos() };
        }
        v
    }

    /// Shifted copy (adds a constant).
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.offset += c;
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigKind {
    Constant,
    Periodic,
    Boxed,
}

/// A periodic (or boxed) assignment of couplings to lattice sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfiguration {
    pub kind: ConfigKind,
    pub dimension: usize,
    /// Period vector for periodic configurations, box dims for boxed.
    pub period: Vec<usize>,
    /// Row-major over the period cell (last axis fastest).
    pub values: Vec<f64>,
    pub bounds: (f64, f64),
}

fn check_bounds(bounds: (f64, f64)) -> Result<(), PotentialError> {
    if bounds.0 < bounds.1 {
        Ok(())
    } else {
        Err(PotentialError::BadBounds(bounds.0, bounds.1))
    }
}

impl DisorderConfiguration {
    pub fn constant(
        dimension: usize,
        value: f64,
        bounds: (f64, f64),
    ) -> Result<Self, PotentialError> {
        check_bounds(bounds)?;
        if value < bounds.0 || value > bounds.1 {
            return Err(PotentialError::ValueOutOfBounds(value, bounds.0, bounds.1));
        }
        Ok(Self {
            kind: ConfigKind::Constant,
            dimension,
            period: vec![1; dimension],
            values: vec![value],
            bounds,
        })
    }

    pub fn periodic(
        dimension: usize,
        period: Vec<usize>,
        values: Vec<f64>,
        bounds: (f64, f64),
    ) -> Result<Self, PotentialError> {
        check_bounds(bounds)?;
        if period.len() != dimension || period.iter().any(|&p| p == 0) {
            return Err(PotentialError::BadPeriod);
        }
        let cell: usize = period.iter().product();
        if values.len() != cell {
            return Err(PotentialError::ValueCountMismatch {
                expected: cell,
                got: values.len(),
            });
        }
        for &v in &values {
            if v < bounds.0 || v > bounds.1 {
                return Err(PotentialError::ValueOutOfBounds(v, bounds.0, bounds.1));
            }
        }
        let kind = if values.iter().all(|&v| v == values[0]) && cell == 1 {
            ConfigKind::Constant
        } else {
            ConfigKind::Periodic
        };
        Ok(Self {
            kind,
            dimension,
            period,
            values,
            bounds,
        })
    }

    pub fn boxed(
        dimension: usize,
        box_dims: Vec<usize>,
        values: Vec<f64>,
        bounds: (f64, f64),
    ) -> Result<Self, PotentialError> {
        let mut cfg = Self::periodic(dimension, box_dims, values, bounds)?;
        cfg.kind = ConfigKind::Boxed;
        Ok(cfg)
    }

    /// Coupling at lattice site `site` (wrapped into the period cell for
    /// periodic kinds; boxed configurations expect in-box sites).
    pub fn value_at(&self, site: &[i64]) -> f64 {
        debug_assert_eq!(site.len(), self.dimension);
        let mut flat = 0usize;
        for a in 0..self.dimension {
            let p = self.period[a] as i64;
            let s = site[a].rem_euclid(p) as usize;
            flat = flat * self.period[a] + s;
        }
        self.values[flat]
    }

    /// Shifted view omega~ = omega - omega^- (nonnegative couplings).
    pub fn shifted_from_lower(&self) -> Vec<f64> {
        self.values.iter().map(|v| v - self.bounds.0).collect()
    }

    /// Shifted view omega-bar = omega - omega^+ (nonpositive couplings).
    pub fn shifted_from_upper(&self) -> Vec<f64> {
        self.values.iter().map(|v| v - self.bounds.1).collect()
    }

    pub fn is_constant_at(&self, value: f64) -> bool {
        self.values.iter().all(|&v| v == value)
    }

    /// Short human-readable tag used in reports.
    pub fn label(&self) -> String {
        let vals: Vec<String> = self.values.iter().map(|v| format!("{v}")).collect();
        format!("p{:?}[{}]", self.period, vals.join(","))
    }
}

/// Cyclic translate of a row-major tuple on a d-dim period cell.
fn translate(values: &[f64], period: &[usize], shift: &[usize]) -> Vec<f64> {
    let d = period.len();
    let total = values.len();
    let mut out = vec![0.0; total];
    for flat in 0..total {
        let mut idx = vec![0usize; d];
        let mut rem = flat;
        for a in (0..d).rev() {
            idx[a] = rem % period[a];
            rem /= period[a];
        }
        let mut src = 0usize;
        for a in 0..d {
            let s = (idx[a] + shift[a]) % period[a];
            src = src * period[a] + s;
        }
        out[flat] = values[src];
    }
    out
}

/// Reduce a tuple to its fundamental period, componentwise.
fn fundamental_period(values: &[f64], period: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let d = period.len();
    let mut cur_period = period.to_vec();
    let mut cur = values.to_vec();
    for a in 0..d {
        'divisors: for div in 1..cur_period[a] {
            if cur_period[a] % div != 0 {
                continue;
            }
            // invariant under shift by `div` along axis a?
            let mut shift = vec![0usize; d];
            shift[a] = div;
            if translate(&cur, &cur_period, &shift) == cur {
                // restrict to the first `div` slices along axis a
                let mut new_period = cur_period.clone();
                new_period[a] = div;
                let total: usize = new_period.iter().product();
                let mut reduced = vec![0.0; total];
                for flat in 0..total {
                    let mut idx = vec![0usize; d];
                    let mut rem = flat;
                    for ax in (0..d).rev() {
                        idx[ax] = rem % new_period[ax];
                        rem /= new_period[ax];
                    }
                    let mut src = 0usize;
                    for ax in 0..d {
                        src = src * cur_period[ax] + idx[ax];
                    }
                    reduced[flat] = cur[src];
                }
                cur_period = new_period;
                cur = reduced;
                break 'divisors;
            }
        }
    }
    (cur_period, cur)
}

/// Lexicographically least cyclic translate of the tuple.
fn canonical_translate(values: &[f64], period: &[usize]) -> Vec<f64> {
    let d = period.len();
    let total: usize = period.iter().product();
    let mut best = values.to_vec();
    let mut shift = vec![0usize; d];
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..d).rev() {
            shift[a] = rem % period[a];
            rem /= period[a];
        }
        let cand = translate(values, period, &shift);
        if cand
            .iter()
            .zip(&best)
            .find_map(|(c, b)| match c.total_cmp(b) {
                std::cmp::Ordering::Equal => None,
                other => Some(other),
            })
            == Some(std::cmp::Ordering::Less)
        {
            best = cand;
        }
    }
    best
}

/// All configurations with period <= `max_period` componentwise over the
/// finite `alphabet`, deduplicated under lattice translation, in the
/// canonical order (period cell size, period vector, least translate).
pub fn enumerate_periodic_configs(
    alphabet: &[f64],
    max_period: &[usize],
    dimension: usize,
    bounds: (f64, f64),
    cap: usize,
) -> Result<Vec<DisorderConfiguration>, PotentialError> {
    check_bounds(bounds)?;
    if max_period.len() != dimension || max_period.iter().any(|&p| p == 0) {
        return Err(PotentialError::BadPeriod);
    }
    let mut alpha: Vec<f64> = alphabet.to_vec();
    alpha.sort_by(f64::total_cmp);
    alpha.dedup();
    if alpha.is_empty() || !alpha.contains(&bounds.0) || !alpha.contains(&bounds.1) {
        return Err(PotentialError::BadAlphabet);
    }
    for &v in &alpha {
        if v < bounds.0 || v > bounds.1 {
            return Err(PotentialError::ValueOutOfBounds(v, bounds.0, bounds.1));
        }
    }

    // key: (period, canonical tuple bit pattern)
    let mut seen: BTreeMap<(Vec<usize>, Vec<u64>), (Vec<usize>, Vec<f64>)> = BTreeMap::new();

    let mut periods: Vec<Vec<usize>> = vec![vec![]];
    for &pmax in max_period {
        periods = periods
            .into_iter()
            .flat_map(|base| {
                (1..=pmax).map(move |p| {
                    let mut b = base.clone();
                    b.push(p);
                    b
                })
            })
            .collect();
    }

    for period in periods {
        let cell: usize = period.iter().product();
        let raw = (alpha.len() as f64).powi(cell as i32);
        if raw > cap as f64 {
            return Err(PotentialError::ExplosionGuard {
                count: raw as usize,
                cap,
            });
        }
        let raw = alpha.len().pow(cell as u32);
        for code in 0..raw {
            let mut tuple = vec![0.0f64; cell];
            let mut rem = code;
            for slot in (0..cell).rev() {
                tuple[slot] = alpha[rem % alpha.len()];
                rem /= alpha.len();
            }
            let (fp, reduced) = fundamental_period(&tuple, &period);
            let canon = canonical_translate(&reduced, &fp);
            let key = (fp.clone(), canon.iter().map(|v| v.to_bits()).collect());
            seen.entry(key).or_insert((fp, canon));
            if seen.len() > cap {
                return Err(PotentialError::ExplosionGuard {
                    count: seen.len(),
                    cap,
                });
            }
        }
    }

    let mut out: Vec<DisorderConfiguration> = Vec::with_capacity(seen.len());
    let mut entries: Vec<(Vec<usize>, Vec<f64>)> = seen.into_values().collect();
    entries.sort_by(|a, b| {
        let ca: usize = a.0.iter().product();
        let cb: usize = b.0.iter().product();
        ca.cmp(&cb)
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| {
                a.1.iter()
                    .zip(&b.1)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != std::cmp::Ordering::Equal)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    for (fp, vals) in entries.drain(..) {
        out.push(DisorderConfiguration::periodic(
            dimension, fp, vals, bounds,
        )?);
    }
    Ok(out)
}

/// Law used by [`sample_random_config`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderLaw {
    /// Uniform over a finite alphabet.
    Finite(Vec<f64>),
    /// Continuous uniform on the bounds interval.
    Uniform,
}

/// Reproducible i.i.d. boxed configuration.
pub fn sample_random_config(
    seed: u64,
    law: &DisorderLaw,
    box_dims: &[usize],
    dimension: usize,
    bounds: (f64, f64),
) -> Result<DisorderConfiguration, PotentialError> {
    check_bounds(bounds)?;
    if box_dims.len() != dimension || box_dims.iter().any(|&b| b == 0) {
        return Err(PotentialError::BadPeriod);
    }
    let total: usize = box_dims.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(total);
    match law {
        DisorderLaw::Finite(alphabet) => {
            if alphabet.is_empty() {
                return Err(PotentialError::BadAlphabet);
            }
            for &v in alphabet {
                if v < bounds.0 || v > bounds.1 {
                    return Err(PotentialError::ValueOutOfBounds(v, bounds.0, bounds.1));
                }
            }
            for _ in 0..total {
                values.push(alphabet[rng.gen_range(0..alphabet.len())]);
            }
        }
        DisorderLaw::Uniform => {
            for _ in 0..total {
                values.push(rng.gen_range(bounds.0..=bounds.1));
            }
        }
    }
    DisorderConfiguration::boxed(dimension, box_dims.to_vec(), values, bounds)
}
