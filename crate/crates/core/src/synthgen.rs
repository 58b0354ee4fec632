//! Synthetic consumer populations with known segment structure.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::interaction::{split_by_masking, InteractionMatrices, SplitMatrices};
use crate::rng::{self, round_half_up, Domain};

/// A consumer segment: a preferred slice of the catalogue and a demand scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsumerType {
    pub name: char,
    /// Half-open preferred range as fractions of the catalogue size.
    pub pref_lo: f64,
    pub pref_hi: f64,
    pub alpha: f64,
}

impl ConsumerType {
    /// Broad taste, low demand.
    pub const A: ConsumerType = ConsumerType { name: 'A', pref_lo: 0.0, pref_hi: 0.8, alpha: 0.1 };
    /// Narrow premium slice, high demand.
    pub const B: ConsumerType = ConsumerType { name: 'B', pref_lo: 0.9, pref_hi: 1.0, alpha: 1.0 };
    pub const C: ConsumerType = ConsumerType { name: 'C', pref_lo: 0.6, pref_hi: 0.95, alpha: 0.4 };
    pub const D: ConsumerType = ConsumerType { name: 'D', pref_lo: 0.4, pref_hi: 0.6, alpha: 0.4 };

    /// Item index range `[lo, hi)` for a catalogue of `p` items.
    pub fn pref_range(&self, p: usize) -> std::ops::Range<usize> {
        round_half_up(self.pref_lo * p as f64)..round_half_up(self.pref_hi * p as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    I,
    II,
    III,
}

impl Scenario {
    pub fn types(self) -> &'static [ConsumerType] {
        const ALL: [ConsumerType; 4] = [ConsumerType::A, ConsumerType::B, ConsumerType::C, ConsumerType::D];
        match self {
            Scenario::I => &ALL[..2],
            Scenario::II => &ALL[..3],
            Scenario::III => &ALL,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::I => "I",
            Scenario::II => "II",
            Scenario::III => "III",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Scenario::I),
            "II" | "2" => Ok(Scenario::II),
            "III" | "3" => Ok(Scenario::III),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

/// How off-preference purchases enter a basket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OffPreference {
    /// Added on top of the preferred selection.
    #[default]
    Augment,
    /// Swapped in for randomly chosen preferred purchases, keeping the
    /// basket size fixed.
    Replace,
}

impl FromStr for OffPreference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "augment" => Ok(OffPreference::Augment),
            "replace" => Ok(OffPreference::Replace),
            other => Err(Error::Config(format!("unknown off-preference mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n_per_type: usize,
    pub n_items: usize,
    /// Upper bound of raw expenditure draws.
    pub max_spend: f64,
    pub theta: (f64, f64),
    /// Fraction of each basket held out for testing.
    pub beta: f64,
    pub offpref_fraction: f64,
    pub offpref_discount: f64,
    pub offpref_mode: OffPreference,
    pub seed: u64,
}

impl ScenarioSpec {
    pub const THETA_LOW: (f64, f64) = (0.50, 0.75);
    pub const THETA_HIGH: (f64, f64) = (0.85, 0.95);

    pub fn new(scenario: Scenario) -> Self {
        ScenarioSpec {
            scenario,
            n_per_type: 150,
            n_items: 1500,
            max_spend: 10_000.0,
            theta: Self::THETA_HIGH,
            beta: 0.95,
            offpref_fraction: 0.05,
            offpref_discount: 0.20,
            offpref_mode: OffPreference::default(),
            seed: 0,
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_per_type * self.scenario.types().len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let (lo, hi) = self.theta;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return bad(format!("theta interval [{lo}, {hi}] not within (0, 1]"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta {} outside (0, 1)", self.beta));
        }
        if !(0.0..1.0).contains(&self.offpref_fraction) {
            return bad(format!("off-preference fraction {} outside [0, 1)", self.offpref_fraction));
        }
        if !(0.0..1.0).contains(&self.offpref_discount) {
            return bad(format!("off-preference discount {} outside [0, 1)", self.offpref_discount));
        }
        if !(self.max_spend > 0.0 && self.max_spend.is_finite()) {
            return bad(format!("max spend {} must be positive", self.max_spend));
        }
        if self.n_per_type == 0 {
            return bad("n_per_type must be at least 1".into());
        }
        for t in self.scenario.types() {
            let r = t.pref_range(self.n_items);
            if r.is_empty() {
                return bad(format!("type {} has an empty preferred range at p = {}", t.name, self.n_items));
            }
            if self.offpref_fraction > 0.0 && r.len() == self.n_items {
                return bad(format!("type {} has no items outside its range", t.name));
            }
        }
        Ok(())
    }
}

/// A generated population with its train/test split and true segments.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub full: InteractionMatrices,
    pub split: SplitMatrices,
    /// Index into `scenario.types()` for each user.
    pub labels: Vec<usize>,
    pub scenario: Scenario,
}

impl SyntheticData {
    pub fn label_name(&self, u: usize) -> char {
        self.scenario.types()[self.labels[u]].name
    }

    pub fn write_labels<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "user_id,type")?;
        for (u, id) in self.full.users().iter().enumerate() {
            writeln!(w, "{id},{}", self.label_name(u))?;
        }
        Ok(())
    }
}

/// One consumer's basket, sorted by item.
fn consumer_basket(spec: &ScenarioSpec, t: &ConsumerType, c: usize) -> Vec<(usize, f64)> {
    let p = spec.n_items;
    let range = t.pref_range(p);
    let width = range.len();
    let mut r = rng::stream(spec.seed, Domain::Generate, c as u64);
    let (lo, hi) = spec.theta;
    let theta = lo + (hi - lo) * r.gen::<f64>();
    let n_sel = round_half_up(theta * width as f64).clamp(1, width);
    // gen::<f64>() is in [0, 1); flip it so draws are in (0, 1]
    let spend = |r: &mut rand_chacha::ChaCha8Rng| t.alpha * spec.max_spend * (1.0 - r.gen::<f64>());

    let selected = index::sample(&mut r, width, n_sel).into_vec();
    let mut basket: Vec<(usize, f64)> =
        selected.iter().map(|&i| (range.start + i, 0.0)).collect();
    for e in basket.iter_mut() {
        e.1 = spend(&mut r);
    }

    let outside = p - width;
    let n_off = round_half_up(spec.offpref_fraction * n_sel as f64).min(outside);
    if n_off > 0 {
        let slots = match spec.offpref_mode {
            OffPreference::Replace => index::sample(&mut r, n_sel, n_off).into_vec(),
            OffPreference::Augment => {
                basket.resize(n_sel + n_off, (0, 0.0));
                (n_sel..n_sel + n_off).collect()
            }
        };
        let off_items = index::sample(&mut r, outside, n_off).into_vec();
        let keep_discount = 1.0 - spec.offpref_discount;
        for (&slot, &o) in slots.iter().zip(&off_items) {
            let j = if o < range.start { o } else { o + width };
            basket[slot] = (j, spend(&mut r) * keep_discount);
        }
    }
    basket.sort_unstable_by_key(|e| e.0);
    basket
}

fn padded_ids(prefix: char, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len().max(4);
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Generate the population described by `spec`, then hold out a `beta`
/// fraction of every basket.
///
/// Users are laid out type by type; each consumer draws from its own stream,
/// so the result does not depend on `exec`.
pub fn generate(spec: &ScenarioSpec, exec: Exec) -> Result<SyntheticData> {
    spec.validate()?;
    let types = spec.scenario.types();
    let n = spec.n_users();
    let labels: Vec<usize> = (0..n).map(|c| c / spec.n_per_type).collect();
    let rows = exec.map(n, |c| consumer_basket(spec, &types[labels[c]], c));
    let full = InteractionMatrices::from_rows(
        padded_ids('c', n),
        padded_ids('i', spec.n_items),
        rows,
    )?;
    let split = split_by_masking(&full, spec.beta, spec.seed)?;
    Ok(SyntheticData {
        full,
        split,
        labels,
        scenario: spec.scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ScenarioSpec {
        ScenarioSpec {
            n_per_type: 20,
            n_items: 300,
            seed: 11,
            ..ScenarioSpec::new(scenario)
        }
    }

    #[test]
    fn ranges_at_default_size() {
        assert_eq!(ConsumerType::A.pref_range(1500), 0..1200);
        assert_eq!(ConsumerType::B.pref_range(1500), 1350..1500);
        assert_eq!(ConsumerType::C.pref_range(1500), 900..1425);
        assert_eq!(ConsumerType::D.pref_range(1500), 600..900);
    }

    #[test]
    fn scenario_one_shape() {
        let d = generate(&ScenarioSpec { seed: 3, ..ScenarioSpec::new(Scenario::I) }, Exec::Sequential).unwrap();
        assert_eq!(d.full.n_users(), 300);
        assert_eq!(d.full.n_items(), 1500);
        assert!((0..150).all(|u| d.label_name(u) == 'A'));
        assert!((150..300).all(|u| d.label_name(u) == 'B'));
    }

    #[test]
    fn off_preference_count_and_placement() {
        for mode in [OffPreference::Augment, OffPreference::Replace] {
            let spec = ScenarioSpec { offpref_mode: mode, ..small(Scenario::III) };
            let d = generate(&spec, Exec::Sequential).unwrap();
            for u in 0..d.full.n_users() {
                let t = spec.scenario.types()[d.labels[u]];
                let range = t.pref_range(spec.n_items);
                let basket = d.full.basket(u);
                let outside = basket.iter().filter(|j| !range.contains(j)).count();
                let selected = match mode {
                    OffPreference::Augment => basket.len() - outside,
                    OffPreference::Replace => basket.len(),
                };
                assert_eq!(outside, round_half_up(0.05 * selected as f64), "{mode:?} user {u}");
            }
        }
    }

    #[test]
    fn type_b_preferred_purchases_in_top_decile() {
        let spec = small(Scenario::I);
        let d = generate(&spec, Exec::Sequential).unwrap();
        let row = d.full.expenditure_row(spec.n_per_type);
        // off-preference items carry at most alpha*M*(1 - discount)
        let cap = 0.8 * spec.max_spend;
        for (&j, &m) in row.indices.iter().zip(row.values) {
            assert!(j >= 270 || m <= cap);
        }
    }

    #[test]
    fn deterministic_and_exec_independent() {
        let spec = small(Scenario::II);
        let a = generate(&spec, Exec::Sequential).unwrap();
        let b = generate(&spec, Exec::Parallel).unwrap();
        assert_eq!(a.full, b.full);
        assert_eq!(a.split.train, b.split.train);
        assert_eq!(a.split.test_baskets, b.split.test_baskets);
        let c = generate(&ScenarioSpec { seed: 12, ..spec }, Exec::Sequential).unwrap();
        assert_ne!(a.full, c.full);
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = small(Scenario::I);
        for bad in [
            ScenarioSpec { theta: (0.9, 0.5), ..base.clone() },
            ScenarioSpec { beta: 1.0, ..base.clone() },
            ScenarioSpec { n_per_type: 0, ..base.clone() },
            ScenarioSpec { n_items: 1, ..base.clone() },
        ] {
            assert!(generate(&bad, Exec::Sequential).is_err());
        }
    }

    #[test]
    fn labels_csv() {
        let spec = ScenarioSpec { n_per_type: 2, n_items: 40, ..ScenarioSpec::new(Scenario::I) };
        let d = generate(&spec, Exec::Sequential).unwrap();
        let mut out = Vec::new();
        d.write_labels(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "user_id,type\nc0000,A\nc0001,A\nc0002,B\nc0003,B\n"
        );
    }
}
