//! Tabular action values, visit counts and the observed set.
//!
//! The observed set is not stored separately: an entry is observed exactly
//! when its visit count is non-zero, which keeps the two from drifting apart.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::imc::ObservedMatrix;
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_GAMMA: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    q: DMatrix<f64>,
    visits: DMatrix<u32>,
    alpha: f64,
    gamma: f64,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize, alpha: f64, gamma: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Empty("Q-table dimensions"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("learning rate {alpha} not in (0, 1]")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!("discount {gamma} not in [0, 1)")));
        }
        Ok(Self {
            q: DMatrix::zeros(n_states, n_actions),
            visits: DMatrix::zeros(n_states, n_actions),
            alpha,
            gamma,
        })
    }

    pub fn n_states(&self) -> usize {
        self.q.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.q.ncols()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn visits(&self) -> &DMatrix<u32> {
        &self.visits
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.q[(state, action)]
    }

    pub fn visit_count(&self, state: usize, action: usize) -> u32 {
        self.visits[(state, action)]
    }

    pub fn is_observed(&self, state: usize, action: usize) -> bool {
        self.visits[(state, action)] > 0
    }

    pub fn observed_count(&self) -> usize {
        self.visits.iter().filter(|&&c| c > 0).count()
    }

    pub fn row(&self, state: usize) -> Vec<f64> {
        self.q.row(state).iter().copied().collect()
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.q.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn check(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.n_states() {
            return Err(Error::IndexOutOfRange { what: "state", index: state, bound: self.n_states() });
        }
        if action >= self.n_actions() {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                bound: self.n_actions(),
            });
        }
        Ok(())
    }

    /// One-step Q-learning update of `(state, action)`:
    /// `Q ← Q + α (r + γ·max Q(next, ·) − Q)`, with the bootstrap dropped on
    /// terminal transitions. Also counts the visit.
    pub fn update(
        &mut self,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
        done: bool,
    ) -> Result<()> {
        self.check(state, action)?;
        if next_state >= self.n_states() {
            return Err(Error::IndexOutOfRange {
                what: "next state",
                index: next_state,
                bound: self.n_states(),
            });
        }
        let bootstrap = if done { 0.0 } else { self.gamma * self.max_value(next_state) };
        let current = self.q[(state, action)];
        self.q[(state, action)] = current + self.alpha * (reward + bootstrap - current);
        self.visits[(state, action)] += 1;
        Ok(())
    }

    /// `Q̃ = Q / Nq` on visited entries, zero elsewhere.
    pub fn normalize(&self) -> NormalizedQ {
        let values = self.q.zip_map(&self.visits, |q, n| if n > 0 { q / n as f64 } else { 0.0 });
        NormalizedQ {
            values,
            mask: self.visits.map(|n| n > 0),
        }
    }

    /// Fraction of observed entries, and whether the observed count reaches
    /// `m·n·ln(m·n)` for feature dimensions `m`, `n`. The flag is only a
    /// diagnostic.
    pub fn observed_fraction(&self, state_dim: usize, action_dim: usize) -> ObservedFraction {
        let observed = self.observed_count();
        let total = self.n_states() * self.n_actions();
        let mn = (state_dim * action_dim) as f64;
        let threshold = if mn > 0.0 { mn * mn.ln() } else { 0.0 };
        ObservedFraction {
            fraction: observed as f64 / total as f64,
            observed,
            threshold,
            identifiable: observed as f64 >= threshold,
        }
    }

    /// Zero values, counts and the observed set; keep `α` and `γ`.
    pub fn reset(&mut self) {
        self.q.fill(0.0);
        self.visits.fill(0);
    }

    /// Text dump. Layout:
    ///
    /// ```text
    /// qtable <M> <N> <alpha> <gamma>
    /// <M lines of N values, row-major>
    /// <M lines of N visit counts, row-major>
    /// ```
    ///
    /// Values use Rust's shortest round-trip float formatting.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "qtable {} {} {} {}", self.n_states(), self.n_actions(), self.alpha, self.gamma)?;
        for s in 0..self.n_states() {
            let row: Vec<String> = self.q.row(s).iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        for s in 0..self.n_states() {
            let row: Vec<String> = self.visits.row(s).iter().map(u32::to_string).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String> {
            lines.next().ok_or_else(|| Error::Parse("truncated Q-table dump".into()))?.map_err(Error::from)
        };
        let header = next_line()?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "qtable" {
            return Err(Error::Parse(format!("bad Q-table header `{header}`")));
        }
        let parse_err = |e: &dyn std::fmt::Display| Error::Parse(format!("Q-table header: {e}"));
        let m: usize = fields[1].parse().map_err(|e| parse_err(&e))?;
        let n: usize = fields[2].parse().map_err(|e| parse_err(&e))?;
        let alpha: f64 = fields[3].parse().map_err(|e| parse_err(&e))?;
        let gamma: f64 = fields[4].parse().map_err(|e| parse_err(&e))?;
        let mut table = QTable::new(m, n, alpha, gamma)?;
        for s in 0..m {
            let line = next_line()?;
            let row = parse_row::<f64>(&line, n)?;
            for (a, v) in row.into_iter().enumerate() {
                table.q[(s, a)] = v;
            }
        }
        for s in 0..m {
            let line = next_line()?;
            let row = parse_row::<u32>(&line, n)?;
            for (a, c) in row.into_iter().enumerate() {
                table.visits[(s, a)] = c;
            }
        }
        Ok(table)
    }
}

fn parse_row<T: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let row = line
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
        .collect::<Result<Vec<T>>>()?;
    if row.len() != n {
        return Err(Error::Parse(format!("expected {n} entries per row, found {}", row.len())));
    }
    Ok(row)
}

/// Count-normalised values with their observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedQ {
    pub values: DMatrix<f64>,
    pub mask: DMatrix<bool>,
}

impl NormalizedQ {
    pub fn into_observed(self) -> ObservedMatrix {
        ObservedMatrix::from_parts_unchecked(self.values, self.mask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedFraction {
    pub fraction: f64,
    pub observed: usize,
    pub threshold: f64,
    pub identifiable: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_update_from_zero() {
        let mut t = QTable::new(4, 3, 0.5, 0.99).unwrap();
        t.update(0, 1, -1.0, 2, false).unwrap();
        assert_eq!(t.get(0, 1), -0.5);
        assert_eq!(t.visit_count(0, 1), 1);
        assert!(t.is_observed(0, 1));
    }

    #[test]
    fn bootstrapped_update() {
        let mut t = QTable::new(4, 3, 0.5, 0.99).unwrap();
        t.q[(0, 1)] = -0.5;
        t.q[(2, 0)] = 2.0;
        t.update(0, 1, -1.0, 2, false).unwrap();
        // −0.5 + 0.5·(−1 + 0.99·2 + 0.5)
        assert!((t.get(0, 1) - 0.24).abs() < 1e-12);
    }

    #[test]
    fn terminal_update_drops_bootstrap() {
        let mut t = QTable::new(2, 2, 1.0, 0.99).unwrap();
        t.q[(1, 0)] = 100.0;
        t.update(0, 0, 10.0, 1, true).unwrap();
        assert_eq!(t.get(0, 0), 10.0);
    }

    #[test]
    fn out_of_range() {
        let mut t = QTable::new(2, 2, 0.1, 0.9).unwrap();
        assert!(t.update(2, 0, 0.0, 0, false).is_err());
        assert!(t.update(0, 2, 0.0, 0, false).is_err());
        assert!(t.update(0, 0, 0.0, 5, false).is_err());
        assert_eq!(t.observed_count(), 0);
    }

    #[test]
    fn bad_hyperparameters() {
        assert!(QTable::new(2, 2, 0.0, 0.9).is_err());
        assert!(QTable::new(2, 2, 0.5, 1.0).is_err());
        assert!(QTable::new(0, 2, 0.5, 0.9).is_err());
    }

    #[test]
    fn normalization() {
        let mut t = QTable::new(3, 2, 0.1, 0.9).unwrap();
        t.q[(0, 0)] = -3.0;
        t.visits[(0, 0)] = 3;
        t.q[(1, 1)] = 10.0;
        t.visits[(1, 1)] = 4;
        let n = t.normalize();
        assert_eq!(n.values[(0, 0)], -1.0);
        assert_eq!(n.values[(1, 1)], 2.5);
        assert_eq!(n.values[(2, 0)], 0.0);
        assert!(n.mask[(0, 0)] && !n.mask[(2, 0)]);
        // input untouched
        assert_eq!(t.get(0, 0), -3.0);
    }

    #[test]
    fn observed_fraction_flag() {
        let mut t = QTable::new(252, 3, 0.1, 0.99).unwrap();
        let f = t.observed_fraction(2, 1);
        assert_eq!(f.fraction, 0.0);
        assert!(!f.identifiable);
        assert!((f.threshold - 2.0 * 2f64.ln()).abs() < 1e-12);
        t.update(0, 0, -1.0, 1, false).unwrap();
        assert!(!t.observed_fraction(2, 1).identifiable);
        t.update(1, 0, -1.0, 1, false).unwrap();
        assert!(t.observed_fraction(2, 1).identifiable);

        let mut full = QTable::new(2, 2, 0.1, 0.9).unwrap();
        for s in 0..2 {
            for a in 0..2 {
                full.update(s, a, 1.0, 0, true).unwrap();
            }
        }
        let f = full.observed_fraction(2, 1);
        assert_eq!(f.fraction, 1.0);
        assert!(f.identifiable);
    }

    #[test]
    fn reset_zeroes_and_keeps_hyperparameters() {
        let mut t = QTable::new(3, 2, 0.3, 0.7).unwrap();
        t.update(0, 0, 5.0, 1, false).unwrap();
        t.reset();
        assert!(t.values().iter().all(|&v| v == 0.0));
        assert_eq!(t.observed_count(), 0);
        assert!(t.normalize().values.iter().all(|&v| v == 0.0));
        assert_eq!((t.alpha(), t.gamma()), (0.3, 0.7));
    }

    #[test]
    fn replaying_a_transition() {
        let mut t = QTable::new(2, 2, 1.0, 0.0).unwrap();
        for _ in 0..7 {
            t.update(0, 1, 3.0, 0, false).unwrap();
        }
        assert_eq!(t.get(0, 1), 3.0);
        assert!((t.normalize().values[(0, 1)] - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn dump_rejects_garbage() {
        assert!(QTable::read_dump("nope 1 2".as_bytes()).is_err());
        assert!(QTable::read_dump("qtable 1 2 0.1 0.9\n1.0\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn dump_round_trip(updates in proptest::collection::vec((0usize..5, 0usize..3, -10.0f64..10.0, 0usize..5, any::<bool>()), 0..40)) {
            let mut t = QTable::new(5, 3, 0.25, 0.9).unwrap();
            for (s, a, r, s2, d) in updates {
                t.update(s, a, r, s2, d).unwrap();
            }
            let mut buf = Vec::new();
            t.write_dump(&mut buf).unwrap();
            prop_assert_eq!(QTable::read_dump(buf.as_slice()).unwrap(), t);
        }

        #[test]
        fn unobserved_entries_stay_zero(updates in proptest::collection::vec((0usize..6, 0usize..2, -5.0f64..5.0, 0usize..6, any::<bool>()), 0..60)) {
            let mut t = QTable::new(6, 2, 0.5, 0.95).unwrap();
            let mut observed = 0;
            for (s, a, r, s2, d) in updates {
                t.update(s, a, r, s2, d).unwrap();
                let now = t.observed_count();
                prop_assert!(now >= observed);
                observed = now;
                for s in 0..6 {
                    for a in 0..2 {
                        if !t.is_observed(s, a) {
                            prop_assert_eq!(t.get(s, a), 0.0);
                        }
                    }
                }
            }
        }
    }
}
