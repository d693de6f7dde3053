//! Uniform grid binning of continuous observations and the side-information
//! matrices built from it.
//!
//! Bins are half-open `[lower + i·width, lower + (i+1)·width)`, labelled by
//! their lower edge (`lower + i·width`), and the upper edge of the range is
//! folded into the last bin. State indices are row-major with the last
//! dimension contiguous.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::envs::{cartpole, mountain_car, EnvId};
use crate::{Error, Result};

/// Slack added before flooring so that a bin label maps back to its own bin
/// despite rounding in `lower + i·width`.
const BIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, width: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && width.is_finite()) {
            return Err(Error::InvalidConfig("grid bounds must be finite".into()));
        }
        if width <= 0.0 {
            return Err(Error::InvalidConfig(format!("bin width {width} must be positive")));
        }
        if lower >= upper {
            return Err(Error::InvalidConfig(format!(
                "grid lower bound {lower} must be below upper bound {upper}"
            )));
        }
        Ok(Self { lower, upper, width })
    }

    /// Axis split into `bins` equal bins.
    pub fn with_bins(lower: f64, upper: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("bin count must be positive".into()));
        }
        Self::new(lower, upper, (upper - lower) / bins as f64)
    }

    pub fn bins(&self) -> usize {
        (((self.upper - self.lower) / self.width) - BIN_SLACK).ceil().max(1.0) as usize
    }

    pub fn bin(&self, value: f64) -> usize {
        let v = value.clamp(self.lower, self.upper);
        let raw = ((v - self.lower) / self.width + BIN_SLACK).floor();
        (raw.max(0.0) as usize).min(self.bins() - 1)
    }

    pub fn label(&self, bin: usize) -> f64 {
        self.lower + bin as f64 * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidConfig("grid needs at least one dimension".into()));
        }
        Ok(Self { axes })
    }

    /// Position 0.1-wide bins over [−1.2, 0.6], velocity 0.01-wide bins over
    /// [−0.07, 0.07]: 18 × 14 = 252 states.
    pub fn mountain_car() -> Self {
        use mountain_car::*;
        Self {
            axes: vec![
                Axis::new(MIN_POSITION, MAX_POSITION, 0.1).unwrap(),
                Axis::new(-MAX_SPEED, MAX_SPEED, 0.01).unwrap(),
            ],
        }
    }

    /// Eight bins per dimension over the observation box, with both
    /// velocities clamped to [−3, 3]: 8⁴ = 4096 states.
    pub fn cartpole() -> Self {
        use cartpole::*;
        let theta = THETA_BOUND_DEG.to_radians();
        Self {
            axes: vec![
                Axis::with_bins(-X_BOUND, X_BOUND, 8).unwrap(),
                Axis::with_bins(-3.0, 3.0, 8).unwrap(),
                Axis::with_bins(-theta, theta, 8).unwrap(),
                Axis::with_bins(-3.0, 3.0, 8).unwrap(),
            ],
        }
    }

    pub fn for_env(env: EnvId) -> Self {
        match env {
            EnvId::MountainCar => Self::mountain_car(),
            EnvId::CartPole => Self::cartpole(),
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn bins_per_dim(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::bins).collect()
    }

    pub fn n_states(&self) -> usize {
        self.axes.iter().map(Axis::bins).product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for d in (0..self.dim().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.axes[d + 1].bins();
        }
        strides
    }

    pub fn state_index(&self, observation: &[f64]) -> Result<usize> {
        if observation.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observation has {} components, grid has {} dimensions",
                observation.len(),
                self.dim()
            )));
        }
        Ok(self
            .axes
            .iter()
            .zip(self.strides())
            .zip(observation)
            .map(|((axis, stride), &v)| axis.bin(v) * stride)
            .sum())
    }

    /// Label tuple of state `index` (inverse of [`GridSpec::state_index`]).
    pub fn bin_center(&self, index: usize) -> Result<Vec<f64>> {
        let n = self.n_states();
        if index >= n {
            return Err(Error::IndexOutOfRange { what: "state", index, bound: n });
        }
        let mut rest = index;
        Ok(self
            .axes
            .iter()
            .zip(self.strides())
            .map(|(axis, stride)| {
                let bin = rest / stride;
                rest %= stride;
                axis.label(bin)
            })
            .collect())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.axes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}:{}", a.lower, a.upper, a.width)?;
        }
        Ok(())
    }
}

/// Parses `lower:upper:width` per dimension, comma-separated.
impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .split(',')
            .map(|part| {
                let fields: Vec<f64> = part
                    .split(':')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("grid `{part}`: {e}")))
                    })
                    .collect::<Result<_>>()?;
                match fields.as_slice() {
                    &[lo, hi, w] => Axis::new(lo, hi, w),
                    _ => Err(Error::Parse(format!(
                        "grid dimension `{part}` must be lower:upper:width"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        GridSpec::new(axes)
    }
}

/// State features `X` (M×m) and action features `Y` (N×n).
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfo {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl SideInfo {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.ncols() == 0 || y.ncols() == 0 || x.nrows() == 0 || y.nrows() == 0 {
            return Err(Error::Empty("side information"));
        }
        if let Some(a) = (0..y.nrows()).find(|&a| y.row(a).iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidConfig(format!("action feature row {a} is zero")));
        }
        Ok(Self { x, y })
    }

    pub fn for_env(env: EnvId, grid: &GridSpec, action_epsilon: f64) -> Result<Self> {
        Self::new(
            build_state_features(grid),
            build_action_features(env, action_epsilon)?,
        )
    }

    pub fn n_states(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.y.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn action_dim(&self) -> usize {
        self.y.ncols()
    }
}

pub fn build_state_features(grid: &GridSpec) -> DMatrix<f64> {
    let n = grid.n_states();
    let mut x = DMatrix::zeros(n, grid.dim());
    for s in 0..n {
        for (d, v) in grid.bin_center(s).expect("index below n_states").into_iter().enumerate() {
            x[(s, d)] = v;
        }
    }
    x
}

/// CartPole: `[−10, 10]ᵀ`. MountainCar: `[−10+ε, ε, 10+ε]ᵀ`; the shift keeps
/// the no-op row away from zero and `ε = 0` is rejected.
pub fn build_action_features(env: EnvId, epsilon: f64) -> Result<DMatrix<f64>> {
    match env {
        EnvId::CartPole => Ok(DMatrix::from_column_slice(2, 1, &[-10.0, 10.0])),
        EnvId::MountainCar => {
            if epsilon == 0.0 || !epsilon.is_finite() {
                return Err(Error::InvalidConfig(
                    "MountainCar action shift must be finite and non-zero".into(),
                ));
            }
            Ok(DMatrix::from_column_slice(
                3,
                1,
                &[-10.0 + epsilon, epsilon, 10.0 + epsilon],
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mountain_car_grid_shape() {
        let g = GridSpec::mountain_car();
        assert_eq!(g.bins_per_dim(), vec![18, 14]);
        assert_eq!(g.n_states(), 252);
    }

    #[test]
    fn mountain_car_indices() {
        let g = GridSpec::mountain_car();
        assert_eq!(g.state_index(&[-1.2, -0.07]).unwrap(), 0);
        assert_eq!(g.state_index(&[-0.53, 0.012]).unwrap(), 6 * 14 + 8);
        assert_eq!(g.state_index(&[0.6, 0.07]).unwrap(), 251);
        // out of range observations clamp into the edge bins
        assert_eq!(g.state_index(&[5.0, 1.0]).unwrap(), 251);
        assert_eq!(g.state_index(&[-5.0, -1.0]).unwrap(), 0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = GridSpec::mountain_car();
        assert!(matches!(g.state_index(&[0.0]), Err(Error::DimensionMismatch(_))));
        assert!(g.bin_center(252).is_err());
    }

    #[test]
    fn state_feature_rows() {
        let x = build_state_features(&GridSpec::mountain_car());
        assert_eq!(x.shape(), (252, 2));
        assert!((x[(0, 0)] + 1.2).abs() < 1e-12 && (x[(0, 1)] + 0.07).abs() < 1e-12);
        assert!((x[(251, 0)] - 0.5).abs() < 1e-12 && (x[(251, 1)] - 0.06).abs() < 1e-12);
    }

    #[test]
    fn two_bin_grid() {
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 0.5).unwrap()]).unwrap();
        let x = build_state_features(&g);
        assert_eq!(x, DMatrix::from_column_slice(2, 1, &[0.0, 0.5]));
    }

    #[test]
    fn action_features() {
        let y = build_action_features(EnvId::CartPole, 1.0).unwrap();
        assert_eq!(y.as_slice(), &[-10.0, 10.0]);
        let y = build_action_features(EnvId::MountainCar, 1.0).unwrap();
        assert_eq!(y.as_slice(), &[-9.0, 1.0, 11.0]);
        assert!(build_action_features(EnvId::MountainCar, 0.0).is_err());
        assert!(SideInfo::new(DMatrix::zeros(2, 1), DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn cartpole_grid_shape() {
        let g = GridSpec::cartpole();
        assert_eq!(g.n_states(), 4096);
        let s = SideInfo::for_env(EnvId::CartPole, &g, 1.0).unwrap();
        assert_eq!((s.n_states(), s.n_actions(), s.state_dim(), s.action_dim()), (4096, 2, 4, 1));
    }

    #[test]
    fn invalid_axes() {
        assert!(Axis::new(0.0, 1.0, 0.0).is_err());
        assert!(Axis::new(1.0, 1.0, 0.1).is_err());
        assert!(GridSpec::new(vec![]).is_err());
    }

    #[test]
    fn grid_text_round_trip() {
        for g in [GridSpec::mountain_car(), GridSpec::cartpole()] {
            assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
        }
        assert!("1:2".parse::<GridSpec>().is_err());
    }

    #[test]
    fn labels_map_back_to_their_bins() {
        for g in [GridSpec::mountain_car(), GridSpec::cartpole()] {
            for s in 0..g.n_states() {
                assert_eq!(g.state_index(&g.bin_center(s).unwrap()).unwrap(), s);
            }
        }
    }

    proptest! {
        #[test]
        fn same_bin_same_index(p in -1.2f64..0.6, v in -0.07f64..0.07, dp in 0.0f64..1.0, dv in 0.0f64..1.0) {
            let g = GridSpec::mountain_car();
            let s = g.state_index(&[p, v]).unwrap();
            prop_assert!(s < g.n_states());
            // a second point inside the same cell maps to the same index
            let c = g.bin_center(s).unwrap();
            let q = [c[0] + 0.1 * dp * 0.99, c[1] + 0.01 * dv * 0.99];
            prop_assert_eq!(g.state_index(&q).unwrap(), s);
        }
    }
}
