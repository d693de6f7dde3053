//! Inductive matrix completion by alternating multiplicative updates.
//!
//! The completed matrix is `Q̂ = X W Yᵀ` with the low-rank core `W = U Vᵀ`.
//! The cost is the squared residual on the observed entries plus the
//! projection distances of `U` and `V` to the previous solve's factors
//! (the anchors):
//!
//! ```text
//! J = ‖P_Ω(Q̃ − X U Vᵀ Yᵀ)‖²_F + λ_u (r − tr(U Uᵀ A Aᵀ)) + λ_v (r − tr(V Vᵀ B Bᵀ))
//! ```
//!
//! Each sweep applies, elementwise,
//!
//! ```text
//! U ← U ∘ Xᵀ Q̃ Y V / (Xᵀ P_Ω(X U Vᵀ Yᵀ) Y V − λ_u A Aᵀ U)
//! V ← V ∘ Yᵀ Q̃ᵀ X U / (Yᵀ P_Ω(X U Vᵀ Yᵀ)ᵀ X U − λ_v B Bᵀ V)
//! ```
//!
//! where `Q̃` is zero off Ω. With every entry observed the denominators are
//! `XᵀX U VᵀYᵀY V` and `YᵀY V UᵀXᵀX U`. Masking the reconstruction inside
//! the denominators makes the fixed points those of the masked cost above.
//!
//! Updates are multiplicative, so a zero entry stays zero and an entry only
//! changes sign when its ratio is negative. That cannot happen for
//! nonnegative data and side information with zero anchors.

use nalgebra::DMatrix;
use rand::distributions::Open01;
use rand::Rng as _;

use crate::{Error, Result, Rng};

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_DENOMINATOR_GUARD: f64 = 1e-8;

/// Partially observed matrix. Unobserved entries are stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix {
    values: DMatrix<f64>,
    weights: DMatrix<f64>,
}

impl ObservedMatrix {
    pub fn new(values: DMatrix<f64>, mask: DMatrix<bool>) -> Result<Self> {
        if values.shape() != mask.shape() {
            return Err(Error::DimensionMismatch(format!(
                "values {:?} vs mask {:?}",
                values.shape(),
                mask.shape()
            )));
        }
        Ok(Self::from_parts_unchecked(values, mask))
    }

    pub fn fully_observed(values: DMatrix<f64>) -> Self {
        let weights = DMatrix::from_element(values.nrows(), values.ncols(), 1.0);
        Self { values, weights }
    }

    pub(crate) fn from_parts_unchecked(values: DMatrix<f64>, mask: DMatrix<bool>) -> Self {
        let weights = mask.map(|m| if m { 1.0 } else { 0.0 });
        let values = values.component_mul(&weights);
        Self { values, weights }
    }

    /// Zero-filled values.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.weights[(row, col)] != 0.0
    }

    pub fn observed_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    fn mask_in_place(&self, m: &mut DMatrix<f64>) {
        m.component_mul_assign(&self.weights);
    }
}

/// State features `X` (M×m) and action features `Y` (N×n) as seen by the
/// solver.
#[derive(Debug, Clone, Copy)]
pub struct Features<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: &'a DMatrix<f64>,
}

impl<'a> From<&'a crate::discretize::SideInfo> for Features<'a> {
    fn from(s: &'a crate::discretize::SideInfo) -> Self {
        Self { x: &s.x, y: &s.y }
    }
}

/// `U` (m×r) and `V` (n×r); `W = U Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl FactorPair {
    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "U has rank {} but V has rank {}",
                u.ncols(),
                v.ncols()
            )));
        }
        Ok(Self { u, v })
    }

    pub fn zeros(m: usize, n: usize, rank: usize) -> Self {
        Self { u: DMatrix::zeros(m, rank), v: DMatrix::zeros(n, rank) }
    }

    /// Entries drawn i.i.d. from the open interval (0, 1).
    pub fn random(m: usize, n: usize, rank: usize, rng: &mut Rng) -> Self {
        let u = DMatrix::from_fn(m, rank, |_, _| rng.sample::<f64, _>(Open01));
        let v = DMatrix::from_fn(n, rank, |_, _| rng.sample::<f64, _>(Open01));
        Self { u, v }
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn w(&self) -> DMatrix<f64> {
        &self.u * self.v.transpose()
    }

    /// Orthonormal bases of the column spaces of `U` and `V`.
    pub fn orthonormalized(&self) -> Self {
        Self { u: orthonormal_basis(&self.u), v: orthonormal_basis(&self.v) }
    }

    /// Rescale column pairs so `‖U_j‖ = ‖V_j‖`; `W` is unchanged.
    fn balance(&mut self) {
        for j in 0..self.rank() {
            let nu = self.u.column(j).norm();
            let nv = self.v.column(j).norm();
            if nu > 0.0 && nv > 0.0 && nu.is_finite() && nv.is_finite() {
                let s = (nv / nu).sqrt();
                self.u.column_mut(j).scale_mut(s);
                self.v.column_mut(j).scale_mut(1.0 / s);
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

fn orthonormal_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.iter().all(|&x| x == 0.0) {
        return a.clone();
    }
    let q = a.clone().qr().q();
    // thin Q has min(rows, cols) columns; pad back to the factor's shape
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    out.columns_mut(0, q.ncols()).copy_from(&q);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImcConfig {
    pub lambda_u: f64,
    pub lambda_v: f64,
    /// `None` means `min(m, n)`.
    pub rank: Option<usize>,
    pub max_iterations: usize,
    /// Stop when the relative change of `J` between sweeps falls below this.
    pub tolerance: f64,
    pub denominator_guard: f64,
}

impl Default for ImcConfig {
    fn default() -> Self {
        Self {
            lambda_u: DEFAULT_LAMBDA,
            lambda_v: DEFAULT_LAMBDA,
            rank: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            denominator_guard: DEFAULT_DENOMINATOR_GUARD,
        }
    }
}

impl ImcConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda_u >= 0.0 && self.lambda_v >= 0.0) {
            return bad(format!("λ must be non-negative (got {}, {})", self.lambda_u, self.lambda_v));
        }
        if self.max_iterations == 0 {
            return bad("max iterations must be at least 1".into());
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if !(self.denominator_guard > 0.0) {
            return bad(format!("denominator guard {} must be positive", self.denominator_guard));
        }
        if self.rank == Some(0) {
            return bad("rank must be positive".into());
        }
        Ok(())
    }

    pub fn resolved_rank(&self, m: usize, n: usize) -> usize {
        self.rank.unwrap_or_else(|| m.min(n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedQ {
    pub q_hat: DMatrix<f64>,
    pub iterations: usize,
    pub cost: f64,
    pub converged: bool,
}

impl AugmentedQ {
    /// Greedy action for `state`; ties resolve to the lowest index.
    pub fn argmax(&self, state: usize) -> usize {
        argmax(self.q_hat.row(state).iter().copied())
    }
}

/// Index of the first maximum.
pub fn argmax<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub distance_u: f64,
    pub distance_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub augmented: AugmentedQ,
    pub factors: FactorPair,
    pub initial_cost: f64,
    pub trace: Vec<IterationRecord>,
}

fn check_dims(
    obs: &ObservedMatrix,
    side: Features<'_>,
    factors: &FactorPair,
    anchors: &FactorPair,
) -> Result<()> {
    let (rows, cols) = obs.shape();
    let mismatch = |msg: String| Err(Error::DimensionMismatch(msg));
    if side.x.nrows() != rows || side.y.nrows() != cols {
        return mismatch(format!(
            "Q̃ is {rows}×{cols} but X has {} rows and Y has {} rows",
            side.x.nrows(),
            side.y.nrows()
        ));
    }
    if factors.u.nrows() != side.x.ncols() || factors.v.nrows() != side.y.ncols() {
        return mismatch(format!(
            "U is {:?} and V is {:?} for feature dimensions m = {}, n = {}",
            factors.u.shape(),
            factors.v.shape(),
            side.x.ncols(),
            side.y.ncols()
        ));
    }
    if factors.u.ncols() != factors.v.ncols() {
        return mismatch("U and V have different ranks".into());
    }
    if anchors.u.shape() != factors.u.shape() || anchors.v.shape() != factors.v.shape() {
        return mismatch(format!(
            "anchors {:?}/{:?} do not match factors {:?}/{:?}",
            anchors.u.shape(),
            anchors.v.shape(),
            factors.u.shape(),
            factors.v.shape()
        ));
    }
    Ok(())
}

/// `X U Vᵀ Yᵀ`, evaluated as `(X U)(Y V)ᵀ`.
pub fn reconstruct(side: Features<'_>, factors: &FactorPair) -> DMatrix<f64> {
    (side.x * &factors.u) * (side.y * &factors.v).transpose()
}

/// `r − tr(A Aᵀ B Bᵀ)`, computed as `r − ‖Aᵀ B‖²_F`.
pub fn projection_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "projection distance between {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.ncols() as f64 - (a.transpose() * b).norm_squared())
}

pub fn cost_j(
    obs: &ObservedMatrix,
    side: Features<'_>,
    factors: &FactorPair,
    anchors: &FactorPair,
    lambda_u: f64,
    lambda_v: f64,
) -> Result<f64> {
    check_dims(obs, side, factors, anchors)?;
    let mut residual = obs.values() - reconstruct(side, factors);
    obs.mask_in_place(&mut residual);
    let mut j = residual.norm_squared();
    if lambda_u != 0.0 {
        j += lambda_u * projection_distance(&factors.u, &anchors.u)?;
    }
    if lambda_v != 0.0 {
        j += lambda_v * projection_distance(&factors.v, &anchors.v)?;
    }
    Ok(j)
}

fn guard(d: f64, eps: f64) -> f64 {
    if d.abs() < eps {
        if d < 0.0 {
            -eps
        } else {
            eps
        }
    } else {
        d
    }
}

fn apply_ratio(
    current: &DMatrix<f64>,
    numerator: &DMatrix<f64>,
    denominator: &DMatrix<f64>,
    eps: f64,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let mut out = current.clone();
    for j in 0..out.ncols() {
        for i in 0..out.nrows() {
            let v = current[(i, j)] * (numerator[(i, j)] / guard(denominator[(i, j)], eps));
            if !v.is_finite() {
                return Err(Error::NonFinite { what, row: i, col: j });
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Multiplicative update of `U` with `V` held fixed.
pub fn update_u(
    obs: &ObservedMatrix,
    side: Features<'_>,
    factors: &FactorPair,
    anchors: &FactorPair,
    lambda: f64,
    denominator_guard: f64,
) -> Result<DMatrix<f64>> {
    check_dims(obs, side, factors, anchors)?;
    let yv = side.y * &factors.v;
    let numerator = side.x.tr_mul(&(obs.values() * &yv));
    let mut recon = (side.x * &factors.u) * yv.transpose();
    obs.mask_in_place(&mut recon);
    let mut denominator = side.x.tr_mul(&(recon * &yv));
    if lambda != 0.0 {
        denominator -= (&anchors.u * anchors.u.tr_mul(&factors.u)) * lambda;
    }
    apply_ratio(&factors.u, &numerator, &denominator, denominator_guard, "U")
}

/// Multiplicative update of `V` with `U` held fixed.
pub fn update_v(
    obs: &ObservedMatrix,
    side: Features<'_>,
    factors: &FactorPair,
    anchors: &FactorPair,
    lambda: f64,
    denominator_guard: f64,
) -> Result<DMatrix<f64>> {
    check_dims(obs, side, factors, anchors)?;
    let xu = side.x * &factors.u;
    let numerator = side.y.tr_mul(&obs.values().tr_mul(&xu));
    let mut recon = xu.clone() * (side.y * &factors.v).transpose();
    obs.mask_in_place(&mut recon);
    let mut denominator = side.y.tr_mul(&recon.tr_mul(&xu));
    if lambda != 0.0 {
        denominator -= (&anchors.v * anchors.v.tr_mul(&factors.v)) * lambda;
    }
    apply_ratio(&factors.v, &numerator, &denominator, denominator_guard, "V")
}

/// Complete `obs` from the side information.
///
/// Without `previous` the factors start uniform on (0, 1) and the anchors
/// are zero. With `previous` the solve warm-starts from those factors and
/// anchors to orthonormal bases of their column spaces. The returned factors
/// are the lowest-cost iterate seen, not necessarily the last one.
pub fn solve(
    obs: &ObservedMatrix,
    side: Features<'_>,
    previous: Option<&FactorPair>,
    config: &ImcConfig,
    rng: &mut Rng,
) -> Result<Solution> {
    config.validate()?;
    if obs.observed_count() == 0 {
        return Err(Error::Empty("observed set"));
    }
    let (m, n) = (side.x.ncols(), side.y.ncols());
    let rank = config.resolved_rank(m, n);
    if rank > m.min(n) {
        return Err(Error::InvalidConfig(format!("rank {rank} exceeds min(m, n) = {}", m.min(n))));
    }
    let (mut factors, anchors) = match previous {
        None => (FactorPair::random(m, n, rank, rng), FactorPair::zeros(m, n, rank)),
        Some(p) => {
            if p.u.shape() != (m, rank) || p.v.shape() != (n, rank) {
                return Err(Error::DimensionMismatch(format!(
                    "previous factors {:?}/{:?} do not match m = {m}, n = {n}, r = {rank}",
                    p.u.shape(),
                    p.v.shape()
                )));
            }
            if !p.all_finite() {
                return Err(Error::NonFinite { what: "previous factors", row: 0, col: 0 });
            }
            (p.clone(), p.orthonormalized())
        }
    };

    let cost = |f: &FactorPair| cost_j(obs, side, f, &anchors, config.lambda_u, config.lambda_v);
    let initial_cost = cost(&factors)?;
    if !initial_cost.is_finite() {
        return Err(Error::Divergence { iteration: 0 });
    }

    let mut best = (initial_cost, factors.clone());
    let mut previous_cost = initial_cost;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iteration in 1..=config.max_iterations {
        iterations = iteration;
        factors.u = update_u(obs, side, &factors, &anchors, config.lambda_u, config.denominator_guard)?;
        factors.v = update_v(obs, side, &factors, &anchors, config.lambda_v, config.denominator_guard)?;
        factors.balance();
        let j = cost(&factors)?;
        if !j.is_finite() {
            return Err(Error::Divergence { iteration });
        }
        trace.push(IterationRecord {
            iteration,
            cost: j,
            distance_u: projection_distance(&factors.u, &anchors.u)?,
            distance_v: projection_distance(&factors.v, &anchors.v)?,
        });
        if j < best.0 {
            best = (j, factors.clone());
        }
        let change = (j - previous_cost).abs() / previous_cost.abs().max(config.denominator_guard);
        if change < config.tolerance {
            converged = true;
            break;
        }
        previous_cost = j;
    }

    let (best_cost, best_factors) = best;
    Ok(Solution {
        augmented: AugmentedQ {
            q_hat: reconstruct(side, &best_factors),
            iterations,
            cost: best_cost,
            converged,
        },
        factors: best_factors,
        initial_cost,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn cost_zero_at_exact_fit() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let y = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let f = FactorPair::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), scalar(1.0)).unwrap();
        let side = Features { x: &x, y: &y };
        let obs = ObservedMatrix::fully_observed(reconstruct(side, &f));
        assert_eq!(cost_j(&obs, side, &f, &f, 1.0, 1.0).unwrap(), 0.0);
        let none = ObservedMatrix::new(DMatrix::zeros(3, 2), DMatrix::from_element(3, 2, false)).unwrap();
        assert_eq!(cost_j(&none, side, &f, &f, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn scalar_cost() {
        let (x, y) = (scalar(1.0), scalar(1.0));
        let side = Features { x: &x, y: &y };
        let obs = ObservedMatrix::fully_observed(scalar(2.0));
        let f = FactorPair::new(scalar(1.0), scalar(1.0)).unwrap();
        let anchors = FactorPair::zeros(1, 1, 1);
        assert_eq!(cost_j(&obs, side, &f, &anchors, 1.0, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn scalar_update_hits_fixed_point() {
        let (x, y) = (scalar(1.0), scalar(1.0));
        let side = Features { x: &x, y: &y };
        let obs = ObservedMatrix::fully_observed(scalar(2.0));
        let mut f = FactorPair::new(scalar(1.0), scalar(1.0)).unwrap();
        let anchors = FactorPair::zeros(1, 1, 1);
        f.u = update_u(&obs, side, &f, &anchors, 1.0, 1e-8).unwrap();
        assert_eq!(f.u[(0, 0)], 2.0);
        assert_eq!(reconstruct(side, &f)[(0, 0)], 2.0);
        // mirrored: start again and update V first
        let mut g = FactorPair::new(scalar(1.0), scalar(1.0)).unwrap();
        g.v = update_v(&obs, side, &g, &anchors, 1.0, 1e-8).unwrap();
        assert_eq!(g.v[(0, 0)], 2.0);
    }

    #[test]
    fn zero_entries_absorb() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.3, 2.0]);
        let y = DMatrix::from_row_slice(2, 1, &[-3.0, 4.0]);
        let side = Features { x: &x, y: &y };
        let obs = ObservedMatrix::fully_observed(DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 7.0]));
        let f = FactorPair::new(DMatrix::from_column_slice(2, 1, &[0.0, 0.7]), scalar(0.0)).unwrap();
        let anchors = FactorPair::zeros(2, 1, 1);
        let u = update_u(&obs, side, &f, &anchors, 1.0, 1e-8).unwrap();
        assert_eq!(u[(0, 0)], 0.0);
        let v = update_v(&obs, side, &f, &anchors, 1.0, 1e-8).unwrap();
        assert_eq!(v[(0, 0)], 0.0);
    }

    #[test]
    fn projection_distance_cases() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(projection_distance(&a, &a).unwrap().abs() < 1e-15);
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(projection_distance(&e1, &e2).unwrap(), 1.0);
        assert!(projection_distance(&a, &e1).is_err());
    }

    #[test]
    fn scalar_solve() {
        let (x, y) = (scalar(1.0), scalar(1.0));
        let side = Features { x: &x, y: &y };
        let obs = ObservedMatrix::fully_observed(scalar(2.0));
        let mut rng = crate::seeded_rng(3, 0);
        let sol = solve(&obs, side, None, &ImcConfig::default(), &mut rng).unwrap();
        assert!((sol.augmented.q_hat[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(sol.augmented.iterations <= 2);
        assert!(sol.augmented.converged);
    }

    #[test]
    fn empty_observation_rejected() {
        let (x, y) = (scalar(1.0), scalar(1.0));
        let obs = ObservedMatrix::new(scalar(0.0), DMatrix::from_element(1, 1, false)).unwrap();
        let mut rng = crate::seeded_rng(0, 0);
        let r = solve(&obs, Features { x: &x, y: &y }, None, &ImcConfig::default(), &mut rng);
        assert!(matches!(r, Err(Error::Empty(_))));
    }

    #[test]
    fn bad_config_rejected() {
        for cfg in [
            ImcConfig { max_iterations: 0, ..Default::default() },
            ImcConfig { tolerance: 0.0, ..Default::default() },
            ImcConfig { denominator_guard: 0.0, ..Default::default() },
            ImcConfig { lambda_u: -1.0, ..Default::default() },
            ImcConfig { rank: Some(0), ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn dimension_checks() {
        let x = DMatrix::zeros(3, 2);
        let y = DMatrix::from_element(2, 1, 1.0);
        let obs = ObservedMatrix::fully_observed(DMatrix::zeros(4, 2));
        let f = FactorPair::zeros(2, 1, 1);
        let r = cost_j(&obs, Features { x: &x, y: &y }, &f, &f, 1.0, 1.0);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        assert!(FactorPair::new(DMatrix::zeros(2, 1), DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn warm_start_rank_must_match() {
        let (x, y) = (DMatrix::from_element(2, 2, 1.0), DMatrix::from_element(2, 2, 1.0));
        let obs = ObservedMatrix::fully_observed(DMatrix::from_element(2, 2, 1.0));
        let prev = FactorPair::zeros(2, 2, 1);
        let mut rng = crate::seeded_rng(0, 0);
        let r = solve(&obs, Features { x: &x, y: &y }, Some(&prev), &ImcConfig::default(), &mut rng);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn argmax_ties_resolve_low() {
        assert_eq!(argmax([1.0, -2.0, 0.5]), 0);
        assert_eq!(argmax([3.0, 3.0, 3.0]), 0);
        assert_eq!(argmax([0.0, 2.0, 2.0]), 1);
    }

    #[test]
    fn balance_keeps_w() {
        let mut rng = crate::seeded_rng(9, 0);
        let mut f = FactorPair::random(4, 3, 2, &mut rng);
        f.u *= 50.0;
        let w = f.w();
        f.balance();
        assert!((f.w() - w).norm() < 1e-12);
        for j in 0..2 {
            assert!((f.u.column(j).norm() - f.v.column(j).norm()).abs() < 1e-12);
        }
    }
}
