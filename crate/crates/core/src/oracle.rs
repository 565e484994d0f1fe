//! Cost-sequence generators, comparator paths, and offline optimum solvers.
//!
//! The solvers here form the independent side of every weak-duality and
//! bound check: they never look at dual variables, only at the primal
//! programs. Numeric solvers return feasible paths, so their values are
//! always valid upper bounds on the true offline optimum, which is the safe
//! direction for weak-duality comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::norm::{dual_exponent, norm, NormSpec};
use crate::vector::Vector;

const SOLVER_MAX_ITERS: usize = 100_000;
const SOLVER_SEGMENT_ITERS: usize = 50;
const SOLVER_MIN_PATH_ITERS: usize = 250;
const SOLVER_STALL_TOL: f64 = 3e-8;
// Path solvers sweep every round each iteration, so a fixed iteration cap
// would make long horizons quadratically expensive. Budgeting total work
// keeps one call roughly constant-time while leaving short horizons with
// tens of thousands of iterations, where the accuracy actually matters.
const SOLVER_PATH_WORK: usize = 160_000;

fn path_iteration_budget(t_len: usize) -> usize {
    (SOLVER_PATH_WORK / t_len.max(1)).clamp(SOLVER_MIN_PATH_ITERS, SOLVER_MAX_ITERS)
}

/// Shapes of generated cost sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModelKind {
    /// Independent entries uniform in `[lo, hi)`.
    UniformRandom { lo: f64, hi: f64 },
    /// Every coordinate costs 1 except a rotating cheap one; the cheap
    /// index advances every `period` rounds.
    BestExpertSwitcher { period: usize },
    /// All-zero rounds except round `t` (1-based), where every coordinate
    /// costs `magnitude`.
    SingleSpike { t: usize, magnitude: f64 },
    /// Unit direction rotating through the first two coordinates, scaled by
    /// `magnitude`; alternating sign in dimension one.
    AdversarialRadial { magnitude: f64 },
    /// Costs replayed from a text file: one round per line, whitespace
    /// separated entries, `#` starts a comment.
    FileReplay { path: String },
}

/// A cost-sequence generator specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: CostModelKind,
    /// Force nonnegative entries (required by one-lookahead scenarios).
    /// Generated entries are clamped at zero; replayed files are validated
    /// instead, because silently rewriting user data would hide mistakes.
    pub nonneg: bool,
    pub seed: u64,
}

/// Generates `t_len` cost vectors of dimension `n`. Deterministic for a
/// fixed model (including seed).
pub fn gen_costs(model: &CostModel, t_len: usize, n: usize) -> Result<Vec<Vector>> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let clamp = |v: f64| if model.nonneg { v.max(0.0) } else { v };
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let costs: Vec<Vector> = match &model.kind {
        CostModelKind::UniformRandom { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "uniform cost range must satisfy lo < hi, got [{lo}, {hi})"
                )));
            }
            (0..t_len)
                .map(|_| {
                    Vector::computed(
                        (0..n).map(|_| clamp(rng.gen_range(*lo..*hi))).collect(),
                        "uniform costs",
                    )
                })
                .collect::<Result<_>>()?
        }
        CostModelKind::BestExpertSwitcher { period } => {
            if *period == 0 {
                return Err(Error::InvalidInput("switch period must be at least 1".into()));
            }
            (0..t_len)
                .map(|t| {
                    let cheap = (t / period) % n;
                    Vector::computed(
                        (0..n).map(|i| if i == cheap { 0.0 } else { 1.0 }).collect(),
                        "switcher costs",
                    )
                })
                .collect::<Result<_>>()?
        }
        CostModelKind::SingleSpike { t, magnitude } => {
            if *t == 0 || *t > t_len {
                return Err(Error::InvalidInput(format!(
                    "spike round {t} outside 1..={t_len}"
                )));
            }
            if !magnitude.is_finite() {
                return Err(Error::InvalidInput("spike magnitude must be finite".into()));
            }
            (1..=t_len)
                .map(|round| {
                    let m = if round == *t { clamp(*magnitude) } else { 0.0 };
                    Vector::computed(vec![m; n], "spike costs")
                })
                .collect::<Result<_>>()?
        }
        CostModelKind::AdversarialRadial { magnitude } => {
            if !magnitude.is_finite() || *magnitude <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "radial magnitude must be positive, got {magnitude}"
                )));
            }
            // Golden-angle rotation keeps consecutive directions far apart.
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            (0..t_len)
                .map(|t| {
                    let mut c = vec![0.0; n];
                    if n == 1 {
                        c[0] = if t % 2 == 0 { *magnitude } else { -magnitude };
                    } else {
                        let angle = golden * t as f64;
                        c[0] = magnitude * angle.cos();
                        c[1] = magnitude * angle.sin();
                    }
                    Vector::computed(c.into_iter().map(clamp).collect(), "radial costs")
                })
                .collect::<Result<_>>()?
        }
        CostModelKind::FileReplay { path } => {
            let raw = std::fs::read_to_string(path)?;
            let mut rows = Vec::new();
            for (line_no, line) in raw.lines().enumerate() {
                let stripped = line.split('#').next().unwrap_or("").trim();
                if stripped.is_empty() {
                    continue;
                }
                let entries: Vec<f64> = stripped
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>().map_err(|_| {
                            Error::InvalidInput(format!(
                                "{path}:{}: cannot parse cost entry {tok:?}",
                                line_no + 1
                            ))
                        })
                    })
                    .collect::<Result<_>>()?;
                if entries.len() != n {
                    return Err(Error::InvalidInput(format!(
                        "{path}:{}: expected {n} entries, found {}",
                        line_no + 1,
                        entries.len()
                    )));
                }
                if model.nonneg {
                    if let Some(bad) = entries.iter().find(|e| **e < 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "{path}:{}: negative cost {bad} in a nonnegative sequence",
                            line_no + 1
                        )));
                    }
                }
                rows.push(Vector::new(entries)?);
            }
            if rows.len() < t_len {
                return Err(Error::InvalidInput(format!(
                    "{path}: needs at least {t_len} cost rows, found {}",
                    rows.len()
                )));
            }
            rows.truncate(t_len);
            rows
        }
    };
    Ok(costs)
}

/// A comparator trajectory with its measured movement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparatorPath {
    pub points: Vec<Vector>,
    /// Raw `sum_t ||u_t - u_{t-1}||_1`.
    pub drift_l1: f64,
    /// Raw `sum_t ||u_t - u_{t-1}||_p` in the body's own exponent
    /// (equals `drift_l1` on the simplex).
    pub drift_lp: f64,
}

impl ComparatorPath {
    /// Wraps a point sequence, measuring both drift totals and checking
    /// feasibility of every point.
    pub fn from_points(points: Vec<Vector>, body: &Body) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("comparator path is empty".into()));
        }
        for u in &points {
            if !body.contains(u, 1e-9)? {
                return Err(Error::InvalidInput(format!(
                    "comparator point infeasible: residual {:.3e}",
                    body.feasibility_residual(u)?
                )));
            }
        }
        let p = match body {
            Body::Simplex { .. } => NormSpec::Finite(1.0),
            Body::PBall { p, .. } => p.clone(),
        };
        let one = NormSpec::Finite(1.0);
        let mut drift_l1 = 0.0;
        let mut drift_lp = 0.0;
        for w in points.windows(2) {
            let d = w[1].sub(&w[0])?;
            drift_l1 += norm(d.as_slice(), &one);
            drift_lp += norm(d.as_slice(), &p);
        }
        Ok(ComparatorPath {
            points,
            drift_l1,
            drift_lp,
        })
    }

    /// Simplex movement convention: half the raw l1 drift, which counts
    /// only the incremental mass gains.
    pub fn halved_l1_drift(&self) -> f64 {
        0.5 * self.drift_l1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `sum_t c_t . u_{t-1}`: the comparator holds `u_{t-1}` when `c_t`
    /// lands (zero-lookahead accounting). Needs one point per round.
    pub fn service_before(&self, costs: &[Vector]) -> Result<f64> {
        if costs.len() != self.points.len() {
            return Err(Error::InvalidInput(format!(
                "path has {} points, cost sequence has {} rounds",
                self.points.len(),
                costs.len()
            )));
        }
        let mut total = 0.0;
        for (c, u) in costs.iter().zip(&self.points) {
            total += c.dot(u)?;
        }
        Ok(total)
    }

    /// `sum_t c_t . u_t` with `u_t` the point chosen after seeing `c_t`
    /// (one-lookahead accounting). Needs one point per round.
    pub fn service_at(&self, costs: &[Vector]) -> Result<f64> {
        self.service_before(costs)
    }
}

/// Shapes of generated comparator paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparatorKind {
    /// One fixed feasible point (zero drift).
    Constant,
    /// Piecewise-constant vertex path on the simplex that changes vertex
    /// `switches` times at evenly spaced rounds.
    SwitchingVertices { switches: usize },
    /// Shuttle between two points of a ball along a fixed direction,
    /// spending the movement budget exactly.
    Geodesic,
}

/// Generates a feasible comparator path of `t_len` points whose measured
/// drift (halved l1 on the simplex, raw p-norm on balls) stays within
/// `l_budget`.
pub fn gen_comparator_path(
    kind: &ComparatorKind,
    body: &Body,
    t_len: usize,
    l_budget: f64,
    seed: u64,
) -> Result<ComparatorPath> {
    if t_len == 0 {
        return Err(Error::InvalidInput("path length must be at least 1".into()));
    }
    if !l_budget.is_finite() || l_budget < 0.0 {
        return Err(Error::InvalidInput(format!(
            "drift budget must be nonnegative, got {l_budget}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vector> = match (kind, body) {
        (ComparatorKind::Constant, _) => {
            let u = random_feasible_point(body, &mut rng)?;
            vec![u; t_len]
        }
        (ComparatorKind::SwitchingVertices { switches }, Body::Simplex { dim }) => {
            if (*switches as f64) > l_budget {
                return Err(Error::InvalidInput(format!(
                    "{switches} vertex switches need a drift budget of at least {switches}, got {l_budget}"
                )));
            }
            if *switches > 0 && *dim < 2 {
                return Err(Error::InvalidInput(
                    "vertex switches need at least two coordinates".into(),
                ));
            }
            if (*switches as usize) >= t_len && *switches > 0 {
                return Err(Error::InvalidInput(format!(
                    "{switches} switches do not fit into {t_len} rounds"
                )));
            }
            let mut current = rng.gen_range(0..*dim);
            let mut verts = Vec::with_capacity(t_len);
            let segments = switches + 1;
            for j in 0..t_len {
                let segment = (j * segments) / t_len;
                if !verts.is_empty() && segment != ((j - 1) * segments) / t_len {
                    let mut next = rng.gen_range(0..*dim);
                    while next == current {
                        next = rng.gen_range(0..*dim);
                    }
                    current = next;
                }
                verts.push(Vector::unit(*dim, current)?);
            }
            verts
        }
        (ComparatorKind::SwitchingVertices { .. }, Body::PBall { .. }) => {
            return Err(Error::InvalidInput(
                "vertex-switching paths are defined on the simplex only".into(),
            ))
        }
        (ComparatorKind::Geodesic, Body::PBall { p, center, radius }) => {
            if t_len == 1 || l_budget == 0.0 {
                vec![center.clone(); t_len]
            } else {
                let step = l_budget / (t_len - 1) as f64;
                if step > 2.0 * radius {
                    return Err(Error::InvalidInput(format!(
                        "per-round movement {step:.3e} exceeds the ball diameter"
                    )));
                }
                let dir = random_unit_direction(center.dim(), p, &mut rng)?;
                let a = center.add_scaled(-0.5 * step, &dir)?;
                let b = center.add_scaled(0.5 * step, &dir)?;
                (0..t_len)
                    .map(|j| if j % 2 == 0 { a.clone() } else { b.clone() })
                    .collect()
            }
        }
        (ComparatorKind::Geodesic, Body::Simplex { .. }) => {
            return Err(Error::InvalidInput(
                "geodesic paths are defined on balls only".into(),
            ))
        }
    };
    ComparatorPath::from_points(points, body)
}

fn random_feasible_point(body: &Body, rng: &mut ChaCha8Rng) -> Result<Vector> {
    match body {
        Body::Simplex { dim } => {
            // Exponential weights normalize to a strictly positive point.
            let raw: Vec<f64> = (0..*dim)
                .map(|_| -(rng.gen_range(1e-9..1.0f64)).ln())
                .collect();
            let sum: f64 = raw.iter().sum();
            Vector::computed(raw.into_iter().map(|r| r / sum).collect(), "random simplex point")
        }
        Body::PBall { p, center, radius } => {
            let dir = random_unit_direction(center.dim(), p, rng)?;
            let scale = rng.gen_range(0.0..1.0) * radius;
            center.add_scaled(scale, &dir)
        }
    }
}

fn random_unit_direction(n: usize, p: &NormSpec, rng: &mut ChaCha8Rng) -> Result<Vector> {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = norm(&raw, p);
        if len > 1e-6 {
            return Vector::computed(raw.iter().map(|r| r / len).collect(), "unit direction");
        }
    }
}

/// Outcome of a numeric offline solve. `value` is always attained by the
/// feasible `path`, so it upper-bounds the true optimum even when the
/// solver stopped at the iteration cap (`converged = false`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub path: ComparatorPath,
    pub converged: bool,
    pub iterations: usize,
}

/// Exact minimizer of `sum_t c_t . u` over the body: best single expert on
/// the simplex, the dual-norm extremal point on balls.
pub fn offline_fixed_opt(costs: &[Vector], body: &Body) -> Result<(Vector, f64)> {
    if costs.is_empty() {
        return Err(Error::InvalidInput("cost sequence is empty".into()));
    }
    let n = body.dim();
    let mut total = vec![0.0; n];
    for c in costs {
        if c.dim() != n {
            return Err(Error::DimensionMismatch(
                "cost dimension does not match the body".into(),
            ));
        }
        for (acc, ci) in total.iter_mut().zip(c.iter()) {
            *acc += ci;
        }
    }
    let total = Vector::computed(total, "cost column sums")?;
    match body {
        Body::Simplex { dim } => {
            let (best, value) = total
                .iter()
                .enumerate()
                .fold((0usize, f64::INFINITY), |(bi, bv), (i, v)| {
                    if *v < bv {
                        (i, *v)
                    } else {
                        (bi, bv)
                    }
                });
            Ok((Vector::unit(*dim, best)?, value))
        }
        Body::PBall { p, center, radius } => {
            // The extremal-direction construction attains the exact optimum
            // `c.k - D ||c||_q` for every p, so no iteration is needed.
            let u = linear_minimizer(body, &total)?;
            let q = dual_exponent(p);
            Ok((u, total.dot(center)? - radius * norm(total.as_slice(), &q)))
        }
    }
}

/// Numeric minimizer of `sum_t c_t . u_{t-1}` over drifting paths
/// `u_0 .. u_{T-1}` whose movement stays within `l_budget` (halved l1 on
/// the simplex, raw p-norm on balls). The returned path is always feasible.
pub fn offline_drifting_opt(costs: &[Vector], body: &Body, l_budget: f64) -> Result<OracleResult> {
    if costs.is_empty() {
        return Err(Error::InvalidInput("cost sequence is empty".into()));
    }
    if !l_budget.is_finite() || l_budget < 0.0 {
        return Err(Error::InvalidInput(format!(
            "drift budget must be nonnegative, got {l_budget}"
        )));
    }
    let t_len = costs.len();

    // Candidate 1: the best fixed point (zero drift).
    let (u_fix, v_fix) = offline_fixed_opt(costs, body)?;
    let fixed_path: Vec<Vector> = vec![u_fix.clone(); t_len];

    // Candidate 2: interpolate toward the pointwise-greedy path as far as
    // the budget allows. Both value and drift are linear in gamma.
    let greedy: Vec<Vector> = costs
        .iter()
        .map(|c| linear_minimizer(body, c))
        .collect::<Result<_>>()?;
    let greedy_drift = measured_drift(&greedy, body)?;
    let gamma = if greedy_drift <= l_budget {
        1.0
    } else if greedy_drift > 0.0 {
        l_budget / greedy_drift
    } else {
        0.0
    };
    let mut interp = Vec::with_capacity(t_len);
    for g in &greedy {
        interp.push(u_fix.add_scaled(gamma, &g.sub(&u_fix)?)?);
    }

    let v_interp = path_service_before(costs, &interp)?;
    let (best_path, mut best_v) = if v_interp < v_fix {
        (interp, v_interp)
    } else {
        (fixed_path, v_fix)
    };

    // Pointwise-greedy inside the budget is exactly optimal; skip polish.
    if gamma >= 1.0 {
        let path = ComparatorPath::from_points(best_path, body)?;
        return Ok(OracleResult {
            value: best_v,
            path,
            converged: true,
            iterations: 0,
        });
    }

    // The budget constraint is handled through its Lagrangian: penalizing
    // movement at weight mu yields an unconstrained path problem, and the
    // optimal drift decreases as mu grows. A bisection on mu walks the drift
    // down to the budget; every iterate is shrunk into the budget and kept
    // as a feasible candidate, so the answer is valid even if the bisection
    // stops early.
    let movement_norm = match body {
        Body::Simplex { .. } => NormSpec::Finite(1.0),
        Body::PBall { p, .. } => p.clone(),
    };
    let to_raw =
        |path: &[Vector]| -> Vec<Vec<f64>> { path.iter().map(|u| u.as_slice().to_vec()).collect() };
    let iter_cap = path_iteration_budget(t_len);
    let inner_cap = (iter_cap / 8).max(SOLVER_MIN_PATH_ITERS);
    let steps = ((4 * iter_cap) / inner_cap).clamp(4, 18);
    let feas_slack = 1e-9 * l_budget.max(1.0);
    let mut diff: Vec<f64> = Vec::new();
    let mut best_raw: Vec<Vec<f64>> = to_raw(&best_path);
    let mut warm = best_raw.clone();
    let mut iterations = 0usize;
    let mut converged = true;
    let mut mu_lo = 0.0f64;
    let mut mu_hi = 1.0
        + costs
            .iter()
            .map(|c| norm(c.as_slice(), &NormSpec::Finite(2.0)))
            .sum::<f64>();
    // Bracket paths around the budget: the feasible one with the largest
    // drift seen and the infeasible one with the smallest. The constrained
    // value function is piecewise linear, so when the optimal drift jumps
    // across the budget at a breakpoint weight, the optimum is the convex
    // blend of the two adjacent penalized solutions.
    let mut bracket_feas: (Vec<Vec<f64>>, f64) = (vec![u_fix.as_slice().to_vec(); t_len], 0.0);
    let mut bracket_infeas: (Vec<Vec<f64>>, f64) = (to_raw(&greedy), greedy_drift);
    for step_idx in 0..=steps {
        let last = step_idx == steps;
        let mu = if last { mu_hi } else { 0.5 * (mu_lo + mu_hi) };
        let cap = if last { iter_cap } else { inner_cap };
        let outcome =
            polish_moving_path(costs, body, &movement_norm, mu, None, None, warm.clone(), cap)?;
        iterations += outcome.iterations;
        if last {
            converged = outcome.converged;
        }
        let drift = drift_slices(&outcome.path, body, &mut diff);
        let over_budget = drift > l_budget + feas_slack;
        let mut candidate = outcome.path.clone();
        if over_budget {
            shrink_to_budget_slices(&mut candidate, body, l_budget, &mut diff);
        }
        let v = service_slices(costs, &candidate);
        if v < best_v {
            best_v = v;
            best_raw = candidate;
        }
        if over_budget {
            if drift < bracket_infeas.1 {
                bracket_infeas = (outcome.path.clone(), drift);
            }
            mu_lo = mu;
        } else {
            if drift > bracket_feas.1 {
                bracket_feas = (outcome.path.clone(), drift);
            }
            mu_hi = mu;
        }
        warm = outcome.path;
    }
    let (lo_path, d_lo) = &bracket_feas;
    let (hi_path, d_hi) = &bracket_infeas;
    if d_hi > d_lo {
        let theta = ((l_budget - d_lo) / (d_hi - d_lo)).clamp(0.0, 1.0);
        let mut blend: Vec<Vec<f64>> = lo_path
            .iter()
            .zip(hi_path)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (1.0 - theta) * x + theta * y)
                    .collect()
            })
            .collect();
        let drift = drift_slices(&blend, body, &mut diff);
        if drift > l_budget {
            shrink_to_budget_slices(&mut blend, body, l_budget, &mut diff);
        }
        let v = service_slices(costs, &blend);
        if v < best_v {
            best_v = v;
            best_raw = blend;
        }
    }

    let path = ComparatorPath::from_points(to_vector_path(&best_raw)?, body)?;
    Ok(OracleResult {
        value: best_v,
        path,
        converged,
        iterations,
    })
}

/// Numeric minimizer of `sum_t c_t . u_t + alpha * sum_t move(u_t, u_{t-1})`
/// over feasible paths, where the movement term is the p-norm on balls and
/// the halved l1 norm on the simplex. When `start` is given the path is
/// charged for moving off that point (the same-start convention of
/// competitive analysis); with `start = None` the first point is free.
/// Ball paths additionally pay a closing return to the ball center: the
/// round trip is anchored there, which is exactly the convention whose
/// optimum the dual certificates lower-bound. Simplex paths end free.
pub fn offline_onela_opt(
    costs: &[Vector],
    body: &Body,
    movement_norm: &NormSpec,
    alpha_unfair: f64,
    start: Option<&Vector>,
) -> Result<OracleResult> {
    if costs.is_empty() {
        return Err(Error::InvalidInput("cost sequence is empty".into()));
    }
    if !alpha_unfair.is_finite() || alpha_unfair < 0.0 {
        return Err(Error::InvalidInput(format!(
            "movement weight must be nonnegative, got {alpha_unfair}"
        )));
    }
    if costs
        .iter()
        .any(|c| c.iter().any(|ci| *ci < 0.0))
    {
        return Err(Error::InvalidInput(
            "moving-point optima require nonnegative costs".into(),
        ));
    }
    if let Some(s) = start {
        if !body.contains(s, 1e-9)? {
            return Err(Error::InvalidInput(
                "the start point lies outside the body".into(),
            ));
        }
    }
    let halved = matches!(body, Body::Simplex { .. });
    let return_anchor = match body {
        Body::PBall { center, .. } => Some(center.clone()),
        Body::Simplex { .. } => None,
    };
    let t_len = costs.len();
    let move_cost = |d: &Vector| -> f64 {
        let m = norm(d.as_slice(), movement_norm);
        alpha_unfair * if halved { 0.5 * m } else { m }
    };
    let objective = |path: &[Vector]| -> Result<f64> {
        let mut v = path_service_at(costs, path)?;
        if let Some(s) = start {
            v += move_cost(&path[0].sub(s)?);
        }
        for w in path.windows(2) {
            v += move_cost(&w[1].sub(&w[0])?);
        }
        if let Some(k) = &return_anchor {
            v += move_cost(&path[path.len() - 1].sub(k)?);
        }
        Ok(v)
    };

    // Candidates: best fixed point, the pointwise-greedy path (movement paid
    // in full), staying on the start point when one is pinned, and parking
    // on the return anchor when there is one.
    let (u_fix, _) = offline_fixed_opt(costs, body)?;
    let fixed_path: Vec<Vector> = vec![u_fix; t_len];
    let greedy: Vec<Vector> = costs
        .iter()
        .map(|c| linear_minimizer(body, c))
        .collect::<Result<_>>()?;
    let v_fixed = objective(&fixed_path)?;
    let v_greedy = objective(&greedy)?;
    let (mut best_path, mut best_v) = if v_greedy < v_fixed {
        (greedy, v_greedy)
    } else {
        (fixed_path, v_fixed)
    };
    let park_candidates = [start, return_anchor.as_ref()];
    for point in park_candidates.into_iter().flatten() {
        let stay: Vec<Vector> = vec![point.clone(); t_len];
        let v_stay = objective(&stay)?;
        if v_stay < best_v {
            best_path = stay;
            best_v = v_stay;
        }
    }

    let start_raw: Option<Vec<f64>> = start.map(|s| s.as_slice().to_vec());
    let anchor_raw: Option<Vec<f64>> = return_anchor.as_ref().map(|k| k.as_slice().to_vec());
    let initial: Vec<Vec<f64>> = best_path.iter().map(|u| u.as_slice().to_vec()).collect();
    let outcome = polish_moving_path(
        costs,
        body,
        movement_norm,
        alpha_unfair,
        start_raw.as_deref(),
        anchor_raw.as_deref(),
        initial,
        path_iteration_budget(t_len),
    )?;
    let path = ComparatorPath::from_points(to_vector_path(&outcome.path)?, body)?;
    Ok(OracleResult {
        value: outcome.value,
        path,
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

struct PolishOutcome {
    path: Vec<Vec<f64>>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Subgradient descent on `sum_t c_t . u_t + weight * sum movement` over
/// feasible paths, starting from `initial` and keeping the best iterate.
/// Movement is charged between consecutive points, plus one leg from
/// `start_raw` and one leg to `anchor_raw` when those are given.
#[allow(clippy::too_many_arguments)]
fn polish_moving_path(
    costs: &[Vector],
    body: &Body,
    movement_norm: &NormSpec,
    weight: f64,
    start_raw: Option<&[f64]>,
    anchor_raw: Option<&[f64]>,
    initial: Vec<Vec<f64>>,
    iter_cap: usize,
) -> Result<PolishOutcome> {
    let t_len = costs.len();
    let halved = matches!(body, Body::Simplex { .. });
    let move_coef = weight * if halved { 0.5 } else { 1.0 };
    let scale = body_scale(body);
    let objective_raw = |path: &[Vec<f64>], diff: &mut Vec<f64>| -> f64 {
        let mut v = service_slices(costs, path);
        if let Some(s) = start_raw {
            diff.clear();
            diff.extend(path[0].iter().zip(s).map(|(a, b)| a - b));
            v += move_coef * norm(diff, movement_norm);
        }
        for w in path.windows(2) {
            diff.clear();
            diff.extend(w[1].iter().zip(&w[0]).map(|(a, b)| a - b));
            v += move_coef * norm(diff, movement_norm);
        }
        if let Some(anchor) = anchor_raw {
            diff.clear();
            diff.extend(path[path.len() - 1].iter().zip(anchor).map(|(a, b)| a - b));
            v += move_coef * norm(diff, movement_norm);
        }
        v
    };
    // Geometric step decay with best-iterate anchoring: each segment runs a
    // constant step size from the best path seen, and the step halves when a
    // segment fails to improve. On the piecewise-linear objectives solved
    // here this homes in sharply, and it is robust to warm starts that are
    // already near-optimal, where a diminishing 1/sqrt(k) schedule wanders
    // off on its large early steps and never recovers the start.
    let mut current = initial;
    let mut work = current.clone();
    let mut best_raw = current.clone();
    let mut scratch: Vec<f64> = Vec::new();
    let mut diff: Vec<f64> = Vec::new();
    let mut grad: Vec<f64> = Vec::new();
    let mut best_v = objective_raw(&current, &mut diff);
    let mut iterations = 0usize;
    let mut converged = false;
    let mut step = scale;
    let step_floor = scale * 1e-8;
    'decay: while step >= step_floor {
        for (c, b) in current.iter_mut().zip(&best_raw) {
            c.copy_from_slice(b);
        }
        let segment_start_v = best_v;
        for _ in 0..SOLVER_SEGMENT_ITERS {
            if iterations >= iter_cap {
                break 'decay;
            }
            iterations += 1;
            for j in 0..t_len {
                let u = &current[j];
                grad.clear();
                grad.extend(costs[j].iter().copied());
                let prev: Option<&[f64]> = if j > 0 {
                    Some(&current[j - 1])
                } else {
                    start_raw
                };
                if let Some(pv) = prev {
                    diff.clear();
                    diff.extend(u.iter().zip(pv).map(|(a, b)| a - b));
                    add_movement_subgradient_slice(&mut grad, &diff, movement_norm, halved, weight);
                }
                if j + 1 < t_len {
                    diff.clear();
                    diff.extend(current[j + 1].iter().zip(u).map(|(a, b)| a - b));
                    add_movement_subgradient_slice(
                        &mut grad,
                        &diff,
                        movement_norm,
                        halved,
                        -weight,
                    );
                } else if let Some(anchor) = anchor_raw {
                    diff.clear();
                    diff.extend(u.iter().zip(anchor).map(|(a, b)| a - b));
                    add_movement_subgradient_slice(&mut grad, &diff, movement_norm, halved, weight);
                }
                let w = &mut work[j];
                for ((wi, ui), gi) in w.iter_mut().zip(u).zip(&grad) {
                    *wi = ui - step * gi;
                }
                project_body_slice(body, w, &mut scratch)?;
            }
            let v = objective_raw(&work, &mut diff);
            if v < best_v - SOLVER_STALL_TOL * (1.0 + best_v.abs()) {
                best_v = v;
                for (b, w) in best_raw.iter_mut().zip(&work) {
                    b.copy_from_slice(w);
                }
            }
            std::mem::swap(&mut current, &mut work);
        }
        if best_v >= segment_start_v - SOLVER_STALL_TOL * (1.0 + segment_start_v.abs()) {
            step *= 0.5;
        }
    }
    if step < step_floor {
        converged = true;
    }
    Ok(PolishOutcome {
        path: best_raw,
        value: best_v,
        iterations,
        converged,
    })
}

/// `sum_t c_t . u_{t-1}` for a raw point slice.
pub fn path_service_before(costs: &[Vector], points: &[Vector]) -> Result<f64> {
    if costs.len() != points.len() {
        return Err(Error::InvalidInput(
            "path and cost sequence lengths differ".into(),
        ));
    }
    let mut total = 0.0;
    for (c, u) in costs.iter().zip(points) {
        total += c.dot(u)?;
    }
    Ok(total)
}

/// `sum_t c_t . u_t` for a raw point slice (identical pairing, different
/// reading: the point was chosen after seeing the cost).
pub fn path_service_at(costs: &[Vector], points: &[Vector]) -> Result<f64> {
    path_service_before(costs, points)
}

/// Movement of a path in the body's drift convention: halved l1 on the
/// simplex, raw p-norm on balls.
pub fn measured_drift(points: &[Vector], body: &Body) -> Result<f64> {
    let (p, halved) = match body {
        Body::Simplex { .. } => (NormSpec::Finite(1.0), true),
        Body::PBall { p, .. } => (p.clone(), false),
    };
    let mut total = 0.0;
    for w in points.windows(2) {
        let d = w[1].sub(&w[0])?;
        total += norm(d.as_slice(), &p);
    }
    Ok(if halved { 0.5 * total } else { total })
}

fn body_scale(body: &Body) -> f64 {
    match body {
        Body::Simplex { .. } => 1.0,
        Body::PBall { radius, .. } => *radius,
    }
}

// Raw-buffer kernels for the path polishers. The polish loops sweep every
// round thousands of times, so they work on reusable f64 buffers; a fresh
// vector is materialized only when a new best path is recorded.

fn project_body_slice(body: &Body, buf: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
    match body {
        Body::Simplex { .. } => {
            scratch.clear();
            scratch.extend_from_slice(buf);
            scratch.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut cumsum = 0.0;
            let mut tau = 0.0;
            for (j, v) in scratch.iter().enumerate() {
                cumsum += v;
                let candidate = (cumsum - 1.0) / (j + 1) as f64;
                if v - candidate > 0.0 {
                    tau = candidate;
                }
            }
            for v in buf.iter_mut() {
                *v = (*v - tau).max(0.0);
            }
            Ok(())
        }
        Body::PBall { p, center, radius } => match p {
            NormSpec::Finite(pf) if *pf == 2.0 => {
                let mut dist2 = 0.0;
                for (v, k) in buf.iter().zip(center.iter()) {
                    let d = v - k;
                    dist2 += d * d;
                }
                let dist = dist2.sqrt();
                if dist > *radius {
                    let f = radius / dist;
                    for (v, k) in buf.iter_mut().zip(center.iter()) {
                        *v = k + (*v - k) * f;
                    }
                }
                Ok(())
            }
            _ => {
                let point = Vector::computed(buf.to_vec(), "polish point")?;
                let projected = euclidean_project_body(body, &point)?;
                buf.copy_from_slice(projected.as_slice());
                Ok(())
            }
        },
    }
}

fn service_slices(costs: &[Vector], points: &[Vec<f64>]) -> f64 {
    costs
        .iter()
        .zip(points)
        .map(|(c, u)| c.iter().zip(u).map(|(ci, ui)| ci * ui).sum::<f64>())
        .sum()
}

fn drift_slices(points: &[Vec<f64>], body: &Body, diff: &mut Vec<f64>) -> f64 {
    let (p, halved) = match body {
        Body::Simplex { .. } => (NormSpec::Finite(1.0), true),
        Body::PBall { p, .. } => (p.clone(), false),
    };
    let mut total = 0.0;
    for w in points.windows(2) {
        diff.clear();
        diff.extend(w[1].iter().zip(&w[0]).map(|(a, b)| a - b));
        total += norm(diff, &p);
    }
    if halved {
        0.5 * total
    } else {
        total
    }
}

/// Shrinks a path's increments toward its start until the drift budget is
/// met. Convexity keeps every shrunk point feasible, and homogeneity makes
/// the drift scale exactly.
fn shrink_to_budget_slices(
    points: &mut [Vec<f64>],
    body: &Body,
    l_budget: f64,
    diff: &mut Vec<f64>,
) {
    let drift = drift_slices(points, body, diff);
    if drift <= l_budget {
        return;
    }
    let gamma = if drift > 0.0 { l_budget / drift } else { 0.0 };
    diff.clear();
    diff.extend_from_slice(&points[0]);
    for u in points.iter_mut() {
        for (ui, u0i) in u.iter_mut().zip(diff.iter()) {
            *ui = u0i + gamma * (*ui - u0i);
        }
    }
}

fn add_movement_subgradient_slice(
    grad: &mut [f64],
    d: &[f64],
    movement_norm: &NormSpec,
    halved: bool,
    weight: f64,
) {
    let coef = weight * if halved { 0.5 } else { 1.0 };
    match movement_norm {
        NormSpec::Finite(p) if *p == 1.0 => {
            for (g, di) in grad.iter_mut().zip(d) {
                if *di != 0.0 {
                    *g += coef * di.signum();
                }
            }
        }
        NormSpec::Finite(p) if *p == 2.0 => {
            let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 0.0 {
                for (g, di) in grad.iter_mut().zip(d) {
                    *g += coef * di / len;
                }
            }
        }
        NormSpec::Finite(p) => {
            let len = norm(d, movement_norm);
            if len > 0.0 {
                for (g, di) in grad.iter_mut().zip(d) {
                    if *di != 0.0 {
                        *g += coef * di.signum() * (di.abs() / len).powf(p - 1.0);
                    }
                }
            }
        }
        NormSpec::Infinity => {
            let mut arg = 0usize;
            for (i, di) in d.iter().enumerate() {
                if di.abs() > d[arg].abs() {
                    arg = i;
                }
            }
            if d[arg] != 0.0 {
                grad[arg] += coef * d[arg].signum();
            }
        }
    }
}

fn to_vector_path(points: &[Vec<f64>]) -> Result<Vec<Vector>> {
    points
        .iter()
        .map(|u| Vector::computed(u.clone(), "polished path point"))
        .collect()
}

/// Exact minimizer of `c . u` over the body.
pub fn linear_minimizer(body: &Body, c: &Vector) -> Result<Vector> {
    if c.dim() != body.dim() {
        return Err(Error::DimensionMismatch(
            "cost dimension does not match the body".into(),
        ));
    }
    match body {
        Body::Simplex { dim } => {
            let best = c
                .iter()
                .enumerate()
                .fold((0usize, f64::INFINITY), |(bi, bv), (i, v)| {
                    if *v < bv {
                        (i, *v)
                    } else {
                        (bi, bv)
                    }
                })
                .0;
            Vector::unit(*dim, best)
        }
        Body::PBall { p, center, radius } => {
            let z = dual_extremal_direction(c, p)?;
            center.add_scaled(-radius, &z)
        }
    }
}

/// Unit-p-norm direction maximizing `c . z`, so `c . (k - D z)` attains
/// `c.k - D ||c||_q`.
fn dual_extremal_direction(c: &Vector, p: &NormSpec) -> Result<Vector> {
    let n = c.dim();
    let q = dual_exponent(p);
    let cq = norm(c.as_slice(), &q);
    if cq == 0.0 {
        return Vector::computed(vec![0.0; n], "extremal direction");
    }
    let raw: Vec<f64> = match p {
        NormSpec::Finite(pf) if *pf == 1.0 => {
            // q = infinity: all mass on one largest-magnitude coordinate.
            let mut best = 0usize;
            for (i, v) in c.iter().enumerate() {
                if v.abs() > c.as_slice()[best].abs() {
                    best = i;
                }
            }
            let mut z = vec![0.0; n];
            z[best] = c.as_slice()[best].signum();
            z
        }
        NormSpec::Finite(pf) => {
            let qf = pf / (pf - 1.0);
            let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            c.iter()
                .map(|v| v.signum() * (v.abs() / cmax).powf(qf - 1.0))
                .collect()
        }
        NormSpec::Infinity => c.iter().map(|v| v.signum()).collect(),
    };
    let len = norm(&raw, p);
    Vector::computed(raw.iter().map(|r| r / len).collect(), "extremal direction")
}

/// Euclidean projection onto the body (used by the numeric solvers; this is
/// the plain least-squares projection, not a Bregman one).
pub fn euclidean_project_body(body: &Body, w: &Vector) -> Result<Vector> {
    if w.dim() != body.dim() {
        return Err(Error::DimensionMismatch(
            "point dimension does not match the body".into(),
        ));
    }
    match body {
        Body::Simplex { .. } => Vector::computed(
            euclidean_project_simplex(w.as_slice()),
            "simplex projection",
        ),
        Body::PBall { p, center, radius } => {
            let shifted = w.sub(center)?;
            let proj = euclidean_project_pball_origin(p, *radius, shifted.as_slice())?;
            center.add_scaled(1.0, &Vector::computed(proj, "ball projection")?)
        }
    }
}

/// Sort-based Euclidean projection onto the probability simplex.
fn euclidean_project_simplex(w: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if v - candidate > 0.0 {
            tau = candidate;
        }
    }
    w.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Euclidean projection onto the origin-centered p-ball.
fn euclidean_project_pball_origin(p: &NormSpec, radius: f64, w: &[f64]) -> Result<Vec<f64>> {
    if norm(w, p) <= radius {
        return Ok(w.to_vec());
    }
    match p {
        NormSpec::Infinity => Ok(w.iter().map(|v| v.clamp(-radius, radius)).collect()),
        NormSpec::Finite(pf) if *pf == 2.0 => {
            let len = norm(w, p);
            Ok(w.iter().map(|v| v * radius / len).collect())
        }
        NormSpec::Finite(pf) if *pf == 1.0 => {
            // Soft threshold: find tau with sum max(|w|-tau, 0) = radius.
            let mut lo = 0.0;
            let mut hi = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for _ in 0..200 {
                let tau = 0.5 * (lo + hi);
                let s: f64 = w.iter().map(|v| (v.abs() - tau).max(0.0)).sum();
                if s > radius {
                    lo = tau;
                } else {
                    hi = tau;
                }
            }
            let tau = 0.5 * (lo + hi);
            Ok(w
                .iter()
                .map(|v| v.signum() * (v.abs() - tau).max(0.0))
                .collect())
        }
        NormSpec::Finite(pf) => {
            // KKT system: v_i + m p v_i^{p-1} = |w_i| with m chosen so the
            // solution lands on the sphere. Both levels are monotone, so
            // nested bisection converges unconditionally.
            let solve_coord = |wi: f64, m: f64| -> f64 {
                if wi == 0.0 {
                    return 0.0;
                }
                let (mut lo, mut hi) = (0.0, wi);
                for _ in 0..100 {
                    let v: f64 = 0.5 * (lo + hi);
                    if v + m * pf * v.powf(pf - 1.0) < wi {
                        lo = v;
                    } else {
                        hi = v;
                    }
                }
                0.5 * (lo + hi)
            };
            let excess = |m: f64| -> f64 {
                w.iter()
                    .map(|v| solve_coord(v.abs(), m).powf(*pf))
                    .sum::<f64>()
                    - radius.powf(*pf)
            };
            let mut hi = 1.0;
            let mut guard = 0;
            while excess(hi) > 0.0 {
                hi *= 2.0;
                guard += 1;
                if guard > 200 {
                    return Err(Error::Numeric(
                        "p-ball projection failed to bracket its multiplier".into(),
                    ));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if excess(m) > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let m = 0.5 * (lo + hi);
            Ok(w
                .iter()
                .map(|v| v.signum() * solve_coord(v.abs(), m))
                .collect())
        }
    }
}
