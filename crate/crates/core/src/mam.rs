//! Exact stationary distribution of M/PH/n+M.
//!
//! The chain is a level-dependent quasi-birth-death process: the level `i` is
//! the number of customers in system and the phase is the vector of busy-server
//! counts per service phase, summing to `min(i, n)`. Arrivals are blocked at
//! the truncation level `K`. The stationary vector is obtained by linear level
//! reduction from the top level down.

use crate::diffusion::{self, DiffusionSummary, QueueSpec};
use crate::distributions::{Distribution, Kind};
use nalgebra::{DMatrix, DVector, RowDVector};
use std::collections::HashMap;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MamError {
    #[error("truncation level {k} leaves an estimated tail mass of {tail:e}")]
    TruncationTooSmall { k: usize, tail: f64 },
    #[error("singular block at level {level}")]
    SingularSolve { level: usize },
    #[error("global balance residual {residual:e} too large")]
    Inaccurate { residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, MamError>;

const TAIL_MASS: f64 = 1e-8;
const MAX_LEVELS: usize = 1 << 15;
const MAX_RESIDUAL: f64 = 1e-10;

/// Phase-type service law `(α, S)`: initial phase probabilities and the
/// sub-generator of transitions between transient phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhService {
    alpha: Vec<f64>,
    s: Vec<Vec<f64>>,
    exit: Vec<f64>,
}

impl PhService {
    pub fn new(alpha: Vec<f64>, s: Vec<Vec<f64>>) -> Result<Self> {
        let m = alpha.len();
        if m == 0 || s.len() != m || s.iter().any(|r| r.len() != m) {
            return Err(MamError::InvalidInput("alpha and S dimensions disagree".into()));
        }
        if alpha.iter().any(|&a| !(a >= 0.0)) || (alpha.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(MamError::InvalidInput("alpha must be a probability vector".into()));
        }
        let mut exit = Vec::with_capacity(m);
        for (j, row) in s.iter().enumerate() {
            if !(row[j] < 0.0) || row.iter().enumerate().any(|(k, &v)| k != j && !(v >= 0.0)) {
                return Err(MamError::InvalidInput(format!("row {j} of S is not a sub-generator row")));
            }
            let e = -row.iter().sum::<f64>();
            if e < -1e-12 * row[j].abs() {
                return Err(MamError::InvalidInput(format!("row {j} of S has positive sum")));
            }
            exit.push(e.max(0.0));
        }
        if exit.iter().all(|&e| e == 0.0) {
            return Err(MamError::InvalidInput("service never completes".into()));
        }
        Ok(PhService { alpha, s, exit })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![vec![-rate]])
    }

    /// Mixture of exponentials given as `(probability, rate)` pairs.
    pub fn hyperexponential(branches: &[(f64, f64)]) -> Result<Self> {
        let m = branches.len();
        let alpha = branches.iter().map(|b| b.0).collect();
        let mut s = vec![vec![0.0; m]; m];
        for (j, b) in branches.iter().enumerate() {
            s[j][j] = -b.1;
        }
        Self::new(alpha, s)
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        let m = shape as usize;
        let mut alpha = vec![0.0; m];
        alpha[0] = 1.0;
        let mut s = vec![vec![0.0; m]; m];
        for j in 0..m {
            s[j][j] = -rate;
            if j + 1 < m {
                s[j][j + 1] = rate;
            }
        }
        Self::new(alpha, s)
    }

    /// Exponential, Erlang and hyperexponential laws have exact
    /// representations; other families are rejected.
    pub fn from_distribution(d: &Distribution) -> Result<Self> {
        match d.kind() {
            Kind::Exponential { rate } => Self::exponential(*rate),
            Kind::Erlang { shape, rate } => Self::erlang(*shape, *rate),
            Kind::Hyperexponential { branches } => {
                Self::hyperexponential(&branches.iter().map(|b| (b.weight, b.rate)).collect::<Vec<_>>())
            }
            _ => Err(MamError::InvalidInput("service law has no phase-type representation".into())),
        }
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }

    /// Expected time spent in each phase per service.
    pub fn phase_sojourns(&self) -> Vec<f64> {
        let m = self.phases();
        let s = DMatrix::from_fn(m, m, |i, j| self.s[i][j]);
        let a = RowDVector::from_row_slice(&self.alpha);
        // τ = −α S⁻¹
        let inv = s.try_inverse().expect("sub-generator is invertible");
        (-(a * inv)).iter().copied().collect()
    }

    pub fn mean(&self) -> f64 {
        self.phase_sojourns().iter().sum()
    }
}

/// Busy-server configurations with a given number of busy servers.
struct Occupancies {
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl Occupancies {
    fn new(m: usize, total: u32) -> Self {
        let mut states = Vec::new();
        let mut cur = vec![0u32; m];
        fn rec(j: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if j + 1 == cur.len() {
                cur[j] = left;
                out.push(cur.clone());
                return;
            }
            for c in (0..=left).rev() {
                cur[j] = c;
                rec(j + 1, left - c, cur, out);
            }
        }
        rec(0, total, &mut cur, &mut states);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Occupancies { states, index }
    }

    fn len(&self) -> usize {
        self.states.len()
    }

    fn at(&self, s: &[u32]) -> usize {
        self.index[s]
    }
}

struct Chain<'a> {
    lambda: f64,
    n: usize,
    theta: f64,
    ph: &'a PhService,
    k: usize,
    occ: Vec<Occupancies>,
}

impl<'a> Chain<'a> {
    fn new(lambda: f64, n: usize, ph: &'a PhService, theta: f64, k: usize) -> Self {
        let occ = (0..=n.min(k)).map(|b| Occupancies::new(ph.phases(), b as u32)).collect();
        Chain { lambda, n, theta, ph, k, occ }
    }

    /// First level whose mean-rate departure flow reaches the arrival rate.
    fn mode_level(&self) -> usize {
        let mu = 1.0 / self.ph.mean();
        let death = |i: usize| i.min(self.n) as f64 * mu + i.saturating_sub(self.n) as f64 * self.theta;
        (0..=self.k).find(|&i| death(i) >= self.lambda).unwrap_or(self.k)
    }

    fn occ(&self, level: usize) -> &Occupancies {
        &self.occ[level.min(self.n)]
    }

    fn size(&self, level: usize) -> usize {
        self.occ(level).len()
    }

    fn up(&self, i: usize) -> DMatrix<f64> {
        let (from, to) = (self.occ(i), self.occ(i + 1));
        let mut a = DMatrix::zeros(from.len(), to.len());
        for (r, c) in from.states.iter().enumerate() {
            if i < self.n {
                let mut next = c.clone();
                for (l, &p) in self.ph.alpha.iter().enumerate() {
                    if p > 0.0 {
                        next[l] += 1;
                        a[(r, to.at(&next))] += self.lambda * p;
                        next[l] -= 1;
                    }
                }
            } else {
                a[(r, r)] = self.lambda;
            }
        }
        a
    }

    fn down(&self, i: usize) -> DMatrix<f64> {
        let (from, to) = (self.occ(i), self.occ(i - 1));
        let mut a = DMatrix::zeros(from.len(), to.len());
        for (r, c) in from.states.iter().enumerate() {
            let mut next = c.clone();
            for j in 0..c.len() {
                let rate = c[j] as f64 * self.ph.exit[j];
                if rate == 0.0 {
                    continue;
                }
                next[j] -= 1;
                if i <= self.n {
                    a[(r, to.at(&next))] += rate;
                } else {
                    for (l, &p) in self.ph.alpha.iter().enumerate() {
                        if p > 0.0 {
                            next[l] += 1;
                            a[(r, to.at(&next))] += rate * p;
                            next[l] -= 1;
                        }
                    }
                }
                next[j] += 1;
            }
            if i > self.n {
                a[(r, to.at(c))] += (i - self.n) as f64 * self.theta;
            }
        }
        a
    }

    /// Within-level block including the diagonal of the full generator.
    fn local(&self, i: usize) -> DMatrix<f64> {
        let occ = self.occ(i);
        let mut a = DMatrix::zeros(occ.len(), occ.len());
        for (r, c) in occ.states.iter().enumerate() {
            let mut next = c.clone();
            let mut out = 0.0;
            for j in 0..c.len() {
                if c[j] == 0 {
                    continue;
                }
                out += c[j] as f64 * -self.ph.s[j][j];
                next[j] -= 1;
                for l in 0..c.len() {
                    let rate = c[j] as f64 * self.ph.s[j][l];
                    if l != j && rate > 0.0 {
                        next[l] += 1;
                        a[(r, occ.at(&next))] += rate;
                        next[l] -= 1;
                    }
                }
                next[j] += 1;
            }
            if i > self.n {
                out += (i - self.n) as f64 * self.theta;
            }
            if i < self.k {
                out += self.lambda;
            }
            a[(r, r)] -= out;
        }
        a
    }
}

#[derive(Debug, Clone)]
pub struct CtmcSolution {
    pub servers: u32,
    /// Highest level kept.
    pub truncation: usize,
    /// Stationary probabilities per level, indexed by busy-server
    /// configuration.
    pub levels: Vec<Vec<f64>>,
    /// `P[X = i]` for `i = 0..=truncation`.
    pub marginal: Vec<f64>,
    /// `‖πQ‖∞` of the truncated generator.
    pub residual: f64,
    /// Largest imbalance between upward and downward flow across any cut.
    pub cut_balance_error: f64,
    /// Geometric extrapolation of the mass beyond the truncation level.
    pub tail_mass: f64,
    /// Expected number of busy servers in each service phase.
    pub phase_occupancy: Vec<f64>,
    /// Relative violation of the per-phase flow balance `E[c](S + s₀α) = 0`.
    pub phase_balance_error: f64,
}

impl CtmcSolution {
    pub fn mean(&self) -> f64 {
        self.marginal.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.marginal.iter().enumerate().map(|(i, p)| (i as f64 - m).powi(2) * p).sum()
    }

    pub fn queue_mean(&self) -> f64 {
        let n = self.servers as usize;
        self.marginal.iter().enumerate().map(|(i, p)| i.saturating_sub(n) as f64 * p).sum()
    }

    /// Writes `i, probability, gaussian_probability` rows.
    pub fn write_pmf_csv<W: Write>(&self, summary: &DiffusionSummary, out: W) -> io::Result<W> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "probability", "gaussian_probability"])?;
        for (i, p) in self.marginal.iter().enumerate() {
            let g = diffusion::queue_pmf(summary, i as u64);
            w.write_record([i.to_string(), p.to_string(), g.to_string()])?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Stationary distribution truncated at level `k`. Fails with
/// [`MamError::TruncationTooSmall`] when the extrapolated tail beyond `k`
/// exceeds 1e-8.
pub fn solve(lambda: f64, n: u32, service: &PhService, theta: f64, k: usize) -> Result<CtmcSolution> {
    let sol = solve_truncated(lambda, n, service, theta, k)?;
    if sol.tail_mass > TAIL_MASS {
        return Err(MamError::TruncationTooSmall { k, tail: sol.tail_mass });
    }
    if !(sol.residual < MAX_RESIDUAL) {
        return Err(MamError::Inaccurate { residual: sol.residual });
    }
    Ok(sol)
}

/// Solves the M/PH/n+M instance described by `spec`, starting from the
/// truncation `n + ⌈q + 12σ_x⌉` of the diffusion model and doubling it until
/// the tail test passes.
pub fn solve_spec(spec: &QueueSpec) -> Result<CtmcSolution> {
    let theta = match spec.patience.kind() {
        Kind::Exponential { rate } => *rate,
        _ => return Err(MamError::InvalidInput("patience must be exponential".into())),
    };
    if spec.interarrival_scv != 1.0 {
        return Err(MamError::InvalidInput("arrivals must be Poisson".into()));
    }
    let ph = PhService::from_distribution(&spec.service)?;
    let n = spec.servers as usize;
    let mut k = match diffusion::summarize(spec) {
        Ok(s) => n + (s.q + 12.0 * s.sigma_x()).ceil() as usize,
        Err(_) => n + (spec.arrival_rate / theta).ceil() as usize + 20,
    };
    loop {
        match solve(spec.arrival_rate, spec.servers, &ph, theta, k) {
            Err(MamError::TruncationTooSmall { .. }) if 2 * k <= MAX_LEVELS => k *= 2,
            other => return other,
        }
    }
}

/// `B · M⁻¹`, solved as `Mᵀ Xᵀ = Bᵀ`.
fn right_divide(b: &DMatrix<f64>, m: &DMatrix<f64>, level: usize) -> Result<DMatrix<f64>> {
    let xt = m.transpose().lu().solve(&b.transpose()).ok_or(MamError::SingularSolve { level })?;
    if !xt.iter().all(|v| v.is_finite()) {
        return Err(MamError::SingularSolve { level });
    }
    Ok(xt.transpose())
}

fn solve_truncated(lambda: f64, n: u32, ph: &PhService, theta: f64, k: usize) -> Result<CtmcSolution> {
    if !(lambda > 0.0) || n == 0 || !(theta > 0.0) {
        return Err(MamError::InvalidInput("need λ > 0, n ≥ 1 and θ > 0".into()));
    }
    if k < n as usize + 2 || k > MAX_LEVELS {
        return Err(MamError::InvalidInput(format!("truncation level {k} outside [n + 2, {MAX_LEVELS}]")));
    }
    let chain = Chain::new(lambda, n as usize, ph, theta, k);

    // Above the cut π_{i+1} = π_i R[i], below it π_{i−1} = π_i S[i]. Each
    // recursion runs toward the cut, the direction in which rounding errors
    // are damped rather than amplified.
    let cut = chain.mode_level();
    let mut rs: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); k];
    let mut m = chain.local(k);
    for i in (cut..k).rev() {
        let r = right_divide(&-chain.up(i), &m, i + 1)?;
        if i > cut {
            m = chain.local(i) + &r * chain.down(i + 1);
        }
        rs[i] = r;
    }
    let mut ss: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); cut + 1];
    let mut m = chain.local(0);
    for i in 1..=cut {
        let s = right_divide(&-chain.down(i), &m, i - 1)?;
        if i < cut {
            m = chain.local(i) + &s * chain.up(i - 1);
        }
        ss[i] = s;
    }

    // π_cut solves the censored chain on the cut level, normalized to unit sum.
    let mut center = chain.local(cut);
    if cut < k {
        center += &rs[cut] * chain.down(cut + 1);
    }
    if cut > 0 {
        center += &ss[cut] * chain.up(cut - 1);
    }
    let d = center.nrows();
    let mut a = center.transpose();
    a.row_mut(d - 1).fill(1.0);
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(MamError::SingularSolve { level: cut })?;
    let pi_cut = RowDVector::from_iterator(d, x.iter().map(|v| v.max(0.0)));

    // Levels are carried as unit-sum vectors with a log-scale to avoid
    // overflow.
    let mut vecs: Vec<RowDVector<f64>> = (0..=k).map(|j| RowDVector::zeros(chain.size(j))).collect();
    let mut logs = vec![f64::NEG_INFINITY; k + 1];
    let sum = pi_cut.sum();
    vecs[cut] = pi_cut / sum;
    logs[cut] = 0.0;
    for i in cut..k {
        let next = &vecs[i] * &rs[i];
        let s = next.sum();
        if !(s > 0.0) {
            break;
        }
        logs[i + 1] = logs[i] + s.ln();
        vecs[i + 1] = next / s;
    }
    for i in (1..=cut).rev() {
        let prev = &vecs[i] * &ss[i];
        let s = prev.sum();
        if !(s > 0.0) {
            break;
        }
        logs[i - 1] = logs[i] + s.ln();
        vecs[i - 1] = prev / s;
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let levels: Vec<RowDVector<f64>> = vecs.iter().zip(&weights).map(|(v, w)| v * (w / total)).collect();
    let marginal: Vec<f64> = levels.iter().map(|v| v.sum()).collect();

    // Global balance, block by block.
    let mut residual = 0.0f64;
    for i in 0..=k {
        let mut r = &levels[i] * chain.local(i);
        if i > 0 {
            r += &levels[i - 1] * chain.up(i - 1);
        }
        if i < k {
            r += &levels[i + 1] * chain.down(i + 1);
        }
        residual = residual.max(r.amax());
    }

    let mut cut_balance_error = 0.0f64;
    for i in 0..k {
        let upward = lambda * marginal[i];
        let downward = (&levels[i + 1] * chain.down(i + 1)).sum();
        cut_balance_error = cut_balance_error.max((upward - downward).abs());
    }

    let tail_mass = {
        let (a, b) = (marginal[k - 1], marginal[k]);
        if b == 0.0 {
            0.0
        } else if b < a {
            let r = b / a;
            b * r / (1.0 - r)
        } else {
            1.0
        }
    };

    let phases = ph.phases();
    let mut phase_occupancy = vec![0.0; phases];
    for (i, v) in levels.iter().enumerate() {
        for (p, c) in v.iter().zip(&chain.occ(i).states) {
            for j in 0..phases {
                phase_occupancy[j] += p * c[j] as f64;
            }
        }
    }
    let phase_balance_error = {
        let throughput: f64 = phase_occupancy.iter().zip(&ph.exit).map(|(c, e)| c * e).sum();
        let mut worst = 0.0f64;
        for l in 0..phases {
            let inflow: f64 = (0..phases).map(|j| phase_occupancy[j] * ph.s[j][l]).sum::<f64>() + throughput * ph.alpha[l];
            worst = worst.max(inflow.abs());
        }
        worst / throughput
    };

    Ok(CtmcSolution {
        servers: n,
        truncation: k,
        levels: levels.iter().map(|v| v.iter().copied().collect()).collect(),
        marginal,
        residual,
        cut_balance_error,
        tail_mass,
        phase_occupancy,
        phase_balance_error,
    })
}

/// `½ Σᵢ |P[X = i] − g(i)|` over `0..=K`, with `g` the Gaussian pmf of the
/// diffusion model.
pub fn tv_distance(sol: &CtmcSolution, summary: &DiffusionSummary) -> f64 {
    0.5 * sol.marginal.iter().enumerate().map(|(i, p)| (p - diffusion::queue_pmf(summary, i as u64)).abs()).sum::<f64>()
}

/// Largest pointwise gap between the exact and Gaussian pmfs over `0..=K`.
pub fn max_pmf_gap(sol: &CtmcSolution, summary: &DiffusionSummary) -> f64 {
    sol.marginal
        .iter()
        .enumerate()
        .map(|(i, p)| (p - diffusion::queue_pmf(summary, i as u64)).abs())
        .fold(0.0, f64::max)
}

/// Total-variation distance between two pmfs on a common support.
pub fn tv_between(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(a, i) - at(b, i)).abs()).sum::<f64>()
}
