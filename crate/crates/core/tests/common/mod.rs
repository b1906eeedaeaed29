#![allow(dead_code)]

pub mod invariants;

/// Stationary law of the M/M/n+M birth–death chain, truncated once the
/// unnormalized weights fall below 1e-20 of the peak.
pub struct ErlangA {
    pub n: usize,
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
    pub pmf: Vec<f64>,
}

impl ErlangA {
    pub fn new(lambda: f64, n: usize, mu: f64, theta: f64) -> Self {
        let mut w = vec![1.0f64];
        let mut peak = 1.0f64;
        loop {
            let i = w.len();
            let death = i.min(n) as f64 * mu + i.saturating_sub(n) as f64 * theta;
            let next = w[i - 1] * lambda / death;
            peak = peak.max(next);
            w.push(next);
            if i > n && next < 1e-20 * peak {
                break;
            }
        }
        let total: f64 = w.iter().sum();
        let pmf = w.into_iter().map(|x| x / total).collect();
        ErlangA { n, lambda, mu, theta, pmf }
    }

    pub fn queue_mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(i, p)| i.saturating_sub(self.n) as f64 * p).sum()
    }

    pub fn queue_variance(&self) -> f64 {
        let m = self.queue_mean();
        self.pmf.iter().enumerate().map(|(i, p)| (i.saturating_sub(self.n) as f64 - m).powi(2) * p).sum()
    }

    pub fn in_system_mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }

    pub fn abandonment_fraction(&self) -> f64 {
        self.theta * self.queue_mean() / self.lambda
    }

    /// Mean offered wait seen by arrivals: from state `i ≥ n` the arrival
    /// waits for `i − n + 1` departures among those ahead of it, the `k`-th
    /// from last at rate `nμ + kθ`.
    pub fn wait_mean(&self) -> f64 {
        let n = self.n;
        let mut stage = 0.0;
        let mut total = 0.0;
        for (i, p) in self.pmf.iter().enumerate().skip(n) {
            stage += 1.0 / (n as f64 * self.mu + (i - n) as f64 * self.theta);
            total += p * stage;
        }
        total
    }

    /// `P[W ≤ min(d, ζ)]`: served within `d`. From state `i ≥ n` a tagged
    /// arrival passes stages `j = i − n, …, 0` (customers ahead in queue),
    /// leaving stage `j` at rate `nμ + jθ`, while abandoning at rate `θ`.
    /// Solved by uniformization of the killed stage chain.
    pub fn service_level(&self, d: f64) -> f64 {
        let n = self.n;
        let stages = self.pmf.len() - n;
        let nmu = n as f64 * self.mu;
        let lam = nmu + stages as f64 * self.theta + self.theta;
        // u[j] = P[served within the elapsed uniformized steps | stage j].
        let mut u = vec![0.0f64; stages];
        let mut acc = vec![0.0f64; stages];
        let mean = lam * d;
        let mut log_weight = -mean;
        let mut cum = 0.0;
        let mut k = 0u32;
        while cum < 1.0 - 1e-15 && k < 1_000_000 {
            let weight = log_weight.exp();
            for (a, v) in acc.iter_mut().zip(&u) {
                *a += weight * v;
            }
            cum += weight;
            let mut next = vec![0.0f64; stages];
            for j in 0..stages {
                let advance = (nmu + j as f64 * self.theta) / lam;
                let stay = 1.0 - advance - self.theta / lam;
                let target = if j == 0 { 1.0 } else { u[j - 1] };
                next[j] = advance * target + stay * u[j];
            }
            u = next;
            k += 1;
            log_weight += mean.ln() - (k as f64).ln();
        }
        let immediate: f64 = self.pmf[..n].iter().sum();
        immediate + self.pmf[n..].iter().zip(&acc).map(|(p, h)| p * h).sum::<f64>()
    }
}
