//! Defender/adversary Stackelberg game solved by exhaustive grid search.
//!
//! The defender picks a wall level `alpha` around the normal population; each
//! adversary picks an attack strength `t` that pulls its objects toward the
//! normal mean. All strategy evaluations share one fixed sample per
//! population, and every (level, strength) pair is evaluated once into error
//! tables so the solvers only do arithmetic.

use serde::{Deserialize, Serialize};

use crate::dataset::euclidean;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gaussian::Gaussian;
use crate::rng::derive_seed;
use crate::walls::{eta_curve, RegionStats, Wall, WallKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Normal,
    Adversary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub role: Role,
    pub sample_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityFamily {
    Log,
    Linear,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub family: UtilityFamily,
    /// Penalty coefficient.
    pub a: f64,
    /// Utility of an object that passes without being moved.
    pub k_max: f64,
}

impl UtilitySpec {
    /// Value of one object that passes after moving `cost`.
    pub fn payoff(&self, cost: f64) -> f64 {
        let v = match self.family {
            UtilityFamily::Log => self.k_max - self.a * (cost + 1.0).ln(),
            UtilityFamily::Linear => self.k_max - self.a * cost,
            UtilityFamily::Exponential => self.k_max - (self.a * cost).exp(),
        };
        v.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Leader,
    Follower,
}

impl std::str::FromStr for Orientation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leader" => Ok(Orientation::Leader),
            "follower" => Ok(Orientation::Follower),
            other => Err(Error::InvalidInput(format!("unknown orientation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub wall_kind: WallKind,
    /// Cost of letting one adversary object through, relative to blocking
    /// one normal object.
    pub c: f64,
    pub alpha_step: f64,
    pub t_step: f64,
    /// Strength step for the joint follower search once there are at least
    /// `joint_min_adversaries` adversaries.
    pub joint_t_step: f64,
    pub joint_min_adversaries: usize,
    /// Upper bound on joint follower evaluations (joint strategies x levels).
    pub budget: u64,
    pub normal: PopulationSpec,
    pub adversaries: Vec<PopulationSpec>,
    pub utilities: Vec<UtilitySpec>,
    pub eta_samples: usize,
    pub seed: u64,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Domain(format!("defender cost c must be positive, got {}", self.c)));
        }
        if self.adversaries.is_empty() || self.adversaries.len() != self.utilities.len() {
            return Err(Error::InvalidInput(
                "need one utility per adversary and at least one adversary".into(),
            ));
        }
        for u in &self.utilities {
            if !(u.a > 0.0 && u.k_max > 0.0) {
                return Err(Error::Domain(format!("utility coefficients must be positive: {u:?}")));
            }
        }
        let q = self.normal.mean.len();
        for p in self.adversaries.iter().chain([&self.normal]) {
            if p.mean.len() != q {
                return Err(Error::InvalidInput("populations differ in dimension".into()));
            }
            if p.sample_size == 0 {
                return Err(Error::InvalidInput("population sample size must be positive".into()));
            }
        }
        steps(self.alpha_step)?;
        steps(self.t_step)?;
        steps(self.joint_t_step)?;
        Ok(())
    }

    /// Strength step actually used for the given orientation.
    pub fn effective_t_step(&self, orientation: Orientation) -> f64 {
        if orientation == Orientation::Follower && self.adversaries.len() >= self.joint_min_adversaries {
            self.joint_t_step
        } else {
            self.t_step
        }
    }
}

/// Number of intervals a step cuts `[0, 1]` into; the step must divide it.
fn steps(step: f64) -> Result<usize> {
    let n = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || ((n * step) - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("grid step {step} does not divide [0, 1]")));
    }
    Ok(n as usize)
}

/// Interior levels `1/n, ..., (n-1)/n`.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    let n = steps(step)?;
    if n < 2 {
        return Err(Error::Domain("alpha grid needs a step below 1".into()));
    }
    Ok((1..n).map(|i| i as f64 / n as f64).collect())
}

/// Strengths `0, 1/n, ..., 1`.
pub fn t_grid(step: f64) -> Result<Vec<f64>> {
    let n = steps(step)?;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// Contraction of `x` toward `mu_g` by strength `t`.
pub fn apply_attack(x: &[f64], mu_g: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(mu_g).map(|(x, m)| m + (1.0 - t) * (x - m)).collect()
}

pub fn movement_cost(original: &[f64], moved: &[f64]) -> f64 {
    euclidean(original, moved)
}

/// Pass count and mean utility of one adversary sample under one attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub passed: usize,
    pub total: usize,
    pub utility: f64,
}

impl AttackOutcome {
    pub fn pass_rate(&self) -> f64 {
        self.passed as f64 / self.total as f64
    }
}

/// Evaluates one attack on a flat row-major `sample`. Objects the wall blocks
/// contribute nothing.
pub fn evaluate_attack(spec: &UtilitySpec, sample: &[f64], mu_g: &[f64], t: f64, wall: &Wall) -> AttackOutcome {
    let q = mu_g.len();
    let mut passed = 0;
    let mut total_payoff = 0.0;
    let mut moved = vec![0.0; q];
    for x in sample.chunks_exact(q) {
        for i in 0..q {
            moved[i] = mu_g[i] + (1.0 - t) * (x[i] - mu_g[i]);
        }
        if wall.contains(&moved) {
            passed += 1;
            total_payoff += spec.payoff(movement_cost(x, &moved));
        }
    }
    let total = sample.len() / q;
    AttackOutcome {
        passed,
        total,
        utility: total_payoff / total as f64,
    }
}

/// Mean payoff over the sample of objects that pass after attack `t`.
pub fn attacker_utility(spec: &UtilitySpec, sample: &[f64], mu_g: &[f64], t: f64, wall: &Wall) -> f64 {
    evaluate_attack(spec, sample, mu_g, t, wall).utility
}

/// Number of normal objects the wall blocks.
pub fn normal_blocked(wall: &Wall, normal: &[f64], q: usize) -> usize {
    normal.chunks_exact(q).filter(|x| !wall.contains(x)).count()
}

/// `-100 * (err_normal + c * err_adversary)`.
pub fn defender_payoff(err_normal: f64, err_adversary: f64, c: f64) -> f64 {
    -100.0 * (err_normal + c * err_adversary)
}

/// Defender utility from raw samples; adversary errors are pooled over all
/// (already transformed) adversary objects.
pub fn defender_utility(wall: &Wall, normal: &[f64], adversaries: &[Vec<f64>], q: usize, c: f64) -> f64 {
    let n_normal = normal.len() / q;
    let err_n = normal_blocked(wall, normal, q) as f64 / n_normal as f64;
    let (inside, total) = adversaries.iter().fold((0usize, 0usize), |(i, t), s| {
        (i + s.chunks_exact(q).filter(|x| wall.contains(x)).count(), t + s.len() / q)
    });
    defender_payoff(err_n, inside as f64 / total as f64, c)
}

/// Fixed samples, strategy grids and walls for one game.
#[derive(Debug, Clone)]
pub struct Game {
    pub config: GameConfig,
    pub alphas: Vec<f64>,
    pub walls: Vec<Wall>,
    pub normal_sample: Vec<f64>,
    pub adversary_samples: Vec<Vec<f64>>,
}

impl Game {
    /// Draws the shared samples and fits one wall per grid level around the
    /// true normal population.
    pub fn new(config: GameConfig, exec: Execution) -> Result<Self> {
        config.validate()?;
        let draw = |p: &PopulationSpec| -> Result<Vec<f64>> {
            Ok(Gaussian::new(p.mean.clone(), &p.covariance)?.sample(p.sample_size, p.seed, exec))
        };
        let normal_sample = draw(&config.normal)?;
        let adversary_samples = config.adversaries.iter().map(draw).collect::<Result<Vec<_>>>()?;
        let alphas = alpha_grid(config.alpha_step)?;
        let stats = RegionStats::from_moments(
            config.normal.mean.clone(),
            config.normal.covariance.clone(),
            config.normal.sample_size,
        )?;
        let walls = match config.wall_kind {
            WallKind::Euclidean => alphas
                .iter()
                .map(|&a| Wall::euclidean(stats.clone(), a))
                .collect::<Result<Vec<_>>>()?,
            WallKind::Manhattan => {
                let etas = eta_curve(&stats, &alphas, config.eta_samples, derive_seed(config.seed, 0), exec)?;
                alphas
                    .iter()
                    .zip(etas)
                    .map(|(&a, eta)| Wall::manhattan_with_eta(stats.clone(), a, eta))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self {
            config,
            alphas,
            walls,
            normal_sample,
            adversary_samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.normal.mean.len()
    }

    pub fn n_adversaries(&self) -> usize {
        self.adversary_samples.len()
    }

    /// Direct evaluation of adversary `i` playing `t` against level index `h`.
    pub fn evaluate(&self, h: usize, i: usize, t: f64) -> AttackOutcome {
        evaluate_attack(
            &self.config.utilities[i],
            &self.adversary_samples[i],
            &self.config.normal.mean,
            t,
            &self.walls[h],
        )
    }

    /// Direct evaluation of the defender's utility at level `h` against
    /// adversaries playing `ts`.
    pub fn evaluate_defender(&self, h: usize, ts: &[f64]) -> f64 {
        let q = self.dim();
        let mu = &self.config.normal.mean;
        let moved: Vec<Vec<f64>> = self
            .adversary_samples
            .iter()
            .zip(ts)
            .map(|(s, &t)| s.chunks_exact(q).flat_map(|x| apply_attack(x, mu, t)).collect())
            .collect();
        defender_utility(&self.walls[h], &self.normal_sample, &moved, q, self.config.c)
    }

    pub fn tables(&self, orientation: Orientation, exec: Execution) -> Result<ErrorTables> {
        build_error_tables(self, self.config.effective_t_step(orientation), exec)
    }
}

/// Precomputed outcomes on the strategy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTables {
    pub alphas: Vec<f64>,
    pub radii: Vec<f64>,
    pub ts: Vec<f64>,
    /// `outcomes[i][h][j]`: adversary `i`, level `h`, strength `ts[j]`.
    pub outcomes: Vec<Vec<Vec<AttackOutcome>>>,
    /// Fraction of the normal sample blocked at each level.
    pub normal_error: Vec<f64>,
    pub c: f64,
}

pub fn build_error_tables(game: &Game, t_step: f64, exec: Execution) -> Result<ErrorTables> {
    let ts = t_grid(t_step)?;
    let (m, nh, nt) = (game.n_adversaries(), game.alphas.len(), ts.len());
    let flat = exec.map(m * nh * nt, |idx| {
        let (i, rest) = (idx / (nh * nt), idx % (nh * nt));
        game.evaluate(rest / nt, i, ts[rest % nt])
    });
    let outcomes = (0..m)
        .map(|i| {
            (0..nh)
                .map(|h| flat[(i * nh + h) * nt..(i * nh + h + 1) * nt].to_vec())
                .collect()
        })
        .collect();
    let q = game.dim();
    let n_normal = game.config.normal.sample_size as f64;
    let normal_error = exec.map(nh, |h| normal_blocked(&game.walls[h], &game.normal_sample, q) as f64 / n_normal);
    Ok(ErrorTables {
        alphas: game.alphas.clone(),
        radii: game.walls.iter().map(|w| w.radius).collect(),
        ts,
        outcomes,
        normal_error,
        c: game.config.c,
    })
}

impl ErrorTables {
    /// Defender utility at level `h` against strength indices `t_idx`.
    pub fn defender(&self, h: usize, t_idx: &[usize]) -> f64 {
        let (passed, total) = t_idx.iter().enumerate().fold((0usize, 0usize), |(p, n), (i, &j)| {
            let o = &self.outcomes[i][h][j];
            (p + o.passed, n + o.total)
        });
        defender_payoff(self.normal_error[h], passed as f64 / total as f64, self.c)
    }

    pub fn attacker(&self, i: usize, h: usize, j: usize) -> f64 {
        self.outcomes[i][h][j].utility
    }

    fn equilibrium(&self, orientation: Orientation, h: usize, t_idx: Vec<usize>) -> Equilibrium {
        let err_adv = {
            let (p, n) = t_idx.iter().enumerate().fold((0, 0), |(p, n), (i, &j)| {
                (p + self.outcomes[i][h][j].passed, n + self.outcomes[i][h][j].total)
            });
            p as f64 / n as f64
        };
        Equilibrium {
            orientation,
            alpha: self.alphas[h],
            radius: self.radii[h],
            t: t_idx.iter().map(|&j| self.ts[j]).collect(),
            defender_utility: self.defender(h, &t_idx),
            attacker_utilities: t_idx.iter().enumerate().map(|(i, &j)| self.attacker(i, h, j)).collect(),
            normal_error: self.normal_error[h],
            adversary_error: err_adv,
            level_index: h,
            t_indices: t_idx,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub orientation: Orientation,
    pub alpha: f64,
    /// Wall radius at `alpha`: the chi-square level or `eta(alpha)`.
    pub radius: f64,
    pub t: Vec<f64>,
    pub defender_utility: f64,
    pub attacker_utilities: Vec<f64>,
    pub normal_error: f64,
    pub adversary_error: f64,
    pub level_index: usize,
    pub t_indices: Vec<usize>,
}

/// First index of the maximum; earlier entries win ties.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Defender commits first; every adversary best-responds to each level on
/// its own, and the defender keeps the level that serves it best.
pub fn solve_leader(tables: &ErrorTables) -> Equilibrium {
    let m = tables.outcomes.len();
    let nt = tables.ts.len();
    let responses: Vec<Vec<usize>> = (0..tables.alphas.len())
        .map(|h| (0..m).map(|i| argmax((0..nt).map(|j| tables.attacker(i, h, j)))).collect())
        .collect();
    let h = argmax(responses.iter().enumerate().map(|(h, r)| tables.defender(h, r)));
    tables.equilibrium(Orientation::Leader, h, responses[h].clone())
}

/// Adversaries commit first; the defender best-responds to every joint
/// attack, and the joint attack with the largest summed adversary utility
/// wins. Ties go to the weaker total attack, then the smaller level.
pub fn solve_follower(tables: &ErrorTables, budget: u64, exec: Execution) -> Result<Equilibrium> {
    let m = tables.outcomes.len();
    let nt = tables.ts.len();
    let nh = tables.alphas.len();
    let joint = (nt as u64).checked_pow(m as u32).unwrap_or(u64::MAX);
    let cells = joint.saturating_mul(nh as u64);
    if cells > budget {
        return Err(Error::GridBudgetExceeded { cells, budget });
    }
    let decode = |mut code: usize| -> Vec<usize> {
        let mut t = vec![0; m];
        for slot in t.iter_mut().rev() {
            *slot = code % nt;
            code /= nt;
        }
        t
    };
    let scored = exec.map(joint as usize, |code| {
        let t = decode(code);
        let h = argmax((0..nh).map(|h| tables.defender(h, &t)));
        let total: f64 = t.iter().enumerate().map(|(i, &j)| tables.attacker(i, h, j)).sum();
        (total, t.iter().sum::<usize>(), h)
    });
    let mut best = 0;
    for (code, s) in scored.iter().enumerate().skip(1) {
        let b = &scored[best];
        let better = s.0 > b.0 || (s.0 == b.0 && (s.1 < b.1 || (s.1 == b.1 && s.2 < b.2)));
        if better {
            best = code;
        }
    }
    Ok(tables.equilibrium(Orientation::Follower, scored[best].2, decode(best)))
}

/// Builds the game, its tables, and solves it in the requested orientation.
pub fn solve(config: &GameConfig, orientation: Orientation, exec: Execution) -> Result<(Game, ErrorTables, Equilibrium)> {
    let game = Game::new(config.clone(), exec)?;
    let tables = game.tables(orientation, exec)?;
    let eq = match orientation {
        Orientation::Leader => solve_leader(&tables),
        Orientation::Follower => solve_follower(&tables, config.budget, exec)?,
    };
    Ok((game, tables, eq))
}

/// One landscape row per (adversary, level, strength) grid cell. The
/// defender column treats that adversary as the only one attacking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub adversary: usize,
    pub alpha: f64,
    pub radius: f64,
    pub t: f64,
    pub pass_rate: f64,
    pub attacker_utility: f64,
    pub normal_error: f64,
    pub defender_utility: f64,
}

pub fn landscape(tables: &ErrorTables) -> Vec<LandscapeRow> {
    let mut rows = Vec::new();
    for (i, per_h) in tables.outcomes.iter().enumerate() {
        for (h, per_t) in per_h.iter().enumerate() {
            for (j, o) in per_t.iter().enumerate() {
                rows.push(LandscapeRow {
                    adversary: i,
                    alpha: tables.alphas[h],
                    radius: tables.radii[h],
                    t: tables.ts[j],
                    pass_rate: o.pass_rate(),
                    attacker_utility: o.utility,
                    normal_error: tables.normal_error[h],
                    defender_utility: defender_payoff(tables.normal_error[h], o.pass_rate(), tables.c),
                });
            }
        }
    }
    rows
}
