//! One heralding attempt: excitation, transduction and noise draws, and the
//! classification of what the detectors saw.
//!
//! Per attempt, with `x_i ~ Bern(p_e)`:
//!
//! ```text
//! s_i = x_i && Bern(eta)          signal photon i transduced and detected
//! n_i ~ Poisson(n_add)            noise photons in transducer i
//! m   = thin(n_1 + n_2, eta)      noise photons detected
//! d   = s_1 + s_2 + m
//! ```
//!
//! Draw order within an attempt is fixed: `x_1, x_2`, then `s_1` (only if
//! `x_1`), `s_2` (only if `x_2`), then `n_1, n_2`, then the `n_1 + n_2`
//! thinning draws.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::qstate::DensityMatrix;
use crate::sampling::{BernoulliSampler, GeometricSampler, PoissonSampler, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptParams {
    pub p_e: f64,
    pub eta: f64,
    pub n_add: f64,
}

impl AttemptParams {
    pub fn new(p_e: f64, eta: f64, n_add: f64) -> Result<Self> {
        let p = Self { p_e, eta, n_add };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("p_e", self.p_e, 0.0, 1.0, "[0, 1]")?;
        check_range("eta", self.eta, 0.0, 1.0, "[0, 1]")?;
        check_range("n_add", self.n_add, 0.0, f64::MAX, "[0, inf)")
    }

    /// Probability that no noise photon is detected in one round.
    pub fn no_noise_click(&self) -> f64 {
        (-2.0 * self.eta * self.n_add).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeraldKind {
    NoClick,
    Bell,
    GroundGround,
    DoubleExcited,
    Dephased,
}

impl HeraldKind {
    pub const ALL: [HeraldKind; 5] = [
        HeraldKind::NoClick,
        HeraldKind::Bell,
        HeraldKind::GroundGround,
        HeraldKind::DoubleExcited,
        HeraldKind::Dephased,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            HeraldKind::NoClick => "no_click",
            HeraldKind::Bell => "bell",
            HeraldKind::GroundGround => "ground_ground",
            HeraldKind::DoubleExcited => "double_excited",
            HeraldKind::Dephased => "dephased",
        }
    }

    pub fn is_herald(self) -> bool {
        self != HeraldKind::NoClick
    }

    /// Heralded two-qubit state (Ψ- heralds already corrected to Ψ+).
    pub fn state(self) -> Option<DensityMatrix> {
        match self {
            HeraldKind::NoClick => None,
            HeraldKind::Bell => Some(DensityMatrix::psi_plus()),
            HeraldKind::GroundGround => Some(DensityMatrix::ground_ground()),
            HeraldKind::DoubleExcited => Some(DensityMatrix::excited_excited()),
            HeraldKind::Dephased => Some(DensityMatrix::dephased_mixed()),
        }
    }

    /// `fidelity_to_bell(self.state())`, without building the matrix.
    pub fn bell_fidelity(self) -> Option<f64> {
        match self {
            HeraldKind::NoClick => None,
            HeraldKind::Bell => Some(1.0),
            HeraldKind::Dephased => Some(0.5),
            HeraldKind::GroundGround | HeraldKind::DoubleExcited => Some(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeraldOutcome {
    pub kind: HeraldKind,
    pub state: Option<DensityMatrix>,
}

impl From<HeraldKind> for HeraldOutcome {
    fn from(kind: HeraldKind) -> Self {
        Self {
            kind,
            state: kind.state(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeraldMode {
    OneClick,
    TwoClick,
}

impl HeraldMode {
    /// Attempt slots charged per heralding sequence.
    pub fn attempts_per_sequence(self) -> u64 {
        match self {
            HeraldMode::OneClick => 1,
            HeraldMode::TwoClick => 2,
        }
    }
}

/// How `herald_until_success` walks through failed attempts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeraldSampling {
    /// Every attempt is drawn individually.
    PerAttempt,
    /// The number of failed sequences is drawn from its geometric law and the
    /// successful sequence from the conditional outcome distribution. Same
    /// law as `PerAttempt`, different random sequence.
    #[default]
    SkipAhead,
}

/// Detector record of one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundDraw {
    /// Detected signal photons (`s_1 + s_2`).
    pub signal: u8,
    /// Detected noise photons (`m`).
    pub noise: u64,
}

impl RoundDraw {
    pub fn clicked(&self) -> bool {
        self.signal > 0 || self.noise > 0
    }
}

/// Classification of a one-click round.
pub fn classify_one_click(x: [bool; 2], round: RoundDraw) -> HeraldKind {
    if !round.clicked() {
        return HeraldKind::NoClick;
    }
    match (x[0], x[1]) {
        (true, true) => HeraldKind::DoubleExcited,
        (false, false) => HeraldKind::GroundGround,
        _ if round.noise > 0 => HeraldKind::Dephased,
        _ => HeraldKind::Bell,
    }
}

/// Classification of a two-click sequence. `x` is the pre-flip excitation
/// pattern; `second` is `None` when round 1 did not click.
pub fn classify_two_click(x: [bool; 2], first: RoundDraw, second: Option<RoundDraw>) -> HeraldKind {
    let second = match second {
        Some(r) if first.clicked() && r.clicked() => r,
        _ => return HeraldKind::NoClick,
    };
    match (x[0], x[1]) {
        (true, true) => HeraldKind::GroundGround,
        (false, false) => HeraldKind::DoubleExcited,
        _ if first.noise == 0 && second.noise == 0 => HeraldKind::Bell,
        _ => HeraldKind::Dephased,
    }
}

/// Exact per-sequence outcome probabilities, indexed by [`HeraldKind::index`].
pub fn outcome_probabilities(params: &AttemptParams, mode: HeraldMode) -> [f64; 5] {
    let pe = params.p_e;
    let eta = params.eta;
    let z = params.no_noise_click();
    let single = 2.0 * pe * (1.0 - pe);
    let both = pe * pe;
    let none = (1.0 - pe) * (1.0 - pe);
    // click probability of a round with 0, 1 or 2 excitations
    let click0 = 1.0 - z;
    let click1 = 1.0 - (1.0 - eta) * z;
    let click2 = 1.0 - (1.0 - eta) * (1.0 - eta) * z;
    let mut p = [0.0; 5];
    match mode {
        HeraldMode::OneClick => {
            p[HeraldKind::Bell.index()] = single * eta * z;
            p[HeraldKind::Dephased.index()] = single * click0;
            p[HeraldKind::GroundGround.index()] = none * click0;
            p[HeraldKind::DoubleExcited.index()] = both * click2;
        }
        HeraldMode::TwoClick => {
            let bell_round = eta * z;
            p[HeraldKind::Bell.index()] = single * bell_round * bell_round;
            p[HeraldKind::Dephased.index()] =
                single * (click1 * click1 - bell_round * bell_round).max(0.0);
            p[HeraldKind::GroundGround.index()] = both * click2 * click0;
            p[HeraldKind::DoubleExcited.index()] = none * click0 * click2;
        }
    }
    p[HeraldKind::NoClick.index()] = (1.0 - p[1..].iter().sum::<f64>()).max(0.0);
    p
}

/// Prepared samplers for repeated attempts with fixed parameters.
#[derive(Clone, Debug)]
pub struct AttemptSampler {
    params: AttemptParams,
    excite: BernoulliSampler,
    transduce: BernoulliSampler,
    noise: PoissonSampler,
}

impl AttemptSampler {
    pub fn new(params: AttemptParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            excite: BernoulliSampler::new(params.p_e)?,
            transduce: BernoulliSampler::new(params.eta)?,
            noise: PoissonSampler::new(params.n_add)?,
        })
    }

    pub fn params(&self) -> &AttemptParams {
        &self.params
    }

    pub fn excitations(&self, rng: &mut RngStream) -> [bool; 2] {
        [self.excite.sample(rng), self.excite.sample(rng)]
    }

    /// Transduction and noise draws for one round with fixed excitations.
    pub fn round(&self, rng: &mut RngStream, x: [bool; 2]) -> RoundDraw {
        let mut signal = 0u8;
        for xi in x {
            if xi && self.transduce.sample(rng) {
                signal += 1;
            }
        }
        let n = self.noise.sample(rng) + self.noise.sample(rng);
        let noise = self.transduce.thin(rng, n);
        RoundDraw { signal, noise }
    }

    pub fn one_click_with(&self, rng: &mut RngStream, x: [bool; 2]) -> HeraldKind {
        classify_one_click(x, self.round(rng, x))
    }

    /// Round 2 (after the π-pulse) is drawn only if round 1 clicked.
    pub fn two_click_with(&self, rng: &mut RngStream, x: [bool; 2]) -> HeraldKind {
        let first = self.round(rng, x);
        if !first.clicked() {
            return HeraldKind::NoClick;
        }
        let second = self.round(rng, [!x[0], !x[1]]);
        classify_two_click(x, first, Some(second))
    }

    pub fn one_click(&self, rng: &mut RngStream) -> HeraldKind {
        let x = self.excitations(rng);
        self.one_click_with(rng, x)
    }

    pub fn two_click(&self, rng: &mut RngStream) -> HeraldKind {
        let x = self.excitations(rng);
        self.two_click_with(rng, x)
    }

    pub fn sequence(&self, rng: &mut RngStream, mode: HeraldMode) -> HeraldKind {
        match mode {
            HeraldMode::OneClick => self.one_click(rng),
            HeraldMode::TwoClick => self.two_click(rng),
        }
    }
}

/// Repeated heralding with fixed parameters, mode and sampling strategy.
#[derive(Clone, Debug)]
pub struct Herald {
    mode: HeraldMode,
    sampling: HeraldSampling,
    attempt: AttemptSampler,
    skip: GeometricSampler,
    /// Cumulative conditional distribution over Bell, GG, EE, Dephased.
    cumulative: [f64; 4],
}

impl Herald {
    pub fn new(params: AttemptParams, mode: HeraldMode, sampling: HeraldSampling) -> Result<Self> {
        let probs = outcome_probabilities(&params, mode);
        let success: f64 = probs[1..].iter().sum();
        let mut cumulative = [0.0; 4];
        let mut acc = 0.0;
        for (c, p) in cumulative.iter_mut().zip(&probs[1..]) {
            acc += p;
            *c = if success > 0.0 { acc / success } else { 0.0 };
        }
        cumulative[3] = 1.0;
        Ok(Self {
            mode,
            sampling,
            attempt: AttemptSampler::new(params)?,
            skip: GeometricSampler::new(success.clamp(0.0, 1.0))?,
            cumulative,
        })
    }

    pub fn mode(&self) -> HeraldMode {
        self.mode
    }

    pub fn params(&self) -> &AttemptParams {
        self.attempt.params()
    }

    /// Runs sequences until something is heralded or `max_attempts` attempt
    /// slots are used. Only whole sequences are started; on the cap the
    /// result is `(NoClick, max_attempts)`.
    pub fn until_success(&self, rng: &mut RngStream, max_attempts: u64) -> (HeraldKind, u64) {
        let cost = self.mode.attempts_per_sequence();
        let sequences = max_attempts / cost;
        match self.sampling {
            HeraldSampling::PerAttempt => {
                for i in 0..sequences {
                    let kind = self.attempt.sequence(rng, self.mode);
                    if kind.is_herald() {
                        return (kind, (i + 1) * cost);
                    }
                }
            }
            HeraldSampling::SkipAhead => {
                let failures = self.skip.sample(rng);
                if failures < sequences {
                    let u = rng.uniform();
                    let slot = self.cumulative.iter().position(|&c| u < c).unwrap_or(3);
                    return (HeraldKind::ALL[slot + 1], (failures + 1) * cost);
                }
            }
        }
        (HeraldKind::NoClick, max_attempts)
    }
}

pub fn attempt_one_click(params: &AttemptParams, rng: &mut RngStream) -> Result<HeraldOutcome> {
    Ok(AttemptSampler::new(*params)?.one_click(rng).into())
}

pub fn attempt_two_click(params: &AttemptParams, rng: &mut RngStream) -> Result<HeraldOutcome> {
    Ok(AttemptSampler::new(*params)?.two_click(rng).into())
}

/// Attempt-by-attempt heralding; see [`Herald::until_success`].
pub fn herald_until_success(
    params: &AttemptParams,
    mode: HeraldMode,
    rng: &mut RngStream,
    max_attempts: u64,
) -> Result<(HeraldOutcome, u64)> {
    let herald = Herald::new(*params, mode, HeraldSampling::PerAttempt)?;
    let (kind, used) = herald.until_success(rng, max_attempts);
    Ok((kind.into(), used))
}
