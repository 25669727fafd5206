//! Classical encoder policies for the RAC. The decoder is fixed to `b = m`.
//!
//! Static policies always forward one input bit. The bias-aware policy
//! forwards the bit matching the more frequent query. The two bandits pick
//! between "send a0" (action 0) and "send a1" (action 1) with an ε-greedy
//! rule over exponentially weighted action values; the windowed variant
//! keeps one value row per regime, where the regime is the sign of the bias
//! estimated from the previous `W` queries.
//!
//! `ParamDevice` is not a classical encoder: it is a stand-in for a device
//! with a fixed per-round success probability, used to exercise positive
//! verdicts.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rac_core::Bit;

pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_EXPLORE: f64 = 0.05;
pub const DEFAULT_WINDOW: usize = 200;
pub const DEFAULT_Q_INIT: [f64; 2] = [0.5, 0.5];

fn default_eta() -> f64 {
    DEFAULT_ETA
}
fn default_explore() -> f64 {
    DEFAULT_EXPLORE
}
fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_q_init() -> [f64; 2] {
    DEFAULT_Q_INIT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    StaticA0,
    StaticA1,
    BiasAware {
        known_eps: f64,
    },
    Bandit {
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_explore")]
        explore: f64,
        #[serde(default = "default_q_init")]
        q_init: [f64; 2],
    },
    WindowedBandit {
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_explore")]
        explore: f64,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_q_init")]
        q_init: [f64; 2],
    },
    ParamDevice {
        p_success: f64,
    },
}

impl StrategySpec {
    pub fn bandit() -> Self {
        StrategySpec::Bandit { eta: DEFAULT_ETA, explore: DEFAULT_EXPLORE, q_init: DEFAULT_Q_INIT }
    }

    pub fn windowed_bandit() -> Self {
        StrategySpec::WindowedBandit {
            eta: DEFAULT_ETA,
            explore: DEFAULT_EXPLORE,
            window: DEFAULT_WINDOW,
            q_init: DEFAULT_Q_INIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let learner = |eta: f64, explore: f64, q: &[f64; 2]| {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::domain(format!("eta={eta} must lie in (0,1]")));
            }
            if !(0.0..=1.0).contains(&explore) {
                return Err(Error::domain(format!("explore={explore} must lie in [0,1]")));
            }
            if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::domain("q_init values must lie in [0,1]"));
            }
            Ok(())
        };
        match self {
            StrategySpec::StaticA0 | StrategySpec::StaticA1 => Ok(()),
            StrategySpec::BiasAware { known_eps } => {
                if known_eps.abs() <= 0.5 {
                    Ok(())
                } else {
                    Err(Error::domain("bias_aware: |known_eps| exceeds 1/2"))
                }
            }
            StrategySpec::Bandit { eta, explore, q_init } => learner(*eta, *explore, q_init),
            StrategySpec::WindowedBandit { eta, explore, window, q_init } => {
                if *window < 1 {
                    return Err(Error::domain("window must be at least 1"));
                }
                learner(*eta, *explore, q_init)
            }
            StrategySpec::ParamDevice { p_success } => {
                if (0.0..=1.0).contains(p_success) {
                    Ok(())
                } else {
                    Err(Error::domain("p_success must lie in [0,1]"))
                }
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StrategySpec::StaticA0 => "static_a0",
            StrategySpec::StaticA1 => "static_a1",
            StrategySpec::BiasAware { .. } => "bias_aware",
            StrategySpec::Bandit { .. } => "bandit",
            StrategySpec::WindowedBandit { .. } => "windowed_bandit",
            StrategySpec::ParamDevice { .. } => "param_device",
        }
    }

    pub fn is_device(&self) -> bool {
        matches!(self, StrategySpec::ParamDevice { .. })
    }
}

/// Encoding action: which input bit becomes the message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    SendA0 = 0,
    SendA1 = 1,
}

impl Action {
    fn from_index(i: usize) -> Action {
        if i == 0 {
            Action::SendA0
        } else {
            Action::SendA1
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn encode(self, a0: Bit, a1: Bit) -> Bit {
        match self {
            Action::SendA0 => a0,
            Action::SendA1 => a1,
        }
    }
}

/// Learner state. Plain bandits only use regime row 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    /// `q[regime][action]`.
    pub q: [[f64; 2]; 2],
    #[serde(skip)]
    pub y_window: VecDeque<Bit>,
    #[serde(skip)]
    zeros_in_window: usize,
    pub regime: usize,
    #[serde(skip)]
    pub last_action: Option<(usize, Action)>,
}

impl BanditState {
    pub fn new(q_init: [f64; 2]) -> Self {
        BanditState { q: [q_init, q_init], y_window: VecDeque::new(), zeros_in_window: 0, regime: 0, last_action: None }
    }

    /// Windowed bias estimate: frequency of `y = 0` minus 1/2, zero when empty.
    pub fn window_bias(&self) -> f64 {
        if self.y_window.is_empty() {
            0.0
        } else {
            self.zeros_in_window as f64 / self.y_window.len() as f64 - 0.5
        }
    }
}

/// A strategy specification together with its per-run state.
#[derive(Clone, Debug)]
pub struct Strategy {
    spec: StrategySpec,
    state: BanditState,
}

impl Strategy {
    pub fn new(spec: StrategySpec) -> Result<Self> {
        spec.validate()?;
        let q_init = match &spec {
            StrategySpec::Bandit { q_init, .. } | StrategySpec::WindowedBandit { q_init, .. } => *q_init,
            _ => DEFAULT_Q_INIT,
        };
        Ok(Strategy { spec, state: BanditState::new(q_init) })
    }

    pub fn spec(&self) -> &StrategySpec {
        &self.spec
    }

    pub fn state(&self) -> &BanditState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut BanditState {
        &mut self.state
    }

    /// Picks the message before the query of this round is revealed.
    pub fn choose_message<R: Rng + ?Sized>(&mut self, a0: Bit, a1: Bit, rng: &mut R) -> Result<(Bit, Action)> {
        let action = match self.spec {
            StrategySpec::StaticA0 => Action::SendA0,
            StrategySpec::StaticA1 => Action::SendA1,
            StrategySpec::BiasAware { known_eps } => {
                if known_eps >= 0.0 {
                    Action::SendA0
                } else {
                    Action::SendA1
                }
            }
            StrategySpec::Bandit { explore, .. } | StrategySpec::WindowedBandit { explore, .. } => {
                let regime = self.state.regime;
                let action = if rng.gen::<f64>() < explore {
                    Action::from_index(rng.gen_range(0..2))
                } else {
                    let row = self.state.q[regime];
                    // ties go to action 0
                    Action::from_index(usize::from(row[1] > row[0]))
                };
                self.state.last_action = Some((regime, action));
                action
            }
            StrategySpec::ParamDevice { .. } => {
                return Err(Error::domain("param_device has no encoder; use device_outcome"));
            }
        };
        Ok((action.encode(a0, a1), action))
    }

    /// Exponential-recency update of the value of `action` in the regime row
    /// that was active when it was chosen. Static policies ignore it.
    pub fn update(&mut self, action: Action, reward: bool) {
        let eta = match self.spec {
            StrategySpec::Bandit { eta, .. } | StrategySpec::WindowedBandit { eta, .. } => eta,
            _ => return,
        };
        let regime = match self.state.last_action {
            Some((regime, a)) if a == action => regime,
            _ => self.state.regime,
        };
        let r = if reward { 1.0 } else { 0.0 };
        let q = &mut self.state.q[regime][action.index()];
        *q += eta * (r - *q);
    }

    /// Pushes the query of the completed round into the sliding window and
    /// recomputes the regime. No-op for non-windowed strategies.
    pub fn observe_query(&mut self, y: Bit) {
        let window = match self.spec {
            StrategySpec::WindowedBandit { window, .. } => window,
            _ => return,
        };
        let st = &mut self.state;
        st.y_window.push_back(y);
        if !y.is_one() {
            st.zeros_in_window += 1;
        }
        if st.y_window.len() > window {
            if let Some(old) = st.y_window.pop_front() {
                if !old.is_one() {
                    st.zeros_in_window -= 1;
                }
            }
        }
        st.regime = usize::from(st.window_bias() < 0.0);
    }

    /// Success indicator of the parametric reference device.
    pub fn device_outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<bool> {
        match self.spec {
            StrategySpec::ParamDevice { p_success } => Ok(rng.gen::<f64>() < p_success),
            _ => Err(Error::domain("device_outcome requires a param_device strategy")),
        }
    }
}
