use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::Body;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    CoopNav,
    PreyPredator,
    CoopPush,
    HeteroNav,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::CoopNav,
        TaskKind::PreyPredator,
        TaskKind::CoopPush,
        TaskKind::HeteroNav,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::CoopNav => "coop_nav",
            TaskKind::PreyPredator => "prey_predator",
            TaskKind::CoopPush => "coop_push",
            TaskKind::HeteroNav => "hetero_nav",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("task", s, "one of coop_nav, prey_predator, coop_push, hetero_nav"))
    }
}

/// A set of learned agents sharing physical attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub name: &'static str,
    pub count: usize,
    pub body: Body,
}

/// How many neighbours of each kind appear in an observation.
///
/// Observation layout, in order:
/// own position (2), own velocity (2),
/// [push tasks: target landmark offset (2), ball offset (2)],
/// `landmarks` nearest landmark offsets (2 each),
/// `agents` nearest fellow-agent offsets (2 each),
/// `preys` nearest prey offsets and velocities (4 each).
/// Missing neighbours are zero-padded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsLayout {
    pub landmarks: usize,
    pub agents: usize,
    pub preys: usize,
    pub push_targets: bool,
}

impl ObsLayout {
    pub fn dim(&self) -> usize {
        4 + 2 * self.landmarks + 2 * self.agents + 4 * self.preys + if self.push_targets { 4 } else { 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardCoefs {
    /// Penalty per colliding pair of learned agents (navigation tasks).
    pub collision: f64,
    /// Shared bonus per predator-prey contact.
    pub capture: f64,
    /// Weight of the closest agent-to-ball distance (push).
    pub push_agent: f64,
    /// Extra penalty per colliding small/big pair (heterogeneous navigation).
    pub cross_group: f64,
}

impl Default for RewardCoefs {
    fn default() -> Self {
        RewardCoefs {
            collision: 1.0,
            capture: 10.0,
            push_agent: 0.1,
            cross_group: 5.0,
        }
    }
}

/// Full description of one benchmark task instance.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub n_agents: usize,
    pub groups: Vec<Group>,
    pub n_preys: usize,
    pub prey_body: Body,
    pub ball: Option<Body>,
    pub n_landmarks: usize,
    pub landmark_body: Body,
    pub layout: ObsLayout,
    pub episode_len: usize,
    pub rewards: RewardCoefs,
}

/// Visible-neighbour count for the navigation tasks.
fn nav_visible(n: usize) -> usize {
    if n < 6 {
        2
    } else {
        5
    }
}

fn episode_len(n: usize) -> usize {
    if n <= 30 {
        25
    } else {
        50
    }
}

/// Actuation gain of learned agents, the particle-world default.
pub const AGENT_ACCEL: f64 = 5.0;

fn actuated(radius: f64, accel: f64) -> Body {
    Body {
        sensitivity: accel,
        ..Body::agent(radius)
    }
}

impl TaskSpec {
    pub fn new(kind: TaskKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("n", n, "at least 2 agents"));
        }
        let rewards = RewardCoefs::default();
        let landmark_body = Body::landmark(0.05);
        let spec = match kind {
            TaskKind::CoopNav => {
                let k = nav_visible(n);
                TaskSpec {
                    kind,
                    n_agents: n,
                    groups: vec![Group {
                        name: "agent",
                        count: n,
                        body: actuated(0.15, AGENT_ACCEL),
                    }],
                    n_preys: 0,
                    prey_body: Body::agent(0.05),
                    ball: None,
                    n_landmarks: n,
                    landmark_body,
                    layout: ObsLayout {
                        landmarks: k + 1,
                        agents: k,
                        preys: 0,
                        push_targets: false,
                    },
                    episode_len: episode_len(n),
                    rewards,
                }
            }
            TaskKind::HeteroNav => {
                if !n.is_multiple_of(2) {
                    return Err(Error::config("n", n, "an even agent count for hetero_nav"));
                }
                let k = nav_visible(n);
                let small = actuated(0.05, 1.3 * AGENT_ACCEL);
                let big = actuated(0.15, 0.7 * AGENT_ACCEL);
                TaskSpec {
                    kind,
                    n_agents: n,
                    groups: vec![
                        Group {
                            name: "small",
                            count: n / 2,
                            body: small,
                        },
                        Group {
                            name: "big",
                            count: n / 2,
                            body: big,
                        },
                    ],
                    n_preys: 0,
                    prey_body: Body::agent(0.05),
                    ball: None,
                    n_landmarks: n,
                    landmark_body,
                    layout: ObsLayout {
                        landmarks: k + 1,
                        agents: k,
                        preys: 0,
                        push_targets: false,
                    },
                    episode_len: episode_len(n),
                    rewards,
                }
            }
            TaskKind::PreyPredator => {
                // (landmarks, fellow predators, preys) per size band; reproduces
                // the 16 / 28 / 34 observation widths of the benchmark suite.
                let (landmarks, agents, preys) = if n < 6 {
                    (1, 1, 2)
                } else if n < 15 {
                    (2, 4, 3)
                } else {
                    (1, 4, 5)
                };
                let predator = Body {
                    max_speed: 1.0,
                    ..actuated(0.075, 3.0)
                };
                let prey = Body {
                    max_speed: 1.3,
                    ..actuated(0.05, 4.0)
                };
                let obstacle = Body {
                    collide: true,
                    ..Body::landmark(0.2)
                };
                TaskSpec {
                    kind,
                    n_agents: n,
                    groups: vec![Group {
                        name: "predator",
                        count: n,
                        body: predator,
                    }],
                    n_preys: (n / 3).max(1),
                    prey_body: prey,
                    ball: None,
                    n_landmarks: 2,
                    landmark_body: obstacle,
                    layout: ObsLayout {
                        landmarks,
                        agents,
                        preys,
                        push_targets: false,
                    },
                    episode_len: episode_len(n),
                    rewards,
                }
            }
            TaskKind::CoopPush => {
                let k = if n < 6 {
                    2
                } else if n < 15 {
                    5
                } else {
                    10
                };
                let ball = Body {
                    mass: 4.0,
                    ..Body::agent(0.25)
                };
                TaskSpec {
                    kind,
                    n_agents: n,
                    groups: vec![Group {
                        name: "agent",
                        count: n,
                        body: actuated(0.1, AGENT_ACCEL),
                    }],
                    n_preys: 0,
                    prey_body: Body::agent(0.05),
                    ball: Some(ball),
                    n_landmarks: 1,
                    landmark_body,
                    layout: ObsLayout {
                        landmarks: 0,
                        agents: k,
                        preys: 0,
                        push_targets: true,
                    },
                    episode_len: episode_len(n),
                    rewards,
                }
            }
        };
        debug_assert!(spec.layout.landmarks.max(spec.layout.agents).max(spec.layout.preys) <= 10);
        Ok(spec)
    }

    pub fn obs_dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Group index of each learned agent, in agent order.
    pub fn group_assignment(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(g, grp)| std::iter::repeat_n(g, grp.count))
            .collect()
    }

    pub fn is_heterogeneous(&self) -> bool {
        self.groups.len() > 1
    }

    pub fn prey_range(&self) -> Range<usize> {
        self.n_agents..self.n_agents + self.n_preys
    }

    /// Number of actuated entities (learned agents plus scripted preys).
    pub fn n_actuated(&self) -> usize {
        self.n_agents + self.n_preys
    }

    pub fn ball_index(&self) -> Option<usize> {
        self.ball.map(|_| self.n_actuated())
    }

    pub fn landmark_range(&self) -> Range<usize> {
        let start = self.n_actuated() + usize::from(self.ball.is_some());
        start..start + self.n_landmarks
    }

    pub fn n_entities(&self) -> usize {
        self.landmark_range().end
    }

    /// Physical attributes of every entity in world order.
    pub fn bodies(&self) -> Vec<Body> {
        let mut out = Vec::with_capacity(self.n_entities());
        for g in &self.groups {
            out.extend(std::iter::repeat_n(g.body, g.count));
        }
        out.extend(std::iter::repeat_n(self.prey_body, self.n_preys));
        out.extend(self.ball);
        out.extend(std::iter::repeat_n(self.landmark_body, self.n_landmarks));
        out
    }
}
