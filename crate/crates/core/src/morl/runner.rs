use rand::Rng;

use super::memory::{SampleMemory, StateFeatures};
use super::policy::{epsilon_schedule, explore_policy, greedy_action};
use super::qnet::QNetSet;
use super::targets::{RewardTarget, UpdateRule};
use super::{retrain_all, Learner, MorlError, Scalarization, TaskConfig, WeightVector};
use crate::env::{Action, Environment, RewardVector, HORIZON};
use crate::neural::TrainConfig;

/// Agent-side settings shared by all tasks of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentConfig {
    /// Scalarization of the goal policy and of logged rewards.
    pub scalarization: Scalarization,
    pub train: TrainConfig,
}

/// One row of the per-episode log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub sequence_id: u64,
    pub task_index: usize,
    pub episode_index: usize,
    pub actions: [usize; HORIZON],
    pub reward: RewardVector,
    /// Terminal reward scalarized with the task weights.
    pub scalarized_reward: f64,
    pub epsilon: f64,
    /// Scalarized `Q_t(s_t, a_t)` at the visited state-action pairs.
    pub expected_h: Vec<f64>,
    pub friction: f64,
    pub weights: WeightVector,
}

/// Sample memory and networks handed from one task to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct Carry {
    pub memory: SampleMemory,
    pub qnets: QNetSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub logs: Vec<EpisodeLog>,
    pub retrain_events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceLogs {
    pub episodes: Vec<EpisodeLog>,
    pub weights: Vec<WeightVector>,
    pub retrain_events: Vec<usize>,
    pub carry: Carry,
}

struct LogIds {
    sequence_id: u64,
    task_index: usize,
}

fn run_learning<E, R>(
    env: &mut E,
    task: &TaskConfig,
    learner: &Learner,
    log_scalarization: Scalarization,
    carry: Carry,
    ids: LogIds,
    rng: &mut R,
) -> Result<(TaskOutcome, Carry), MorlError>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
{
    task.validate()?;
    let w = task.weights;
    let Carry {
        mut memory,
        mut qnets,
    } = carry;
    let mut logs = Vec::with_capacity(task.episodes);
    let mut retrain_events = 0;

    for episode in 0..task.episodes {
        let epsilon = epsilon_schedule(episode, task.epsilon0, task.lambda);
        let first = env.reset();
        let mut state = StateFeatures::initial(env.normalize(&first));
        let mut states = Vec::with_capacity(HORIZON);
        let mut actions = Vec::with_capacity(HORIZON);
        let mut expected_h = Vec::with_capacity(HORIZON);
        let mut reward = RewardVector::ZERO;

        for t in 0..HORIZON {
            let (action, expected) = if qnets.is_trained(t) {
                let rows = qnets.predict_all_actions(&state);
                let goal = greedy_action(rows.view(), &w, learner.scalarization);
                let a = explore_policy(goal, epsilon, rng);
                let q = rows.row(a.index());
                (a, log_scalarization.value(q.as_slice().expect("contiguous row"), &w))
            } else {
                (Action::uniform(rng), 0.0)
            };
            let step = env.step(action)?;
            expected_h.push(expected);
            actions.push(action);
            let next = (!step.terminal).then(|| state.advance(action, env.normalize(&step.observation)));
            states.push(state);
            match next {
                Some(n) => state = n,
                None => {
                    reward = step.reward;
                    break;
                }
            }
        }

        memory.push_episode(&states, &actions, reward);
        logs.push(EpisodeLog {
            sequence_id: ids.sequence_id,
            task_index: ids.task_index,
            episode_index: episode,
            actions: std::array::from_fn(|t| actions[t].index()),
            reward,
            scalarized_reward: log_scalarization.reward(&reward, &w),
            epsilon,
            expected_h,
            friction: env.episode_parameter(),
            weights: w,
        });

        if (episode + 1) % task.retrain_interval == 0 {
            let epsilon_now = epsilon_schedule(episode + 1, task.epsilon0, task.lambda);
            qnets = retrain_all(&memory, &qnets, learner, &w, epsilon_now, rng)?;
            retrain_events += 1;
        }
    }

    Ok((TaskOutcome { logs, retrain_events }, Carry { memory, qnets }))
}

/// Runs one task of the vector-valued learner, continuing from `carry` when
/// given (transfer) or from an empty memory and untrained networks.
pub fn run_task<E, R>(
    env: &mut E,
    task: &TaskConfig,
    agent: &AgentConfig,
    carry: Option<Carry>,
    sequence_id: u64,
    task_index: usize,
    rng: &mut R,
) -> Result<(TaskOutcome, Carry), MorlError>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
{
    let learner = Learner {
        rule: task.update_rule,
        update: task.update(),
        scalarization: agent.scalarization,
        reward: RewardTarget::Vector,
        train: agent.train.clone(),
    };
    let carry = carry.unwrap_or_else(|| Carry {
        memory: SampleMemory::new(),
        qnets: QNetSet::untrained(2),
    });
    run_learning(
        env,
        task,
        &learner,
        agent.scalarization,
        carry,
        LogIds {
            sequence_id,
            task_index,
        },
        rng,
    )
}

/// Runs the tasks in order, carrying memory and networks forward. The
/// exploration schedule restarts with every task.
pub fn run_sequence<E, R>(
    env: &mut E,
    tasks: &[TaskConfig],
    agent: &AgentConfig,
    sequence_id: u64,
    rng: &mut R,
) -> Result<SequenceLogs, MorlError>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
{
    if tasks.is_empty() {
        return Err(MorlError::InvalidConfig("task sequence is empty".into()));
    }
    let mut episodes = Vec::new();
    let mut retrain_events = Vec::with_capacity(tasks.len());
    let mut carry = None;
    for (index, task) in tasks.iter().enumerate() {
        let (outcome, next) = run_task(env, task, agent, carry, sequence_id, index, rng)?;
        episodes.extend(outcome.logs);
        retrain_events.push(outcome.retrain_events);
        carry = Some(next);
    }
    Ok(SequenceLogs {
        episodes,
        weights: tasks.iter().map(|t| t.weights).collect(),
        retrain_events,
        carry: carry.expect("non-empty sequence"),
    })
}

/// Single-objective baseline: the same fitted Q-iteration machinery on the
/// weighted arithmetic mean of the reward, with scalar-output networks,
/// off-policy targets and no transfer.
pub fn run_baseline_task<E, R>(
    env: &mut E,
    task: &TaskConfig,
    agent: &AgentConfig,
    sequence_id: u64,
    task_index: usize,
    rng: &mut R,
) -> Result<TaskOutcome, MorlError>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
{
    let learner = Learner {
        rule: UpdateRule::OffPolicy,
        update: task.update(),
        scalarization: Scalarization::Arithmetic,
        reward: RewardTarget::Arithmetic(task.weights),
        train: agent.train.clone(),
    };
    let carry = Carry {
        memory: SampleMemory::new(),
        qnets: QNetSet::untrained(1),
    };
    let ids = LogIds {
        sequence_id,
        task_index,
    };
    let (outcome, _) = run_learning(env, task, &learner, agent.scalarization, carry, ids, rng)?;
    Ok(outcome)
}
