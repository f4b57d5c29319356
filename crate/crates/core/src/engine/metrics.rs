//! Timing and collateral metrics, with the closed forms the simulator is
//! compared against.
//!
//! Off-chain phase durations (market clearing gamma, select omega, ranking
//! omega') are modeled as zero rounds by default and added to reported
//! completions; they are small next to the synchrony bound.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::crypto::Round;

/// Closed-form model of the sequential-retry baseline: one alternative is
/// attempted at a time; a failed attempt ties assets up for `m_rounds`
/// before refunding, a successful one completes in `epsilon_rounds`. With
/// per-attempt completion probability q the expected number of attempts is
/// 1/q, so the expected time is max{(1/q - 1) m, 0} + epsilon.
#[derive(Debug, Clone, Serialize)]
pub struct SequentialModel {
    pub m_rounds: u64,
    pub epsilon_rounds: u64,
    pub q: f64,
}

impl SequentialModel {
    pub fn expected_rounds(&self) -> f64 {
        let retries = (1.0 / self.q - 1.0).max(0.0);
        retries * self.m_rounds as f64 + self.epsilon_rounds as f64
    }

    pub fn expected_attempts(&self) -> f64 {
        1.0 / self.q
    }
}

/// Closed forms for the parallel protocols, in rounds.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedForms {
    /// Best case for ProtocolA: epsilon + gamma + omega (no hard timeout).
    pub protocol_a_best: f64,
    /// Worst case for ProtocolA: the swap completes right before expiry.
    pub protocol_a_worst: f64,
    /// ProtocolB when the top-priority scheme completes: epsilon + gamma +
    /// omega'.
    pub protocol_b_top: f64,
    /// ProtocolB otherwise: the hard timeout plus off-chain phases.
    pub protocol_b_other: f64,
}

impl ClosedForms {
    pub fn new(
        epsilon: f64,
        hard_timeout_a: u64,
        hard_timeout_b: u64,
        gamma: f64,
        omega: f64,
        omega_prime: f64,
    ) -> Self {
        ClosedForms {
            protocol_a_best: epsilon + gamma + omega,
            protocol_a_worst: hard_timeout_a as f64 + gamma,
            protocol_b_top: epsilon + gamma + omega_prime,
            protocol_b_other: hard_timeout_b as f64 + gamma + omega_prime,
        }
    }
}

/// Outcome of a single run folded into batch statistics.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub completed: bool,
    pub completion_round: Option<Round>,
    pub rounds: u64,
    pub attempts: u64,
    pub collateral: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub protocol: String,
    pub runs: usize,
    pub success_rate: f64,
    pub mean_rounds: f64,
    pub mean_attempts: f64,
    pub mean_completion_round: Option<f64>,
    /// Per party, the maximum collateral observed in any run.
    pub max_collateral: BTreeMap<String, u64>,
    pub closed_form_expected_rounds: Option<f64>,
}

pub fn aggregate(
    protocol: &str,
    stats: &[RunStats],
    closed_form: Option<f64>,
) -> BatchReport {
    let runs = stats.len();
    let successes = stats.iter().filter(|s| s.completed).count();
    let mean_rounds = if runs == 0 {
        0.0
    } else {
        stats.iter().map(|s| s.rounds as f64).sum::<f64>() / runs as f64
    };
    let mean_attempts = if runs == 0 {
        0.0
    } else {
        stats.iter().map(|s| s.attempts as f64).sum::<f64>() / runs as f64
    };
    let completions: Vec<u64> = stats
        .iter()
        .filter_map(|s| s.completion_round)
        .collect();
    let mean_completion_round = if completions.is_empty() {
        None
    } else {
        Some(completions.iter().map(|c| *c as f64).sum::<f64>() / completions.len() as f64)
    };
    let mut max_collateral: BTreeMap<String, u64> = BTreeMap::new();
    for s in stats {
        for (p, c) in &s.collateral {
            let entry = max_collateral.entry(p.clone()).or_insert(0);
            *entry = (*entry).max(*c);
        }
    }
    BatchReport {
        protocol: protocol.to_string(),
        runs,
        success_rate: if runs == 0 {
            0.0
        } else {
            successes as f64 / runs as f64
        },
        mean_rounds,
        mean_attempts,
        mean_completion_round,
        max_collateral,
        closed_form_expected_rounds: closed_form,
    }
}
