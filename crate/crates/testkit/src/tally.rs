//! Brute-force recount of ballots and the outcome they imply.

use deme_core::decision::{BallotContent, OutcomeStatus, Procedure, Stance, TallyCounts, YesNo};

/// Counts by scanning the ballots once per bucket.
pub fn recount(procedure: Procedure, option_count: usize, ballots: &[BallotContent]) -> TallyCounts {
    let count = |pred: &dyn Fn(&BallotContent) -> bool| ballots.iter().filter(|b| pred(b)).count() as u32;
    match procedure {
        Procedure::Majority => {
            let choice =
                |c: YesNo| move |b: &BallotContent| matches!(b, BallotContent::YesNoAbstain { choice } if *choice == c);
            TallyCounts::Majority {
                yes: count(&choice(YesNo::Yes)),
                no: count(&choice(YesNo::No)),
                abstain: count(&choice(YesNo::Abstain)),
            }
        }
        Procedure::Plurality => TallyCounts::Plurality {
            counts: (0..option_count)
                .map(|o| count(&|b| matches!(b, BallotContent::SingleChoice { option } if *option == o)))
                .collect(),
        },
        Procedure::Approval => TallyCounts::Approval {
            counts: (0..option_count)
                .map(|o| count(&|b| matches!(b, BallotContent::ApprovalSet { options } if options.contains(&o))))
                .collect(),
        },
        Procedure::Consensus => {
            let stance =
                |s: Stance| move |b: &BallotContent| matches!(b, BallotContent::Consent { stance, .. } if *stance == s);
            TallyCounts::Consensus {
                agree: count(&stance(Stance::Agree)),
                stand_aside: count(&stance(Stance::StandAside)),
                block: count(&stance(Stance::Block)),
            }
        }
    }
}

/// Quorum with the fraction given in whole percent, compared in integers.
pub fn quorum_met(participation: u32, eligible: u32, percent: Option<u32>) -> bool {
    match percent {
        None => true,
        Some(p) => u64::from(participation) * 100 >= u64::from(p) * u64::from(eligible),
    }
}

/// The outcome a closed poll must report.
pub fn expected_outcome(
    counts: &TallyCounts,
    participation: u32,
    eligible: u32,
    percent: Option<u32>,
) -> OutcomeStatus {
    if !quorum_met(participation, eligible, percent) {
        return OutcomeStatus::QuorumNotMet;
    }
    match counts {
        TallyCounts::Majority { yes, no, .. } => {
            if yes > no {
                OutcomeStatus::Passed
            } else {
                OutcomeStatus::Failed
            }
        }
        TallyCounts::Plurality { counts } | TallyCounts::Approval { counts } => {
            // an option leads when nothing beats it
            let leaders: Vec<usize> = (0..counts.len())
                .filter(|&i| counts.iter().all(|&other| other <= counts[i]))
                .collect();
            if leaders.len() == 1 {
                OutcomeStatus::Winner { option: leaders[0] }
            } else {
                OutcomeStatus::Tied { options: leaders }
            }
        }
        TallyCounts::Consensus {
            agree,
            stand_aside,
            block,
        } => {
            if *block == 0 && agree + stand_aside > 0 {
                OutcomeStatus::Passed
            } else {
                OutcomeStatus::Failed
            }
        }
    }
}
