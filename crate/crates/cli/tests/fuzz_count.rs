//! The exhaustive checker's interleaving count against a per-replica
//! brute-force enumeration.

mod common;

use edgeflow_cli::fuzz::{self, Duplicate, Step, Target};
use edgeflow_core::ReplicaId;

fn expected(script: &[Step], replicas: usize, dup: Option<Duplicate>) -> u64 {
    let writers: Vec<ReplicaId> = script.iter().map(|s| s.replica).collect();
    common::expected(&writers, replicas, dup)
}

#[test]
fn counts_match_brute_force_for_every_small_script() {
    for target in [Target::ORSet, Target::PNCounter] {
        for (max_ops, replicas) in [(1, 3), (2, 3), (3, 2)] {
            for script in fuzz::scripts(target, max_ops, replicas) {
                for dup in fuzz::duplicates(&script, replicas) {
                    let got = fuzz::check_script(target, &script, replicas, dup).unwrap();
                    assert_eq!(
                        got,
                        expected(&script, replicas, dup),
                        "{} {dup:?}",
                        fuzz::describe(&script)
                    );
                }
            }
        }
    }
}

#[test]
fn counts_match_brute_force_on_sampled_four_op_scripts() {
    for target in [Target::ORSet, Target::PNCounter] {
        let all = fuzz::scripts(target, 4, 3);
        for script in all.iter().step_by(997) {
            for dup in fuzz::duplicates(script, 3) {
                let got = fuzz::check_script(target, script, 3, dup).unwrap();
                assert_eq!(
                    got,
                    expected(script, 3, dup),
                    "{} {dup:?}",
                    fuzz::describe(script)
                );
            }
        }
    }
}

#[test]
fn run_totals_are_sums_over_scripts_and_duplicates() {
    let report = fuzz::run(2, 2, 0, 10);
    assert!(report.passed());
    let mut total = 0;
    for target in [Target::ORSet, Target::PNCounter] {
        for script in fuzz::scripts(target, 2, 2) {
            for dup in fuzz::duplicates(&script, 2) {
                total += expected(&script, 2, dup);
            }
        }
    }
    assert_eq!(report.interleavings, total);
    assert_eq!(report.sampled_runs, 10);
}
