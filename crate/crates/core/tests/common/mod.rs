#![allow(dead_code)]

use epsflow::analysis::relative_energy_increase;
use epsflow::Trajectory;

pub const ENERGY_SLACK: f64 = 1e-9;
pub const BORSUK_SLACK: f64 = -1e-6;

/// Checks applied to every stable run: `G^ε` never rises by more than
/// `1e-9·|G^ε|` in a step, the Borsuk inequality holds on every curve,
/// and the turning number never changes.
pub fn check_run(traj: &Trajectory) {
    if traj.records.len() > 1 {
        let rise = relative_energy_increase(traj);
        assert!(rise <= ENERGY_SLACK, "energy rose by {rise:e} (relative) in one step");
    }
    let turning = traj.records[0].turning_number;
    for r in &traj.records {
        let rel = r.borsuk_margin() / r.borsuk_rhs;
        assert!(rel >= BORSUK_SLACK, "Borsuk margin {rel:e} at t = {}", r.t);
        assert_eq!(r.turning_number, turning, "turning number changed at t = {}", r.t);
    }
}
