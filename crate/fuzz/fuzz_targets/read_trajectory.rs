//! Trajectory CSV reading: no panics, and accepted tables survive a write/read round trip.

#![no_main]

use cellcoop::cli::output::{parse_trajectory, write_table_to};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok((labels, traj)) = parse_trajectory(data) else { return };
    let header: Vec<String> = std::iter::once("t".to_string()).chain(labels.iter().cloned()).collect();
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, y)| std::iter::once(*t).chain(y.iter().copied()).collect())
        .collect();
    let mut buf = Vec::new();
    write_table_to(&mut buf, &header, &rows).unwrap();
    let (again, back) = parse_trajectory(buf.as_slice()).unwrap();
    assert_eq!(again, labels);
    // NaN payloads and signs are not preserved by the text format
    let same = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
    };
    assert!(same(&back.times, &traj.times));
    assert_eq!(back.states.len(), traj.states.len());
    for (a, b) in back.states.iter().zip(&traj.states) {
        assert!(same(a, b));
    }
});
