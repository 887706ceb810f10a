//! Envelope snapshots over the course of a single run.

use std::io::Write;

use ars_core::{BuiltinTarget, Method, Piece, Sampler, SupportSet};

use crate::error::{BenchError, Result};
use crate::experiment::replica_rng;

pub const TRACE_HEADER: &str =
    "iteration,log_normalizer,index,slope,log_offset,left,right,log_area,node";

/// The envelope as it stood after `iteration` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSnapshot {
    pub iteration: u64,
    pub log_normalizer: f64,
    pub nodes: Vec<f64>,
    pub pieces: Vec<Piece>,
}

impl TraceSnapshot {
    fn capture<R: rand::Rng>(s: &Sampler<'_, BuiltinTarget, R>) -> Self {
        TraceSnapshot {
            iteration: s.iterations(),
            log_normalizer: s.envelope().log_normalizer(),
            nodes: s.support().nodes().to_vec(),
            pieces: s.envelope().pieces().to_vec(),
        }
    }
}

/// Runs one replica from explicit initial nodes until `n_samples` draws are
/// accepted, capturing the envelope at each requested iteration count that
/// is reached. The final state is always the last snapshot.
pub fn trace_run(
    target: &BuiltinTarget,
    method: Method,
    nodes: Vec<f64>,
    n_samples: usize,
    seed: u64,
    snapshot_iterations: &[u64],
) -> Result<Vec<TraceSnapshot>> {
    if snapshot_iterations.windows(2).any(|w| w[0] > w[1]) {
        return Err(BenchError::Config("trace iterations must be sorted".into()));
    }
    let support = SupportSet::new(nodes, target)?;
    let mut sampler = Sampler::new(method, target, support, replica_rng(seed))?;
    let mut pending = snapshot_iterations.iter().copied().peekable();
    let mut snapshots = Vec::new();
    loop {
        while pending.peek() == Some(&sampler.iterations()) {
            pending.next();
            snapshots.push(TraceSnapshot::capture(&sampler));
        }
        if sampler.accepted() >= n_samples as u64 {
            break;
        }
        sampler.step()?;
    }
    if snapshots.last().map(|s| s.iteration) != Some(sampler.iterations()) {
        snapshots.push(TraceSnapshot::capture(&sampler));
    }
    Ok(snapshots)
}

pub fn write_trace<W: Write>(snapshots: &[TraceSnapshot], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for s in snapshots {
        for (i, p) in s.pieces.iter().enumerate() {
            writeln!(
                out,
                "{},{},{i},{},{},{},{},{},{}",
                s.iteration,
                s.log_normalizer,
                p.slope,
                p.log_offset(),
                p.left,
                p.right,
                p.log_area,
                p.node
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ars_core::{Envelope, Gaussian};

    fn gauss() -> BuiltinTarget {
        Gaussian::new(0.5).unwrap().into()
    }

    #[test]
    fn first_snapshot_is_initial_hull() {
        let t = gauss();
        let init = vec![-1.5, -1.0, 1.8];
        let snaps = trace_run(&t, Method::Cars, init.clone(), 200, 3, &[0, 10, 100]).unwrap();
        assert_eq!(snaps[0].iteration, 0);
        assert_eq!(snaps[0].nodes, init);
        let env = Envelope::build(&t, &SupportSet::new(init, &t).unwrap()).unwrap();
        assert_eq!(snaps[0].pieces, env.pieces());
        assert_eq!(snaps[0].log_normalizer, env.log_normalizer());
        assert_eq!(snaps[1].iteration, 10);
        for w in snaps.windows(2) {
            assert!(w[1].log_normalizer <= w[0].log_normalizer);
        }
    }

    #[test]
    fn unreached_snapshots_are_dropped() {
        let snaps = trace_run(
            &gauss(),
            Method::Ars,
            vec![-1.0, 1.0],
            5,
            0,
            &[0, 1_000_000],
        )
        .unwrap();
        assert_eq!(snaps.len(), 2);
        assert!(snaps[1].iteration < 1_000_000);
    }

    #[test]
    fn unsorted_iterations_rejected() {
        assert!(matches!(
            trace_run(&gauss(), Method::Cars, vec![-1.0, 1.0], 5, 0, &[5, 1]),
            Err(BenchError::Config(_))
        ));
    }

    #[test]
    fn trace_csv() {
        let snaps = trace_run(&gauss(), Method::Cars, vec![-1.0, 0.0, 1.0], 1, 0, &[0]).unwrap();
        let mut buf = Vec::new();
        write_trace(&snaps[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("0,0.69314718"));
    }
}
