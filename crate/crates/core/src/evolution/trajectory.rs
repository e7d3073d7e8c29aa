//! Per-segment trajectories: time, norm and tracked populations.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::density::DensityMatrix;
use crate::error::Result;
use crate::layout::{Cavity, Level, Site, SystemLayout};

/// A scalar read off the state at each sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tracked {
    /// Population of `level` on a qubit or the coupler.
    Level(Site, Level),
    /// Mean photon number.
    Photons(Cavity),
    /// Population of the highest retained Fock level.
    TopFock(Cavity),
    /// Total f population of the spectator qubits.
    SpectatorF,
}

impl Tracked {
    pub fn column_name(&self) -> String {
        match self {
            Tracked::Level(site, level) => format!("p_{level}_{site}"),
            Tracked::Photons(Cavity::L) => "n_a".into(),
            Tracked::Photons(Cavity::R) => "n_b".into(),
            Tracked::TopFock(Cavity::L) => "top_fock_a".into(),
            Tracked::TopFock(Cavity::R) => "top_fock_b".into(),
            Tracked::SpectatorF => "spectator_f".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub segment: String,
    /// Seconds since the start of the protocol.
    pub time: f64,
    /// State norm, or the trace for density matrices.
    pub norm: f64,
    pub values: Vec<f64>,
}

/// Collects rows for a fixed list of tracked quantities.
#[derive(Clone, Debug)]
pub struct TrajectoryRecorder {
    layout: SystemLayout,
    columns: Vec<Tracked>,
    rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecorder {
    pub fn new(layout: SystemLayout, columns: Vec<Tracked>) -> Self {
        TrajectoryRecorder { layout, columns, rows: Vec::new() }
    }

    /// e and f populations of every qubit, coupler excitation, photon numbers,
    /// top-Fock populations and the spectator f total.
    pub fn default_columns(layout: &SystemLayout) -> Vec<Tracked> {
        let mut cols = Vec::new();
        let qubits = (1..=layout.n_left).map(Site::Left).chain((1..=layout.n_right).map(Site::Right));
        for s in qubits {
            cols.push(Tracked::Level(s, Level::E));
            cols.push(Tracked::Level(s, Level::F));
        }
        cols.push(Tracked::Level(Site::Coupler, Level::E));
        cols.extend([
            Tracked::Photons(Cavity::L),
            Tracked::Photons(Cavity::R),
            Tracked::TopFock(Cavity::L),
            Tracked::TopFock(Cavity::R),
            Tracked::SpectatorF,
        ]);
        cols
    }

    pub fn columns(&self) -> &[Tracked] {
        &self.columns
    }

    pub fn rows(&self) -> &[TrajectoryRow] {
        &self.rows
    }

    /// Records a pure-state sample. A time earlier than the last row of the
    /// same segment means the segment was restarted; its later rows are dropped.
    pub fn record(&mut self, segment: &str, time: f64, indices: &[usize], amplitudes: &[C64]) {
        let probs: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let norm = probs.iter().sum::<f64>().sqrt();
        self.push(segment, time, norm, indices, &probs);
    }

    pub fn record_density(&mut self, segment: &str, time: f64, rho: &DensityMatrix) {
        let probs: Vec<f64> = (0..rho.support().len()).map(|k| rho.block()[(k, k)].re).collect();
        let trace = probs.iter().sum();
        self.push(segment, time, trace, rho.support(), &probs);
    }

    fn push(&mut self, segment: &str, time: f64, norm: f64, indices: &[usize], probs: &[f64]) {
        while self.rows.last().is_some_and(|r| r.segment == segment && r.time >= time) {
            self.rows.pop();
        }
        let values = self.columns.iter().map(|c| evaluate(&self.layout, *c, indices, probs)).collect();
        self.rows.push(TrajectoryRow { segment: segment.to_string(), time, norm, values });
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["segment".to_string(), "time_s".into(), "norm".into()];
        header.extend(self.columns.iter().map(Tracked::column_name));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.segment.clone(), format!("{:e}", r.time), format!("{:e}", r.norm)];
            rec.extend(r.values.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// Value of a tracked quantity from basis populations `probs` on `indices`.
pub fn evaluate(layout: &SystemLayout, tracked: Tracked, indices: &[usize], probs: &[f64]) -> f64 {
    let dims = layout.dims();
    let strides = layout.strides();
    let level_at = |i: usize, f: usize| (i / strides[f]) % dims[f];
    match tracked {
        Tracked::Level(site, level) => match layout.factor_of(site) {
            Ok(f) => indices.iter().zip(probs).filter(|(&i, _)| level_at(i, f) == level.index()).map(|(_, p)| p).sum(),
            Err(_) => 0.0,
        },
        Tracked::Photons(c) => {
            let f = layout.factor_of(Site::Mode(c)).expect("mode factor");
            indices.iter().zip(probs).map(|(&i, p)| level_at(i, f) as f64 * p).sum()
        }
        Tracked::TopFock(c) => {
            let f = layout.factor_of(Site::Mode(c)).expect("mode factor");
            let top = layout.cutoff(c);
            indices.iter().zip(probs).filter(|(&i, _)| level_at(i, f) == top).map(|(_, p)| p).sum()
        }
        Tracked::SpectatorF => {
            let factors: Vec<usize> = (2..=layout.n_left)
                .map(Site::Left)
                .chain((2..=layout.n_right).map(Site::Right))
                .map(|s| layout.factor_of(s).expect("spectator factor"))
                .collect();
            indices
                .iter()
                .zip(probs)
                .map(|(&i, p)| factors.iter().filter(|&&f| level_at(i, f) == Level::F.index()).count() as f64 * p)
                .sum()
        }
    }
}
