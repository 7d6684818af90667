//! Per-episode learning curves and their CSV form.
//!
//! Schema: `episode,steps,return,epsilon,loss_mean` with a header line and LF
//! line endings. `loss_mean` is empty when no gradient step happened during
//! the episode (always, for tabular runs).

use std::io::{Read, Write};

use super::HarnessError;

pub const CSV_HEADER: [&str; 5] = ["episode", "steps", "return", "epsilon", "loss_mean"];

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    /// Cumulative environment steps at the end of this episode.
    pub steps: u64,
    pub ret: f64,
    /// Exploration rate in effect at the episode's last step.
    pub epsilon: f64,
    pub loss_mean: Option<f64>,
}

/// Returns of one seeded run, in episode order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    records: Vec<EpisodeRecord>,
}

impl LearningCurve {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; cumulative steps must strictly increase.
    pub fn push(&mut self, record: EpisodeRecord) -> Result<(), HarnessError> {
        if let Some(last) = self.records.last() {
            if record.steps <= last.steps {
                return Err(HarnessError::InvalidCurve(format!(
                    "episode {} ends at step {} which does not follow {}",
                    record.episode, record.steps, last.steps
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Builds a curve from `(steps, return)` pairs, numbering episodes from 0.
    pub fn from_points(points: &[(u64, f64)]) -> Result<Self, HarnessError> {
        let mut curve = Self::new();
        for (i, &(steps, ret)) in points.iter().enumerate() {
            curve.push(EpisodeRecord { episode: i as u64, steps, ret, epsilon: 0.0, loss_mean: None })?;
        }
        Ok(curve)
    }

    pub fn records(&self) -> &[EpisodeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn returns(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.ret)
    }

    pub fn total_steps(&self) -> u64 {
        self.records.last().map_or(0, |r| r.steps)
    }

    /// Mean return of the last `window` episodes (fewer if the curve is shorter).
    pub fn final_mean(&self, window: usize) -> Option<f64> {
        if self.records.is_empty() || window == 0 {
            return None;
        }
        let tail = &self.records[self.records.len().saturating_sub(window)..];
        Some(tail.iter().map(|r| r.ret).sum::<f64>() / tail.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), HarnessError> {
        let mut w = CurveCsvWriter::new(writer)?;
        for r in &self.records {
            w.write(r)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, HarnessError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(HarnessError::InvalidCurve(format!(
                "unexpected header `{}`, expected `{}`",
                headers.iter().collect::<Vec<_>>().join(","),
                CSV_HEADER.join(",")
            )));
        }
        let mut curve = Self::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let field = |i: usize| row.get(i).unwrap_or("");
            let bad = |i: usize| {
                HarnessError::InvalidCurve(format!("row {}: bad {} `{}`", line + 2, CSV_HEADER[i], field(i)))
            };
            let loss = field(4);
            curve.push(EpisodeRecord {
                episode: field(0).parse().map_err(|_| bad(0))?,
                steps: field(1).parse().map_err(|_| bad(1))?,
                ret: field(2).parse().map_err(|_| bad(2))?,
                epsilon: field(3).parse().map_err(|_| bad(3))?,
                loss_mean: if loss.is_empty() { None } else { Some(loss.parse().map_err(|_| bad(4))?) },
            })?;
        }
        Ok(curve)
    }

    pub fn read_csv_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Receives each finished episode while a run is in progress.
pub trait EpisodeSink {
    fn record(&mut self, record: &EpisodeRecord) -> std::io::Result<()>;
}

/// Discards every record.
pub struct NullSink;

impl EpisodeSink for NullSink {
    fn record(&mut self, _record: &EpisodeRecord) -> std::io::Result<()> {
        Ok(())
    }
}

impl<W: Write> EpisodeSink for CurveCsvWriter<W> {
    fn record(&mut self, record: &EpisodeRecord) -> std::io::Result<()> {
        self.write(record).map_err(|e| match e {
            HarnessError::Csv(c) => c.into(),
            other => std::io::Error::other(other.to_string()),
        })
    }
}

/// Streams curve rows, flushing after every row so a partial file is always valid.
pub struct CurveCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CurveCsvWriter<W> {
    pub fn new(writer: W) -> Result<Self, HarnessError> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        inner.write_record(CSV_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &EpisodeRecord) -> Result<(), HarnessError> {
        let loss = r.loss_mean.map(|v| v.to_string()).unwrap_or_default();
        self.inner.write_record([
            r.episode.to_string(),
            r.steps.to_string(),
            r.ret.to_string(),
            r.epsilon.to_string(),
            loss,
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn steps_must_increase() {
        let mut c = LearningCurve::from_points(&[(10, 1.0)]).unwrap();
        let dup = EpisodeRecord { episode: 1, steps: 10, ret: 0.0, epsilon: 0.0, loss_mean: None };
        assert!(c.push(dup).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut c = LearningCurve::new();
        c.push(EpisodeRecord { episode: 0, steps: 12, ret: 12.0, epsilon: 0.5, loss_mean: None }).unwrap();
        c.push(EpisodeRecord { episode: 1, steps: 30, ret: -0.25, epsilon: 0.125, loss_mean: Some(0.75) }).unwrap();
        assert_eq!(c.to_csv_string(), "episode,steps,return,epsilon,loss_mean\n0,12,12,0.5,\n1,30,-0.25,0.125,0.75\n");
    }

    #[test]
    fn wrong_header_rejected() {
        let err = LearningCurve::read_csv("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unexpected header"));
    }

    #[test]
    fn final_mean_uses_tail() {
        let c = LearningCurve::from_points(&[(1, 0.0), (2, 2.0), (3, 4.0)]).unwrap();
        assert_eq!(c.final_mean(2), Some(3.0));
        assert_eq!(c.final_mean(10), Some(2.0));
        assert_eq!(LearningCurve::new().final_mean(3), None);
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec((1u64..1000, -1e6f64..1e6, 0.0f64..=1.0, prop::option::of(0.0f64..1e3)), 0..40)) {
            let mut curve = LearningCurve::new();
            let mut steps = 0;
            for (i, (dt, ret, eps, loss)) in rows.into_iter().enumerate() {
                steps += dt;
                curve.push(EpisodeRecord { episode: i as u64, steps, ret, epsilon: eps, loss_mean: loss }).unwrap();
            }
            let text = curve.to_csv_string();
            let back = LearningCurve::read_csv(text.as_bytes()).unwrap();
            prop_assert_eq!(back, curve);
        }
    }
}
