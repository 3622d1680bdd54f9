//! Pressure probes and their CSV output.

use std::io::{self, Write};

/// A fixed probe reading the cell-centered pressure of its owning cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    pub id: usize,
    pub location: [f64; 2],
    /// Linear index of the owning cell (without ghosts).
    pub cell: usize,
    /// `(t [s], p [kPa absolute])` samples.
    pub series: Vec<(f64, f64)>,
}

impl Gauge {
    pub fn new(id: usize, location: [f64; 2], cell: usize) -> Self {
        Self {
            id,
            location,
            cell,
            series: Vec::new(),
        }
    }

    pub fn record(&mut self, t: f64, p_pa: f64) {
        self.series.push((t, p_pa / 1000.0));
    }

    /// Largest sample and the time it was taken.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.series
            .iter()
            .copied()
            .fold(None, |best: Option<(f64, f64)>, (t, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((t, p)),
            })
    }
}

/// Long-format gauge CSV: `time_s,gauge_id,pressure_kPa`.
pub fn write_gauge_csv<W: Write>(mut w: W, gauges: &[Gauge]) -> io::Result<()> {
    writeln!(w, "time_s,gauge_id,pressure_kPa")?;
    for g in gauges {
        for &(t, p) in &g.series {
            writeln!(w, "{t:?},{},{p:?}", g.id)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_and_csv() {
        let mut g = Gauge::new(4, [1.0, 0.0], 3);
        assert_eq!(g.peak(), None);
        g.record(0.0, 101325.0);
        g.record(1e-3, 284260.0);
        g.record(2e-3, 200000.0);
        assert_eq!(g.peak(), Some((1e-3, 284.26)));
        let mut buf = Vec::new();
        write_gauge_csv(&mut buf, &[g]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().nth(1), Some("0.0,4,101.325"));
        assert_eq!(s.lines().count(), 4);
    }
}
