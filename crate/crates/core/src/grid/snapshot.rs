//! `x1,x2,value` snapshot files, one interior node per line in storage order.

use std::fmt::Write as _;
use std::path::Path;

use super::{Grid2D, GridFunction};
use crate::error::{Error, Result};

impl GridFunction {
    pub fn to_snapshot_csv(&self) -> String {
        let grid = self.grid();
        let mut out = String::with_capacity(64 * self.len() + 16);
        out.push_str("x1,x2,value\n");
        for ((i1, i2), v) in grid.nodes().zip(self.values()) {
            let (x1, x2) = grid.coords(i1, i2);
            let _ = writeln!(out, "{x1:.16e},{x2:.16e},{v:.16e}");
        }
        out
    }

    /// Reads a snapshot, recovering the grid from the node coordinates.
    pub fn from_snapshot_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "x1,x2,value" => {}
            _ => {
                return Err(Error::Format {
                    line: 1,
                    message: "expected header `x1,x2,value`".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parsed: Option<Vec<f64>> = (fields.len() == 3)
                .then(|| fields.iter().map(|f| f.trim().parse().ok()).collect())
                .flatten();
            let Some(v) = parsed else {
                return Err(Error::Format {
                    line: idx + 1,
                    message: format!("expected three numbers, got `{line}`"),
                });
            };
            rows.push((v[0], v[1], v[2], idx + 1));
        }
        if rows.is_empty() {
            return Err(Error::Format {
                line: 1,
                message: "snapshot has no rows".into(),
            });
        }
        // x1 runs fastest: the first row of constant x2 gives N1 - 1.
        let m1 = rows.iter().take_while(|r| r.1 == rows[0].1).count();
        if rows.len() % m1 != 0 {
            return Err(Error::Format {
                line: rows.len() + 1,
                message: format!("{} rows do not form rows of {m1} nodes", rows.len()),
            });
        }
        let grid = Grid2D::new(m1 + 1, rows.len() / m1 + 1)?;
        for (&(x1, x2, _, line), (i1, i2)) in rows.iter().zip(grid.nodes()) {
            let (e1, e2) = grid.coords(i1, i2);
            if (x1 - e1).abs() > 1e-12 || (x2 - e2).abs() > 1e-12 {
                return Err(Error::Format {
                    line,
                    message: format!("node ({x1}, {x2}) is off the expected grid position ({e1}, {e2})"),
                });
            }
        }
        GridFunction::from_values(grid, rows.into_iter().map(|r| r.2).collect())
    }

    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_snapshot_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_snapshot_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_function;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let g = Grid2D::new(3, 2).unwrap();
        let w = sample_function(g, |x, _| x);
        let csv = w.to_snapshot_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("3.3333333333333331e-1,5.0000000000000000e-1,"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(GridFunction::from_snapshot_csv("a,b\n").is_err());
        assert!(matches!(
            GridFunction::from_snapshot_csv("x1,x2,value\n0.5,0.5\n"),
            Err(Error::Format { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip(n1 in 2usize..7, n2 in 2usize..7, seed in any::<u64>()) {
            let g = Grid2D::new(n1, n2).unwrap();
            let mut s = seed;
            let w = sample_function(g, |x, y| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 * x - y
            });
            let back = GridFunction::from_snapshot_csv(&w.to_snapshot_csv()).unwrap();
            prop_assert_eq!(back, w);
        }
    }
}
