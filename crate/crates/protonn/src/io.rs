//! The shared CSV dataset format: header `x0,x1,...,x{d-1},label`, features
//! as decimal floats, label as a nonnegative integer. UTF-8, LF line endings.
//! Floats are written with Rust's shortest round-trip formatting, so a write
//! followed by a read reproduces every value bit-for-bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{LabeledDataset, Label, Point};

pub fn write_csv<W: Write>(ds: &LabeledDataset, mut w: W) -> Result<()> {
    let header: Vec<String> = (0..ds.d()).map(|k| format!("x{k}")).collect();
    writeln!(w, "{},label", header.join(","))?;
    for i in 0..ds.n() {
        let row: Vec<String> = ds.point(i).coords().iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{}", row.join(","), ds.label(i))?;
    }
    Ok(())
}

pub fn save_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_csv(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<LabeledDataset> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(Error::Io)?,
        None => {
            return Err(Error::Csv {
                line: 1,
                msg: "empty file".into(),
            })
        }
    };
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "label" {
        return Err(Error::Csv {
            line: 1,
            msg: format!("expected header x0,...,x{{d-1}},label, got {header:?}"),
        });
    }
    let d = cols.len() - 1;
    for (k, col) in cols[..d].iter().enumerate() {
        if *col != format!("x{k}") {
            return Err(Error::Csv {
                line: 1,
                msg: format!("expected column x{k}, got {col:?}"),
            });
        }
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut max_label = 0u32;
    for (idx, line) in lines {
        let line = line.map_err(Error::Io)?;
        let lineno = idx + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(Error::Csv {
                line: lineno,
                msg: format!("expected {} columns, got {}", d + 1, fields.len()),
            });
        }
        let mut coords = Vec::with_capacity(d);
        for f in &fields[..d] {
            let v: f64 = f.trim().parse().map_err(|e| Error::Csv {
                line: lineno,
                msg: format!("bad float {f:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    line: lineno,
                    msg: format!("non-finite feature {f:?}"),
                });
            }
            coords.push(v);
        }
        let label: u32 = fields[d].trim().parse().map_err(|e| Error::Csv {
            line: lineno,
            msg: format!("bad label {:?}: {e}", fields[d]),
        })?;
        max_label = max_label.max(label);
        points.push(Point::new(coords)?);
        labels.push(Label(label));
    }
    if points.is_empty() {
        return Err(Error::Csv {
            line: 1,
            msg: "no data rows".into(),
        });
    }
    LabeledDataset::new(points, labels, d, max_label as usize + 1)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_csv(BufReader::new(file))
}
