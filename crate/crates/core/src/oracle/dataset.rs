//! CSV persistence for training sets.
//!
//! One row per sample: `sample_id`, then `x,y,z` for every particle, then
//! `fx,fy,fz`, then `ux,uy,uz`. Floats carry 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use super::sampler::TrainingSample;
use super::system::{Domain, Vec3};
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(particles: usize) -> Vec<String> {
    let mut h = vec!["sample_id".to_string()];
    for (prefix, names) in [("", ["x", "y", "z"]), ("f", ["x", "y", "z"]), ("u", ["x", "y", "z"])] {
        for p in 0..particles {
            for n in names {
                h.push(format!("{prefix}{n}{p}"));
            }
        }
    }
    h
}

pub fn write_training_set<W: Write>(out: W, samples: &[TrainingSample]) -> Result<()> {
    let particles = samples.first().map_or(0, |s| s.particle_count());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(particles))?;
    for (id, s) in samples.iter().enumerate() {
        if s.particle_count() != particles {
            return Err(Error::Shape(format!(
                "sample {id} has {} particles, file has {particles}",
                s.particle_count()
            )));
        }
        let mut row = vec![id.to_string()];
        for block in [&s.positions, &s.forces, &s.velocities] {
            row.extend(block.iter().flat_map(|v| v.iter().map(|&c| fmt_f64(c))));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_training_set(path: &Path, samples: &[TrainingSample]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_training_set(std::io::BufWriter::new(file), samples)
}

/// Reads a training set; malformed rows are reported with their line number.
pub fn read_training_set<R: Read>(input: R, source: &str) -> Result<Vec<TrainingSample>> {
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: source.to_string(),
        line,
        reason,
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let cols = r.headers()?.len();
    if cols < 10 || (cols - 1) % 9 != 0 {
        return Err(parse_err(1, format!("header has {cols} columns; expected 1 + 9 per particle")));
    }
    let particles = (cols - 1) / 9;
    let mut samples = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != cols {
            return Err(parse_err(line, format!("expected {cols} fields, found {}", record.len())));
        }
        let mut values = Vec::with_capacity(cols - 1);
        for (c, field) in record.iter().enumerate().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("column {}: `{field}` is not a number", c + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value", c + 1)));
            }
            values.push(v);
        }
        let block = |b: usize| -> Vec<Vec3> {
            (0..particles)
                .map(|p| {
                    let o = 3 * (b * particles + p);
                    Vec3::new(values[o], values[o + 1], values[o + 2])
                })
                .collect()
        };
        samples.push(TrainingSample {
            positions: block(0),
            forces: block(1),
            velocities: block(2),
            domain: Domain::Unbounded,
        });
    }
    Ok(samples)
}

pub fn load_training_set(path: &Path) -> Result<Vec<TrainingSample>> {
    let file = std::fs::File::open(path)?;
    read_training_set(std::io::BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{generate_training_set, SamplerConfig};

    #[test]
    fn round_trip_is_lossless() {
        let samples = generate_training_set(20, &SamplerConfig::default(), 5).unwrap();
        let mut buf = Vec::new();
        write_training_set(&mut buf, &samples).unwrap();
        let back = read_training_set(buf.as_slice(), "mem").unwrap();
        assert_eq!(samples, back);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sample_id,x0,y0,z0,x1"));
        assert_eq!(text.lines().count(), 21);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn corrupt_row_reports_line() {
        let samples = generate_training_set(3, &SamplerConfig::default(), 5).unwrap();
        let mut buf = Vec::new();
        write_training_set(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = lines[2].replacen(",", ",abc", 2);
        let bad = lines.join("\n");
        match read_training_set(bad.as_bytes(), "bad.csv") {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(path, "bad.csv");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
