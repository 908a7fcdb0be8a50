//! Sensor-log CSV files. One header line, comma separated, SI units.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bocl_core::sensors::{DepthSample, ImuSample, MagSample};

use super::{io_err, DatasetError};

pub const IMU_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];
pub const MAG_HEADER: [&str; 4] = ["t", "mx", "my", "mz"];
pub const DEPTH_HEADER: [&str; 2] = ["t", "depth_m"];

fn write_rows<const N: usize>(
    path: &Path,
    header: &[&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut body = header.join(",");
    body.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        body.push_str(&fields.join(","));
        body.push('\n');
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn read_rows<const N: usize>(path: &Path, header: &[&str; N]) -> Result<Vec<[f64; N]>, DatasetError> {
    let corrupt = |line: u64, message: String| DatasetError::CorruptLog {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| corrupt(1, e.to_string()))?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            corrupt(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if !saw_header {
            let found: Vec<&str> = record.iter().map(str::trim).collect();
            if found != header.as_slice() {
                return Err(corrupt(line, format!("expected header {}", header.join(","))));
            }
            saw_header = true;
            continue;
        }
        if record.len() != N {
            return Err(corrupt(line, format!("expected {N} fields, found {}", record.len())));
        }
        let mut row = [0.0; N];
        for (slot, field) in row.iter_mut().zip(record.iter()) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| corrupt(line, format!("not a number: {field:?}")))?;
        }
        rows.push(row);
    }
    if !saw_header {
        return Err(corrupt(1, "missing header".into()));
    }
    Ok(rows)
}

pub fn write_imu(path: &Path, samples: &[ImuSample]) -> Result<(), DatasetError> {
    write_rows(
        path,
        &IMU_HEADER,
        samples.iter().map(|s| {
            let [ax, ay, az] = s.accel;
            let [gx, gy, gz] = s.gyro;
            [s.timestamp, ax, ay, az, gx, gy, gz]
        }),
    )
}

pub fn read_imu(path: &Path) -> Result<Vec<ImuSample>, DatasetError> {
    Ok(read_rows(path, &IMU_HEADER)?
        .into_iter()
        .map(|[t, ax, ay, az, gx, gy, gz]| ImuSample {
            timestamp: t,
            accel: [ax, ay, az],
            gyro: [gx, gy, gz],
        })
        .collect())
}

pub fn write_mag(path: &Path, samples: &[MagSample]) -> Result<(), DatasetError> {
    write_rows(
        path,
        &MAG_HEADER,
        samples.iter().map(|s| [s.timestamp, s.mag[0], s.mag[1], s.mag[2]]),
    )
}

pub fn read_mag(path: &Path) -> Result<Vec<MagSample>, DatasetError> {
    Ok(read_rows(path, &MAG_HEADER)?
        .into_iter()
        .map(|[t, x, y, z]| MagSample {
            timestamp: t,
            mag: [x, y, z],
        })
        .collect())
}

pub fn write_depth(path: &Path, samples: &[DepthSample]) -> Result<(), DatasetError> {
    write_rows(path, &DEPTH_HEADER, samples.iter().map(|s| [s.timestamp, s.depth]))
}

pub fn read_depth(path: &Path) -> Result<Vec<DepthSample>, DatasetError> {
    Ok(read_rows(path, &DEPTH_HEADER)?
        .into_iter()
        .map(|[t, d]| DepthSample {
            timestamp: t,
            depth: d,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("depth.csv");
        let samples: Vec<DepthSample> = (0..20)
            .map(|i| DepthSample {
                timestamp: i as f64 * 0.1,
                depth: 2.0 + (i as f64).sin() * 1e-3,
            })
            .collect();
        write_depth(&p, &samples).unwrap();
        assert_eq!(read_depth(&p).unwrap(), samples);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,depth_m\n"));
    }

    #[test]
    fn truncated_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("imu.csv");
        std::fs::write(
            &p,
            "t,ax,ay,az,gx,gy,gz\n0,0,0,9.8,0,0,0\n0.01,0,0,9.8,0,0,0\n0.02,0,0,9.\n0.03,0,0,9.8,0,0,0\n",
        )
        .unwrap();
        match read_imu(&p) {
            Err(DatasetError::CorruptLog { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mag.csv");
        std::fs::write(&p, "time,mx,my,mz\n0,1,2,3\n").unwrap();
        assert!(matches!(read_mag(&p), Err(DatasetError::CorruptLog { line: 1, .. })));
    }

    #[test]
    fn bad_number_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("depth.csv");
        std::fs::write(&p, "t,depth_m\n0,1\n0.1,x\n").unwrap();
        assert!(matches!(read_depth(&p), Err(DatasetError::CorruptLog { line: 3, .. })));
    }
}
