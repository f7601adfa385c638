//! File formats: trajectory JSONL, ground-truth CSV and per-frame record CSV.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand_model::NUM_JOINTS;
use crate::harness::pipeline::FrameRecord;
use crate::metrics::AngleSeries;
use crate::palm_frame::HandFrameSample;
use crate::se3::Vec3;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameLine {
    t: f64,
    keypoints: BTreeMap<String, [f64; 3]>,
}

pub fn write_trajectory<W: Write>(mut w: W, frames: &[HandFrameSample]) -> Result<()> {
    for f in frames {
        let line = FrameLine {
            t: f.t,
            keypoints: f.keypoints.iter().map(|(k, p)| (k.clone(), [p.x, p.y, p.z])).collect(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one frame per non-empty line. Every frame must carry the required
/// keypoints, and timestamps must be strictly increasing.
pub fn read_trajectory<R: BufRead>(r: R) -> Result<Vec<HandFrameSample>> {
    let mut frames: Vec<HandFrameSample> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |e: Error| Error::InvalidTrajectory(format!("line {}: {e}", i + 1));
        let parsed: FrameLine = serde_json::from_str(&line).map_err(|e| at(e.into()))?;
        let sample = HandFrameSample {
            t: parsed.t,
            keypoints: parsed.keypoints.into_iter().map(|(k, p)| (k, Vec3::from(p))).collect(),
        };
        sample.validate().map_err(at)?;
        if let Some(prev) = frames.last() {
            if !(sample.t > prev.t) {
                return Err(at(Error::InvalidTrajectory(format!(
                    "time {} does not increase past {}",
                    sample.t, prev.t
                ))));
            }
        }
        frames.push(sample);
    }
    Ok(frames)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} value `{field}`")))
}

fn parse_flag(field: &str) -> Result<bool> {
    match field.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::Parse(format!("bad flag `{other}`"))),
    }
}

const GT_HEADER: [&str; 3] = ["t", "theta_gt_deg", "active"];

/// Ground truth as `t,theta_gt_deg,active`.
pub fn write_gt_csv<W: Write>(w: W, gt: &AngleSeries) -> Result<()> {
    gt.validate()?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(GT_HEADER).map_err(csv_err)?;
    for k in 0..gt.len() {
        out.write_record([
            gt.t[k].to_string(),
            gt.value[k].to_degrees().to_string(),
            u8::from(gt.active[k]).to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_gt_csv<R: Read>(r: R) -> Result<AngleSeries> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(GT_HEADER) {
        return Err(Error::Parse(format!("unexpected ground-truth header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let (mut t, mut value, mut active) = (Vec::new(), Vec::new(), Vec::new());
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        t.push(parse_f64(&row[0], "t")?);
        value.push(parse_f64(&row[1], "theta_gt_deg")?.to_radians());
        active.push(parse_flag(&row[2])?);
    }
    AngleSeries::new(t, value, active)
}

/// Column names of the per-frame record file, in order.
pub fn record_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "gate_active",
        "theta_task_deg",
        "theta_r_deg",
        "theta_gt_deg",
        "axis_dev_deg",
        "J_total",
        "J_rot",
        "J_conn",
        "J_axis",
        "J_pos",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((0..NUM_JOINTS).map(|i| format!("q{i}")));
    h
}

pub fn write_records_csv<W: Write>(w: W, records: &[FrameRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(record_header()).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.t.to_string(),
            u8::from(r.gate_active).to_string(),
            r.theta_task_deg.to_string(),
            r.theta_r_deg.to_string(),
            r.theta_gt_deg.map(|v| v.to_string()).unwrap_or_default(),
            r.axis_dev_deg.to_string(),
            r.j_total.to_string(),
            r.j_rot.to_string(),
            r.j_conn.to_string(),
            r.j_axis.to_string(),
            r.j_pos.to_string(),
        ];
        row.extend(r.q_cmd.iter().map(|q| q.to_string()));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<FrameRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(record_header().iter().map(String::as_str)) {
        return Err(Error::Parse("unexpected record header".into()));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let f = |i: usize, name: &str| parse_f64(&row[i], name);
        let mut q = [0.0; NUM_JOINTS];
        for (j, slot) in q.iter_mut().enumerate() {
            *slot = f(11 + j, "q")?;
        }
        out.push(FrameRecord {
            t: f(0, "t")?,
            gate_active: parse_flag(&row[1])?,
            theta_task_deg: f(2, "theta_task_deg")?,
            theta_r_deg: f(3, "theta_r_deg")?,
            theta_gt_deg: if row[4].trim().is_empty() {
                None
            } else {
                Some(f(4, "theta_gt_deg")?)
            },
            axis_dev_deg: f(5, "axis_dev_deg")?,
            j_total: f(6, "J_total")?,
            j_rot: f(7, "J_rot")?,
            j_conn: f(8, "J_conn")?,
            j_axis: f(9, "J_axis")?,
            j_pos: f(10, "J_pos")?,
            q_cmd: q,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::{default_suite, generate_scenario};

    #[test]
    fn trajectory_roundtrip() {
        let (frames, _) = generate_scenario(&default_suite()[0]).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &frames).unwrap();
        assert_eq!(read_trajectory(buf.as_slice()).unwrap(), frames);
    }

    #[test]
    fn trajectory_rejections() {
        let ok = r#"{"t":0.0,"keypoints":{"wrist":[0,0,0],"index_knuckle":[1,0,0],"pinky_knuckle":[1,1,0],"thumb_tip":[0,0,1],"index_tip":[1,0,1],"middle_tip":[1,1,1]}}"#;
        let later = ok.replace("\"t\":0.0", "\"t\":0.02");
        assert_eq!(read_trajectory(format!("{ok}\n{later}\n").as_bytes()).unwrap().len(), 2);

        let backwards = format!("{later}\n{ok}\n");
        assert!(matches!(read_trajectory(backwards.as_bytes()), Err(Error::InvalidTrajectory(_))));
        let repeated = format!("{ok}\n{ok}\n");
        assert!(read_trajectory(repeated.as_bytes()).is_err());
        let missing = ok.replace("\"middle_tip\":[1,1,1]", "\"ring_tip\":[1,1,1]");
        let err = read_trajectory(missing.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("middle_tip"), "{err}");
        assert!(read_trajectory("{\"t\": 0}".as_bytes()).is_err());
    }

    #[test]
    fn gt_roundtrip() {
        let (_, gt) = generate_scenario(&default_suite()[1]).unwrap();
        let mut buf = Vec::new();
        write_gt_csv(&mut buf, &gt).unwrap();
        let back = read_gt_csv(buf.as_slice()).unwrap();
        assert_eq!(back.t, gt.t);
        assert_eq!(back.active, gt.active);
        for (a, b) in back.value.iter().zip(&gt.value) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn record_roundtrip() {
        let rec = FrameRecord {
            t: 0.5,
            gate_active: true,
            theta_task_deg: 12.5,
            theta_r_deg: 11.0,
            theta_gt_deg: None,
            axis_dev_deg: 0.25,
            j_total: 1e-3,
            j_rot: 5e-4,
            j_conn: 2e-4,
            j_axis: 1e-4,
            j_pos: 2e-4,
            q_cmd: [0.1; NUM_JOINTS],
        };
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[rec, FrameRecord { t: 0.52, theta_gt_deg: Some(3.0), ..rec }]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,gate_active,theta_task_deg,theta_r_deg,theta_gt_deg,axis_dev_deg,J_total,J_rot,J_conn,J_axis,J_pos,q0,"));
        let back = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0], rec);
        assert_eq!(back[1].theta_gt_deg, Some(3.0));
    }
}
