use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::detect::{Detection, GroundTruthBox, RocPoint};
use crate::error::Result;

// Headers are written explicitly so empty tables still carry them.
fn write_rows<T: Serialize>(w: impl Write, header: &[&str], rows: &[T]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(header)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(r: impl Read) -> Result<Vec<T>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    rd.deserialize().map(|row| Ok(row?)).collect()
}

pub fn write_detections(w: impl Write, rows: &[Detection]) -> Result<()> {
    write_rows(w, &["image_id", "x", "y", "side", "score"], rows)
}

pub fn read_detections(r: impl Read) -> Result<Vec<Detection>> {
    read_rows(r)
}

pub fn write_ground_truth(w: impl Write, rows: &[GroundTruthBox]) -> Result<()> {
    write_rows(w, &["image_id", "x", "y", "w", "h"], rows)
}

pub fn read_ground_truth(r: impl Read) -> Result<Vec<GroundTruthBox>> {
    let rows: Vec<GroundTruthBox> = read_rows(r)?;
    if let Some(b) = rows.iter().find(|b| b.w == 0 || b.h == 0) {
        return Err(crate::Error::invalid(format!("empty ground-truth box in image {}", b.image_id)));
    }
    Ok(rows)
}

pub fn write_roc(w: impl Write, rows: &[RocPoint]) -> Result<()> {
    write_rows(w, &["operating_point", "false_positives", "detection_rate"], rows)
}

pub fn read_roc(r: impl Read) -> Result<Vec<RocPoint>> {
    read_rows(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detections_round_trip() {
        let rows = vec![
            Detection { image_id: "img_0".into(), x: 1, y: 2, side: 24, score: 0.1 + 0.2 },
            Detection { image_id: "b".into(), x: 0, y: 0, side: 29, score: -1e-300 },
        ];
        let mut buf = Vec::new();
        write_detections(&mut buf, &rows).unwrap();
        assert!(buf.starts_with(b"image_id,x,y,side,score\n"));
        assert_eq!(read_detections(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn empty_table_keeps_header() {
        let mut buf = Vec::new();
        write_detections(&mut buf, &[]).unwrap();
        assert_eq!(buf, b"image_id,x,y,side,score\n");
        assert!(read_detections(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn ground_truth_and_roc_round_trip() {
        let gt = vec![GroundTruthBox { image_id: "a".into(), x: 3, y: 4, w: 16, h: 16 }];
        let mut buf = Vec::new();
        write_ground_truth(&mut buf, &gt).unwrap();
        assert_eq!(read_ground_truth(&buf[..]).unwrap(), gt);

        let roc = vec![RocPoint { operating_point: "depth=1".into(), false_positives: 7, detection_rate: 0.75 }];
        let mut buf = Vec::new();
        write_roc(&mut buf, &roc).unwrap();
        assert_eq!(read_roc(&buf[..]).unwrap(), roc);
    }

    #[test]
    fn zero_sized_truth_rejected() {
        assert!(read_ground_truth(&b"image_id,x,y,w,h\na,0,0,0,5\n"[..]).is_err());
    }
}
