//! Dataset CSV: header `t,sample_id,label,x1,...,xD`, rows sorted by
//! `(t, sample_id)`, label `-1` when unknown.

use std::io::{Read, Write};
use std::path::Path;

use super::{SampleId, Snapshot, TemporalDataset};
use crate::error::{Error, Result};

pub fn write_dataset<W: Write>(data: &TemporalDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "sample_id".into(), "label".into()];
    header.extend((1..=data.dim()).map(|d| format!("x{d}")));
    w.write_record(&header)?;
    for s in data.snapshots() {
        for (r, id) in s.ids().iter().enumerate() {
            let label = s.labels().map_or(-1, |l| l[r] as i64);
            let mut rec = vec![s.time_index().to_string(), id.to_string(), label.to_string()];
            rec.extend(s.point(r).iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_dataset(data: &TemporalDataset, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(data, std::io::BufWriter::new(f))
}

pub fn read_dataset<R: Read>(name: &str, input: R) -> Result<TemporalDataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 4 || &header[0] != "t" || &header[1] != "sample_id" || &header[2] != "label"
    {
        return Err(Error::Parse {
            line: 1,
            reason: "expected header t,sample_id,label,x1,...".into(),
        });
    }
    let dim = header.len() - 3;
    // (t, rows, labels)
    let mut groups: Vec<(usize, Vec<(SampleId, Vec<f64>)>, Vec<i64>)> = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let bad = |what: &str| Error::Parse {
            line,
            reason: format!("bad {what}"),
        };
        if rec.len() != dim + 3 {
            return Err(bad("field count"));
        }
        let t: usize = rec[0].trim().parse().map_err(|_| bad("t"))?;
        let id: SampleId = rec[1].trim().parse().map_err(|_| bad("sample_id"))?;
        let label: i64 = rec[2].trim().parse().map_err(|_| bad("label"))?;
        let coords = (3..dim + 3)
            .map(|i| rec[i].trim().parse::<f64>().map_err(|_| bad("coordinate")))
            .collect::<Result<Vec<_>>>()?;
        match groups.last_mut() {
            Some(g) if g.0 == t => {
                g.1.push((id, coords));
                g.2.push(label);
            }
            _ => groups.push((t, vec![(id, coords)], vec![label])),
        }
    }
    let snapshots = groups
        .into_iter()
        .map(|(t, rows, labels)| {
            let labels = if labels.iter().any(|&l| l < 0) {
                None
            } else {
                Some(labels.into_iter().map(|l| l as usize).collect())
            };
            Snapshot::new(t, rows, labels)
        })
        .collect::<Result<Vec<_>>>()?;
    TemporalDataset::new(name, snapshots)
}

pub fn load_dataset(path: &Path) -> Result<TemporalDataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_dataset(&name, std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::named_dataset;

    #[test]
    fn csv_round_trip_is_exact() {
        let d = named_dataset("syn5", 2).unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        let back = read_dataset(&d.name, buf.as_slice()).unwrap();
        assert_eq!(back, d);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,sample_id,label,x1,x2\n"));
    }

    #[test]
    fn unknown_labels_read_as_none() {
        let text = "t,sample_id,label,x1\n1,0,-1,0.5\n1,1,-1,1.5\n2,0,0,1.0\n";
        let d = read_dataset("x", text.as_bytes()).unwrap();
        assert!(d.snapshots()[0].labels().is_none());
        assert_eq!(d.snapshots()[1].labels().unwrap(), &[0]);
    }

    #[test]
    fn bad_rows_report_line() {
        let text = "t,sample_id,label,x1\n1,0,0,abc\n";
        match read_dataset("x", text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
