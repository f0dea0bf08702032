//! CSV exports. Files are written to a temporary sibling and renamed into
//! place, so a reader never observes a partially written file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulation::{FieldHistogram, RunOutput, StepRecord};
use crate::population::Society;

pub const TIME_SERIES_FILE: &str = "timeseries.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SOCIETY_FILE: &str = "society.csv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: PathBuf::from("<buffer>"),
        source: e.into_error(),
    })
}

pub fn time_series_csv(records: &[StepRecord]) -> Result<Vec<u8>> {
    csv_bytes(records)
}

#[derive(Serialize)]
struct HistogramRow {
    bin_left: f64,
    bin_right: f64,
    count: u64,
    frequency: f64,
}

pub fn histogram_csv(hist: &FieldHistogram) -> Result<Vec<u8>> {
    let total = hist.total();
    if hist.is_empty() {
        return Ok(b"bin_left,bin_right,count,frequency\n".to_vec());
    }
    csv_bytes(hist.bins().map(|(bin_left, bin_right, count)| HistogramRow {
        bin_left,
        bin_right,
        count,
        frequency: count as f64 / total as f64,
    }))
}

#[derive(Serialize)]
struct SocietyRow {
    site_index: usize,
    x: usize,
    y: usize,
    #[serde(rename = "type")]
    kind: char,
    #[serde(rename = "T")]
    temperature: f64,
    #[serde(rename = "B")]
    field: f64,
    #[serde(rename = "dB")]
    adaptation_step: f64,
}

pub fn society_csv(society: &Society) -> Result<Vec<u8>> {
    let dims = society.dims();
    csv_bytes(society.agents().iter().enumerate().map(|(i, a)| {
        let (x, y) = dims.coords(i);
        SocietyRow {
            site_index: i,
            x,
            y,
            kind: a.kind.tag(),
            temperature: a.temperature,
            field: a.field,
            adaptation_step: a.adaptation_step,
        }
    }))
}

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes the time series and, if requested, histogram and society
/// snapshot into `dir`. Returns the paths written.
pub fn write_run(dir: &Path, out: &RunOutput, histogram: bool, society: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        written.push(p);
        Ok(())
    };
    put(TIME_SERIES_FILE, time_series_csv(&out.records)?)?;
    if histogram {
        put(HISTOGRAM_FILE, histogram_csv(&out.histogram)?)?;
    }
    if society {
        put(SOCIETY_FILE, society_csv(&out.society)?)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Dims;
    use crate::population::{Agent, AgentType};

    #[test]
    fn time_series_header_and_empty_field() {
        let recs = [StepRecord {
            t: 1,
            p_noncp: 0.25,
            p_cp: 0.75,
            audits: 3,
            caught: 1,
            mean_a_field: None,
            flips: 7,
        }];
        let text = String::from_utf8(time_series_csv(&recs).unwrap()).unwrap();
        assert_eq!(text, "t,p_noncp,p_cp,audits,caught,mean_a_field,flips\n1,0.25,0.75,3,1,,7\n");
    }

    #[test]
    fn histogram_rows() {
        let h = FieldHistogram::from_values([0.1, 0.2, 0.7, -0.2], 0.5).unwrap();
        let text = String::from_utf8(histogram_csv(&h).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_left,bin_right,count,frequency");
        assert_eq!(lines[1], "-0.5,0.0,1,0.25");
        assert_eq!(lines[2], "0.0,0.5,2,0.5");
        assert_eq!(lines[3], "0.5,1.0,1,0.25");
        let empty = FieldHistogram::from_values(std::iter::empty(), 0.5).unwrap();
        assert_eq!(histogram_csv(&empty).unwrap(), b"bin_left,bin_right,count,frequency\n");
    }

    #[test]
    fn society_columns() {
        let dims = Dims::new(2, 1).unwrap();
        let a = Agent {
            kind: AgentType::Selfish,
            temperature: 5.0,
            field: -12.5,
            adaptation_step: 1.5,
        };
        let s = Society::from_agents(dims, vec![a; 2]).unwrap();
        let text = String::from_utf8(society_csv(&s).unwrap()).unwrap();
        assert_eq!(text, "site_index,x,y,type,T,B,dB\n0,0,0,a,5.0,-12.5,1.5\n1,1,0,a,5.0,-12.5,1.5\n");
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested").join("x.csv");
        write_atomic(&p, b"abc").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"abc");
        let names: Vec<_> = std::fs::read_dir(p.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }
}
