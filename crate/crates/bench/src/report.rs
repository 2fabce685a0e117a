use std::io::{Read, Write};

use crate::run::RunResult;

pub const HEADER: [&str; 10] = [
    "impl",
    "mode",
    "threads",
    "keys",
    "w",
    "threshold",
    "repeat",
    "seconds",
    "overhead",
    "speedup",
];

/// One parsed line of benchmark output. `repeat` is `None` on mean rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub implementation: String,
    pub mode: String,
    pub threads: usize,
    pub keys: usize,
    pub w: u32,
    pub threshold: usize,
    pub repeat: Option<usize>,
    pub seconds: f64,
    pub overhead: Option<f64>,
    pub speedup: Option<f64>,
}

fn ratio(r: Option<f64>) -> String {
    r.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Writes one row per timed repeat and one `mean` row per thread count, in
/// the order of `results` and then ascending thread count. Ratios appear on
/// mean rows only.
pub fn emit_csv<W: Write>(results: &[RunResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in results {
        for cell in &r.cells {
            let fixed = [
                r.implementation.name().to_string(),
                r.mode.name().to_string(),
                cell.threads.to_string(),
                r.keys.to_string(),
                r.w.to_string(),
                r.threshold.to_string(),
            ];
            for (i, s) in cell.seconds.iter().enumerate() {
                let mut rec = fixed.to_vec();
                rec.extend([(i + 1).to_string(), format!("{s:.9}"), String::new(), String::new()]);
                w.write_record(&rec)?;
            }
            let mut rec = fixed.to_vec();
            rec.extend([
                "mean".to_string(),
                format!("{:.9}", cell.mean()),
                ratio(r.overhead(cell.threads)),
                ratio(r.speedup(cell.threads)),
            ]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: bad `{column}` value `{value}`")]
    Field {
        row: usize,
        column: &'static str,
        value: String,
    },
}

/// Parses output written by [`emit_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, ReadError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(ReadError::Header(header));
    }
    let mut rows = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        fn parse<T: std::str::FromStr>(row: usize, i: usize, v: &str) -> Result<T, ReadError> {
            v.parse().map_err(|_| ReadError::Field {
                row,
                column: HEADER[i],
                value: v.to_string(),
            })
        }
        let opt = |i: usize| -> Result<Option<f64>, ReadError> {
            match field(i) {
                "" => Ok(None),
                v => parse(row, i, v).map(Some),
            }
        };
        rows.push(CsvRow {
            implementation: field(0).to_string(),
            mode: field(1).to_string(),
            threads: parse(row, 2, field(2))?,
            keys: parse(row, 3, field(3))?,
            w: parse(row, 4, field(4))?,
            threshold: parse(row, 5, field(5))?,
            repeat: match field(6) {
                "mean" => None,
                v => Some(parse(row, 6, v)?),
            },
            seconds: parse(row, 7, field(7))?,
            overhead: opt(8)?,
            speedup: opt(9)?,
        });
    }
    Ok(rows)
}
