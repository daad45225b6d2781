//! Channel dumps: a little-endian binary layout and an equivalent CSV.
//!
//! Binary layout:
//!
//! ```text
//! magic      8 bytes   "RISCHDMP"
//! version    u32       1
//! elements   u32       N
//! count      u64       R
//! seed       u64
//! config_len u32       followed by that many bytes of UTF-8 config text
//! R records  N × (f32 re, f32 im) for h, N for g, then one for h_SISO
//! ```
//!
//! The CSV form starts with `#` comment lines carrying the same header and
//! the config text, then a column header and one row per realization.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RISCHDMP";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DumpFormat {
    Csv,
    Binary,
}

impl DumpFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            DumpFormat::Csv => "csv",
            DumpFormat::Binary => "binary",
        }
    }
}

impl fmt::Display for DumpFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DumpFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DumpFormat::Csv),
            "binary" | "bin" => Ok(DumpFormat::Binary),
            other => Err(Error::invalid("format", format!("unknown dump format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpHeader {
    pub elements: u32,
    pub realizations: u64,
    pub seed: u64,
    /// Resolved configuration the dump was generated from. The CSV form
    /// stores it line by line, so it reads back newline-terminated.
    pub config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpRecord {
    pub h: Vec<Complex32>,
    pub g: Vec<Complex32>,
    pub h_siso: Complex32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub header: DumpHeader,
    pub records: Vec<DumpRecord>,
}

fn narrow(z: Complex64) -> Complex32 {
    Complex32::new(z.re as f32, z.im as f32)
}

/// Streams realizations into a dump. [`DumpWriter::finish`] checks that
/// exactly `realizations` records were written.
pub struct DumpWriter<W: Write> {
    out: W,
    format: DumpFormat,
    header: DumpHeader,
    written: u64,
}

impl<W: Write> DumpWriter<W> {
    pub fn new(mut out: W, format: DumpFormat, header: DumpHeader) -> Result<Self> {
        match format {
            DumpFormat::Binary => {
                out.write_all(MAGIC)?;
                out.write_all(&VERSION.to_le_bytes())?;
                out.write_all(&header.elements.to_le_bytes())?;
                out.write_all(&header.realizations.to_le_bytes())?;
                out.write_all(&header.seed.to_le_bytes())?;
                let len = u32::try_from(header.config.len())
                    .map_err(|_| Error::invalid("config", "config text exceeds 4 GiB"))?;
                out.write_all(&len.to_le_bytes())?;
                out.write_all(header.config.as_bytes())?;
            }
            DumpFormat::Csv => {
                writeln!(out, "# risim channel dump v{VERSION}")?;
                writeln!(out, "# elements: {}", header.elements)?;
                writeln!(out, "# realizations: {}", header.realizations)?;
                writeln!(out, "# seed: {}", header.seed)?;
                writeln!(out, "# config:")?;
                for line in header.config.lines() {
                    writeln!(out, "#   {line}")?;
                }
                let mut cols = vec!["index".to_string()];
                for v in ["h", "g"] {
                    for n in 0..header.elements {
                        cols.push(format!("{v}{n}_re"));
                        cols.push(format!("{v}{n}_im"));
                    }
                }
                cols.push("hsiso_re".into());
                cols.push("hsiso_im".into());
                writeln!(out, "{}", cols.join(","))?;
            }
        }
        Ok(Self {
            out,
            format,
            header,
            written: 0,
        })
    }

    pub fn write(&mut self, r: &ChannelRealization) -> Result<()> {
        let n = self.header.elements as usize;
        if r.h.len() != n || r.g.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: r.h.len().max(r.g.len()),
            });
        }
        if self.written >= self.header.realizations {
            return Err(Error::invalid("realizations", "more records than declared"));
        }
        let values =
            r.h.iter()
                .chain(&r.g)
                .chain(std::iter::once(&r.h_siso))
                .map(|z| narrow(*z));
        match self.format {
            DumpFormat::Binary => {
                let mut buf = Vec::with_capacity((2 * n + 1) * 8);
                for z in values {
                    buf.extend_from_slice(&z.re.to_le_bytes());
                    buf.extend_from_slice(&z.im.to_le_bytes());
                }
                self.out.write_all(&buf)?;
            }
            DumpFormat::Csv => {
                let mut line = r.index.to_string();
                for z in values {
                    line.push_str(&format!(",{},{}", z.re, z.im));
                }
                writeln!(self.out, "{line}")?;
            }
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.realizations {
            return Err(Error::invalid(
                "realizations",
                format!("declared {}, wrote {}", self.header.realizations, self.written),
            ));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedDump(msg.into())
}

fn read_array<const L: usize, R: Read + ?Sized>(r: &mut R) -> Result<[u8; L]> {
    let mut b = [0u8; L];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => malformed("truncated input"),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

pub fn read_binary(mut r: impl Read) -> Result<Dump> {
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let elements = u32::from_le_bytes(read_array(&mut r)?);
    let realizations = u64::from_le_bytes(read_array(&mut r)?);
    let seed = u64::from_le_bytes(read_array(&mut r)?);
    let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut text = vec![0u8; len];
    r.read_exact(&mut text).map_err(|_| malformed("truncated config"))?;
    let config = String::from_utf8(text).map_err(|_| malformed("config is not UTF-8"))?;

    let n = elements as usize;
    let read_c = |r: &mut dyn Read| -> Result<Complex32> {
        let re = f32::from_le_bytes(read_array(r)?);
        let im = f32::from_le_bytes(read_array(r)?);
        Ok(Complex32::new(re, im))
    };
    let mut records = Vec::new();
    for _ in 0..realizations {
        let h = (0..n).map(|_| read_c(&mut r)).collect::<Result<_>>()?;
        let g = (0..n).map(|_| read_c(&mut r)).collect::<Result<_>>()?;
        let h_siso = read_c(&mut r)?;
        records.push(DumpRecord { h, g, h_siso });
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(malformed("trailing bytes"));
    }
    Ok(Dump {
        header: DumpHeader {
            elements,
            realizations,
            seed,
            config,
        },
        records,
    })
}

pub fn read_csv(r: impl BufRead) -> Result<Dump> {
    let mut elements = None;
    let mut realizations = None;
    let mut seed = None;
    let mut config = String::new();
    let mut in_config = false;
    let mut columns_seen = false;
    let mut records = Vec::new();

    for line in r.lines() {
        let line = line?;
        if let Some(comment) = line.strip_prefix('#') {
            if in_config {
                let text = comment.strip_prefix("   ").unwrap_or(comment.trim_start());
                config.push_str(text);
                config.push('\n');
                continue;
            }
            let comment = comment.trim();
            let parse_u64 = |v: &str| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| malformed(format!("bad header `{comment}`")))
            };
            if let Some(v) = comment.strip_prefix("elements:") {
                elements = Some(parse_u64(v)?);
            } else if let Some(v) = comment.strip_prefix("realizations:") {
                realizations = Some(parse_u64(v)?);
            } else if let Some(v) = comment.strip_prefix("seed:") {
                seed = Some(parse_u64(v)?);
            } else if comment == "config:" {
                in_config = true;
            }
            continue;
        }
        in_config = false;
        if !columns_seen {
            columns_seen = true;
            continue;
        }
        let n = elements.ok_or_else(|| malformed("missing elements header"))? as usize;
        let fields: Vec<f32> = line
            .split(',')
            .skip(1)
            .map(|f| {
                f.trim()
                    .parse::<f32>()
                    .map_err(|_| malformed(format!("bad value `{f}`")))
            })
            .collect::<Result<_>>()?;
        if fields.len() != 2 * (2 * n + 1) {
            return Err(malformed(format!(
                "row has {} values, expected {}",
                fields.len(),
                2 * (2 * n + 1)
            )));
        }
        let c: Vec<Complex32> = fields.chunks(2).map(|p| Complex32::new(p[0], p[1])).collect();
        records.push(DumpRecord {
            h: c[..n].to_vec(),
            g: c[n..2 * n].to_vec(),
            h_siso: c[2 * n],
        });
    }
    let header = DumpHeader {
        elements: elements.ok_or_else(|| malformed("missing elements header"))? as u32,
        realizations: realizations.ok_or_else(|| malformed("missing realizations header"))?,
        seed: seed.ok_or_else(|| malformed("missing seed header"))?,
        config,
    };
    if records.len() as u64 != header.realizations {
        return Err(malformed(format!(
            "declared {} realizations, found {}",
            header.realizations,
            records.len()
        )));
    }
    Ok(Dump { header, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{realize, ChannelConfig};
    use crate::geometry::{recommend_positions, Environment, Scenario, WallPlacement};

    fn config() -> ChannelConfig {
        let scn = Scenario {
            n_elements: 4,
            ..recommend_positions(Environment::UMi, WallPlacement::SideWall)
        };
        ChannelConfig::new(scn, 5, 3)
    }

    fn header(cfg: &ChannelConfig) -> DumpHeader {
        DumpHeader {
            elements: cfg.scenario.n_elements as u32,
            realizations: cfg.realizations,
            seed: cfg.seed,
            config: "[scenario]\nenvironment = \"umi\"\n".into(),
        }
    }

    fn encode(format: DumpFormat) -> (Vec<u8>, Vec<ChannelRealization>) {
        let cfg = config();
        let reals: Vec<_> = realize(&cfg).unwrap().map(|r| r.unwrap()).collect();
        let mut w = DumpWriter::new(Vec::new(), format, header(&cfg)).unwrap();
        for r in &reals {
            w.write(r).unwrap();
        }
        (w.finish().unwrap(), reals)
    }

    fn check(dump: &Dump, reals: &[ChannelRealization]) {
        assert_eq!(dump.header, header(&config()));
        assert_eq!(dump.records.len(), reals.len());
        for (rec, r) in dump.records.iter().zip(reals) {
            for (a, b) in rec.h.iter().zip(&r.h).chain(rec.g.iter().zip(&r.g)) {
                assert_eq!(*a, narrow(*b));
            }
            assert_eq!(rec.h_siso, narrow(r.h_siso));
        }
    }

    #[test]
    fn binary_round_trip() {
        let (bytes, reals) = encode(DumpFormat::Binary);
        assert_eq!(&bytes[..8], MAGIC);
        let config_len = header(&config()).config.len();
        assert_eq!(bytes.len(), 8 + 4 + 4 + 8 + 8 + 4 + config_len + 5 * 9 * 8);
        check(&read_binary(bytes.as_slice()).unwrap(), &reals);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let (bytes, reals) = encode(DumpFormat::Csv);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("# seed: 3"));
        assert!(text.contains("index,h0_re,h0_im"));
        check(&read_csv(bytes.as_slice()).unwrap(), &reals);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let (mut bytes, _) = encode(DumpFormat::Binary);
        assert!(matches!(
            read_binary(&bytes[..bytes.len() - 3]),
            Err(Error::MalformedDump(_))
        ));
        bytes.push(0);
        assert!(matches!(read_binary(bytes.as_slice()), Err(Error::MalformedDump(_))));
        bytes[0] = b'X';
        assert!(matches!(read_binary(bytes.as_slice()), Err(Error::MalformedDump(_))));
    }

    #[test]
    fn writer_checks_counts() {
        let cfg = config();
        let w = DumpWriter::new(Vec::new(), DumpFormat::Csv, header(&cfg)).unwrap();
        assert!(w.finish().is_err());
        let mut w = DumpWriter::new(Vec::new(), DumpFormat::Binary, header(&cfg)).unwrap();
        let mut r = realize(&cfg).unwrap().next().unwrap().unwrap();
        r.h.pop();
        assert!(matches!(w.write(&r), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<DumpFormat>().unwrap(), DumpFormat::Csv);
        assert_eq!("binary".parse::<DumpFormat>().unwrap(), DumpFormat::Binary);
        assert!("json".parse::<DumpFormat>().is_err());
    }
}
