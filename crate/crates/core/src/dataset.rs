//! On-disk shot datasets.
//!
//! # Trace files
//!
//! All integers and floats are little-endian.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `QRXT` |
//! | 4  | 2 | format version (`1`) |
//! | 6  | 2 | flags, bit 0 set when trajectory blocks are present |
//! | 8  | 4 | `n_qubits` |
//! | 12 | 4 | `n_samples` |
//! | 16 | 8 | sample rate, MHz (f64) |
//! | 24 | 8 | `n_shots` |
//! | 32 | 8 | seed the shots were simulated with (0 for external data) |
//! | 40 | 8 | payload length in bytes |
//!
//! Each shot then holds `n_qubits` preparation bytes (0 or 1), an optional
//! trajectory block of 5 bytes per qubit (kind: 0 none, 1 relaxation,
//! 2 excitation; then the transition sample as u32), and
//! `n_qubits * n_samples` I/Q pairs of f32, channel-major.
//!
//! # Outcome files
//!
//! CSV with columns `prep,measured`, one shot per row, bit-strings written
//! qubit 0 first. A header row is optional on input and always written.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bits::{BitString, Outcome};
use crate::error::{Error, Result};
use crate::experiment::ShotSource;
use crate::sim::{ShotRecord, StateTrajectory, Transition, TransitionKind};

pub const MAGIC: [u8; 4] = *b"QRXT";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 48;
const FLAG_TRAJECTORY: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFileHeader {
    pub version: u16,
    pub n_qubits: usize,
    pub n_samples: usize,
    pub sample_rate_mhz: f64,
    pub n_shots: u64,
    pub seed: u64,
    pub has_trajectory: bool,
}

impl TraceFileHeader {
    /// Bytes occupied by one shot.
    pub fn shot_bytes(&self) -> u64 {
        let traj = if self.has_trajectory { 5 } else { 0 };
        self.n_qubits as u64 * (1 + traj) + self.n_qubits as u64 * self.n_samples as u64 * 8
    }

    pub fn payload_bytes(&self) -> u64 {
        self.n_shots.saturating_mul(self.shot_bytes())
    }

    fn encode(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER_BYTES);
        b.extend_from_slice(&MAGIC);
        b.extend_from_slice(&self.version.to_le_bytes());
        let flags = if self.has_trajectory {
            FLAG_TRAJECTORY
        } else {
            0
        };
        b.extend_from_slice(&flags.to_le_bytes());
        b.extend_from_slice(&(self.n_qubits as u32).to_le_bytes());
        b.extend_from_slice(&(self.n_samples as u32).to_le_bytes());
        b.extend_from_slice(&self.sample_rate_mhz.to_le_bytes());
        b.extend_from_slice(&self.n_shots.to_le_bytes());
        b.extend_from_slice(&self.seed.to_le_bytes());
        b.extend_from_slice(&self.payload_bytes().to_le_bytes());
        b
    }
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes(b[at..at + 2].try_into().expect("2 bytes"))
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn le_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// A trace file held in memory, decoded one shot at a time.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub header: TraceFileHeader,
    data: Vec<u8>,
}

/// Decode a header and check it against the number of payload bytes that
/// follow it, before any shot is touched.
fn parse_header(data: &[u8], actual: u64) -> Result<TraceFileHeader> {
    if data[0..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"QRXT\"",
            String::from_utf8_lossy(&data[0..4])
        )));
    }
    let version = le_u16(data, 4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let flags = le_u16(data, 6);
    if flags & !FLAG_TRAJECTORY != 0 {
        return Err(Error::Format(format!("unknown flags {flags:#06x}")));
    }
    let header = TraceFileHeader {
        version,
        n_qubits: le_u32(data, 8) as usize,
        n_samples: le_u32(data, 12) as usize,
        sample_rate_mhz: f64::from_le_bytes(data[16..24].try_into().expect("8 bytes")),
        n_shots: le_u64(data, 24),
        seed: le_u64(data, 32),
        has_trajectory: flags & FLAG_TRAJECTORY != 0,
    };
    if header.n_qubits == 0 || header.n_samples == 0 {
        return Err(Error::Format(
            "n_qubits and n_samples must be non-zero".into(),
        ));
    }
    let declared = le_u64(data, 40);
    let expected = header.payload_bytes();
    if actual < declared {
        // First shot that is not fully present.
        let shot = header.shot_bytes();
        let complete = actual / shot;
        return Err(Error::Truncated {
            offset: HEADER_BYTES as u64 + complete * shot,
        });
    }
    if actual > declared {
        return Err(Error::Format(format!(
            "{} trailing bytes after the declared payload",
            actual - declared
        )));
    }
    if declared != expected {
        return Err(Error::DimensionMismatch {
            expected: expected as usize,
            found: declared as usize,
        });
    }
    Ok(header)
}

fn decode_shot(h: &TraceFileHeader, b: &[u8], k: u64) -> Result<ShotRecord> {
    let nq = h.n_qubits;
    let preparation = BitString::from_bits(b[..nq].to_vec())
        .map_err(|_| Error::Format(format!("shot {k}: preparation byte is not 0 or 1")))?;
    let mut at = nq;
    let trajectory = if h.has_trajectory {
        let mut transitions = Vec::with_capacity(nq);
        for q in 0..nq {
            let kind = b[at];
            let sample = le_u32(b, at + 1) as usize;
            at += 5;
            transitions.push(match kind {
                0 => None,
                1 | 2 if sample < h.n_samples => Some(Transition {
                    kind: if kind == 1 {
                        TransitionKind::Relaxation
                    } else {
                        TransitionKind::Excitation
                    },
                    sample,
                }),
                _ => {
                    return Err(Error::Format(format!(
                        "shot {k}, qubit {q}: bad transition (kind {kind}, sample {sample})"
                    )))
                }
            });
        }
        Some(StateTrajectory {
            initial: preparation.clone(),
            transitions,
        })
    } else {
        None
    };
    let traces = b[at..]
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..8].try_into().expect("4 bytes"));
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok(ShotRecord {
        traces,
        n_samples: h.n_samples,
        preparation,
        trajectory,
        shot_index: k,
    })
}

impl TraceFile {
    pub fn from_bytes(data: Vec<u8>) -> Result<TraceFile> {
        if data.len() < HEADER_BYTES {
            return Err(Error::Truncated {
                offset: data.len() as u64,
            });
        }
        let header = parse_header(&data, (data.len() - HEADER_BYTES) as u64)?;
        Ok(TraceFile { header, data })
    }

    pub fn open(path: &Path) -> Result<TraceFile> {
        TraceFile::from_bytes(std::fs::read(path)?)
    }

    pub fn len(&self) -> u64 {
        self.header.n_shots
    }

    pub fn is_empty(&self) -> bool {
        self.header.n_shots == 0
    }

    /// Decode shot `k`.
    pub fn shot(&self, k: u64) -> Result<ShotRecord> {
        let h = &self.header;
        if k >= h.n_shots {
            return Err(Error::Validation(format!(
                "shot {k} out of range for a file of {} shots",
                h.n_shots
            )));
        }
        let size = h.shot_bytes() as usize;
        let offset = HEADER_BYTES + k as usize * size;
        decode_shot(h, &self.data[offset..offset + size], k)
    }

    pub fn shots(&self) -> Result<Vec<ShotRecord>> {
        (0..self.len()).map(|k| self.shot(k)).collect()
    }
}

/// A trace file on disk, read a range of shots at a time.
#[derive(Debug, Clone)]
pub struct TraceReader {
    pub path: PathBuf,
    pub header: TraceFileHeader,
}

impl TraceReader {
    /// Read and validate the header against the file length.
    pub fn open(path: &Path) -> Result<TraceReader> {
        let mut f = File::open(path)?;
        let len = f.metadata()?.len();
        if len < HEADER_BYTES as u64 {
            return Err(Error::Truncated { offset: len });
        }
        let mut head = [0u8; HEADER_BYTES];
        f.read_exact(&mut head)?;
        let header = parse_header(&head, len - HEADER_BYTES as u64)?;
        Ok(TraceReader {
            path: path.to_path_buf(),
            header,
        })
    }

    /// Decode shots `range`, mapping each through `f` on the worker pool.
    pub fn map_range<T, F>(&self, range: Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&ShotRecord) -> T + Sync,
    {
        let h = &self.header;
        if range.end > h.n_shots {
            return Err(Error::InsufficientShots {
                victim: self.path.display().to_string(),
                have: h.n_shots as usize,
                need: range.end as usize,
            });
        }
        let size = h.shot_bytes();
        let mut file = File::open(&self.path)?;
        let mut out = Vec::with_capacity((range.end.saturating_sub(range.start)) as usize);
        let mut buf = Vec::new();
        let mut k = range.start;
        while k < range.end {
            let n = (range.end - k).min(READ_CHUNK);
            file.seek(SeekFrom::Start(HEADER_BYTES as u64 + k * size))?;
            buf.resize((n * size) as usize, 0);
            file.read_exact(&mut buf)?;
            let mapped = buf
                .par_chunks_exact(size as usize)
                .enumerate()
                .map(|(i, b)| decode_shot(h, b, k + i as u64).map(|s| f(&s)))
                .collect::<Result<Vec<T>>>()?;
            out.extend(mapped);
            k += n;
        }
        Ok(out)
    }
}

const READ_CHUNK: u64 = 512;

/// One trace file per preparation, read from disk on demand.
#[derive(Debug, Clone, Default)]
pub struct FileSource {
    pub files: BTreeMap<BitString, TraceReader>,
}

impl FileSource {
    /// Files must agree on dimensions and hold only their own preparation.
    pub fn new(readers: Vec<(BitString, TraceReader)>) -> Result<FileSource> {
        let first = &readers.first().ok_or(Error::Empty("trace files"))?.1.header;
        let (nq, ns) = (first.n_qubits, first.n_samples);
        let mut files = BTreeMap::new();
        for (prep, r) in readers {
            if r.header.n_qubits != nq || r.header.n_samples != ns {
                return Err(Error::DimensionMismatch {
                    expected: nq * ns,
                    found: r.header.n_qubits * r.header.n_samples,
                });
            }
            if prep.len() != nq {
                return Err(Error::DimensionMismatch {
                    expected: nq,
                    found: prep.len(),
                });
            }
            files.insert(prep, r);
        }
        Ok(FileSource { files })
    }

    fn reader(&self, prep: &BitString) -> Result<&TraceReader> {
        self.files
            .get(prep)
            .ok_or_else(|| Error::Validation(format!("no trace file for preparation {prep}")))
    }

    fn header(&self) -> &TraceFileHeader {
        &self.files.values().next().expect("non-empty").header
    }
}

impl ShotSource for FileSource {
    fn n_qubits(&self) -> usize {
        self.header().n_qubits
    }

    fn n_samples(&self) -> usize {
        self.header().n_samples
    }

    fn for_each_shot(
        &self,
        prep: &BitString,
        range: Range<u64>,
        f: &mut dyn FnMut(&ShotRecord) -> Result<()>,
    ) -> Result<()> {
        let reader = self.reader(prep)?;
        let mut k = range.start;
        while k < range.end {
            let end = (k + READ_CHUNK).min(range.end);
            for shot in reader.map_range(k..end, |s| s.clone())? {
                check_prep(&shot, prep)?;
                f(&shot)?;
            }
            k = end;
        }
        Ok(())
    }

    fn map_shots<T, F>(&self, prep: &BitString, range: Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&ShotRecord) -> T + Sync,
    {
        self.reader(prep)?
            .map_range(range, |s| check_prep(s, prep).map(|_| f(s)))?
            .into_iter()
            .collect()
    }
}

fn check_prep(shot: &ShotRecord, prep: &BitString) -> Result<()> {
    if &shot.preparation != prep {
        return Err(Error::Format(format!(
            "shot {} is prepared in {}, file is for {prep}",
            shot.shot_index, shot.preparation
        )));
    }
    Ok(())
}

/// Streaming trace-file writer. The header, including the shot count, is
/// written up front; [`TraceWriter::finish`] checks that many shots arrived.
pub struct TraceWriter<W: Write> {
    out: W,
    header: TraceFileHeader,
    written: u64,
    buf: Vec<u8>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: TraceFileHeader) -> Result<TraceWriter<W>> {
        if header.n_qubits == 0 || header.n_samples == 0 {
            return Err(Error::Validation(
                "trace files need at least one qubit and sample".into(),
            ));
        }
        out.write_all(&header.encode())?;
        let buf = Vec::with_capacity(header.shot_bytes() as usize);
        Ok(TraceWriter {
            out,
            header,
            written: 0,
            buf,
        })
    }

    pub fn write_shot(&mut self, r: &ShotRecord) -> Result<()> {
        let h = &self.header;
        if r.n_qubits() != h.n_qubits
            || r.n_samples != h.n_samples
            || r.traces.len() != h.n_qubits * h.n_samples
        {
            return Err(Error::DimensionMismatch {
                expected: h.n_qubits * h.n_samples,
                found: r.traces.len(),
            });
        }
        if r.trajectory.is_some() != h.has_trajectory {
            return Err(Error::Validation(
                "either every record or none must carry a trajectory".into(),
            ));
        }
        if self.written == h.n_shots {
            return Err(Error::Validation(format!(
                "header declares {} shots, got more",
                h.n_shots
            )));
        }
        let buf = &mut self.buf;
        buf.clear();
        buf.extend_from_slice(r.preparation.bits());
        if let Some(t) = &r.trajectory {
            for tr in &t.transitions {
                let (kind, sample) = match tr {
                    None => (0u8, 0u32),
                    Some(Transition { kind, sample }) => (
                        match kind {
                            TransitionKind::Relaxation => 1,
                            TransitionKind::Excitation => 2,
                        },
                        *sample as u32,
                    ),
                };
                buf.push(kind);
                buf.extend_from_slice(&sample.to_le_bytes());
            }
        }
        for z in &r.traces {
            buf.extend_from_slice(&(z.re as f32).to_le_bytes());
            buf.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
        self.out.write_all(buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.n_shots {
            return Err(Error::Validation(format!(
                "header declares {} shots, wrote {}",
                self.header.n_shots, self.written
            )));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Write `records` as a trace file. Trajectories are stored when every
/// record has one and omitted when none does.
pub fn write_traces<W: Write>(
    records: &[ShotRecord],
    sample_rate_mhz: f64,
    seed: u64,
    out: W,
) -> Result<()> {
    let first = records.first().ok_or(Error::Empty("trace records"))?;
    let header = TraceFileHeader {
        version: FORMAT_VERSION,
        n_qubits: first.n_qubits(),
        n_samples: first.n_samples,
        sample_rate_mhz,
        n_shots: records.len() as u64,
        seed,
        has_trajectory: first.trajectory.is_some(),
    };
    let mut w = TraceWriter::new(out, header)?;
    for r in records {
        w.write_shot(r)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_traces<R: Read>(mut src: R) -> Result<(TraceFileHeader, Vec<ShotRecord>)> {
    let mut data = Vec::new();
    src.read_to_end(&mut data)?;
    let file = TraceFile::from_bytes(data)?;
    let shots = file.shots()?;
    Ok((file.header, shots))
}

/// Parse `prep,measured` rows. Line numbers in errors are 1-based.
pub fn import_outcomes_csv<R: Read>(src: R) -> Result<Vec<Outcome>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(src);
    let mut out = Vec::new();
    let mut width: Option<usize> = None;
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 1, |p| p.line());
        let bad = |message: String| Error::Csv { line, message };
        if row.len() != 2 {
            return Err(bad(format!("expected 2 columns, found {}", row.len())));
        }
        if i == 0 && &row[0] == "prep" && &row[1] == "measured" {
            continue;
        }
        let parse = |s: &str, what: &str| {
            s.parse::<BitString>()
                .map_err(|_| bad(format!("malformed {what} bit-string {s:?}")))
        };
        let prep = parse(&row[0], "prep")?;
        let measured = parse(&row[1], "measured")?;
        if prep.len() != measured.len() {
            return Err(bad(format!(
                "ragged row: prep has {} bits, measured has {}",
                prep.len(),
                measured.len()
            )));
        }
        match width {
            None => width = Some(prep.len()),
            Some(w) if w != prep.len() => {
                return Err(bad(format!(
                    "ragged row: {} bits, earlier rows have {w}",
                    prep.len()
                )))
            }
            Some(_) => {}
        }
        out.push(Outcome { prep, measured });
    }
    Ok(out)
}

pub fn write_outcomes_csv<W: Write>(outcomes: &[Outcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["prep", "measured"])?;
    for o in outcomes {
        w.write_record([o.prep.to_string(), o.measured.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
