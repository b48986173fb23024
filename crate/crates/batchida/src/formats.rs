//! Text and binary file formats: instance lists, BPDB1 pattern databases,
//! BLIN1 linear-model weights, result records, and atomic file writes.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use batchida_core::{
    Cost, CubeState, Domain, DomainTag, Instance, PatternSpace, PdbTable, RubiksCube, SearchResult, SlidingTile,
    TileState,
};
use thiserror::Error;

use crate::eval::LinearModel;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not a {0} file (bad magic bytes)")]
    BadMagic(&'static str),
    #[error("file is truncated or has trailing bytes: {0}")]
    Length(String),
    #[error("file was built for {found:?}, expected {expected:?}")]
    WrongDomain { expected: DomainTag, found: DomainTag },
    #[error("pattern database is corrupt: goal entry is {0}, expected 0")]
    GoalNotZero(u8),
    #[error("unknown instance suite '{0}' (expected stp3, rc or korf10)")]
    UnknownSuite(String),
    #[error("invalid content: {0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.display().to_string(), source }
}

/// An instance of either domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyInstance {
    Stp(Instance<TileState>),
    Cube(Instance<CubeState>),
}

impl AnyInstance {
    pub fn label(&self) -> &str {
        match self {
            AnyInstance::Stp(i) => &i.label,
            AnyInstance::Cube(i) => &i.label,
        }
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        match &mut self {
            AnyInstance::Stp(i) => i.label = label.into(),
            AnyInstance::Cube(i) => i.label = label.into(),
        }
        self
    }

    pub fn tag(&self) -> DomainTag {
        match self {
            AnyInstance::Stp(i) => DomainTag::Stp(i.start.side() as u8),
            AnyInstance::Cube(_) => DomainTag::Cube,
        }
    }
}

/// Parses an instance list. Each nonblank line not starting with `#` is
///
/// * `stp <N> <N*N labels>`: tile labels cell by cell, 0 for the blank;
/// * `rc <walk length or -> <8 cp> <8 co> <12 ep> <12 eo>`;
/// * 16 bare integers (Korf's 15-puzzle format), optionally preceded by
///   an instance number.
///
/// A trailing `# text` becomes the label; otherwise lines are labelled
/// `<prefix>-<n>` counting from 1.
pub fn parse_instances(text: &str, prefix: &str) -> Result<Vec<AnyInstance>, FormatError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b.trim(), Some(c.trim())),
            None => (raw.trim(), None),
        };
        if body.is_empty() {
            continue;
        }
        let label = match comment {
            Some(c) if !c.is_empty() => c.to_string(),
            _ => format!("{prefix}-{}", out.len() + 1),
        };
        let err = |msg: String| FormatError::Parse { line, msg };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let ints = |toks: &[&str]| -> Result<Vec<u8>, FormatError> {
            toks.iter().map(|t| t.parse::<u8>().map_err(|_| err(format!("'{t}' is not a small integer")))).collect()
        };
        let inst = match tokens[0] {
            "stp" => {
                let n: usize = tokens.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| err("missing puzzle size".into()))?;
                let cells = ints(&tokens[2..])?;
                stp_instance(n, &cells, label).map_err(err)?
            }
            "rc" => {
                let walk = match tokens.get(1) {
                    Some(&"-") => None,
                    Some(t) => Some(t.parse::<usize>().map_err(|_| err(format!("bad walk length '{t}'")))?),
                    None => return Err(err("missing walk length".into())),
                };
                let v = ints(&tokens[2..])?;
                if v.len() != 40 {
                    return Err(err(format!("cube state needs 40 integers, found {}", v.len())));
                }
                let state = CubeState::from_parts(
                    v[0..8].try_into().expect("8"),
                    v[8..16].try_into().expect("8"),
                    v[16..28].try_into().expect("12"),
                    v[28..40].try_into().expect("12"),
                )
                .map_err(|e| err(e.to_string()))?;
                let mut inst = Instance::new(state, RubiksCube.goal(), label);
                inst.walk_length = walk;
                AnyInstance::Cube(inst)
            }
            _ => {
                let mut v = ints(&tokens)?;
                if v.len() == 17 {
                    v.remove(0);
                }
                if v.len() != 16 {
                    return Err(err(format!("expected 16 tile labels, found {}", v.len())));
                }
                stp_instance(4, &v, label).map_err(err)?
            }
        };
        out.push(inst);
    }
    Ok(out)
}

fn stp_instance(n: usize, cells: &[u8], label: String) -> Result<AnyInstance, String> {
    let domain = SlidingTile::new(n).map_err(|e| e.to_string())?;
    let state = TileState::from_cells(n, cells).map_err(|e| e.to_string())?;
    Ok(AnyInstance::Stp(Instance::new(state, domain.goal(), label)))
}

/// One line in the format read by [`parse_instances`].
pub fn format_instance(inst: &AnyInstance) -> String {
    let join = |v: &[u8]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    match inst {
        AnyInstance::Stp(i) => format!("stp {} {} # {}", i.start.side(), join(i.start.cells()), i.label),
        AnyInstance::Cube(i) => {
            let walk = i.walk_length.map_or("-".to_string(), |w| w.to_string());
            let c = &i.start;
            format!("rc {walk} {} {} {} {} # {}", join(&c.cp), join(&c.co), join(&c.ep), join(&c.eo), i.label)
        }
    }
}

pub fn read_instances(path: &Path) -> Result<Vec<AnyInstance>, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let prefix = path.file_stem().map_or("inst".into(), |s| s.to_string_lossy().into_owned());
    parse_instances(&text, &prefix)
}

const PDB_MAGIC: &[u8; 5] = b"BPDB1";

/// `BPDB1`, domain code, pattern length and labels, entry count as a
/// little-endian u64, then one byte per entry.
pub fn encode_pdb(table: &PdbTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(table.len() + 32);
    out.extend_from_slice(PDB_MAGIC);
    out.push(table.domain().code());
    out.push(table.pattern().len() as u8);
    out.extend_from_slice(table.pattern());
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    out.extend_from_slice(table.entries());
    out
}

/// Domain tag of a BPDB1 file, without validating the rest.
pub fn pdb_domain(bytes: &[u8]) -> Result<DomainTag, FormatError> {
    if bytes.len() < 6 || &bytes[..5] != PDB_MAGIC {
        return Err(FormatError::BadMagic("BPDB1"));
    }
    DomainTag::from_code(bytes[5]).ok_or_else(|| FormatError::Invalid(format!("unknown domain code {}", bytes[5])))
}

/// Decodes a BPDB1 table for `domain`, checking its size against the
/// pattern and that the goal's entry is 0.
pub fn decode_pdb<D: PatternSpace>(bytes: &[u8], domain: &D) -> Result<PdbTable, FormatError> {
    let found = pdb_domain(bytes)?;
    if found != domain.tag() {
        return Err(FormatError::WrongDomain { expected: domain.tag(), found });
    }
    let short = || FormatError::Length("header".into());
    let plen = *bytes.get(6).ok_or_else(short)? as usize;
    let pattern = bytes.get(7..7 + plen).ok_or_else(short)?.to_vec();
    let count_at = 7 + plen;
    let count = u64::from_le_bytes(bytes.get(count_at..count_at + 8).ok_or_else(short)?.try_into().expect("8 bytes"));
    let entries = &bytes[count_at + 8..];
    if entries.len() as u64 != count {
        return Err(FormatError::Length(format!("header says {count} entries, file holds {}", entries.len())));
    }
    let index = domain.walk_pattern(&pattern);
    let size = domain.abstract_size(&index).map_err(|e| FormatError::Invalid(e.to_string()))?;
    if size != count {
        return Err(FormatError::Length(format!("pattern needs {size} entries, file holds {count}")));
    }
    let table = PdbTable::from_entries(domain.tag(), pattern, index, entries.to_vec());
    let goal_h = table.lookup(domain, &domain.goal()).map_err(|e| FormatError::Invalid(e.to_string()))?;
    if goal_h != 0 {
        return Err(FormatError::GoalNotZero(goal_h));
    }
    Ok(table)
}

pub fn read_pdb<D: PatternSpace>(path: &Path, domain: &D) -> Result<PdbTable, FormatError> {
    decode_pdb(&fs::read(path).map_err(io_err(path))?, domain)
}

const LIN_MAGIC: &[u8; 5] = b"BLIN1";

/// `BLIN1`, then feature length, class count and ensemble size as
/// little-endian u32, then each member's `classes x feature_len` weights
/// row-major as little-endian f32.
pub fn encode_linear(model: &LinearModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(LIN_MAGIC);
    for v in [model.feature_len(), model.classes(), model.members().len()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for m in model.members() {
        for w in m {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

pub fn decode_linear(bytes: &[u8], quantile: f64) -> Result<LinearModel, FormatError> {
    if bytes.len() < 17 || &bytes[..5] != LIN_MAGIC {
        return Err(FormatError::BadMagic("BLIN1"));
    }
    let u = |i: usize| u32::from_le_bytes(bytes[5 + 4 * i..9 + 4 * i].try_into().expect("4 bytes")) as usize;
    let (len, classes, members) = (u(0), u(1), u(2));
    let per = len.checked_mul(classes).ok_or_else(|| FormatError::Invalid("weight matrix too large".into()))?;
    let body = &bytes[17..];
    if body.len() != per * members * 4 {
        return Err(FormatError::Length(format!("expected {} weight bytes, found {}", per * members * 4, body.len())));
    }
    let floats: Vec<f32> = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    let members = if per == 0 { Vec::new() } else { floats.chunks(per).map(<[f32]>::to_vec).collect() };
    LinearModel::new(len, classes, members, quantile).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn read_linear(path: &Path, quantile: f64) -> Result<LinearModel, FormatError> {
    decode_linear(&fs::read(path).map_err(io_err(path))?, quantile)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| FormatError::Invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// The one-line summary of a finished search.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultLine<'a> {
    pub algorithm: &'a str,
    pub instance: &'a str,
    pub result: &'a SearchResult,
}

impl fmt::Display for ResultLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.result.stats;
        write!(
            f,
            "algo={} instance={} cost={} expanded={} generated={} batches={} mean_batch={:.2} wall_s={:.6}",
            self.algorithm,
            self.instance,
            self.result.cost,
            s.expanded,
            s.generated,
            s.batches,
            s.mean_batch(),
            s.wall_time.as_secs_f64()
        )
    }
}

/// Parses the cost back out of a [`ResultLine`].
pub fn result_line_cost(line: &str) -> Option<Cost> {
    line.split_whitespace().find_map(|kv| kv.strip_prefix("cost=")).and_then(|v| v.parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use batchida_core::{build_pdb, random_walk_instance};

    #[test]
    fn instance_lines_round_trip() {
        let d = SlidingTile::new(3).unwrap();
        let stp = AnyInstance::Stp(random_walk_instance(&d, &d.goal(), 20, 4));
        let cube = AnyInstance::Cube(random_walk_instance(&RubiksCube, &RubiksCube.goal(), 6, 4));
        let text = format!("# header\n{}\n\n{}\n", format_instance(&stp), format_instance(&cube));
        let parsed = parse_instances(&text, "t").unwrap();
        assert_eq!(parsed.len(), 2);
        match (&parsed[0], &stp) {
            (AnyInstance::Stp(a), AnyInstance::Stp(b)) => {
                assert_eq!(a.start, b.start);
                assert_eq!(a.label, b.label);
            }
            _ => panic!("wrong domain"),
        }
        match (&parsed[1], &cube) {
            (AnyInstance::Cube(a), AnyInstance::Cube(b)) => {
                assert_eq!(a.start, b.start);
                assert_eq!(a.walk_length, Some(6));
            }
            _ => panic!("wrong domain"),
        }
    }

    #[test]
    fn korf_lines_accept_optional_index() {
        let text = "1 14 13 15 7 11 12 9 5 6 0 2 1 4 8 10 3\n14 13 15 7 11 12 9 5 6 0 2 1 4 8 10 3\n";
        let parsed = parse_instances(text, "korf").unwrap();
        assert_eq!(parsed[0], parsed[1].clone().relabel("korf-1"));
        assert_eq!(parsed[0].tag(), DomainTag::Stp(4));
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_instances("stp 3 1 2 3\n", "x").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 1, .. }));
        assert!(parse_instances("rc - 1 2 3\n", "x").is_err());
    }

    #[test]
    fn pdb_round_trip_and_goal_check() {
        let d = SlidingTile::new(3).unwrap();
        let t = build_pdb(&d, &[1, 2, 3], &d.goal(), 1 << 20).unwrap();
        let bytes = encode_pdb(&t);
        assert_eq!(decode_pdb(&bytes, &d).unwrap(), t);
        let mut corrupt = bytes.clone();
        let goal_rank = d.rank(&d.goal(), t.index_pattern()).unwrap() as usize;
        let header = bytes.len() - t.len();
        corrupt[header + goal_rank] = 3;
        assert!(matches!(decode_pdb(&corrupt, &d), Err(FormatError::GoalNotZero(3))));
        assert!(matches!(decode_pdb(&bytes, &RubiksCube), Err(FormatError::WrongDomain { .. })));
        assert!(decode_pdb(&bytes[..bytes.len() - 1], &d).is_err());
    }

    #[test]
    fn linear_round_trip() {
        let m = LinearModel::new(4, 3, vec![(0..12).map(|x| x as f32).collect(), vec![0.5; 12]], 0.5).unwrap();
        assert_eq!(decode_linear(&encode_linear(&m), 0.5).unwrap(), m);
        assert!(decode_linear(b"BLIN0", 0.5).is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
