use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Graph, VertexId};
use crate::{Error, Result};

pub const DUMP_MAGIC: &[u8; 4] = b"ADGR";
pub const DUMP_VERSION: u32 = 1;

/// Parses a KONECT/SNAP style whitespace-separated edge list.
///
/// Lines starting with `%` or `#` are comments and blank lines are skipped.
/// Only the first two columns are read. External ids are remapped to
/// `0..n` in order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut ids: HashMap<u64, VertexId> = HashMap::new();
    let mut edges = Vec::new();
    let intern = |raw: u64, ids: &mut HashMap<u64, VertexId>| -> VertexId {
        let next = ids.len() as VertexId;
        *ids.entry(raw).or_insert(next)
    };

    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let endpoint = |tokens: &mut std::str::SplitWhitespace| -> Result<u64> {
            let token = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two vertex ids".into(),
            })?;
            token.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("malformed vertex id {token:?}"),
            })
        };
        let src = endpoint(&mut tokens)?;
        let dst = endpoint(&mut tokens)?;
        let src = intern(src, &mut ids);
        let dst = intern(dst, &mut ids);
        edges.push((src, dst));
    }

    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    Graph::build_combined(&edges, ids.len())
}

pub fn read_edge_list_file(path: &Path) -> Result<Graph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_edge_list(BufReader::new(file))
}

/// Writes the binary dump: magic, version, `|V|`, `|E|`, then
/// `out_offsets`, `destinations`, `origins`, `in_offsets`, `sources`.
/// Offsets are u64 and vertex ids u32, all little-endian.
pub fn write_graph_dump<W: Write>(graph: &Graph, mut out: W) -> std::io::Result<()> {
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&DUMP_VERSION.to_le_bytes())?;
    out.write_all(&(graph.vertex_count() as u64).to_le_bytes())?;
    out.write_all(&(graph.edge_count() as u64).to_le_bytes())?;
    let offsets = |out: &mut W, xs: &[usize]| -> std::io::Result<()> {
        xs.iter().try_for_each(|&x| out.write_all(&(x as u64).to_le_bytes()))
    };
    let ids = |out: &mut W, xs: &[VertexId]| -> std::io::Result<()> {
        xs.iter().try_for_each(|&x| out.write_all(&x.to_le_bytes()))
    };
    offsets(&mut out, graph.out_offsets())?;
    ids(&mut out, graph.destinations())?;
    ids(&mut out, graph.origins())?;
    offsets(&mut out, graph.in_offsets())?;
    ids(&mut out, graph.sources())?;
    out.flush()
}

pub fn read_graph_dump<R: Read>(mut input: R) -> Result<Graph> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Format(e.to_string()))?;
    let mut cursor = ByteCursor { bytes: &bytes, pos: 0 };
    if cursor.take(4)? != DUMP_MAGIC {
        return Err(Error::Format("bad graph magic".into()));
    }
    let version = cursor.u32()?;
    if version != DUMP_VERSION {
        return Err(Error::Format(format!("unsupported graph version {version}")));
    }
    let n = cursor.u64()? as usize;
    let m = cursor.u64()? as usize;
    let out_offsets = cursor.offsets(n + 1)?;
    let destinations = cursor.ids(m)?;
    let origins = cursor.ids(m)?;
    let in_offsets = cursor.offsets(n + 1)?;
    let sources = cursor.ids(m)?;
    if cursor.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after graph".into()));
    }
    Graph::from_parts(n, out_offsets, destinations, origins, in_offsets, sources)
}

impl Graph {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_graph_dump(self, BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        read_graph_dump(BufReader::new(file))
    }
}

pub(crate) struct ByteCursor<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteCursor<'a> {
    pub(crate) fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn offsets(&mut self, len: usize) -> Result<Vec<usize>> {
        let raw = self.take(len.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect())
    }

    fn ids(&mut self, len: usize) -> Result<Vec<VertexId>> {
        let raw = self.take(len.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
