//! Binary dataset container: named float64 arrays plus a string metadata map.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     8 bytes   b"PATDSET\0"
//! version   u32
//! n_meta    u32, then n_meta x (key, value) strings
//! n_arrays  u32, then per array:
//!           name string, unit string, dtype u8 (1 = f64),
//!           ndim u32, shape u64 x ndim, offset u64, byte_len u64
//! payload   concatenated C-order f64 arrays; offsets count from here
//! ```
//!
//! Strings are a u32 byte length followed by UTF-8 bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{BoundaryData, Image};

pub const MAGIC: &[u8; 8] = b"PATDSET\0";
pub const VERSION: u32 = 1;
const DTYPE_F64: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub unit: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub metadata: BTreeMap<String, String>,
    pub arrays: Vec<NamedArray>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    /// Parses a metadata value, failing with a message naming the key.
    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.meta(key)
            .ok_or_else(|| Error::Format(format!("missing metadata key `{key}`")))?
            .parse()
            .map_err(|_| Error::Format(format!("unparsable metadata `{key}`")))
    }

    pub fn push(&mut self, name: &str, unit: &str, shape: Vec<usize>, data: Vec<f64>) -> Result<()> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Shape(format!(
                "array `{name}` has {} values but shape {shape:?}",
                data.len()
            )));
        }
        if self.array(name).is_some() {
            return Err(Error::Format(format!("duplicate array `{name}`")));
        }
        self.arrays.push(NamedArray {
            name: name.into(),
            unit: unit.into(),
            shape,
            data,
        });
        Ok(())
    }

    pub fn array(&self, name: &str) -> Option<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&NamedArray> {
        self.array(name)
            .ok_or_else(|| Error::Format(format!("container has no array `{name}`")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        for (k, v) in &self.metadata {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        let mut offset = 0u64;
        for a in &self.arrays {
            put_str(&mut out, &a.name);
            put_str(&mut out, &a.unit);
            out.push(DTYPE_F64);
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for &s in &a.shape {
                out.extend_from_slice(&(s as u64).to_le_bytes());
            }
            let len = 8 * a.data.len() as u64;
            out.extend_from_slice(&offset.to_le_bytes());
            out.extend_from_slice(&len.to_le_bytes());
            offset += len;
        }
        for a in &self.arrays {
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic; not a dataset container".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let mut metadata = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            metadata.insert(k, v);
        }
        let n_arrays = r.u32()? as usize;
        let mut directory = Vec::with_capacity(n_arrays);
        for _ in 0..n_arrays {
            let name = r.string()?;
            let unit = r.string()?;
            let dtype = r.take(1)?[0];
            if dtype != DTYPE_F64 {
                return Err(Error::Format(format!("array `{name}` has unknown dtype {dtype}")));
            }
            let ndim = r.u32()? as usize;
            let shape = (0..ndim).map(|_| r.u64().map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
            let offset = r.u64()? as usize;
            let len = r.u64()? as usize;
            if len != 8 * shape.iter().product::<usize>() {
                return Err(Error::Format(format!("array `{name}` length disagrees with shape")));
            }
            directory.push((name, unit, shape, offset, len));
        }
        let payload = &bytes[r.pos..];
        let mut arrays = Vec::with_capacity(n_arrays);
        for (name, unit, shape, offset, len) in directory {
            let raw = offset
                .checked_add(len)
                .and_then(|end| payload.get(offset..end))
                .ok_or_else(|| Error::Format(format!("array `{name}` runs past end of file")))?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            arrays.push(NamedArray { name, unit, shape, data });
        }
        Ok(Container { metadata, arrays })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("truncated container header".into()))?;
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("non-UTF-8 string".into()))
    }
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Writes a CSV file with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Stores an image as array `p0` with its grid spacing in metadata.
pub fn image_container(image: &Image, unit: &str) -> Result<Container> {
    let mut c = Container::new();
    c.set_meta("kind", "image");
    c.set_meta("dx", format!("{:e}", image.dx));
    c.push("p0", unit, image.dims.to_vec(), image.values.clone())?;
    Ok(c)
}

pub fn image_from_container(c: &Container) -> Result<Image> {
    let a = c.require("p0")?;
    if a.shape.len() != 2 {
        return Err(Error::Format("image array must be two-dimensional".into()));
    }
    Ok(Image {
        dims: [a.shape[0], a.shape[1]],
        dx: c.meta_parse("dx")?,
        values: a.data.clone(),
    })
}

/// Stores boundary data as array `traces` (nodes x times).
pub fn boundary_container(data: &BoundaryData, grid: &Grid) -> Result<Container> {
    let mut c = Container::new();
    c.set_meta("kind", "boundary-data");
    c.set_meta("dt", format!("{:e}", data.dt));
    c.set_meta("nt", grid.nt);
    c.set_meta("dx", format!("{:e}", grid.dx));
    c.set_meta("dims", format!("{}x{}", grid.dims[0], grid.dims[1]));
    c.push("traces", "Pa", vec![data.n_nodes, data.n_times], data.values.clone())?;
    Ok(c)
}

pub fn boundary_from_container(c: &Container) -> Result<BoundaryData> {
    let a = c.require("traces")?;
    if a.shape.len() != 2 {
        return Err(Error::Format("trace array must be two-dimensional".into()));
    }
    Ok(BoundaryData {
        n_nodes: a.shape[0],
        n_times: a.shape[1],
        dt: c.meta_parse("dt")?,
        values: a.data.clone(),
    })
}
