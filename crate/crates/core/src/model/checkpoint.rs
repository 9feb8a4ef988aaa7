//! Binary model container. All integers and floats are little-endian.
//!
//! ```text
//! "PHSM" u32:version u32:tag_len tag
//! u8:trunk_kind u64:h u64:w u64:c u64:actions u64:trunk_size u64:hidden
//! u64:n f64×n params
//! f64:lr f64:beta1 f64:beta2 f64:eps f64:l2 u64:t f64×n m f64×n v
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{Adam, Architecture, Model, Network, Trunk};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"PHSM";
const VERSION: u32 = 1;

fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let arch = model.net.architecture();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.domain.len() as u32).to_le_bytes());
    out.extend_from_slice(model.domain.as_bytes());
    let (kind, size) = match arch.trunk {
        Trunk::Conv { filters } => (0u8, filters),
        Trunk::Dense { units } => (1u8, units),
    };
    out.push(kind);
    for x in [
        arch.input.0,
        arch.input.1,
        arch.input.2,
        arch.actions,
        size,
        arch.hidden,
    ] {
        put_u64(&mut out, x as u64);
    }
    put_u64(&mut out, model.net.params.len() as u64);
    put_f64s(&mut out, &model.net.params);
    let a = &model.adam;
    put_f64s(&mut out, &[a.lr, a.beta1, a.beta2, a.eps, a.l2]);
    put_u64(&mut out, a.t);
    put_f64s(&mut out, &a.m);
    put_f64s(&mut out, &a.v);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("size overflow".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Checkpoint("size overflow".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let tag_len = r.u32()? as usize;
    let domain = String::from_utf8(r.take(tag_len)?.to_vec())
        .map_err(|_| Error::Checkpoint("bad domain tag".into()))?;
    let kind = r.take(1)?[0];
    let (h, w, c, actions, size, hidden) = (
        r.usize()?,
        r.usize()?,
        r.usize()?,
        r.usize()?,
        r.usize()?,
        r.usize()?,
    );
    let trunk = match kind {
        0 => Trunk::Conv { filters: size },
        1 => Trunk::Dense { units: size },
        k => return Err(Error::Checkpoint(format!("unknown trunk kind {k}"))),
    };
    let arch = Architecture {
        input: (h, w, c),
        actions,
        trunk,
        hidden,
    };
    arch.validate()
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let n = r.usize()?;
    if n != arch.num_params() {
        return Err(Error::Checkpoint(format!(
            "parameter count {n} does not match architecture ({})",
            arch.num_params()
        )));
    }
    let params = r.f64s(n)?;
    let net = Network::from_params(arch, params)?;
    let (lr, beta1, beta2, eps, l2) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let t = r.u64()?;
    let m = r.f64s(n)?;
    let v = r.f64s(n)?;
    if !r.buf.is_empty() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(Model {
        domain,
        net,
        adam: Adam {
            lr,
            beta1,
            beta2,
            eps,
            l2,
            m,
            v,
            t,
        },
    })
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_bytes(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
