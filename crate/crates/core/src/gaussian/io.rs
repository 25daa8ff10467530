use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::kernel::KernelConfig;

use super::ensemble::{EnsembleKind, GaussianEnsemble};
use super::grid::TimeGrid;

const MAGIC: &[u8; 8] = b"GSPDEENS";
const VERSION: u32 = 1;

/// CSV export, one row per (path, node). `header` lines are written first,
/// each prefixed with `# `.
pub fn write_csv<W: Write>(e: &GaussianEnsemble, header: &[String], mut out: W) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    write!(out, "path,node,t")?;
    for n in 1..=e.n_coords() {
        write!(out, ",g_{n}")?;
    }
    writeln!(out)?;
    let nodes = e.grid().nodes();
    for p in 0..e.n_paths() {
        let path = e.path(p);
        for (i, t) in nodes.iter().enumerate() {
            write!(out, "{p},{i},{t:.16e}")?;
            for v in &path[i * e.n_coords()..(i + 1) * e.n_coords()] {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

fn put_u32<W: Write>(out: &mut W, v: u32) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u64<W: Write>(out: &mut W, v: u64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s<W: Write>(out: &mut W, vs: &[f64]) -> Result<()> {
    for v in vs {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Little-endian dump: magic, version, seed, kernel config (JSON, length
/// prefixed), grid nodes, coordinate scales, path count, then the payload.
pub fn write_binary<W: Write>(e: &GaussianEnsemble, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    put_u32(&mut out, VERSION)?;
    put_u64(&mut out, e.seed())?;
    let kernel = serde_json::to_vec(&e.kernel_config()).map_err(|err| Error::Format(err.to_string()))?;
    put_u32(&mut out, kernel.len() as u32)?;
    out.write_all(&kernel)?;
    out.write_all(&[match e.kind() {
        EnsembleKind::Scalar => 0u8,
        EnsembleKind::Vector => 1u8,
    }])?;
    put_u64(&mut out, e.grid().len() as u64)?;
    put_f64s(&mut out, e.grid().nodes())?;
    put_u64(&mut out, e.n_coords() as u64)?;
    put_f64s(&mut out, e.scales())?;
    put_u64(&mut out, e.n_paths() as u64)?;
    put_f64s(&mut out, e.data())?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|err| Error::Format(format!("truncated ensemble dump: {err}")))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n < (1 << 40))
            .ok_or_else(|| Error::Format(format!("implausible {what} count {v}")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.bytes(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn read_binary<R: Read>(input: R) -> Result<GaussianEnsemble> {
    let mut r = Reader { inner: input };
    if r.bytes(8)? != MAGIC {
        return Err(Error::Format("not an ensemble dump".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let seed = r.u64()?;
    let klen = r.u32()? as usize;
    let kernel: Option<KernelConfig> =
        serde_json::from_slice(&r.bytes(klen)?).map_err(|err| Error::Format(err.to_string()))?;
    let kind = match r.bytes(1)?[0] {
        0 => EnsembleKind::Scalar,
        1 => EnsembleKind::Vector,
        b => return Err(Error::Format(format!("unknown ensemble kind {b}"))),
    };
    let m = r.len("node")?;
    let grid = TimeGrid::from_nodes(r.f64s(m)?)?;
    let n = r.len("coordinate")?;
    let scales = r.f64s(n)?;
    let n_paths = r.len("path")?;
    let data = r.f64s(n_paths * m * n)?;
    Ok(GaussianEnsemble {
        grid,
        n_paths,
        scales,
        data,
        seed,
        kind,
        kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{sample_G, NoiseSpec};
    use crate::kernel::KernelConfig;

    fn ensemble() -> GaussianEnsemble {
        let k = KernelConfig::Fbm {
            hurst: 0.7,
            r: None,
            horizon: None,
        }
        .build()
        .unwrap();
        let spec = NoiseSpec::power_law(1.0, 3.0, 3).unwrap();
        let grid = TimeGrid::uniform(1.0, 9).unwrap();
        sample_G(&k, &spec, &grid, 5, 17).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let e = ensemble();
        let mut buf = Vec::new();
        write_binary(&e, &mut buf).unwrap();
        let back = read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn csv_values_round_trip() {
        let e = ensemble();
        let mut buf = Vec::new();
        write_csv(&e, &["seed = 17".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed = 17"));
        assert_eq!(lines.next(), Some("path,node,t,g_1,g_2,g_3"));
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            let (p, i): (usize, usize) = (cols[0].parse().unwrap(), cols[1].parse().unwrap());
            for c in 0..3 {
                let v: f64 = cols[3 + c].parse().unwrap();
                assert_eq!(v.to_bits(), e.value(p, i, c).to_bits());
            }
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_binary(&b"NOTADUMP"[..]), Err(Error::Format(_))));
        let e = ensemble();
        let mut buf = Vec::new();
        write_binary(&e, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_binary(buf.as_slice()), Err(Error::Format(_))));
    }
}
