//! Binary MPS checkpoint format.
//!
//! Layout, all integers and floats little endian:
//! magic `DMPS1`, then u32 N, u32 d_max, f64 eps; per site u32 left and right
//! bond dims followed by the two physical matrices as interleaved (re, im)
//! f64 pairs in row-major order; then the N+1 Schmidt vectors, each a u32
//! length plus f64 entries.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::mps::{Mps, MpsSettings};

const MAGIC: &[u8; 5] = b"DMPS1";

pub fn save_mps<W: Write>(w: &mut W, m: &Mps) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(m.n_qubits() as u32)?;
    w.write_u32::<LittleEndian>(m.settings.d_max as u32)?;
    w.write_f64::<LittleEndian>(m.settings.eps)?;
    for n in 0..m.n_qubits() {
        let site = m.site(n);
        let (l, r) = site[0].dim();
        w.write_u32::<LittleEndian>(l as u32)?;
        w.write_u32::<LittleEndian>(r as u32)?;
        for i in 0..2 {
            for v in site[i].iter() {
                w.write_f64::<LittleEndian>(v.re)?;
                w.write_f64::<LittleEndian>(v.im)?;
            }
        }
    }
    for bond in 0..=m.n_qubits() {
        let lam = m.schmidt_vector(bond);
        w.write_u32::<LittleEndian>(lam.len() as u32)?;
        for &v in lam {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    Ok(())
}

pub fn load_mps<R: Read>(r: &mut R) -> Result<Mps> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::invalid("snapshot: bad magic, not a DMPS1 file"));
    }
    let n = r.read_u32::<LittleEndian>()? as usize;
    if n == 0 || n > 1 << 20 {
        return Err(Error::invalid("snapshot: implausible qubit count"));
    }
    let d_max = r.read_u32::<LittleEndian>()? as usize;
    let eps = r.read_f64::<LittleEndian>()?;
    if d_max == 0 || !eps.is_finite() || eps < 0.0 {
        return Err(Error::invalid("snapshot: bad settings"));
    }
    let mut sites = Vec::with_capacity(n);
    for site_idx in 0..n {
        let l = r.read_u32::<LittleEndian>()? as usize;
        let rr = r.read_u32::<LittleEndian>()? as usize;
        if l == 0 || rr == 0 || l > 1 << 16 || rr > 1 << 16 {
            return Err(Error::invalid(format!("snapshot: bad bond dims at site {site_idx}")));
        }
        let mut site = [CMat::zeros((l, rr)), CMat::zeros((l, rr))];
        for i in 0..2 {
            for a in 0..l {
                for b in 0..rr {
                    let re = r.read_f64::<LittleEndian>()?;
                    let im = r.read_f64::<LittleEndian>()?;
                    if !(re.is_finite() && im.is_finite()) {
                        return Err(Error::invalid("snapshot: non-finite tensor entry"));
                    }
                    site[i][[a, b]] = Complex64::new(re, im);
                }
            }
        }
        sites.push(site);
    }
    let mut schmidt = Vec::with_capacity(n + 1);
    for bond in 0..=n {
        let len = r.read_u32::<LittleEndian>()? as usize;
        if len == 0 || len > 1 << 16 {
            return Err(Error::invalid(format!("snapshot: bad Schmidt length at bond {bond}")));
        }
        let mut lam = Vec::with_capacity(len);
        for _ in 0..len {
            let v = r.read_f64::<LittleEndian>()?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid("snapshot: bad Schmidt value"));
            }
            lam.push(v);
        }
        schmidt.push(lam);
    }
    Mps::from_parts(sites, schmidt, MpsSettings::new(d_max, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_circuit, random_circuit, route_to_nearest_neighbor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let circ = random_circuit(&mut rng, 5, 30, 2);
        let routed = route_to_nearest_neighbor(&circ);
        let mut m = Mps::product_state(&[0, 1, 0, 0, 1], MpsSettings::new(8, 1e-10)).unwrap();
        apply_circuit(&mut m, &routed, &[0.4, -0.9]).unwrap();

        let mut buf = Vec::new();
        save_mps(&mut buf, &m).unwrap();
        let loaded = load_mps(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded.n_qubits(), 5);
        assert_eq!(loaded.settings, m.settings);
        let fid = loaded.inner(&m).norm_sqr();
        assert!((fid - 1.0).abs() < 1e-14);
        for bond in 0..=5 {
            assert_eq!(loaded.schmidt_vector(bond), m.schmidt_vector(bond));
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let m = Mps::product_state(&[0, 0], MpsSettings::new(4, 0.0)).unwrap();
        let mut buf = Vec::new();
        save_mps(&mut buf, &m).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(load_mps(&mut bad.as_slice()).is_err());

        let short = &buf[..buf.len() - 3];
        assert!(load_mps(&mut &short[..]).is_err());
    }
}
