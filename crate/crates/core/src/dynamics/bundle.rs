//! Per-vertex discretized trajectories on a time grid.

use std::io::{Read, Write};

use crate::dynamics::grid::TimeGrid;
use crate::dynamics::path::PathView;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

const BINARY_MAGIC: &[u8; 5] = b"PBND1";

/// Trajectories of every vertex of one simulated system, together with the
/// tree-membership indicators. Vertices outside the tree hold constant
/// paths.
///
/// Storage is frame-major: point `j` of vertex `v` lives at
/// `(j * n + v) * dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle<S: Scalar> {
    grid: TimeGrid,
    dim: usize,
    labels: Vec<String>,
    member: Vec<bool>,
    frames: Vec<S>,
}

impl<S: Scalar> PathBundle<S> {
    pub fn from_parts(
        grid: TimeGrid,
        dim: usize,
        labels: Vec<String>,
        member: Vec<bool>,
        frames: Vec<S>,
    ) -> Result<Self> {
        let n = labels.len();
        if member.len() != n {
            return Err(CoreError::InvalidArgument("member/label length mismatch".into()));
        }
        if frames.len() != grid.points() * n * dim {
            return Err(CoreError::InvalidArgument(format!(
                "frame storage {} != points {} * vertices {n} * dim {dim}",
                frames.len(),
                grid.points()
            )));
        }
        Ok(PathBundle { grid, dim, labels, member, frames })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn is_member(&self, v: usize) -> bool {
        self.member[v]
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(|&v| self.member[v])
    }

    /// State of vertex `v` at grid point `j`.
    pub fn state(&self, v: usize, j: usize) -> &[S] {
        let n = self.n_vertices();
        let start = (j * n + v) * self.dim;
        &self.frames[start..start + self.dim]
    }

    /// Full path of vertex `v`.
    pub fn path(&self, v: usize) -> PathView<'_, S> {
        self.path_prefix(v, self.grid.points())
    }

    /// Prefix of length `len` grid points of vertex `v`.
    pub fn path_prefix(&self, v: usize, len: usize) -> PathView<'_, S> {
        let n = self.n_vertices();
        PathView::new(&self.frames, v * self.dim, n * self.dim, self.dim, len)
    }

    /// CSV rows `(vertex_label, time, coord_0.., member)`, vertex-major.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "vertex_label,time")?;
        for c in 0..self.dim {
            write!(w, ",coord_{c}")?;
        }
        writeln!(w, ",member")?;
        for v in 0..self.n_vertices() {
            for j in 0..self.grid.points() {
                write!(w, "{},{}", self.labels[v], self.grid.time(j))?;
                for x in self.state(v, j) {
                    write!(w, ",{}", x.as_f64())?;
                }
                writeln!(w, ",{}", u8::from(self.member[v]))?;
            }
        }
        Ok(())
    }

    /// Little-endian binary export with the `PBND1` magic header.
    ///
    /// Layout: magic (5 bytes) | dim u32 | n_vertices u64 | points u64 |
    /// horizon f64 | per vertex: label_len u32, label utf-8, member u8 |
    /// frames as f64, `[step][vertex][dim]` order.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.n_vertices() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.points() as u64).to_le_bytes())?;
        w.write_all(&self.grid.horizon().to_le_bytes())?;
        for v in 0..self.n_vertices() {
            let bytes = self.labels[v].as_bytes();
            w.write_all(&(bytes.len() as u32).to_le_bytes())?;
            w.write_all(bytes)?;
            w.write_all(&[u8::from(self.member[v])])?;
        }
        for x in &self.frames {
            w.write_all(&x.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(CoreError::Serialization("bad magic; expected PBND1".into()));
        }
        let dim = read_u32(r)? as usize;
        let n = read_u64(r)? as usize;
        let points = read_u64(r)? as usize;
        let horizon = read_f64(r)?;
        if points < 2 {
            return Err(CoreError::Serialization("fewer than two grid points".into()));
        }
        let grid = TimeGrid::new(horizon, points - 1)
            .map_err(|e| CoreError::Serialization(e.to_string()))?;
        let mut labels = Vec::with_capacity(n);
        let mut member = Vec::with_capacity(n);
        for _ in 0..n {
            let len = read_u32(r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            labels.push(String::from_utf8(buf).map_err(|e| {
                CoreError::Serialization(format!("label not utf-8: {e}"))
            })?);
            let mut m = [0u8; 1];
            r.read_exact(&mut m)?;
            member.push(m[0] != 0);
        }
        let mut frames = Vec::with_capacity(points * n * dim);
        for _ in 0..points * n * dim {
            frames.push(S::from_f64(read_f64(r)?));
        }
        PathBundle::from_parts(grid, dim, labels, member, frames)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_bundle() -> PathBundle<f64> {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        // 2 vertices, dim 1, frames [step][vertex][dim]
        let frames = vec![0.0, 10.0, 1.0, 11.0, 2.0, 12.0];
        PathBundle::from_parts(grid, 1, vec!["o".into(), "1".into()], vec![true, false], frames)
            .unwrap()
    }

    #[test]
    fn state_and_path_agree() {
        let b = small_bundle();
        assert_eq!(b.state(0, 2), &[2.0]);
        assert_eq!(b.state(1, 0), &[10.0]);
        let p = b.path(1);
        assert_eq!(p.value(2), &[12.0]);
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn csv_shape() {
        let b = small_bundle();
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "vertex_label,time,coord_0,member");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1], "o,0,0,1");
        assert_eq!(lines[4], "1,0,10,0");
    }

    #[test]
    fn binary_roundtrip() {
        let b = small_bundle();
        let mut buf = Vec::new();
        b.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"PBND1");
        let back = PathBundle::<f64>::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, b);
    }
}
