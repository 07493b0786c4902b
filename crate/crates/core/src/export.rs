//! Fiber polylines as CSV (`fiber_id,point_index,x,y,z`) or Wavefront OBJ.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::coords::CartesianPoint;
use crate::error::{Error, Result};
use crate::fibers::Fiber;

pub const CSV_HEADER: &str = "fiber_id,point_index,x,y,z";

pub fn write_csv<W: Write>(fibers: &[Fiber], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (id, fiber) in fibers.iter().enumerate() {
        for (k, p) in fiber.points.iter().enumerate() {
            // {:e} prints the shortest representation that round-trips
            writeln!(out, "{id},{k},{:e},{:e},{:e}", p.x, p.y, p.z)?;
        }
    }
    Ok(())
}

/// One `v` line per point and one `l` polyline per fiber, closed fibers
/// repeating their first vertex.
pub fn write_obj<W: Write>(fibers: &[Fiber], mut out: W) -> io::Result<()> {
    let mut offset = 1usize;
    for fiber in fibers {
        for p in &fiber.points {
            writeln!(out, "v {:e} {:e} {:e}", p.x, p.y, p.z)?;
        }
    }
    for fiber in fibers {
        let n = fiber.points.len();
        if n == 0 {
            continue;
        }
        let mut indices: Vec<String> = (offset..offset + n).map(|i| i.to_string()).collect();
        if fiber.closed {
            indices.push(offset.to_string());
        }
        writeln!(out, "l {}", indices.join(" "))?;
        offset += n;
    }
    Ok(())
}

/// Reads fibers from CSV. Every fiber is taken to be a closed polyline;
/// points are ordered by `point_index`.
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<Fiber>> {
    let mut groups: BTreeMap<u64, Vec<(u64, CartesianPoint)>> = BTreeMap::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("fiber_id")) {
            continue;
        }
        let bad = || Error::InvalidArgument(format!("malformed CSV line {}: '{line}'", lineno + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [id, k, x, y, z] = fields.as_slice() else {
            return Err(bad());
        };
        let id: u64 = id.parse().map_err(|_| bad())?;
        let k: u64 = k.parse().map_err(|_| bad())?;
        let coord = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let p = CartesianPoint::new(coord(x)?, coord(y)?, coord(z)?);
        if !p.is_finite() {
            return Err(bad());
        }
        groups.entry(id).or_default().push((k, p));
    }
    Ok(groups
        .into_values()
        .map(|mut pts| {
            pts.sort_by_key(|(k, _)| *k);
            Fiber::from_points(pts.into_iter().map(|(_, p)| p).collect(), true)
        })
        .collect())
}

pub fn read_csv_file(path: &Path) -> Result<Vec<Fiber>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    read_csv(io::BufReader::new(file))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, body: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(offset: f64) -> Fiber {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
            .iter()
            .map(|(x, y)| CartesianPoint::new(x + offset, *y, 0.1 * offset))
            .collect();
        Fiber::from_points(pts, true)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let fibers = vec![square(0.0), square(1.0 / 3.0)];
        let mut buf = Vec::new();
        write_csv(&fibers, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let back = read_csv(io::Cursor::new(buf)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].points, fibers[1].points);
    }

    #[test]
    fn csv_rows_may_arrive_out_of_order() {
        let text = "fiber_id,point_index,x,y,z\n0,1,1,0,0\n0,0,0,0,0\n0,2,0,1,0\n";
        let f = read_csv(io::Cursor::new(text)).unwrap();
        assert_eq!(f[0].points[0], CartesianPoint::ORIGIN);
        assert!(read_csv(io::Cursor::new("0,0,1,2\n")).is_err());
        assert!(read_csv(io::Cursor::new("0,0,1,2,nan\n")).is_err());
    }

    #[test]
    fn obj_polylines_close() {
        let mut buf = Vec::new();
        write_obj(&[square(0.0), square(2.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 8);
        let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("l ")).collect();
        assert_eq!(lines, ["l 1 2 3 4 1", "l 5 6 7 8 5"]);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        fs::write(&path, "old").unwrap();
        write_atomic(&path, |w| w.write_all(b"new")).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "new");
    }
}
