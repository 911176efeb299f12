//! Plain-text field and profile files.
//!
//! Field files have the header `x,y,z,c1,c2,c3,c4,c5,class` and one row per
//! active node in index order, followed on curved domains by one `cut` row
//! per boundary cut point (the Dirichlet data between lattice nodes). The
//! domain is recovered from the rows themselves, so a file is
//! self-describing.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::audit::classify_field;
use crate::error::{Error, Result};
use crate::grid::{DomainSpec, Field, Grid, NodeClass, QField, Shape};
use crate::hedgehog::{profile_residual, HedgehogProfile};
use crate::scalar::{lit, Real};
use crate::tensor::{format_real, parse_real, QTensor};
use crate::uniaxial::ExtraResidual;
use crate::vec3::Vec3;

pub const FIELD_HEADER: &str = "x,y,z,c1,c2,c3,c4,c5,class";

fn coords<T: Real>(p: &Vec3<T>) -> String {
    format!(
        "{},{},{}",
        format_real(p[0]),
        format_real(p[1]),
        format_real(p[2])
    )
}

fn coeffs<T: Real>(q: &QTensor<T>) -> String {
    q.coeffs()
        .iter()
        .map(|&c| format_real(c))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_field<T: Real>(field: &QField<T>, out: &mut impl Write) -> Result<()> {
    let grid = field.grid();
    writeln!(out, "{FIELD_HEADER}")?;
    for i in 0..grid.len() {
        let p = grid.position(i);
        let class = grid.class_of(i).as_str();
        writeln!(out, "{},{},{class}", coords(&p), coeffs(&field.value(i)))?;
    }
    for (c, cut) in grid.cuts().iter().enumerate() {
        writeln!(
            out,
            "{},{},cut",
            coords(&cut.position),
            coeffs(&field.cut_values()[c])
        )?;
    }
    Ok(())
}

pub fn write_field_file<T: Real>(field: &QField<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_field(field, &mut w)?;
    w.flush()?;
    Ok(())
}

struct Row<T> {
    line: usize,
    p: Vec3<T>,
    q: QTensor<T>,
    class: Option<NodeClass>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_field<T: Real>(input: impl BufRead) -> Result<QField<T>> {
    let mut rows = Vec::new();
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, line)) => {
            if line?.trim() != FIELD_HEADER {
                return Err(parse_err(1, format!("expected header '{FIELD_HEADER}'")));
            }
        }
        None => return Err(parse_err(1, "empty file")),
    }
    for (k, line) in lines {
        let line_no = k + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(parse_err(
                line_no,
                format!("expected 9 columns, found {}", cols.len()),
            ));
        }
        let mut nums = [T::zero(); 8];
        for (slot, text) in nums.iter_mut().zip(&cols[..8]) {
            *slot = parse_real(text)
                .filter(|v: &T| v.is_finite())
                .ok_or_else(|| {
                    parse_err(line_no, format!("'{}' is not a finite number", text.trim()))
                })?;
        }
        let class = match cols[8].trim() {
            "interior" => Some(NodeClass::Interior),
            "boundary" => Some(NodeClass::Boundary),
            "cut" => None,
            other => {
                return Err(parse_err(
                    line_no,
                    format!("unknown class '{other}' (interior, boundary, cut)"),
                ))
            }
        };
        rows.push(Row {
            line: line_no,
            p: [nums[0], nums[1], nums[2]],
            q: QTensor::from_coeffs([nums[3], nums[4], nums[5], nums[6], nums[7]]),
            class,
        });
    }
    let estimate = infer_domain(&rows)?;
    let snapped = snap_spec(&estimate);
    let grid = match Grid::build(snapped) {
        Ok(g) if reproduces(&g, &rows) => g,
        _ => Grid::build(estimate)?,
    };
    assemble(Arc::new(grid), &rows)
}

/// Shortest decimal within a relative `1e-9` of `x`. Spacings and extents
/// read back from coordinates carry rounding from the lattice arithmetic; the
/// value the grid was built with is usually a short decimal.
fn shortest_decimal<T: Real>(x: T) -> T {
    (0..17)
        .filter_map(|digits| parse_real::<T>(&format!("{:.*e}", digits, x)))
        .find(|c| (*c - x).abs() <= lit::<T>(1e-9) * x.abs())
        .unwrap_or(x)
}

fn snap_spec<T: Real>(spec: &DomainSpec<T>) -> DomainSpec<T> {
    let f = shortest_decimal::<T>;
    let shape = match spec.shape {
        Shape::Interval { length } => Shape::Interval { length: f(length) },
        Shape::Rectangle { lx, ly } => Shape::Rectangle {
            lx: f(lx),
            ly: f(ly),
        },
        Shape::Disk { radius } => Shape::Disk { radius: f(radius) },
        Shape::Ball { radius } => Shape::Ball { radius: f(radius) },
    };
    DomainSpec::new(shape, f(spec.h))
}

/// True if every row sits exactly on a node or cut point of `grid` and the
/// counts agree.
fn reproduces<T: Real>(grid: &Grid<T>, rows: &[Row<T>]) -> bool {
    // zero is written without a sign
    let bits = |p: &Vec3<T>| {
        p.map(|v| {
            if v == T::zero() {
                0
            } else {
                v.as_f64().to_bits()
            }
        })
    };
    let nodes: HashSet<[u64; 3]> = (0..grid.len()).map(|i| bits(&grid.position(i))).collect();
    let cuts: HashSet<[u64; 3]> = grid.cuts().iter().map(|c| bits(&c.position)).collect();
    let (mut n, mut m) = (0, 0);
    for row in rows {
        let set = if row.class.is_some() {
            n += 1;
            &nodes
        } else {
            m += 1;
            &cuts
        };
        if !set.contains(&bits(&row.p)) {
            return false;
        }
    }
    n == grid.len() && m == grid.cuts().len()
}

pub fn read_field_file<T: Real>(path: &Path) -> Result<QField<T>> {
    read_field(BufReader::new(fs::File::open(path)?))
}

/// Smallest positive gap between distinct sorted values.
fn min_gap<T: Real>(mut v: Vec<T>) -> Option<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let eps: T = lit(1e-9);
    v.windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > eps)
        .fold(None, |m, g| {
            Some(match m {
                Some(m) if m <= g => m,
                _ => g,
            })
        })
}

fn infer_domain<T: Real>(rows: &[Row<T>]) -> Result<DomainSpec<T>> {
    let nodes: Vec<&Row<T>> = rows.iter().filter(|r| r.class.is_some()).collect();
    if nodes.is_empty() {
        return Err(parse_err(2, "no node rows"));
    }
    let zero_axis = |a: usize| rows.iter().all(|r| r.p[a] == T::zero());
    let dim = if !zero_axis(2) {
        3
    } else if !zero_axis(1) {
        2
    } else {
        1
    };
    let h = (0..dim)
        .filter_map(|a| min_gap(nodes.iter().map(|r| r.p[a]).collect()))
        .fold(T::infinity(), |m, g| m.min(g));
    if !h.is_finite() {
        return Err(parse_err(2, "cannot infer the grid spacing"));
    }
    let cuts: Vec<&Row<T>> = rows.iter().filter(|r| r.class.is_none()).collect();
    let shape = if cuts.is_empty() {
        let span = |a: usize| {
            let lo = nodes.iter().map(|r| r.p[a]).fold(T::infinity(), T::min);
            let hi = nodes.iter().map(|r| r.p[a]).fold(T::neg_infinity(), T::max);
            (lo, hi - lo)
        };
        let (x0, lx) = span(0);
        let (y0, ly) = span(1);
        if x0 != T::zero() || y0 != T::zero() {
            return Err(parse_err(2, "straight domains must start at the origin"));
        }
        match dim {
            1 => Shape::Interval { length: lx },
            2 => Shape::Rectangle { lx, ly },
            _ => {
                return Err(parse_err(
                    2,
                    "3D fields must be on a ball (cut rows missing)",
                ))
            }
        }
    } else {
        let radius = cuts.iter().map(|r| vec3_norm(&r.p)).fold(T::zero(), T::max);
        match dim {
            2 => Shape::Disk { radius },
            3 => Shape::Ball { radius },
            _ => return Err(parse_err(cuts[0].line, "cut rows on a 1D field")),
        }
    };
    Ok(DomainSpec::new(shape, h))
}

fn vec3_norm<T: Real>(p: &Vec3<T>) -> T {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

fn assemble<T: Real>(grid: Arc<Grid<T>>, rows: &[Row<T>]) -> Result<QField<T>> {
    let h = grid.h();
    let origin = grid.origin();
    let tol = h * lit(1e-6);
    let mut values = vec![None; grid.len()];
    let mut cut_rows = Vec::new();
    for row in rows {
        let Some(class) = row.class else {
            cut_rows.push(row);
            continue;
        };
        let mut ijk = [0i64; 3];
        for a in 0..3 {
            let u = (row.p[a] - origin[a]) / h;
            let r = u.round();
            if (u - r).abs() * h > tol {
                return Err(parse_err(
                    row.line,
                    "coordinates are not on the inferred lattice",
                ));
            }
            ijk[a] = r.to_i64().unwrap_or(-1);
        }
        let i = grid
            .active_at(ijk)
            .ok_or_else(|| parse_err(row.line, "node lies outside the inferred domain"))?;
        if grid.class_of(i) != class {
            return Err(parse_err(
                row.line,
                format!(
                    "node class '{}' disagrees with the domain ('{}')",
                    class.as_str(),
                    grid.class_of(i).as_str()
                ),
            ));
        }
        if values[i].replace(row.q).is_some() {
            return Err(parse_err(row.line, "duplicate node"));
        }
    }
    if let Some(i) = values.iter().position(Option::is_none) {
        return Err(parse_err(
            rows.last().map_or(1, |r| r.line),
            format!("no row for the node at {}", coords(&grid.position(i))),
        ));
    }

    // cut points are matched by position
    let key = |p: &Vec3<T>| -> [i64; 3] {
        let k = |v: T| (v / tol).round().to_i64().unwrap_or(i64::MAX);
        [k(p[0]), k(p[1]), k(p[2])]
    };
    let mut lookup: HashMap<[i64; 3], usize> = HashMap::new();
    for (c, cut) in grid.cuts().iter().enumerate() {
        lookup.insert(key(&cut.position), c);
    }
    let mut cut_values = vec![None; grid.cuts().len()];
    for row in cut_rows {
        let c = nearest_cut(&grid, &lookup, &key, &row.p, tol)
            .ok_or_else(|| parse_err(row.line, "cut row does not match a boundary cut point"))?;
        if cut_values[c].replace(row.q).is_some() {
            return Err(parse_err(row.line, "duplicate cut point"));
        }
    }
    if cut_values.iter().any(Option::is_none) {
        return Err(parse_err(
            rows.last().map_or(1, |r| r.line),
            "missing cut rows",
        ));
    }
    let values = values.into_iter().map(|v| v.expect("checked")).collect();
    let cuts = cut_values
        .into_iter()
        .map(|v| v.expect("checked"))
        .collect();
    Field::from_parts(grid, values, cuts)
}

fn nearest_cut<T: Real>(
    grid: &Grid<T>,
    lookup: &HashMap<[i64; 3], usize>,
    key: &impl Fn(&Vec3<T>) -> [i64; 3],
    p: &Vec3<T>,
    tol: T,
) -> Option<usize> {
    let k = key(p);
    // rounding can land on a neighbouring key
    for dx in -1..=1 {
        for dy in -1..=1 {
            for dz in -1..=1 {
                if let Some(&c) = lookup.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                    let q = grid.cuts()[c].position;
                    let d = vec3_norm(&[q[0] - p[0], q[1] - p[1], q[2] - p[2]]);
                    if d <= tol {
                        return Some(c);
                    }
                }
            }
        }
    }
    None
}

/// Columns `r,s,residual`; the residual is zero at both ends.
pub fn write_profile(profile: &HedgehogProfile<impl Real>, out: &mut impl Write) -> Result<()> {
    let res = profile_residual(profile);
    writeln!(out, "r,s,residual")?;
    for ((r, s), e) in profile.r.iter().zip(&profile.s).zip(&res) {
        writeln!(
            out,
            "{},{},{}",
            format_real(*r),
            format_real(*s),
            format_real(*e)
        )?;
    }
    Ok(())
}

/// Columns `x,y,z,m1..m5,norm` over active nodes.
pub fn write_extra_residual<T: Real>(extra: &ExtraResidual<T>, out: &mut impl Write) -> Result<()> {
    let grid = extra.tensor.grid();
    writeln!(out, "x,y,z,m1,m2,m3,m4,m5,norm")?;
    for i in 0..grid.len() {
        writeln!(
            out,
            "{},{},{}",
            coords(&grid.position(i)),
            coeffs(&extra.tensor.value(i)),
            format_real(extra.norms.value(i))
        )?;
    }
    Ok(())
}

/// Columns `x,y,z,beta,phase` over active nodes.
pub fn write_beta_map<T: Real>(field: &QField<T>, tol: T, out: &mut impl Write) -> Result<()> {
    let grid = field.grid();
    let cls = classify_field(field, tol);
    writeln!(out, "x,y,z,beta,phase")?;
    for i in 0..grid.len() {
        writeln!(
            out,
            "{},{},{}",
            coords(&grid.position(i)),
            format_real(cls.beta.value(i)),
            cls.phases[i].as_str()
        )?;
    }
    Ok(())
}

/// Nodewise spectral decomposition: `x,y,z,s,n1,n2,n3,beta,phase`.
pub fn write_decomposition<T: Real>(field: &QField<T>, tol: T, out: &mut impl Write) -> Result<()> {
    let grid = field.grid();
    writeln!(out, "x,y,z,s,n1,n2,n3,beta,phase")?;
    for i in 0..grid.len() {
        let d = field.value(i).decompose(tol);
        writeln!(
            out,
            "{},{},{},{},{}",
            coords(&grid.position(i)),
            format_real(d.s),
            coords(&d.n),
            format_real(d.beta),
            d.phase.as_str()
        )?;
    }
    Ok(())
}
